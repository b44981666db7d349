//! Runs a configured experiment and writes its output bundle.
//!
//! Every run directory holds `config.resolved`, `summary.json` and
//! `plot.py`, plus the mode-specific files:
//!
//! | mode      | files                                                               |
//! |-----------|---------------------------------------------------------------------|
//! | `mc`      | `trajectory.csv`, `histograms.csv`, `band.csv` (replicas > 1)        |
//! | `ode`     | `ode_trajectory.csv`                                                 |
//! | `compare` | all of the above plus `diff.csv`                                    |
//! | `qinv`    | `trajectory.csv`, `histograms.csv`, `analytic_density.csv`          |

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use crate::config::{ExperimentConfig, Mode};
use crate::error::{Error, Result};
use crate::fokker_planck::{stationary_cell_masses, stationary_cdf, ParetoParams};
use crate::macroscopic::{
    integrate_rk4, rk4_at_times, stationary_summary, MacroState, StationarySummary, TradeRates,
};
use crate::model::Agent;
use crate::nanbu::{replica_band, HistogramSpec, Simulation, Trajectory};
use crate::output;
use crate::stats::{density_vs_samples_w1, GriddedDensity, WeightedSample};

/// Environment variable naming the default output root.
pub const OUTPUT_ROOT_ENV: &str = "KINSWITCH_OUTPUT_ROOT";

/// `$KINSWITCH_OUTPUT_ROOT`, or `runs` in the working directory.
pub fn default_output_root() -> PathBuf {
    std::env::var_os(OUTPUT_ROOT_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("runs"))
}

/// Masses and first moments of the configured initial law.
pub fn initial_macro_state(cfg: &ExperimentConfig) -> Result<MacroState> {
    let mut rho = [0.0; 2];
    let mut moment = [0.0; 2];
    for g in &cfg.initial {
        if g.label > 2 || g.label == 0 {
            return Err(Error::config("initial", "the macroscopic tier needs labels 1 and 2"));
        }
        rho[g.label - 1] += g.mass;
        moment[g.label - 1] += g.mass * g.wealth.mean();
    }
    MacroState::new(rho, moment)
}

/// Trade rates of the config, with wealth-dependent kernels replaced by
/// their constant surrogate.
pub fn ode_rates(cfg: &ExperimentConfig) -> Result<TradeRates> {
    let spec = cfg.model.build_surrogate()?;
    TradeRates::from_table(&spec.rate_table()?)
}

/// One finished Monte Carlo replica.
#[derive(Debug, Clone)]
pub struct ReplicaRun {
    pub trajectory: Trajectory,
    pub final_agents: Vec<Agent>,
}

/// Runs every replica of the config in parallel.
pub fn run_replicas(cfg: &ExperimentConfig) -> Result<Vec<ReplicaRun>> {
    let spec = cfg.spec()?;
    let step = cfg.step_config();
    let grid = HistogramSpec::Auto(cfg.run.histogram_bins);
    (0..cfg.run.replicas as u64)
        .into_par_iter()
        .map(|r| {
            let mut sim =
                Simulation::from_initial(spec.clone(), step, &cfg.initial, cfg.run.n_agents, r)?;
            let trajectory = sim.run(cfg.run.t_end, cfg.run.record_every, &grid)?;
            Ok(ReplicaRun {
                trajectory,
                final_agents: sim.population().agents().to_vec(),
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FinalStats {
    pub t: f64,
    pub rho: Vec<f64>,
    pub mean: Vec<Option<f64>>,
    pub total_wealth_per_agent: f64,
    pub clamped: u64,
}

/// Largest Monte Carlo / macroscopic gaps over the recorded times.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareReport {
    pub max_abs_rho: [f64; 2],
    pub max_abs_m: [f64; 2],
    /// `max_t |m_mc - m_ode| / m_ode`.
    pub max_rel_m: [f64; 2],
    /// W1 between the normalized final wealth law of each label and a
    /// point mass at the macroscopic mean.
    pub w1_final: [f64; 2],
    /// The macroscopic tier used constant surrogate probabilities.
    pub surrogate_kernel: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QinvReport {
    pub epsilon: f64,
    pub tau_end: f64,
    pub alpha: f64,
    pub gamma: f64,
    pub pareto_index: f64,
    pub mean_wealth: f64,
    pub rho1_inf: f64,
    pub rho1_mc: f64,
    pub w1: f64,
    pub w1_over_mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub name: String,
    pub mode: Mode,
    pub seed: u64,
    pub n_agents: usize,
    pub replicas: usize,
    pub t_end: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub final_stats: Option<FinalStats>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stationary: Option<StationarySummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub compare: Option<CompareReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub qinv: Option<QinvReport>,
}

/// Replica-mean `(rho, M, m)` at every recorded time.
fn replica_means(runs: &[ReplicaRun]) -> Vec<[Vec<f64>; 3]> {
    let len = runs[0].trajectory.len();
    let r = runs.len() as f64;
    (0..len)
        .map(|k| {
            let mut rho = vec![0.0; 2];
            let mut mom = vec![0.0; 2];
            for run in runs {
                let s = &run.trajectory[k].stats;
                for i in 0..2 {
                    rho[i] += s.rho[i] / r;
                    mom[i] += s.moment[i] / r;
                }
            }
            let m = (0..2).map(|i| mom[i] / rho[i]).collect();
            [rho, mom, m]
        })
        .collect()
}

pub fn compare_report(
    runs: &[ReplicaRun],
    ode: &[MacroState],
    surrogate_kernel: bool,
) -> Result<CompareReport> {
    let mc = replica_means(runs);
    let mut rep = CompareReport {
        max_abs_rho: [0.0; 2],
        max_abs_m: [0.0; 2],
        max_rel_m: [0.0; 2],
        w1_final: [0.0; 2],
        surrogate_kernel,
    };
    for (m, o) in mc.iter().zip(ode) {
        let om = o.mean()?;
        for i in 0..2 {
            rep.max_abs_rho[i] = rep.max_abs_rho[i].max((m[0][i] - o.rho[i]).abs());
            let dm = (m[2][i] - om[i]).abs();
            rep.max_abs_m[i] = rep.max_abs_m[i].max(dm);
            rep.max_rel_m[i] = rep.max_rel_m[i].max(dm / om[i]);
        }
    }
    let last = ode.last().ok_or(Error::EmptyPopulation)?.mean()?;
    for i in 0..2 {
        let points: Vec<f64> = runs[0]
            .final_agents
            .iter()
            .filter(|a| a.label.index() == i + 1)
            .map(|a| a.wealth)
            .collect();
        if points.is_empty() {
            return Err(Error::UndefinedMean(i + 1));
        }
        let mc = WeightedSample::uniform(points, 1.0)?;
        let target = WeightedSample::point_mass(last[i], 1.0)?;
        rep.w1_final[i] = crate::stats::wasserstein1(&mc, &target)?;
    }
    Ok(rep)
}

/// Steady-state parameters of a quasi-invariant config with total moment
/// `moment_bar` and unit total mass.
pub fn pareto_params(cfg: &ExperimentConfig, moment_bar: f64) -> Result<ParetoParams> {
    let rates = ode_rates(cfg)?;
    let alpha = crate::macroscopic::stationary_alpha(&rates)?;
    let zeta = cfg
        .model
        .uniform_zeta()
        .ok_or_else(|| Error::config("model.zeta", "needs one shared zeta"))?;
    Ok(ParetoParams {
        alpha,
        omega1: cfg.model.omega[0],
        omega2: cfg.model.omega[1],
        zeta,
        rho_bar: 1.0,
        moment_bar,
    })
}

/// Cell grid carrying the label-1 steady law: `cells` uniform cells up to
/// the point where at most `1e-9` of the mass lies beyond (capped at
/// `1e4` mean wealths, the remainder going to the last cell).
pub fn analytic_grid(params: &ParetoParams, cells: usize) -> Result<GriddedDensity> {
    let m = params.mean_wealth();
    let mut upper = 10.0 * m;
    while stationary_cdf(upper, params)? < 1.0 - 1e-9 && upper < 1e4 * m {
        upper *= 2.0;
    }
    let h = upper / cells as f64;
    let mut edges: Vec<f64> = (0..cells).map(|k| k as f64 * h).collect();
    edges.push(upper);
    let masses = stationary_cell_masses(&edges, params)?;
    let values = masses.iter().map(|mass| mass / h).collect();
    GriddedDensity::new(edges, values)
}

/// W1 between the label-1 agents, each weighted `rho_1^inf / N_1`, and the
/// analytic label-1 steady state.
pub fn qinv_w1(agents: &[Agent], params: &ParetoParams) -> Result<f64> {
    let points: Vec<f64> = agents
        .iter()
        .filter(|a| a.label.index() == 1)
        .map(|a| a.wealth)
        .collect();
    if points.is_empty() {
        return Err(Error::UndefinedMean(1));
    }
    let samples = WeightedSample::uniform(points, params.label1_mass())?;
    density_vs_samples_w1(&analytic_grid(params, 20_000)?, &samples)
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

/// Runs `cfg` and writes its bundle into `dir` (created if missing).
pub fn run_experiment(cfg: &ExperimentConfig, dir: &Path) -> Result<RunSummary> {
    cfg.validate()?;
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("config.resolved"), cfg.to_toml()?)?;
    let mut summary = RunSummary {
        name: cfg.name.clone(),
        mode: cfg.mode,
        seed: cfg.run.seed,
        n_agents: cfg.run.n_agents,
        replicas: cfg.run.replicas,
        t_end: cfg.run.t_end,
        final_stats: None,
        stationary: None,
        compare: None,
        qinv: None,
    };

    let runs = if cfg.mode == Mode::Ode {
        None
    } else {
        let runs = run_replicas(cfg)?;
        output::write_trajectory(create(dir, "trajectory.csv")?, &runs[0].trajectory)?;
        output::write_histograms(create(dir, "histograms.csv")?, &runs[0].trajectory)?;
        if runs.len() > 1 {
            let traj: Vec<Trajectory> = runs.iter().map(|r| r.trajectory.clone()).collect();
            output::write_band(create(dir, "band.csv")?, &replica_band(&traj)?)?;
        }
        let last = runs[0].trajectory.last().expect("initial record");
        summary.final_stats = Some(FinalStats {
            t: last.t,
            rho: last.stats.rho.clone(),
            mean: last.stats.mean.clone(),
            total_wealth_per_agent: last.stats.moment.iter().sum(),
            clamped: runs.iter().map(|r| r.trajectory.last().map_or(0, |x| x.clamped)).sum(),
        });
        Some(runs)
    };

    if matches!(cfg.mode, Mode::Ode | Mode::Compare) {
        let rates = ode_rates(cfg)?;
        let state0 = initial_macro_state(cfg)?;
        summary.stationary = Some(stationary_summary(&rates, &state0)?);
        let stride = ((cfg.run.record_every / cfg.run.ode_dt).round() as usize).max(1);
        let full = integrate_rk4(&state0, &rates, cfg.run.ode_dt, cfg.run.t_end)?;
        let mut sampled: Vec<(f64, MacroState)> = full.iter().step_by(stride).copied().collect();
        if sampled.last().map(|x| x.0) != full.last().map(|x| x.0) {
            sampled.push(*full.last().expect("initial state"));
        }
        output::write_macro_trajectory(create(dir, "ode_trajectory.csv")?, &sampled)?;

        if let Some(runs) = &runs {
            let times: Vec<f64> = runs[0].trajectory.iter().map(|r| r.t).collect();
            let ode = rk4_at_times(&state0, &rates, cfg.run.ode_dt, &times)?;
            output::write_diff(create(dir, "diff.csv")?, &times, &replica_means(runs), &ode)?;
            summary.compare = Some(compare_report(runs, &ode, !cfg.model.transfer.is_constant())?);
        }
    }

    if cfg.mode == Mode::Qinv {
        let runs = runs.as_ref().expect("qinv runs the Monte Carlo tier");
        let q = cfg.qinv.expect("validated");
        let first = &runs[0].trajectory[0].stats;
        let params = pareto_params(cfg, first.moment.iter().sum())?;
        let grid = analytic_grid(&params, 2_000)?;
        output::write_analytic_density(
            create(dir, "analytic_density.csv")?,
            &grid.edges,
            &grid.values,
            params.alpha,
        )?;
        let w1 = qinv_w1(&runs[0].final_agents, &params)?;
        let last = &runs[0].trajectory.last().expect("records").stats;
        summary.qinv = Some(QinvReport {
            epsilon: q.epsilon,
            tau_end: q.tau(cfg.run.t_end),
            alpha: params.alpha,
            gamma: params.gamma()?,
            pareto_index: params.pareto_index()?,
            mean_wealth: params.mean_wealth(),
            rho1_inf: params.label1_mass(),
            rho1_mc: last.rho[0],
            w1,
            w1_over_mean: w1 / params.mean_wealth(),
        });
    }

    std::fs::write(
        dir.join("summary.json"),
        serde_json::to_string_pretty(&summary).map_err(|e| Error::Io(e.to_string()))?,
    )?;
    std::fs::write(dir.join("plot.py"), PLOT_SCRIPT)?;
    Ok(summary)
}

const PLOT_SCRIPT: &str = r#"#!/usr/bin/env python3
"""Plots whatever CSV files sit next to this script."""
import os
import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import pandas as pd

here = os.path.dirname(os.path.abspath(__file__))


def path(name):
    return os.path.join(here, name)


def trajectories():
    fig, axes = plt.subplots(1, 3, figsize=(15, 4))
    for name, style in (("trajectory.csv", "o"), ("ode_trajectory.csv", "-")):
        if not os.path.exists(path(name)):
            continue
        df = pd.read_csv(path(name))
        for ax, prefix in zip(axes, ("rho", "m", "M")):
            for col in [c for c in df.columns if c.startswith(prefix + "_")]:
                kw = {"markersize": 2} if style == "o" else {}
                ax.plot(df["t"], df[col], style, label=f"{col} ({name.split('.')[0]})", **kw)
            ax.set_xlabel("t")
            ax.set_title(prefix)
            ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(path("trajectories.png"), dpi=120)


def final_histograms():
    if not os.path.exists(path("histograms.csv")):
        return
    df = pd.read_csv(path("histograms.csv"))
    df = df[(df["t"] == df["t"].max()) & (df["bin_left"] != float("-inf")) & (df["bin_right"] != float("inf"))]
    fig, ax = plt.subplots(figsize=(6, 4))
    for label, g in df.groupby("label"):
        ax.step(g["bin_left"], g["density"], where="post", label=f"f_{label} (MC)")
    if os.path.exists(path("analytic_density.csv")):
        a = pd.read_csv(path("analytic_density.csv"))
        mid = 0.5 * (a["bin_left"] + a["bin_right"])
        ax.plot(mid, a["f_1"], "k--", label="f_1 (analytic)")
        ax.plot(mid, a["f_2"], "k:", label="f_2 (analytic)")
        ax.set_xlim(0, g["bin_right"].max())
    ax.set_xlabel("v")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path("histograms.png"), dpi=120)


if __name__ == "__main__":
    trajectories()
    final_histograms()
    sys.exit(0)
"#;
