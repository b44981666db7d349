//! CSV writers. Trajectories from the Monte Carlo and macroscopic tiers
//! share one schema: `t, rho_1..rho_n, M_1..M_n, m_1..m_n, clamped`.

use std::io::Write;

use crate::error::Result;
use crate::macroscopic::MacroState;
use crate::nanbu::{BandPoint, Trajectory};

fn trajectory_header(n: usize) -> Vec<String> {
    let mut h = vec!["t".to_string()];
    for prefix in ["rho", "M", "m"] {
        h.extend((1..=n).map(|i| format!("{prefix}_{i}")));
    }
    h.push("clamped".into());
    h
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

pub fn write_trajectory<W: Write>(out: W, traj: &Trajectory) -> Result<()> {
    let n = traj.first().map_or(0, |r| r.stats.n_labels());
    let mut w = csv::Writer::from_writer(out);
    w.write_record(trajectory_header(n))?;
    for rec in traj {
        let s = &rec.stats;
        let mut row = vec![rec.t.to_string()];
        row.extend(s.rho.iter().map(|x| x.to_string()));
        row.extend(s.moment.iter().map(|x| x.to_string()));
        row.extend(s.mean.iter().map(|m| opt(*m)));
        row.push(rec.clamped.to_string());
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_macro_trajectory<W: Write>(out: W, traj: &[(f64, MacroState)]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(trajectory_header(2))?;
    for (t, s) in traj {
        let mut row = vec![t.to_string()];
        row.extend(s.rho.iter().map(|x| x.to_string()));
        row.extend(s.moment.iter().map(|x| x.to_string()));
        let mean = s.mean().ok();
        row.extend((0..2).map(|i| opt(mean.map(|m| m[i]))));
        row.push("0".into());
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}

/// `t, label, bin_left, bin_right, density`. Out-of-grid mass is written as
/// one row per side with an infinite bound; its `density` column holds the
/// mass itself.
pub fn write_histograms<W: Write>(out: W, traj: &Trajectory) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "label", "bin_left", "bin_right", "density"])?;
    for rec in traj {
        for (i, h) in rec.stats.histograms.iter().enumerate() {
            let t = rec.t.to_string();
            let label = (i + 1).to_string();
            let lo = h.edges[0];
            let hi = h.edges[h.edges.len() - 1];
            w.write_record([&t, &label, "-inf", &lo.to_string(), &h.underflow.to_string()])?;
            for (d, e) in h.density.iter().zip(h.edges.windows(2)) {
                w.write_record([&t, &label, &e[0].to_string(), &e[1].to_string(), &d.to_string()])?;
            }
            w.write_record([&t, &label, &hi.to_string(), "inf", &h.overflow.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Replica mean and standard deviation: `t, rho_mean_i.., rho_std_i.., m_mean_i.., m_std_i..`.
pub fn write_band<W: Write>(out: W, band: &[BandPoint]) -> Result<()> {
    let n = band.first().map_or(0, |b| b.rho_mean.len());
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["t".to_string()];
    for prefix in ["rho_mean", "rho_std", "m_mean", "m_std"] {
        header.extend((1..=n).map(|i| format!("{prefix}_{i}")));
    }
    w.write_record(header)?;
    for b in band {
        let mut row = vec![b.t.to_string()];
        for col in [&b.rho_mean, &b.rho_std, &b.m_mean, &b.m_std] {
            row.extend(col.iter().map(|x| x.to_string()));
        }
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Monte Carlo minus macroscopic values: `t, drho_i.., dM_i.., dm_i..`.
pub fn write_diff<W: Write>(out: W, times: &[f64], mc: &[[Vec<f64>; 3]], ode: &[MacroState]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["t".to_string()];
    for prefix in ["drho", "dM", "dm"] {
        header.extend((1..=2).map(|i| format!("{prefix}_{i}")));
    }
    w.write_record(header)?;
    for ((t, m), o) in times.iter().zip(mc).zip(ode) {
        let mut row = vec![t.to_string()];
        let om = o.mean().ok();
        for i in 0..2 {
            row.push((m[0][i] - o.rho[i]).to_string());
        }
        for i in 0..2 {
            row.push((m[1][i] - o.moment[i]).to_string());
        }
        for i in 0..2 {
            row.push(opt(om.map(|x| m[2][i] - x[i])));
        }
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}

/// `bin_left, bin_right, f_1, f_2` with cell-averaged densities.
pub fn write_analytic_density<W: Write>(out: W, edges: &[f64], f1: &[f64], alpha: f64) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["bin_left", "bin_right", "f_1", "f_2"])?;
    for (e, f) in edges.windows(2).zip(f1) {
        w.write_record([
            e[0].to_string(),
            e[1].to_string(),
            f.to_string(),
            (alpha * f).to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
