//! TOML experiment configuration, dotted-key overrides and the built-in
//! presets.
//!
//! A config has a `name`, a `mode` (`mc`, `ode`, `compare` or `qinv`) and
//! the tables `[model]`, `[model.transfer]`, `[[initial]]`, `[run]` and,
//! for `qinv`, `[qinv]`. Overrides address keys with dots; numeric
//! segments index arrays from 0, so `model.lambda.1.1=5` sets the second
//! entry of the second row.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fokker_planck::{QinvVariant, QuasiInvariantConfig};
use crate::model::{
    ExchangeRule, FrequencyMatrix, NoiseLaw, NoiseSpec, TradeModelSpec, TransferKernel,
    TransferTable, WealthDependentKernel, WealthFactor,
};
use crate::nanbu::{ExchangeLaw, InitialGroup, InitialWealth, Pairing, StepConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Monte Carlo only.
    Mc,
    /// Macroscopic equations only.
    Ode,
    /// Both, with per-timestamp differences.
    Compare,
    /// Quasi-invariant Monte Carlo against the analytic steady state.
    Qinv,
}

/// `zeta` is either one number shared by all pairs or a full matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ZetaConfig {
    Scalar(f64),
    Matrix(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TransferConfig {
    /// Labels never change.
    Identity,
    /// Two-label trade support with mixed-pair probabilities.
    Trade { p12_11: f64, p12_22: f64 },
    /// Explicit `[i, j, k, l, p]` entries (1-based); unassigned mass stays.
    Table {
        entries: Vec<(usize, usize, usize, usize, f64)>,
    },
    /// `P_12^11 = to_first * prefactor * [(1 - e^-v) + (1 - e^-w)]`, same
    /// for `P_12^22` with `to_second`.
    ExpSaturating {
        to_first: f64,
        to_second: f64,
        prefactor: f64,
    },
    /// As `exp_saturating` with the factor `e^-v + e^-w`.
    ExpDecaying {
        to_first: f64,
        to_second: f64,
        prefactor: f64,
    },
}

impl TransferConfig {
    pub fn is_constant(&self) -> bool {
        !matches!(
            self,
            TransferConfig::ExpSaturating { .. } | TransferConfig::ExpDecaying { .. }
        )
    }

    fn build(&self, n: usize) -> Result<TransferKernel> {
        let wealth_dependent = |to_first, to_second, prefactor, factor| {
            if n != 2 {
                return Err(Error::InvalidModel(
                    "wealth-dependent kernels need exactly 2 labels".into(),
                ));
            }
            Ok(TransferKernel::WealthDependent(WealthDependentKernel {
                to_first,
                to_second,
                prefactor,
                factor,
            }))
        };
        match self {
            TransferConfig::Identity => Ok(TransferKernel::Constant(TransferTable::identity(n)?)),
            TransferConfig::Trade { p12_11, p12_22 } => {
                if n != 2 {
                    return Err(Error::InvalidModel("trade kernel needs exactly 2 labels".into()));
                }
                Ok(TransferKernel::Constant(TransferTable::trade(*p12_11, *p12_22)?))
            }
            TransferConfig::Table { entries } => {
                let e: Vec<_> = entries.iter().map(|&(i, j, k, l, p)| ((i, j, k, l), p)).collect();
                Ok(TransferKernel::Constant(TransferTable::from_entries(n, &e)?))
            }
            TransferConfig::ExpSaturating {
                to_first,
                to_second,
                prefactor,
            } => wealth_dependent(*to_first, *to_second, *prefactor, WealthFactor::ExpSaturating),
            TransferConfig::ExpDecaying {
                to_first,
                to_second,
                prefactor,
            } => wealth_dependent(*to_first, *to_second, *prefactor, WealthFactor::ExpDecaying),
        }
    }

    /// Constant kernel the macroscopic equations use: wealth-dependent
    /// forms are replaced by their `to_first` / `to_second` probabilities.
    pub fn constant_surrogate(&self) -> TransferConfig {
        match self {
            TransferConfig::ExpSaturating {
                to_first, to_second, ..
            }
            | TransferConfig::ExpDecaying {
                to_first, to_second, ..
            } => TransferConfig::Trade {
                p12_11: *to_first,
                p12_22: *to_second,
            },
            other => other.clone(),
        }
    }
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    pub lambda: Vec<Vec<f64>>,
    pub omega: Vec<f64>,
    pub zeta: ZetaConfig,
    #[serde(default)]
    pub noise: NoiseLaw,
    /// Enforce `zeta sqrt(3) <= 1 - omega`; without it negative wealths
    /// are clamped and counted.
    #[serde(default = "default_true")]
    pub guard: bool,
    pub transfer: TransferConfig,
}

impl ModelConfig {
    pub fn build(&self) -> Result<TradeModelSpec> {
        self.build_with(&self.transfer)
    }

    fn build_with(&self, transfer: &TransferConfig) -> Result<TradeModelSpec> {
        let n = self.lambda.len();
        if let Some(declared) = self.n {
            if declared != n {
                return Err(Error::config(
                    "model.n",
                    format!("declares {declared} labels but lambda is {n}x{n}"),
                ));
            }
        }
        let at = |path: &'static str| move |e: Error| Error::config(path, e.to_string());
        let freq = FrequencyMatrix::new(&self.lambda).map_err(at("model.lambda"))?;
        let zeta = match &self.zeta {
            ZetaConfig::Scalar(z) => vec![vec![*z; n]; n],
            ZetaConfig::Matrix(m) => m.clone(),
        };
        let noise = NoiseSpec { law: self.noise };
        let exchange = if self.guard {
            ExchangeRule::new(self.omega.clone(), &zeta, noise)
        } else {
            ExchangeRule::unguarded(self.omega.clone(), &zeta, noise)
        }
        .map_err(at("model.zeta"))?;
        let kernel = transfer.build(n).map_err(at("model.transfer"))?;
        TradeModelSpec::new(freq, kernel, exchange).map_err(at("model"))
    }

    /// Model with the constant surrogate kernel, for the macroscopic tier.
    pub fn build_surrogate(&self) -> Result<TradeModelSpec> {
        self.build_with(&self.transfer.constant_surrogate())
    }

    pub fn uniform_zeta(&self) -> Option<f64> {
        match &self.zeta {
            ZetaConfig::Scalar(z) => Some(*z),
            ZetaConfig::Matrix(m) => {
                let first = *m.first()?.first()?;
                m.iter().flatten().all(|z| *z == first).then_some(first)
            }
        }
    }
}

fn default_one() -> usize {
    1
}

fn default_ode_dt() -> f64 {
    1e-3
}

fn default_bins() -> usize {
    200
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub n_agents: usize,
    pub dt: f64,
    pub t_end: f64,
    pub record_every: f64,
    #[serde(default = "default_one")]
    pub replicas: usize,
    pub seed: u64,
    #[serde(default)]
    pub pairing: Pairing,
    #[serde(default = "default_ode_dt")]
    pub ode_dt: f64,
    #[serde(default = "default_bins")]
    pub histogram_bins: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub mode: Mode,
    pub model: ModelConfig,
    pub initial: Vec<InitialGroup>,
    pub run: RunConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub qinv: Option<QuasiInvariantConfig>,
}

impl ExperimentConfig {
    /// Parses TOML text, applies `key=value` overrides in order and
    /// checks the result.
    pub fn parse(text: &str, overrides: &[String]) -> Result<Self> {
        let mut table: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| Error::config("<toml>", e.message().to_string()))?;
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        let cfg = from_table(table)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &std::path::Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(path.display().to_string(), e.to_string()))?;
        Self::parse(&text, overrides)
    }

    /// Applies overrides to an already built config.
    pub fn with_overrides(&self, overrides: &[String]) -> Result<Self> {
        Self::parse(&self.to_toml()?, overrides)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::config("<toml>", e.to_string()))
    }

    pub fn spec(&self) -> Result<TradeModelSpec> {
        self.model.build()
    }

    pub fn step_config(&self) -> StepConfig {
        let law = match (self.mode, self.qinv) {
            (Mode::Qinv, Some(q)) => ExchangeLaw::QuasiInvariant(q),
            _ => ExchangeLaw::Binary,
        };
        StepConfig::new(self.run.dt, self.run.seed)
            .with_law(law)
            .with_pairing(self.run.pairing)
    }

    /// Checks everything that can be checked without running.
    pub fn validate(&self) -> Result<()> {
        let spec = self.spec()?;
        let n = spec.n();
        if self.initial.is_empty() {
            return Err(Error::config("initial", "at least one initial group is required"));
        }
        let mut total = 0.0;
        for (k, g) in self.initial.iter().enumerate() {
            if g.label == 0 || g.label > n {
                return Err(Error::config(
                    format!("initial.{k}.label"),
                    format!("label {} outside 1..={n}", g.label),
                ));
            }
            if !(g.mass >= 0.0) {
                return Err(Error::config(format!("initial.{k}.mass"), "must be >= 0"));
            }
            let ok = match g.wealth {
                InitialWealth::Uniform { a, b } => a >= 0.0 && b >= a && b.is_finite(),
                InitialWealth::Point { c } => c >= 0.0 && c.is_finite(),
            };
            if !ok {
                return Err(Error::config(
                    format!("initial.{k}.wealth"),
                    "needs 0 <= a <= b (uniform) or c >= 0 (point)",
                ));
            }
            total += g.mass;
        }
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::config("initial", format!("masses sum to {total}, not 1")));
        }
        let run = &self.run;
        if run.n_agents < 2 {
            return Err(Error::config("run.n_agents", "need at least 2 agents"));
        }
        if run.replicas == 0 {
            return Err(Error::config("run.replicas", "must be >= 1"));
        }
        if !(run.t_end >= 0.0) || !run.t_end.is_finite() {
            return Err(Error::config("run.t_end", "must be finite and >= 0"));
        }
        if !(run.ode_dt > 0.0) {
            return Err(Error::config("run.ode_dt", "must be positive"));
        }
        if run.histogram_bins == 0 {
            return Err(Error::config("run.histogram_bins", "must be >= 1"));
        }
        if !(run.dt > 0.0) || !run.dt.is_finite() {
            return Err(Error::config("run.dt", "must be positive"));
        }
        let limit = spec.frequencies.dt_limit();
        if run.dt > limit {
            return Err(Error::TimeStep { dt: run.dt, limit });
        }
        let stride = (run.record_every / run.dt).round();
        if !(stride >= 1.0) || (stride * run.dt - run.record_every).abs() > 1e-9 * run.record_every {
            return Err(Error::config("run.record_every", "must be a positive multiple of run.dt"));
        }
        match self.mode {
            Mode::Ode if !self.model.transfer.is_constant() => Err(Error::config(
                "model.transfer",
                "mode = \"ode\" needs a constant transfer kernel",
            )),
            Mode::Ode | Mode::Compare if n != 2 => Err(Error::config(
                "model.lambda",
                "the macroscopic equations need exactly 2 labels",
            )),
            Mode::Qinv => {
                let q = self
                    .qinv
                    .ok_or_else(|| Error::config("qinv", "mode = \"qinv\" needs a [qinv] table"))?;
                q.validate().map_err(|e| Error::config("qinv.epsilon", e.to_string()))?;
                if n != 2 || !self.model.transfer.is_constant() {
                    return Err(Error::config(
                        "model.transfer",
                        "mode = \"qinv\" needs a constant two-label kernel",
                    ));
                }
                if self.model.uniform_zeta().is_none() {
                    return Err(Error::config("model.zeta", "mode = \"qinv\" needs one shared zeta"));
                }
                Ok(())
            }
            _ => Ok(()),
        }?;
        if self.mode != Mode::Ode {
            self.model.build_surrogate()?;
        }
        Ok(())
    }
}

fn from_table(table: toml::Table) -> Result<ExperimentConfig> {
    serde_path_to_error::deserialize(toml::Value::Table(table)).map_err(|e| {
        let path = e.path().to_string();
        Error::config(if path == "." { "<root>".into() } else { path }, e.inner().to_string())
    })
}

fn parse_value(raw: &str) -> toml::Value {
    let raw = raw.trim();
    format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

/// Applies one `dotted.key=value` override; missing table keys are created.
pub fn apply_override(table: &mut toml::Table, spec: &str) -> Result<()> {
    let (key, raw) = spec
        .split_once('=')
        .ok_or_else(|| Error::config(spec, "override must look like key=value"))?;
    let key = key.trim();
    let segments: Vec<&str> = key.split('.').collect();
    if segments.iter().any(|s| s.is_empty()) {
        return Err(Error::config(key, "empty key segment"));
    }
    let value = parse_value(raw);
    let mut node: &mut toml::Value = {
        let first = segments[0];
        if segments.len() == 1 {
            table.insert(first.to_string(), value);
            return Ok(());
        }
        table
            .entry(first.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
    };
    for (depth, seg) in segments.iter().enumerate().skip(1) {
        let last = depth + 1 == segments.len();
        let here = segments[..depth].join(".");
        node = match node {
            toml::Value::Table(t) => {
                if last {
                    t.insert(seg.to_string(), value);
                    return Ok(());
                }
                t.entry(seg.to_string())
                    .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            }
            toml::Value::Array(a) => {
                let idx: usize = seg
                    .parse()
                    .map_err(|_| Error::config(key, format!("`{here}` is an array; `{seg}` is not an index")))?;
                let len = a.len();
                let slot = a
                    .get_mut(idx)
                    .ok_or_else(|| Error::config(key, format!("index {idx} out of range for `{here}` (len {len})")))?;
                if last {
                    *slot = value;
                    return Ok(());
                }
                slot
            }
            _ => return Err(Error::config(key, format!("`{here}` is not a table or array"))),
        };
    }
    unreachable!("loop returns on the last segment")
}

pub const PRESETS: [&str; 7] = ["test1a", "test1b", "test2i", "test2ii", "test2iii", "test3", "qinv"];

fn group(label: usize, mass: f64, wealth: InitialWealth) -> InitialGroup {
    InitialGroup { label, mass, wealth }
}

fn poor_rich(swap: bool) -> Vec<InitialGroup> {
    let poor = InitialWealth::Uniform { a: 0.0, b: 1.0 };
    let rich = InitialWealth::Uniform { a: 5.0, b: 15.0 };
    let (w1, w2) = if swap { (rich, poor) } else { (poor, rich) };
    vec![group(1, 0.9, w1), group(2, 0.1, w2)]
}

fn base(name: &str, lambda: [[f64; 2]; 2], transfer: TransferConfig, t_end: f64) -> ExperimentConfig {
    ExperimentConfig {
        name: name.to_string(),
        mode: Mode::Compare,
        model: ModelConfig {
            n: Some(2),
            lambda: lambda.iter().map(|r| r.to_vec()).collect(),
            omega: vec![0.5, 0.5],
            zeta: ZetaConfig::Scalar(0.1),
            noise: NoiseLaw::Uniform,
            guard: true,
            transfer,
        },
        initial: poor_rich(false),
        run: RunConfig {
            n_agents: 1_000_000,
            dt: 1e-2,
            t_end,
            record_every: 0.1,
            replicas: 1,
            seed: 20_240_601,
            pairing: Pairing::Thinned,
            ode_dt: 1e-3,
            histogram_bins: 200,
        },
        qinv: None,
    }
}

/// Built-in parameterizations of the reference experiments.
pub fn preset(name: &str) -> Result<ExperimentConfig> {
    let trade = |a, b| TransferConfig::Trade { p12_11: a, p12_22: b };
    let test1 = [[1.0, 1.0], [1.0, 10.0]];
    let test2 = [[1.0, 10.0], [10.0, 1.0]];
    let cfg = match name {
        "test1a" => base(name, test1, trade(0.5, 0.5), 20.0),
        "test1b" => ExperimentConfig {
            initial: poor_rich(true),
            ..base(name, test1, trade(0.5, 0.5), 20.0)
        },
        "test2i" => base(name, test2, trade(0.5, 0.5), 10.0),
        "test2ii" => base(name, test2, trade(0.2, 0.8), 10.0),
        "test2iii" => base(name, test2, trade(0.8, 0.2), 10.0),
        "test3" => base(
            name,
            [[1.0, 10.0], [10.0, 0.1]],
            TransferConfig::ExpSaturating {
                to_first: 0.2,
                to_second: 0.8,
                prefactor: 0.5,
            },
            50.0,
        ),
        "qinv" => {
            let mut cfg = base(name, [[1.2, 1.0], [1.0, 0.8]], trade(0.4, 0.6), 1e4);
            cfg.mode = Mode::Qinv;
            cfg.model.zeta = ZetaConfig::Scalar(0.25);
            cfg.run.dt = 1e-3;
            cfg.run.record_every = 500.0;
            cfg.qinv = Some(QuasiInvariantConfig {
                epsilon: 1e-3,
                variant: QinvVariant::Nonconservative,
                time_scaling: true,
            });
            cfg
        }
        _ => {
            return Err(Error::UnknownPreset {
                name: name.to_string(),
                valid: PRESETS.join(", "),
            })
        }
    };
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::macroscopic::{stationary_alpha, TradeRates};

    #[test]
    fn presets_are_valid_and_round_trip() {
        for name in PRESETS {
            let cfg = preset(name).unwrap();
            cfg.validate().unwrap();
            let text = cfg.to_toml().unwrap();
            let back = ExperimentConfig::parse(&text, &[]).unwrap();
            assert_eq!(back, cfg, "{name}");
            assert_eq!(back.to_toml().unwrap(), text);
        }
    }

    #[test]
    fn unknown_preset_lists_valid_names() {
        let err = preset("test4").unwrap_err();
        assert!(err.to_string().contains("test2iii"));
    }

    #[test]
    fn test1b_swaps_supports() {
        let a = preset("test1a").unwrap();
        let b = preset("test1b").unwrap();
        assert_eq!(a.initial[0].wealth, b.initial[1].wealth);
        assert_eq!(a.initial[1].wealth, b.initial[0].wealth);
        assert_eq!(a.initial[0].mass, b.initial[0].mass);
    }

    #[test]
    fn test2i_has_unit_alpha() {
        let spec = preset("test2i").unwrap().spec().unwrap();
        let rates = TradeRates::from_table(&spec.rate_table().unwrap()).unwrap();
        assert_eq!(stationary_alpha(&rates).unwrap(), 1.0);
    }

    #[test]
    fn test3_installs_saturating_kernel() {
        let cfg = preset("test3").unwrap();
        let spec = cfg.spec().unwrap();
        let l = |i| crate::model::Label::new(i, 2).unwrap();
        let (v, w) = (0.7, 2.0);
        let factor = 0.5 * ((1.0 - f64::exp(-v)) + (1.0 - f64::exp(-w)));
        let p11 = spec.transfers.probability(l(1), l(2), l(1), l(1), v, w);
        let p22 = spec.transfers.probability(l(1), l(2), l(2), l(2), v, w);
        assert!((p11 - 0.2 * factor).abs() < 1e-15);
        assert!((p22 - 0.8 * factor).abs() < 1e-15);
    }

    #[test]
    fn overrides_reach_nested_keys() {
        let base = preset("test1a").unwrap();
        let cfg = base
            .with_overrides(&[
                "run.seed=7".into(),
                "model.lambda.1.1=5".into(),
                "initial.0.wealth.b=2".into(),
                "model.transfer.p12_11=0.3".into(),
                "name=custom".into(),
            ])
            .unwrap();
        assert_eq!(cfg.run.seed, 7);
        assert_eq!(cfg.model.lambda[1][1], 5.0);
        assert_eq!(cfg.initial[0].wealth, InitialWealth::Uniform { a: 0.0, b: 2.0 });
        assert_eq!(cfg.name, "custom");
        assert_eq!(
            cfg.model.transfer,
            TransferConfig::Trade {
                p12_11: 0.3,
                p12_22: 0.5
            }
        );
    }

    #[test]
    fn errors_name_the_key() {
        let base = preset("test1a").unwrap();
        let err = base.with_overrides(&["run.dt=\"fast\"".into()]).unwrap_err();
        match err {
            Error::Config { path, .. } => assert_eq!(path, "run.dt"),
            other => panic!("{other:?}"),
        }
        let err = base.with_overrides(&["model.omega.0=1.5".into()]).unwrap_err();
        assert!(matches!(err, Error::Config { ref path, .. } if path == "model.zeta"));
        let err = base.with_overrides(&["model.lambda.7.0=1".into()]).unwrap_err();
        assert!(matches!(err, Error::Config { .. }));
        let err = base.with_overrides(&["run.colour=1".into()]).unwrap_err();
        assert!(matches!(err, Error::Config { .. }));
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn dt_bound_is_a_runtime_constraint() {
        let err = preset("test1a")
            .unwrap()
            .with_overrides(&["run.dt=0.2".into(), "run.record_every=0.2".into()])
            .unwrap_err();
        assert!(matches!(err, Error::TimeStep { .. }));
        assert_eq!(err.exit_code(), 3);
    }

    #[test]
    fn ode_mode_rejects_wealth_dependent_kernels() {
        let err = preset("test3")
            .unwrap()
            .with_overrides(&["mode=ode".into()])
            .unwrap_err();
        assert!(matches!(err, Error::Config { ref path, .. } if path == "model.transfer"));
        let ok = preset("test1a").unwrap().with_overrides(&["mode=ode".into()]);
        assert!(ok.is_ok());
    }

    #[test]
    fn test3_body_text_variant_is_reachable() {
        let cfg = preset("test3")
            .unwrap()
            .with_overrides(&[
                "model.lambda.0.0=0.1".into(),
                "model.lambda.1.1=1".into(),
                "model.transfer.prefactor=0.25".into(),
            ])
            .unwrap();
        assert_eq!(cfg.model.lambda, vec![vec![0.1, 10.0], vec![10.0, 1.0]]);
    }

    #[test]
    fn hand_written_config_parses() {
        let text = r#"
name = "table-demo"
mode = "mc"

[model]
lambda = [[1, 2], [2, 1]]
omega = [0.3, 0.4]
zeta = [[0.1, 0.2], [0.2, 0.1]]

[model.transfer]
kind = "table"
entries = [[1, 2, 2, 2, 0.5], [2, 1, 1, 1, 0.25]]

[[initial]]
label = 1
mass = 0.5
wealth = { law = "point", c = 1.0 }

[[initial]]
label = 2
mass = 0.5
wealth = { law = "uniform", a = 0.0, b = 2.0 }

[run]
n_agents = 100
dt = 0.1
t_end = 1.0
record_every = 0.5
seed = 3
"#;
        let cfg = ExperimentConfig::parse(text, &[]).unwrap();
        assert_eq!(cfg.run.replicas, 1);
        assert_eq!(cfg.run.pairing, Pairing::Thinned);
        let spec = cfg.spec().unwrap();
        match &spec.transfers {
            TransferKernel::Constant(t) => {
                assert_eq!(t.get(1, 2, 2, 2), 0.5);
                assert_eq!(t.get(1, 2, 1, 2), 0.5);
                assert_eq!(t.get(2, 1, 2, 1), 0.75);
            }
            _ => panic!("expected a constant kernel"),
        }
    }
}
