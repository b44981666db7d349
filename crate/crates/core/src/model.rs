//! Model vocabulary: labels, agents, interaction frequencies, transfer
//! kernels and the affine exchange rule with multiplicative noise.
//!
//! Indices exposed through the public API are 1-based, matching the usual
//! way subgroup labels are written. Internally everything is stored in
//! row-major arrays addressed by 0-based slots.

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Maximum tolerated deviation of `sum_{k,l} P_ij^kl` from one.
pub const NORMALIZATION_TOL: f64 = 1e-12;

/// Subgroup label, 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Label(u16);

impl Label {
    pub fn new(index: usize, n: usize) -> Result<Self> {
        if index == 0 || index > n || n > u16::MAX as usize {
            return Err(Error::InvalidLabel { index, n });
        }
        Ok(Label(index as u16))
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    #[inline]
    pub(crate) fn slot(self) -> usize {
        self.0 as usize - 1
    }

    #[inline]
    pub(crate) fn from_slot(slot: usize) -> Self {
        Label(slot as u16 + 1)
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// One individual: a label and a non-negative wealth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Agent {
    pub label: Label,
    pub wealth: f64,
}

impl Agent {
    pub fn new(label: Label, wealth: f64) -> Result<Self> {
        if !(wealth >= 0.0) || !wealth.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "agent wealth must be finite and non-negative, got {wealth}"
            )));
        }
        Ok(Agent { label, wealth })
    }
}

/// Symmetric matrix of positive interaction frequencies `lambda_ij`.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyMatrix {
    n: usize,
    values: Vec<f64>,
}

impl FrequencyMatrix {
    pub fn new(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::InvalidModel("frequency matrix is empty".into()));
        }
        let mut values = Vec::with_capacity(n * n);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::InvalidModel(format!(
                    "frequency matrix row {} has {} entries, expected {n}",
                    i + 1,
                    row.len()
                )));
            }
            for (j, &lam) in row.iter().enumerate() {
                if !(lam > 0.0) || !lam.is_finite() {
                    return Err(Error::InvalidModel(format!(
                        "lambda_{}{} = {lam} must be positive and finite",
                        i + 1,
                        j + 1
                    )));
                }
                values.push(lam);
            }
        }
        for i in 0..n {
            for j in 0..i {
                if values[i * n + j] != values[j * n + i] {
                    return Err(Error::InvalidModel(format!(
                        "frequency matrix is not symmetric: lambda_{}{} != lambda_{}{}",
                        i + 1,
                        j + 1,
                        j + 1,
                        i + 1
                    )));
                }
            }
        }
        Ok(FrequencyMatrix { n, values })
    }

    pub fn uniform(n: usize, lambda: f64) -> Result<Self> {
        FrequencyMatrix::new(&vec![vec![lambda; n]; n])
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn rate(&self, x: Label, y: Label) -> f64 {
        self.values[x.slot() * self.n + y.slot()]
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::MIN, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::MAX, f64::min)
    }

    /// Largest time step for which `lambda_ij * dt <= 1` for every pair.
    pub fn dt_limit(&self) -> f64 {
        1.0 / self.max()
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.values.chunks(self.n).map(|r| r.to_vec()).collect()
    }
}

/// Law of the exchange noise `eta`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseLaw {
    /// Uniform on `[-sqrt(3), sqrt(3)]`: zero mean, unit variance.
    #[default]
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct NoiseSpec {
    pub law: NoiseLaw,
}

impl NoiseSpec {
    pub fn uniform() -> Self {
        NoiseSpec {
            law: NoiseLaw::Uniform,
        }
    }

    /// Every sample lies in `[-bound, bound]`.
    pub fn support_bound(&self) -> f64 {
        match self.law {
            NoiseLaw::Uniform => 3f64.sqrt(),
        }
    }

    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self.law {
            NoiseLaw::Uniform => {
                let u: f64 = rng.random();
                (2.0 * u - 1.0) * 3f64.sqrt()
            }
        }
    }
}

/// Linear exchange rule `v' = (1 - omega_x) v + omega_y w + zeta_xy v eta`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExchangeRule {
    n: usize,
    omega: Vec<f64>,
    zeta: Vec<f64>,
    noise: NoiseSpec,
    guarded: bool,
}

impl ExchangeRule {
    /// Builds a rule and enforces the positivity guard
    /// `zeta_xy * bound <= 1 - omega_x` for every pair.
    pub fn new(omega: Vec<f64>, zeta: &[Vec<f64>], noise: NoiseSpec) -> Result<Self> {
        let rule = Self::unguarded(omega, zeta, noise)?;
        let bound = noise.support_bound();
        for x in 0..rule.n {
            for y in 0..rule.n {
                let lhs = rule.zeta[x * rule.n + y] * bound;
                let rhs = 1.0 - rule.omega[x];
                if lhs > rhs {
                    return Err(Error::PositivityGuard {
                        x: x + 1,
                        y: y + 1,
                        lhs,
                        rhs,
                    });
                }
            }
        }
        Ok(ExchangeRule {
            guarded: true,
            ..rule
        })
    }

    /// Same as [`ExchangeRule::new`] with one `zeta` shared by every pair.
    pub fn with_uniform_zeta(omega: Vec<f64>, zeta: f64, noise: NoiseSpec) -> Result<Self> {
        let n = omega.len();
        Self::new(omega, &vec![vec![zeta; n]; n], noise)
    }

    /// Builds a rule without the positivity guard. Negative post-states are
    /// then possible and get clamped by the Monte Carlo stepper.
    pub fn unguarded(omega: Vec<f64>, zeta: &[Vec<f64>], noise: NoiseSpec) -> Result<Self> {
        let n = omega.len();
        if n == 0 {
            return Err(Error::InvalidModel("omega is empty".into()));
        }
        if let Some((i, w)) = omega
            .iter()
            .enumerate()
            .find(|(_, w)| !(0.0..=1.0).contains(*w))
        {
            return Err(Error::InvalidModel(format!(
                "omega_{} = {w} outside [0, 1]",
                i + 1
            )));
        }
        if zeta.len() != n || zeta.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidModel(format!("zeta must be {n}x{n}")));
        }
        let flat: Vec<f64> = zeta.iter().flatten().copied().collect();
        if flat.iter().any(|z| !(*z >= 0.0) || !z.is_finite()) {
            return Err(Error::InvalidModel("zeta entries must be >= 0".into()));
        }
        for i in 0..n {
            for j in 0..i {
                if flat[i * n + j] != flat[j * n + i] {
                    return Err(Error::InvalidModel(format!(
                        "zeta is not symmetric at ({}, {})",
                        i + 1,
                        j + 1
                    )));
                }
            }
        }
        Ok(ExchangeRule {
            n,
            omega,
            zeta: flat,
            noise,
            guarded: false,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn is_guarded(&self) -> bool {
        self.guarded
    }

    pub fn noise(&self) -> &NoiseSpec {
        &self.noise
    }

    #[inline]
    pub fn omega(&self, x: Label) -> f64 {
        self.omega[x.slot()]
    }

    #[inline]
    pub fn zeta(&self, x: Label, y: Label) -> f64 {
        self.zeta[x.slot() * self.n + y.slot()]
    }

    /// Deterministic part `I_xy(v, w)`.
    #[inline]
    pub fn interaction_mean(&self, x: Label, y: Label, v: f64, w: f64) -> f64 {
        (1.0 - self.omega(x)) * v + self.omega(y) * w
    }

    /// Fluctuation amplitude `D_xy(v) = zeta_xy v`.
    #[inline]
    pub fn fluctuation(&self, x: Label, y: Label, v: f64) -> f64 {
        self.zeta(x, y) * v
    }

    pub fn omegas(&self) -> &[f64] {
        &self.omega
    }

    pub fn zeta_rows(&self) -> Vec<Vec<f64>> {
        self.zeta.chunks(self.n).map(|r| r.to_vec()).collect()
    }
}

/// Post-interaction wealths of a pair under the linear exchange rule.
#[inline]
pub fn exchange_post_states(
    x: Label,
    y: Label,
    v: f64,
    w: f64,
    eta: f64,
    eta_star: f64,
    rule: &ExchangeRule,
) -> (f64, f64) {
    let zeta = rule.zeta(x, y);
    let v_post = (1.0 - rule.omega(x)) * v + rule.omega(y) * w + zeta * v * eta;
    let w_post = (1.0 - rule.omega(y)) * w + rule.omega(x) * v + zeta * w * eta_star;
    (v_post, w_post)
}

/// Wealth factor of the named wealth-dependent switching forms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WealthFactor {
    /// `(1 - e^-v) + (1 - e^-w)`: switching grows with wealth.
    ExpSaturating,
    /// `e^-v + e^-w`: switching fades with wealth.
    ExpDecaying,
}

impl WealthFactor {
    #[inline]
    pub fn eval(self, v: f64, w: f64) -> f64 {
        match self {
            WealthFactor::ExpSaturating => -(-v).exp_m1() - (-w).exp_m1(),
            WealthFactor::ExpDecaying => (-v).exp() + (-w).exp(),
        }
    }
}

/// Constant switching probabilities `P_ij^kl`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferTable {
    n: usize,
    p: Vec<f64>,
}

impl TransferTable {
    /// Builds a table from explicit `((i, j, k, l), p)` entries (1-based).
    /// Whatever mass a row `(i, j)` leaves unassigned goes to the stay-event
    /// `(k, l) = (i, j)`.
    pub fn from_entries(n: usize, entries: &[((usize, usize, usize, usize), f64)]) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidModel("label count must be >= 1".into()));
        }
        let mut p = vec![0.0; n * n * n * n];
        let mut explicit_stay = vec![false; n * n];
        for &((i, j, k, l), prob) in entries {
            for idx in [i, j, k, l] {
                Label::new(idx, n)?;
            }
            if !(0.0..=1.0).contains(&prob) {
                return Err(Error::InvalidKernel {
                    i,
                    j,
                    k,
                    l,
                    v: f64::NAN,
                    w: f64::NAN,
                    value: prob,
                });
            }
            let slot = idx4(n, i - 1, j - 1, k - 1, l - 1);
            p[slot] = prob;
            if (i, j) == (k, l) {
                explicit_stay[(i - 1) * n + (j - 1)] = true;
            }
        }
        for i in 0..n {
            for j in 0..n {
                let row = &mut p[(i * n + j) * n * n..(i * n + j + 1) * n * n];
                let total: f64 = row.iter().sum();
                if explicit_stay[i * n + j] {
                    continue;
                }
                let residual = 1.0 - total;
                if residual < -NORMALIZATION_TOL {
                    return Err(Error::InvalidKernel {
                        i: i + 1,
                        j: j + 1,
                        k: i + 1,
                        l: j + 1,
                        v: f64::NAN,
                        w: f64::NAN,
                        value: residual,
                    });
                }
                row[i * n + j] += residual.max(0.0);
            }
        }
        Ok(TransferTable { n, p })
    }

    /// No label ever changes.
    pub fn identity(n: usize) -> Result<Self> {
        Self::from_entries(n, &[])
    }

    /// Two-label trade kernel. Same-label pairs always send one of the two
    /// agents to the other group with equal odds; a mixed pair ends in
    /// group 1 with probability `p12_11` and in group 2 with `p12_22`.
    pub fn trade(p12_11: f64, p12_22: f64) -> Result<Self> {
        Self::from_entries(
            2,
            &[
                ((1, 1, 1, 2), 0.5),
                ((1, 1, 2, 1), 0.5),
                ((2, 2, 1, 2), 0.5),
                ((2, 2, 2, 1), 0.5),
                ((1, 2, 1, 1), p12_11),
                ((1, 2, 2, 2), p12_22),
                ((2, 1, 1, 1), p12_11),
                ((2, 1, 2, 2), p12_22),
            ],
        )
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `P_ij^kl`, 1-based.
    pub fn get(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        self.p[idx4(self.n, i - 1, j - 1, k - 1, l - 1)]
    }

    #[inline]
    fn row(&self, i: usize, j: usize) -> &[f64] {
        let nn = self.n * self.n;
        &self.p[(i * self.n + j) * nn..(i * self.n + j + 1) * nn]
    }
}

#[inline]
fn idx4(n: usize, i: usize, j: usize, k: usize, l: usize) -> usize {
    ((i * n + j) * n + k) * n + l
}

/// Two-label trade kernel whose mixed-pair switching probabilities depend on
/// the wealths: `P_12^11 = to_first * prefactor * factor(v, w)` and
/// `P_12^22 = to_second * prefactor * factor(v, w)`; the residual mass is the
/// stay-event. Same-label pairs behave as in [`TransferTable::trade`].
#[derive(Debug, Clone, PartialEq)]
pub struct WealthDependentKernel {
    pub to_first: f64,
    pub to_second: f64,
    pub prefactor: f64,
    pub factor: WealthFactor,
}

impl WealthDependentKernel {
    #[inline]
    fn mixed(&self, v: f64, w: f64) -> (f64, f64) {
        let f = self.prefactor * self.factor.eval(v, w);
        (self.to_first * f, self.to_second * f)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TransferKernel {
    Constant(TransferTable),
    WealthDependent(WealthDependentKernel),
}

impl TransferKernel {
    pub fn n(&self) -> usize {
        match self {
            TransferKernel::Constant(t) => t.n,
            TransferKernel::WealthDependent(_) => 2,
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, TransferKernel::Constant(_))
    }

    /// Fills `out[k * n + l]` with `P_xy^kl(v, w)`; `out.len()` must be `n^2`.
    #[inline]
    pub fn fill_row(&self, x: Label, y: Label, v: f64, w: f64, out: &mut [f64]) {
        match self {
            TransferKernel::Constant(t) => out.copy_from_slice(t.row(x.slot(), y.slot())),
            TransferKernel::WealthDependent(k) => {
                out.fill(0.0);
                let (i, j) = (x.slot(), y.slot());
                if i == j {
                    // one agent of the pair moves to the other group
                    let other = 1 - i;
                    out[i * 2 + other] = 0.5;
                    out[other * 2 + i] = 0.5;
                } else {
                    let (to1, to2) = k.mixed(v, w);
                    out[0] = to1;
                    out[3] = to2;
                    out[i * 2 + j] = 1.0 - to1 - to2;
                }
            }
        }
    }

    /// `P_xy^kl(v, w)` for 1-based labels.
    pub fn probability(&self, x: Label, y: Label, k: Label, l: Label, v: f64, w: f64) -> f64 {
        let n = self.n();
        let mut row = vec![0.0; n * n];
        self.fill_row(x, y, v, w, &mut row);
        row[k.slot() * n + l.slot()]
    }
}

/// Result of probing a kernel's normalization.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub n: usize,
    /// `max_deviation[(i-1) * n + (j-1)]` = max over probes of `|sum_kl P_ij^kl - 1|`.
    pub max_deviation: Vec<f64>,
    pub probes: usize,
}

impl ValidationReport {
    pub fn deviation(&self, i: usize, j: usize) -> f64 {
        self.max_deviation[(i - 1) * self.n + (j - 1)]
    }

    pub fn worst(&self) -> f64 {
        self.max_deviation.iter().copied().fold(0.0, f64::max)
    }

    pub fn passes(&self) -> bool {
        self.worst() <= NORMALIZATION_TOL
    }
}

/// Checks `sum_{k,l} P_ij^kl(v, w) = 1` and `0 <= P <= 1` at every probe point.
pub fn validate_transfer_kernel(
    kernel: &TransferKernel,
    probe_points: &[(f64, f64)],
) -> Result<ValidationReport> {
    if probe_points.is_empty() {
        return Err(Error::InvalidArgument("no probe points".into()));
    }
    if let Some(&(v, w)) = probe_points.iter().find(|(v, w)| !(*v >= 0.0 && *w >= 0.0)) {
        return Err(Error::InvalidArgument(format!(
            "probe point ({v}, {w}) has negative wealth"
        )));
    }
    let n = kernel.n();
    let mut max_deviation = vec![0.0f64; n * n];
    let mut row = vec![0.0; n * n];
    for &(v, w) in probe_points {
        for i in 0..n {
            for j in 0..n {
                kernel.fill_row(Label::from_slot(i), Label::from_slot(j), v, w, &mut row);
                for (kl, &p) in row.iter().enumerate() {
                    if !(0.0..=1.0).contains(&p) {
                        return Err(Error::InvalidKernel {
                            i: i + 1,
                            j: j + 1,
                            k: kl / n + 1,
                            l: kl % n + 1,
                            v,
                            w,
                            value: p,
                        });
                    }
                }
                let dev = (row.iter().sum::<f64>() - 1.0).abs();
                let slot = &mut max_deviation[i * n + j];
                *slot = slot.max(dev);
            }
        }
    }
    Ok(ValidationReport {
        n,
        max_deviation,
        probes: probe_points.len(),
    })
}

/// Log-spaced wealth grid over `[1e-3, 1e3]`, crossed with itself.
pub fn default_probe_grid(points_per_axis: usize) -> Vec<(f64, f64)> {
    let m = points_per_axis.max(2);
    let axis: Vec<f64> = (0..m)
        .map(|k| 10f64.powf(-3.0 + 6.0 * k as f64 / (m - 1) as f64))
        .collect();
    axis.iter()
        .flat_map(|&v| axis.iter().map(move |&w| (v, w)))
        .collect()
}

/// Transfer rates `beta_ij^kl = lambda_ij P_ij^kl` of a constant kernel.
#[derive(Debug, Clone, PartialEq)]
pub struct RateTable {
    n: usize,
    beta: Vec<f64>,
}

impl RateTable {
    pub fn new(frequencies: &FrequencyMatrix, table: &TransferTable) -> Result<Self> {
        let n = frequencies.n();
        if table.n != n {
            return Err(Error::InvalidModel(format!(
                "transfer table has {} labels, frequency matrix {n}",
                table.n
            )));
        }
        let nn = n * n;
        let beta = table
            .p
            .iter()
            .enumerate()
            .map(|(idx, p)| {
                let ij = idx / nn;
                frequencies.values[ij] * p
            })
            .collect();
        Ok(RateTable { n, beta })
    }

    /// Builds a table from a closure over 1-based `(i, j, k, l)`.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize, usize, usize) -> f64) -> Result<Self> {
        let mut beta = vec![0.0; n * n * n * n];
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        let b = f(i + 1, j + 1, k + 1, l + 1);
                        if !(b >= 0.0) || !b.is_finite() {
                            return Err(Error::DegenerateRates(format!(
                                "beta_{}{}^{}{} = {b}",
                                i + 1,
                                j + 1,
                                k + 1,
                                l + 1
                            )));
                        }
                        beta[idx4(n, i, j, k, l)] = b;
                    }
                }
            }
        }
        Ok(RateTable { n, beta })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `beta_ij^kl`, 1-based.
    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        self.beta[idx4(self.n, i - 1, j - 1, k - 1, l - 1)]
    }

    #[inline]
    pub(crate) fn at(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        self.beta[idx4(self.n, i, j, k, l)]
    }

    /// The symmetry the two-label trade equations rely on:
    /// `beta_ii^12 = beta_ii^21` and `beta_12^ii = beta_21^ii`.
    pub fn is_trade_symmetric(&self) -> bool {
        if self.n != 2 {
            return false;
        }
        (1..=2).all(|i| {
            self.get(i, i, 1, 2) == self.get(i, i, 2, 1)
                && self.get(1, 2, i, i) == self.get(2, 1, i, i)
        })
    }
}

/// Full model: frequencies, transfer kernel and exchange rule.
#[derive(Debug, Clone, PartialEq)]
pub struct TradeModelSpec {
    pub frequencies: FrequencyMatrix,
    pub transfers: TransferKernel,
    pub exchange: ExchangeRule,
}

impl TradeModelSpec {
    pub fn new(
        frequencies: FrequencyMatrix,
        transfers: TransferKernel,
        exchange: ExchangeRule,
    ) -> Result<Self> {
        let n = frequencies.n();
        if transfers.n() != n || exchange.n() != n {
            return Err(Error::InvalidModel(format!(
                "label counts disagree: lambda {n}, transfers {}, exchange {}",
                transfers.n(),
                exchange.n()
            )));
        }
        let report = validate_transfer_kernel(&transfers, &default_probe_grid(25))?;
        if !report.passes() {
            return Err(Error::InvalidModel(format!(
                "transfer kernel not normalized (max deviation {:e})",
                report.worst()
            )));
        }
        Ok(TradeModelSpec {
            frequencies,
            transfers,
            exchange,
        })
    }

    pub fn n(&self) -> usize {
        self.frequencies.n()
    }

    /// Rates of a constant kernel; wealth-dependent kernels have none.
    pub fn rate_table(&self) -> Result<RateTable> {
        match &self.transfers {
            TransferKernel::Constant(t) => RateTable::new(&self.frequencies, t),
            TransferKernel::WealthDependent(_) => Err(Error::InvalidModel(
                "wealth-dependent transfer kernels have no constant rate table".into(),
            )),
        }
    }
}

#[inline]
pub(crate) fn sample_delta<R: Rng + ?Sized>(
    rule: &ExchangeRule,
    x: Label,
    y: Label,
    v: f64,
    w: f64,
    rng: &mut R,
) -> f64 {
    let eta = rule.noise().sample(rng);
    rule.interaction_mean(x, y, v, w) + rule.fluctuation(x, y, v) * eta
}

#[inline]
pub(crate) fn sample_rescaled<R: Rng + ?Sized>(
    rule: &ExchangeRule,
    epsilon: f64,
    x: Label,
    y: Label,
    v: f64,
    w: f64,
    rng: &mut R,
) -> f64 {
    let u: f64 = rng.random();
    if u < epsilon {
        sample_delta(rule, x, y, v, w, rng)
    } else {
        v
    }
}

/// Law of one agent's post-interaction wealth given both pre-states.
#[derive(Debug, Clone, PartialEq)]
pub enum TransitionKernel {
    /// `T(v'|v, w) = delta(v' - v)`.
    NoChange,
    /// `T(v'|v, w) = delta(v' - (I + D eta))`, averaged over `eta`.
    Delta(ExchangeRule),
    /// `T_eps = (1 - eps) delta(v' - v) + eps T_delta`.
    Rescaled { base: ExchangeRule, epsilon: f64 },
}

/// First two moments of a transition kernel at a fixed pre-state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransitionMoments {
    pub mean: f64,
    pub energy: f64,
    pub std_dev: f64,
}

impl TransitionMoments {
    fn from_mean_energy(mean: f64, energy: f64, tol: f64) -> Result<Self> {
        let var = energy - mean * mean;
        if var < -tol {
            return Err(Error::InconsistentKernel(var));
        }
        Ok(TransitionMoments {
            mean,
            energy,
            std_dev: var.max(0.0).sqrt(),
        })
    }
}

impl TransitionKernel {
    /// Samples the post-state of the agent holding `v` (label `x`) after
    /// meeting `w` (label `y`).
    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, x: Label, y: Label, v: f64, w: f64, rng: &mut R) -> f64 {
        match self {
            TransitionKernel::NoChange => v,
            TransitionKernel::Delta(rule) => sample_delta(rule, x, y, v, w, rng),
            TransitionKernel::Rescaled { base, epsilon } => {
                sample_rescaled(base, *epsilon, x, y, v, w, rng)
            }
        }
    }

    /// Closed-form `(V_T, E_T, D_T)`.
    pub fn exact_moments(&self, x: Label, y: Label, v: f64, w: f64) -> TransitionMoments {
        match self {
            TransitionKernel::NoChange => TransitionMoments {
                mean: v,
                energy: v * v,
                std_dev: 0.0,
            },
            TransitionKernel::Delta(rule) => {
                let i = rule.interaction_mean(x, y, v, w);
                let d = rule.fluctuation(x, y, v);
                TransitionMoments {
                    mean: i,
                    energy: i * i + d * d,
                    std_dev: d,
                }
            }
            TransitionKernel::Rescaled { base, epsilon } => {
                let eps = *epsilon;
                let drift = base.interaction_mean(x, y, v, w) - v;
                let d = base.fluctuation(x, y, v);
                let mean = v + eps * drift;
                let var = eps * (1.0 - eps) * drift * drift + eps * d * d;
                TransitionMoments {
                    mean,
                    energy: var + mean * mean,
                    std_dev: var.sqrt(),
                }
            }
        }
    }
}

/// Monte Carlo estimate of `(V_T, E_T, D_T)` from `sample_count` draws.
pub fn transition_moments<R: Rng + ?Sized>(
    kernel: &TransitionKernel,
    x: Label,
    y: Label,
    v: f64,
    w: f64,
    sample_count: usize,
    rng: &mut R,
) -> Result<TransitionMoments> {
    if sample_count < 10_000 {
        return Err(Error::InvalidArgument(format!(
            "sample_count {sample_count} below 10^4"
        )));
    }
    let (mut s1, mut s2) = (0.0, 0.0);
    for _ in 0..sample_count {
        let z = kernel.sample(x, y, v, w, rng);
        s1 += z;
        s2 += z * z;
    }
    let n = sample_count as f64;
    let mean = s1 / n;
    let energy = s2 / n;
    TransitionMoments::from_mean_energy(mean, energy, 1e-12 * energy.abs().max(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn l(i: usize) -> Label {
        Label::new(i, 2).unwrap()
    }

    fn half_rule(zeta: f64) -> ExchangeRule {
        ExchangeRule::with_uniform_zeta(vec![0.5, 0.5], zeta, NoiseSpec::uniform()).unwrap()
    }

    #[test]
    fn label_range() {
        assert!(Label::new(0, 2).is_err());
        assert!(Label::new(3, 2).is_err());
        assert_eq!(Label::new(2, 2).unwrap().index(), 2);
    }

    #[test]
    fn frequency_matrix_rejects_asymmetric_and_nonpositive() {
        assert!(FrequencyMatrix::new(&[vec![1.0, 2.0], vec![1.0, 1.0]]).is_err());
        assert!(FrequencyMatrix::new(&[vec![1.0, 0.0], vec![0.0, 1.0]]).is_err());
        let f = FrequencyMatrix::new(&[vec![1.0, 1.0], vec![1.0, 10.0]]).unwrap();
        assert_eq!(f.max(), 10.0);
        assert_eq!(f.dt_limit(), 0.1);
    }

    #[test]
    fn test1_kernel_is_normalized() {
        let k = TransferKernel::Constant(TransferTable::trade(0.5, 0.5).unwrap());
        let report = validate_transfer_kernel(&k, &default_probe_grid(10)).unwrap();
        assert!(report.passes());
        assert_eq!(k.probability(l(1), l(1), l(1), l(2), 0.0, 0.0), 0.5);
        assert_eq!(k.probability(l(1), l(2), l(2), l(2), 0.0, 0.0), 0.5);
        assert_eq!(k.probability(l(2), l(2), l(2), l(2), 0.0, 0.0), 0.0);
    }

    #[test]
    fn identity_kernel_is_normalized() {
        let k = TransferKernel::Constant(TransferTable::identity(3).unwrap());
        assert!(validate_transfer_kernel(&k, &[(1.0, 1.0)]).unwrap().passes());
        let t = TransferTable::identity(3).unwrap();
        assert_eq!(t.get(2, 3, 2, 3), 1.0);
    }

    #[test]
    fn wealth_dependent_kernel_residual_goes_to_stay() {
        let k = TransferKernel::WealthDependent(WealthDependentKernel {
            to_first: 0.2,
            to_second: 0.8,
            prefactor: 0.5,
            factor: WealthFactor::ExpSaturating,
        });
        let probes = [(0.0, 0.0), (1.0, 1.0), (5.0, 15.0)];
        let report = validate_transfer_kernel(&k, &probes).unwrap();
        assert!(report.passes());
        for &(v, w) in &probes {
            let f = 0.5 * ((1.0 - (-v).exp()) + (1.0 - (-w).exp()));
            let stay = 1.0 - 0.2 * f - 0.8 * f;
            let got = k.probability(l(1), l(2), l(1), l(2), v, w);
            assert!((got - stay).abs() < 1e-15, "{got} vs {stay}");
        }
        assert_eq!(k.probability(l(1), l(2), l(1), l(2), 0.0, 0.0), 1.0);
    }

    #[test]
    fn negative_entry_is_named() {
        let k = TransferKernel::WealthDependent(WealthDependentKernel {
            to_first: -0.2,
            to_second: 0.8,
            prefactor: 0.5,
            factor: WealthFactor::ExpDecaying,
        });
        match validate_transfer_kernel(&k, &[(1.0, 2.0)]) {
            Err(Error::InvalidKernel { i, j, k, l, v, w, .. }) => {
                assert_eq!((i, j, k, l), (1, 2, 1, 1));
                assert_eq!((v, w), (1.0, 2.0));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn overfull_table_is_rejected() {
        assert!(TransferTable::trade(0.7, 0.7).is_err());
    }

    #[test]
    fn validation_preconditions() {
        let k = TransferKernel::Constant(TransferTable::identity(2).unwrap());
        assert!(validate_transfer_kernel(&k, &[]).is_err());
        assert!(validate_transfer_kernel(&k, &[(-1.0, 0.0)]).is_err());
    }

    #[test]
    fn exchange_examples() {
        let rule = half_rule(0.0);
        assert_eq!(exchange_post_states(l(1), l(2), 1.0, 3.0, 0.0, 0.0, &rule), (2.0, 2.0));
        assert_eq!(exchange_post_states(l(1), l(1), 2.5, 2.5, 0.0, 0.0, &rule), (2.5, 2.5));

        let rule = half_rule(0.1);
        let (v, w) = exchange_post_states(l(1), l(2), 2.0, 4.0, 1.0, 0.0, &rule);
        assert!((v - 3.2).abs() < 1e-15);
        assert!((w - 3.0).abs() < 1e-15);
    }

    #[test]
    fn positivity_guard_enforced() {
        // sqrt(3) * 0.3 > 0.5
        let err = ExchangeRule::with_uniform_zeta(vec![0.5, 0.5], 0.3, NoiseSpec::uniform());
        assert!(matches!(err, Err(Error::PositivityGuard { .. })));
        let ok = ExchangeRule::unguarded(vec![0.5, 0.5], &[vec![0.3; 2], vec![0.3; 2]], NoiseSpec::uniform());
        assert!(!ok.unwrap().is_guarded());
    }

    #[test]
    fn noise_moments() {
        let noise = NoiseSpec::uniform();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 1_000_000;
        let (mut s1, mut s2) = (0.0, 0.0);
        for _ in 0..n {
            let e = noise.sample(&mut rng);
            assert!(e.abs() <= noise.support_bound());
            s1 += e;
            s2 += e * e;
        }
        let mean = s1 / n as f64;
        let var = s2 / n as f64 - mean * mean;
        assert!(mean.abs() <= 4.0 / (n as f64).sqrt(), "mean {mean}");
        assert!((var - 1.0).abs() <= 0.01, "var {var}");
    }

    #[test]
    fn delta_kernel_moments() {
        let rule = half_rule(0.1);
        let k = TransitionKernel::Delta(rule.clone());
        let m = k.exact_moments(l(1), l(2), 2.0, 4.0);
        assert_eq!(m.mean, rule.interaction_mean(l(1), l(2), 2.0, 4.0));
        assert!((m.std_dev - 0.2).abs() < 1e-15);

        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let est = transition_moments(&k, l(1), l(2), 2.0, 4.0, 200_000, &mut rng).unwrap();
        assert!((est.mean - 3.0).abs() < 4.0 * 0.2 / (200_000f64).sqrt());
        assert!((est.std_dev - 0.2).abs() < 0.005);
    }

    #[test]
    fn no_change_kernel_moments() {
        let k = TransitionKernel::NoChange;
        let m = k.exact_moments(l(1), l(1), 1.5, 7.0);
        assert_eq!((m.mean, m.std_dev), (1.5, 0.0));
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let est = transition_moments(&k, l(1), l(1), 1.5, 7.0, 10_000, &mut rng).unwrap();
        assert_eq!(est.mean, 1.5);
        assert_eq!(est.std_dev, 0.0);
    }

    #[test]
    fn rescaled_kernel_matches_closed_form() {
        // (v, w) = (1, 2), eps = 0.25, omega = 0.5, zeta = 0: I - v = 0.5,
        // mean = 1.125, variance = 0.25 * 0.75 * 0.25 = 0.046875
        let k = TransitionKernel::Rescaled {
            base: half_rule(0.0),
            epsilon: 0.25,
        };
        let exact = k.exact_moments(l(1), l(1), 1.0, 2.0);
        assert!((exact.mean - 1.125).abs() < 1e-15);
        assert!((exact.std_dev.powi(2) - 0.046875).abs() < 1e-15);

        let n = 100_000;
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let est = transition_moments(&k, l(1), l(1), 1.0, 2.0, n, &mut rng).unwrap();
        let se_mean = exact.std_dev / (n as f64).sqrt();
        assert!((est.mean - exact.mean).abs() < 3.0 * se_mean);
        // Bernoulli(0.25) * 0.5 jump: fourth central moment known in closed form
        let p: f64 = 0.25;
        let jump: f64 = 0.5;
        let mu4 = jump.powi(4) * p * (1.0 - p) * (1.0 - 3.0 * p + 3.0 * p * p);
        let var = exact.std_dev.powi(2);
        let se_var = ((mu4 - var * var) / n as f64).sqrt();
        let est_var = est.std_dev.powi(2);
        assert!((est_var - var).abs() < 3.0 * se_var, "{est_var} vs {var}");
    }

    #[test]
    fn too_few_samples_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(transition_moments(&TransitionKernel::NoChange, l(1), l(1), 1.0, 1.0, 10, &mut rng).is_err());
    }

    #[test]
    fn rate_table_products_and_symmetry() {
        let f = FrequencyMatrix::new(&[vec![1.0, 1.0], vec![1.0, 10.0]]).unwrap();
        let r = RateTable::new(&f, &TransferTable::trade(0.5, 0.5).unwrap()).unwrap();
        assert_eq!(r.get(1, 1, 1, 2), 0.5);
        assert_eq!(r.get(2, 2, 1, 2), 5.0);
        assert_eq!(r.get(1, 2, 1, 1), 0.5);
        assert_eq!(r.get(1, 2, 2, 2), 0.5);
        assert!(r.is_trade_symmetric());
    }

    #[test]
    fn spec_rejects_label_mismatch_and_wealth_rates() {
        let f = FrequencyMatrix::uniform(2, 1.0).unwrap();
        let k = TransferKernel::Constant(TransferTable::identity(3).unwrap());
        assert!(TradeModelSpec::new(f.clone(), k, half_rule(0.1)).is_err());
        let k = TransferKernel::WealthDependent(WealthDependentKernel {
            to_first: 0.2,
            to_second: 0.8,
            prefactor: 0.5,
            factor: WealthFactor::ExpDecaying,
        });
        let spec = TradeModelSpec::new(f, k, half_rule(0.1)).unwrap();
        assert!(spec.rate_table().is_err());
    }
}
