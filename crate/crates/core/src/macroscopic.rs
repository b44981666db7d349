//! Macroscopic equations: label masses and first moments of the two-label
//! trade model, their closed-form equilibria, and the general label-switch
//! mass balance.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::RateTable;

/// Masses and first moments of the two labels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MacroState {
    pub rho: [f64; 2],
    pub moment: [f64; 2],
}

impl MacroState {
    pub fn new(rho: [f64; 2], moment: [f64; 2]) -> Result<Self> {
        if rho.iter().chain(&moment).any(|x| !(*x >= 0.0) || !x.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "masses and moments must be finite and >= 0: {rho:?}, {moment:?}"
            )));
        }
        Ok(MacroState { rho, moment })
    }

    /// State from masses and mean wealths.
    pub fn from_means(rho: [f64; 2], mean: [f64; 2]) -> Result<Self> {
        Self::new(rho, [rho[0] * mean[0], rho[1] * mean[1]])
    }

    pub fn mean(&self) -> Result<[f64; 2]> {
        let m = |i: usize| {
            if self.rho[i] > 0.0 {
                Ok(self.moment[i] / self.rho[i])
            } else {
                Err(Error::UndefinedMean(i + 1))
            }
        };
        Ok([m(0)?, m(1)?])
    }

    pub fn total_mass(&self) -> f64 {
        self.rho[0] + self.rho[1]
    }

    pub fn total_moment(&self) -> f64 {
        self.moment[0] + self.moment[1]
    }

    fn axpy(&self, h: f64, d: &MacroState) -> MacroState {
        MacroState {
            rho: [self.rho[0] + h * d.rho[0], self.rho[1] + h * d.rho[1]],
            moment: [self.moment[0] + h * d.moment[0], self.moment[1] + h * d.moment[1]],
        }
    }
}

/// The four rates the two-label trade equations depend on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TradeRates {
    pub b11_12: f64,
    pub b22_12: f64,
    pub b12_11: f64,
    pub b12_22: f64,
}

impl TradeRates {
    pub fn new(b11_12: f64, b22_12: f64, b12_11: f64, b12_22: f64) -> Result<Self> {
        let r = TradeRates {
            b11_12,
            b22_12,
            b12_11,
            b12_22,
        };
        if [b11_12, b22_12, b12_11, b12_22]
            .iter()
            .any(|b| !(*b >= 0.0) || !b.is_finite())
        {
            return Err(Error::DegenerateRates(format!("negative or non-finite rate in {r:?}")));
        }
        Ok(r)
    }

    /// Extracts the trade rates of a two-label table, which must have the
    /// pair symmetry `beta_ii^12 = beta_ii^21`, `beta_12^ii = beta_21^ii`.
    pub fn from_table(beta: &RateTable) -> Result<Self> {
        if !beta.is_trade_symmetric() {
            return Err(Error::DegenerateRates(
                "rate table is not a symmetric two-label trade table".into(),
            ));
        }
        Self::new(
            beta.get(1, 1, 1, 2),
            beta.get(2, 2, 1, 2),
            beta.get(1, 2, 1, 1),
            beta.get(1, 2, 2, 2),
        )
    }
}

/// Time derivative of `(rho, M)`. Both pairs of components sum to zero.
pub fn trade_rhs(state: &MacroState, beta: &TradeRates) -> MacroState {
    let [r1, r2] = state.rho;
    let [m1, m2] = state.moment;
    let gain1 = beta.b22_12 * r2 + beta.b12_11 * r1;
    let loss1 = beta.b11_12 * r1 + beta.b12_22 * r2;
    let drho = gain1 * r2 - loss1 * r1;
    let dm = gain1 * m2 - loss1 * m1;
    MacroState {
        rho: [drho, -drho],
        moment: [dm, -dm],
    }
}

/// Time derivative of the mean wealths `m_i = M_i / rho_i`.
pub fn mean_rhs(state: &MacroState, beta: &TradeRates) -> Result<[f64; 2]> {
    let [m1, m2] = state.mean()?;
    let [r1, r2] = state.rho;
    let c1 = (r2 / r1) * (beta.b22_12 * r2 + beta.b12_11 * r1);
    let c2 = (r1 / r2) * (beta.b11_12 * r1 + beta.b12_22 * r2);
    Ok([c1 * (m2 - m1), c2 * (m1 - m2)])
}

pub type MacroTrajectory = Vec<(f64, MacroState)>;

/// Classical RK4 with fixed step `dt`; the last step is shortened to land
/// on `t_end`. Every step is recorded.
pub fn integrate_rk4(
    state0: &MacroState,
    beta: &TradeRates,
    dt: f64,
    t_end: f64,
) -> Result<MacroTrajectory> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::InvalidArgument(format!("dt = {dt} must be positive")));
    }
    if !(t_end >= 0.0) || !t_end.is_finite() {
        return Err(Error::InvalidArgument(format!("t_end = {t_end} must be >= 0")));
    }
    let steps = (t_end / dt - 1e-9).ceil().max(0.0) as usize;
    let mut out = Vec::with_capacity(steps + 1);
    let mut s = *state0;
    out.push((0.0, s));
    for k in 1..=steps {
        let t0 = (k - 1) as f64 * dt;
        let h = dt.min(t_end - t0);
        let k1 = trade_rhs(&s, beta);
        let k2 = trade_rhs(&s.axpy(0.5 * h, &k1), beta);
        let k3 = trade_rhs(&s.axpy(0.5 * h, &k2), beta);
        let k4 = trade_rhs(&s.axpy(h, &k3), beta);
        let mut incr = MacroState {
            rho: [0.0; 2],
            moment: [0.0; 2],
        };
        for i in 0..2 {
            incr.rho[i] = (k1.rho[i] + 2.0 * k2.rho[i] + 2.0 * k3.rho[i] + k4.rho[i]) / 6.0;
            incr.moment[i] =
                (k1.moment[i] + 2.0 * k2.moment[i] + 2.0 * k3.moment[i] + k4.moment[i]) / 6.0;
        }
        s = s.axpy(h, &incr);
        let t = if k == steps { t_end } else { k as f64 * dt };
        out.push((t, s));
    }
    Ok(out)
}

/// RK4 solution at the given non-decreasing times, integrating each gap
/// with step `dt` and a shortened final step.
pub fn rk4_at_times(
    state0: &MacroState,
    beta: &TradeRates,
    dt: f64,
    times: &[f64],
) -> Result<Vec<MacroState>> {
    let mut out = Vec::with_capacity(times.len());
    let (mut t, mut s) = (0.0, *state0);
    for &target in times {
        if target < t {
            return Err(Error::InvalidArgument("times must be non-decreasing and >= 0".into()));
        }
        if target > t {
            s = integrate_rk4(&s, beta, dt, target - t)?.last().expect("non-empty").1;
            t = target;
        }
        out.push(s);
    }
    Ok(out)
}

/// Equilibrium mass ratio `alpha = rho_2 / rho_1`, the positive root of
/// `b22_12 a^2 + (b12_11 - b12_22) a - b11_12 = 0`.
pub fn stationary_alpha(beta: &TradeRates) -> Result<f64> {
    if !(beta.b22_12 > 0.0) {
        return Err(Error::DegenerateRates("beta_22^12 must be positive".into()));
    }
    let d = beta.b12_11 - beta.b12_22;
    let root = (d * d + 4.0 * beta.b11_12 * beta.b22_12).sqrt();
    let alpha = if d > 0.0 {
        2.0 * beta.b11_12 / (d + root)
    } else {
        (root - d) / (2.0 * beta.b22_12)
    };
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::DegenerateRates(format!("alpha = {alpha} is not positive")));
    }
    Ok(alpha)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StationarySummary {
    pub alpha: f64,
    pub rho_inf: [f64; 2],
    pub m_inf: f64,
    pub moment_inf: [f64; 2],
    /// The initially smaller label ends up the larger one.
    pub switch_predicted: bool,
}

/// Closed-form equilibrium reached from `state0`. The common mean is
/// `M_bar / rho_bar`.
pub fn stationary_summary(beta: &TradeRates, state0: &MacroState) -> Result<StationarySummary> {
    let alpha = stationary_alpha(beta)?;
    let rho_bar = state0.total_mass();
    if !(rho_bar > 0.0) {
        return Err(Error::InvalidArgument("total mass must be positive".into()));
    }
    let m_inf = state0.total_moment() / rho_bar;
    let rho_inf = [rho_bar / (1.0 + alpha), alpha * rho_bar / (1.0 + alpha)];
    Ok(StationarySummary {
        alpha,
        rho_inf,
        m_inf,
        moment_inf: [rho_inf[0] * m_inf, rho_inf[1] * m_inf],
        switch_predicted: (state0.rho[1] - state0.rho[0]) * (alpha - 1.0) < 0.0,
    })
}

/// Mass balance of the label-switch process with constant rates:
/// `f_s' = sum_{j,k,l} (beta_jk^sl f_j f_k - beta_sk^jl f_s f_k)`.
pub fn label_switch_rhs(f: &[f64], beta: &RateTable) -> Result<Vec<f64>> {
    let n = beta.n();
    if f.len() != n {
        return Err(Error::InvalidArgument(format!(
            "{} masses for {n} labels",
            f.len()
        )));
    }
    let mut out = vec![0.0; n];
    for (s, out_s) in out.iter_mut().enumerate() {
        let mut gain = 0.0;
        let mut loss = 0.0;
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    gain += beta.at(j, k, s, l) * f[j] * f[k];
                    loss += beta.at(s, k, j, l) * f[k];
                }
            }
        }
        *out_s = gain - f[s] * loss;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{FrequencyMatrix, TransferTable};

    fn test1() -> TradeRates {
        TradeRates::new(0.5, 5.0, 0.5, 0.5).unwrap()
    }

    #[test]
    fn symmetric_equilibrium_is_fixed() {
        let beta = TradeRates::new(0.5, 0.5, 0.5, 0.5).unwrap();
        let s = MacroState::new([0.5, 0.5], [0.7, 0.7]).unwrap();
        let d = trade_rhs(&s, &beta);
        assert_eq!(d.rho, [0.0, 0.0]);
        assert_eq!(d.moment, [0.0, 0.0]);
    }

    #[test]
    fn hand_evaluated_rhs() {
        let s = MacroState::from_means([0.9, 0.1], [0.5, 10.0]).unwrap();
        let d = trade_rhs(&s, &test1());
        assert!((d.rho[0] + 0.355).abs() < 1e-14);
        assert_eq!(d.rho[0] + d.rho[1], 0.0);
        let dm = mean_rhs(&s, &test1()).unwrap();
        assert!((dm[0] - 0.95 * 9.5 / 9.0).abs() < 1e-13);
        assert!(dm[1] < 0.0);
    }

    #[test]
    fn equal_means_do_not_move() {
        let s = MacroState::from_means([0.3, 0.7], [2.0, 2.0]).unwrap();
        assert_eq!(mean_rhs(&s, &test1()).unwrap(), [0.0, 0.0]);
        let empty = MacroState::new([1.0, 0.0], [1.0, 0.0]).unwrap();
        assert_eq!(mean_rhs(&empty, &test1()), Err(Error::UndefinedMean(2)));
    }

    #[test]
    fn quotient_rule_consistency() {
        let beta = test1();
        for &(r1, m1, m2) in &[(0.9, 0.5, 10.0), (0.2, 3.0, 1.0), (0.55, 1.0, 1.5)] {
            let s = MacroState::from_means([r1, 1.0 - r1], [m1, m2]).unwrap();
            let d = trade_rhs(&s, &beta);
            let dm = mean_rhs(&s, &beta).unwrap();
            for i in 0..2 {
                let q = (d.moment[i] * s.rho[i] - s.moment[i] * d.rho[i]) / (s.rho[i] * s.rho[i]);
                assert!((q - dm[i]).abs() < 1e-12 * (1.0 + q.abs()));
            }
        }
    }

    #[test]
    fn alpha_examples() {
        assert!((stationary_alpha(&test1()).unwrap() - 10f64.sqrt() / 10.0).abs() < 1e-15);
        let ii = TradeRates::new(0.5, 0.5, 2.0, 8.0).unwrap();
        assert!((stationary_alpha(&ii).unwrap() - (6.0 + 37f64.sqrt())).abs() < 1e-12);
        let sym = TradeRates::new(0.5, 0.5, 0.5, 0.5).unwrap();
        assert_eq!(stationary_alpha(&sym).unwrap(), 1.0);
        let degenerate = TradeRates::new(0.5, 0.0, 0.5, 0.5).unwrap();
        assert!(matches!(stationary_alpha(&degenerate), Err(Error::DegenerateRates(_))));
    }

    #[test]
    fn alpha_under_country_independence() {
        // beta_11^12 = beta_12^22 = a and beta_22^12 = beta_12^11 = b give a / b
        for &(a, b) in &[(0.6, 0.4), (3.0, 0.01), (1e-3, 7.0)] {
            let r = TradeRates::new(a, b, b, a).unwrap();
            let alpha = stationary_alpha(&r).unwrap();
            assert!((alpha - a / b).abs() <= 1e-12 * (a / b));
        }
    }

    #[test]
    fn summary_examples() {
        let a = MacroState::from_means([0.9, 0.1], [0.5, 10.0]).unwrap();
        let b = MacroState::from_means([0.9, 0.1], [10.0, 0.5]).unwrap();
        let sa = stationary_summary(&test1(), &a).unwrap();
        assert!((sa.m_inf - 1.45).abs() < 1e-14);
        assert!((stationary_summary(&test1(), &b).unwrap().m_inf - 9.05).abs() < 1e-13);
        assert!((sa.rho_inf[0] - 1.0 / (1.0 + 10f64.sqrt() / 10.0)).abs() < 1e-15);
        assert!(sa.rho_inf[0] > sa.rho_inf[1]);
        assert!(!sa.switch_predicted);
        let ii = TradeRates::new(0.5, 0.5, 2.0, 8.0).unwrap();
        assert!(stationary_summary(&ii, &a).unwrap().switch_predicted);
    }

    #[test]
    fn rk4_reaches_equilibrium_and_conserves() {
        let s0 = MacroState::from_means([0.9, 0.1], [0.5, 10.0]).unwrap();
        let traj = integrate_rk4(&s0, &test1(), 1e-3, 50.0).unwrap();
        let (t, end) = traj.last().unwrap();
        assert_eq!(*t, 50.0);
        for (_, s) in &traj {
            assert!((s.total_mass() - 1.0).abs() <= 1e-10);
            assert!((s.total_moment() - 1.45).abs() <= 1e-10);
        }
        let sum = stationary_summary(&test1(), &s0).unwrap();
        for i in 0..2 {
            assert!((end.rho[i] - sum.rho_inf[i]).abs() < 1e-6);
            assert!((end.moment[i] - sum.moment_inf[i]).abs() < 1e-6);
        }
    }

    #[test]
    fn rk4_fourth_order() {
        let s0 = MacroState::from_means([0.9, 0.1], [0.5, 10.0]).unwrap();
        let end = |dt: f64| *integrate_rk4(&s0, &test1(), dt, 2.0).unwrap().last().map(|(_, s)| s).unwrap();
        let reference = end(0.1 / 64.0);
        let err = |s: MacroState| (s.rho[0] - reference.rho[0]).abs() + (s.moment[0] - reference.moment[0]).abs();
        let ratio = err(end(0.1)) / err(end(0.05));
        assert!((12.0..=20.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn zero_rates_are_constant() {
        let zero = TradeRates::new(0.0, 0.0, 0.0, 0.0).unwrap();
        let s0 = MacroState::from_means([0.4, 0.6], [1.0, 2.0]).unwrap();
        for (_, s) in integrate_rk4(&s0, &zero, 0.1, 1.0).unwrap() {
            assert_eq!(s, s0);
        }
    }

    #[test]
    fn label_switch_trivial_cases() {
        let one = RateTable::from_fn(1, |_, _, _, _| 2.0).unwrap();
        assert_eq!(label_switch_rhs(&[1.0], &one).unwrap(), vec![0.0]);
        let n = 3;
        let uniform = RateTable::from_fn(n, |_, _, _, _| 0.7).unwrap();
        let f = vec![1.0 / 3.0; n];
        for d in label_switch_rhs(&f, &uniform).unwrap() {
            assert!(d.abs() < 1e-15);
        }
    }

    #[test]
    fn label_switch_matches_trade_masses() {
        let freq = FrequencyMatrix::new(&[vec![1.0, 1.0], vec![1.0, 10.0]]).unwrap();
        let table = RateTable::new(&freq, &TransferTable::trade(0.5, 0.5).unwrap()).unwrap();
        let rates = TradeRates::from_table(&table).unwrap();
        assert_eq!(rates, test1());
        for r1 in [0.1, 0.37, 0.9] {
            let f = [r1, 1.0 - r1];
            let general = label_switch_rhs(&f, &table).unwrap();
            let s = MacroState::new(f, [0.0, 0.0]).unwrap();
            let trade = trade_rhs(&s, &rates);
            assert!((general[0] - trade.rho[0]).abs() < 1e-14);
            assert!((general[1] - trade.rho[1]).abs() < 1e-14);
        }
    }
}
