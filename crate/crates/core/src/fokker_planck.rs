//! Quasi-invariant exchange rules and the analytic Fokker-Planck steady
//! state of the two-label trade model.
//!
//! In the quasi-invariant regime each interaction moves wealth by `O(eps)`
//! and time is stretched as `tau = eps t`. Label switches are not rescaled,
//! so the label masses relax on the fast scale while the wealth profile
//! relaxes on the slow one. The steady wealth profile of label 1 is an
//! inverse-gamma law carrying the mass `rho_bar / (1 + alpha)`.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::{gamma_ur, ln_gamma};

use crate::error::{Error, Result};
use crate::model::{exchange_post_states, ExchangeRule, Label};

/// Which noise amplitude the rescaled rule uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QinvVariant {
    /// Amplitude `sqrt(eps (1 - eps) (I - v)^2 + eps D^2)`: mean and energy
    /// evolve as in the unscaled rule.
    Conservative,
    /// Amplitude `sqrt(eps) D`: only the mean is preserved.
    Nonconservative,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuasiInvariantConfig {
    pub epsilon: f64,
    pub variant: QinvVariant,
    /// Report the slow time `tau = eps t` alongside `t`.
    #[serde(default = "default_true")]
    pub time_scaling: bool,
}

fn default_true() -> bool {
    true
}

impl QuasiInvariantConfig {
    pub fn new(epsilon: f64, variant: QinvVariant) -> Result<Self> {
        let cfg = QuasiInvariantConfig {
            epsilon,
            variant,
            time_scaling: true,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "epsilon = {} outside (0, 1]",
                self.epsilon
            )));
        }
        Ok(())
    }

    pub fn tau(&self, t: f64) -> f64 {
        self.epsilon * t
    }
}

#[inline]
fn qinv_one(eps: f64, variant: QinvVariant, v: f64, mean: f64, fluct: f64, eta: f64) -> f64 {
    let drift = mean - v;
    let amplitude = match variant {
        QinvVariant::Conservative => {
            (eps * (1.0 - eps) * drift * drift + eps * fluct * fluct).sqrt()
        }
        QinvVariant::Nonconservative => eps.sqrt() * fluct,
    };
    v + eps * drift + amplitude * eta
}

/// Post-interaction wealths under the quasi-invariant rule. With
/// `eps = 1` both variants coincide with [`exchange_post_states`].
#[inline]
#[allow(clippy::too_many_arguments)]
pub fn qinv_exchange_post_states(
    x: Label,
    y: Label,
    v: f64,
    w: f64,
    eta: f64,
    eta_star: f64,
    rule: &ExchangeRule,
    cfg: &QuasiInvariantConfig,
) -> (f64, f64) {
    let eps = cfg.epsilon;
    if eps == 1.0 {
        return exchange_post_states(x, y, v, w, eta, eta_star, rule);
    }
    let v_post = qinv_one(
        eps,
        cfg.variant,
        v,
        rule.interaction_mean(x, y, v, w),
        rule.fluctuation(x, y, v),
        eta,
    );
    let w_post = qinv_one(
        eps,
        cfg.variant,
        w,
        rule.interaction_mean(y, x, w, v),
        rule.fluctuation(x, y, w),
        eta_star,
    );
    (v_post, w_post)
}

/// Parameters of the analytic steady state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParetoParams {
    pub alpha: f64,
    pub omega1: f64,
    pub omega2: f64,
    pub zeta: f64,
    pub rho_bar: f64,
    /// Conserved total first moment `M_bar`.
    pub moment_bar: f64,
}

impl ParetoParams {
    /// `B = 2 omega_1 + omega_2 (1 + alpha)`.
    pub fn drift_coefficient(&self) -> f64 {
        2.0 * self.omega1 + self.omega2 * (1.0 + self.alpha)
    }

    /// `D = zeta^2 (3 + alpha) / 2`.
    pub fn diffusion_coefficient(&self) -> f64 {
        self.zeta * self.zeta * (3.0 + self.alpha) / 2.0
    }

    pub fn mean_wealth(&self) -> f64 {
        self.moment_bar / self.rho_bar
    }

    /// Mass carried by label 1 at equilibrium.
    pub fn label1_mass(&self) -> f64 {
        self.rho_bar / (1.0 + self.alpha)
    }

    pub fn gamma(&self) -> Result<f64> {
        gamma_exponent(self)
    }

    pub fn pareto_index(&self) -> Result<f64> {
        Ok(gamma_exponent(self)? + 1.0)
    }

    fn check(&self) -> Result<()> {
        if !(self.alpha > 0.0) || !(self.rho_bar > 0.0) || !(self.moment_bar > 0.0) {
            return Err(Error::Domain(
                "alpha, rho_bar and moment_bar must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// `gamma = B / D`.
pub fn gamma_exponent(params: &ParetoParams) -> Result<f64> {
    if !(params.zeta > 0.0) {
        return Err(Error::DegenerateDiffusion);
    }
    Ok(params.drift_coefficient() / params.diffusion_coefficient())
}

/// Steady density of label 1: the mass `rho_bar / (1 + alpha)` times the
/// normalized inverse-gamma law with shape `gamma + 1` and scale
/// `gamma * m_bar`. Its tail decays as `v^-(2 + gamma)`.
pub fn stationary_density(v: f64, params: &ParetoParams) -> Result<f64> {
    if !(v > 0.0) {
        return Err(Error::Domain(format!("density evaluated at v = {v} <= 0")));
    }
    params.check()?;
    let gamma = gamma_exponent(params)?;
    let shape = gamma + 1.0;
    let scale = gamma * params.mean_wealth();
    let log_pdf = shape * scale.ln() - ln_gamma(shape) - (shape + 1.0) * v.ln() - scale / v;
    Ok(params.label1_mass() * log_pdf.exp())
}

/// Fraction of the label-1 steady mass below `v`.
pub fn stationary_cdf(v: f64, params: &ParetoParams) -> Result<f64> {
    params.check()?;
    let gamma = gamma_exponent(params)?;
    if !(v > 0.0) {
        return Ok(0.0);
    }
    if v.is_infinite() {
        return Ok(1.0);
    }
    Ok(gamma_ur(gamma + 1.0, gamma * params.mean_wealth() / v))
}

/// Steady mass of label 1 in each cell `[edges[k], edges[k + 1]]`; the
/// last cell also absorbs everything beyond the last edge, so the cells
/// add up to the full label mass.
pub fn stationary_cell_masses(edges: &[f64], params: &ParetoParams) -> Result<Vec<f64>> {
    if edges.len() < 2 || edges.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidArgument("edges must be increasing, at least two".into()));
    }
    let mass = params.label1_mass();
    let cdf: Vec<f64> = edges
        .iter()
        .map(|&e| stationary_cdf(e, params))
        .collect::<Result<_>>()?;
    let mut cells: Vec<f64> = cdf.windows(2).map(|c| mass * (c[1] - c[0]).max(0.0)).collect();
    let last = cells.len() - 1;
    cells[last] += mass * (1.0 - cdf[cdf.len() - 1]);
    cells[0] += mass * cdf[0];
    Ok(cells)
}

/// Mode of [`stationary_density`].
pub fn stationary_mode(params: &ParetoParams) -> Result<f64> {
    let gamma = gamma_exponent(params)?;
    Ok(gamma * params.mean_wealth() / (gamma + 2.0))
}

/// Second moment of [`stationary_density`]: `mass * gamma m_bar^2 / (gamma - 1)`,
/// finite only for `gamma > 1`.
pub fn stationary_second_moment(params: &ParetoParams) -> Result<f64> {
    let gamma = gamma_exponent(params)?;
    if gamma <= 1.0 {
        return Ok(f64::INFINITY);
    }
    let m = params.mean_wealth();
    Ok(params.label1_mass() * gamma * m * m / (gamma - 1.0))
}

/// Leading-order profile of label 2 from that of label 1: `f2 = alpha f1`.
pub fn leading_order_pair(f1_values: &[f64], alpha: f64) -> Vec<f64> {
    f1_values.iter().map(|f| alpha * f).collect()
}

/// Order-zero masses and first moments; they coincide with the equilibrium
/// values of the macroscopic system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OrderZeroMoments {
    pub rho: [f64; 2],
    pub moment: [f64; 2],
}

pub fn order_zero_moments(alpha: f64, rho_bar: f64, moment_bar: f64) -> OrderZeroMoments {
    let rho1 = rho_bar / (1.0 + alpha);
    let m1 = moment_bar / (1.0 + alpha);
    OrderZeroMoments {
        rho: [rho1, alpha * rho1],
        moment: [m1, alpha * m1],
    }
}

/// First-order corrections to the label masses and moments. The
/// conservation constraints force them to vanish, so the reaction term of
/// the first-order equation drops out of the steady-state problem.
pub const FIRST_ORDER_CORRECTIONS: OrderZeroMoments = OrderZeroMoments {
    rho: [0.0, 0.0],
    moment: [0.0, 0.0],
};

/// Residual of the reaction-free steady Fokker-Planck operator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResidualReport {
    pub max_residual: f64,
    /// Largest magnitude of the advection term over the grid.
    pub drift_scale: f64,
    /// Largest magnitude of the diffusion term over the grid.
    pub diffusion_scale: f64,
}

impl ResidualReport {
    /// Residual relative to the larger of the two term scales (0 when both vanish).
    pub fn relative(&self) -> f64 {
        let scale = self.drift_scale.max(self.diffusion_scale);
        if scale == 0.0 {
            0.0
        } else {
            self.max_residual / scale
        }
    }
}

// sixth-order central stencils
const D1: [f64; 7] = [-1.0 / 60.0, 3.0 / 20.0, -3.0 / 4.0, 0.0, 3.0 / 4.0, -3.0 / 20.0, 1.0 / 60.0];
const D2: [f64; 7] = [
    1.0 / 90.0,
    -3.0 / 20.0,
    3.0 / 2.0,
    -49.0 / 18.0,
    3.0 / 2.0,
    -3.0 / 20.0,
    1.0 / 90.0,
];

/// Evaluates
/// `-(b/(1+a)) d/dv[A(v) f] + (zeta^2 b rho_bar / (2 (1+a))) d2/dv2[(3+a) v^2 f]`
/// with `A(v) = (w1 M - w2 v r) + a (w2 M - w2 v r) + (w1 M - w1 v r) + (w2 M - w1 v r)`
/// on every grid point using sixth-order finite differences with a step
/// proportional to `v`, and returns the largest absolute value. `rate` is
/// the transfer rate `beta_1^2`, which only scales the operator.
pub fn fp_stationarity_residual(
    params: &ParetoParams,
    rate: f64,
    grid: &[f64],
    density: impl Fn(f64) -> f64,
) -> Result<ResidualReport> {
    if grid.iter().any(|&v| !(v > 0.0)) {
        return Err(Error::Domain("residual grid must lie in (0, inf)".into()));
    }
    let a = params.alpha;
    let r = params.rho_bar;
    let m = params.moment_bar;
    let (w1, w2) = (params.omega1, params.omega2);
    let advection = |v: f64| {
        (w1 * m - w2 * v * r) + a * (w2 * m - w2 * v * r) + (w1 * m - w1 * v * r) + (w2 * m - w1 * v * r)
    };
    let drift_pref = rate / (1.0 + a);
    let diff_pref = params.zeta * params.zeta * rate * r / (2.0 * (1.0 + a));

    let mut report = ResidualReport {
        max_residual: 0.0,
        drift_scale: 0.0,
        diffusion_scale: 0.0,
    };
    for &v in grid {
        let h = 1e-2 * v;
        let (mut d_flux, mut d2_diff) = (0.0, 0.0);
        for (s, (c1, c2)) in D1.iter().zip(D2.iter()).enumerate() {
            let u = v + (s as f64 - 3.0) * h;
            let f = density(u);
            d_flux += c1 * advection(u) * f;
            d2_diff += c2 * (3.0 + a) * u * u * f;
        }
        let drift_term = -drift_pref * d_flux / h;
        let diffusion_term = diff_pref * d2_diff / (h * h);
        report.drift_scale = report.drift_scale.max(drift_term.abs());
        report.diffusion_scale = report.diffusion_scale.max(diffusion_term.abs());
        report.max_residual = report.max_residual.max((drift_term + diffusion_term).abs());
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::NoiseSpec;

    fn l(i: usize) -> Label {
        Label::new(i, 2).unwrap()
    }

    fn params(alpha: f64, w1: f64, w2: f64, zeta: f64) -> ParetoParams {
        ParetoParams {
            alpha,
            omega1: w1,
            omega2: w2,
            zeta,
            rho_bar: 1.0,
            moment_bar: 1.45,
        }
    }

    #[test]
    fn eps_one_is_the_plain_rule() {
        let rule = ExchangeRule::with_uniform_zeta(vec![0.3, 0.6], 0.2, NoiseSpec::uniform()).unwrap();
        for variant in [QinvVariant::Conservative, QinvVariant::Nonconservative] {
            let cfg = QuasiInvariantConfig::new(1.0, variant).unwrap();
            for &(v, w, e, es) in &[(1.0, 3.0, 0.4, -1.2), (0.3, 0.0, 1.7, 0.0), (7.0, 2.0, -1.0, 1.0)] {
                assert_eq!(
                    qinv_exchange_post_states(l(1), l(2), v, w, e, es, &rule, &cfg),
                    exchange_post_states(l(1), l(2), v, w, e, es, &rule)
                );
            }
        }
    }

    #[test]
    fn vanishing_eps_freezes_states() {
        let rule = ExchangeRule::with_uniform_zeta(vec![0.5, 0.5], 0.2, NoiseSpec::uniform()).unwrap();
        let cfg = QuasiInvariantConfig {
            epsilon: 1e-14,
            variant: QinvVariant::Conservative,
            time_scaling: true,
        };
        let (v, w) = qinv_exchange_post_states(l(1), l(2), 1.0, 3.0, 1.0, -1.0, &rule, &cfg);
        assert!((v - 1.0).abs() < 1e-6 && (w - 3.0).abs() < 1e-6);
    }

    #[test]
    fn conservative_worked_example() {
        let rule = ExchangeRule::with_uniform_zeta(vec![0.5, 0.5], 0.0, NoiseSpec::uniform()).unwrap();
        let cfg = QuasiInvariantConfig::new(0.25, QinvVariant::Conservative).unwrap();
        let (v, _) = qinv_exchange_post_states(l(1), l(2), 1.0, 3.0, 1.0, 0.0, &rule, &cfg);
        let expected = 1.25 + (0.25f64 * 0.75).sqrt();
        assert!((v - expected).abs() < 1e-15);
        assert!((v - 1.6830).abs() < 1e-4);
    }

    #[test]
    fn nonconservative_amplitude() {
        let rule = ExchangeRule::with_uniform_zeta(vec![0.5, 0.5], 0.2, NoiseSpec::uniform()).unwrap();
        let cfg = QuasiInvariantConfig::new(0.01, QinvVariant::Nonconservative).unwrap();
        let (v, _) = qinv_exchange_post_states(l(1), l(2), 2.0, 4.0, 1.0, 0.0, &rule, &cfg);
        // v + eps (I - v) + sqrt(eps) zeta v
        assert!((v - (2.0 + 0.01 * 1.0 + 0.1 * 0.4)).abs() < 1e-15);
    }

    #[test]
    fn epsilon_range() {
        assert!(QuasiInvariantConfig::new(0.0, QinvVariant::Conservative).is_err());
        assert!(QuasiInvariantConfig::new(1.5, QinvVariant::Conservative).is_err());
    }

    #[test]
    fn gamma_values() {
        // B = 1 + 1 = 2, D = 0.25 * 4 / 2 = 0.5
        assert!((gamma_exponent(&params(1.0, 0.5, 0.5, 0.5)).unwrap() - 4.0).abs() < 1e-15);
        for alpha in [0.2, 1.0, 3.7, 12.0] {
            let g = gamma_exponent(&params(alpha, 0.3, 0.3, 0.25)).unwrap();
            assert!((g - 2.0 * 0.3 / 0.0625).abs() < 1e-12);
        }
        assert_eq!(gamma_exponent(&params(1.0, 0.5, 0.5, 0.0)), Err(Error::DegenerateDiffusion));
    }

    #[test]
    fn density_domain() {
        let p = params(1.0, 0.5, 0.5, 0.25);
        assert!(stationary_density(0.0, &p).is_err());
        assert!(stationary_density(-1.0, &p).is_err());
        assert!(stationary_density(1.0, &p).unwrap() > 0.0);
    }

    #[test]
    fn density_mode_is_a_sign_change_of_the_slope() {
        let p = params(1.5, 0.5, 0.5, 0.25);
        let mode = stationary_mode(&p).unwrap();
        let f = |v: f64| stationary_density(v, &p).unwrap();
        let h = 1e-4 * mode;
        let slope = |v: f64| (f(v + h) - f(v - h)) / (2.0 * h);
        assert!(slope(0.99 * mode) > 0.0);
        assert!(slope(1.01 * mode) < 0.0);
    }

    #[test]
    fn leading_order_pair_scales() {
        let f1 = [0.0, 1.0, 2.5];
        assert_eq!(leading_order_pair(&f1, 1.0), f1.to_vec());
        assert_eq!(leading_order_pair(&f1, 2.0), vec![0.0, 2.0, 5.0]);
        let alpha = 10f64.sqrt() / 10.0;
        let z = order_zero_moments(alpha, 1.0, 1.45);
        assert!((z.rho[0] + z.rho[1] - 1.0).abs() < 1e-15);
        assert!((z.rho[1] / z.rho[0] - alpha).abs() < 1e-12);
        assert!((z.moment[1] / z.moment[0] - alpha).abs() < 1e-12);
    }

    #[test]
    fn residual_of_zero_is_zero() {
        let p = params(1.0, 0.5, 0.5, 0.25);
        let r = fp_stationarity_residual(&p, 0.5, &[0.5, 1.0, 2.0], |_| 0.0).unwrap();
        assert_eq!(r.max_residual, 0.0);
        assert_eq!(r.relative(), 0.0);
    }

    #[test]
    fn residual_rejects_nonpositive_grid() {
        let p = params(1.0, 0.5, 0.5, 0.25);
        assert!(fp_stationarity_residual(&p, 0.5, &[0.0, 1.0], |_| 0.0).is_err());
    }
}
