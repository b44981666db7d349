//! One-dimensional distribution comparison.

use crate::error::{Error, Result};

/// Tolerance on the mass difference accepted by [`wasserstein1`].
pub const MASS_TOL: f64 = 1e-9;

/// Discrete measure on the half line.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedSample {
    points: Vec<f64>,
    weights: Vec<f64>,
}

impl WeightedSample {
    pub fn new(points: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if points.len() != weights.len() {
            return Err(Error::InvalidArgument(format!(
                "{} points but {} weights",
                points.len(),
                weights.len()
            )));
        }
        if points.iter().any(|p| !(*p >= 0.0) || !p.is_finite()) {
            return Err(Error::InvalidArgument("points must be finite and >= 0".into()));
        }
        if weights.iter().any(|w| !(*w > 0.0) || !w.is_finite()) {
            return Err(Error::InvalidArgument("weights must be finite and > 0".into()));
        }
        Ok(WeightedSample { points, weights })
    }

    /// Every point carries `mass / len`.
    pub fn uniform(points: Vec<f64>, mass: f64) -> Result<Self> {
        let w = mass / points.len().max(1) as f64;
        let n = points.len();
        Self::new(points, vec![w; n])
    }

    pub fn point_mass(at: f64, mass: f64) -> Result<Self> {
        Self::new(vec![at], vec![mass])
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn mean(&self) -> f64 {
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(p, w)| p * w)
            .sum::<f64>()
            / self.mass()
    }

    fn sorted(&self) -> Vec<(f64, f64)> {
        let mut v: Vec<(f64, f64)> = self.points.iter().copied().zip(self.weights.iter().copied()).collect();
        v.sort_by(|a, b| a.0.total_cmp(&b.0));
        v
    }
}

/// `W_1(a, b) = integral of |F_a - F_b|`, exact for discrete measures.
pub fn wasserstein1(a: &WeightedSample, b: &WeightedSample) -> Result<f64> {
    let (ma, mb) = (a.mass(), b.mass());
    if (ma - mb).abs() > MASS_TOL {
        return Err(Error::MassMismatch { left: ma, right: mb });
    }
    let (sa, sb) = (a.sorted(), b.sorted());
    let (mut i, mut j) = (0, 0);
    let (mut fa, mut fb) = (0.0f64, 0.0f64);
    let mut total = 0.0;
    let mut prev: Option<f64> = None;
    while i < sa.len() || j < sb.len() {
        let x = match (sa.get(i), sb.get(j)) {
            (Some(p), Some(q)) => p.0.min(q.0),
            (Some(p), None) => p.0,
            (None, Some(q)) => q.0,
            (None, None) => unreachable!(),
        };
        if let Some(x0) = prev {
            total += (fa - fb).abs() * (x - x0);
        }
        while i < sa.len() && sa[i].0 == x {
            fa += sa[i].1;
            i += 1;
        }
        while j < sb.len() && sb[j].0 == x {
            fb += sb[j].1;
            j += 1;
        }
        prev = Some(x);
    }
    Ok(total)
}

/// Density values on the cells of a grid: `values[k]` is the density on
/// `[edges[k], edges[k + 1]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GriddedDensity {
    pub edges: Vec<f64>,
    pub values: Vec<f64>,
}

impl GriddedDensity {
    pub fn new(edges: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if edges.len() < 2 || values.len() + 1 != edges.len() {
            return Err(Error::InvalidArgument("need len(values) + 1 = len(edges) >= 2".into()));
        }
        if edges.windows(2).any(|w| !(w[1] > w[0])) || edges[0] < 0.0 {
            return Err(Error::InvalidArgument("edges must be >= 0 and increasing".into()));
        }
        if values.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(Error::InvalidArgument("density values must be finite and >= 0".into()));
        }
        Ok(GriddedDensity { edges, values })
    }

    /// Samples `f` at cell midpoints.
    pub fn from_fn(edges: Vec<f64>, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = edges.windows(2).map(|w| f(0.5 * (w[0] + w[1]))).collect();
        Self::new(edges, values)
    }

    pub fn mass(&self) -> f64 {
        self.cell_masses().iter().sum()
    }

    fn cell_masses(&self) -> Vec<f64> {
        self.values
            .iter()
            .zip(self.edges.windows(2))
            .map(|(v, w)| v * (w[1] - w[0]))
            .collect()
    }

    /// Midpoint atoms carrying the cell masses; empty cells are dropped.
    pub fn to_measure(&self) -> Result<WeightedSample> {
        let (points, weights): (Vec<f64>, Vec<f64>) = self
            .cell_masses()
            .into_iter()
            .zip(self.edges.windows(2))
            .filter(|(m, _)| *m > 0.0)
            .map(|(m, w)| (0.5 * (w[0] + w[1]), m))
            .unzip();
        WeightedSample::new(points, weights)
    }
}

/// W1 between a gridded density and a sample. The density must carry the
/// sample's mass within `1e-6`; it is then rescaled to match exactly.
pub fn density_vs_samples_w1(density: &GriddedDensity, samples: &WeightedSample) -> Result<f64> {
    let (md, ms) = (density.mass(), samples.mass());
    if (md - ms).abs() > 1e-6 {
        return Err(Error::MassMismatch { left: md, right: ms });
    }
    let measure = density.to_measure()?;
    let scale = ms / md;
    let rescaled = WeightedSample::new(
        measure.points,
        measure.weights.iter().map(|w| w * scale).collect(),
    )?;
    wasserstein1(&rescaled, samples)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eq(points: &[f64]) -> WeightedSample {
        WeightedSample::uniform(points.to_vec(), 1.0).unwrap()
    }

    #[test]
    fn identical_is_zero() {
        let a = eq(&[0.3, 1.0, 2.5, 2.5]);
        assert_eq!(wasserstein1(&a, &a).unwrap(), 0.0);
    }

    #[test]
    fn translation() {
        let a = eq(&[0.5, 1.0, 4.0]);
        let b = eq(&[2.5, 3.0, 6.0]);
        assert!((wasserstein1(&a, &b).unwrap() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn two_point_by_hand() {
        let a = WeightedSample::new(vec![0.0, 1.0], vec![0.5, 0.5]).unwrap();
        let b = WeightedSample::point_mass(1.0, 1.0).unwrap();
        assert!((wasserstein1(&a, &b).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn mass_mismatch() {
        let a = WeightedSample::point_mass(1.0, 1.0).unwrap();
        let b = WeightedSample::point_mass(1.0, 0.9).unwrap();
        assert!(matches!(wasserstein1(&a, &b), Err(Error::MassMismatch { .. })));
    }

    #[test]
    fn bad_samples_rejected() {
        assert!(WeightedSample::new(vec![1.0], vec![]).is_err());
        assert!(WeightedSample::new(vec![-1.0], vec![1.0]).is_err());
        assert!(WeightedSample::new(vec![1.0], vec![0.0]).is_err());
    }

    #[test]
    fn point_mass_density() {
        let d = GriddedDensity::new(vec![1.0, 3.0], vec![0.5]).unwrap();
        let s = WeightedSample::point_mass(2.0, 1.0).unwrap();
        assert_eq!(density_vs_samples_w1(&d, &s).unwrap(), 0.0);
    }

    #[test]
    fn density_mass_checked() {
        let d = GriddedDensity::new(vec![0.0, 1.0], vec![0.5]).unwrap();
        let s = WeightedSample::point_mass(0.5, 1.0).unwrap();
        assert!(density_vs_samples_w1(&d, &s).is_err());
    }

    #[test]
    fn uniform_density_vs_uniform_samples() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let samples: Vec<f64> = (0..100_000).map(|_| rng.random::<f64>()).collect();
        let edges: Vec<f64> = (0..=1000).map(|k| k as f64 / 1000.0).collect();
        let d = GriddedDensity::from_fn(edges, |_| 1.0).unwrap();
        let w = density_vs_samples_w1(&d, &WeightedSample::uniform(samples, 1.0).unwrap()).unwrap();
        assert!(w <= 0.01, "{w}");
    }
}
