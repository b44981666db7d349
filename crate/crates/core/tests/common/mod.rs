#![allow(dead_code)]

/// Minimal transport cost between two equal-size point sets with uniform
/// weights, by exhaustive assignment over subsets.
pub fn assignment_w1(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len();
    assert_eq!(n, b.len());
    assert!(n <= 16);
    let full = 1usize << n;
    let mut best = vec![f64::INFINITY; full];
    best[0] = 0.0;
    for mask in 0..full {
        let i = mask.count_ones() as usize;
        if i == n || best[mask].is_infinite() {
            continue;
        }
        for j in 0..n {
            if mask & (1 << j) == 0 {
                let next = mask | (1 << j);
                let cost = best[mask] + (a[i] - b[j]).abs();
                if cost < best[next] {
                    best[next] = cost;
                }
            }
        }
    }
    best[full - 1] / n as f64
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn adapt(
    f: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    adapt(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + adapt(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// Adaptive Simpson quadrature on `[a, b]`.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
    let whole = simpson(a, b, fa, fm, fb);
    adapt(&f, a, b, fa, fm, fb, whole, tol, 40)
}

/// Integral over `(0, inf)` through `v = s / (1 - s)`, split into pieces
/// so the peak is resolved before the adaptive refinement starts.
pub fn integrate_half_line(f: impl Fn(f64) -> f64, tol: f64) -> f64 {
    let g = |s: f64| {
        if s <= 0.0 || s >= 1.0 {
            return 0.0;
        }
        let v = s / (1.0 - s);
        f(v) / ((1.0 - s) * (1.0 - s))
    };
    let pieces = 64;
    (0..pieces)
        .map(|k| {
            let a = k as f64 / pieces as f64;
            let b = (k + 1) as f64 / pieces as f64;
            integrate(g, a, b, tol / pieces as f64)
        })
        .sum()
}

/// Least-squares slope of `ln f` against `ln v` on log-spaced points.
pub fn loglog_slope(f: impl Fn(f64) -> f64, lo: f64, hi: f64, points: usize) -> f64 {
    let xs: Vec<f64> = (0..points)
        .map(|k| lo.ln() + (hi.ln() - lo.ln()) * k as f64 / (points - 1) as f64)
        .collect();
    let ys: Vec<f64> = xs.iter().map(|&x| f(x.exp()).ln()).collect();
    let n = points as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

/// Inverse-gamma draw with the given shape and scale.
pub fn inverse_gamma<R: rand::Rng>(shape: f64, scale: f64, rng: &mut R) -> f64 {
    use rand_distr::{Distribution, Gamma};
    scale / Gamma::new(shape, 1.0).unwrap().sample(rng)
}

pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

use kinswitch::model::{FrequencyMatrix, NoiseSpec, TransferKernel, TransferTable};
use kinswitch::nanbu::{ExchangeLaw, InitialGroup, InitialWealth, Simulation, StepConfig};
use kinswitch::{ExchangeRule, TradeModelSpec};

pub fn transfer_free_spec(omega: [f64; 2], zeta: f64) -> TradeModelSpec {
    let freq = FrequencyMatrix::new(&[vec![1.0, 2.0], vec![2.0, 0.5]]).unwrap();
    let rule = ExchangeRule::with_uniform_zeta(omega.to_vec(), zeta, NoiseSpec::uniform()).unwrap();
    TradeModelSpec::new(freq, TransferKernel::Constant(TransferTable::identity(2).unwrap()), rule).unwrap()
}

pub fn poor_rich() -> Vec<InitialGroup> {
    vec![
        InitialGroup {
            label: 1,
            mass: 0.9,
            wealth: InitialWealth::Uniform { a: 0.0, b: 1.0 },
        },
        InitialGroup {
            label: 2,
            mass: 0.1,
            wealth: InitialWealth::Uniform { a: 5.0, b: 15.0 },
        },
    ]
}

/// Per-replica first and second wealth moments (per agent) at
/// `checkpoints` equally spaced steps of `stride` steps each.
pub fn moment_paths(
    spec: &TradeModelSpec,
    law: ExchangeLaw,
    n_agents: usize,
    replicas: u64,
    checkpoints: usize,
    stride: usize,
    seed: u64,
) -> Vec<Vec<[f64; 2]>> {
    let cfg = StepConfig::new(0.05, seed).with_law(law);
    (0..replicas)
        .map(|r| {
            let mut sim = Simulation::from_initial(spec.clone(), cfg, &poor_rich(), n_agents, r).unwrap();
            (0..checkpoints)
                .map(|_| {
                    for _ in 0..stride {
                        sim.step().unwrap();
                    }
                    let agents = sim.population().agents();
                    let n = agents.len() as f64;
                    [
                        agents.iter().map(|a| a.wealth).sum::<f64>() / n,
                        agents.iter().map(|a| a.wealth * a.wealth).sum::<f64>() / n,
                    ]
                })
                .collect()
        })
        .collect()
}

/// Largest standardized gap between the two laws' replica means over
/// every checkpoint and both moments.
pub fn worst_moment_gap(a: &[Vec<[f64; 2]>], b: &[Vec<[f64; 2]>]) -> f64 {
    let mut worst: f64 = 0.0;
    for k in 0..a[0].len() {
        for m in 0..2 {
            let xa: Vec<f64> = a.iter().map(|r| r[k][m]).collect();
            let xb: Vec<f64> = b.iter().map(|r| r[k][m]).collect();
            let (ma, sa) = mean_se(&xa);
            let (mb, sb) = mean_se(&xb);
            worst = worst.max((ma - mb).abs() / (sa * sa + sb * sb).sqrt());
        }
    }
    worst
}
