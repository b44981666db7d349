//! Nanbu-Babovski Monte Carlo for simultaneous label switching and wealth
//! exchange, plus the empirical statistics of a population.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fokker_planck::{qinv_exchange_post_states, QuasiInvariantConfig};
use crate::model::{
    exchange_post_states, sample_rescaled, Agent, Label, TradeModelSpec, TransferKernel,
};

/// Initial wealth law of one group of agents.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum InitialWealth {
    Uniform { a: f64, b: f64 },
    Point { c: f64 },
}

impl InitialWealth {
    fn validate(&self) -> Result<()> {
        let ok = match *self {
            InitialWealth::Uniform { a, b } => a >= 0.0 && b >= a && b.is_finite(),
            InitialWealth::Point { c } => c >= 0.0 && c.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("bad initial wealth law {self:?}")))
        }
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            InitialWealth::Uniform { a, b } => a + (b - a) * rng.random::<f64>(),
            InitialWealth::Point { c } => c,
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            InitialWealth::Uniform { a, b } => 0.5 * (a + b),
            InitialWealth::Point { c } => c,
        }
    }
}

/// A fraction `mass` of the agents, all with label `label` (1-based).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InitialGroup {
    pub label: usize,
    pub mass: f64,
    pub wealth: InitialWealth,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Population {
    agents: Vec<Agent>,
    n_labels: usize,
    pub time: f64,
    /// Number of post-interaction wealths clamped to zero so far.
    pub clamped: u64,
    order: Vec<u32>,
    pairs: Vec<(u32, u32)>,
}

impl Population {
    pub fn new(agents: Vec<Agent>, n_labels: usize) -> Result<Self> {
        if agents.len() < 2 {
            return Err(Error::InvalidArgument(format!(
                "population needs at least 2 agents, got {}",
                agents.len()
            )));
        }
        if agents.len() > u32::MAX as usize {
            return Err(Error::InvalidArgument("population too large".into()));
        }
        for a in &agents {
            Label::new(a.label.index(), n_labels)?;
            Agent::new(a.label, a.wealth)?;
        }
        let order = (0..agents.len() as u32).collect();
        Ok(Population {
            agents,
            n_labels,
            time: 0.0,
            clamped: 0,
            order,
            pairs: Vec::new(),
        })
    }

    /// Samples `n_agents` agents; group sizes follow the masses by largest
    /// remainder so the counts always add up to `n_agents`.
    pub fn from_initial<R: Rng + ?Sized>(
        groups: &[InitialGroup],
        n_agents: usize,
        n_labels: usize,
        rng: &mut R,
    ) -> Result<Self> {
        if groups.is_empty() {
            return Err(Error::InvalidArgument("no initial groups".into()));
        }
        let total: f64 = groups.iter().map(|g| g.mass).sum();
        if groups.iter().any(|g| !(g.mass >= 0.0)) || (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!(
                "initial masses must be >= 0 and sum to 1, got {total}"
            )));
        }
        for g in groups {
            Label::new(g.label, n_labels)?;
            g.wealth.validate()?;
        }
        let exact: Vec<f64> = groups.iter().map(|g| g.mass * n_agents as f64).collect();
        let mut counts: Vec<usize> = exact.iter().map(|x| x.floor() as usize).collect();
        let assigned: usize = counts.iter().sum();
        let mut by_remainder: Vec<usize> = (0..groups.len()).collect();
        by_remainder.sort_by(|&a, &b| {
            let ra = exact[a] - exact[a].floor();
            let rb = exact[b] - exact[b].floor();
            rb.total_cmp(&ra).then(a.cmp(&b))
        });
        for &g in by_remainder.iter().take(n_agents.saturating_sub(assigned)) {
            counts[g] += 1;
        }
        let mut agents = Vec::with_capacity(n_agents);
        for (g, &count) in groups.iter().zip(&counts) {
            let label = Label::new(g.label, n_labels)?;
            for _ in 0..count {
                agents.push(Agent {
                    label,
                    wealth: g.wealth.sample(rng),
                });
            }
        }
        Self::new(agents, n_labels)
    }

    pub fn agents(&self) -> &[Agent] {
        &self.agents
    }

    pub fn len(&self) -> usize {
        self.agents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.agents.is_empty()
    }

    pub fn n_labels(&self) -> usize {
        self.n_labels
    }

    pub fn label_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_labels];
        for a in &self.agents {
            counts[a.label.slot()] += 1;
        }
        counts
    }

    pub fn total_wealth(&self) -> f64 {
        self.agents.iter().map(|a| a.wealth).sum()
    }
}

/// How disjoint interacting pairs are drawn each step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pairing {
    /// Draw the number of candidate pairs from `Binomial(N/2, lambda_max dt)`,
    /// pick that many disjoint pairs uniformly, and keep each with
    /// probability `lambda_xy / lambda_max`. Same law as `FullShuffle` at a
    /// cost proportional to the number of interactions.
    #[default]
    Thinned,
    /// Shuffle all agents, pair neighbours, and let each pair interact with
    /// probability `lambda_xy dt`.
    FullShuffle,
}

/// Which wealth update an interacting pair applies.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ExchangeLaw {
    /// The linear exchange rule with fresh noise for each agent.
    #[default]
    Binary,
    /// The rescaled rule of the quasi-invariant regime.
    QuasiInvariant(QuasiInvariantConfig),
    /// Each agent independently samples the mixture
    /// `(1 - eps) delta(v' - v) + eps T_delta`.
    RescaledKernel { epsilon: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepConfig {
    pub dt: f64,
    pub seed: u64,
    #[serde(default)]
    pub law: ExchangeLaw,
    #[serde(default)]
    pub pairing: Pairing,
}

impl StepConfig {
    pub fn new(dt: f64, seed: u64) -> Self {
        StepConfig {
            dt,
            seed,
            law: ExchangeLaw::Binary,
            pairing: Pairing::Thinned,
        }
    }

    pub fn with_law(self, law: ExchangeLaw) -> Self {
        StepConfig { law, ..self }
    }

    pub fn with_pairing(self, pairing: Pairing) -> Self {
        StepConfig { pairing, ..self }
    }

    pub fn validate(&self, spec: &TradeModelSpec) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::InvalidArgument(format!("dt = {} must be positive", self.dt)));
        }
        let limit = spec.frequencies.dt_limit();
        if self.dt > limit {
            return Err(Error::TimeStep { dt: self.dt, limit });
        }
        match self.law {
            ExchangeLaw::Binary => Ok(()),
            ExchangeLaw::QuasiInvariant(q) => q.validate(),
            ExchangeLaw::RescaledKernel { epsilon } => {
                if epsilon > 0.0 && epsilon <= 1.0 {
                    Ok(())
                } else {
                    Err(Error::InvalidArgument(format!("epsilon = {epsilon} outside (0, 1]")))
                }
            }
        }
    }

    /// Generator of replica `replica`; replicas draw from disjoint streams.
    pub fn rng(&self, replica: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(replica);
        rng
    }
}

#[inline]
fn draw_from_row<R: Rng + ?Sized>(row: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut cum = 0.0;
    let mut last = 0;
    for (idx, &p) in row.iter().enumerate() {
        if p > 0.0 {
            cum += p;
            last = idx;
            if u < cum {
                return idx;
            }
        }
    }
    last
}

/// Draws the post-interaction labels `(k, l)` of a pair `(i, j)` holding
/// wealths `(v, w)` by inverse CDF over all `(k, l)`.
pub fn sample_transfer<R: Rng + ?Sized>(
    kernel: &TransferKernel,
    i: Label,
    j: Label,
    v: f64,
    w: f64,
    rng: &mut R,
) -> (Label, Label) {
    let n = kernel.n();
    let mut row = vec![0.0; n * n];
    kernel.fill_row(i, j, v, w, &mut row);
    let idx = draw_from_row(&row, rng);
    (Label::from_slot(idx / n), Label::from_slot(idx % n))
}

fn draw_pairs<R: Rng + ?Sized>(
    pop: &mut Population,
    spec: &TradeModelSpec,
    cfg: &StepConfig,
    rng: &mut R,
) {
    let freq = &spec.frequencies;
    let half = pop.agents.len() / 2;
    pop.pairs.clear();
    match cfg.pairing {
        Pairing::FullShuffle => {
            pop.order.shuffle(rng);
            for c in pop.order[..2 * half].chunks_exact(2) {
                let (a, b) = (c[0], c[1]);
                let rate = freq.rate(pop.agents[a as usize].label, pop.agents[b as usize].label);
                if rng.random::<f64>() < rate * cfg.dt {
                    pop.pairs.push((a, b));
                }
            }
        }
        Pairing::Thinned => {
            let lmax = freq.max();
            let p = (lmax * cfg.dt).min(1.0);
            let k = Binomial::new(half as u64, p)
                .expect("probability checked by the time step constraint")
                .sample(rng) as usize;
            let (chosen, _) = pop.order.partial_shuffle(rng, 2 * k);
            for c in chosen.chunks_exact(2) {
                let (a, b) = (c[0], c[1]);
                let rate = freq.rate(pop.agents[a as usize].label, pop.agents[b as usize].label);
                if rate >= lmax || rng.random::<f64>() * lmax < rate {
                    pop.pairs.push((a, b));
                }
            }
        }
    }
}

/// Advances the population by one time step `cfg.dt`.
pub fn step<R: Rng + ?Sized>(
    pop: &mut Population,
    spec: &TradeModelSpec,
    cfg: &StepConfig,
    rng: &mut R,
) -> Result<()> {
    cfg.validate(spec)?;
    if pop.n_labels != spec.n() {
        return Err(Error::InvalidModel(format!(
            "population has {} labels, model {}",
            pop.n_labels,
            spec.n()
        )));
    }
    draw_pairs(pop, spec, cfg, rng);
    let n = spec.n();
    let mut row = vec![0.0; n * n];
    let rule = &spec.exchange;
    let pairs = std::mem::take(&mut pop.pairs);
    for &(a, b) in &pairs {
        let (a, b) = (a as usize, b as usize);
        let (x, v) = (pop.agents[a].label, pop.agents[a].wealth);
        let (y, w) = (pop.agents[b].label, pop.agents[b].wealth);

        spec.transfers.fill_row(x, y, v, w, &mut row);
        let idx = draw_from_row(&row, rng);
        let (k, l) = (Label::from_slot(idx / n), Label::from_slot(idx % n));

        let (v_post, w_post) = match cfg.law {
            ExchangeLaw::Binary => {
                let eta = rule.noise().sample(rng);
                let eta_star = rule.noise().sample(rng);
                exchange_post_states(x, y, v, w, eta, eta_star, rule)
            }
            ExchangeLaw::QuasiInvariant(q) => {
                let eta = rule.noise().sample(rng);
                let eta_star = rule.noise().sample(rng);
                qinv_exchange_post_states(x, y, v, w, eta, eta_star, rule, &q)
            }
            ExchangeLaw::RescaledKernel { epsilon } => (
                sample_rescaled(rule, epsilon, x, y, v, w, rng),
                sample_rescaled(rule, epsilon, y, x, w, v, rng),
            ),
        };
        pop.agents[a] = Agent {
            label: k,
            wealth: clamp(v_post, &mut pop.clamped),
        };
        pop.agents[b] = Agent {
            label: l,
            wealth: clamp(w_post, &mut pop.clamped),
        };
    }
    pop.pairs = pairs;
    pop.time += cfg.dt;
    Ok(())
}

#[inline]
fn clamp(x: f64, counter: &mut u64) -> f64 {
    if x < 0.0 {
        *counter += 1;
        0.0
    } else {
        x
    }
}

/// Bin edges of a wealth histogram.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramGrid {
    edges: Vec<f64>,
}

impl HistogramGrid {
    pub fn new(edges: Vec<f64>) -> Result<Self> {
        if edges.len() < 2 || edges.iter().any(|e| !e.is_finite()) {
            return Err(Error::InvalidArgument("grid needs >= 2 finite edges".into()));
        }
        if edges.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidArgument("grid edges must be strictly increasing".into()));
        }
        Ok(HistogramGrid { edges })
    }

    pub fn uniform(lo: f64, hi: f64, bins: usize) -> Result<Self> {
        if bins == 0 || !(hi > lo) {
            return Err(Error::InvalidArgument(format!("bad uniform grid [{lo}, {hi}] x {bins}")));
        }
        let h = (hi - lo) / bins as f64;
        let mut edges: Vec<f64> = (0..bins).map(|k| lo + k as f64 * h).collect();
        edges.push(hi);
        Self::new(edges)
    }

    /// `bins` cells over `[0, max(1, 3 m + 10 s)]`, `m` and `s` being the
    /// mean and standard deviation of all wealths.
    pub fn auto(agents: &[Agent], bins: usize) -> Result<Self> {
        if agents.is_empty() {
            return Err(Error::EmptyPopulation);
        }
        let n = agents.len() as f64;
        let mean = agents.iter().map(|a| a.wealth).sum::<f64>() / n;
        let var = agents.iter().map(|a| (a.wealth - mean).powi(2)).sum::<f64>() / n;
        let hi = (3.0 * mean + 10.0 * var.sqrt()).max(1.0);
        Self::uniform(0.0, hi, bins)
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    pub fn bins(&self) -> usize {
        self.edges.len() - 1
    }

    #[inline]
    fn locate(&self, x: f64) -> Option<usize> {
        let e = &self.edges;
        if x < e[0] || x > e[e.len() - 1] {
            return None;
        }
        let pos = e.partition_point(|&edge| edge <= x);
        Some(pos.saturating_sub(1).min(e.len() - 2))
    }
}

/// Which grid [`empirical_stats`] bins the wealths on.
#[derive(Debug, Clone, PartialEq)]
pub enum HistogramSpec {
    Off,
    /// [`HistogramGrid::auto`] with the given bin count, recomputed at
    /// every recording.
    Auto(usize),
    Fixed(HistogramGrid),
}

impl Default for HistogramSpec {
    fn default() -> Self {
        HistogramSpec::Auto(200)
    }
}

/// Per-label density histogram. `density * width` summed over bins plus
/// the two out-of-range masses gives the label mass.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub density: Vec<f64>,
    pub underflow: f64,
    pub overflow: f64,
}

impl Histogram {
    pub fn mass(&self) -> f64 {
        let inner: f64 = self
            .density
            .iter()
            .zip(self.edges.windows(2))
            .map(|(d, e)| d * (e[1] - e[0]))
            .sum();
        inner + self.underflow + self.overflow
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmpiricalStats {
    pub counts: Vec<usize>,
    pub rho: Vec<f64>,
    /// `M_i = (1/N) sum of the wealths of label i`.
    pub moment: Vec<f64>,
    /// `None` when the label is empty.
    pub mean: Vec<Option<f64>>,
    /// Empty when histograms are off.
    pub histograms: Vec<Histogram>,
}

impl EmpiricalStats {
    pub fn n_labels(&self) -> usize {
        self.counts.len()
    }

    pub fn mean_of(&self, label: usize) -> Result<f64> {
        self.mean
            .get(label.wrapping_sub(1))
            .ok_or(Error::InvalidLabel {
                index: label,
                n: self.n_labels(),
            })?
            .ok_or(Error::UndefinedMean(label))
    }
}

pub fn empirical_stats(
    agents: &[Agent],
    n_labels: usize,
    grid: &HistogramSpec,
) -> Result<EmpiricalStats> {
    if agents.is_empty() {
        return Err(Error::EmptyPopulation);
    }
    let total = agents.len() as f64;
    let mut counts = vec![0usize; n_labels];
    let mut sums = vec![0.0; n_labels];
    for a in agents {
        let s = a.label.slot();
        if s >= n_labels {
            return Err(Error::InvalidLabel {
                index: a.label.index(),
                n: n_labels,
            });
        }
        counts[s] += 1;
        sums[s] += a.wealth;
    }
    let rho = counts.iter().map(|&c| c as f64 / total).collect();
    let moment = sums.iter().map(|s| s / total).collect();
    let mean = counts
        .iter()
        .zip(&sums)
        .map(|(&c, s)| if c > 0 { Some(s / c as f64) } else { None })
        .collect();

    let grid = match grid {
        HistogramSpec::Off => None,
        HistogramSpec::Auto(bins) => Some(HistogramGrid::auto(agents, *bins)?),
        HistogramSpec::Fixed(g) => Some(g.clone()),
    };
    let histograms = match grid {
        None => Vec::new(),
        Some(g) => {
            let bins = g.bins();
            let mut hist = vec![vec![0usize; bins + 2]; n_labels];
            for a in agents {
                let slot = match g.locate(a.wealth) {
                    Some(b) => b + 1,
                    None if a.wealth < g.edges[0] => 0,
                    None => bins + 1,
                };
                hist[a.label.slot()][slot] += 1;
            }
            hist.into_iter()
                .map(|h| Histogram {
                    density: (0..bins)
                        .map(|b| h[b + 1] as f64 / (total * (g.edges[b + 1] - g.edges[b])))
                        .collect(),
                    underflow: h[0] as f64 / total,
                    overflow: h[bins + 1] as f64 / total,
                    edges: g.edges.clone(),
                })
                .collect()
        }
    };
    Ok(EmpiricalStats {
        counts,
        rho,
        moment,
        mean,
        histograms,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Record {
    pub t: f64,
    pub clamped: u64,
    pub stats: EmpiricalStats,
}

pub type Trajectory = Vec<Record>;

/// A running replica: model, step settings, population and generator.
#[derive(Debug, Clone)]
pub struct Simulation {
    spec: TradeModelSpec,
    cfg: StepConfig,
    pop: Population,
    rng: ChaCha8Rng,
    steps: u64,
}

impl Simulation {
    pub fn new(spec: TradeModelSpec, cfg: StepConfig, pop: Population, replica: u64) -> Result<Self> {
        cfg.validate(&spec)?;
        if pop.n_labels != spec.n() {
            return Err(Error::InvalidModel(format!(
                "population has {} labels, model {}",
                pop.n_labels,
                spec.n()
            )));
        }
        Ok(Simulation {
            rng: cfg.rng(replica),
            spec,
            cfg,
            pop,
            steps: 0,
        })
    }

    /// Samples the initial population from the replica's own stream.
    pub fn from_initial(
        spec: TradeModelSpec,
        cfg: StepConfig,
        groups: &[InitialGroup],
        n_agents: usize,
        replica: u64,
    ) -> Result<Self> {
        cfg.validate(&spec)?;
        let mut rng = cfg.rng(replica);
        let pop = Population::from_initial(groups, n_agents, spec.n(), &mut rng)?;
        Ok(Simulation {
            rng,
            spec,
            cfg,
            pop,
            steps: 0,
        })
    }

    pub fn step(&mut self) -> Result<()> {
        step(&mut self.pop, &self.spec, &self.cfg, &mut self.rng)?;
        self.steps += 1;
        self.pop.time = self.steps as f64 * self.cfg.dt;
        Ok(())
    }

    pub fn steps_taken(&self) -> u64 {
        self.steps
    }

    pub fn time(&self) -> f64 {
        self.pop.time
    }

    pub fn population(&self) -> &Population {
        &self.pop
    }

    pub fn spec(&self) -> &TradeModelSpec {
        &self.spec
    }

    pub fn config(&self) -> &StepConfig {
        &self.cfg
    }

    pub fn record(&self, grid: &HistogramSpec) -> Result<Record> {
        Ok(Record {
            t: self.pop.time,
            clamped: self.pop.clamped,
            stats: empirical_stats(&self.pop.agents, self.pop.n_labels, grid)?,
        })
    }

    /// Runs to `t_end`, recording every `record_every` (a positive multiple
    /// of `dt`) and at the final step.
    pub fn run(&mut self, t_end: f64, record_every: f64, grid: &HistogramSpec) -> Result<Trajectory> {
        let dt = self.cfg.dt;
        if !(t_end >= 0.0) || !t_end.is_finite() {
            return Err(Error::InvalidArgument(format!("t_end = {t_end} must be >= 0")));
        }
        let stride = (record_every / dt).round();
        if !(stride >= 1.0) || (stride * dt - record_every).abs() > 1e-9 * record_every {
            return Err(Error::InvalidArgument(format!(
                "record_every = {record_every} is not a positive multiple of dt = {dt}"
            )));
        }
        let stride = stride as u64;
        let total = (t_end / dt - 1e-9).ceil().max(0.0) as u64;
        let mut out = vec![self.record(grid)?];
        for s in 1..=total {
            self.step()?;
            if s % stride == 0 || s == total {
                out.push(self.record(grid)?);
            }
        }
        Ok(out)
    }
}

/// Runs one replica (stream 0) from a given population.
pub fn simulate(
    pop0: Population,
    spec: &TradeModelSpec,
    cfg: &StepConfig,
    t_end: f64,
    record_every: f64,
    grid: &HistogramSpec,
) -> Result<Trajectory> {
    Simulation::new(spec.clone(), *cfg, pop0, 0)?.run(t_end, record_every, grid)
}

/// Runs independent replicas in parallel; replica `r` samples its initial
/// population and its dynamics from stream `r`.
#[allow(clippy::too_many_arguments)]
pub fn simulate_replicas(
    groups: &[InitialGroup],
    n_agents: usize,
    spec: &TradeModelSpec,
    cfg: &StepConfig,
    replicas: usize,
    t_end: f64,
    record_every: f64,
    grid: &HistogramSpec,
) -> Result<Vec<Trajectory>> {
    (0..replicas as u64)
        .into_par_iter()
        .map(|r| {
            Simulation::from_initial(spec.clone(), *cfg, groups, n_agents, r)?
                .run(t_end, record_every, grid)
        })
        .collect()
}

/// Replica mean and standard deviation of the label statistics at one
/// recording instant.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BandPoint {
    pub t: f64,
    pub rho_mean: Vec<f64>,
    pub rho_std: Vec<f64>,
    pub m_mean: Vec<f64>,
    pub m_std: Vec<f64>,
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Pointwise band over replicas that share recording times. Empty labels
/// are left out of the mean-wealth band.
pub fn replica_band(runs: &[Trajectory]) -> Result<Vec<BandPoint>> {
    let first = runs.first().ok_or(Error::InvalidArgument("no replicas".into()))?;
    if runs.iter().any(|r| r.len() != first.len()) {
        return Err(Error::InvalidArgument("replicas recorded at different times".into()));
    }
    let n = first.first().map_or(0, |r| r.stats.n_labels());
    Ok((0..first.len())
        .map(|k| {
            let mut point = BandPoint {
                t: first[k].t,
                rho_mean: Vec::with_capacity(n),
                rho_std: Vec::with_capacity(n),
                m_mean: Vec::with_capacity(n),
                m_std: Vec::with_capacity(n),
            };
            for i in 0..n {
                let rho: Vec<f64> = runs.iter().map(|r| r[k].stats.rho[i]).collect();
                let m: Vec<f64> = runs.iter().filter_map(|r| r[k].stats.mean[i]).collect();
                let (a, b) = mean_std(&rho);
                let (c, d) = mean_std(&m);
                point.rho_mean.push(a);
                point.rho_std.push(b);
                point.m_mean.push(c);
                point.m_std.push(d);
            }
            point
        })
        .collect())
}
