//! The stochastic gossip process and Monte Carlo estimation of its mean.
//!
//! Each tick draws one edge from the interaction distribution; the regular
//! endpoints of the edge move to the midpoint of the two current states and
//! stubborn endpoints stay put.
//!
//! Randomness comes from ChaCha8 keyed by `(seed, stream)`: a run with seed
//! `s` uses stream 0, and Monte Carlo replicate `r` uses stream `r`. Every
//! replicate is therefore reproducible on its own, and results do not depend
//! on how replicates are scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::{InteractionDistribution, TwoCommunityGraph};
use crate::trajectory::{TrajectoryBundle, TrajectoryKind};

/// Replicates handled sequentially by one parallel task. Fixed so the
/// reduction order, and hence every bit of the output, is independent of
/// the thread count.
const MC_CHUNK: usize = 16;

/// RNG for stream `stream` under `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone, PartialEq)]
pub struct GossipState {
    /// Regular agents.
    pub x: Vec<f64>,
    /// Stubborn agents; never modified.
    pub zs: Vec<f64>,
    pub t: u64,
}

impl GossipState {
    pub fn new(x: Vec<f64>, zs: Vec<f64>) -> Self {
        GossipState { x, zs, t: 0 }
    }

    /// State of global agent `k` (regular agents first).
    pub fn value(&self, k: usize) -> f64 {
        if k < self.x.len() {
            self.x[k]
        } else {
            self.zs[k - self.x.len()]
        }
    }

    /// One gossip update on edge `{i, j}` (global indices).
    #[inline]
    pub fn step(&mut self, (i, j): (usize, usize)) {
        let r = self.x.len();
        let mid = 0.5 * (self.value(i) + self.value(j));
        if i < r {
            self.x[i] = mid;
        }
        if j < r {
            self.x[j] = mid;
        }
        self.t += 1;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunConfig {
    pub horizon: u64,
    pub record_every: u64,
    pub seed: u64,
    pub replicates: usize,
}

impl RunConfig {
    pub fn new(horizon: u64, seed: u64) -> Self {
        RunConfig {
            horizon,
            record_every: Self::default_stride(horizon),
            seed,
            replicates: 1,
        }
    }

    pub fn with_replicates(mut self, replicates: usize) -> Self {
        self.replicates = replicates;
        self
    }

    pub fn with_record_every(mut self, record_every: u64) -> Self {
        self.record_every = record_every;
        self
    }

    /// `max(1, horizon / 2000)`.
    pub fn default_stride(horizon: u64) -> u64 {
        (horizon / 2000).max(1)
    }

    pub fn validate(&self) -> Result<()> {
        if self.record_every == 0 {
            return Err(Error::InvalidRun("record_every must be positive".into()));
        }
        if self.record_every > self.horizon.max(1) {
            return Err(Error::InvalidRun(format!(
                "record_every = {} exceeds horizon = {}",
                self.record_every, self.horizon
            )));
        }
        if self.replicates == 0 {
            return Err(Error::InvalidRun("replicates must be positive".into()));
        }
        Ok(())
    }

    /// Recorded times: multiples of the stride, plus the horizon itself.
    pub fn record_times(&self) -> Vec<u64> {
        let mut times: Vec<u64> = (0..=self.horizon)
            .step_by(self.record_every as usize)
            .collect();
        if times.last() != Some(&self.horizon) {
            times.push(self.horizon);
        }
        times
    }
}

/// Checks that `x0` and `zs` match the graph and respect the state bound.
pub fn validate_initial(graph: &TwoCommunityGraph, x0: &[f64], zs: &[f64]) -> Result<()> {
    if x0.len() != graph.regular_count() {
        return Err(Error::DimensionMismatch {
            what: "initial regular states",
            expected: graph.regular_count(),
            actual: x0.len(),
        });
    }
    if zs.len() != graph.stubborn_count() {
        return Err(Error::DimensionMismatch {
            what: "stubborn states",
            expected: graph.stubborn_count(),
            actual: zs.len(),
        });
    }
    let cx = graph.cx();
    for (what, v) in [("x0", x0), ("zs", zs)] {
        if let Some((index, &value)) = v
            .iter()
            .enumerate()
            .find(|(_, v)| v.is_nan() || v.abs() > cx)
        {
            return Err(Error::OutOfBounds {
                what,
                index,
                value,
                bound: cx,
            });
        }
    }
    Ok(())
}

/// Shares a graph and its edge sampler across runs.
#[derive(Debug, Clone)]
pub struct Simulator<'g> {
    graph: &'g TwoCommunityGraph,
    dist: InteractionDistribution,
}

impl<'g> Simulator<'g> {
    pub fn new(graph: &'g TwoCommunityGraph) -> Self {
        Simulator {
            graph,
            dist: graph.interaction_distribution(),
        }
    }

    pub fn graph(&self) -> &TwoCommunityGraph {
        self.graph
    }

    pub fn distribution(&self) -> &InteractionDistribution {
        &self.dist
    }

    /// One realisation of the process with RNG stream 0.
    pub fn run(&self, x0: &[f64], zs: &[f64], cfg: &RunConfig) -> Result<TrajectoryBundle> {
        validate_initial(self.graph, x0, zs)?;
        cfg.validate()?;
        let mut bundle = TrajectoryBundle::new(TrajectoryKind::SingleRun);
        self.simulate_stream(x0, zs, cfg, 0, |t, x| bundle.push(t, x));
        bundle.meta.seed = Some(cfg.seed);
        bundle.meta.replicates = Some(1);
        Ok(bundle)
    }

    /// Runs stream `stream` and hands each recorded state to `record`.
    pub fn simulate_stream(
        &self,
        x0: &[f64],
        zs: &[f64],
        cfg: &RunConfig,
        stream: u64,
        mut record: impl FnMut(u64, &[f64]),
    ) {
        let mut rng = stream_rng(cfg.seed, stream);
        let mut state = GossipState::new(x0.to_vec(), zs.to_vec());
        record(0, &state.x);
        let stride = cfg.record_every;
        while state.t < cfg.horizon {
            state.step(self.dist.sample(&mut rng));
            if state.t.is_multiple_of(stride) || state.t == cfg.horizon {
                record(state.t, &state.x);
            }
        }
    }

    /// Sample mean over `cfg.replicates` independent runs, with per-entry
    /// standard error `sd / sqrt(M)` in `meta.stderr`. With a single
    /// replicate the standard error is undefined and reported as NaN.
    pub fn monte_carlo_mean(
        &self,
        x0: &[f64],
        zs: &[f64],
        cfg: &RunConfig,
    ) -> Result<TrajectoryBundle> {
        validate_initial(self.graph, x0, zs)?;
        cfg.validate()?;
        let times = cfg.record_times();
        let width = x0.len();
        let m = cfg.replicates;
        let chunks: Vec<Moments> = (0..m.div_ceil(MC_CHUNK))
            .into_par_iter()
            .map(|c| {
                let mut acc = Moments::new(times.len() * width);
                let hi = ((c + 1) * MC_CHUNK).min(m);
                let mut run = vec![0.0; times.len() * width];
                for r in c * MC_CHUNK..hi {
                    let mut k = 0;
                    self.simulate_stream(x0, zs, cfg, r as u64, |_, x| {
                        run[k * width..(k + 1) * width].copy_from_slice(x);
                        k += 1;
                    });
                    acc.add(&run);
                }
                acc
            })
            .collect();
        let mut total = Moments::new(times.len() * width);
        for c in &chunks {
            total.merge(c);
        }

        let mut bundle = TrajectoryBundle::new(TrajectoryKind::McMean);
        let mut stderr = Vec::with_capacity(times.len());
        let scale = if m > 1 {
            1.0 / ((m - 1) as f64 * m as f64)
        } else {
            f64::NAN
        };
        for (k, &t) in times.iter().enumerate() {
            let range = k * width..(k + 1) * width;
            bundle.push(t, &total.mean[range.clone()]);
            stderr.push(total.m2[range].iter().map(|v| (v * scale).sqrt()).collect());
        }
        bundle.meta.seed = Some(cfg.seed);
        bundle.meta.replicates = Some(m);
        bundle.meta.stderr = Some(stderr);
        Ok(bundle)
    }
}

/// Running mean and sum of squared deviations (Welford / Chan et al.).
#[derive(Debug, Clone)]
struct Moments {
    count: usize,
    mean: Vec<f64>,
    m2: Vec<f64>,
}

impl Moments {
    fn new(len: usize) -> Self {
        Moments {
            count: 0,
            mean: vec![0.0; len],
            m2: vec![0.0; len],
        }
    }

    fn add(&mut self, sample: &[f64]) {
        self.count += 1;
        let n = self.count as f64;
        for ((mean, m2), &x) in self.mean.iter_mut().zip(&mut self.m2).zip(sample) {
            let delta = x - *mean;
            *mean += delta / n;
            *m2 += delta * (x - *mean);
        }
    }

    fn merge(&mut self, other: &Moments) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = other.clone();
            return;
        }
        let na = self.count as f64;
        let nb = other.count as f64;
        let n = na + nb;
        for k in 0..self.mean.len() {
            let delta = other.mean[k] - self.mean[k];
            self.mean[k] += delta * nb / n;
            self.m2[k] += other.m2[k] + delta * delta * na * nb / n;
        }
        self.count += other.count;
    }
}
