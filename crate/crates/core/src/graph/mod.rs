//! The two-community weighted complete graph and its edge-selection law.
//!
//! Agents are indexed from 0: the first `r/2` regular agents form community
//! one, the next `r/2` community two, and the remaining `s` agents are
//! stubborn. Regular pairs in the same community carry weight `ls`, regular
//! pairs across communities carry `ld`, and each regular agent is joined to
//! the stubborn agents by a row of weights that sums to the same total
//! `l_total` for every regular agent. Stubborn agents are not joined to each
//! other.
//!
//! The adjacency matrix is never stored densely; `weight(i, j)` is computed
//! from community labels and the regular-to-stubborn block.

mod alias;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use alias::AliasTable;

/// Absolute tolerance for the equal-row-sum constraint on stubborn weights.
pub const ROW_SUM_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum StubbornWeights {
    /// Every regular agent spreads `l_total` evenly over all stubborn agents.
    Uniform { l_total: f64 },
    /// Row `i` holds the weights from regular agent `i` to each stubborn agent.
    Explicit(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphParams {
    pub n: usize,
    /// Fraction of regular agents, in (0, 1].
    pub r0: f64,
    pub ls: f64,
    pub ld: f64,
    pub stubborn: StubbornWeights,
    /// Bound on the magnitude of every initial and stubborn state.
    pub cx: f64,
}

impl GraphParams {
    pub fn uniform(n: usize, r0: f64, ls: f64, ld: f64, l_total: f64, cx: f64) -> Self {
        GraphParams {
            n,
            r0,
            ls,
            ld,
            stubborn: StubbornWeights::Uniform { l_total },
            cx,
        }
    }

    /// Number of regular agents `r0 * n`, which must be a positive even integer.
    pub fn regular_count(&self) -> Result<usize> {
        if self.n < 2 {
            return Err(Error::InvalidParams(format!(
                "n = {} must be at least 2",
                self.n
            )));
        }
        if !(self.r0 > 0.0 && self.r0 <= 1.0) {
            return Err(Error::InvalidParams(format!(
                "r0 = {} must lie in (0, 1]",
                self.r0
            )));
        }
        let raw = self.r0 * self.n as f64;
        let rounded = raw.round();
        if (raw - rounded).abs() > 1e-9 {
            return Err(Error::InvalidParams(format!(
                "r0 * n = {raw} is not an integer"
            )));
        }
        let r = rounded as usize;
        if r == 0 || !r.is_multiple_of(2) {
            return Err(Error::InvalidParams(format!(
                "r0 * n = {r} must be a positive even integer"
            )));
        }
        Ok(r)
    }
}

/// Returns the common regular-to-stubborn row sum `l_total`.
///
/// Uniform weights return their total directly. Explicit matrices must have
/// one row per regular agent and one column per stubborn agent, nonnegative
/// entries, and all row sums within [`ROW_SUM_TOL`] of the first row's sum.
pub fn verify_stubborn_row_sums(params: &GraphParams) -> Result<f64> {
    let r = params.regular_count()?;
    let s = params.n - r;
    match &params.stubborn {
        StubbornWeights::Uniform { l_total } => {
            if !l_total.is_finite() || *l_total < 0.0 {
                return Err(Error::InvalidParams(format!(
                    "stubborn total weight {l_total} must be finite and nonnegative"
                )));
            }
            if s > 0 && *l_total <= 0.0 {
                return Err(Error::InvalidParams(
                    "stubborn total weight must be positive when stubborn agents exist".into(),
                ));
            }
            if s == 0 && *l_total != 0.0 {
                return Err(Error::InvalidParams(format!(
                    "stubborn total weight {l_total} given but there are no stubborn agents"
                )));
            }
            Ok(*l_total)
        }
        StubbornWeights::Explicit(rows) => {
            if rows.len() != r {
                return Err(Error::DimensionMismatch {
                    what: "stubborn weight rows",
                    expected: r,
                    actual: rows.len(),
                });
            }
            let mut expected = None;
            for (i, row) in rows.iter().enumerate() {
                if row.len() != s {
                    return Err(Error::DimensionMismatch {
                        what: "stubborn weight columns",
                        expected: s,
                        actual: row.len(),
                    });
                }
                if let Some(bad) = row.iter().find(|w| !w.is_finite() || **w < 0.0) {
                    return Err(Error::InvalidParams(format!(
                        "stubborn weight {bad} in row {} is negative or not finite",
                        i + 1
                    )));
                }
                let sum: f64 = row.iter().sum();
                match expected {
                    None => expected = Some(sum),
                    Some(e) if (sum - e).abs() > ROW_SUM_TOL => {
                        return Err(Error::RowSumMismatch {
                            row: i + 1,
                            expected: e,
                            actual: sum,
                        });
                    }
                    Some(_) => {}
                }
            }
            let total = expected.unwrap_or(0.0);
            if s > 0 && total <= 0.0 {
                return Err(Error::InvalidParams(
                    "stubborn row sums must be positive when stubborn agents exist".into(),
                ));
            }
            Ok(total)
        }
    }
}

/// Total edge weight for uniform stubborn weights in closed form:
/// `r [(ls + ld) r + 4 l_total - 2 ls] / 4` with `r` regular agents.
pub fn uniform_alpha_closed_form(regular: usize, ls: f64, ld: f64, l_total: f64) -> f64 {
    let r = regular as f64;
    r * ((ls + ld) * r + 4.0 * l_total - 2.0 * ls) / 4.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Community {
    One,
    Two,
    Stubborn,
}

#[derive(Debug, Clone)]
enum StubbornBlock {
    Uniform(f64),
    /// Row-major, `regular x stubborn`.
    Explicit(Vec<f64>),
}

#[derive(Debug, Clone)]
pub struct TwoCommunityGraph {
    params: GraphParams,
    regular: usize,
    stubborn: usize,
    l_total: f64,
    block: StubbornBlock,
    alpha: f64,
}

impl TwoCommunityGraph {
    pub fn new(params: GraphParams) -> Result<Self> {
        let regular = params.regular_count()?;
        for (name, w) in [("ls", params.ls), ("ld", params.ld)] {
            if !(w > 0.0 && w < 1.0) {
                return Err(Error::InvalidParams(format!(
                    "{name} = {w} must lie in (0, 1)"
                )));
            }
        }
        if !(params.cx > 0.0 && params.cx.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "cx = {} must be positive",
                params.cx
            )));
        }
        let l_total = verify_stubborn_row_sums(&params)?;
        let stubborn = params.n - regular;
        let block = match &params.stubborn {
            StubbornWeights::Uniform { l_total } => StubbornBlock::Uniform(if stubborn == 0 {
                0.0
            } else {
                l_total / stubborn as f64
            }),
            StubbornWeights::Explicit(rows) => {
                StubbornBlock::Explicit(rows.iter().flatten().copied().collect())
            }
        };
        let mut graph = TwoCommunityGraph {
            params,
            regular,
            stubborn,
            l_total,
            block,
            alpha: 0.0,
        };
        graph.alpha = graph.pairwise_weight_sum();
        Ok(graph)
    }

    fn pairwise_weight_sum(&self) -> f64 {
        // Neumaier summation keeps the result within a few ulps of the exact sum.
        let mut sum = 0.0f64;
        let mut comp = 0.0f64;
        for i in 0..self.params.n {
            for j in (i + 1)..self.params.n {
                let w = self.weight(i, j);
                let t = sum + w;
                if sum.abs() >= w.abs() {
                    comp += (sum - t) + w;
                } else {
                    comp += (w - t) + sum;
                }
                sum = t;
            }
        }
        sum + comp
    }

    pub fn params(&self) -> &GraphParams {
        &self.params
    }

    pub fn n(&self) -> usize {
        self.params.n
    }

    pub fn regular_count(&self) -> usize {
        self.regular
    }

    /// Size of each of the two communities.
    pub fn community_size(&self) -> usize {
        self.regular / 2
    }

    pub fn stubborn_count(&self) -> usize {
        self.stubborn
    }

    pub fn ls(&self) -> f64 {
        self.params.ls
    }

    pub fn ld(&self) -> f64 {
        self.params.ld
    }

    pub fn cx(&self) -> f64 {
        self.params.cx
    }

    /// Common sum of regular-to-stubborn weights over each regular agent's row.
    pub fn l_total(&self) -> f64 {
        self.l_total
    }

    /// Total edge weight.
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn community_of(&self, i: usize) -> Community {
        assert!(i < self.params.n, "agent {i} out of range");
        if i < self.regular / 2 {
            Community::One
        } else if i < self.regular {
            Community::Two
        } else {
            Community::Stubborn
        }
    }

    pub fn is_regular(&self, i: usize) -> bool {
        i < self.regular
    }

    /// Weight between regular agent `i` and stubborn agent `j` (both 0-based
    /// within their own group).
    pub fn stubborn_weight(&self, i: usize, j: usize) -> f64 {
        debug_assert!(i < self.regular && j < self.stubborn);
        match &self.block {
            StubbornBlock::Uniform(w) => *w,
            StubbornBlock::Explicit(m) => m[i * self.stubborn + j],
        }
    }

    /// Adjacency weight `a(i, j)` for global agent indices.
    pub fn weight(&self, i: usize, j: usize) -> f64 {
        if i == j {
            return 0.0;
        }
        let (lo, hi) = if i < j { (i, j) } else { (j, i) };
        match (self.community_of(lo), self.community_of(hi)) {
            (Community::Stubborn, _) => 0.0,
            (_, Community::Stubborn) => self.stubborn_weight(lo, hi - self.regular),
            (a, b) if a == b => self.params.ls,
            _ => self.params.ld,
        }
    }

    /// Weighted degree of a regular agent. All regular agents share it.
    pub fn regular_degree(&self) -> f64 {
        let m = self.community_size() as f64;
        self.params.ls * (m - 1.0) + self.params.ld * m + self.l_total
    }

    /// `M̃ z`: the regular-to-stubborn weight block applied to stubborn states.
    pub fn stubborn_block_times(&self, zs: &[f64]) -> Vec<f64> {
        assert_eq!(zs.len(), self.stubborn);
        match &self.block {
            StubbornBlock::Uniform(w) => {
                let s: f64 = zs.iter().sum();
                vec![w * s; self.regular]
            }
            StubbornBlock::Explicit(m) => (0..self.regular)
                .map(|i| {
                    m[i * self.stubborn..(i + 1) * self.stubborn]
                        .iter()
                        .zip(zs)
                        .map(|(a, z)| a * z)
                        .sum()
                })
                .collect(),
        }
    }

    pub fn interaction_distribution(&self) -> InteractionDistribution {
        InteractionDistribution::new(self)
    }
}

/// Edge-selection law: edge `{i, j}` is drawn with probability `a(i, j) / alpha`.
#[derive(Debug, Clone)]
pub struct InteractionDistribution {
    edges: Vec<(u32, u32)>,
    probs: Vec<f64>,
    table: AliasTable,
}

impl InteractionDistribution {
    pub fn new(graph: &TwoCommunityGraph) -> Self {
        let n = graph.n();
        let alpha = graph.alpha();
        let mut edges = Vec::new();
        let mut probs = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                let w = graph.weight(i, j);
                if w > 0.0 {
                    edges.push((i as u32, j as u32));
                    probs.push(w / alpha);
                }
            }
        }
        let table = AliasTable::new(&probs);
        InteractionDistribution {
            edges,
            probs,
            table,
        }
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn edges(&self) -> &[(u32, u32)] {
        &self.edges
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probs
    }

    /// Probability of edge `{i, j}`; zero for pairs that are not edges.
    pub fn probability(&self, i: usize, j: usize) -> f64 {
        let key = if i < j {
            (i as u32, j as u32)
        } else {
            (j as u32, i as u32)
        };
        self.edges
            .binary_search(&key)
            .map(|k| self.probs[k])
            .unwrap_or(0.0)
    }

    pub fn sample_index<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        self.table.sample(rng)
    }

    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (usize, usize) {
        let (i, j) = self.edges[self.table.sample(rng)];
        (i as usize, j as usize)
    }
}
