//! Mean one-step dynamics and the exact expected trajectory.
//!
//! Taking expectations of the random update gives the linear recursion
//! `x(t+1) = Q̄ x(t) + R̄ zs` with `Q̄ = I - L/(2α)` (L the Laplacian-style
//! block over regular agents, including stubborn degree) and `R̄ = M̃/(2α)`
//! (M̃ the regular-to-stubborn weight block).
//!
//! Under the two-community structure Q̄ has only three distinct eigenvalues:
//! `1 - λ1` on the consensus direction η, `1 - λ2` on the community-contrast
//! direction ξ, and `1 - λ3` on everything orthogonal to both. The closed
//! form evaluates each mode separately; the λ3 eigenspace is reached through
//! the projector `P = I - ηηᵀ - ξξᵀ` and never given an explicit basis.

use crate::error::Result;
use crate::graph::TwoCommunityGraph;
use crate::sim::validate_initial;
use crate::trajectory::{TrajectoryBundle, TrajectoryKind};

/// Largest regular-agent count for which Q̄ is materialised densely.
pub const DENSE_LIMIT: usize = 2000;

#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    pub rows: usize,
    pub cols: usize,
    /// Row-major.
    pub data: Vec<f64>,
}

impl DenseMatrix {
    pub fn from_fn(rows: usize, cols: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        DenseMatrix { rows, cols, data }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.cols);
        (0..self.rows).map(|i| dot(self.row(i), v)).collect()
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[derive(Debug, Clone)]
pub struct MeanDynamics {
    regular: usize,
    inv_two_alpha: f64,
    ls: f64,
    ld: f64,
    degree: f64,
    /// `Q̄`, only when `regular <= DENSE_LIMIT`.
    pub qbar: Option<DenseMatrix>,
    /// `M̃`, regular x stubborn.
    pub mtilde: DenseMatrix,
    /// `R̄ = M̃ / (2α)`.
    pub rbar: DenseMatrix,
}

impl MeanDynamics {
    pub fn new(graph: &TwoCommunityGraph) -> Self {
        let regular = graph.regular_count();
        let stubborn = graph.stubborn_count();
        let inv_two_alpha = 1.0 / (2.0 * graph.alpha());
        let degree = graph.regular_degree();
        let mtilde = DenseMatrix::from_fn(regular, stubborn, |i, j| graph.stubborn_weight(i, j));
        let rbar = DenseMatrix {
            data: mtilde.data.iter().map(|a| a * inv_two_alpha).collect(),
            ..mtilde.clone()
        };
        let qbar = (regular <= DENSE_LIMIT).then(|| {
            DenseMatrix::from_fn(regular, regular, |i, j| {
                if i == j {
                    1.0 - degree * inv_two_alpha
                } else {
                    graph.weight(i, j) * inv_two_alpha
                }
            })
        });
        MeanDynamics {
            regular,
            inv_two_alpha,
            ls: graph.ls(),
            ld: graph.ld(),
            degree,
            qbar,
            mtilde,
            rbar,
        }
    }

    pub fn regular_count(&self) -> usize {
        self.regular
    }

    pub fn stubborn_count(&self) -> usize {
        self.mtilde.cols
    }

    /// `Q̄ x` from the block structure in O(r): each row sees `ls` on its own
    /// community, `ld` on the other, and the common degree on the diagonal.
    pub fn apply_qbar(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; x.len()];
        self.apply_qbar_into(x, &mut y);
        y
    }

    pub fn apply_qbar_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.regular);
        let half = self.regular / 2;
        let s1: f64 = x[..half].iter().sum();
        let s2: f64 = x[half..].iter().sum();
        let diag = 1.0 - self.degree * self.inv_two_alpha;
        for (i, (xi, yi)) in x.iter().zip(y.iter_mut()).enumerate() {
            let (own, other) = if i < half { (s1, s2) } else { (s2, s1) };
            let off = self.ls * (own - xi) + self.ld * other;
            *yi = diag * xi + off * self.inv_two_alpha;
        }
    }

    /// `R̄ zs`.
    pub fn rbar_times(&self, zs: &[f64]) -> Vec<f64> {
        if self.rbar.cols == 0 {
            return vec![0.0; self.regular];
        }
        self.rbar.mul_vec(zs)
    }

    /// `max_i |(Q̄ 1 + R̄ 1)_i - 1|`.
    pub fn row_stochastic_residual(&self) -> f64 {
        let q1 = self.apply_qbar(&vec![1.0; self.regular]);
        let r1 = self.rbar_times(&vec![1.0; self.stubborn_count()]);
        q1.iter()
            .zip(&r1)
            .map(|(q, r)| (q + r - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralSummary {
    pub lambda1: f64,
    pub lambda2: f64,
    pub lambda3: f64,
    /// `1 / sqrt(r)` in every entry.
    pub eta: Vec<f64>,
    /// `+1 / sqrt(r)` on community one, `-1 / sqrt(r)` on community two.
    pub xi: Vec<f64>,
}

impl SpectralSummary {
    pub fn new(graph: &TwoCommunityGraph) -> Self {
        let r = graph.regular_count();
        let rf = r as f64;
        let two_alpha = 2.0 * graph.alpha();
        let l_s = graph.l_total();
        let lambda1 = l_s / two_alpha;
        let lambda2 = (graph.ld() * rf + l_s) / two_alpha;
        let lambda3 = ((graph.ls() + graph.ld()) * rf / 2.0 + l_s) / two_alpha;
        let e = 1.0 / rf.sqrt();
        let eta = vec![e; r];
        let xi = (0..r).map(|i| if i < r / 2 { e } else { -e }).collect();
        SpectralSummary {
            lambda1,
            lambda2,
            lambda3,
            eta,
            xi,
        }
    }

    /// `P v = v - (ηᵀv) η - (ξᵀv) ξ`, the projection onto the λ3 eigenspace.
    pub fn project_rest(&self, v: &[f64]) -> Vec<f64> {
        let a = dot(&self.eta, v);
        let b = dot(&self.xi, v);
        v.iter()
            .zip(self.eta.iter().zip(&self.xi))
            .map(|(vi, (e, x))| vi - a * e - b * x)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralProjections {
    pub c_eta_x: f64,
    pub c_xi_x: f64,
    pub zeta1: f64,
    pub zeta2: f64,
}

impl SpectralProjections {
    /// `ηᵀx0`, `ξᵀx0`, and the stubborn pull `ηᵀM̃zs / l_total`,
    /// `ξᵀM̃zs / l_total` (zero when there are no stubborn agents).
    pub fn new(
        summary: &SpectralSummary,
        mtilde: &DenseMatrix,
        x0: &[f64],
        zs: &[f64],
        l_total: f64,
    ) -> Self {
        let (zeta1, zeta2) = if mtilde.cols == 0 || l_total == 0.0 {
            (0.0, 0.0)
        } else {
            let mz = mtilde.mul_vec(zs);
            (
                dot(&summary.eta, &mz) / l_total,
                dot(&summary.xi, &mz) / l_total,
            )
        };
        SpectralProjections {
            c_eta_x: dot(&summary.eta, x0),
            c_xi_x: dot(&summary.xi, x0),
            zeta1,
            zeta2,
        }
    }
}

/// `(1 - λ)^t` without cancellation for tiny λ.
#[inline]
pub fn decay(lambda: f64, t: f64) -> f64 {
    (t * (-lambda).ln_1p()).exp()
}

/// `Σ_{k<t} (1 - λ)^k = [1 - (1 - λ)^t] / λ`, or `t` when λ = 0.
#[inline]
pub fn geometric_sum(lambda: f64, t: f64) -> f64 {
    if lambda == 0.0 {
        t
    } else {
        -(t * (-lambda).ln_1p()).exp_m1() / lambda
    }
}

/// Closed-form expected state, with the mode projections of `x0` and `R̄zs`
/// computed once.
#[derive(Debug, Clone)]
pub struct ClosedForm {
    lambdas: [f64; 3],
    eta: Vec<f64>,
    xi: Vec<f64>,
    c_eta: f64,
    c_xi: f64,
    eta_rz: f64,
    xi_rz: f64,
    rest_x0: Vec<f64>,
    rest_rz: Vec<f64>,
}

impl ClosedForm {
    pub fn new(
        summary: &SpectralSummary,
        projections: &SpectralProjections,
        rbar_zs: &[f64],
        x0: &[f64],
    ) -> Self {
        ClosedForm {
            lambdas: [summary.lambda1, summary.lambda2, summary.lambda3],
            eta: summary.eta.clone(),
            xi: summary.xi.clone(),
            c_eta: projections.c_eta_x,
            c_xi: projections.c_xi_x,
            eta_rz: dot(&summary.eta, rbar_zs),
            xi_rz: dot(&summary.xi, rbar_zs),
            rest_x0: summary.project_rest(x0),
            rest_rz: summary.project_rest(rbar_zs),
        }
    }

    /// Builds everything needed from the graph and the initial data.
    pub fn from_graph(graph: &TwoCommunityGraph, x0: &[f64], zs: &[f64]) -> Result<Self> {
        validate_initial(graph, x0, zs)?;
        let dynamics = MeanDynamics::new(graph);
        let summary = SpectralSummary::new(graph);
        let proj = SpectralProjections::new(&summary, &dynamics.mtilde, x0, zs, graph.l_total());
        Ok(Self::new(&summary, &proj, &dynamics.rbar_times(zs), x0))
    }

    /// `E{X(t)}`.
    pub fn at(&self, t: u64) -> Vec<f64> {
        let t = t as f64;
        let [l1, l2, l3] = self.lambdas;
        let a = decay(l1, t) * self.c_eta + geometric_sum(l1, t) * self.eta_rz;
        let b = decay(l2, t) * self.c_xi + geometric_sum(l2, t) * self.xi_rz;
        let c = decay(l3, t);
        let d = geometric_sum(l3, t);
        (0..self.eta.len())
            .map(|i| a * self.eta[i] + b * self.xi[i] + c * self.rest_x0[i] + d * self.rest_rz[i])
            .collect()
    }

    /// Limit as t → ∞; requires λ1 > 0 (at least one stubborn agent).
    pub fn limit(&self) -> Option<Vec<f64>> {
        let [l1, l2, l3] = self.lambdas;
        (l1 > 0.0).then(|| {
            (0..self.eta.len())
                .map(|i| {
                    self.eta_rz / l1 * self.eta[i]
                        + self.xi_rz / l2 * self.xi[i]
                        + self.rest_rz[i] / l3
                })
                .collect()
        })
    }

    pub fn trajectory(&self, horizon: u64, record_every: u64) -> TrajectoryBundle {
        let mut bundle = TrajectoryBundle::new(TrajectoryKind::ExactExpectation);
        for t in record_schedule(horizon, record_every) {
            bundle.push(t, &self.at(t));
        }
        bundle
    }
}

fn record_schedule(horizon: u64, stride: u64) -> impl Iterator<Item = u64> {
    let stride = stride.max(1);
    (0..=horizon)
        .step_by(stride as usize)
        .chain((!horizon.is_multiple_of(stride)).then_some(horizon))
}

/// Iterates `x(t+1) = Q̄ x(t) + R̄ zs` from `x(0) = x0`, yielding `x(0)`
/// first.
#[derive(Debug, Clone)]
pub struct ExpectedStates<'a> {
    dynamics: &'a MeanDynamics,
    rz: Vec<f64>,
    x: Vec<f64>,
    scratch: Vec<f64>,
    t: u64,
    started: bool,
}

impl<'a> ExpectedStates<'a> {
    pub fn new(dynamics: &'a MeanDynamics, x0: &[f64], zs: &[f64]) -> Self {
        ExpectedStates {
            dynamics,
            rz: dynamics.rbar_times(zs),
            x: x0.to_vec(),
            scratch: vec![0.0; x0.len()],
            t: 0,
            started: false,
        }
    }

    /// Advances and returns the next `(t, x(t))`.
    pub fn advance(&mut self) -> (u64, &[f64]) {
        if self.started {
            self.dynamics.apply_qbar_into(&self.x, &mut self.scratch);
            for (s, r) in self.scratch.iter_mut().zip(&self.rz) {
                *s += r;
            }
            std::mem::swap(&mut self.x, &mut self.scratch);
            self.t += 1;
        }
        self.started = true;
        (self.t, &self.x)
    }
}

/// Exact expected trajectory by step recursion, recorded at `record_every`
/// (plus the horizon).
pub fn expected_state_recursion(
    dynamics: &MeanDynamics,
    x0: &[f64],
    zs: &[f64],
    horizon: u64,
    record_every: u64,
) -> TrajectoryBundle {
    let stride = record_every.max(1);
    let mut bundle = TrajectoryBundle::new(TrajectoryKind::ExactExpectation);
    let mut states = ExpectedStates::new(dynamics, x0, zs);
    loop {
        let (t, x) = states.advance();
        if t % stride == 0 || t == horizon {
            bundle.push(t, x);
        }
        if t >= horizon {
            break;
        }
    }
    bundle
}
