//! Transient sign window and consensus envelopes, plus checks of both
//! against exact expected trajectories.
//!
//! All logarithms are natural. Window endpoints are real numbers; checks run
//! over the integers strictly inside them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{GraphParams, StubbornWeights, TwoCommunityGraph};
use crate::spectral::{SpectralProjections, SpectralSummary};
use crate::trajectory::TrajectoryBundle;

/// Expected states with magnitude below this are reported as indeterminate.
pub const SIGN_EPS: f64 = 1e-12;

/// Slack allowed when comparing a deviation against its envelope.
pub const BOUND_TOL: f64 = 1e-10;

/// `(n, round(n ln n))`, the transient interval used at desk scale.
pub fn transient_interval(n: usize) -> (u64, u64) {
    let nf = n as f64;
    (n as u64, (nf * nf.ln()).round() as u64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SignWindow {
    pub t_lower: f64,
    pub t_upper: f64,
    /// Candidate upper endpoints: consensus drift, ζ1 pull, ζ2 pull, and the
    /// stubborn-weight term. The upper endpoint is their minimum.
    pub terms: [f64; 4],
    pub nonempty: bool,
    /// Predicted sign of each regular agent's expected state: `sgn(c_ξ ξ_i)`.
    pub predicted_sign: Vec<i8>,
}

fn sgn(v: f64) -> i8 {
    if v > 0.0 {
        1
    } else if v < 0.0 {
        -1
    } else {
        0
    }
}

/// `ln(num / den) / scale`, with a zero denominator read as +∞.
fn log_ratio_term(num: f64, den: f64, scale: f64) -> f64 {
    if den == 0.0 {
        f64::INFINITY
    } else {
        (num / den).ln() / scale
    }
}

/// Evaluates the sign window for a graph with stronger intra-community
/// weights (`ls > ld`).
pub fn sign_window(
    summary: &SpectralSummary,
    proj: &SpectralProjections,
    graph: &TwoCommunityGraph,
) -> Result<SignWindow> {
    if graph.ls() <= graph.ld() {
        return Err(Error::Precondition(format!(
            "sign window needs ls > ld (ls = {}, ld = {})",
            graph.ls(),
            graph.ld()
        )));
    }
    let (l1, l2, l3) = (summary.lambda1, summary.lambda2, summary.lambda3);
    let r = graph.regular_count() as f64;
    let cx = graph.cx();
    let l_s = graph.l_total();
    let cxi = proj.c_xi_x.abs();
    let inv_decay2 = -(-l2).ln_1p();

    let t_lower = if cxi == 0.0 {
        f64::INFINITY
    } else {
        (15.0 * cx * r.sqrt() / cxi).ln() / ((1.0 - l2) / (1.0 - l3)).ln()
    };
    let terms = [
        log_ratio_term(
            cxi,
            5.0 * proj.c_eta_x.abs(),
            ((1.0 - l1) / (1.0 - l2)).ln(),
        ),
        log_ratio_term(cxi, 5.0 * proj.zeta1.abs(), inv_decay2),
        {
            let den = 5.0 * l_s * proj.zeta2.abs();
            if den == 0.0 {
                f64::INFINITY
            } else {
                ((graph.ld() * r + l_s) * cxi / den + 1.0).ln() / inv_decay2
            }
        },
        log_ratio_term(
            (0.5 * (graph.ls() + graph.ld()) * r + l_s) * cxi,
            15.0 * l_s * cx * r.sqrt(),
            inv_decay2,
        ),
    ];
    let t_upper = terms
        .iter()
        .copied()
        .fold(f64::INFINITY, |a, b| if b.is_nan() { a } else { a.min(b) });
    let predicted_sign = summary.xi.iter().map(|xi| sgn(proj.c_xi_x * xi)).collect();
    Ok(SignWindow {
        t_lower,
        t_upper,
        terms,
        nonempty: cxi != 0.0 && t_lower < t_upper,
        predicted_sign,
    })
}

/// First and last integer strictly inside `(lower, upper)`, if any.
pub fn open_integer_range(lower: f64, upper: f64) -> Option<(u64, u64)> {
    let first = if lower < 0.0 {
        0.0
    } else {
        lower.floor() + 1.0
    };
    let last = upper.ceil() - 1.0;
    if first.is_nan() || last.is_nan() || first > last || last < 0.0 {
        return None;
    }
    Some((first as u64, last as u64))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignRow {
    pub t: u64,
    pub agree: usize,
    pub disagree: usize,
    pub indeterminate: usize,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SignReport {
    /// Inclusive integer range checked, `None` for an empty window.
    pub checked: Option<(u64, u64)>,
    pub rows: Vec<SignRow>,
    pub agree: usize,
    pub disagree: usize,
    pub indeterminate: usize,
}

impl SignReport {
    /// Every checked entry agrees and none is indeterminate.
    pub fn pass(&self) -> bool {
        self.disagree == 0 && self.indeterminate == 0
    }

    pub fn checked_points(&self) -> usize {
        self.agree + self.disagree + self.indeterminate
    }
}

/// Compares `sgn(x_i(t))` with `predicted` for every integer `t` strictly
/// inside `(lower, upper)`. The trajectory must contain every such `t`.
pub fn check_sign_agreement(
    predicted: &[i8],
    traj: &TrajectoryBundle,
    lower: f64,
    upper: f64,
) -> Result<SignReport> {
    let Some((first, last)) = open_integer_range(lower, upper) else {
        return Ok(SignReport::default());
    };
    if traj.width() != predicted.len() {
        return Err(Error::DimensionMismatch {
            what: "trajectory width",
            expected: predicted.len(),
            actual: traj.width(),
        });
    }
    let available = traj.last_time().unwrap_or(0);
    let mut report = SignReport {
        checked: Some((first, last)),
        ..SignReport::default()
    };
    for t in first..=last {
        let x = traj.at(t).ok_or(Error::Coverage {
            needed: t,
            available,
        })?;
        let mut row = SignRow {
            t,
            agree: 0,
            disagree: 0,
            indeterminate: 0,
        };
        for (v, &p) in x.iter().zip(predicted) {
            if v.abs() < SIGN_EPS {
                row.indeterminate += 1;
            } else if sgn(*v) == p {
                row.agree += 1;
            } else {
                row.disagree += 1;
            }
        }
        report.agree += row.agree;
        report.disagree += row.disagree;
        report.indeterminate += row.indeterminate;
        report.rows.push(row);
    }
    Ok(report)
}

/// Checks the sign window against an exact trajectory. An empty window
/// passes vacuously with nothing checked.
pub fn check_sign_theorem(window: &SignWindow, traj: &TrajectoryBundle) -> Result<SignReport> {
    if !window.nonempty {
        return Ok(SignReport::default());
    }
    if window.t_upper.is_infinite() {
        return Err(Error::Coverage {
            needed: u64::MAX,
            available: traj.last_time().unwrap_or(0),
        });
    }
    check_sign_agreement(&window.predicted_sign, traj, window.t_lower, window.t_upper)
}

/// Longest run of consecutive recorded times on which every agent's sign
/// matches `predicted`. Returns the inclusive `(first, last)` times.
pub fn empirical_sign_window(predicted: &[i8], traj: &TrajectoryBundle) -> Option<(u64, u64)> {
    let mut best: Option<(u64, u64)> = None;
    let mut current: Option<(u64, u64)> = None;
    let mut prev_t = None;
    for (t, x) in traj.iter() {
        let ok = x
            .iter()
            .zip(predicted)
            .all(|(v, &p)| v.abs() >= SIGN_EPS && sgn(*v) == p);
        let contiguous = prev_t.is_some_and(|p: u64| p + 1 == t);
        current = match (ok, current) {
            (true, Some((a, _))) if contiguous => Some((a, t)),
            (true, _) => Some((t, t)),
            (false, _) => None,
        };
        if let Some((a, b)) = current {
            if best.is_none_or(|(ba, bb)| b - a > bb - ba) {
                best = Some((a, b));
            }
        }
        prev_t = Some(t);
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundMode {
    /// Deviation from the agent's own community average (`ls > ld`).
    Local,
    /// Deviation from the average over all regular agents (`ls <= ld`).
    Global,
}

impl BoundMode {
    pub fn as_str(self) -> &'static str {
        match self {
            BoundMode::Local => "local",
            BoundMode::Global => "global",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConsensusBound {
    pub mode: BoundMode,
    /// Target value per regular agent.
    pub reference: Vec<f64>,
    lambdas: [f64; 3],
    cx: f64,
}

impl ConsensusBound {
    pub fn local(graph: &TwoCommunityGraph, summary: &SpectralSummary, x0: &[f64]) -> Result<Self> {
        if graph.ls() <= graph.ld() {
            return Err(Error::Precondition(format!(
                "local consensus bound needs ls > ld (ls = {}, ld = {})",
                graph.ls(),
                graph.ld()
            )));
        }
        let half = graph.community_size();
        check_width(graph, x0)?;
        let m1 = x0[..half].iter().sum::<f64>() / half as f64;
        let m2 = x0[half..].iter().sum::<f64>() / half as f64;
        let reference = (0..x0.len())
            .map(|i| if i < half { m1 } else { m2 })
            .collect();
        Ok(Self::build(BoundMode::Local, reference, graph, summary))
    }

    pub fn global(
        graph: &TwoCommunityGraph,
        summary: &SpectralSummary,
        x0: &[f64],
    ) -> Result<Self> {
        if graph.ls() > graph.ld() {
            return Err(Error::Precondition(format!(
                "global consensus bound needs ls <= ld (ls = {}, ld = {})",
                graph.ls(),
                graph.ld()
            )));
        }
        check_width(graph, x0)?;
        let mean = x0.iter().sum::<f64>() / x0.len() as f64;
        Ok(Self::build(
            BoundMode::Global,
            vec![mean; x0.len()],
            graph,
            summary,
        ))
    }

    fn build(
        mode: BoundMode,
        reference: Vec<f64>,
        graph: &TwoCommunityGraph,
        summary: &SpectralSummary,
    ) -> Self {
        ConsensusBound {
            mode,
            reference,
            lambdas: [summary.lambda1, summary.lambda2, summary.lambda3],
            cx: graph.cx(),
        }
    }

    /// Envelope on `|E{X_i(t)} - reference_i|`.
    pub fn bound_at(&self, t: u64) -> f64 {
        let [l1, l2, l3] = self.lambdas;
        let t = t as f64;
        let tail = (1.0 - l3).powf(t);
        match self.mode {
            BoundMode::Local => ((4.0 * l1 + l2) * t + tail) * self.cx,
            BoundMode::Global => (4.0 * l1 * t + 2.0 * tail) * self.cx,
        }
    }
}

fn check_width(graph: &TwoCommunityGraph, x0: &[f64]) -> Result<()> {
    if x0.len() != graph.regular_count() {
        return Err(Error::DimensionMismatch {
            what: "initial regular states",
            expected: graph.regular_count(),
            actual: x0.len(),
        });
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundRow {
    pub t: u64,
    pub max_deviation: f64,
    pub envelope: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub mode: BoundMode,
    pub rows: Vec<BoundRow>,
    /// Number of (t, agent) entries exceeding the envelope.
    pub violations: usize,
    /// Smallest `envelope - deviation` seen over all entries.
    pub min_slack: f64,
    /// Largest `envelope - deviation` among the per-time worst agents.
    pub max_slack: f64,
}

impl BoundReport {
    pub fn pass(&self) -> bool {
        self.violations == 0
    }
}

fn bound_check(bound: &ConsensusBound, traj: &TrajectoryBundle) -> Result<BoundReport> {
    if traj.width() != bound.reference.len() {
        return Err(Error::DimensionMismatch {
            what: "trajectory width",
            expected: bound.reference.len(),
            actual: traj.width(),
        });
    }
    let mut report = BoundReport {
        mode: bound.mode,
        rows: Vec::with_capacity(traj.len()),
        violations: 0,
        min_slack: f64::INFINITY,
        max_slack: f64::NEG_INFINITY,
    };
    for (t, x) in traj.iter() {
        let envelope = bound.bound_at(t);
        let mut worst = 0.0f64;
        for (v, r) in x.iter().zip(&bound.reference) {
            let dev = (v - r).abs();
            if dev > envelope + BOUND_TOL {
                report.violations += 1;
            }
            worst = worst.max(dev);
        }
        let slack = envelope - worst;
        report.min_slack = report.min_slack.min(slack);
        report.max_slack = report.max_slack.max(slack);
        report.rows.push(BoundRow {
            t,
            max_deviation: worst,
            envelope,
            pass: worst <= envelope + BOUND_TOL,
        });
    }
    Ok(report)
}

/// Checks the local envelope at every recorded time of `traj`.
pub fn local_bound_check(bound: &ConsensusBound, traj: &TrajectoryBundle) -> Result<BoundReport> {
    if bound.mode != BoundMode::Local {
        return Err(Error::ModeMismatch {
            expected: "local",
            actual: bound.mode.as_str(),
        });
    }
    bound_check(bound, traj)
}

/// Checks the global envelope at every recorded time of `traj`.
pub fn global_bound_check(bound: &ConsensusBound, traj: &TrajectoryBundle) -> Result<BoundReport> {
    if bound.mode != BoundMode::Global {
        return Err(Error::ModeMismatch {
            expected: "global",
            actual: bound.mode.as_str(),
        });
    }
    bound_check(bound, traj)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StubbornConvention {
    /// Each regular-stubborn edge has weight `(ln n)^β3 / n`.
    PerEdge,
    /// Each regular agent's stubborn weights sum to `(ln n)^β3`.
    RowSum,
}

/// Graph parameters for the log-power scaling family:
/// `ls = (ln n)^β1 / n`, `ld = (ln n)^β2 / n`, stubborn weight from `β3`
/// under `convention`.
pub fn scaling_regime(
    n: usize,
    r0: f64,
    cx: f64,
    betas: [f64; 3],
    convention: StubbornConvention,
) -> Result<GraphParams> {
    let nf = n as f64;
    let ln = nf.ln();
    let [b1, b2, b3] = betas;
    let probe = GraphParams::uniform(n, r0, 0.5, 0.5, 0.0, cx);
    let stubborn = n - probe.regular_count()?;
    let l_total = if stubborn == 0 {
        0.0
    } else {
        match convention {
            StubbornConvention::PerEdge => stubborn as f64 * ln.powf(b3) / nf,
            StubbornConvention::RowSum => ln.powf(b3),
        }
    };
    let params = GraphParams {
        n,
        r0,
        ls: ln.powf(b1) / nf,
        ld: ln.powf(b2) / nf,
        stubborn: StubbornWeights::Uniform { l_total },
        cx,
    };
    TwoCommunityGraph::new(params.clone())?;
    Ok(params)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonotonicityViolation {
    /// Index into `terms` (1 = ζ1 term, 2 = ζ2 term).
    pub term: usize,
    pub l_total_before: f64,
    pub l_total_after: f64,
    pub before: f64,
    pub after: f64,
}

/// Sweeps the stubborn total weight over `grid` (ascending) with everything
/// else fixed and reports every step where a ζ-dependent upper-endpoint
/// term increases.
pub fn stubborn_monotonicity_scan(
    base: &GraphParams,
    x0: &[f64],
    zs: &[f64],
    grid: &[f64],
) -> Result<Vec<MonotonicityViolation>> {
    let mut prev: Option<(f64, [f64; 4])> = None;
    let mut violations = Vec::new();
    for &l_total in grid {
        let params = GraphParams {
            stubborn: StubbornWeights::Uniform { l_total },
            ..base.clone()
        };
        let graph = TwoCommunityGraph::new(params)?;
        let summary = SpectralSummary::new(&graph);
        let dynamics = crate::spectral::MeanDynamics::new(&graph);
        let proj = SpectralProjections::new(&summary, &dynamics.mtilde, x0, zs, graph.l_total());
        let window = sign_window(&summary, &proj, &graph)?;
        if let Some((before_l, before)) = prev {
            for term in [1, 2] {
                let (a, b) = (before[term], window.terms[term]);
                if a.is_finite() && b.is_finite() && b > a {
                    violations.push(MonotonicityViolation {
                        term,
                        l_total_before: before_l,
                        l_total_after: l_total,
                        before: a,
                        after: b,
                    });
                }
            }
        }
        prev = Some((l_total, window.terms));
    }
    Ok(violations)
}
