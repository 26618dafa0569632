//! Cross-checks against independent oracles: dense linear algebra, sampling
//! frequencies, and brute-force scans of the exact recursion.

use gossip_transient::graph::StubbornWeights;
use gossip_transient::sim::{stream_rng, GossipState};
use gossip_transient::spectral::{expected_state_recursion, ClosedForm, MeanDynamics};
use gossip_transient::theory::{
    check_sign_agreement, check_sign_theorem, empirical_sign_window, scaling_regime, sign_window,
    stubborn_monotonicity_scan, StubbornConvention,
};
use gossip_transient::{GraphParams, SpectralProjections, SpectralSummary, TwoCommunityGraph};
use nalgebra::{DMatrix, DVector};
use rand::Rng;

fn desk() -> TwoCommunityGraph {
    TwoCommunityGraph::new(GraphParams::uniform(10, 0.8, 0.5, 0.1, 0.2, 1.0)).unwrap()
}

fn scaled(n: usize, betas: [f64; 3]) -> TwoCommunityGraph {
    TwoCommunityGraph::new(scaling_regime(n, 0.9, 1.0, betas, StubbornConvention::PerEdge).unwrap())
        .unwrap()
}

fn random_state(g: &TwoCommunityGraph, seed: u64) -> (Vec<f64>, Vec<f64>) {
    let mut rng = stream_rng(seed, 0);
    let x0 = (0..g.regular_count())
        .map(|_| rng.random_range(-1.0..1.0))
        .collect();
    let zs = (0..g.stubborn_count())
        .map(|_| rng.random_range(-1.0..1.0))
        .collect();
    (x0, zs)
}

fn qbar_matrix(g: &TwoCommunityGraph) -> DMatrix<f64> {
    let q = MeanDynamics::new(g).qbar.unwrap();
    DMatrix::from_fn(q.rows, q.cols, |i, j| q.get(i, j))
}

#[test]
fn spectrum_matches_symmetric_eigensolver() {
    for g in [
        desk(),
        scaled(100, [3.0, 1.0, 1.0]),
        scaled(100, [1.0, 3.0, 1.0]),
    ] {
        let q = qbar_matrix(&g);
        assert!((&q - q.transpose()).amax() < 1e-15);
        let mut eig: Vec<f64> = q
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .map(|v| 1.0 - v)
            .collect();
        eig.sort_by(f64::total_cmp);
        let s = SpectralSummary::new(&g);
        let r = g.regular_count();
        let mut want = vec![s.lambda1, s.lambda2];
        want.extend(std::iter::repeat_n(s.lambda3, r - 2));
        want.sort_by(f64::total_cmp);
        assert_eq!(eig.len(), want.len());
        for (a, b) in eig.iter().zip(&want) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }
}

#[test]
fn closed_form_limit_solves_fixed_point_equation() {
    for g in [desk(), scaled(100, [3.0, 1.0, 1.0])] {
        let (x0, zs) = random_state(&g, 3);
        let q = qbar_matrix(&g);
        let rhs = DVector::from_vec(MeanDynamics::new(&g).rbar_times(&zs));
        let lhs = DMatrix::identity(q.nrows(), q.ncols()) - q;
        let solved = lhs.lu().solve(&rhs).unwrap();
        let limit = ClosedForm::from_graph(&g, &x0, &zs)
            .unwrap()
            .limit()
            .unwrap();
        for (a, b) in limit.iter().zip(solved.iter()) {
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
    }
}

#[test]
fn closed_form_matches_recursion_on_small_graphs() {
    let explicit = {
        let mut p = GraphParams::uniform(10, 0.8, 0.6, 0.2, 0.0, 1.0);
        p.stubborn = StubbornWeights::Explicit(vec![
            vec![0.3, 0.1],
            vec![0.2, 0.2],
            vec![0.0, 0.4],
            vec![0.1, 0.3],
            vec![0.25, 0.15],
            vec![0.4, 0.0],
            vec![0.2, 0.2],
            vec![0.05, 0.35],
        ]);
        TwoCommunityGraph::new(p).unwrap()
    };
    let none = TwoCommunityGraph::new(GraphParams::uniform(8, 1.0, 0.4, 0.3, 0.0, 1.0)).unwrap();
    for (k, g) in [desk(), explicit, none].into_iter().enumerate() {
        let (x0, zs) = random_state(&g, 10 + k as u64);
        let rec = expected_state_recursion(&MeanDynamics::new(&g), &x0, &zs, 400, 1);
        let cf = ClosedForm::from_graph(&g, &x0, &zs).unwrap();
        for (t, x) in rec.iter() {
            for (a, b) in x.iter().zip(cf.at(t)) {
                assert!((a - b).abs() < 1e-12, "graph {k}, t = {t}");
            }
        }
    }
}

#[test]
fn sampler_frequencies_match_edge_weights() {
    let g = desk();
    let dist = g.interaction_distribution();
    let mut counts = vec![0u64; dist.len()];
    let mut rng = stream_rng(99, 0);
    let draws = 1_000_000u64;
    for _ in 0..draws {
        counts[dist.sample_index(&mut rng)] += 1;
    }
    for ((&(i, j), &p), &c) in dist.edges().iter().zip(dist.probabilities()).zip(&counts) {
        let (i, j) = (i as usize, j as usize);
        assert!((p - g.weight(i, j) / g.alpha()).abs() < 1e-15);
        let expected = draws as f64 * p;
        let sigma = (draws as f64 * p * (1.0 - p)).sqrt();
        assert!(
            (c as f64 - expected).abs() <= 5.0 * sigma,
            "edge ({i}, {j}): {c} draws, expected {expected:.0} +- {sigma:.0}"
        );
    }
    assert!((dist.probabilities().iter().sum::<f64>() - 1.0).abs() < 1e-12);
}

#[test]
fn one_step_average_matches_mean_dynamics() {
    let g = desk();
    let (x0, zs) = random_state(&g, 5);
    let dist = g.interaction_distribution();
    let dynamics = MeanDynamics::new(&g);
    let rz = dynamics.rbar_times(&zs);
    let want: Vec<f64> = dynamics
        .apply_qbar(&x0)
        .iter()
        .zip(&rz)
        .map(|(a, b)| a + b)
        .collect();
    let draws = 100_000;
    let r = g.regular_count();
    let (mut sum, mut sq) = (vec![0.0; r], vec![0.0; r]);
    let mut rng = stream_rng(6, 0);
    for _ in 0..draws {
        let mut s = GossipState::new(x0.clone(), zs.clone());
        s.step(dist.sample(&mut rng));
        for k in 0..r {
            sum[k] += s.x[k];
            sq[k] += s.x[k] * s.x[k];
        }
    }
    let m = draws as f64;
    for k in 0..r {
        let mean = sum[k] / m;
        let var = (sq[k] / m - mean * mean) * m / (m - 1.0);
        let se = (var / m).sqrt();
        assert!(
            (mean - want[k]).abs() <= 5.0 * se,
            "agent {k}: {mean} vs {}",
            want[k]
        );
    }
}

fn window_for(g: &TwoCommunityGraph, x0: &[f64], zs: &[f64]) -> gossip_transient::SignWindow {
    let s = SpectralSummary::new(g);
    let d = MeanDynamics::new(g);
    let p = SpectralProjections::new(&s, &d.mtilde, x0, zs, g.l_total());
    sign_window(&s, &p, g).unwrap()
}

/// Scans signs directly from the recursion without going through the
/// report machinery.
fn brute_force_disagreements(
    g: &TwoCommunityGraph,
    x0: &[f64],
    zs: &[f64],
    lo: u64,
    hi: u64,
    predicted: &[i8],
) -> usize {
    let rec = expected_state_recursion(&MeanDynamics::new(g), x0, zs, hi, 1);
    rec.iter()
        .filter(|(t, _)| *t >= lo && *t <= hi)
        .map(|(_, x)| {
            x.iter()
                .zip(predicted)
                .filter(|(v, p)| v.abs() < 1e-12 || (v.signum() as i8) != **p)
                .count()
        })
        .sum()
}

#[test]
fn desk_sign_window_agrees_with_brute_force_scan() {
    let g = desk();
    let x0 = [1.0, 1.0, 1.0, 1.0, -1.0, -1.0, -1.0, -1.0];
    let zs = [0.0, 0.0];
    let w = window_for(&g, &x0, &zs);
    let s = SpectralSummary::new(&g);
    let d = MeanDynamics::new(&g);
    let p = SpectralProjections::new(&s, &d.mtilde, &x0, &zs, g.l_total());
    // The community-antisymmetric start lies on the second mode only.
    assert!(p.c_eta_x.abs() < 1e-15);
    assert!((p.c_xi_x - 8f64.sqrt()).abs() < 1e-12);
    assert_eq!(
        w.t_lower,
        (15.0 * 8f64.sqrt() / 8f64.sqrt()).ln() / ((1.0 - s.lambda2) / (1.0 - s.lambda3)).ln()
    );
    assert_eq!(w.predicted_sign, vec![1, 1, 1, 1, -1, -1, -1, -1]);
    // With zs = 0 and no first-mode component, the recursion keeps the
    // predicted signs from the very first step on.
    let horizon = 2000;
    let rec = expected_state_recursion(&d, &x0, &zs, horizon, 1);
    let empirical = empirical_sign_window(&w.predicted_sign, &rec).unwrap();
    assert_eq!(empirical.0, 0);
    if w.nonempty {
        let hi = w.t_upper.min(horizon as f64);
        let r = check_sign_agreement(&w.predicted_sign, &rec, w.t_lower, hi).unwrap();
        assert!(r.pass());
        let (lo, hi) = gossip_transient::theory::open_integer_range(w.t_lower, hi).unwrap();
        assert_eq!(
            brute_force_disagreements(&g, &x0, &zs, lo, hi, &w.predicted_sign),
            0
        );
    }
}

#[test]
fn nonempty_windows_agree_with_brute_force_scan() {
    let mut nonempty = 0;
    for n in [100usize, 200, 300] {
        let g = scaled(n, [3.0, 1.0, 1.0]);
        for seed in 0..4 {
            let (mut x0, zs) = random_state(&g, 100 * n as u64 + seed);
            let half = g.community_size();
            for v in &mut x0[..half] {
                *v = v.abs();
            }
            for v in &mut x0[half..] {
                *v = -v.abs();
            }
            let w = window_for(&g, &x0, &zs);
            if !w.nonempty {
                continue;
            }
            nonempty += 1;
            let hi = w.t_upper.floor() as u64 + 1;
            let rec = expected_state_recursion(&MeanDynamics::new(&g), &x0, &zs, hi, 1);
            let report = check_sign_theorem(&w, &rec).unwrap();
            assert!(report.pass(), "n = {n}, seed = {seed}: {report:?}");
            let (lo, hi) =
                gossip_transient::theory::open_integer_range(w.t_lower, w.t_upper).unwrap();
            assert_eq!(
                brute_force_disagreements(&g, &x0, &zs, lo, hi, &w.predicted_sign),
                0
            );
        }
    }
    assert!(nonempty > 0, "no configuration produced a nonempty window");
}

#[test]
fn stubborn_monotonicity_scan_reports_on_grid() {
    let base = scaling_regime(100, 0.9, 1.0, [3.0, 1.0, 1.0], StubbornConvention::PerEdge).unwrap();
    let g = TwoCommunityGraph::new(base.clone()).unwrap();
    let (x0, zs) = random_state(&g, 21);
    let grid: Vec<f64> = (1..=40).map(|k| 0.05 * k as f64).collect();
    let violations = stubborn_monotonicity_scan(&base, &x0, &zs, &grid).unwrap();
    for v in &violations {
        assert!(v.term == 1 || v.term == 2);
        assert!(v.after > v.before && v.l_total_after > v.l_total_before);
    }
    println!(
        "monotonicity scan: {} violations over {} grid points",
        violations.len(),
        grid.len()
    );
}
