use gossip_transient::graph::uniform_alpha_closed_form;
use gossip_transient::sim::{stream_rng, GossipState};
use gossip_transient::spectral::MeanDynamics;
use gossip_transient::theory::{BoundMode, ConsensusBound};
use gossip_transient::{GraphParams, RunConfig, Simulator, SpectralSummary, TwoCommunityGraph};
use proptest::prelude::*;

fn graph_strategy() -> impl Strategy<Value = (TwoCommunityGraph, Vec<f64>, Vec<f64>)> {
    (
        1usize..12,
        0usize..6,
        0.01f64..0.99,
        0.01f64..0.99,
        0.05f64..3.0,
    )
        .prop_flat_map(|(half, stubborn, ls, ld, l)| {
            let n = 2 * half + stubborn;
            let r0 = (2 * half) as f64 / n as f64;
            let l_total = if stubborn == 0 { 0.0 } else { l };
            let g =
                TwoCommunityGraph::new(GraphParams::uniform(n, r0, ls, ld, l_total, 1.0)).unwrap();
            let x0 = proptest::collection::vec(-1.0f64..=1.0, 2 * half);
            let zs = proptest::collection::vec(-1.0f64..=1.0, stubborn);
            (Just(g), x0, zs)
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn weights_are_symmetric_and_alpha_matches((g, _x0, _zs) in graph_strategy()) {
        let n = g.n();
        let mut total = 0.0;
        for i in 0..n {
            prop_assert_eq!(g.weight(i, i), 0.0);
            for j in (i + 1)..n {
                prop_assert_eq!(g.weight(i, j), g.weight(j, i));
                total += g.weight(i, j);
            }
        }
        prop_assert!((total - g.alpha()).abs() <= 1e-12 * g.alpha());
        let closed = uniform_alpha_closed_form(g.regular_count(), g.ls(), g.ld(), g.l_total());
        prop_assert!((closed - g.alpha()).abs() <= 1e-12 * g.alpha());
    }

    #[test]
    fn mean_dynamics_rows_sum_to_one((g, _x0, _zs) in graph_strategy()) {
        prop_assert!(MeanDynamics::new(&g).row_stochastic_residual() < 1e-12);
    }

    #[test]
    fn simulation_respects_invariants((g, x0, zs) in graph_strategy(), seed in any::<u64>()) {
        let dist = g.interaction_distribution();
        let r = g.regular_count();
        let mut rng = stream_rng(seed, 0);
        let mut s = GossipState::new(x0, zs);
        for _ in 0..300 {
            let before = s.x.clone();
            let (i, j) = dist.sample(&mut rng);
            s.step((i, j));
            prop_assert!(s.x.iter().all(|v| v.abs() <= 1.0));
            prop_assert!(before.iter().zip(&s.x).filter(|(a, b)| a != b).count() <= 2);
            if i < r && j < r {
                let sum_before: f64 = before.iter().sum();
                let sum_after: f64 = s.x.iter().sum();
                prop_assert!((sum_before - sum_after).abs() <= 1e-12);
                let max = |v: &[f64]| v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let min = |v: &[f64]| v.iter().cloned().fold(f64::INFINITY, f64::min);
                prop_assert!(max(&s.x) <= max(&before));
                prop_assert!(min(&s.x) >= min(&before));
            }
        }
    }

    #[test]
    fn runs_are_reproducible((g, x0, zs) in graph_strategy(), seed in any::<u64>()) {
        let sim = Simulator::new(&g);
        let cfg = RunConfig::new(200, seed).with_record_every(7);
        let a = sim.run(&x0, &zs, &cfg).unwrap();
        let b = sim.run(&x0, &zs, &cfg).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn envelopes_match_symbolic_formula((g, x0, _zs) in graph_strategy(), t in 0u64..20_000) {
        let s = SpectralSummary::new(&g);
        let cx = g.cx();
        let mode = if g.ls() > g.ld() { BoundMode::Local } else { BoundMode::Global };
        let bound = match mode {
            BoundMode::Local => ConsensusBound::local(&g, &s, &x0).unwrap(),
            BoundMode::Global => ConsensusBound::global(&g, &s, &x0).unwrap(),
        };
        let tf = t as f64;
        let want = match mode {
            BoundMode::Local => ((4.0 * s.lambda1 + s.lambda2) * tf + (1.0 - s.lambda3).powf(tf)) * cx,
            BoundMode::Global => (4.0 * s.lambda1 * tf + 2.0 * (1.0 - s.lambda3).powf(tf)) * cx,
        };
        // With one agent per community the third mode is empty and its rate
        // can push the envelope to +inf on both sides.
        let got = bound.bound_at(t);
        prop_assert!(got == want || (got - want).abs() <= 1e-14 * want.max(1.0));
    }
}

#[test]
fn bound_modes_are_gated_by_weights() {
    let local = TwoCommunityGraph::new(GraphParams::uniform(10, 0.8, 0.5, 0.1, 0.2, 1.0)).unwrap();
    let global = TwoCommunityGraph::new(GraphParams::uniform(10, 0.8, 0.1, 0.5, 0.2, 1.0)).unwrap();
    let x0 = vec![0.0; 8];
    assert!(ConsensusBound::local(&local, &SpectralSummary::new(&local), &x0).is_ok());
    assert!(ConsensusBound::global(&local, &SpectralSummary::new(&local), &x0).is_err());
    assert!(ConsensusBound::global(&global, &SpectralSummary::new(&global), &x0).is_ok());
    assert!(ConsensusBound::local(&global, &SpectralSummary::new(&global), &x0).is_err());
}
