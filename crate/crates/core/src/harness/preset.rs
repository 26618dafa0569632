//! Built-in experiments at n = 500.
//!
//! All presets use `cx = 1`, `r0 = 0.9`, community one drawn from U(0, 1),
//! community two from U(-1, 0), stubborn states from U(-1, 1), and a
//! per-edge regular-to-stubborn weight of `ln n / n`. The local presets set
//! `ls = (ln n)^3 / n`, `ld = ln n / n`; the global presets swap the two.
//! The state-trajectory presets share seeds with the matching expectation
//! presets, so they start from the same initial data.

use std::collections::BTreeSet;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use super::config::{Analysis, ExperimentConfig, GraphSpec, InitSpec, DEFAULT_REPLICATES};
use crate::error::Error;
use crate::sim::RunConfig;
use crate::theory::StubbornConvention;

pub const PRESET_N: usize = 500;
pub const PRESET_HORIZON: u64 = 5000;
pub const PRESET_RECORD_EVERY: u64 = 10;
pub const LOCAL_SEED: u64 = 20_220_500;
pub const GLOBAL_SEED: u64 = 20_220_501;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PresetName {
    Fig2ExpectedLocal,
    Fig3ExpectedGlobal,
    Fig4aStatesLocal,
    Fig4bStatesGlobal,
}

impl PresetName {
    pub const ALL: [PresetName; 4] = [
        PresetName::Fig2ExpectedLocal,
        PresetName::Fig3ExpectedGlobal,
        PresetName::Fig4aStatesLocal,
        PresetName::Fig4bStatesGlobal,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PresetName::Fig2ExpectedLocal => "fig2_expected_local",
            PresetName::Fig3ExpectedGlobal => "fig3_expected_global",
            PresetName::Fig4aStatesLocal => "fig4a_states_local",
            PresetName::Fig4bStatesGlobal => "fig4b_states_global",
        }
    }

    fn is_local(self) -> bool {
        matches!(
            self,
            PresetName::Fig2ExpectedLocal | PresetName::Fig4aStatesLocal
        )
    }

    pub fn config(self) -> ExperimentConfig {
        let (betas, seed) = if self.is_local() {
            ([3.0, 1.0, 1.0], LOCAL_SEED)
        } else {
            ([1.0, 3.0, 1.0], GLOBAL_SEED)
        };
        let analyses: BTreeSet<Analysis> = match self {
            PresetName::Fig2ExpectedLocal => {
                [Analysis::Exact, Analysis::Window, Analysis::LocalBound].into()
            }
            PresetName::Fig3ExpectedGlobal => [Analysis::Exact, Analysis::GlobalBound].into(),
            PresetName::Fig4aStatesLocal | PresetName::Fig4bStatesGlobal => {
                [Analysis::Simulate, Analysis::Exact].into()
            }
        };
        let graph = GraphSpec::Scaling {
            n: PRESET_N,
            r0: 0.9,
            cx: 1.0,
            betas,
            convention: StubbornConvention::PerEdge,
        };
        let run = RunConfig {
            horizon: PRESET_HORIZON,
            record_every: PRESET_RECORD_EVERY,
            seed,
            replicates: DEFAULT_REPLICATES,
        };
        ExperimentConfig::new(
            self.as_str(),
            graph,
            InitSpec::default(),
            run,
            analyses,
            PathBuf::from("out").join(self.as_str()),
        )
        .expect("preset configs are valid")
    }
}

impl fmt::Display for PresetName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PresetName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        PresetName::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| {
                let names: Vec<_> = PresetName::ALL.iter().map(|p| p.as_str()).collect();
                Error::Config(format!(
                    "unknown preset `{s}` (expected one of {})",
                    names.join(", ")
                ))
            })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::StubbornWeights;

    #[test]
    fn local_and_global_presets_swap_weights() {
        let ln = 500f64.ln();
        let fig2 = PresetName::Fig2ExpectedLocal.config();
        let fig3 = PresetName::Fig3ExpectedGlobal.config();
        assert_eq!(
            (fig2.params.n, fig2.params.r0, fig2.params.cx),
            (500, 0.9, 1.0)
        );
        assert!((fig2.params.ls - ln.powi(3) / 500.0).abs() < 1e-15);
        assert!((fig2.params.ld - ln / 500.0).abs() < 1e-15);
        assert_eq!(fig2.params.ls, fig3.params.ld);
        assert_eq!(fig2.params.ld, fig3.params.ls);
        assert_eq!(fig2.params.stubborn, fig3.params.stubborn);
        assert_eq!(
            fig2.params.stubborn,
            StubbornWeights::Uniform {
                l_total: 50.0 * ln / 500.0
            }
        );
        assert_eq!(fig2.init, InitSpec::default());
    }

    #[test]
    fn state_presets_reuse_expectation_setups() {
        let fig2 = PresetName::Fig2ExpectedLocal.config();
        let fig4a = PresetName::Fig4aStatesLocal.config();
        assert_eq!(fig2.params, fig4a.params);
        assert_eq!(fig2.run.seed, fig4a.run.seed);
        assert!(fig4a.analyses.contains(&Analysis::Simulate));
        let fig4b = PresetName::Fig4bStatesGlobal.config();
        assert_eq!(fig4b.params, PresetName::Fig3ExpectedGlobal.config().params);
    }

    #[test]
    fn names_round_trip() {
        for p in PresetName::ALL {
            assert_eq!(p.as_str().parse::<PresetName>().unwrap(), p);
        }
    }
}
