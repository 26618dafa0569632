//! Experiment configuration: TOML schema, defaults, and validation.
//!
//! ```toml
//! analyses = ["exact", "window", "local_bound"]
//! output_dir = "out"
//!
//! [graph]
//! n = 10
//! r0 = 0.8
//! cx = 1.0
//! ls = 0.5            # or: beta = [3.0, 1.0, 1.0]
//! ld = 0.1            #     stubborn_convention = "per_edge"
//! l_total = 0.2       # or: stubborn_matrix = [[...], ...]
//!
//! [init]
//! x0 = "uniform_split"   # or an explicit array, or { community1 = [a, b], community2 = [c, d] }
//! zs = "uniform"         # or an explicit array, "zero", or { range = [a, b] }
//!
//! [run]
//! horizon = 100          # `T` is accepted as an alias
//! seed = 7
//! record_every = 1
//! replicates = 100
//! ```
//!
//! A config may instead name a `preset`; then `[graph]` and `[init]` must be
//! absent, and `[run]`, `analyses`, and `output_dir` override the preset.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::preset::PresetName;
use crate::error::{Error, Result};
use crate::graph::{GraphParams, StubbornWeights, TwoCommunityGraph};
use crate::sim::{stream_rng, validate_initial, RunConfig};
use crate::theory::{scaling_regime, StubbornConvention};

/// RNG stream reserved for sampling initial and stubborn states, kept apart
/// from the replicate streams `0..M`.
pub const INIT_STREAM: u64 = u64::MAX;

pub const DEFAULT_REPLICATES: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Analysis {
    Simulate,
    McMean,
    Exact,
    Window,
    LocalBound,
    GlobalBound,
}

impl Analysis {
    pub fn as_str(self) -> &'static str {
        match self {
            Analysis::Simulate => "simulate",
            Analysis::McMean => "mc_mean",
            Analysis::Exact => "exact",
            Analysis::Window => "window",
            Analysis::LocalBound => "local_bound",
            Analysis::GlobalBound => "global_bound",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum X0Spec {
    Explicit(Vec<f64>),
    Named(String),
    Ranges {
        community1: [f64; 2],
        community2: [f64; 2],
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ZsSpec {
    Explicit(Vec<f64>),
    Named(String),
    Range { range: [f64; 2] },
}

#[derive(Debug, Clone, PartialEq)]
pub struct InitSpec {
    pub x0: X0Spec,
    pub zs: ZsSpec,
}

impl Default for InitSpec {
    fn default() -> Self {
        InitSpec {
            x0: X0Spec::Named("uniform_split".into()),
            zs: ZsSpec::Named("uniform".into()),
        }
    }
}

fn check_range(what: &str, [lo, hi]: [f64; 2], cx: f64) -> Result<()> {
    if !(lo < hi && lo >= -cx && hi <= cx) {
        return Err(Error::Config(format!(
            "{what} range [{lo}, {hi}] must satisfy -cx <= lo < hi <= cx (cx = {cx})"
        )));
    }
    Ok(())
}

impl InitSpec {
    fn validate(&self, cx: f64) -> Result<()> {
        match &self.x0 {
            X0Spec::Named(name) if name != "uniform_split" && name != "zero" => {
                return Err(Error::Config(format!(
                    "unknown x0 mode `{name}` (expected uniform_split, zero, an array, or ranges)"
                )))
            }
            X0Spec::Ranges {
                community1,
                community2,
            } => {
                check_range("init.x0.community1", *community1, cx)?;
                check_range("init.x0.community2", *community2, cx)?;
            }
            _ => {}
        }
        match &self.zs {
            ZsSpec::Named(name) if name != "uniform" && name != "zero" => {
                return Err(Error::Config(format!(
                    "unknown zs mode `{name}` (expected uniform, zero, an array, or a range)"
                )))
            }
            ZsSpec::Range { range } => check_range("init.zs", *range, cx)?,
            _ => {}
        }
        Ok(())
    }

    /// Draws `(x0, zs)` from the init stream of `seed`: community one, then
    /// community two, then the stubborn agents.
    pub fn sample(&self, graph: &TwoCommunityGraph, seed: u64) -> Result<(Vec<f64>, Vec<f64>)> {
        let mut rng = stream_rng(seed, INIT_STREAM);
        let cx = graph.cx();
        let half = graph.community_size();
        let mut draw = |[lo, hi]: [f64; 2], count: usize| -> Vec<f64> {
            (0..count).map(|_| rng.random_range(lo..hi)).collect()
        };
        let x0 = match &self.x0 {
            X0Spec::Explicit(v) => v.clone(),
            X0Spec::Named(name) if name == "zero" => vec![0.0; graph.regular_count()],
            X0Spec::Named(_) => {
                let mut v = draw([0.0, cx], half);
                v.extend(draw([-cx, 0.0], half));
                v
            }
            X0Spec::Ranges {
                community1,
                community2,
            } => {
                let mut v = draw(*community1, half);
                v.extend(draw(*community2, half));
                v
            }
        };
        let s = graph.stubborn_count();
        let zs = match &self.zs {
            ZsSpec::Explicit(v) => v.clone(),
            ZsSpec::Named(name) if name == "zero" => vec![0.0; s],
            ZsSpec::Named(_) => draw([-cx, cx], s),
            ZsSpec::Range { range } => draw(*range, s),
        };
        validate_initial(graph, &x0, &zs)?;
        Ok((x0, zs))
    }
}

/// How the graph parameters were specified.
#[derive(Debug, Clone, PartialEq)]
pub enum GraphSpec {
    Direct(GraphParams),
    Scaling {
        n: usize,
        r0: f64,
        cx: f64,
        betas: [f64; 3],
        convention: StubbornConvention,
    },
}

impl GraphSpec {
    pub fn resolve(&self) -> Result<GraphParams> {
        match self {
            GraphSpec::Direct(p) => Ok(p.clone()),
            GraphSpec::Scaling {
                n,
                r0,
                cx,
                betas,
                convention,
            } => scaling_regime(*n, *r0, *cx, *betas, *convention),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    /// Preset name, the config file stem, or `custom`.
    pub name: String,
    pub graph: GraphSpec,
    pub params: GraphParams,
    pub init: InitSpec,
    pub run: RunConfig,
    pub analyses: BTreeSet<Analysis>,
    pub output_dir: PathBuf,
}

impl ExperimentConfig {
    /// Resolves the graph and checks every cross-field constraint.
    pub fn new(
        name: impl Into<String>,
        graph: GraphSpec,
        init: InitSpec,
        run: RunConfig,
        analyses: BTreeSet<Analysis>,
        output_dir: PathBuf,
    ) -> Result<Self> {
        let params = graph.resolve()?;
        let config = ExperimentConfig {
            name: name.into(),
            graph,
            params,
            init,
            run,
            analyses,
            output_dir,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        TwoCommunityGraph::new(self.params.clone())?;
        self.run.validate()?;
        self.init.validate(self.params.cx)?;
        if self.analyses.is_empty() {
            return Err(Error::Config("no analyses requested".into()));
        }
        let local = self.params.ls > self.params.ld;
        for a in &self.analyses {
            match a {
                Analysis::Window | Analysis::LocalBound if !local => {
                    return Err(Error::Config(format!(
                        "analysis `{}` needs ls > ld (ls = {}, ld = {})",
                        a.as_str(),
                        self.params.ls,
                        self.params.ld
                    )))
                }
                Analysis::GlobalBound if local => {
                    return Err(Error::Config(format!(
                        "analysis `global_bound` needs ls <= ld (ls = {}, ld = {})",
                        self.params.ls, self.params.ld
                    )))
                }
                _ => {}
            }
        }
        Ok(())
    }

    /// Replaces the analysis set and revalidates.
    pub fn with_analyses(mut self, analyses: impl IntoIterator<Item = Analysis>) -> Result<Self> {
        self.analyses = analyses.into_iter().collect();
        self.validate()?;
        Ok(self)
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    preset: Option<String>,
    analyses: Option<Vec<Analysis>>,
    output_dir: Option<PathBuf>,
    graph: Option<RawGraph>,
    init: Option<RawInit>,
    run: Option<RawRun>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGraph {
    n: usize,
    r0: f64,
    cx: f64,
    ls: Option<f64>,
    ld: Option<f64>,
    l_total: Option<f64>,
    stubborn_matrix: Option<Vec<Vec<f64>>>,
    beta: Option<[f64; 3]>,
    stubborn_convention: Option<StubbornConvention>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInit {
    x0: Option<X0Spec>,
    zs: Option<ZsSpec>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRun {
    #[serde(alias = "T")]
    horizon: Option<u64>,
    record_every: Option<u64>,
    seed: Option<u64>,
    replicates: Option<usize>,
}

impl RawGraph {
    fn into_spec(self) -> Result<GraphSpec> {
        let direct = self.ls.is_some() || self.ld.is_some();
        match (direct, self.beta) {
            (true, Some(_)) => Err(Error::Config(
                "graph: give either ls/ld or beta, not both".into(),
            )),
            (false, None) => Err(Error::Config("graph: missing ls/ld (or beta)".into())),
            (false, Some(betas)) => {
                if self.l_total.is_some() || self.stubborn_matrix.is_some() {
                    return Err(Error::Config(
                        "graph: l_total/stubborn_matrix are derived from beta in scaling mode"
                            .into(),
                    ));
                }
                Ok(GraphSpec::Scaling {
                    n: self.n,
                    r0: self.r0,
                    cx: self.cx,
                    betas,
                    convention: self
                        .stubborn_convention
                        .unwrap_or(StubbornConvention::PerEdge),
                })
            }
            (true, None) => {
                if self.stubborn_convention.is_some() {
                    return Err(Error::Config(
                        "graph: stubborn_convention only applies with beta".into(),
                    ));
                }
                let ls = self
                    .ls
                    .ok_or_else(|| Error::Config("graph: missing ls".into()))?;
                let ld = self
                    .ld
                    .ok_or_else(|| Error::Config("graph: missing ld".into()))?;
                let stubborn = match (self.l_total, self.stubborn_matrix) {
                    (Some(_), Some(_)) => {
                        return Err(Error::Config(
                            "graph: give either l_total or stubborn_matrix, not both".into(),
                        ))
                    }
                    (Some(l_total), None) => StubbornWeights::Uniform { l_total },
                    (None, Some(m)) => StubbornWeights::Explicit(m),
                    (None, None) => StubbornWeights::Uniform { l_total: 0.0 },
                };
                Ok(GraphSpec::Direct(GraphParams {
                    n: self.n,
                    r0: self.r0,
                    ls,
                    ld,
                    stubborn,
                    cx: self.cx,
                }))
            }
        }
    }
}

/// Parses and validates a config from TOML text.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    let run_over = raw.run.unwrap_or_default();

    if let Some(name) = raw.preset {
        if raw.graph.is_some() || raw.init.is_some() {
            return Err(Error::Config(
                "a preset config may not contain [graph] or [init]".into(),
            ));
        }
        let preset: PresetName = name.parse()?;
        let mut config = preset.config();
        if let Some(h) = run_over.horizon {
            config.run.horizon = h;
            if run_over.record_every.is_none() {
                config.run.record_every = config.run.record_every.min(h.max(1));
            }
        }
        if let Some(s) = run_over.record_every {
            config.run.record_every = s;
        }
        if let Some(s) = run_over.seed {
            config.run.seed = s;
        }
        if let Some(m) = run_over.replicates {
            config.run.replicates = m;
        }
        if let Some(a) = raw.analyses {
            config.analyses = a.into_iter().collect();
        }
        if let Some(dir) = raw.output_dir {
            config.output_dir = dir;
        }
        config.validate()?;
        return Ok(config);
    }

    let graph = raw
        .graph
        .ok_or_else(|| Error::Config("missing [graph] section (or a preset)".into()))?
        .into_spec()?;
    let init = match raw.init {
        None => InitSpec::default(),
        Some(r) => {
            let d = InitSpec::default();
            InitSpec {
                x0: r.x0.unwrap_or(d.x0),
                zs: r.zs.unwrap_or(d.zs),
            }
        }
    };
    let horizon = run_over
        .horizon
        .ok_or_else(|| Error::Config("run.horizon is required".into()))?;
    let run = RunConfig {
        horizon,
        record_every: run_over
            .record_every
            .unwrap_or_else(|| RunConfig::default_stride(horizon)),
        seed: run_over.seed.unwrap_or(0),
        replicates: run_over.replicates.unwrap_or(DEFAULT_REPLICATES),
    };
    let analyses = raw
        .analyses
        .ok_or_else(|| Error::Config("`analyses` is required".into()))?
        .into_iter()
        .collect();
    ExperimentConfig::new(
        "custom",
        graph,
        init,
        run,
        analyses,
        raw.output_dir.unwrap_or_else(|| PathBuf::from("out")),
    )
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut config = parse_config(&text).map_err(|e| match e {
        Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
        other => other,
    })?;
    if config.name == "custom" {
        if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
            config.name = stem.to_string();
        }
    }
    Ok(config)
}
