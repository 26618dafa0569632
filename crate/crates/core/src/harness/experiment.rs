//! Runs a configured experiment: evaluates every requested analysis in
//! memory first, then writes CSVs, a summary, and the manifest.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use super::config::{Analysis, ExperimentConfig, GraphSpec};
use super::manifest::{format_float, Manifest};
use crate::error::{Error, Result};
use crate::graph::{StubbornWeights, TwoCommunityGraph};
use crate::sim::Simulator;
use crate::spectral::{
    expected_state_recursion, MeanDynamics, SpectralProjections, SpectralSummary,
};
use crate::theory::{
    self, check_sign_agreement, empirical_sign_window, global_bound_check, local_bound_check,
    open_integer_range, sign_window, BoundReport, ConsensusBound, SignReport, SignWindow,
};
use crate::trajectory::TrajectoryBundle;

/// Upper limit on `horizon x regular agents` for the stride-1 exact
/// trajectory kept in memory for the window checks.
pub const MAX_EXACT_CELLS: u64 = 50_000_000;

#[derive(Debug, Clone)]
pub struct WindowAnalysis {
    pub window: SignWindow,
    /// Check over the integers inside the predicted window.
    pub predicted: SignReport,
    /// True when the predicted window ran past the exact horizon and the check
    /// stopped there.
    pub predicted_truncated: bool,
    /// `(n, round(n ln n))`.
    pub interval: (u64, u64),
    pub interval_report: SignReport,
    /// Longest stretch of consecutive steps with full sign agreement.
    pub empirical: Option<(u64, u64)>,
}

#[derive(Debug, Clone)]
pub struct ExperimentResults {
    pub config: ExperimentConfig,
    pub graph: TwoCommunityGraph,
    pub x0: Vec<f64>,
    pub zs: Vec<f64>,
    pub summary: SpectralSummary,
    pub projections: SpectralProjections,
    /// Exact expectation at every step up to `config.run.horizon`.
    pub exact: Option<TrajectoryBundle>,
    pub single: Option<TrajectoryBundle>,
    pub mc: Option<TrajectoryBundle>,
    pub window: Option<WindowAnalysis>,
    pub local: Option<BoundReport>,
    pub global: Option<BoundReport>,
}

pub fn evaluate(config: &ExperimentConfig) -> Result<ExperimentResults> {
    config.validate()?;
    let graph = TwoCommunityGraph::new(config.params.clone())?;
    let (x0, zs) = config.init.sample(&graph, config.run.seed)?;
    let dynamics = MeanDynamics::new(&graph);
    let summary = SpectralSummary::new(&graph);
    let projections =
        SpectralProjections::new(&summary, &dynamics.mtilde, &x0, &zs, graph.l_total());
    let wants = |a| config.analyses.contains(&a);
    let horizon = config.run.horizon;

    let window = if wants(Analysis::Window) {
        Some(sign_window(&summary, &projections, &graph)?)
    } else {
        None
    };
    let interval = theory::transient_interval(graph.n());

    let needs_exact = wants(Analysis::Exact)
        || wants(Analysis::Window)
        || wants(Analysis::LocalBound)
        || wants(Analysis::GlobalBound);
    let cap = MAX_EXACT_CELLS / graph.regular_count() as u64;
    let mut exact_horizon = horizon;
    let mut predicted_truncated = false;
    if let Some(w) = &window {
        exact_horizon = exact_horizon.max(interval.1.saturating_sub(1));
        if w.nonempty {
            let last = open_integer_range(w.t_lower, w.t_upper).map(|(_, b)| b);
            match last {
                Some(b) if w.t_upper.is_finite() && b <= cap => {
                    exact_horizon = exact_horizon.max(b)
                }
                Some(_) => predicted_truncated = true,
                None => {}
            }
        }
    }
    if needs_exact && exact_horizon > cap {
        return Err(Error::Precondition(format!(
            "exact trajectory to t = {exact_horizon} for {} agents exceeds the in-memory limit",
            graph.regular_count()
        )));
    }
    let full = needs_exact.then(|| expected_state_recursion(&dynamics, &x0, &zs, exact_horizon, 1));

    let window = match (window, &full) {
        (Some(w), Some(full)) => {
            let upper = if predicted_truncated {
                (exact_horizon + 1) as f64
            } else {
                w.t_upper
            };
            let predicted = if w.nonempty {
                check_sign_agreement(&w.predicted_sign, full, w.t_lower, upper)?
            } else {
                SignReport::default()
            };
            let interval_report = check_sign_agreement(
                &w.predicted_sign,
                full,
                interval.0 as f64,
                interval.1 as f64,
            )?;
            Some(WindowAnalysis {
                empirical: empirical_sign_window(&w.predicted_sign, full),
                window: w,
                predicted,
                predicted_truncated,
                interval,
                interval_report,
            })
        }
        _ => None,
    };

    let exact = full.map(|f| truncate(f, horizon));
    let local = match (&exact, wants(Analysis::LocalBound)) {
        (Some(traj), true) => {
            let bound = ConsensusBound::local(&graph, &summary, &x0)?;
            Some(local_bound_check(&bound, traj)?)
        }
        _ => None,
    };
    let global = match (&exact, wants(Analysis::GlobalBound)) {
        (Some(traj), true) => {
            let bound = ConsensusBound::global(&graph, &summary, &x0)?;
            Some(global_bound_check(&bound, traj)?)
        }
        _ => None,
    };

    let sim = Simulator::new(&graph);
    let single = if wants(Analysis::Simulate) {
        Some(sim.run(&x0, &zs, &config.run)?)
    } else {
        None
    };
    let mc = if wants(Analysis::McMean) {
        Some(sim.monte_carlo_mean(&x0, &zs, &config.run)?)
    } else {
        None
    };

    Ok(ExperimentResults {
        config: config.clone(),
        graph,
        x0,
        zs,
        summary,
        projections,
        exact,
        single,
        mc,
        window,
        local,
        global,
    })
}

fn truncate(mut traj: TrajectoryBundle, horizon: u64) -> TrajectoryBundle {
    let keep = traj.times.partition_point(|&t| t <= horizon);
    traj.times.truncate(keep);
    traj.values.truncate(keep);
    traj
}

/// Keeps records at multiples of `stride` and the final record.
fn subsample(traj: &TrajectoryBundle, stride: u64) -> TrajectoryBundle {
    let last = traj.last_time();
    let mut out = TrajectoryBundle::new(traj.kind);
    out.meta = traj.meta.clone();
    for (t, x) in traj.iter() {
        if t % stride == 0 || Some(t) == last {
            out.times.push(t);
            out.values.push(x.to_vec());
        }
    }
    out
}

pub fn build_manifest(results: &ExperimentResults) -> Manifest {
    let cfg = &results.config;
    let g = &results.graph;
    let mut m = Manifest::new();
    m.text("name", cfg.name.clone())
        .int("n", g.n() as u64)
        .float("r0", cfg.params.r0)
        .int("regular", g.regular_count() as u64)
        .int("stubborn", g.stubborn_count() as u64)
        .float("cx", g.cx())
        .float("ls", g.ls())
        .float("ld", g.ld())
        .float("l_total", g.l_total())
        .text(
            "stubborn_weights",
            match cfg.params.stubborn {
                StubbornWeights::Uniform { .. } => "uniform",
                StubbornWeights::Explicit(_) => "explicit",
            },
        );
    if let GraphSpec::Scaling {
        betas, convention, ..
    } = &cfg.graph
    {
        m.floats("beta", betas).text(
            "stubborn_convention",
            match convention {
                theory::StubbornConvention::PerEdge => "per_edge",
                theory::StubbornConvention::RowSum => "row_sum",
            },
        );
    }
    let s = &results.summary;
    let p = &results.projections;
    m.float("alpha", g.alpha())
        .float("lambda1", s.lambda1)
        .float("lambda2", s.lambda2)
        .float("lambda3", s.lambda3)
        .float("c_eta_x", p.c_eta_x)
        .float("c_xi_x", p.c_xi_x)
        .float("zeta1", p.zeta1)
        .float("zeta2", p.zeta2)
        .int("seed", cfg.run.seed)
        .int("horizon", cfg.run.horizon)
        .int("record_every", cfg.run.record_every)
        .int(
            "replicates",
            if cfg.analyses.contains(&Analysis::McMean) {
                cfg.run.replicates as u64
            } else {
                1
            },
        )
        .text(
            "analyses",
            cfg.analyses
                .iter()
                .map(|a| a.as_str())
                .collect::<Vec<_>>()
                .join(","),
        );
    if let Some(w) = &results.window {
        let [t1, t2, t3, t4] = w.window.terms;
        m.float("t_lower", w.window.t_lower)
            .float("t_upper", w.window.t_upper)
            .float("t_upper_drift", t1)
            .float("t_upper_zeta1", t2)
            .float("t_upper_zeta2", t3)
            .float("t_upper_stubborn", t4)
            .flag("window_nonempty", w.window.nonempty)
            .flag("window_truncated", w.predicted_truncated)
            .int("window_agree", w.predicted.agree as u64)
            .int("window_disagree", w.predicted.disagree as u64)
            .int("window_indeterminate", w.predicted.indeterminate as u64)
            .int("interval_lower", w.interval.0)
            .int("interval_upper", w.interval.1)
            .int("interval_agree", w.interval_report.agree as u64)
            .int("interval_disagree", w.interval_report.disagree as u64)
            .int(
                "interval_indeterminate",
                w.interval_report.indeterminate as u64,
            );
        if let Some((a, b)) = w.empirical {
            m.int("empirical_window_first", a)
                .int("empirical_window_last", b);
        }
    }
    for r in [&results.local, &results.global].into_iter().flatten() {
        let mode = r.mode.as_str();
        m.int(&format!("{mode}_bound_violations"), r.violations as u64)
            .float(&format!("{mode}_bound_min_slack"), r.min_slack);
    }
    m.floats("x0", &results.x0).floats("zs", &results.zs);
    m
}

fn summary_text(results: &ExperimentResults) -> String {
    let cfg = &results.config;
    let g = &results.graph;
    let s = &results.summary;
    let p = &results.projections;
    let mut out = String::new();
    let _ = writeln!(out, "experiment {}", cfg.name);
    let _ = writeln!(
        out,
        "graph: n = {}, regular = {}, stubborn = {}, ls = {:.6}, ld = {:.6}, l_total = {:.6}, alpha = {:.6}",
        g.n(),
        g.regular_count(),
        g.stubborn_count(),
        g.ls(),
        g.ld(),
        g.l_total(),
        g.alpha()
    );
    let _ = writeln!(
        out,
        "spectrum: lambda1 = {:.6e}, lambda2 = {:.6e}, lambda3 = {:.6e}",
        s.lambda1, s.lambda2, s.lambda3
    );
    let _ = writeln!(
        out,
        "projections: c_eta_x = {:.6}, c_xi_x = {:.6}, zeta1 = {:.6}, zeta2 = {:.6}",
        p.c_eta_x, p.c_xi_x, p.zeta1, p.zeta2
    );
    if let Some(w) = &results.window {
        let _ = writeln!(
            out,
            "sign window: ({:.2}, {:.2}) {}",
            w.window.t_lower,
            w.window.t_upper,
            if w.window.nonempty {
                "nonempty"
            } else {
                "empty"
            }
        );
        let _ = writeln!(
            out,
            "  predicted window check: {} ({} agree, {} disagree, {} indeterminate{})",
            pass_word(w.predicted.pass()),
            w.predicted.agree,
            w.predicted.disagree,
            w.predicted.indeterminate,
            if w.predicted_truncated {
                ", truncated at horizon"
            } else {
                ""
            }
        );
        let _ = writeln!(
            out,
            "  interval ({}, {}) check: {} ({} agree, {} disagree, {} indeterminate)",
            w.interval.0,
            w.interval.1,
            pass_word(w.interval_report.pass()),
            w.interval_report.agree,
            w.interval_report.disagree,
            w.interval_report.indeterminate
        );
        match w.empirical {
            Some((a, b)) => {
                let _ = writeln!(
                    out,
                    "  longest full-agreement stretch: t in [{a}, {b}] (computed up to t = {})",
                    results
                        .exact
                        .as_ref()
                        .and_then(|e| e.last_time())
                        .unwrap_or(0)
                );
            }
            None => {
                let _ = writeln!(out, "  no step with full sign agreement");
            }
        }
    }
    for r in [&results.local, &results.global].into_iter().flatten() {
        let _ = writeln!(
            out,
            "{} consensus envelope: {} ({} violations, min slack {:.3e})",
            r.mode.as_str(),
            pass_word(r.pass()),
            r.violations,
            r.min_slack
        );
    }
    out
}

fn pass_word(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

fn write_sign_csv(path: &Path, report: &SignReport) -> Result<()> {
    let mut out = create(path)?;
    let io = |e| Error::io(path, e);
    writeln!(out, "t,agree,disagree,indeterminate,pass").map_err(io)?;
    for r in &report.rows {
        writeln!(
            out,
            "{},{},{},{},{}",
            r.t,
            r.agree,
            r.disagree,
            r.indeterminate,
            r.disagree == 0 && r.indeterminate == 0
        )
        .map_err(io)?;
    }
    out.flush().map_err(io)
}

fn write_bound_csv(path: &Path, report: &BoundReport) -> Result<()> {
    let mut out = create(path)?;
    let io = |e| Error::io(path, e);
    writeln!(out, "t,max_deviation,envelope,pass").map_err(io)?;
    for r in &report.rows {
        writeln!(
            out,
            "{},{},{},{}",
            r.t,
            format_float(r.max_deviation),
            format_float(r.envelope),
            r.pass
        )
        .map_err(io)?;
    }
    out.flush().map_err(io)
}

/// Writes every artifact into `dir` and returns the paths, manifest last.
pub fn write_outputs(results: &ExperimentResults, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let stride = results.config.run.record_every;
    let mut files = Vec::new();
    if let Some(exact) = &results.exact {
        files.extend(subsample(exact, stride).write_csv(&dir.join("exact.csv"))?);
    }
    if let Some(single) = &results.single {
        files.extend(single.write_csv(&dir.join("single_run.csv"))?);
    }
    if let Some(mc) = &results.mc {
        files.extend(mc.write_csv(&dir.join("mc_mean.csv"))?);
    }
    if let Some(w) = &results.window {
        let path = dir.join("sign_window.csv");
        write_sign_csv(&path, &w.predicted)?;
        files.push(path);
        let path = dir.join("sign_interval.csv");
        write_sign_csv(&path, &w.interval_report)?;
        files.push(path);
    }
    for r in [&results.local, &results.global].into_iter().flatten() {
        let path = dir.join(format!("{}_bound.csv", r.mode.as_str()));
        write_bound_csv(&path, r)?;
        files.push(path);
    }
    let path = dir.join("summary.txt");
    std::fs::write(&path, summary_text(results)).map_err(|e| Error::io(&path, e))?;
    files.push(path);
    let path = dir.join("manifest.toml");
    build_manifest(results).write(&path)?;
    files.push(path);
    Ok(files)
}

#[derive(Debug)]
pub struct ExperimentOutcome {
    pub results: ExperimentResults,
    pub files: Vec<PathBuf>,
    pub summary: String,
}

/// Evaluates `config` and writes its artifacts to `config.output_dir`.
/// Nothing is written if any analysis fails.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutcome> {
    let results = evaluate(config)?;
    let files = write_outputs(&results, &config.output_dir)?;
    let summary = summary_text(&results);
    Ok(ExperimentOutcome {
        results,
        files,
        summary,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::parse_config;

    const DESK: &str = r#"
analyses = ["exact", "window", "local_bound", "simulate", "mc_mean"]
[graph]
n = 10
r0 = 0.8
ls = 0.5
ld = 0.1
l_total = 0.2
cx = 1
[init]
x0 = [1, 1, 1, 1, -1, -1, -1, -1]
zs = "zero"
[run]
horizon = 200
seed = 7
replicates = 20
"#;

    #[test]
    fn desk_experiment_writes_everything() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = parse_config(DESK).unwrap();
        cfg.output_dir = dir.path().join("out");
        let outcome = run_experiment(&cfg).unwrap();
        let names: Vec<String> = outcome
            .files
            .iter()
            .map(|p| p.file_name().unwrap().to_string_lossy().into_owned())
            .collect();
        assert_eq!(
            names,
            [
                "exact.csv",
                "single_run.csv",
                "mc_mean.csv",
                "mc_mean_stderr.csv",
                "sign_window.csv",
                "sign_interval.csv",
                "local_bound.csv",
                "summary.txt",
                "manifest.toml"
            ]
        );
        let manifest = Manifest::read(&cfg.output_dir.join("manifest.toml")).unwrap();
        assert_eq!(manifest, build_manifest(&outcome.results));
        assert_eq!(
            manifest.get_float("alpha").unwrap(),
            outcome.results.graph.alpha()
        );
        assert_eq!(manifest.get_float("zeta1"), Some(0.0));
        assert!(outcome.results.local.as_ref().unwrap().pass());
        // The exact CSV covers the configured horizon even though the window
        // check needed a longer trajectory.
        let exact = TrajectoryBundle::read_csv(
            &cfg.output_dir.join("exact.csv"),
            crate::trajectory::TrajectoryKind::ExactExpectation,
        )
        .unwrap();
        assert_eq!(exact.last_time(), Some(200));
    }

    #[test]
    fn precondition_failure_writes_nothing() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = parse_config(DESK).unwrap();
        cfg.output_dir = dir.path().join("never");
        cfg.init.x0 = crate::harness::config::X0Spec::Explicit(vec![3.0; 8]);
        assert!(run_experiment(&cfg).is_err());
        assert!(!cfg.output_dir.exists());
    }
}
