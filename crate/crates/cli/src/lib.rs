//! Reproducible experiment driver: parse a TOML config, dispatch to the
//! library, write CSV/JSON artifacts with provenance sidecars, print a
//! one-line verdict.
//!
//! Exit codes: 0 for pass/complete, 2 when a checked inequality is
//! violated (or its hypothesis fails), 1 for usage and runtime errors.

pub mod config;
pub mod output;

use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use fieldmax::blockdecomp::{build_partition, optimal_c, verify_chain};
use fieldmax::dsequences::{construct_beta, series_sum, DEFAULT_SERIES_TOL};
use fieldmax::fieldgen::generate;
use fieldmax::lattice::iter_rectangle;
use fieldmax::maximal::{
    check_transfer_moment, check_transfer_prob, default_eps_grid, markov_bridge, EvalMode,
    InequalityReport, ReportStatus,
};
use fieldmax::slln::{logweighted_demo, trajectory, TrendSummary};

use config::ExperimentConfig;
use output::{sha256_hex, Format, OutputWriter};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_VIOLATION: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "fieldmax",
    version,
    about = "Verification lab for weighted maximal inequalities and strong laws over random fields"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// Experiment config (TOML).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Override the config seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Override the config replication count.
    #[arg(long)]
    pub reps: Option<u64>,
    /// Cap worker threads (with the parallel feature).
    #[arg(long)]
    pub threads: Option<usize>,
    /// Output directory (default: config output.dir, else `out`).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Artifact format: csv, json or both.
    #[arg(long)]
    pub format: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TransferSide {
    Prob,
    Moment,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate field replicates and dump them as CSV.
    Simulate {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Fit the hypothesis constant and check the weighted transfer.
    VerifyTransfer {
        /// Which side to transfer: tail probabilities or moments.
        #[arg(value_enum)]
        side: TransferSide,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Check the Markov reduction from moment to probability hypotheses.
    MarkovBridge {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Verify the block-decomposition chain for given b, n, c, r.
    BlockdecompCheck {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Minimize the ladder constant c^r / (1 - c^-r) over c > 1.
    OptimalC {
        /// Exponent r > 0.
        #[arg(long)]
        r: f64,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Construct the slower-growing normalizer and verify its guarantees.
    ConstructBeta {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Partial sums of a_n / b_n^r over a growing schedule, with verdict.
    SeriesSum {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Trajectories of S_n / b_n over a schedule.
    SllnTrajectory {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// The log-weighted statistic over a schedule, with trend verdict.
    LogweightedDemo {
        #[command(flatten)]
        common: CommonArgs,
    },
}

struct Run {
    cfg: ExperimentConfig,
    config_sha: String,
    seed: u64,
    reps: u64,
    out_dir: PathBuf,
    format: Format,
}

fn prepare(common: &CommonArgs) -> Result<Run> {
    let path = common
        .config
        .as_ref()
        .ok_or_else(|| anyhow!("--config is required for this command"))?;
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read config {}", path.display()))?;
    let cfg = ExperimentConfig::parse_toml(&text)?;
    let config_sha = sha256_hex(text.as_bytes());
    let seed = common.seed.unwrap_or(cfg.seed);
    let reps = common.reps.unwrap_or(cfg.reps);
    let out_dir = common
        .out
        .clone()
        .or_else(|| cfg.output.as_ref().and_then(|o| o.dir.as_ref().map(PathBuf::from)))
        .unwrap_or_else(|| PathBuf::from("out"));
    let format = match common
        .format
        .as_deref()
        .or_else(|| cfg.output.as_ref().and_then(|o| o.format.as_deref()))
    {
        Some(f) => Format::parse(f)?,
        None => Format::Both,
    };
    init_threads(common.threads);
    Ok(Run {
        cfg,
        config_sha,
        seed,
        reps,
        out_dir,
        format,
    })
}

#[cfg(feature = "parallel")]
fn init_threads(threads: Option<usize>) {
    if let Some(n) = threads {
        // a pool may already exist (e.g. in tests); that is fine
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

#[cfg(not(feature = "parallel"))]
fn init_threads(_threads: Option<usize>) {}

/// Render a float compactly in verdict lines: values within the numeric
/// tolerance of an integer print bare, everything else round-trips. Full
/// precision always lives in the JSON/CSV artifacts.
fn compact_f64(x: f64) -> String {
    if (x - x.round()).abs() < 1e-6 && x.abs() < 1e15 {
        format!("{}", x.round() as i64)
    } else {
        format!("{x}")
    }
}

/// Run the parsed command; returns the process exit code.
pub fn run(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Simulate { common } => cmd_simulate(&common),
        Command::VerifyTransfer { side, common } => cmd_verify_transfer(side, &common),
        Command::MarkovBridge { common } => cmd_markov_bridge(&common),
        Command::BlockdecompCheck { common } => cmd_blockdecomp_check(&common),
        Command::OptimalC { r, common } => cmd_optimal_c(r, &common),
        Command::ConstructBeta { common } => cmd_construct_beta(&common),
        Command::SeriesSum { common } => cmd_series_sum(&common),
        Command::SllnTrajectory { common } => cmd_slln_trajectory(&common),
        Command::LogweightedDemo { common } => cmd_logweighted_demo(&common),
    }
}

fn writer_for(run: &Run, command: &str) -> Result<OutputWriter> {
    OutputWriter::new(
        &run.out_dir,
        command,
        run.config_sha.clone(),
        run.seed,
        run.reps,
    )
}

fn cmd_simulate(common: &CommonArgs) -> Result<i32> {
    let run = prepare(common)?;
    let model = run.cfg.model()?.with_seed(run.seed);
    let ns = run.cfg.n_grid()?;
    let n = ns.last().expect("n_grid is nonempty").clone();
    let mut csv = String::from("replicate,cell,value\n");
    for rep in 0..run.reps {
        let table = generate(&model, &n, rep)?;
        table.for_each_indexed(|coords, v| {
            let cell = coords
                .iter()
                .map(|c| c.to_string())
                .collect::<Vec<_>>()
                .join("x");
            csv.push_str(&format!("{rep},{cell},{v}\n"));
        });
    }
    let mut w = writer_for(&run, "simulate")?;
    if run.format.wants_csv() {
        w.write_text("simulate.csv", &csv)?;
    }
    if run.format.wants_json() {
        #[derive(serde::Serialize)]
        struct Summary<'a> {
            n: &'a fieldmax::MultiIndex,
            replicates: u64,
            cells: u128,
        }
        w.write_json(
            "simulate.json",
            &Summary {
                n: &n,
                replicates: run.reps,
                cells: n.cells(),
            },
        )?;
    }
    println!(
        "simulate: complete ({} cells x {} replicates at {})",
        n.cells(),
        run.reps,
        n
    );
    Ok(EXIT_OK)
}

fn report_outputs(
    run: &Run,
    command: &str,
    stem: &str,
    report: &InequalityReport,
) -> Result<i32> {
    let mut w = writer_for(run, command)?;
    if run.format.wants_csv() {
        w.write_text(&format!("{stem}.csv"), &report.to_csv())?;
    }
    if run.format.wants_json() {
        w.write_json(&format!("{stem}.json"), report)?;
    }
    let (line, code) = match &report.status {
        ReportStatus::Pass => (
            format!(
                "{command}: PASS (fitted C = {}, constant = {}, {} grid points)",
                compact_f64(report.fitted_c),
                compact_f64(report.transfer_constant),
                report.points.len()
            ),
            EXIT_OK,
        ),
        ReportStatus::Violation { failing_points } => (
            format!(
                "{command}: VIOLATION at {failing_points} of {} grid points",
                report.points.len()
            ),
            EXIT_VIOLATION,
        ),
        ReportStatus::Inapplicable { reason } => {
            (format!("{command}: INAPPLICABLE ({reason})"), EXIT_VIOLATION)
        }
    };
    println!("{line}");
    Ok(code)
}

fn eps_grid_for(
    run: &Run,
    model: &fieldmax::fieldgen::FieldModel,
    n_grid: &[fieldmax::MultiIndex],
    mode: EvalMode,
) -> Result<(Vec<f64>, Option<String>)> {
    if let Some(eps) = run.cfg.grid.as_ref().and_then(|g| g.eps.clone()) {
        return Ok((eps, None));
    }
    let n_max = n_grid.last().expect("nonempty grid");
    let grid = default_eps_grid(model, n_max, None, mode)?;
    let rule = format!("{} (scale {})", grid.rule, grid.scale);
    Ok((grid.values, Some(rule)))
}

fn cmd_verify_transfer(side: TransferSide, common: &CommonArgs) -> Result<i32> {
    let run = prepare(common)?;
    let model = run.cfg.model()?.with_seed(run.seed);
    let a = run.cfg.sequence_a()?;
    let b = run.cfg.sequence_b()?;
    let r = run.cfg.require_r()?;
    let n_grid = run.cfg.n_grid()?;
    let mode = run.cfg.eval_mode(run.seed)?;
    let (mut report, stem) = match side {
        TransferSide::Prob => {
            let (eps, rule) = eps_grid_for(&run, &model, &n_grid, mode)?;
            let mut rep = check_transfer_prob(&model, &a, &b, r, &n_grid, &eps, mode)?;
            rep.grid_rule = rule;
            (rep, "transfer_prob")
        }
        TransferSide::Moment => (
            check_transfer_moment(&model, &a, &b, r, &n_grid, mode)?,
            "transfer_moment",
        ),
    };
    if report.grid_rule.is_none() {
        report.grid_rule = Some("thresholds from config".into());
    }
    report_outputs(&run, "verify-transfer", stem, &report)
}

fn cmd_markov_bridge(common: &CommonArgs) -> Result<i32> {
    let run = prepare(common)?;
    let model = run.cfg.model()?.with_seed(run.seed);
    let a = run.cfg.sequence_a()?;
    let r = run.cfg.require_r()?;
    let n_grid = run.cfg.n_grid()?;
    let mode = run.cfg.eval_mode(run.seed)?;
    let (eps, rule) = eps_grid_for(&run, &model, &n_grid, mode)?;
    let mut report = markov_bridge(&model, &a, r, &n_grid, &eps, mode)?;
    report.grid_rule = rule.or_else(|| Some("thresholds from config".into()));
    report_outputs(&run, "markov-bridge", "bridge", &report)
}

fn cmd_blockdecomp_check(common: &CommonArgs) -> Result<i32> {
    let run = prepare(common)?;
    let b = run.cfg.sequence_b()?;
    let r = run.cfg.require_r()?;
    let (section, n) = run.cfg.blockdecomp()?;
    // the chain holds for any nonnegative a; default to the constant 1
    let a = match run.cfg.sequences.as_ref().and_then(|s| s.a.as_ref()) {
        Some(_) => run.cfg.sequence_a()?,
        None => fieldmax::dsequences::DSequence::constant(run.cfg.d, 1.0),
    };
    let report = verify_chain(&a, &b, &n, section.c, r)?;
    let mut w = writer_for(&run, "blockdecomp-check")?;
    if run.format.wants_json() {
        w.write_json("chain.json", &report)?;
    }
    if section.dump_partition && run.format.wants_csv() {
        let normalized = b.normalized_to_first()?;
        let partition = build_partition(&normalized, &n, section.c)?;
        let mut csv = String::from("cell,block\n");
        for s in iter_rectangle(&n) {
            for (index, blk) in &partition.blocks {
                if blk.points.contains(&s) {
                    let idx = index
                        .iter()
                        .map(|i| i.to_string())
                        .collect::<Vec<_>>()
                        .join("x");
                    csv.push_str(&format!("{},{}\n", s.compact(), idx));
                }
            }
        }
        w.write_text("partition.csv", &csv)?;
    }
    if report.pass {
        println!(
            "blockdecomp-check: PASS ({} blocks, constant factor {}, final ratio {:.6})",
            report.block_count,
            compact_f64(report.constant_factor),
            report.final_ratio
        );
        Ok(EXIT_OK)
    } else {
        let failed: Vec<&str> = report
            .steps
            .iter()
            .filter(|s| !s.pass)
            .map(|s| s.name.as_str())
            .collect();
        println!("blockdecomp-check: VIOLATION at steps {failed:?}");
        Ok(EXIT_VIOLATION)
    }
}

fn cmd_optimal_c(r: f64, common: &CommonArgs) -> Result<i32> {
    init_threads(common.threads);
    let (c_star, min_value) = optimal_c(r)?;
    println!("c*={} min={}", compact_f64(c_star), compact_f64(min_value));
    if let Some(out) = &common.out {
        #[derive(serde::Serialize)]
        struct OptimalC {
            r: f64,
            c_star: f64,
            min_value: f64,
        }
        let sha = sha256_hex(format!("optimal-c r={r}").as_bytes());
        let mut w = OutputWriter::new(Path::new(out), "optimal-c", sha, 0, 0)?;
        w.write_json(
            "optimal_c.json",
            &OptimalC {
                r,
                c_star,
                min_value,
            },
        )?;
    }
    Ok(EXIT_OK)
}

fn cmd_construct_beta(common: &CommonArgs) -> Result<i32> {
    let run = prepare(common)?;
    let a = run.cfg.sequence_a()?;
    let b = run.cfg.sequence_b()?;
    let r = run.cfg.require_r()?;
    let horizon = run.cfg.beta_horizon()?;
    let tol = run.cfg.tol.unwrap_or(1e-4);
    let built = construct_beta(&a, &b, r, &horizon, tol)?;
    let mut w = writer_for(&run, "construct-beta")?;
    if run.format.wants_json() {
        w.write_json("beta.json", &built.report)?;
    }
    if run.format.wants_csv() {
        let mut csv = String::from("coordinate,k,b_factor,beta_factor\n");
        let bf = b.factors().expect("validated product type");
        let betaf = built.beta.factors().expect("constructed product type");
        for (j, &h) in horizon.coords().iter().enumerate() {
            for k in 1..=h {
                csv.push_str(&format!(
                    "{j},{k},{},{}\n",
                    bf[j].eval(k),
                    betaf[j].eval(k)
                ));
            }
        }
        w.write_text("beta_factors.csv", &csv)?;
    }
    let rep = &built.report;
    println!(
        "construct-beta: complete (ratio decay {:.3}x, bound {:.6e}, increment {:.3e}, stable: {})",
        rep.quarter_decay, rep.beta_series_bound, rep.beta_tail_increment, rep.beta_bound_stable
    );
    Ok(EXIT_OK)
}

fn cmd_series_sum(common: &CommonArgs) -> Result<i32> {
    let run = prepare(common)?;
    let a = run.cfg.sequence_a()?;
    let b = run.cfg.sequence_b()?;
    let r = run.cfg.require_r()?;
    let schedule = run.cfg.schedule()?;
    let tol = run.cfg.tol.unwrap_or(DEFAULT_SERIES_TOL);
    let verdict = series_sum(&a, &b, r, &schedule, tol)?;
    let mut w = writer_for(&run, "series-sum")?;
    if run.format.wants_json() {
        w.write_json("series.json", &verdict)?;
    }
    if run.format.wants_csv() {
        let mut csv = String::from("n,partial_sum\n");
        for (p, s) in &verdict.partials {
            csv.push_str(&format!("{},{}\n", p.compact(), s));
        }
        w.write_text("series.csv", &csv)?;
    }
    println!(
        "series-sum: {} (partial sum {:.9} at {}, tail increment {:.3e}, tol {:.1e})",
        verdict.verdict, verdict.partial_sum, verdict.horizon, verdict.tail_increment, tol
    );
    Ok(EXIT_OK)
}

fn trajectory_csv(records: &[fieldmax::slln::TrajectoryRecord]) -> String {
    let mut csv = String::from("replicate,n,statistic\n");
    for rec in records {
        csv.push_str(&format!("{},{},{}\n", rec.replicate, rec.n.compact(), rec.value));
    }
    csv
}

fn trend_line(command: &str, trend: &TrendSummary, horizon: &fieldmax::MultiIndex) -> String {
    format!(
        "{command}: final median |statistic| = {:.6} at {horizon}, decreasing in {}/{} steps — {}",
        trend.final_median,
        trend.decreasing_steps,
        trend.total_steps,
        if trend.decreasing_fraction >= 0.9 {
            "consistent with a vanishing limit at this horizon"
        } else {
            "no clear vanishing trend at this horizon"
        }
    )
}

/// Quantiles of |statistic| at the final schedule point.
#[derive(serde::Serialize)]
struct FinalQuantiles {
    q50: f64,
    q90: f64,
    q99: f64,
}

fn final_quantiles(
    records: &[fieldmax::slln::TrajectoryRecord],
    last: &fieldmax::MultiIndex,
) -> FinalQuantiles {
    let mut vals: Vec<f64> = records
        .iter()
        .filter(|r| &r.n == last)
        .map(|r| r.value.abs())
        .collect();
    vals.sort_by(|a, b| a.partial_cmp(b).expect("finite statistics"));
    FinalQuantiles {
        q50: fieldmax::numeric::quantile(&vals, 0.5),
        q90: fieldmax::numeric::quantile(&vals, 0.9),
        q99: fieldmax::numeric::quantile(&vals, 0.99),
    }
}

fn cmd_slln_trajectory(common: &CommonArgs) -> Result<i32> {
    let run = prepare(common)?;
    let model = run.cfg.model()?.with_seed(run.seed);
    let b = run.cfg.sequence_b()?;
    let schedule = run.cfg.schedule()?;
    let records = trajectory(&model, &b, &schedule, run.reps, run.seed)?;
    let trend = TrendSummary::from_records(&records, &schedule);
    let mut w = writer_for(&run, "slln-trajectory")?;
    if run.format.wants_csv() {
        w.write_text("trajectory.csv", &trajectory_csv(&records))?;
    }
    if run.format.wants_json() {
        #[derive(serde::Serialize)]
        struct Summary {
            trend: TrendSummary,
            final_quantiles: FinalQuantiles,
        }
        w.write_json(
            "trajectory.json",
            &Summary {
                final_quantiles: final_quantiles(&records, schedule.last()),
                trend: trend.clone(),
            },
        )?;
    }
    println!("{}", trend_line("slln-trajectory", &trend, schedule.last()));
    Ok(EXIT_OK)
}

fn cmd_logweighted_demo(common: &CommonArgs) -> Result<i32> {
    let run = prepare(common)?;
    let model = run.cfg.model()?.with_seed(run.seed);
    let schedule = run.cfg.schedule()?;
    let demo = logweighted_demo(&model, &schedule, run.reps, run.seed, run.cfg.r)?;
    let mut w = writer_for(&run, "logweighted-demo")?;
    if run.format.wants_csv() {
        w.write_text("demo.csv", &trajectory_csv(&demo.records))?;
    }
    if run.format.wants_json() {
        #[derive(serde::Serialize)]
        struct Summary<'a> {
            #[serde(flatten)]
            demo: &'a fieldmax::slln::LogWeightedDemo,
            final_quantiles: FinalQuantiles,
        }
        w.write_json(
            "demo.json",
            &Summary {
                demo: &demo,
                final_quantiles: final_quantiles(&demo.records, schedule.last()),
            },
        )?;
    }
    let mut line = trend_line("logweighted-demo", &demo.trend, schedule.last());
    if let Some(c) = &demo.hypothesis_constant {
        line.push_str(&format!(
            " | hypothesis constant ~ {:.4} at r = {} ({})",
            c.value, c.r, c.note
        ));
    }
    println!("{line}");
    Ok(EXIT_OK)
}
