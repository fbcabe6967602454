//! Acceptance suite: one test per criterion, each printing a pass/fail
//! line (visible with --nocapture) and asserting its stated tolerance
//! and runtime budget.

use std::time::Instant;

use fieldmax::blockdecomp::{optimal_c, verify_chain};
use fieldmax::dsequences::{construct_beta, make_product, DSequence, Factor, SeqFlags};
use fieldmax::fieldgen::{generate, FieldModel, Margin};
use fieldmax::lattice::{iter_rectangle, LatticeTable, MultiIndex, RectangleSchedule};
use fieldmax::maximal::{
    check_transfer_moment, check_transfer_prob, default_eps_grid, estimate_tail_prob,
    exact_tail_prob, fit_constant, fit_moment_constant, markov_bridge, EvalMode,
};
use fieldmax::rng::CellRng;
use fieldmax::slln::{logweighted_demo, logweighted_statistic_of_table};

fn mi(coords: &[usize]) -> MultiIndex {
    MultiIndex::new(coords.to_vec()).unwrap()
}

struct Criterion {
    name: &'static str,
    start: Instant,
    budget_s: f64,
}

impl Criterion {
    fn new(name: &'static str, budget_s: f64) -> Self {
        Self {
            name,
            start: Instant::now(),
            budget_s,
        }
    }

    fn finish(self, detail: String) {
        let elapsed = self.start.elapsed().as_secs_f64();
        println!("{}: PASS — {detail} ({elapsed:.2}s)", self.name);
        assert!(
            elapsed < self.budget_s,
            "{} exceeded its {}s budget: {elapsed:.2}s",
            self.name,
            self.budget_s
        );
    }
}

#[test]
fn criterion_1_optimal_constant() {
    let crit = Criterion::new("criterion 1 (optimal constant)", 1.0);
    let mut worst_min = 0.0f64;
    let mut worst_c = 0.0f64;
    for r in [0.5, 1.0, 2.0, 3.0] {
        let (c_star, min_value) = optimal_c(r).unwrap();
        let dc = (c_star - 2f64.powf(1.0 / r)).abs();
        let dm = (min_value - 4.0).abs();
        assert!(dc < 1e-6, "r={r}: |c* - 2^(1/r)| = {dc}");
        assert!(dm < 1e-6, "r={r}: |min - 4| = {dm}");
        worst_c = worst_c.max(dc);
        worst_min = worst_min.max(dm);
    }
    crit.finish(format!(
        "max |c* - 2^(1/r)| = {worst_c:.2e}, max |min - 4| = {worst_min:.2e} over r in {{0.5,1,2,3}}"
    ));
}

fn random_monotone_product_b(d: usize, seed: u64) -> DSequence {
    let factors: Vec<Factor> = (0..d)
        .map(|j| {
            let mut rng = CellRng::keyed(0xcafe + seed, j as u64, &[0]);
            let mut vals = Vec::with_capacity(16);
            let mut v = 0.4 + 2.0 * rng.next_open01();
            for _ in 0..16 {
                vals.push(v);
                v += 2.0 * rng.next_open01();
            }
            Factor::from_table(format!("mono{j}"), vals, true, true, false)
        })
        .collect();
    make_product(factors).unwrap()
}

fn random_positive_a(d: usize, seed: u64) -> DSequence {
    DSequence::from_fn(
        "random-a",
        d,
        SeqFlags {
            nonnegative: true,
            positive: true,
            nondecreasing: false,
            unbounded: false,
        },
        move |coords| {
            let key: Vec<i64> = coords.iter().map(|&c| c as i64).collect();
            0.05 + CellRng::keyed(0xaced + seed, 0, &key).next_open01()
        },
    )
}

#[test]
fn criterion_2_proof_chain() {
    let crit = Criterion::new("criterion 2 (proof chain)", 30.0);
    let mut violations = Vec::new();
    for inst in 0..200u64 {
        let mut rng = CellRng::keyed(0x2222, inst, &[0]);
        let d = 1 + (rng.next_u64() % 3) as usize;
        let shape: Vec<usize> = (0..d).map(|_| 1 + (rng.next_u64() % 8) as usize).collect();
        let c = [1.3, 2.0, 3.0][(rng.next_u64() % 3) as usize];
        let r = [0.5, 1.0, 2.0][(rng.next_u64() % 3) as usize];
        let b = random_monotone_product_b(d, inst);
        let a = random_positive_a(d, inst);
        let report = verify_chain(&a, &b, &mi(&shape), c, r).unwrap();
        if !report.pass {
            violations.push((inst, report));
        }
    }
    assert!(violations.is_empty(), "chain violations: {violations:?}");
    crit.finish("200 randomized instances, all steps hold at 1e-12 relative slack".into());
}

/// Randomized enumerable instance for the transfer criteria: binary
/// margin, at most 9 cells, strictly positive a, monotone product b, and
/// a rectangle chain from (1,...,1) to the full shape.
struct EnumInstance {
    model: FieldModel,
    a: DSequence,
    b: DSequence,
    r: f64,
    chain: Vec<MultiIndex>,
}

fn enum_instance(seed: u64) -> EnumInstance {
    let mut rng = CellRng::keyed(0x3333, seed, &[0]);
    let d = 1 + (rng.next_u64() % 2) as usize;
    let shape = loop {
        let coords: Vec<usize> = (0..d).map(|_| 1 + (rng.next_u64() % 9) as usize).collect();
        let cells: usize = coords.iter().product();
        if (2..=9).contains(&cells) {
            break coords;
        }
    };
    let v1 = -2.0 + 1.8 * rng.next_open01();
    let v2 = 0.2 + 1.8 * rng.next_open01();
    let p = 0.15 + 0.7 * rng.next_open01();
    let model = FieldModel::iid(
        Margin::Finite {
            values: vec![v1, v2],
            probs: vec![p, 1.0 - p],
        },
        seed,
    );
    let a = random_positive_a(d, 7000 + seed);
    let b = random_monotone_product_b(d, 7000 + seed);
    let r = [0.5, 1.0, 2.0][(rng.next_u64() % 3) as usize];
    let mut chain = vec![mi(&vec![1; d])];
    let mut cur = vec![1usize; d];
    while cur != shape {
        let j = (rng.next_u64() % d as u64) as usize;
        if cur[j] < shape[j] {
            cur[j] += 1;
            chain.push(mi(&cur));
        }
    }
    EnumInstance {
        model,
        a,
        b,
        r,
        chain,
    }
}

#[test]
fn criterion_3_exact_transfer_soundness() {
    let crit = Criterion::new("criterion 3 (exact probability transfer)", 120.0);
    let mut checked_points = 0usize;
    for seed in 0..100u64 {
        let inst = enum_instance(seed);
        let eps = default_eps_grid(&inst.model, inst.chain.last().unwrap(), None, EvalMode::Exact)
            .unwrap();
        assert_eq!(eps.values.len(), 7);
        let c = fit_constant(
            &inst.model,
            &inst.a,
            inst.r,
            &inst.chain,
            &eps.values,
            EvalMode::Exact,
        )
        .unwrap();
        let report = check_transfer_prob(
            &inst.model,
            &inst.a,
            &inst.b,
            inst.r,
            &inst.chain,
            &eps.values,
            EvalMode::Exact,
        )
        .unwrap();
        assert!(
            report.passed(),
            "seed {seed}: transfer violated with C = {c}: {:?}",
            report.status
        );
        assert!((report.fitted_c - c).abs() <= 1e-15 * c.max(1.0));
        checked_points += report.points.len();
    }
    crit.finish(format!(
        "100 instances, {checked_points} grid points, zero violations of the 4^d C bound"
    ));
}

#[test]
fn criterion_4_moment_transfer_and_bridge() {
    let crit = Criterion::new("criterion 4 (moment transfer and bridge)", 120.0);
    for seed in 0..100u64 {
        let inst = enum_instance(seed);
        let cm = fit_moment_constant(&inst.model, &inst.a, inst.r, &inst.chain, EvalMode::Exact)
            .unwrap();
        let base = inst.a.clone();
        let a_scaled = DSequence::from_fn("scaled-a", base.d(), base.flags(), move |coords| {
            cm * base.eval_at(coords)
        });
        let moment = check_transfer_moment(
            &inst.model,
            &a_scaled,
            &inst.b,
            inst.r,
            &inst.chain,
            EvalMode::Exact,
        )
        .unwrap();
        assert!(moment.passed(), "seed {seed}: {:?}", moment.status);

        let eps = default_eps_grid(&inst.model, inst.chain.last().unwrap(), None, EvalMode::Exact)
            .unwrap();
        let bridge = markov_bridge(
            &inst.model,
            &a_scaled,
            inst.r,
            &inst.chain,
            &eps.values,
            EvalMode::Exact,
        )
        .unwrap();
        assert!(bridge.passed(), "seed {seed}: {:?}", bridge.status);
    }
    crit.finish("100 instances, enumerated expectations, zero violations".into());
}

#[test]
fn criterion_5_interval_coverage() {
    let crit = Criterion::new("criterion 5 (interval coverage)", 60.0);
    let mut covered = 0;
    let total = 20u64;
    for seed in 0..total {
        let inst = enum_instance(500 + seed);
        let n = inst.chain.last().unwrap();
        let eps = default_eps_grid(&inst.model, n, None, EvalMode::Exact).unwrap().values[3];
        let exact = exact_tail_prob(&inst.model, n, eps, None).unwrap();
        let ci = estimate_tail_prob(&inst.model, n, eps, None, 10_000, 900 + seed).unwrap();
        if ci.lower <= exact && exact <= ci.upper {
            covered += 1;
        }
    }
    assert!(covered >= 18, "coverage {covered}/20");
    crit.finish(format!(
        "99% Wilson intervals from 10^4 replications covered the exact value in {covered}/20 cases"
    ));
}

#[test]
fn criterion_6_normalizer_construction() {
    let crit = Criterion::new("criterion 6 (normalizer construction)", 60.0);
    let a = DSequence::power(2, -1.0);
    let b = DSequence::logplus(2);
    let horizon = mi(&[1024, 1024]);
    let built = construct_beta(&a, &b, 2.0, &horizon, 1e-4).unwrap();
    let rep = &built.report;
    assert!(
        rep.quarter_decay >= 2.0,
        "diagonal ratio decayed only {:.3}x from first to last quarter",
        rep.quarter_decay
    );
    assert!(
        rep.beta_tail_increment < 1e-4,
        "final relative increment {} of the weighted series",
        rep.beta_tail_increment
    );
    assert!(rep.beta_bound_stable);
    assert!(rep.ratio_nonincreasing_after_knee);
    crit.finish(format!(
        "ratio decay {:.3}x (>= 2 required), weighted-series increment {:.2e} (< 1e-4 required)",
        rep.quarter_decay, rep.beta_tail_increment
    ));
}

#[test]
fn criterion_7_logweighted_demo() {
    let crit = Criterion::new("criterion 7 (log-weighted demo)", 180.0);
    let model = FieldModel::iid(Margin::Rademacher, 7);
    let schedule = RectangleSchedule::dyadic_diagonal(2, 10).unwrap();
    let demo = logweighted_demo(&model, &schedule, 100, 7, None).unwrap();
    assert!(
        demo.trend.decreasing_fraction >= 0.9,
        "median |statistic| decreased in only {}/{} steps",
        demo.trend.decreasing_steps,
        demo.trend.total_steps
    );
    assert!(
        demo.trend.final_median < 0.05,
        "final median {}",
        demo.trend.final_median
    );

    // negative control: all-ones field against the harmonic-number oracle
    let ones = FieldModel::iid(Margin::PointMass { value: 1.0 }, 0);
    let n = mi(&[1024, 1024]);
    let x = generate(&ones, &n, 0).unwrap();
    let control = logweighted_statistic_of_table(&x, &n).unwrap();
    let h1024: f64 = (1..=1024).map(|k| 1.0 / k as f64).sum();
    let oracle = (h1024 / 1024f64.ln()).powi(2);
    let rel = (control - oracle).abs() / oracle;
    assert!(rel < 0.02, "control off by {rel:.4} relative");
    crit.finish(format!(
        "median decreasing in {}/{} steps, final {:.4}; control within {:.2e} of the oracle",
        demo.trend.decreasing_steps, demo.trend.total_steps, demo.trend.final_median, rel
    ));
}

#[test]
fn criterion_8_engine_exactness() {
    let crit = Criterion::new("criterion 8 (engine exactness)", 30.0);
    let mut tables = 0usize;
    for inst in 0..1000u64 {
        let mut rng = CellRng::keyed(0x8888, inst, &[0]);
        let d = 1 + (rng.next_u64() % 3) as usize;
        let shape: Vec<usize> = match d {
            1 => vec![1 + (rng.next_u64() % 512) as usize],
            2 => vec![
                1 + (rng.next_u64() % 22) as usize,
                1 + (rng.next_u64() % 22) as usize,
            ],
            _ => vec![
                1 + (rng.next_u64() % 8) as usize,
                1 + (rng.next_u64() % 8) as usize,
                1 + (rng.next_u64() % 8) as usize,
            ],
        };
        let n = mi(&shape);
        let t = LatticeTable::from_fn(n.clone(), |coords| {
            let key: Vec<i64> = coords.iter().map(|&c| c as i64).collect();
            ((CellRng::keyed(inst, 1, &key).next_u64() % 41) as i64 - 20) as f64
        })
        .unwrap();
        let s = t.prefix_sums().unwrap();
        // brute-force rectangle summation, exact in integer arithmetic
        for m in iter_rectangle(&n) {
            let direct: f64 = iter_rectangle(&m).filter(|k| k.le(&m)).map(|k| t.get(&k)).sum();
            assert_eq!(s.get(&m), direct, "prefix mismatch at {m} in table {inst}");
        }
        // running max against the quadratic scan oracle
        let mmax = s.running_weighted_max(|_| 1.0).unwrap();
        for l in iter_rectangle(&n) {
            let direct = iter_rectangle(&l)
                .filter(|m| m.le(&l))
                .map(|m| s.get(&m).abs())
                .fold(f64::NEG_INFINITY, f64::max);
            assert_eq!(mmax.get(&l), direct, "running-max mismatch at {l}");
        }
        tables += 1;
    }
    crit.finish(format!("{tables} random integer tables match both oracles exactly"));
}

#[test]
fn criterion_9_reproducibility() {
    let crit = Criterion::new("criterion 9 (reproducibility)", 60.0);
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("cfg.toml");
    std::fs::write(
        &cfg_path,
        r#"
seed = 31
d = 2
r = 2.0
reps = 200

[model]
kind = "moving_average"
margin = "normal:0,1"
window = "2x2"

[sequences]
a = "constant:1"
b = "size"

[grid]
ns = ["2x2", "4x4"]
mode = "monte_carlo"
"#,
    )
    .unwrap();
    let mut csvs = Vec::new();
    for sub in ["a", "b"] {
        let out = dir.path().join(sub);
        let st = std::process::Command::new(env!("CARGO_BIN_EXE_fieldmax"))
            .args(["verify-transfer", "prob", "--config", cfg_path.to_str().unwrap()])
            .arg("--out")
            .arg(&out)
            .status()
            .unwrap();
        assert!(st.success());
        csvs.push(std::fs::read(out.join("transfer_prob.csv")).unwrap());
    }
    assert_eq!(csvs[0], csvs[1], "reruns differ");

    // a second command: simulate
    let sim_cfg = dir.path().join("sim.toml");
    std::fs::write(
        &sim_cfg,
        r#"
seed = 3
d = 2
reps = 3

[model]
kind = "iid"
margin = "uniform:-1,1"

[grid]
ns = ["4x4"]
"#,
    )
    .unwrap();
    let mut sims = Vec::new();
    for sub in ["sa", "sb"] {
        let out = dir.path().join(sub);
        let st = std::process::Command::new(env!("CARGO_BIN_EXE_fieldmax"))
            .args(["simulate", "--config", sim_cfg.to_str().unwrap()])
            .arg("--out")
            .arg(&out)
            .status()
            .unwrap();
        assert!(st.success());
        sims.push(std::fs::read(out.join("simulate.csv")).unwrap());
    }
    assert_eq!(sims[0], sims[1], "simulate reruns differ");
    crit.finish("two commands rerun byte-identically".into());
}
