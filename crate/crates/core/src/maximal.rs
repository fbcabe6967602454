//! Both sides of the weighted maximal inequalities: Monte Carlo and
//! exact-enumeration evaluation of tail probabilities and moments of the
//! running maximum, constant fitting, and the probability / moment
//! transfer checks with the dimension-dependent constant 4^d.
//!
//! Event convention: tail events use the inclusive `>= eps`, which matters
//! when an enumeration atom lands exactly on the threshold.

use serde::Serialize;

use crate::dsequences::{eval_table, DSequence};
use crate::error::{Error, Result};
use crate::exec;
use crate::fieldgen::{enumerate_outcomes, generate, FieldModel};
use crate::lattice::{LatticeTable, MultiIndex};
use crate::numeric::{inverse_normal_cdf, median, sum_compensated, wilson_interval, CompensatedSum};

/// Default two-sided confidence level for Monte Carlo intervals.
pub const DEFAULT_CONFIDENCE: f64 = 0.99;

/// Point estimate with a confidence interval.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct EstimateCI {
    pub point: f64,
    pub lower: f64,
    pub upper: f64,
    pub replications: u64,
}

/// How grid quantities are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum EvalMode {
    /// Outcome enumeration; no sampling error, no tolerance.
    Exact,
    /// Seeded Monte Carlo; C fitting and pass verdicts use the
    /// conservative side of the interval.
    MonteCarlo { reps: u64, seed: u64, confidence: f64 },
}

impl EvalMode {
    pub fn monte_carlo(reps: u64, seed: u64) -> Self {
        EvalMode::MonteCarlo {
            reps,
            seed,
            confidence: DEFAULT_CONFIDENCE,
        }
    }
}

/// One replicate of the weighted running-max statistic
/// max over m <= n of |S_m| * w(m).
pub fn replicate_max_stat(
    model: &FieldModel,
    n: &MultiIndex,
    weights: Option<&LatticeTable>,
    replicate: u64,
) -> Result<f64> {
    let x = generate(model, n, replicate)?;
    let s = x.prefix_sums()?;
    match weights {
        Some(w) => s.weighted_abs_max(|c| w.get_at(c)),
        None => s.weighted_abs_max(|_| 1.0),
    }
}

fn weight_table(weights: Option<&DSequence>, n: &MultiIndex) -> Result<Option<LatticeTable>> {
    weights.map(|w| eval_table(w, n)).transpose()
}

fn mc_stats(
    model: &FieldModel,
    n: &MultiIndex,
    weights: Option<&DSequence>,
    reps: u64,
    seed: u64,
) -> Result<Vec<f64>> {
    if reps == 0 {
        return Err(Error::InvalidParameter("reps must be at least 1".into()));
    }
    let eff = model.with_seed(seed);
    let wtab = weight_table(weights, n)?;
    exec::map_indexed(reps, |rep| {
        replicate_max_stat(&eff, n, wtab.as_ref(), rep)
    })
    .into_iter()
    .collect()
}

/// Monte Carlo estimate of P(max_{m<=n} |S_m| w_m >= eps) with a Wilson
/// interval. Weights default to 1.
pub fn estimate_tail_prob(
    model: &FieldModel,
    n: &MultiIndex,
    eps: f64,
    weights: Option<&DSequence>,
    reps: u64,
    seed: u64,
) -> Result<EstimateCI> {
    estimate_tail_prob_with(model, n, eps, weights, reps, seed, DEFAULT_CONFIDENCE)
}

pub fn estimate_tail_prob_with(
    model: &FieldModel,
    n: &MultiIndex,
    eps: f64,
    weights: Option<&DSequence>,
    reps: u64,
    seed: u64,
    confidence: f64,
) -> Result<EstimateCI> {
    if eps <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "threshold must be positive, got {eps}"
        )));
    }
    let stats = mc_stats(model, n, weights, reps, seed)?;
    let hits = stats.iter().filter(|&&s| s >= eps).count() as u64;
    let (lower, upper) = wilson_interval(hits, reps, confidence);
    Ok(EstimateCI {
        point: hits as f64 / reps as f64,
        lower,
        upper,
        replications: reps,
    })
}

/// Exact tail probability by outcome enumeration (zero sampling error).
/// Accepts eps = 0, where the inclusive convention gives probability 1.
pub fn exact_tail_prob(
    model: &FieldModel,
    n: &MultiIndex,
    eps: f64,
    weights: Option<&DSequence>,
) -> Result<f64> {
    if eps < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "threshold must be nonnegative, got {eps}"
        )));
    }
    let wtab = weight_table(weights, n)?;
    exact_expectation(model, n, |stat| if stat >= eps { 1.0 } else { 0.0 }, wtab.as_ref())
}

/// Exact E[f(max stat)] over the outcome space, chunked for parallelism
/// with a fixed sequential merge order.
fn exact_expectation<F>(
    model: &FieldModel,
    n: &MultiIndex,
    f: F,
    weights: Option<&LatticeTable>,
) -> Result<f64>
where
    F: Fn(f64) -> f64 + Sync + Send,
{
    let space = enumerate_outcomes(model, n)?;
    let chunk_totals: Vec<Result<f64>> = exec::map_chunked(space.total(), |range| {
        let mut acc = CompensatedSum::new();
        for i in range {
            let (table, prob) = space.realize(i);
            let s = table.prefix_sums()?;
            let stat = match weights {
                Some(w) => s.weighted_abs_max(|c| w.get_at(c))?,
                None => s.weighted_abs_max(|_| 1.0)?,
            };
            acc.add(prob * f(stat));
        }
        Ok(acc.total())
    });
    let mut acc = CompensatedSum::new();
    for t in chunk_totals {
        acc.add(t?);
    }
    Ok(acc.total())
}

/// Monte Carlo estimate of E[(max_{m<=n} |S_m| w_m)^r] with a
/// normal-approximation interval. For heavy-tailed margins the interval
/// is unreliable; see [`FieldModel::heavy_tailed_for`].
pub fn estimate_max_moment(
    model: &FieldModel,
    n: &MultiIndex,
    r: f64,
    weights: Option<&DSequence>,
    reps: u64,
    seed: u64,
) -> Result<EstimateCI> {
    estimate_max_moment_with(model, n, r, weights, reps, seed, DEFAULT_CONFIDENCE)
}

pub fn estimate_max_moment_with(
    model: &FieldModel,
    n: &MultiIndex,
    r: f64,
    weights: Option<&DSequence>,
    reps: u64,
    seed: u64,
    confidence: f64,
) -> Result<EstimateCI> {
    if r <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "moment order must be positive, got {r}"
        )));
    }
    let stats = mc_stats(model, n, weights, reps, seed)?;
    let powered: Vec<f64> = stats.iter().map(|s| s.powf(r)).collect();
    let mean = sum_compensated(&powered) / reps as f64;
    let centered: Vec<f64> = powered.iter().map(|v| (v - mean) * (v - mean)).collect();
    let var = sum_compensated(&centered) / reps as f64;
    let z = inverse_normal_cdf(0.5 + confidence / 2.0);
    let half = z * (var / reps as f64).sqrt();
    Ok(EstimateCI {
        point: mean,
        lower: (mean - half).max(0.0),
        upper: mean + half,
        replications: reps,
    })
}

/// Exact E[(max |S| w)^r] by enumeration.
pub fn exact_max_moment(
    model: &FieldModel,
    n: &MultiIndex,
    r: f64,
    weights: Option<&DSequence>,
) -> Result<f64> {
    if r <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "moment order must be positive, got {r}"
        )));
    }
    let wtab = weight_table(weights, n)?;
    exact_expectation(model, n, |stat| stat.powf(r), wtab.as_ref())
}

/// Sum of a sequence over [1, n], rejecting negative values.
pub fn sum_sequence(a: &DSequence, n: &MultiIndex) -> Result<f64> {
    let t = eval_table(a, n)?;
    let mut bad = None;
    let total = t.fold_compensated(|coords, v| {
        if v < 0.0 && bad.is_none() {
            bad = Some(format!("{coords:?}"));
        }
        v
    });
    match bad {
        Some(at) => Err(Error::FlagViolation(format!(
            "a must be nonnegative; negative value at {at}"
        ))),
        None => Ok(total),
    }
}

/// Sum of a_m / b_m^r over [1, n].
pub fn sum_weighted_sequence(a: &DSequence, b: &DSequence, r: f64, n: &MultiIndex) -> Result<f64> {
    let ta = eval_table(a, n)?;
    let tb = eval_table(b, n)?;
    Ok(ta.fold_compensated(|coords, v| v / tb.get_at(coords).powf(r)))
}

/// The geometric default threshold grid: 7 points 2^{-3}..2^{3} around the
/// median of the max statistic.
#[derive(Debug, Clone, Serialize)]
pub struct EpsGrid {
    pub values: Vec<f64>,
    pub scale: f64,
    pub rule: String,
}

/// Build the default threshold grid for a model at rectangle n. The scale
/// is the median of the (optionally weighted) max statistic: the
/// distribution median in exact mode, the sample median in Monte Carlo
/// mode; a zero or degenerate scale falls back to 1.
pub fn default_eps_grid(
    model: &FieldModel,
    n: &MultiIndex,
    weights: Option<&DSequence>,
    mode: EvalMode,
) -> Result<EpsGrid> {
    let scale = match mode {
        EvalMode::Exact => {
            let wtab = weight_table(weights, n)?;
            let space = enumerate_outcomes(model, n)?;
            let mut atoms: Vec<(f64, f64)> = Vec::new();
            let mut err = None;
            space.for_each(|table, prob| {
                if err.is_some() {
                    return;
                }
                match table.prefix_sums().and_then(|s| match &wtab {
                    Some(w) => s.weighted_abs_max(|c| w.get_at(c)),
                    None => s.weighted_abs_max(|_| 1.0),
                }) {
                    Ok(stat) => atoms.push((stat, prob)),
                    Err(e) => err = Some(e),
                }
            });
            if let Some(e) = err {
                return Err(e);
            }
            atoms.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
            let mut cum = 0.0;
            let mut med = atoms.last().map(|a| a.0).unwrap_or(0.0);
            for (stat, p) in &atoms {
                cum += p;
                if cum >= 0.5 {
                    med = *stat;
                    break;
                }
            }
            med
        }
        EvalMode::MonteCarlo { reps, seed, .. } => {
            let stats = mc_stats(model, n, weights, reps.clamp(64, 512), seed)?;
            median(&stats)
        }
    };
    let scale = if scale > 0.0 && scale.is_finite() { scale } else { 1.0 };
    let values = (-3..=3).map(|k| scale * 2f64.powi(k)).collect();
    Ok(EpsGrid {
        values,
        scale,
        rule: "geometric 2^-3..2^3 around the median max statistic".into(),
    })
}

/// Smallest C with lhs(n, eps) <= C eps^-r * sum_{l<=n} a_l over the whole
/// grid. Monte Carlo mode uses upper confidence bounds for lhs, making the
/// fitted C conservative.
pub fn fit_constant(
    model: &FieldModel,
    a: &DSequence,
    r: f64,
    n_grid: &[MultiIndex],
    eps_grid: &[f64],
    mode: EvalMode,
) -> Result<f64> {
    if n_grid.is_empty() || eps_grid.is_empty() {
        return Err(Error::InvalidParameter("grids must be nonempty".into()));
    }
    if r <= 0.0 {
        return Err(Error::InvalidParameter(format!("r must be positive, got {r}")));
    }
    let mut c = 0.0f64;
    for n in n_grid {
        let sa = sum_sequence(a, n)?;
        for &eps in eps_grid {
            let lhs = match mode {
                EvalMode::Exact => exact_tail_prob(model, n, eps, None)?,
                EvalMode::MonteCarlo { reps, seed, confidence } => {
                    estimate_tail_prob_with(model, n, eps, None, reps, seed, confidence)?.upper
                }
            };
            if sa == 0.0 {
                if lhs > 0.0 {
                    return Err(Error::UnsatisfiableHypothesis(format!(
                        "sum of a vanishes on [1,{n}] while the tail probability is {lhs}"
                    )));
                }
                continue;
            }
            c = c.max(lhs * eps.powf(r) / sa);
        }
    }
    Ok(c)
}

/// Fit the hypothesis constant from replicate samples of the max
/// statistic: C = max over (n, eps) of WilsonUpper(P(stat >= eps)) *
/// eps^r / sum_{l<=n} a_l. Lets callers fit against statistics of
/// transformed fields without rebuilding the sampling pipeline.
pub fn fit_constant_from_stats(
    stats_per_n: &[(MultiIndex, Vec<f64>)],
    a: &DSequence,
    r: f64,
    eps_grid: &[f64],
    confidence: f64,
) -> Result<f64> {
    if stats_per_n.is_empty() || eps_grid.is_empty() {
        return Err(Error::InvalidParameter("grids must be nonempty".into()));
    }
    let mut c = 0.0f64;
    for (n, stats) in stats_per_n {
        let sa = sum_sequence(a, n)?;
        let reps = stats.len() as u64;
        for &eps in eps_grid {
            let hits = stats.iter().filter(|&&s| s >= eps).count() as u64;
            let (_, upper) = wilson_interval(hits, reps, confidence);
            if sa == 0.0 {
                if upper > 0.0 {
                    return Err(Error::UnsatisfiableHypothesis(format!(
                        "sum of a vanishes on [1,{n}] while the tail bound is {upper}"
                    )));
                }
                continue;
            }
            c = c.max(upper * eps.powf(r) / sa);
        }
    }
    Ok(c)
}

/// Largest ratio E[max |S|^r] / sum a over the grid: the scale that makes
/// the moment hypothesis hold with equality at its binding point.
pub fn fit_moment_constant(
    model: &FieldModel,
    a: &DSequence,
    r: f64,
    n_grid: &[MultiIndex],
    mode: EvalMode,
) -> Result<f64> {
    if n_grid.is_empty() {
        return Err(Error::InvalidParameter("n grid must be nonempty".into()));
    }
    let mut c = 0.0f64;
    for n in n_grid {
        let sa = sum_sequence(a, n)?;
        let lhs = match mode {
            EvalMode::Exact => exact_max_moment(model, n, r, None)?,
            EvalMode::MonteCarlo { reps, seed, confidence } => {
                estimate_max_moment_with(model, n, r, None, reps, seed, confidence)?.upper
            }
        };
        if sa == 0.0 {
            if lhs > 0.0 {
                return Err(Error::UnsatisfiableHypothesis(format!(
                    "sum of a vanishes on [1,{n}] while the moment is {lhs}"
                )));
            }
            continue;
        }
        c = c.max(lhs / sa);
    }
    Ok(c)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReportKind {
    ProbTransfer,
    MomentTransfer,
    MarkovBridge,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum ReportStatus {
    Pass,
    Violation { failing_points: usize },
    /// The hypothesis side failed, so the implication says nothing.
    Inapplicable { reason: String },
}

#[derive(Debug, Clone, Serialize)]
pub struct GridPointReport {
    pub n: MultiIndex,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    pub lhs: f64,
    pub lhs_lo: f64,
    pub lhs_hi: f64,
    pub rhs: f64,
    pub verdict: bool,
}

/// Two-sided report for one transfer (or bridge) check over a grid.
#[derive(Debug, Clone, Serialize)]
pub struct InequalityReport {
    pub kind: ReportKind,
    pub mode: EvalMode,
    pub fitted_c: f64,
    /// 4^d for the transfers, 1 for the Markov bridge.
    pub transfer_constant: f64,
    pub status: ReportStatus,
    pub heavy_tail_warning: bool,
    /// Largest observed lhs/rhs over the grid (no tightness conclusion is
    /// drawn from it).
    pub max_lhs_rhs_ratio: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid_rule: Option<String>,
    pub points: Vec<GridPointReport>,
}

impl InequalityReport {
    pub fn passed(&self) -> bool {
        self.status == ReportStatus::Pass
    }

    /// Fixed CSV schema: one row per grid point.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,eps,lhs,lhs_lo,lhs_hi,rhs,verdict\n");
        for p in &self.points {
            let eps = p.eps.map(|e| e.to_string()).unwrap_or_default();
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                p.n.compact(),
                eps,
                p.lhs,
                p.lhs_lo,
                p.lhs_hi,
                p.rhs,
                if p.verdict { "pass" } else { "fail" }
            ));
        }
        out
    }
}

fn assemble_status(points: &[GridPointReport]) -> ReportStatus {
    let failing = points.iter().filter(|p| !p.verdict).count();
    if failing == 0 {
        ReportStatus::Pass
    } else {
        ReportStatus::Violation {
            failing_points: failing,
        }
    }
}

fn max_ratio(points: &[GridPointReport]) -> f64 {
    points
        .iter()
        .filter(|p| p.rhs > 0.0)
        .map(|p| p.lhs / p.rhs)
        .fold(0.0, f64::max)
}

/// Relative slack used when verifying a fitted hypothesis whose binding
/// point holds with equality; absorbs float rounding only.
const HYPOTHESIS_SLACK: f64 = 1e-12;

fn require_transfer_b(b: &DSequence, n_max: &MultiIndex) -> Result<()> {
    if !b.is_product_type() {
        return Err(Error::InvalidParameter(
            "transfer checks need a product-type b".into(),
        ));
    }
    let flags = b.flags();
    if !(flags.positive && flags.nondecreasing) {
        return Err(Error::InvalidParameter(
            "transfer checks need b positive and nondecreasing".into(),
        ));
    }
    b.validate(n_max)
}

fn grid_max(n_grid: &[MultiIndex]) -> MultiIndex {
    let mut m = n_grid[0].clone();
    for n in &n_grid[1..] {
        m = m.join(n);
    }
    m
}

/// Verify the probability transfer: fit C on the unweighted side, then
/// check P(max |S_l| / b_l >= eps) <= 4^d C eps^-r sum a_l b_l^-r at every
/// grid point.
pub fn check_transfer_prob(
    model: &FieldModel,
    a: &DSequence,
    b: &DSequence,
    r: f64,
    n_grid: &[MultiIndex],
    eps_grid: &[f64],
    mode: EvalMode,
) -> Result<InequalityReport> {
    if n_grid.is_empty() || eps_grid.is_empty() {
        return Err(Error::InvalidParameter("grids must be nonempty".into()));
    }
    require_transfer_b(b, &grid_max(n_grid))?;
    let d = n_grid[0].d();
    let c = fit_constant(model, a, r, n_grid, eps_grid, mode)?;
    let factor = 4f64.powi(d as i32);
    let weights = b.reciprocal();

    let mut points = Vec::with_capacity(n_grid.len() * eps_grid.len());
    for n in n_grid {
        let sab = sum_weighted_sequence(a, b, r, n)?;
        for &eps in eps_grid {
            let (lhs, lo, hi) = match mode {
                EvalMode::Exact => {
                    let p = exact_tail_prob(model, n, eps, Some(&weights))?;
                    (p, p, p)
                }
                EvalMode::MonteCarlo { reps, seed, confidence } => {
                    let ci =
                        estimate_tail_prob_with(model, n, eps, Some(&weights), reps, seed, confidence)?;
                    (ci.point, ci.lower, ci.upper)
                }
            };
            let rhs = factor * c * eps.powf(-r) * sab;
            points.push(GridPointReport {
                n: n.clone(),
                eps: Some(eps),
                lhs,
                lhs_lo: lo,
                lhs_hi: hi,
                rhs,
                verdict: hi <= rhs,
            });
        }
    }
    Ok(InequalityReport {
        kind: ReportKind::ProbTransfer,
        mode,
        fitted_c: c,
        transfer_constant: factor,
        status: assemble_status(&points),
        heavy_tail_warning: false,
        max_lhs_rhs_ratio: max_ratio(&points),
        grid_rule: None,
        points,
    })
}

/// Verify the moment transfer: given E max |S_l|^r <= sum a_l on the grid,
/// check E max (|S_l|/b_l)^r <= 4^d sum a_l b_l^-r.
pub fn check_transfer_moment(
    model: &FieldModel,
    a: &DSequence,
    b: &DSequence,
    r: f64,
    n_grid: &[MultiIndex],
    mode: EvalMode,
) -> Result<InequalityReport> {
    if n_grid.is_empty() {
        return Err(Error::InvalidParameter("n grid must be nonempty".into()));
    }
    require_transfer_b(b, &grid_max(n_grid))?;
    let d = n_grid[0].d();
    let factor = 4f64.powi(d as i32);
    let weights = b.reciprocal();
    let heavy = model.heavy_tailed_for(r);

    // hypothesis side first
    for n in n_grid {
        let sa = sum_sequence(a, n)?;
        let lhs = match mode {
            EvalMode::Exact => exact_max_moment(model, n, r, None)?,
            EvalMode::MonteCarlo { reps, seed, confidence } => {
                estimate_max_moment_with(model, n, r, None, reps, seed, confidence)?.point
            }
        };
        if lhs > sa * (1.0 + HYPOTHESIS_SLACK) {
            return Ok(InequalityReport {
                kind: ReportKind::MomentTransfer,
                mode,
                fitted_c: f64::NAN,
                transfer_constant: factor,
                status: ReportStatus::Inapplicable {
                    reason: format!(
                        "moment hypothesis fails at {n}: E max^r = {lhs} > sum a = {sa}"
                    ),
                },
                heavy_tail_warning: heavy,
                max_lhs_rhs_ratio: f64::NAN,
                grid_rule: None,
                points: vec![],
            });
        }
    }

    let mut points = Vec::with_capacity(n_grid.len());
    for n in n_grid {
        let sab = sum_weighted_sequence(a, b, r, n)?;
        let (lhs, lo, hi) = match mode {
            EvalMode::Exact => {
                let m = exact_max_moment(model, n, r, Some(&weights))?;
                (m, m, m)
            }
            EvalMode::MonteCarlo { reps, seed, confidence } => {
                let ci =
                    estimate_max_moment_with(model, n, r, Some(&weights), reps, seed, confidence)?;
                (ci.point, ci.lower, ci.upper)
            }
        };
        let rhs = factor * sab;
        points.push(GridPointReport {
            n: n.clone(),
            eps: None,
            lhs,
            lhs_lo: lo,
            lhs_hi: hi,
            rhs,
            verdict: hi <= rhs,
        });
    }
    Ok(InequalityReport {
        kind: ReportKind::MomentTransfer,
        mode,
        fitted_c: 1.0,
        transfer_constant: factor,
        status: assemble_status(&points),
        heavy_tail_warning: heavy,
        max_lhs_rhs_ratio: max_ratio(&points),
        grid_rule: None,
        points,
    })
}

/// The Markov reduction from moments to probabilities: when the moment
/// hypothesis E max |S|^r <= sum a holds on the grid, the probability
/// hypothesis P(max >= eps) <= eps^-r sum a holds pointwise with C = 1.
pub fn markov_bridge(
    model: &FieldModel,
    a: &DSequence,
    r: f64,
    n_grid: &[MultiIndex],
    eps_grid: &[f64],
    mode: EvalMode,
) -> Result<InequalityReport> {
    if n_grid.is_empty() || eps_grid.is_empty() {
        return Err(Error::InvalidParameter("grids must be nonempty".into()));
    }
    if r <= 0.0 {
        return Err(Error::InvalidParameter(format!("r must be positive, got {r}")));
    }
    let heavy = model.heavy_tailed_for(r);
    for n in n_grid {
        let sa = sum_sequence(a, n)?;
        let moment = match mode {
            EvalMode::Exact => exact_max_moment(model, n, r, None)?,
            EvalMode::MonteCarlo { reps, seed, confidence } => {
                estimate_max_moment_with(model, n, r, None, reps, seed, confidence)?.point
            }
        };
        if moment > sa * (1.0 + HYPOTHESIS_SLACK) {
            return Ok(InequalityReport {
                kind: ReportKind::MarkovBridge,
                mode,
                fitted_c: f64::NAN,
                transfer_constant: 1.0,
                status: ReportStatus::Inapplicable {
                    reason: format!(
                        "moment hypothesis fails at {n}: E max^r = {moment} > sum a = {sa}"
                    ),
                },
                heavy_tail_warning: heavy,
                max_lhs_rhs_ratio: f64::NAN,
                grid_rule: None,
                points: vec![],
            });
        }
    }

    let mut points = Vec::with_capacity(n_grid.len() * eps_grid.len());
    for n in n_grid {
        let sa = sum_sequence(a, n)?;
        for &eps in eps_grid {
            let (lhs, lo, hi) = match mode {
                EvalMode::Exact => {
                    let p = exact_tail_prob(model, n, eps, None)?;
                    (p, p, p)
                }
                EvalMode::MonteCarlo { reps, seed, confidence } => {
                    let ci = estimate_tail_prob_with(model, n, eps, None, reps, seed, confidence)?;
                    (ci.point, ci.lower, ci.upper)
                }
            };
            let rhs = eps.powf(-r) * sa;
            points.push(GridPointReport {
                n: n.clone(),
                eps: Some(eps),
                lhs,
                lhs_lo: lo,
                lhs_hi: hi,
                rhs,
                verdict: hi <= rhs,
            });
        }
    }
    Ok(InequalityReport {
        kind: ReportKind::MarkovBridge,
        mode,
        fitted_c: 1.0,
        transfer_constant: 1.0,
        status: assemble_status(&points),
        heavy_tail_warning: heavy,
        max_lhs_rhs_ratio: max_ratio(&points),
        grid_rule: None,
        points,
    })
}
