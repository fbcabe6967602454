//! d-sequences: real-valued families indexed by the lattice.
//!
//! Covers the closed-form families used throughout (rectangle size,
//! clipped-log weight, powers, geometrics), product-type construction
//! from per-coordinate factors, horizon-based series convergence
//! verdicts, and the slower-growing normalizer construction that turns a
//! convergent weighted series into a strong-law normalizer.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::{LatticeTable, MultiIndex, RectangleSchedule};
use crate::numeric::CompensatedSum;

/// Declared properties of a sequence. Declarations are spot-checkable via
/// [`DSequence::validate`]; flags a family cannot honestly claim are left
/// false.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct SeqFlags {
    pub nonnegative: bool,
    pub positive: bool,
    pub nondecreasing: bool,
    pub unbounded: bool,
}

/// One per-coordinate factor of a product-type d-sequence.
#[derive(Clone)]
pub struct Factor {
    name: String,
    eval: Arc<dyn Fn(usize) -> f64 + Send + Sync>,
    pub positive: bool,
    pub nondecreasing: bool,
    pub unbounded: bool,
}

impl fmt::Debug for Factor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Factor")
            .field("name", &self.name)
            .field("positive", &self.positive)
            .field("nondecreasing", &self.nondecreasing)
            .field("unbounded", &self.unbounded)
            .finish()
    }
}

impl Factor {
    pub fn new<F>(name: impl Into<String>, positive: bool, nondecreasing: bool, unbounded: bool, eval: F) -> Self
    where
        F: Fn(usize) -> f64 + Send + Sync + 'static,
    {
        Self {
            name: name.into(),
            eval: Arc::new(eval),
            positive,
            nondecreasing,
            unbounded,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    #[inline]
    pub fn eval(&self, k: usize) -> f64 {
        debug_assert!(k >= 1);
        (self.eval)(k)
    }

    /// Values at 1..=len.
    pub fn tabulate(&self, len: usize) -> Vec<f64> {
        (1..=len).map(|k| self.eval(k)).collect()
    }

    /// Identity factor k -> k.
    pub fn identity() -> Self {
        Self::new("id", true, true, true, |k| k as f64)
    }

    pub fn power(p: f64) -> Self {
        Self::new(
            format!("power:{p}"),
            true,
            p >= 0.0,
            p > 0.0,
            move |k| (k as f64).powf(p),
        )
    }

    pub fn logplus() -> Self {
        Self::new("logplus", true, true, true, |k| (k as f64).ln().max(1.0))
    }

    pub fn constant(v: f64) -> Self {
        Self::new(format!("constant:{v}"), v > 0.0, true, false, move |_| v)
    }

    pub fn geometric(q: f64) -> Self {
        Self::new(
            format!("geometric:{q}"),
            q > 0.0,
            q >= 1.0,
            q > 1.0,
            move |k| q.powi(k as i32),
        )
    }

    /// Tabulated factor; evaluation beyond the table holds the last value.
    pub fn from_table(name: impl Into<String>, table: Vec<f64>, positive: bool, nondecreasing: bool, unbounded: bool) -> Self {
        let table = Arc::new(table);
        let t = Arc::clone(&table);
        Self::new(name, positive, nondecreasing, unbounded, move |k| {
            let i = (k - 1).min(t.len() - 1);
            t[i]
        })
    }
}

type PointwiseEval = Arc<dyn Fn(&[usize]) -> f64 + Send + Sync>;

enum Repr {
    Pointwise(PointwiseEval),
    Product(Vec<Factor>),
}

impl Clone for Repr {
    fn clone(&self) -> Self {
        match self {
            Repr::Pointwise(f) => Repr::Pointwise(Arc::clone(f)),
            Repr::Product(fs) => Repr::Product(fs.clone()),
        }
    }
}

/// A real-valued family indexed by the d-dimensional lattice.
#[derive(Clone)]
pub struct DSequence {
    d: usize,
    repr: Repr,
    flags: SeqFlags,
    name: String,
}

impl fmt::Debug for DSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DSequence")
            .field("name", &self.name)
            .field("d", &self.d)
            .field("product_type", &self.is_product_type())
            .field("flags", &self.flags)
            .finish()
    }
}

impl DSequence {
    pub fn from_fn<F>(name: impl Into<String>, d: usize, flags: SeqFlags, eval: F) -> Self
    where
        F: Fn(&[usize]) -> f64 + Send + Sync + 'static,
    {
        Self {
            d,
            repr: Repr::Pointwise(Arc::new(eval)),
            flags,
            name: name.into(),
        }
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn flags(&self) -> SeqFlags {
        self.flags
    }

    pub fn is_product_type(&self) -> bool {
        matches!(self.repr, Repr::Product(_))
    }

    pub fn factors(&self) -> Option<&[Factor]> {
        match &self.repr {
            Repr::Product(fs) => Some(fs),
            Repr::Pointwise(_) => None,
        }
    }

    #[inline]
    pub fn eval_at(&self, coords: &[usize]) -> f64 {
        debug_assert_eq!(coords.len(), self.d);
        match &self.repr {
            Repr::Pointwise(f) => f(coords),
            Repr::Product(fs) => fs
                .iter()
                .zip(coords)
                .map(|(f, &c)| f.eval(c))
                .product(),
        }
    }

    pub fn eval(&self, m: &MultiIndex) -> f64 {
        self.eval_at(m.coords())
    }

    /// Rectangle size ⟨n⟩ as a d-sequence.
    pub fn size(d: usize) -> Self {
        Self {
            d,
            repr: Repr::Product(vec![Factor::identity(); d]),
            flags: SeqFlags {
                nonnegative: true,
                positive: true,
                nondecreasing: true,
                unbounded: true,
            },
            name: "size".into(),
        }
    }

    /// Clipped-log weight |log n| as a d-sequence (always >= 1).
    pub fn logplus(d: usize) -> Self {
        Self {
            d,
            repr: Repr::Product(vec![Factor::logplus(); d]),
            flags: SeqFlags {
                nonnegative: true,
                positive: true,
                nondecreasing: true,
                unbounded: true,
            },
            name: "logplus".into(),
        }
    }

    pub fn constant(d: usize, v: f64) -> Self {
        let mut fs = vec![Factor::constant(1.0); d];
        fs[0] = Factor::constant(v);
        Self {
            d,
            repr: Repr::Product(fs),
            flags: SeqFlags {
                nonnegative: v >= 0.0,
                positive: v > 0.0,
                nondecreasing: true,
                unbounded: false,
            },
            name: format!("constant:{v}"),
        }
    }

    /// ⟨n⟩^p as a product of per-coordinate powers.
    pub fn power(d: usize, p: f64) -> Self {
        Self {
            d,
            repr: Repr::Product(vec![Factor::power(p); d]),
            flags: SeqFlags {
                nonnegative: true,
                positive: true,
                nondecreasing: p >= 0.0,
                unbounded: p > 0.0,
            },
            name: format!("power:{p}"),
        }
    }

    pub fn geometric(d: usize, q: f64) -> Result<Self> {
        if q <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "geometric ratio must be positive, got {q}"
            )));
        }
        Ok(Self {
            d,
            repr: Repr::Product(vec![Factor::geometric(q); d]),
            flags: SeqFlags {
                nonnegative: true,
                positive: true,
                nondecreasing: q >= 1.0,
                unbounded: q > 1.0,
            },
            name: format!("geometric:{q}"),
        })
    }

    /// Divide every factor by its value at 1, so the resulting product
    /// sequence equals 1 at (1,...,1). Ratios b_n / b_m are unchanged.
    pub fn normalized_to_first(&self) -> Result<Self> {
        let factors = self.factors().ok_or_else(|| {
            Error::InvalidParameter("normalization needs a product-type sequence".into())
        })?;
        let normalized = factors
            .iter()
            .map(|f| {
                let first = f.eval(1);
                if !(first > 0.0) {
                    return Err(Error::InvalidParameter(format!(
                        "factor {} has nonpositive first value {first}",
                        f.name
                    )));
                }
                let inner = Arc::clone(&f.eval);
                Ok(Factor::new(
                    format!("{}/first", f.name),
                    f.positive,
                    f.nondecreasing,
                    f.unbounded,
                    move |k| inner(k) / first,
                ))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            d: self.d,
            repr: Repr::Product(normalized),
            flags: self.flags,
            name: format!("{}(normalized)", self.name),
        })
    }

    /// Pointwise reciprocal, used to turn a normalizer b into the weight
    /// family 1/b. Factor structure is preserved for product inputs.
    pub fn reciprocal(&self) -> Self {
        let flags = SeqFlags {
            nonnegative: self.flags.positive,
            positive: self.flags.positive,
            nondecreasing: false,
            unbounded: false,
        };
        match &self.repr {
            Repr::Product(fs) => {
                let inv = fs
                    .iter()
                    .map(|f| {
                        let inner = Arc::clone(&f.eval);
                        Factor::new(format!("1/{}", f.name), f.positive, false, false, move |k| {
                            1.0 / inner(k)
                        })
                    })
                    .collect();
                Self {
                    d: self.d,
                    repr: Repr::Product(inv),
                    flags,
                    name: format!("1/{}", self.name),
                }
            }
            Repr::Pointwise(f) => {
                let inner = Arc::clone(f);
                Self {
                    d: self.d,
                    repr: Repr::Pointwise(Arc::new(move |c: &[usize]| 1.0 / inner(c))),
                    flags,
                    name: format!("1/{}", self.name),
                }
            }
        }
    }

    /// Spot-check the declared flags on the rectangle [1, sample]: sign
    /// conditions at scattered points, monotonicity along the diagonal and
    /// unit steps, and factor-product consistency.
    pub fn validate(&self, sample: &MultiIndex) -> Result<()> {
        if sample.d() != self.d {
            return Err(Error::InvalidParameter(format!(
                "sample dimension {} does not match sequence dimension {}",
                sample.d(),
                self.d
            )));
        }
        let probes = sample_points(sample);
        let mut prev_diag: Option<f64> = None;
        for p in &probes {
            let v = self.eval(p);
            if !v.is_finite() {
                return Err(Error::FlagViolation(format!(
                    "{} is non-finite at {p}",
                    self.name
                )));
            }
            if self.flags.nonnegative && v < 0.0 {
                return Err(Error::FlagViolation(format!(
                    "{} declared nonnegative but equals {v} at {p}",
                    self.name
                )));
            }
            if self.flags.positive && v <= 0.0 {
                return Err(Error::FlagViolation(format!(
                    "{} declared positive but equals {v} at {p}",
                    self.name
                )));
            }
            if let Some(fs) = self.factors() {
                let prod: f64 = fs.iter().zip(p.coords()).map(|(f, &c)| f.eval(c)).product();
                let scale = v.abs().max(prod.abs()).max(1e-300);
                if (v - prod).abs() / scale > 1e-12 {
                    return Err(Error::FlagViolation(format!(
                        "{} evaluator disagrees with factor product at {p}",
                        self.name
                    )));
                }
            }
        }
        if self.flags.nondecreasing {
            let dmax = *sample.coords().iter().min().unwrap();
            for k in 1..=dmax {
                let v = self.eval(&MultiIndex::diagonal(self.d, k)?);
                if let Some(prev) = prev_diag {
                    if v < prev - 1e-12 * prev.abs().max(1.0) {
                        return Err(Error::FlagViolation(format!(
                            "{} declared nondecreasing but drops at diagonal {k}",
                            self.name
                        )));
                    }
                }
                prev_diag = Some(v);
            }
        }
        Ok(())
    }
}

fn sample_points(sample: &MultiIndex) -> Vec<MultiIndex> {
    let d = sample.d();
    let mut pts = vec![MultiIndex::diagonal(d, 1).unwrap(), sample.clone()];
    // axis-extreme corners
    for j in 0..d {
        let mut c = vec![1usize; d];
        c[j] = sample.coords()[j];
        pts.push(MultiIndex::new(c).unwrap());
    }
    // a few interior diagonal points
    let kmax = *sample.coords().iter().min().unwrap();
    let mut k = 2;
    while k < kmax {
        pts.push(MultiIndex::diagonal(d, k).unwrap());
        k *= 3;
    }
    pts
}

/// Rectangle size ⟨n⟩ = product of the coordinates.
pub fn size(n: &MultiIndex) -> u128 {
    n.cells()
}

/// Product over coordinates of max(1, ln n_i); always >= 1.
pub fn logplus_weight(n: &MultiIndex) -> f64 {
    n.coords()
        .iter()
        .map(|&c| (c as f64).ln().max(1.0))
        .product()
}

/// Build a product-type d-sequence from per-coordinate factors. Factor
/// positivity is required and spot-checked.
pub fn make_product(factors: Vec<Factor>) -> Result<DSequence> {
    if factors.is_empty() {
        return Err(Error::InvalidParameter("no factors".into()));
    }
    for f in &factors {
        for k in [1usize, 2, 3, 7, 16, 64, 257] {
            let v = f.eval(k);
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "factor {} is nonpositive ({v}) at {k}",
                    f.name()
                )));
            }
        }
    }
    let flags = SeqFlags {
        nonnegative: true,
        positive: true,
        nondecreasing: factors.iter().all(|f| f.nondecreasing),
        unbounded: factors.iter().all(|f| f.unbounded),
    };
    let name = format!(
        "product:[{}]",
        factors.iter().map(|f| f.name().to_string()).collect::<Vec<_>>().join(",")
    );
    Ok(DSequence {
        d: factors.len(),
        repr: Repr::Product(factors),
        flags,
        name,
    })
}

/// Parse a named family, e.g. `size`, `logplus`, `constant:2`, `power:-1`,
/// `geometric:0.5`, `product:[id,geometric:2]`.
pub fn parse_family(spec: &str, d: usize) -> Result<DSequence> {
    let spec = spec.trim();
    if let Some(inner) = spec.strip_prefix("product:[").and_then(|s| s.strip_suffix(']')) {
        let factors = inner
            .split(',')
            .map(|part| parse_factor(part.trim()))
            .collect::<Result<Vec<_>>>()?;
        if factors.len() != d {
            return Err(Error::InvalidParameter(format!(
                "product family lists {} factors but dimension is {d}",
                factors.len()
            )));
        }
        return make_product(factors);
    }
    let (head, arg) = match spec.split_once(':') {
        Some((h, a)) => (h, Some(a)),
        None => (spec, None),
    };
    let num = |a: Option<&str>| -> Result<f64> {
        a.ok_or_else(|| Error::InvalidParameter(format!("family `{spec}` needs a parameter")))?
            .parse::<f64>()
            .map_err(|_| Error::InvalidParameter(format!("bad numeric parameter in `{spec}`")))
    };
    match head {
        "size" => Ok(DSequence::size(d)),
        "logplus" => Ok(DSequence::logplus(d)),
        "constant" => Ok(DSequence::constant(d, arg.map_or(Ok(1.0), |a| num(Some(a)))?)),
        "power" => Ok(DSequence::power(d, num(arg)?)),
        "geometric" => DSequence::geometric(d, num(arg)?),
        _ => Err(Error::UnknownFamily(spec.into())),
    }
}

fn parse_factor(spec: &str) -> Result<Factor> {
    let (head, arg) = match spec.split_once(':') {
        Some((h, a)) => (h, Some(a)),
        None => (spec, None),
    };
    let num = |a: Option<&str>| -> Result<f64> {
        a.ok_or_else(|| Error::InvalidParameter(format!("factor `{spec}` needs a parameter")))?
            .parse::<f64>()
            .map_err(|_| Error::InvalidParameter(format!("bad numeric parameter in `{spec}`")))
    };
    match head {
        "id" => Ok(Factor::identity()),
        "power" => Ok(Factor::power(num(arg)?)),
        "logplus" => Ok(Factor::logplus()),
        "constant" => Ok(Factor::constant(arg.map_or(Ok(1.0), |a| num(Some(a)))?)),
        "geometric" => {
            let q = num(arg)?;
            if q <= 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "geometric ratio must be positive, got {q}"
                )));
            }
            Ok(Factor::geometric(q))
        }
        _ => Err(Error::UnknownFamily(spec.into())),
    }
}

/// Outcome of a horizon-based convergence diagnosis. Explicitly heuristic:
/// it inspects finitely many partial sums and says so.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SeriesOutcome {
    ConvergedAtTolerance,
    Diverging,
    Inconclusive,
}

impl fmt::Display for SeriesOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SeriesOutcome::ConvergedAtTolerance => write!(f, "converged-at-tolerance"),
            SeriesOutcome::Diverging => write!(f, "diverging"),
            SeriesOutcome::Inconclusive => write!(f, "inconclusive"),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SeriesVerdict {
    pub partial_sum: f64,
    pub horizon: MultiIndex,
    /// Relative increment between the last two horizons.
    pub tail_increment: f64,
    pub verdict: SeriesOutcome,
    /// Partial sum at every schedule point, for inspection.
    pub partials: Vec<(MultiIndex, f64)>,
}

/// Default relative-increment tolerance for convergence verdicts.
pub const DEFAULT_SERIES_TOL: f64 = 1e-6;

const DIVERGENCE_GUARD: f64 = 1e15;

/// Partial sums of a_n / b_n^r over the growing rectangles of `horizons`.
///
/// Verdict rules (heuristic by design, reported as such): converged when
/// the last inter-horizon relative increment is below `tol`; diverging
/// when the final increments stopped shrinking or the sum passed a guard;
/// inconclusive otherwise (also whenever fewer than three horizons are
/// available to compare increments).
pub fn series_sum(
    a: &DSequence,
    b: &DSequence,
    r: f64,
    horizons: &RectangleSchedule,
    tol: f64,
) -> Result<SeriesVerdict> {
    if r <= 0.0 {
        return Err(Error::InvalidParameter(format!("r must be positive, got {r}")));
    }
    if tol <= 0.0 {
        return Err(Error::InvalidParameter(format!("tol must be positive, got {tol}")));
    }
    let last = horizons.last().clone();
    let terms = term_table(a, b, r, &last)?;
    let buckets = bucket_sums(&terms, horizons);

    let mut partials = Vec::with_capacity(buckets.len());
    let mut acc = CompensatedSum::new();
    for (p, inc) in horizons.points().iter().zip(&buckets) {
        acc.add(*inc);
        partials.push((p.clone(), acc.total()));
    }
    let total = acc.total();
    let npts = partials.len();
    let last_inc = if npts >= 2 { buckets[npts - 1] } else { total };
    let rel = if total > 0.0 { last_inc / total } else { 0.0 };

    let verdict = if !total.is_finite() || total > DIVERGENCE_GUARD {
        SeriesOutcome::Diverging
    } else if npts >= 2 && rel < tol {
        SeriesOutcome::ConvergedAtTolerance
    } else if npts >= 3 && last_inc > 0.0 && last_inc >= 0.995 * buckets[npts - 2] {
        SeriesOutcome::Diverging
    } else {
        SeriesOutcome::Inconclusive
    };

    Ok(SeriesVerdict {
        partial_sum: total,
        horizon: last,
        tail_increment: rel,
        verdict,
        partials,
    })
}

/// Table of a_m / b_m^r over [1, shape], with sign/positivity checks.
fn term_table(a: &DSequence, b: &DSequence, r: f64, shape: &MultiIndex) -> Result<LatticeTable> {
    let ta = eval_table(a, shape)?;
    let tb = eval_table(b, shape)?;
    let mut bad: Option<String> = None;
    let out = ta.map_with_index(|coords, av| {
        let bv = tb.get_at(coords);
        if bad.is_none() {
            if av < 0.0 {
                bad = Some(format!("a is negative ({av}) at {coords:?}"));
            } else if !(bv > 0.0) {
                bad = Some(format!("b is nonpositive ({bv}) at {coords:?}"));
            }
        }
        av / bv.powf(r)
    });
    if let Some(msg) = bad {
        return Err(Error::FlagViolation(msg));
    }
    Ok(out)
}

/// Evaluate a sequence on a dense rectangle, tabulating factors once for
/// product-type inputs.
pub fn eval_table(seq: &DSequence, shape: &MultiIndex) -> Result<LatticeTable> {
    if let Some(factors) = seq.factors() {
        let tabs: Vec<Vec<f64>> = factors
            .iter()
            .zip(shape.coords())
            .map(|(f, &n)| f.tabulate(n))
            .collect();
        LatticeTable::from_fn(shape.clone(), |coords| {
            tabs.iter().zip(coords).map(|(t, &c)| t[c - 1]).product()
        })
    } else {
        LatticeTable::from_fn(shape.clone(), |coords| seq.eval_at(coords))
    }
}

/// Sum the table over the increments between successive schedule
/// rectangles: entry j is the sum over [1, p_j] minus [1, p_{j-1}].
fn bucket_sums(terms: &LatticeTable, horizons: &RectangleSchedule) -> Vec<f64> {
    let pts = horizons.points();
    let d = terms.shape().d();
    // first_bucket[i][v-1] = smallest schedule index whose i-th coordinate covers v
    let first_bucket: Vec<Vec<usize>> = (0..d)
        .map(|i| {
            (1..=terms.shape().coords()[i])
                .map(|v| pts.iter().position(|p| p.coords()[i] >= v).unwrap_or(pts.len()))
                .collect()
        })
        .collect();
    let mut acc: Vec<CompensatedSum> = vec![CompensatedSum::new(); pts.len()];
    terms.for_each_indexed(|coords, v| {
        let mut j = 0usize;
        for (i, &c) in coords.iter().enumerate() {
            j = j.max(first_bucket[i][c - 1]);
        }
        // j == len means the cell lies outside every schedule rectangle
        if j < acc.len() {
            acc[j].add(v);
        }
    });
    acc.iter().map(|a| a.total()).collect()
}

/// Result of the normalizer construction, carrying the sequence itself and
/// the numerically verified guarantees.
#[derive(Debug, Clone)]
pub struct BetaConstruction {
    pub beta: DSequence,
    pub report: BetaReport,
}

#[derive(Debug, Clone, Serialize)]
pub struct BetaReport {
    pub horizon: MultiIndex,
    pub tol: f64,
    /// Convergence verdict for the input series over a dyadic schedule.
    pub input_series: SeriesVerdict,
    /// Relative unit-step increment of the input series at the horizon.
    pub input_tail_increment: f64,
    /// Partial sum of a / beta^r over the horizon (the reported bound).
    pub beta_series_bound: f64,
    /// Relative unit-step increment of a / beta^r at the horizon.
    pub beta_tail_increment: f64,
    /// Whether the bound is stable (increment below tol) at the horizon.
    pub beta_bound_stable: bool,
    /// beta/b ratio along the dyadic diagonal chain.
    pub diagonal: Vec<DiagonalPoint>,
    /// Index into `diagonal` after which the ratio never increases.
    pub knee: usize,
    pub ratio_nonincreasing_after_knee: bool,
    pub first_quarter_mean: f64,
    pub last_quarter_mean: f64,
    /// first_quarter_mean / last_quarter_mean.
    pub quarter_decay: f64,
    /// Per-coordinate growth proxy: factor value at the horizon end vs 1.
    pub factor_growth: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct DiagonalPoint {
    pub n: MultiIndex,
    pub ratio: f64,
}

/// Dyadic diagonal chain clipped to an arbitrary horizon, ending exactly
/// at the horizon.
pub fn dyadic_chain_to(horizon: &MultiIndex) -> Result<RectangleSchedule> {
    let mut pts: Vec<MultiIndex> = Vec::new();
    let mut j = 0u32;
    loop {
        let p = MultiIndex::new(
            horizon
                .coords()
                .iter()
                .map(|&h| h.min(1usize << j))
                .collect(),
        )?;
        if pts.last() != Some(&p) {
            pts.push(p.clone());
        }
        if &p == horizon {
            break;
        }
        if j > 63 {
            // horizon has a coordinate beyond 2^63; unreachable at desk scale
            pts.push(horizon.clone());
            break;
        }
        j += 1;
    }
    RectangleSchedule::new(pts)
}

/// Construct a product-type normalizer beta that grows strictly slower
/// than b while keeping the partial sums of a / beta^r bounded at the
/// horizon.
///
/// Per coordinate i the factor is the running maximum of
///     b_i(k) * max(t_i(k), b_i(k)^{-r})^(1 / (2 r d))
/// where t_i(k) is the coordinate tail of a/b^r at the horizon (the sum
/// over points whose i-th coordinate is at least k). The tail branch
/// pushes the ratio beta/b toward zero, the floor branch keeps the factor
/// unbounded, and the running maximum enforces monotonicity. All claimed
/// properties are re-checked numerically and reported.
pub fn construct_beta(
    a: &DSequence,
    b: &DSequence,
    r: f64,
    horizon: &MultiIndex,
    tol: f64,
) -> Result<BetaConstruction> {
    if r <= 0.0 {
        return Err(Error::InvalidParameter(format!("r must be positive, got {r}")));
    }
    let bf = b.factors().ok_or_else(|| {
        Error::InvalidParameter("normalizer construction needs product-type b".into())
    })?;
    let flags = b.flags();
    if !(flags.positive && flags.nondecreasing && flags.unbounded) {
        return Err(Error::InvalidParameter(
            "b must be declared positive, nondecreasing and unbounded".into(),
        ));
    }
    b.validate(horizon)?;
    let d = horizon.d();
    if b.d() != d || a.d() != d {
        return Err(Error::InvalidParameter(
            "sequence dimensions do not match the horizon".into(),
        ));
    }

    // Convergence gate on the input series over a dyadic chain.
    let chain = dyadic_chain_to(horizon)?;
    let gate = series_sum(a, b, r, &chain, tol)?;
    if gate.verdict == SeriesOutcome::Diverging {
        return Err(Error::DivergentSeries(format!(
            "partial sums of a/b^r reach {:.6e} with growing increments at {}",
            gate.partial_sum, gate.horizon
        )));
    }

    // Unit-step tail stability of the input series at the horizon.
    let terms = term_table(a, b, r, horizon)?;
    let total = terms.fold_compensated(|_, v| v);
    let prev_shape = horizon.pred_clamped();
    let prev_total = sum_over(&terms, &prev_shape);
    let input_rel = if total > 0.0 { (total - prev_total) / total } else { 0.0 };
    if input_rel > tol {
        return Err(Error::HorizonTooSmall {
            increment: input_rel,
            tol,
        });
    }

    // Coordinate tails: suffix sums of per-coordinate marginals.
    let mut marginals: Vec<Vec<CompensatedSum>> = horizon
        .coords()
        .iter()
        .map(|&h| vec![CompensatedSum::new(); h])
        .collect();
    terms.for_each_indexed(|coords, v| {
        for (i, &c) in coords.iter().enumerate() {
            marginals[i][c - 1].add(v);
        }
    });
    let tails: Vec<Vec<f64>> = marginals
        .iter()
        .map(|m| {
            let mut suffix = vec![0.0; m.len()];
            let mut acc = CompensatedSum::new();
            for (k, cell) in m.iter().enumerate().rev() {
                acc.add(cell.total());
                suffix[k] = acc.total();
            }
            suffix
        })
        .collect();

    // Factor tables with running max.
    let exponent = 1.0 / (2.0 * r * d as f64);
    let mut beta_tabs: Vec<Vec<f64>> = Vec::with_capacity(d);
    let mut factor_growth = Vec::with_capacity(d);
    for (i, f) in bf.iter().enumerate() {
        let h = horizon.coords()[i];
        let mut tab = Vec::with_capacity(h);
        let mut running = f64::NEG_INFINITY;
        for k in 1..=h {
            let bv = f.eval(k);
            let g = bv * tails[i][k - 1].max(bv.powf(-r)).powf(exponent);
            running = running.max(g);
            tab.push(running);
        }
        factor_growth.push(tab[h - 1] / tab[0]);
        beta_tabs.push(tab);
    }

    // Bound for a / beta^r at the horizon, plus its unit-step stability.
    let beta_cell = |coords: &[usize]| -> f64 {
        beta_tabs
            .iter()
            .zip(coords)
            .map(|(t, &c)| t[(c - 1).min(t.len() - 1)])
            .product()
    };
    let a_tab = eval_table(a, horizon)?;
    let beta_terms = a_tab.map_with_index(|coords, av| av / beta_cell(coords).powf(r));
    let beta_total = beta_terms.fold_compensated(|_, v| v);
    let beta_prev = sum_over(&beta_terms, &prev_shape);
    let beta_rel = if beta_total > 0.0 {
        (beta_total - beta_prev) / beta_total
    } else {
        0.0
    };

    // Diagonal ratio diagnostics.
    let mut diagonal = Vec::with_capacity(chain.len());
    for p in chain.points() {
        let ratio = beta_cell(p.coords()) / b.eval(p);
        diagonal.push(DiagonalPoint {
            n: p.clone(),
            ratio,
        });
    }
    let knee = diagonal
        .iter()
        .enumerate()
        .max_by(|(_, x), (_, y)| x.ratio.partial_cmp(&y.ratio).unwrap())
        .map(|(i, _)| i)
        .unwrap_or(0);
    let ratio_nonincreasing_after_knee = diagonal[knee..]
        .windows(2)
        .all(|w| w[1].ratio <= w[0].ratio * (1.0 + 1e-12));
    let quarter = diagonal.len().div_ceil(4);
    let mean = |pts: &[DiagonalPoint]| -> f64 {
        pts.iter().map(|p| p.ratio).sum::<f64>() / pts.len() as f64
    };
    let first_quarter_mean = mean(&diagonal[..quarter]);
    let last_quarter_mean = mean(&diagonal[diagonal.len() - quarter..]);

    let report = BetaReport {
        horizon: horizon.clone(),
        tol,
        input_series: gate,
        input_tail_increment: input_rel,
        beta_series_bound: beta_total,
        beta_tail_increment: beta_rel,
        beta_bound_stable: beta_rel < tol,
        diagonal,
        knee,
        ratio_nonincreasing_after_knee,
        first_quarter_mean,
        last_quarter_mean,
        quarter_decay: first_quarter_mean / last_quarter_mean,
        factor_growth,
    };

    let factors = beta_tabs
        .into_iter()
        .enumerate()
        .map(|(i, tab)| {
            let unbounded = report.factor_growth[i] > 1.0;
            Factor::from_table(format!("beta[{i}]"), tab, true, true, unbounded)
        })
        .collect::<Vec<_>>();
    let beta = make_product(factors)?;

    Ok(BetaConstruction { beta, report })
}

/// Sum of a table restricted to the sub-rectangle [1, shape].
fn sum_over(table: &LatticeTable, shape: &MultiIndex) -> f64 {
    table.fold_compensated(|coords, v| {
        if coords.iter().zip(shape.coords()).all(|(&c, &s)| c <= s) {
            v
        } else {
            0.0
        }
    })
}
