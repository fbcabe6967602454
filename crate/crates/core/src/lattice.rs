//! Multi-index arithmetic, rectangle iteration and the partial-sum /
//! running-max engine over dense rectangles.
//!
//! The index lattice is the d-dimensional positive integer grid with the
//! componentwise partial order: `m <= n` iff every coordinate of `m` is at
//! most the matching coordinate of `n`. A [`LatticeTable`] stores one f64
//! per point of the rectangle `[1, n]` in row-major order (first
//! coordinate slowest), which makes row-major traversal coincide with
//! lexicographic order.
//!
//! `prefix_sums` turns a value table X into the table of rectangle sums
//! S_m = sum over k <= m of X_k via the d-dimensional inclusion–exclusion
//! recurrence (one pass, O(2^d) per cell). `running_weighted_max` is the
//! max-analogue used by the maximal-inequality statistics.

use std::fmt;
use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::numeric::CompensatedSum;

/// Default cap on dense table sizes. Rectangles above this are rejected
/// rather than spilled; override through [`set_cell_budget`] if a run
/// genuinely needs more.
pub const DEFAULT_CELL_BUDGET: u64 = 1 << 26;

static CELL_BUDGET: OnceLock<u64> = OnceLock::new();

/// Set the process-wide cell budget. First caller wins; later calls are
/// ignored (the budget is read by constructors, so it must be stable).
pub fn set_cell_budget(budget: u64) {
    let _ = CELL_BUDGET.set(budget);
}

fn cell_budget() -> u64 {
    *CELL_BUDGET.get_or_init(|| DEFAULT_CELL_BUDGET)
}

/// A point of the d-dimensional positive integer lattice.
///
/// Coordinates are 1-based: the lattice starts at (1,...,1) so that every
/// normalizer that divides by the rectangle size is well defined, and the
/// sum over an empty rectangle is 0.
#[derive(Debug, Clone, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(transparent)]
pub struct MultiIndex(Vec<usize>);

impl MultiIndex {
    pub fn new(coords: Vec<usize>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::InvalidIndex("dimension must be at least 1".into()));
        }
        if let Some(&bad) = coords.iter().find(|&&c| c < 1) {
            return Err(Error::InvalidIndex(format!(
                "coordinate {bad} below 1 in {coords:?}"
            )));
        }
        Ok(Self(coords))
    }

    /// Diagonal point (k, ..., k) in dimension d.
    pub fn diagonal(d: usize, k: usize) -> Result<Self> {
        Self::new(vec![k; d])
    }

    pub fn d(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[usize] {
        &self.0
    }

    /// Number of lattice points in the rectangle [1, self].
    pub fn cells(&self) -> u128 {
        self.0.iter().map(|&c| c as u128).product()
    }

    /// Componentwise partial order.
    pub fn le(&self, other: &Self) -> bool {
        self.0.len() == other.0.len() && self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }

    /// Strict order: `self <= other` and `self != other`.
    pub fn lt(&self, other: &Self) -> bool {
        self.le(other) && self != other
    }

    /// Componentwise maximum.
    pub fn join(&self, other: &Self) -> Self {
        Self(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(&a, &b)| a.max(b))
                .collect(),
        )
    }

    /// Each coordinate reduced by 1, clamped at 1.
    pub fn pred_clamped(&self) -> Self {
        Self(self.0.iter().map(|&c| c.saturating_sub(1).max(1)).collect())
    }

    /// Compact form `i1xi2x...` used in CSV columns and config files.
    pub fn compact(&self) -> String {
        self.0
            .iter()
            .map(|c| c.to_string())
            .collect::<Vec<_>>()
            .join("x")
    }

    /// Parse the compact form, e.g. `"4x4"`.
    pub fn parse_compact(s: &str) -> Result<Self> {
        let coords = s
            .split('x')
            .map(|p| {
                p.trim()
                    .parse::<usize>()
                    .map_err(|_| Error::InvalidIndex(format!("cannot parse `{s}` as a multi-index")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(coords)
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

/// Iterate every m with 1 <= m <= n in lexicographic order.
pub fn iter_rectangle(n: &MultiIndex) -> RectIter {
    RectIter {
        shape: n.clone(),
        current: vec![1; n.d()],
        done: false,
    }
}

pub struct RectIter {
    shape: MultiIndex,
    current: Vec<usize>,
    done: bool,
}

impl Iterator for RectIter {
    type Item = MultiIndex;

    fn next(&mut self) -> Option<MultiIndex> {
        if self.done {
            return None;
        }
        let out = MultiIndex(self.current.clone());
        // Odometer increment, last coordinate fastest.
        let mut i = self.current.len();
        loop {
            if i == 0 {
                self.done = true;
                break;
            }
            i -= 1;
            if self.current[i] < self.shape.coords()[i] {
                self.current[i] += 1;
                for c in &mut self.current[i + 1..] {
                    *c = 1;
                }
                break;
            }
        }
        Some(out)
    }
}

/// Dense f64 values over the rectangle [1, n], row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeTable {
    shape: MultiIndex,
    strides: Vec<usize>,
    values: Vec<f64>,
}

impl LatticeTable {
    fn strides_for(shape: &MultiIndex) -> Vec<usize> {
        let d = shape.d();
        let mut strides = vec![1usize; d];
        for i in (0..d.saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * shape.coords()[i + 1];
        }
        strides
    }

    fn check_budget(shape: &MultiIndex) -> Result<usize> {
        let cells = shape.cells();
        let budget = cell_budget();
        if cells > budget as u128 {
            return Err(Error::CellBudgetExceeded { cells, budget });
        }
        Ok(cells as usize)
    }

    pub fn zeros(shape: MultiIndex) -> Result<Self> {
        let cells = Self::check_budget(&shape)?;
        let strides = Self::strides_for(&shape);
        Ok(Self {
            shape,
            strides,
            values: vec![0.0; cells],
        })
    }

    /// Build a table by evaluating `f` at every lattice point.
    pub fn from_fn<F: FnMut(&[usize]) -> f64>(shape: MultiIndex, mut f: F) -> Result<Self> {
        let cells = Self::check_budget(&shape)?;
        let strides = Self::strides_for(&shape);
        let mut values = Vec::with_capacity(cells);
        let mut coords = vec![1usize; shape.d()];
        for _ in 0..cells {
            values.push(f(&coords));
            Self::advance(&mut coords, shape.coords());
        }
        Ok(Self {
            shape,
            strides,
            values,
        })
    }

    pub fn from_values(shape: MultiIndex, values: Vec<f64>) -> Result<Self> {
        let cells = Self::check_budget(&shape)?;
        if values.len() != cells {
            return Err(Error::InvalidIndex(format!(
                "value count {} does not match rectangle size {cells}",
                values.len()
            )));
        }
        let strides = Self::strides_for(&shape);
        Ok(Self {
            shape,
            strides,
            values,
        })
    }

    #[inline]
    fn advance(coords: &mut [usize], shape: &[usize]) {
        let mut i = coords.len();
        while i > 0 {
            i -= 1;
            if coords[i] < shape[i] {
                coords[i] += 1;
                for c in &mut coords[i + 1..] {
                    *c = 1;
                }
                return;
            }
        }
        // Wrapped past the last cell; leave at (1,...,1). Callers iterate
        // exactly `cells` steps so this state is never read.
        for c in coords.iter_mut() {
            *c = 1;
        }
    }

    pub fn shape(&self) -> &MultiIndex {
        &self.shape
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    fn offset(&self, m: &[usize]) -> usize {
        debug_assert_eq!(m.len(), self.shape.d());
        m.iter()
            .zip(&self.strides)
            .map(|(&c, &s)| (c - 1) * s)
            .sum()
    }

    /// Value at lattice point m (1-based coordinates).
    pub fn get(&self, m: &MultiIndex) -> f64 {
        self.values[self.offset(m.coords())]
    }

    pub fn get_at(&self, coords: &[usize]) -> f64 {
        self.values[self.offset(coords)]
    }

    /// New table with `f` applied to every (coords, value) pair.
    pub fn map_with_index<F: FnMut(&[usize], f64) -> f64>(&self, mut f: F) -> Self {
        let mut out = self.clone();
        let mut coords = vec![1usize; self.shape.d()];
        for v in out.values.iter_mut() {
            *v = f(&coords, *v);
            Self::advance(&mut coords, self.shape.coords());
        }
        out
    }

    /// Inclusion–exclusion prefix sums: S_m = sum of values over [1, m].
    ///
    /// Single row-major pass; each cell combines X_m with the already
    /// computed S at predecessors shifted by every nonempty subset of
    /// coordinates, with alternating signs (terms that fall off the grid
    /// are zero). The per-cell combination is summed with compensation.
    pub fn prefix_sums(&self) -> Result<LatticeTable> {
        let d = self.shape.d();
        let masks = 1usize << d;
        // offset delta for each subset of coordinates
        let mask_shift: Vec<usize> = (0..masks)
            .map(|mask| {
                (0..d)
                    .filter(|j| mask & (1 << j) != 0)
                    .map(|j| self.strides[j])
                    .sum()
            })
            .collect();
        let sign: Vec<f64> = (0..masks)
            .map(|mask: usize| if mask.count_ones() % 2 == 1 { 1.0 } else { -1.0 })
            .collect();

        let mut out = self.clone();
        let mut coords = vec![1usize; d];
        for idx in 0..out.values.len() {
            // Bitset of coordinates that can step down without leaving the grid.
            let mut valid = 0usize;
            for (j, &c) in coords.iter().enumerate() {
                if c > 1 {
                    valid |= 1 << j;
                }
            }
            let mut acc = CompensatedSum::new();
            acc.add(self.values[idx]);
            for mask in 1..masks {
                if mask & !valid != 0 {
                    continue;
                }
                acc.add(sign[mask] * out.values[idx - mask_shift[mask]]);
            }
            let s = acc.total();
            if !s.is_finite() {
                return Err(Error::NonFinite {
                    cell: MultiIndex(coords.clone()).to_string(),
                });
            }
            out.values[idx] = s;
            Self::advance(&mut coords, self.shape.coords());
        }
        Ok(out)
    }

    /// Running weighted maximum: M_l = max over m <= l of |S_m| * w(m).
    ///
    /// Same one-pass structure as `prefix_sums` with max in place of sum;
    /// single-coordinate predecessors suffice because their down-sets
    /// cover the strict down-set of l. The result is nondecreasing along
    /// the partial order.
    pub fn running_weighted_max<W: Fn(&[usize]) -> f64>(&self, weight: W) -> Result<LatticeTable> {
        let d = self.shape.d();
        let mut out = self.clone();
        let mut coords = vec![1usize; d];
        for idx in 0..out.values.len() {
            let w = weight(&coords);
            if !(w > 0.0) {
                return Err(Error::NonpositiveWeight {
                    cell: MultiIndex(coords.clone()).to_string(),
                    value: w,
                });
            }
            let mut m = self.values[idx].abs() * w;
            for (&c, &stride) in coords.iter().zip(&self.strides) {
                if c > 1 {
                    m = m.max(out.values[idx - stride]);
                }
            }
            out.values[idx] = m;
            Self::advance(&mut coords, self.shape.coords());
        }
        Ok(out)
    }

    /// Max over the whole rectangle of |S_m| * w(m), without materializing
    /// the running-max table.
    pub fn weighted_abs_max<W: Fn(&[usize]) -> f64>(&self, weight: W) -> Result<f64> {
        let mut coords = vec![1usize; self.shape.d()];
        let mut best = f64::NEG_INFINITY;
        for &v in &self.values {
            let w = weight(&coords);
            if !(w > 0.0) {
                return Err(Error::NonpositiveWeight {
                    cell: MultiIndex(coords.clone()).to_string(),
                    value: w,
                });
            }
            best = best.max(v.abs() * w);
            Self::advance(&mut coords, self.shape.coords());
        }
        Ok(best)
    }

    /// Compensated sum of f(coords, value) over the rectangle.
    pub fn fold_compensated<F: FnMut(&[usize], f64) -> f64>(&self, mut f: F) -> f64 {
        let mut coords = vec![1usize; self.shape.d()];
        let mut acc = CompensatedSum::new();
        for &v in &self.values {
            acc.add(f(&coords, v));
            Self::advance(&mut coords, self.shape.coords());
        }
        acc.total()
    }

    /// Visit every (coords, value) pair in row-major order.
    pub fn for_each_indexed<F: FnMut(&[usize], f64)>(&self, mut f: F) {
        let mut coords = vec![1usize; self.shape.d()];
        for &v in &self.values {
            f(&coords, v);
            Self::advance(&mut coords, self.shape.coords());
        }
    }
}

/// A finite strictly increasing chain of lattice points, the finite-horizon
/// stand-in for "n tends to infinity in every coordinate".
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct RectangleSchedule {
    points: Vec<MultiIndex>,
}

impl RectangleSchedule {
    pub fn new(points: Vec<MultiIndex>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::BadSchedule("no points".into()));
        }
        for w in points.windows(2) {
            if !w[0].lt(&w[1]) {
                return Err(Error::BadSchedule(format!(
                    "{} does not strictly precede {}",
                    w[0], w[1]
                )));
            }
        }
        Ok(Self { points })
    }

    /// Dyadic diagonal (2^0,...,2^0), (2^1,...,2^1), ..., (2^max_exp,...).
    pub fn dyadic_diagonal(d: usize, max_exp: u32) -> Result<Self> {
        Self::new(
            (0..=max_exp)
                .map(|j| MultiIndex::diagonal(d, 1usize << j))
                .collect::<Result<Vec<_>>>()?,
        )
    }

    /// Anisotropic dyadic schedule: coordinate i grows as 2^(j * mult[i]).
    pub fn dyadic_anisotropic(multipliers: &[u32], max_exp: u32) -> Result<Self> {
        if multipliers.contains(&0) {
            return Err(Error::BadSchedule("multipliers must be positive".into()));
        }
        Self::new(
            (0..=max_exp)
                .map(|j| {
                    MultiIndex::new(
                        multipliers
                            .iter()
                            .map(|&m| 1usize << (j * m))
                            .collect::<Vec<_>>(),
                    )
                })
                .collect::<Result<Vec<_>>>()?,
        )
    }

    pub fn points(&self) -> &[MultiIndex] {
        &self.points
    }

    pub fn last(&self) -> &MultiIndex {
        self.points.last().expect("schedule is nonempty")
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}
