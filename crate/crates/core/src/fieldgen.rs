//! Seeded generators for random fields with controllable dependence, plus
//! the exact-enumeration substrate used by the inequality oracles.
//!
//! Generation is a pure function of (model, shape, replicate): every cell
//! value comes from its own keyed stream (see [`crate::rng`]), so the same
//! inputs give the same table no matter the traversal order or thread
//! count, and growing a rectangle preserves the values already drawn.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{LatticeTable, MultiIndex};
use crate::rng::CellRng;

/// Marginal distribution of a field cell (for moving averages, of the
/// innovations).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Margin {
    Normal { mu: f64, sigma: f64 },
    Uniform { a: f64, b: f64 },
    Rademacher,
    Pareto { alpha: f64 },
    Cauchy,
    PointMass { value: f64 },
    Finite { values: Vec<f64>, probs: Vec<f64> },
}

impl Margin {
    pub fn validate(&self) -> Result<()> {
        match self {
            Margin::Normal { sigma, .. } => {
                if *sigma < 0.0 {
                    return Err(Error::InvalidParameter(format!(
                        "normal sigma must be nonnegative, got {sigma}"
                    )));
                }
            }
            Margin::Uniform { a, b } => {
                if a > b {
                    return Err(Error::InvalidParameter(format!(
                        "uniform needs a <= b, got [{a}, {b}]"
                    )));
                }
            }
            Margin::Pareto { alpha } => {
                if *alpha <= 0.0 {
                    return Err(Error::InvalidParameter(format!(
                        "pareto alpha must be positive, got {alpha}"
                    )));
                }
            }
            Margin::Finite { values, probs } => {
                if values.is_empty() || values.len() != probs.len() {
                    return Err(Error::InvalidParameter(
                        "finite margin needs matching nonempty values and probs".into(),
                    ));
                }
                if probs.iter().any(|&p| p < 0.0) {
                    return Err(Error::InvalidParameter(
                        "finite margin probs must be nonnegative".into(),
                    ));
                }
                let total: f64 = probs.iter().sum();
                if (total - 1.0).abs() > 1e-12 {
                    return Err(Error::InvalidParameter(format!(
                        "finite margin probs sum to {total}, not 1"
                    )));
                }
            }
            _ => {}
        }
        Ok(())
    }

    /// One draw by inverse transform from the cell's stream.
    fn sample(&self, rng: &mut CellRng) -> f64 {
        match self {
            Margin::Normal { mu, sigma } => {
                mu + sigma * crate::numeric::inverse_normal_cdf(rng.next_open01())
            }
            Margin::Uniform { a, b } => a + (b - a) * rng.next_open01(),
            Margin::Rademacher => {
                if rng.next_u64() & 1 == 0 {
                    1.0
                } else {
                    -1.0
                }
            }
            Margin::Pareto { alpha } => rng.next_open01().powf(-1.0 / alpha),
            Margin::Cauchy => (std::f64::consts::PI * (rng.next_open01() - 0.5)).tan(),
            Margin::PointMass { value } => *value,
            Margin::Finite { values, probs } => {
                let u = rng.next_open01();
                let mut cum = 0.0;
                for (v, p) in values.iter().zip(probs) {
                    cum += p;
                    if u <= cum {
                        return *v;
                    }
                }
                *values.last().unwrap()
            }
        }
    }

    /// Finite support, if this margin has one.
    pub fn support(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        match self {
            Margin::Rademacher => Some((vec![-1.0, 1.0], vec![0.5, 0.5])),
            Margin::PointMass { value } => Some((vec![*value], vec![1.0])),
            Margin::Finite { values, probs } => Some((values.clone(), probs.clone())),
            _ => None,
        }
    }

    /// Margins whose tails make normal-approximation intervals for
    /// r-th-moment estimates unreliable (the CI needs the 2r-th moment).
    pub fn heavy_tailed_for(&self, r: f64) -> bool {
        match self {
            Margin::Cauchy => true,
            Margin::Pareto { alpha } => *alpha <= 2.0 * r,
            _ => false,
        }
    }

    /// Parse the compact colon form used in configs, e.g. `normal:0,1`,
    /// `rademacher`, `pareto:0.8`, `point_mass:1`, `finite:-1,1@0.5,0.5`.
    pub fn parse(spec: &str) -> Result<Self> {
        let spec = spec.trim();
        let (head, arg) = match spec.split_once(':') {
            Some((h, a)) => (h, Some(a)),
            None => (spec, None),
        };
        let nums = |a: &str| -> Result<Vec<f64>> {
            a.split(',')
                .map(|p| {
                    p.trim().parse::<f64>().map_err(|_| {
                        Error::InvalidParameter(format!("bad number `{p}` in margin `{spec}`"))
                    })
                })
                .collect()
        };
        let margin = match (head, arg) {
            ("normal", Some(a)) => {
                let v = nums(a)?;
                if v.len() != 2 {
                    return Err(Error::InvalidParameter("normal needs mu,sigma".into()));
                }
                Margin::Normal { mu: v[0], sigma: v[1] }
            }
            ("uniform", Some(a)) => {
                let v = nums(a)?;
                if v.len() != 2 {
                    return Err(Error::InvalidParameter("uniform needs a,b".into()));
                }
                Margin::Uniform { a: v[0], b: v[1] }
            }
            ("rademacher", None) => Margin::Rademacher,
            ("pareto", Some(a)) => Margin::Pareto { alpha: nums(a)?[0] },
            ("cauchy", None) => Margin::Cauchy,
            ("point_mass", Some(a)) => Margin::PointMass { value: nums(a)?[0] },
            ("finite", Some(a)) => {
                let (vals, probs) = a.split_once('@').ok_or_else(|| {
                    Error::InvalidParameter("finite needs values@probs".into())
                })?;
                Margin::Finite {
                    values: nums(vals)?,
                    probs: nums(probs)?,
                }
            }
            _ => return Err(Error::InvalidParameter(format!("unknown margin `{spec}`"))),
        };
        margin.validate()?;
        Ok(margin)
    }
}

/// Dependence structure of the field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldKind {
    Iid,
    MovingAverage,
    FiniteSupport,
}

/// Joint-law specification for the field {X_n}.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldModel {
    pub kind: FieldKind,
    pub margin: Margin,
    /// Window rectangle for moving averages (each coordinate >= 1).
    pub window: Option<MultiIndex>,
    pub seed: u64,
}

impl FieldModel {
    pub fn iid(margin: Margin, seed: u64) -> Self {
        Self {
            kind: FieldKind::Iid,
            margin,
            window: None,
            seed,
        }
    }

    pub fn moving_average(margin: Margin, window: MultiIndex, seed: u64) -> Self {
        Self {
            kind: FieldKind::MovingAverage,
            margin,
            window: Some(window),
            seed,
        }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        let mut m = self.clone();
        m.seed = seed;
        m
    }

    pub fn validate(&self) -> Result<()> {
        self.margin.validate()?;
        match self.kind {
            FieldKind::MovingAverage => {
                if self.window.is_none() {
                    return Err(Error::InvalidParameter(
                        "moving_average model needs a window".into(),
                    ));
                }
            }
            FieldKind::FiniteSupport => {
                if self.margin.support().is_none() {
                    return Err(Error::InvalidParameter(
                        "finite_support model needs a finite margin".into(),
                    ));
                }
            }
            FieldKind::Iid => {}
        }
        Ok(())
    }

    pub fn heavy_tailed_for(&self, r: f64) -> bool {
        self.margin.heavy_tailed_for(r)
    }
}

/// Generate the field over [1, n] for one replicate.
///
/// iid / finite_support: independent draws per cell. moving_average:
/// X_m is the sum of iid innovations over the window rectangle ending at
/// m, divided by sqrt(window size) so the cell variance matches the
/// innovation variance; innovations below index 1 live on the extended
/// lattice and are keyed by their (possibly nonpositive) coordinates.
pub fn generate(model: &FieldModel, n: &MultiIndex, replicate: u64) -> Result<LatticeTable> {
    model.validate()?;
    match model.kind {
        FieldKind::Iid | FieldKind::FiniteSupport => {
            let margin = &model.margin;
            let seed = model.seed;
            LatticeTable::from_fn(n.clone(), |coords| {
                let key: Vec<i64> = coords.iter().map(|&c| c as i64).collect();
                margin.sample(&mut CellRng::keyed(seed, replicate, &key))
            })
        }
        FieldKind::MovingAverage => {
            let window = model.window.clone().expect("validated above");
            if window.d() != n.d() {
                return Err(Error::InvalidParameter(format!(
                    "window dimension {} does not match shape dimension {}",
                    window.d(),
                    n.d()
                )));
            }
            let margin = model.margin.clone();
            let seed = model.seed;
            let norm = (window.cells() as f64).sqrt();
            let wc: Vec<i64> = window.coords().iter().map(|&w| w as i64).collect();
            let mut inno_coords = vec![0i64; n.d()];
            LatticeTable::from_fn(n.clone(), |coords| {
                // sum innovations over [m - w + 1, m] via an odometer
                let d = coords.len();
                for j in 0..d {
                    inno_coords[j] = coords[j] as i64 - wc[j] + 1;
                }
                let mut acc = crate::numeric::CompensatedSum::new();
                loop {
                    acc.add(margin.sample(&mut CellRng::keyed(seed, replicate, &inno_coords)));
                    let mut j = d;
                    let mut done = true;
                    while j > 0 {
                        j -= 1;
                        if inno_coords[j] < coords[j] as i64 {
                            inno_coords[j] += 1;
                            for k in j + 1..d {
                                inno_coords[k] = coords[k] as i64 - wc[k] + 1;
                            }
                            done = false;
                            break;
                        }
                    }
                    if done {
                        break;
                    }
                }
                acc.total() / norm
            })
        }
    }
}

/// Exact joint distribution of a finite-margin model over [1, n]: every
/// outcome with its probability.
///
/// Outcomes are indexed 0..total in mixed radix (last cell fastest), so a
/// chunk of outcome indices can be enumerated independently of the rest.
#[derive(Debug, Clone)]
pub struct OutcomeSpace {
    /// Shape of the realized field table.
    pub shape: MultiIndex,
    /// Shape of the underlying iid lattice being enumerated (equals
    /// `shape` for iid models; the extended innovation lattice for
    /// moving averages).
    enum_cells: usize,
    support: Vec<f64>,
    probs: Vec<f64>,
    model: FieldModel,
}

impl OutcomeSpace {
    pub fn support_size(&self) -> usize {
        self.support.len()
    }

    pub fn support(&self) -> (&[f64], &[f64]) {
        (&self.support, &self.probs)
    }

    /// Total number of joint outcomes.
    pub fn total(&self) -> u64 {
        (self.support.len() as u128).pow(self.enum_cells as u32) as u64
    }

    /// Realize outcome `index` as a field table over [1, shape], with its
    /// exact probability.
    pub fn realize(&self, index: u64) -> (LatticeTable, f64) {
        let s = self.support.len() as u64;
        let mut digits = vec![0usize; self.enum_cells];
        let mut rest = index;
        for d in digits.iter_mut().rev() {
            *d = (rest % s) as usize;
            rest /= s;
        }
        let mut prob = 1.0;
        for &d in &digits {
            prob *= self.probs[d];
        }
        let assignment: Vec<f64> = digits.iter().map(|&d| self.support[d]).collect();
        let table = match self.model.kind {
            FieldKind::MovingAverage => {
                let window = self.model.window.as_ref().expect("validated");
                let n = &self.shape;
                let ext: Vec<usize> = n
                    .coords()
                    .iter()
                    .zip(window.coords())
                    .map(|(&ni, &wi)| ni + wi - 1)
                    .collect();
                let ext_strides = strides_of(&ext);
                let norm = (window.cells() as f64).sqrt();
                LatticeTable::from_fn(n.clone(), |coords| {
                    let mut sum = 0.0;
                    // window cells in extended (1-based) coordinates:
                    // ext coordinate = coords[j] - w + 1 .. coords[j], shifted by (w-1)
                    let d = coords.len();
                    let mut idx = vec![0usize; d];
                    loop {
                        // extended-lattice offset: coordinate m_j + i_j, 1-based
                        let off: usize = idx
                            .iter()
                            .zip(coords)
                            .zip(&ext_strides)
                            .map(|((&i, &c), &st)| (c - 1 + i) * st)
                            .sum();
                        sum += assignment[off];
                        let mut j = d;
                        let mut done = true;
                        while j > 0 {
                            j -= 1;
                            if idx[j] + 1 < window.coords()[j] {
                                idx[j] += 1;
                                idx[j + 1..].fill(0);
                                done = false;
                                break;
                            }
                        }
                        if done {
                            break;
                        }
                    }
                    sum / norm
                })
                .expect("shape already admitted")
            }
            _ => LatticeTable::from_values(self.shape.clone(), assignment)
                .expect("shape already admitted"),
        };
        (table, prob)
    }

    /// Visit every outcome in index order.
    pub fn for_each<F: FnMut(&LatticeTable, f64)>(&self, mut f: F) {
        for i in 0..self.total() {
            let (t, p) = self.realize(i);
            f(&t, p);
        }
    }
}

fn strides_of(shape: &[usize]) -> Vec<usize> {
    let d = shape.len();
    let mut strides = vec![1usize; d];
    for i in (0..d.saturating_sub(1)).rev() {
        strides[i] = strides[i + 1] * shape[i + 1];
    }
    strides
}

/// Default cap on the number of enumerated outcomes.
pub const DEFAULT_ENUM_BUDGET: u64 = 1 << 24;

/// Enumerate the joint outcomes of a finite-margin model over [1, n].
pub fn enumerate_outcomes(model: &FieldModel, n: &MultiIndex) -> Result<OutcomeSpace> {
    enumerate_outcomes_with_budget(model, n, DEFAULT_ENUM_BUDGET)
}

pub fn enumerate_outcomes_with_budget(
    model: &FieldModel,
    n: &MultiIndex,
    budget: u64,
) -> Result<OutcomeSpace> {
    model.validate()?;
    let (support, probs) = model.margin.support().ok_or_else(|| {
        Error::InvalidParameter(format!(
            "margin {:?} has no finite support to enumerate",
            model.margin
        ))
    })?;
    let enum_cells: u128 = match model.kind {
        FieldKind::MovingAverage => {
            let w = model.window.as_ref().expect("validated");
            n.coords()
                .iter()
                .zip(w.coords())
                .map(|(&ni, &wi)| (ni + wi - 1) as u128)
                .product()
        }
        _ => n.cells(),
    };
    if enum_cells > u32::MAX as u128 {
        return Err(Error::EnumerationBudgetExceeded {
            outcomes: u128::MAX,
            budget,
        });
    }
    let total = (support.len() as u128).checked_pow(enum_cells as u32);
    match total {
        Some(t) if t <= budget as u128 => {}
        _ => {
            return Err(Error::EnumerationBudgetExceeded {
                outcomes: total.unwrap_or(u128::MAX),
                budget,
            })
        }
    }
    Ok(OutcomeSpace {
        shape: n.clone(),
        enum_cells: enum_cells as usize,
        support,
        probs,
        model: model.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::iter_rectangle;

    fn mi(coords: &[usize]) -> MultiIndex {
        MultiIndex::new(coords.to_vec()).unwrap()
    }

    #[test]
    fn point_mass_zero_gives_zero_table() {
        let model = FieldModel::iid(Margin::PointMass { value: 0.0 }, 7);
        let x = generate(&model, &mi(&[3, 3]), 0).unwrap();
        assert!(x.values().iter().all(|&v| v == 0.0));
        let s = x.prefix_sums().unwrap();
        assert!(s.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn rademacher_is_deterministic_and_signed() {
        let model = FieldModel::iid(Margin::Rademacher, 1234);
        let a = generate(&model, &mi(&[2, 2]), 5).unwrap();
        let b = generate(&model, &mi(&[2, 2]), 5).unwrap();
        assert_eq!(a.values(), b.values());
        assert!(a.values().iter().all(|&v| v == 1.0 || v == -1.0));
        let c = generate(&model, &mi(&[2, 2]), 6).unwrap();
        assert_ne!(a.values(), c.values());
    }

    #[test]
    fn growing_rectangle_preserves_cells() {
        let model = FieldModel::iid(Margin::Normal { mu: 0.0, sigma: 1.0 }, 99);
        let small = generate(&model, &mi(&[3, 3]), 2).unwrap();
        let big = generate(&model, &mi(&[5, 6]), 2).unwrap();
        for m in iter_rectangle(&mi(&[3, 3])) {
            assert_eq!(small.get(&m), big.get(&m));
        }
    }

    #[test]
    fn iid_empirical_mean_is_tight() {
        // mean over 2^16 cells within 4*sigma/256 of mu
        let model = FieldModel::iid(Margin::Normal { mu: 1.5, sigma: 2.0 }, 42);
        let x = generate(&model, &mi(&[256, 256]), 0).unwrap();
        let mean = x.values().iter().sum::<f64>() / x.len() as f64;
        assert!((mean - 1.5).abs() < 4.0 * 2.0 / 256.0, "mean {mean}");
    }

    #[test]
    fn uniform_and_pareto_ranges() {
        let u = FieldModel::iid(Margin::Uniform { a: -2.0, b: 3.0 }, 1);
        let x = generate(&u, &mi(&[64, 64]), 0).unwrap();
        assert!(x.values().iter().all(|&v| (-2.0..3.0).contains(&v)));
        let p = FieldModel::iid(Margin::Pareto { alpha: 1.5 }, 1);
        let y = generate(&p, &mi(&[64, 64]), 0).unwrap();
        assert!(y.values().iter().all(|&v| v > 1.0));
    }

    #[test]
    fn pareto_rejects_bad_alpha() {
        let m = FieldModel::iid(Margin::Pareto { alpha: 0.0 }, 1);
        assert!(generate(&m, &mi(&[2]), 0).is_err());
    }

    #[test]
    fn finite_margin_probs_must_sum_to_one() {
        let m = Margin::Finite {
            values: vec![0.0, 1.0],
            probs: vec![0.5, 0.6],
        };
        assert!(m.validate().is_err());
    }

    #[test]
    fn moving_average_window_one_matches_iid() {
        let margin = Margin::Rademacher;
        let ma = FieldModel::moving_average(margin.clone(), mi(&[1, 1]), 7);
        let iid = FieldModel::iid(margin, 7);
        let a = generate(&ma, &mi(&[4, 4]), 3).unwrap();
        let b = generate(&iid, &mi(&[4, 4]), 3).unwrap();
        assert_eq!(a.values(), b.values());
    }

    #[test]
    fn moving_average_decorrelates_beyond_window() {
        // correlation of cells separated by more than the window in each
        // coordinate is ~0; adjacent cells share window cells and correlate
        let model = FieldModel::moving_average(
            Margin::Normal { mu: 0.0, sigma: 1.0 },
            mi(&[2, 2]),
            2024,
        );
        let reps = 10_000u64;
        let mut far = (0.0, 0.0, 0.0); // sum xy, sum x, sum y
        let mut near = (0.0, 0.0, 0.0);
        for rep in 0..reps {
            let x = generate(&model, &mi(&[4, 4]), rep).unwrap();
            let a = x.get(&mi(&[1, 1]));
            let b = x.get(&mi(&[4, 4]));
            let c = x.get(&mi(&[2, 1]));
            far = (far.0 + a * b, far.1 + a, far.2 + b);
            near = (near.0 + a * c, near.1 + a, near.2 + c);
        }
        let n = reps as f64;
        let corr_far = far.0 / n - (far.1 / n) * (far.2 / n);
        let corr_near = near.0 / n - (near.1 / n) * (near.2 / n);
        assert!(corr_far.abs() < 3.0 / n.sqrt(), "far corr {corr_far}");
        // unit-variance cells; windows (2,2) at (1,1) vs (2,1) overlap 2/4
        assert!((corr_near - 0.5).abs() < 0.05, "near corr {corr_near}");
    }

    #[test]
    fn enumerate_rademacher_d1() {
        let model = FieldModel::iid(Margin::Rademacher, 0);
        let space = enumerate_outcomes(&model, &mi(&[2])).unwrap();
        assert_eq!(space.total(), 4);
        let mut psum = 0.0;
        space.for_each(|_, p| {
            assert_eq!(p, 0.25);
            psum += p;
        });
        assert!((psum - 1.0).abs() < 1e-12);
    }

    #[test]
    fn enumerate_rademacher_2x2() {
        let model = FieldModel::iid(Margin::Rademacher, 0);
        let space = enumerate_outcomes(&model, &mi(&[2, 2])).unwrap();
        assert_eq!(space.total(), 16);
    }

    #[test]
    fn enumerate_three_point_margin() {
        let model = FieldModel::iid(
            Margin::Finite {
                values: vec![0.0, 1.0, 2.0],
                probs: vec![0.5, 0.3, 0.2],
            },
            0,
        );
        let space = enumerate_outcomes(&model, &mi(&[2])).unwrap();
        assert_eq!(space.total(), 9);
        let mut psum = 0.0;
        space.for_each(|_, p| psum += p);
        assert!((psum - 1.0).abs() < 1e-9);
    }

    #[test]
    fn enumerate_moving_average_over_extended_lattice() {
        // window (2,) in d=1 at n=(2,): innovations live on 3 extended
        // cells, X_m = (e_m + e_{m+1}) / sqrt(2)
        let model = FieldModel::moving_average(Margin::Rademacher, mi(&[2]), 0);
        let space = enumerate_outcomes(&model, &mi(&[2])).unwrap();
        assert_eq!(space.total(), 8);
        let mut psum = 0.0;
        let root2 = 2f64.sqrt();
        space.for_each(|t, p| {
            psum += p;
            for &v in t.values() {
                let scaled = v * root2;
                assert!(
                    (scaled - 2.0).abs() < 1e-12
                        || scaled.abs() < 1e-12
                        || (scaled + 2.0).abs() < 1e-12,
                    "unexpected cell value {v}"
                );
            }
        });
        assert!((psum - 1.0).abs() < 1e-12);

        // enumeration expectation matches Monte Carlo for E[S_n]
        let n = mi(&[2]);
        let mut exact = 0.0;
        space.for_each(|t, p| exact += p * t.prefix_sums().unwrap().get(&n));
        assert!(exact.abs() < 1e-12); // centered innovations

        let reps = 2000u64;
        let mc: f64 = (0..reps)
            .map(|rep| generate(&model, &n, rep).unwrap().prefix_sums().unwrap().get(&n))
            .sum::<f64>()
            / reps as f64;
        assert!(mc.abs() < 0.1, "MC mean {mc}");
    }

    #[test]
    fn enumeration_budget_enforced() {
        let model = FieldModel::iid(Margin::Rademacher, 0);
        let err = enumerate_outcomes_with_budget(&model, &mi(&[5, 5]), 1 << 20).unwrap_err();
        assert!(matches!(err, Error::EnumerationBudgetExceeded { .. }));
    }

    #[test]
    fn enumeration_matches_generation_in_expectation() {
        // E[S_n] by enumeration vs Monte Carlo within 3 standard errors
        let model = FieldModel::iid(
            Margin::Finite {
                values: vec![0.0, 1.0],
                probs: vec![0.25, 0.75],
            },
            77,
        );
        let n = mi(&[2, 2]);
        let space = enumerate_outcomes(&model, &n).unwrap();
        let mut exact = 0.0;
        space.for_each(|t, p| {
            exact += p * t.prefix_sums().unwrap().get(&n);
        });
        assert!((exact - 3.0).abs() < 1e-12); // 4 cells * 0.75

        let reps = 4000u64;
        let mut sum = 0.0;
        let mut sumsq = 0.0;
        for rep in 0..reps {
            let s = generate(&model, &n, rep).unwrap().prefix_sums().unwrap().get(&n);
            sum += s;
            sumsq += s * s;
        }
        let mean = sum / reps as f64;
        let var = (sumsq / reps as f64 - mean * mean).max(0.0);
        let se = (var / reps as f64).sqrt();
        assert!((mean - exact).abs() < 3.0 * se, "mean {mean} exact {exact} se {se}");
    }

    #[test]
    fn margin_parsing() {
        assert_eq!(
            Margin::parse("normal:0,1").unwrap(),
            Margin::Normal { mu: 0.0, sigma: 1.0 }
        );
        assert_eq!(Margin::parse("rademacher").unwrap(), Margin::Rademacher);
        assert_eq!(
            Margin::parse("point_mass:1").unwrap(),
            Margin::PointMass { value: 1.0 }
        );
        assert_eq!(
            Margin::parse("finite:-1,1@0.5,0.5").unwrap(),
            Margin::Finite {
                values: vec![-1.0, 1.0],
                probs: vec![0.5, 0.5]
            }
        );
        assert!(Margin::parse("gauss:0,1").is_err());
        assert!(Margin::parse("pareto:0").is_err());
    }
}
