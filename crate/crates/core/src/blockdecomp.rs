//! Deterministic reconstruction of the block-decomposition argument
//! behind the probability transfer: partition the rectangle by the
//! per-coordinate magnitude of the normalizer on a geometric ladder
//! c^0, c^1, c^2, ..., sum the weights blockwise, and verify every
//! inequality and identity in the chain down to the final bound with
//! constant (c^r / (1 - c^-r))^d — which equals 4^d at the optimal
//! ladder ratio c = 2^(1/r).

use std::collections::BTreeMap;

use serde::Serialize;

use crate::dsequences::DSequence;
use crate::error::{Error, Result};
use crate::lattice::{iter_rectangle, LatticeTable, MultiIndex};
use crate::numeric::{golden_section_min, CompensatedSum};

/// 0-based exponent vector labelling one block.
pub type BlockIndex = Vec<usize>;

#[derive(Debug, Clone)]
pub struct Block {
    pub points: Vec<MultiIndex>,
    /// Coordinate-wise maximum of the block's points.
    pub max: MultiIndex,
}

/// Partition of [1, n] into blocks where the normalizer's factors sit in
/// [c^i, c^(i+1)) per coordinate.
#[derive(Debug, Clone)]
pub struct BlockPartition {
    pub c: f64,
    pub shape: MultiIndex,
    /// Tabulated normalizer factors, `factor_values[j][k-1] = b_j(k)`.
    pub factor_values: Vec<Vec<f64>>,
    /// Per-coordinate exponents, `exps[j][k-1] = i_j(k)`.
    pub exps: Vec<Vec<usize>>,
    /// Only nonempty blocks are stored; a missing index means an empty
    /// block with sum 0 and max (0,...,0).
    pub blocks: BTreeMap<BlockIndex, Block>,
    /// Coordinate-wise maximum of the nonempty block indices.
    pub k_n: Vec<usize>,
}

impl BlockPartition {
    /// Membership predicate straight from the definition:
    /// s <= n and c^{i_j} <= b_j(s_j) < c^{i_j+1} for every coordinate.
    pub fn member(&self, index: &[usize], s: &MultiIndex) -> bool {
        s.le(&self.shape)
            && index.len() == s.d()
            && s.coords().iter().enumerate().all(|(j, &sj)| {
                let b = self.factor_values[j][sj - 1];
                let i = index[j] as i32;
                self.c.powi(i) <= b && b < self.c.powi(i + 1)
            })
    }

    pub fn block_count(&self) -> usize {
        self.blocks.len()
    }
}

/// Exponent of value v >= 1 on the ladder: the unique i >= 0 with
/// c^i <= v < c^(i+1), computed by log and repaired at the boundaries.
fn ladder_exponent(v: f64, c: f64) -> usize {
    let mut i = (v.ln() / c.ln()).floor().max(0.0) as i64;
    while c.powi(i as i32 + 1) <= v {
        i += 1;
    }
    while i > 0 && c.powi(i as i32) > v {
        i -= 1;
    }
    i as usize
}

/// Build the block partition of [1, n] for a normalized product-type b.
pub fn build_partition(b: &DSequence, n: &MultiIndex, c: f64) -> Result<BlockPartition> {
    if c <= 1.0 {
        return Err(Error::InvalidParameter(format!(
            "ladder ratio must exceed 1, got {c}"
        )));
    }
    let factors = b.factors().ok_or_else(|| {
        Error::InvalidParameter("block partition needs a product-type b".into())
    })?;
    if factors.len() != n.d() {
        return Err(Error::InvalidParameter(format!(
            "b has {} factors but the rectangle has dimension {}",
            factors.len(),
            n.d()
        )));
    }
    let factor_values: Vec<Vec<f64>> = factors
        .iter()
        .zip(n.coords())
        .map(|(f, &len)| f.tabulate(len))
        .collect();
    for (j, vals) in factor_values.iter().enumerate() {
        if let Some(&bad) = vals.iter().find(|&&v| v < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "factor {j} takes value {bad} < 1; normalize b to b_1 = 1 first"
            )));
        }
    }
    let exps: Vec<Vec<usize>> = factor_values
        .iter()
        .map(|vals| vals.iter().map(|&v| ladder_exponent(v, c)).collect())
        .collect();

    let mut blocks: BTreeMap<BlockIndex, Block> = BTreeMap::new();
    for s in iter_rectangle(n) {
        let index: BlockIndex = s
            .coords()
            .iter()
            .enumerate()
            .map(|(j, &k)| exps[j][k - 1])
            .collect();
        blocks
            .entry(index)
            .and_modify(|blk| {
                blk.max = blk.max.join(&s);
                blk.points.push(s.clone());
            })
            .or_insert_with(|| Block {
                max: s.clone(),
                points: vec![s.clone()],
            });
    }
    let d = n.d();
    let mut k_n = vec![0usize; d];
    for index in blocks.keys() {
        for j in 0..d {
            k_n[j] = k_n[j].max(index[j]);
        }
    }
    Ok(BlockPartition {
        c,
        shape: n.clone(),
        factor_values,
        exps,
        blocks,
        k_n,
    })
}

/// Blockwise sums D_i of a nonnegative weight sequence; empty blocks are
/// simply absent (sum 0).
pub fn block_sums(a: &DSequence, p: &BlockPartition) -> Result<BTreeMap<BlockIndex, f64>> {
    let mut out = BTreeMap::new();
    for (index, blk) in &p.blocks {
        let mut acc = CompensatedSum::new();
        for s in &blk.points {
            let v = a.eval(s);
            if v < 0.0 {
                return Err(Error::FlagViolation(format!(
                    "a must be nonnegative; a{s} = {v}"
                )));
            }
            acc.add(v);
        }
        out.insert(index.clone(), acc.total());
    }
    Ok(out)
}

/// One verified step of the proof chain. For inequality steps `slack` is
/// the worst relative margin rhs - lhs (>= 0 means the step holds); for
/// identity steps it is the worst relative deviation (should be ~0).
#[derive(Debug, Clone, Serialize)]
pub struct StepCheck {
    pub name: String,
    pub pass: bool,
    pub slack: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ChainReport {
    pub shape: MultiIndex,
    pub c: f64,
    pub r: f64,
    /// Product of the original b factors at 1 (the normalization the
    /// constant absorbs as b_1^-r).
    pub normalization: f64,
    /// (c^r / (1 - c^-r))^d.
    pub constant_factor: f64,
    pub block_count: usize,
    pub k_n: Vec<usize>,
    pub steps: Vec<StepCheck>,
    /// (bound after applying the unweighted hypothesis) / (final bound).
    pub final_ratio: f64,
    pub pass: bool,
}

impl ChainReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

const REL_TOL: f64 = 1e-12;

fn rel_gap(lhs: f64, rhs: f64) -> f64 {
    // positive when lhs <= rhs
    (rhs - lhs) / rhs.abs().max(lhs.abs()).max(1e-300)
}

fn rel_dev(x: f64, y: f64) -> f64 {
    (x - y).abs() / x.abs().max(y.abs()).max(1e-300)
}

/// Verify the whole combinatorial chain for given inputs. Steps:
/// partition validity, blockwise dominance of the prefix sums, the range
/// swap, per-coordinate geometric tails, the constant-factor rewrite,
/// the normalizer domination, and the end-to-end bound.
pub fn verify_chain(
    a: &DSequence,
    b: &DSequence,
    n: &MultiIndex,
    c: f64,
    r: f64,
) -> Result<ChainReport> {
    if r <= 0.0 {
        return Err(Error::InvalidParameter(format!("r must be positive, got {r}")));
    }
    let factors = b.factors().ok_or_else(|| {
        Error::InvalidParameter("chain verification needs a product-type b".into())
    })?;
    let normalization: f64 = factors.iter().map(|f| f.eval(1)).product();
    let bn = b.normalized_to_first()?;
    let partition = build_partition(&bn, n, c)?;
    let d = n.d();
    let dsums = block_sums(a, &partition)?;

    let mut steps: Vec<StepCheck> = Vec::new();

    // Step 1: partition validity — every point satisfies the membership
    // predicate of its block, blocks cover the rectangle exactly once,
    // per-coordinate exponents are monotone (block-index coherence).
    {
        let mut ok = true;
        let mut covered = 0usize;
        for (index, blk) in &partition.blocks {
            covered += blk.points.len();
            for s in &blk.points {
                if !partition.member(index, s) {
                    ok = false;
                }
            }
            if !blk.max.le(n) {
                ok = false;
            }
        }
        if covered as u128 != n.cells() {
            ok = false;
        }
        for exps in &partition.exps {
            if exps.windows(2).any(|w| w[0] > w[1]) {
                ok = false;
            }
        }
        steps.push(StepCheck {
            name: "partition".into(),
            pass: ok,
            slack: 0.0,
        });
    }

    // Prefix sums of a over [1, n] for the dominance step.
    let a_table = LatticeTable::from_fn(n.clone(), |coords| a.eval_at(coords))?;
    let a_prefix = a_table.prefix_sums()?;
    let total_a: f64 = a_prefix.get(n);

    // Prefix sums of D over the block-index box [0, k_n] (shifted to
    // 1-based so the lattice engine applies).
    let box_shape = MultiIndex::new(partition.k_n.iter().map(|&k| k + 1).collect())?;
    let d_table = LatticeTable::from_fn(box_shape.clone(), |coords| {
        let index: BlockIndex = coords.iter().map(|&c0| c0 - 1).collect();
        dsums.get(&index).copied().unwrap_or(0.0)
    })?;
    let d_prefix = d_table.prefix_sums()?;
    let shift = |index: &[usize]| -> MultiIndex {
        MultiIndex::new(index.iter().map(|&i| i + 1).collect()).expect("shifted index valid")
    };

    // Step 2: blockwise dominance  sum_{m <= max A_i} a_m <= sum_{s <= i} D_s.
    {
        let mut worst = f64::INFINITY;
        let mut ok = true;
        for (index, blk) in &partition.blocks {
            let lhs = a_prefix.get(&blk.max);
            let rhs = d_prefix.get(&shift(index));
            let gap = rel_gap(lhs, rhs);
            worst = worst.min(gap);
            if gap < -REL_TOL {
                ok = false;
            }
        }
        if !worst.is_finite() {
            worst = 0.0;
        }
        steps.push(StepCheck {
            name: "dominance".into(),
            pass: ok,
            slack: worst,
        });
    }

    // Sum totals check: blocks account for the whole rectangle sum.
    {
        let mut acc = CompensatedSum::new();
        for v in dsums.values() {
            acc.add(*v);
        }
        let dev = rel_dev(acc.total(), total_a);
        steps.push(StepCheck {
            name: "block-sum-total".into(),
            pass: dev <= REL_TOL,
            slack: dev,
        });
    }

    // T0: middle bound after applying the unweighted hypothesis.
    let ladder = |index: &[usize]| -> f64 {
        index
            .iter()
            .map(|&i| c.powf(-r * i as f64))
            .product()
    };
    let mut t0_acc = CompensatedSum::new();
    for (index, blk) in &partition.blocks {
        t0_acc.add(ladder(index) * a_prefix.get(&blk.max));
    }
    let t0 = t0_acc.total();

    // T1: same with blockwise prefix sums, over the full box.
    let mut t1_acc = CompensatedSum::new();
    for i in iter_rectangle(&box_shape) {
        let index: BlockIndex = i.coords().iter().map(|&c0| c0 - 1).collect();
        t1_acc.add(ladder(&index) * d_prefix.get(&i));
    }
    let t1 = t1_acc.total();
    steps.push(StepCheck {
        name: "middle-bound".into(),
        pass: rel_gap(t0, t1) >= -REL_TOL,
        slack: rel_gap(t0, t1),
    });

    // T2: range swap  sum_i ladder(i) * sum_{m<=i} D_m
    //                = sum_m D_m * sum_{m<=i<=k_n} ladder(i).
    let tail_direct = |from: usize, to: usize| -> f64 {
        let mut acc = CompensatedSum::new();
        for i in from..=to {
            acc.add(c.powf(-r * i as f64));
        }
        acc.total()
    };
    let mut t2_acc = CompensatedSum::new();
    for index in partition.blocks.keys() {
        let g: f64 = index
            .iter()
            .enumerate()
            .map(|(j, &m)| tail_direct(m, partition.k_n[j]))
            .product();
        t2_acc.add(dsums[index] * g);
    }
    let t2 = t2_acc.total();
    steps.push(StepCheck {
        name: "range-swap".into(),
        pass: rel_dev(t1, t2) <= REL_TOL,
        slack: rel_dev(t1, t2),
    });

    // Step: per-coordinate geometric tails — closed form matches the
    // direct sum and is bounded by c^{-r m} / (1 - c^{-r}).
    {
        let denom = 1.0 - c.powf(-r);
        let mut worst_dev = 0.0f64;
        let mut worst_gap = f64::INFINITY;
        for j in 0..d {
            for m in 0..=partition.k_n[j] {
                let direct = tail_direct(m, partition.k_n[j]);
                let closed =
                    (c.powf(-r * m as f64) - c.powf(-r * (partition.k_n[j] + 1) as f64)) / denom;
                worst_dev = worst_dev.max(rel_dev(direct, closed));
                worst_gap = worst_gap.min(rel_gap(direct, c.powf(-r * m as f64) / denom));
            }
        }
        steps.push(StepCheck {
            name: "geometric-closed-form".into(),
            pass: worst_dev <= REL_TOL,
            slack: worst_dev,
        });
        steps.push(StepCheck {
            name: "geometric-tail-bound".into(),
            pass: worst_gap >= -REL_TOL,
            slack: if worst_gap.is_finite() { worst_gap } else { 0.0 },
        });
    }

    // T3: after the geometric bound.
    let denom = 1.0 - c.powf(-r);
    let mut t3_acc = CompensatedSum::new();
    for index in partition.blocks.keys() {
        let g: f64 = index
            .iter()
            .map(|&m| c.powf(-r * m as f64) / denom)
            .product();
        t3_acc.add(dsums[index] * g);
    }
    let t3 = t3_acc.total();
    steps.push(StepCheck {
        name: "tail-bound-applied".into(),
        pass: rel_gap(t2, t3) >= -REL_TOL,
        slack: rel_gap(t2, t3),
    });

    // T4: constant-factor rewrite (exact identity).
    let constant_factor = (c.powf(r) / denom).powi(d as i32);
    let mut t4_acc = CompensatedSum::new();
    for index in partition.blocks.keys() {
        let g: f64 = index
            .iter()
            .map(|&m| c.powf(-r * (m as f64 + 1.0)))
            .product();
        t4_acc.add(dsums[index] * g);
    }
    let t4 = constant_factor * t4_acc.total();
    steps.push(StepCheck {
        name: "constant-rewrite".into(),
        pass: rel_dev(t3, t4) <= 1e-11,
        slack: rel_dev(t3, t4),
    });

    // Step: normalizer domination  prod_j c^{r(m_j+1)} >= b_s^r for every
    // s in the block with index m.
    {
        let mut worst = f64::INFINITY;
        let mut ok = true;
        for (index, blk) in &partition.blocks {
            let lhs: f64 = index
                .iter()
                .map(|&m| c.powf(r * (m as f64 + 1.0)))
                .product();
            for s in &blk.points {
                let bsr: f64 = s
                    .coords()
                    .iter()
                    .enumerate()
                    .map(|(j, &k)| partition.factor_values[j][k - 1])
                    .product::<f64>()
                    .powf(r);
                let gap = rel_gap(bsr, lhs);
                worst = worst.min(gap);
                if gap < -REL_TOL {
                    ok = false;
                }
            }
        }
        if !worst.is_finite() {
            worst = 0.0;
        }
        steps.push(StepCheck {
            name: "normalizer-domination".into(),
            pass: ok,
            slack: worst,
        });
    }

    // T5: final bound  constant * sum_{s<=n} a_s / b_s^r  over the
    // normalized b, and the end-to-end comparison T0 <= T5.
    let mut ratio_acc = CompensatedSum::new();
    for s in iter_rectangle(n) {
        let bs: f64 = s
            .coords()
            .iter()
            .enumerate()
            .map(|(j, &k)| partition.factor_values[j][k - 1])
            .product();
        ratio_acc.add(a.eval(&s) / bs.powf(r));
    }
    let final_bound = constant_factor * ratio_acc.total();
    let end_gap = rel_gap(t0, final_bound);
    steps.push(StepCheck {
        name: "end-to-end".into(),
        pass: end_gap >= -REL_TOL,
        slack: end_gap,
    });

    let pass = steps.iter().all(|s| s.pass);
    Ok(ChainReport {
        shape: n.clone(),
        c,
        r,
        normalization,
        constant_factor,
        block_count: partition.block_count(),
        k_n: partition.k_n.clone(),
        steps,
        final_ratio: if final_bound > 0.0 { t0 / final_bound } else { 0.0 },
        pass,
    })
}

/// Minimize f(c) = c^r / (1 - c^-r) over c > 1 numerically. The analytic
/// answer is c* = 2^(1/r) with minimum value 4 for every r > 0.
pub fn optimal_c(r: f64) -> Result<(f64, f64)> {
    if r <= 0.0 {
        return Err(Error::InvalidParameter(format!("r must be positive, got {r}")));
    }
    let f = |c: f64| c.powf(r) / (1.0 - c.powf(-r));
    let hi = 2f64.powf(1.0 / r) * 16.0;
    let lo = 1.0 + 1e-12;
    let (c_star, min_value) = golden_section_min(f, lo, hi, 1e-10);
    Ok((c_star, min_value))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsequences::{make_product, Factor};
    use crate::rng::CellRng;

    fn mi(coords: &[usize]) -> MultiIndex {
        MultiIndex::new(coords.to_vec()).unwrap()
    }

    #[test]
    fn singleton_blocks_for_pure_geometric() {
        // b_k = 2^k normalized to 2^(k-1); ladder c = 2 puts each k in its
        // own block {i} = {k-1}
        let b = make_product(vec![Factor::geometric(2.0)])
            .unwrap()
            .normalized_to_first()
            .unwrap();
        let p = build_partition(&b, &mi(&[8]), 2.0).unwrap();
        assert_eq!(p.block_count(), 8);
        for (index, blk) in &p.blocks {
            assert_eq!(blk.points.len(), 1);
            assert_eq!(blk.points[0], mi(&[index[0] + 1]));
            assert!(p.member(index, &blk.points[0]));
        }
        assert_eq!(p.k_n, vec![7]);
    }

    #[test]
    fn constant_b_gives_single_block() {
        let b = make_product(vec![Factor::constant(1.0), Factor::constant(1.0)]).unwrap();
        let p = build_partition(&b, &mi(&[3, 4]), 2.0).unwrap();
        assert_eq!(p.block_count(), 1);
        let blk = &p.blocks[&vec![0, 0]];
        assert_eq!(blk.points.len(), 12);
        assert_eq!(blk.max, mi(&[3, 4]));
    }

    #[test]
    fn membership_oracle_2d() {
        // brute-force membership predicate agrees with the constructed blocks
        let b = make_product(vec![Factor::identity(), Factor::geometric(2.0)])
            .unwrap()
            .normalized_to_first()
            .unwrap();
        let n = mi(&[6, 6]);
        let c = 1.5;
        let p = build_partition(&b, &n, c).unwrap();
        let bf = b.factors().unwrap();
        for s in iter_rectangle(&n) {
            let mut found = 0;
            for index in p.blocks.keys() {
                // oracle: direct interval test per coordinate
                let inside = s.coords().iter().enumerate().all(|(j, &k)| {
                    let v = bf[j].eval(k);
                    c.powi(index[j] as i32) <= v && v < c.powi(index[j] as i32 + 1)
                });
                if inside {
                    assert!(p.blocks[index].points.contains(&s));
                    found += 1;
                }
            }
            assert_eq!(found, 1, "point {s} must lie in exactly one block");
        }
    }

    #[test]
    fn block_index_coherence_exhaustive() {
        // m <= s implies block_index(m) <= block_index(s), checked over
        // every ordered pair of a small lattice
        let b = make_product(vec![Factor::identity(), Factor::geometric(1.7)])
            .unwrap()
            .normalized_to_first()
            .unwrap();
        let n = mi(&[5, 5]);
        let p = build_partition(&b, &n, 1.4).unwrap();
        let index_of = |s: &MultiIndex| -> Vec<usize> {
            s.coords()
                .iter()
                .enumerate()
                .map(|(j, &k)| p.exps[j][k - 1])
                .collect()
        };
        for m in iter_rectangle(&n) {
            for s in iter_rectangle(&n) {
                if m.le(&s) {
                    let im = index_of(&m);
                    let is = index_of(&s);
                    assert!(
                        im.iter().zip(&is).all(|(a, b)| a <= b),
                        "coherence broken: {m} in {im:?}, {s} in {is:?}"
                    );
                }
            }
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let b = make_product(vec![Factor::identity()]).unwrap();
        assert!(build_partition(&b, &mi(&[4]), 1.0).is_err());
        let unnormalized = make_product(vec![Factor::new("half", true, true, true, |k| {
            0.5 * k as f64
        })])
        .unwrap();
        assert!(build_partition(&unnormalized, &mi(&[4]), 2.0).is_err());
    }

    #[test]
    fn block_sums_examples() {
        let b = make_product(vec![Factor::identity(), Factor::identity()])
            .unwrap()
            .normalized_to_first()
            .unwrap();
        let n = mi(&[4, 4]);
        let p = build_partition(&b, &n, 2.0).unwrap();

        let ones = DSequence::constant(2, 1.0);
        let d = block_sums(&ones, &p).unwrap();
        let total: f64 = d.values().sum();
        assert_eq!(total, 16.0);
        for (index, blk) in &p.blocks {
            assert_eq!(d[index], blk.points.len() as f64);
        }

        let zeros = DSequence::constant(2, 0.0);
        let d0 = block_sums(&zeros, &p).unwrap();
        assert!(d0.values().all(|&v| v == 0.0));

        // random nonnegative a: blockwise total equals the direct sum
        let a = DSequence::from_fn(
            "rand-a",
            2,
            crate::dsequences::SeqFlags {
                nonnegative: true,
                positive: false,
                nondecreasing: false,
                unbounded: false,
            },
            |coords| {
                CellRng::keyed(5150, 0, &[coords[0] as i64, coords[1] as i64]).next_open01()
            },
        );
        let dr = block_sums(&a, &p).unwrap();
        let blockwise: f64 = dr.values().sum();
        let direct: f64 = iter_rectangle(&n).map(|s| a.eval(&s)).sum();
        assert!((blockwise - direct).abs() < 1e-12 * direct);
    }

    #[test]
    fn chain_constant_b() {
        let a = DSequence::constant(1, 1.0);
        let b = DSequence::constant(1, 1.0);
        let rep = verify_chain(&a, &b, &mi(&[8]), 2.0, 1.0).unwrap();
        assert!(rep.pass, "{rep:?}");
        assert_eq!(rep.constant_factor, 4.0); // 2 / (1 - 1/2)
        assert_eq!(rep.block_count, 1);
    }

    #[test]
    fn chain_geometric_b() {
        let a = DSequence::constant(1, 1.0);
        let b = crate::dsequences::make_product(vec![Factor::geometric(2.0)]).unwrap();
        let rep = verify_chain(&a, &b, &mi(&[8]), 2.0, 1.0).unwrap();
        assert!(rep.pass, "{rep:?}");
        assert_eq!(rep.normalization, 2.0);
        assert!(rep.final_ratio <= 1.0 + 1e-12);
    }

    #[test]
    fn chain_constant_factor_is_four_pow_d_at_optimal_ladder() {
        for (d, r) in [(1usize, 1.0f64), (2, 0.5), (2, 2.0), (3, 1.0)] {
            let (c_star, _) = optimal_c(r).unwrap();
            let a = DSequence::constant(d, 1.0);
            let b = make_product(vec![Factor::identity(); d]).unwrap();
            let n = mi(&vec![4; d]);
            let rep = verify_chain(&a, &b, &n, c_star, r).unwrap();
            assert!(rep.pass);
            let four_d = 4f64.powi(d as i32);
            assert!(
                (rep.constant_factor - four_d).abs() < 1e-5 * four_d,
                "d={d}, r={r}: factor {}",
                rep.constant_factor
            );
        }
    }

    #[test]
    fn chain_campaign_random_instances() {
        // 50 seeded instances, d = 2, random monotone product b, random a
        let mut failures = Vec::new();
        for inst in 0..50u64 {
            let mut rng = CellRng::keyed(0xb10c, inst, &[0]);
            let nx = 2 + (rng.next_u64() % 7) as usize;
            let ny = 2 + (rng.next_u64() % 7) as usize;
            let c = [1.3, 2.0, 3.0][(rng.next_u64() % 3) as usize];
            let r = [0.5, 1.0, 2.0][(rng.next_u64() % 3) as usize];
            let b = random_monotone_b(2, inst);
            let a = random_nonneg_a(2, inst);
            let rep = verify_chain(&a, &b, &mi(&[nx, ny]), c, r).unwrap();
            if !rep.pass {
                failures.push((inst, rep));
            }
        }
        assert!(failures.is_empty(), "failing instances: {failures:?}");
    }

    pub(crate) fn random_monotone_b(d: usize, seed: u64) -> DSequence {
        let factors = (0..d)
            .map(|j| {
                let mut rng = CellRng::keyed(0xfac + seed, j as u64, &[1]);
                // cumulative positive increments, tabulated far enough
                let mut vals = Vec::with_capacity(64);
                let mut v = 0.5 + 2.0 * rng.next_open01();
                for _ in 0..64 {
                    vals.push(v);
                    v += 1.5 * rng.next_open01();
                }
                Factor::from_table(format!("mono{j}"), vals, true, true, true)
            })
            .collect();
        make_product(factors).unwrap()
    }

    pub(crate) fn random_nonneg_a(d: usize, seed: u64) -> DSequence {
        DSequence::from_fn(
            "rand-a",
            d,
            crate::dsequences::SeqFlags {
                nonnegative: true,
                positive: false,
                nondecreasing: false,
                unbounded: false,
            },
            move |coords| {
                let key: Vec<i64> = coords.iter().map(|&c| c as i64).collect();
                CellRng::keyed(0xaaa + seed, 1, &key).next_open01()
            },
        )
    }

    #[test]
    fn optimal_c_matches_closed_form() {
        for r in [0.5f64, 1.0, 2.0, 3.0] {
            let (c_star, min_value) = optimal_c(r).unwrap();
            assert!(
                (c_star - 2f64.powf(1.0 / r)).abs() < 1e-7,
                "r={r}: c*={c_star}"
            );
            assert!((min_value - 4.0).abs() < 1e-9, "r={r}: min={min_value}");
        }
        assert!(optimal_c(0.0).is_err());
    }

    #[test]
    fn ladder_value_never_beats_four() {
        for r in [0.3f64, 0.5, 1.0, 1.7, 2.0, 5.0] {
            let f = |c: f64| c.powf(r) / (1.0 - c.powf(-r));
            let mut c = 1.01;
            while c < 40.0 {
                assert!(f(c) >= 4.0 - 1e-9, "f({c}) = {} at r={r}", f(c));
                c *= 1.07;
            }
        }
    }
}
