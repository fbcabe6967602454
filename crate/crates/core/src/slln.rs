//! Finite-horizon strong-law diagnostics: normalized partial-sum
//! trajectories over growing rectangles, sup statistics of the weighted
//! partial-sum field, and the logarithmically weighted demo.
//!
//! Nothing here claims an almost-sure limit. Outputs summarize finite
//! replicate ensembles at a stated horizon and report trend verdicts
//! ("consistent with a vanishing limit at horizon H"), never more.

use serde::Serialize;

use crate::dsequences::{eval_table, logplus_weight, DSequence};
use crate::error::{Error, Result};
use crate::exec;
use crate::fieldgen::{generate, FieldModel};
use crate::lattice::{LatticeTable, MultiIndex, RectangleSchedule};
use crate::maximal::{fit_constant_from_stats, DEFAULT_CONFIDENCE};
use crate::numeric::{median, quantile};

/// One statistic sample at one schedule point.
#[derive(Debug, Clone, Serialize)]
pub struct TrajectoryRecord {
    pub replicate: u64,
    pub n: MultiIndex,
    pub value: f64,
}

/// Medians of |value| across replicates at each schedule point, and how
/// often they decreased step over step.
#[derive(Debug, Clone, Serialize)]
pub struct TrendSummary {
    pub medians: Vec<f64>,
    pub decreasing_steps: usize,
    pub total_steps: usize,
    pub decreasing_fraction: f64,
    pub final_median: f64,
}

impl TrendSummary {
    pub fn from_records(records: &[TrajectoryRecord], schedule: &RectangleSchedule) -> Self {
        let medians: Vec<f64> = schedule
            .points()
            .iter()
            .map(|p| {
                let vals: Vec<f64> = records
                    .iter()
                    .filter(|r| &r.n == p)
                    .map(|r| r.value.abs())
                    .collect();
                median(&vals)
            })
            .collect();
        let total_steps = medians.len().saturating_sub(1);
        let decreasing_steps = medians.windows(2).filter(|w| w[1] < w[0]).count();
        TrendSummary {
            final_median: *medians.last().expect("nonempty schedule"),
            decreasing_fraction: if total_steps > 0 {
                decreasing_steps as f64 / total_steps as f64
            } else {
                1.0
            },
            medians,
            decreasing_steps,
            total_steps,
        }
    }
}

fn check_reps(reps: u64) -> Result<()> {
    if reps == 0 {
        return Err(Error::InvalidParameter("reps must be at least 1".into()));
    }
    Ok(())
}

/// S_n / b_n at every schedule point, per replicate. Within a replicate
/// all points come from one field realization over the largest rectangle
/// (nested rectangles share cells by the keyed-generation contract).
pub fn trajectory(
    model: &FieldModel,
    b: &DSequence,
    schedule: &RectangleSchedule,
    reps: u64,
    seed: u64,
) -> Result<Vec<TrajectoryRecord>> {
    check_reps(reps)?;
    for p in schedule.points() {
        let v = b.eval(p);
        if !(v > 0.0) {
            return Err(Error::NonpositiveWeight {
                cell: p.to_string(),
                value: v,
            });
        }
    }
    let eff = model.with_seed(seed);
    let top = schedule.last().clone();
    let per_rep: Vec<Result<Vec<f64>>> = exec::map_indexed(reps, |rep| {
        let x = generate(&eff, &top, rep)?;
        let s = x.prefix_sums()?;
        Ok(schedule
            .points()
            .iter()
            .map(|p| s.get(p) / b.eval(p))
            .collect())
    });
    collect_records(per_rep, schedule)
}

fn collect_records(
    per_rep: Vec<Result<Vec<f64>>>,
    schedule: &RectangleSchedule,
) -> Result<Vec<TrajectoryRecord>> {
    let mut records = Vec::with_capacity(per_rep.len() * schedule.len());
    for (rep, vals) in per_rep.into_iter().enumerate() {
        for (p, value) in schedule.points().iter().zip(vals?) {
            records.push(TrajectoryRecord {
                replicate: rep as u64,
                n: p.clone(),
                value,
            });
        }
    }
    Ok(records)
}

/// Distribution summary of per-replicate sup statistics.
#[derive(Debug, Clone, Serialize)]
pub struct SupRatioOutput {
    pub horizon: MultiIndex,
    pub per_replicate: Vec<f64>,
    pub q50: f64,
    pub q90: f64,
    pub q99: f64,
    pub max: f64,
}

/// Per-replicate sup over [1, horizon] of |S_l| / beta_l, where S is the
/// partial-sum field of the model, optionally with a deterministic
/// per-cell weight applied to X before summation (`cell_weights`), which
/// realizes weighted-sum laws like X_k / <k> inside the same machinery.
pub fn sup_ratio(
    model: &FieldModel,
    beta: &DSequence,
    horizon: &MultiIndex,
    reps: u64,
    seed: u64,
    cell_weights: Option<&DSequence>,
) -> Result<SupRatioOutput> {
    check_reps(reps)?;
    let eff = model.with_seed(seed);
    let beta_tab = eval_table(beta, horizon)?;
    if let Some(&bad) = beta_tab.values().iter().find(|&&v| !(v > 0.0)) {
        return Err(Error::InvalidParameter(format!(
            "beta must be positive on the horizon, found {bad}"
        )));
    }
    let wtab = cell_weights.map(|w| eval_table(w, horizon)).transpose()?;
    let per_rep: Vec<Result<f64>> = exec::map_indexed(reps, |rep| {
        let x = generate(&eff, horizon, rep)?;
        let weighted = match &wtab {
            Some(w) => x.map_with_index(|coords, v| v * w.get_at(coords)),
            None => x,
        };
        let s = weighted.prefix_sums()?;
        s.weighted_abs_max(|c| 1.0 / beta_tab.get_at(c))
    });
    let mut values = per_rep.into_iter().collect::<Result<Vec<f64>>>()?;
    let per_replicate = values.clone();
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(SupRatioOutput {
        horizon: horizon.clone(),
        q50: quantile(&values, 0.5),
        q90: quantile(&values, 0.9),
        q99: quantile(&values, 0.99),
        max: *values.last().unwrap(),
        per_replicate,
    })
}

/// Companion estimate of the hypothesis constant for the log-weighted
/// demo, with the grid it was fitted on. Exploratory: the hypothesis is
/// assumed, not guaranteed, so this only reports an empirical scale.
#[derive(Debug, Clone, Serialize)]
pub struct HypothesisConstant {
    pub value: f64,
    pub r: f64,
    pub n_grid: Vec<MultiIndex>,
    pub eps_grid: Vec<f64>,
    pub reps: u64,
    pub note: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct LogWeightedDemo {
    pub trend: TrendSummary,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hypothesis_constant: Option<HypothesisConstant>,
    #[serde(skip)]
    pub records: Vec<TrajectoryRecord>,
}

/// The log-weighted statistic (1 / |log n|) * sum_{k<=n} X_k / <k> at
/// every schedule point and replicate. When `fit_r` is given (it must
/// exceed 1), also fits the hypothesis constant for the weighted-sum
/// field with a_l = 1 / <l> on a sub-grid of the schedule.
pub fn logweighted_demo(
    model: &FieldModel,
    schedule: &RectangleSchedule,
    reps: u64,
    seed: u64,
    fit_r: Option<f64>,
) -> Result<LogWeightedDemo> {
    check_reps(reps)?;
    let d = schedule.last().d();
    if let Some(r) = fit_r {
        if r <= 1.0 {
            return Err(Error::InvalidParameter(format!(
                "the log-weighted hypothesis needs r > 1, got {r}"
            )));
        }
    }
    let eff = model.with_seed(seed);
    let top = schedule.last().clone();
    let inv_size = DSequence::power(d, -1.0);
    let wtab = eval_table(&inv_size, &top)?;

    // grid for the companion fit: up to three interior schedule points
    let fit_points: Vec<MultiIndex> = if schedule.len() >= 3 {
        let l = schedule.len();
        let mut idx = vec![l / 4, l / 2, 3 * l / 4];
        idx.dedup();
        idx.into_iter()
            .filter(|&i| i > 0)
            .map(|i| schedule.points()[i].clone())
            .collect()
    } else {
        vec![top.clone()]
    };

    struct RepOut {
        stats: Vec<f64>,
        fit_maxima: Vec<f64>,
    }
    let per_rep: Vec<Result<RepOut>> = exec::map_indexed(reps, |rep| {
        let x = generate(&eff, &top, rep)?;
        let weighted = x.map_with_index(|coords, v| v * wtab.get_at(coords));
        let s = weighted.prefix_sums()?;
        let stats = schedule
            .points()
            .iter()
            .map(|p| s.get(p) / logplus_weight(p))
            .collect();
        let fit_maxima = if fit_r.is_some() {
            let m = s.running_weighted_max(|_| 1.0)?;
            fit_points.iter().map(|p| m.get(p)).collect()
        } else {
            Vec::new()
        };
        Ok(RepOut { stats, fit_maxima })
    });

    let mut stat_rows = Vec::with_capacity(reps as usize);
    let mut fit_rows = Vec::with_capacity(reps as usize);
    for out in per_rep {
        let out = out?;
        stat_rows.push(Ok(out.stats));
        fit_rows.push(out.fit_maxima);
    }
    let records = collect_records(stat_rows, schedule)?;
    let trend = TrendSummary::from_records(&records, schedule);

    let hypothesis_constant = match fit_r {
        None => None,
        Some(r) => {
            let stats_per_n: Vec<(MultiIndex, Vec<f64>)> = fit_points
                .iter()
                .enumerate()
                .map(|(j, p)| (p.clone(), fit_rows.iter().map(|row| row[j]).collect()))
                .collect();
            // threshold grid around the median max statistic at the
            // largest fit point
            let top_stats = &stats_per_n.last().expect("nonempty fit grid").1;
            let scale = median(top_stats);
            let scale = if scale > 0.0 && scale.is_finite() { scale } else { 1.0 };
            let eps_grid: Vec<f64> = (-3..=3).map(|k| scale * 2f64.powi(k)).collect();
            let a = DSequence::power(d, -1.0);
            let value = fit_constant_from_stats(&stats_per_n, &a, r, &eps_grid, DEFAULT_CONFIDENCE)?;
            Some(HypothesisConstant {
                value,
                r,
                n_grid: fit_points,
                eps_grid,
                reps,
                note: "exploratory: empirical scale for an assumed hypothesis".into(),
            })
        }
    };

    Ok(LogWeightedDemo {
        trend,
        hypothesis_constant,
        records,
    })
}

/// Convenience for the demo's negative control and tests: the statistic
/// for the all-ones field, computed through the same engine path.
pub fn logweighted_statistic_of_table(x: &LatticeTable, at: &MultiIndex) -> Result<f64> {
    let d = x.shape().d();
    let inv_size = DSequence::power(d, -1.0);
    let weighted = x.map_with_index(|coords, v| v * inv_size.eval_at(coords));
    let s = weighted.prefix_sums()?;
    Ok(s.get(at) / logplus_weight(at))
}
