//! Experiment configuration: one TOML file with nested tables. The seed
//! is mandatory (no wall-clock defaults anywhere); command-specific
//! sections are validated by the command that needs them.

use anyhow::{anyhow, bail, Context, Result};
use serde::Deserialize;

use fieldmax::dsequences::{parse_family, DSequence};
use fieldmax::fieldgen::{FieldKind, FieldModel, Margin};
use fieldmax::lattice::{MultiIndex, RectangleSchedule};
use fieldmax::maximal::{EvalMode, DEFAULT_CONFIDENCE};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Master seed; required so no run ever depends on the wall clock.
    pub seed: u64,
    /// Lattice dimension.
    pub d: usize,
    #[serde(default = "default_reps")]
    pub reps: u64,
    pub r: Option<f64>,
    pub tol: Option<f64>,
    #[serde(default = "default_confidence")]
    pub confidence: f64,
    pub model: Option<ModelSection>,
    pub sequences: Option<SequencesSection>,
    pub grid: Option<GridSection>,
    pub schedule: Option<ScheduleSection>,
    pub beta: Option<BetaSection>,
    pub blockdecomp: Option<BlockdecompSection>,
    pub output: Option<OutputSection>,
}

fn default_reps() -> u64 {
    1000
}

fn default_confidence() -> f64 {
    DEFAULT_CONFIDENCE
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub kind: String,
    pub margin: String,
    pub window: Option<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SequencesSection {
    pub a: Option<String>,
    pub b: Option<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub ns: Option<Vec<String>>,
    pub eps: Option<Vec<f64>>,
    #[serde(default = "default_mode")]
    pub mode: String,
}

fn default_mode() -> String {
    "exact".into()
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleSection {
    #[serde(default = "default_schedule_kind")]
    pub kind: String,
    pub max_exp: Option<u32>,
    pub multipliers: Option<Vec<u32>>,
    pub points: Option<Vec<String>>,
}

fn default_schedule_kind() -> String {
    "dyadic".into()
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BetaSection {
    pub horizon: String,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlockdecompSection {
    pub c: f64,
    pub n: String,
    #[serde(default)]
    pub dump_partition: bool,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: Option<String>,
    pub format: Option<String>,
}

impl ExperimentConfig {
    pub fn parse_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| anyhow!("malformed config: {e}"))?;
        if cfg.d == 0 {
            bail!("config field `d` must be at least 1");
        }
        Ok(cfg)
    }

    pub fn model(&self) -> Result<FieldModel> {
        let section = self
            .model
            .as_ref()
            .ok_or_else(|| anyhow!("config missing [model] section"))?;
        let margin = Margin::parse(&section.margin).context("config field `model.margin`")?;
        let kind = match section.kind.as_str() {
            "iid" => FieldKind::Iid,
            "moving_average" => FieldKind::MovingAverage,
            "finite_support" => FieldKind::FiniteSupport,
            other => bail!("config field `model.kind`: unknown kind `{other}`"),
        };
        let window = section
            .window
            .as_deref()
            .map(MultiIndex::parse_compact)
            .transpose()
            .context("config field `model.window`")?;
        let model = FieldModel {
            kind,
            margin,
            window,
            seed: self.seed,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn sequence_a(&self) -> Result<DSequence> {
        let spec = self
            .sequences
            .as_ref()
            .and_then(|s| s.a.as_deref())
            .ok_or_else(|| anyhow!("config missing field `sequences.a`"))?;
        parse_family(spec, self.d).context("config field `sequences.a`")
    }

    pub fn sequence_b(&self) -> Result<DSequence> {
        let spec = self
            .sequences
            .as_ref()
            .and_then(|s| s.b.as_deref())
            .ok_or_else(|| anyhow!("config missing field `sequences.b`"))?;
        parse_family(spec, self.d).context("config field `sequences.b`")
    }

    pub fn require_r(&self) -> Result<f64> {
        self.r.ok_or_else(|| anyhow!("config missing field `r`"))
    }

    pub fn n_grid(&self) -> Result<Vec<MultiIndex>> {
        let ns = self
            .grid
            .as_ref()
            .and_then(|g| g.ns.as_ref())
            .ok_or_else(|| anyhow!("config missing field `grid.ns`"))?;
        let parsed = ns
            .iter()
            .map(|s| MultiIndex::parse_compact(s))
            .collect::<fieldmax::Result<Vec<_>>>()
            .context("config field `grid.ns`")?;
        for n in &parsed {
            if n.d() != self.d {
                bail!("config field `grid.ns`: {} does not have dimension {}", n, self.d);
            }
        }
        Ok(parsed)
    }

    pub fn eval_mode(&self, seed: u64) -> Result<EvalMode> {
        let mode = self
            .grid
            .as_ref()
            .map(|g| g.mode.as_str())
            .unwrap_or("exact");
        match mode {
            "exact" => Ok(EvalMode::Exact),
            "monte_carlo" => Ok(EvalMode::MonteCarlo {
                reps: self.reps,
                seed,
                confidence: self.confidence,
            }),
            other => bail!("config field `grid.mode`: unknown mode `{other}`"),
        }
    }

    pub fn schedule(&self) -> Result<RectangleSchedule> {
        let section = self
            .schedule
            .as_ref()
            .ok_or_else(|| anyhow!("config missing [schedule] section"))?;
        match section.kind.as_str() {
            "dyadic" => {
                let max_exp = section
                    .max_exp
                    .ok_or_else(|| anyhow!("config missing field `schedule.max_exp`"))?;
                match &section.multipliers {
                    Some(m) => {
                        if m.len() != self.d {
                            bail!(
                                "config field `schedule.multipliers` must list {} entries",
                                self.d
                            );
                        }
                        Ok(RectangleSchedule::dyadic_anisotropic(m, max_exp)?)
                    }
                    None => Ok(RectangleSchedule::dyadic_diagonal(self.d, max_exp)?),
                }
            }
            "points" => {
                let pts = section
                    .points
                    .as_ref()
                    .ok_or_else(|| anyhow!("config missing field `schedule.points`"))?
                    .iter()
                    .map(|s| MultiIndex::parse_compact(s))
                    .collect::<fieldmax::Result<Vec<_>>>()?;
                Ok(RectangleSchedule::new(pts)?)
            }
            other => bail!("config field `schedule.kind`: unknown kind `{other}`"),
        }
    }

    pub fn beta_horizon(&self) -> Result<MultiIndex> {
        let section = self
            .beta
            .as_ref()
            .ok_or_else(|| anyhow!("config missing [beta] section"))?;
        let h = MultiIndex::parse_compact(&section.horizon).context("config field `beta.horizon`")?;
        if h.d() != self.d {
            bail!("config field `beta.horizon` does not have dimension {}", self.d);
        }
        Ok(h)
    }

    pub fn blockdecomp(&self) -> Result<(&BlockdecompSection, MultiIndex)> {
        let section = self
            .blockdecomp
            .as_ref()
            .ok_or_else(|| anyhow!("config missing [blockdecomp] section"))?;
        let n = MultiIndex::parse_compact(&section.n).context("config field `blockdecomp.n`")?;
        if n.d() != self.d {
            bail!("config field `blockdecomp.n` does not have dimension {}", self.d);
        }
        Ok((section, n))
    }
}
