//! Design-space exploration: exhaustive sweeps over (N, K, n, m) and
//! variant flags, best-configuration selection by FPS/EPB, and the
//! four-variant comparison table.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::perf::{area_estimate, evaluate, AcceleratorConfig};
use crate::seeding::{derive_seed, fnv1a_64};
use crate::workload::ModelSpec;

/// The four architecture variants: conventional vs optimized ring
/// design crossed with per-device vs collective tuning.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Base,
    BaseTed,
    Opt,
    OptTed,
}

impl Variant {
    pub const ALL: [Variant; 4] = [Variant::Base, Variant::BaseTed, Variant::Opt, Variant::OptTed];

    /// (optimized_mr, ted_enabled)
    pub fn flags(self) -> (bool, bool) {
        match self {
            Variant::Base => (false, false),
            Variant::BaseTed => (false, true),
            Variant::Opt => (true, false),
            Variant::OptTed => (true, true),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Variant::Base => "base",
            Variant::BaseTed => "base_ted",
            Variant::Opt => "opt",
            Variant::OptTed => "opt_ted",
        }
    }

    pub fn from_flags(optimized_mr: bool, ted_enabled: bool) -> Self {
        match (optimized_mr, ted_enabled) {
            (false, false) => Variant::Base,
            (false, true) => Variant::BaseTed,
            (true, false) => Variant::Opt,
            (true, true) => Variant::OptTed,
        }
    }

    /// Apply this variant's flags to a configuration.
    pub fn apply(self, mut cfg: AcceleratorConfig) -> AcceleratorConfig {
        let (optimized_mr, ted_enabled) = self.flags();
        cfg.optimized_mr = optimized_mr;
        cfg.ted_enabled = ted_enabled;
        cfg
    }
}

/// Candidate lists for the architecture sweep. Field names follow the
/// architecture parameters: N and K are unit vector sizes, n and m are
/// unit counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepGrid {
    #[serde(rename = "N")]
    pub conv_vector_sizes: Vec<usize>,
    #[serde(rename = "K")]
    pub fc_vector_sizes: Vec<usize>,
    #[serde(rename = "n")]
    pub conv_unit_counts: Vec<usize>,
    #[serde(rename = "m")]
    pub fc_unit_counts: Vec<usize>,
    /// Variants to sweep; empty means "the template's flags".
    #[serde(default)]
    pub variants: Vec<Variant>,
    #[serde(default)]
    pub area_cap_mm2: Option<f64>,
}

impl SweepGrid {
    pub fn validate(&self) -> Result<()> {
        if self.conv_vector_sizes.is_empty()
            || self.fc_vector_sizes.is_empty()
            || self.conv_unit_counts.is_empty()
            || self.fc_unit_counts.is_empty()
        {
            return Err(Error::ContractViolation(
                "sweep grid has an empty candidate list".into(),
            ));
        }
        Ok(())
    }
}

/// One (N, K, n, m, variant) point in the sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
struct CandidateKey {
    conv_vector_size: usize,
    fc_vector_size: usize,
    conv_units: usize,
    fc_units: usize,
    variant: Variant,
}

impl CandidateKey {
    fn identity(&self) -> u64 {
        let text = format!(
            "N={};K={};n={};m={};variant={}",
            self.conv_vector_size,
            self.fc_vector_size,
            self.conv_units,
            self.fc_units,
            self.variant.name()
        );
        fnv1a_64(text.as_bytes())
    }
}

/// Metrics of one configuration averaged across the model suite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub conv_vector_size: usize,
    pub fc_vector_size: usize,
    pub conv_units: usize,
    pub fc_units: usize,
    pub optimized_mr: bool,
    pub ted_enabled: bool,
    pub avg_fps: f64,
    pub avg_epb_pj: f64,
    pub fps_per_epb: f64,
    pub avg_latency_s: f64,
    pub avg_power_mw: f64,
    pub area_mm2: f64,
    pub resolution_bits: u32,
    pub within_area_cap: bool,
}

/// A grid point skipped for violating the architecture's ordering
/// requirements (n > m, K > N).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedConfig {
    pub conv_vector_size: usize,
    pub fc_vector_size: usize,
    pub conv_units: usize,
    pub fc_units: usize,
    pub reason: String,
}

/// Sweep output: admissible rows (sorted by configuration key) plus
/// the skipped points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    pub skipped: Vec<SkippedConfig>,
}

/// Evaluate every admissible grid point on every model. Per-point
/// seeds derive from the point's identity, so results are identical
/// under any grid ordering or worker count.
pub fn sweep(
    grid: &SweepGrid,
    models: &[ModelSpec],
    template: &AcceleratorConfig,
    base_seed: u64,
) -> Result<SweepResult> {
    grid.validate()?;
    if models.is_empty() {
        return Err(Error::ContractViolation("sweep needs at least one model".into()));
    }

    let variants = if grid.variants.is_empty() {
        vec![Variant::from_flags(template.optimized_mr, template.ted_enabled)]
    } else {
        grid.variants.clone()
    };

    let mut admissible = Vec::new();
    let mut skipped = Vec::new();
    for &conv_vector_size in &grid.conv_vector_sizes {
        for &fc_vector_size in &grid.fc_vector_sizes {
            for &conv_units in &grid.conv_unit_counts {
                for &fc_units in &grid.fc_unit_counts {
                    let reason = if conv_units <= fc_units {
                        Some(format!("requires n > m, got n={conv_units}, m={fc_units}"))
                    } else if fc_vector_size <= conv_vector_size {
                        Some(format!(
                            "requires K > N, got K={fc_vector_size}, N={conv_vector_size}"
                        ))
                    } else {
                        None
                    };
                    match reason {
                        Some(reason) => skipped.push(SkippedConfig {
                            conv_vector_size,
                            fc_vector_size,
                            conv_units,
                            fc_units,
                            reason,
                        }),
                        None => {
                            for &variant in &variants {
                                admissible.push(CandidateKey {
                                    conv_vector_size,
                                    fc_vector_size,
                                    conv_units,
                                    fc_units,
                                    variant,
                                });
                            }
                        }
                    }
                }
            }
        }
    }

    let mut rows = admissible
        .par_iter()
        .map(|key| evaluate_candidate(key, models, template, grid.area_cap_mm2, base_seed))
        .collect::<Result<Vec<_>>>()?;

    rows.sort_by(row_key_order);
    skipped.sort_by(|a, b| {
        (a.conv_vector_size, a.fc_vector_size, a.conv_units, a.fc_units).cmp(&(
            b.conv_vector_size,
            b.fc_vector_size,
            b.conv_units,
            b.fc_units,
        ))
    });
    skipped.dedup();
    Ok(SweepResult { rows, skipped })
}

fn evaluate_candidate(
    key: &CandidateKey,
    models: &[ModelSpec],
    template: &AcceleratorConfig,
    area_cap_mm2: Option<f64>,
    base_seed: u64,
) -> Result<SweepRow> {
    let mut cfg = key.variant.apply(template.clone());
    cfg.conv_vector_size = key.conv_vector_size;
    cfg.fc_vector_size = key.fc_vector_size;
    cfg.conv_units = key.conv_units;
    cfg.fc_units = key.fc_units;

    let config_seed = derive_seed(base_seed, key.identity());
    let mut fps_sum = 0.0;
    let mut epb_sum = 0.0;
    let mut latency_sum = 0.0;
    let mut power_sum = 0.0;
    let mut resolution_bits = 0;
    for (model_index, model) in models.iter().enumerate() {
        let report = evaluate(model, &cfg, derive_seed(config_seed, model_index as u64))?;
        fps_sum += report.fps;
        epb_sum += report.energy_per_bit_pj;
        latency_sum += report.latency_s;
        power_sum += report.total_power_mw;
        resolution_bits = report.resolution_bits;
    }
    let count = models.len() as f64;
    let avg_fps = fps_sum / count;
    let avg_epb_pj = epb_sum / count;
    let area_mm2 = area_estimate(&cfg)?;
    let (optimized_mr, ted_enabled) = key.variant.flags();
    Ok(SweepRow {
        conv_vector_size: key.conv_vector_size,
        fc_vector_size: key.fc_vector_size,
        conv_units: key.conv_units,
        fc_units: key.fc_units,
        optimized_mr,
        ted_enabled,
        avg_fps,
        avg_epb_pj,
        fps_per_epb: avg_fps / avg_epb_pj,
        avg_latency_s: latency_sum / count,
        avg_power_mw: power_sum / count,
        area_mm2,
        resolution_bits,
        within_area_cap: area_cap_mm2.map_or(true, |cap| area_mm2 <= cap),
    })
}

fn row_key_order(a: &SweepRow, b: &SweepRow) -> std::cmp::Ordering {
    (
        a.conv_vector_size,
        a.fc_vector_size,
        a.conv_units,
        a.fc_units,
        a.optimized_mr,
        a.ted_enabled,
    )
        .cmp(&(
            b.conv_vector_size,
            b.fc_vector_size,
            b.conv_units,
            b.fc_units,
            b.optimized_mr,
            b.ted_enabled,
        ))
}

/// Highest FPS/EPB among configurations within the area cap; ties go
/// to higher FPS, then to the lexicographically smallest
/// (N, K, n, m).
pub fn select_best(result: &SweepResult) -> Result<SweepRow> {
    let feasible: Vec<&SweepRow> = result.rows.iter().filter(|r| r.within_area_cap).collect();
    if feasible.is_empty() {
        return Err(Error::Infeasible(
            "no sweep configuration satisfies the area cap".into(),
        ));
    }
    let mut best = feasible[0];
    for row in &feasible[1..] {
        let by_objective = row
            .fps_per_epb
            .partial_cmp(&best.fps_per_epb)
            .unwrap_or(std::cmp::Ordering::Equal);
        let better = match by_objective {
            std::cmp::Ordering::Greater => true,
            std::cmp::Ordering::Less => false,
            std::cmp::Ordering::Equal => {
                match row
                    .avg_fps
                    .partial_cmp(&best.avg_fps)
                    .unwrap_or(std::cmp::Ordering::Equal)
                {
                    std::cmp::Ordering::Greater => true,
                    std::cmp::Ordering::Less => false,
                    std::cmp::Ordering::Equal => row_key_order(row, best).is_lt(),
                }
            }
        };
        if better {
            best = row;
        }
    }
    Ok(best.clone())
}

/// Non-dominated rows under (maximize FPS, minimize EPB), among those
/// within the area cap. Emitted for inspection; selection uses
/// FPS/EPB.
pub fn pareto_front(result: &SweepResult) -> Vec<SweepRow> {
    let feasible: Vec<&SweepRow> = result.rows.iter().filter(|r| r.within_area_cap).collect();
    feasible
        .iter()
        .filter(|candidate| {
            !feasible.iter().any(|other| {
                (other.avg_fps >= candidate.avg_fps && other.avg_epb_pj <= candidate.avg_epb_pj)
                    && (other.avg_fps > candidate.avg_fps
                        || other.avg_epb_pj < candidate.avg_epb_pj)
            })
        })
        .map(|row| (*row).clone())
        .collect()
}

/// Averaged metrics of one architecture variant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariantRow {
    pub name: String,
    pub optimized_mr: bool,
    pub ted_enabled: bool,
    pub mean_power_mw: f64,
    pub mean_epb_pj: f64,
    pub mean_kfps_per_watt: f64,
}

/// Published metrics of a reference platform, carried in reports for
/// context only (never re-simulated).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceRow {
    pub name: String,
    pub epb_pj: f64,
    pub kfps_per_watt: f64,
}

/// Cited reference platforms: (name, EPB pJ/bit, kiloFPS/W).
pub const REFERENCE_ACCELERATORS: [(&str, f64, f64); 8] = [
    ("P100", 971.31, 24.9),
    ("IXP-9282", 5099.68, 2.39),
    ("AMD-TR", 5831.18, 2.09),
    ("DaDianNao", 58.33, 0.65),
    ("EdgeTPU", 697.37, 17.53),
    ("NullHop", 2727.43, 4.48),
    ("DEAP-CNN", 44453.88, 0.07),
    ("Holylight", 274.13, 3.3),
];

/// Four-variant comparison plus the cited reference rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariantComparison {
    pub variants: Vec<VariantRow>,
    pub references: Vec<ReferenceRow>,
}

impl VariantComparison {
    pub fn variant(&self, variant: Variant) -> &VariantRow {
        &self.variants[Variant::ALL.iter().position(|v| *v == variant).unwrap()]
    }
}

/// Evaluate all four variants of `base` over the model suite, at
/// matched FPV seeds, averaging across seeds and models.
pub fn compare_variants(
    models: &[ModelSpec],
    base: &AcceleratorConfig,
    seeds: &[u64],
) -> Result<VariantComparison> {
    if models.is_empty() || seeds.is_empty() {
        return Err(Error::ContractViolation(
            "variant comparison needs at least one model and one seed".into(),
        ));
    }
    let mut variants = Vec::with_capacity(4);
    for variant in Variant::ALL {
        let cfg = variant.apply(base.clone());
        let mut power_sum = 0.0;
        let mut epb_sum = 0.0;
        let mut kfps_per_watt_sum = 0.0;
        for &seed in seeds {
            for (model_index, model) in models.iter().enumerate() {
                let report = evaluate(model, &cfg, derive_seed(seed, model_index as u64))?;
                power_sum += report.total_power_mw;
                epb_sum += report.energy_per_bit_pj;
                // kiloFPS per watt reduces to fps / power_mw.
                kfps_per_watt_sum += report.fps / report.total_power_mw;
            }
        }
        let count = (seeds.len() * models.len()) as f64;
        let (optimized_mr, ted_enabled) = variant.flags();
        variants.push(VariantRow {
            name: variant.name().to_string(),
            optimized_mr,
            ted_enabled,
            mean_power_mw: power_sum / count,
            mean_epb_pj: epb_sum / count,
            mean_kfps_per_watt: kfps_per_watt_sum / count,
        });
    }
    let references = REFERENCE_ACCELERATORS
        .iter()
        .map(|(name, epb_pj, kfps_per_watt)| ReferenceRow {
            name: (*name).to_string(),
            epb_pj: *epb_pj,
            kfps_per_watt: *kfps_per_watt,
        })
        .collect();
    Ok(VariantComparison {
        variants,
        references,
    })
}
