//! The five CLI commands: simulate, sweep, resolution, ted, compare.

use std::path::{Path, PathBuf};

use serde::Serialize;

use photosim_core::devices::{
    build_crosstalk_matrix, naive_tuning_power, sample_fpv_drift, ted_solve,
    ThermalCrosstalkSpec, PHASE_PER_FSR,
};
use photosim_core::dse::{
    compare_variants, pareto_front, select_best, sweep as run_sweep, SkippedConfig, SweepGrid,
    SweepRow, VariantComparison,
};
use photosim_core::error::Error as CoreError;
use photosim_core::link_budget::{noise_power, resolution, WavelengthGrid};
use photosim_core::perf::{evaluate, MetricsReport};
use photosim_core::seeding::derive_seed;
use photosim_core::workload::ModelSpec;

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::report::{fmt_f64, json_report, write_atomic, Csv, Provenance};

const METRICS_COLUMNS: [&str; 20] = [
    "model",
    "conv_vector_size",
    "fc_vector_size",
    "conv_units",
    "fc_units",
    "optimized_mr",
    "ted_enabled",
    "latency_s",
    "fps",
    "laser_mw",
    "to_tuning_mw",
    "eo_tuning_mw",
    "pd_mw",
    "tia_mw",
    "vcsel_mw",
    "converters_mw",
    "total_power_mw",
    "energy_per_bit_pj",
    "area_mm2",
    "resolution_bits",
];

const SWEEP_COLUMNS: [&str; 14] = [
    "conv_vector_size",
    "fc_vector_size",
    "conv_units",
    "fc_units",
    "optimized_mr",
    "ted_enabled",
    "avg_fps",
    "avg_epb_pj",
    "fps_per_epb",
    "avg_latency_s",
    "avg_power_mw",
    "area_mm2",
    "resolution_bits",
    "within_area_cap",
];

const RESOLUTION_COLUMNS: [&str; 5] = [
    "channels",
    "spacing_nm",
    "max_noise_power",
    "resolution_levels",
    "resolution_bits",
];

const TED_COLUMNS: [&str; 4] = ["pitch_um", "ted_power_mw", "naive_power_mw", "naive_converged"];

const COMPARE_COLUMNS: [&str; 7] = [
    "row_type",
    "name",
    "optimized_mr",
    "ted_enabled",
    "mean_power_mw",
    "mean_epb_pj",
    "mean_kfps_per_watt",
];

fn emit_effective_config(config: &RunConfig, out: &Path) -> CliResult<()> {
    write_atomic(&out.join("effective_config.toml"), &config.to_toml()?)
}

fn metrics_row(report: &MetricsReport, config: &RunConfig) -> Vec<String> {
    let acc = &config.accelerator;
    vec![
        report.model_name.clone(),
        acc.conv_vector_size.to_string(),
        acc.fc_vector_size.to_string(),
        acc.conv_units.to_string(),
        acc.fc_units.to_string(),
        acc.optimized_mr.to_string(),
        acc.ted_enabled.to_string(),
        fmt_f64(report.latency_s),
        fmt_f64(report.fps),
        fmt_f64(report.power.laser_mw),
        fmt_f64(report.power.to_tuning_mw),
        fmt_f64(report.power.eo_tuning_mw),
        fmt_f64(report.power.pd_mw),
        fmt_f64(report.power.tia_mw),
        fmt_f64(report.power.vcsel_mw),
        fmt_f64(report.power.converters_mw),
        fmt_f64(report.total_power_mw),
        fmt_f64(report.energy_per_bit_pj),
        fmt_f64(report.area_mm2),
        report.resolution_bits.to_string(),
    ]
}

/// `simulate`: one model, one configuration, one metrics report.
pub fn simulate(config: &RunConfig, model_path: &Path, out: &Path) -> CliResult<()> {
    let model = ModelSpec::from_json_file(model_path)?;
    let report = evaluate(&model, &config.accelerator, config.seed)?;
    let provenance = Provenance::for_config(config)?;

    let mut csv = Csv::new(&provenance, &METRICS_COLUMNS);
    csv.row(&metrics_row(&report, config));
    write_atomic(&out.join("metrics.csv"), &csv.finish())?;

    #[derive(Serialize)]
    struct Body<'a> {
        metrics: &'a MetricsReport,
    }
    write_atomic(
        &out.join("metrics.json"),
        &json_report(&provenance, &Body { metrics: &report })?,
    )?;
    emit_effective_config(config, out)?;

    println!(
        "{}: latency {:.3e} s ({:.1} FPS), power {:.1} mW, {:.2} pJ/bit, {:.2} mm², {} bits",
        report.model_name,
        report.latency_s,
        report.fps,
        report.total_power_mw,
        report.energy_per_bit_pj,
        report.area_mm2,
        report.resolution_bits
    );
    Ok(())
}

fn sweep_row_fields(row: &SweepRow) -> Vec<String> {
    vec![
        row.conv_vector_size.to_string(),
        row.fc_vector_size.to_string(),
        row.conv_units.to_string(),
        row.fc_units.to_string(),
        row.optimized_mr.to_string(),
        row.ted_enabled.to_string(),
        fmt_f64(row.avg_fps),
        fmt_f64(row.avg_epb_pj),
        fmt_f64(row.fps_per_epb),
        fmt_f64(row.avg_latency_s),
        fmt_f64(row.avg_power_mw),
        fmt_f64(row.area_mm2),
        row.resolution_bits.to_string(),
        row.within_area_cap.to_string(),
    ]
}

/// `sweep`: evaluate the grid on the config's model suite, emit all
/// rows plus the selected best configuration and the Pareto front.
pub fn sweep(config: &RunConfig, grid: &SweepGrid, out: &Path) -> CliResult<()> {
    if config.models.is_empty() {
        return Err(CliError::Config(
            "sweep needs a non-empty `models` list in the run config".into(),
        ));
    }
    let models = config
        .models
        .iter()
        .map(|p| ModelSpec::from_json_file(p))
        .collect::<Result<Vec<_>, _>>()?;
    let result = run_sweep(grid, &models, &config.accelerator, config.seed)?;
    let best = select_best(&result)?;
    let front = pareto_front(&result);
    let provenance = Provenance::for_config(config)?;

    let mut csv = Csv::new(&provenance, &SWEEP_COLUMNS);
    for row in &result.rows {
        csv.row(&sweep_row_fields(row));
    }
    write_atomic(&out.join("sweep.csv"), &csv.finish())?;

    #[derive(Serialize)]
    struct Body {
        best: SweepRow,
        pareto_front: Vec<SweepRow>,
        evaluated: usize,
        skipped: Vec<SkippedConfig>,
    }
    write_atomic(
        &out.join("best_config.json"),
        &json_report(
            &provenance,
            &Body {
                best: best.clone(),
                pareto_front: front,
                evaluated: result.rows.len(),
                skipped: result.skipped.clone(),
            },
        )?,
    )?;
    emit_effective_config(config, out)?;

    println!(
        "best configuration (N, K, n, m) = ({}, {}, {}, {}): {:.1} FPS, {:.2} pJ/bit, {:.2} mm²",
        best.conv_vector_size,
        best.fc_vector_size,
        best.conv_units,
        best.fc_units,
        best.avg_fps,
        best.avg_epb_pj,
        best.area_mm2
    );
    Ok(())
}

/// `resolution`: achievable bits across channel counts on the device's
/// FSR, with the 16-bit design target noted for comparison.
pub fn resolution_table(config: &RunConfig, channels: &[usize], out: &Path) -> CliResult<()> {
    let device = &config.accelerator.device;
    let cap = config.accelerator.resolution_bits_cap;
    let provenance = Provenance::for_config(config)?;

    #[derive(Serialize)]
    struct Row {
        channels: usize,
        spacing_nm: f64,
        max_noise_power: f64,
        resolution_levels: f64,
        resolution_bits: u32,
    }
    let mut rows = Vec::new();
    let mut csv = Csv::new(&provenance, &RESOLUTION_COLUMNS);
    for &count in channels {
        let grid = WavelengthGrid::uniform(
            count,
            device.resonant_wavelength_nm,
            device.fsr_nm,
            device.q_factor,
        )?;
        let report = noise_power(&grid, &vec![1.0; count])?;
        let res = resolution(report.max_noise, cap)?;
        csv.row(&[
            count.to_string(),
            fmt_f64(device.fsr_nm / count as f64),
            fmt_f64(res.max_noise_power),
            fmt_f64(res.resolution_levels),
            res.resolution_bits.to_string(),
        ]);
        rows.push(Row {
            channels: count,
            spacing_nm: device.fsr_nm / count as f64,
            max_noise_power: res.max_noise_power,
            resolution_levels: res.resolution_levels,
            resolution_bits: res.resolution_bits,
        });
    }
    write_atomic(&out.join("resolution.csv"), &csv.finish())?;

    let densest = rows.iter().max_by_key(|r| r.channels);
    let note = densest.map(|r| {
        format!(
            "computed resolution at {} channels (Q={}, FSR={} nm) is {} bits under this \
             crosstalk-noise model; the architecture's 16-bit design target is reported for \
             comparison, not asserted",
            r.channels, device.q_factor, device.fsr_nm, r.resolution_bits
        )
    });

    #[derive(Serialize)]
    struct Body {
        rows: Vec<Row>,
        design_target_bits: u32,
        note: Option<String>,
    }
    write_atomic(
        &out.join("resolution.json"),
        &json_report(
            &provenance,
            &Body {
                rows,
                design_target_bits: 16,
                note: note.clone(),
            },
        )?,
    )?;
    emit_effective_config(config, out)?;

    println!("channels  spacing_nm  max_noise      levels        bits");
    for &count in channels {
        let grid = WavelengthGrid::uniform(
            count,
            device.resonant_wavelength_nm,
            device.fsr_nm,
            device.q_factor,
        )?;
        let report = noise_power(&grid, &vec![1.0; count])?;
        let res = resolution(report.max_noise, cap)?;
        println!(
            "{count:>8}  {:>10.4}  {:>12.6e}  {:>12.4e}  {:>4}",
            device.fsr_nm / count as f64,
            res.max_noise_power,
            res.resolution_levels,
            res.resolution_bits
        );
    }
    if let Some(note) = note {
        println!("{note}");
    }
    Ok(())
}

/// `ted`: collective vs per-device tuning power for one bank across a
/// range of ring pitches, at a fixed drift sample.
pub fn ted_table(config: &RunConfig, pitches: &[usize], mrs: usize, out: &Path) -> CliResult<()> {
    if mrs == 0 {
        return Err(CliError::Config("--mrs must be >= 1".into()));
    }
    let acc = &config.accelerator;
    let drifts = sample_fpv_drift(mrs, &acc.device_for_variant(), config.seed)?;
    let desired: Vec<f64> = drifts
        .drifts_nm
        .iter()
        .map(|d| d.abs() / acc.device.fsr_nm * PHASE_PER_FSR)
        .collect();
    let provenance = Provenance::for_config(config)?;

    #[derive(Serialize)]
    struct Row {
        pitch_um: usize,
        ted_power_mw: f64,
        naive_power_mw: Option<f64>,
        naive_converged: bool,
    }
    let mut rows = Vec::new();
    for &pitch in pitches {
        let thermal = ThermalCrosstalkSpec {
            mr_pitch_um: pitch as f64,
            ..acc.thermal.clone()
        };
        let matrix = build_crosstalk_matrix(mrs, &thermal)?;
        let ted_power_mw = ted_solve(&matrix, &desired, &acc.tuning)?.total_power_mw;
        let naive_power_mw = match naive_tuning_power(&matrix, &desired, &acc.tuning) {
            Ok(power) => Some(power),
            Err(CoreError::Divergence(_)) => None,
            Err(other) => return Err(other.into()),
        };
        rows.push(Row {
            pitch_um: pitch,
            ted_power_mw,
            naive_converged: naive_power_mw.is_some(),
            naive_power_mw,
        });
    }

    let mut csv = Csv::new(&provenance, &TED_COLUMNS);
    for row in &rows {
        csv.row(&[
            row.pitch_um.to_string(),
            fmt_f64(row.ted_power_mw),
            row.naive_power_mw.map(fmt_f64).unwrap_or_default(),
            row.naive_converged.to_string(),
        ]);
    }
    write_atomic(&out.join("ted.csv"), &csv.finish())?;

    #[derive(Serialize)]
    struct Body {
        mrs_per_bank: usize,
        rows: Vec<Row>,
    }
    write_atomic(
        &out.join("ted.json"),
        &json_report(&provenance, &Body { mrs_per_bank: mrs, rows })?,
    )?;
    emit_effective_config(config, out)?;

    println!("pitch_um  ted_power_mw  naive_power_mw");
    let body = std::fs::read_to_string(out.join("ted.csv"))?;
    for line in body.lines().skip(2) {
        let mut fields = line.split(',');
        let pitch = fields.next().unwrap_or_default();
        let ted = fields.next().unwrap_or_default();
        let naive = fields.next().unwrap_or_default();
        println!("{pitch:>8}  {ted:>12}  {naive:>14}");
    }
    Ok(())
}

/// `compare`: the four architecture variants on a model suite, with
/// reference platform rows for context.
pub fn compare(
    config: &RunConfig,
    model_paths: &[PathBuf],
    seed_count: usize,
    out: &Path,
) -> CliResult<()> {
    let paths: Vec<PathBuf> = if model_paths.is_empty() {
        config.models.clone()
    } else {
        model_paths.to_vec()
    };
    if paths.is_empty() {
        return Err(CliError::Config(
            "compare needs --models or a `models` list in the run config".into(),
        ));
    }
    if seed_count == 0 {
        return Err(CliError::Config("--seeds must be >= 1".into()));
    }
    let models = paths
        .iter()
        .map(|p| ModelSpec::from_json_file(p))
        .collect::<Result<Vec<_>, _>>()?;
    let seeds: Vec<u64> = (0..seed_count as u64)
        .map(|i| derive_seed(config.seed, i))
        .collect();
    let comparison = compare_variants(&models, &config.accelerator, &seeds)?;
    let provenance = Provenance::for_config(config)?;

    let mut csv = Csv::new(&provenance, &COMPARE_COLUMNS);
    for row in &comparison.variants {
        csv.row(&[
            "variant".into(),
            row.name.clone(),
            row.optimized_mr.to_string(),
            row.ted_enabled.to_string(),
            fmt_f64(row.mean_power_mw),
            fmt_f64(row.mean_epb_pj),
            fmt_f64(row.mean_kfps_per_watt),
        ]);
    }
    for reference in &comparison.references {
        csv.row(&[
            "reference".into(),
            reference.name.clone(),
            String::new(),
            String::new(),
            String::new(),
            fmt_f64(reference.epb_pj),
            fmt_f64(reference.kfps_per_watt),
        ]);
    }
    write_atomic(&out.join("compare.csv"), &csv.finish())?;
    write_atomic(
        &out.join("compare.json"),
        &json_report(&provenance, &ComparisonBody { comparison: &comparison })?,
    )?;
    emit_effective_config(config, out)?;

    println!("variant    power_mw      epb_pj    kfps_per_watt");
    for row in &comparison.variants {
        println!(
            "{:<9}  {:>10.2}  {:>10.3}  {:>13.4}",
            row.name, row.mean_power_mw, row.mean_epb_pj, row.mean_kfps_per_watt
        );
    }
    println!("reference     epb_pj    kfps_per_watt");
    for reference in &comparison.references {
        println!(
            "{:<10}  {:>10.2}  {:>13.2}",
            reference.name, reference.epb_pj, reference.kfps_per_watt
        );
    }
    Ok(())
}

#[derive(Serialize)]
struct ComparisonBody<'a> {
    comparison: &'a VariantComparison,
}
