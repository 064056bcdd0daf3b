//! Latency, power, energy-per-bit, and area models for one
//! (model, configuration) pair.

use serde::{Deserialize, Serialize};

use crate::devices::{
    build_crosstalk_matrix, naive_tuning_power, FPVSample, MRDeviceSpec, TedSolver,
    ThermalCrosstalkSpec, TuningSpec, PHASE_PER_FSR,
};
use crate::error::{Error, Result};
use crate::link_budget::{
    laser_power_required, noise_power, path_loss, resolution, LossSpec, OpticalPath,
    ResolutionReport, WavelengthGrid,
};
use crate::workload::{schedule_layer, LayerRole, ModelSpec};
use crate::vdp::VDPUnitConfig;

/// Vacuum speed of light, m/s.
const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// DAC/ADC transceiver lane parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConverterSpec {
    /// Serial rate per converter, Gb/s.
    pub rate_gbps: f64,
    /// Power per converter at full utilization, mW.
    pub power_mw: f64,
}

impl Default for ConverterSpec {
    fn default() -> Self {
        Self {
            rate_gbps: 56.0,
            power_mw: 125.0,
        }
    }
}

/// Optoelectronic helper devices around the MR banks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AuxDeviceSpec {
    pub vcsel_power_mw: f64,
    pub vcsel_latency_s: f64,
    pub tia_power_mw: f64,
    pub tia_latency_s: f64,
    pub pd_power_mw: f64,
    pub pd_latency_s: f64,
}

impl Default for AuxDeviceSpec {
    fn default() -> Self {
        Self {
            vcsel_power_mw: 0.66,
            vcsel_latency_s: 10e-9,
            tia_power_mw: 7.2,
            tia_latency_s: 0.15e-9,
            pd_power_mw: 2.8,
            pd_latency_s: 5.8e-12,
        }
    }
}

/// Fixed footprints used by the additive area model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AreaSpec {
    pub pd_footprint_mm2: f64,
    pub vcsel_footprint_mm2: f64,
    pub converter_footprint_mm2: f64,
    /// Multiplier covering waveguide routing overhead.
    pub routing_factor: f64,
}

impl Default for AreaSpec {
    fn default() -> Self {
        Self {
            pd_footprint_mm2: 0.0015,
            vcsel_footprint_mm2: 0.002,
            converter_footprint_mm2: 0.0055,
            routing_factor: 1.2,
        }
    }
}

/// The full architecture: VDP unit sizing (N, K, n, m), device and
/// tuning parameters, losses, converters, and the two variant flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AcceleratorConfig {
    /// CONV unit vector size (N).
    pub conv_vector_size: usize,
    /// FC unit vector size (K); K > N.
    pub fc_vector_size: usize,
    /// CONV unit count (n); n > m.
    pub conv_units: usize,
    /// FC unit count (m).
    pub fc_units: usize,
    /// Rings per bank in every unit, at most 15.
    pub mrs_per_bank: usize,
    /// Use the FPV-resilient ring design (smaller drift sigma).
    pub optimized_mr: bool,
    /// Use the collective crosstalk-aware tuning solve.
    pub ted_enabled: bool,
    /// FPV drift sigma of the conventional ring design, nm.
    pub fpv_sigma_conventional_nm: f64,
    /// FPV drift sigma of the optimized ring design, nm.
    pub fpv_sigma_optimized_nm: f64,
    pub device: MRDeviceSpec,
    pub tuning: TuningSpec,
    pub thermal: ThermalCrosstalkSpec,
    pub losses: LossSpec,
    /// Photodetector sensitivity, dBm.
    pub detector_sensitivity_dbm: f64,
    /// Extra laser power headroom, dB.
    pub link_margin_db: f64,
    /// Electrical-to-optical conversion efficiency of the laser.
    pub wall_plug_efficiency: f64,
    pub converter: ConverterSpec,
    pub aux: AuxDeviceSpec,
    pub area: AreaSpec,
    /// Cap on reported resolution bits.
    pub resolution_bits_cap: u32,
    /// Group index used for waveguide propagation delay.
    pub waveguide_group_index: f64,
    /// EO-tuned waveguide length per ring, cm.
    pub eo_tuner_length_cm_per_mr: f64,
    /// TO-tuned waveguide length per ring, cm.
    pub to_tuner_length_cm_per_mr: f64,
    /// Fixed latency charged per pooling/batch-norm layer, s.
    pub electronic_layer_latency_s: f64,
    /// Fraction of peak device activity, in (0, 1].
    pub activity_factor: f64,
}

impl Default for AcceleratorConfig {
    fn default() -> Self {
        Self {
            conv_vector_size: 20,
            fc_vector_size: 150,
            conv_units: 100,
            fc_units: 60,
            mrs_per_bank: 15,
            optimized_mr: false,
            ted_enabled: false,
            fpv_sigma_conventional_nm: 7.1,
            fpv_sigma_optimized_nm: 2.1,
            device: MRDeviceSpec::default(),
            tuning: TuningSpec::default(),
            thermal: ThermalCrosstalkSpec::default(),
            losses: LossSpec::default(),
            detector_sensitivity_dbm: -20.0,
            link_margin_db: 0.0,
            wall_plug_efficiency: 1.0,
            converter: ConverterSpec::default(),
            aux: AuxDeviceSpec::default(),
            area: AreaSpec::default(),
            resolution_bits_cap: 16,
            waveguide_group_index: 4.2,
            eo_tuner_length_cm_per_mr: 0.005,
            to_tuner_length_cm_per_mr: 0.005,
            electronic_layer_latency_s: 0.0,
            activity_factor: 1.0,
        }
    }
}

impl AcceleratorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.conv_units == 0 || self.fc_units == 0 {
            return Err(Error::InvalidParameter("unit counts must be >= 1".into()));
        }
        if self.conv_units <= self.fc_units {
            return Err(Error::InvalidParameter(format!(
                "conv unit count n={} must exceed fc unit count m={}",
                self.conv_units, self.fc_units
            )));
        }
        if self.fc_vector_size <= self.conv_vector_size {
            return Err(Error::InvalidParameter(format!(
                "fc vector size K={} must exceed conv vector size N={}",
                self.fc_vector_size, self.conv_vector_size
            )));
        }
        self.conv_unit()?.validate()?;
        self.fc_unit()?.validate()?;
        self.device.validate()?;
        self.tuning.validate()?;
        self.thermal.validate()?;
        self.losses.validate()?;
        if self.fpv_sigma_conventional_nm < 0.0 || self.fpv_sigma_optimized_nm < 0.0 {
            return Err(Error::InvalidParameter("fpv sigmas must be >= 0".into()));
        }
        if !(self.wall_plug_efficiency > 0.0) {
            return Err(Error::InvalidParameter(
                "wall_plug_efficiency must be > 0".into(),
            ));
        }
        if !(self.converter.rate_gbps > 0.0) || self.converter.power_mw < 0.0 {
            return Err(Error::InvalidParameter(
                "converter rate must be > 0 and power >= 0".into(),
            ));
        }
        if !(self.waveguide_group_index >= 1.0) {
            return Err(Error::InvalidParameter(
                "waveguide_group_index must be >= 1".into(),
            ));
        }
        if !(self.activity_factor > 0.0 && self.activity_factor <= 1.0) {
            return Err(Error::InvalidParameter(
                "activity_factor must be in (0, 1]".into(),
            ));
        }
        if self.link_margin_db < 0.0 {
            return Err(Error::InvalidParameter("link_margin_db must be >= 0".into()));
        }
        if self.electronic_layer_latency_s < 0.0 {
            return Err(Error::InvalidParameter(
                "electronic_layer_latency_s must be >= 0".into(),
            ));
        }
        Ok(())
    }

    pub fn conv_unit(&self) -> Result<VDPUnitConfig> {
        VDPUnitConfig::for_vector_size(self.conv_vector_size, self.mrs_per_bank)
    }

    pub fn fc_unit(&self) -> Result<VDPUnitConfig> {
        VDPUnitConfig::for_vector_size(self.fc_vector_size, self.mrs_per_bank)
    }

    pub fn unit_for_role(&self, role: LayerRole) -> Result<VDPUnitConfig> {
        match role {
            LayerRole::Conv => self.conv_unit(),
            LayerRole::Fc => self.fc_unit(),
        }
    }

    pub fn unit_count_for_role(&self, role: LayerRole) -> usize {
        match role {
            LayerRole::Conv => self.conv_units,
            LayerRole::Fc => self.fc_units,
        }
    }

    /// Drift sigma selected by the variant flag.
    pub fn effective_fpv_sigma_nm(&self) -> f64 {
        if self.optimized_mr {
            self.fpv_sigma_optimized_nm
        } else {
            self.fpv_sigma_conventional_nm
        }
    }

    /// Device spec with the variant's drift sigma applied.
    pub fn device_for_variant(&self) -> MRDeviceSpec {
        MRDeviceSpec {
            fpv_drift_sigma_nm: self.effective_fpv_sigma_nm(),
            ..self.device.clone()
        }
    }

    /// WDM spacing inside one bank, nm.
    pub fn channel_spacing_nm(&self) -> f64 {
        self.device.fsr_nm / self.mrs_per_bank as f64
    }

    /// The per-bank channel grid.
    pub fn bank_grid(&self) -> Result<WavelengthGrid> {
        WavelengthGrid::uniform(
            self.mrs_per_bank,
            self.device.resonant_wavelength_nm,
            self.device.fsr_nm,
            self.device.q_factor,
        )
    }

    /// Resolution supported by the bank grid at unit input power.
    pub fn resolution_report(&self) -> Result<ResolutionReport> {
        let grid = self.bank_grid()?;
        let report = noise_power(&grid, &vec![1.0; grid.len()])?;
        resolution(report.max_noise, self.resolution_bits_cap)
    }

    /// Word width used for converter serialization, bits.
    pub fn word_bits(&self) -> Result<u32> {
        Ok(self.resolution_report()?.resolution_bits.max(1))
    }

    /// Total arms across every unit of both kinds.
    pub fn total_arms(&self) -> Result<usize> {
        Ok(self.conv_units * self.conv_unit()?.arms + self.fc_units * self.fc_unit()?.arms)
    }

    /// Total rings: two banks per arm.
    pub fn total_mr_count(&self) -> Result<usize> {
        Ok(self.total_arms()? * 2 * self.mrs_per_bank)
    }

    /// PDs per unit: one per arm plus the partial-sum accumulator when
    /// the unit has more than one arm.
    fn pds_per_unit(unit: &VDPUnitConfig) -> usize {
        unit.arms + usize::from(unit.arms > 1)
    }

    /// VCSELs per unit: one per arm when partial sums must be
    /// re-modulated into the optical domain.
    fn vcsels_per_unit(unit: &VDPUnitConfig) -> usize {
        if unit.arms > 1 {
            unit.arms
        } else {
            0
        }
    }

    pub fn total_pd_count(&self) -> Result<usize> {
        Ok(self.conv_units * Self::pds_per_unit(&self.conv_unit()?)
            + self.fc_units * Self::pds_per_unit(&self.fc_unit()?))
    }

    pub fn total_vcsel_count(&self) -> Result<usize> {
        Ok(self.conv_units * Self::vcsels_per_unit(&self.conv_unit()?)
            + self.fc_units * Self::vcsels_per_unit(&self.fc_unit()?))
    }

    /// One DAC per bank, one ADC per PD.
    pub fn total_converter_count(&self) -> Result<usize> {
        Ok(self.total_arms()? * 2 + self.total_pd_count()?)
    }

    /// Optical path of one wavelength through one arm: both banks in
    /// series, a splitter tree down to the arm, and the combiner into
    /// the accumulation waveguide.
    pub fn arm_path(&self, unit: &VDPUnitConfig) -> OpticalPath {
        let mrs_in_arm = 2 * unit.mrs_per_bank;
        OpticalPath {
            waveguide_length_cm: mrs_in_arm as f64 * self.thermal.mr_pitch_um * 1e-4,
            splits: split_stages(unit.arms),
            combines: 1,
            through_mrs: 2 * (unit.mrs_per_bank - 1),
            modulating_mrs: 2,
            eo_tuned_length_cm: mrs_in_arm as f64 * self.eo_tuner_length_cm_per_mr,
            to_tuned_length_cm: mrs_in_arm as f64 * self.to_tuner_length_cm_per_mr,
        }
    }
}

/// Splitter stages needed to broadcast to `arms` branches.
fn split_stages(arms: usize) -> usize {
    (arms.next_power_of_two().trailing_zeros()) as usize
}

/// Power draw by subsystem, mW.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PowerBreakdown {
    pub laser_mw: f64,
    pub to_tuning_mw: f64,
    pub eo_tuning_mw: f64,
    pub pd_mw: f64,
    pub tia_mw: f64,
    pub vcsel_mw: f64,
    pub converters_mw: f64,
}

impl PowerBreakdown {
    pub fn total_mw(&self) -> f64 {
        self.laser_mw
            + self.to_tuning_mw
            + self.eo_tuning_mw
            + self.pd_mw
            + self.tia_mw
            + self.vcsel_mw
            + self.converters_mw
    }
}

/// Metrics for one (model, configuration) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub model_name: String,
    pub latency_s: f64,
    pub fps: f64,
    pub power: PowerBreakdown,
    pub total_power_mw: f64,
    pub energy_per_bit_pj: f64,
    pub area_mm2: f64,
    pub resolution_bits: u32,
}

/// Serialization time for `words` digital words of `bits` each.
fn converter_time_s(words: usize, bits: u32, rate_gbps: f64) -> f64 {
    (words as f64 * bits as f64) / (rate_gbps * 1e9)
}

/// Converter words moved per op: the fullest bank's DAC refill plus one
/// ADC word out.
fn converter_words(op_length: usize, unit: &VDPUnitConfig) -> usize {
    op_length.min(unit.mrs_per_bank) + 1
}

/// Latency of one dot-product op issued to a unit.
///
/// Banks across arms are imprinted concurrently, so EO tuning is
/// charged once; an extra VCSEL + PD stage is charged when partial sums
/// from several arms must be re-accumulated.
pub fn op_latency(op_length: usize, unit: &VDPUnitConfig, cfg: &AcceleratorConfig) -> Result<f64> {
    if op_length == 0 {
        return Err(Error::ContractViolation("op length must be >= 1".into()));
    }
    let chunks = op_length.div_ceil(unit.mrs_per_bank);
    if chunks > unit.arms {
        return Err(Error::Capacity(format!(
            "op of length {op_length} needs {chunks} banks but the unit has {} arms",
            unit.arms
        )));
    }
    let arm_length_m = 2.0 * unit.mrs_per_bank as f64 * cfg.thermal.mr_pitch_um * 1e-6;
    let propagation_s = arm_length_m * cfg.waveguide_group_index / SPEED_OF_LIGHT;
    let accumulation_s = if chunks > 1 {
        cfg.aux.vcsel_latency_s + cfg.aux.pd_latency_s
    } else {
        0.0
    };
    let words = converter_words(op_length, unit);
    let serialization_s = converter_time_s(words, cfg.word_bits()?, cfg.converter.rate_gbps);
    Ok(cfg.tuning.eo_latency_s
        + propagation_s
        + cfg.aux.pd_latency_s
        + cfg.aux.tia_latency_s
        + accumulation_s
        + serialization_s)
}

/// Interval between successive op issues on one unit under full
/// pipelining: EO imprint or converter refill, whichever dominates.
pub fn op_issue_interval(unit: &VDPUnitConfig, cfg: &AcceleratorConfig) -> Result<f64> {
    let words = converter_words(unit.vector_size, unit);
    let serialization_s = converter_time_s(words, cfg.word_bits()?, cfg.converter.rate_gbps);
    Ok(cfg.tuning.eo_latency_s.max(serialization_s))
}

/// End-to-end inference latency: layers run serially; within a layer,
/// ops are spread across the units of the matching kind and pipelined
/// at the issue interval.
pub fn model_latency(model: &ModelSpec, cfg: &AcceleratorConfig) -> Result<f64> {
    let mut total_s = 0.0;
    for (index, layer) in model.layers.iter().enumerate() {
        let Some(schedule) = schedule_layer(layer, index)? else {
            total_s += cfg.electronic_layer_latency_s;
            continue;
        };
        let role = schedule.ops[0].role;
        let unit = cfg.unit_for_role(role)?;
        let unit_count = cfg.unit_count_for_role(role);
        let mut subops = 0usize;
        let mut fill_length = 0usize;
        for op in &schedule.ops {
            subops += op.length.div_ceil(unit.vector_size);
            fill_length = fill_length.max(op.length.min(unit.vector_size));
        }
        let rounds = subops.div_ceil(unit_count);
        total_s += (rounds - 1) as f64 * op_issue_interval(&unit, cfg)?
            + op_latency(fill_length, &unit, cfg)?;
    }
    Ok(total_s)
}

/// Peak power breakdown. Laser and imprint power cover the unit kinds
/// the model exercises; FPV compensation covers every fabricated ring
/// (it is applied at boot, before any mapping).
pub fn power_breakdown(
    model: &ModelSpec,
    cfg: &AcceleratorConfig,
    fpv: &FPVSample,
) -> Result<PowerBreakdown> {
    let total_mrs = cfg.total_mr_count()?;
    if fpv.len() != total_mrs {
        return Err(Error::LengthMismatch(format!(
            "fpv sample covers {} MRs, architecture has {total_mrs}",
            fpv.len()
        )));
    }

    let mut roles = [false, false]; // [conv, fc]
    for (index, layer) in model.layers.iter().enumerate() {
        if let Some(schedule) = schedule_layer(layer, index)? {
            match schedule.ops[0].role {
                LayerRole::Conv => roles[0] = true,
                LayerRole::Fc => roles[1] = true,
            }
        }
    }

    let mut breakdown = PowerBreakdown::default();
    for (role, present) in [(LayerRole::Conv, roles[0]), (LayerRole::Fc, roles[1])] {
        if !present {
            continue;
        }
        let unit = cfg.unit_for_role(role)?;
        let unit_count = cfg.unit_count_for_role(role);
        let arms = unit_count * unit.arms;

        let loss_db = path_loss(&cfg.arm_path(&unit), &cfg.losses);
        let per_arm = laser_power_required(
            loss_db,
            cfg.detector_sensitivity_dbm,
            unit.wavelengths_per_arm,
            cfg.link_margin_db,
        )?;
        breakdown.laser_mw += arms as f64 * per_arm.mw / cfg.wall_plug_efficiency;

        // Value imprint holds each ring half a channel spacing off its
        // resonance on average.
        let mean_shift_nm = cfg.channel_spacing_nm() / 2.0;
        let active_mrs = (arms * 2 * unit.mrs_per_bank) as f64 * cfg.activity_factor;
        breakdown.eo_tuning_mw += active_mrs * mean_shift_nm * cfg.tuning.eo_power_per_nm_uw * 1e-3;

        let pds = (unit_count * AcceleratorConfig::pds_per_unit(&unit)) as f64;
        let vcsels = (unit_count * AcceleratorConfig::vcsels_per_unit(&unit)) as f64;
        breakdown.pd_mw += pds * cfg.aux.pd_power_mw * cfg.activity_factor;
        breakdown.tia_mw += pds * cfg.aux.tia_power_mw * cfg.activity_factor;
        breakdown.vcsel_mw += vcsels * cfg.aux.vcsel_power_mw * cfg.activity_factor;

        let interval_s = op_issue_interval(&unit, cfg)?;
        let bits = cfg.word_bits()?;
        let dac_rate_gbps = unit.mrs_per_bank as f64 * bits as f64 / interval_s / 1e9;
        let adc_rate_gbps = bits as f64 / interval_s / 1e9;
        let dac_util = (dac_rate_gbps / cfg.converter.rate_gbps).min(1.0);
        let adc_util = (adc_rate_gbps / cfg.converter.rate_gbps).min(1.0);
        let dacs = (arms * 2) as f64;
        breakdown.converters_mw += (dacs * dac_util + pds * adc_util)
            * cfg.converter.power_mw
            * cfg.activity_factor;
    }

    breakdown.to_tuning_mw = fpv_compensation_power(cfg, fpv)?;
    Ok(breakdown)
}

/// TO power holding every ring on its grid wavelength against FPV
/// drift, bank by bank: the drift magnitude maps to a phase target via
/// the 2π-per-FSR convention, then either the collective solve or the
/// per-device loop prices the bank.
pub fn fpv_compensation_power(cfg: &AcceleratorConfig, fpv: &FPVSample) -> Result<f64> {
    let mrs = cfg.mrs_per_bank;
    let matrix = build_crosstalk_matrix(mrs, &cfg.thermal)?;
    let solver = if cfg.ted_enabled {
        Some(TedSolver::new(&matrix)?)
    } else {
        None
    };
    let mut total_mw = 0.0;
    for bank in fpv.drifts_nm.chunks(mrs) {
        let desired: Vec<f64> = bank
            .iter()
            .map(|drift| drift.abs() / cfg.device.fsr_nm * PHASE_PER_FSR)
            .collect();
        total_mw += match &solver {
            Some(solver) => solver.solve(&desired, &cfg.tuning)?.total_power_mw,
            None => naive_tuning_power(&matrix, &desired, &cfg.tuning)?,
        };
    }
    Ok(total_mw)
}

/// Energy per bit, pJ: total energy over the inference divided by the
/// total data bits processed. Bits are counted as MAC operand elements
/// × 2 × resolution bits.
pub fn energy_epb(model: &ModelSpec, cfg: &AcceleratorConfig, total_power_mw: f64) -> Result<f64> {
    let macs = model.total_macs()?;
    let bits_per_element = cfg.resolution_report()?.resolution_bits;
    let total_bits = macs as u64 * 2 * bits_per_element as u64;
    if total_bits == 0 {
        return Err(Error::ContractViolation(
            "model processes zero bits (no photonic ops or zero resolution)".into(),
        ));
    }
    let latency_s = model_latency(model, cfg)?;
    let energy_pj = total_power_mw * latency_s * 1e9;
    Ok(energy_pj / total_bits as f64)
}

/// Additive area model: ring footprints at the layout pitch plus fixed
/// blocks, scaled by the routing factor.
pub fn area_estimate(cfg: &AcceleratorConfig) -> Result<f64> {
    let mr_mm2 = cfg.total_mr_count()? as f64 * (cfg.thermal.mr_pitch_um * 1e-3).powi(2);
    let pd_mm2 = cfg.total_pd_count()? as f64 * cfg.area.pd_footprint_mm2;
    let vcsel_mm2 = cfg.total_vcsel_count()? as f64 * cfg.area.vcsel_footprint_mm2;
    let converter_mm2 = cfg.total_converter_count()? as f64 * cfg.area.converter_footprint_mm2;
    Ok((mr_mm2 + pd_mm2 + vcsel_mm2 + converter_mm2) * cfg.area.routing_factor)
}

/// Full evaluation of one model on one configuration: draws the FPV
/// instance from the seed, then computes latency, power, EPB, and area.
pub fn evaluate(model: &ModelSpec, cfg: &AcceleratorConfig, seed: u64) -> Result<MetricsReport> {
    cfg.validate()?;
    model.validate()?;
    let fpv = crate::devices::sample_fpv_drift(
        cfg.total_mr_count()?,
        &cfg.device_for_variant(),
        seed,
    )?;
    let latency_s = model_latency(model, cfg)?;
    let power = power_breakdown(model, cfg, &fpv)?;
    let total_power_mw = power.total_mw();
    let energy_per_bit_pj = energy_epb(model, cfg, total_power_mw)?;
    Ok(MetricsReport {
        model_name: model.name.clone(),
        latency_s,
        fps: latency_s.recip(),
        power,
        total_power_mw,
        energy_per_bit_pj,
        area_mm2: area_estimate(cfg)?,
        resolution_bits: cfg.resolution_report()?.resolution_bits,
    })
}
