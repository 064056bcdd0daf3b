//! Optical link budget: path losses, required laser power, inter-channel
//! crosstalk noise, and the resolution it permits.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default cap on reported resolution bits.
pub const DEFAULT_RESOLUTION_BITS_CAP: u32 = 16;

/// Per-mechanism optical loss coefficients, dB.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LossSpec {
    /// Waveguide propagation loss, dB/cm.
    pub propagation_db_per_cm: f64,
    /// Excess loss per splitter stage, dB.
    pub splitter_db: f64,
    /// Excess loss per combiner stage, dB.
    pub combiner_db: f64,
    /// Loss per microring passed off-resonance, dB.
    pub mr_through_db: f64,
    /// Loss per modulating microring, dB.
    pub mr_modulation_db: f64,
    /// Loss of EO-tuned waveguide sections, dB/cm.
    pub eo_tuning_db_per_cm: f64,
    /// Loss of TO-tuned waveguide sections, dB/cm.
    pub to_tuning_db_per_cm: f64,
}

impl Default for LossSpec {
    fn default() -> Self {
        Self {
            propagation_db_per_cm: 1.0,
            splitter_db: 0.13,
            combiner_db: 0.9,
            mr_through_db: 0.02,
            mr_modulation_db: 0.72,
            eo_tuning_db_per_cm: 6.0,
            to_tuning_db_per_cm: 1.0,
        }
    }
}

impl LossSpec {
    pub fn validate(&self) -> Result<()> {
        let entries = [
            self.propagation_db_per_cm,
            self.splitter_db,
            self.combiner_db,
            self.mr_through_db,
            self.mr_modulation_db,
            self.eo_tuning_db_per_cm,
            self.to_tuning_db_per_cm,
        ];
        if entries.iter().any(|v| *v < 0.0 || !v.is_finite()) {
            return Err(Error::InvalidParameter(
                "loss coefficients must be finite and >= 0".into(),
            ));
        }
        Ok(())
    }
}

/// What one optical signal traverses between laser and detector.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct OpticalPath {
    pub waveguide_length_cm: f64,
    pub splits: usize,
    pub combines: usize,
    pub through_mrs: usize,
    pub modulating_mrs: usize,
    pub eo_tuned_length_cm: f64,
    pub to_tuned_length_cm: f64,
}

/// WDM channel grid shared by the rings of one bank.
#[derive(Debug, Clone, PartialEq)]
pub struct WavelengthGrid {
    pub wavelengths_nm: Vec<f64>,
    pub q_factor: f64,
}

impl WavelengthGrid {
    /// `n` channels spaced fsr/n apart starting at `band_start_nm`, so
    /// the grid always fits within one FSR.
    pub fn uniform(n: usize, band_start_nm: f64, fsr_nm: f64, q_factor: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptyBank("wavelength grid needs >= 1 channel".into()));
        }
        let spacing = fsr_nm / n as f64;
        let grid = Self {
            wavelengths_nm: (0..n).map(|i| band_start_nm + i as f64 * spacing).collect(),
            q_factor,
        };
        grid.validate(fsr_nm)?;
        Ok(grid)
    }

    pub fn len(&self) -> usize {
        self.wavelengths_nm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.wavelengths_nm.is_empty()
    }

    pub fn validate(&self, fsr_nm: f64) -> Result<()> {
        if self.wavelengths_nm.is_empty() {
            return Err(Error::EmptyBank("wavelength grid is empty".into()));
        }
        if !(self.q_factor > 0.0) {
            return Err(Error::InvalidParameter("q_factor must be > 0".into()));
        }
        for pair in self.wavelengths_nm.windows(2) {
            if pair[1] <= pair[0] {
                return Err(Error::InvalidParameter(
                    "grid wavelengths must be strictly increasing".into(),
                ));
            }
        }
        let span = self.wavelengths_nm.last().unwrap() - self.wavelengths_nm[0];
        if span >= fsr_nm {
            return Err(Error::InvalidParameter(format!(
                "grid spans {span} nm, beyond one FSR ({fsr_nm} nm)"
            )));
        }
        Ok(())
    }
}

/// Required laser power in both dBm and mW.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LaserPower {
    pub dbm: f64,
    pub mw: f64,
}

/// Crosstalk noise per channel plus the worst case.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseReport {
    pub per_channel: Vec<f64>,
    pub max_noise: f64,
}

/// Analog resolution supported by the worst-case noise floor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResolutionReport {
    /// Worst-case crosstalk noise as a fraction of unit input power.
    pub max_noise_power: f64,
    /// Distinguishable levels, 1 / max_noise_power (∞ when noise-free).
    pub resolution_levels: f64,
    /// floor(log₂ levels), capped.
    pub resolution_bits: u32,
}

/// Total loss along a path: every term is additive in dB.
pub fn path_loss(path: &OpticalPath, losses: &LossSpec) -> f64 {
    losses.propagation_db_per_cm * path.waveguide_length_cm
        + losses.splitter_db * path.splits as f64
        + losses.combiner_db * path.combines as f64
        + losses.mr_through_db * path.through_mrs as f64
        + losses.mr_modulation_db * path.modulating_mrs as f64
        + losses.eo_tuning_db_per_cm * path.eo_tuned_length_cm
        + losses.to_tuning_db_per_cm * path.to_tuned_length_cm
}

/// Laser power needed so every one of `n_wavelengths` channels reaches
/// the detector at its sensitivity after `loss_db`, taken at equality
/// with an optional extra margin.
pub fn laser_power_required(
    loss_db: f64,
    detector_sensitivity_dbm: f64,
    n_wavelengths: usize,
    margin_db: f64,
) -> Result<LaserPower> {
    if n_wavelengths == 0 {
        return Err(Error::ContractViolation(
            "laser power needs >= 1 wavelength".into(),
        ));
    }
    let dbm =
        detector_sensitivity_dbm + loss_db + 10.0 * (n_wavelengths as f64).log10() + margin_db;
    Ok(LaserPower {
        dbm,
        mw: 10f64.powf(dbm / 10.0),
    })
}

/// Lorentzian-tail leakage of channel `j` into channel `i`.
///
/// The 3 dB bandwidth δ is taken from λ of the first index, exactly as
/// the noise model is stated, so the coefficient is only approximately
/// symmetric in (i, j).
pub fn crosstalk_coefficient(i: usize, j: usize, grid: &WavelengthGrid) -> Result<f64> {
    if i == j {
        return Err(Error::ContractViolation(
            "self-coupling is signal, not crosstalk noise".into(),
        ));
    }
    let n = grid.len();
    if i >= n || j >= n {
        return Err(Error::ContractViolation(format!(
            "channel index out of range ({i}, {j}) for {n} channels"
        )));
    }
    let delta = grid.wavelengths_nm[i] / (2.0 * grid.q_factor);
    let detuning = grid.wavelengths_nm[i] - grid.wavelengths_nm[j];
    Ok(delta * delta / (detuning * detuning + delta * delta))
}

/// Crosstalk noise power accumulated on each channel:
/// noise[j] = Σ_{i≠j} φ(i, j) × input_powers[i].
pub fn noise_power(grid: &WavelengthGrid, input_powers: &[f64]) -> Result<NoiseReport> {
    let n = grid.len();
    if input_powers.len() != n {
        return Err(Error::LengthMismatch(format!(
            "{} input powers for {n} channels",
            input_powers.len()
        )));
    }
    let mut per_channel = vec![0.0; n];
    for j in 0..n {
        for i in 0..n {
            if i == j {
                continue;
            }
            per_channel[j] += crosstalk_coefficient(i, j, grid)? * input_powers[i];
        }
    }
    let max_noise = per_channel.iter().copied().fold(0.0_f64, f64::max);
    Ok(NoiseReport {
        per_channel,
        max_noise,
    })
}

/// Resolution supported by a worst-case noise fraction, for unit input
/// power.
pub fn resolution(max_noise: f64, bits_cap: u32) -> Result<ResolutionReport> {
    if max_noise < 0.0 {
        return Err(Error::ContractViolation("noise must be >= 0".into()));
    }
    if max_noise == 0.0 {
        return Ok(ResolutionReport {
            max_noise_power: 0.0,
            resolution_levels: f64::INFINITY,
            resolution_bits: bits_cap,
        });
    }
    let levels = 1.0 / max_noise;
    let bits = if levels >= 2.0 {
        (levels.log2().floor() as u32).min(bits_cap)
    } else {
        0
    };
    Ok(ResolutionReport {
        max_noise_power: max_noise,
        resolution_levels: levels,
        resolution_bits: bits,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_path_has_zero_loss() {
        assert_eq!(path_loss(&OpticalPath::default(), &LossSpec::default()), 0.0);
    }

    #[test]
    fn hand_summed_path_loss() {
        // 1 cm waveguide + 1 split + 15 through MRs + 1 modulating MR:
        // 1 + 0.13 + 15×0.02 + 0.72 = 2.15 dB.
        let path = OpticalPath {
            waveguide_length_cm: 1.0,
            splits: 1,
            through_mrs: 15,
            modulating_mrs: 1,
            ..Default::default()
        };
        let loss = path_loss(&path, &LossSpec::default());
        assert!((loss - 2.15).abs() < 1e-12);
    }

    #[test]
    fn path_loss_is_linear_in_path() {
        let path = OpticalPath {
            waveguide_length_cm: 0.7,
            splits: 3,
            combines: 2,
            through_mrs: 9,
            modulating_mrs: 2,
            eo_tuned_length_cm: 0.01,
            to_tuned_length_cm: 0.02,
        };
        let doubled = OpticalPath {
            waveguide_length_cm: 1.4,
            splits: 6,
            combines: 4,
            through_mrs: 18,
            modulating_mrs: 4,
            eo_tuned_length_cm: 0.02,
            to_tuned_length_cm: 0.04,
        };
        let losses = LossSpec::default();
        assert!((path_loss(&doubled, &losses) - 2.0 * path_loss(&path, &losses)).abs() < 1e-12);
    }

    #[test]
    fn laser_power_hand_case() {
        // −20 dBm sensitivity + 10 dB loss + 10·log₁₀(10) = 0 dBm = 1 mW.
        let p = laser_power_required(10.0, -20.0, 10, 0.0).unwrap();
        assert!(p.dbm.abs() < 1e-12);
        assert!((p.mw - 1.0).abs() < 1e-12);
    }

    #[test]
    fn laser_power_single_lossless_channel_equals_sensitivity() {
        let p = laser_power_required(0.0, -20.0, 1, 0.0).unwrap();
        assert_eq!(p.dbm, -20.0);
    }

    #[test]
    fn laser_power_rejects_zero_channels() {
        assert!(matches!(
            laser_power_required(0.0, -20.0, 0, 0.0),
            Err(Error::ContractViolation(_))
        ));
    }

    #[test]
    fn doubling_channels_adds_three_db() {
        for n in [1usize, 3, 8, 25] {
            let a = laser_power_required(5.0, -20.0, n, 0.0).unwrap();
            let b = laser_power_required(5.0, -20.0, 2 * n, 0.0).unwrap();
            assert!((b.dbm - a.dbm - 10.0 * 2f64.log10()).abs() < 1e-9);
        }
    }

    #[test]
    fn crosstalk_coefficient_hand_case() {
        // λ=1550 nm, Q=8000 → δ=0.096875 nm; spacing 1.2 nm.
        let grid = WavelengthGrid {
            wavelengths_nm: vec![1550.0, 1551.2],
            q_factor: 8000.0,
        };
        let c = crosstalk_coefficient(0, 1, &grid).unwrap();
        let delta = 1550.0 / 16000.0;
        let expected = delta * delta / (1.2 * 1.2 + delta * delta);
        assert!((c - expected).abs() < 1e-15);
        assert!((c - 0.006476).abs() < 1e-5);
    }

    #[test]
    fn crosstalk_coefficient_zero_detuning_limit_is_one() {
        // Two distinct channels at the same wavelength: the tail
        // coupling saturates at 1. Limit case only; uniform grids are
        // strictly increasing.
        let grid = WavelengthGrid {
            wavelengths_nm: vec![1550.0, 1550.0],
            q_factor: 8000.0,
        };
        assert_eq!(crosstalk_coefficient(0, 1, &grid).unwrap(), 1.0);
    }

    #[test]
    fn crosstalk_coefficient_rejects_self_term() {
        let grid = WavelengthGrid {
            wavelengths_nm: vec![1550.0, 1551.2],
            q_factor: 8000.0,
        };
        assert!(matches!(
            crosstalk_coefficient(1, 1, &grid),
            Err(Error::ContractViolation(_))
        ));
    }

    #[test]
    fn crosstalk_decreases_with_detuning() {
        let grid = WavelengthGrid {
            wavelengths_nm: vec![1550.0, 1551.0, 1553.0, 1557.0],
            q_factor: 8000.0,
        };
        let near = crosstalk_coefficient(0, 1, &grid).unwrap();
        let mid = crosstalk_coefficient(0, 2, &grid).unwrap();
        let far = crosstalk_coefficient(0, 3, &grid).unwrap();
        assert!(near > mid && mid > far);
    }

    #[test]
    fn crosstalk_is_approximately_symmetric() {
        // The asymmetry is set by the δ difference between the pair:
        // roughly 2·|λᵢ−λⱼ|/λ, so 1% holds out to half an FSR and
        // ~2.2% bounds the farthest pair on this grid.
        let grid = WavelengthGrid::uniform(15, 1550.0, 18.0, 8000.0).unwrap();
        for i in 0..15 {
            for j in 0..15 {
                if i == j {
                    continue;
                }
                let a = crosstalk_coefficient(i, j, &grid).unwrap();
                let b = crosstalk_coefficient(j, i, &grid).unwrap();
                let asymmetry = (a - b).abs() / a;
                let detuning =
                    (grid.wavelengths_nm[i] - grid.wavelengths_nm[j]).abs();
                if detuning <= 7.0 {
                    assert!(asymmetry < 0.01, "asymmetry beyond 1% at ({i},{j})");
                }
                assert!(asymmetry < 0.023, "asymmetry beyond bound at ({i},{j})");
            }
        }
    }

    #[test]
    fn single_channel_sees_no_noise() {
        let grid = WavelengthGrid::uniform(1, 1550.0, 18.0, 8000.0).unwrap();
        let report = noise_power(&grid, &[1.0]).unwrap();
        assert_eq!(report.max_noise, 0.0);
    }

    #[test]
    fn two_channels_noise_equals_pairwise_coefficient() {
        let grid = WavelengthGrid::uniform(2, 1550.0, 18.0, 8000.0).unwrap();
        let report = noise_power(&grid, &[1.0, 1.0]).unwrap();
        let c01 = crosstalk_coefficient(0, 1, &grid).unwrap();
        let c10 = crosstalk_coefficient(1, 0, &grid).unwrap();
        assert_eq!(report.per_channel[1], c01);
        assert_eq!(report.per_channel[0], c10);
    }

    #[test]
    fn noise_power_rejects_length_mismatch() {
        let grid = WavelengthGrid::uniform(3, 1550.0, 18.0, 8000.0).unwrap();
        assert!(matches!(
            noise_power(&grid, &[1.0, 1.0]),
            Err(Error::LengthMismatch(_))
        ));
    }

    #[test]
    fn resolution_zero_noise_hits_cap() {
        let r = resolution(0.0, 16).unwrap();
        assert!(r.resolution_levels.is_infinite());
        assert_eq!(r.resolution_bits, 16);
    }

    #[test]
    fn resolution_power_of_two() {
        let r = resolution(1.0 / 256.0, 16).unwrap();
        assert!((r.resolution_levels - 256.0).abs() < 1e-9);
        assert_eq!(r.resolution_bits, 8);
    }

    #[test]
    fn resolution_rejects_negative_noise() {
        assert!(matches!(
            resolution(-0.1, 16),
            Err(Error::ContractViolation(_))
        ));
    }

    #[test]
    fn grid_uniform_fits_one_fsr() {
        let grid = WavelengthGrid::uniform(15, 1550.0, 18.0, 8000.0).unwrap();
        assert_eq!(grid.len(), 15);
        let spacing = grid.wavelengths_nm[1] - grid.wavelengths_nm[0];
        assert!((spacing - 1.2).abs() < 1e-12);
        let span = grid.wavelengths_nm[14] - grid.wavelengths_nm[0];
        assert!(span < 18.0);
    }

    #[test]
    fn grid_rejects_non_increasing_wavelengths() {
        let grid = WavelengthGrid {
            wavelengths_nm: vec![1550.0, 1550.0],
            q_factor: 8000.0,
        };
        assert!(grid.validate(18.0).is_err());
    }
}
