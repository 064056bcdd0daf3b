//! Microring device models: fabrication-variation sampling, the hybrid
//! EO/TO tuning policy, and thermal phase crosstalk with collective
//! (eigenmode-style) compensation.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One full FSR of resonance shift corresponds to a 2π phase shift;
/// heater power is linear in phase in between.
pub const PHASE_PER_FSR: f64 = std::f64::consts::TAU;

/// Condition-number bound above which a crosstalk system is rejected.
pub const MAX_CONDITION: f64 = 1e12;

/// Residual bound the collective solve must satisfy.
pub const SOLVE_RESIDUAL_BOUND: f64 = 1e-9;

/// Iteration cap for the per-device compensation loop.
pub const NAIVE_MAX_STEPS: usize = 10_000;

/// Physical and optical parameters of one microring resonator.
///
/// The extinction ratio of the resonance is a device characteristic but
/// does not enter any computation here; only λ, Q, FSR, the two loss
/// figures, and the fabrication drift scale are consumed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MRDeviceSpec {
    /// Design resonant wavelength, nm.
    pub resonant_wavelength_nm: f64,
    /// Quality factor of the resonance.
    pub q_factor: f64,
    /// Free spectral range, nm.
    pub fsr_nm: f64,
    /// Through-port loss per ring passed, dB.
    pub through_loss_db: f64,
    /// Loss per modulating ring, dB.
    pub modulation_loss_db: f64,
    /// Standard deviation of fabrication-induced resonance drift, nm.
    pub fpv_drift_sigma_nm: f64,
}

impl Default for MRDeviceSpec {
    fn default() -> Self {
        Self {
            resonant_wavelength_nm: 1550.0,
            q_factor: 8000.0,
            fsr_nm: 18.0,
            through_loss_db: 0.02,
            modulation_loss_db: 0.72,
            fpv_drift_sigma_nm: 7.1,
        }
    }
}

impl MRDeviceSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.resonant_wavelength_nm > 0.0) {
            return Err(Error::InvalidParameter(
                "resonant_wavelength_nm must be > 0".into(),
            ));
        }
        if !(self.q_factor > 0.0) {
            return Err(Error::InvalidParameter("q_factor must be > 0".into()));
        }
        if !(self.fsr_nm > 0.0) {
            return Err(Error::InvalidParameter("fsr_nm must be > 0".into()));
        }
        if self.through_loss_db < 0.0 || self.modulation_loss_db < 0.0 {
            return Err(Error::InvalidParameter("losses must be >= 0 dB".into()));
        }
        if self.fpv_drift_sigma_nm < 0.0 {
            return Err(Error::InvalidParameter(
                "fpv_drift_sigma_nm must be >= 0".into(),
            ));
        }
        Ok(())
    }
}

/// Hybrid tuning mechanism parameters: fast/low-power electro-optic
/// tuning over a small range, slow/high-power thermo-optic tuning for
/// large shifts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TuningSpec {
    /// EO tuning power, μW per nm of shift.
    pub eo_power_per_nm_uw: f64,
    /// EO tuning latency, s.
    pub eo_latency_s: f64,
    /// Largest shift EO tuning can reach, nm.
    pub eo_max_range_nm: f64,
    /// TO tuning power, mW per FSR of shift.
    pub to_power_per_fsr_mw: f64,
    /// TO tuning latency, s.
    pub to_latency_s: f64,
}

impl Default for TuningSpec {
    fn default() -> Self {
        Self {
            eo_power_per_nm_uw: 4.0,
            eo_latency_s: 20e-9,
            eo_max_range_nm: 3.0,
            to_power_per_fsr_mw: 27.5,
            to_latency_s: 4e-6,
        }
    }
}

impl TuningSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.eo_power_per_nm_uw > 0.0)
            || !(self.eo_latency_s > 0.0)
            || !(self.to_power_per_fsr_mw > 0.0)
            || !(self.to_latency_s > 0.0)
        {
            return Err(Error::InvalidParameter(
                "tuning rates and latencies must be > 0".into(),
            ));
        }
        if !(self.eo_max_range_nm > 0.0) {
            return Err(Error::InvalidParameter("eo_max_range_nm must be > 0".into()));
        }
        if self.eo_latency_s >= self.to_latency_s {
            return Err(Error::InvalidParameter(
                "eo_latency_s must be below to_latency_s (EO is the fast mechanism)".into(),
            ));
        }
        Ok(())
    }
}

/// Exponential model of heater-to-neighbor phase crosstalk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ThermalCrosstalkSpec {
    /// Crosstalk ratio at zero heater separation, in [0, 1].
    pub ratio_at_zero: f64,
    /// 1/e decay length of the crosstalk ratio, μm.
    pub decay_length_um: f64,
    /// Center-to-center spacing of adjacent rings in a bank, μm.
    pub mr_pitch_um: f64,
}

impl Default for ThermalCrosstalkSpec {
    fn default() -> Self {
        Self {
            ratio_at_zero: 0.4,
            decay_length_um: 5.0,
            mr_pitch_um: 5.0,
        }
    }
}

impl ThermalCrosstalkSpec {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.ratio_at_zero) {
            return Err(Error::InvalidParameter(
                "ratio_at_zero must be in [0, 1]".into(),
            ));
        }
        if !(self.decay_length_um > 0.0) {
            return Err(Error::InvalidParameter("decay_length_um must be > 0".into()));
        }
        if !(self.mr_pitch_um > 0.0) {
            return Err(Error::InvalidParameter("mr_pitch_um must be > 0".into()));
        }
        Ok(())
    }
}

/// Pairwise thermal phase-crosstalk coefficients for one MR bank.
///
/// Row i holds the fraction of heater i's phase shift that each ring
/// sees; the diagonal is 1 (a heater fully affects its own ring) and
/// entries fall off with |i − j| for equally spaced rings.
#[derive(Debug, Clone, PartialEq)]
pub struct CrosstalkMatrix {
    n: usize,
    coefficients: Vec<f64>, // row-major n×n
}

impl CrosstalkMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.coefficients[i * self.n + j]
    }

    /// Matrix-vector product, used by the solvers and kept simple so
    /// tests can cross-check it against an independent loop.
    pub fn apply(&self, phases: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.get(i, j) * phases[j]).sum())
            .collect()
    }
}

/// Per-ring resonance drifts (signed, nm) drawn for one fabrication
/// instance.
#[derive(Debug, Clone, PartialEq)]
pub struct FPVSample {
    pub drifts_nm: Vec<f64>,
}

impl FPVSample {
    pub fn len(&self) -> usize {
        self.drifts_nm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.drifts_nm.is_empty()
    }
}

/// Which tuning mechanism a shift is assigned to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TuningMechanism {
    EO,
    TO,
}

/// Cost of compensating one resonance shift.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TuningCost {
    pub power_mw: f64,
    pub latency_s: f64,
    pub mechanism: TuningMechanism,
}

/// Result of the collective crosstalk-aware solve for one bank.
#[derive(Debug, Clone, PartialEq)]
pub struct TedSolution {
    pub applied_phases: Vec<f64>,
    pub total_power_mw: f64,
}

/// Side-by-side tuning power of per-device compensation vs the
/// collective solve, for the same bank and target phases.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TuningPowerComparison {
    pub naive_power_mw: f64,
    pub ted_power_mw: f64,
}

/// Draw `n` resonance drifts from a zero-mean Gaussian with the spec's
/// drift sigma. Deterministic for a fixed seed.
pub fn sample_fpv_drift(n: usize, spec: &MRDeviceSpec, seed: u64) -> Result<FPVSample> {
    if n == 0 {
        return Err(Error::EmptyBank("cannot sample drifts for 0 MRs".into()));
    }
    if spec.fpv_drift_sigma_nm == 0.0 {
        return Ok(FPVSample {
            drifts_nm: vec![0.0; n],
        });
    }
    let normal = Normal::new(0.0, spec.fpv_drift_sigma_nm)
        .map_err(|e| Error::InvalidParameter(format!("fpv sigma: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(FPVSample {
        drifts_nm: (0..n).map(|_| normal.sample(&mut rng)).collect(),
    })
}

/// Cost of moving a resonance by `delta_lambda_nm` (a magnitude):
/// EO handles shifts within its range, TO takes over beyond it.
pub fn tuning_cost(delta_lambda_nm: f64, spec: &TuningSpec, fsr_nm: f64) -> Result<TuningCost> {
    if delta_lambda_nm < 0.0 {
        return Err(Error::ContractViolation(
            "tuning_cost expects a shift magnitude (>= 0)".into(),
        ));
    }
    if !(fsr_nm > 0.0) {
        return Err(Error::ContractViolation("fsr_nm must be > 0".into()));
    }
    if delta_lambda_nm <= spec.eo_max_range_nm {
        Ok(TuningCost {
            power_mw: delta_lambda_nm * spec.eo_power_per_nm_uw * 1e-3,
            latency_s: spec.eo_latency_s,
            mechanism: TuningMechanism::EO,
        })
    } else {
        Ok(TuningCost {
            power_mw: (delta_lambda_nm / fsr_nm) * spec.to_power_per_fsr_mw,
            latency_s: spec.to_latency_s,
            mechanism: TuningMechanism::TO,
        })
    }
}

/// Fraction of a heater's phase shift seen at `distance_um`.
pub fn phase_crosstalk_ratio(distance_um: f64, spec: &ThermalCrosstalkSpec) -> Result<f64> {
    if distance_um < 0.0 {
        return Err(Error::ContractViolation("distance must be >= 0".into()));
    }
    Ok(spec.ratio_at_zero * (-distance_um / spec.decay_length_um).exp())
}

/// Crosstalk matrix for `n` equally spaced rings at the spec pitch.
pub fn build_crosstalk_matrix(n: usize, spec: &ThermalCrosstalkSpec) -> Result<CrosstalkMatrix> {
    if n == 0 {
        return Err(Error::EmptyBank("crosstalk matrix needs >= 1 MR".into()));
    }
    let mut coefficients = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            coefficients[i * n + j] = if i == j {
                1.0
            } else {
                let distance = (i.abs_diff(j) as f64) * spec.mr_pitch_um;
                phase_crosstalk_ratio(distance, spec)?
            };
        }
    }
    Ok(CrosstalkMatrix { n, coefficients })
}

/// Heater power implied by a set of applied phase shifts, using the
/// 2π-per-FSR convention.
pub fn phase_power_mw(applied_phases: &[f64], tuning: &TuningSpec) -> f64 {
    applied_phases
        .iter()
        .map(|p| p.abs() / PHASE_PER_FSR * tuning.to_power_per_fsr_mw)
        .sum()
}

/// Collective tuning solver for one bank: factors the crosstalk matrix
/// once so many phase targets can be solved against the same bank.
pub struct TedSolver {
    matrix: CrosstalkMatrix,
    lu: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
}

impl TedSolver {
    pub fn new(matrix: &CrosstalkMatrix) -> Result<Self> {
        let n = matrix.n();
        let a = DMatrix::from_fn(n, n, |i, j| matrix.get(i, j));
        let inverse = a.clone().try_inverse().ok_or_else(|| {
            Error::NumericalConditioning("crosstalk matrix is singular".into())
        })?;
        let condition = inf_norm(&a) * inf_norm(&inverse);
        if !condition.is_finite() || condition > MAX_CONDITION {
            return Err(Error::NumericalConditioning(format!(
                "crosstalk matrix condition estimate {condition:.3e} exceeds {MAX_CONDITION:.0e}"
            )));
        }
        Ok(Self {
            matrix: matrix.clone(),
            lu: a.lu(),
        })
    }

    /// Solve matrix × applied = desired and price the applied phases.
    pub fn solve(&self, desired_phases: &[f64], tuning: &TuningSpec) -> Result<TedSolution> {
        let n = self.matrix.n();
        if desired_phases.len() != n {
            return Err(Error::LengthMismatch(format!(
                "desired phases has length {}, bank has {n} MRs",
                desired_phases.len()
            )));
        }
        let b = DVector::from_column_slice(desired_phases);
        let x = self.lu.solve(&b).ok_or_else(|| {
            Error::NumericalConditioning("crosstalk system could not be solved".into())
        })?;
        let applied: Vec<f64> = x.iter().copied().collect();
        let achieved = self.matrix.apply(&applied);
        let residual = achieved
            .iter()
            .zip(desired_phases)
            .map(|(a, d)| (a - d).abs())
            .fold(0.0_f64, f64::max);
        if residual >= SOLVE_RESIDUAL_BOUND {
            return Err(Error::NumericalConditioning(format!(
                "solve residual {residual:.3e} exceeds {SOLVE_RESIDUAL_BOUND:.0e}"
            )));
        }
        let total_power_mw = phase_power_mw(&applied, tuning);
        Ok(TedSolution {
            applied_phases: applied,
            total_power_mw,
        })
    }
}

/// One-shot collective solve: applied phases reproduce the desired
/// phases through the crosstalk matrix, and the summed |phase| is
/// priced at the TO per-FSR rate.
pub fn ted_solve(
    matrix: &CrosstalkMatrix,
    desired_phases: &[f64],
    tuning: &TuningSpec,
) -> Result<TedSolution> {
    TedSolver::new(matrix)?.solve(desired_phases, tuning)
}

/// Per-device compensation loop: each ring holds its own target phase
/// and additionally cancels the disturbance leaking in from its
/// neighbors' heaters, so applied = desired + (K − I)·applied at the
/// fixed point. Diverges when crosstalk is too strong for independent
/// tuning.
pub fn naive_applied_phases(matrix: &CrosstalkMatrix, desired_phases: &[f64]) -> Result<Vec<f64>> {
    let n = matrix.n();
    if desired_phases.len() != n {
        return Err(Error::LengthMismatch(format!(
            "desired phases has length {}, bank has {n} MRs",
            desired_phases.len()
        )));
    }
    let mut applied = desired_phases.to_vec();
    for _ in 0..NAIVE_MAX_STEPS {
        let mut next = vec![0.0; n];
        let mut delta = 0.0_f64;
        for i in 0..n {
            let disturbance: f64 = (0..n)
                .filter(|&j| j != i)
                .map(|j| matrix.get(i, j) * applied[j])
                .sum();
            next[i] = desired_phases[i] + disturbance;
            if !next[i].is_finite() {
                return Err(Error::Divergence(
                    "per-device compensation overflowed (crosstalk too strong for naive tuning)"
                        .into(),
                ));
            }
            delta = delta.max((next[i] - applied[i]).abs());
        }
        applied = next;
        if delta < 1e-12 {
            return Ok(applied);
        }
    }
    Err(Error::Divergence(format!(
        "per-device compensation did not converge in {NAIVE_MAX_STEPS} steps \
         (crosstalk too strong for naive tuning)"
    )))
}

/// Tuning power needed without the collective solve.
pub fn naive_tuning_power(
    matrix: &CrosstalkMatrix,
    desired_phases: &[f64],
    tuning: &TuningSpec,
) -> Result<f64> {
    let applied = naive_applied_phases(matrix, desired_phases)?;
    Ok(phase_power_mw(&applied, tuning))
}

/// Evaluate both tuning strategies on the same bank.
pub fn naive_vs_ted_power(
    matrix: &CrosstalkMatrix,
    desired_phases: &[f64],
    tuning: &TuningSpec,
) -> Result<TuningPowerComparison> {
    let naive_power_mw = naive_tuning_power(matrix, desired_phases, tuning)?;
    let ted_power_mw = ted_solve(matrix, desired_phases, tuning)?.total_power_mw;
    Ok(TuningPowerComparison {
        naive_power_mw,
        ted_power_mw,
    })
}

fn inf_norm(m: &DMatrix<f64>) -> f64 {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)].abs()).sum())
        .fold(0.0_f64, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn default_tuning() -> TuningSpec {
        TuningSpec::default()
    }

    #[test]
    fn fpv_zero_sigma_gives_zero_drifts() {
        let spec = MRDeviceSpec {
            fpv_drift_sigma_nm: 0.0,
            ..Default::default()
        };
        let sample = sample_fpv_drift(3, &spec, 1).unwrap();
        assert_eq!(sample.drifts_nm, vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn fpv_empty_bank_is_rejected() {
        let spec = MRDeviceSpec::default();
        assert!(matches!(
            sample_fpv_drift(0, &spec, 1),
            Err(Error::EmptyBank(_))
        ));
    }

    #[test]
    fn fpv_is_deterministic_for_fixed_seed() {
        let spec = MRDeviceSpec::default();
        let a = sample_fpv_drift(64, &spec, 42).unwrap();
        let b = sample_fpv_drift(64, &spec, 42).unwrap();
        assert_eq!(a, b);
        let c = sample_fpv_drift(64, &spec, 43).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn fpv_sample_std_matches_sigma() {
        // Statistical check over a large sample: std within 10% of 2.1 nm.
        let spec = MRDeviceSpec {
            fpv_drift_sigma_nm: 2.1,
            ..Default::default()
        };
        let sample = sample_fpv_drift(1000, &spec, 42).unwrap();
        let mean = sample.drifts_nm.iter().sum::<f64>() / 1000.0;
        let var = sample
            .drifts_nm
            .iter()
            .map(|d| (d - mean).powi(2))
            .sum::<f64>()
            / 999.0;
        let std = var.sqrt();
        assert!(
            (std - 2.1).abs() < 0.21,
            "sample std {std} not within 10% of 2.1"
        );
    }

    #[test]
    fn tuning_cost_zero_drift_is_free_eo() {
        let cost = tuning_cost(0.0, &default_tuning(), 18.0).unwrap();
        assert_eq!(cost.power_mw, 0.0);
        assert_eq!(cost.latency_s, 20e-9);
        assert_eq!(cost.mechanism, TuningMechanism::EO);
    }

    #[test]
    fn tuning_cost_small_shift_uses_eo() {
        // 2.1 nm × 4 μW/nm = 8.4 μW = 0.0084 mW.
        let cost = tuning_cost(2.1, &default_tuning(), 18.0).unwrap();
        assert_eq!(cost.mechanism, TuningMechanism::EO);
        assert!((cost.power_mw - 0.0084).abs() < 1e-12);
        assert_eq!(cost.latency_s, 20e-9);
    }

    #[test]
    fn tuning_cost_large_shift_uses_to() {
        // (9 / 18) × 27.5 mW = 13.75 mW.
        let cost = tuning_cost(9.0, &default_tuning(), 18.0).unwrap();
        assert_eq!(cost.mechanism, TuningMechanism::TO);
        assert!((cost.power_mw - 13.75).abs() < 1e-12);
        assert_eq!(cost.latency_s, 4e-6);
    }

    #[test]
    fn tuning_cost_rejects_negative_shift() {
        assert!(matches!(
            tuning_cost(-0.1, &default_tuning(), 18.0),
            Err(Error::ContractViolation(_))
        ));
    }

    #[test]
    fn tuning_cost_switches_exactly_at_eo_range() {
        let spec = default_tuning();
        let at = tuning_cost(spec.eo_max_range_nm, &spec, 18.0).unwrap();
        let above = tuning_cost(spec.eo_max_range_nm + 1e-9, &spec, 18.0).unwrap();
        assert_eq!(at.mechanism, TuningMechanism::EO);
        assert_eq!(above.mechanism, TuningMechanism::TO);
    }

    #[test]
    fn crosstalk_ratio_boundary_and_decay_length() {
        let spec = ThermalCrosstalkSpec::default();
        assert_eq!(phase_crosstalk_ratio(0.0, &spec).unwrap(), spec.ratio_at_zero);
        let at_decay = phase_crosstalk_ratio(spec.decay_length_um, &spec).unwrap();
        assert!((at_decay - spec.ratio_at_zero * (-1.0_f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn crosstalk_ratio_hand_value() {
        // 0.4 × e⁻¹ at 5 μm with a 5 μm decay length.
        let spec = ThermalCrosstalkSpec {
            ratio_at_zero: 0.4,
            decay_length_um: 5.0,
            mr_pitch_um: 5.0,
        };
        let r = phase_crosstalk_ratio(5.0, &spec).unwrap();
        assert!((r - 0.1472).abs() < 1e-4);
    }

    #[test]
    fn crosstalk_ratio_is_strictly_decreasing() {
        let spec = ThermalCrosstalkSpec::default();
        let mut prev = phase_crosstalk_ratio(0.0, &spec).unwrap();
        for step in 1..100 {
            let r = phase_crosstalk_ratio(step as f64 * 0.5, &spec).unwrap();
            assert!(r < prev);
            prev = r;
        }
    }

    #[test]
    fn crosstalk_ratio_rejects_negative_distance() {
        assert!(matches!(
            phase_crosstalk_ratio(-1.0, &ThermalCrosstalkSpec::default()),
            Err(Error::ContractViolation(_))
        ));
    }

    #[test]
    fn matrix_single_mr_is_identity() {
        let m = build_crosstalk_matrix(1, &ThermalCrosstalkSpec::default()).unwrap();
        assert_eq!(m.n(), 1);
        assert_eq!(m.get(0, 0), 1.0);
    }

    #[test]
    fn matrix_three_mrs_has_expected_entries() {
        let spec = ThermalCrosstalkSpec::default();
        let r1 = phase_crosstalk_ratio(spec.mr_pitch_um, &spec).unwrap();
        let r2 = phase_crosstalk_ratio(2.0 * spec.mr_pitch_um, &spec).unwrap();
        let m = build_crosstalk_matrix(3, &spec).unwrap();
        for i in 0..3 {
            assert_eq!(m.get(i, i), 1.0);
        }
        assert_eq!(m.get(0, 1), r1);
        assert_eq!(m.get(1, 0), r1);
        assert_eq!(m.get(0, 2), r2);
        assert_eq!(m.get(2, 0), r2);
        assert!(r2 < r1);
    }

    #[test]
    fn matrix_zero_ratio_is_identity() {
        let spec = ThermalCrosstalkSpec {
            ratio_at_zero: 0.0,
            ..Default::default()
        };
        let m = build_crosstalk_matrix(4, &spec).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(m.get(i, j), if i == j { 1.0 } else { 0.0 });
            }
        }
    }

    #[test]
    fn matrix_is_symmetric_with_unit_diagonal() {
        let m = build_crosstalk_matrix(12, &ThermalCrosstalkSpec::default()).unwrap();
        for i in 0..12 {
            assert_eq!(m.get(i, i), 1.0);
            for j in 0..12 {
                assert_eq!(m.get(i, j), m.get(j, i));
                if i != j {
                    assert!(m.get(i, j) >= 0.0 && m.get(i, j) < 1.0);
                }
            }
        }
    }

    #[test]
    fn ted_identity_matrix_returns_desired() {
        let spec = ThermalCrosstalkSpec {
            ratio_at_zero: 0.0,
            ..Default::default()
        };
        let m = build_crosstalk_matrix(2, &spec).unwrap();
        let sol = ted_solve(&m, &[0.5, 0.3], &default_tuning()).unwrap();
        assert!((sol.applied_phases[0] - 0.5).abs() < 1e-15);
        assert!((sol.applied_phases[1] - 0.3).abs() < 1e-15);
    }

    #[test]
    fn ted_zero_phases_cost_nothing() {
        let m = build_crosstalk_matrix(5, &ThermalCrosstalkSpec::default()).unwrap();
        let sol = ted_solve(&m, &[0.0; 5], &default_tuning()).unwrap();
        assert!(sol.applied_phases.iter().all(|p| p.abs() < 1e-15));
        assert_eq!(sol.total_power_mw, 0.0);
    }

    #[test]
    fn ted_residual_is_small_on_random_bank() {
        // Residual checked with an independent dense matrix-vector multiply.
        let m = build_crosstalk_matrix(10, &ThermalCrosstalkSpec::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let desired: Vec<f64> = (0..10)
            .map(|_| rand::Rng::random_range(&mut rng, 0.0..std::f64::consts::PI))
            .collect();
        let sol = ted_solve(&m, &desired, &default_tuning()).unwrap();
        let mut achieved = [0.0; 10];
        for i in 0..10 {
            for j in 0..10 {
                achieved[i] += m.get(i, j) * sol.applied_phases[j];
            }
        }
        for (a, d) in achieved.iter().zip(&desired) {
            assert!((a - d).abs() < 1e-9);
        }
    }

    #[test]
    fn naive_equals_ted_without_crosstalk() {
        let spec = ThermalCrosstalkSpec {
            ratio_at_zero: 0.0,
            ..Default::default()
        };
        let m = build_crosstalk_matrix(4, &spec).unwrap();
        let cmp = naive_vs_ted_power(&m, &[0.4, 0.2, 0.9, 0.1], &default_tuning()).unwrap();
        assert!((cmp.naive_power_mw - cmp.ted_power_mw).abs() < 1e-12);
    }

    #[test]
    fn ted_beats_naive_on_uniform_bank() {
        let m = build_crosstalk_matrix(10, &ThermalCrosstalkSpec::default()).unwrap();
        let desired = vec![std::f64::consts::FRAC_PI_4; 10];
        let cmp = naive_vs_ted_power(&m, &desired, &default_tuning()).unwrap();
        assert!(
            cmp.ted_power_mw < cmp.naive_power_mw,
            "ted {} !< naive {}",
            cmp.ted_power_mw,
            cmp.naive_power_mw
        );
    }

    #[test]
    fn near_singular_matrix_is_rejected() {
        // ratio_at_zero = 1 with a huge decay length makes every entry
        // ~1, so the bank system is numerically unsolvable.
        let spec = ThermalCrosstalkSpec {
            ratio_at_zero: 1.0,
            decay_length_um: 1e12,
            mr_pitch_um: 5.0,
        };
        let m = build_crosstalk_matrix(6, &spec).unwrap();
        assert!(matches!(
            ted_solve(&m, &[0.1; 6], &default_tuning()),
            Err(Error::NumericalConditioning(_))
        ));
    }

    #[test]
    fn naive_diverges_when_crosstalk_dominates() {
        let spec = ThermalCrosstalkSpec {
            ratio_at_zero: 0.9,
            decay_length_um: 50.0,
            mr_pitch_um: 1.0,
        };
        let m = build_crosstalk_matrix(10, &spec).unwrap();
        let desired = vec![0.5; 10];
        assert!(matches!(
            naive_tuning_power(&m, &desired, &default_tuning()),
            Err(Error::Divergence(_))
        ));
    }

    #[test]
    fn tuning_spec_rejects_slow_eo() {
        let spec = TuningSpec {
            eo_latency_s: 1e-5,
            ..Default::default()
        };
        assert!(spec.validate().is_err());
    }
}
