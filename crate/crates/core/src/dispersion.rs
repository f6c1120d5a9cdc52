//! Refractive indices, wavevectors, group indices and quasi-phase-matching
//! mismatch for the pump/signal/idler polarizations of the nonlinear crystal.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::constants::{omega_of_wavelength, wavelength_of_omega, SPEED_OF_LIGHT, TWO_PI};
use crate::error::{Error, Result};

/// Interacting field of the down-conversion process.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Channel {
    Pump,
    Signal,
    Idler,
}

/// Sellmeier expansion of n²(λ) with λ in micrometers:
///
/// n²(λ) = a + Σ b/(λ² − c)  + Σ b λ²/(λ² − c)  + d λ²
///
/// This covers the common published forms for nonlinear crystals; both the
/// value and dn/dλ are evaluated analytically.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct Sellmeier {
    pub constant: f64,
    /// Terms b/(λ² − c), given as [b, c].
    #[serde(default)]
    pub pole_terms: Vec<[f64; 2]>,
    /// Terms b·λ²/(λ² − c), given as [b, c].
    #[serde(default)]
    pub lambda2_pole_terms: Vec<[f64; 2]>,
    /// Coefficient d of the d·λ² term (signed).
    #[serde(default)]
    pub lambda2_coeff: f64,
}

impl Sellmeier {
    pub fn constant_index(n: f64) -> Self {
        Sellmeier {
            constant: n * n,
            pole_terms: Vec::new(),
            lambda2_pole_terms: Vec::new(),
            lambda2_coeff: 0.0,
        }
    }

    /// n²(λ), λ in µm.
    fn n_squared(&self, lam_um: f64) -> f64 {
        let l2 = lam_um * lam_um;
        let mut v = self.constant + self.lambda2_coeff * l2;
        for [b, c] in &self.pole_terms {
            v += b / (l2 - c);
        }
        for [b, c] in &self.lambda2_pole_terms {
            v += b * l2 / (l2 - c);
        }
        v
    }

    /// d(n²)/dλ, λ in µm.
    fn dn_squared_dlam(&self, lam_um: f64) -> f64 {
        let l2 = lam_um * lam_um;
        let mut v = 2.0 * self.lambda2_coeff * lam_um;
        for [b, _c] in &self.pole_terms {
            let den = l2 - _c;
            v += -2.0 * lam_um * b / (den * den);
        }
        for [b, c] in &self.lambda2_pole_terms {
            let den = l2 - c;
            v += -2.0 * lam_um * b * c / (den * den);
        }
        v
    }

    fn index(&self, lam_um: f64) -> f64 {
        self.n_squared(lam_um).sqrt()
    }

    /// Group index n_g = n − λ dn/dλ, analytic.
    fn group_index(&self, lam_um: f64) -> f64 {
        let n = self.index(lam_um);
        let dn = self.dn_squared_dlam(lam_um) / (2.0 * n);
        n - lam_um * dn
    }
}

/// One crystal axis: Sellmeier set plus an optional thermo-optic correction
/// dn/dT = (a₃/λ³ + a₂/λ² + a₁/λ + a₀)·10⁻⁵ per °C with λ in µm.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct AxisDispersion {
    pub sellmeier: Sellmeier,
    #[serde(default)]
    pub thermo_optic: Option<[f64; 4]>,
}

/// Named dispersion data set with per-axis Sellmeier coefficients.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct DispersionModel {
    /// Set from the config section key when loaded from a file.
    #[serde(default)]
    pub name: String,
    /// Literature reference for the coefficient set (free text).
    pub source: String,
    /// Wavelength validity window in meters.
    pub valid_range_m: [f64; 2],
    /// Reference temperature (°C) of the coefficients.
    #[serde(default = "default_temp_ref")]
    pub reference_temperature_c: f64,
    pub axes: BTreeMap<String, AxisDispersion>,
}

fn default_temp_ref() -> f64 {
    20.0
}

impl DispersionModel {
    /// Refractive index n(λ, T) on `axis`. `temperature_c = None` evaluates
    /// the coefficients as published (temperature correction off).
    pub fn index(&self, axis: &str, lambda_m: f64, temperature_c: Option<f64>) -> Result<f64> {
        let ax = self.axis(axis)?;
        self.check_range(axis, lambda_m)?;
        let lam_um = lambda_m * 1e6;
        let mut n = ax.sellmeier.index(lam_um);
        if let (Some(tc), Some(coeffs)) = (temperature_c, ax.thermo_optic.as_ref()) {
            n += thermo_optic_dn(coeffs, lam_um) * (tc - self.reference_temperature_c);
        }
        Ok(n)
    }

    /// Group index n_g(λ) = n − λ dn/dλ, analytic in the Sellmeier form.
    pub fn group_index(&self, axis: &str, lambda_m: f64, temperature_c: Option<f64>) -> Result<f64> {
        let ax = self.axis(axis)?;
        self.check_range(axis, lambda_m)?;
        let lam_um = lambda_m * 1e6;
        let mut ng = ax.sellmeier.group_index(lam_um);
        if let (Some(tc), Some(coeffs)) = (temperature_c, ax.thermo_optic.as_ref()) {
            // d(Δn)/dλ of the correction, analytic as well
            let dt = tc - self.reference_temperature_c;
            ng += dt * (thermo_optic_dn(coeffs, lam_um) - lam_um * thermo_optic_ddn(coeffs, lam_um));
        }
        Ok(ng)
    }

    fn axis(&self, axis: &str) -> Result<&AxisDispersion> {
        self.axes
            .get(axis)
            .ok_or_else(|| Error::UnknownAxis(axis.to_string()))
    }

    fn check_range(&self, axis: &str, lambda_m: f64) -> Result<()> {
        let [lo, hi] = self.valid_range_m;
        if !(lambda_m.is_finite() && lambda_m >= lo && lambda_m <= hi) {
            return Err(Error::WavelengthOutOfRange {
                model: self.name.clone(),
                axis: axis.to_string(),
                lambda_m,
                min_m: lo,
                max_m: hi,
            });
        }
        Ok(())
    }

    /// Dispersionless single-axis stub for tests: n ≡ `n` on axis "iso".
    pub fn constant(n: f64) -> Self {
        let mut axes = BTreeMap::new();
        axes.insert(
            "iso".to_string(),
            AxisDispersion {
                sellmeier: Sellmeier::constant_index(n),
                thermo_optic: None,
            },
        );
        DispersionModel {
            name: format!("constant_{n}"),
            source: "dispersionless stub".to_string(),
            valid_range_m: [1e-9, 1.0],
            reference_temperature_c: 20.0,
            axes,
        }
    }

    /// KTP, Fan et al., Appl. Opt. 26, 2390 (1987); y and z axes.
    ///
    /// Published fit range 0.404–1.064 µm; the declared range below extends
    /// it where the polynomial stays smooth so that wide spectral grids can
    /// evaluate low-weight corner points. Extrapolation outside the fit
    /// range is noted in `source`.
    pub fn ktp_fan_1987() -> Self {
        let mut axes = BTreeMap::new();
        axes.insert(
            "y".into(),
            AxisDispersion {
                sellmeier: Sellmeier {
                    constant: 2.1518,
                    pole_terms: vec![],
                    lambda2_pole_terms: vec![[0.87862, 0.047528]],
                    lambda2_coeff: -0.01327,
                },
                thermo_optic: None,
            },
        );
        axes.insert(
            "z".into(),
            AxisDispersion {
                sellmeier: Sellmeier {
                    constant: 2.3136,
                    pole_terms: vec![],
                    lambda2_pole_terms: vec![[1.00012, 0.056792]],
                    lambda2_coeff: -0.01679,
                },
                thermo_optic: None,
            },
        );
        DispersionModel {
            name: "ktp_fan_1987".into(),
            source: "Fan et al., Appl. Opt. 26, 2390 (1987), KTP y/z; fit 0.404-1.064 um, extrapolated outside".into(),
            valid_range_m: [0.35e-6, 4.0e-6],
            reference_temperature_c: 20.0,
            axes,
        }
    }

    /// KTP, Kato & Takaoka, Appl. Opt. 41, 5040 (2002); x, y and z axes.
    pub fn ktp_kato_takaoka_2002() -> Self {
        let mut axes = BTreeMap::new();
        axes.insert(
            "x".into(),
            AxisDispersion {
                sellmeier: Sellmeier {
                    constant: 3.29100,
                    pole_terms: vec![[0.04140, 0.03978], [9.35522, 31.45571]],
                    lambda2_pole_terms: vec![],
                    lambda2_coeff: 0.0,
                },
                thermo_optic: None,
            },
        );
        axes.insert(
            "y".into(),
            AxisDispersion {
                sellmeier: Sellmeier {
                    constant: 3.45018,
                    pole_terms: vec![[0.04341, 0.04597], [16.98825, 39.43799]],
                    lambda2_pole_terms: vec![],
                    lambda2_coeff: 0.0,
                },
                thermo_optic: None,
            },
        );
        axes.insert(
            "z".into(),
            AxisDispersion {
                sellmeier: Sellmeier {
                    constant: 4.59423,
                    pole_terms: vec![[0.06206, 0.04763], [110.80672, 86.12171]],
                    lambda2_pole_terms: vec![],
                    lambda2_coeff: 0.0,
                },
                thermo_optic: None,
            },
        );
        DispersionModel {
            name: "ktp_kato_takaoka_2002".into(),
            source: "Kato & Takaoka, Appl. Opt. 41, 5040 (2002), KTP x/y/z; fit 0.43-3.54 um, extrapolated outside".into(),
            valid_range_m: [0.35e-6, 4.0e-6],
            reference_temperature_c: 20.0,
            axes,
        }
    }
}

fn thermo_optic_dn(coeffs: &[f64; 4], lam_um: f64) -> f64 {
    let [a3, a2, a1, a0] = *coeffs;
    (a3 / lam_um.powi(3) + a2 / lam_um.powi(2) + a1 / lam_um + a0) * 1e-5
}

fn thermo_optic_ddn(coeffs: &[f64; 4], lam_um: f64) -> f64 {
    let [a3, a2, a1, _a0] = *coeffs;
    (-3.0 * a3 / lam_um.powi(4) - 2.0 * a2 / lam_um.powi(3) - a1 / lam_um.powi(2)) * 1e-5
}

/// Geometry and nonlinearity of the poled crystal, with the polarization to
/// crystal-axis mapping for the three interacting fields.
#[derive(Debug, Clone)]
pub struct CrystalSpec {
    /// Crystal length along the pump (m).
    pub length_m: f64,
    /// Poling period Λ (m); grating vector K = 2π/Λ.
    pub poling_period_m: f64,
    /// Quasi-phase-matching order m ≥ 1.
    pub qpm_order: u32,
    /// Effective nonlinearity χ⁽²⁾_eff (m/V).
    pub chi2_eff: f64,
    /// Efficiency factor ε ∈ (0, 1] of the overlap prefactor.
    pub efficiency_factor: f64,
    pub pump_axis: String,
    pub signal_axis: String,
    pub idler_axis: String,
    pub dispersion: Arc<DispersionModel>,
    /// Crystal temperature (°C); `None` evaluates coefficients as published.
    pub temperature_c: Option<f64>,
}

/// Material mismatch and quasi-phase-matched phase of Eq.-style
/// Φ = (Δk − m·2π/Λ)·L.
#[derive(Debug, Clone, Copy)]
pub struct PhaseMismatch {
    /// Δk = k_p − k_s − k_i (rad/m), without the grating contribution.
    pub delta_k: f64,
    /// Dimensionless phase across the crystal, grating compensated.
    pub phi: f64,
}

impl CrystalSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.length_m > 0.0) {
            return Err(Error::InvalidParameter("crystal length must be > 0".into()));
        }
        if !(self.poling_period_m > 0.0) {
            return Err(Error::InvalidParameter("poling period must be > 0".into()));
        }
        if self.qpm_order < 1 {
            return Err(Error::InvalidParameter("QPM order must be >= 1".into()));
        }
        if !(self.efficiency_factor > 0.0 && self.efficiency_factor <= 1.0) {
            return Err(Error::InvalidParameter(
                "efficiency factor must lie in (0, 1]".into(),
            ));
        }
        for ax in [&self.pump_axis, &self.signal_axis, &self.idler_axis] {
            if !self.dispersion.axes.contains_key(ax) {
                return Err(Error::UnknownAxis(ax.clone()));
            }
        }
        Ok(())
    }

    pub fn axis_of(&self, ch: Channel) -> &str {
        match ch {
            Channel::Pump => &self.pump_axis,
            Channel::Signal => &self.signal_axis,
            Channel::Idler => &self.idler_axis,
        }
    }

    /// n(λ) for a channel.
    pub fn refractive_index(&self, ch: Channel, lambda_m: f64) -> Result<f64> {
        self.dispersion
            .index(self.axis_of(ch), lambda_m, self.temperature_c)
    }

    /// k = n(λ)·ω/c with λ = 2πc/ω.
    pub fn wavevector(&self, ch: Channel, omega: f64) -> Result<f64> {
        if !(omega > 0.0) {
            return Err(Error::InvalidParameter(
                "wavevector requires omega > 0".into(),
            ));
        }
        let lam = wavelength_of_omega(omega);
        Ok(self.refractive_index(ch, lam)? * omega / SPEED_OF_LIGHT)
    }

    /// Group index n' = c ∂k/∂ω, analytic. Requires stencil room at the
    /// range edge so that the finite-difference cross-check is always
    /// evaluable on the same inputs.
    pub fn group_index(&self, ch: Channel, omega: f64) -> Result<f64> {
        self.require_stencil_room(ch, omega)?;
        self.dispersion
            .group_index(self.axis_of(ch), wavelength_of_omega(omega), self.temperature_c)
    }

    /// Group index by 5-point central difference of k(ω), step h = 10⁻³·ω.
    /// Kept as the independent route for dispersion sets without an analytic
    /// derivative and as the test oracle for `group_index`.
    pub fn group_index_central_diff(&self, ch: Channel, omega: f64) -> Result<f64> {
        self.require_stencil_room(ch, omega)?;
        let h = 1e-3 * omega;
        let k = |w: f64| self.wavevector(ch, w);
        let dkdw =
            (-k(omega + 2.0 * h)? + 8.0 * k(omega + h)? - 8.0 * k(omega - h)? + k(omega - 2.0 * h)?)
                / (12.0 * h);
        Ok(SPEED_OF_LIGHT * dkdw)
    }

    fn require_stencil_room(&self, _ch: Channel, omega: f64) -> Result<()> {
        if !(omega > 0.0) {
            return Err(Error::InvalidParameter("omega must be > 0".into()));
        }
        let h = 1e-3 * omega;
        for w in [omega - 2.0 * h, omega + 2.0 * h] {
            let lam = wavelength_of_omega(w);
            let [lo, hi] = self.dispersion.valid_range_m;
            if !(lam >= lo && lam <= hi) {
                return Err(Error::EdgeProximity { omega });
            }
        }
        Ok(())
    }

    /// Material mismatch Δk = k_p(ω_s+ω_i) − k_s(ω_s) − k_i(ω_i) and the
    /// dimensionless phase Φ = (Δk − m·2π/Λ)·L.
    ///
    /// The grating vector is oriented to compensate the material mismatch
    /// (for this family of crystals Δk > 0), so Φ vanishes on the
    /// quasi-phase-matching locus Δk = mK.
    pub fn phase_mismatch(&self, omega_s: f64, omega_i: f64) -> Result<PhaseMismatch> {
        let delta_k = self.delta_k(omega_s, omega_i)?;
        let grating = self.qpm_order as f64 * TWO_PI / self.poling_period_m;
        Ok(PhaseMismatch {
            delta_k,
            phi: (delta_k - grating) * self.length_m,
        })
    }

    /// Δk without the grating term.
    pub fn delta_k(&self, omega_s: f64, omega_i: f64) -> Result<f64> {
        let kp = self.wavevector(Channel::Pump, omega_s + omega_i)?;
        let ks = self.wavevector(Channel::Signal, omega_s)?;
        let ki = self.wavevector(Channel::Idler, omega_i)?;
        Ok(kp - ks - ki)
    }

    /// Signal frequency solving Δk(ω_s, ω_p − ω_s) = m·2π/Λ on the pump line
    /// ω_p = const, by bisection inside `[omega_s_lo, omega_s_hi]`.
    pub fn matched_signal_frequency(
        &self,
        omega_p: f64,
        omega_s_lo: f64,
        omega_s_hi: f64,
    ) -> Result<f64> {
        let grating = self.qpm_order as f64 * TWO_PI / self.poling_period_m;
        let f = |ws: f64| -> Result<f64> { Ok(self.delta_k(ws, omega_p - ws)? - grating) };
        let (mut a, mut b) = (omega_s_lo, omega_s_hi);
        let (mut fa, fb) = (f(a)?, f(b)?);
        if fa * fb > 0.0 {
            return Err(Error::NoRoot {
                what: "delta_k - m*2pi/Lambda".into(),
                lo: a,
                hi: b,
            });
        }
        for _ in 0..200 {
            let mid = 0.5 * (a + b);
            let fm = f(mid)?;
            if fm == 0.0 || (b - a).abs() < 1e-3 {
                return Ok(mid);
            }
            if fa * fm < 0.0 {
                b = mid;
            } else {
                a = mid;
                fa = fm;
            }
        }
        Ok(0.5 * (a + b))
    }

    /// Matched (λ_s, λ_i) on the pump line through `omega_p`, searching
    /// signal wavelengths in [λ_lo, λ_hi].
    pub fn matched_wavelengths(
        &self,
        omega_p: f64,
        lambda_s_lo: f64,
        lambda_s_hi: f64,
    ) -> Result<(f64, f64)> {
        let ws = self.matched_signal_frequency(
            omega_p,
            omega_of_wavelength(lambda_s_hi),
            omega_of_wavelength(lambda_s_lo),
        )?;
        Ok((wavelength_of_omega(ws), wavelength_of_omega(omega_p - ws)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::omega_of_wavelength;

    fn paper_crystal(model: DispersionModel) -> CrystalSpec {
        CrystalSpec {
            length_m: 2.0e-3,
            poling_period_m: 29.4e-6,
            qpm_order: 1,
            chi2_eff: 2.0e-12,
            efficiency_factor: 1.0,
            pump_axis: "y".into(),
            signal_axis: "z".into(),
            idler_axis: "y".into(),
            dispersion: Arc::new(model),
            temperature_c: None,
        }
    }

    fn iso_crystal(n: f64) -> CrystalSpec {
        CrystalSpec {
            length_m: 2.0e-3,
            poling_period_m: 29.4e-6,
            qpm_order: 1,
            chi2_eff: 2.0e-12,
            efficiency_factor: 1.0,
            pump_axis: "iso".into(),
            signal_axis: "iso".into(),
            idler_axis: "iso".into(),
            dispersion: Arc::new(DispersionModel::constant(n)),
            temperature_c: None,
        }
    }

    #[test]
    fn constant_model_returns_its_index() {
        let spec = iso_crystal(1.8);
        for lam in [300e-9, 925e-9, 2e-6] {
            assert_eq!(spec.refractive_index(Channel::Signal, lam).unwrap(), 1.8);
        }
    }

    #[test]
    fn ktp_z_axis_at_925_matches_independent_evaluation() {
        // Independent evaluation of the published polynomial:
        // n_z² = 2.3136 + 1.00012 λ²/(λ² − 0.056792) − 0.01679 λ², λ = 0.925 µm.
        let l2: f64 = 0.925 * 0.925;
        let expected = (2.3136 + 1.00012 * l2 / (l2 - 0.056792) - 0.01679 * l2).sqrt();
        let spec = paper_crystal(DispersionModel::ktp_fan_1987());
        let got = spec.refractive_index(Channel::Signal, 925e-9).unwrap();
        assert!((got - expected).abs() < 1e-12);
        assert!((got - 1.8359).abs() < 1e-3, "n_z(925nm) = {got}");
    }

    #[test]
    fn kato_takaoka_reproduces_published_1064_values() {
        let m = DispersionModel::ktp_kato_takaoka_2002();
        let ny = m.index("y", 1.064e-6, None).unwrap();
        let nz = m.index("z", 1.064e-6, None).unwrap();
        assert!((ny - 1.7455).abs() < 1e-3, "n_y(1064) = {ny}");
        assert!((nz - 1.8297).abs() < 1e-3, "n_z(1064) = {nz}");
    }

    #[test]
    fn out_of_range_wavelength_is_a_domain_error() {
        let spec = paper_crystal(DispersionModel::ktp_fan_1987());
        let err = spec.refractive_index(Channel::Pump, 0.2e-6).unwrap_err();
        match err {
            Error::WavelengthOutOfRange { min_m, .. } => assert_eq!(min_m, 0.35e-6),
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn vacuum_like_wavevector() {
        let spec = iso_crystal(1.0);
        let k = spec
            .wavevector(Channel::Signal, omega_of_wavelength(1e-6))
            .unwrap();
        assert!((k - TWO_PI * 1e6).abs() / k < 1e-14);
    }

    #[test]
    fn wavevector_monotone_in_omega_for_normal_dispersion() {
        let spec = paper_crystal(DispersionModel::ktp_fan_1987());
        let mut prev = 0.0;
        for i in 0..20 {
            let lam = 1000e-9 - i as f64 * 10e-9;
            let k = spec
                .wavevector(Channel::Signal, omega_of_wavelength(lam))
                .unwrap();
            assert!(k > prev);
            prev = k;
        }
    }

    #[test]
    fn ktp_wavevector_at_465_matches_recomputation() {
        let spec = paper_crystal(DispersionModel::ktp_fan_1987());
        let omega = omega_of_wavelength(465e-9);
        let n = spec.refractive_index(Channel::Pump, 465e-9).unwrap();
        let k = spec.wavevector(Channel::Pump, omega).unwrap();
        assert!((k - n * omega / SPEED_OF_LIGHT).abs() / k < 1e-15);
    }

    #[test]
    fn constant_model_group_index_equals_index() {
        let spec = iso_crystal(1.8);
        let ng = spec
            .group_index(Channel::Signal, omega_of_wavelength(925e-9))
            .unwrap();
        assert!((ng - 1.8).abs() < 1e-13);
    }

    #[test]
    fn central_difference_matches_analytic_derivative_of_synthetic_model() {
        // Quadratic-ish synthetic model: one lambda2 term gives curvature.
        let mut axes = BTreeMap::new();
        axes.insert(
            "iso".into(),
            AxisDispersion {
                sellmeier: Sellmeier {
                    constant: 2.5,
                    pole_terms: vec![],
                    lambda2_pole_terms: vec![],
                    lambda2_coeff: 0.08,
                },
                thermo_optic: None,
            },
        );
        let model = DispersionModel {
            name: "synthetic".into(),
            source: "test".into(),
            valid_range_m: [0.2e-6, 3e-6],
            reference_temperature_c: 20.0,
            axes,
        };
        let spec = CrystalSpec {
            dispersion: Arc::new(model),
            pump_axis: "iso".into(),
            signal_axis: "iso".into(),
            idler_axis: "iso".into(),
            ..paper_crystal(DispersionModel::constant(1.0))
        };
        let w = omega_of_wavelength(900e-9);
        let a = spec.group_index(Channel::Signal, w).unwrap();
        let b = spec.group_index_central_diff(Channel::Signal, w).unwrap();
        assert!(((a - b) / a).abs() < 1e-6, "analytic {a} vs fd {b}");
    }

    #[test]
    fn finite_difference_group_index_agrees_over_valid_range() {
        // 20-point sample, 1e-5 relative agreement.
        let spec = paper_crystal(DispersionModel::ktp_fan_1987());
        for i in 0..20 {
            let lam = 450e-9 + i as f64 * (1000e-9 - 450e-9) / 19.0;
            let w = omega_of_wavelength(lam);
            for ch in [Channel::Pump, Channel::Signal, Channel::Idler] {
                let a = spec.group_index(ch, w).unwrap();
                let b = spec.group_index_central_diff(ch, w).unwrap();
                assert!(((a - b) / a).abs() < 1e-5, "lam {lam} {a} vs {b}");
            }
        }
    }

    #[test]
    fn type_ii_group_indices_differ() {
        let spec = paper_crystal(DispersionModel::ktp_fan_1987());
        let ns = spec
            .group_index(Channel::Signal, omega_of_wavelength(925e-9))
            .unwrap();
        let ni = spec
            .group_index(Channel::Idler, omega_of_wavelength(935e-9))
            .unwrap();
        assert!((ns - ni).abs() > 0.01, "|n'_s - n'_i| = {}", (ns - ni).abs());
    }

    #[test]
    fn group_index_near_range_edge_errors() {
        let spec = paper_crystal(DispersionModel::ktp_fan_1987());
        let w = omega_of_wavelength(0.3501e-6);
        assert!(matches!(
            spec.group_index(Channel::Signal, w),
            Err(Error::EdgeProximity { .. })
        ));
    }

    #[test]
    fn phi_minimum_near_paper_wavelengths() {
        // |Φ| should vanish on a locus passing close to (925, 935) nm.
        let spec = paper_crystal(DispersionModel::ktp_fan_1987());
        let omega_p = omega_of_wavelength(925e-9) + omega_of_wavelength(935e-9);
        let (ls, li) = spec.matched_wavelengths(omega_p, 900e-9, 960e-9).unwrap();
        let dist = ((ls - 925e-9).powi(2) + (li - 935e-9).powi(2)).sqrt();
        assert!(
            dist < 8e-9,
            "matched point ({:.2}, {:.2}) nm too far from (925, 935)",
            ls * 1e9,
            li * 1e9
        );
        let pm = spec
            .phase_mismatch(omega_of_wavelength(ls), omega_of_wavelength(li))
            .unwrap();
        assert!(pm.phi.abs() < 1e-2, "phi at matched point {}", pm.phi);
    }

    #[test]
    fn phi_linear_in_length_and_grating() {
        let spec = paper_crystal(DispersionModel::ktp_fan_1987());
        let (ws, wi) = (omega_of_wavelength(925e-9), omega_of_wavelength(935e-9));
        let base = spec.phase_mismatch(ws, wi).unwrap();
        let mut doubled = spec.clone();
        doubled.length_m *= 2.0;
        let d = doubled.phase_mismatch(ws, wi).unwrap();
        assert_eq!(d.phi, 2.0 * base.phi);
        // linear in m·2π/Λ at fixed frequencies
        let mut order2 = spec.clone();
        order2.qpm_order = 2;
        let o2 = order2.phase_mismatch(ws, wi).unwrap();
        let k_gr = TWO_PI / spec.poling_period_m;
        let expect = base.phi - k_gr * spec.length_m;
        assert!((o2.phi - expect).abs() < 1e-9 * expect.abs().max(1.0));
    }

    #[test]
    fn phi_matches_term_by_term_recomputation() {
        let spec = paper_crystal(DispersionModel::ktp_fan_1987());
        for (ls, li) in [(910e-9, 950e-9), (925e-9, 935e-9), (940e-9, 920e-9)] {
            let (ws, wi) = (omega_of_wavelength(ls), omega_of_wavelength(li));
            let pm = spec.phase_mismatch(ws, wi).unwrap();
            let kp = spec.wavevector(Channel::Pump, ws + wi).unwrap();
            let ks = spec.wavevector(Channel::Signal, ws).unwrap();
            let ki = spec.wavevector(Channel::Idler, wi).unwrap();
            let dk = kp - ks - ki;
            assert!((pm.delta_k - dk).abs() < 1e-9 * dk.abs());
            let phi = (dk - TWO_PI / spec.poling_period_m) * spec.length_m;
            assert!((pm.phi - phi).abs() < 1e-12 * phi.abs().max(1.0));
        }
    }

    #[test]
    fn swapping_channels_with_their_axes_leaves_delta_k_unchanged() {
        let spec = paper_crystal(DispersionModel::ktp_fan_1987());
        let mut swapped = spec.clone();
        std::mem::swap(&mut swapped.signal_axis, &mut swapped.idler_axis);
        let (ws, wi) = (omega_of_wavelength(921e-9), omega_of_wavelength(939e-9));
        let a = spec.phase_mismatch(ws, wi).unwrap();
        let b = swapped.phase_mismatch(wi, ws).unwrap();
        assert_eq!(a.delta_k, b.delta_k);
    }

    #[test]
    fn validation_rejects_bad_specs() {
        let mut spec = paper_crystal(DispersionModel::ktp_fan_1987());
        assert!(spec.validate().is_ok());
        spec.signal_axis = "w".into();
        assert!(spec.validate().is_err());
        let mut spec2 = paper_crystal(DispersionModel::ktp_fan_1987());
        spec2.length_m = 0.0;
        assert!(spec2.validate().is_err());
        let mut spec3 = paper_crystal(DispersionModel::ktp_fan_1987());
        spec3.efficiency_factor = 0.0;
        assert!(spec3.validate().is_err());
    }
}
