//! Closed-form pair/single collection probabilities and heralding
//! efficiencies, plus wavelength and focal-parameter sweeps.
//!
//! The closed forms hold under the C ≈ 0, constant-parameter reduction of
//! the overlap integral; their agreement with brute-force integration of
//! the discretized JSA is part of the acceptance suite. All collection
//! probabilities carry the pump-bandwidth factor σ_p·√(2π) from integrating
//! the unit-peak pump envelope, so that the closed forms and the grid
//! integrals of |ψ|² agree in the same normalization. Absolute scale is set
//! by N_p and is not calibrated radiometrically.

use rayon::prelude::*;

use crate::constants::{wavelength_of_omega, HBAR, SPEED_OF_LIGHT, VACUUM_PERMITTIVITY};
use crate::dispersion::{Channel, CrystalSpec};
use crate::error::{Error, Result};
use crate::grid::FrequencyGrid;
use crate::jsa::{compute_jsa, dimensionless_params, BeamGeometry, PumpSpec};

/// Heralding efficiencies at one evaluation point with the inputs echoed.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct HeraldingPoint {
    pub lambda_s_m: f64,
    pub lambda_i_m: f64,
    pub xi_p: f64,
    pub xi_s: f64,
    pub xi_i: f64,
    pub eta_s: f64,
    pub eta_i: f64,
    pub eta_c: f64,
}

/// Reduced (prefactor-free) arctan terms of the three collection
/// probabilities; every efficiency is a ratio of these.
struct ReducedTerms {
    pair: f64,
    single_s: f64,
    single_i: f64,
    xi_p: f64,
    xi_s: f64,
    xi_i: f64,
}

fn reduced_terms(
    spec: &CrystalSpec,
    geometry: &BeamGeometry,
    omega_s: f64,
    omega_i: f64,
) -> Result<ReducedTerms> {
    let p = dimensionless_params(spec, geometry, omega_s, omega_i)?;
    let kp = spec.wavevector(Channel::Pump, omega_s + omega_i)?;
    let ks = spec.wavevector(Channel::Signal, omega_s)?;
    let ki = spec.wavevector(Channel::Idler, omega_i)?;
    let dk = p.delta_k;

    let a_s = 2.0 * ((1.0 + (ks / kp) * (p.xi_s / p.xi_p)) * (ki / kp)).sqrt();
    let b_s = 2.0
        * (1.0 - dk / kp)
        * ((1.0 + (ks + dk) / (kp - dk) * (p.xi_p / p.xi_s)) * ((ki + dk) / (kp - dk))).sqrt();
    let a_i = 2.0 * ((1.0 + (ki / kp) * (p.xi_i / p.xi_p)) * (ks / kp)).sqrt();
    let b_i = 2.0
        * (1.0 - dk / kp)
        * ((1.0 + (ki + dk) / (kp - dk) * (p.xi_p / p.xi_i)) * ((ks + dk) / (kp - dk))).sqrt();

    Ok(ReducedTerms {
        pair: p.xi.atan() / (p.a_plus * p.b_plus),
        single_s: (b_s / a_s * p.xi_s).atan() / (a_s * b_s),
        single_i: (b_i / a_i * p.xi_i).atan() / (a_i * b_i),
        xi_p: p.xi_p,
        xi_s: p.xi_s,
        xi_i: p.xi_i,
    })
}

/// Common dimensionful prefactor of the collection probabilities:
/// 64π³·ħcε·n_s n_i/(ε₀ n_p |n'_s − n'_i|)·(χ/λ_sλ_i)²·N_p·σ_p√(2π).
fn collection_prefactor(
    spec: &CrystalSpec,
    pump: &PumpSpec,
    omega_s: f64,
    omega_i: f64,
) -> Result<f64> {
    let lam_s = wavelength_of_omega(omega_s);
    let lam_i = wavelength_of_omega(omega_i);
    let n_s = spec.refractive_index(Channel::Signal, lam_s)?;
    let n_i = spec.refractive_index(Channel::Idler, lam_i)?;
    let n_p = spec.refractive_index(Channel::Pump, wavelength_of_omega(omega_s + omega_i))?;
    let ng_s = spec.group_index(Channel::Signal, omega_s)?;
    let ng_i = spec.group_index(Channel::Idler, omega_i)?;
    let dn = (ng_s - ng_i).abs();
    if dn < 1e-6 {
        return Err(Error::DegenerateGroupIndices(dn));
    }
    let chi_term = spec.chi2_eff / (lam_s * lam_i);
    Ok(64.0 * std::f64::consts::PI.powi(3) * HBAR * SPEED_OF_LIGHT * spec.efficiency_factor
        * n_s
        * n_i
        / (VACUUM_PERMITTIVITY * n_p * dn)
        * chi_term
        * chi_term
        * pump.mean_photon_number
        * pump.sigma_omega()
        * (2.0 * std::f64::consts::PI).sqrt())
}

/// Pair collection probability (per-pulse scale set by N_p).
pub fn pair_probability(
    spec: &CrystalSpec,
    pump: &PumpSpec,
    geometry: &BeamGeometry,
    omega_s: f64,
    omega_i: f64,
) -> Result<f64> {
    let t = reduced_terms(spec, geometry, omega_s, omega_i)?;
    Ok(collection_prefactor(spec, pump, omega_s, omega_i)? * t.pair)
}

/// Single-photon collection probability in one channel.
pub fn single_probability(
    spec: &CrystalSpec,
    pump: &PumpSpec,
    geometry: &BeamGeometry,
    omega_s: f64,
    omega_i: f64,
    channel: Channel,
) -> Result<f64> {
    let t = reduced_terms(spec, geometry, omega_s, omega_i)?;
    let reduced = match channel {
        Channel::Signal => t.single_s,
        Channel::Idler => t.single_i,
        Channel::Pump => {
            return Err(Error::InvalidParameter(
                "single_probability expects the signal or idler channel".into(),
            ))
        }
    };
    Ok(collection_prefactor(spec, pump, omega_s, omega_i)? * reduced)
}

/// Intrinsic mode-overlap heralding efficiency of one channel:
/// η_s = P_si/P_i (pair over the heralding partner's singles) and
/// η_i = P_si/P_s. Transmission and detector factors are applied only in
/// the multiplexing model.
pub fn heralding_efficiency(
    spec: &CrystalSpec,
    geometry: &BeamGeometry,
    omega_s: f64,
    omega_i: f64,
    channel: Channel,
) -> Result<f64> {
    let t = reduced_terms(spec, geometry, omega_s, omega_i)?;
    match channel {
        Channel::Signal => Ok(t.pair / t.single_i),
        Channel::Idler => Ok(t.pair / t.single_s),
        Channel::Pump => Err(Error::InvalidParameter(
            "heralding_efficiency expects the signal or idler channel".into(),
        )),
    }
}

/// Symmetric heralding efficiency η_c = P_si/√(P_s·P_i) = √(η_s·η_i).
pub fn symmetric_heralding_efficiency(
    spec: &CrystalSpec,
    geometry: &BeamGeometry,
    omega_s: f64,
    omega_i: f64,
) -> Result<f64> {
    let eta_s = heralding_efficiency(spec, geometry, omega_s, omega_i, Channel::Signal)?;
    let eta_i = heralding_efficiency(spec, geometry, omega_s, omega_i, Channel::Idler)?;
    Ok((eta_s * eta_i).sqrt())
}

/// All three efficiencies at one point.
pub fn heralding_point(
    spec: &CrystalSpec,
    geometry: &BeamGeometry,
    omega_s: f64,
    omega_i: f64,
) -> Result<HeraldingPoint> {
    let t = reduced_terms(spec, geometry, omega_s, omega_i)?;
    let eta_s = t.pair / t.single_i;
    let eta_i = t.pair / t.single_s;
    Ok(HeraldingPoint {
        lambda_s_m: wavelength_of_omega(omega_s),
        lambda_i_m: wavelength_of_omega(omega_i),
        xi_p: t.xi_p,
        xi_s: t.xi_s,
        xi_i: t.xi_i,
        eta_s,
        eta_i,
        eta_c: (eta_s * eta_i).sqrt(),
    })
}

/// Sweep table; failed points are recorded and skipped.
#[derive(Debug, Clone, serde::Serialize)]
pub struct SweepTable {
    pub points: Vec<HeraldingPoint>,
    pub errors: Vec<(usize, String)>,
    /// Index into `points` of the maximal η_c.
    pub argmax_eta_c: Option<usize>,
}

fn assemble_sweep(results: Vec<std::result::Result<HeraldingPoint, (usize, Error)>>) -> SweepTable {
    let mut points = Vec::new();
    let mut errors = Vec::new();
    for r in results {
        match r {
            Ok(p) => points.push(p),
            Err((i, e)) => errors.push((i, e.to_string())),
        }
    }
    let argmax_eta_c = points
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.eta_c.total_cmp(&b.1.eta_c))
        .map(|(i, _)| i);
    SweepTable {
        points,
        errors,
        argmax_eta_c,
    }
}

/// Wavelength sweep at fixed geometry: λ_s scans the given range and the
/// idler follows energy conservation at the pump center frequency. With a
/// waist geometry the waists stay fixed and the focal parameters drift with
/// wavelength; a focal geometry pins them instead.
pub fn sweep_heralding_wavelength(
    spec: &CrystalSpec,
    pump: &PumpSpec,
    geometry: &BeamGeometry,
    lambda_s_min: f64,
    lambda_s_max: f64,
    n: usize,
) -> SweepTable {
    let omega_p0 = pump.omega0();
    let results: Vec<_> = (0..n)
        .into_par_iter()
        .map(|j| {
            let lam = lambda_s_min + (lambda_s_max - lambda_s_min) * j as f64 / (n - 1) as f64;
            let ws = crate::constants::omega_of_wavelength(lam);
            heralding_point(spec, geometry, ws, omega_p0 - ws).map_err(|e| (j, e))
        })
        .collect();
    assemble_sweep(results)
}

/// Focal-parameter sweep in the constrained plane of Fig.-3a style plots:
/// ξ_s = ξ_i scans one axis, ξ_p the other, evaluated at fixed frequencies.
pub fn sweep_heralding_focal(
    spec: &CrystalSpec,
    omega_s: f64,
    omega_i: f64,
    xi_p_values: &[f64],
    xi_si_values: &[f64],
) -> SweepTable {
    let cases: Vec<(usize, f64, f64)> = xi_p_values
        .iter()
        .enumerate()
        .flat_map(|(a, &xp)| {
            xi_si_values
                .iter()
                .enumerate()
                .map(move |(b, &xsi)| (a * xi_si_values.len() + b, xp, xsi))
        })
        .collect();
    let results: Vec<_> = cases
        .into_par_iter()
        .map(|(idx, xp, xsi)| {
            let geom = BeamGeometry::Focal {
                xi_p: xp,
                xi_s: xsi,
                xi_i: xsi,
            };
            heralding_point(spec, &geom, omega_s, omega_i).map_err(|e| (idx, e))
        })
        .collect();
    assemble_sweep(results)
}

/// Unconstrained (ξ_s, ξ_i) sweep at fixed ξ_p.
pub fn sweep_heralding_focal_si(
    spec: &CrystalSpec,
    omega_s: f64,
    omega_i: f64,
    xi_p: f64,
    xi_s_values: &[f64],
    xi_i_values: &[f64],
) -> SweepTable {
    let cases: Vec<(usize, f64, f64)> = xi_s_values
        .iter()
        .enumerate()
        .flat_map(|(a, &xs)| {
            xi_i_values
                .iter()
                .enumerate()
                .map(move |(b, &xv)| (a * xi_i_values.len() + b, xs, xv))
        })
        .collect();
    let results: Vec<_> = cases
        .into_par_iter()
        .map(|(idx, xs, xv)| {
            let geom = BeamGeometry::Focal {
                xi_p,
                xi_s: xs,
                xi_i: xv,
            };
            heralding_point(spec, &geom, omega_s, omega_i).map_err(|e| (idx, e))
        })
        .collect();
    assemble_sweep(results)
}

/// Peak of |ψ|² over the frequency grid for each equal focal-parameter
/// triple ξ_p = ξ_s = ξ_i.
#[derive(Debug, Clone, serde::Serialize)]
pub struct MaxJsiSweep {
    pub xi: Vec<f64>,
    pub max_jsi: Vec<f64>,
    pub argmax_xi: f64,
}

pub fn max_jsi_over_focal(
    spec: &CrystalSpec,
    pump: &PumpSpec,
    grid: &FrequencyGrid,
    xi_values: &[f64],
) -> Result<MaxJsiSweep> {
    let max_jsi: Result<Vec<f64>> = xi_values
        .par_iter()
        .map(|&xi| {
            let geom = BeamGeometry::Focal {
                xi_p: xi,
                xi_s: xi,
                xi_i: xi,
            };
            let jsa = compute_jsa(spec, pump, &geom, grid)?;
            Ok(jsa
                .amplitude
                .iter()
                .map(|z| z.norm_sqr())
                .fold(0.0, f64::max))
        })
        .collect();
    let max_jsi = max_jsi?;
    let argmax = max_jsi
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| xi_values[i])
        .unwrap_or(f64::NAN);
    Ok(MaxJsiSweep {
        xi: xi_values.to_vec(),
        max_jsi,
        argmax_xi: argmax,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::omega_of_wavelength;
    use crate::dispersion::DispersionModel;
    use std::sync::Arc;

    fn paper_spec() -> CrystalSpec {
        CrystalSpec {
            length_m: 2.0e-3,
            poling_period_m: 29.4e-6,
            qpm_order: 1,
            chi2_eff: 2.0e-12,
            efficiency_factor: 1.0,
            pump_axis: "y".into(),
            signal_axis: "z".into(),
            idler_axis: "y".into(),
            dispersion: Arc::new(DispersionModel::ktp_fan_1987()),
            temperature_c: None,
        }
    }

    fn paper_pump() -> PumpSpec {
        PumpSpec {
            center_wavelength_m: 465e-9,
            intensity_fwhm_m: 12e-9,
            mean_photon_number: 1.0,
        }
    }

    fn paper_geometry(spec: &CrystalSpec) -> BeamGeometry {
        // Waists such that the crystal is two vacuum Rayleigh ranges long,
        // w_j = sqrt(L λ_j / 2π); the focal parameters come out near 1/n.
        let _ = spec;
        let l = 2.0e-3;
        BeamGeometry::Waists {
            w_p: (l * 465e-9 / crate::constants::TWO_PI).sqrt(),
            w_s: (l * 925e-9 / crate::constants::TWO_PI).sqrt(),
            w_i: (l * 935e-9 / crate::constants::TWO_PI).sqrt(),
        }
    }

    #[test]
    fn paper_waists_sit_near_focal_parameter_half() {
        let spec = paper_spec();
        let geom = paper_geometry(&spec);
        let (xp, xs, xv) = geom
            .focal_parameters(
                &spec,
                omega_of_wavelength(925e-9),
                omega_of_wavelength(935e-9),
            )
            .unwrap();
        for x in [xp, xs, xv] {
            assert!((x - 0.55).abs() < 0.05, "xi = {x}");
        }
    }

    #[test]
    fn pair_probability_vanishes_with_focus() {
        let spec = paper_spec();
        let pump = paper_pump();
        let (ws, wi) = (omega_of_wavelength(925e-9), omega_of_wavelength(935e-9));
        let mut prev = f64::INFINITY;
        for xi in [1e-2, 1e-3, 1e-4] {
            let geom = BeamGeometry::Focal {
                xi_p: xi,
                xi_s: xi,
                xi_i: xi,
            };
            let p = pair_probability(&spec, &pump, &geom, ws, wi).unwrap();
            assert!(p < prev && p > 0.0);
            prev = p;
        }
        assert!(prev < 1e-3 * pair_probability(&spec, &pump, &BeamGeometry::Focal { xi_p: 1.0, xi_s: 1.0, xi_i: 1.0 }, ws, wi).unwrap());
    }

    #[test]
    fn probabilities_linear_in_pump_photon_number() {
        let spec = paper_spec();
        let geom = paper_geometry(&spec);
        let (ws, wi) = (omega_of_wavelength(925e-9), omega_of_wavelength(935e-9));
        let mut p_low = paper_pump();
        p_low.mean_photon_number = 1.0;
        let mut p_high = paper_pump();
        p_high.mean_photon_number = 7.5;
        let a = pair_probability(&spec, &p_low, &geom, ws, wi).unwrap();
        let b = pair_probability(&spec, &p_high, &geom, ws, wi).unwrap();
        assert!((b / a - 7.5).abs() < 1e-12);
        let c = single_probability(&spec, &p_low, &geom, ws, wi, Channel::Signal).unwrap();
        let d = single_probability(&spec, &p_high, &geom, ws, wi, Channel::Signal).unwrap();
        assert!((d / c - 7.5).abs() < 1e-12);
    }

    #[test]
    fn symmetric_configuration_has_equal_singles() {
        // Same dispersion axis and waist for signal and idler at equal
        // frequencies makes P_s and P_i identical.
        let spec = CrystalSpec {
            signal_axis: "y".into(),
            idler_axis: "y".into(),
            ..paper_spec()
        };
        let pump = paper_pump();
        let w = 0.5 * pump.omega0();
        let geom = BeamGeometry::Focal {
            xi_p: 0.4,
            xi_s: 0.8,
            xi_i: 0.8,
        };
        let t = reduced_terms(&spec, &geom, w, w).unwrap();
        assert!((t.single_s - t.single_i).abs() < 1e-15);
    }

    #[test]
    fn marginal_exceeds_joint_at_paper_point() {
        let spec = paper_spec();
        let pump = paper_pump();
        let geom = paper_geometry(&spec);
        let (ws, wi) = (omega_of_wavelength(925e-9), omega_of_wavelength(935e-9));
        let psi = pair_probability(&spec, &pump, &geom, ws, wi).unwrap();
        let ps = single_probability(&spec, &pump, &geom, ws, wi, Channel::Signal).unwrap();
        let pi = single_probability(&spec, &pump, &geom, ws, wi, Channel::Idler).unwrap();
        assert!(ps >= psi && pi >= psi, "P_s {ps}, P_i {pi}, P_si {psi}");
    }

    #[test]
    fn efficiency_equals_probability_ratio() {
        let spec = paper_spec();
        let pump = paper_pump();
        let geom = paper_geometry(&spec);
        let (ws, wi) = (omega_of_wavelength(921e-9), omega_of_wavelength(939e-9));
        let eta_s = heralding_efficiency(&spec, &geom, ws, wi, Channel::Signal).unwrap();
        let psi = pair_probability(&spec, &pump, &geom, ws, wi).unwrap();
        let pi = single_probability(&spec, &pump, &geom, ws, wi, Channel::Idler).unwrap();
        assert!(((eta_s - psi / pi) / eta_s).abs() < 1e-12);
    }

    #[test]
    fn eta_c_formula_identities() {
        let spec = paper_spec();
        let geom = paper_geometry(&spec);
        let (ws, wi) = (omega_of_wavelength(925e-9), omega_of_wavelength(935e-9));
        let eta_s = heralding_efficiency(&spec, &geom, ws, wi, Channel::Signal).unwrap();
        let eta_i = heralding_efficiency(&spec, &geom, ws, wi, Channel::Idler).unwrap();
        let eta_c = symmetric_heralding_efficiency(&spec, &geom, ws, wi).unwrap();
        assert_eq!(eta_c * eta_c, (eta_s * eta_i).sqrt().powi(2));
        // direct formula route
        let t = reduced_terms(&spec, &geom, ws, wi).unwrap();
        let direct = t.pair / (t.single_s * t.single_i).sqrt();
        assert!(((eta_c - direct) / eta_c).abs() < 1e-12);
    }

    #[test]
    fn paper_configuration_heralding_near_three_quarters() {
        let spec = paper_spec();
        let pump = paper_pump();
        let geom = paper_geometry(&spec);
        let sweep = sweep_heralding_wavelength(&spec, &pump, &geom, 900e-9, 950e-9, 21);
        assert!(sweep.errors.is_empty());
        for p in &sweep.points {
            assert!(
                (p.eta_c - 0.75).abs() < 0.05,
                "eta_c({:.1} nm) = {}",
                p.lambda_s_m * 1e9,
                p.eta_c
            );
        }
        // negligible wavelength dependence across the band
        let min = sweep.points.iter().map(|p| p.eta_c).fold(f64::MAX, f64::min);
        let max = sweep.points.iter().map(|p| p.eta_c).fold(f64::MIN, f64::max);
        assert!(max - min < 0.01);
    }

    #[test]
    fn single_point_sweep_matches_scalar_operation() {
        let spec = paper_spec();
        let geom = paper_geometry(&spec);
        let pump = paper_pump();
        let sweep = sweep_heralding_wavelength(&spec, &pump, &geom, 925e-9, 926e-9, 2);
        let ws = omega_of_wavelength(925e-9);
        let wi = pump.omega0() - ws;
        let point = heralding_point(&spec, &geom, ws, wi).unwrap();
        assert!((sweep.points[0].eta_c - point.eta_c).abs() < 1e-15);
    }

    #[test]
    fn focal_sweep_maximum_sits_at_weak_pump_focus() {
        let spec = paper_spec();
        let (ws, wi) = (omega_of_wavelength(925e-9), omega_of_wavelength(935e-9));
        let xp: Vec<f64> = (0..20).map(|i| 10f64.powf(-2.0 + 2.5 * i as f64 / 19.0)).collect();
        let xsi = xp.clone();
        let sweep = sweep_heralding_focal(&spec, ws, wi, &xp, &xsi);
        assert!(sweep.errors.is_empty());
        let best = &sweep.points[sweep.argmax_eta_c.unwrap()];
        assert!(best.xi_p <= 0.15, "argmax xi_p = {}", best.xi_p);
        assert!(
            best.xi_s >= 0.02 && best.xi_s <= 0.6,
            "argmax xi_si = {}",
            best.xi_s
        );
    }

    #[test]
    fn swapping_si_ranges_transposes_the_table() {
        // For a signal/idler-symmetric crystal at degeneracy, swapping the
        // two range arguments transposes the table and exchanges the roles
        // of eta_s and eta_i.
        let spec = CrystalSpec {
            signal_axis: "y".into(),
            idler_axis: "y".into(),
            ..paper_spec()
        };
        let w = omega_of_wavelength(930e-9);
        let a = [0.1, 0.3, 0.9];
        let b = [0.2, 0.5];
        let t1 = sweep_heralding_focal_si(&spec, w, w, 0.5, &a, &b);
        let t2 = sweep_heralding_focal_si(&spec, w, w, 0.5, &b, &a);
        for (r, &xs) in a.iter().enumerate() {
            for (c, &xv) in b.iter().enumerate() {
                let p1 = &t1.points[r * b.len() + c];
                let p2 = &t2.points[c * a.len() + r];
                assert!((p1.xi_s - xs).abs() < 1e-15 && (p2.xi_i - xs).abs() < 1e-15);
                assert!((p1.xi_i - xv).abs() < 1e-15 && (p2.xi_s - xv).abs() < 1e-15);
                assert!((p1.eta_s - p2.eta_i).abs() < 1e-12);
                assert!((p1.eta_i - p2.eta_s).abs() < 1e-12);
                assert!((p1.eta_c - p2.eta_c).abs() < 1e-12);
            }
        }
    }
}
