//! `hsps jsa`: JSI matrix, pump envelope and |Φ| maps plus a diagnostics
//! sidecar.

use std::path::PathBuf;

use hsps_core::constants::wavelength_of_omega;
use hsps_core::error::Result;
use hsps_core::io::GridAxes;
use hsps_core::jsa;

use crate::{finish, write_json, write_matrix_csv, Context};

#[derive(serde::Serialize)]
struct JsaSidecar {
    axes: GridAxes,
    diagnostics: jsa::JsaDiagnostics,
    approximation: jsa::ApproximationReport,
    jsi_peak_lambda_s_m: f64,
    jsi_peak_lambda_i_m: f64,
    matched_center_lambda_s_m: f64,
    matched_center_lambda_i_m: f64,
    /// Prefactor pieces at the grid center (everything except the kernel).
    prefactor_center: PrefactorBreakdown,
    conventions: Conventions,
}

#[derive(serde::Serialize)]
struct PrefactorBreakdown {
    sqrt_radicand: f64,
    chi2_eff_over_lambda_product: f64,
    pump_sigma_omega_rad_s: f64,
    inv_sqrt_a_plus_b_plus: f64,
}

#[derive(serde::Serialize)]
struct Conventions {
    pump_fwhm_reading: &'static str,
    pump_amplitude: &'static str,
    grating_sign: &'static str,
    wavelength_jacobian: &'static str,
}

pub fn run(ctx: &Context) -> Result<Vec<PathBuf>> {
    let manifest = ctx.manifest("jsa");
    let spec = ctx.config.crystal_spec()?;
    let pump = ctx.config.pump_spec()?;
    let geom = ctx.config.beam_geometry()?;
    let grid = ctx.config.frequency_grid(&spec, &pump)?;

    let result = jsa::compute_jsa(&spec, &pump, &geom, &grid)?;
    let (n_s, n_i) = (grid.len_s(), grid.len_i());

    let mut files = Vec::new();
    let jsi_path = ctx.out_dir.join("jsi.csv");
    write_matrix_csv(&jsi_path, n_s, n_i, &hsps_core::io::jsi_of(&result.amplitude))?;
    files.push(jsi_path);

    let mut pump_map = Vec::with_capacity(n_s * n_i);
    let mut phi_map = Vec::with_capacity(n_s * n_i);
    for &ws in &grid.omega_s {
        for &wi in &grid.omega_i {
            pump_map.push(pump.amplitude_at(ws, wi));
            phi_map.push(spec.phase_mismatch(ws, wi)?.phi.abs());
        }
    }
    let pump_path = ctx.out_dir.join("pump_envelope.csv");
    write_matrix_csv(&pump_path, n_s, n_i, &pump_map)?;
    files.push(pump_path);
    let phi_path = ctx.out_dir.join("phi_abs.csv");
    write_matrix_csv(&phi_path, n_s, n_i, &phi_map)?;
    files.push(phi_path);

    let (center_s, center_i) = ctx.config.grid_center(&spec, &pump)?;
    let params = jsa::dimensionless_params(&spec, &geom, center_s, center_i)?;
    let (peak_s, peak_i) = result.peak_wavelengths();
    let lam_s = wavelength_of_omega(center_s);
    let lam_i = wavelength_of_omega(center_i);
    let n_s_idx = spec.refractive_index(hsps_core::dispersion::Channel::Signal, lam_s)?;
    let n_i_idx = spec.refractive_index(hsps_core::dispersion::Channel::Idler, lam_i)?;
    let n_p_idx = spec.refractive_index(
        hsps_core::dispersion::Channel::Pump,
        wavelength_of_omega(center_s + center_i),
    )?;
    let radicand = 8.0
        * std::f64::consts::PI.powi(2)
        * spec.efficiency_factor
        * hsps_core::constants::HBAR
        * n_s_idx
        * n_i_idx
        * pump.mean_photon_number
        * spec.length_m
        / (hsps_core::constants::VACUUM_PERMITTIVITY * n_p_idx);

    let sidecar = JsaSidecar {
        axes: GridAxes::of(&grid),
        diagnostics: result.diagnostics,
        approximation: jsa::approximation_report(&result, 0.1),
        jsi_peak_lambda_s_m: peak_s,
        jsi_peak_lambda_i_m: peak_i,
        matched_center_lambda_s_m: lam_s,
        matched_center_lambda_i_m: lam_i,
        prefactor_center: PrefactorBreakdown {
            sqrt_radicand: radicand.sqrt(),
            chi2_eff_over_lambda_product: spec.chi2_eff / (lam_s * lam_i),
            pump_sigma_omega_rad_s: pump.sigma_omega(),
            inv_sqrt_a_plus_b_plus: 1.0 / (params.a_plus * params.b_plus).sqrt(),
        },
        conventions: Conventions {
            pump_fwhm_reading: "configured pump FWHM is the spectral intensity FWHM in wavelength; sigma = fwhm_omega/(2*sqrt(2 ln 2))",
            pump_amplitude: "s(omega_p) = exp(-(omega_p-omega_p0)^2/(4 sigma^2)), unit peak",
            grating_sign: "Phi = (delta_k - m*2*pi/Lambda)*L; the grating compensates the material mismatch",
            wavelength_jacobian: "matrices are sampled uniformly in angular frequency; no d(omega)/d(lambda) Jacobian is applied",
        },
    };
    let sidecar_path = ctx.out_dir.join("jsa_diagnostics.json");
    write_json(&sidecar_path, &sidecar)?;
    files.push(sidecar_path);

    finish(manifest, &ctx.out_dir, files)
}
