//! `hsps purity`: unfiltered Schmidt spectrum, the configured filter pair,
//! and the purity / heralding trade-off sweep over filter widths.

use std::path::PathBuf;

use hsps_core::dispersion::Channel;
use hsps_core::error::Result;
use hsps_core::jsa::compute_jsa;
use hsps_core::purity::{
    apply_filters, filtered_heralding_ratio, purity_filter_sweep, schmidt_decompose, FilterSpec,
};

use crate::{finish, log_space, write_json, write_table_csv, Context};

#[derive(serde::Serialize)]
struct PuritySummary {
    unfiltered_purity: f64,
    unfiltered_schmidt_number: f64,
    /// Leading Schmidt coefficients (at most 32).
    schmidt_coefficients: Vec<f64>,
    filter_shape: hsps_core::purity::FilterShape,
    filter_center_signal_m: f64,
    filter_center_idler_m: f64,
    configured_fwhm_m: f64,
    filtered_purity: f64,
    filtered_he_signal: f64,
    filtered_he_idler: f64,
    /// Width at which the sweep first reaches purity 0.9, scanning from
    /// wide to narrow (linear interpolation between sweep points).
    purity_090_crossing_fwhm_m: Option<f64>,
    purity_090_crossing_sigma_m: Option<f64>,
}

pub fn run(ctx: &Context) -> Result<Vec<PathBuf>> {
    let manifest = ctx.manifest("purity");
    let spec = ctx.config.crystal_spec()?;
    let pump = ctx.config.pump_spec()?;
    let geom = ctx.config.beam_geometry()?;

    // Unfiltered analysis on the configured grid.
    let grid = ctx.config.frequency_grid(&spec, &pump)?;
    let jsa = compute_jsa(&spec, &pump, &geom, &grid)?;
    let unfiltered = schmidt_decompose(&jsa)?;

    // Sweep on the finer grid so sub-nm filters stay resolved.
    let sweep_grid = ctx.config.frequency_grid_with_points(
        &spec,
        &pump,
        ctx.config.filters.sweep_grid_points,
    )?;
    let sweep_jsa = if sweep_grid.len_s() == grid.len_s() {
        jsa.clone()
    } else {
        compute_jsa(&spec, &pump, &geom, &sweep_grid)?
    };

    let f = &ctx.config.filters;
    let (center_s, center_i) = match f.center.as_str() {
        "explicit" => (f.signal_center_m, f.idler_center_m),
        _ => sweep_jsa.peak_wavelengths(),
    };

    let widths = log_space(f.sweep_min_m, f.sweep_max_m, f.sweep_points);
    let sweep = purity_filter_sweep(&sweep_jsa, f.shape, center_s, center_i, &widths);
    let rows: Vec<Vec<f64>> = sweep
        .iter()
        .map(|r| {
            vec![
                r.fwhm_m,
                r.sigma_m,
                r.purity.unwrap_or(f64::NAN),
                r.he_signal.unwrap_or(f64::NAN),
                r.he_idler.unwrap_or(f64::NAN),
            ]
        })
        .collect();
    let sweep_path = ctx.out_dir.join("purity_filter_sweep.csv");
    write_table_csv(
        &sweep_path,
        &["fwhm_m", "sigma_m", "purity", "he_signal_norm", "he_idler_norm"],
        &rows,
    )?;

    // 0.9 crossing scanned from the wide end.
    let mut crossing = None;
    let mut prev: Option<(f64, f64)> = None;
    for r in sweep.iter().rev() {
        if let Some(p) = r.purity {
            if let Some((w_prev, p_prev)) = prev {
                if p >= 0.9 && p_prev < 0.9 {
                    let t = (0.9 - p_prev) / (p - p_prev);
                    crossing = Some(w_prev + t * (r.fwhm_m - w_prev));
                    break;
                }
            } else if p >= 0.9 {
                crossing = Some(r.fwhm_m);
                break;
            }
            prev = Some((r.fwhm_m, p));
        }
    }

    let f_s = FilterSpec {
        shape: f.shape,
        center_m: center_s,
        fwhm_m: f.fwhm_m,
    };
    let f_i = FilterSpec {
        shape: f.shape,
        center_m: center_i,
        fwhm_m: f.fwhm_m,
    };
    let filtered = apply_filters(&sweep_jsa, &f_s, &f_i)?;
    let filtered_schmidt = schmidt_decompose(&filtered)?;

    let summary = PuritySummary {
        unfiltered_purity: unfiltered.purity,
        unfiltered_schmidt_number: unfiltered.schmidt_number,
        schmidt_coefficients: unfiltered.coefficients.iter().take(32).copied().collect(),
        filter_shape: f.shape,
        filter_center_signal_m: center_s,
        filter_center_idler_m: center_i,
        configured_fwhm_m: f.fwhm_m,
        filtered_purity: filtered_schmidt.purity,
        filtered_he_signal: filtered_heralding_ratio(&sweep_jsa, &f_s, &f_i, Channel::Signal)?,
        filtered_he_idler: filtered_heralding_ratio(&sweep_jsa, &f_s, &f_i, Channel::Idler)?,
        purity_090_crossing_fwhm_m: crossing,
        purity_090_crossing_sigma_m: crossing
            .map(|w| w / (2.0 * (2.0 * std::f64::consts::LN_2).sqrt())),
    };
    let summary_path = ctx.out_dir.join("purity_summary.json");
    write_json(&summary_path, &summary)?;

    finish(manifest, &ctx.out_dir, vec![sweep_path, summary_path])
}
