//! `hsps heralding`: wavelength sweep, focal-parameter sweep and the
//! max-JSI-vs-focus scan.

use std::path::PathBuf;

use clap::ValueEnum;
use hsps_core::error::Result;
use hsps_core::grid::FrequencyGrid;
use hsps_core::heralding;

use crate::{finish, log_space, write_json, write_table_csv, Context};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SweepKind {
    Wavelength,
    Focal,
    MaxJsi,
}

#[derive(serde::Serialize)]
struct ArgmaxSummary {
    kind: String,
    geometry: String,
    best_eta_c: Option<f64>,
    best_lambda_s_m: Option<f64>,
    best_xi_p: Option<f64>,
    best_xi_si: Option<f64>,
    max_jsi_argmax_xi: Option<f64>,
    errors: usize,
}

pub fn run(
    ctx: &Context,
    kind: SweepKind,
    (lambda_min, lambda_max, points): (f64, f64, usize),
    (xi_min, xi_max, xi_points): (f64, f64, usize),
) -> Result<Vec<PathBuf>> {
    let manifest = ctx.manifest("heralding");
    let spec = ctx.config.crystal_spec()?;
    let pump = ctx.config.pump_spec()?;
    let geom = ctx.config.beam_geometry()?;
    let geometry_note = match geom {
        hsps_core::jsa::BeamGeometry::Waists { .. } => "fixed waists",
        hsps_core::jsa::BeamGeometry::Focal { .. } => "pinned focal parameters",
    };
    let (center_s, center_i) = ctx.config.grid_center(&spec, &pump)?;

    let mut files = Vec::new();
    match kind {
        SweepKind::Wavelength => {
            let sweep = heralding::sweep_heralding_wavelength(
                &spec, &pump, &geom, lambda_min, lambda_max, points,
            );
            let rows: Vec<Vec<f64>> = sweep
                .points
                .iter()
                .map(|p| {
                    vec![
                        p.lambda_s_m,
                        p.lambda_i_m,
                        p.xi_p,
                        p.xi_s,
                        p.xi_i,
                        p.eta_s,
                        p.eta_i,
                        p.eta_c,
                    ]
                })
                .collect();
            let path = ctx.out_dir.join("heralding_wavelength.csv");
            write_table_csv(
                &path,
                &[
                    "lambda_s_m",
                    "lambda_i_m",
                    "xi_p",
                    "xi_s",
                    "xi_i",
                    "eta_s",
                    "eta_i",
                    "eta_c",
                ],
                &rows,
            )?;
            files.push(path);
            let best = sweep.argmax_eta_c.map(|i| &sweep.points[i]);
            let summary = ArgmaxSummary {
                kind: "wavelength".into(),
                geometry: geometry_note.into(),
                best_eta_c: best.map(|p| p.eta_c),
                best_lambda_s_m: best.map(|p| p.lambda_s_m),
                best_xi_p: best.map(|p| p.xi_p),
                best_xi_si: None,
                max_jsi_argmax_xi: None,
                errors: sweep.errors.len(),
            };
            let path = ctx.out_dir.join("heralding_argmax.json");
            write_json(&path, &summary)?;
            files.push(path);
        }
        SweepKind::Focal => {
            let xi = log_space(xi_min, xi_max, xi_points);
            let sweep = heralding::sweep_heralding_focal(&spec, center_s, center_i, &xi, &xi);
            let rows: Vec<Vec<f64>> = sweep
                .points
                .iter()
                .map(|p| vec![p.xi_p, p.xi_s, p.eta_s, p.eta_i, p.eta_c])
                .collect();
            let path = ctx.out_dir.join("heralding_focal.csv");
            write_table_csv(&path, &["xi_p", "xi_si", "eta_s", "eta_i", "eta_c"], &rows)?;
            files.push(path);
            let best = sweep.argmax_eta_c.map(|i| &sweep.points[i]);
            let summary = ArgmaxSummary {
                kind: "focal".into(),
                geometry: "pinned focal parameters".into(),
                best_eta_c: best.map(|p| p.eta_c),
                best_lambda_s_m: None,
                best_xi_p: best.map(|p| p.xi_p),
                best_xi_si: best.map(|p| p.xi_s),
                max_jsi_argmax_xi: None,
                errors: sweep.errors.len(),
            };
            let path = ctx.out_dir.join("heralding_argmax.json");
            write_json(&path, &summary)?;
            files.push(path);
        }
        SweepKind::MaxJsi => {
            // A tighter grid around the phase-matched ridge is enough for
            // the peak search and keeps the scan fast.
            let half = 1.5 * pump.fwhm_omega();
            let grid = FrequencyGrid::centered(center_s, center_i, half, 121)?;
            let xi = log_space(xi_min.max(0.05), xi_max, xi_points);
            let sweep = heralding::max_jsi_over_focal(&spec, &pump, &grid, &xi)?;
            let rows: Vec<Vec<f64>> = sweep
                .xi
                .iter()
                .zip(&sweep.max_jsi)
                .map(|(&x, &v)| vec![x, v])
                .collect();
            let path = ctx.out_dir.join("max_jsi_focal.csv");
            write_table_csv(&path, &["xi", "max_jsi"], &rows)?;
            files.push(path);
            let summary = ArgmaxSummary {
                kind: "max-jsi".into(),
                geometry: "equal focal-parameter triple".into(),
                best_eta_c: None,
                best_lambda_s_m: None,
                best_xi_p: None,
                best_xi_si: None,
                max_jsi_argmax_xi: Some(sweep.argmax_xi),
                errors: 0,
            };
            let path = ctx.out_dir.join("heralding_argmax.json");
            write_json(&path, &summary)?;
            files.push(path);
        }
    }
    finish(manifest, &ctx.out_dir, files)
}
