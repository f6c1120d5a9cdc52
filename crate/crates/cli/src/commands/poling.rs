//! `hsps poling`: domain optimization, structure evaluation and the
//! purity landscape over pump width and crystal length.

use std::path::{Path, PathBuf};

use clap::ValueEnum;
use hsps_core::error::{Error, Result};
use hsps_core::poling::{
    discrete_pmf, optimize_domains, pmf_curve, poling_grid, purity_from_pmf, purity_landscape,
    PmfProvider, PolingStructure, StructureKind,
};

use crate::{finish, write_json, write_table_csv, Context};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PolingAction {
    Optimize,
    Evaluate,
    Landscape,
}

#[derive(serde::Serialize)]
struct PolingSummary {
    domains: usize,
    domain_width_m: f64,
    length_m: f64,
    apodization_sigma_m: f64,
    pump_sigma_rad_s: f64,
    purity: f64,
    periodic_reference_purity: f64,
}

fn write_pmf_csv(
    ctx: &Context,
    name: &str,
    structure: &PolingStructure,
) -> Result<PathBuf> {
    let p = &ctx.config.poling;
    let k0 = std::f64::consts::PI / structure.domain_width_m;
    let span = p.pmf_span_lobes * hsps_core::constants::TWO_PI / structure.length_m();
    let curve = pmf_curve(structure, k0 - span, k0 + span, p.pmf_points);
    let periodic = PolingStructure::periodic(2.0 * structure.domain_width_m, structure.length_m());
    let rows: Vec<Vec<f64>> = curve
        .delta_k
        .iter()
        .enumerate()
        .map(|(i, &dk)| {
            let abs = (curve.values_re[i].powi(2) + curve.values_im[i].powi(2)).sqrt();
            vec![
                dk,
                curve.values_re[i],
                curve.values_im[i],
                abs / curve.normalization,
                discrete_pmf(&periodic, dk).norm() / curve.normalization,
            ]
        })
        .collect();
    let path = ctx.out_dir.join(name);
    write_table_csv(
        &path,
        &["delta_k_rad_m", "phi_re", "phi_im", "abs_normalized", "abs_periodic_normalized"],
        &rows,
    )?;
    Ok(path)
}

fn purity_pair(ctx: &Context, structure: &PolingStructure) -> Result<(f64, f64)> {
    let spec = ctx.config.crystal_spec()?;
    let pump = ctx.config.pump_spec()?;
    let p = &ctx.config.poling;
    let grid = poling_grid(
        &spec,
        pump.omega0(),
        p.pump_sigma_rad_s,
        structure.length_m(),
        p.grid_points,
    )?;
    let own = purity_from_pmf(
        &spec,
        pump.omega0(),
        p.pump_sigma_rad_s,
        &PmfProvider::Discrete(structure),
        &grid,
    )?
    .purity;
    let periodic = PolingStructure::periodic(spec.poling_period_m, structure.length_m());
    let reference = purity_from_pmf(
        &spec,
        pump.omega0(),
        p.pump_sigma_rad_s,
        &PmfProvider::Discrete(&periodic),
        &grid,
    )?
    .purity;
    Ok((own, reference))
}

pub fn run(ctx: &Context, action: PolingAction, structure: Option<&Path>) -> Result<Vec<PathBuf>> {
    let manifest = ctx.manifest("poling");
    let spec = ctx.config.crystal_spec()?;
    let pump = ctx.config.pump_spec()?;
    let p = &ctx.config.poling;
    let mut files = Vec::new();

    match action {
        PolingAction::Optimize => {
            let sigma = p.apodization_sigma_fraction * spec.length_m;
            let optimized = optimize_domains(spec.length_m, spec.poling_period_m, sigma)?;
            let structure_path = ctx.out_dir.join("structure.txt");
            std::fs::create_dir_all(&ctx.out_dir)?;
            std::fs::write(&structure_path, optimized.to_text())?;
            files.push(structure_path);
            files.push(write_pmf_csv(ctx, "pmf.csv", &optimized)?);
            let (own, reference) = purity_pair(ctx, &optimized)?;
            let summary = PolingSummary {
                domains: optimized.signs.len(),
                domain_width_m: optimized.domain_width_m,
                length_m: optimized.length_m(),
                apodization_sigma_m: sigma,
                pump_sigma_rad_s: p.pump_sigma_rad_s,
                purity: own,
                periodic_reference_purity: reference,
            };
            let path = ctx.out_dir.join("poling_summary.json");
            write_json(&path, &summary)?;
            files.push(path);
        }
        PolingAction::Evaluate => {
            let path = structure.ok_or_else(|| {
                Error::Config("poling evaluate needs --structure <file>".into())
            })?;
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Data(format!("cannot read '{}': {e}", path.display())))?;
            let structure = PolingStructure::from_text(&text)?;
            files.push(write_pmf_csv(ctx, "pmf.csv", &structure)?);
            let (own, reference) = purity_pair(ctx, &structure)?;
            let summary = PolingSummary {
                domains: structure.signs.len(),
                domain_width_m: structure.domain_width_m,
                length_m: structure.length_m(),
                apodization_sigma_m: structure.design_sigma_m,
                pump_sigma_rad_s: p.pump_sigma_rad_s,
                purity: own,
                periodic_reference_purity: reference,
            };
            let path = ctx.out_dir.join("poling_summary.json");
            write_json(&path, &summary)?;
            files.push(path);
        }
        PolingAction::Landscape => {
            for (kind, name) in [
                (StructureKind::Periodic, "landscape_periodic.csv"),
                (StructureKind::Optimized, "landscape_optimized.csv"),
            ] {
                let landscape = purity_landscape(
                    &spec,
                    pump.omega0(),
                    &p.landscape_pump_sigmas_rad_s,
                    &p.landscape_lengths_m,
                    kind,
                    p.apodization_sigma_fraction,
                    p.grid_points,
                );
                if let Some((r, c, e)) = landscape.cell_errors.first() {
                    return Err(Error::Data(format!(
                        "landscape cell ({r}, {c}) failed: {e}"
                    )));
                }
                // rows: pump sigma; first column carries the sigma value
                let mut rows = Vec::new();
                for (r, &sig) in landscape.pump_sigmas.iter().enumerate() {
                    let mut row = vec![sig];
                    for c in 0..landscape.lengths_m.len() {
                        row.push(landscape.purity[r * landscape.lengths_m.len() + c]);
                    }
                    rows.push(row);
                }
                let mut headers: Vec<String> = vec!["pump_sigma_rad_s".into()];
                headers.extend(
                    landscape
                        .lengths_m
                        .iter()
                        .map(|l| format!("purity_L_{:.4e}", l)),
                );
                let header_refs: Vec<&str> = headers.iter().map(String::as_str).collect();
                let path = ctx.out_dir.join(name);
                write_table_csv(&path, &header_refs, &rows)?;
                files.push(path);
            }
        }
    }
    finish(manifest, &ctx.out_dir, files)
}
