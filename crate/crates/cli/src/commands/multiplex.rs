//! `hsps multiplex`: analytic delivery curves, Monte Carlo simulation and
//! least-squares fits of measured curves.

use std::path::{Path, PathBuf};

use clap::ValueEnum;
use hsps_core::error::{Error, Result};
use hsps_core::fit::{fit_loop_loss, fit_multiplexed, MultiplexFitSpec, Param};
use hsps_core::multiplexing::{
    baseline_crossing_bin, heralded_single_prob, no_multiplexing_baseline, p_multiplexed,
    p_multiplexed_work_zone, simulate_pulse_train, work_zone_printed_form,
};

use crate::{finish, write_json, write_table_csv, Context};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MultiplexAction {
    Model,
    Simulate,
    Fit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FitKind {
    /// Delivery probability vs. cycle length.
    Multiplexed,
    /// Held-pulse amplitude vs. loop turns, y = a·(1−η_sl)^x.
    LoopLoss,
}

#[derive(serde::Serialize)]
struct ModelSummary {
    mu: f64,
    eta_herald: f64,
    eta_sl: f64,
    p1: f64,
    baseline: f64,
    crossing_bin: Option<u32>,
}

#[derive(serde::Serialize)]
struct SimulateOutput {
    params: hsps_core::multiplexing::MultiplexParams,
    seed: u64,
    trials: u64,
    successes: u64,
    p_hat: f64,
    stderr: f64,
    analytic_direct_sum: f64,
}

#[derive(serde::Serialize)]
struct FitOutput {
    kind: String,
    parameter_names: Vec<String>,
    values: Vec<f64>,
    confidence_half_widths: Vec<f64>,
    residual_norm: f64,
    converged: bool,
    iterations: usize,
}

pub fn run(
    ctx: &Context,
    action: MultiplexAction,
    data: Option<&Path>,
    fit_kind: FitKind,
) -> Result<Vec<PathBuf>> {
    let manifest = ctx.manifest("multiplex");
    let m = &ctx.config.multiplex;
    let params = ctx.config.multiplex_params();
    params.validate()?;
    let zone = ctx.config.work_zone();
    let mut files = Vec::new();

    match action {
        MultiplexAction::Model => {
            let p1 = params.p1();
            let baseline = no_multiplexing_baseline(m.mu, m.eta_sl);
            let n_min = zone.head_dead + zone.tail_dead + 1;
            let mut rows = Vec::new();
            for n in n_min..=m.n_max {
                let wz = p_multiplexed_work_zone(p1, m.eta_sl, n, zone)?;
                let printed = if n > 10 {
                    work_zone_printed_form(p1, m.eta_sl, n)?
                } else {
                    f64::NAN
                };
                rows.push(vec![
                    n as f64,
                    wz.direct_sum,
                    wz.closed_form,
                    printed,
                    p_multiplexed(p1, m.eta_sl, n),
                    baseline,
                ]);
            }
            let path = ctx.out_dir.join("multiplex_model.csv");
            write_table_csv(
                &path,
                &[
                    "bins",
                    "p_work_zone_direct",
                    "p_work_zone_closed",
                    "p_printed_five_dead",
                    "p_full_window",
                    "baseline_no_multiplexing",
                ],
                &rows,
            )?;
            files.push(path);
            let crossing = baseline_crossing_bin(
                m.mu,
                m.eta_herald,
                m.eta_sl,
                hsps_core::multiplexing::WorkZone {
                    final_bin_doubled: false,
                    ..zone
                },
                m.n_max,
            )?;
            let summary = ModelSummary {
                mu: m.mu,
                eta_herald: m.eta_herald,
                eta_sl: m.eta_sl,
                p1,
                baseline,
                crossing_bin: crossing,
            };
            let path = ctx.out_dir.join("multiplex_summary.json");
            write_json(&path, &summary)?;
            files.push(path);
        }
        MultiplexAction::Simulate => {
            let sim = simulate_pulse_train(&params, m.trials, ctx.seed)?;
            let analytic = p_multiplexed_work_zone(params.p1(), m.eta_sl, m.bins, zone)?;
            let out = SimulateOutput {
                params: params.clone(),
                seed: ctx.seed,
                trials: sim.trials,
                successes: sim.successes,
                p_hat: sim.p_hat,
                stderr: sim.stderr,
                analytic_direct_sum: analytic.direct_sum,
            };
            let path = ctx.out_dir.join("multiplex_simulation.json");
            write_json(&path, &out)?;
            files.push(path);
        }
        MultiplexAction::Fit => {
            let data_path =
                data.ok_or_else(|| Error::Config("multiplex fit needs --data <csv>".into()))?;
            let text = std::fs::read_to_string(data_path)
                .map_err(|e| Error::Data(format!("cannot read '{}': {e}", data_path.display())))?;
            let rows = hsps_core::io::parse_xy_csv(&text)?;
            let xy: Vec<(f64, f64)> = rows.iter().map(|&(x, y, _)| (x, y)).collect();
            let (kind_name, fit) = match fit_kind {
                FitKind::LoopLoss => ("loop-loss".to_string(), fit_loop_loss(&xy)?),
                FitKind::Multiplexed => {
                    let spec = MultiplexFitSpec {
                        mu: Param::Free,
                        eta_herald: Param::Fixed(m.eta_herald),
                        eta_sl: Param::Free,
                        zone: Some(zone),
                        starts: 16,
                        seed: ctx.seed,
                    };
                    ("multiplexed".to_string(), fit_multiplexed(&xy, &spec)?)
                }
            };
            let out = FitOutput {
                kind: kind_name,
                parameter_names: fit.parameter_names.clone(),
                values: fit.values.clone(),
                confidence_half_widths: fit.confidence_half_widths.clone(),
                residual_norm: fit.residual_norm,
                converged: fit.converged,
                iterations: fit.iterations,
            };
            let path = ctx.out_dir.join("multiplex_fit.json");
            write_json(&path, &out)?;
            files.push(path);

            // fitted curve for plotting against the data
            if matches!(fit_kind, FitKind::Multiplexed) {
                let mu = fit.value("mu").unwrap_or(m.mu);
                let eta_sl = fit.value("eta_sl").unwrap_or(m.eta_sl);
                let p1 = heralded_single_prob(mu, m.eta_herald);
                let mut rows = Vec::new();
                for n in zone.head_dead + zone.tail_dead + 1..=m.n_max {
                    rows.push(vec![
                        n as f64,
                        p_multiplexed_work_zone(p1, eta_sl, n, zone)?.direct_sum,
                    ]);
                }
                let path = ctx.out_dir.join("multiplex_fit_curve.csv");
                write_table_csv(&path, &["bins", "p_fitted"], &rows)?;
                files.push(path);
            }
        }
    }
    finish(manifest, &ctx.out_dir, files)
}
