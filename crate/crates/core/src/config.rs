//! Run configuration: one structured TOML file resolves every physical
//! parameter of a run. Unknown keys are rejected, all values are validated
//! into the domain types at load time, and the canonical serialization is
//! hashed into the run manifest.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::constants::omega_of_wavelength;
use crate::dispersion::{CrystalSpec, DispersionModel};
use crate::error::{Error, Result};
use crate::grid::FrequencyGrid;
use crate::jsa::{BeamGeometry, PumpSpec};
use crate::multiplexing::{ChannelEfficiencies, MultiplexParams, WorkZone};
use crate::purity::FilterShape;

/// Bundled reference preset.
pub const PAPER_PRESET_TOML: &str = include_str!("../assets/paper.toml");

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// 0 = leave the global thread pool alone.
    #[serde(default)]
    pub threads: usize,
}

fn default_seed() -> u64 {
    1
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection {
            seed: default_seed(),
            threads: 0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CrystalSection {
    pub length_m: f64,
    pub poling_period_m: f64,
    pub qpm_order: u32,
    pub chi2_eff_m_per_v: f64,
    pub efficiency_factor: f64,
    pub pump_axis: String,
    pub signal_axis: String,
    pub idler_axis: String,
    /// Name of a `[dispersion.<name>]` section.
    pub dispersion: String,
    #[serde(default)]
    pub temperature_c: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PumpSection {
    pub center_wavelength_m: f64,
    pub intensity_fwhm_m: f64,
    #[serde(default = "one")]
    pub mean_photon_number: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BeamsSection {
    pub kind: String,
    #[serde(default)]
    pub w_p_m: Option<f64>,
    #[serde(default)]
    pub w_s_m: Option<f64>,
    #[serde(default)]
    pub w_i_m: Option<f64>,
    #[serde(default)]
    pub xi_p: Option<f64>,
    #[serde(default)]
    pub xi_s: Option<f64>,
    #[serde(default)]
    pub xi_i: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub points: usize,
    pub span_pump_fwhm: f64,
    /// "matched" (solve the QPM point on the pump line) or "nominal".
    pub center: String,
    pub nominal_signal_m: f64,
    pub nominal_idler_m: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FiltersSection {
    pub shape: FilterShape,
    /// "jsi-peak" or "explicit".
    pub center: String,
    pub signal_center_m: f64,
    pub idler_center_m: f64,
    pub fwhm_m: f64,
    pub sweep_min_m: f64,
    pub sweep_max_m: f64,
    pub sweep_points: usize,
    pub sweep_grid_points: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolingSection {
    pub pump_sigma_rad_s: f64,
    pub apodization_sigma_fraction: f64,
    pub grid_points: usize,
    pub pmf_span_lobes: f64,
    pub pmf_points: usize,
    pub landscape_pump_sigmas_rad_s: Vec<f64>,
    pub landscape_lengths_m: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SinglesRates {
    pub horizontal_raw: String,
    pub vertical_raw: String,
    pub interpreted_mcps: [f64; 2],
    pub decimal_comma_assumed: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MultiplexSection {
    pub mu: f64,
    pub eta_herald: f64,
    pub eta_sl: f64,
    pub bins: u32,
    pub pulse_period_s: f64,
    pub head_dead: u32,
    pub tail_dead: u32,
    pub final_bin_doubled: bool,
    pub n_max: u32,
    pub trials: u64,
    pub channel_efficiencies: ChannelEfficiencies,
    #[serde(default)]
    pub singles_rates: Option<SinglesRates>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IoSection {
    pub out_dir: String,
}

/// Whole-run configuration; mirrors the TOML layout one to one.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub run: RunSection,
    pub dispersion: BTreeMap<String, DispersionModel>,
    pub crystal: CrystalSection,
    pub pump: PumpSection,
    pub beams: BeamsSection,
    pub grid: GridSection,
    pub filters: FiltersSection,
    pub poling: PolingSection,
    pub multiplex: MultiplexSection,
    pub io: IoSection,
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let mut cfg: RunConfig =
            toml::from_str(text).map_err(|e| Error::Config(format!("parse: {e}")))?;
        for (key, model) in cfg.dispersion.iter_mut() {
            model.name = key.clone();
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// The bundled reference preset.
    pub fn paper() -> Self {
        Self::from_toml_str(PAPER_PRESET_TOML).expect("bundled preset must parse")
    }

    /// Canonical serialization used for hashing and reproducibility checks.
    pub fn to_canonical_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        self.crystal_spec()?.validate()?;
        self.pump_spec()?.validate()?;
        self.beam_geometry()?.validate()?;
        for (name, model) in &self.dispersion {
            let [lo, hi] = model.valid_range_m;
            if !(lo > 0.0 && hi > lo) {
                return Err(Error::Config(format!(
                    "dispersion.{name}: invalid wavelength range"
                )));
            }
            // the index must stay finite and above 1 across the range
            for (axis, _) in &model.axes {
                for i in 0..=50 {
                    let lam = lo + (hi - lo) * i as f64 / 50.0;
                    let n = model.index(axis, lam, None)?;
                    if !(n.is_finite() && n > 1.0) {
                        return Err(Error::Config(format!(
                            "dispersion.{name}.{axis}: n({lam:e}) = {n} violates n > 1"
                        )));
                    }
                }
            }
        }
        if self.grid.points < 2 {
            return Err(Error::Config("grid.points must be >= 2".into()));
        }
        if !(self.grid.span_pump_fwhm > 0.0) {
            return Err(Error::Config("grid.span_pump_fwhm must be > 0".into()));
        }
        match self.grid.center.as_str() {
            "matched" | "nominal" => {}
            other => {
                return Err(Error::Config(format!(
                    "grid.center must be 'matched' or 'nominal', got '{other}'"
                )))
            }
        }
        match self.filters.center.as_str() {
            "jsi-peak" | "explicit" => {}
            other => {
                return Err(Error::Config(format!(
                    "filters.center must be 'jsi-peak' or 'explicit', got '{other}'"
                )))
            }
        }
        if !(self.filters.sweep_min_m > 0.0 && self.filters.sweep_max_m > self.filters.sweep_min_m)
        {
            return Err(Error::Config("filters sweep range must be ascending".into()));
        }
        if self.filters.sweep_points < 2 || self.filters.sweep_grid_points < 2 {
            return Err(Error::Config("filters sweep needs >= 2 points".into()));
        }
        if !(self.poling.pump_sigma_rad_s > 0.0
            && self.poling.apodization_sigma_fraction > 0.0
            && self.poling.grid_points >= 2
            && self.poling.pmf_points >= 2)
        {
            return Err(Error::Config("poling section values must be positive".into()));
        }
        self.multiplex_params().validate()?;
        self.multiplex.channel_efficiencies.validate()?;
        if self.io.out_dir.is_empty() {
            return Err(Error::Config("io.out_dir must not be empty".into()));
        }
        Ok(())
    }

    pub fn crystal_spec(&self) -> Result<CrystalSpec> {
        let model = self
            .dispersion
            .get(&self.crystal.dispersion)
            .ok_or_else(|| {
                Error::Config(format!(
                    "crystal.dispersion references unknown set '{}'",
                    self.crystal.dispersion
                ))
            })?;
        let spec = CrystalSpec {
            length_m: self.crystal.length_m,
            poling_period_m: self.crystal.poling_period_m,
            qpm_order: self.crystal.qpm_order,
            chi2_eff: self.crystal.chi2_eff_m_per_v,
            efficiency_factor: self.crystal.efficiency_factor,
            pump_axis: self.crystal.pump_axis.clone(),
            signal_axis: self.crystal.signal_axis.clone(),
            idler_axis: self.crystal.idler_axis.clone(),
            dispersion: Arc::new(model.clone()),
            temperature_c: self.crystal.temperature_c,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn pump_spec(&self) -> Result<PumpSpec> {
        let pump = PumpSpec {
            center_wavelength_m: self.pump.center_wavelength_m,
            intensity_fwhm_m: self.pump.intensity_fwhm_m,
            mean_photon_number: self.pump.mean_photon_number,
        };
        pump.validate()?;
        Ok(pump)
    }

    pub fn beam_geometry(&self) -> Result<BeamGeometry> {
        let b = &self.beams;
        let geom = match b.kind.as_str() {
            "waists" => BeamGeometry::Waists {
                w_p: b.w_p_m.ok_or_else(|| missing("beams.w_p_m"))?,
                w_s: b.w_s_m.ok_or_else(|| missing("beams.w_s_m"))?,
                w_i: b.w_i_m.ok_or_else(|| missing("beams.w_i_m"))?,
            },
            "focal" => BeamGeometry::Focal {
                xi_p: b.xi_p.ok_or_else(|| missing("beams.xi_p"))?,
                xi_s: b.xi_s.ok_or_else(|| missing("beams.xi_s"))?,
                xi_i: b.xi_i.ok_or_else(|| missing("beams.xi_i"))?,
            },
            other => {
                return Err(Error::Config(format!(
                    "beams.kind must be 'waists' or 'focal', got '{other}'"
                )))
            }
        };
        geom.validate()?;
        Ok(geom)
    }

    /// Grid center frequencies: the quasi-phase-matched point on the pump
    /// line, or the nominal pair.
    pub fn grid_center(&self, spec: &CrystalSpec, pump: &PumpSpec) -> Result<(f64, f64)> {
        let nominal_s = omega_of_wavelength(self.grid.nominal_signal_m);
        let nominal_i = omega_of_wavelength(self.grid.nominal_idler_m);
        match self.grid.center.as_str() {
            "nominal" => Ok((nominal_s, nominal_i)),
            _ => {
                let hint = self.grid.nominal_signal_m;
                let mut half = 40e-9;
                loop {
                    match spec.matched_wavelengths(pump.omega0(), hint - half, hint + half) {
                        Ok((ls, li)) => {
                            return Ok((omega_of_wavelength(ls), omega_of_wavelength(li)))
                        }
                        Err(_) if half < 200e-9 => half += 40e-9,
                        Err(e) => return Err(e),
                    }
                }
            }
        }
    }

    /// Evaluation grid per the `[grid]` section.
    pub fn frequency_grid(&self, spec: &CrystalSpec, pump: &PumpSpec) -> Result<FrequencyGrid> {
        let (cs, ci) = self.grid_center(spec, pump)?;
        let half = self.grid.span_pump_fwhm * pump.fwhm_omega();
        FrequencyGrid::centered(cs, ci, half, self.grid.points)
    }

    /// Same extents with a different point count (filter sweeps).
    pub fn frequency_grid_with_points(
        &self,
        spec: &CrystalSpec,
        pump: &PumpSpec,
        points: usize,
    ) -> Result<FrequencyGrid> {
        let (cs, ci) = self.grid_center(spec, pump)?;
        let half = self.grid.span_pump_fwhm * pump.fwhm_omega();
        FrequencyGrid::centered(cs, ci, half, points)
    }

    pub fn work_zone(&self) -> WorkZone {
        WorkZone {
            head_dead: self.multiplex.head_dead,
            tail_dead: self.multiplex.tail_dead,
            final_bin_doubled: self.multiplex.final_bin_doubled,
        }
    }

    pub fn multiplex_params(&self) -> MultiplexParams {
        MultiplexParams {
            mu: self.multiplex.mu,
            eta_herald: self.multiplex.eta_herald,
            eta_sl: self.multiplex.eta_sl,
            bins: self.multiplex.bins,
            pulse_period_s: self.multiplex.pulse_period_s,
            work_zone: self.work_zone(),
        }
    }
}

fn missing(key: &str) -> Error {
    Error::Config(format!("missing key '{key}' for the selected beams.kind"))
}
