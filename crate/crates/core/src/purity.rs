//! Schmidt analysis of the discretized JSA, spectral filters and the
//! purity / heralding trade-off sweep.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::constants::wavelength_of_omega;
use crate::error::{Error, Result};
use crate::jsa::JsaResult;

/// Singular values below this fraction of the largest are treated as
/// numerical noise and truncated before the Schmidt number is formed.
const SINGULAR_VALUE_FLOOR: f64 = 1e-12;

/// Normalized Schmidt spectrum of a two-photon amplitude.
#[derive(Debug, Clone, serde::Serialize)]
pub struct SchmidtResult {
    /// λ_k, descending, Σλ_k = 1.
    pub coefficients: Vec<f64>,
    /// K = 1/Σλ_k².
    pub schmidt_number: f64,
    /// P = 1/K.
    pub purity: f64,
}

/// Schmidt decomposition by singular values of the amplitude matrix.
///
/// The singular values are obtained as eigenvalues of the Hermitian Gram
/// matrix of the smaller side; on the uniform grid the quadrature weights
/// are a global constant that cancels in the normalization.
pub fn schmidt_decompose(jsa: &JsaResult) -> Result<SchmidtResult> {
    schmidt_from_matrix(&jsa.amplitude, jsa.grid.len_s(), jsa.grid.len_i())
}

/// Decomposition of a raw row-major complex matrix.
pub fn schmidt_from_matrix(data: &[Complex64], rows: usize, cols: usize) -> Result<SchmidtResult> {
    if data.iter().all(|z| z.norm_sqr() == 0.0) {
        return Err(Error::DegenerateInput(
            "amplitude matrix is identically zero".into(),
        ));
    }
    let a = DMatrix::from_fn(rows, cols, |r, c| data[r * cols + c]);
    // Gram matrix on the smaller dimension keeps the eigenproblem compact.
    let gram = if rows <= cols {
        &a * a.adjoint()
    } else {
        a.adjoint() * &a
    };
    let eig = gram.symmetric_eigen();
    let mut ev: Vec<f64> = eig.eigenvalues.iter().map(|v| v.max(0.0)).collect();
    ev.sort_by(|x, y| y.total_cmp(x));
    let floor = ev[0] * SINGULAR_VALUE_FLOOR * SINGULAR_VALUE_FLOOR;
    ev.retain(|&v| v > floor);
    let total: f64 = ev.iter().sum();
    let coefficients: Vec<f64> = ev.iter().map(|v| v / total).collect();
    let sum_sq: f64 = coefficients.iter().map(|l| l * l).sum();
    let schmidt_number = 1.0 / sum_sq;
    Ok(SchmidtResult {
        coefficients,
        schmidt_number,
        purity: sum_sq,
    })
}

/// Spectral filter shapes (intensity transmission).
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FilterShape {
    Gaussian,
    Rectangular,
}

/// One interference filter; `fwhm_m` is the full width at half maximum of
/// the intensity transmission in wavelength units.
#[derive(Debug, Clone, Copy)]
pub struct FilterSpec {
    pub shape: FilterShape,
    pub center_m: f64,
    pub fwhm_m: f64,
}

impl FilterSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.fwhm_m > 0.0 && self.center_m > 0.0) {
            return Err(Error::InvalidParameter(
                "filter center and FWHM must be > 0".into(),
            ));
        }
        Ok(())
    }

    /// Intensity transmission T(λ) ∈ [0, 1].
    pub fn transmission(&self, lambda_m: f64) -> f64 {
        let d = lambda_m - self.center_m;
        match self.shape {
            FilterShape::Gaussian => (-4.0 * std::f64::consts::LN_2 * d * d
                / (self.fwhm_m * self.fwhm_m))
                .exp(),
            FilterShape::Rectangular => {
                if d.abs() <= 0.5 * self.fwhm_m {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

/// ψ′(ω_s, ω_i) = ψ·√T_s(λ_s)·√T_i(λ_i); amplitudes carry the square root
/// of the intensity transmission.
pub fn apply_filters(jsa: &JsaResult, f_s: &FilterSpec, f_i: &FilterSpec) -> Result<JsaResult> {
    f_s.validate()?;
    f_i.validate()?;
    let n_i = jsa.grid.len_i();
    let ts: Vec<f64> = jsa
        .grid
        .omega_s
        .iter()
        .map(|&w| f_s.transmission(wavelength_of_omega(w)).sqrt())
        .collect();
    let ti: Vec<f64> = jsa
        .grid
        .omega_i
        .iter()
        .map(|&w| f_i.transmission(wavelength_of_omega(w)).sqrt())
        .collect();
    let amplitude = jsa
        .amplitude
        .iter()
        .enumerate()
        .map(|(idx, z)| z * ts[idx / n_i] * ti[idx % n_i])
        .collect();
    Ok(JsaResult {
        grid: jsa.grid.clone(),
        amplitude,
        diagnostics: jsa.diagnostics,
    })
}

/// Normalized filtered heralding efficiency of one channel:
/// signal: ∫∫|ψ|²·T_s·T_i / ∫∫|ψ|²·T_i (idler symmetric). The uniform grid
/// weights cancel in the ratio.
pub fn filtered_heralding_ratio(
    jsa: &JsaResult,
    f_s: &FilterSpec,
    f_i: &FilterSpec,
    channel: crate::dispersion::Channel,
) -> Result<f64> {
    use crate::dispersion::Channel;
    f_s.validate()?;
    f_i.validate()?;
    let n_i = jsa.grid.len_i();
    let ts: Vec<f64> = jsa
        .grid
        .omega_s
        .iter()
        .map(|&w| f_s.transmission(wavelength_of_omega(w)))
        .collect();
    let ti: Vec<f64> = jsa
        .grid
        .omega_i
        .iter()
        .map(|&w| f_i.transmission(wavelength_of_omega(w)))
        .collect();
    let mut num = 0.0;
    let mut den = 0.0;
    for (idx, z) in jsa.amplitude.iter().enumerate() {
        let j = z.norm_sqr();
        let (r, c) = (idx / n_i, idx % n_i);
        num += j * ts[r] * ti[c];
        den += match channel {
            Channel::Signal => j * ti[c],
            Channel::Idler => j * ts[r],
            Channel::Pump => {
                return Err(Error::InvalidParameter(
                    "filtered heralding ratio expects signal or idler".into(),
                ))
            }
        };
    }
    if den == 0.0 {
        return Err(Error::DegenerateInput(
            "filtered heralding denominator is zero".into(),
        ));
    }
    Ok(num / den)
}

/// One row of the filter-width sweep.
#[derive(Debug, Clone, serde::Serialize)]
pub struct FilterSweepRow {
    pub fwhm_m: f64,
    /// Equivalent Gaussian width parameter σ = FWHM/(2√(2 ln 2)).
    pub sigma_m: f64,
    pub purity: Option<f64>,
    pub he_signal: Option<f64>,
    pub he_idler: Option<f64>,
    pub error: Option<String>,
}

/// Purity and normalized heralding efficiencies versus filter width; the
/// same FWHM is applied to both channels at the given centers.
pub fn purity_filter_sweep(
    jsa: &JsaResult,
    shape: FilterShape,
    center_s_m: f64,
    center_i_m: f64,
    fwhm_values_m: &[f64],
) -> Vec<FilterSweepRow> {
    use rayon::prelude::*;
    fwhm_values_m
        .par_iter()
        .map(|&w| {
            let f_s = FilterSpec {
                shape,
                center_m: center_s_m,
                fwhm_m: w,
            };
            let f_i = FilterSpec {
                shape,
                center_m: center_i_m,
                fwhm_m: w,
            };
            let sigma_m = w / (2.0 * (2.0 * std::f64::consts::LN_2).sqrt());
            let outcome = (|| -> Result<(f64, f64, f64)> {
                let filtered = apply_filters(jsa, &f_s, &f_i)?;
                let schmidt = schmidt_decompose(&filtered)?;
                let hs =
                    filtered_heralding_ratio(jsa, &f_s, &f_i, crate::dispersion::Channel::Signal)?;
                let hi =
                    filtered_heralding_ratio(jsa, &f_s, &f_i, crate::dispersion::Channel::Idler)?;
                Ok((schmidt.purity, hs, hi))
            })();
            match outcome {
                Ok((p, hs, hi)) => FilterSweepRow {
                    fwhm_m: w,
                    sigma_m,
                    purity: Some(p),
                    he_signal: Some(hs),
                    he_idler: Some(hi),
                    error: None,
                },
                Err(e) => FilterSweepRow {
                    fwhm_m: w,
                    sigma_m,
                    purity: None,
                    he_signal: None,
                    he_idler: None,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect()
}
