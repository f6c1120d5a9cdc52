//! Domain engineering of the poled crystal: Gaussian target nonlinearity,
//! its erf-form cumulative phase-matching function, the discrete ±1 domain
//! structure, a greedy domain-orientation optimizer and plane-wave purity
//! evaluation from phase-matching functions.

use num_complex::Complex64;
use rayon::prelude::*;
use statrs::function::erf::erf;

use crate::dispersion::CrystalSpec;
use crate::error::{Error, Result};
use crate::grid::FrequencyGrid;
use crate::purity::{schmidt_from_matrix, SchmidtResult};

/// Piecewise-constant ±1 poling pattern with uniform domain width.
#[derive(Debug, Clone, PartialEq)]
pub struct PolingStructure {
    /// Domain width (m).
    pub domain_width_m: f64,
    /// Orientation of each domain, ±1.
    pub signs: Vec<i8>,
    /// Grating period Λ the structure was designed for (metadata).
    pub design_period_m: f64,
    /// Apodization width σ of the design target (metadata, m).
    pub design_sigma_m: f64,
}

impl PolingStructure {
    pub fn validate(&self) -> Result<()> {
        if !(self.domain_width_m > 0.0) {
            return Err(Error::InvalidParameter("domain width must be > 0".into()));
        }
        if self.signs.is_empty() {
            return Err(Error::InvalidParameter(
                "poling structure needs at least one domain".into(),
            ));
        }
        if self.signs.iter().any(|s| *s != 1 && *s != -1) {
            return Err(Error::InvalidParameter(
                "domain orientations must be +1 or -1".into(),
            ));
        }
        Ok(())
    }

    /// Total length L = M·ω_d.
    pub fn length_m(&self) -> f64 {
        self.domain_width_m * self.signs.len() as f64
    }

    /// Strictly alternating reference structure (+1 first).
    pub fn periodic(period_m: f64, length_m: f64) -> Self {
        let domain_width_m = 0.5 * period_m;
        let m = ((length_m / domain_width_m).round() as usize).max(1);
        PolingStructure {
            domain_width_m,
            signs: (0..m).map(|n| if n % 2 == 0 { 1 } else { -1 }).collect(),
            design_period_m: period_m,
            design_sigma_m: f64::INFINITY,
        }
    }

    /// Compact text serialization: key/value header plus a run-length
    /// encoded orientation sequence.
    pub fn to_text(&self) -> String {
        let mut rle = String::new();
        let mut iter = self.signs.iter().peekable();
        while let Some(&s) = iter.next() {
            let mut count = 1usize;
            while iter.peek() == Some(&&s) {
                iter.next();
                count += 1;
            }
            if !rle.is_empty() {
                rle.push(' ');
            }
            rle.push(if s > 0 { '+' } else { '-' });
            rle.push_str(&count.to_string());
        }
        format!(
            "poling-structure v1\ndomain_width_m = {}\ndomains = {}\nperiod_m = {}\nsigma_m = {}\nrle = {}\n",
            self.domain_width_m,
            self.signs.len(),
            self.design_period_m,
            self.design_sigma_m,
            rle
        )
    }

    /// Parse the `to_text` format. Strict: every key must be present, the
    /// run lengths must sum to `domains`, and unknown keys are rejected.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Data("empty poling structure file".into()))?;
        if header.trim() != "poling-structure v1" {
            return Err(Error::Data(format!(
                "unsupported poling structure header '{}'",
                header.trim()
            )));
        }
        let mut domain_width: Option<f64> = None;
        let mut domains: Option<usize> = None;
        let mut period: Option<f64> = None;
        let mut sigma: Option<f64> = None;
        let mut rle: Option<String> = None;
        for line in lines {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Data(format!("malformed line '{line}'")))?;
            let (key, value) = (key.trim(), value.trim());
            match key {
                "domain_width_m" => domain_width = Some(parse_f64(value)?),
                "domains" => {
                    domains = Some(
                        value
                            .parse::<usize>()
                            .map_err(|_| Error::Data(format!("bad domain count '{value}'")))?,
                    )
                }
                "period_m" => period = Some(parse_f64(value)?),
                "sigma_m" => sigma = Some(parse_f64(value)?),
                "rle" => rle = Some(value.to_string()),
                other => return Err(Error::Data(format!("unknown key '{other}'"))),
            }
        }
        let domain_width_m =
            domain_width.ok_or_else(|| Error::Data("missing domain_width_m".into()))?;
        let m = domains.ok_or_else(|| Error::Data("missing domains".into()))?;
        let rle = rle.ok_or_else(|| Error::Data("missing rle".into()))?;
        let mut signs = Vec::with_capacity(m);
        for token in rle.split_whitespace() {
            let (sign, count) = match token.as_bytes().first() {
                Some(b'+') => (1i8, &token[1..]),
                Some(b'-') => (-1i8, &token[1..]),
                _ => return Err(Error::Data(format!("bad RLE token '{token}'"))),
            };
            let count: usize = count
                .parse()
                .map_err(|_| Error::Data(format!("bad RLE count in '{token}'")))?;
            if count == 0 || count > 10_000_000 || signs.len() + count > 10_000_000 {
                return Err(Error::Data("unreasonable RLE run length".into()));
            }
            signs.extend(std::iter::repeat(sign).take(count));
        }
        if signs.len() != m {
            return Err(Error::Data(format!(
                "RLE expands to {} domains, header says {m}",
                signs.len()
            )));
        }
        let structure = PolingStructure {
            domain_width_m,
            signs,
            design_period_m: period.ok_or_else(|| Error::Data("missing period_m".into()))?,
            design_sigma_m: sigma.ok_or_else(|| Error::Data("missing sigma_m".into()))?,
        };
        structure.validate()?;
        Ok(structure)
    }
}

fn parse_f64(s: &str) -> Result<f64> {
    let v: f64 = s
        .parse()
        .map_err(|_| Error::Data(format!("bad float '{s}'")))?;
    if !v.is_finite() {
        return Err(Error::Data(format!("non-finite value '{s}'")));
    }
    Ok(v)
}

/// Gaussian-apodized carrier g(z) = exp(−(z−L/2)²/2σ²)·cos(2πz/Λ).
pub fn target_nonlinearity(z: f64, length: f64, sigma: f64, period: f64) -> f64 {
    let d = z - 0.5 * length;
    (-d * d / (2.0 * sigma * sigma)).exp() * (crate::constants::TWO_PI * z / period).cos()
}

/// Cumulative phase-matched response of the Gaussian target at
/// Δk = 2π/Λ:
/// φ(z) = (1/2L)·√(π/2)·σ·(erf((2z−L)/(2√2 σ)) + erf(L/(2√2 σ))).
pub fn target_pmf(z: f64, length: f64, sigma: f64) -> f64 {
    let s2 = 2.0_f64.sqrt();
    (0.5 / length)
        * (std::f64::consts::PI / 2.0).sqrt()
        * sigma
        * (erf((2.0 * z - length) / (2.0 * s2 * sigma)) + erf(length / (2.0 * s2 * sigma)))
}

/// Phase-matching function of a discrete structure at mismatch Δk:
/// φ(Δk) = (1/L)·((e^{iΔk ω} − 1)/(iΔk))·Σ_n s_n e^{iΔk n ω}.
/// The orientation matches φ(Δk) = (1/L)∫₀^L g(z) e^{iΔk z} dz for the
/// piecewise-constant g; a single +1 domain reduces to
/// ω·sinc(Δk ω/2)·e^{iΔk ω/2}/L.
pub fn discrete_pmf(structure: &PolingStructure, delta_k: f64) -> Complex64 {
    let w = structure.domain_width_m;
    let x = delta_k * w;
    // per-domain base factor (e^{iΔkω} − 1)/(iΔk); series for small Δkω
    let base = if x.abs() < 1e-5 {
        Complex64::new(
            w * (1.0 - x * x / 6.0),
            w * (x / 2.0 - x * x * x / 24.0),
        )
    } else {
        (Complex64::new(0.0, x).exp() - 1.0) / Complex64::new(0.0, delta_k)
    };
    let step = Complex64::new(0.0, x).exp();
    let mut phasor = Complex64::new(1.0, 0.0);
    let mut sum = Complex64::new(0.0, 0.0);
    for &s in &structure.signs {
        sum += phasor * s as f64;
        phasor *= step;
    }
    base * sum / structure.length_m()
}

/// PMF sampled on a Δk axis, with the peak response of the periodic
/// reference structure of identical geometry as normalization.
#[derive(Debug, Clone, serde::Serialize)]
pub struct PmfCurve {
    pub delta_k: Vec<f64>,
    pub values_re: Vec<f64>,
    pub values_im: Vec<f64>,
    /// |φ| of the alternating structure at its first-order peak.
    pub normalization: f64,
}

pub fn pmf_curve(structure: &PolingStructure, dk_min: f64, dk_max: f64, n: usize) -> PmfCurve {
    let periodic = PolingStructure {
        domain_width_m: structure.domain_width_m,
        signs: (0..structure.signs.len())
            .map(|k| if k % 2 == 0 { 1 } else { -1 })
            .collect(),
        design_period_m: 2.0 * structure.domain_width_m,
        design_sigma_m: f64::INFINITY,
    };
    let k_peak = std::f64::consts::PI / structure.domain_width_m;
    let normalization = discrete_pmf(&periodic, k_peak).norm();
    let delta_k: Vec<f64> = (0..n)
        .map(|i| dk_min + (dk_max - dk_min) * i as f64 / (n - 1) as f64)
        .collect();
    let values: Vec<Complex64> = delta_k
        .iter()
        .map(|&dk| discrete_pmf(structure, dk))
        .collect();
    PmfCurve {
        delta_k,
        values_re: values.iter().map(|z| z.re).collect(),
        values_im: values.iter().map(|z| z.im).collect(),
        normalization,
    }
}

/// Greedy domain-orientation optimizer.
///
/// Domain width is fixed at Λ/2. Walking the crystal one domain at a time,
/// each orientation is chosen so that the accumulated first-order response
/// best tracks the erf target, which is rescaled so its final value equals
/// the periodic structure's first-order amplitude (2/π)·ω_d·M/L and
/// compared along the constant phase of the partial sums. Ties pick +1.
pub fn optimize_domains(length: f64, period: f64, sigma: f64) -> Result<PolingStructure> {
    if !(length > 0.0 && period > 0.0 && sigma > 0.0) {
        return Err(Error::InvalidParameter(
            "optimize_domains needs positive length, period and sigma".into(),
        ));
    }
    let domain_width = 0.5 * period;
    let m = ((length / domain_width).round() as usize).max(1);
    let l_actual = domain_width * m as f64;
    let target_end = target_pmf(l_actual, l_actual, sigma);
    if !(target_end > 0.0) {
        return Err(Error::InvalidParameter(
            "degenerate erf target: zero final amplitude".into(),
        ));
    }
    // rescale factor: target(z=L) -> (2/π)·ω_d·M/L = 2/π
    let scale = (2.0 / std::f64::consts::PI) / target_end;
    let delta = 2.0 * domain_width / (std::f64::consts::PI * l_actual);
    let mut signs = Vec::with_capacity(m);
    let mut acc = 0.0f64; // Σ (−1)^n s_n so far
    for n in 0..m {
        let z_next = (n + 1) as f64 * domain_width;
        let tau = target_pmf(z_next, l_actual, sigma) * scale;
        let parity = if n % 2 == 0 { 1.0 } else { -1.0 };
        let err_plus = ((acc + parity) * delta - tau).abs();
        let err_minus = ((acc - parity) * delta - tau).abs();
        if err_plus <= err_minus {
            signs.push(1);
            acc += parity;
        } else {
            signs.push(-1);
            acc -= parity;
        }
    }
    Ok(PolingStructure {
        domain_width_m: domain_width,
        signs,
        design_period_m: period,
        design_sigma_m: sigma,
    })
}

/// Plane-wave PMF source for purity evaluation.
pub enum PmfProvider<'a> {
    /// φ(Δk) of a discrete poling structure.
    Discrete(&'a PolingStructure),
    /// φ ≡ 1 (separability check: the pump-only amplitude is rank 1).
    Unit,
}

impl PmfProvider<'_> {
    fn eval(&self, delta_k: f64) -> Complex64 {
        match self {
            PmfProvider::Discrete(s) => discrete_pmf(s, delta_k),
            PmfProvider::Unit => Complex64::new(1.0, 0.0),
        }
    }
}

/// Plane-wave purity of ψ(ω_s, ω_i) = α(ω_s+ω_i)·φ(Δk(ω_s, ω_i)) with the
/// pump envelope α = exp(−(ω_p−ω_p0)²/σ²). Δk comes from the same
/// dispersion model as the full JSA path.
pub fn purity_from_pmf(
    spec: &CrystalSpec,
    pump_center_omega: f64,
    pump_sigma: f64,
    pmf: &PmfProvider<'_>,
    grid: &FrequencyGrid,
) -> Result<SchmidtResult> {
    let n_i = grid.len_i();
    let rows: Vec<Result<Vec<Complex64>>> = grid
        .omega_s
        .par_iter()
        .map(|&ws| {
            let mut row = Vec::with_capacity(n_i);
            for &wi in &grid.omega_i {
                let dk = spec.delta_k(ws, wi)?;
                let d = ws + wi - pump_center_omega;
                let alpha = (-d * d / (pump_sigma * pump_sigma)).exp();
                row.push(pmf.eval(dk) * alpha);
            }
            Ok(row)
        })
        .collect();
    let mut amplitude = Vec::with_capacity(grid.len_s() * n_i);
    for row in rows {
        amplitude.extend(row?);
    }
    schmidt_from_matrix(&amplitude, grid.len_s(), n_i)
}

/// Default evaluation grid for plane-wave purity: centered on the
/// quasi-phase-matched point of the pump line, wide enough for the pump
/// band and the first PMF side lobes.
pub fn poling_grid(
    spec: &CrystalSpec,
    pump_center_omega: f64,
    pump_sigma: f64,
    length_m: f64,
    n: usize,
) -> Result<FrequencyGrid> {
    use crate::constants::{wavelength_of_omega, SPEED_OF_LIGHT};
    use crate::dispersion::Channel;
    let lam_deg = wavelength_of_omega(0.5 * pump_center_omega);
    let mut bracket = 50e-9;
    let (ws_star, wi_star) = loop {
        match spec.matched_wavelengths(pump_center_omega, lam_deg - bracket, lam_deg + bracket) {
            Ok((ls, li)) => {
                break (
                    crate::constants::omega_of_wavelength(ls),
                    crate::constants::omega_of_wavelength(li),
                )
            }
            Err(_) if bracket < 200e-9 => bracket += 50e-9,
            Err(e) => return Err(e),
        }
    };
    let ng_s = spec.group_index(Channel::Signal, ws_star)?;
    let ng_i = spec.group_index(Channel::Idler, wi_star)?;
    let grad = ((ng_s - ng_i) / SPEED_OF_LIGHT).abs().max(1e-16);
    let lobe_extent = 10.0 * crate::constants::TWO_PI / (length_m * grad);
    let half = (4.0 * pump_sigma).max(lobe_extent);
    FrequencyGrid::new(
        ws_star - half,
        ws_star + half,
        n,
        wi_star - half,
        wi_star + half,
        n,
    )
}

/// Purity landscape over pump spectral widths and crystal lengths.
#[derive(Debug, Clone, serde::Serialize)]
pub struct PurityLandscape {
    pub pump_sigmas: Vec<f64>,
    pub lengths_m: Vec<f64>,
    /// Row-major purity values, row = pump-sigma index; NaN where a cell
    /// failed (error recorded in `cell_errors`).
    pub purity: Vec<f64>,
    pub cell_errors: Vec<(usize, usize, String)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StructureKind {
    Periodic,
    Optimized,
}

/// Evaluate the plane-wave purity per (σ_p, L) cell; `Optimized` re-runs
/// the domain optimizer for every length with σ_apod = `apod_fraction`·L.
pub fn purity_landscape(
    spec: &CrystalSpec,
    pump_center_omega: f64,
    pump_sigmas: &[f64],
    lengths_m: &[f64],
    kind: StructureKind,
    apod_fraction: f64,
    grid_n: usize,
) -> PurityLandscape {
    let cells: Vec<(usize, usize)> = (0..pump_sigmas.len())
        .flat_map(|r| (0..lengths_m.len()).map(move |c| (r, c)))
        .collect();
    let results: Vec<((usize, usize), Result<f64>)> = cells
        .par_iter()
        .map(|&(r, c)| {
            let sigma_p = pump_sigmas[r];
            let length = lengths_m[c];
            let value = (|| -> Result<f64> {
                let structure = match kind {
                    StructureKind::Periodic => {
                        PolingStructure::periodic(spec.poling_period_m, length)
                    }
                    StructureKind::Optimized => optimize_domains(
                        length,
                        spec.poling_period_m,
                        apod_fraction * length,
                    )?,
                };
                let grid = poling_grid(spec, pump_center_omega, sigma_p, length, grid_n)?;
                Ok(purity_from_pmf(
                    spec,
                    pump_center_omega,
                    sigma_p,
                    &PmfProvider::Discrete(&structure),
                    &grid,
                )?
                .purity)
            })();
            ((r, c), value)
        })
        .collect();
    let mut purity = vec![f64::NAN; pump_sigmas.len() * lengths_m.len()];
    let mut cell_errors = Vec::new();
    for ((r, c), value) in results {
        match value {
            Ok(p) => purity[r * lengths_m.len() + c] = p,
            Err(e) => cell_errors.push((r, c, e.to_string())),
        }
    }
    PurityLandscape {
        pump_sigmas: pump_sigmas.to_vec(),
        lengths_m: lengths_m.to_vec(),
        purity,
        cell_errors,
    }
}
