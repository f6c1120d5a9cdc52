//! Analytic time-multiplexing probability model, work-zone variant with
//! Pockels-cell dead bins, and a Monte Carlo pulse-train simulator with
//! reproducible, worker-count-independent random streams.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Thermal pair-number distribution P(k) = μ^k/(μ+1)^{k+1}.
pub fn p_k(mu: f64, k: u32) -> f64 {
    mu.powi(k as i32) / (mu + 1.0).powi(k as i32 + 1)
}

/// Heralded single-pair probability per pulse, P(1) = μ/(μ+1)²·η.
pub fn heralded_single_prob(mu: f64, eta_herald: f64) -> f64 {
    mu / ((mu + 1.0) * (mu + 1.0)) * eta_herald
}

/// Probability of at least one herald in N bins: P_H = 1 − (1−p)^N.
pub fn p_heralded_basic(p: f64, n: u32) -> f64 {
    1.0 - (1.0 - p).powi(n as i32)
}

/// Closed geometric form of the multiplexed delivery probability over the
/// full bin range:
/// Σ_{k=1}^{N} P(1)·(1−P(1))^{N−k}·(1−η_sl)^{N−k+1}.
pub fn p_multiplexed(p1: f64, eta_sl: f64, n: u32) -> f64 {
    let q = (1.0 - p1) * (1.0 - eta_sl);
    let closed = if (1.0 - q).abs() < 1e-14 {
        p1 * (1.0 - eta_sl) * n as f64
    } else {
        p1 * (1.0 - eta_sl) * (1.0 - q.powi(n as i32)) / (1.0 - q)
    };
    debug_assert!((closed - p_multiplexed_direct(p1, eta_sl, n)).abs() < 1e-12);
    closed
}

/// Direct-sum route of the same quantity; the closed form must agree with
/// this to 1e-12 absolute.
pub fn p_multiplexed_direct(p1: f64, eta_sl: f64, n: u32) -> f64 {
    let mut total = 0.0;
    // ascending magnitude: k = 1 first
    for k in 1..=n {
        total += p1
            * (1.0 - p1).powi((n - k) as i32)
            * (1.0 - eta_sl).powi((n - k + 1) as i32);
    }
    total
}

/// Dead-bin layout of the storage cycle.
#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct WorkZone {
    /// Unstorable bins at the head of the cycle.
    pub head_dead: u32,
    /// Unstorable bins at the tail (the final bin may be re-enabled).
    pub tail_dead: u32,
    /// Re-enable the final bin via the doubled switch opening.
    pub final_bin_doubled: bool,
}

impl WorkZone {
    pub const NONE: WorkZone = WorkZone {
        head_dead: 0,
        tail_dead: 0,
        final_bin_doubled: false,
    };

    /// Storable bins in ascending order for a cycle of `n` bins.
    fn storable_bins(&self, n: u32) -> Vec<u32> {
        let mut bins: Vec<u32> = (self.head_dead + 1..=n - self.tail_dead).collect();
        if self.final_bin_doubled && self.tail_dead >= 1 {
            bins.push(n);
        }
        bins
    }
}

/// Both evaluation routes of the work-zone delivery probability.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct WorkZoneEval {
    /// Sum over the storable window (+ final bin when doubled): the herald
    /// kept is the last one among storable bins, heralds in dead bins are
    /// ignored.
    pub direct_sum: f64,
    /// Closed geometric form of the same window.
    pub closed_form: f64,
}

/// Delivery probability with dead bins: the photon of the last storable
/// herald survives one mandatory loop plus one per remaining bin,
/// (1−η_sl)^{N−k+1}.
pub fn p_multiplexed_work_zone(
    p1: f64,
    eta_sl: f64,
    n: u32,
    zone: WorkZone,
) -> Result<WorkZoneEval> {
    if n <= zone.head_dead + zone.tail_dead {
        return Err(Error::InvalidParameter(format!(
            "cycle of {n} bins has no storable window with {} + {} dead bins",
            zone.head_dead, zone.tail_dead
        )));
    }
    let bins = zone.storable_bins(n);
    let mut direct = 0.0;
    for (idx, &k) in bins.iter().enumerate() {
        let later = (bins.len() - 1 - idx) as i32;
        direct += p1 * (1.0 - p1).powi(later) * (1.0 - eta_sl).powi((n - k + 1) as i32);
    }

    // geometric closed form of the same window
    let q = (1.0 - p1) * (1.0 - eta_sl);
    let window = (n - zone.head_dead - zone.tail_dead) as i32;
    let extra = if zone.final_bin_doubled && zone.tail_dead >= 1 {
        1
    } else {
        0
    };
    let geo = if (1.0 - q).abs() < 1e-14 {
        window as f64
    } else {
        (1.0 - q.powi(window)) / (1.0 - q)
    };
    let closed_form = extra as f64 * p1 * (1.0 - eta_sl)
        + p1 * (1.0 - p1).powi(extra) * (1.0 - eta_sl).powi(zone.tail_dead as i32 + 1) * geo;

    Ok(WorkZoneEval {
        direct_sum: direct,
        closed_form,
    })
}

/// The printed five-dead-bin closed form with the doubled final bin:
/// P(1)(1−η) + P(1)(1−P(1))(1−η)⁶·((1−P(1))^{N−10}(1−η)^{N−10} − 1)/((1−P(1))(1−η) − 1).
pub fn work_zone_printed_form(p1: f64, eta_sl: f64, n: u32) -> Result<f64> {
    if n <= 10 {
        return Err(Error::InvalidParameter(
            "printed work-zone form needs more than 10 bins".into(),
        ));
    }
    let q = (1.0 - p1) * (1.0 - eta_sl);
    let tail = if (q - 1.0).abs() < 1e-14 {
        (n - 10) as f64
    } else {
        (q.powi(n as i32 - 10) - 1.0) / (q - 1.0)
    };
    Ok(p1 * (1.0 - eta_sl) + p1 * (1.0 - p1) * (1.0 - eta_sl).powi(6) * tail)
}

/// Per-pulse delivery probability without multiplexing: a pair is made in
/// the single bin and the photon passes the mandatory loop once,
/// P(1)|_{k=1}·(1−η_sl).
pub fn no_multiplexing_baseline(mu: f64, eta_sl: f64) -> f64 {
    p_k(mu, 1) * (1.0 - eta_sl)
}

/// Smallest cycle length at which the work-zone curve reaches the
/// no-multiplexing baseline.
pub fn baseline_crossing_bin(
    mu: f64,
    eta_herald: f64,
    eta_sl: f64,
    zone: WorkZone,
    n_max: u32,
) -> Result<Option<u32>> {
    let p1 = heralded_single_prob(mu, eta_herald);
    let baseline = no_multiplexing_baseline(mu, eta_sl);
    for n in zone.head_dead + zone.tail_dead + 1..=n_max {
        if p_multiplexed_work_zone(p1, eta_sl, n, zone)?.direct_sum >= baseline {
            return Ok(Some(n));
        }
    }
    Ok(None)
}

/// Full parameter set of the time-multiplexed source model.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct MultiplexParams {
    /// Mean pairs per pump pulse μ.
    pub mu: f64,
    /// Effective per-herald detection probability (mode overlap ×
    /// transmission × detector).
    pub eta_herald: f64,
    /// Loss per storage-loop round trip.
    pub eta_sl: f64,
    /// Bins per multiplexing cycle N.
    pub bins: u32,
    /// Pump pulse period (s); bookkeeping only.
    pub pulse_period_s: f64,
    pub work_zone: WorkZone,
}

impl MultiplexParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.mu >= 0.0) {
            return Err(Error::InvalidParameter("mu must be >= 0".into()));
        }
        for (name, v) in [("eta_herald", self.eta_herald), ("eta_sl", self.eta_sl)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidParameter(format!("{name} must lie in [0, 1]")));
            }
        }
        if self.bins < 1 {
            return Err(Error::InvalidParameter("bins must be >= 1".into()));
        }
        if self.bins <= self.work_zone.head_dead + self.work_zone.tail_dead {
            return Err(Error::InvalidParameter(
                "dead bins leave no storable window".into(),
            ));
        }
        Ok(())
    }

    pub fn p1(&self) -> f64 {
        heralded_single_prob(self.mu, self.eta_herald)
    }
}

/// Measured channel efficiencies folded into η_herald for experiment
/// comparison.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct ChannelEfficiencies {
    pub fiber_transmission: f64,
    pub detector_idler: f64,
    pub detector_signal: f64,
    pub raw_herald_h: f64,
    pub raw_herald_v: f64,
}

impl ChannelEfficiencies {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("fiber_transmission", self.fiber_transmission),
            ("detector_idler", self.detector_idler),
            ("detector_signal", self.detector_signal),
            ("raw_herald_h", self.raw_herald_h),
            ("raw_herald_v", self.raw_herald_v),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidParameter(format!("{name} must lie in [0, 1]")));
            }
        }
        Ok(())
    }

    /// η_herald = η_mode · η_t · η_d for a given intrinsic mode overlap.
    pub fn effective_herald(&self, eta_mode: f64) -> f64 {
        eta_mode * self.fiber_transmission * self.detector_idler
    }
}

/// Monte Carlo estimate with binomial standard error.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct SimResult {
    pub trials: u64,
    pub successes: u64,
    pub p_hat: f64,
    pub stderr: f64,
}

const SIM_CHUNK: u64 = 4096;

/// Simulate the pulse train: heralds are independent Bernoulli(P(1)) draws
/// over the N bins, the last herald in the storable window is kept and the
/// photon then survives each of its N−k+1 loops with probability 1−η_sl.
///
/// Trials are split into fixed-size chunks; chunk `c` consumes stream `c`
/// of a counter-based generator seeded by `seed`, so the result is
/// identical for a given seed regardless of how many workers run.
pub fn simulate_pulse_train(params: &MultiplexParams, trials: u64, seed: u64) -> Result<SimResult> {
    params.validate()?;
    simulate_pulse_train_p1(
        params.p1(),
        params.eta_sl,
        params.bins,
        params.work_zone,
        trials,
        seed,
    )
}

/// Simulator core on the herald probability itself.
pub fn simulate_pulse_train_p1(
    p1: f64,
    eta_sl: f64,
    bins: u32,
    zone: WorkZone,
    trials: u64,
    seed: u64,
) -> Result<SimResult> {
    if trials < 1 {
        return Err(Error::InvalidParameter("need at least one trial".into()));
    }
    if !(0.0..=1.0).contains(&p1) || !(0.0..=1.0).contains(&eta_sl) {
        return Err(Error::InvalidParameter(
            "p1 and eta_sl must lie in [0, 1]".into(),
        ));
    }
    let survive = 1.0 - eta_sl;
    let n = bins;
    let storable = zone.storable_bins(n);
    let storable_mask: Vec<bool> = (0..=n).map(|k| storable.binary_search(&k).is_ok()).collect();

    let chunks = trials.div_ceil(SIM_CHUNK);
    let successes: u64 = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c + 1);
            let in_chunk = SIM_CHUNK.min(trials - c * SIM_CHUNK);
            let mut hits = 0u64;
            for _ in 0..in_chunk {
                let mut last: Option<u32> = None;
                for k in 1..=n {
                    if rng.gen::<f64>() < p1 && storable_mask[k as usize] {
                        last = Some(k);
                    }
                }
                if let Some(k) = last {
                    let mut alive = true;
                    for _ in 0..(n - k + 1) {
                        if rng.gen::<f64>() >= survive {
                            alive = false;
                            break;
                        }
                    }
                    if alive {
                        hits += 1;
                    }
                }
            }
            hits
        })
        .sum();

    let p_hat = successes as f64 / trials as f64;
    Ok(SimResult {
        trials,
        successes,
        p_hat,
        stderr: (p_hat * (1.0 - p_hat) / trials as f64).sqrt(),
    })
}
