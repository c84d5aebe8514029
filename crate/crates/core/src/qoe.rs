//! Latency-based MOS model and the rate thresholds it induces.
//!
//! Every latency is computed as `bits / (W · spectral efficiency)`, so rates
//! stay in bps/Hz everywhere else and the bandwidth enters only here.

use crate::channel::{LinkGain, RadioParams};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct QoeParams {
    /// Largest tolerable latency `D̂` (s).
    pub max_latency_s: f64,
    /// BS→UAV backhaul latency `D_ul` (s) paid by uncached files.
    pub backhaul_latency_s: f64,
    /// MOS threshold for the "very good" state, in (0, 1).
    pub mos_threshold: f64,
    /// Content file size `L` (bits).
    pub content_bits: f64,
    /// Spectral efficiency at maximum power directly below a UAV (bps/Hz).
    pub u_dl_max: f64,
    /// Slot duration `Δt` (s).
    pub slot_s: f64,
    pub bandwidth_hz: f64,
}

impl QoeParams {
    /// Derives `u_dl_max` from the radio and `Δt = D̂ − D_th (D̂ − L/(W u_dl_max))`.
    pub fn new(
        max_latency_s: f64,
        backhaul_latency_s: f64,
        mos_threshold: f64,
        content_bits: f64,
        radio: &RadioParams,
        p_max_mw: f64,
    ) -> Result<Self> {
        let u_max = u_dl_max(radio, p_max_mw);
        let min_latency = content_bits / (radio.bandwidth_hz * u_max);
        let q = Self {
            max_latency_s,
            backhaul_latency_s,
            mos_threshold,
            content_bits,
            u_dl_max: u_max,
            slot_s: max_latency_s - mos_threshold * (max_latency_s - min_latency),
            bandwidth_hz: radio.bandwidth_hz,
        };
        q.validate()?;
        Ok(q)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.u_dl_max > 0.0) || !(self.bandwidth_hz > 0.0) || !(self.content_bits > 0.0) {
            return Err(Error::InvalidParameter(
                "u_dl_max, bandwidth and content size must be positive".into(),
            ));
        }
        if !(self.max_latency_s > self.min_latency_s()) {
            return Err(Error::InvalidParameter(format!(
                "max latency {} s does not exceed the fastest delivery {} s",
                self.max_latency_s,
                self.min_latency_s()
            )));
        }
        if !(self.mos_threshold > 0.0 && self.mos_threshold < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "MOS threshold must lie in (0, 1), got {}",
                self.mos_threshold
            )));
        }
        if !(self.backhaul_latency_s >= 0.0) || !(self.slot_s > 0.0) {
            return Err(Error::InvalidParameter(
                "backhaul latency must be non-negative and the slot positive".into(),
            ));
        }
        Ok(())
    }

    /// Latency at `u_dl_max` for a cached file.
    pub fn min_latency_s(&self) -> f64 {
        self.content_bits / (self.bandwidth_hz * self.u_dl_max)
    }

    /// Latency budget left once the MOS threshold is met:
    /// `D̂ − D_th (D̂ − L/(W u_dl_max))`.
    fn latency_budget_s(&self) -> f64 {
        self.max_latency_s - self.mos_threshold * (self.max_latency_s - self.min_latency_s())
    }

    /// Required throughputs `(α, β)` in bits/s for cached and uncached files.
    pub fn rate_thresholds_bps(&self) -> Result<(f64, f64)> {
        Ok((
            required_rate(true, self)? * self.bandwidth_hz,
            required_rate(false, self)? * self.bandwidth_hz,
        ))
    }
}

/// Spectral efficiency of a user directly below a UAV transmitting at `p_max_mw`.
pub fn u_dl_max(radio: &RadioParams, p_max_mw: f64) -> f64 {
    let g = radio.altitude_m;
    (1.0 + p_max_mw * radio.gain_constant() / (g * g * radio.noise_power())).log2()
}

pub fn mos(latency_s: f64, q: &QoeParams) -> f64 {
    (q.max_latency_s - latency_s) / (q.max_latency_s - q.min_latency_s())
}

/// Time to deliver one file at `rate` (bps/Hz); uncached files also wait for
/// the backhaul.
pub fn edge_latency(rate: f64, cached: bool, q: &QoeParams) -> Result<f64> {
    if !(rate > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "edge latency undefined at rate {rate} (user unassigned)"
        )));
    }
    let air = q.content_bits / (q.bandwidth_hz * rate);
    Ok(if cached {
        air
    } else {
        q.backhaul_latency_s + air
    })
}

/// Smallest rate (bps/Hz) whose latency keeps the MOS at or above the threshold.
pub fn required_rate(cached: bool, q: &QoeParams) -> Result<f64> {
    let budget = q.latency_budget_s() - if cached { 0.0 } else { q.backhaul_latency_s };
    if !(budget > 0.0) {
        return Err(Error::UnreachableQoe(format!(
            "latency budget {budget} s leaves no time for transmission (cached = {cached})"
        )));
    }
    Ok(q.content_bits / (q.bandwidth_hz * budget))
}

/// Transmit power (mW) that delivers `rate_bits` (bits/s) over a link with
/// gain `gain` at fixed interference (mW). Exact inverse of the Shannon rate.
pub fn power_for_rate(
    rate_bits: f64,
    gain: &LinkGain,
    interference_mw: f64,
    radio: &RadioParams,
) -> f64 {
    let w = radio.bandwidth_hz;
    (2f64.powf(rate_bits / w) - 1.0) * (radio.noise_power() + interference_mw) / gain.gain
}
