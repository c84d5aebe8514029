//! Air-to-ground channel: LoS probability, path loss, the LoS gain
//! approximation used by every optimization step, and Shannon rates under
//! co-channel interference.
//!
//! All UAVs hover at the same altitude `g`, so a link is fully described by
//! the horizontal user–UAV distance `r` and the 3D distance `sqrt(g² + r²)`.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::model::BinaryMatrix;

/// Horizontal coordinates in meters.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Position2D {
    pub x: f64,
    pub y: f64,
}

impl Position2D {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance_sq(&self, other: &Position2D) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }

    pub fn distance(&self, other: &Position2D) -> f64 {
        self.distance_sq(other).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RadioParams {
    /// Environment constant `a` of the LoS probability model.
    pub env_a: f64,
    /// Environment constant `b` of the LoS probability model.
    pub env_b: f64,
    pub eta_los_db: f64,
    pub eta_nlos_db: f64,
    pub carrier_hz: f64,
    pub light_speed: f64,
    /// Minimum elevation angle (degrees) for an approximately-LoS link.
    pub theta_th_deg: f64,
    /// Noise power spectral density in mW/Hz.
    pub noise_psd_mw_per_hz: f64,
    pub bandwidth_hz: f64,
    pub altitude_m: f64,
}

impl Default for RadioParams {
    /// Dense-urban environment at 4.9 GHz, 100 MHz, 200 m altitude.
    fn default() -> Self {
        Self {
            env_a: 27.23,
            env_b: 0.08,
            eta_los_db: 2.3,
            eta_nlos_db: 34.0,
            carrier_hz: 4.9e9,
            light_speed: 3.0e8,
            theta_th_deg: 70.0,
            noise_psd_mw_per_hz: dbm_to_mw(-174.0),
            bandwidth_hz: 100e6,
            altitude_m: 200.0,
        }
    }
}

/// Converts dBm (or dBm/Hz) to mW (or mW/Hz).
pub fn dbm_to_mw(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0)
}

impl RadioParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("env_a", self.env_a),
            ("env_b", self.env_b),
            ("carrier_hz", self.carrier_hz),
            ("light_speed", self.light_speed),
            ("noise_psd_mw_per_hz", self.noise_psd_mw_per_hz),
            ("bandwidth_hz", self.bandwidth_hz),
            ("altitude_m", self.altitude_m),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        if !(self.theta_th_deg > 0.0 && self.theta_th_deg < 90.0) {
            return Err(Error::InvalidParameter(format!(
                "theta_th_deg must lie in (0, 90), got {}",
                self.theta_th_deg
            )));
        }
        Ok(())
    }

    /// Carrier wavelength `c / f_c`.
    pub fn wavelength(&self) -> f64 {
        self.light_speed / self.carrier_hz
    }

    /// `G_LoS = 10^(-η_LoS/10)`.
    pub fn los_excess_gain(&self) -> f64 {
        10f64.powf(-self.eta_los_db / 10.0)
    }

    /// Distance-independent factor `G_LoS ς² / (16π²)` of the LoS gain.
    pub fn gain_constant(&self) -> f64 {
        let lambda = self.wavelength();
        self.los_excess_gain() * lambda * lambda / (16.0 * PI * PI)
    }

    /// Receiver noise power `σ² W` in mW.
    pub fn noise_power(&self) -> f64 {
        self.noise_psd_mw_per_hz * self.bandwidth_hz
    }
}

/// A linear channel gain together with the 3D distance it was computed at.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkGain {
    pub gain: f64,
    pub distance: f64,
}

/// Probability of a line-of-sight link at horizontal distance `r`.
pub fn los_probability(r: f64, radio: &RadioParams) -> f64 {
    let elevation_deg = (radio.altitude_m / r).atan().to_degrees();
    1.0 / (1.0 + radio.env_a * (-radio.env_b * (elevation_deg - radio.env_a)).exp())
}

/// Probability-weighted mean path loss (dB). Only used as a reference for
/// judging the LoS approximation; optimization uses [`los_gain`].
pub fn path_loss_db(r: f64, radio: &RadioParams) -> f64 {
    let pr = los_probability(r, radio);
    let d3 = (radio.altitude_m * radio.altitude_m + r * r).sqrt();
    20.0 * (4.0 * PI / radio.wavelength()).log10()
        + 20.0 * d3.log10()
        + pr * radio.eta_los_db
        + (1.0 - pr) * radio.eta_nlos_db
}

/// LoS channel gain at 3D distance `d3`.
pub fn los_gain(d3: f64, radio: &RadioParams) -> Result<LinkGain> {
    // allow for rounding in sqrt(g² + 0)
    if !(d3 >= radio.altitude_m * (1.0 - 1e-12)) {
        return Err(Error::BelowAltitude {
            distance: d3,
            altitude: radio.altitude_m,
        });
    }
    Ok(LinkGain {
        gain: radio.gain_constant() / (d3 * d3),
        distance: d3,
    })
}

/// LoS gain from a horizontal distance; never fails.
pub fn los_gain_horizontal(r: f64, radio: &RadioParams) -> f64 {
    let g = radio.altitude_m;
    radio.gain_constant() / (g * g + r * r)
}

/// Largest horizontal distance whose elevation angle still reaches `θ_th`,
/// i.e. `g / tan(θ_th)`.
pub fn los_coverage_radius(radio: &RadioParams) -> f64 {
    radio.altitude_m / radio.theta_th_deg.to_radians().tan()
}

/// N×J matrix of LoS gains `h_ij` between every user and every UAV.
pub fn gain_matrix(
    uavs: &[Position2D],
    users: &[Position2D],
    radio: &RadioParams,
) -> Vec<Vec<f64>> {
    users
        .iter()
        .map(|u| {
            uavs.iter()
                .map(|x| los_gain_horizontal(x.distance(u), radio))
                .collect()
        })
        .collect()
}

/// SINR-based spectral efficiency of user `i` served by UAV `j`, with every
/// other UAV interfering.
pub fn link_rate(gains_i: &[f64], powers: &[f64], j: usize, noise: f64) -> f64 {
    let interference: f64 = gains_i
        .iter()
        .zip(powers)
        .enumerate()
        .filter(|&(k, _)| k != j)
        .map(|(_, (h, p))| h * p)
        .sum();
    (1.0 + powers[j] * gains_i[j] / (noise + interference)).log2()
}

/// Per-user achievable rate in bps/Hz; zero for unassigned users.
pub fn achievable_rates(
    uavs: &[Position2D],
    users: &[Position2D],
    delivery: &BinaryMatrix,
    powers: &[f64],
    radio: &RadioParams,
) -> Result<Vec<f64>> {
    if delivery.rows() != users.len() || delivery.cols() != uavs.len() || powers.len() != uavs.len()
    {
        return Err(Error::DimensionMismatch(format!(
            "delivery {}x{}, {} users, {} UAVs, {} powers",
            delivery.rows(),
            delivery.cols(),
            users.len(),
            uavs.len(),
            powers.len()
        )));
    }
    let gains = gain_matrix(uavs, users, radio);
    let noise = radio.noise_power();
    Ok((0..users.len())
        .map(|i| {
            (0..uavs.len())
                .filter(|&j| delivery.get(i, j))
                .map(|j| link_rate(&gains[i], powers, j, noise))
                .sum()
        })
        .collect())
}
