//! Shared per-slot state: binary decision matrices and the fleet snapshot.

use crate::channel::{Position2D, RadioParams};
use crate::error::{Error, Result};
use crate::lyapunov::LyapunovParams;
use crate::qoe::QoeParams;

/// Dense row-major 0/1 matrix used for content placement (J×N) and
/// content delivery (N×J).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BinaryMatrix {
    rows: usize,
    cols: usize,
    data: Vec<bool>,
}

impl BinaryMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![false; rows * cols],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> bool {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, value: bool) {
        self.data[r * self.cols + c] = value;
    }

    pub fn row_sum(&self, r: usize) -> usize {
        self.data[r * self.cols..(r + 1) * self.cols]
            .iter()
            .filter(|&&b| b)
            .count()
    }

    pub fn col_sum(&self, c: usize) -> usize {
        (0..self.rows).filter(|&r| self.get(r, c)).count()
    }

    pub fn count_ones(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }

    /// First column set in row `r`, if any.
    pub fn first_in_row(&self, r: usize) -> Option<usize> {
        (0..self.cols).find(|&c| self.get(r, c))
    }

    /// Every row and every column holds at least zero and at most one entry.
    pub fn is_partial_matching(&self) -> bool {
        (0..self.rows).all(|r| self.row_sum(r) <= 1) && (0..self.cols).all(|c| self.col_sum(c) <= 1)
    }

    /// Builds an N×J delivery matrix from a per-user serving UAV.
    pub fn from_servers(servers: &[Option<usize>], uavs: usize) -> Result<Self> {
        let mut m = Self::zeros(servers.len(), uavs);
        for (i, s) in servers.iter().enumerate() {
            if let Some(j) = *s {
                if j >= uavs {
                    return Err(Error::DimensionMismatch(format!(
                        "user {i} served by UAV {j} but only {uavs} UAVs exist"
                    )));
                }
                m.set(i, j, true);
            }
        }
        Ok(m)
    }

    /// Serving column of each row (delivery matrices only).
    pub fn servers(&self) -> Vec<Option<usize>> {
        (0..self.rows).map(|r| self.first_in_row(r)).collect()
    }
}

/// Positions and powers of the UAV fleet together with the user positions
/// observed at the start of a slot.
#[derive(Debug, Clone, PartialEq)]
pub struct FleetState {
    pub uavs: Vec<Position2D>,
    /// Transmit powers in mW, one per UAV.
    pub powers: Vec<f64>,
    pub users: Vec<Position2D>,
}

impl FleetState {
    pub fn validate(&self) -> Result<()> {
        if self.uavs.len() != self.powers.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} UAV positions but {} powers",
                self.uavs.len(),
                self.powers.len()
            )));
        }
        let finite = |p: &Position2D| p.x.is_finite() && p.y.is_finite();
        if !self.uavs.iter().all(finite) || !self.users.iter().all(finite) {
            return Err(Error::InvalidParameter("non-finite position".into()));
        }
        Ok(())
    }
}

/// Per-UAV power budget and motion limits (identical for every UAV).
#[derive(Debug, Clone, PartialEq)]
pub struct UavLimits {
    /// Long-run average total power budget `p̃` (mW).
    pub p_tilde_mw: f64,
    /// Instantaneous total power cap `p̂` (mW).
    pub p_hat_mw: f64,
    /// Circuit power `p^c` (mW).
    pub p_circuit_mw: f64,
    pub p_min_mw: f64,
    pub p_max_mw: f64,
    /// Largest flight distance per slot (m).
    pub e_max_m: f64,
    /// Minimum pairwise UAV separation (m).
    pub d_min_m: f64,
}

impl Default for UavLimits {
    fn default() -> Self {
        Self {
            p_tilde_mw: 450.0,
            p_hat_mw: 500.0,
            p_circuit_mw: 20.0,
            p_min_mw: 1.0,
            p_max_mw: 480.0,
            e_max_m: 250.0,
            d_min_m: 50.0,
        }
    }
}

impl UavLimits {
    /// Largest admissible transmit power: `min(p_max, p̂ − p^c)`.
    pub fn power_ceiling(&self) -> f64 {
        self.p_max_mw.min(self.p_hat_mw - self.p_circuit_mw)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p_min_mw > 0.0 && self.p_min_mw < self.power_ceiling()) {
            return Err(Error::InvalidParameter(format!(
                "power range [{}, {}] mW is empty",
                self.p_min_mw,
                self.power_ceiling()
            )));
        }
        if !(self.p_circuit_mw >= 0.0) || !(self.p_tilde_mw > 0.0) {
            return Err(Error::InvalidParameter(
                "circuit power and budget must be non-negative".into(),
            ));
        }
        if !(self.e_max_m > 0.0) || !(self.d_min_m >= 0.0) {
            return Err(Error::InvalidParameter(
                "e_max must be positive and d_min non-negative".into(),
            ));
        }
        Ok(())
    }
}

/// Every constant one slot of the controller needs.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkConfig {
    pub radio: RadioParams,
    pub qoe: QoeParams,
    pub lyapunov: LyapunovParams,
    pub limits: UavLimits,
    pub area_width_m: f64,
    pub area_height_m: f64,
    /// Cap on block-coordinate rounds per slot.
    pub r_max: usize,
    /// Relative objective change that ends the block-coordinate rounds.
    pub sca_tol: f64,
    pub solver_tol: f64,
    pub solver_max_iter: usize,
}

impl NetworkConfig {
    pub fn validate(&self) -> Result<()> {
        self.radio.validate()?;
        self.qoe.validate()?;
        self.lyapunov.validate()?;
        self.limits.validate()?;
        if !(self.area_width_m > 0.0 && self.area_height_m > 0.0) {
            return Err(Error::InvalidParameter(
                "area must have positive extent".into(),
            ));
        }
        if self.r_max == 0
            || self.solver_max_iter == 0
            || !(self.sca_tol > 0.0)
            || !(self.solver_tol > 0.0)
        {
            return Err(Error::InvalidParameter(
                "iteration caps and tolerances must be positive".into(),
            ));
        }
        Ok(())
    }

    pub fn contains(&self, p: &Position2D) -> bool {
        p.x >= 0.0 && p.x <= self.area_width_m && p.y >= 0.0 && p.y <= self.area_height_m
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn servers_round_trip() {
        let servers = vec![Some(1), None, Some(0)];
        let m = BinaryMatrix::from_servers(&servers, 2).unwrap();
        assert_eq!(m.servers(), servers);
        assert!(m.is_partial_matching());
        assert_eq!(m.count_ones(), 2);
    }

    #[test]
    fn double_use_of_a_column_is_not_a_matching() {
        let m = BinaryMatrix::from_servers(&[Some(0), Some(0)], 2).unwrap();
        assert!(!m.is_partial_matching());
    }

    #[test]
    fn out_of_range_server_rejected() {
        assert!(BinaryMatrix::from_servers(&[Some(3)], 2).is_err());
    }

    #[test]
    fn power_ceiling_respects_total_cap() {
        let mut l = UavLimits::default();
        assert_eq!(l.power_ceiling(), 480.0);
        l.p_circuit_mw = 40.0;
        assert_eq!(l.power_ceiling(), 460.0);
        l.p_min_mw = 470.0;
        assert!(l.validate().is_err());
    }
}
