use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::channel::{dbm_to_mw, RadioParams};
use crate::error::{Error, Result};
use crate::lyapunov::LyapunovParams;
use crate::model::{NetworkConfig, UavLimits};
use crate::paoi::PaoiParams;
use crate::qoe::QoeParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algo {
    F2e2cp,
    Suwpc,
    Supc,
    Ctjo,
    Ctuc,
    Ctwuc,
}

impl Algo {
    pub const ALL: [Algo; 6] = [
        Algo::F2e2cp,
        Algo::Suwpc,
        Algo::Supc,
        Algo::Ctjo,
        Algo::Ctuc,
        Algo::Ctwuc,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algo::F2e2cp => "f2e2cp",
            Algo::Suwpc => "suwpc",
            Algo::Supc => "supc",
            Algo::Ctjo => "ctjo",
            Algo::Ctuc => "ctuc",
            Algo::Ctwuc => "ctwuc",
        }
    }
}

impl fmt::Display for Algo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algo {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algo::ALL
            .into_iter()
            .find(|a| a.name() == s.to_ascii_lowercase())
            .ok_or_else(|| Error::Config(format!("unknown algorithm `{s}`")))
    }
}

/// Every constant of one experiment. Field names double as config-file keys.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    // radio
    pub env_a: f64,
    pub env_b: f64,
    pub eta_los_db: f64,
    pub eta_nlos_db: f64,
    pub carrier_hz: f64,
    pub light_speed: f64,
    pub theta_th_deg: f64,
    pub noise_dbm_per_hz: f64,
    pub bandwidth_hz: f64,
    pub altitude_m: f64,
    // QoE
    pub max_latency_s: f64,
    pub backhaul_latency_s: f64,
    pub mos_threshold: f64,
    pub content_bits: f64,
    // UAV
    pub p_tilde_mw: f64,
    pub p_hat_mw: f64,
    pub p_circuit_mw: f64,
    pub p_min_mw: f64,
    pub p_max_mw: f64,
    pub e_max_m: f64,
    pub d_min_m: f64,
    // Lyapunov; `phi = None` means J/N
    pub v: f64,
    pub rho: f64,
    pub phi: Option<f64>,
    // preprocessing queue
    pub packet_bits: f64,
    pub n_c: u64,
    /// New-packet intensity as a fraction of `n_c`.
    pub arrival_load: f64,
    /// Interval at which the expected PAoI is reported.
    pub paoi_interval: usize,
    // scenario
    pub area_width_m: f64,
    pub area_height_m: f64,
    pub users: usize,
    pub uavs: usize,
    pub slots: usize,
    pub reps: usize,
    pub seed: u64,
    pub algo: Algo,
    pub r_max: usize,
    pub sca_tol: f64,
    pub solver_tol: f64,
    pub solver_max_iter: usize,
    pub user_speed: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let radio = RadioParams::default();
        Self {
            env_a: radio.env_a,
            env_b: radio.env_b,
            eta_los_db: radio.eta_los_db,
            eta_nlos_db: radio.eta_nlos_db,
            carrier_hz: radio.carrier_hz,
            light_speed: radio.light_speed,
            theta_th_deg: radio.theta_th_deg,
            noise_dbm_per_hz: -174.0,
            bandwidth_hz: radio.bandwidth_hz,
            altitude_m: radio.altitude_m,
            max_latency_s: 24.0,
            backhaul_latency_s: 5.0,
            mos_threshold: 0.6,
            content_bits: 150e6,
            p_tilde_mw: 450.0,
            p_hat_mw: 500.0,
            p_circuit_mw: 20.0,
            p_min_mw: 1.0,
            p_max_mw: 480.0,
            e_max_m: 250.0,
            d_min_m: 50.0,
            v: 0.01,
            rho: 0.1,
            phi: None,
            packet_bits: 40_000.0,
            // 1 Mbit/s preprocessor over 5000-byte packets
            n_c: 25,
            arrival_load: 0.5,
            paoi_interval: 50,
            area_width_m: 500.0,
            area_height_m: 500.0,
            users: 50,
            uavs: 4,
            slots: 500,
            reps: 15,
            seed: 1,
            algo: Algo::F2e2cp,
            r_max: 200,
            sca_tol: 1e-4,
            solver_tol: 1e-7,
            solver_max_iter: 500,
            user_speed: 1.0,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("invalid value `{value}` for `{key}`")))
}

impl ExperimentConfig {
    pub fn radio(&self) -> RadioParams {
        RadioParams {
            env_a: self.env_a,
            env_b: self.env_b,
            eta_los_db: self.eta_los_db,
            eta_nlos_db: self.eta_nlos_db,
            carrier_hz: self.carrier_hz,
            light_speed: self.light_speed,
            theta_th_deg: self.theta_th_deg,
            noise_psd_mw_per_hz: dbm_to_mw(self.noise_dbm_per_hz),
            bandwidth_hz: self.bandwidth_hz,
            altitude_m: self.altitude_m,
        }
    }

    pub fn phi(&self) -> f64 {
        self.phi
            .unwrap_or(self.uavs as f64 / self.users.max(1) as f64)
    }

    /// Validated physical configuration.
    pub fn network(&self) -> Result<NetworkConfig> {
        let radio = self.radio();
        let qoe = QoeParams::new(
            self.max_latency_s,
            self.backhaul_latency_s,
            self.mos_threshold,
            self.content_bits,
            &radio,
            self.p_max_mw,
        )?;
        let cfg = NetworkConfig {
            radio,
            qoe,
            lyapunov: LyapunovParams {
                v: self.v,
                rho: self.rho,
                phi: self.phi(),
            },
            limits: UavLimits {
                p_tilde_mw: self.p_tilde_mw,
                p_hat_mw: self.p_hat_mw,
                p_circuit_mw: self.p_circuit_mw,
                p_min_mw: self.p_min_mw,
                p_max_mw: self.p_max_mw,
                e_max_m: self.e_max_m,
                d_min_m: self.d_min_m,
            },
            area_width_m: self.area_width_m,
            area_height_m: self.area_height_m,
            r_max: self.r_max,
            sca_tol: self.sca_tol,
            solver_tol: self.solver_tol,
            solver_max_iter: self.solver_max_iter,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Preprocessing-queue model with a constant arrival intensity and
    /// uniform request probabilities.
    pub fn paoi(&self, slot_s: f64) -> PaoiParams {
        PaoiParams {
            packet_bits: self.packet_bits,
            content_bits: self.content_bits,
            n_c: self.n_c,
            vartheta_w: vec![self.arrival_load * self.n_c as f64; self.paoi_interval],
            request_prob: vec![1.0 / self.users.max(1) as f64; self.users],
            users: self.users,
            uavs: self.uavs,
            slot_s,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.users == 0 || self.uavs == 0 || self.slots == 0 || self.reps == 0 {
            return Err(Error::Config(
                "users, uavs, slots and reps must be positive".into(),
            ));
        }
        if !(self.user_speed >= 0.0) || !(self.arrival_load >= 0.0) {
            return Err(Error::Config(
                "user speed and arrival load must be non-negative".into(),
            ));
        }
        if self.paoi_interval < 2 {
            return Err(Error::Config("paoi_interval must be at least 2".into()));
        }
        self.network()?;
        self.paoi(1.0).validate()
    }

    /// Applies one `key = value` assignment.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value;
        match key {
            "env_a" => self.env_a = parse(key, v)?,
            "env_b" => self.env_b = parse(key, v)?,
            "eta_los_db" => self.eta_los_db = parse(key, v)?,
            "eta_nlos_db" => self.eta_nlos_db = parse(key, v)?,
            "carrier_hz" => self.carrier_hz = parse(key, v)?,
            "light_speed" => self.light_speed = parse(key, v)?,
            "theta_th_deg" => self.theta_th_deg = parse(key, v)?,
            "noise_dbm_per_hz" => self.noise_dbm_per_hz = parse(key, v)?,
            "bandwidth_hz" => self.bandwidth_hz = parse(key, v)?,
            "altitude_m" => self.altitude_m = parse(key, v)?,
            "max_latency_s" => self.max_latency_s = parse(key, v)?,
            "backhaul_latency_s" => self.backhaul_latency_s = parse(key, v)?,
            "mos_threshold" => self.mos_threshold = parse(key, v)?,
            "content_bits" => self.content_bits = parse(key, v)?,
            "p_tilde_mw" => self.p_tilde_mw = parse(key, v)?,
            "p_hat_mw" => self.p_hat_mw = parse(key, v)?,
            "p_circuit_mw" => self.p_circuit_mw = parse(key, v)?,
            "p_min_mw" => self.p_min_mw = parse(key, v)?,
            "p_max_mw" => self.p_max_mw = parse(key, v)?,
            "e_max_m" => self.e_max_m = parse(key, v)?,
            "d_min_m" => self.d_min_m = parse(key, v)?,
            "v" => self.v = parse(key, v)?,
            "rho" => self.rho = parse(key, v)?,
            "phi" => {
                self.phi = if v == "auto" {
                    None
                } else {
                    Some(parse(key, v)?)
                }
            }
            "packet_bits" => self.packet_bits = parse(key, v)?,
            "n_c" => self.n_c = parse(key, v)?,
            "arrival_load" => self.arrival_load = parse(key, v)?,
            "paoi_interval" => self.paoi_interval = parse(key, v)?,
            "area_width_m" => self.area_width_m = parse(key, v)?,
            "area_height_m" => self.area_height_m = parse(key, v)?,
            "users" => self.users = parse(key, v)?,
            "uavs" => self.uavs = parse(key, v)?,
            "slots" => self.slots = parse(key, v)?,
            "reps" => self.reps = parse(key, v)?,
            "seed" => self.seed = parse(key, v)?,
            "algo" => self.algo = v.parse()?,
            "r_max" => self.r_max = parse(key, v)?,
            "sca_tol" => self.sca_tol = parse(key, v)?,
            "solver_tol" => self.solver_tol = parse(key, v)?,
            "solver_max_iter" => self.solver_max_iter = parse(key, v)?,
            "user_speed" => self.user_speed = parse(key, v)?,
            _ => return Err(Error::Config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    /// Parses flat `key = value` text on top of the defaults. Blank lines and
    /// `#` comments are ignored; unknown keys are rejected.
    pub fn parse_str(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", n + 1)))?;
            cfg.set(key.trim(), value.trim().trim_matches('"'))
                .map_err(|e| Error::Config(format!("line {}: {e}", n + 1)))?;
        }
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse_str(&text)
    }
}
