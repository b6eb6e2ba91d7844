//! Flat run configuration: `key = value` lines, `#` comments, keys equal to
//! field names. Unspecified keys keep their defaults.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use crate::comms::CommConfig;
use crate::error::{IsacError, Result};
use crate::motion::MotionConfig;
use crate::scenario::ScenarioConfig;
use crate::sensing::RadarConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OptimizerKind {
    Sgd,
    Adam,
}

impl FromStr for OptimizerKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "sgd" => Ok(OptimizerKind::Sgd),
            "adam" => Ok(OptimizerKind::Adam),
            other => Err(format!("unknown optimizer `{other}` (expected sgd or adam)")),
        }
    }
}

impl fmt::Display for OptimizerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OptimizerKind::Sgd => "sgd",
            OptimizerKind::Adam => "adam",
        })
    }
}

macro_rules! run_config {
    ($( $(#[doc = $doc:literal])* $name:ident : $ty:ty = $default:expr ),* $(,)?) => {
        #[derive(Debug, Clone, PartialEq)]
        pub struct RunConfig {
            $( $(#[doc = $doc])* pub $name: $ty, )*
        }

        impl Default for RunConfig {
            fn default() -> Self {
                Self { $( $name: $default, )* }
            }
        }

        impl RunConfig {
            pub const KEYS: &'static [&'static str] = &[$( stringify!($name) ),*];

            /// Sets one field from its textual value.
            pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
                match key {
                    $( stringify!($name) => {
                        self.$name = value.parse::<$ty>().map_err(|e| {
                            IsacError::config(format!("{key}: cannot parse `{value}`: {e}"))
                        })?;
                    } )*
                    _ => return Err(IsacError::config(format!("unknown key `{key}`"))),
                }
                Ok(())
            }

            /// Every field as a `key = value` line, in declaration order.
            pub fn to_text(&self) -> String {
                let mut out = String::new();
                $( out.push_str(&format!("{} = {}\n", stringify!($name), self.$name)); )*
                out
            }
        }
    };
}

run_config! {
    /// Reference range noise variance (m²).
    sigma_r0_sq: f64 = 10.0,
    /// Reference azimuth noise variance (rad²).
    sigma_theta0_sq: f64 = 1e-4,
    /// Process noise intensity assumed by the tracking filter.
    sigma_w_sq: f64 = 5.0,
    /// Process noise intensity driving the true targets.
    truth_sigma_w_sq: f64 = 5.0,
    r0: f64 = 800.0,
    tau0: f64 = 2.0,
    /// Revisit interval T0 (s).
    t0: f64 = 3.0,
    tx_power: f64 = 1.0,
    noise_sigma: f64 = 0.1,
    d0: f64 = 500.0,
    bandwidth: f64 = 500.0,
    gamma: f64 = 0.9,
    batch_size: usize = 32,
    buffer_capacity: usize = 50_000,
    epsilon: f64 = 0.1,
    lambda0: f64 = 100.0,
    alpha: f64 = 10.0,
    snr0: f64 = 100.0,
    beam_exponent_track: f64 = 4.0,
    beam_exponent_comm: f64 = 4.0,
    pathloss_eta: f64 = 2.0,
    learning_rate: f64 = 1e-4,
    optimizer: OptimizerKind = OptimizerKind::Sgd,
    /// Train steps between target-network copies; 1 copies after every step.
    target_period: u64 = 500,
    /// Rewards are divided by this before they enter the replay buffer.
    reward_scale: f64 = 1000.0,
    mc_samples: usize = 1000,
    /// Relinearization passes of the filter's measurement update; 1 is the
    /// plain extended update.
    ekf_iterations: usize = 3,
    /// Appends a one-hot agent identifier to the state when false.
    omit_agent_id: bool = false,
    /// Azimuth variance that maps to feature value ln 2 (rad²).
    feature_var_ref: f64 = 1e-4,
    /// Dual value that maps to feature value 1.
    feature_lambda_ref: f64 = 100.0,
    /// Reward path uses the true instead of the estimated distance.
    reward_true_distance: bool = false,
    max_targets: usize = 4,
    max_age_slots: u64 = 3000,
    spawn_prob: f64 = 0.002,
    spawn_range_min: f64 = 200.0,
    spawn_range_max: f64 = 1500.0,
    spawn_speed_min: f64 = 5.0,
    spawn_speed_max: f64 = 30.0,
    min_range: f64 = 10.0,
    max_range: f64 = 2500.0,
    max_speed: f64 = 30.0,
    /// Targets present at slot 0 of a random scenario.
    initial_targets: usize = 4,
    /// Per-component velocity variance of a freshly initiated track (m²/s²).
    init_velocity_var: f64 = 200.0,
    /// Training length in slots.
    t_max_slots: u64 = 100_000,
    /// Evaluation episode length in slots.
    eval_slots: u64 = 7000,
    /// Number of seed-paired evaluation scenarios used by `compare`.
    eval_scenarios: usize = 10,
    seed: u64 = 0,
}

impl RunConfig {
    /// Parses `key = value` text on top of the defaults.
    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        let mut cfg = Self::default();
        cfg.apply_text(text, origin)?;
        Ok(cfg)
    }

    pub fn apply_text(&mut self, text: &str, origin: &str) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: String| IsacError::Parse {
                path: origin.to_string(),
                line: i + 1,
                msg,
            };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err(format!("expected `key = value`, got `{line}`")))?;
            self.set(key.trim(), value.trim()).map_err(|e| err(e.to_string()))?;
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| IsacError::io(path, e))?;
        Self::parse(&text, &path.display().to_string())
    }

    /// Applies a `key=value` override.
    pub fn apply_override(&mut self, assignment: &str) -> Result<()> {
        let (key, value) = assignment
            .split_once('=')
            .ok_or_else(|| IsacError::config(format!("override `{assignment}` is not key=value")))?;
        self.set(key.trim(), value.trim())
    }

    pub fn radar(&self) -> RadarConfig {
        RadarConfig {
            snr0: self.snr0,
            tau0: self.tau0,
            r0: self.r0,
            sigma_r0_sq: self.sigma_r0_sq,
            sigma_th0_sq: self.sigma_theta0_sq,
            beam_exponent: self.beam_exponent_track,
        }
    }

    pub fn comm(&self) -> CommConfig {
        CommConfig {
            bandwidth: self.bandwidth,
            tx_power: self.tx_power,
            noise_sigma: self.noise_sigma,
            ref_distance: self.d0,
            pathloss_eta: self.pathloss_eta,
            beam_exponent: self.beam_exponent_comm,
        }
    }

    /// Motion model assumed by the filter.
    pub fn filter_motion(&self) -> MotionConfig {
        MotionConfig {
            revisit_interval: self.t0,
            sigma_w_sq: self.sigma_w_sq,
        }
    }

    /// Motion model of the true targets.
    pub fn truth_motion(&self) -> MotionConfig {
        MotionConfig {
            revisit_interval: self.t0,
            sigma_w_sq: self.truth_sigma_w_sq,
        }
    }

    pub fn scenario(&self) -> ScenarioConfig {
        ScenarioConfig {
            max_targets: self.max_targets,
            max_age_slots: self.max_age_slots,
            spawn_prob_per_slot: self.spawn_prob,
            initial_targets: self.initial_targets,
            spawn_range: (self.spawn_range_min, self.spawn_range_max),
            spawn_speed: (self.spawn_speed_min, self.spawn_speed_max),
            t_max_slots: self.t_max_slots,
            min_range: self.min_range,
            max_range: self.max_range,
            max_speed: self.max_speed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.radar().validate()?;
        self.comm().validate()?;
        self.scenario().validate()?;
        let bad = |msg: &str| Err(IsacError::config(msg.to_string()));
        if !(self.t0 > 0.0) {
            return bad("t0 must be positive");
        }
        if !(self.sigma_w_sq >= 0.0 && self.truth_sigma_w_sq >= 0.0) {
            return bad("process noise intensities must be non-negative");
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return bad("gamma must be in [0, 1]");
        }
        if !(0.0..=1.0).contains(&self.epsilon) {
            return bad("epsilon must be in [0, 1]");
        }
        if self.batch_size == 0 || self.buffer_capacity < self.batch_size {
            return bad("need 0 < batch_size <= buffer_capacity");
        }
        if !(self.lambda0 >= 0.0 && self.alpha > 0.0) {
            return bad("need lambda0 >= 0 and alpha > 0");
        }
        if !(self.learning_rate > 0.0 && self.reward_scale > 0.0) {
            return bad("learning_rate and reward_scale must be positive");
        }
        if self.target_period == 0 {
            return bad("target_period must be at least 1");
        }
        if self.ekf_iterations == 0 {
            return bad("ekf_iterations must be at least 1");
        }
        if self.mc_samples < 2 {
            return bad("mc_samples must be at least 2");
        }
        if !(self.feature_var_ref > 0.0 && self.feature_lambda_ref > 0.0 && self.init_velocity_var > 0.0) {
            return bad("feature references and init_velocity_var must be positive");
        }
        if self.initial_targets > self.max_targets {
            return bad("initial_targets exceeds max_targets");
        }
        if self.eval_scenarios == 0 {
            return bad("eval_scenarios must be at least 1");
        }
        Ok(())
    }
}
