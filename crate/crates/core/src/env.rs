//! The per-slot tracking and communication pipeline.
//!
//! Each slot, every live target gets the dwell it was allocated: the beam
//! is steered to the predicted azimuth, the echo SNR sets the measurement
//! noise, and the filter is updated when an echo exists. The remaining time
//! is spent transmitting toward the updated azimuth estimates. Afterwards
//! the world moves on by one revisit interval.

use std::f64::consts::FRAC_PI_2;

use crate::comms::{communication_time, link_efficiency};
use crate::config::RunConfig;
use crate::ekf::{azimuth_variance_mc, predict, update_iterated, Belief};
use crate::error::{IsacError, Result};
use crate::linalg::Mat4;
use crate::rng::{stream, SimRng, Stream};
use crate::scenario::{Scenario, StepEvents, World};
use crate::sensing::{
    beam_misalignment_loss, loss_from_error, measurement_noise_variances, observe, snr,
};

/// Filter state of one tracked target.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Track {
    pub belief: Belief,
    /// Set for the slot in which the track was initiated; that slot skips the
    /// time update.
    fresh: bool,
}

/// Which position the azimuth-spread estimate is centred on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    /// Centred on the true position.
    Training,
    /// Centred on the estimated position.
    Evaluation,
}

/// Everything that happened in one slot, indexed by target slot.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotOutcome {
    pub slot: u64,
    pub live: usize,
    pub dwell_fractions: Vec<f64>,
    pub dwell_sum: f64,
    pub tau_c: f64,
    /// Realized sum rate: true distances, true beam misalignment.
    pub sum_rate: f64,
    pub rates: Vec<f64>,
    /// Rate seen by the learner: azimuth spread in place of the misalignment.
    pub reward_rate: f64,
    pub distances: Vec<f64>,
    /// Azimuth standard deviation after this slot's update (rad).
    pub sigma_theta: Vec<f64>,
}

/// What the agents see before deciding: last slot's azimuth variances and
/// dwell fractions, zero for empty slots.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub azimuth_vars: Vec<f64>,
    pub prev_dwells: Vec<f64>,
}

impl Snapshot {
    pub fn empty(n: usize) -> Self {
        Self {
            azimuth_vars: vec![0.0; n],
            prev_dwells: vec![0.0; n],
        }
    }
}

pub struct Environment {
    cfg: RunConfig,
    phase: Phase,
    scenario: Scenario,
    world: World,
    tracks: Vec<Option<Track>>,
    snapshot: Snapshot,
    f: Mat4,
    q: Mat4,
    scenario_rng: SimRng,
    measurement_rng: SimRng,
    mc_rng: SimRng,
}

impl Environment {
    pub fn new(cfg: &RunConfig, scenario: Scenario, phase: Phase, seed: u64) -> Result<Self> {
        cfg.validate()?;
        let n = cfg.max_targets;
        if scenario.config().max_targets != n {
            return Err(IsacError::config("scenario capacity differs from max_targets"));
        }
        let motion = cfg.filter_motion();
        let mut env = Self {
            cfg: cfg.clone(),
            phase,
            scenario,
            world: World::new(n),
            tracks: vec![None; n],
            snapshot: Snapshot::empty(n),
            f: motion.transition(),
            q: motion.process_noise(),
            scenario_rng: stream(seed, Stream::Scenario),
            measurement_rng: stream(seed, Stream::Measurement),
            mc_rng: stream(seed, Stream::MonteCarlo),
        };
        let (world, events) = env.scenario.start(&mut env.scenario_rng)?;
        env.world = world;
        env.apply_events(&events)?;
        Ok(env)
    }

    pub fn config(&self) -> &RunConfig {
        &self.cfg
    }

    pub fn world(&self) -> &World {
        &self.world
    }

    pub fn track(&self, index: usize) -> Option<&Track> {
        self.tracks.get(index).and_then(Option::as_ref)
    }

    pub fn snapshot(&self) -> &Snapshot {
        &self.snapshot
    }

    pub fn n_slots(&self) -> usize {
        self.tracks.len()
    }

    /// Target slots with a live target, ascending.
    pub fn live_indices(&self) -> Vec<usize> {
        self.world.live().map(|(i, _)| i).collect()
    }

    /// Spawns a target outside the scenario's own arrivals.
    pub fn inject(&mut self, state: crate::motion::TargetState) -> Result<usize> {
        let idx = self.world.spawn(state)?;
        self.apply_events(&StepEvents {
            removed: Vec::new(),
            spawned: vec![idx],
        })?;
        Ok(idx)
    }

    /// Runs one slot with the given dwell fractions (one per target slot;
    /// entries of empty slots are ignored and reported as zero).
    pub fn step(&mut self, fractions: &[f64]) -> Result<SlotOutcome> {
        let n = self.n_slots();
        if fractions.len() != n {
            return Err(IsacError::DimensionMismatch {
                expected: n,
                got: fractions.len(),
            });
        }
        let t0 = self.cfg.t0;
        let radar = self.cfg.radar();
        let comm = self.cfg.comm();

        let mut out = SlotOutcome {
            slot: self.world.slot,
            live: 0,
            dwell_fractions: vec![0.0; n],
            dwell_sum: 0.0,
            tau_c: 0.0,
            sum_rate: 0.0,
            rates: vec![0.0; n],
            reward_rate: 0.0,
            distances: vec![0.0; n],
            sigma_theta: vec![0.0; n],
        };
        // (true distance, realized loss, reward distance, reward loss)
        let mut links = Vec::with_capacity(n);
        let live: Vec<(usize, crate::motion::TargetState)> =
            self.world.live().map(|(i, t)| (i, t.state)).collect();
        for (i, truth) in live {
            let frac = fractions[i];
            if !(0.0..=1.0).contains(&frac) {
                return Err(IsacError::config(format!("dwell fraction {frac} outside [0, 1]")));
            }
            let track = self.tracks[i]
                .as_mut()
                .expect("every live target carries a track");
            let prior = if track.fresh {
                track.fresh = false;
                track.belief
            } else {
                predict(&track.belief, &self.f, &self.q)
            };
            let tau = frac * t0;
            let s = snr(tau, truth.range(), truth.azimuth(), prior.azimuth(), &radar)?;
            track.belief = match measurement_noise_variances(s, &radar) {
                Ok(vars) => {
                    let z = observe(&truth, &vars, &mut self.measurement_rng);
                    update_iterated(&prior, &z, &vars, self.cfg.ekf_iterations).unwrap_or(prior)
                }
                Err(IsacError::NoMeasurement(_)) => prior,
                Err(e) => return Err(e),
            };
            let belief = track.belief;
            let center = match self.phase {
                Phase::Training => (truth.x, truth.y),
                Phase::Evaluation => belief.position(),
            };
            let var = azimuth_variance_mc(&belief, center, self.cfg.mc_samples, &mut self.mc_rng);
            let sigma = var.sqrt();

            out.live += 1;
            out.dwell_fractions[i] = frac;
            out.dwell_sum += tau;
            out.distances[i] = truth.range();
            out.sigma_theta[i] = sigma;
            self.snapshot.azimuth_vars[i] = var;
            let realized = beam_misalignment_loss(truth.azimuth(), belief.azimuth(), comm.beam_exponent);
            let reward_d = if self.cfg.reward_true_distance {
                truth.range()
            } else {
                belief.range().max(self.cfg.min_range)
            };
            let reward_loss = loss_from_error(sigma.min(FRAC_PI_2), comm.beam_exponent);
            links.push((i, truth.range(), realized, reward_d, reward_loss));
        }
        out.tau_c = communication_time(t0, out.dwell_sum);
        for &(i, d, loss, rd, rloss) in &links {
            let rate = out.tau_c * comm.bandwidth * link_efficiency(d, loss, &comm)?;
            out.rates[i] = rate;
            out.sum_rate += rate;
            out.reward_rate += out.tau_c * comm.bandwidth * link_efficiency(rd, rloss, &comm)?;
        }
        self.snapshot.prev_dwells.clone_from(&out.dwell_fractions);

        let events = self
            .scenario
            .step(&mut self.world, &self.cfg.truth_motion(), &mut self.scenario_rng)?;
        self.apply_events(&events)?;
        Ok(out)
    }

    /// Drops tracks of departed targets and initiates tracks for arrivals
    /// from a single detection at the reference dwell.
    fn apply_events(&mut self, events: &StepEvents) -> Result<()> {
        let radar = self.cfg.radar();
        for &i in &events.removed {
            self.tracks[i] = None;
            self.snapshot.azimuth_vars[i] = 0.0;
            self.snapshot.prev_dwells[i] = 0.0;
        }
        for &i in &events.spawned {
            let truth = self.world.target(i).expect("spawned slot is occupied").state;
            let s = snr(radar.tau0, truth.range(), 0.0, 0.0, &radar)?;
            let vars = measurement_noise_variances(s, &radar)?;
            let z = observe(&truth, &vars, &mut self.measurement_rng);
            let belief = Belief::from_detection(&z, &vars, self.cfg.init_velocity_var);
            let center = match self.phase {
                Phase::Training => (truth.x, truth.y),
                Phase::Evaluation => belief.position(),
            };
            self.snapshot.azimuth_vars[i] =
                azimuth_variance_mc(&belief, center, self.cfg.mc_samples, &mut self.mc_rng);
            self.snapshot.prev_dwells[i] = 0.0;
            self.tracks[i] = Some(Track { belief, fresh: true });
        }
        Ok(())
    }
}
