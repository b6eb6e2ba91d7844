//! Multi-target scenarios: random or scripted arrivals, constant-velocity
//! evolution and age-based removal.
//!
//! Targets occupy a fixed number of slots; a new target takes the lowest free
//! slot, and the slot index doubles as the identity of the task deciding its
//! dwell time.

use std::f64::consts::PI;
use std::fs;
use std::path::Path;

use rand::Rng;

use crate::error::{IsacError, Result};
use crate::motion::{step_target, MotionConfig, TargetState};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScenarioConfig {
    pub max_targets: usize,
    /// Targets older than this many slots are removed.
    pub max_age_slots: u64,
    pub spawn_prob_per_slot: f64,
    /// Targets placed at slot 0 of a random scenario.
    pub initial_targets: usize,
    /// Spawn distance interval (m).
    pub spawn_range: (f64, f64),
    /// Spawn speed interval (m/s).
    pub spawn_speed: (f64, f64),
    pub t_max_slots: u64,
    /// Targets closer than this are turned around (m).
    pub min_range: f64,
    /// Targets beyond this have their outward radial velocity reversed (m).
    pub max_range: f64,
    /// Speeds above this are scaled back onto it after every step (m/s).
    pub max_speed: f64,
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(IsacError::config(msg));
        if self.max_targets < 1 {
            return bad("max_targets must be at least 1".into());
        }
        if !(0.0..=1.0).contains(&self.spawn_prob_per_slot) {
            return bad(format!("spawn_prob must be in [0, 1], got {}", self.spawn_prob_per_slot));
        }
        if self.initial_targets > self.max_targets {
            return bad(format!("{} initial targets exceed capacity {}", self.initial_targets, self.max_targets));
        }
        let (rmin, rmax) = self.spawn_range;
        if !(rmin > 0.0 && rmin <= rmax) {
            return bad(format!("spawn range [{rmin}, {rmax}] must satisfy 0 < min <= max"));
        }
        let (vmin, vmax) = self.spawn_speed;
        if !(vmin >= 0.0 && vmin <= vmax) {
            return bad(format!("spawn speed [{vmin}, {vmax}] must satisfy 0 <= min <= max"));
        }
        if !(self.min_range > 0.0 && self.min_range < self.max_range) {
            return bad("need 0 < min_range < max_range".into());
        }
        if !(self.max_speed > 0.0) {
            return bad("max_speed must be positive".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Target {
    pub id: u64,
    pub state: TargetState,
}

/// Live targets by slot.
#[derive(Debug, Clone, PartialEq)]
pub struct World {
    pub slot: u64,
    targets: Vec<Option<Target>>,
    next_id: u64,
}

/// Slot-level changes made by one scenario step.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StepEvents {
    /// Slot indices vacated this step.
    pub removed: Vec<usize>,
    /// Slot indices filled this step.
    pub spawned: Vec<usize>,
}

impl World {
    pub fn new(max_targets: usize) -> Self {
        Self {
            slot: 0,
            targets: vec![None; max_targets],
            next_id: 0,
        }
    }

    pub fn capacity(&self) -> usize {
        self.targets.len()
    }

    pub fn live_count(&self) -> usize {
        self.targets.iter().flatten().count()
    }

    pub fn target(&self, index: usize) -> Option<&Target> {
        self.targets.get(index).and_then(Option::as_ref)
    }

    /// `(slot index, target)` for every live target in slot order.
    pub fn live(&self) -> impl Iterator<Item = (usize, &Target)> {
        self.targets
            .iter()
            .enumerate()
            .filter_map(|(i, t)| t.as_ref().map(|t| (i, t)))
    }

    /// Places a target in the lowest free slot.
    pub fn spawn(&mut self, state: TargetState) -> Result<usize> {
        let free = self
            .targets
            .iter()
            .position(Option::is_none)
            .ok_or(IsacError::EnvironmentFull(self.capacity()))?;
        self.targets[free] = Some(Target {
            id: self.next_id,
            state,
        });
        self.next_id += 1;
        Ok(free)
    }

    pub fn remove_id(&mut self, id: u64) -> Option<usize> {
        let idx = self.targets.iter().position(|t| t.is_some_and(|t| t.id == id))?;
        self.targets[idx] = None;
        Some(idx)
    }

    /// Moves every target one revisit interval and removes the ones past
    /// `max_age_slots`.
    fn advance<R: Rng + ?Sized>(
        &mut self,
        cfg: &ScenarioConfig,
        motion: &MotionConfig,
        rng: &mut R,
    ) -> Vec<usize> {
        self.slot += 1;
        let mut removed = Vec::new();
        for (i, entry) in self.targets.iter_mut().enumerate() {
            let Some(t) = entry else { continue };
            t.state = confine(step_target(&t.state, motion, rng), cfg);
            if t.state.age_slots > cfg.max_age_slots {
                *entry = None;
                removed.push(i);
            }
        }
        removed
    }
}

/// Boundary rules applied after every motion step.
fn confine(mut s: TargetState, cfg: &ScenarioConfig) -> TargetState {
    let speed = s.speed();
    if speed > cfg.max_speed {
        let k = cfg.max_speed / speed;
        s.vx *= k;
        s.vy *= k;
    }
    let r = s.range();
    if r < cfg.min_range {
        s.vx = -s.vx;
        s.vy = -s.vy;
        if r == 0.0 {
            s.x = cfg.min_range;
        }
    } else if r > cfg.max_range {
        let (ux, uy) = (s.x / r, s.y / r);
        let radial = s.vx * ux + s.vy * uy;
        if radial > 0.0 {
            s.vx -= 2.0 * radial * ux;
            s.vy -= 2.0 * radial * uy;
        }
    }
    s
}

/// A fresh target: uniform distance and bearing, uniform speed and heading.
pub fn spawn_target<R: Rng + ?Sized>(cfg: &ScenarioConfig, rng: &mut R) -> TargetState {
    let uniform = |rng: &mut R, (lo, hi): (f64, f64)| if lo == hi { lo } else { rng.random_range(lo..hi) };
    let r = uniform(rng, cfg.spawn_range);
    let bearing = PI - rng.random_range(0.0..2.0 * PI);
    let speed = uniform(rng, cfg.spawn_speed);
    let heading = rng.random_range(-PI..PI);
    TargetState::new(r * bearing.cos(), r * bearing.sin(), speed * heading.cos(), speed * heading.sin())
}

/// One slot of random-arrival scenario evolution.
pub fn step_scenario<R: Rng + ?Sized>(
    world: &mut World,
    cfg: &ScenarioConfig,
    motion: &MotionConfig,
    rng: &mut R,
) -> StepEvents {
    let removed = world.advance(cfg, motion, rng);
    let spawned = random_arrival(world, cfg, rng).into_iter().collect();
    StepEvents { removed, spawned }
}

fn random_arrival<R: Rng + ?Sized>(world: &mut World, cfg: &ScenarioConfig, rng: &mut R) -> Option<usize> {
    let u: f64 = rng.random();
    if u < cfg.spawn_prob_per_slot && world.live_count() < world.capacity() {
        let s = spawn_target(cfg, rng);
        world.spawn(s).ok()
    } else {
        None
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Directive {
    Spawn { slot: u64, state: TargetState },
    Remove { slot: u64, target_id: u64 },
}

impl Directive {
    fn slot(&self) -> u64 {
        match *self {
            Directive::Spawn { slot, .. } | Directive::Remove { slot, .. } => slot,
        }
    }
}

/// Scripted arrivals and departures. Target ids count spawns from zero in
/// the order they occur.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Script {
    directives: Vec<Directive>,
}

impl Script {
    pub fn new(mut directives: Vec<Directive>) -> Self {
        // stable: same-slot directives keep file order
        directives.sort_by_key(Directive::slot);
        Self { directives }
    }

    pub fn directives(&self) -> &[Directive] {
        &self.directives
    }

    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        let mut out = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |msg: String| IsacError::Parse {
                path: origin.to_string(),
                line: i + 1,
                msg,
            };
            let fields: Vec<&str> = line.split_whitespace().collect();
            let num = |k: usize| -> Result<f64> {
                fields[k]
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| err(format!("bad number `{}`", fields[k])))
            };
            let int = |k: usize| -> Result<u64> {
                fields[k]
                    .parse::<u64>()
                    .map_err(|_| err(format!("bad integer `{}`", fields[k])))
            };
            match (fields[0], fields.len()) {
                ("spawn", 6) => {
                    let state = TargetState::new(num(2)?, num(3)?, num(4)?, num(5)?);
                    if state.range() == 0.0 {
                        return Err(err("target cannot spawn at the radar".into()));
                    }
                    out.push(Directive::Spawn { slot: int(1)?, state });
                }
                ("remove", 3) => out.push(Directive::Remove {
                    slot: int(1)?,
                    target_id: int(2)?,
                }),
                ("spawn", _) => return Err(err("expected `spawn <slot> <x> <y> <vx> <vy>`".into())),
                ("remove", _) => return Err(err("expected `remove <slot> <target_id>`".into())),
                (other, _) => return Err(err(format!("unknown directive `{other}`"))),
            }
        }
        Ok(Self::new(out))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| IsacError::io(path, e))?;
        Self::parse(&text, &path.display().to_string())
    }

    /// Applies this slot's directives.
    fn apply(&self, world: &mut World, events: &mut StepEvents) -> Result<()> {
        let slot = world.slot;
        for d in self.directives.iter().filter(|d| d.slot() == slot) {
            match *d {
                Directive::Spawn { state, .. } => events.spawned.push(world.spawn(state)?),
                Directive::Remove { target_id, .. } => {
                    if let Some(idx) = world.remove_id(target_id) {
                        events.removed.push(idx);
                        events.spawned.retain(|&s| s != idx);
                    }
                }
            }
        }
        Ok(())
    }
}

/// Where targets come from.
#[derive(Debug, Clone, PartialEq)]
pub enum Scenario {
    Random(ScenarioConfig),
    Scripted { cfg: ScenarioConfig, script: Script },
}

impl Scenario {
    pub fn config(&self) -> &ScenarioConfig {
        match self {
            Scenario::Random(cfg) | Scenario::Scripted { cfg, .. } => cfg,
        }
    }

    /// The world at slot 0, with slot-0 arrivals applied.
    pub fn start<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<(World, StepEvents)> {
        let cfg = self.config();
        let mut world = World::new(cfg.max_targets);
        let mut events = StepEvents::default();
        match self {
            Scenario::Random(cfg) => {
                for _ in 0..cfg.initial_targets {
                    let s = spawn_target(cfg, rng);
                    events.spawned.push(world.spawn(s)?);
                }
                events.spawned.extend(random_arrival(&mut world, cfg, rng));
            }
            Scenario::Scripted { script, .. } => script.apply(&mut world, &mut events)?,
        }
        Ok((world, events))
    }

    pub fn step<R: Rng + ?Sized>(
        &self,
        world: &mut World,
        motion: &MotionConfig,
        rng: &mut R,
    ) -> Result<StepEvents> {
        match self {
            Scenario::Random(cfg) => Ok(step_scenario(world, cfg, motion, rng)),
            Scenario::Scripted { cfg, script } => {
                let removed = world.advance(cfg, motion, rng);
                let mut events = StepEvents {
                    removed,
                    spawned: Vec::new(),
                };
                script.apply(world, &mut events)?;
                Ok(events)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    fn cfg() -> ScenarioConfig {
        ScenarioConfig {
            max_targets: 4,
            max_age_slots: 3000,
            spawn_prob_per_slot: 0.002,
            initial_targets: 0,
            spawn_range: (200.0, 1500.0),
            spawn_speed: (5.0, 30.0),
            t_max_slots: 1000,
            min_range: 10.0,
            max_range: 2500.0,
            max_speed: 30.0,
        }
    }

    fn still() -> MotionConfig {
        MotionConfig {
            revisit_interval: 3.0,
            sigma_w_sq: 0.0,
        }
    }

    /// Asymptotic Kolmogorov distribution tail P(K > x).
    fn kolmogorov_tail(x: f64) -> f64 {
        let mut p = 0.0;
        for k in 1..=100 {
            let k = k as f64;
            p += 2.0 * (-1f64).powf(k - 1.0) * (-2.0 * k * k * x * x).exp();
        }
        p.clamp(0.0, 1.0)
    }

    #[test]
    fn degenerate_spawn_intervals() {
        let mut c = cfg();
        c.spawn_range = (800.0, 800.0);
        c.spawn_speed = (0.0, 0.0);
        let s = spawn_target(&c, &mut seeded(2));
        assert!((s.range() - 800.0).abs() < 1e-9);
        assert_eq!((s.vx, s.vy, s.age_slots), (0.0, 0.0, 0));
    }

    #[test]
    fn spawn_distance_is_uniform() {
        let c = cfg();
        let mut rng = seeded(12);
        let n = 100_000;
        let mut d: Vec<f64> = (0..n).map(|_| spawn_target(&c, &mut rng).range()).collect();
        d.sort_by(f64::total_cmp);
        let (lo, hi) = c.spawn_range;
        let mut ks: f64 = 0.0;
        for (i, v) in d.iter().enumerate() {
            let f = (v - lo) / (hi - lo);
            ks = ks.max((f - i as f64 / n as f64).abs()).max(((i + 1) as f64 / n as f64 - f).abs());
        }
        let p = kolmogorov_tail(ks * (n as f64).sqrt());
        assert!(p > 0.001, "D = {ks}, p = {p}");
        let s = spawn_target(&c, &mut rng);
        assert!(s.range() > 0.0 && s.speed() >= 5.0 - 1e-9 && s.speed() <= 30.0 + 1e-9);
    }

    #[test]
    fn old_target_is_removed() {
        let c = cfg();
        let mut world = World::new(4);
        let mut s = TargetState::new(500.0, 0.0, 0.0, 0.0);
        s.age_slots = 3000;
        world.spawn(s).unwrap();
        let mut c0 = c;
        c0.spawn_prob_per_slot = 0.0;
        let ev = step_scenario(&mut world, &c0, &still(), &mut seeded(0));
        assert_eq!(ev.removed, vec![0]);
        assert_eq!(world.live_count(), 0);
    }

    #[test]
    fn empty_world_stays_empty() {
        let mut c = cfg();
        c.spawn_prob_per_slot = 0.0;
        let scen = Scenario::Random(c);
        let mut rng = seeded(1);
        let (mut w, _) = scen.start(&mut rng).unwrap();
        for _ in 0..1000 {
            scen.step(&mut w, &still(), &mut rng).unwrap();
            assert_eq!(w.live_count(), 0);
        }
    }

    #[test]
    fn capacity_is_respected() {
        let mut c = cfg();
        c.spawn_prob_per_slot = 1.0;
        let scen = Scenario::Random(c);
        let mut rng = seeded(1);
        let (mut w, _) = scen.start(&mut rng).unwrap();
        let mut reached = false;
        for _ in 0..100 {
            scen.step(&mut w, &still(), &mut rng).unwrap();
            assert!(w.live_count() <= 4);
            reached |= w.live_count() == 4;
        }
        assert!(reached);
    }

    #[test]
    fn fuzz_count_and_age_bounds() {
        let mut c = cfg();
        c.spawn_prob_per_slot = 0.05;
        c.max_age_slots = 300;
        let motion = MotionConfig {
            revisit_interval: 3.0,
            sigma_w_sq: 5.0,
        };
        let scen = Scenario::Random(c);
        let mut rng = seeded(77);
        let (mut w, ev) = scen.start(&mut rng).unwrap();
        let mut born: std::collections::HashMap<u64, u64> = Default::default();
        let record = |w: &World, spawned: &[usize], born: &mut std::collections::HashMap<u64, u64>| {
            for &i in spawned {
                born.insert(w.target(i).unwrap().id, w.slot);
            }
        };
        record(&w, &ev.spawned, &mut born);
        for _ in 0..100_000 {
            let ev = scen.step(&mut w, &motion, &mut rng).unwrap();
            record(&w, &ev.spawned, &mut born);
            assert!(w.live_count() <= 4);
            for (_, t) in w.live() {
                let b = born[&t.id];
                assert!(w.slot <= b + c.max_age_slots);
                assert_eq!(t.state.age_slots, w.slot - b);
                assert!(t.state.range() > 0.0);
            }
        }
    }

    #[test]
    fn seeded_runs_match() {
        let mut c = cfg();
        c.spawn_prob_per_slot = 0.02;
        let motion = MotionConfig {
            revisit_interval: 3.0,
            sigma_w_sq: 5.0,
        };
        let run = || {
            let scen = Scenario::Random(c);
            let mut rng = seeded(5);
            let (mut w, _) = scen.start(&mut rng).unwrap();
            for _ in 0..2000 {
                scen.step(&mut w, &motion, &mut rng).unwrap();
            }
            w
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn script_parse_and_run() {
        let text = "# two targets\n\
                    spawn 0 1000 0 0 0\n\
                    spawn 0 0 -300 1.5 0\n\
                    \n\
                    remove 2 0\n\
                    spawn 3 -500 10 0 0\n";
        let script = Script::parse(text, "test").unwrap();
        assert_eq!(script.directives().len(), 4);
        let scen = Scenario::Scripted {
            cfg: cfg(),
            script,
        };
        let mut rng = seeded(0);
        let (mut w, ev) = scen.start(&mut rng).unwrap();
        assert_eq!(ev.spawned, vec![0, 1]);
        scen.step(&mut w, &still(), &mut rng).unwrap();
        assert_eq!(w.target(1).unwrap().state.x, 4.5);
        let ev = scen.step(&mut w, &still(), &mut rng).unwrap();
        assert_eq!(ev.removed, vec![0]);
        let ev = scen.step(&mut w, &still(), &mut rng).unwrap();
        assert_eq!(ev.spawned, vec![0]);
        assert_eq!(w.target(0).unwrap().id, 2);
    }

    #[test]
    fn script_errors() {
        assert!(Script::parse("spawn 0 1 2 3\n", "s").is_err());
        assert!(Script::parse("teleport 0 1\n", "s").is_err());
        assert!(Script::parse("remove x 1\n", "s").is_err());
        assert!(Script::parse("spawn 0 0 0 1 1\n", "s").is_err());
        let five: String = (0..5).map(|i| format!("spawn 0 {} 0 0 0\n", 100 + i)).collect();
        let scen = Scenario::Scripted {
            cfg: cfg(),
            script: Script::parse(&five, "s").unwrap(),
        };
        assert!(matches!(scen.start(&mut seeded(0)), Err(IsacError::EnvironmentFull(4))));
    }

    #[test]
    fn boundaries_turn_targets_around() {
        let c = cfg();
        let s = confine(TargetState::new(5.0, 0.0, -2.0, 0.0), &c);
        assert_eq!((s.vx, s.vy), (2.0, 0.0));
        let s = confine(TargetState::new(2600.0, 0.0, 10.0, 3.0), &c);
        assert_eq!((s.vx, s.vy), (-10.0, 3.0));
        let s = confine(TargetState::new(100.0, 0.0, 60.0, 80.0), &c);
        assert!((s.speed() - 30.0).abs() < 1e-12);
    }
}
