//! Deterministic road excitation built from parametric obstacles.
//!
//! Obstacles are defined in the longitudinal coordinate `x` (m) relative to
//! their centre. A wheel crossing an obstacle centred at time `t_c` at speed
//! `v` sees `x = v·(t - t_c)`, so the road velocity is `v·z'(x)`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vehicle::{FcParams, ModelKind, Wheel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObstacleKind {
    RectangularCleat,
    CosineBump,
}

/// A bump or cleat of height `height`, longitudinal length `length` and
/// lateral width `width` (informational only).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Obstacle {
    pub kind: ObstacleKind,
    pub height: f64,
    pub length: f64,
    #[serde(default = "default_width")]
    pub width: f64,
}

fn default_width() -> f64 {
    1.0
}

impl Obstacle {
    pub fn cosine_bump(height: f64, length: f64) -> Self {
        Self {
            kind: ObstacleKind::CosineBump,
            height,
            length,
            width: default_width(),
        }
    }

    pub fn cleat(height: f64, length: f64) -> Self {
        Self {
            kind: ObstacleKind::RectangularCleat,
            height,
            length,
            width: default_width(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.height >= 0.0 && self.height.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "obstacle height must be >= 0, got {}",
                self.height
            )));
        }
        for (name, v) in [("length", self.length), ("width", self.width)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidConfig(format!("obstacle {name} must be > 0, got {v}")));
            }
        }
        Ok(())
    }

    fn on_support(&self, x: f64) -> bool {
        x.abs() < 0.5 * self.length
    }

    /// Profile height at longitudinal offset `x` from the obstacle centre.
    pub fn height_at(&self, x: f64) -> f64 {
        if !self.on_support(x) {
            return 0.0;
        }
        match self.kind {
            ObstacleKind::RectangularCleat => self.height,
            ObstacleKind::CosineBump => 0.5 * self.height * (1.0 + (2.0 * PI * x / self.length).cos()),
        }
    }

    /// `dz/dx`. The cleat's edges are steps and contribute 0.
    pub fn slope_at(&self, x: f64) -> f64 {
        if !self.on_support(x) {
            return 0.0;
        }
        match self.kind {
            ObstacleKind::RectangularCleat => 0.0,
            ObstacleKind::CosineBump => -(PI * self.height / self.length) * (2.0 * PI * x / self.length).sin(),
        }
    }
}

pub fn obstacle_height(obstacle: &Obstacle, x: f64) -> f64 {
    obstacle.height_at(x)
}

/// One obstacle passing under one wheel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoadEvent {
    pub wheel: Wheel,
    pub obstacle: Obstacle,
    pub center_time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoadScenario {
    pub speed: f64,
    pub duration: f64,
    pub wheels: Vec<Wheel>,
    pub events: Vec<RoadEvent>,
}

impl RoadScenario {
    pub fn flat(model: ModelKind, speed: f64, duration: f64) -> Self {
        Self {
            speed,
            duration,
            wheels: wheels_of(model),
            events: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.speed > 0.0 && self.speed.is_finite()) {
            return Err(Error::InvalidConfig(format!("road speed must be > 0, got {}", self.speed)));
        }
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "road duration must be > 0, got {}",
                self.duration
            )));
        }
        for e in &self.events {
            e.obstacle.validate()?;
            if !self.wheels.contains(&e.wheel) {
                return Err(Error::UnknownWheel(e.wheel));
            }
            if !(0.0..=self.duration).contains(&e.center_time) {
                return Err(Error::InvalidConfig(format!(
                    "event centre {} s lies outside [0, {}] s",
                    e.center_time, self.duration
                )));
            }
        }
        Ok(())
    }

    /// Road displacement and velocity under `wheel` at time `t`.
    pub fn road_signal(&self, wheel: Wheel, t: f64) -> Result<(f64, f64)> {
        if !self.wheels.contains(&wheel) {
            return Err(Error::UnknownWheel(wheel));
        }
        let mut z = 0.0;
        let mut dz = 0.0;
        for e in self.events.iter().filter(|e| e.wheel == wheel) {
            let x = self.speed * (t - e.center_time);
            z += e.obstacle.height_at(x);
            dz += self.speed * e.obstacle.slope_at(x);
        }
        Ok((z, dz))
    }

    /// Pre-sorted per-wheel event lists for repeated evaluation.
    pub fn profile(&self, wheel: Wheel) -> Result<WheelProfile> {
        if !self.wheels.contains(&wheel) {
            return Err(Error::UnknownWheel(wheel));
        }
        let events = self
            .events
            .iter()
            .filter(|e| e.wheel == wheel)
            .map(|e| {
                let half = 0.5 * e.obstacle.length / self.speed;
                (e.center_time - half, e.center_time + half, *e)
            })
            .collect();
        Ok(WheelProfile {
            speed: self.speed,
            events,
        })
    }

    /// Centre and trailing edge time of the event that ends last.
    pub fn last_event_window(&self) -> Option<(f64, f64)> {
        self.events
            .iter()
            .map(|e| (e.center_time, e.center_time + 0.5 * e.obstacle.length / self.speed))
            .max_by(|a, b| a.1.total_cmp(&b.1))
    }

    /// Same road with every event delayed by `delta` seconds.
    pub fn shifted(&self, delta: f64) -> Self {
        let mut s = self.clone();
        for e in &mut s.events {
            e.center_time += delta;
        }
        s
    }

    /// Left and right swapped.
    pub fn mirrored(&self) -> Self {
        let mut s = self.clone();
        for e in &mut s.events {
            e.wheel = e.wheel.mirrored();
        }
        s
    }

    /// Events of both scenarios on one road (same speed and duration as `self`).
    pub fn superposed(&self, other: &RoadScenario) -> Self {
        let mut s = self.clone();
        s.events.extend(other.events.iter().copied());
        s
    }

    /// Sample times `0, dt, …` up to the duration and `Zr` of each wheel.
    pub fn sample(&self, dt: f64) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
        let steps = step_count(self.duration, dt);
        let times: Vec<f64> = (0..=steps).map(|k| k as f64 * dt).collect();
        let mut columns = Vec::with_capacity(self.wheels.len());
        for &w in &self.wheels {
            let profile = self.profile(w)?;
            columns.push(times.iter().map(|&t| profile.eval(t).0).collect());
        }
        Ok((times, columns))
    }
}

/// Number of whole steps of `dt` that fit in `duration`, tolerant to rounding.
pub fn step_count(duration: f64, dt: f64) -> usize {
    ((duration / dt) + 1e-9).floor() as usize
}

pub fn wheels_of(model: ModelKind) -> Vec<Wheel> {
    match model {
        ModelKind::Qc => vec![Wheel::Single],
        ModelKind::Fc => Wheel::CORNERS.to_vec(),
    }
}

/// Events of a single wheel, with their support windows in time.
#[derive(Debug, Clone)]
pub struct WheelProfile {
    speed: f64,
    events: Vec<(f64, f64, RoadEvent)>,
}

impl WheelProfile {
    #[inline]
    pub fn eval(&self, t: f64) -> (f64, f64) {
        let mut z = 0.0;
        let mut dz = 0.0;
        for (start, end, e) in &self.events {
            if t >= *start && t <= *end {
                let x = self.speed * (t - e.center_time);
                z += e.obstacle.height_at(x);
                dz += self.speed * e.obstacle.slope_at(x);
            }
        }
        (z, dz)
    }
}

/// The double-bump road used throughout the study, parameterized in time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DoubleBumpLayout {
    pub kind: ObstacleKind,
    pub height: f64,
    /// Time a wheel spends on one obstacle (s); obstacle length is `speed · bump_duration`.
    pub bump_duration: f64,
    /// Centre times of the bumps under the (front-)left wheel.
    pub centers: Vec<f64>,
    /// Delay of the right wheels behind the left ones (full car).
    pub right_offset: f64,
    /// Delay of the rear wheels; `None` derives it as wheelbase / speed.
    pub rear_delay: Option<f64>,
    pub speed: f64,
    pub duration: f64,
}

impl Default for DoubleBumpLayout {
    fn default() -> Self {
        Self {
            kind: ObstacleKind::CosineBump,
            height: 0.1,
            bump_duration: 0.5,
            centers: vec![2.0, 12.0],
            right_offset: 0.5,
            rear_delay: None,
            speed: 10.0,
            duration: 30.0,
        }
    }
}

impl DoubleBumpLayout {
    pub fn obstacle(&self) -> Obstacle {
        Obstacle {
            kind: self.kind,
            height: self.height,
            length: self.speed * self.bump_duration,
            width: default_width(),
        }
    }

    pub fn qc_scenario(&self) -> Result<RoadScenario> {
        let obstacle = self.obstacle();
        let events = self
            .centers
            .iter()
            .map(|&c| RoadEvent {
                wheel: Wheel::Single,
                obstacle,
                center_time: c,
            })
            .collect();
        let s = RoadScenario {
            speed: self.speed,
            duration: self.duration,
            wheels: wheels_of(ModelKind::Qc),
            events,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn fc_scenario(&self, wheelbase: f64) -> Result<RoadScenario> {
        let obstacle = self.obstacle();
        let rear = self.rear_delay.unwrap_or(wheelbase / self.speed);
        let mut events = Vec::new();
        for &c in &self.centers {
            for w in Wheel::CORNERS {
                let mut t = c;
                if !w.is_left() {
                    t += self.right_offset;
                }
                if !w.is_front() {
                    t += rear;
                }
                events.push(RoadEvent {
                    wheel: w,
                    obstacle,
                    center_time: t,
                });
            }
        }
        let s = RoadScenario {
            speed: self.speed,
            duration: self.duration,
            wheels: wheels_of(ModelKind::Fc),
            events,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn scenario(&self, model: ModelKind, wheelbase: f64) -> Result<RoadScenario> {
        match model {
            ModelKind::Qc => self.qc_scenario(),
            ModelKind::Fc => self.fc_scenario(wheelbase),
        }
    }
}

/// Default double-bump road for a model with the default vehicle geometry.
pub fn default_scenario(model: ModelKind) -> RoadScenario {
    DoubleBumpLayout::default()
        .scenario(model, FcParams::default().wheelbase())
        .expect("default layout is valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn cosine_bump_shape() {
        let b = Obstacle::cosine_bump(0.1, 5.0);
        assert_eq!(obstacle_height(&b, 0.0), 0.1);
        assert!(obstacle_height(&b, 2.5).abs() < 1e-18);
        assert!(obstacle_height(&b, -2.5).abs() < 1e-18);
        assert_eq!(obstacle_height(&b, 3.0), 0.0);
    }

    #[test]
    fn cleat_shape() {
        let c = Obstacle::cleat(0.1, 2.0);
        assert_eq!(obstacle_height(&c, 0.49 * 2.0), 0.1);
        assert_eq!(obstacle_height(&c, 1.0), 0.0);
        assert_eq!(c.slope_at(0.3), 0.0);
    }

    #[test]
    fn road_signal_examples() {
        let s = default_scenario(ModelKind::Qc);
        assert_eq!(s.road_signal(Wheel::Single, 25.0).unwrap(), (0.0, 0.0));
        let (z, dz) = s.road_signal(Wheel::Single, 2.0).unwrap();
        assert_eq!(z, 0.1);
        assert_eq!(dz, 0.0);
        assert_eq!(s.road_signal(Wheel::Single, 12.0).unwrap().0, 0.1);
        assert_eq!(s.road_signal(Wheel::FrontLeft, 2.0), Err(Error::UnknownWheel(Wheel::FrontLeft)));
    }

    #[test]
    fn default_scenarios() {
        let qc = default_scenario(ModelKind::Qc);
        assert_eq!(qc.events.len(), 2);
        assert_eq!(qc.duration, 30.0);

        let fc = default_scenario(ModelKind::Fc);
        let center = |w: Wheel| {
            fc.events
                .iter()
                .filter(|e| e.wheel == w)
                .map(|e| e.center_time)
                .collect::<Vec<_>>()
        };
        assert_eq!(center(Wheel::FrontLeft), vec![2.0, 12.0]);
        assert_relative_eq!(center(Wheel::FrontRight)[0] - 2.0, 0.5);
        assert_relative_eq!(center(Wheel::RearLeft)[0] - 2.0, 0.31, epsilon = 1e-12);
        assert_relative_eq!(center(Wheel::RearRight)[1] - 12.0, 0.81, epsilon = 1e-12);
    }

    #[test]
    fn rear_wheel_is_time_shifted_front() {
        let fc = default_scenario(ModelKind::Fc);
        let delay = FcParams::default().wheelbase() / fc.speed;
        for k in 0..3000 {
            let t = k as f64 * 0.005;
            let (zf, dzf) = fc.road_signal(Wheel::FrontLeft, t).unwrap();
            let (zr, dzr) = fc.road_signal(Wheel::RearLeft, t + delay).unwrap();
            assert!((zf - zr).abs() < 1e-12 && (dzf - dzr).abs() < 1e-10, "t={t}");
        }
    }

    #[test]
    fn velocity_matches_central_difference() {
        let s = default_scenario(ModelKind::Qc);
        let dt = 1e-3;
        let h = 1e-7;
        for k in 0..=30_000 {
            let t = k as f64 * dt;
            let (_, dz) = s.road_signal(Wheel::Single, t).unwrap();
            let fd = (s.road_signal(Wheel::Single, t + h).unwrap().0 - s.road_signal(Wheel::Single, t - h).unwrap().0)
                / (2.0 * h);
            assert!((dz - fd).abs() < 1e-6, "t={t}: {dz} vs {fd}");
        }
    }

    #[test]
    fn validation() {
        let mut s = default_scenario(ModelKind::Qc);
        s.events[1].center_time = 31.0;
        assert!(s.validate().is_err());
        let mut s = default_scenario(ModelKind::Qc);
        s.events[0].obstacle.length = 0.0;
        assert!(s.validate().is_err());
        let mut s = default_scenario(ModelKind::Qc);
        s.speed = 0.0;
        assert!(s.validate().is_err());
    }

    #[test]
    fn profile_agrees_with_road_signal() {
        let s = default_scenario(ModelKind::Fc);
        for w in Wheel::CORNERS {
            let p = s.profile(w).unwrap();
            for k in 0..1500 {
                let t = k as f64 * 0.01;
                assert_eq!(p.eval(t), s.road_signal(w, t).unwrap());
            }
        }
    }

    proptest! {
        #[test]
        fn height_bounded(h in 0.0..1.0f64, l in 0.01..10.0f64, x in -20.0..20.0f64, cleat in any::<bool>()) {
            let o = if cleat { Obstacle::cleat(h, l) } else { Obstacle::cosine_bump(h, l) };
            let z = obstacle_height(&o, x);
            prop_assert!((0.0..=h).contains(&z));
        }

        #[test]
        fn cosine_bump_continuous(h in 0.01..1.0f64, l in 0.1..10.0f64, x in -6.0..6.0f64) {
            let o = Obstacle::cosine_bump(h, l);
            let eps = 1e-9;
            prop_assert!((o.height_at(x + eps) - o.height_at(x)).abs() < 1e-6);
        }
    }
}
