use proptest::prelude::*;

use suspension_core::control::{make_qc_controller, Controller, PidGains};
use suspension_core::road::{default_scenario, Obstacle, RoadEvent, RoadScenario};
use suspension_core::sim::{simulate_active, simulate_passive, SimConfig, Trajectory};
use suspension_core::vehicle::*;
use suspension_core::Result;

fn cfg(duration: f64) -> SimConfig {
    SimConfig {
        duration,
        ..SimConfig::default()
    }
}

fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn qc_events(bumps: &[(f64, f64, f64)], duration: f64) -> RoadScenario {
    let mut s = RoadScenario::flat(ModelKind::Qc, 10.0, duration);
    s.events = bumps
        .iter()
        .map(|&(h, len, c)| RoadEvent {
            wheel: Wheel::Single,
            obstacle: Obstacle::cosine_bump(h, len),
            center_time: c,
        })
        .collect();
    s
}

fn bump() -> impl Strategy<Value = (f64, f64, f64)> {
    (0.01..0.2f64, 1.0..8.0f64, 0.5..4.0f64)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn passive_superposition(a in prop::collection::vec(bump(), 1..3), b in prop::collection::vec(bump(), 1..3)) {
        let sys = build_qc_system(&QcParams::default(), false).unwrap();
        let (sa, sb) = (qc_events(&a, 5.0), qc_events(&b, 5.0));
        let ta = simulate_passive(&sys, &sa, &cfg(5.0)).unwrap();
        let tb = simulate_passive(&sys, &sb, &cfg(5.0)).unwrap();
        let tab = simulate_passive(&sys, &sa.superposed(&sb), &cfg(5.0)).unwrap();
        let scale = sup_norm(&tab.states);
        for ((x, y), z) in ta.states.iter().zip(&tb.states).zip(&tab.states) {
            prop_assert!((x + y - z).abs() <= 1e-9 * scale);
        }
    }

    #[test]
    fn closed_loop_scaling(a in prop::collection::vec(bump(), 1..3), c in 0.1..5.0f64) {
        let sys = build_qc_system(&QcParams::default(), true).unwrap();
        let run = |s: &RoadScenario| {
            let mut pid = make_qc_controller(PidGains::new(12_225.0, 22_241.0, 841.7)).unwrap();
            simulate_active(&sys, s, &mut pid, &cfg(5.0)).unwrap()
        };
        let base = run(&qc_events(&a, 5.0));
        let scaled_bumps: Vec<_> = a.iter().map(|&(h, l, t)| (c * h, l, t)).collect();
        let scaled = run(&qc_events(&scaled_bumps, 5.0));
        let norm = sup_norm(&scaled.forces);
        for (x, y) in base.forces.iter().zip(&scaled.forces) {
            prop_assert!((c * x - y).abs() <= 1e-9 * norm);
        }
    }
}

#[test]
fn time_invariance() {
    let sys = build_qc_system(&QcParams::default(), false).unwrap();
    let s = qc_events(&[(0.1, 5.0, 1.0)], 4.0);
    let base = simulate_passive(&sys, &s, &cfg(4.0)).unwrap();
    let shift = 250;
    let later = simulate_passive(&sys, &s.shifted(shift as f64 * 1e-3), &cfg(4.0)).unwrap();
    let scale = sup_norm(&base.states);
    for k in 0..base.len() - shift {
        for (x, y) in base.state(k).iter().zip(later.state(k + shift)) {
            assert!((x - y).abs() <= 1e-9 * scale, "k={k}");
        }
    }
    assert!(later.state(shift - 1).iter().all(|&v| v == 0.0));
}

fn relative_gap(coarse: &Trajectory, fine: &Trajectory) -> f64 {
    let n = coarse.n_states();
    let scale = sup_norm(&fine.states);
    (0..coarse.len())
        .flat_map(|k| (0..n).map(move |i| (k, i)))
        .map(|(k, i)| (coarse.state(k)[i] - fine.state(2 * k)[i]).abs())
        .fold(0.0, f64::max)
        / scale
}

#[test]
fn half_step_agreement_qc_and_fc() {
    for model in [ModelKind::Qc, ModelKind::Fc] {
        let sys = match model {
            ModelKind::Qc => build_qc_system(&QcParams::default(), false),
            ModelKind::Fc => build_fc_system(&FcParams::default(), false),
        }
        .unwrap();
        let s = default_scenario(model);
        let coarse = simulate_passive(&sys, &s, &SimConfig::default()).unwrap();
        let fine = simulate_passive(
            &sys,
            &s,
            &SimConfig {
                dt: 5e-4,
                ..SimConfig::default()
            },
        )
        .unwrap();
        let gap = relative_gap(&coarse, &fine);
        assert!(gap < 1e-6, "{model}: {gap}");
    }
}

/// Applies no force and remembers every output vector it was shown.
struct Recorder {
    seen: Vec<Vec<f64>>,
    actuators: usize,
}

impl Controller for Recorder {
    fn actuator_count(&self) -> usize {
        self.actuators
    }

    fn reset(&mut self) {
        self.seen.clear();
    }

    fn update(&mut self, outputs: &[f64], _dt: f64, forces: &mut [f64]) -> Result<()> {
        self.seen.push(outputs.to_vec());
        forces.fill(0.0);
        Ok(())
    }
}

#[test]
fn controller_sees_outputs_one_sample_late() {
    let sys = build_qc_system(&QcParams::default(), true).unwrap();
    let s = default_scenario(ModelKind::Qc);
    let mut rec = Recorder {
        seen: Vec::new(),
        actuators: 1,
    };
    let traj = simulate_active(&sys, &s, &mut rec, &cfg(4.0)).unwrap();
    assert!(rec.seen.len() + 1 >= traj.len());
    for k in 1..rec.seen.len() {
        assert_eq!(rec.seen[k], traj.output(k - 1), "k={k}");
    }
}

#[test]
fn full_car_mirror_symmetry() {
    let sys = build_fc_system(&FcParams::default(), false).unwrap();
    let s = default_scenario(ModelKind::Fc);
    let a = simulate_passive(&sys, &s, &cfg(8.0)).unwrap();
    let b = simulate_passive(&sys, &s.mirrored(), &cfg(8.0)).unwrap();
    let scale = sup_norm(&a.states);
    // Swapping left and right flips roll and exchanges the corner states.
    let swap = |i: usize| match i {
        4 | 5 => i,
        6..=13 => {
            let corner = (i - 6) / 2;
            6 + 2 * (corner ^ 1) + (i - 6) % 2
        }
        14..=17 => 14 + ((i - 14) ^ 1),
        _ => i,
    };
    for k in (0..a.len()).step_by(7) {
        for i in 0..FC_STATES {
            let sign = if i == 4 || i == 5 { -1.0 } else { 1.0 };
            let d = (a.state(k)[i] - sign * b.state(k)[swap(i)]).abs();
            assert!(d <= 1e-9 * scale, "k={k} i={i}: {d}");
        }
    }
}

#[test]
fn symmetric_road_excites_no_roll() {
    let sys = build_fc_system(&FcParams::default(), false).unwrap();
    let mut s = RoadScenario::flat(ModelKind::Fc, 10.0, 6.0);
    for w in Wheel::CORNERS {
        s.events.push(RoadEvent {
            wheel: w,
            obstacle: Obstacle::cosine_bump(0.1, 5.0),
            center_time: if w.is_front() { 1.0 } else { 1.31 },
        });
    }
    let t = simulate_passive(&sys, &s, &cfg(6.0)).unwrap();
    assert!(sup_norm(&t.state_series(FC_ROLL)) < 1e-12);
    assert!(sup_norm(&t.state_series(FC_PITCH)) > 1e-3);
}
