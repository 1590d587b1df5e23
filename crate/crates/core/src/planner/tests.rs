use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::ace::{evaluate_pose, SafetyThresholds};
use crate::kinematics::{RoverModel, RoverParams};
use crate::terrain::{generate_rock_field, Dem, RockFieldSpec};

fn curiosity() -> RoverModel {
    RoverModel::new(RoverParams::curiosity_sized()).unwrap()
}

fn flat_map() -> Dem {
    Dem::flat(400, 300, 0.1, [0.0, 0.0], 0.0)
}

#[test]
fn arcs_have_the_requested_length_and_turn() {
    let p = Pose2D::new(1.0, 2.0, 0.3);
    let turn = 0.5;
    let end = arc_point(&p, turn, 1.5, 1.5);
    assert!((end.psi - 0.8).abs() < 1e-12);
    // Chord of a circular arc.
    let r = 1.5 / turn;
    let chord = 2.0 * r * (turn / 2.0).sin();
    assert!(((end.x - p.x).hypot(end.y - p.y) - chord).abs() < 1e-12);
    let mut len = 0.0;
    let mut prev = p;
    for k in 1..=1000 {
        let q = arc_point(&p, turn, 1.5, 1.5 * k as f64 / 1000.0);
        len += (q.x - prev.x).hypot(q.y - prev.y);
        prev = q;
    }
    assert!((len - 1.5).abs() < 1e-6);
    let straight = arc_point(&p, 0.0, 1.5, 1.5);
    assert!((straight.x - (1.0 + 1.5 * 0.3f64.cos())).abs() < 1e-12);
}

#[test]
fn config_validation() {
    assert!(PlannerConfig::default().validate().is_ok());
    let c = PlannerConfig {
        depth: 0,
        ..Default::default()
    };
    assert!(c.validate().is_err());
    let c = PlannerConfig {
        check_interval: 2.0,
        ..Default::default()
    };
    assert!(c.validate().is_err());
}

#[test]
fn flat_terrain_goes_straight() {
    let m = curiosity();
    let dem = flat_map();
    let t = SafetyThresholds::for_model(&m);
    for kind in CheckerKind::ALL {
        let c = CollisionChecker::new(kind, &dem, &m, t);
        let out = plan(
            &Pose2D::new(10.0, 15.0, 0.0),
            [30.0, 15.0],
            &c,
            &PlannerConfig::default(),
        );
        assert!(out.success, "{kind}");
        assert!(
            out.inefficiency <= 0.01 && out.inefficiency >= 0.0,
            "{kind}: {}",
            out.inefficiency
        );
        assert!(out.path.iter().all(|p| (p.y - 15.0).abs() < 1e-9));
    }
}

#[test]
fn wall_blocks_every_checker() {
    let m = curiosity();
    let mut dem = flat_map();
    for i in 195..205 {
        for j in 0..300 {
            dem.set(i, j, -1.0);
        }
    }
    let t = SafetyThresholds::for_model(&m);
    for kind in CheckerKind::ALL {
        let c = CollisionChecker::new(kind, &dem, &m, t);
        let out = plan(
            &Pose2D::new(10.0, 15.0, 0.0),
            [30.0, 15.0],
            &c,
            &PlannerConfig::default(),
        );
        assert!(!out.success, "{kind}");
        assert!(out.inefficiency.is_nan());
        assert!(out.path.iter().all(|p| p.x < 19.5), "{kind}");
    }
}

#[test]
fn unsafe_start_fails_immediately() {
    let m = curiosity();
    let mut dem = flat_map();
    dem.set(100, 150, -0.8);
    let c = CollisionChecker::new(CheckerKind::Ace, &dem, &m, SafetyThresholds::for_model(&m));
    let out = plan(
        &Pose2D::new(10.0, 15.0, 0.0),
        [30.0, 15.0],
        &c,
        &PlannerConfig::default(),
    );
    assert!(!out.success);
    assert_eq!(out.checker_calls, 1);
    assert_eq!(out.path.len(), 1);
}

fn rock_map(cfa: f64, seed: u64) -> Dem {
    let mut spec = RockFieldSpec::new(cfa, [40.0, 30.0], 0.1, seed);
    spec.keep_out = vec![[10.0, 15.0, 4.0], [30.0, 15.0, 4.0]];
    generate_rock_field(&spec).unwrap().dem
}

#[test]
fn executed_checkpoints_are_safe_and_runs_repeat() {
    let m = curiosity();
    let dem = rock_map(0.12, 9);
    let t = SafetyThresholds::for_model(&m);
    for kind in [CheckerKind::Ace, CheckerKind::Planefit] {
        let c = CollisionChecker::new(kind, &dem, &m, t);
        let a = plan(
            &Pose2D::new(10.0, 15.0, 0.0),
            [30.0, 15.0],
            &c,
            &PlannerConfig::default(),
        );
        let b = plan(
            &Pose2D::new(10.0, 15.0, 0.0),
            [30.0, 15.0],
            &c,
            &PlannerConfig::default(),
        );
        assert_eq!(a.path, b.path, "{kind}");
        assert_eq!((a.success, a.checker_calls), (b.success, b.checker_calls));
        assert_eq!(
            c.check(&a.path[0]),
            crate::ace::Overall::Safe,
            "{kind} start"
        );
        for p in &a.path {
            assert_eq!(c.check(p), crate::ace::Overall::Safe, "{kind} {p:?}");
        }
    }
}

#[test]
fn ace_safe_implies_ideal_safe() {
    let m = curiosity();
    let t = SafetyThresholds::for_model(&m);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut ace_safe = 0;
    for seed in 0..4 {
        let dem = rock_map(0.05 + 0.05 * seed as f64, 100 + seed);
        for _ in 0..150 {
            let pose = Pose2D::new(
                rng.gen_range(4.0..36.0),
                rng.gen_range(4.0..26.0),
                rng.gen_range(-3.1..3.1),
            );
            if evaluate_pose(&dem, &pose, &m, &t, 0.0).verdict.is_safe() {
                ace_safe += 1;
                assert_eq!(
                    ideal_check(&dem, &pose, &m, &t),
                    crate::ace::Overall::Safe,
                    "{pose:?}"
                );
            }
        }
    }
    assert!(ace_safe > 50, "{ace_safe}");
}

#[test]
fn benchmark_rows_and_summary() {
    let cfg = BenchmarkConfig {
        cfa_levels: vec![0.0],
        maps_per_level: 2,
        checkers: vec![CheckerKind::Ace, CheckerKind::Planefit],
        ..Default::default()
    };
    let rows = benchmark(&cfg).unwrap();
    assert_eq!(rows.len(), 4);
    assert!(rows.iter().all(|r| r.success && r.inefficiency < 0.01));
    let s = summarize(&rows);
    assert_eq!(s.len(), 2);
    assert_eq!(s[0].success_rate, 1.0);
    let mut buf = Vec::new();
    write_benchmark_csv(&rows, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(text.starts_with(BENCHMARK_CSV_HEADER));
    assert_eq!(text.lines().count(), 5);
}
