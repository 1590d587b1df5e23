//! Acceptance gate. Runs every criterion, prints one PASS/FAIL line each,
//! and exits non-zero if any criterion fails.

use std::time::Instant;

use ace_core::ace::{
    bounds_via_extremes, evaluate_pose, propagate_bounds, SafetyThresholds, WheelIntervals,
};
use ace_core::analysis::{
    coefficient_of_variation, compare_at, drive, random_poses, sweep_row, time_ace, time_planefit,
    SweepOptions,
};
use ace_core::interval::Interval;
use ace_core::kinematics::{solve, RoverModel, RoverParams, Wheel, WheelHeights};
use ace_core::planner::{benchmark, summarize, BenchmarkConfig, CheckerKind};
use ace_core::terrain::{
    add_gaussian_noise, generate_bump, generate_quadratic, generate_rock_field, Bump, Dem, Pose2D,
    RockFieldSpec,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

#[derive(Default)]
struct Tally {
    pairs: usize,
    with_bounds: usize,
    violations: usize,
    unconverged: usize,
    first: Option<String>,
}

impl Tally {
    fn add(&mut self, ace_dem: &Dem, truth_dem: &Dem, pose: &Pose2D, model: &RoverModel, eps: f64) {
        self.pairs += 1;
        let c =
            compare_at(ace_dem, truth_dem, pose, model, eps, true).expect("poses are on the map");
        self.unconverged += !c.truth.converged as usize;
        if let Some(v) = c.violations {
            self.with_bounds += 1;
            if !v.is_empty() {
                self.violations += 1;
                self.first.get_or_insert_with(|| format!("{pose:?}: {v:?}"));
            }
        }
    }
}

fn rock_dem(cfa: f64, size: f64, seed: u64) -> Dem {
    generate_rock_field(&RockFieldSpec::new(cfa, [size, size], 0.1, seed))
        .expect("valid rock field")
        .dem
}

fn c1_conservatism() -> Outcome {
    let m = RoverModel::canonical();
    let mut rng = ChaCha8Rng::seed_from_u64(0xC1);
    let mut t = Tally::default();
    for _ in 0..34 {
        let a = rng.gen_range(-0.2..=0.2);
        let dem = generate_quadratic(a, 12.0, 0.05);
        for _ in 0..100 {
            let pose = Pose2D::new(
                rng.gen_range(-2.0..2.0),
                rng.gen_range(-2.0..2.0),
                rng.gen_range(-3.2..3.2),
            );
            t.add(&dem, &dem, &pose, &m, 0.0);
        }
    }
    for _ in 0..33 {
        let b = Bump {
            center: [5.0, 5.0],
            radius: [rng.gen_range(0.3..1.5), rng.gen_range(0.3..1.5)],
            height: rng.gen_range(0.05..0.4),
        };
        let dem = generate_bump([10.0, 10.0], 0.05, &b);
        for _ in 0..100 {
            let pose = Pose2D::new(
                rng.gen_range(3.0..7.0),
                rng.gen_range(3.0..7.0),
                rng.gen_range(-3.2..3.2),
            );
            t.add(&dem, &dem, &pose, &m, 0.0);
        }
    }
    for k in 0..33 {
        let cfa = [0.05, 0.10, 0.15, 0.20][k % 4];
        let dem = rock_dem(cfa, 20.0, 1000 + k as u64);
        for pose in random_poses(&dem, 4.0, 100, 2000 + k as u64) {
            t.add(&dem, &dem, &pose, &m, 0.0);
        }
    }
    outcome(
        t.pairs >= 10_000 && t.violations == 0,
        format!(
            "{} pairs, {} with bounds, {} violations, {} oracle runs unconverged{}",
            t.pairs,
            t.with_bounds,
            t.violations,
            t.unconverged,
            t.first.map(|f| format!("; first: {f}")).unwrap_or_default()
        ),
    )
}

fn c2_flat_exactness() -> Outcome {
    let m = RoverModel::canonical();
    let mut rng = ChaCha8Rng::seed_from_u64(0xC2);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let h: [f64; 6] = std::array::from_fn(|_| rng.gen_range(-0.15..0.15));
        let (s, b) = solve(&WheelHeights(h), &m).unwrap();
        let p = propagate_bounds(&WheelIntervals::exact(h), &m).unwrap();
        for (iv, v) in [
            (p.delta, s.delta_l),
            (p.beta_l, s.beta_l),
            (p.beta_r, s.beta_r),
            (p.z_d_l, s.z_d_l),
            (p.z_d_r, s.z_d_r),
            (p.phi, b.phi),
            (p.theta, b.theta),
            (p.z_o, b.z_o),
            (p.z_p, b.z_p),
        ] {
            worst = worst.max((iv.lo - v).abs()).max((iv.hi - v).abs());
        }
    }
    let t = SafetyThresholds::for_model(&m);
    let mut widest: f64 = 0.0;
    for k in 0..200 {
        let h = rng.gen_range(-1.0..1.0);
        let dem = Dem::flat(120, 120, 0.1, [0.0, 0.0], h);
        let pose = Pose2D::new(
            rng.gen_range(4.0..8.0),
            rng.gen_range(4.0..8.0),
            rng.gen_range(-3.2..3.2),
        );
        let e = evaluate_pose(&dem, &pose, &m, &t, 0.0);
        let b = e.bounds.expect("flat ground evaluates");
        for iv in [
            b.delta,
            b.beta_l,
            b.beta_r,
            b.phi,
            b.theta,
            b.z_o,
            b.z_p,
            b.clearance.unwrap(),
        ] {
            widest = widest.max(iv.width());
        }
        assert!(e.verdict.is_safe(), "flat pose {k} unsafe");
    }
    outcome(
        worst <= 1e-9 && widest == 0.0,
        format!("max |bound - forward kinematics| = {worst:.2e}; widest flat-ground bound = {widest:.2e}"),
    )
}

fn c3_epsilon_margin() -> Outcome {
    let m = RoverModel::canonical();
    let (sigma, cap) = (0.005, 0.015);
    let mut zero = Tally::default();
    let mut margin = Tally::default();
    for k in 0..12 {
        let cfa = [0.05, 0.10, 0.15, 0.20][k % 4];
        let clean = rock_dem(cfa, 20.0, 3000 + k as u64);
        let noisy = add_gaussian_noise(&clean, sigma, cap, 4000 + k as u64);
        for pose in random_poses(&clean, 4.0, 100, 5000 + k as u64) {
            zero.add(&noisy, &clean, &pose, &m, 0.0);
            margin.add(&noisy, &clean, &pose, &m, cap);
        }
    }
    let rate = |t: &Tally| 100.0 * (t.with_bounds - t.violations) as f64 / t.with_bounds as f64;
    outcome(
        zero.violations > 0 && margin.with_bounds >= 1000 && margin.violations == 0,
        format!(
            "eps=0: {:.2}% contained ({} of {} violate); eps=15mm: {:.2}% contained over {} poses",
            rate(&zero),
            zero.violations,
            zero.with_bounds,
            rate(&margin),
            margin.with_bounds
        ),
    )
}

fn c4_sweep_trends() -> Outcome {
    let m = RoverModel::canonical();
    let rows: Vec<_> = (-20..=20)
        .map(|k| sweep_row(k as f64 * 0.01, &m, &SweepOptions::default()).expect("sweep row"))
        .collect();
    let contained = rows.iter().all(|r| r.contained);
    // Moving away from a = 0 on either side never narrows the bound.
    let mut monotone = true;
    for r in &rows {
        for s in &rows {
            let same_side = r.a * s.a >= 0.0;
            if same_side
                && r.a.abs() < s.a.abs()
                && r.ace_clearance.width() > s.ace_clearance.width() + 1e-12
            {
                monotone = false;
            }
        }
    }
    let nonzero: Vec<_> = rows.iter().filter(|r| r.a != 0.0).collect();
    let pessimistic: Vec<f64> = nonzero
        .iter()
        .filter(|r| r.planefit_clearance <= r.truth_clearance)
        .map(|r| r.a)
        .collect();
    let optimistic_pitch = nonzero
        .iter()
        .filter(|r| r.planefit_theta.abs() < r.truth_theta.abs())
        .count();
    let detail = format!(
        "(i) truth in bounds: {contained}; (ii) clearance width non-decreasing in |a|: {monotone}; \
         (iii) planefit clearance optimistic at {}/{} nonzero a, not at a in [{:.2}, {:.2}]; \
         planefit pitch optimistic at {}/{}",
        nonzero.len() - pessimistic.len(),
        nonzero.len(),
        pessimistic.first().copied().unwrap_or(f64::NAN),
        pessimistic.last().copied().unwrap_or(f64::NAN),
        optimistic_pitch,
        nonzero.len()
    );
    outcome(contained && monotone && pessimistic.is_empty(), detail)
}

fn c5_bump_replay() -> Outcome {
    let m = RoverModel::new(RoverParams::curiosity_sized()).unwrap();
    let y_right = m.wheel_positions_for(0.0, 0.0, 0.0, 0.0, 0.0)[Wheel::FrontRight as usize].1;
    let path = [[2.5, 5.0], [7.5, 5.0]];

    // (a) bump across the whole path width.
    let wide = Bump {
        center: [5.0, 5.0],
        radius: [0.6, 3.0],
        height: 0.2,
    };
    let rows_a = drive(
        &generate_bump([10.0, 10.0], 0.05, &wide),
        &m,
        &path,
        0.05,
        0.0,
    )
    .expect("drive a");
    let max_roll_truth = rows_a
        .iter()
        .map(|r| r.truth.body.phi.abs())
        .fold(0.0, f64::max);
    let max_roll_width = rows_a
        .iter()
        .filter_map(|r| r.bounds)
        .filter(|b| b.phi.contains(0.0))
        .map(|b| b.phi.width())
        .fold(0.0, f64::max);
    let contained_a = rows_a.iter().all(|r| r.contained);

    // (c) bump under the right wheels only.
    let right = Bump {
        center: [5.0, 5.0 + y_right],
        radius: [0.6, 0.5],
        height: 0.2,
    };
    let rows_c = drive(
        &generate_bump([10.0, 10.0], 0.05, &right),
        &m,
        &path,
        0.05,
        0.0,
    )
    .expect("drive c");
    let max =
        |f: fn(&ace_core::analysis::DriveRow) -> f64| rows_c.iter().map(f).fold(0.0, f64::max);
    let beta_r = max(|r| r.truth.suspension.beta_r.abs());
    let beta_l = max(|r| r.truth.suspension.beta_l.abs());
    let roll_c = max(|r| r.truth.body.phi.abs());
    let contained_c = rows_c.iter().all(|r| r.contained);

    let pass = max_roll_truth <= 1e-9
        && max_roll_width > 1e-3
        && contained_a
        && beta_r >= 0.02
        && beta_l <= 0.25 * beta_r
        && roll_c >= 0.01
        && contained_c;
    outcome(
        pass,
        format!(
            "(a) max |roll| {max_roll_truth:.1e}, widest roll bound straddling 0 {max_roll_width:.4} rad, \
             contained {contained_a}; (c) max |beta_r| {beta_r:.4}, max |beta_l| {beta_l:.4}, max |roll| {roll_c:.4}, \
             contained {contained_c}"
        ),
    )
}

fn c6_planner() -> Outcome {
    let cfg = BenchmarkConfig::default();
    let t0 = Instant::now();
    let rows = benchmark(&cfg).expect("benchmark runs");
    let summary = summarize(&rows);
    let get = |cfa: f64, k: CheckerKind| {
        summary
            .iter()
            .find(|s| s.cfa == cfa && s.checker == k)
            .expect("every level and checker ran")
    };
    let mut ordered = true;
    let mut table = Vec::new();
    let mut advisories = Vec::new();
    for &cfa in &cfg.cfa_levels {
        let (ace, pf, ideal) = (
            get(cfa, CheckerKind::Ace),
            get(cfa, CheckerKind::Planefit),
            get(cfa, CheckerKind::Ideal),
        );
        table.push(format!(
            "{:.0}%: success ideal {:.2} ace {:.2} planefit {:.2}, inefficiency ideal {:.3} ace {:.3} planefit {:.3}",
            cfa * 100.0,
            ideal.success_rate,
            ace.success_rate,
            pf.success_rate,
            ideal.mean_inefficiency,
            ace.mean_inefficiency,
            pf.mean_inefficiency
        ));
        if cfa >= 0.10 - 1e-12 {
            ordered &=
                ideal.success_rate >= ace.success_rate && ace.success_rate >= pf.success_rate;
            ordered &= not_above(ideal.mean_inefficiency, ace.mean_inefficiency);
            if !pf.mean_inefficiency.is_nan() {
                ordered &= ace.mean_inefficiency <= pf.mean_inefficiency;
            }
        }
        let mut advise = |ok: bool, what: String| {
            advisories.push(format!("{} {what}", if ok { "ok" } else { "off" }));
        };
        if cfa <= 0.15 + 1e-12 {
            advise(
                ace.success_rate >= 0.90,
                format!(
                    "ACE success {:.2} >= 0.95 (-5pp) at {cfa}",
                    ace.success_rate
                ),
            );
        }
        if (cfa - 0.10).abs() < 1e-12 {
            advise(
                pf.success_rate <= 0.55,
                format!("planefit success {:.2} <= 0.55 at 0.1", pf.success_rate),
            );
        }
        if (cfa - 0.15).abs() < 1e-12 {
            advise(
                (ace.mean_inefficiency - 0.12).abs() <= 0.08,
                format!(
                    "ACE inefficiency {:.3} in 0.12 +- 0.08",
                    ace.mean_inefficiency
                ),
            );
        }
        if (cfa - 0.20).abs() < 1e-12 {
            advise(
                (ace.mean_inefficiency - 0.33).abs() <= 0.10,
                format!(
                    "ACE inefficiency {:.3} in 0.33 +- 0.10",
                    ace.mean_inefficiency
                ),
            );
        }
        advise(
            not_above(ideal.mean_inefficiency, 0.05),
            format!(
                "ideal inefficiency {:.3} <= 0.05 at {cfa}",
                ideal.mean_inefficiency
            ),
        );
    }
    for line in &table {
        println!("    {line}");
    }
    for line in &advisories {
        println!("    advisory: {line}");
    }
    outcome(
        ordered,
        format!(
            "orderings hold at every level >= 10%: {ordered}; {} runs in {:.1}s",
            rows.len(),
            t0.elapsed().as_secs_f64()
        ),
    )
}

fn c7_runtime() -> Outcome {
    let m = RoverModel::new(RoverParams::curiosity_sized()).unwrap();
    let flat = Dem::flat(300, 300, 0.1, [0.0, 0.0], 0.0);
    let rocks = rock_dem(0.20, 30.0, 77);
    let poses = random_poses(&flat, 5.0, 2000, 7);
    // Warm the lazily built span indexes.
    time_ace(&flat, &m, &poses[..10], 1);
    time_ace(&rocks, &m, &poses[..10], 1);
    let ace_flat = time_ace(&flat, &m, &poses, 20);
    let ace_rocks = time_ace(&rocks, &m, &poses, 20);
    let pf_flat = time_planefit(&flat, &poses, 200, 20);
    let pf_rocks = time_planefit(&rocks, &poses, 200, 20);
    let cv = coefficient_of_variation(&[ace_flat.mean, ace_rocks.mean]);
    let ratio = (pf_flat.mean + pf_rocks.mean) / (ace_flat.mean + ace_rocks.mean);
    outcome(
        cv < 0.10 && ace_flat.mean < pf_flat.mean && ace_rocks.mean < pf_rocks.mean,
        format!(
            "ACE mean {:.2} us flat / {:.2} us 20% CFA (p99 {:.2} / {:.2}), CV {:.3}; \
             planefit 200 points {:.2} / {:.2} us; planefit/ACE {:.2}x",
            ace_flat.mean * 1e6,
            ace_rocks.mean * 1e6,
            ace_flat.p99 * 1e6,
            ace_rocks.p99 * 1e6,
            cv,
            pf_flat.mean * 1e6,
            pf_rocks.mean * 1e6,
            ratio
        ),
    )
}

fn random_interval(rng: &mut ChaCha8Rng, scale: f64) -> Interval {
    let a = rng.gen_range(-scale..scale);
    let b = rng.gen_range(-scale..scale);
    Interval::new(a.min(b), a.max(b))
}

fn sub_interval(rng: &mut ChaCha8Rng, x: Interval) -> Interval {
    let a = rng.gen_range(x.lo..=x.hi);
    let b = rng.gen_range(x.lo..=x.hi);
    Interval::new(a.min(b), a.max(b))
}

fn c8_properties() -> Outcome {
    const N: usize = 1000;
    let mut rng = ChaCha8Rng::seed_from_u64(0xC8);
    let mut failures: Vec<String> = Vec::new();
    let mut fail = |name: &str, ok: bool| {
        if !ok && !failures.iter().any(|f| f == name) {
            failures.push(name.to_string());
        }
    };

    // Inclusion isotonicity.
    for _ in 0..N {
        let (x, y) = (
            random_interval(&mut rng, 5.0),
            random_interval(&mut rng, 5.0),
        );
        let (xs, ys) = (sub_interval(&mut rng, x), sub_interval(&mut rng, y));
        fail("isotonic add", (xs + ys).is_subset_of(&(x + y)));
        fail("isotonic sub", (xs - ys).is_subset_of(&(x - y)));
        fail("isotonic abs", xs.abs().is_subset_of(&x.abs()));
        fail("isotonic hull", xs.hull(&ys).is_subset_of(&x.hull(&y)));
        fail(
            "isotonic monotone map",
            xs.map_monotone(f64::atan, true)
                .is_subset_of(&x.map_monotone(f64::atan, true)),
        );
    }

    // Kinematics symmetry, equivariance and derivative.
    let m = RoverModel::canonical();
    for _ in 0..N {
        let h: [f64; 6] = std::array::from_fn(|_| rng.gen_range(-0.15..0.15));
        let w = WheelHeights(h);
        let (s, b) = solve(&w, &m).unwrap();
        let (sm, bm) = solve(&w.mirrored(), &m).unwrap();
        fail(
            "mirror symmetry",
            (b.phi + bm.phi).abs() < 1e-12
                && (s.beta_l - sm.beta_r).abs() < 1e-12
                && (b.theta - bm.theta).abs() < 1e-12,
        );
        let c = rng.gen_range(-2.0..2.0);
        let (st, bt) = solve(&WheelHeights(h.map(|v| v + c)), &m).unwrap();
        fail(
            "translation equivariance",
            (bt.z_o - b.z_o - c).abs() < 1e-12
                && (bt.theta - b.theta).abs() < 1e-12
                && (st.beta_r - s.beta_r).abs() < 1e-12,
        );
        let eps = 1e-6;
        let (mut up, mut dn) = (w, w);
        up[Wheel::FrontLeft] += eps;
        dn[Wheel::FrontLeft] -= eps;
        let fd = (solve(&up, &m).unwrap().1.theta - solve(&dn, &m).unwrap().1.theta) / (2.0 * eps);
        let arg = (h[0] - s.z_b_l) / m.rocker().l_ab;
        let analytic = -0.5 / (m.rocker().l_ab * (1.0 - arg * arg).sqrt());
        fail("pitch finite difference", (fd - analytic).abs() < 1e-6);
    }

    // Bounds contain every corner solve and random interior solves.
    for _ in 0..N {
        let lo: [f64; 6] = std::array::from_fn(|_| rng.gen_range(-0.15..0.1));
        let iv: [Interval; 6] =
            std::array::from_fn(|k| Interval::new(lo[k], lo[k] + rng.gen_range(0.0..0.1)));
        let w = WheelIntervals::from_intervals(iv);
        let p = propagate_bounds(&w, &m).unwrap();
        let x = bounds_via_extremes(&w, &m).unwrap();
        let mut ok = true;
        for (a, b) in [
            (p.delta, x.delta),
            (p.beta_l, x.beta_l),
            (p.beta_r, x.beta_r),
            (p.phi, x.phi),
            (p.theta, x.theta),
            (p.z_o, x.z_o),
            (p.z_p, x.z_p),
        ] {
            ok &= b.lo >= a.lo - 1e-12 && b.hi <= a.hi + 1e-12;
        }
        fail("extremes containment", ok);
        let h: [f64; 6] = std::array::from_fn(|k| rng.gen_range(iv[k].lo..=iv[k].hi));
        let (s, b) = solve(&WheelHeights(h), &m).unwrap();
        fail(
            "interior containment",
            p.beta_l.contains_within(s.beta_l, 1e-12)
                && p.phi.contains_within(b.phi, 1e-12)
                && p.theta.contains_within(b.theta, 1e-12)
                && p.z_p.contains_within(b.z_p, 1e-12),
        );
    }

    // Polygon min/max against dense sampling of the surface.
    for k in 0..N {
        let dem = Dem::from_fn(20, 20, 0.1, [0.0, 0.0], |x, y| {
            ((x * 7.3 + k as f64).sin() * (y * 5.1).cos()) * 0.3
        });
        let pose = Pose2D::new(
            rng.gen_range(0.6..1.4),
            rng.gen_range(0.6..1.4),
            rng.gen_range(-3.2..3.2),
        );
        let hx = rng.gen_range(0.05..0.4);
        let hy = rng.gen_range(0.05..0.4);
        let poly = pose.rect_to_world(Interval::new(-hx, hx), Interval::new(-hy, hy));
        let mm = dem.minmax_in_polygon(&poly).unwrap();
        let mut ok = true;
        for a in 0..=16 {
            for b in 0..=16 {
                let p = pose.to_world(
                    -hx + 2.0 * hx * a as f64 / 16.0,
                    -hy + 2.0 * hy * b as f64 / 16.0,
                );
                ok &= mm.contains_within(dem.surface_height(p[0], p[1]), 1e-12);
            }
        }
        fail("minmax soundness", ok);
    }

    // Terrain uncertainty only widens the gate's view.
    let t = SafetyThresholds::for_model(&m);
    for k in 0..N / 10 {
        let dem = Dem::from_fn(100, 100, 0.1, [0.0, 0.0], |x, y| {
            0.05 * ((x + k as f64).sin() + (y * 1.3).cos())
        });
        let pose = Pose2D::new(
            rng.gen_range(4.0..6.0),
            rng.gen_range(4.0..6.0),
            rng.gen_range(-3.2..3.2),
        );
        let a = evaluate_pose(&dem, &pose, &m, &t, 0.0).bounds.unwrap();
        let b = evaluate_pose(&dem, &pose, &m, &t, rng.gen_range(0.0..0.05))
            .bounds
            .unwrap();
        fail(
            "epsilon monotone",
            a.phi.is_subset_of(&b.phi)
                && a.theta.is_subset_of(&b.theta)
                && a.clearance.unwrap().lo >= b.clearance.unwrap().lo,
        );
    }

    outcome(
        failures.is_empty(),
        if failures.is_empty() {
            format!("{N} cases each: isotonicity, mirror, translation, finite difference, extremes, interior, minmax, epsilon")
        } else {
            format!("failed: {}", failures.join(", "))
        },
    )
}

/// `a <= b`, or either side is NaN.
fn not_above(a: f64, b: f64) -> bool {
    a.partial_cmp(&b) != Some(std::cmp::Ordering::Greater)
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 8] = [
        ("C1 conservatism suite", c1_conservatism),
        ("C2 flat-ground exactness", c2_flat_exactness),
        ("C3 epsilon-margin restoration", c3_epsilon_margin),
        ("C4 undulation sweep trends", c4_sweep_trends),
        ("C5 bump drive replay", c5_bump_replay),
        ("C6 planner comparison", c6_planner),
        ("C7 runtime properties", c7_runtime),
        ("C8 property suites", c8_properties),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let t0 = Instant::now();
        let o = run();
        failed += !o.pass as usize;
        println!(
            "{} {name} [{:.1}s]: {}",
            if o.pass { "PASS" } else { "FAIL" },
            t0.elapsed().as_secs_f64(),
            o.detail
        );
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
