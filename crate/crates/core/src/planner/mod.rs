//! Receding-horizon tree search over constant-curvature arcs, with the
//! pose safety test supplied by a [`CollisionChecker`].

mod benchmark;
mod checker;
pub mod planefit;

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashSet};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::ace::Overall;
use crate::terrain::Pose2D;

pub use benchmark::{
    benchmark, summarize, write_benchmark_csv, BenchmarkConfig, BenchmarkError, BenchmarkRow,
    BenchmarkSummary, BENCHMARK_CSV_HEADER,
};
pub use checker::{ideal_check, CheckerKind, CollisionChecker};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlannerConfig {
    pub depth: usize,
    pub edge_length: f64,
    pub check_interval: f64,
    /// Heading changes per edge, radians.
    pub heading_fan: Vec<f64>,
    pub goal_tolerance: f64,
    pub max_replans: usize,
    /// Checkpoint evaluations allowed per search before it settles for
    /// the best node found so far.
    pub max_checks_per_search: usize,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            depth: 5,
            edge_length: 1.5,
            check_interval: 0.25,
            heading_fan: (-4..=4).map(|k| (10.0 * k as f64).to_radians()).collect(),
            goal_tolerance: 1.0,
            max_replans: 40,
            max_checks_per_search: 4000,
        }
    }
}

impl PlannerConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.depth == 0 {
            return Err("depth must be at least 1".into());
        }
        if !(self.check_interval > 0.0 && self.check_interval <= self.edge_length) {
            return Err("check interval must be in (0, edge length]".into());
        }
        if self.heading_fan.is_empty() {
            return Err("heading fan is empty".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanOutcome {
    pub success: bool,
    /// Start pose followed by every executed checkpoint.
    pub path: Vec<Pose2D>,
    pub path_length: f64,
    /// Distance from the start to the final position.
    pub straight_distance: f64,
    pub inefficiency: f64,
    pub checker_calls: usize,
    pub wall_time_s: f64,
}

/// Pose after driving `s` meters along an arc that turns by `turn` over
/// `length`.
pub fn arc_point(p: &Pose2D, turn: f64, length: f64, s: f64) -> Pose2D {
    let k = turn / length;
    let (x, y) = if k.abs() < 1e-12 {
        (p.x + s * p.psi.cos(), p.y + s * p.psi.sin())
    } else {
        (
            p.x + ((p.psi + k * s).sin() - p.psi.sin()) / k,
            p.y - ((p.psi + k * s).cos() - p.psi.cos()) / k,
        )
    };
    Pose2D::new(x, y, p.psi + k * s)
}

fn edge_checkpoints(p: &Pose2D, turn: f64, cfg: &PlannerConfig) -> Vec<Pose2D> {
    let n = (cfg.edge_length / cfg.check_interval - 1e-9).ceil() as usize;
    (1..=n)
        .map(|k| {
            arc_point(
                p,
                turn,
                cfg.edge_length,
                (k as f64 * cfg.check_interval).min(cfg.edge_length),
            )
        })
        .collect()
}

#[derive(Clone, Copy)]
struct Node {
    pose: Pose2D,
    depth: usize,
    g: f64,
    turn: f64,
    /// Turn of the depth-one edge this node descends from.
    first_turn: f64,
}

#[derive(PartialEq)]
struct Candidate {
    f: f64,
    turn: f64,
    seq: usize,
    parent: usize,
    edge_turn: f64,
}

impl Eq for Candidate {}

impl Ord for Candidate {
    // Min-heap on (f, accumulated turn, insertion order).
    fn cmp(&self, o: &Self) -> Ordering {
        o.f.total_cmp(&self.f)
            .then(o.turn.total_cmp(&self.turn))
            .then(o.seq.cmp(&self.seq))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

fn lattice_key(p: &Pose2D) -> (i64, i64, i64) {
    (
        (p.x / 0.25).round() as i64,
        (p.y / 0.25).round() as i64,
        (p.psi.to_degrees() / 10.0).round().rem_euclid(36.0) as i64,
    )
}

/// Best-first search with lazy edge checking. Returns the turn of the
/// first edge on the path to the cheapest safe leaf.
fn search(
    start: &Pose2D,
    goal: [f64; 2],
    check: &mut dyn FnMut(&Pose2D) -> Overall,
    cfg: &PlannerConfig,
    calls: &mut usize,
) -> Option<f64> {
    let h = |p: &Pose2D| (p.x - goal[0]).hypot(p.y - goal[1]);
    let mut nodes = vec![Node {
        pose: *start,
        depth: 0,
        g: 0.0,
        turn: 0.0,
        first_turn: 0.0,
    }];
    let mut heap = BinaryHeap::new();
    let mut closed = HashSet::new();
    closed.insert(lattice_key(start));
    let mut seq = 0;
    let mut push = |heap: &mut BinaryHeap<Candidate>, nodes: &Vec<Node>, parent: usize| {
        let n = &nodes[parent];
        for &dt in &cfg.heading_fan {
            let end = arc_point(&n.pose, dt, cfg.edge_length, cfg.edge_length);
            heap.push(Candidate {
                f: n.g + cfg.edge_length + h(&end),
                turn: n.turn + dt.abs(),
                seq,
                parent,
                edge_turn: dt,
            });
            seq += 1;
        }
    };
    push(&mut heap, &nodes, 0);
    let budget = *calls + cfg.max_checks_per_search;

    while let Some(c) = heap.pop() {
        if *calls >= budget {
            break;
        }
        let parent = nodes[c.parent];
        let end = arc_point(&parent.pose, c.edge_turn, cfg.edge_length, cfg.edge_length);
        let key = lattice_key(&end);
        if closed.contains(&key) {
            continue;
        }
        let mut safe = true;
        for cp in edge_checkpoints(&parent.pose, c.edge_turn, cfg) {
            *calls += 1;
            if check(&cp) != Overall::Safe {
                safe = false;
                break;
            }
        }
        if !safe {
            continue;
        }
        closed.insert(key);
        let depth = parent.depth + 1;
        let first_turn = if depth == 1 {
            c.edge_turn
        } else {
            parent.first_turn
        };
        nodes.push(Node {
            pose: end,
            depth,
            g: parent.g + cfg.edge_length,
            turn: c.turn,
            first_turn,
        });
        if depth >= cfg.depth || h(&end) <= cfg.goal_tolerance {
            return Some(first_turn);
        }
        push(&mut heap, &nodes, nodes.len() - 1);
    }

    // Budget exhausted or tree fully pruned: head for the checked node
    // closest to the goal.
    nodes
        .iter()
        .skip(1)
        .min_by(|a, b| (h(&a.pose) + a.g * 1e-9).total_cmp(&(h(&b.pose) + b.g * 1e-9)))
        .filter(|n| h(&n.pose) < h(start))
        .map(|n| n.first_turn)
}

/// Drives from `start` toward `goal` by repeatedly searching and executing
/// the first edge of the chosen branch.
pub fn plan(
    start: &Pose2D,
    goal: [f64; 2],
    checker: &CollisionChecker<'_>,
    cfg: &PlannerConfig,
) -> PlanOutcome {
    plan_with(start, goal, &mut |p| checker.check(p), cfg)
}

pub fn plan_with(
    start: &Pose2D,
    goal: [f64; 2],
    check: &mut dyn FnMut(&Pose2D) -> Overall,
    cfg: &PlannerConfig,
) -> PlanOutcome {
    let t0 = Instant::now();
    let mut calls = 1;
    let mut path = vec![*start];
    let mut length = 0.0;
    let reached = |p: &Pose2D| (p.x - goal[0]).hypot(p.y - goal[1]) <= cfg.goal_tolerance;
    let mut success = false;
    if check(start) == Overall::Safe {
        let mut current = *start;
        for _ in 0..cfg.max_replans {
            if reached(&current) {
                break;
            }
            let Some(turn) = search(&current, goal, check, cfg, &mut calls) else {
                break;
            };
            path.extend(edge_checkpoints(&current, turn, cfg));
            current = *path.last().expect("non-empty edge");
            length += cfg.edge_length;
        }
        success = reached(&current);
    }
    let last = path.last().expect("start is on the path");
    let straight = (last.x - start.x).hypot(last.y - start.y);
    PlanOutcome {
        success,
        inefficiency: if success && straight > 0.0 {
            length / straight - 1.0
        } else {
            f64::NAN
        },
        path,
        path_length: length,
        straight_distance: straight,
        checker_calls: calls,
        wall_time_s: t0.elapsed().as_secs_f64(),
    }
}

#[cfg(test)]
mod tests;
