//! Bundled toy domains and seeded instance generators.

use std::fmt::Write;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use widthplan_core::pddl::{parse_domain, parse_instance};
use widthplan_core::Task;

pub const BLOCKSWORLD_DOMAIN: &str = include_str!("../../core/fixtures/blocksworld/domain.pddl");
pub const BLOCKSWORLD_P3: &str = include_str!("../../core/fixtures/blocksworld/p3.pddl");
pub const GRIPPER_DOMAIN: &str = include_str!("../../core/fixtures/gripper/domain.pddl");
pub const GRIPPER_P2: &str = include_str!("../../core/fixtures/gripper/p2.pddl");
pub const SPANNER_DOMAIN: &str = include_str!("../../core/fixtures/spanner/domain.pddl");
pub const SPANNER_DEGENERATE: &str = include_str!("../../core/fixtures/spanner/degenerate.pddl");
pub const DELIVERY_DOMAIN: &str = include_str!("../../core/fixtures/delivery/domain.pddl");
pub const DELIVERY_N1: &str = include_str!("../../core/fixtures/delivery/n1.pddl");

/// Every state has one `press` action per button.
pub const BUTTONS_DOMAIN: &str = "(define (domain buttons)
  (:requirements :strips :typing)
  (:types button)
  (:predicates (pressed ?b - button))
  (:action press
    :parameters (?b - button)
    :precondition (and)
    :effect (and (pressed ?b))))
";

/// A domain/instance text pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Problem {
    pub domain: &'static str,
    pub instance: String,
}

impl Problem {
    /// Parses and grounds; generated text always parses.
    pub fn task(&self) -> Task {
        load(self.domain, &self.instance)
    }
}

pub fn load(domain: &str, instance: &str) -> Task {
    let d = parse_domain(domain).expect("bundled domain parses");
    let i = parse_instance(instance, &d).expect("bundled instance parses");
    Task::new(d, i).expect("bundled instance grounds")
}

pub fn blocksworld_p3() -> Task {
    load(BLOCKSWORLD_DOMAIN, BLOCKSWORLD_P3)
}

pub fn gripper_p2() -> Task {
    load(GRIPPER_DOMAIN, GRIPPER_P2)
}

pub fn spanner_degenerate() -> Task {
    load(SPANNER_DOMAIN, SPANNER_DEGENERATE)
}

pub fn delivery_n1() -> Task {
    load(DELIVERY_DOMAIN, DELIVERY_N1)
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn towers(blocks: &[String], rng: &mut ChaCha8Rng) -> Vec<Vec<String>> {
    let mut order = blocks.to_vec();
    order.shuffle(rng);
    let mut out: Vec<Vec<String>> = Vec::new();
    for b in order {
        match out.last_mut() {
            Some(t) if rng.random_bool(0.6) => t.push(b),
            _ => out.push(vec![b]),
        }
    }
    out
}

/// `n` blocks in random towers; the goal is another random tower layout
/// given by its `on` atoms.
pub fn blocksworld(n: usize, seed: u64) -> Problem {
    let mut r = rng(seed);
    let blocks: Vec<String> = (1..=n).map(|i| format!("b{i}")).collect();
    let mut s = format!("(define (problem bw-{n}-{seed})\n  (:domain blocksworld)\n  (:objects {})\n  (:init (handempty)", blocks.join(" "));
    for t in towers(&blocks, &mut r) {
        write!(s, " (ontable {}) (clear {})", t[0], t[t.len() - 1]).unwrap();
        for w in t.windows(2) {
            write!(s, " (on {} {})", w[1], w[0]).unwrap();
        }
    }
    s.push_str(")\n  (:goal (and");
    for t in towers(&blocks, &mut r) {
        for w in t.windows(2) {
            write!(s, " (on {} {})", w[1], w[0]).unwrap();
        }
    }
    s.push_str(")))\n");
    Problem { domain: BLOCKSWORLD_DOMAIN, instance: s }
}

/// Two rooms, two grippers, `balls` balls to move from `rooma` to `roomb`.
pub fn gripper(balls: usize) -> Problem {
    let names: Vec<String> = (1..=balls).map(|i| format!("ball{i}")).collect();
    let mut s = format!(
        "(define (problem gripper-{balls})\n  (:domain gripper)\n  (:objects rooma roomb left right {})\n  (:init (room rooma) (room roomb) (gripper left) (gripper right) (at-robby rooma) (free left) (free right)",
        names.join(" ")
    );
    for b in &names {
        write!(s, " (ball {b}) (at {b} rooma)").unwrap();
    }
    s.push_str(")\n  (:goal (and");
    for b in &names {
        write!(s, " (at {b} roomb)").unwrap();
    }
    s.push_str(")))\n");
    Problem { domain: GRIPPER_DOMAIN, instance: s }
}

/// A `width`×`height` grid with one truck and `packages` packages.
/// Start and goal cells of packages are pairwise distinct, and no goal cell
/// holds a package initially.
pub fn delivery(width: usize, height: usize, packages: usize, seed: u64) -> Problem {
    assert!(2 * packages <= width * height, "grid too small for {packages} packages");
    let mut r = rng(seed);
    let cell = |x: usize, y: usize| format!("c{x}_{y}");
    let mut cells: Vec<String> = Vec::new();
    for y in 0..height {
        for x in 0..width {
            cells.push(cell(x, y));
        }
    }
    let mut shuffled = cells.clone();
    shuffled.shuffle(&mut r);
    let (starts, goals) = (&shuffled[..packages], &shuffled[packages..2 * packages]);
    let truck = &cells[r.random_range(0..cells.len())];
    let pkgs: Vec<String> = (1..=packages).map(|i| format!("p{i}")).collect();
    let mut s = format!(
        "(define (problem delivery-{width}x{height}-{packages}-{seed})\n  (:domain delivery)\n  (:objects {} - cell {} - package t1 - truck)\n  (:init (at t1 {truck}) (empty t1)",
        cells.join(" "),
        pkgs.join(" ")
    );
    for (p, c) in pkgs.iter().zip(starts) {
        write!(s, " (at {p} {c})").unwrap();
    }
    for y in 0..height {
        for x in 0..width {
            if x + 1 < width {
                write!(s, " (adjacent {} {}) (adjacent {} {})", cell(x, y), cell(x + 1, y), cell(x + 1, y), cell(x, y)).unwrap();
            }
            if y + 1 < height {
                write!(s, " (adjacent {} {}) (adjacent {} {})", cell(x, y), cell(x, y + 1), cell(x, y + 1), cell(x, y)).unwrap();
            }
        }
    }
    s.push_str(")\n  (:goal (and");
    for (p, c) in pkgs.iter().zip(goals) {
        write!(s, " (at {p} {c})").unwrap();
    }
    s.push_str(")))\n");
    Problem { domain: DELIVERY_DOMAIN, instance: s }
}

/// A corridor `shed → l1 → … → l{locations} → gate`, spanners scattered
/// over the corridor and all nuts at the gate.
pub fn spanner(locations: usize, spanners: usize, nuts: usize, seed: u64) -> Problem {
    assert!(locations > 0);
    let mut r = rng(seed);
    let locs: Vec<String> = (1..=locations).map(|i| format!("l{i}")).collect();
    let sp: Vec<String> = (1..=spanners).map(|i| format!("spanner{i}")).collect();
    let ns: Vec<String> = (1..=nuts).map(|i| format!("nut{i}")).collect();
    let mut s = format!(
        "(define (problem spanner-{locations}-{spanners}-{nuts}-{seed})\n  (:domain spanner)\n  (:objects bob - man shed gate {} - location {} - spanner {} - nut)\n  (:init (at bob shed)",
        locs.join(" "),
        sp.join(" "),
        ns.join(" ")
    );
    let corridor: Vec<&str> = std::iter::once("shed")
        .chain(locs.iter().map(String::as_str))
        .chain(std::iter::once("gate"))
        .collect();
    for w in corridor.windows(2) {
        write!(s, " (link {} {})", w[0], w[1]).unwrap();
    }
    for x in &sp {
        write!(s, " (at {x} {}) (useable {x})", locs[r.random_range(0..locs.len())]).unwrap();
    }
    for n in &ns {
        write!(s, " (at {n} gate) (loose {n})").unwrap();
    }
    s.push_str(")\n  (:goal (and");
    for n in &ns {
        write!(s, " (tightened {n})").unwrap();
    }
    s.push_str(")))\n");
    Problem { domain: SPANNER_DOMAIN, instance: s }
}

/// `b` buttons, none pressed; the goal is all pressed.
pub fn buttons(b: usize) -> Problem {
    let names: Vec<String> = (1..=b).map(|i| format!("button{i}")).collect();
    let goal: String = names.iter().map(|n| format!(" (pressed {n})")).collect();
    Problem {
        domain: BUTTONS_DOMAIN,
        instance: format!(
            "(define (problem buttons-{b})\n  (:domain buttons)\n  (:objects {} - button)\n  (:init)\n  (:goal (and{goal})))\n",
            names.join(" ")
        ),
    }
}
