//! Shared test helpers: a naive name-based IW(1) reference and a few
//! cross-checks over trees and episodes.
#![allow(dead_code)]

use std::collections::{BTreeSet, HashSet};

use widthplan::core::pddl::{Domain, Instance, LiftedAtom, Term};
use widthplan::core::{LookaheadTree, State, Task};

pub type NamedState = BTreeSet<String>;

/// Ground actions by brute force over every parameter tuple.
pub struct Reference<'a> {
    domain: &'a Domain,
    instance: &'a Instance,
    /// (pre, add, del) per ground action, in schema-name then tuple order.
    actions: Vec<(Vec<String>, Vec<String>, Vec<String>)>,
    goal: Vec<String>,
}

fn atom_name(d: &Domain, i: &Instance, a: &LiftedAtom, binding: &[usize]) -> String {
    let mut s = format!("({}", d.predicate(a.pred).name);
    for t in &a.args {
        let o = match *t {
            Term::Param(p) => binding[p],
            Term::Constant(o) => o.index(),
        };
        s.push(' ');
        s.push_str(&i.objects[o].name);
    }
    s.push(')');
    s
}

/// Every `n`-tuple over `0..objs`, lexicographic.
fn tuples(n: usize, objs: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for _ in 0..n {
        out = out
            .into_iter()
            .flat_map(|t| {
                (0..objs).map(move |o| {
                    let mut t = t.clone();
                    t.push(o);
                    t
                })
            })
            .collect();
    }
    out
}

impl<'a> Reference<'a> {
    pub fn new(domain: &'a Domain, instance: &'a Instance) -> Self {
        let mut schemas: Vec<_> = domain.actions.iter().collect();
        schemas.sort_by(|a, b| a.name.cmp(&b.name));
        let mut actions = Vec::new();
        for a in schemas {
            for binding in tuples(a.params.len(), instance.objects.len()) {
                let typed = a
                    .params
                    .iter()
                    .zip(&binding)
                    .all(|(p, &o)| domain.types.is_subtype(instance.objects[o].ty, p.ty));
                if typed {
                    let names = |xs: &[LiftedAtom]| -> Vec<String> {
                        xs.iter().map(|x| atom_name(domain, instance, x, &binding)).collect()
                    };
                    actions.push((names(&a.pre), names(&a.add), names(&a.del)));
                }
            }
        }
        let fact = |f: &widthplan::core::pddl::Fact| {
            let mut s = format!("({}", domain.predicate(f.pred).name);
            for o in &f.args {
                s.push(' ');
                s.push_str(&instance.objects[o.index()].name);
            }
            s.push(')');
            s
        };
        Reference {
            domain,
            instance,
            actions,
            goal: instance.goal.iter().map(fact).collect(),
        }
    }

    pub fn init(&self) -> NamedState {
        self.instance
            .init
            .iter()
            .map(|f| {
                let mut s = format!("({}", self.domain.predicate(f.pred).name);
                for o in &f.args {
                    s.push(' ');
                    s.push_str(&self.instance.objects[o.index()].name);
                }
                s.push(')');
                s
            })
            .collect()
    }

    pub fn is_goal(&self, s: &NamedState) -> bool {
        self.goal.iter().all(|g| s.contains(g))
    }

    pub fn successors(&self, s: &NamedState) -> Vec<NamedState> {
        self.actions
            .iter()
            .filter(|(pre, _, _)| pre.iter().all(|p| s.contains(p)))
            .map(|(_, add, del)| {
                let mut t: NamedState = s.iter().filter(|x| !del.contains(x)).cloned().collect();
                t.extend(add.iter().cloned());
                t
            })
            .collect()
    }

    /// Plain BFS with an atom-set novelty check; finishes the layer in which a
    /// goal state first appears.
    pub fn iw1(&self, root: &NamedState) -> Vec<NamedState> {
        let mut seen: HashSet<String> = root.iter().cloned().collect();
        let mut tree = vec![root.clone()];
        let mut in_tree: HashSet<NamedState> = HashSet::from([root.clone()]);
        let mut layer = vec![root.clone()];
        while !layer.is_empty() {
            let mut next = Vec::new();
            for s in &layer {
                for t in self.successors(s) {
                    let mut novel = false;
                    for a in &t {
                        novel |= seen.insert(a.clone());
                    }
                    if novel && in_tree.insert(t.clone()) {
                        tree.push(t.clone());
                        next.push(t);
                    }
                }
            }
            if next.iter().any(|s| self.is_goal(s)) {
                break;
            }
            layer = next;
        }
        tree
    }
}

pub fn named(task: &Task, s: &State) -> NamedState {
    s.atoms().iter().map(|&a| task.atom_string(a)).collect()
}

pub fn tree_states(task: &Task, tree: &LookaheadTree) -> BTreeSet<NamedState> {
    tree.nodes().iter().map(|n| named(task, &n.state)).collect()
}

/// Hyperedge count of the AD encoding computed from set definitions alone.
pub fn ad_size_law(task: &Task, tree: &LookaheadTree) -> usize {
    let root = named(task, tree.root());
    let goal: BTreeSet<String> = task.goal().iter().map(|&a| task.atom_string(a)).collect();
    let v = tree.len();
    let d = tree.max_depth() as usize;
    let mut total = root.len() + goal.len() + (v - 1) + d * d.saturating_sub(1) / 2 + (v - 1);
    for n in &tree.nodes()[1..] {
        let s = named(task, &n.state);
        let add: Vec<&String> = s.difference(&root).collect();
        let del: Vec<&String> = root.difference(&s).collect();
        total += add.len() + del.len();
        total += add.iter().filter(|a| goal.contains(**a)).count();
        total += del.iter().filter(|a| goal.contains(**a)).count();
    }
    total
}

/// State reached by a uniform walk of `steps` actions, choosing with `pick`.
pub fn walk(task: &Task, steps: usize, mut pick: impl FnMut(usize) -> usize) -> State {
    let mut s = task.initial_state().clone();
    for _ in 0..steps {
        let acts = task.applicable_actions(&s);
        if acts.is_empty() {
            break;
        }
        s = s.apply(&acts[pick(acts.len())]).unwrap();
    }
    s
}
