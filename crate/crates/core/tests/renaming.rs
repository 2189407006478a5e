use std::collections::HashMap;

use proptest::prelude::*;
use widthplan_core::encode::{self, RelGraph};
use widthplan_core::lookahead::TreeNode;
use widthplan_core::pddl::{parse_domain, parse_instance, Fact, Instance, Object, ObjectId};
use widthplan_core::{lookahead, LookaheadConfig, LookaheadTree, State, Task, Variant};

const FIXTURES: [(&str, &str); 4] = [
    (
        include_str!("../fixtures/blocksworld/domain.pddl"),
        include_str!("../fixtures/blocksworld/p3.pddl"),
    ),
    (
        include_str!("../fixtures/gripper/domain.pddl"),
        include_str!("../fixtures/gripper/p2.pddl"),
    ),
    (
        include_str!("../fixtures/delivery/domain.pddl"),
        include_str!("../fixtures/delivery/n1.pddl"),
    ),
    (
        include_str!("../fixtures/spanner/domain.pddl"),
        include_str!("../fixtures/spanner/degenerate.pddl"),
    ),
];

/// `task` with objects renamed to `x{k}` and redeclared in `order`.
struct Renamed {
    task: Task,
    /// old object id -> new object id
    id: Vec<u32>,
    /// old name -> new name
    name: HashMap<String, String>,
}

fn rename(domain: &str, instance: &str, order: &[usize]) -> (Task, Renamed) {
    let d = parse_domain(domain).unwrap();
    let i = parse_instance(instance, &d).unwrap();
    let mut id = vec![0u32; order.len()];
    let mut name = HashMap::new();
    let mut objects = Vec::new();
    for (new, &old) in order.iter().enumerate() {
        id[old] = new as u32;
        let fresh = format!("x{}", order.len() - new);
        name.insert(i.objects[old].name.clone(), fresh.clone());
        objects.push(Object { name: fresh, ty: i.objects[old].ty });
    }
    let remap = |f: &Fact| Fact {
        pred: f.pred,
        args: f.args.iter().map(|o| ObjectId(id[o.index()])).collect(),
    };
    let renamed = Instance {
        name: i.name.clone(),
        domain_name: i.domain_name.clone(),
        objects,
        init: i.init.iter().map(remap).collect(),
        goal: i.goal.iter().map(remap).collect(),
    };
    let original = Task::new(d.clone(), i).unwrap();
    let task = Task::new(d, renamed).unwrap();
    (original, Renamed { task, id, name })
}

impl Renamed {
    fn state(&self, from: &Task, s: &State) -> State {
        State::new(s.atoms().iter().map(|&a| {
            let g = from.atom(a);
            let args: Vec<ObjectId> = g.args.iter().map(|o| ObjectId(self.id[o.index()])).collect();
            self.task.intern(g.pred, &args).unwrap()
        }))
    }

    fn tree(&self, from: &Task, t: &LookaheadTree) -> LookaheadTree {
        let nodes = t
            .nodes()
            .iter()
            .map(|n| TreeNode {
                state: self.state(from, &n.state),
                depth: n.depth,
                parent: n.parent,
                action: n.action.as_ref().map(|a| {
                    let args: Vec<ObjectId> = a.args.iter().map(|o| ObjectId(self.id[o.index()])).collect();
                    self.task.ground_action(a.schema, &args).unwrap()
                }),
            })
            .collect();
        LookaheadTree::from_nodes(nodes).unwrap()
    }

    /// Label with object names renamed, as a word list.
    fn label(&self, l: &str) -> Vec<String> {
        words(l)
            .into_iter()
            .map(|w| self.name.get(&w).cloned().unwrap_or(w))
            .collect()
    }
}

fn words(l: &str) -> Vec<String> {
    l.split([' ', '(', ')'])
        .filter(|w| !w.is_empty())
        .map(String::from)
        .collect()
}

/// Checks that mapping each node of `a` to the node of `b` with the same
/// kind and renamed label is an isomorphism.
fn assert_isomorphic(a: &RelGraph, b: &RelGraph, r: &Renamed, ordered_candidates: bool) {
    assert_eq!(a.nodes.len(), b.nodes.len());
    let by_label: HashMap<(Vec<String>, _), u32> = b.nodes.iter().map(|n| ((words(&n.label), n.kind), n.id)).collect();
    let map: Vec<u32> = a
        .nodes
        .iter()
        .map(|n| by_label[&(r.label(&n.label), n.kind)])
        .collect();
    let mut sorted = map.clone();
    sorted.sort_unstable();
    sorted.dedup();
    assert_eq!(sorted.len(), map.len(), "node map is not a bijection");
    let mut ea: Vec<(String, Vec<u32>)> = a
        .edges
        .iter()
        .map(|e| (e.label.clone(), e.args.iter().map(|&x| map[x as usize]).collect()))
        .collect();
    let mut eb: Vec<(String, Vec<u32>)> = b.edges.iter().map(|e| (e.label.clone(), e.args.clone())).collect();
    ea.sort();
    eb.sort();
    assert_eq!(ea, eb);
    let mut ca: Vec<u32> = a.candidates.iter().map(|&c| map[c as usize]).collect();
    let mut cb = b.candidates.clone();
    if !ordered_candidates {
        ca.sort_unstable();
        cb.sort_unstable();
    }
    assert_eq!(ca, cb);
}

fn permutation(n: usize) -> impl Strategy<Value = Vec<usize>> {
    Just((0..n).collect::<Vec<_>>()).prop_shuffle()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn renaming_objects_gives_isomorphic_graphs(
        (which, order) in (0usize..4).prop_flat_map(|w| {
            let d = parse_domain(FIXTURES[w].0).unwrap();
            let n = parse_instance(FIXTURES[w].1, &d).unwrap().objects.len();
            (Just(w), permutation(n))
        }),
        walk in proptest::collection::vec(0usize..16, 0..6),
        v in 0usize..4,
    ) {
        let (a, r) = rename(FIXTURES[which].0, FIXTURES[which].1, &order);
        let mut root = a.initial_state().clone();
        for step in walk {
            let acts = a.applicable_actions(&root);
            if acts.is_empty() { break; }
            root = root.apply(&acts[step % acts.len()]).unwrap();
        }
        let root_b = r.state(&a, &root);
        let b = &r.task;

        assert_isomorphic(&encode::encode_state(&a, &root), &encode::encode_state(b, &root_b), &r, true);
        assert_isomorphic(
            &encode::encode_aa(&a, &root, &a.applicable_actions(&root)),
            &encode::encode_aa(b, &root_b, &b.applicable_actions(&root_b)),
            &r,
            false,
        );
        let tree = lookahead(&a, &root, &LookaheadConfig::new(Variant::ALL[v])).unwrap();
        let tree_b = r.tree(&a, &tree);
        assert_isomorphic(&encode::encode_ad(&a, &tree), &encode::encode_ad(b, &tree_b), &r, true);
        if tree.len() > 1 {
            let s2 = &tree.node(tree.len() - 1).state;
            let s2b = r.state(&a, s2);
            assert_isomorphic(&encode::encode_internal(&a, &root, s2), &encode::encode_internal(b, &root_b, &s2b), &r, true);
            assert_isomorphic(&encode::encode_internal_delta(&a, &root, s2), &encode::encode_internal_delta(b, &root_b, &s2b), &r, true);
            let pa = encode::encode_external(&a, &root, s2);
            let pb = encode::encode_external(b, &root_b, &s2b);
            assert_isomorphic(&pa.left, &pb.left, &r, true);
            assert_isomorphic(&pa.right, &pb.right, &r, true);
        }
    }
}

#[test]
fn ad_is_smaller_than_external_by_root_reuse() {
    let blocks6 = "(define (problem bw6) (:domain blocksworld) (:objects a b c d e f)
        (:init (handempty) (ontable a) (ontable b) (ontable c) (on d a) (on e b) (on f c) (clear d) (clear e) (clear f))
        (:goal (and (on a b) (on b c) (on c d) (on d e) (on e f))))";
    let gripper6 = "(define (problem g6) (:domain gripper) (:objects rooma roomb left right b1 b2 b3 b4 b5 b6)
        (:init (room rooma) (room roomb) (gripper left) (gripper right) (at-robby rooma) (free left) (free right)
               (ball b1) (ball b2) (ball b3) (ball b4) (ball b5) (ball b6)
               (at b1 rooma) (at b2 rooma) (at b3 rooma) (at b4 rooma) (at b5 rooma) (at b6 rooma))
        (:goal (and (at b1 roomb) (at b2 roomb) (at b3 roomb) (at b4 roomb) (at b5 roomb) (at b6 roomb))))";
    let mut checked = 0;
    let larger = [(FIXTURES[0].0, blocks6), (FIXTURES[1].0, gripper6)];
    for (domain, instance) in FIXTURES.into_iter().chain(larger) {
        let d = parse_domain(domain).unwrap();
        let i = parse_instance(instance, &d).unwrap();
        let t = Task::new(d, i).unwrap();
        for v in Variant::ALL {
            let tree = lookahead(&t, t.initial_state(), &LookaheadConfig::new(v)).unwrap();
            if tree.len() < 20 {
                continue;
            }
            let root_units = t.initial_state().len() + t.goal().len();
            let ad = encode::encode_ad(&t, &tree).edges.len();
            let ext: usize = tree.nodes()[1..]
                .iter()
                .map(|n| {
                    let p = encode::encode_external(&t, t.initial_state(), &n.state);
                    p.left.edges.len() + p.right.edges.len()
                })
                .sum();
            // External pays for the root once per candidate, AD once in total.
            assert!(ad + (tree.len() - 2) * root_units <= ext, "{v}: ad {ad}, ext {ext}");
            checked += 1;
        }
    }
    assert!(checked > 0, "no fixture tree reached 20 nodes");
}
