//! Novelty tables for IW(k) and its abstracted variants.
//!
//! An atom `P(o1, .., on)` is tested through its abstraction forms: one form
//! per position `i` that keeps `oi` and replaces every other object by its
//! reduction `r(o)`. Identity reduction gives plain IW, type reduction gives
//! AIW, and base reduction (every object collapsed to the root type) gives
//! BAIW. Goal atoms are never abstracted.
//!
//! Forms are interned to dense `u32` ids keyed by a canonical encoding
//! `[pred, slot, slot, ..]` where a slot is `obj << 1` or `(type << 1) | 1`.

use alloc::boxed::Box;
use alloc::vec::Vec;
use core::fmt;

use hashbrown::{HashMap, HashSet};

use crate::ground::{AtomId, State, Task};
use crate::pddl::{ObjectId, PredId, TypeId, TypeTree};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Reduction {
    /// `r(o) = o`
    Identity,
    /// `r(o) = type(o)`
    Type,
    /// `r(o) = object` (the root type)
    Base,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Slot {
    Object(ObjectId),
    Type(TypeId),
}

impl Slot {
    fn code(self) -> u32 {
        match self {
            Slot::Object(o) => o.0 << 1,
            Slot::Type(t) => (t.0 << 1) | 1,
        }
    }

    fn decode(code: u32) -> Slot {
        if code & 1 == 0 {
            Slot::Object(ObjectId(code >> 1))
        } else {
            Slot::Type(TypeId(code >> 1))
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct AbstractAtom {
    pub pred: PredId,
    pub slots: Vec<Slot>,
}

impl AbstractAtom {
    fn key(&self) -> Box<[u32]> {
        core::iter::once(self.pred.0)
            .chain(self.slots.iter().map(|s| s.code()))
            .collect()
    }

    fn from_key(key: &[u32]) -> Self {
        AbstractAtom {
            pred: PredId(key[0]),
            slots: key[1..].iter().map(|&c| Slot::decode(c)).collect(),
        }
    }

    /// Renders e.g. `at(bob, location)`; type slots are printed by type name.
    pub fn display<'a>(&'a self, task: &'a Task) -> impl fmt::Display + 'a {
        struct D<'a>(&'a AbstractAtom, &'a Task);
        impl fmt::Display for D<'_> {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{}(", self.1.domain().predicate(self.0.pred).name)?;
                for (i, s) in self.0.slots.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    match *s {
                        Slot::Object(o) => f.write_str(self.1.object_name(o))?,
                        Slot::Type(t) => f.write_str(self.1.type_name(t))?,
                    }
                }
                f.write_str(")")
            }
        }
        D(self, task)
    }
}

/// All abstraction forms of `atom`.
///
/// Identity reduction and goal atoms yield the concrete atom alone, as do
/// nullary atoms. Otherwise an n-ary atom yields n forms, form `i` keeping
/// slot `i` concrete.
pub fn abstraction_forms(task: &Task, atom: AtomId, red: Reduction, goal: &[AtomId]) -> Vec<AbstractAtom> {
    let g = task.atom(atom);
    let concrete = || AbstractAtom {
        pred: g.pred,
        slots: g.args.iter().map(|o| Slot::Object(*o)).collect(),
    };
    if red == Reduction::Identity || g.args.is_empty() || goal.binary_search(&atom).is_ok() {
        return alloc::vec![concrete()];
    }
    let reduce = |o: ObjectId| match red {
        Reduction::Type => Slot::Type(task.object_type(o)),
        Reduction::Base => Slot::Type(TypeTree::ROOT),
        Reduction::Identity => Slot::Object(o),
    };
    (0..g.args.len())
        .map(|keep| AbstractAtom {
            pred: g.pred,
            slots: g
                .args
                .iter()
                .enumerate()
                .map(|(i, &o)| if i == keep { Slot::Object(o) } else { reduce(o) })
                .collect(),
        })
        .collect()
}

/// Upper bound on the number of distinct width-1 forms a type-reduced table
/// can ever hold: `Σ_p arity·t^(arity-1)·|O| + |goal| + #nullary predicates`.
pub fn novel_capacity_bound(task: &Task) -> usize {
    let t = task.types().len();
    let n = task.num_objects();
    let lifted: usize = task
        .domain()
        .predicates
        .iter()
        .map(|p| match p.arity() {
            0 => 1,
            m => m * t.pow(m as u32 - 1) * n,
        })
        .sum();
    lifted + task.goal().len()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct UnsupportedWidth(pub usize);

impl fmt::Display for UnsupportedWidth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "novelty width {} is not supported (expected 1 or 2)", self.0)
    }
}

impl core::error::Error for UnsupportedWidth {}

/// Seen-set over abstraction forms (width 1) and pairs of forms (width 2).
pub struct NoveltyTable<'t> {
    task: &'t Task,
    k: usize,
    reduction: Reduction,
    form_ids: HashMap<Box<[u32]>, u32>,
    form_keys: Vec<Box<[u32]>>,
    atom_forms: HashMap<AtomId, Box<[u32]>>,
    seen1: HashSet<u32>,
    seen2: HashSet<(u32, u32)>,
}

impl<'t> NoveltyTable<'t> {
    pub fn new(task: &'t Task, k: usize, reduction: Reduction) -> Result<Self, UnsupportedWidth> {
        if !(1..=2).contains(&k) {
            return Err(UnsupportedWidth(k));
        }
        Ok(NoveltyTable {
            task,
            k,
            reduction,
            form_ids: HashMap::new(),
            form_keys: Vec::new(),
            atom_forms: HashMap::new(),
            seen1: HashSet::new(),
            seen2: HashSet::new(),
        })
    }

    pub fn width(&self) -> usize {
        self.k
    }

    pub fn reduction(&self) -> Reduction {
        self.reduction
    }

    /// Number of seen entries: forms plus form pairs.
    pub fn seen_len(&self) -> usize {
        self.seen1.len() + self.seen2.len()
    }

    /// The seen width-1 forms, in no particular order.
    pub fn seen_forms(&self) -> impl Iterator<Item = AbstractAtom> + '_ {
        self.seen1
            .iter()
            .map(|&f| AbstractAtom::from_key(&self.form_keys[f as usize]))
    }

    fn forms(&mut self, atom: AtomId) -> Box<[u32]> {
        if let Some(f) = self.atom_forms.get(&atom) {
            return f.clone();
        }
        let ids: Box<[u32]> = abstraction_forms(self.task, atom, self.reduction, self.task.goal())
            .into_iter()
            .map(|form| {
                let key = form.key();
                if let Some(&id) = self.form_ids.get(&key) {
                    return id;
                }
                let id = self.form_keys.len() as u32;
                self.form_keys.push(key.clone());
                self.form_ids.insert(key, id);
                id
            })
            .collect();
        self.atom_forms.insert(atom, ids.clone());
        ids
    }

    fn state_forms(&mut self, s: &State) -> Vec<Box<[u32]>> {
        s.atoms().iter().map(|&a| self.forms(a)).collect()
    }

    /// Visits every width-1 entry and, for k = 2, every pair entry of `s`.
    /// Stops early when `f` returns true; returns whether it did.
    fn any_entry(&mut self, s: &State, mut f: impl FnMut(&mut Self, Entry) -> bool) -> bool {
        let forms = self.state_forms(s);
        let mut hit = false;
        for fs in &forms {
            for &x in fs.iter() {
                hit |= f(self, Entry::Single(x));
            }
        }
        if self.k == 2 {
            for i in 0..forms.len() {
                for j in i + 1..forms.len() {
                    for &x in forms[i].iter() {
                        for &y in forms[j].iter() {
                            hit |= f(self, Entry::Pair(x.min(y), x.max(y)));
                        }
                    }
                }
            }
        }
        hit
    }

    /// Whether `s` has an unseen entry, without registering anything.
    pub fn is_novel(&mut self, s: &State) -> bool {
        self.any_entry(s, |t, e| match e {
            Entry::Single(x) => !t.seen1.contains(&x),
            Entry::Pair(x, y) => !t.seen2.contains(&(x, y)),
        })
    }

    /// Registers every entry of `s`.
    pub fn register(&mut self, s: &State) {
        self.check_and_register(s);
    }

    /// Registers every entry of `s`; returns true iff at least one was unseen.
    pub fn check_and_register(&mut self, s: &State) -> bool {
        self.any_entry(s, |t, e| match e {
            Entry::Single(x) => t.seen1.insert(x),
            Entry::Pair(x, y) => t.seen2.insert((x, y)),
        })
    }
}

#[derive(Clone, Copy)]
enum Entry {
    Single(u32),
    Pair(u32, u32),
}
