//! Atom interning, states and successor generation.
//!
//! Actions are never enumerated up front. For every schema the matcher walks
//! the preconditions (static predicates first) and binds parameters against
//! the tuples actually present in the state, so only atoms touched by some
//! reachable state or applicable action are ever interned.

use alloc::boxed::Box;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::hash::{Hash, Hasher};

use hashbrown::{Equivalent, HashMap};
use spin::RwLock;

use crate::pddl::{
    ActionSchema, Domain, Instance, ObjectId, PredId, SchemaId, Term, TypeId, TypeTree,
};

/// Dense handle of an interned ground atom.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AtomId(pub u32);

impl AtomId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct GroundAtom {
    pub pred: PredId,
    pub args: Box<[ObjectId]>,
}

impl Hash for GroundAtom {
    fn hash<H: Hasher>(&self, state: &mut H) {
        AtomRef {
            pred: self.pred,
            args: &self.args,
        }
        .hash(state)
    }
}

#[derive(Hash)]
struct AtomRef<'a> {
    pred: PredId,
    args: &'a [ObjectId],
}

impl Equivalent<GroundAtom> for AtomRef<'_> {
    fn equivalent(&self, key: &GroundAtom) -> bool {
        self.pred == key.pred && *self.args == *key.args
    }
}

#[derive(Default)]
struct RegistryInner {
    atoms: Vec<GroundAtom>,
    index: HashMap<GroundAtom, AtomId>,
}

/// Append-only interner for ground atoms. Safe to share between threads.
#[derive(Default)]
pub struct AtomRegistry {
    inner: RwLock<RegistryInner>,
}

impl AtomRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// Interns without arity or type checks.
    pub fn intern_unchecked(&self, pred: PredId, args: &[ObjectId]) -> AtomId {
        let key = AtomRef { pred, args };
        if let Some(&id) = self.inner.read().index.get(&key) {
            return id;
        }
        let mut w = self.inner.write();
        if let Some(&id) = w.index.get(&key) {
            return id;
        }
        let id = AtomId(w.atoms.len() as u32);
        let atom = GroundAtom {
            pred,
            args: args.into(),
        };
        w.atoms.push(atom.clone());
        w.index.insert(atom, id);
        id
    }

    pub fn lookup(&self, pred: PredId, args: &[ObjectId]) -> Option<AtomId> {
        self.inner.read().index.get(&AtomRef { pred, args }).copied()
    }

    pub fn get(&self, id: AtomId) -> GroundAtom {
        self.inner.read().atoms[id.index()].clone()
    }

    /// Read access for bulk lookups. Do not intern while holding a view.
    pub fn view(&self) -> RegistryView<'_> {
        RegistryView {
            guard: self.inner.read(),
        }
    }

    pub fn len(&self) -> usize {
        self.inner.read().atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

pub struct RegistryView<'a> {
    guard: spin::RwLockReadGuard<'a, RegistryInner>,
}

impl RegistryView<'_> {
    pub fn atom(&self, id: AtomId) -> &GroundAtom {
        &self.guard.atoms[id.index()]
    }
}

/// A state: a sorted, duplicate-free set of atoms.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct State(Vec<AtomId>);

impl State {
    pub fn new(atoms: impl IntoIterator<Item = AtomId>) -> Self {
        let mut v: Vec<AtomId> = atoms.into_iter().collect();
        v.sort_unstable();
        v.dedup();
        State(v)
    }

    pub fn atoms(&self) -> &[AtomId] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, a: AtomId) -> bool {
        self.0.binary_search(&a).is_ok()
    }

    /// True iff every atom of the sorted slice `atoms` is in the state.
    pub fn contains_all(&self, atoms: &[AtomId]) -> bool {
        atoms.iter().all(|a| self.contains(*a))
    }

    pub fn count_contained(&self, atoms: &[AtomId]) -> usize {
        atoms.iter().filter(|a| self.contains(**a)).count()
    }

    /// Atoms of `self` that are not in `other`, in ascending order.
    pub fn difference<'a>(&'a self, other: &'a State) -> impl Iterator<Item = AtomId> + 'a {
        self.0.iter().copied().filter(move |a| !other.contains(*a))
    }

    /// `(self \ del) ∪ add`; fails if the preconditions do not hold.
    pub fn apply(&self, a: &GroundAction) -> Result<State, GroundError> {
        if !self.contains_all(&a.pre) {
            return Err(GroundError::PreconditionViolation);
        }
        let mut out = Vec::with_capacity(self.0.len() + a.add.len());
        let (mut i, mut j) = (0, 0);
        let kept = |x: &AtomId| a.del.binary_search(x).is_err();
        while i < self.0.len() || j < a.add.len() {
            let next = match (self.0.get(i), a.add.get(j)) {
                (Some(&x), Some(&y)) if x < y => {
                    i += 1;
                    if !kept(&x) {
                        continue;
                    }
                    x
                }
                (Some(&x), Some(&y)) if x == y => {
                    i += 1;
                    j += 1;
                    x
                }
                (_, Some(&y)) => {
                    j += 1;
                    y
                }
                (Some(&x), None) => {
                    i += 1;
                    if !kept(&x) {
                        continue;
                    }
                    x
                }
                (None, None) => unreachable!(),
            };
            out.push(next);
        }
        Ok(State(out))
    }
}

/// A fully instantiated action. `pre`, `add` and `del` are sorted and
/// `add ∩ del = ∅` (an atom both added and deleted is kept).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct GroundAction {
    pub schema: SchemaId,
    pub args: Vec<ObjectId>,
    pub pre: Vec<AtomId>,
    pub add: Vec<AtomId>,
    pub del: Vec<AtomId>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GroundError {
    ArityMismatch {
        name: String,
        expected: usize,
        found: usize,
    },
    TypeMismatch {
        name: String,
        position: usize,
    },
    UnknownObject(u32),
    UnknownName(String),
    PreconditionViolation,
}

impl fmt::Display for GroundError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GroundError::ArityMismatch {
                name,
                expected,
                found,
            } => write!(f, "`{name}` expects {expected} arguments, got {found}"),
            GroundError::TypeMismatch { name, position } => {
                write!(f, "argument {} of `{name}` has the wrong type", position + 1)
            }
            GroundError::UnknownObject(o) => write!(f, "unknown object id {o}"),
            GroundError::UnknownName(n) => write!(f, "unknown name `{n}`"),
            GroundError::PreconditionViolation => f.write_str("action is not applicable"),
        }
    }
}

impl core::error::Error for GroundError {}

struct SchemaMatcher {
    /// Precondition indices, static predicates first.
    pre_order: Vec<usize>,
    /// Parameters that no precondition binds.
    free_params: Vec<usize>,
}

/// Per-predicate argument tuples of one state, stored flat.
struct StateIndex {
    tuples: Vec<(usize, Vec<ObjectId>)>,
}

/// A parsed domain and instance with the interning and matching machinery.
pub struct Task {
    domain: Domain,
    instance: Instance,
    registry: AtomRegistry,
    object_types: Vec<TypeId>,
    /// `subtype[a * |T| + b]` iff `a ⊑ b`.
    subtype: Vec<bool>,
    objects_of_type: Vec<Vec<ObjectId>>,
    static_preds: Vec<bool>,
    schema_order: Vec<SchemaId>,
    matchers: Vec<SchemaMatcher>,
    init: State,
    goal: State,
}

impl Task {
    pub fn new(domain: Domain, instance: Instance) -> Result<Task, GroundError> {
        let types = &domain.types;
        let nt = types.len();
        let mut subtype = alloc::vec![false; nt * nt];
        for a in types.ids() {
            for b in types.ids() {
                subtype[a.index() * nt + b.index()] = types.is_subtype(a, b);
            }
        }
        let object_types: Vec<TypeId> = instance.objects.iter().map(|o| o.ty).collect();
        let objects_of_type = types
            .ids()
            .map(|t| {
                (0..object_types.len())
                    .filter(|&o| subtype[object_types[o].index() * nt + t.index()])
                    .map(|o| ObjectId(o as u32))
                    .collect()
            })
            .collect();
        let mut static_preds = alloc::vec![true; domain.predicates.len()];
        for a in &domain.actions {
            for x in a.add.iter().chain(&a.del) {
                static_preds[x.pred.index()] = false;
            }
        }
        let mut schema_order: Vec<SchemaId> =
            (0..domain.actions.len() as u32).map(SchemaId).collect();
        schema_order.sort_by(|a, b| domain.schema(*a).name.cmp(&domain.schema(*b).name));
        let matchers = domain
            .actions
            .iter()
            .map(|a| {
                let mut pre_order: Vec<usize> = (0..a.pre.len()).collect();
                pre_order.sort_by_key(|&i| !static_preds[a.pre[i].pred.index()]);
                let free_params = (0..a.params.len())
                    .filter(|p| {
                        !a.pre
                            .iter()
                            .any(|x| x.args.contains(&Term::Param(*p)))
                    })
                    .collect();
                SchemaMatcher {
                    pre_order,
                    free_params,
                }
            })
            .collect();

        let mut task = Task {
            domain,
            instance,
            registry: AtomRegistry::new(),
            object_types,
            subtype,
            objects_of_type,
            static_preds,
            schema_order,
            matchers,
            init: State::default(),
            goal: State::default(),
        };
        let facts = |task: &Task, facts: &[crate::pddl::Fact]| -> Result<State, GroundError> {
            let ids = facts
                .iter()
                .map(|f| task.intern(f.pred, &f.args))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(State::new(ids))
        };
        task.init = facts(&task, &task.instance.init)?;
        task.goal = facts(&task, &task.instance.goal)?;
        Ok(task)
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn instance(&self) -> &Instance {
        &self.instance
    }

    pub fn registry(&self) -> &AtomRegistry {
        &self.registry
    }

    pub fn initial_state(&self) -> &State {
        &self.init
    }

    /// Goal atoms, sorted.
    pub fn goal(&self) -> &[AtomId] {
        self.goal.atoms()
    }

    pub fn num_objects(&self) -> usize {
        self.object_types.len()
    }

    pub fn object_type(&self, o: ObjectId) -> TypeId {
        self.object_types[o.index()]
    }

    pub fn is_static(&self, p: PredId) -> bool {
        self.static_preds[p.index()]
    }

    fn is_subtype(&self, a: TypeId, b: TypeId) -> bool {
        self.subtype[a.index() * self.domain.types.len() + b.index()]
    }

    /// Interns `pred(args)` after checking arity and argument types.
    pub fn intern(&self, pred: PredId, args: &[ObjectId]) -> Result<AtomId, GroundError> {
        let def = self
            .domain
            .predicates
            .get(pred.index())
            .ok_or_else(|| GroundError::UnknownName(format!("predicate #{}", pred.0)))?;
        if def.arity() != args.len() {
            return Err(GroundError::ArityMismatch {
                name: def.name.clone(),
                expected: def.arity(),
                found: args.len(),
            });
        }
        for (i, (o, t)) in args.iter().zip(&def.arg_types).enumerate() {
            let ot = *self
                .object_types
                .get(o.index())
                .ok_or(GroundError::UnknownObject(o.0))?;
            if !self.is_subtype(ot, *t) {
                return Err(GroundError::TypeMismatch {
                    name: def.name.clone(),
                    position: i,
                });
            }
        }
        Ok(self.registry.intern_unchecked(pred, args))
    }

    /// Interns an atom given by names, e.g. `("on", &["a", "b"])`.
    pub fn intern_named(&self, pred: &str, args: &[&str]) -> Result<AtomId, GroundError> {
        let p = self
            .domain
            .predicate_id(pred)
            .ok_or_else(|| GroundError::UnknownName(pred.into()))?;
        let objs = args
            .iter()
            .map(|n| {
                self.instance
                    .object_id(n)
                    .ok_or_else(|| GroundError::UnknownName((*n).into()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        self.intern(p, &objs)
    }

    pub fn atom(&self, id: AtomId) -> GroundAtom {
        self.registry.get(id)
    }

    pub fn is_goal(&self, s: &State) -> bool {
        s.contains_all(self.goal.atoms())
    }

    /// `|g ∩ s|`.
    pub fn satisfied_goals(&self, s: &State) -> usize {
        s.count_contained(self.goal.atoms())
    }

    /// Instantiates a schema with explicit arguments, checking arity and types.
    pub fn ground_action(&self, schema: SchemaId, args: &[ObjectId]) -> Result<GroundAction, GroundError> {
        let a = self
            .domain
            .actions
            .get(schema.index())
            .ok_or_else(|| GroundError::UnknownName(format!("schema #{}", schema.0)))?;
        if a.params.len() != args.len() {
            return Err(GroundError::ArityMismatch {
                name: a.name.clone(),
                expected: a.params.len(),
                found: args.len(),
            });
        }
        for (i, (o, p)) in args.iter().zip(&a.params).enumerate() {
            let ot = *self
                .object_types
                .get(o.index())
                .ok_or(GroundError::UnknownObject(o.0))?;
            if !self.is_subtype(ot, p.ty) {
                return Err(GroundError::TypeMismatch {
                    name: a.name.clone(),
                    position: i,
                });
            }
        }
        Ok(self.instantiate(schema, args.into()))
    }

    fn instantiate(&self, schema: SchemaId, args: Vec<ObjectId>) -> GroundAction {
        let a = self.domain.schema(schema);
        let mut buf = Vec::new();
        let mut ground = |atoms: &[crate::pddl::LiftedAtom]| -> Vec<AtomId> {
            let mut ids: Vec<AtomId> = atoms
                .iter()
                .map(|x| {
                    buf.clear();
                    buf.extend(x.args.iter().map(|t| match *t {
                        Term::Param(i) => args[i],
                        Term::Constant(o) => o,
                    }));
                    self.registry.intern_unchecked(x.pred, &buf)
                })
                .collect();
            ids.sort_unstable();
            ids.dedup();
            ids
        };
        let pre = ground(&a.pre);
        let add = ground(&a.add);
        let mut del = ground(&a.del);
        del.retain(|d| add.binary_search(d).is_err());
        GroundAction {
            schema,
            args,
            pre,
            add,
            del,
        }
    }

    fn index_state(&self, s: &State) -> StateIndex {
        let mut tuples: Vec<(usize, Vec<ObjectId>)> =
            alloc::vec![(0, Vec::new()); self.domain.predicates.len()];
        let view = self.registry.view();
        for &id in s.atoms() {
            let atom = view.atom(id);
            let slot = &mut tuples[atom.pred.index()];
            slot.0 += 1;
            slot.1.extend_from_slice(&atom.args);
        }
        StateIndex { tuples }
    }

    /// All ground actions whose preconditions hold in `s`, sorted by schema
    /// name and then by argument tuple.
    pub fn applicable_actions(&self, s: &State) -> Vec<GroundAction> {
        let index = self.index_state(s);
        let mut out = Vec::new();
        let mut bindings = Vec::new();
        for &sid in &self.schema_order {
            let schema = self.domain.schema(sid);
            let matcher = &self.matchers[sid.index()];
            bindings.clear();
            let mut binding = alloc::vec![None; schema.params.len()];
            self.match_pre(schema, matcher, &index, 0, &mut binding, &mut bindings);
            bindings.sort_unstable();
            bindings.dedup();
            out.extend(bindings.drain(..).map(|args| self.instantiate(sid, args)));
        }
        out
    }

    fn match_pre(
        &self,
        schema: &ActionSchema,
        m: &SchemaMatcher,
        index: &StateIndex,
        depth: usize,
        binding: &mut Vec<Option<ObjectId>>,
        out: &mut Vec<Vec<ObjectId>>,
    ) {
        if depth == m.pre_order.len() {
            self.bind_free(schema, m, 0, binding, out);
            return;
        }
        let atom = &schema.pre[m.pre_order[depth]];
        let arity = atom.args.len();
        let (count, flat) = &index.tuples[atom.pred.index()];
        let mut newly = Vec::with_capacity(arity);
        for i in 0..*count {
            let tuple = &flat[i * arity..(i + 1) * arity];
            let mut ok = true;
            for (term, &obj) in atom.args.iter().zip(tuple) {
                match *term {
                    Term::Constant(c) => ok = c == obj,
                    Term::Param(p) => match binding[p] {
                        Some(v) => ok = v == obj,
                        None => {
                            ok = self.is_subtype(self.object_types[obj.index()], schema.params[p].ty);
                            if ok {
                                binding[p] = Some(obj);
                                newly.push(p);
                            }
                        }
                    },
                }
                if !ok {
                    break;
                }
            }
            if ok {
                self.match_pre(schema, m, index, depth + 1, binding, out);
            }
            for p in newly.drain(..) {
                binding[p] = None;
            }
        }
    }

    fn bind_free(
        &self,
        schema: &ActionSchema,
        m: &SchemaMatcher,
        k: usize,
        binding: &mut Vec<Option<ObjectId>>,
        out: &mut Vec<Vec<ObjectId>>,
    ) {
        if k == m.free_params.len() {
            out.push(binding.iter().map(|b| b.expect("all parameters bound")).collect());
            return;
        }
        let p = m.free_params[k];
        for &o in &self.objects_of_type[schema.params[p].ty.index()] {
            binding[p] = Some(o);
            self.bind_free(schema, m, k + 1, binding, out);
        }
        binding[p] = None;
    }

    pub fn object_name(&self, o: ObjectId) -> &str {
        &self.instance.object(o).name
    }

    pub fn type_name(&self, t: TypeId) -> &str {
        self.domain.types.name(t)
    }

    pub fn types(&self) -> &TypeTree {
        &self.domain.types
    }

    /// `(pred a b)`.
    pub fn atom_string(&self, id: AtomId) -> String {
        let atom = self.atom(id);
        let mut s = format!("({}", self.domain.predicate(atom.pred).name);
        for o in atom.args.iter() {
            s.push(' ');
            s.push_str(self.object_name(*o));
        }
        s.push(')');
        s
    }

    /// `(schema a b)`, the usual plan-file form.
    pub fn action_string(&self, a: &GroundAction) -> String {
        let mut s = format!("({}", self.domain.schema(a.schema).name);
        for o in &a.args {
            s.push(' ');
            s.push_str(self.object_name(*o));
        }
        s.push(')');
        s
    }
}
