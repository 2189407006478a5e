//! Typed STRIPS domain and instance model.
//!
//! Only `:strips` and `:typing` are accepted. Identifiers are case-folded to
//! lowercase. Domain constants are merged into the instance object list ahead
//! of the instance's own objects, so a constant's [`ObjectId`] is the same in
//! the domain's action schemas and in every instance.

mod parse;
mod print;
pub(crate) mod sexpr;

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

pub use parse::{parse_domain, parse_instance};
pub use sexpr::Pos;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TypeId(pub u32);

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PredId(pub u32);

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ObjectId(pub u32);

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SchemaId(pub u32);

impl TypeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl PredId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl ObjectId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl SchemaId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Type hierarchy rooted at the universal type `object`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TypeTree {
    names: Vec<String>,
    parents: Vec<Option<TypeId>>,
}

impl Default for TypeTree {
    fn default() -> Self {
        Self::new()
    }
}

impl TypeTree {
    pub const ROOT: TypeId = TypeId(0);
    pub const ROOT_NAME: &'static str = "object";

    pub fn new() -> Self {
        Self {
            names: alloc::vec![String::from(Self::ROOT_NAME)],
            parents: alloc::vec![None],
        }
    }

    /// Adds a type under `parent`. Returns `None` if the name already exists.
    pub fn add(&mut self, name: &str, parent: TypeId) -> Option<TypeId> {
        if self.lookup(name).is_some() || parent.index() >= self.names.len() {
            return None;
        }
        let id = TypeId(self.names.len() as u32);
        self.names.push(name.into());
        self.parents.push(Some(parent));
        Some(id)
    }

    pub fn lookup(&self, name: &str) -> Option<TypeId> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| TypeId(i as u32))
    }

    pub fn name(&self, t: TypeId) -> &str {
        &self.names[t.index()]
    }

    pub fn parent(&self, t: TypeId) -> Option<TypeId> {
        self.parents[t.index()]
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn ids(&self) -> impl Iterator<Item = TypeId> {
        (0..self.names.len() as u32).map(TypeId)
    }

    /// True iff `sup` lies on the parent chain of `sub` (reflexive).
    pub fn is_subtype(&self, sub: TypeId, sup: TypeId) -> bool {
        let mut cur = Some(sub);
        while let Some(t) = cur {
            if t == sup {
                return true;
            }
            cur = self.parents[t.index()];
        }
        false
    }

    /// Name-based variant of [`is_subtype`](Self::is_subtype).
    pub fn is_subtype_named(&self, sub: &str, sup: &str) -> Result<bool, UnknownType> {
        let a = self.lookup(sub).ok_or_else(|| UnknownType(sub.into()))?;
        let b = self.lookup(sup).ok_or_else(|| UnknownType(sup.into()))?;
        Ok(self.is_subtype(a, b))
    }

    /// Number of types on the longest chain from a leaf up to the root, root included.
    pub fn depth(&self) -> usize {
        self.ids()
            .map(|t| {
                let mut n = 1;
                let mut cur = self.parent(t);
                while let Some(p) = cur {
                    n += 1;
                    cur = self.parent(p);
                }
                n
            })
            .max()
            .unwrap_or(1)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UnknownType(pub String);

impl fmt::Display for UnknownType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "unknown type `{}`", self.0)
    }
}

impl core::error::Error for UnknownType {}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PredicateDef {
    pub name: String,
    pub arg_types: Vec<TypeId>,
}

impl PredicateDef {
    pub fn arity(&self) -> usize {
        self.arg_types.len()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Param {
    pub name: String,
    pub ty: TypeId,
}

/// Argument of a lifted atom: a schema parameter (by position) or a domain constant.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Term {
    Param(usize),
    Constant(ObjectId),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LiftedAtom {
    pub pred: PredId,
    pub args: Vec<Term>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ActionSchema {
    pub name: String,
    pub params: Vec<Param>,
    pub pre: Vec<LiftedAtom>,
    pub add: Vec<LiftedAtom>,
    pub del: Vec<LiftedAtom>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Object {
    pub name: String,
    pub ty: TypeId,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Domain {
    pub name: String,
    pub requirements: Vec<String>,
    pub types: TypeTree,
    pub constants: Vec<Object>,
    pub predicates: Vec<PredicateDef>,
    pub actions: Vec<ActionSchema>,
}

impl Domain {
    pub fn predicate(&self, p: PredId) -> &PredicateDef {
        &self.predicates[p.index()]
    }

    pub fn predicate_id(&self, name: &str) -> Option<PredId> {
        self.predicates
            .iter()
            .position(|p| p.name == name)
            .map(|i| PredId(i as u32))
    }

    pub fn schema(&self, a: SchemaId) -> &ActionSchema {
        &self.actions[a.index()]
    }

    pub fn schema_id(&self, name: &str) -> Option<SchemaId> {
        self.actions
            .iter()
            .position(|a| a.name == name)
            .map(|i| SchemaId(i as u32))
    }

    pub fn max_arity(&self) -> usize {
        self.predicates.iter().map(PredicateDef::arity).max().unwrap_or(0)
    }
}

/// A ground atom as written in an instance file.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Fact {
    pub pred: PredId,
    pub args: Vec<ObjectId>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Instance {
    pub name: String,
    pub domain_name: String,
    /// Domain constants first, then the instance's own objects.
    pub objects: Vec<Object>,
    pub init: Vec<Fact>,
    pub goal: Vec<Fact>,
}

impl Instance {
    pub fn object_id(&self, name: &str) -> Option<ObjectId> {
        self.objects
            .iter()
            .position(|o| o.name == name)
            .map(|i| ObjectId(i as u32))
    }

    pub fn object(&self, o: ObjectId) -> &Object {
        &self.objects[o.index()]
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ParseErrorKind {
    Syntax(String),
    UnsupportedRequirement(String),
    /// A construct outside typed STRIPS (negation, conditional effects, fluents, ...).
    Unsupported(String),
    UndeclaredType(String),
    UndeclaredPredicate(String),
    UnknownObject(String),
    UnknownVariable(String),
    Duplicate(String),
    ArityMismatch {
        predicate: String,
        expected: usize,
        found: usize,
    },
    TypeMismatch(String),
    DomainMismatch {
        expected: String,
        found: String,
    },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub line: u32,
    pub column: u32,
}

impl ParseError {
    pub(crate) fn new(kind: ParseErrorKind, pos: Pos) -> Self {
        Self {
            kind,
            line: pos.line,
            column: pos.column,
        }
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: ", self.line, self.column)?;
        match &self.kind {
            ParseErrorKind::Syntax(m) => write!(f, "syntax error: {m}"),
            ParseErrorKind::UnsupportedRequirement(r) => write!(f, "unsupported requirement `{r}`"),
            ParseErrorKind::Unsupported(m) => write!(f, "unsupported construct: {m}"),
            ParseErrorKind::UndeclaredType(t) => write!(f, "undeclared type `{t}`"),
            ParseErrorKind::UndeclaredPredicate(p) => write!(f, "undeclared predicate `{p}`"),
            ParseErrorKind::UnknownObject(o) => write!(f, "unknown object `{o}`"),
            ParseErrorKind::UnknownVariable(v) => write!(f, "unknown variable `{v}`"),
            ParseErrorKind::Duplicate(n) => write!(f, "duplicate declaration of `{n}`"),
            ParseErrorKind::ArityMismatch {
                predicate,
                expected,
                found,
            } => write!(
                f,
                "predicate `{predicate}` expects {expected} arguments, got {found}"
            ),
            ParseErrorKind::TypeMismatch(m) => write!(f, "type mismatch: {m}"),
            ParseErrorKind::DomainMismatch { expected, found } => {
                write!(f, "instance is for domain `{found}`, expected `{expected}`")
            }
        }
    }
}

impl core::error::Error for ParseError {}

#[cfg(test)]
mod tests {
    use super::*;

    fn spanner_types() -> TypeTree {
        let mut t = TypeTree::new();
        let loc = t.add("location", TypeTree::ROOT).unwrap();
        let locatable = t.add("locatable", TypeTree::ROOT).unwrap();
        t.add("man", locatable).unwrap();
        t.add("spanner", locatable).unwrap();
        let _ = loc;
        t
    }

    #[test]
    fn subtype_examples() {
        let t = spanner_types();
        assert_eq!(t.is_subtype_named("man", "locatable"), Ok(true));
        assert_eq!(t.is_subtype_named("object", "object"), Ok(true));
        assert_eq!(t.is_subtype_named("location", "locatable"), Ok(false));
        assert_eq!(t.is_subtype_named("locatable", "man"), Ok(false));
        assert_eq!(
            t.is_subtype_named("robot", "object"),
            Err(UnknownType("robot".into()))
        );
        assert_eq!(t.depth(), 3);
    }

    #[test]
    fn duplicate_type_rejected() {
        let mut t = TypeTree::new();
        assert!(t.add("a", TypeTree::ROOT).is_some());
        assert!(t.add("a", TypeTree::ROOT).is_none());
        assert!(t.add("object", TypeTree::ROOT).is_none());
    }
}
