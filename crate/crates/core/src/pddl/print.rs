//! PDDL pretty-printing. Re-parsing the output yields a structurally equal model.

use core::fmt::{self, Display, Formatter, Write};

use super::{Domain, Instance, LiftedAtom, Object, Term, TypeTree};

fn write_objects(f: &mut Formatter<'_>, types: &TypeTree, objs: &[Object]) -> fmt::Result {
    for o in objs {
        write!(f, " {} - {}", o.name, types.name(o.ty))?;
    }
    Ok(())
}

fn write_lifted(f: &mut Formatter<'_>, d: &Domain, params: &[super::Param], a: &LiftedAtom) -> fmt::Result {
    write!(f, "({}", d.predicate(a.pred).name)?;
    for t in &a.args {
        match *t {
            Term::Param(i) => write!(f, " {}", params[i].name)?,
            Term::Constant(o) => write!(f, " {}", d.constants[o.index()].name)?,
        }
    }
    f.write_char(')')
}

impl Display for Domain {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        writeln!(f, "(define (domain {})", self.name)?;
        if !self.requirements.is_empty() {
            writeln!(f, "  (:requirements {})", self.requirements.join(" "))?;
        }
        if self.types.len() > 1 {
            f.write_str("  (:types")?;
            for t in self.types.ids().skip(1) {
                let parent = self.types.parent(t).unwrap_or(TypeTree::ROOT);
                write!(f, " {} - {}", self.types.name(t), self.types.name(parent))?;
            }
            f.write_str(")\n")?;
        }
        if !self.constants.is_empty() {
            f.write_str("  (:constants")?;
            write_objects(f, &self.types, &self.constants)?;
            f.write_str(")\n")?;
        }
        f.write_str("  (:predicates")?;
        for p in &self.predicates {
            write!(f, " ({}", p.name)?;
            for (i, t) in p.arg_types.iter().enumerate() {
                write!(f, " ?x{i} - {}", self.types.name(*t))?;
            }
            f.write_char(')')?;
        }
        f.write_str(")\n")?;
        for a in &self.actions {
            write!(f, "  (:action {}\n    :parameters (", a.name)?;
            for (i, p) in a.params.iter().enumerate() {
                if i > 0 {
                    f.write_char(' ')?;
                }
                write!(f, "{} - {}", p.name, self.types.name(p.ty))?;
            }
            f.write_str(")\n    :precondition (and")?;
            for x in &a.pre {
                f.write_char(' ')?;
                write_lifted(f, self, &a.params, x)?;
            }
            f.write_str(")\n    :effect (and")?;
            for x in &a.add {
                f.write_char(' ')?;
                write_lifted(f, self, &a.params, x)?;
            }
            for x in &a.del {
                f.write_str(" (not ")?;
                write_lifted(f, self, &a.params, x)?;
                f.write_char(')')?;
            }
            f.write_str("))\n")?;
        }
        f.write_str(")\n")
    }
}

/// Display adapter for an instance; needs its domain for names.
pub struct InstanceDisplay<'a> {
    pub domain: &'a Domain,
    pub instance: &'a Instance,
}

impl Instance {
    pub fn display<'a>(&'a self, domain: &'a Domain) -> InstanceDisplay<'a> {
        InstanceDisplay {
            domain,
            instance: self,
        }
    }
}

impl Display for InstanceDisplay<'_> {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        let (d, i) = (self.domain, self.instance);
        writeln!(f, "(define (problem {})", i.name)?;
        writeln!(f, "  (:domain {})", i.domain_name)?;
        f.write_str("  (:objects")?;
        write_objects(f, &d.types, &i.objects[d.constants.len()..])?;
        f.write_str(")\n  (:init")?;
        let fact = |f: &mut Formatter<'_>, x: &super::Fact| -> fmt::Result {
            write!(f, " ({}", d.predicate(x.pred).name)?;
            for o in &x.args {
                write!(f, " {}", i.object(*o).name)?;
            }
            f.write_char(')')
        };
        for x in &i.init {
            fact(f, x)?;
        }
        f.write_str(")\n  (:goal (and")?;
        for x in &i.goal {
            fact(f, x)?;
        }
        f.write_str(")))\n")
    }
}
