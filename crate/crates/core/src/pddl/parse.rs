use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::sexpr::{read_one, Pos, Sexp};
use super::{
    ActionSchema, Domain, Fact, Instance, LiftedAtom, Object, ObjectId, Param, ParseError,
    ParseErrorKind, PredId, PredicateDef, Term, TypeId, TypeTree,
};

const SUPPORTED_REQUIREMENTS: &[&str] = &[":strips", ":typing"];

type Result<T> = core::result::Result<T, ParseError>;

fn err<T>(kind: ParseErrorKind, pos: Pos) -> Result<T> {
    Err(ParseError::new(kind, pos))
}

fn syntax<T>(msg: impl Into<String>, pos: Pos) -> Result<T> {
    err(ParseErrorKind::Syntax(msg.into()), pos)
}

fn expect_list<'a>(e: &'a Sexp, what: &str) -> Result<&'a [Sexp]> {
    e.as_list()
        .ok_or_else(|| ParseError::new(ParseErrorKind::Syntax(format!("expected {what}")), e.pos()))
}

fn expect_atom<'a>(e: &'a Sexp, what: &str) -> Result<&'a str> {
    e.as_atom()
        .ok_or_else(|| ParseError::new(ParseErrorKind::Syntax(format!("expected {what}")), e.pos()))
}

/// Splits a `(define (<kind> <name>) sections...)` form.
fn split_define<'a>(root: &'a Sexp, kind: &str) -> Result<(&'a str, &'a [Sexp])> {
    let items = expect_list(root, "`(define ...)`")?;
    if items.first().and_then(Sexp::as_atom) != Some("define") {
        return syntax("expected `define`", root.pos());
    }
    let header = items
        .get(1)
        .ok_or_else(|| ParseError::new(ParseErrorKind::Syntax(format!("missing `({kind} ...)`")), root.pos()))?;
    let h = expect_list(header, "definition header")?;
    match h {
        [Sexp::Atom(k, _), Sexp::Atom(name, _)] if k == kind => Ok((name, &items[2..])),
        _ => syntax(format!("expected `({kind} <name>)`"), header.pos()),
    }
}

/// A `name* - type name* - type name*` list. Untyped names get `None`.
fn typed_list(items: &[Sexp]) -> Result<Vec<(String, Option<String>, Pos)>> {
    let mut out = Vec::new();
    let mut pending: Vec<(String, Pos)> = Vec::new();
    let mut i = 0;
    while i < items.len() {
        let e = &items[i];
        match e {
            Sexp::Atom(a, p) if a == "-" => {
                let ty = match items.get(i + 1) {
                    Some(Sexp::Atom(t, _)) => t.clone(),
                    Some(l @ Sexp::List(..)) => {
                        return err(
                            ParseErrorKind::Unsupported("`either` types".into()),
                            l.pos(),
                        )
                    }
                    None => return syntax("type expected after `-`", *p),
                };
                if pending.is_empty() {
                    return syntax("`-` without preceding names", *p);
                }
                out.extend(pending.drain(..).map(|(n, p)| (n, Some(ty.clone()), p)));
                i += 2;
            }
            Sexp::Atom(a, p) => {
                pending.push((a.clone(), *p));
                i += 1;
            }
            Sexp::List(_, p) => return syntax("unexpected list in typed list", *p),
        }
    }
    out.extend(pending.into_iter().map(|(n, p)| (n, None, p)));
    Ok(out)
}

fn parse_requirements(items: &[Sexp]) -> Result<Vec<String>> {
    let mut reqs = Vec::new();
    for r in items {
        let name = expect_atom(r, "requirement flag")?;
        if !SUPPORTED_REQUIREMENTS.contains(&name) {
            return err(ParseErrorKind::UnsupportedRequirement(name.into()), r.pos());
        }
        if !reqs.iter().any(|x: &String| x == name) {
            reqs.push(name.into());
        }
    }
    Ok(reqs)
}

fn parse_types(items: &[Sexp]) -> Result<TypeTree> {
    let decls = typed_list(items)?;
    let mut entries: Vec<(String, String, Pos)> = Vec::new();
    for (name, parent, pos) in &decls {
        if name == TypeTree::ROOT_NAME {
            if parent.is_some() {
                return err(
                    ParseErrorKind::TypeMismatch("`object` cannot have a parent".into()),
                    *pos,
                );
            }
            continue;
        }
        if entries.iter().any(|(n, _, _)| n == name) {
            return err(ParseErrorKind::Duplicate(name.clone()), *pos);
        }
        let parent = parent.clone().unwrap_or_else(|| TypeTree::ROOT_NAME.into());
        entries.push((name.clone(), parent, *pos));
    }
    // Parent names that are never declared themselves hang off the root.
    let mut implicit = Vec::new();
    for (_, parent, pos) in &entries {
        if parent != TypeTree::ROOT_NAME
            && !entries.iter().any(|(n, _, _)| n == parent)
            && !implicit.iter().any(|(n, _, _): &(String, String, Pos)| n == parent)
        {
            implicit.push((parent.clone(), TypeTree::ROOT_NAME.into(), *pos));
        }
    }
    entries.extend(implicit);

    let mut tree = TypeTree::new();
    let mut remaining = entries;
    while !remaining.is_empty() {
        let before = remaining.len();
        remaining.retain(|(name, parent, _)| match tree.lookup(parent) {
            Some(p) => {
                tree.add(name, p);
                false
            }
            None => true,
        });
        if remaining.len() == before {
            let (name, _, pos) = &remaining[0];
            return err(
                ParseErrorKind::TypeMismatch(format!("cyclic type hierarchy at `{name}`")),
                *pos,
            );
        }
    }
    Ok(tree)
}

fn resolve_type(types: &TypeTree, name: Option<&str>, pos: Pos) -> Result<TypeId> {
    match name {
        None => Ok(TypeTree::ROOT),
        Some(n) => types
            .lookup(n)
            .ok_or_else(|| ParseError::new(ParseErrorKind::UndeclaredType(n.into()), pos)),
    }
}

fn parse_objects(types: &TypeTree, items: &[Sexp], into: &mut Vec<Object>) -> Result<()> {
    for (name, ty, pos) in typed_list(items)? {
        let ty = match ty.as_deref() {
            None => TypeTree::ROOT,
            Some(t) => types.lookup(t).ok_or_else(|| {
                ParseError::new(
                    ParseErrorKind::TypeMismatch(format!(
                        "object `{name}` has undeclared type `{t}`"
                    )),
                    pos,
                )
            })?,
        };
        if into.iter().any(|o| o.name == name) {
            return err(ParseErrorKind::Duplicate(name), pos);
        }
        into.push(Object { name, ty });
    }
    Ok(())
}

fn parse_predicates(types: &TypeTree, items: &[Sexp]) -> Result<Vec<PredicateDef>> {
    let mut preds: Vec<PredicateDef> = Vec::new();
    for p in items {
        let l = expect_list(p, "predicate declaration")?;
        let name = expect_atom(
            l.first().ok_or_else(|| ParseError::new(ParseErrorKind::Syntax("empty predicate".into()), p.pos()))?,
            "predicate name",
        )?;
        if preds.iter().any(|q| q.name == name) {
            return err(ParseErrorKind::Duplicate(name.into()), p.pos());
        }
        let mut arg_types = Vec::new();
        for (var, ty, pos) in typed_list(&l[1..])? {
            if !var.starts_with('?') {
                return syntax(format!("expected variable, found `{var}`"), pos);
            }
            arg_types.push(resolve_type(types, ty.as_deref(), pos)?);
        }
        preds.push(PredicateDef {
            name: name.into(),
            arg_types,
        });
    }
    Ok(preds)
}

/// Name resolution context for atoms.
struct Scope<'a> {
    types: &'a TypeTree,
    predicates: &'a [PredicateDef],
    params: &'a [Param],
    objects: &'a [Object],
}

impl Scope<'_> {
    fn predicate<'e>(&self, e: &'e Sexp) -> Result<(PredId, &'e [Sexp])> {
        let l = expect_list(e, "atom")?;
        let head = l
            .first()
            .ok_or_else(|| ParseError::new(ParseErrorKind::Syntax("empty atom".into()), e.pos()))?;
        let name = expect_atom(head, "predicate name")?;
        let id = self
            .predicates
            .iter()
            .position(|p| p.name == name)
            .ok_or_else(|| ParseError::new(ParseErrorKind::UndeclaredPredicate(name.into()), e.pos()))?;
        let args = &l[1..];
        let def = &self.predicates[id];
        if args.len() != def.arity() {
            return err(
                ParseErrorKind::ArityMismatch {
                    predicate: name.into(),
                    expected: def.arity(),
                    found: args.len(),
                },
                e.pos(),
            );
        }
        Ok((PredId(id as u32), args))
    }

    fn check_type(&self, pred: PredId, slot: usize, actual: TypeId, what: &str, pos: Pos) -> Result<()> {
        let def = &self.predicates[pred.index()];
        let expected = def.arg_types[slot];
        if self.types.is_subtype(actual, expected) {
            Ok(())
        } else {
            err(
                ParseErrorKind::TypeMismatch(format!(
                    "{what} of type `{}` used as argument {} of `{}` (expects `{}`)",
                    self.types.name(actual),
                    slot + 1,
                    def.name,
                    self.types.name(expected)
                )),
                pos,
            )
        }
    }

    fn object(&self, name: &str, pos: Pos) -> Result<ObjectId> {
        self.objects
            .iter()
            .position(|o| o.name == name)
            .map(|i| ObjectId(i as u32))
            .ok_or_else(|| ParseError::new(ParseErrorKind::UnknownObject(name.into()), pos))
    }

    fn lifted(&self, e: &Sexp) -> Result<LiftedAtom> {
        let (pred, args) = self.predicate(e)?;
        let mut terms = Vec::with_capacity(args.len());
        for (slot, a) in args.iter().enumerate() {
            let name = expect_atom(a, "term")?;
            if name.starts_with('?') {
                let idx = self
                    .params
                    .iter()
                    .position(|p| p.name == name)
                    .ok_or_else(|| ParseError::new(ParseErrorKind::UnknownVariable(name.into()), a.pos()))?;
                self.check_type(pred, slot, self.params[idx].ty, &format!("parameter `{name}`"), a.pos())?;
                terms.push(Term::Param(idx));
            } else {
                let o = self.object(name, a.pos())?;
                self.check_type(pred, slot, self.objects[o.index()].ty, &format!("constant `{name}`"), a.pos())?;
                terms.push(Term::Constant(o));
            }
        }
        Ok(LiftedAtom { pred, args: terms })
    }

    fn ground(&self, e: &Sexp) -> Result<Fact> {
        let (pred, args) = self.predicate(e)?;
        let mut objs = Vec::with_capacity(args.len());
        for (slot, a) in args.iter().enumerate() {
            let name = expect_atom(a, "object")?;
            if name.starts_with('?') {
                return syntax(format!("variable `{name}` in ground atom"), a.pos());
            }
            let o = self.object(name, a.pos())?;
            self.check_type(pred, slot, self.objects[o.index()].ty, &format!("object `{name}`"), a.pos())?;
            objs.push(o);
        }
        Ok(Fact { pred, args: objs })
    }
}

fn unsupported_condition(head: &str) -> Option<&'static str> {
    match head {
        "not" => Some("negative preconditions"),
        "or" | "imply" => Some("disjunctive conditions"),
        "exists" | "forall" => Some("quantified conditions"),
        "=" => Some("equality"),
        "<" | ">" | "<=" | ">=" => Some("numeric fluents"),
        _ => None,
    }
}

/// Flattens a positive conjunction into its atoms.
fn conjunction<'a>(e: &'a Sexp, out: &mut Vec<&'a Sexp>) -> Result<()> {
    let l = expect_list(e, "condition")?;
    match e.head() {
        None if l.is_empty() => Ok(()),
        Some("and") => l[1..].iter().try_for_each(|c| conjunction(c, out)),
        Some(h) => match unsupported_condition(h) {
            Some(what) => err(ParseErrorKind::Unsupported(what.into()), e.pos()),
            None => {
                out.push(e);
                Ok(())
            }
        },
        None => syntax("malformed condition", e.pos()),
    }
}

fn effects<'a>(e: &'a Sexp, add: &mut Vec<&'a Sexp>, del: &mut Vec<&'a Sexp>) -> Result<()> {
    let l = expect_list(e, "effect")?;
    match e.head() {
        None if l.is_empty() => Ok(()),
        Some("and") => l[1..].iter().try_for_each(|c| effects(c, add, del)),
        Some("not") => match l {
            [_, inner] if inner.as_list().is_some() => {
                del.push(inner);
                Ok(())
            }
            _ => syntax("`not` takes exactly one atom", e.pos()),
        },
        Some("when" | "forall") => err(ParseErrorKind::Unsupported("conditional effects".into()), e.pos()),
        Some("increase" | "decrease" | "assign" | "scale-up" | "scale-down") => {
            err(ParseErrorKind::Unsupported("numeric fluents".into()), e.pos())
        }
        Some(_) => {
            add.push(e);
            Ok(())
        }
        None => syntax("malformed effect", e.pos()),
    }
}

fn dedup_in_order<T: PartialEq>(items: Vec<T>) -> Vec<T> {
    let mut out: Vec<T> = Vec::with_capacity(items.len());
    for x in items {
        if !out.contains(&x) {
            out.push(x);
        }
    }
    out
}

fn parse_action(
    types: &TypeTree,
    predicates: &[PredicateDef],
    constants: &[Object],
    e: &Sexp,
) -> Result<ActionSchema> {
    let l = expect_list(e, "action")?;
    let name = expect_atom(
        l.get(1)
            .ok_or_else(|| ParseError::new(ParseErrorKind::Syntax("action name expected".into()), e.pos()))?,
        "action name",
    )?;
    let mut params = Vec::new();
    let mut pre_e = None;
    let mut eff_e = None;
    let mut i = 2;
    while i < l.len() {
        let key = expect_atom(&l[i], "action keyword")?;
        let val = l
            .get(i + 1)
            .ok_or_else(|| ParseError::new(ParseErrorKind::Syntax(format!("missing value for `{key}`")), l[i].pos()))?;
        match key {
            ":parameters" => {
                for (var, ty, pos) in typed_list(expect_list(val, "parameter list")?)? {
                    if !var.starts_with('?') {
                        return syntax(format!("expected variable, found `{var}`"), pos);
                    }
                    if params.iter().any(|p: &Param| p.name == var) {
                        return err(ParseErrorKind::Duplicate(var), pos);
                    }
                    let ty = resolve_type(types, ty.as_deref(), pos)?;
                    params.push(Param { name: var, ty });
                }
            }
            ":precondition" => pre_e = Some(val),
            ":effect" => eff_e = Some(val),
            other => return syntax(format!("unknown action keyword `{other}`"), l[i].pos()),
        }
        i += 2;
    }
    let scope = Scope {
        types,
        predicates,
        params: &params,
        objects: constants,
    };
    let mut pre_atoms = Vec::new();
    if let Some(p) = pre_e {
        conjunction(p, &mut pre_atoms)?;
    }
    let (mut add_atoms, mut del_atoms) = (Vec::new(), Vec::new());
    if let Some(x) = eff_e {
        effects(x, &mut add_atoms, &mut del_atoms)?;
    }
    let lift = |v: Vec<&Sexp>| -> Result<Vec<LiftedAtom>> {
        Ok(dedup_in_order(v.into_iter().map(|a| scope.lifted(a)).collect::<Result<Vec<_>>>()?))
    };
    Ok(ActionSchema {
        name: name.into(),
        pre: lift(pre_atoms)?,
        add: lift(add_atoms)?,
        del: lift(del_atoms)?,
        params,
    })
}

/// Parses a typed STRIPS domain.
pub fn parse_domain(text: &str) -> Result<Domain> {
    let root = read_one(text)?;
    let (name, sections) = split_define(&root, "domain")?;
    let mut domain = Domain {
        name: name.into(),
        requirements: Vec::new(),
        types: TypeTree::new(),
        constants: Vec::new(),
        predicates: Vec::new(),
        actions: Vec::new(),
    };
    let mut action_exprs = Vec::new();
    for s in sections {
        let l = expect_list(s, "domain section")?;
        let key = s
            .head()
            .ok_or_else(|| ParseError::new(ParseErrorKind::Syntax("empty section".into()), s.pos()))?;
        let body = &l[1..];
        match key {
            ":requirements" => domain.requirements = parse_requirements(body)?,
            ":types" => domain.types = parse_types(body)?,
            ":constants" => parse_objects(&domain.types, body, &mut domain.constants)?,
            ":predicates" => domain.predicates = parse_predicates(&domain.types, body)?,
            ":action" => action_exprs.push(s),
            ":functions" => return err(ParseErrorKind::Unsupported("numeric fluents".into()), s.pos()),
            ":derived" => return err(ParseErrorKind::Unsupported("derived predicates".into()), s.pos()),
            ":durative-action" => return err(ParseErrorKind::Unsupported("durative actions".into()), s.pos()),
            other => return syntax(format!("unknown domain section `{other}`"), s.pos()),
        }
    }
    for a in action_exprs {
        let schema = parse_action(&domain.types, &domain.predicates, &domain.constants, a)?;
        if domain.actions.iter().any(|x| x.name == schema.name) {
            return err(ParseErrorKind::Duplicate(schema.name), a.pos());
        }
        domain.actions.push(schema);
    }
    Ok(domain)
}

/// Parses an instance against an already parsed domain.
pub fn parse_instance(text: &str, domain: &Domain) -> Result<Instance> {
    let root = read_one(text)?;
    let (name, sections) = split_define(&root, "problem")?;
    let mut objects = domain.constants.clone();
    let mut domain_name = None;
    let mut init_e = Vec::new();
    let mut goal_e = Vec::new();
    for s in sections {
        let l = expect_list(s, "problem section")?;
        let key = s
            .head()
            .ok_or_else(|| ParseError::new(ParseErrorKind::Syntax("empty section".into()), s.pos()))?;
        let body = &l[1..];
        match key {
            ":domain" => {
                let d = expect_atom(
                    body.first()
                        .ok_or_else(|| ParseError::new(ParseErrorKind::Syntax("domain name expected".into()), s.pos()))?,
                    "domain name",
                )?;
                if d != domain.name {
                    return err(
                        ParseErrorKind::DomainMismatch {
                            expected: domain.name.clone(),
                            found: d.into(),
                        },
                        s.pos(),
                    );
                }
                domain_name = Some(d.to_string());
            }
            ":requirements" => {
                parse_requirements(body)?;
            }
            ":objects" => parse_objects(&domain.types, body, &mut objects)?,
            ":init" => {
                for f in body {
                    match f.head() {
                        Some("=") => return err(ParseErrorKind::Unsupported("numeric fluents".into()), f.pos()),
                        Some("not") => return err(ParseErrorKind::Unsupported("negative initial facts".into()), f.pos()),
                        _ => init_e.push(f),
                    }
                }
            }
            ":goal" => {
                let g = body
                    .first()
                    .ok_or_else(|| ParseError::new(ParseErrorKind::Syntax("goal expected".into()), s.pos()))?;
                conjunction(g, &mut goal_e)?;
            }
            ":metric" => return err(ParseErrorKind::Unsupported("metrics".into()), s.pos()),
            other => return syntax(format!("unknown problem section `{other}`"), s.pos()),
        }
    }
    let scope = Scope {
        types: &domain.types,
        predicates: &domain.predicates,
        params: &[],
        objects: &objects,
    };
    let init = dedup_in_order(init_e.iter().map(|f| scope.ground(f)).collect::<Result<Vec<_>>>()?);
    let goal = dedup_in_order(goal_e.iter().map(|f| scope.ground(f)).collect::<Result<Vec<_>>>()?);
    Ok(Instance {
        name: name.into(),
        domain_name: domain_name.unwrap_or_else(|| domain.name.clone()),
        objects,
        init,
        goal,
    })
}
