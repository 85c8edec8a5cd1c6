use super::sexpr::{self, SExpr};
use super::*;

fn atoms<'a>(items: &'a [SExpr], what: &str) -> Result<Vec<&'a str>, PddlError> {
    items.iter().map(|e| e.expect_atom(what)).collect()
}

/// Parses `a b - t c` style lists. Untyped names get type `object`.
fn typed_list(items: &[SExpr]) -> Result<Vec<Typed>, PddlError> {
    let mut out = Vec::new();
    let mut pending: Vec<String> = Vec::new();
    let mut i = 0;
    while i < items.len() {
        if let Some(l) = items[i].as_list() {
            let head = l.first().and_then(|e| e.as_atom()).unwrap_or("(");
            return Err(PddlError::UnsupportedFeature(head.to_string()));
        }
        let a = items[i].expect_atom("a name")?;
        if a == "-" {
            let ty = items
                .get(i + 1)
                .ok_or_else(|| PddlError::syntax(items[i].line(), "a type after `-`"))?;
            if let Some(l) = ty.as_list() {
                let head = l.first().and_then(|e| e.as_atom()).unwrap_or("(");
                return Err(PddlError::UnsupportedFeature(head.to_string()));
            }
            let ty = ty.expect_atom("a type name")?;
            if pending.is_empty() {
                return Err(PddlError::syntax(items[i].line(), "names before `-`"));
            }
            out.extend(pending.drain(..).map(|name| Typed { name, ty: ty.to_string() }));
            i += 2;
        } else {
            pending.push(a.to_string());
            i += 1;
        }
    }
    out.extend(pending.into_iter().map(|name| Typed { name, ty: "object".into() }));
    Ok(out)
}

fn strip_vars(params: Vec<Typed>, line: usize) -> Result<Vec<Typed>, PddlError> {
    params
        .into_iter()
        .map(|t| match t.name.strip_prefix('?') {
            Some(v) => Ok(Typed { name: v.to_string(), ty: t.ty }),
            None => Err(PddlError::syntax(line, "a `?variable`")),
        })
        .collect()
}

fn lifted_atom(e: &SExpr) -> Result<Atom, PddlError> {
    let items = e.expect_list("an atom")?;
    let (head, args) = items.split_first().ok_or_else(|| PddlError::syntax(e.line(), "a predicate name"))?;
    let predicate = head.expect_atom("a predicate name")?;
    if matches!(predicate, "not" | "and" | "or" | "imply" | "forall" | "exists" | "when" | "=") {
        return Err(PddlError::UnsupportedFeature(predicate.to_string()));
    }
    Ok(Atom {
        predicate: predicate.to_string(),
        args: atoms(args, "a term")?.into_iter().map(Term::parse).collect(),
    })
}

fn ground_fact(e: &SExpr) -> Result<Fact, PddlError> {
    let atom = lifted_atom(e)?;
    let args = atom
        .args
        .into_iter()
        .map(|t| match t {
            Term::Const(c) => Ok(c),
            Term::Var(_) => Err(PddlError::syntax(e.line(), "a ground atom")),
        })
        .collect::<Result<_, _>>()?;
    Ok(Fact {
        predicate: atom.predicate,
        args,
    })
}

/// Flattens `(and x y ...)`; anything else is a single item.
fn conjuncts(e: &SExpr) -> Vec<&SExpr> {
    match e.as_list() {
        Some(items) if e.head() == Some("and") => items[1..].iter().flat_map(conjuncts).collect(),
        Some([]) => vec![],
        _ => vec![e],
    }
}

fn number(e: &SExpr) -> Result<Time, PddlError> {
    let text = e.expect_atom("a number")?;
    text.parse().map_err(|_| PddlError::syntax(e.line(), "a number"))
}

fn parse_duration(e: &SExpr) -> Result<DurationExpr, PddlError> {
    let items = e.expect_list("a duration constraint")?;
    match items {
        [eq, var, value] if eq.as_atom() == Some("=") && var.as_atom() == Some("?duration") => match value {
            SExpr::Atom { .. } => Ok(DurationExpr::Const(number(value)?)),
            SExpr::List { items, line } => {
                let (head, args) = items.split_first().ok_or_else(|| PddlError::syntax(*line, "a function"))?;
                let name = head.expect_atom("a function name")?;
                if matches!(name, "+" | "-" | "*" | "/") {
                    return Err(PddlError::UnsupportedFeature(name.to_string()));
                }
                Ok(DurationExpr::Function {
                    name: name.to_string(),
                    args: atoms(args, "a term")?.into_iter().map(Term::parse).collect(),
                })
            }
        },
        [op, ..] if matches!(op.as_atom(), Some("<=") | Some(">=") | Some("and")) => {
            Err(PddlError::UnsupportedFeature(op.as_atom().unwrap_or_default().to_string()))
        }
        _ => Err(PddlError::syntax(e.line(), "(= ?duration <value>)")),
    }
}

fn timed_inner<'a>(e: &'a SExpr, what: &str) -> Result<(&'a str, &'a SExpr), PddlError> {
    let items = e.expect_list(what)?;
    match items {
        [at, when, inner] if at.as_atom() == Some("at") && matches!(when.as_atom(), Some("start") | Some("end")) => {
            Ok((if when.as_atom() == Some("start") { "at start" } else { "at end" }, inner))
        }
        [over, all, inner] if over.as_atom() == Some("over") && all.as_atom() == Some("all") => Ok(("over all", inner)),
        [head, ..] => match head.as_atom() {
            Some(h @ ("not" | "or" | "imply" | "forall" | "exists" | "when" | "preference")) => {
                Err(PddlError::UnsupportedFeature(h.to_string()))
            }
            _ => Err(PddlError::syntax(e.line(), what)),
        },
        [] => Err(PddlError::syntax(e.line(), what)),
    }
}

fn parse_conditions(e: &SExpr) -> Result<Vec<Condition>, PddlError> {
    let mut out = Vec::new();
    for c in conjuncts(e) {
        let (when, inner) = timed_inner(c, "a timed condition")?;
        if inner.head() == Some("not") {
            return Err(PddlError::UnsupportedFeature("negative condition".into()));
        }
        let when = match when {
            "at start" => CondTime::AtStart,
            "at end" => CondTime::AtEnd,
            _ => CondTime::OverAll,
        };
        out.push(Condition {
            when,
            atom: lifted_atom(inner)?,
        });
    }
    Ok(out)
}

fn parse_effects(e: &SExpr) -> Result<Vec<Effect>, PddlError> {
    let mut out = Vec::new();
    for c in conjuncts(e) {
        let (when, inner) = timed_inner(c, "a timed effect")?;
        let when = match when {
            "at start" => EffTime::AtStart,
            "at end" => EffTime::AtEnd,
            _ => return Err(PddlError::syntax(c.line(), "`at start` or `at end` effect")),
        };
        for lit in conjuncts(inner) {
            let (positive, atom) = match lit.as_list() {
                Some([not, a]) if not.as_atom() == Some("not") => (false, a),
                _ => (true, lit),
            };
            if matches!(atom.head(), Some("increase") | Some("decrease") | Some("assign")) {
                return Err(PddlError::UnsupportedFeature(atom.head().unwrap_or_default().to_string()));
            }
            out.push(Effect {
                when,
                positive,
                atom: lifted_atom(atom)?,
            });
        }
    }
    Ok(out)
}

fn parse_action(items: &[SExpr], line: usize) -> Result<ActionSchema, PddlError> {
    let name = items
        .get(1)
        .ok_or_else(|| PddlError::syntax(line, "an action name"))?
        .expect_atom("an action name")?
        .to_string();
    let mut params = Vec::new();
    let mut duration = None;
    let mut conditions = Vec::new();
    let mut effects = Vec::new();
    let mut i = 2;
    while i < items.len() {
        let key = items[i].expect_atom("an action keyword")?;
        let value = items
            .get(i + 1)
            .ok_or_else(|| PddlError::syntax(items[i].line(), "a value after the keyword"))?;
        match key {
            ":parameters" => params = strip_vars(typed_list(value.expect_list("a parameter list")?)?, value.line())?,
            ":duration" => duration = Some(parse_duration(value)?),
            ":condition" => conditions = parse_conditions(value)?,
            ":effect" => effects = parse_effects(value)?,
            _ => return Err(PddlError::UnsupportedFeature(key.to_string())),
        }
        i += 2;
    }
    Ok(ActionSchema {
        name,
        params,
        duration: duration.ok_or_else(|| PddlError::syntax(line, ":duration"))?,
        conditions,
        effects,
    })
}

fn declarations(items: &[SExpr]) -> Result<Vec<PredicateDecl>, PddlError> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < items.len() {
        let decl = items[i].expect_list("a declaration")?;
        let (head, rest) = decl
            .split_first()
            .ok_or_else(|| PddlError::syntax(items[i].line(), "a declaration"))?;
        out.push(PredicateDecl {
            name: head.expect_atom("a name")?.to_string(),
            params: strip_vars(typed_list(rest)?, items[i].line())?,
        });
        i += 1;
        // `(:functions (f ?x) - number)` style type annotations.
        if items.get(i).and_then(|e| e.as_atom()) == Some("-") {
            i += 2;
        }
    }
    Ok(out)
}

fn define_body<'a>(kind: &str, root: &'a SExpr) -> Result<(String, &'a [SExpr]), PddlError> {
    let items = root.expect_list("(define ...)")?;
    if items.first().and_then(|e| e.as_atom()) != Some("define") {
        return Err(PddlError::syntax(root.line(), "(define ...)"));
    }
    let header = items.get(1).ok_or_else(|| PddlError::syntax(root.line(), kind))?;
    match header.as_list() {
        Some([k, name]) if k.as_atom() == Some(kind) => Ok((name.expect_atom("a name")?.to_string(), &items[2..])),
        _ => Err(PddlError::syntax(header.line(), &format!("({kind} <name>)"))),
    }
}

pub fn parse_domain(text: &str) -> Result<ParsedDomain, PddlError> {
    let root = sexpr::parse(text)?;
    let (name, sections) = define_body("domain", &root)?;
    let mut d = ParsedDomain {
        name,
        ..Default::default()
    };
    for s in sections {
        let items = s.expect_list("a domain section")?;
        let key = s.head().ok_or_else(|| PddlError::syntax(s.line(), "a section keyword"))?;
        let rest = &items[1..];
        match key {
            ":requirements" => d.requirements = atoms(rest, "a requirement")?.into_iter().map(String::from).collect(),
            ":types" => d.types = typed_list(rest)?.into_iter().map(|t| (t.name, t.ty)).collect(),
            ":constants" => d.constants = typed_list(rest)?,
            ":predicates" => d.predicates = declarations(rest)?,
            ":functions" => d.functions = declarations(rest)?,
            ":durative-action" => d.actions.push(parse_action(items, s.line())?),
            other => return Err(PddlError::UnsupportedFeature(other.to_string())),
        }
    }
    Ok(d)
}

const MODAL: &[&str] = &[
    "always",
    "sometime",
    "within",
    "at-most-once",
    "sometime-after",
    "sometime-before",
    "always-within",
    "hold-during",
    "hold-after",
    "persistence",
    "within-from-end",
    "overlaps",
    "during",
];

fn is_modal(e: &SExpr) -> bool {
    match e.as_list() {
        Some([at, end, _]) if at.as_atom() == Some("at") && end.as_atom() == Some("end") => true,
        _ => e.head().is_some_and(|h| MODAL.contains(&h)),
    }
}

/// The goal descriptor argument of a modal operator, as a list of conjuncts.
fn modal_gd(e: &SExpr, op: &str) -> Result<Vec<Fact>, PddlError> {
    let mut out = Vec::new();
    for c in conjuncts(e) {
        if is_modal(c) {
            return Err(PddlError::NestedModality(op.to_string()));
        }
        match c.head() {
            Some("not") => return Err(PddlError::UnsupportedFeature(format!("negative literal in {op}"))),
            Some(h @ ("or" | "imply" | "forall" | "exists" | "preference")) => {
                return Err(PddlError::UnsupportedFeature(h.to_string()))
            }
            _ => out.push(ground_fact(c)?),
        }
    }
    if out.is_empty() {
        return Err(PddlError::syntax(e.line(), "a non-empty goal descriptor"));
    }
    Ok(out)
}

fn single(mut facts: Vec<Fact>, op: &str) -> Result<Fact, PddlError> {
    if facts.len() != 1 {
        return Err(PddlError::UnsupportedFeature(format!("conjunction inside {op}")));
    }
    Ok(facts.remove(0))
}

/// Parses one modal constraint. Conjunctions are split only where that
/// preserves the meaning.
fn parse_modal(e: &SExpr) -> Result<Vec<ParsedConstraint>, PddlError> {
    let items = e.expect_list("a constraint")?;
    let head = e.head().ok_or_else(|| PddlError::syntax(e.line(), "a modal operator"))?;
    if head == "preference" {
        return Err(PddlError::UnsupportedFeature("preference".into()));
    }
    let unary = |op: Modality, gd: &SExpr, split: bool| -> Result<Vec<ParsedConstraint>, PddlError> {
        let facts = modal_gd(gd, op.keyword())?;
        let facts = if split { facts } else { vec![single(facts, op.keyword())?] };
        Ok(facts
            .into_iter()
            .map(|phi| ParsedConstraint { op, phi, psi: None })
            .collect())
    };
    let binary = |op: Modality, a: &SExpr, b: &SExpr| -> Result<Vec<ParsedConstraint>, PddlError> {
        let phi = single(modal_gd(a, op.keyword())?, op.keyword())?;
        let psi = single(modal_gd(b, op.keyword())?, op.keyword())?;
        Ok(vec![ParsedConstraint { op, phi, psi: Some(psi) }])
    };
    let arity = |n: usize| -> Result<(), PddlError> {
        if items.len() == n + 1 {
            Ok(())
        } else {
            Err(PddlError::syntax(e.line(), &format!("{n} arguments to {head}")))
        }
    };
    match head {
        "at" => match items {
            [_, end, gd] if end.as_atom() == Some("end") => unary(Modality::AtEnd, gd, true),
            _ => Err(PddlError::syntax(e.line(), "(at end <GD>)")),
        },
        "always" => {
            arity(1)?;
            unary(Modality::Always, &items[1], true)
        }
        "sometime" => {
            arity(1)?;
            unary(Modality::Sometime, &items[1], false)
        }
        "at-most-once" => {
            arity(1)?;
            unary(Modality::AtMostOnce, &items[1], false)
        }
        "within" => {
            arity(2)?;
            unary(Modality::Within(number(&items[1])?), &items[2], false)
        }
        "hold-after" => {
            arity(2)?;
            unary(Modality::HoldAfter(number(&items[1])?), &items[2], false)
        }
        "persistence" => {
            arity(2)?;
            unary(Modality::Persistence(number(&items[1])?), &items[2], false)
        }
        "hold-during" => {
            arity(3)?;
            unary(Modality::HoldDuring(number(&items[1])?, number(&items[2])?), &items[3], true)
        }
        "sometime-after" => {
            arity(2)?;
            binary(Modality::SometimeAfter, &items[1], &items[2])
        }
        "sometime-before" => {
            arity(2)?;
            binary(Modality::SometimeBefore, &items[1], &items[2])
        }
        "overlaps" => {
            arity(2)?;
            binary(Modality::AllenOverlaps, &items[1], &items[2])
        }
        "during" => {
            arity(2)?;
            binary(Modality::AllenDuring, &items[1], &items[2])
        }
        "always-within" => {
            arity(3)?;
            binary(Modality::AlwaysWithin(number(&items[1])?), &items[2], &items[3])
        }
        "within-from-end" => {
            arity(3)?;
            binary(Modality::WithinFromEnd(number(&items[1])?), &items[2], &items[3])
        }
        other => Err(PddlError::UnknownModalOperator(other.to_string())),
    }
}

fn check_constraint(c: &ParsedConstraint) -> Result<(), PddlError> {
    let spec = crate::trajectory::Constraint {
        op: c.op,
        phi: (),
        psi: c.psi.as_ref().map(|_| ()),
    };
    spec.validate().map_err(|m| PddlError::Task(crate::model::TaskError::InvalidConstraint(m)))
}

fn parse_init(items: &[SExpr], p: &mut ParsedProblem) -> Result<(), PddlError> {
    for e in items {
        match e.as_list() {
            Some([at, t, lit]) if at.as_atom() == Some("at") && t.as_atom().is_some() && lit.as_list().is_some() => {
                let (positive, atom) = match lit.as_list() {
                    Some([not, a]) if not.as_atom() == Some("not") => (false, a),
                    _ => (true, lit),
                };
                p.tils.push(TimedLiteral {
                    time: number(t)?,
                    positive,
                    fact: ground_fact(atom)?,
                });
            }
            Some([eq, f, v]) if eq.as_atom() == Some("=") => {
                let fact = ground_fact(f)?;
                p.functions.push(FunctionValue {
                    name: fact.predicate,
                    args: fact.args,
                    value: number(v)?,
                });
            }
            _ => {
                if e.head() == Some("not") {
                    return Err(PddlError::UnsupportedFeature("negative initial literal".into()));
                }
                p.init.push(ground_fact(e)?)
            }
        }
    }
    Ok(())
}

pub fn parse_problem(text: &str) -> Result<ParsedProblem, PddlError> {
    let root = sexpr::parse(text)?;
    let (name, sections) = define_body("problem", &root)?;
    let mut p = ParsedProblem {
        name,
        ..Default::default()
    };
    for s in sections {
        let items = s.expect_list("a problem section")?;
        let key = s.head().ok_or_else(|| PddlError::syntax(s.line(), "a section keyword"))?;
        let rest = &items[1..];
        match key {
            ":domain" => match rest {
                [d] => p.domain = d.expect_atom("a domain name")?.to_string(),
                _ => return Err(PddlError::syntax(s.line(), "(:domain <name>)")),
            },
            ":requirements" => {}
            ":objects" => p.objects = typed_list(rest)?,
            ":init" => parse_init(rest, &mut p)?,
            ":goal" => {
                let [gd] = rest else {
                    return Err(PddlError::syntax(s.line(), "(:goal <GD>)"));
                };
                for g in conjuncts(gd) {
                    if is_modal(g) {
                        p.goal_constraints.extend(parse_modal(g)?);
                    } else if let Some(h @ ("not" | "or" | "imply" | "forall" | "exists" | "preference")) = g.head() {
                        return Err(PddlError::UnsupportedFeature(h.to_string()));
                    } else {
                        p.goals.push(ground_fact(g)?);
                    }
                }
            }
            ":constraints" => {
                let [c] = rest else {
                    return Err(PddlError::syntax(s.line(), "(:constraints <CON>)"));
                };
                for m in conjuncts(c) {
                    p.constraints.extend(parse_modal(m)?);
                }
            }
            ":metric" => return Err(PddlError::UnsupportedFeature(":metric".into())),
            other => return Err(PddlError::UnsupportedFeature(other.to_string())),
        }
    }
    for c in p.all_constraints() {
        check_constraint(c)?;
    }
    Ok(p)
}
