//! Canonical PDDL text for parsed domains and problems. Parsing the output
//! gives back an equal structure.

use std::fmt::Write;

use super::*;

fn typed(list: &[Typed], var: bool) -> String {
    let prefix = if var { "?" } else { "" };
    list.iter()
        .map(|t| format!("{prefix}{} - {}", t.name, t.ty))
        .collect::<Vec<_>>()
        .join(" ")
}

fn term(t: &Term) -> String {
    match t {
        Term::Var(v) => format!("?{v}"),
        Term::Const(c) => c.clone(),
    }
}

fn atom(a: &Atom) -> String {
    let mut s = format!("({}", a.predicate);
    for t in &a.args {
        s.push(' ');
        s.push_str(&term(t));
    }
    s.push(')');
    s
}

fn fact(f: &Fact) -> String {
    let mut s = format!("({}", f.predicate);
    for a in &f.args {
        s.push(' ');
        s.push_str(a);
    }
    s.push(')');
    s
}

fn decls(list: &[PredicateDecl]) -> String {
    list.iter()
        .map(|d| {
            let params = typed(&d.params, true);
            if params.is_empty() {
                format!("({})", d.name)
            } else {
                format!("({} {params})", d.name)
            }
        })
        .collect::<Vec<_>>()
        .join(" ")
}

pub(super) fn domain(d: &ParsedDomain) -> String {
    let mut s = format!("(define (domain {})\n", d.name);
    if !d.requirements.is_empty() {
        let _ = writeln!(s, "  (:requirements {})", d.requirements.join(" "));
    }
    if !d.types.is_empty() {
        let types: Vec<String> = d.types.iter().map(|(t, p)| format!("{t} - {p}")).collect();
        let _ = writeln!(s, "  (:types {})", types.join(" "));
    }
    if !d.constants.is_empty() {
        let _ = writeln!(s, "  (:constants {})", typed(&d.constants, false));
    }
    if !d.predicates.is_empty() {
        let _ = writeln!(s, "  (:predicates {})", decls(&d.predicates));
    }
    if !d.functions.is_empty() {
        let _ = writeln!(s, "  (:functions {})", decls(&d.functions));
    }
    for a in &d.actions {
        let _ = writeln!(s, "  (:durative-action {}", a.name);
        let _ = writeln!(s, "    :parameters ({})", typed(&a.params, true));
        let dur = match &a.duration {
            DurationExpr::Const(t) => t.to_string(),
            DurationExpr::Function { name, args } => atom(&Atom {
                predicate: name.clone(),
                args: args.clone(),
            }),
        };
        let _ = writeln!(s, "    :duration (= ?duration {dur})");
        let conds: Vec<String> = a
            .conditions
            .iter()
            .map(|c| {
                let when = match c.when {
                    CondTime::AtStart => "at start",
                    CondTime::AtEnd => "at end",
                    CondTime::OverAll => "over all",
                };
                format!("({when} {})", atom(&c.atom))
            })
            .collect();
        let _ = writeln!(s, "    :condition (and {})", conds.join(" "));
        let effs: Vec<String> = a
            .effects
            .iter()
            .map(|e| {
                let when = match e.when {
                    EffTime::AtStart => "at start",
                    EffTime::AtEnd => "at end",
                };
                if e.positive {
                    format!("({when} {})", atom(&e.atom))
                } else {
                    format!("({when} (not {}))", atom(&e.atom))
                }
            })
            .collect();
        let _ = writeln!(s, "    :effect (and {}))", effs.join(" "));
    }
    s.push(')');
    s.push('\n');
    s
}

pub(super) fn constraint(c: &ParsedConstraint) -> String {
    let spec = crate::model::Proposition::new(&c.phi.predicate, &c.phi.args);
    let psi = c.psi.as_ref().map(|f| crate::model::Proposition::new(&f.predicate, &f.args));
    crate::trajectory::Constraint { op: c.op, phi: spec, psi }.to_string()
}

pub(super) fn problem(p: &ParsedProblem) -> String {
    let mut s = format!("(define (problem {})\n  (:domain {})\n", p.name, p.domain);
    if !p.objects.is_empty() {
        let _ = writeln!(s, "  (:objects {})", typed(&p.objects, false));
    }
    let mut init: Vec<String> = p.init.iter().map(fact).collect();
    init.extend(p.tils.iter().map(|t| {
        if t.positive {
            format!("(at {} {})", t.time, fact(&t.fact))
        } else {
            format!("(at {} (not {}))", t.time, fact(&t.fact))
        }
    }));
    init.extend(p.functions.iter().map(|f| {
        let head = fact(&Fact {
            predicate: f.name.clone(),
            args: f.args.clone(),
        });
        format!("(= {head} {})", f.value)
    }));
    let _ = writeln!(s, "  (:init {})", init.join(" "));
    let mut goals: Vec<String> = p.goals.iter().map(fact).collect();
    goals.extend(p.goal_constraints.iter().map(constraint));
    let _ = writeln!(s, "  (:goal (and {}))", goals.join(" "));
    if !p.constraints.is_empty() {
        let cs: Vec<String> = p.constraints.iter().map(constraint).collect();
        let _ = writeln!(s, "  (:constraints (and {}))", cs.join(" "));
    }
    s.push(')');
    s.push('\n');
    s
}
