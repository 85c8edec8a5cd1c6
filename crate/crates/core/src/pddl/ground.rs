//! Instantiates lifted schemata over typed objects.
//!
//! Predicates that no action effect and no timed literal touches are static.
//! Static conditions filter bindings and are then dropped from the ground
//! actions; static facts only survive in the task when a goal or constraint
//! mentions them.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use super::*;
use crate::model::{ActionSpec, GroundedTask, Proposition, TaskSpec};
use crate::trajectory::Constraint;

#[derive(Clone, Debug, Default)]
pub struct GroundOptions {
    /// Overrides the plan-horizon bound derived from deadlines.
    pub upper_bound: Option<Time>,
    pub epsilon: Option<Time>,
}

struct Types {
    parent: HashMap<String, String>,
}

impl Types {
    fn new(d: &ParsedDomain) -> Result<Types, PddlError> {
        let mut parent: HashMap<String, String> = HashMap::new();
        for (t, p) in &d.types {
            parent.insert(t.clone(), p.clone());
        }
        for p in d.types.iter().map(|(_, p)| p) {
            if p != "object" && !parent.contains_key(p) {
                return Err(PddlError::Undeclared {
                    kind: "type",
                    name: p.clone(),
                });
            }
        }
        Ok(Types { parent })
    }

    fn known(&self, t: &str) -> bool {
        t == "object" || self.parent.contains_key(t)
    }

    fn is_subtype<'a>(&'a self, mut t: &'a str, of: &str) -> bool {
        let mut steps = 0;
        loop {
            if t == of || of == "object" {
                return true;
            }
            match self.parent.get(t) {
                Some(p) if steps <= self.parent.len() => {
                    t = p;
                    steps += 1;
                }
                _ => return false,
            }
        }
    }
}

fn prop(f: &Fact) -> Proposition {
    Proposition::new(&f.predicate, &f.args)
}

fn check_arity(decls: &HashMap<&str, usize>, predicate: &str, n: usize) -> Result<(), PddlError> {
    match decls.get(predicate) {
        None => Err(PddlError::Undeclared {
            kind: "predicate",
            name: predicate.to_string(),
        }),
        Some(&k) if k != n => Err(PddlError::Type(format!("{predicate} takes {k} arguments, got {n}"))),
        _ => Ok(()),
    }
}

fn instantiate(atom: &Atom, binding: &HashMap<&str, &str>) -> Option<Proposition> {
    let mut args = Vec::with_capacity(atom.args.len());
    for t in &atom.args {
        match t {
            Term::Const(c) => args.push(c.as_str()),
            Term::Var(v) => args.push(*binding.get(v.as_str())?),
        }
    }
    Some(Proposition::new(&atom.predicate, &args))
}

/// Grounds `problem` against `domain` into a task.
pub fn ground(domain: &ParsedDomain, problem: &ParsedProblem, opts: &GroundOptions) -> Result<GroundedTask, PddlError> {
    let types = Types::new(domain)?;
    let decls: HashMap<&str, usize> = domain
        .predicates
        .iter()
        .map(|p| (p.name.as_str(), p.params.len()))
        .collect();

    // Objects sorted by name so the result is independent of input order.
    let mut objects: BTreeMap<String, String> = BTreeMap::new();
    for o in domain.constants.iter().chain(&problem.objects) {
        if !types.known(&o.ty) {
            return Err(PddlError::Undeclared {
                kind: "type",
                name: o.ty.clone(),
            });
        }
        if let Some(prev) = objects.insert(o.name.clone(), o.ty.clone()) {
            if prev != o.ty {
                return Err(PddlError::Type(format!("object {} declared as {prev} and {}", o.name, o.ty)));
            }
        }
    }
    let check_fact = |f: &Fact| -> Result<(), PddlError> {
        check_arity(&decls, &f.predicate, f.args.len())?;
        for a in &f.args {
            if !objects.contains_key(a) {
                return Err(PddlError::Undeclared {
                    kind: "object",
                    name: a.clone(),
                });
            }
        }
        Ok(())
    };
    for f in problem.init.iter().chain(problem.tils.iter().map(|t| &t.fact)).chain(&problem.goals) {
        check_fact(f)?;
    }
    for c in problem.all_constraints() {
        check_fact(&c.phi)?;
        if let Some(psi) = &c.psi {
            check_fact(psi)?;
        }
    }

    let mut fluent: HashSet<&str> = problem.tils.iter().map(|t| t.fact.predicate.as_str()).collect();
    for a in &domain.actions {
        for e in &a.effects {
            fluent.insert(&e.atom.predicate);
        }
    }
    let init: BTreeSet<Proposition> = problem.init.iter().map(prop).collect();
    let functions: HashMap<(String, Vec<String>), Time> = problem
        .functions
        .iter()
        .map(|f| ((f.name.clone(), f.args.clone()), f.value))
        .collect();

    let mut actions = Vec::new();
    for schema in &domain.actions {
        ground_schema(schema, &types, &decls, &objects, &fluent, &init, &functions, &mut actions)?;
    }

    // Relaxed reachability from the initial state and positive timed literals.
    let mut reached: HashSet<Proposition> = init.iter().filter(|p| fluent.contains(p.predicate.as_str())).cloned().collect();
    reached.extend(problem.tils.iter().filter(|t| t.positive).map(|t| prop(&t.fact)));
    let mut live = vec![false; actions.len()];
    loop {
        let mut changed = false;
        for (i, a) in actions.iter().enumerate() {
            if !live[i] && a.s_cond.iter().chain(&a.inv).chain(&a.e_cond).all(|p| reached.contains(p)) {
                live[i] = true;
                changed = true;
                for p in a.s_add.iter().chain(&a.e_add) {
                    reached.insert(p.clone());
                }
            }
        }
        if !changed {
            break;
        }
    }
    let actions: Vec<ActionSpec> = actions.into_iter().zip(live).filter(|(_, l)| *l).map(|(a, _)| a).collect();

    let mentioned: HashSet<Proposition> = problem
        .goals
        .iter()
        .chain(problem.all_constraints().flat_map(|c| std::iter::once(&c.phi).chain(c.psi.as_ref())))
        .map(prop)
        .collect();
    let init: Vec<Proposition> = init
        .into_iter()
        .filter(|p| fluent.contains(p.predicate.as_str()) || mentioned.contains(p))
        .collect();

    let spec = TaskSpec {
        actions,
        init,
        tils: problem.tils.iter().map(|t| (t.time, t.positive, prop(&t.fact))).collect(),
        goals: problem.goals.iter().map(prop).collect(),
        deadlines: Vec::new(),
        constraints: problem
            .all_constraints()
            .map(|c| Constraint {
                op: c.op,
                phi: prop(&c.phi),
                psi: c.psi.as_ref().map(prop),
            })
            .collect(),
        upper_bound: opts.upper_bound,
        epsilon: opts.epsilon,
    };
    Ok(GroundedTask::new(spec)?)
}

#[allow(clippy::too_many_arguments)]
fn ground_schema(
    schema: &ActionSchema,
    types: &Types,
    decls: &HashMap<&str, usize>,
    objects: &BTreeMap<String, String>,
    fluent: &HashSet<&str>,
    init: &BTreeSet<Proposition>,
    functions: &HashMap<(String, Vec<String>), Time>,
    out: &mut Vec<ActionSpec>,
) -> Result<(), PddlError> {
    let params: Vec<&str> = schema.params.iter().map(|p| p.name.as_str()).collect();
    for p in &schema.params {
        if !types.known(&p.ty) {
            return Err(PddlError::Undeclared {
                kind: "type",
                name: p.ty.clone(),
            });
        }
    }
    for atom in schema.conditions.iter().map(|c| &c.atom).chain(schema.effects.iter().map(|e| &e.atom)) {
        check_arity(decls, &atom.predicate, atom.args.len())?;
        for t in &atom.args {
            match t {
                Term::Var(v) if !params.contains(&v.as_str()) => {
                    return Err(PddlError::Undeclared {
                        kind: "variable",
                        name: format!("?{v}"),
                    })
                }
                Term::Const(c) if !objects.contains_key(c) => {
                    return Err(PddlError::Undeclared {
                        kind: "object",
                        name: c.clone(),
                    })
                }
                _ => {}
            }
        }
    }
    let candidates: Vec<Vec<&str>> = schema
        .params
        .iter()
        .map(|p| {
            objects
                .iter()
                .filter(|(_, ty)| types.is_subtype(ty, &p.ty))
                .map(|(o, _)| o.as_str())
                .collect()
        })
        .collect();
    // Each static condition is checked as soon as its last variable is bound.
    let statics: Vec<(usize, &Atom)> = schema
        .conditions
        .iter()
        .filter(|c| !fluent.contains(c.atom.predicate.as_str()))
        .map(|c| {
            let depth = c
                .atom
                .args
                .iter()
                .filter_map(|t| match t {
                    Term::Var(v) => params.iter().position(|p| p == v).map(|i| i + 1),
                    Term::Const(_) => None,
                })
                .max()
                .unwrap_or(0);
            (depth, &c.atom)
        })
        .collect();

    let mut binding: Vec<&str> = Vec::with_capacity(params.len());
    let mut stack: Vec<usize> = vec![0];
    loop {
        let depth = binding.len();
        let Some(next) = stack.last_mut() else { break };
        if *next >= candidates.get(depth).map_or(0, |c| c.len()) && depth < params.len() {
            stack.pop();
            binding.pop();
            continue;
        }
        if depth == params.len() {
            let map: HashMap<&str, &str> = params.iter().copied().zip(binding.iter().copied()).collect();
            if let Some(a) = build(schema, &map, &binding, fluent, functions) {
                out.push(a);
            }
            stack.pop();
            binding.pop();
            continue;
        }
        let obj = candidates[depth][*next];
        *next += 1;
        binding.push(obj);
        let map: HashMap<&str, &str> = params.iter().copied().zip(binding.iter().copied()).collect();
        let ok = statics
            .iter()
            .filter(|(d, _)| *d == binding.len())
            .all(|(_, atom)| instantiate(atom, &map).is_some_and(|p| init.contains(&p)));
        if ok {
            stack.push(0);
        } else {
            binding.pop();
        }
    }
    Ok(())
}

fn build(
    schema: &ActionSchema,
    map: &HashMap<&str, &str>,
    binding: &[&str],
    fluent: &HashSet<&str>,
    functions: &HashMap<(String, Vec<String>), Time>,
) -> Option<ActionSpec> {
    let dur = match &schema.duration {
        DurationExpr::Const(t) => *t,
        DurationExpr::Function { name, args } => {
            let args: Vec<String> = args
                .iter()
                .map(|t| match t {
                    Term::Const(c) => Some(c.clone()),
                    Term::Var(v) => map.get(v.as_str()).map(|s| s.to_string()),
                })
                .collect::<Option<_>>()?;
            *functions.get(&(name.clone(), args))?
        }
    };
    let mut a = ActionSpec {
        name: schema.name.clone(),
        params: binding.iter().map(|s| s.to_string()).collect(),
        dur,
        ..Default::default()
    };
    for c in &schema.conditions {
        if !fluent.contains(c.atom.predicate.as_str()) {
            continue;
        }
        let p = instantiate(&c.atom, map)?;
        match c.when {
            CondTime::AtStart => a.s_cond.push(p),
            CondTime::AtEnd => a.e_cond.push(p),
            CondTime::OverAll => a.inv.push(p),
        }
    }
    for e in &schema.effects {
        let p = instantiate(&e.atom, map)?;
        match (e.when, e.positive) {
            (EffTime::AtStart, true) => a.s_add.push(p),
            (EffTime::AtStart, false) => a.s_del.push(p),
            (EffTime::AtEnd, true) => a.e_add.push(p),
            (EffTime::AtEnd, false) => a.e_del.push(p),
        }
    }
    // Adding and deleting the same fact at one end point: the add wins.
    a.s_del.retain(|p| !a.s_add.contains(p));
    a.e_del.retain(|p| !a.e_add.contains(p));
    Some(a)
}
