mod common;

use common::*;
use tlplan::pddl::{self, GroundOptions, PddlError};
use tlplan::Time;

#[test]
fn drive_instances_follow_links() {
    let task = depots("within40");
    let drives = task.actions.iter().filter(|a| a.name == "drive").count();
    // Count the link facts in the fixture text independently.
    let links = read_fixture("within40.pddl").matches("(link ").count();
    assert_eq!(drives, links);
    assert_eq!(drives, 8);
    assert!(task.find_action("drive", &["t0", "d0", "d2", "dr0"]).is_none());
}

#[test]
fn upper_bound_from_deadlines() {
    assert_eq!(depots("within25").upper_bound, Time::from_int(25));
    assert_eq!(depots("two-goals").upper_bound, Time::from_int(35));
    assert_eq!(depots("within25").deadlines.len(), 1);
}

#[test]
fn missing_upper_bound_is_an_error() {
    let text = read_fixture("within40.pddl").replace("(within 40 (at c0 d2))", "(at c0 d2)");
    let problem = pddl::parse_problem(&text).unwrap();
    let err = pddl::ground(&depots_domain(), &problem, &GroundOptions::default()).unwrap_err();
    assert!(matches!(err, PddlError::Task(tlplan::model::TaskError::NoUpperBound)));
    let opts = GroundOptions {
        upper_bound: Some(Time::from_int(60)),
        ..Default::default()
    };
    assert_eq!(pddl::ground(&depots_domain(), &problem, &opts).unwrap().upper_bound, Time::from_int(60));
}

#[test]
fn print_then_parse_is_a_fixpoint() {
    let d = depots_domain();
    assert_eq!(pddl::parse_domain(&d.to_pddl()).unwrap(), d);
    for name in ["within25", "two-goals", "always", "always-within", "hold-during", "at-end", "swap-at-most-once"] {
        let p = depots_problem(name);
        let again = pddl::parse_problem(&p.to_pddl()).unwrap();
        assert_eq!(again, p, "{name}");
        assert_eq!(again.to_pddl(), p.to_pddl());
    }
}

#[test]
fn grounding_ignores_object_order() {
    let text = read_fixture("always.pddl");
    let permuted = text.replace("p0 p1 p2 p3 p4 - pallet c0 c1 c2 - crate", "c2 c0 c1 - crate p4 p3 p2 p1 p0 - pallet");
    assert_ne!(text, permuted);
    let a = pddl::ground(&depots_domain(), &pddl::parse_problem(&text).unwrap(), &GroundOptions::default()).unwrap();
    let b = pddl::ground(&depots_domain(), &pddl::parse_problem(&permuted).unwrap(), &GroundOptions::default()).unwrap();
    assert_eq!(a, b);
}

#[test]
fn load_and_unload_take_two() {
    let task = depots("within25");
    let load = task.find_action("load", &["c0", "t0", "p0", "d0"]).unwrap();
    assert_eq!(task.action(load).dur, Time::from_int(2));
    let in_truck = task.lookup("(in c0 t0)").unwrap();
    assert!(task.action(load).e_add.contains(&in_truck));
}
