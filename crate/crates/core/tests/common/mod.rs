#![allow(dead_code)]

pub mod brute;
pub mod gen;
pub mod oracle;

use std::path::PathBuf;

use tlplan::pddl::{self, GroundOptions, ParsedDomain, ParsedProblem};
use tlplan::GroundedTask;

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

pub fn read_fixture(name: &str) -> String {
    std::fs::read_to_string(fixture_path(name)).unwrap()
}

pub fn depots_domain() -> ParsedDomain {
    pddl::parse_domain(&read_fixture("depots-domain.pddl")).unwrap()
}

pub fn depots_problem(name: &str) -> ParsedProblem {
    pddl::parse_problem(&read_fixture(&format!("{name}.pddl"))).unwrap()
}

/// Grounds one of the bundled depots problems.
pub fn depots(name: &str) -> GroundedTask {
    pddl::ground(&depots_domain(), &depots_problem(name), &GroundOptions::default()).unwrap()
}
