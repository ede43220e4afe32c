//! Small built-in graphs used by tests, examples and the documentation.

use crate::hin::{load_instance_graph, InstanceGraph};

/// The shipped toy fixture (see `fixtures/toy/` at the workspace root):
/// five types, nine entities, eleven triples. JohnDoe is the deliberate
/// graduate who is not a citizen.
pub const TOY_TRIPLES: &str = include_str!("../../../fixtures/toy/triples.tsv");
pub const TOY_TYPES: &str = include_str!("../../../fixtures/toy/types.tsv");

/// Load the toy fixture. Panics only if the embedded fixture is broken.
pub fn toy_graph() -> InstanceGraph {
    load_instance_graph(TOY_TRIPLES, TOY_TYPES).expect("toy fixture is well-formed")
}
