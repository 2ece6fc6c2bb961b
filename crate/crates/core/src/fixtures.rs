//! Small example structures used throughout the test suites and by the
//! command-line `laws` corpus.

use crate::structures::{Signature, Structure};

fn binary(name: &str, universe: &[&str], edges: &[(&str, &str)]) -> Structure {
    let sig = Signature::new([(name, 2)]).expect("positive arity");
    let tuples = edges
        .iter()
        .map(|(u, v)| vec![u.to_string(), v.to_string()])
        .collect();
    Structure::new(sig, universe.to_vec(), [(name.to_string(), tuples)])
        .expect("well-formed fixture")
}

/// Three elements `a, b, c` with `R(a,b)` and `R(b,c)`.
pub fn path_a() -> Structure {
    binary("R", &["a", "b", "c"], &[("a", "b"), ("b", "c")])
}

/// The directed triangle: `R(a,b)`, `R(b,c)`, `R(c,a)`.
pub fn tri_b() -> Structure {
    binary("R", &["a", "b", "c"], &[("a", "b"), ("b", "c"), ("c", "a")])
}

/// A directed path on four elements.
pub fn path_4() -> Structure {
    binary(
        "R",
        &["a", "b", "c", "d"],
        &[("a", "b"), ("b", "c"), ("c", "d")],
    )
}

/// A directed cycle on four elements.
pub fn cycle_4() -> Structure {
    binary(
        "R",
        &["a", "b", "c", "d"],
        &[("a", "b"), ("b", "c"), ("c", "d"), ("d", "a")],
    )
}

/// One binary and one ternary relation sharing elements.
pub fn ternary() -> Structure {
    let sig = Signature::new([("R", 2), ("T", 3)]).expect("positive arity");
    Structure::new(
        sig,
        vec!["a", "b", "c", "d"],
        [
            (
                "R".to_string(),
                vec![vec!["a".into(), "b".into()], vec!["c".into(), "d".into()]],
            ),
            (
                "T".to_string(),
                vec![vec!["a".into(), "b".into(), "c".into()]],
            ),
        ],
    )
    .expect("well-formed fixture")
}

/// The named corpus, in a fixed order.
pub fn corpus() -> Vec<(&'static str, Structure)> {
    vec![
        ("pathA", path_a()),
        ("triB", tri_b()),
        ("path4", path_4()),
        ("cycle4", cycle_4()),
        ("ternary", ternary()),
    ]
}
