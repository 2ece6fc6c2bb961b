//! Finite relational structures with guarded-set machinery: guarded
//! simulation/bisimulation game solvers, resource-bounded guarded comonads
//! in Kleisli form, guarded tree decompositions and their coalgebras,
//! open-map path lifting, the hypergraph comonad, and the clique-to-atom
//! signature reduction.
//!
//! Everything here is exact and deterministic: all values are immutable
//! after construction, operations are pure functions, and enumeration
//! orders are fixed by the canonical order of each structure's universe.

pub mod cliquered;
pub mod comonad;
pub mod decomposition;
pub mod fixtures;
pub mod games;
pub mod guards;
pub mod hypergraph;
pub mod openmaps;
pub mod structures;

use std::fmt;

/// A resource bound: either a finite limit or unbounded.
///
/// Used for guard width `k` and game round count `d`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Bound {
    Finite(u32),
    Infinite,
}

impl Bound {
    /// Whether a set or play of the given size fits within the bound.
    pub fn allows(self, n: usize) -> bool {
        match self {
            Bound::Finite(k) => n <= k as usize,
            Bound::Infinite => true,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, Bound::Finite(_))
    }

    pub fn finite(self) -> Option<u32> {
        match self {
            Bound::Finite(k) => Some(k),
            Bound::Infinite => None,
        }
    }
}

impl fmt::Display for Bound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Bound::Finite(k) => write!(f, "{k}"),
            Bound::Infinite => write!(f, "inf"),
        }
    }
}
