//! Guarded sets for the three guard notions, with an optional width bound.
//!
//! A set is *exactly* guarded when it equals the support of a witnessing
//! tuple; guarded sets in general are the nonempty subsets of exactly
//! guarded ones. Equality atoms are admitted as guards, so every singleton
//! is exactly guarded under all three kinds.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::structures::{gaifman, Elem, Structure, Tuple};
use crate::Bound;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum GuardKind {
    Atom,
    Loose,
    Clique,
}

impl GuardKind {
    pub fn name(self) -> &'static str {
        match self {
            GuardKind::Atom => "atom",
            GuardKind::Loose => "loose",
            GuardKind::Clique => "clique",
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GuardError {
    #[error("element #{0} is not in the universe")]
    UnknownElement(Elem),
    #[error("guarded sets must be nonempty")]
    EmptySet,
}

/// What certifies a guarded set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GuardWitness {
    /// A singleton guarded by an equality atom `a = a`.
    Equality(Elem),
    /// An atom guard: a single relation fact whose support is the set.
    Fact { relation: String, tuple: Tuple },
    /// A loose guard: one witnessing fact per pair of distinct elements,
    /// each supported inside the set.
    Facts(Vec<(String, Tuple)>),
    /// A clique guard: the set is a clique in the Gaifman graph.
    Clique(Vec<Elem>),
}

/// A nonempty element set together with the guard that certifies it.
///
/// For sets produced by downward closure the witness is the one of the
/// exactly guarded superset, so `elements` may be a proper subset of the
/// witness support.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GuardedSet {
    pub elements: Vec<Elem>,
    pub kind: GuardKind,
    pub witness: GuardWitness,
}

fn sorted_set(x: &[Elem]) -> Vec<Elem> {
    let set: BTreeSet<Elem> = x.iter().copied().collect();
    set.into_iter().collect()
}

pub fn support(tuple: &[Elem]) -> Vec<Elem> {
    sorted_set(tuple)
}

/// Whether `x` equals the support of some guard witness of the given kind,
/// within the width bound.
pub fn is_exactly_guarded(
    s: &Structure,
    x: &[Elem],
    kind: GuardKind,
    k: Bound,
) -> Result<bool, GuardError> {
    if x.is_empty() {
        return Err(GuardError::EmptySet);
    }
    for &e in x {
        if e as usize >= s.universe_len() {
            return Err(GuardError::UnknownElement(e));
        }
    }
    let x = sorted_set(x);
    if !k.allows(x.len()) {
        return Ok(false);
    }
    if x.len() == 1 {
        // Equality atoms guard every singleton, whatever the kind.
        return Ok(true);
    }
    Ok(match kind {
        GuardKind::Atom => s.all_tuples().any(|(_, tuple)| support(tuple) == x),
        GuardKind::Loose => pairwise_fact_guarded(s, &x),
        GuardKind::Clique => gaifman(s).is_clique(&x),
    })
}

/// The loose criterion: each pair of distinct elements of `x` co-occurs in
/// some fact whose support stays inside `x`.
fn pairwise_fact_guarded(s: &Structure, x: &[Elem]) -> bool {
    let x_set: BTreeSet<Elem> = x.iter().copied().collect();
    x.iter().enumerate().all(|(i, &u)| {
        x[i + 1..].iter().all(|&v| {
            s.all_tuples().any(|(_, tuple)| {
                tuple.contains(&u)
                    && tuple.contains(&v)
                    && tuple.iter().all(|e| x_set.contains(e))
            })
        })
    })
}

fn loose_witness(s: &Structure, x: &[Elem]) -> GuardWitness {
    let x_set: BTreeSet<Elem> = x.iter().copied().collect();
    let mut facts = Vec::new();
    for (i, &u) in x.iter().enumerate() {
        for &v in &x[i + 1..] {
            let fact = s
                .all_tuples()
                .find(|(_, tuple)| {
                    tuple.contains(&u)
                        && tuple.contains(&v)
                        && tuple.iter().all(|e| x_set.contains(e))
                })
                .expect("pairwise criterion checked");
            let entry = (fact.0.to_string(), fact.1.clone());
            if !facts.contains(&entry) {
                facts.push(entry);
            }
        }
    }
    GuardWitness::Facts(facts)
}

/// All exactly guarded sets of width within `k`, each with a witness, in
/// lexicographic order of their sorted element vectors. Singletons are
/// always present via equality guards.
pub fn exactly_guarded_sets(s: &Structure, kind: GuardKind, k: Bound) -> Vec<GuardedSet> {
    let mut seen: BTreeSet<Vec<Elem>> = BTreeSet::new();
    let mut out: Vec<GuardedSet> = Vec::new();
    let mut push = |elements: Vec<Elem>, witness: GuardWitness| {
        if seen.insert(elements.clone()) {
            out.push(GuardedSet {
                elements,
                kind,
                witness,
            });
        }
    };
    if k.allows(1) {
        for e in s.elements() {
            push(vec![e], GuardWitness::Equality(e));
        }
    }
    match kind {
        GuardKind::Atom => {
            for (relation, tuple) in s.all_tuples() {
                let elements = support(tuple);
                if elements.len() >= 2 && k.allows(elements.len()) {
                    push(
                        elements,
                        GuardWitness::Fact {
                            relation: relation.to_string(),
                            tuple: tuple.clone(),
                        },
                    );
                }
            }
        }
        GuardKind::Loose => {
            for candidate in gaifman(s).cliques(k) {
                if candidate.len() >= 2 && pairwise_fact_guarded(s, &candidate) {
                    let witness = loose_witness(s, &candidate);
                    push(candidate, witness);
                }
            }
        }
        GuardKind::Clique => {
            for candidate in gaifman(s).cliques(k) {
                if candidate.len() >= 2 {
                    let witness = GuardWitness::Clique(candidate.clone());
                    push(candidate, witness);
                }
            }
        }
    }
    out.sort_by(|a, b| a.elements.cmp(&b.elements));
    out
}

/// The downward closure of [`exactly_guarded_sets`]: all nonempty subsets,
/// each carrying the witness of an exactly guarded superset.
pub fn guarded_sets(s: &Structure, kind: GuardKind, k: Bound) -> Vec<GuardedSet> {
    let mut seen: BTreeSet<Vec<Elem>> = BTreeSet::new();
    let mut out: Vec<GuardedSet> = Vec::new();
    for exact in exactly_guarded_sets(s, kind, k) {
        for subset in nonempty_subsets(&exact.elements) {
            if seen.insert(subset.clone()) {
                out.push(GuardedSet {
                    elements: subset,
                    kind,
                    witness: exact.witness.clone(),
                });
            }
        }
    }
    out.sort_by(|a, b| a.elements.cmp(&b.elements));
    out
}

fn nonempty_subsets(set: &[Elem]) -> Vec<Vec<Elem>> {
    let mut out = Vec::with_capacity((1 << set.len()) - 1);
    for mask in 1u32..(1 << set.len()) {
        let subset: Vec<Elem> = set
            .iter()
            .enumerate()
            .filter(|(i, _)| mask & (1 << i) != 0)
            .map(|(_, &e)| e)
            .collect();
        out.push(subset);
    }
    out
}

/// Maximal guarded sets under inclusion.
pub fn maximal_guarded_sets(s: &Structure, kind: GuardKind, k: Bound) -> Vec<GuardedSet> {
    let exact = exactly_guarded_sets(s, kind, k);
    let sets: Vec<BTreeSet<Elem>> = exact
        .iter()
        .map(|g| g.elements.iter().copied().collect())
        .collect();
    exact
        .iter()
        .enumerate()
        .filter(|(i, _)| {
            !sets
                .iter()
                .enumerate()
                .any(|(j, other)| j != *i && sets[*i].is_subset(other) && sets[*i] != *other)
        })
        .map(|(_, g)| g.clone())
        .collect()
}

/// Precomputed guard tables for one structure, for the inner loops of the
/// game solvers and comonad materialization.
#[derive(Debug, Clone)]
pub struct GuardContext {
    exact: Vec<Vec<Elem>>,
    exact_set: BTreeSet<Vec<Elem>>,
}

impl GuardContext {
    pub fn new(s: &Structure, kind: GuardKind, k: Bound) -> Self {
        let exact: Vec<Vec<Elem>> = exactly_guarded_sets(s, kind, k)
            .into_iter()
            .map(|g| g.elements)
            .collect();
        let exact_set = exact.iter().cloned().collect();
        GuardContext { exact, exact_set }
    }

    /// The exactly guarded sets, sorted lexicographically.
    pub fn exact_sets(&self) -> &[Vec<Elem>] {
        &self.exact
    }

    pub fn is_exact(&self, x: &[Elem]) -> bool {
        self.exact_set.contains(x)
    }

    /// Whether `x` is guarded, i.e. contained in some exactly guarded set.
    pub fn is_guarded(&self, x: &[Elem]) -> bool {
        if x.is_empty() {
            return false;
        }
        self.exact_set.contains(x)
            || self
                .exact
                .iter()
                .any(|e| x.iter().all(|v| e.binary_search(v).is_ok()))
    }
}
