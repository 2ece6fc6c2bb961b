//! Guarded decompositions and their coalgebras.
//!
//! A decomposition assigns every element a play so that four axioms hold:
//! reflexivity, edge covering, minimality and vertex connectedness. These
//! are exactly the combinatorial form of comonad coalgebras, and the two
//! conversions here are mutually inverse. Synthesis builds a join forest
//! out of the maximal guarded sets by GYO-style ear removal, with an
//! exhaustive backtracking search as fallback for small universes.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::comonad::{canonicalize, CanonicalElement, FocussedPlay, Play, PlayAlphabet};
use crate::guards::{maximal_guarded_sets, GuardContext, GuardKind};
use crate::structures::{gaifman, Elem, Homomorphism, Structure};
use crate::Bound;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DecompositionError {
    #[error("play for element {element} uses an illegal set {set}")]
    IllegalPlay { element: String, set: String },
    #[error("element {0} does not belong to the last set of its play")]
    NotReflexive(String),
    #[error("Gaifman edge {0},{1} is covered by no play")]
    EdgeUncovered(String, String),
    #[error("play for element {0} is not minimal")]
    NotMinimal(String),
    #[error("vertex connectedness fails at play {play} for element {element}")]
    NotVertexConnected { play: String, element: String },
    #[error("not a coalgebra: {0}")]
    NotACoalgebra(String),
    #[error("no decomposition exists")]
    NoDecomposition,
    #[error("exhaustive search exceeded its budget")]
    BudgetExceeded,
}

/// A map from elements to plays, the combinatorial form of a coalgebra.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Decomposition {
    pub structure: Structure,
    pub kind: GuardKind,
    pub tau: Vec<Play>,
}

impl Decomposition {
    /// The image of `tau`, deduplicated, in canonical order.
    pub fn plays(&self) -> Vec<&Play> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for play in &self.tau {
            if seen.insert(play) {
                out.push(play);
            }
        }
        out.sort();
        out
    }

    /// Every prefix of every play in the image.
    pub fn play_prefixes(&self) -> Vec<Play> {
        let mut seen: BTreeSet<Play> = BTreeSet::new();
        for play in self.plays() {
            for len in 1..=play.len() {
                seen.insert(play.prefix(len));
            }
        }
        seen.into_iter().collect()
    }

    pub fn to_json(&self) -> serde_json::Value {
        let map: BTreeMap<String, Vec<Vec<String>>> = self
            .structure
            .elements()
            .map(|a| {
                let play = &self.tau[a as usize];
                let sets = play
                    .sets()
                    .iter()
                    .map(|s| {
                        s.iter()
                            .map(|&e| self.structure.element_name(e).to_string())
                            .collect()
                    })
                    .collect();
                (self.structure.element_name(a).to_string(), sets)
            })
            .collect();
        serde_json::json!(map)
    }
}

/// Checks the four decomposition axioms in order, reporting the first
/// violation with a witness. The `alphabet` selects whether plays must use
/// exactly guarded sets (the default) or arbitrary guarded sets.
pub fn validate_decomposition_with(
    dec: &Decomposition,
    k: Bound,
    alphabet: PlayAlphabet,
) -> Result<(), DecompositionError> {
    let s = &dec.structure;
    let ctx = GuardContext::new(s, dec.kind, k);
    if dec.tau.len() != s.universe_len() {
        return Err(DecompositionError::NotACoalgebra(
            "tau is not total".to_string(),
        ));
    }
    for a in s.elements() {
        for set in dec.tau[a as usize].sets() {
            let legal = match alphabet {
                PlayAlphabet::Exact => ctx.is_exact(set),
                PlayAlphabet::SubsetClosed => ctx.is_guarded(set),
            };
            if !legal {
                return Err(DecompositionError::IllegalPlay {
                    element: s.element_name(a).to_string(),
                    set: s.set_display(set),
                });
            }
        }
    }
    // Axiom 1: reflexivity.
    for a in s.elements() {
        if !dec.tau[a as usize].last().contains(&a) {
            return Err(DecompositionError::NotReflexive(
                s.element_name(a).to_string(),
            ));
        }
    }
    // Axiom 2: edge covering.
    let graph = gaifman(s);
    let plays = dec.plays();
    for (u, v) in graph.edges() {
        let covered = plays
            .iter()
            .any(|p| p.last().contains(&u) && p.last().contains(&v));
        if !covered {
            return Err(DecompositionError::EdgeUncovered(
                s.element_name(u).to_string(),
                s.element_name(v).to_string(),
            ));
        }
    }
    // Axiom 3: minimality, stated through the canonical representative.
    for a in s.elements() {
        let fp = FocussedPlay::new(dec.tau[a as usize].clone(), a);
        if canonicalize(&fp).rep() != &fp {
            return Err(DecompositionError::NotMinimal(
                s.element_name(a).to_string(),
            ));
        }
    }
    // Axiom 4: vertex connectedness over every prefix of an image play.
    for q in dec.play_prefixes() {
        for &a in q.last() {
            let via_tau = canonicalize(&FocussedPlay::new(dec.tau[a as usize].clone(), a));
            let via_q = canonicalize(&FocussedPlay::new(q.clone(), a));
            if via_tau != via_q {
                return Err(DecompositionError::NotVertexConnected {
                    play: q.to_string(),
                    element: s.element_name(a).to_string(),
                });
            }
        }
    }
    Ok(())
}

pub fn validate_decomposition(dec: &Decomposition, k: Bound) -> Result<(), DecompositionError> {
    validate_decomposition_with(dec, k, PlayAlphabet::Exact)
}

/// A coalgebra for the (lazily evaluated) guarded comonad: a structure
/// together with a map from elements to canonical classes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Coalgebra {
    pub structure: Structure,
    pub kind: GuardKind,
    pub width: Bound,
    pub depth: Bound,
    pub gamma: Vec<CanonicalElement>,
}

/// Checks that `gamma` is a homomorphism into the comonad structure and
/// satisfies both coalgebra diagrams.
pub fn validate_coalgebra(co: &Coalgebra) -> Result<(), DecompositionError> {
    let s = &co.structure;
    if co.gamma.len() != s.universe_len() {
        return Err(DecompositionError::NotACoalgebra(
            "gamma is not total".to_string(),
        ));
    }
    let ctx = GuardContext::new(s, co.kind, co.width);
    for a in s.elements() {
        let class = &co.gamma[a as usize];
        if !co.depth.allows(class.depth()) {
            return Err(DecompositionError::NotACoalgebra(format!(
                "play for {} exceeds the depth bound",
                s.element_name(a)
            )));
        }
        for set in class.play().sets() {
            if !ctx.is_exact(set) {
                return Err(DecompositionError::NotACoalgebra(format!(
                    "play for {} uses the non-guarded set {}",
                    s.element_name(a),
                    s.set_display(set)
                )));
            }
        }
        // First diagram: the focus is the element itself.
        if class.focus() != a {
            return Err(DecompositionError::NotACoalgebra(format!(
                "counit of gamma({}) is {}",
                s.element_name(a),
                s.element_name(class.focus())
            )));
        }
        // Second diagram: prefixes determine gamma on their last sets.
        let play = class.play();
        for i in 1..=play.len() {
            let prefix = play.prefix(i);
            for &u in prefix.last() {
                let expected = canonicalize(&FocussedPlay::new(prefix.clone(), u));
                if co.gamma[u as usize] != expected {
                    return Err(DecompositionError::NotACoalgebra(format!(
                        "gamma({}) disagrees with the prefix of gamma({})",
                        s.element_name(u),
                        s.element_name(a)
                    )));
                }
            }
        }
    }
    // Homomorphism into the comonad structure: the classes of each base
    // tuple must be realized along a single play; the deepest of the
    // element plays works whenever any play does.
    for (relation, tuple) in s.all_tuples() {
        let classes: Vec<&CanonicalElement> =
            tuple.iter().map(|&e| &co.gamma[e as usize]).collect();
        let deepest = classes
            .iter()
            .max_by_key(|c| c.depth())
            .expect("positive arity");
        let play = deepest.play();
        let ok = tuple.iter().zip(&classes).all(|(&e, class)| {
            play.last().contains(&e)
                && canonicalize(&FocussedPlay::new(play.clone(), e)) == **class
        });
        if !ok {
            return Err(DecompositionError::NotACoalgebra(format!(
                "tuple {}({}) is not realized by any play",
                relation,
                s.tuple_display(tuple)
            )));
        }
    }
    Ok(())
}

/// `γ(a) = ⟦τ(a), a⟧`. The input is validated first; the result satisfies
/// the coalgebra invariants.
pub fn decomposition_to_coalgebra(
    dec: &Decomposition,
    k: Bound,
) -> Result<Coalgebra, DecompositionError> {
    validate_decomposition(dec, k)?;
    let gamma = dec
        .structure
        .elements()
        .map(|a| canonicalize(&FocussedPlay::new(dec.tau[a as usize].clone(), a)))
        .collect();
    let co = Coalgebra {
        structure: dec.structure.clone(),
        kind: dec.kind,
        width: k,
        depth: Bound::Infinite,
        gamma,
    };
    validate_coalgebra(&co)?;
    Ok(co)
}

/// `τ(a)` is the play of the least representative of `γ(a)`.
pub fn coalgebra_to_decomposition(co: &Coalgebra) -> Result<Decomposition, DecompositionError> {
    validate_coalgebra(co)?;
    let tau = co.gamma.iter().map(|c| c.play().clone()).collect();
    let dec = Decomposition {
        structure: co.structure.clone(),
        kind: co.kind,
        tau,
    };
    validate_decomposition(&dec, co.width)?;
    Ok(dec)
}

/// Join-forest synthesis. Returns a valid `k`-bounded decomposition when
/// one exists. GYO ear removal over the maximal guarded sets decides the
/// common case; when it gets stuck on a universe of at most five elements
/// an exhaustive forest search settles the answer.
pub fn synthesize(
    s: &Structure,
    kind: GuardKind,
    k: Bound,
) -> Result<Option<Decomposition>, DecompositionError> {
    let ctx = GuardContext::new(s, kind, k);
    // Necessary condition: every Gaifman clique fits in a guarded set.
    let graph = gaifman(s);
    for clique in graph.maximal_cliques() {
        if !ctx.is_guarded(&clique) {
            return Ok(None);
        }
    }
    if let Some(dec) = gyo_synthesize(s, kind, k) {
        validate_decomposition(&dec, k)?;
        return Ok(Some(dec));
    }
    if s.universe_len() <= 5 {
        return exhaustive_synthesize(s, kind, k, 5_000_000);
    }
    Ok(None)
}

/// GYO ear removal over the maximal guarded sets, then `τ(a)` is the
/// root path of the bag nearest the root containing `a`.
fn gyo_synthesize(s: &Structure, kind: GuardKind, k: Bound) -> Option<Decomposition> {
    let bags: Vec<Vec<Elem>> = maximal_guarded_sets(s, kind, k)
        .into_iter()
        .map(|g| g.elements)
        .collect();
    if s.universe_len() == 0 {
        return Some(Decomposition {
            structure: s.clone(),
            kind,
            tau: Vec::new(),
        });
    }
    let n = bags.len();
    let mut alive: Vec<bool> = vec![true; n];
    let mut parent: Vec<Option<usize>> = vec![None; n];
    let mut remaining = n;
    while remaining > 0 {
        let mut removed = false;
        'scan: for e in 0..n {
            if !alive[e] {
                continue;
            }
            // Vertices of e shared with any other alive bag.
            let shared: Vec<Elem> = bags[e]
                .iter()
                .copied()
                .filter(|v| {
                    (0..n).any(|f| f != e && alive[f] && bags[f].contains(v))
                })
                .collect();
            if shared.is_empty() {
                // Isolated bag: a root of its own tree.
                alive[e] = false;
                remaining -= 1;
                removed = true;
                break 'scan;
            }
            for f in 0..n {
                if f == e || !alive[f] {
                    continue;
                }
                if shared.iter().all(|v| bags[f].contains(v)) {
                    alive[e] = false;
                    parent[e] = Some(f);
                    remaining -= 1;
                    removed = true;
                    break 'scan;
                }
            }
        }
        if !removed {
            return None; // cyclic: no ear left
        }
    }
    // Depths along the parent forest.
    let mut depth: Vec<usize> = vec![0; n];
    for e in 0..n {
        let mut d = 0;
        let mut cur = e;
        while let Some(p) = parent[cur] {
            d += 1;
            cur = p;
        }
        depth[e] = d;
    }
    let root_path = |e: usize| -> Vec<usize> {
        let mut path = vec![e];
        let mut cur = e;
        while let Some(p) = parent[cur] {
            path.push(p);
            cur = p;
        }
        path.reverse();
        path
    };
    let mut tau = Vec::with_capacity(s.universe_len());
    for a in s.elements() {
        // The bag containing a that sits nearest the root.
        let bag = (0..n)
            .filter(|&e| bags[e].contains(&a))
            .min_by_key(|&e| (depth[e], e))?;
        let sets: Vec<Vec<Elem>> = root_path(bag).into_iter().map(|e| bags[e].clone()).collect();
        tau.push(Play::new(sets));
    }
    Some(Decomposition {
        structure: s.clone(),
        kind,
        tau,
    })
}

/// Exhaustive search over labeled forests in which every node introduces at
/// least one element. Sound and complete for deciding existence, since any
/// valid decomposition prunes to this shape.
pub fn exhaustive_synthesize(
    s: &Structure,
    kind: GuardKind,
    k: Bound,
    budget: usize,
) -> Result<Option<Decomposition>, DecompositionError> {
    let labels: Vec<Vec<Elem>> = crate::guards::exactly_guarded_sets(s, kind, k)
        .into_iter()
        .map(|g| g.elements)
        .collect();
    let graph = gaifman(s);
    let edges: Vec<(Elem, Elem)> = graph.edges().collect();
    let n = s.universe_len();

    struct Search<'a> {
        s: &'a Structure,
        kind: GuardKind,
        k: Bound,
        labels: &'a [Vec<Elem>],
        edges: &'a [(Elem, Elem)],
        nodes: Vec<(usize, Option<usize>)>, // (label index, parent node)
        nu: Vec<Option<usize>>,             // introduction node per element
        steps: usize,
        budget: usize,
    }

    impl Search<'_> {
        fn run(&mut self) -> Result<Option<Decomposition>, DecompositionError> {
            self.steps += 1;
            if self.steps > self.budget {
                return Err(DecompositionError::BudgetExceeded);
            }
            if self.nu.iter().all(Option::is_some) && self.edges_covered() {
                let dec = self.build();
                if validate_decomposition(&dec, self.k).is_ok() {
                    return Ok(Some(dec));
                }
            }
            if self.nodes.len() == self.s.universe_len() {
                return Ok(None);
            }
            // Canonical add order: (parent, label) non-decreasing.
            let floor = self
                .nodes
                .last()
                .map(|&(label, parent)| (parent.map_or(0, |p| p + 1), label))
                .unwrap_or((0, 0));
            let parents: Vec<Option<usize>> = std::iter::once(None)
                .chain((0..self.nodes.len()).map(Some))
                .collect();
            for parent in parents {
                let parent_rank = parent.map_or(0, |p| p + 1);
                for label in 0..self.labels.len() {
                    if (parent_rank, label) < floor {
                        continue;
                    }
                    if let Some(assigned) = self.try_add(label, parent) {
                        let found = self.run()?;
                        self.undo(assigned);
                        if found.is_some() {
                            return Ok(found);
                        }
                    }
                }
            }
            Ok(None)
        }

        fn edges_covered(&self) -> bool {
            self.edges.iter().all(|&(u, v)| {
                self.nodes.iter().any(|&(label, _)| {
                    self.labels[label].contains(&u) && self.labels[label].contains(&v)
                })
            })
        }

        /// Adds a node if consistent, returning the elements it introduced.
        fn try_add(&mut self, label: usize, parent: Option<usize>) -> Option<Vec<Elem>> {
            if self.nodes.iter().any(|&(l, _)| l == label) {
                return None; // labels are distinct along a valid forest
            }
            let parent_label = parent.map(|p| &self.labels[self.nodes[p].0]);
            let mut introduced = Vec::new();
            for &a in &self.labels[label] {
                let continues = parent_label.is_some_and(|pl| pl.contains(&a));
                match (self.nu[a as usize], continues) {
                    (_, true) => {}
                    (None, false) => introduced.push(a),
                    (Some(_), false) => return None, // broken run
                }
            }
            if introduced.is_empty() {
                return None; // node would not be in the image of tau
            }
            let node = self.nodes.len();
            for &a in &introduced {
                self.nu[a as usize] = Some(node);
            }
            self.nodes.push((label, parent));
            Some(introduced)
        }

        fn undo(&mut self, introduced: Vec<Elem>) {
            self.nodes.pop();
            for a in introduced {
                self.nu[a as usize] = None;
            }
        }

        fn build(&self) -> Decomposition {
            let root_path = |mut node: usize| -> Vec<usize> {
                let mut path = vec![node];
                while let Some(p) = self.nodes[node].1 {
                    path.push(p);
                    node = p;
                }
                path.reverse();
                path
            };
            let tau = self
                .s
                .elements()
                .map(|a| {
                    let node = self.nu[a as usize].expect("assignment complete");
                    let sets = root_path(node)
                        .into_iter()
                        .map(|i| self.labels[self.nodes[i].0].clone())
                        .collect();
                    Play::new(sets)
                })
                .collect();
            Decomposition {
                structure: self.s.clone(),
                kind: self.kind,
                tau,
            }
        }
    }

    if n == 0 {
        return Ok(Some(Decomposition {
            structure: s.clone(),
            kind,
            tau: Vec::new(),
        }));
    }
    let mut search = Search {
        s,
        kind,
        k,
        labels: &labels,
        edges: &edges,
        nodes: Vec::new(),
        nu: vec![None; n],
        steps: 0,
        budget,
    };
    search.run()
}

/// The least `k` admitting a `k`-bounded decomposition.
pub fn guarded_treewidth(s: &Structure, kind: GuardKind) -> Result<u32, DecompositionError> {
    let max = s.universe_len().max(1) as u32;
    for k in 1..=max {
        if synthesize(s, kind, Bound::Finite(k))?.is_some() {
            return Ok(k);
        }
    }
    Err(DecompositionError::NoDecomposition)
}

fn map_play(play: &Play, map: &[Elem]) -> Play {
    Play::new(
        play.sets()
            .iter()
            .map(|s| s.iter().map(|&e| map[e as usize]).collect())
            .collect(),
    )
}

/// The decomposition-morphism condition `⟦h⁺(τ(a)), h(a)⟧ = ⟦υ(h(a)), h(a)⟧`,
/// or play equality when `strict` is set.
pub fn check_decomposition_morphism(
    h: &Homomorphism,
    dec_a: &Decomposition,
    dec_b: &Decomposition,
    strict: bool,
) -> bool {
    if !crate::structures::is_homomorphism(h) {
        return false;
    }
    dec_a.structure.elements().all(|a| {
        let image_play = map_play(&dec_a.tau[a as usize], &h.map);
        let b = h.apply(a);
        let target_play = &dec_b.tau[b as usize];
        if strict {
            image_play == *target_play
        } else {
            canonicalize(&FocussedPlay::new(image_play, b))
                == canonicalize(&FocussedPlay::new(target_play.clone(), b))
        }
    })
}
