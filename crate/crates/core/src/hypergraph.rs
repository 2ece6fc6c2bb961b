//! Hypergraphs, hypergraph games, the hypergraph comonad, the functor from
//! structures to hypergraphs, and the Eilenberg-Moore law tying the two
//! comonads together.
//!
//! The constructions mirror the structure-level ones with "hyperedge" in
//! place of "guarded set": related tuples and guards merge into the single
//! concept of a hyperedge.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use thiserror::Error;

use crate::comonad::{
    canonical_of_indices, canonicalize, comultiply, materialize_with, walk_plays, CanonicalElement,
    ComonadError, FocussedPlay, MaterializeOptions, Play,
};
use crate::games::{GameMode, Player};
use crate::guards::GuardKind;
use crate::structures::{Elem, Structure};
use crate::Bound;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum HypergraphError {
    #[error("hyperedges must be nonempty")]
    EmptyHyperedge,
    #[error("hyperedge mentions unknown vertex #{0}")]
    UnknownVertex(Elem),
    #[error("carrier would exceed the configured cap of {cap} vertices")]
    BudgetExceeded { cap: usize },
    #[error("depth bound must be at least 1")]
    InvalidDepth,
    #[error("the supplied map is not a hypergraph morphism")]
    NotAMorphism,
    #[error("the comparison requires exact guard mode")]
    ClosedModeUnsupported,
    #[error(transparent)]
    Comonad(#[from] ComonadError),
}

/// Vertices plus a family of finite nonempty vertex subsets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Hypergraph {
    vertices: Vec<String>,
    hyperedges: BTreeSet<Vec<Elem>>,
}

impl Hypergraph {
    pub fn new(
        vertices: Vec<String>,
        hyperedges: impl IntoIterator<Item = Vec<Elem>>,
    ) -> Result<Self, HypergraphError> {
        let n = vertices.len() as Elem;
        let mut set = BTreeSet::new();
        for edge in hyperedges {
            if edge.is_empty() {
                return Err(HypergraphError::EmptyHyperedge);
            }
            if let Some(&v) = edge.iter().find(|&&v| v >= n) {
                return Err(HypergraphError::UnknownVertex(v));
            }
            let edge: BTreeSet<Elem> = edge.into_iter().collect();
            set.insert(edge.into_iter().collect());
        }
        Ok(Hypergraph {
            vertices,
            hyperedges: set,
        })
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn vertex_name(&self, v: Elem) -> &str {
        &self.vertices[v as usize]
    }

    pub fn vertex_names(&self) -> &[String] {
        &self.vertices
    }

    pub fn hyperedges(&self) -> impl Iterator<Item = &Vec<Elem>> {
        self.hyperedges.iter()
    }

    pub fn hyperedge_count(&self) -> usize {
        self.hyperedges.len()
    }

    pub fn has_hyperedge(&self, edge: &[Elem]) -> bool {
        self.hyperedges.contains(edge)
    }

    pub fn to_json(&self) -> serde_json::Value {
        let edges: Vec<Vec<String>> = self
            .hyperedges
            .iter()
            .map(|e| {
                e.iter()
                    .map(|&v| self.vertices[v as usize].clone())
                    .collect()
            })
            .collect();
        serde_json::json!({ "vertices": self.vertices, "hyperedges": edges })
    }

    pub fn from_json(text: &str) -> Result<Self, HypergraphLoadError> {
        #[derive(serde::Deserialize)]
        #[serde(deny_unknown_fields)]
        struct File {
            vertices: Vec<String>,
            hyperedges: Vec<Vec<String>>,
        }
        let file: File = serde_json::from_str(text)?;
        let index: BTreeMap<&str, Elem> = file
            .vertices
            .iter()
            .enumerate()
            .map(|(i, v)| (v.as_str(), i as Elem))
            .collect();
        let mut edges = Vec::new();
        for edge in &file.hyperedges {
            let mut resolved = Vec::with_capacity(edge.len());
            for v in edge {
                match index.get(v.as_str()) {
                    Some(&i) => resolved.push(i),
                    None => return Err(HypergraphLoadError::UnknownVertex(v.clone())),
                }
            }
            edges.push(resolved);
        }
        Ok(Hypergraph::new(file.vertices, edges)?)
    }
}

#[derive(Debug, Error)]
pub enum HypergraphLoadError {
    #[error("malformed hypergraph file: {0}")]
    Json(#[from] serde_json::Error),
    #[error("hyperedge mentions unknown vertex {0}")]
    UnknownVertex(String),
    #[error(transparent)]
    Invalid(#[from] HypergraphError),
}

/// A vertex map sending hyperedges to hyperedges.
#[derive(Debug, Clone)]
pub struct HypergraphMorphism {
    pub source: Hypergraph,
    pub target: Hypergraph,
    pub map: Vec<Elem>,
}

pub fn is_hypergraph_morphism(m: &HypergraphMorphism) -> bool {
    m.map.len() == m.source.vertex_count()
        && m.source.hyperedges().all(|edge| {
            let image: BTreeSet<Elem> = edge.iter().map(|&v| m.map[v as usize]).collect();
            let image: Vec<Elem> = image.into_iter().collect();
            m.target.has_hyperedge(&image)
        })
}

/// Whether guarded sets are taken exactly or closed downward.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GuardMode {
    Exact,
    Closed,
}

/// The functor from structures to hypergraphs: vertices are the universe,
/// hyperedges the (exactly) guarded sets of the chosen kind and width.
pub fn hgraph_of(s: &Structure, kind: GuardKind, k: Bound, mode: GuardMode) -> Hypergraph {
    let sets = match mode {
        GuardMode::Exact => crate::guards::exactly_guarded_sets(s, kind, k),
        GuardMode::Closed => crate::guards::guarded_sets(s, kind, k),
    };
    Hypergraph {
        vertices: s.element_names().to_vec(),
        hyperedges: sets.into_iter().map(|g| g.elements).collect(),
    }
}

/// A materialized hypergraph comonad value.
#[derive(Debug, Clone)]
pub struct HypergraphComonad {
    pub base: Hypergraph,
    pub width: Bound,
    pub depth: u32,
    carrier: Hypergraph,
    classes: Vec<CanonicalElement>,
    index: HashMap<CanonicalElement, Elem>,
}

impl HypergraphComonad {
    pub fn carrier(&self) -> &Hypergraph {
        &self.carrier
    }

    pub fn classes(&self) -> &[CanonicalElement] {
        &self.classes
    }

    pub fn class_index(&self, c: &CanonicalElement) -> Option<Elem> {
        self.index.get(c).copied()
    }

    pub fn counit_map(&self) -> Vec<Elem> {
        self.classes.iter().map(|c| c.focus()).collect()
    }
}

pub fn hmaterialize(h: &Hypergraph, k: Bound, d: u32) -> Result<HypergraphComonad, HypergraphError> {
    hmaterialize_with(h, k, d, 200_000)
}

/// Builds the bounded hypergraph comonad: vertices are the canonical
/// classes of focussed plays over hyperedges of size within `k` and length
/// within `d`; each hyperedge `U` lifts along every play whose last
/// hyperedge contains it.
pub fn hmaterialize_with(
    h: &Hypergraph,
    k: Bound,
    d: u32,
    vertex_cap: usize,
) -> Result<HypergraphComonad, HypergraphError> {
    if d == 0 {
        return Err(HypergraphError::InvalidDepth);
    }
    let alphabet: Vec<Vec<Elem>> = h
        .hyperedges()
        .filter(|e| k.allows(e.len()))
        .cloned()
        .collect();
    // Hyperedges contained in each alphabet entry, for the lifted family.
    let contained: Vec<Vec<&Vec<Elem>>> = alphabet
        .iter()
        .map(|set| {
            alphabet
                .iter()
                .filter(|e| e.iter().all(|v| set.binary_search(v).is_ok()))
                .collect()
        })
        .collect();

    let mut universe: BTreeSet<CanonicalElement> = BTreeSet::new();
    let mut overflow = false;
    walk_plays(&alphabet, d, &mut |play| {
        if overflow {
            return;
        }
        for &focus in &alphabet[*play.last().expect("nonempty")] {
            universe.insert(canonical_of_indices(&alphabet, play, focus));
            if universe.len() > vertex_cap {
                overflow = true;
                return;
            }
        }
    });
    if overflow {
        return Err(HypergraphError::BudgetExceeded { cap: vertex_cap });
    }
    let classes: Vec<CanonicalElement> = universe.into_iter().collect();
    let index: HashMap<CanonicalElement, Elem> = classes
        .iter()
        .enumerate()
        .map(|(i, c)| (c.clone(), i as Elem))
        .collect();

    let mut edges: BTreeSet<Vec<Elem>> = BTreeSet::new();
    walk_plays(&alphabet, d, &mut |play| {
        for edge in &contained[*play.last().expect("nonempty")] {
            let lifted: BTreeSet<Elem> = edge
                .iter()
                .map(|&v| index[&canonical_of_indices(&alphabet, play, v)])
                .collect();
            edges.insert(lifted.into_iter().collect());
        }
    });

    let names: Vec<String> = (0..classes.len()).map(|i| format!("h{i}")).collect();
    let carrier = Hypergraph {
        vertices: names,
        hyperedges: edges,
    };
    Ok(HypergraphComonad {
        base: h.clone(),
        width: k,
        depth: d,
        carrier,
        classes,
        index,
    })
}

/// The counit of the hypergraph comonad.
pub fn hcounit(hc: &HypergraphComonad) -> HypergraphMorphism {
    HypergraphMorphism {
        source: hc.carrier.clone(),
        target: hc.base.clone(),
        map: hc.counit_map(),
    }
}

/// Kleisli coextension for the hypergraph comonad. Every intermediate
/// image set must be a hyperedge of the target base.
pub fn hcoextend(
    source: &HypergraphComonad,
    h: &[Elem],
    target: &HypergraphComonad,
) -> Result<Vec<Elem>, HypergraphError> {
    if source.width != target.width || source.depth > target.depth {
        return Err(HypergraphError::NotAMorphism);
    }
    let morphism = HypergraphMorphism {
        source: source.carrier.clone(),
        target: target.base.clone(),
        map: h.to_vec(),
    };
    if !is_hypergraph_morphism(&morphism) {
        return Err(HypergraphError::NotAMorphism);
    }
    let mut out = Vec::with_capacity(source.classes.len());
    for class in &source.classes {
        let image = crate::comonad::lazy_coextend(class.rep(), &mut |c| {
            h[source.class_index(c).expect("class materialized") as usize]
        });
        for set in image.play().sets() {
            if !target.base.has_hyperedge(set) {
                return Err(HypergraphError::NotAMorphism);
            }
        }
        out.push(
            target
                .class_index(&image)
                .expect("image class lies in the target carrier"),
        );
    }
    Ok(out)
}

/// Comultiplication for the hypergraph comonad, expressed lazily as
/// canonical elements over the carrier's vertices.
pub fn hcomultiply(hc: &HypergraphComonad) -> Vec<CanonicalElement> {
    hc.classes
        .iter()
        .enumerate()
        .map(|(i, class)| {
            let sets = class.play().sets();
            let mut lifted: Vec<Vec<Elem>> = Vec::with_capacity(sets.len());
            for j in 1..=sets.len() {
                let prefix = class.play().prefix(j);
                let level: BTreeSet<Elem> = sets[j - 1]
                    .iter()
                    .map(|&a| {
                        let cls = canonicalize(&FocussedPlay::new(prefix.clone(), a));
                        hc.class_index(&cls).expect("class materialized")
                    })
                    .collect();
                lifted.push(level.into_iter().collect());
            }
            canonicalize(&FocussedPlay::new(Play::new(lifted), i as Elem))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HGameConfig {
    pub width: Bound,
    pub rounds: Bound,
    pub mode: GameMode,
}

/// The hypergraph simulation/bisimulation game: hyperedges as Spoiler
/// moves, functions or bijections as responses, with the usual overlap
/// condition. Solved by the same fixpoint scheme as the structure games.
pub fn hgame_solve(h1: &Hypergraph, h2: &Hypergraph, cfg: HGameConfig) -> Player {
    let moves_left: Vec<Vec<Elem>> = h1
        .hyperedges()
        .filter(|e| cfg.width.allows(e.len()))
        .cloned()
        .collect();
    let moves_right: Vec<Vec<Elem>> = h2
        .hyperedges()
        .filter(|e| cfg.width.allows(e.len()))
        .cloned()
        .collect();

    type Position = Vec<(Elem, Elem)>;
    let mut set: BTreeSet<Position> = BTreeSet::new();
    set.insert(Vec::new());
    let image_of = |p: &Position| -> Vec<Elem> {
        let im: BTreeSet<Elem> = p.iter().map(|&(_, y)| y).collect();
        im.into_iter().collect()
    };
    // Option-1 positions: total maps from a left hyperedge.
    for dom in &moves_left {
        let mut current: Position = Vec::new();
        fn walk(
            dom: &[Elem],
            n2: usize,
            current: &mut Vec<(Elem, Elem)>,
            visit: &mut dyn FnMut(&Vec<(Elem, Elem)>),
        ) {
            if current.len() == dom.len() {
                visit(current);
                return;
            }
            let x = dom[current.len()];
            for y in 0..n2 as Elem {
                current.push((x, y));
                walk(dom, n2, current, visit);
                current.pop();
            }
        }
        walk(dom, h2.vertex_count(), &mut current, &mut |p| {
            let image = image_of(p);
            let ok = match cfg.mode {
                // The image must land inside some hyperedge within width.
                GameMode::Simulation => h2
                    .hyperedges()
                    .any(|e| cfg.width.allows(e.len()) && image.iter().all(|v| e.contains(v))),
                // Bijectively onto a hyperedge.
                GameMode::Bisimulation => image.len() == p.len() && moves_right.contains(&image),
            };
            if ok {
                set.insert(p.clone());
            }
        });
    }
    // Option-2 positions (bisimulation): inverses of maps from right edges.
    if cfg.mode == GameMode::Bisimulation {
        for im in &moves_right {
            let mut current: Position = Vec::new();
            fn walk(
                dom: &[Elem],
                n1: usize,
                current: &mut Vec<(Elem, Elem)>,
                visit: &mut dyn FnMut(&Vec<(Elem, Elem)>),
            ) {
                if current.len() == dom.len() {
                    visit(current);
                    return;
                }
                let y = dom[current.len()];
                for x in 0..n1 as Elem {
                    current.push((y, x));
                    walk(dom, n1, current, visit);
                    current.pop();
                }
            }
            walk(im, h1.vertex_count(), &mut current, &mut |inv| {
                let p: BTreeSet<(Elem, Elem)> = inv.iter().map(|&(y, x)| (x, y)).collect();
                let p: Position = p.into_iter().collect();
                if p.len() != im.len() {
                    return;
                }
                let dom: Vec<Elem> = p.iter().map(|&(x, _)| x).collect();
                if moves_left.contains(&dom) {
                    set.insert(p);
                }
            });
        }
    }

    let positions: Vec<Position> = set.into_iter().collect();
    let empty_idx = positions.iter().position(|p| p.is_empty()).expect("empty");
    let lookup = |p: &Position, x: Elem| -> Option<Elem> {
        p.binary_search_by_key(&x, |&(a, _)| a).ok().map(|i| p[i].1)
    };
    let lookup_inv =
        |p: &Position, y: Elem| -> Option<Elem> { p.iter().find(|&&(_, b)| b == y).map(|&(a, _)| a) };

    let consistent = |prev: &Position, next: &Position, left: bool| -> bool {
        if left {
            prev.iter().all(|&(x, y)| match lookup(next, x) {
                Some(y2) => y2 == y,
                None => true,
            })
        } else {
            prev.iter().all(|&(x, y)| match lookup_inv(next, y) {
                Some(x2) => x2 == x,
                None => true,
            })
        }
    };

    let can_answer = |i: usize, alive: &[bool]| -> bool {
        let prev = &positions[i];
        let left_ok = moves_left.iter().all(|mv| {
            positions.iter().enumerate().any(|(j, p)| {
                alive[j]
                    && p.iter().map(|&(x, _)| x).collect::<Vec<_>>() == *mv
                    && consistent(prev, p, true)
            })
        });
        if !left_ok {
            return false;
        }
        if cfg.mode == GameMode::Bisimulation {
            moves_right.iter().all(|mv| {
                positions.iter().enumerate().any(|(j, p)| {
                    alive[j] && image_of(p) == *mv && consistent(prev, p, false)
                })
            })
        } else {
            true
        }
    };

    let mut alive = vec![true; positions.len()];
    let mut round = 0u32;
    loop {
        let next: Vec<bool> = (0..positions.len())
            .map(|i| alive[i] && can_answer(i, &alive))
            .collect();
        round += 1;
        let stable = next == alive;
        alive = next;
        let done = match cfg.rounds {
            Bound::Finite(d) => round >= d,
            Bound::Infinite => stable,
        };
        if done {
            break;
        }
    }
    if alive[empty_idx] {
        Player::Duplicator
    } else {
        Player::Spoiler
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EmLawError {
    #[error("vertex mismatch: {0}")]
    VertexMismatch(String),
    #[error("hyperedge mismatch: {0}")]
    EdgeMismatch(String),
    #[error("counit mismatch at class {0}")]
    CounitMismatch(String),
    #[error("comultiplication mismatch at class {0}")]
    ComultiplicationMismatch(String),
    #[error(transparent)]
    Hypergraph(#[from] HypergraphError),
    #[error(transparent)]
    Comonad(#[from] ComonadError),
}

/// Checks that the Eilenberg-Moore law is the identity at bounded width and
/// depth: guarded sets of the materialized comonad carrier coincide with
/// the hyperedges of the materialized hypergraph comonad over the guarded
/// sets of the base, under the identity correspondence of canonical
/// classes, with counits and comultiplications agreeing pointwise.
pub fn check_em_law(
    s: &Structure,
    kind: GuardKind,
    k: Bound,
    d: u32,
    mode: GuardMode,
) -> Result<(), EmLawError> {
    if mode != GuardMode::Exact {
        return Err(HypergraphError::ClosedModeUnsupported.into());
    }
    let comonad = materialize_with(s, kind, k, d, MaterializeOptions::default())?;
    let base_hyper = hgraph_of(s, kind, k, GuardMode::Exact);
    let hyper = hmaterialize(&base_hyper, k, d)?;

    // Vertices: the canonical classes must be literally identical.
    if comonad.classes() != hyper.classes() {
        let detail = comonad
            .classes()
            .iter()
            .zip(hyper.classes())
            .find(|(a, b)| a != b)
            .map(|(a, b)| format!("{a} vs {b}"))
            .unwrap_or_else(|| {
                format!(
                    "{} vs {} classes",
                    comonad.classes().len(),
                    hyper.classes().len()
                )
            });
        return Err(EmLawError::VertexMismatch(detail));
    }

    // Hyperedges: guarded sets of the carrier against lifted hyperedges.
    // Classes agree, so index sets compare directly.
    let carrier_sets: BTreeSet<Vec<Elem>> =
        crate::guards::exactly_guarded_sets(comonad.carrier(), kind, k)
            .into_iter()
            .map(|g| g.elements)
            .collect();
    let lifted_sets: BTreeSet<Vec<Elem>> = hyper.carrier().hyperedges().cloned().collect();
    if carrier_sets != lifted_sets {
        let missing = carrier_sets
            .symmetric_difference(&lifted_sets)
            .next()
            .expect("nonequal sets differ");
        let side = if carrier_sets.contains(missing) {
            "guarded set of the carrier is not a lifted hyperedge"
        } else {
            "lifted hyperedge is not a guarded set of the carrier"
        };
        return Err(EmLawError::EdgeMismatch(format!("{side}: {missing:?}")));
    }

    // Counits agree pointwise.
    for (i, (a, b)) in comonad
        .counit_map()
        .iter()
        .zip(hyper.counit_map())
        .enumerate()
    {
        if *a != b {
            return Err(EmLawError::CounitMismatch(comonad.class(i as Elem).to_string()));
        }
    }

    // Comultiplications agree pointwise; indices align because classes do.
    let delta_g = comultiply(&comonad)?;
    let delta_h = hcomultiply(&hyper);
    for (i, (a, b)) in delta_g.iter().zip(&delta_h).enumerate() {
        if a != b {
            return Err(EmLawError::ComultiplicationMismatch(
                comonad.class(i as Elem).to_string(),
            ));
        }
    }
    Ok(())
}
