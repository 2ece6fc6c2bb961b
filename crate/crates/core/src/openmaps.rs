//! Paths, path embeddings, pathwise embeddings, open-map path lifting, and
//! the span characterization of guarded bisimulation at bounded depth.
//!
//! Everything here works over the depth-bounded comonads, whose cofree
//! coalgebras are finite. A path embedding into a coalgebra is recorded by
//! its chain of image plays rooted at depth one; all checks reduce to
//! enumerations over such chains.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::comonad::{
    canonicalize, comultiply, materialize, CanonicalElement, ComonadError, ComonadStructure,
    FocussedPlay, Play,
};
use crate::decomposition::{validate_coalgebra, Coalgebra, DecompositionError};
use crate::games::{
    is_partial_iso, position_domain, position_image, position_lookup, GameError, GameMode, Move,
    Position, Side, Strategy,
};
use crate::guards::GuardKind;
use crate::structures::{Elem, Structure, Tuple};
use crate::Bound;

#[derive(Debug, Error)]
pub enum OpenMapError {
    #[error("the map is not a coalgebra morphism")]
    NotACoalgebraMorphism,
    #[error("invalid span: {0}")]
    SpanInvalid(String),
    #[error(transparent)]
    Comonad(#[from] ComonadError),
    #[error(transparent)]
    Game(#[from] GameError),
    #[error(transparent)]
    Coalgebra(#[from] DecompositionError),
}

/// The cofree coalgebra at bounded depth: the materialized carrier with
/// the comultiplication as its structure map.
pub fn cofree(
    s: &Structure,
    kind: GuardKind,
    k: Bound,
    d: u32,
) -> Result<(ComonadStructure, Coalgebra), ComonadError> {
    let c = materialize(s, kind, k, d)?;
    let gamma = comultiply(&c)?;
    let co = Coalgebra {
        structure: c.carrier().clone(),
        kind,
        width: k,
        depth: Bound::Finite(d),
        gamma,
    };
    Ok((c, co))
}

/// The image plays of the coalgebra's decomposition, deduplicated.
pub fn coalgebra_plays(co: &Coalgebra) -> Vec<Play> {
    let set: BTreeSet<Play> = co.gamma.iter().map(|c| c.play().clone()).collect();
    set.into_iter().collect()
}

/// Whether the coalgebra is a path: its image plays form a covering chain
/// under the prefix order.
pub fn is_path(co: &Coalgebra) -> bool {
    let mut plays = coalgebra_plays(co);
    plays.sort_by_key(|p| p.len());
    plays.windows(2).all(|w| {
        w[0].len() + 1 == w[1].len() && w[0].is_prefix_of(&w[1])
    }) && plays.first().is_none_or(|p| p.len() == 1)
}

/// A path embedding into a coalgebra, recorded as its chain of image
/// plays: consecutive prefix covers starting from a play of length one.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct PathChain {
    pub nodes: Vec<Play>,
}

impl PathChain {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Elements appearing in the chain's bags.
    pub fn union(&self) -> Vec<Elem> {
        let set: BTreeSet<Elem> = self
            .nodes
            .iter()
            .flat_map(|p| p.last().iter().copied())
            .collect();
        set.into_iter().collect()
    }

    pub fn mapped(&self, map: &[Elem]) -> PathChain {
        PathChain {
            nodes: self
                .nodes
                .iter()
                .map(|p| {
                    Play::new(
                        p.sets()
                            .iter()
                            .map(|s| s.iter().map(|&e| map[e as usize]).collect())
                            .collect(),
                    )
                })
                .collect(),
        }
    }
}

/// Whether the chain records a path embedding into `co`: a covering chain
/// of image plays rooted at depth one, on which the coalgebra classes are
/// realized bag by bag, every bag introduces an element, and every tuple
/// inside the union of bags lies inside a single bag.
pub fn is_path_embedding_chain(co: &Coalgebra, chain: &PathChain) -> bool {
    let nodes = &chain.nodes;
    for (i, q) in nodes.iter().enumerate() {
        if q.len() != i + 1 {
            return false;
        }
        if i > 0 && !nodes[i - 1].is_prefix_of(q) {
            return false;
        }
        // Classes along the chain agree with the coalgebra.
        for &a in q.last() {
            if canonicalize(&FocussedPlay::new(q.clone(), a)) != co.gamma[a as usize] {
                return false;
            }
        }
        // Some element is introduced here, so the node is in the image.
        let introduced = q
            .last()
            .iter()
            .any(|&a| co.gamma[a as usize].play() == q);
        if !introduced {
            return false;
        }
    }
    // Strongness: tuples inside the union must lie inside one bag.
    let union = chain.union();
    for (_, tuple) in co.structure.all_tuples() {
        let inside = tuple.iter().all(|e| union.binary_search(e).is_ok());
        if inside {
            let covered = nodes
                .iter()
                .any(|q| tuple.iter().all(|e| q.last().contains(e)));
            if !covered {
                return false;
            }
        }
    }
    true
}

/// All path embeddings into `co` with at most `max_len` bags, as chains in
/// lexicographic order. The empty chain is not included.
pub fn enumerate_path_embeddings(co: &Coalgebra, max_len: usize) -> Vec<PathChain> {
    let plays = coalgebra_plays(co);
    let mut out = Vec::new();
    let mut current: Vec<Play> = Vec::new();
    fn extend(
        co: &Coalgebra,
        plays: &[Play],
        current: &mut Vec<Play>,
        max_len: usize,
        out: &mut Vec<PathChain>,
    ) {
        if current.len() == max_len {
            return;
        }
        let want_len = current.len() + 1;
        for p in plays {
            if p.len() != want_len {
                continue;
            }
            if let Some(last) = current.last() {
                if !last.is_prefix_of(p) {
                    continue;
                }
            }
            current.push(p.clone());
            let chain = PathChain {
                nodes: current.clone(),
            };
            if is_path_embedding_chain(co, &chain) {
                out.push(chain);
                extend(co, plays, current, max_len, out);
            }
            current.pop();
        }
    }
    extend(co, &plays, &mut current, max_len, &mut out);
    out.sort();
    out
}

/// Builds the abstract path coalgebra described by a chain, together with
/// the embedding into `co` (as a map on universe indices).
pub fn path_coalgebra_from_chain(
    co: &Coalgebra,
    chain: &PathChain,
) -> Result<(Coalgebra, Vec<Elem>), OpenMapError> {
    if !is_path_embedding_chain(co, chain) {
        return Err(OpenMapError::SpanInvalid(
            "chain is not a path embedding".to_string(),
        ));
    }
    let union = chain.union();
    let names: Vec<String> = union
        .iter()
        .map(|&a| co.structure.element_name(a).to_string())
        .collect();
    let reindex: BTreeMap<Elem, Elem> = union
        .iter()
        .enumerate()
        .map(|(i, &a)| (a, i as Elem))
        .collect();
    let mut tables: BTreeMap<String, BTreeSet<Tuple>> = BTreeMap::new();
    for q in &chain.nodes {
        for (relation, tuple) in co.structure.all_tuples() {
            if tuple.iter().all(|e| q.last().contains(e)) {
                let lifted: Tuple = tuple.iter().map(|e| reindex[e]).collect();
                tables.entry(relation.to_string()).or_default().insert(lifted);
            }
        }
    }
    let structure = Structure::from_parts(co.structure.signature().clone(), names, tables);
    let gamma = union
        .iter()
        .map(|&a| {
            let class = &co.gamma[a as usize];
            let sets: Vec<Vec<Elem>> = class
                .play()
                .sets()
                .iter()
                .map(|s| s.iter().map(|e| reindex[e]).collect())
                .collect();
            canonicalize(&FocussedPlay::new(Play::new(sets), reindex[&a]))
        })
        .collect();
    let path = Coalgebra {
        structure,
        kind: co.kind,
        width: co.width,
        depth: co.depth,
        gamma,
    };
    validate_coalgebra(&path)?;
    Ok((path, union))
}

/// Whether `f` is a coalgebra morphism `src → dst`: a homomorphism whose
/// square with the two structure maps commutes.
pub fn is_coalgebra_morphism(f: &[Elem], src: &Coalgebra, dst: &Coalgebra) -> bool {
    if f.len() != src.structure.universe_len()
        || !crate::structures::preserves_tuples(&src.structure, &dst.structure, f)
    {
        return false;
    }
    src.structure.elements().all(|x| {
        let class = &src.gamma[x as usize];
        let mapped_sets: Vec<Vec<Elem>> = class
            .play()
            .sets()
            .iter()
            .map(|s| s.iter().map(|&e| f[e as usize]).collect())
            .collect();
        let lifted = canonicalize(&FocussedPlay::new(Play::new(mapped_sets), f[x as usize]));
        lifted == dst.gamma[f[x as usize] as usize]
    })
}

/// Whether the composite of `f` with one path embedding chain remains a
/// path embedding.
fn composite_is_path_embedding(
    f: &[Elem],
    src: &Coalgebra,
    dst: &Coalgebra,
    chain: &PathChain,
) -> bool {
    let image = chain.mapped(f);
    if !is_path_embedding_chain(dst, &image) {
        return false;
    }
    // Injectivity on the path's universe.
    let union = chain.union();
    let mut images: Vec<Elem> = union.iter().map(|&a| f[a as usize]).collect();
    images.sort_unstable();
    images.dedup();
    if images.len() != union.len() {
        return false;
    }
    // Reflection: target tuples inside the image arise from source tuples
    // inside a bag.
    for (relation, tuple) in dst.structure.all_tuples() {
        if !tuple.iter().all(|e| images.binary_search(e).is_ok()) {
            continue;
        }
        let realized = chain.nodes.iter().any(|q| {
            src.structure.tuples(relation).any(|t| {
                t.iter().all(|e| q.last().contains(e))
                    && t.iter().map(|&e| f[e as usize]).collect::<Tuple>() == *tuple
            })
        });
        if !realized {
            return false;
        }
    }
    true
}

/// Whether `f : src → dst` post-composes every path embedding to a path
/// embedding.
pub fn is_pathwise_embedding(f: &[Elem], src: &Coalgebra, dst: &Coalgebra) -> bool {
    let max_len = src.structure.universe_len().max(1);
    enumerate_path_embeddings(src, max_len)
        .iter()
        .all(|chain| composite_is_path_embedding(f, src, dst, chain))
}

/// Whether `f` restricts to an embedding on every guarded set of the
/// source: injective there, and reflecting the relations it lands on.
/// This is the embedding property the span legs carry; unlike the full
/// pathwise condition it tolerates a strategy re-pairing an element across
/// disjoint rounds.
pub fn is_guarded_set_embedding(f: &[Elem], src: &Coalgebra, dst: &Coalgebra) -> bool {
    let sets = crate::guards::exactly_guarded_sets(&src.structure, src.kind, src.width);
    sets.iter().all(|g| {
        let mut images: Vec<Elem> = g.elements.iter().map(|&x| f[x as usize]).collect();
        images.sort_unstable();
        images.dedup();
        if images.len() != g.elements.len() {
            return false;
        }
        // Reflection within the set: target tuples among the images come
        // from source tuples inside the set.
        dst.structure.all_tuples().all(|(relation, tuple)| {
            if !tuple.iter().all(|e| images.binary_search(e).is_ok()) {
                return true;
            }
            src.structure.tuples(relation).any(|t| {
                t.iter().all(|e| g.elements.contains(e))
                    && t.iter().map(|&e| f[e as usize]).collect::<Tuple>() == *tuple
            })
        })
    })
}

/// Path lifting: for every path embedding `P ↣ src` and every one-step
/// extension `Q` of its image in `dst`, some one-step extension of `P` in
/// `src` maps onto `Q`. Extensions are single covering steps, iterated
/// through the enumeration of all chains.
pub fn is_open(f: &[Elem], src: &Coalgebra, dst: &Coalgebra) -> Result<bool, OpenMapError> {
    if !is_coalgebra_morphism(f, src, dst) {
        return Err(OpenMapError::NotACoalgebraMorphism);
    }
    let max_len = src
        .structure
        .universe_len()
        .max(dst.structure.universe_len())
        .max(1);
    let src_plays = coalgebra_plays(src);
    let mut src_chains = enumerate_path_embeddings(src, max_len);
    src_chains.insert(0, PathChain { nodes: Vec::new() });
    for chain in &src_chains {
        let image = chain.mapped(f);
        if !chain.is_empty() && !is_path_embedding_chain(dst, &image) {
            // The square's right leg is not an embedding; no lifting duty.
            continue;
        }
        // One-step extensions of the image chain in dst.
        let want_len = image.len() + 1;
        for q in coalgebra_plays(dst) {
            if q.len() != want_len {
                continue;
            }
            if let Some(last) = image.nodes.last() {
                if !last.is_prefix_of(&q) {
                    continue;
                }
            }
            let mut extended = image.clone();
            extended.nodes.push(q.clone());
            if !is_path_embedding_chain(dst, &extended) {
                continue;
            }
            // A filler: an extension of the source chain mapping onto it.
            let found = src_plays.iter().any(|p| {
                if p.len() != want_len {
                    return false;
                }
                if let Some(last) = chain.nodes.last() {
                    if !last.is_prefix_of(p) {
                        return false;
                    }
                }
                let mut candidate = chain.clone();
                candidate.nodes.push(p.clone());
                is_path_embedding_chain(src, &candidate)
                    && candidate.mapped(f) == extended
                    && composite_is_path_embedding(f, src, dst, &candidate)
            });
            if !found {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// One two-sided play: the history of Duplicator response positions.
type PairPlay = Vec<Position>;

fn pair_in_position(p: &Position, pair: (Elem, Elem)) -> bool {
    position_lookup(p, pair.0) == Some(pair.1)
}

/// Componentwise canonicalization of a focussed two-sided play: drop the
/// tail while the focus pair stays in the preceding position.
fn pair_canonicalize(play: &[Position], focus: (Elem, Elem)) -> (PairPlay, (Elem, Elem)) {
    let mut start = play.len() - 1;
    while start > 0 && pair_in_position(&play[start - 1], focus) {
        start -= 1;
    }
    (play[..=start].to_vec(), focus)
}

/// A span of open pathwise embeddings over the two cofree coalgebras,
/// built from a winning bisimulation strategy.
#[derive(Debug, Clone)]
pub struct BisimSpan {
    pub kind: GuardKind,
    pub width: Bound,
    pub depth: u32,
    pub apex: Coalgebra,
    pub left_comonad: ComonadStructure,
    pub right_comonad: ComonadStructure,
    pub left_cofree: Coalgebra,
    pub right_cofree: Coalgebra,
    pub leg_left: Vec<Elem>,
    pub leg_right: Vec<Elem>,
    apex_classes: Vec<(PairPlay, (Elem, Elem))>,
}

impl BisimSpan {
    pub fn apex_class(&self, i: Elem) -> &(PairPlay, (Elem, Elem)) {
        &self.apex_classes[i as usize]
    }

    fn apex_index(&self, class: &(PairPlay, (Elem, Elem))) -> Option<Elem> {
        self.apex_classes
            .binary_search(class)
            .ok()
            .map(|i| i as Elem)
    }
}

/// Builds the diagonal coalgebra out of a winning `d`-round bisimulation
/// strategy: its universe is the canonical classes of strategy-consistent
/// two-sided focussed plays, its structure map mirrors the
/// comultiplication, and the legs project to the two cofree coalgebras.
pub fn build_span(a: &Structure, b: &Structure, st: &Strategy) -> Result<BisimSpan, OpenMapError> {
    if st.mode != GameMode::Bisimulation {
        return Err(OpenMapError::SpanInvalid(
            "span construction needs a bisimulation strategy".to_string(),
        ));
    }
    st.validate(a, b)?;
    let kind = st.kind;
    let width = st.width;
    let d = st.rounds;

    let exact_a = crate::guards::GuardContext::new(a, kind, width);
    let exact_b = crate::guards::GuardContext::new(b, kind, width);
    let mut moves: Vec<Move> = exact_a
        .exact_sets()
        .iter()
        .map(|s| Move {
            side: Side::Left,
            set: s.clone(),
        })
        .collect();
    moves.extend(exact_b.exact_sets().iter().map(|s| Move {
        side: Side::Right,
        set: s.clone(),
    }));

    // Strategy-consistent two-sided plays and their focussed classes.
    let mut universe: BTreeSet<(PairPlay, (Elem, Elem))> = BTreeSet::new();
    let mut raw_tuples: Vec<(String, Vec<(PairPlay, (Elem, Elem))>)> = Vec::new();
    let mut frontier: Vec<(Vec<Move>, PairPlay)> = vec![(Vec::new(), Vec::new())];
    for _ in 0..d {
        let mut next = Vec::new();
        for (history, play) in frontier {
            for mv in &moves {
                let mut extended_history = history.clone();
                extended_history.push(mv.clone());
                let response = st.response(&extended_history).ok_or_else(|| {
                    GameError::StrategyIncomplete(format!(
                        "no response after {} moves",
                        extended_history.len()
                    ))
                })?;
                let mut extended = play.clone();
                extended.push(response.clone());
                for &(x, y) in response {
                    universe.insert(pair_canonicalize(&extended, (x, y)));
                }
                for (relation, tuple) in a.all_tuples() {
                    let mapped: Option<Vec<(Elem, Elem)>> = tuple
                        .iter()
                        .map(|&e| position_lookup(response, e).map(|y| (e, y)))
                        .collect();
                    if let Some(pairs) = mapped {
                        raw_tuples.push((
                            relation.to_string(),
                            pairs
                                .into_iter()
                                .map(|pair| pair_canonicalize(&extended, pair))
                                .collect(),
                        ));
                    }
                }
                next.push((extended_history, extended));
            }
        }
        frontier = next;
    }

    let apex_classes: Vec<(PairPlay, (Elem, Elem))> = universe.into_iter().collect();
    let index_of = |class: &(PairPlay, (Elem, Elem))| -> Elem {
        apex_classes
            .binary_search(class)
            .expect("class collected") as Elem
    };

    let names: Vec<String> = (0..apex_classes.len()).map(|i| format!("r{i}")).collect();
    let mut tables: BTreeMap<String, BTreeSet<Tuple>> = BTreeMap::new();
    for (relation, classes) in raw_tuples {
        let tuple: Tuple = classes.iter().map(&index_of).collect();
        tables.entry(relation).or_default().insert(tuple);
    }
    let apex_structure = Structure::from_parts(a.signature().clone(), names, tables);

    // The structure map, mirroring the comultiplication formula.
    let gamma: Vec<CanonicalElement> = apex_classes
        .iter()
        .enumerate()
        .map(|(i, (play, _))| {
            let mut levels: Vec<Vec<Elem>> = Vec::with_capacity(play.len());
            for j in 1..=play.len() {
                let level: BTreeSet<Elem> = play[j - 1]
                    .iter()
                    .map(|&(x, y)| index_of(&pair_canonicalize(&play[..j], (x, y))))
                    .collect();
                levels.push(level.into_iter().collect());
            }
            canonicalize(&FocussedPlay::new(Play::new(levels), i as Elem))
        })
        .collect();
    let apex = Coalgebra {
        structure: apex_structure,
        kind,
        width,
        depth: Bound::Finite(d),
        gamma,
    };
    validate_coalgebra(&apex)?;

    let (left_comonad, left_cofree) = cofree(a, kind, width, d)?;
    let (right_comonad, right_cofree) = cofree(b, kind, width, d)?;
    let project = |play: &PairPlay, focus: (Elem, Elem), left: bool| -> CanonicalElement {
        let sets: Vec<Vec<Elem>> = play
            .iter()
            .map(|p| {
                if left {
                    position_domain(p)
                } else {
                    position_image(p)
                }
            })
            .collect();
        let focus = if left { focus.0 } else { focus.1 };
        canonicalize(&FocussedPlay::new(Play::new(sets), focus))
    };
    let leg_left: Vec<Elem> = apex_classes
        .iter()
        .map(|(play, focus)| {
            left_comonad
                .class_index(&project(play, *focus, true))
                .expect("projection is a carrier class")
        })
        .collect();
    let leg_right: Vec<Elem> = apex_classes
        .iter()
        .map(|(play, focus)| {
            right_comonad
                .class_index(&project(play, *focus, false))
                .expect("projection is a carrier class")
        })
        .collect();

    Ok(BisimSpan {
        kind,
        width,
        depth: d,
        apex,
        left_comonad,
        right_comonad,
        left_cofree,
        right_cofree,
        leg_left,
        leg_right,
        apex_classes,
    })
}

/// Extracts a winning `d`-round bisimulation strategy from a span by
/// lifting each Spoiler move through the apex: a response is accepted when
/// all of its focussed two-sided classes exist in the apex universe.
pub fn span_implies_bisim(span: &BisimSpan) -> Result<Strategy, OpenMapError> {
    let a = &span.left_comonad.base;
    let b = &span.right_comonad.base;
    let exact_a = crate::guards::GuardContext::new(a, span.kind, span.width);
    let exact_b = crate::guards::GuardContext::new(b, span.kind, span.width);
    let mut moves: Vec<Move> = exact_a
        .exact_sets()
        .iter()
        .map(|s| Move {
            side: Side::Left,
            set: s.clone(),
        })
        .collect();
    moves.extend(exact_b.exact_sets().iter().map(|s| Move {
        side: Side::Right,
        set: s.clone(),
    }));

    // Candidate responses per move: partial isomorphisms of the right
    // shape, in lexicographic order.
    let candidates = |mv: &Move| -> Vec<Position> {
        let mut out = Vec::new();
        match mv.side {
            Side::Left => {
                let mut current: Position = Vec::new();
                enumerate_total(&mv.set, b.universe_len(), &mut current, &mut |p| {
                    if exact_b.is_guarded(&position_image(p)) && is_partial_iso(a, b, p) {
                        out.push(p.clone());
                    }
                });
            }
            Side::Right => {
                let mut current: Vec<(Elem, Elem)> = Vec::new();
                enumerate_total(&mv.set, a.universe_len(), &mut current, &mut |inv| {
                    let p: BTreeSet<(Elem, Elem)> = inv.iter().map(|&(y, x)| (x, y)).collect();
                    let p: Position = p.into_iter().collect();
                    if p.len() == mv.set.len()
                        && exact_a.is_guarded(&position_domain(&p))
                        && is_partial_iso(a, b, &p)
                    {
                        out.push(p);
                    }
                });
                out.sort();
                out.dedup();
            }
        }
        out
    };

    let mut responses: BTreeMap<Vec<Move>, Position> = BTreeMap::new();
    let mut frontier: Vec<(Vec<Move>, PairPlay)> = vec![(Vec::new(), Vec::new())];
    for _ in 0..span.depth {
        let mut next = Vec::new();
        for (history, play) in frontier {
            for mv in &moves {
                let response = candidates(mv)
                    .into_iter()
                    .find(|p| {
                        let mut extended = play.clone();
                        extended.push(p.clone());
                        p.iter().all(|&(x, y)| {
                            span.apex_index(&pair_canonicalize(&extended, (x, y))).is_some()
                        })
                    })
                    .ok_or_else(|| {
                        OpenMapError::SpanInvalid(format!(
                            "no apex-consistent response to {:?} {:?}",
                            mv.side, mv.set
                        ))
                    })?;
                let mut extended_history = history.clone();
                extended_history.push(mv.clone());
                let mut extended = play.clone();
                extended.push(response.clone());
                responses.insert(extended_history.clone(), response);
                next.push((extended_history, extended));
            }
        }
        frontier = next;
    }
    Ok(Strategy {
        kind: span.kind,
        width: span.width,
        rounds: span.depth,
        mode: GameMode::Bisimulation,
        responses,
    })
}

fn enumerate_total(
    dom: &[Elem],
    targets: usize,
    current: &mut Vec<(Elem, Elem)>,
    visit: &mut dyn FnMut(&Vec<(Elem, Elem)>),
) {
    if current.len() == dom.len() {
        visit(current);
        return;
    }
    let x = dom[current.len()];
    for y in 0..targets as Elem {
        current.push((x, y));
        enumerate_total(dom, targets, current, visit);
        current.pop();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{path_a, tri_b};
    use crate::games::{winning_strategy, GameConfig};

    fn atom_cfg(rounds: u32) -> GameConfig {
        GameConfig {
            kind: GuardKind::Atom,
            width: Bound::Finite(2),
            rounds: Bound::Finite(rounds),
            mode: GameMode::Bisimulation,
        }
    }

    #[test]
    fn cofree_is_a_coalgebra() {
        let (_, co) = cofree(&path_a(), GuardKind::Atom, Bound::Finite(2), 2).unwrap();
        assert_eq!(validate_coalgebra(&co), Ok(()));
        // Plays of the comultiplication keep their length under the bound.
        for class in &co.gamma {
            assert!(class.depth() <= 2);
        }
    }

    #[test]
    fn cofree_singleton() {
        let s = Structure::new(
            crate::structures::Signature::new([("R", 2)]).unwrap(),
            vec!["a"],
            [],
        )
        .unwrap();
        let (_, co) = cofree(&s, GuardKind::Atom, Bound::Finite(2), 2).unwrap();
        assert_eq!(validate_coalgebra(&co), Ok(()));
    }

    #[test]
    fn paper_decomposition_is_a_path() {
        let dec = crate::decomposition::Decomposition {
            structure: path_a(),
            kind: GuardKind::Atom,
            tau: vec![
                Play::new(vec![vec![0, 1]]),
                Play::new(vec![vec![0, 1]]),
                Play::new(vec![vec![0, 1], vec![1, 2]]),
            ],
        };
        let co = crate::decomposition::decomposition_to_coalgebra(&dec, Bound::Finite(2)).unwrap();
        assert!(is_path(&co));
    }

    #[test]
    fn forked_decomposition_is_not_a_path() {
        // A star decomposed with two branches out of the root bag.
        let s = Structure::new(
            crate::structures::Signature::new([("R", 2)]).unwrap(),
            vec!["a", "b", "c", "d"],
            [(
                "R".to_string(),
                vec![
                    vec!["a".into(), "b".into()],
                    vec!["a".into(), "c".into()],
                    vec!["a".into(), "d".into()],
                ],
            )],
        )
        .unwrap();
        let dec = crate::decomposition::Decomposition {
            structure: s,
            kind: GuardKind::Atom,
            tau: vec![
                Play::new(vec![vec![0, 1]]),
                Play::new(vec![vec![0, 1]]),
                Play::new(vec![vec![0, 1], vec![0, 2]]),
                Play::new(vec![vec![0, 1], vec![0, 3]]),
            ],
        };
        let co = crate::decomposition::decomposition_to_coalgebra(&dec, Bound::Finite(2)).unwrap();
        assert!(!is_path(&co));
    }

    #[test]
    fn single_node_decomposition_is_a_path() {
        let dec = crate::decomposition::synthesize(&tri_b(), GuardKind::Loose, Bound::Finite(3))
            .unwrap()
            .expect("trivial decomposition");
        let co = crate::decomposition::decomposition_to_coalgebra(&dec, Bound::Finite(3)).unwrap();
        assert!(is_path(&co));
    }

    #[test]
    fn path_embeddings_into_cofree_path_a() {
        let (_, co) = cofree(&path_a(), GuardKind::Atom, Bound::Finite(2), 2).unwrap();
        let chains = enumerate_path_embeddings(&co, 2);
        assert!(!chains.is_empty());
        // Length-one chains are the guarded sets of the base, lifted.
        let singles: Vec<&PathChain> = chains.iter().filter(|c| c.len() == 1).collect();
        assert_eq!(singles.len(), 5);
        // The chain {a,b} then {a,b}{b,c} appears.
        let expected_len_two = chains.iter().any(|c| {
            c.len() == 2 && c.nodes[1].len() == 2
        });
        assert!(expected_len_two);
        // Every chain yields a genuine path coalgebra.
        for chain in chains.iter().take(10) {
            let (p, embed) = path_coalgebra_from_chain(&co, chain).unwrap();
            assert!(is_path(&p));
            assert!(is_coalgebra_morphism(
                &embed
                    .iter()
                    .map(|&x| x)
                    .collect::<Vec<_>>(),
                &p,
                &co
            ));
        }
    }

    #[test]
    fn no_relation_structure_has_singleton_paths_only() {
        let s = Structure::new(
            crate::structures::Signature::new([("R", 2)]).unwrap(),
            vec!["a", "b"],
            [],
        )
        .unwrap();
        let (_, co) = cofree(&s, GuardKind::Atom, Bound::Finite(2), 2).unwrap();
        for chain in enumerate_path_embeddings(&co, 3) {
            for node in &chain.nodes {
                assert_eq!(node.last().len(), 1);
            }
        }
    }

    #[test]
    fn identity_morphism_is_open() {
        let (_, co) = cofree(&path_a(), GuardKind::Atom, Bound::Finite(2), 2).unwrap();
        let identity: Vec<Elem> = co.structure.elements().collect();
        assert!(is_pathwise_embedding(&identity, &co, &co));
        assert!(is_open(&identity, &co, &co).unwrap());
    }

    #[test]
    fn non_morphisms_are_rejected_by_is_open() {
        let (_, co) = cofree(&path_a(), GuardKind::Atom, Bound::Finite(2), 1).unwrap();
        let constant = vec![0; co.structure.universe_len()];
        assert!(matches!(
            is_open(&constant, &co, &co),
            Err(OpenMapError::NotACoalgebraMorphism)
        ));
    }

    /// The strategy on `(a, a)` answering every Spoiler set with itself.
    fn identity_strategy(a: &Structure, rounds: u32) -> Strategy {
        let ctx = crate::guards::GuardContext::new(a, GuardKind::Atom, Bound::Finite(2));
        let mut moves: Vec<Move> = Vec::new();
        for side in [Side::Left, Side::Right] {
            moves.extend(ctx.exact_sets().iter().map(|s| Move {
                side,
                set: s.clone(),
            }));
        }
        let mut responses = BTreeMap::new();
        let mut frontier: Vec<Vec<Move>> = vec![Vec::new()];
        for _ in 0..rounds {
            let mut next = Vec::new();
            for history in frontier {
                for mv in &moves {
                    let mut extended = history.clone();
                    extended.push(mv.clone());
                    let identity: Position = mv.set.iter().map(|&u| (u, u)).collect();
                    responses.insert(extended.clone(), identity);
                    next.push(extended);
                }
            }
            frontier = next;
        }
        Strategy {
            kind: GuardKind::Atom,
            width: Bound::Finite(2),
            rounds,
            mode: GameMode::Bisimulation,
            responses,
        }
    }

    #[test]
    fn span_of_identity_strategy() {
        // With the identity strategy the legs are isomorphic and satisfy
        // the full pathwise-embedding condition.
        let a = path_a();
        let st = identity_strategy(&a, 2);
        st.validate(&a, &a).unwrap();
        let span = build_span(&a, &a, &st).unwrap();
        assert_eq!(validate_coalgebra(&span.apex), Ok(()));
        assert!(is_coalgebra_morphism(
            &span.leg_left,
            &span.apex,
            &span.left_cofree
        ));
        assert!(is_coalgebra_morphism(
            &span.leg_right,
            &span.apex,
            &span.right_cofree
        ));
        assert_eq!(span.leg_left, span.leg_right);
        assert!(is_pathwise_embedding(&span.leg_left, &span.apex, &span.left_cofree));
        assert!(is_guarded_set_embedding(&span.leg_left, &span.apex, &span.left_cofree));
        assert!(is_open(&span.leg_left, &span.apex, &span.left_cofree).unwrap());
        assert!(is_open(&span.leg_right, &span.apex, &span.right_cofree).unwrap());
        let extracted = span_implies_bisim(&span).unwrap();
        extracted.validate(&a, &a).unwrap();
    }

    #[test]
    fn span_of_solver_strategy() {
        // Solver-extracted strategies may legally re-pair an element across
        // rounds on the opposite side; the legs remain coalgebra morphisms,
        // guarded-set embeddings and open.
        let a = path_a();
        let st = winning_strategy(&a, &a, atom_cfg(2)).expect("identity bisimulation");
        let span = build_span(&a, &a, &st).unwrap();
        assert_eq!(validate_coalgebra(&span.apex), Ok(()));
        for (leg, cofree_side) in [
            (&span.leg_left, &span.left_cofree),
            (&span.leg_right, &span.right_cofree),
        ] {
            assert!(is_coalgebra_morphism(leg, &span.apex, cofree_side));
            assert!(is_guarded_set_embedding(leg, &span.apex, cofree_side));
            assert!(is_open(leg, &span.apex, cofree_side).unwrap());
        }
        let extracted = span_implies_bisim(&span).unwrap();
        extracted.validate(&a, &a).unwrap();
    }

    #[test]
    fn span_on_bisimilar_pair() {
        // Two bisimilar two-element structures: single edges.
        let sig = crate::structures::Signature::new([("R", 2)]).unwrap();
        let e1 = Structure::new(
            sig.clone(),
            vec!["a", "b"],
            [("R".to_string(), vec![vec!["a".into(), "b".into()]])],
        )
        .unwrap();
        let e2 = Structure::new(
            sig,
            vec!["x", "y"],
            [("R".to_string(), vec![vec!["x".into(), "y".into()]])],
        )
        .unwrap();
        let st = winning_strategy(&e1, &e2, atom_cfg(2)).expect("isomorphic structures");
        let span = build_span(&e1, &e2, &st).unwrap();
        assert!(is_open(&span.leg_left, &span.apex, &span.left_cofree).unwrap());
        assert!(is_open(&span.leg_right, &span.apex, &span.right_cofree).unwrap());
        let extracted = span_implies_bisim(&span).unwrap();
        extracted.validate(&e1, &e2).unwrap();
    }

    #[test]
    fn no_strategy_no_span() {
        assert!(winning_strategy(&path_a(), &tri_b(), atom_cfg(2)).is_none());
    }

    #[test]
    fn pathwise_embedding_composition() {
        // Path embeddings are pathwise embeddings, so composing with them
        // keeps path embeddings: exercised on the embeddings of path
        // coalgebras extracted from cofree chains.
        let (_, co) = cofree(&path_a(), GuardKind::Atom, Bound::Finite(2), 2).unwrap();
        for chain in enumerate_path_embeddings(&co, 2) {
            let (p, embed) = path_coalgebra_from_chain(&co, &chain).unwrap();
            assert!(is_pathwise_embedding(&embed, &p, &co));
            for sub in enumerate_path_embeddings(&p, 2) {
                assert!(composite_is_path_embedding(&embed, &p, &co, &sub));
            }
        }
    }

    #[test]
    fn cofree_is_right_adjoint_at_desk_scale() {
        // Coalgebra morphisms (X, γ) → F_d A correspond to homomorphisms
        // X → A through composition with the counit.
        let x_dec = crate::decomposition::Decomposition {
            structure: path_a(),
            kind: GuardKind::Atom,
            tau: vec![
                Play::new(vec![vec![0, 1]]),
                Play::new(vec![vec![0, 1]]),
                Play::new(vec![vec![0, 1], vec![1, 2]]),
            ],
        };
        let x = crate::decomposition::decomposition_to_coalgebra(&x_dec, Bound::Finite(2)).unwrap();
        let a = path_a();
        let (comonad, co_free) = cofree(&a, GuardKind::Atom, Bound::Finite(2), 2).unwrap();
        // All coalgebra morphisms X → F_d A by brute force.
        let n = x.structure.universe_len();
        let m = co_free.structure.universe_len();
        let mut morphisms: Vec<Vec<Elem>> = Vec::new();
        let mut map: Vec<Elem> = Vec::new();
        fn walk(
            n: usize,
            m: usize,
            map: &mut Vec<Elem>,
            x: &Coalgebra,
            dst: &Coalgebra,
            out: &mut Vec<Vec<Elem>>,
        ) {
            if map.len() == n {
                if is_coalgebra_morphism(map, x, dst) {
                    out.push(map.clone());
                }
                return;
            }
            for y in 0..m as Elem {
                map.push(y);
                walk(n, m, map, x, dst, out);
                map.pop();
            }
        }
        walk(n, m, &mut map, &x, &co_free, &mut morphisms);
        let eps = comonad.counit_map();
        let composed: BTreeSet<Vec<Elem>> = morphisms
            .iter()
            .map(|g| g.iter().map(|&v| eps[v as usize]).collect())
            .collect();
        assert_eq!(composed.len(), morphisms.len(), "counit composition injective");
        let homs: BTreeSet<Vec<Elem>> = crate::structures::enumerate_homomorphisms(&x.structure, &a)
            .into_iter()
            .map(|h| h.map)
            .collect();
        assert_eq!(composed, homs);
    }
}
