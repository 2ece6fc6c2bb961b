//! Guarded simulation and bisimulation games between two structures:
//! greatest-fixpoint and round-bounded solvers, strategy extraction, and
//! the correspondence between Duplicator strategies and coKleisli
//! morphisms out of the bounded comonad carrier.
//!
//! Positions are partial maps between the universes, canonicalized as
//! sorted pairs. The empty round-0 position is represented explicitly, so
//! "Duplicator wins" means the empty position survives the fixpoint.
//! Spoiler moves range over exactly guarded sets; Duplicator may answer
//! into any guarded image. Positional data suffices because the legality
//! of a response depends only on the previous position.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::comonad::{canonicalize, ComonadError, ComonadStructure, FocussedPlay, Play, PlayAlphabet};
use crate::guards::{GuardContext, GuardKind};
use crate::structures::{Elem, Structure};
use crate::Bound;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GameMode {
    Simulation,
    Bisimulation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Player {
    Duplicator,
    Spoiler,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GameConfig {
    pub kind: GuardKind,
    pub width: Bound,
    pub rounds: Bound,
    pub mode: GameMode,
}

/// A partial map between the two universes, sorted by source element.
pub type Position = Vec<(Elem, Elem)>;

/// Which structure Spoiler moved in. `Left` moves pick a guarded set of the
/// first structure (Option 1), `Right` of the second (Option 2).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Side {
    Left,
    Right,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Move {
    pub side: Side,
    pub set: Vec<Elem>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GameError {
    #[error("the supplied map is not a homomorphism")]
    NotAHomomorphism,
    #[error("strategy has no response for a reachable Spoiler move: {0}")]
    StrategyIncomplete(String),
    #[error("strategy responses violate the game rules: {0}")]
    StrategyInvalid(String),
    #[error(transparent)]
    Comonad(#[from] ComonadError),
}

pub fn position_domain(p: &Position) -> Vec<Elem> {
    p.iter().map(|&(x, _)| x).collect()
}

pub fn position_image(p: &Position) -> Vec<Elem> {
    let set: BTreeSet<Elem> = p.iter().map(|&(_, y)| y).collect();
    set.into_iter().collect()
}

pub fn position_lookup(p: &Position, x: Elem) -> Option<Elem> {
    p.binary_search_by_key(&x, |&(a, _)| a).ok().map(|i| p[i].1)
}

fn position_lookup_inverse(p: &Position, y: Elem) -> Option<Elem> {
    p.iter().find(|&&(_, b)| b == y).map(|&(a, _)| a)
}

/// Whether `p` is a partial homomorphism: source tuples supported inside
/// the domain are preserved.
pub(crate) fn is_partial_hom(a: &Structure, b: &Structure, p: &Position) -> bool {
    a.all_tuples().all(|(relation, tuple)| {
        let image: Option<Vec<Elem>> = tuple.iter().map(|&e| position_lookup(p, e)).collect();
        match image {
            Some(image) => b.has_tuple(relation, &image),
            None => true,
        }
    })
}

/// Whether `p` is a partial isomorphism: injective, preserving and
/// reflecting all relations between mapped elements.
pub(crate) fn is_partial_iso(a: &Structure, b: &Structure, p: &Position) -> bool {
    let image = position_image(p);
    if image.len() != p.len() {
        return false;
    }
    if !is_partial_hom(a, b, p) {
        return false;
    }
    b.all_tuples().all(|(relation, tuple)| {
        let preimage: Option<Vec<Elem>> = tuple
            .iter()
            .map(|&e| position_lookup_inverse(p, e))
            .collect();
        match preimage {
            Some(preimage) => a.has_tuple(relation, &preimage),
            None => true,
        }
    })
}

/// One solved game: the per-round Duplicator-winning position sets and the
/// overall winner.
#[derive(Debug, Clone)]
pub struct GameOutcome {
    pub winner: Player,
    positions: Vec<Position>,
    /// `layers[j]` marks the positions from which Duplicator survives `j`
    /// further rounds; the last layer is the fixpoint for unbounded games.
    layers: Vec<Vec<bool>>,
}

impl GameOutcome {
    pub fn positions(&self) -> &[Position] {
        &self.positions
    }

    pub fn layer_count(&self) -> usize {
        self.layers.len()
    }

    /// Positions alive after `j` rounds of the operator, capped at the last
    /// computed layer.
    pub fn alive(&self, j: usize) -> &[bool] {
        let j = j.min(self.layers.len() - 1);
        &self.layers[j]
    }

    pub fn winning_positions(&self, j: usize) -> Vec<&Position> {
        self.alive(j)
            .iter()
            .enumerate()
            .filter(|(_, &alive)| alive)
            .map(|(i, _)| &self.positions[i])
            .collect()
    }
}

struct Arena {
    positions: Vec<Position>,
    by_dom: BTreeMap<Vec<Elem>, Vec<usize>>,
    by_im: BTreeMap<Vec<Elem>, Vec<usize>>,
    left_moves: Vec<Vec<Elem>>,
    right_moves: Vec<Vec<Elem>>,
    mode: GameMode,
}

fn enumerate_maps(
    dom: &[Elem],
    targets: usize,
    visit: &mut dyn FnMut(&Position),
) {
    let mut current: Position = Vec::with_capacity(dom.len());
    fn recurse(
        dom: &[Elem],
        targets: usize,
        current: &mut Position,
        visit: &mut dyn FnMut(&Position),
    ) {
        if current.len() == dom.len() {
            visit(current);
            return;
        }
        let x = dom[current.len()];
        for y in 0..targets as Elem {
            current.push((x, y));
            recurse(dom, targets, current, visit);
            current.pop();
        }
    }
    recurse(dom, targets, &mut current, visit);
}

fn build_arena(a: &Structure, b: &Structure, cfg: GameConfig, moves: PlayAlphabet) -> Arena {
    let exact_a = GuardContext::new(a, cfg.kind, cfg.width);
    let exact_b = GuardContext::new(b, cfg.kind, cfg.width);
    let move_sets = |ctx: &GuardContext| -> Vec<Vec<Elem>> {
        match moves {
            PlayAlphabet::Exact => ctx.exact_sets().to_vec(),
            PlayAlphabet::SubsetClosed => {
                let mut all: BTreeSet<Vec<Elem>> = BTreeSet::new();
                for s in ctx.exact_sets() {
                    for mask in 1u32..(1 << s.len()) {
                        let subset: Vec<Elem> = s
                            .iter()
                            .enumerate()
                            .filter(|(i, _)| mask & (1 << i) != 0)
                            .map(|(_, &e)| e)
                            .collect();
                        all.insert(subset);
                    }
                }
                all.into_iter().collect()
            }
        }
    };
    let left_moves = move_sets(&exact_a);
    let right_moves = move_sets(&exact_b);

    let mut set: BTreeSet<Position> = BTreeSet::new();
    set.insert(Vec::new());
    // Option-1-shaped positions: domain a Spoiler set on the left.
    for dom in &left_moves {
        enumerate_maps(dom, b.universe_len(), &mut |p| {
            if !exact_b.is_guarded(&position_image(p)) {
                return;
            }
            let valid = match cfg.mode {
                GameMode::Simulation => is_partial_hom(a, b, p),
                GameMode::Bisimulation => is_partial_iso(a, b, p),
            };
            if valid {
                set.insert(p.clone());
            }
        });
    }
    // Option-2-shaped positions: image exactly a Spoiler set on the right.
    if cfg.mode == GameMode::Bisimulation {
        for im in &right_moves {
            enumerate_maps(im, a.universe_len(), &mut |inverse| {
                let p: BTreeSet<(Elem, Elem)> =
                    inverse.iter().map(|&(y, x)| (x, y)).collect();
                let p: Position = p.into_iter().collect();
                if p.len() != im.len() {
                    return; // not injective
                }
                if !exact_a.is_guarded(&position_domain(&p)) {
                    return;
                }
                if is_partial_iso(a, b, &p) {
                    set.insert(p);
                }
            });
        }
    }

    let positions: Vec<Position> = set.into_iter().collect();
    let mut by_dom: BTreeMap<Vec<Elem>, Vec<usize>> = BTreeMap::new();
    let mut by_im: BTreeMap<Vec<Elem>, Vec<usize>> = BTreeMap::new();
    for (i, p) in positions.iter().enumerate() {
        by_dom.entry(position_domain(p)).or_default().push(i);
        by_im.entry(position_image(p)).or_default().push(i);
    }
    Arena {
        positions,
        by_dom,
        by_im,
        left_moves,
        right_moves,
        mode: cfg.mode,
    }
}

impl Arena {
    /// Agreement with the previous position on both overlaps, not only the
    /// Spoiler side. Responses of this kind never re-pair an element and
    /// are preferred during strategy extraction.
    fn doubly_consistent(&self, previous: &Position, response: &Position) -> bool {
        self.consistent(previous, response, Side::Left)
            && self.consistent(previous, response, Side::Right)
    }

    /// Consistency of a response with the previous position: agreement on
    /// the shared part of the Spoiler side.
    fn consistent(&self, previous: &Position, response: &Position, side: Side) -> bool {
        match side {
            Side::Left => previous.iter().all(|&(x, y)| {
                match position_lookup(response, x) {
                    Some(y2) => y2 == y,
                    None => true,
                }
            }),
            Side::Right => previous.iter().all(|&(x, y)| {
                match position_lookup_inverse(response, y) {
                    Some(x2) => x2 == x,
                    None => true,
                }
            }),
        }
    }

    fn response_ids(&self, mv: &Move) -> &[usize] {
        let table = match mv.side {
            Side::Left => &self.by_dom,
            Side::Right => &self.by_im,
        };
        table.get(&mv.set).map(|v| v.as_slice()).unwrap_or(&[])
    }

    fn moves(&self) -> Vec<Move> {
        let mut moves: Vec<Move> = self
            .left_moves
            .iter()
            .map(|s| Move {
                side: Side::Left,
                set: s.clone(),
            })
            .collect();
        if self.mode == GameMode::Bisimulation {
            moves.extend(self.right_moves.iter().map(|s| Move {
                side: Side::Right,
                set: s.clone(),
            }));
        }
        moves
    }

    fn can_answer(&self, from: usize, alive: &[bool]) -> bool {
        let previous = &self.positions[from];
        self.moves().iter().all(|mv| {
            self.response_ids(mv).iter().any(|&j| {
                alive[j] && self.consistent(previous, &self.positions[j], mv.side)
            })
        })
    }
}

pub fn solve(a: &Structure, b: &Structure, cfg: GameConfig) -> GameOutcome {
    solve_with_moves(a, b, cfg, PlayAlphabet::Exact)
}

/// Solver entry point with an explicit Spoiler move alphabet. The
/// subset-closed alphabet is equivalent to the exact one and exists for
/// regression tests of that equivalence.
pub fn solve_with_moves(
    a: &Structure,
    b: &Structure,
    cfg: GameConfig,
    moves: PlayAlphabet,
) -> GameOutcome {
    let arena = build_arena(a, b, cfg, moves);
    let n = arena.positions.len();
    let empty_idx = arena
        .positions
        .iter()
        .position(|p| p.is_empty())
        .expect("empty position present");

    let mut layers: Vec<Vec<bool>> = vec![vec![true; n]];
    loop {
        let last = layers.last().expect("at least one layer");
        let next: Vec<bool> = (0..n)
            .map(|i| last[i] && arena.can_answer(i, last))
            .collect();
        let stable = next == *last;
        let deep_enough = match cfg.rounds {
            Bound::Finite(d) => layers.len() > d as usize,
            Bound::Infinite => false,
        };
        if deep_enough {
            break;
        }
        layers.push(next);
        if stable {
            break;
        }
    }
    // For bounded games ensure exactly d+1 layers by repeating the fixpoint.
    if let Bound::Finite(d) = cfg.rounds {
        while layers.len() <= d as usize {
            let last = layers.last().expect("nonempty").clone();
            layers.push(last);
        }
    }

    let winner = if layers.last().expect("nonempty")[empty_idx] {
        Player::Duplicator
    } else {
        Player::Spoiler
    };
    GameOutcome {
        winner,
        positions: arena.positions,
        layers,
    }
}

/// A Duplicator strategy for a round-bounded game, keyed by the full
/// Spoiler history. `responses[h]` is the position reached after answering
/// the last move of `h`.
#[derive(Debug, Clone)]
pub struct Strategy {
    pub kind: GuardKind,
    pub width: Bound,
    pub rounds: u32,
    pub mode: GameMode,
    pub responses: BTreeMap<Vec<Move>, Position>,
}

impl Strategy {
    pub fn response(&self, history: &[Move]) -> Option<&Position> {
        self.responses.get(history)
    }

    /// Checks that the strategy is a winning one for the given pair:
    /// complete for every Spoiler history up to the round bound, with every
    /// response obeying the game rules and the overlap condition.
    pub fn validate(&self, a: &Structure, b: &Structure) -> Result<(), GameError> {
        let cfg = GameConfig {
            kind: self.kind,
            width: self.width,
            rounds: Bound::Finite(self.rounds),
            mode: self.mode,
        };
        let arena = build_arena(a, b, cfg, PlayAlphabet::Exact);
        let guard_a = GuardContext::new(a, self.kind, self.width);
        let guard_b = GuardContext::new(b, self.kind, self.width);
        let mut frontier: Vec<(Vec<Move>, Position)> = vec![(Vec::new(), Vec::new())];
        for _ in 0..self.rounds {
            let mut next = Vec::new();
            for (history, current) in frontier {
                for mv in arena.moves() {
                    let mut extended = history.clone();
                    extended.push(mv.clone());
                    let response = self.response(&extended).ok_or_else(|| {
                        GameError::StrategyIncomplete(format!(
                            "no response after {} moves",
                            extended.len()
                        ))
                    })?;
                    let shape_ok = match mv.side {
                        Side::Left => position_domain(response) == mv.set
                            && guard_b.is_guarded(&position_image(response)),
                        Side::Right => {
                            position_image(response) == mv.set
                                && response.len() == mv.set.len()
                                && guard_a.is_guarded(&position_domain(response))
                        }
                    };
                    let map_ok = match self.mode {
                        GameMode::Simulation => is_partial_hom(a, b, response),
                        GameMode::Bisimulation => is_partial_iso(a, b, response),
                    };
                    if !shape_ok || !map_ok {
                        return Err(GameError::StrategyInvalid(format!(
                            "illegal response to {:?} {:?}",
                            mv.side, mv.set
                        )));
                    }
                    if !arena.consistent(&current, response, mv.side) {
                        return Err(GameError::StrategyInvalid(
                            "overlap condition violated".to_string(),
                        ));
                    }
                    next.push((extended, response.clone()));
                }
            }
            frontier = next;
        }
        Ok(())
    }
}

/// Extracts a winning Duplicator strategy for a round-bounded game, if one
/// exists: at each history the lexicographically first surviving response.
pub fn winning_strategy(a: &Structure, b: &Structure, cfg: GameConfig) -> Option<Strategy> {
    let d = cfg
        .rounds
        .finite()
        .expect("strategy extraction needs a round bound");
    let outcome = solve(a, b, cfg);
    if outcome.winner != Player::Duplicator {
        return None;
    }
    let arena = build_arena(a, b, cfg, PlayAlphabet::Exact);
    let mut responses: BTreeMap<Vec<Move>, Position> = BTreeMap::new();
    let mut frontier: Vec<(Vec<Move>, Position)> = vec![(Vec::new(), Vec::new())];
    for round in 0..d {
        let remaining = (d - round - 1) as usize;
        let alive = outcome.alive(remaining);
        let mut next = Vec::new();
        for (history, current) in frontier {
            for mv in arena.moves() {
                let legal = |j: &&usize| {
                    alive[**j] && arena.consistent(&current, &arena.positions[**j], mv.side)
                };
                let response = arena
                    .response_ids(&mv)
                    .iter()
                    .filter(legal)
                    .find(|&&j| arena.doubly_consistent(&current, &arena.positions[j]))
                    .or_else(|| arena.response_ids(&mv).iter().find(legal))
                    .map(|&j| arena.positions[j].clone())
                    .expect("winning set admits a response");
                let mut extended = history.clone();
                extended.push(mv.clone());
                responses.insert(extended.clone(), response.clone());
                next.push((extended, response));
            }
        }
        frontier = next;
    }
    Some(Strategy {
        kind: cfg.kind,
        width: cfg.width,
        rounds: d,
        mode: cfg.mode,
        responses,
    })
}

/// Turns a coKleisli morphism `h : Ĝ_{k,d}A → B` into the Duplicator
/// strategy answering history `[U_1..U_n]` with `u ↦ h(⟦[U_1..U_n], u⟧)`.
pub fn cokleisli_to_strategy(
    c: &ComonadStructure,
    h: &[Elem],
    b: &Structure,
) -> Result<Strategy, GameError> {
    if h.len() != c.carrier().universe_len()
        || !crate::structures::preserves_tuples(c.carrier(), b, h)
    {
        return Err(GameError::NotAHomomorphism);
    }
    let alphabet = c.alphabet_sets();
    let mut responses: BTreeMap<Vec<Move>, Position> = BTreeMap::new();
    let mut history: Vec<usize> = Vec::new();
    fn recurse(
        c: &ComonadStructure,
        h: &[Elem],
        alphabet: &[Vec<Elem>],
        history: &mut Vec<usize>,
        responses: &mut BTreeMap<Vec<Move>, Position>,
    ) {
        for (i, set) in alphabet.iter().enumerate() {
            history.push(i);
            let play = Play::new(history.iter().map(|&j| alphabet[j].clone()).collect());
            let response: Position = set
                .iter()
                .map(|&u| {
                    let class = canonicalize(&FocussedPlay::new(play.clone(), u));
                    let idx = c.class_index(&class).expect("class materialized");
                    (u, h[idx as usize])
                })
                .collect();
            let key: Vec<Move> = history
                .iter()
                .map(|&j| Move {
                    side: Side::Left,
                    set: alphabet[j].clone(),
                })
                .collect();
            responses.insert(key, response);
            if history.len() < c.depth as usize {
                recurse(c, h, alphabet, history, responses);
            }
            history.pop();
        }
    }
    recurse(c, h, &alphabet, &mut history, &mut responses);
    Ok(Strategy {
        kind: c.kind,
        width: c.width,
        rounds: c.depth,
        mode: GameMode::Simulation,
        responses,
    })
}

/// Turns a winning `d`-round strategy into the coKleisli morphism
/// `⟦p, u⟧ ↦ φ_p(u)`, where `φ_p` is the strategy's response to the play
/// `p` read as a Spoiler history.
pub fn strategy_to_cokleisli(
    st: &Strategy,
    a: &Structure,
    b: &Structure,
) -> Result<(ComonadStructure, Vec<Elem>), GameError> {
    let c = crate::comonad::materialize(a, st.kind, st.width, st.rounds)?;
    let mut map: Vec<Elem> = Vec::with_capacity(c.carrier().universe_len());
    for class in c.classes() {
        let history: Vec<Move> = class
            .play()
            .sets()
            .iter()
            .map(|s| Move {
                side: Side::Left,
                set: s.clone(),
            })
            .collect();
        let response = st.response(&history).ok_or_else(|| {
            GameError::StrategyIncomplete(format!("no response to play {}", class.play()))
        })?;
        let image = position_lookup(response, class.focus()).ok_or_else(|| {
            GameError::StrategyInvalid(format!(
                "response does not cover focus {}",
                class.focus()
            ))
        })?;
        map.push(image);
    }
    if !crate::structures::preserves_tuples(c.carrier(), b, &map) {
        return Err(GameError::StrategyInvalid(
            "induced map is not a homomorphism".to_string(),
        ));
    }
    Ok((c, map))
}
