//! Shared oracles and generators for the integration suites. Everything
//! here recomputes results from first principles, independently of the
//! library's implementation paths.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashMap};

use guarded_core::comonad::{canonicalize, FocussedPlay, Play};
use guarded_core::decomposition::{validate_coalgebra, Coalgebra};
use guarded_core::games::{GameConfig, GameMode, Player};
use guarded_core::guards::{exactly_guarded_sets, GuardKind};
use guarded_core::structures::{Elem, Signature, Structure};
use guarded_core::Bound;

use rand::rngs::StdRng;
use rand::Rng;

pub fn binary_signature() -> Signature {
    Signature::new([("R", 2)]).expect("arity")
}

pub fn mixed_signature() -> Signature {
    Signature::new([("R", 2), ("T", 3)]).expect("arity")
}

fn elem_names(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("e{i}")).collect()
}

/// A structure over one binary relation from an adjacency bitmask.
pub fn digraph_structure(n: usize, mask: u32) -> Structure {
    let mut tuples = BTreeSet::new();
    for u in 0..n {
        for v in 0..n {
            if mask & (1 << (u * n + v)) != 0 {
                tuples.insert(vec![u as Elem, v as Elem]);
            }
        }
    }
    Structure::from_parts(
        binary_signature(),
        elem_names(n),
        BTreeMap::from([("R".to_string(), tuples)]),
    )
}

/// A simple graph (symmetric irreflexive edge set) as a structure.
pub fn graph_structure(n: usize, edges: &[(Elem, Elem)]) -> Structure {
    let mut tuples = BTreeSet::new();
    for &(u, v) in edges {
        tuples.insert(vec![u, v]);
        tuples.insert(vec![v, u]);
    }
    Structure::from_parts(
        binary_signature(),
        elem_names(n),
        BTreeMap::from([("R".to_string(), tuples)]),
    )
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for rest in permutations(n - 1) {
        for slot in 0..n {
            let mut p = rest.clone();
            p.insert(slot, n - 1);
            out.push(p);
        }
    }
    out
}

/// All digraphs with exactly `n` vertices up to isomorphism, as canonical
/// adjacency masks.
fn digraph_masks_up_to_iso(n: usize) -> Vec<u32> {
    let perms = permutations(n);
    let mut seen = BTreeSet::new();
    for mask in 0u32..(1 << (n * n)) {
        let canonical = perms
            .iter()
            .map(|p| {
                let mut m = 0u32;
                for u in 0..n {
                    for v in 0..n {
                        if mask & (1 << (u * n + v)) != 0 {
                            m |= 1 << (p[u] * n + p[v]);
                        }
                    }
                }
                m
            })
            .min()
            .expect("at least the identity");
        seen.insert(canonical);
    }
    seen.into_iter().collect()
}

/// All structures over one binary relation with at most `max` elements, up
/// to isomorphism. Includes the empty structure.
pub fn all_digraphs_up_to_iso(max: usize) -> Vec<Structure> {
    let mut out = Vec::new();
    for n in 0..=max {
        for mask in digraph_masks_up_to_iso(n) {
            out.push(digraph_structure(n, mask));
        }
    }
    out
}

/// A random structure over `R/2, T/3` with a sparse table.
pub fn random_mixed_structure(rng: &mut StdRng, max_elems: usize) -> Structure {
    let n = rng.random_range(1..=max_elems);
    let mut binary = BTreeSet::new();
    for _ in 0..rng.random_range(0..=4) {
        binary.insert(vec![
            rng.random_range(0..n) as Elem,
            rng.random_range(0..n) as Elem,
        ]);
    }
    let mut ternary = BTreeSet::new();
    for _ in 0..rng.random_range(0..=2) {
        ternary.insert(vec![
            rng.random_range(0..n) as Elem,
            rng.random_range(0..n) as Elem,
            rng.random_range(0..n) as Elem,
        ]);
    }
    Structure::from_parts(
        mixed_signature(),
        elem_names(n),
        BTreeMap::from([("R".to_string(), binary), ("T".to_string(), ternary)]),
    )
}

/// A random digraph structure.
pub fn random_digraph(rng: &mut StdRng, max_elems: usize, max_edges: usize) -> Structure {
    let n = rng.random_range(1..=max_elems);
    let mut tuples = BTreeSet::new();
    for _ in 0..rng.random_range(0..=max_edges) {
        tuples.insert(vec![
            rng.random_range(0..n) as Elem,
            rng.random_range(0..n) as Elem,
        ]);
    }
    Structure::from_parts(
        binary_signature(),
        elem_names(n),
        BTreeMap::from([("R".to_string(), tuples)]),
    )
}

/// A random simple graph with `n` vertices, as an edge list.
pub fn random_graph_edges(rng: &mut StdRng, n: usize) -> Vec<(Elem, Elem)> {
    let mut edges = Vec::new();
    for u in 0..n {
        for v in (u + 1)..n {
            if rng.random_bool(0.35) {
                edges.push((u as Elem, v as Elem));
            }
        }
    }
    edges
}

/// Whether the simple graph is acyclic, by union-find over its edges.
pub fn graph_is_acyclic(n: usize, edges: &[(Elem, Elem)]) -> bool {
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut Vec<usize>, x: usize) -> usize {
        if parent[x] != x {
            let root = find(parent, parent[x]);
            parent[x] = root;
        }
        parent[x]
    }
    for &(u, v) in edges {
        let ru = find(&mut parent, u as usize);
        let rv = find(&mut parent, v as usize);
        if ru == rv {
            return false;
        }
        parent[ru] = rv;
    }
    true
}

/// Every focussed play over the exact guarded sets, up to the depth bound.
pub fn all_focussed_plays(
    s: &Structure,
    kind: GuardKind,
    k: Bound,
    d: u32,
) -> Vec<FocussedPlay> {
    let alphabet: Vec<Vec<Elem>> = exactly_guarded_sets(s, kind, k)
        .into_iter()
        .map(|g| g.elements)
        .collect();
    let mut out = Vec::new();
    let mut stack: Vec<usize> = Vec::new();
    fn walk(
        alphabet: &[Vec<Elem>],
        d: u32,
        stack: &mut Vec<usize>,
        out: &mut Vec<FocussedPlay>,
    ) {
        for i in 0..alphabet.len() {
            stack.push(i);
            let play = Play::new(stack.iter().map(|&j| alphabet[j].clone()).collect());
            for &focus in &alphabet[*stack.last().expect("nonempty")] {
                out.push(FocussedPlay::new(play.clone(), focus));
            }
            if stack.len() < d as usize {
                walk(alphabet, d, stack, out);
            }
            stack.pop();
        }
    }
    walk(&alphabet, d, &mut stack, &mut out);
    out
}

/// The three-clause overlap relation between two focussed plays, taken
/// directly from its definition: same focus, nonempty common prefix, and
/// the focus belongs to every set on the path between the two plays.
pub fn directly_equivalent(x: &FocussedPlay, y: &FocussedPlay) -> bool {
    if x.focus != y.focus {
        return false;
    }
    let a = x.play.sets();
    let b = y.play.sets();
    let meet = a.iter().zip(b).take_while(|(u, v)| u == v).count();
    if meet == 0 {
        return false;
    }
    let on_path = |sets: &[Vec<Elem>]| {
        sets[meet - 1..]
            .iter()
            .all(|set| set.contains(&x.focus))
    };
    on_path(a) && on_path(b)
}

/// The partition of all focussed plays generated by the three-clause
/// relation, computed by union-find over all pairs.
pub fn quotient_by_direct_relation(plays: &[FocussedPlay]) -> Vec<usize> {
    let mut parent: Vec<usize> = (0..plays.len()).collect();
    fn find(parent: &mut Vec<usize>, x: usize) -> usize {
        if parent[x] != x {
            let root = find(parent, parent[x]);
            parent[x] = root;
        }
        parent[x]
    }
    for i in 0..plays.len() {
        for j in (i + 1)..plays.len() {
            if directly_equivalent(&plays[i], &plays[j]) {
                let ri = find(&mut parent, i);
                let rj = find(&mut parent, j);
                if ri != rj {
                    parent[ri] = rj;
                }
            }
        }
    }
    (0..plays.len()).map(|i| find(&mut parent, i)).collect()
}

/// A reference game solver: plain game-tree search with memoization,
/// structured quite differently from the fixpoint solver.
pub struct GameTree<'a> {
    a: &'a Structure,
    b: &'a Structure,
    cfg: GameConfig,
    moves_a: Vec<Vec<Elem>>,
    moves_b: Vec<Vec<Elem>>,
    guarded_a: Vec<Vec<Elem>>,
    guarded_b: Vec<Vec<Elem>>,
    memo: HashMap<(Vec<(Elem, Elem)>, u32), bool>,
}

impl<'a> GameTree<'a> {
    pub fn new(a: &'a Structure, b: &'a Structure, cfg: GameConfig) -> Self {
        let sets = |s: &Structure| -> Vec<Vec<Elem>> {
            exactly_guarded_sets(s, cfg.kind, cfg.width)
                .into_iter()
                .map(|g| g.elements)
                .collect()
        };
        let closed = |s: &Structure| -> Vec<Vec<Elem>> {
            guarded_core::guards::guarded_sets(s, cfg.kind, cfg.width)
                .into_iter()
                .map(|g| g.elements)
                .collect()
        };
        GameTree {
            a,
            b,
            cfg,
            moves_a: sets(a),
            moves_b: sets(b),
            guarded_a: closed(a),
            guarded_b: closed(b),
            memo: HashMap::new(),
        }
    }

    pub fn duplicator_wins(&mut self, rounds: u32) -> bool {
        self.wins(Vec::new(), rounds)
    }

    fn wins(&mut self, position: Vec<(Elem, Elem)>, rounds: u32) -> bool {
        if rounds == 0 {
            return true;
        }
        if let Some(&cached) = self.memo.get(&(position.clone(), rounds)) {
            return cached;
        }
        let mut answerable = true;
        for mv in self.moves_a.clone() {
            if !self.answer_left(&position, &mv, rounds) {
                answerable = false;
                break;
            }
        }
        if answerable && self.cfg.mode == GameMode::Bisimulation {
            for mv in self.moves_b.clone() {
                if !self.answer_right(&position, &mv, rounds) {
                    answerable = false;
                    break;
                }
            }
        }
        self.memo.insert((position, rounds), answerable);
        answerable
    }

    fn answer_left(&mut self, position: &[(Elem, Elem)], mv: &[Elem], rounds: u32) -> bool {
        let mut responses = Vec::new();
        collect_maps(mv, self.b.universe_len(), &mut Vec::new(), &mut responses);
        responses.into_iter().any(|response| {
            self.left_response_ok(position, &response) && self.wins(response, rounds - 1)
        })
    }

    fn left_response_ok(&self, position: &[(Elem, Elem)], response: &[(Elem, Elem)]) -> bool {
        let overlap_ok = position.iter().all(|&(x, y)| {
            response
                .iter()
                .find(|&&(x2, _)| x2 == x)
                .is_none_or(|&(_, y2)| y2 == y)
        });
        if !overlap_ok {
            return false;
        }
        let image: BTreeSet<Elem> = response.iter().map(|&(_, y)| y).collect();
        let image: Vec<Elem> = image.into_iter().collect();
        if !self.guarded_b.contains(&image) {
            return false;
        }
        match self.cfg.mode {
            GameMode::Simulation => partial_hom_ok(self.a, self.b, response),
            GameMode::Bisimulation => {
                image.len() == response.len()
                    && partial_hom_ok(self.a, self.b, response)
                    && partial_hom_reflects(self.a, self.b, response)
            }
        }
    }

    fn answer_right(&mut self, position: &[(Elem, Elem)], mv: &[Elem], rounds: u32) -> bool {
        let mut inverses = Vec::new();
        collect_maps(mv, self.a.universe_len(), &mut Vec::new(), &mut inverses);
        inverses.into_iter().any(|inverse| {
            let response: BTreeSet<(Elem, Elem)> =
                inverse.iter().map(|&(y, x)| (x, y)).collect();
            let response: Vec<(Elem, Elem)> = response.into_iter().collect();
            if response.len() != mv.len() {
                return false;
            }
            let overlap_ok = position.iter().all(|&(x, y)| {
                response
                    .iter()
                    .find(|&&(_, y2)| y2 == y)
                    .is_none_or(|&(x2, _)| x2 == x)
            });
            let dom: Vec<Elem> = response.iter().map(|&(x, _)| x).collect();
            overlap_ok
                && self.guarded_a.contains(&dom)
                && partial_hom_ok(self.a, self.b, &response)
                && partial_hom_reflects(self.a, self.b, &response)
                && self.wins(response, rounds - 1)
        })
    }
}

fn collect_maps(
    dom: &[Elem],
    targets: usize,
    current: &mut Vec<(Elem, Elem)>,
    out: &mut Vec<Vec<(Elem, Elem)>>,
) {
    if current.len() == dom.len() {
        out.push(current.clone());
        return;
    }
    let x = dom[current.len()];
    for y in 0..targets as Elem {
        current.push((x, y));
        collect_maps(dom, targets, current, out);
        current.pop();
    }
}

fn partial_hom_ok(a: &Structure, b: &Structure, p: &[(Elem, Elem)]) -> bool {
    a.all_tuples().all(|(relation, tuple)| {
        let image: Option<Vec<Elem>> = tuple
            .iter()
            .map(|e| p.iter().find(|&&(x, _)| x == *e).map(|&(_, y)| y))
            .collect();
        image.is_none_or(|image| b.has_tuple(relation, &image))
    })
}

fn partial_hom_reflects(a: &Structure, b: &Structure, p: &[(Elem, Elem)]) -> bool {
    b.all_tuples().all(|(relation, tuple)| {
        let preimage: Option<Vec<Elem>> = tuple
            .iter()
            .map(|e| p.iter().find(|&&(_, y)| y == *e).map(|&(x, _)| x))
            .collect();
        preimage.is_none_or(|preimage| a.has_tuple(relation, &preimage))
    })
}

pub fn reference_winner(a: &Structure, b: &Structure, cfg: GameConfig, rounds: u32) -> Player {
    let mut tree = GameTree::new(a, b, cfg);
    if tree.duplicator_wins(rounds) {
        Player::Duplicator
    } else {
        Player::Spoiler
    }
}

/// Exhaustive search for a coalgebra map at the given width: candidate
/// canonical plays are assigned element by element, with the forced
/// assignments of play prefixes propagated eagerly. Independent of the
/// decomposition synthesis route.
pub fn coalgebra_exists(s: &Structure, kind: GuardKind, k: Bound) -> bool {
    let n = s.universe_len();
    if n == 0 {
        return true;
    }
    let alphabet: Vec<Vec<Elem>> = exactly_guarded_sets(s, kind, k)
        .into_iter()
        .map(|g| g.elements)
        .collect();
    // Candidate canonical classes per element: plays of length ≤ n.
    let mut candidates: Vec<Vec<Play>> = vec![Vec::new(); n];
    let mut stack: Vec<usize> = Vec::new();
    fn walk(
        alphabet: &[Vec<Elem>],
        max_len: usize,
        stack: &mut Vec<usize>,
        candidates: &mut Vec<Vec<Play>>,
    ) {
        for i in 0..alphabet.len() {
            stack.push(i);
            let play = Play::new(stack.iter().map(|&j| alphabet[j].clone()).collect());
            let sets = play.sets();
            for &focus in sets.last().expect("nonempty") {
                let canonical =
                    sets.len() == 1 || !sets[sets.len() - 2].contains(&focus);
                if canonical {
                    candidates[focus as usize].push(play.clone());
                }
            }
            if stack.len() < max_len {
                walk(alphabet, max_len, stack, candidates);
            }
            stack.pop();
        }
    }
    walk(&alphabet, n, &mut stack, &mut candidates);

    fn assign(
        s: &Structure,
        kind: GuardKind,
        k: Bound,
        candidates: &[Vec<Play>],
        gamma: &mut Vec<Option<Play>>,
    ) -> bool {
        let Some(next) = gamma.iter().position(Option::is_none) else {
            let gamma_classes: Vec<_> = gamma
                .iter()
                .enumerate()
                .map(|(i, p)| {
                    canonicalize(&FocussedPlay::new(
                        p.clone().expect("assignment complete"),
                        i as Elem,
                    ))
                })
                .collect();
            let co = Coalgebra {
                structure: s.clone(),
                kind,
                width: k,
                depth: Bound::Infinite,
                gamma: gamma_classes,
            };
            return validate_coalgebra(&co).is_ok();
        };
        for play in &candidates[next] {
            let mut local = gamma.clone();
            if force(play, next as Elem, &mut local) && assign(s, kind, k, candidates, &mut local)
            {
                *gamma = local;
                return true;
            }
        }
        false
    }

    /// Propagates the forced assignments of a candidate play.
    fn force(play: &Play, element: Elem, gamma: &mut Vec<Option<Play>>) -> bool {
        let sets = play.sets();
        if !sets.last().expect("nonempty").contains(&element) {
            return false;
        }
        for i in (1..=sets.len()).rev() {
            for &u in &sets[i - 1] {
                // The forced class of u from this prefix.
                let mut start = i - 1;
                while start > 0 && sets[start - 1].contains(&u) {
                    start -= 1;
                }
                let forced = Play::new(sets[..=start].to_vec());
                match &gamma[u as usize] {
                    Some(existing) if *existing != forced => return false,
                    Some(_) => {}
                    None => gamma[u as usize] = Some(forced),
                }
            }
        }
        gamma[element as usize].is_some()
    }

    let mut gamma: Vec<Option<Play>> = vec![None; n];
    assign(s, kind, k, &candidates, &mut gamma)
}

/// The least width admitting a coalgebra, by exhaustive search.
pub fn coalgebra_number(s: &Structure, kind: GuardKind) -> Option<u32> {
    let max = s.universe_len().max(1) as u32;
    (1..=max).find(|&k| coalgebra_exists(s, kind, Bound::Finite(k)))
}
