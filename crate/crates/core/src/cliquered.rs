//! The extended signature exposing Gaifman cliques as relational atoms,
//! and the reduction of clique-guarded games to atom-guarded ones.
//!
//! The extension is truncated at a finite arity bound, which keeps the
//! signature finite while capturing clique guards for every structure
//! whose universe fits under the bound. Clique tables admit tuples with
//! repeated elements, since Gaifman adjacency is reflexive; this is what
//! makes the guard transfer exact on supports.

use crate::games::{solve, GameConfig, GameOutcome};
use crate::guards::GuardKind;
use crate::structures::{gaifman, Elem, Signature, Structure, Tuple};
use crate::Bound;

/// A structure over the clique-extended signature, alongside its base.
#[derive(Debug, Clone)]
pub struct ExtendedStructure {
    pub base: Structure,
    pub max_clique_arity: u32,
    pub structure: Structure,
    /// Names of the added clique relations, indexed by arity.
    pub clique_relations: Vec<(u32, String)>,
}

fn clique_relation_name(base: &Signature, n: u32) -> String {
    let mut name = format!("C{n}");
    while base.contains(&name) {
        name.insert(0, '_');
    }
    name
}

/// Adds relations `C_n` for `2 ≤ n ≤ m`, holding of every tuple whose
/// components are pairwise adjacent in the Gaifman graph of the base.
pub fn clique_extend(s: &Structure, m: u32) -> ExtendedStructure {
    assert!(m >= 2, "clique arities start at 2");
    let graph = gaifman(s);
    let mut relations: Vec<(String, u32)> = s
        .signature()
        .iter()
        .map(|(name, arity)| (name.to_string(), arity))
        .collect();
    let mut clique_relations = Vec::new();
    for n in 2..=m {
        let name = clique_relation_name(s.signature(), n);
        relations.push((name.clone(), n));
        clique_relations.push((n, name));
    }
    let signature = Signature::new(relations).expect("positive arities");

    let mut tables: std::collections::BTreeMap<String, std::collections::BTreeSet<Tuple>> = s
        .signature()
        .relation_names()
        .map(|name| {
            (
                name.to_string(),
                s.tuples(name).cloned().collect(),
            )
        })
        .collect();
    for (n, name) in &clique_relations {
        let mut table = std::collections::BTreeSet::new();
        let mut tuple: Tuple = Vec::with_capacity(*n as usize);
        fn fill(
            graph: &crate::structures::Graph,
            n_elems: Elem,
            arity: u32,
            tuple: &mut Tuple,
            table: &mut std::collections::BTreeSet<Tuple>,
        ) {
            if tuple.len() == arity as usize {
                table.insert(tuple.clone());
                return;
            }
            for v in 0..n_elems {
                if tuple.iter().all(|&u| u == v || graph.adjacent(u, v)) {
                    tuple.push(v);
                    fill(graph, n_elems, arity, tuple, table);
                    tuple.pop();
                }
            }
        }
        fill(
            &graph,
            s.universe_len() as Elem,
            *n,
            &mut tuple,
            &mut table,
        );
        tables.insert(name.clone(), table);
    }
    let structure = Structure::from_parts(signature, s.element_names().to_vec(), tables);
    ExtendedStructure {
        base: s.clone(),
        max_clique_arity: m,
        structure,
        clique_relations,
    }
}

/// Solves a clique-guarded game through the atom-guarded game on the
/// clique extensions. The truncation arity is the width bound when finite,
/// otherwise the larger universe size.
pub fn reduced_game(a: &Structure, b: &Structure, cfg: GameConfig) -> GameOutcome {
    assert_eq!(cfg.kind, GuardKind::Clique, "reduction is for clique guards");
    let m = match cfg.width {
        Bound::Finite(k) => k.max(2),
        Bound::Infinite => (a.universe_len().max(b.universe_len()).max(2)) as u32,
    };
    let ext_a = clique_extend(a, m);
    let ext_b = clique_extend(b, m);
    let atom_cfg = GameConfig {
        kind: GuardKind::Atom,
        ..cfg
    };
    solve(&ext_a.structure, &ext_b.structure, atom_cfg)
}
