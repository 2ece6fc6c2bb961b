//! Finite relational signatures, structures, homomorphisms and Gaifman
//! graphs: the ground category every other module builds on.
//!
//! Elements are identified by opaque strings; internally a structure interns
//! them as indices into its universe vector, whose order is the canonical
//! order used for all deterministic iteration and output.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Index of an element in a structure's universe.
pub type Elem = u32;

/// A tuple of a relation table, as universe indices.
pub type Tuple = Vec<Elem>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum StructureError {
    #[error("relation {relation} has arity {expected} but tuple ({tuple}) has length {got}")]
    ArityMismatch {
        relation: String,
        tuple: String,
        expected: u32,
        got: usize,
    },
    #[error("tuple ({tuple}) for relation {relation} mentions unknown element {element}")]
    UnknownElement {
        relation: String,
        tuple: String,
        element: String,
    },
    #[error("table given for relation {0}, which is not in the signature")]
    UnknownRelation(String),
    #[error("relation {0} must have positive arity")]
    NonPositiveArity(String),
    #[error("duplicate element {0} in universe")]
    DuplicateElement(String),
}

/// A relational vocabulary: finitely many relation names, each with a
/// positive arity.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Signature {
    relations: BTreeMap<String, u32>,
}

impl Signature {
    pub fn new<S: Into<String>>(
        relations: impl IntoIterator<Item = (S, u32)>,
    ) -> Result<Self, StructureError> {
        let mut map = BTreeMap::new();
        for (name, arity) in relations {
            let name = name.into();
            if arity == 0 {
                return Err(StructureError::NonPositiveArity(name));
            }
            map.insert(name, arity);
        }
        Ok(Signature { relations: map })
    }

    pub fn empty() -> Self {
        Signature {
            relations: BTreeMap::new(),
        }
    }

    pub fn arity(&self, relation: &str) -> Option<u32> {
        self.relations.get(relation).copied()
    }

    pub fn relation_names(&self) -> impl Iterator<Item = &str> {
        self.relations.keys().map(|s| s.as_str())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, u32)> {
        self.relations.iter().map(|(n, a)| (n.as_str(), *a))
    }

    pub fn contains(&self, relation: &str) -> bool {
        self.relations.contains_key(relation)
    }

    pub fn len(&self) -> usize {
        self.relations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.relations.is_empty()
    }
}

/// A finite relational structure: a universe and one table per relation.
///
/// Tables are sets of tuples (duplicates collapse) of universe indices.
/// Empty universes and empty tables are legal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Structure {
    signature: Signature,
    universe: Vec<String>,
    tables: BTreeMap<String, BTreeSet<Tuple>>,
}

impl Structure {
    /// Builds a structure from named tuples, interning element names.
    pub fn new<S: Into<String>>(
        signature: Signature,
        universe: Vec<S>,
        relations: impl IntoIterator<Item = (String, Vec<Vec<String>>)>,
    ) -> Result<Self, StructureError> {
        let universe: Vec<String> = universe.into_iter().map(Into::into).collect();
        let mut index: BTreeMap<&str, Elem> = BTreeMap::new();
        for (i, name) in universe.iter().enumerate() {
            if index.insert(name.as_str(), i as Elem).is_some() {
                return Err(StructureError::DuplicateElement(name.clone()));
            }
        }
        let mut tables: BTreeMap<String, BTreeSet<Tuple>> = BTreeMap::new();
        for name in signature.relation_names() {
            tables.insert(name.to_string(), BTreeSet::new());
        }
        for (relation, tuples) in relations {
            let Some(arity) = signature.arity(&relation) else {
                return Err(StructureError::UnknownRelation(relation));
            };
            let table = tables.get_mut(&relation).expect("table pre-seeded");
            for tuple in tuples {
                if tuple.len() != arity as usize {
                    return Err(StructureError::ArityMismatch {
                        relation,
                        tuple: tuple.join(","),
                        expected: arity,
                        got: tuple.len(),
                    });
                }
                let mut interned = Vec::with_capacity(tuple.len());
                for component in &tuple {
                    match index.get(component.as_str()) {
                        Some(&e) => interned.push(e),
                        None => {
                            return Err(StructureError::UnknownElement {
                                relation,
                                tuple: tuple.join(","),
                                element: component.clone(),
                            })
                        }
                    }
                }
                table.insert(interned);
            }
        }
        Ok(Structure {
            signature,
            universe,
            tables,
        })
    }

    /// Builds a structure directly from index tuples. The caller is expected
    /// to run [`validate_structure`] afterwards if the tuples are untrusted.
    pub fn from_parts(
        signature: Signature,
        universe: Vec<String>,
        tables: BTreeMap<String, BTreeSet<Tuple>>,
    ) -> Self {
        let mut full_tables = tables;
        for name in signature.relation_names() {
            full_tables.entry(name.to_string()).or_default();
        }
        Structure {
            signature,
            universe,
            tables: full_tables,
        }
    }

    pub fn signature(&self) -> &Signature {
        &self.signature
    }

    pub fn universe_len(&self) -> usize {
        self.universe.len()
    }

    pub fn elements(&self) -> impl Iterator<Item = Elem> {
        0..self.universe.len() as Elem
    }

    pub fn element_name(&self, e: Elem) -> &str {
        &self.universe[e as usize]
    }

    pub fn element_names(&self) -> &[String] {
        &self.universe
    }

    pub fn element_index(&self, name: &str) -> Option<Elem> {
        self.universe
            .iter()
            .position(|n| n == name)
            .map(|i| i as Elem)
    }

    /// Tuples of one relation, in canonical order.
    pub fn tuples(&self, relation: &str) -> impl Iterator<Item = &Tuple> {
        self.tables.get(relation).into_iter().flatten()
    }

    /// All `(relation, tuple)` pairs, relations in name order.
    pub fn all_tuples(&self) -> impl Iterator<Item = (&str, &Tuple)> {
        self.tables
            .iter()
            .flat_map(|(name, table)| table.iter().map(move |t| (name.as_str(), t)))
    }

    pub fn has_tuple(&self, relation: &str, tuple: &[Elem]) -> bool {
        self.tables
            .get(relation)
            .is_some_and(|table| table.contains(tuple))
    }

    pub fn tuple_count(&self) -> usize {
        self.tables.values().map(|t| t.len()).sum()
    }

    /// Renders a tuple with element names, for error messages and reports.
    pub fn tuple_display(&self, tuple: &[Elem]) -> String {
        tuple
            .iter()
            .map(|&e| {
                self.universe
                    .get(e as usize)
                    .cloned()
                    .unwrap_or_else(|| format!("#{e}"))
            })
            .collect::<Vec<_>>()
            .join(",")
    }

    pub fn set_display(&self, set: &[Elem]) -> String {
        format!("{{{}}}", self.tuple_display(set))
    }

    pub fn to_json(&self) -> serde_json::Value {
        let relations: BTreeMap<String, Vec<Vec<String>>> = self
            .tables
            .iter()
            .map(|(name, table)| {
                let tuples = table
                    .iter()
                    .map(|t| {
                        t.iter()
                            .map(|&e| self.universe[e as usize].clone())
                            .collect()
                    })
                    .collect();
                (name.clone(), tuples)
            })
            .collect();
        serde_json::json!({
            "signature": self.signature.relations,
            "universe": self.universe,
            "relations": relations,
        })
    }

    pub fn from_json(text: &str) -> Result<Self, StructureLoadError> {
        let file: StructureFile = serde_json::from_str(text)?;
        let signature = Signature::new(file.signature)?;
        let structure = Structure::new(
            signature,
            file.universe,
            file.relations.into_iter().collect::<Vec<_>>(),
        )?;
        Ok(structure)
    }
}

#[derive(Debug, Error)]
pub enum StructureLoadError {
    #[error("malformed structure file: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Invalid(#[from] StructureError),
}

/// On-disk structure format. Unknown keys are an error.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StructureFile {
    signature: BTreeMap<String, u32>,
    universe: Vec<String>,
    #[serde(default)]
    relations: BTreeMap<String, Vec<Vec<String>>>,
}

/// Checks the structure invariants: tables only for signature relations,
/// tuple lengths match arities, and tuple components lie in the universe.
pub fn validate_structure(s: &Structure) -> Result<(), StructureError> {
    let mut seen = BTreeSet::new();
    for name in &s.universe {
        if !seen.insert(name.as_str()) {
            return Err(StructureError::DuplicateElement(name.clone()));
        }
    }
    for (relation, table) in &s.tables {
        let Some(arity) = s.signature.arity(relation) else {
            return Err(StructureError::UnknownRelation(relation.clone()));
        };
        for tuple in table {
            if tuple.len() != arity as usize {
                return Err(StructureError::ArityMismatch {
                    relation: relation.clone(),
                    tuple: s.tuple_display(tuple),
                    expected: arity,
                    got: tuple.len(),
                });
            }
            for &component in tuple {
                if component as usize >= s.universe.len() {
                    return Err(StructureError::UnknownElement {
                        relation: relation.clone(),
                        tuple: s.tuple_display(tuple),
                        element: format!("#{component}"),
                    });
                }
            }
        }
    }
    Ok(())
}

/// A total map between the universes of two structures.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Homomorphism {
    pub source: Structure,
    pub target: Structure,
    pub map: Vec<Elem>,
}

impl Homomorphism {
    pub fn identity(s: &Structure) -> Self {
        Homomorphism {
            source: s.clone(),
            target: s.clone(),
            map: s.elements().collect(),
        }
    }

    pub fn apply(&self, e: Elem) -> Elem {
        self.map[e as usize]
    }
}

/// Whether every relation tuple of the source is preserved by `map`.
pub fn preserves_tuples(source: &Structure, target: &Structure, map: &[Elem]) -> bool {
    source.all_tuples().all(|(relation, tuple)| {
        let image: Tuple = tuple.iter().map(|&e| map[e as usize]).collect();
        target.has_tuple(relation, &image)
    })
}

/// Whether `h` is a homomorphism: `R(a1,…,an)` implies `R(h(a1),…,h(an))`.
pub fn is_homomorphism(h: &Homomorphism) -> bool {
    h.map.len() == h.source.universe_len() && preserves_tuples(&h.source, &h.target, &h.map)
}

pub fn compose_homomorphisms(first: &Homomorphism, second: &Homomorphism) -> Homomorphism {
    Homomorphism {
        source: first.source.clone(),
        target: second.target.clone(),
        map: first.map.iter().map(|&e| second.apply(e)).collect(),
    }
}

/// All homomorphisms from `a` to `b`, in lexicographic order of their maps.
///
/// Backtracks over elements in universe order, checking each tuple as soon
/// as all of its components are assigned. Intended for small structures;
/// use [`exists_homomorphism`] when only existence matters.
pub fn enumerate_homomorphisms(a: &Structure, b: &Structure) -> Vec<Homomorphism> {
    let mut out = Vec::new();
    search_homomorphisms(a, b, &mut |map| {
        out.push(Homomorphism {
            source: a.clone(),
            target: b.clone(),
            map: map.to_vec(),
        });
        true
    });
    out
}

/// The lexicographically least homomorphism from `a` to `b`, if any.
pub fn exists_homomorphism(a: &Structure, b: &Structure) -> Option<Vec<Elem>> {
    let mut found = None;
    search_homomorphisms(a, b, &mut |map| {
        found = Some(map.to_vec());
        false
    });
    found
}

fn search_homomorphisms(
    a: &Structure,
    b: &Structure,
    visit: &mut dyn FnMut(&[Elem]) -> bool,
) -> bool {
    let n = a.universe_len();
    if n == 0 {
        return visit(&[]);
    }
    if b.universe_len() == 0 {
        return true; // no map exists; vacuously done
    }
    // Bucket each tuple under its largest component so it is checked at the
    // earliest point where the partial map covers it.
    let mut buckets: Vec<Vec<(&str, &Tuple)>> = vec![Vec::new(); n];
    for (relation, tuple) in a.all_tuples() {
        let max = *tuple.iter().max().expect("positive arity") as usize;
        buckets[max].push((relation, tuple));
    }
    let mut map: Vec<Elem> = Vec::with_capacity(n);
    extend_homomorphism(a, b, &buckets, &mut map, visit)
}

fn extend_homomorphism(
    a: &Structure,
    b: &Structure,
    buckets: &[Vec<(&str, &Tuple)>],
    map: &mut Vec<Elem>,
    visit: &mut dyn FnMut(&[Elem]) -> bool,
) -> bool {
    if map.len() == a.universe_len() {
        return visit(map);
    }
    let position = map.len();
    for candidate in b.elements() {
        map.push(candidate);
        let consistent = buckets[position].iter().all(|(relation, tuple)| {
            let image: Tuple = tuple.iter().map(|&e| map[e as usize]).collect();
            b.has_tuple(relation, &image)
        });
        if consistent && !extend_homomorphism(a, b, buckets, map, visit) {
            map.pop();
            return false;
        }
        map.pop();
    }
    true
}

/// A reflexive symmetric graph on `0..n`, used for Gaifman graphs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    adj: Vec<BTreeSet<Elem>>,
}

impl Graph {
    pub fn reflexive(n: usize) -> Self {
        Graph {
            n,
            adj: (0..n).map(|v| BTreeSet::from([v as Elem])).collect(),
        }
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    pub fn add_edge(&mut self, u: Elem, v: Elem) {
        self.adj[u as usize].insert(v);
        self.adj[v as usize].insert(u);
    }

    pub fn adjacent(&self, u: Elem, v: Elem) -> bool {
        self.adj[u as usize].contains(&v)
    }

    pub fn neighbors(&self, u: Elem) -> impl Iterator<Item = Elem> + '_ {
        self.adj[u as usize].iter().copied()
    }

    /// Pairs `u < v` of distinct adjacent vertices.
    pub fn edges(&self) -> impl Iterator<Item = (Elem, Elem)> + '_ {
        (0..self.n as Elem)
            .flat_map(move |u| self.neighbors(u).filter(move |&v| u < v).map(move |v| (u, v)))
    }

    /// Whether the given set is pairwise adjacent.
    pub fn is_clique(&self, set: &[Elem]) -> bool {
        set.iter().enumerate().all(|(i, &u)| {
            set[i + 1..]
                .iter()
                .all(|&v| u == v || self.adjacent(u, v))
        })
    }

    /// All nonempty cliques, as sorted vertex vectors in lexicographic
    /// order, restricted to the size bound.
    pub fn cliques(&self, max_size: crate::Bound) -> Vec<Vec<Elem>> {
        let mut out = Vec::new();
        let mut current = Vec::new();
        self.extend_clique(&mut current, 0, max_size, &mut out);
        out
    }

    fn extend_clique(
        &self,
        current: &mut Vec<Elem>,
        from: Elem,
        max_size: crate::Bound,
        out: &mut Vec<Vec<Elem>>,
    ) {
        if !max_size.allows(current.len() + 1) {
            return;
        }
        for v in from..self.n as Elem {
            if current.iter().all(|&u| self.adjacent(u, v)) {
                current.push(v);
                out.push(current.clone());
                self.extend_clique(current, v + 1, max_size, out);
                current.pop();
            }
        }
    }

    /// Maximal cliques under inclusion, sorted.
    pub fn maximal_cliques(&self) -> Vec<Vec<Elem>> {
        let all = self.cliques(crate::Bound::Infinite);
        let sets: Vec<BTreeSet<Elem>> = all.iter().map(|c| c.iter().copied().collect()).collect();
        all.iter()
            .enumerate()
            .filter(|(i, _)| {
                !sets
                    .iter()
                    .enumerate()
                    .any(|(j, other)| j != *i && sets[*i].is_subset(other) && sets[*i] != *other)
            })
            .map(|(_, c)| c.clone())
            .collect()
    }

    /// Whether some three distinct vertices are pairwise adjacent.
    pub fn has_triangle(&self) -> bool {
        self.edges().any(|(u, v)| {
            self.neighbors(u)
                .any(|w| w != u && w != v && self.adjacent(v, w))
        })
    }
}

impl fmt::Display for Graph {
    // Edges only; self-loops are implicit.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let edges: Vec<String> = self.edges().map(|(u, v)| format!("{u}-{v}")).collect();
        write!(f, "{}", edges.join(" "))
    }
}

/// The Gaifman graph: reflexive, with distinct `u`, `v` adjacent exactly
/// when they occur together in some relation tuple.
pub fn gaifman(s: &Structure) -> Graph {
    let mut graph = Graph::reflexive(s.universe_len());
    for (_, tuple) in s.all_tuples() {
        for (i, &u) in tuple.iter().enumerate() {
            for &v in &tuple[i + 1..] {
                if u != v {
                    graph.add_edge(u, v);
                }
            }
        }
    }
    graph
}
