//! SMILES parsing, Bemis–Murcko scaffolds and canonical scaffold keys.
//!
//! Supported subset: organic-subset atoms `B C N O P S F Cl Br I`, aromatic
//! `b c n o p s`, bracket atoms (any element, aromatic `se as te`, charge,
//! H count), bonds `- = # : / \`, branches, ring closures `1`-`9` and `%nn`,
//! and `.` separated components. Stereo marks are read and dropped.
//! Isotopes, `*`, atom classes and `$` bonds are rejected. Aromaticity is
//! taken as written.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

mod canon;
mod parser;
mod scaffold;

pub use canon::{canonical_key, random_smiles, write_smiles};
pub use parser::parse_smiles;
pub use scaffold::{murcko_atoms, murcko_scaffold};

/// Key for molecules with no ring system.
pub const ACYCLIC: &str = "ACYCLIC";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SmilesError {
    #[error("EMPTY: empty SMILES")]
    Empty,
    #[error("UNMATCHED_PAREN at byte {pos}")]
    UnmatchedParen { pos: usize },
    #[error("UNPAIRED_RING_CLOSURE at byte {pos}")]
    UnpairedRingClosure { pos: usize },
    #[error("UNKNOWN_ATOM '{symbol}' at byte {pos}")]
    UnknownAtom { pos: usize, symbol: String },
    #[error("UNSUPPORTED_FEATURE {feature} at byte {pos}")]
    UnsupportedFeature { pos: usize, feature: &'static str },
    #[error("SYNTAX_ERROR at byte {pos}: {message}")]
    Syntax { pos: usize, message: &'static str },
    #[error("INVALID_BOND at byte {pos}: {message}")]
    InvalidBond { pos: usize, message: &'static str },
    #[error("CONFLICTING_RING_BOND at byte {pos}")]
    ConflictingRingBond { pos: usize },
}

impl SmilesError {
    pub fn code(&self) -> &'static str {
        match self {
            SmilesError::Empty => "EMPTY",
            SmilesError::UnmatchedParen { .. } => "UNMATCHED_PAREN",
            SmilesError::UnpairedRingClosure { .. } => "UNPAIRED_RING_CLOSURE",
            SmilesError::UnknownAtom { .. } => "UNKNOWN_ATOM",
            SmilesError::UnsupportedFeature { .. } => "UNSUPPORTED_FEATURE",
            SmilesError::Syntax { .. } => "SYNTAX_ERROR",
            SmilesError::InvalidBond { .. } => "INVALID_BOND",
            SmilesError::ConflictingRingBond { .. } => "CONFLICTING_RING_BOND",
        }
    }

    pub fn position(&self) -> Option<usize> {
        match *self {
            SmilesError::Empty => None,
            SmilesError::UnmatchedParen { pos }
            | SmilesError::UnpairedRingClosure { pos }
            | SmilesError::UnknownAtom { pos, .. }
            | SmilesError::UnsupportedFeature { pos, .. }
            | SmilesError::Syntax { pos, .. }
            | SmilesError::InvalidBond { pos, .. }
            | SmilesError::ConflictingRingBond { pos } => Some(pos),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Atom {
    pub element: String,
    pub aromatic: bool,
    pub charge: i32,
    /// Explicit H count from a bracket atom; never part of a scaffold key.
    pub hydrogens: Option<u32>,
    pub in_ring: bool,
}

impl Atom {
    pub fn new(element: impl Into<String>, aromatic: bool, charge: i32) -> Self {
        Atom { element: element.into(), aromatic, charge, hydrogens: None, in_ring: false }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BondOrder {
    Single,
    Double,
    Triple,
    Aromatic,
}

impl BondOrder {
    pub fn code(self) -> u8 {
        match self {
            BondOrder::Single => 1,
            BondOrder::Double => 2,
            BondOrder::Triple => 3,
            BondOrder::Aromatic => 4,
        }
    }

    pub fn is_multiple(self) -> bool {
        matches!(self, BondOrder::Double | BondOrder::Triple)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Bond {
    pub a: usize,
    pub b: usize,
    pub order: BondOrder,
}

impl Bond {
    pub fn other(&self, x: usize) -> usize {
        if self.a == x {
            self.b
        } else {
            self.a
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphError(pub String);

impl fmt::Display for GraphError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for GraphError {}

/// Molecular graph. Ring flags are derived from the bonds, never stored by
/// the caller.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MolGraph {
    atoms: Vec<Atom>,
    bonds: Vec<Bond>,
    source: String,
}

impl MolGraph {
    /// Builds a graph, rejecting bad endpoints, self bonds and duplicates.
    pub fn new(
        mut atoms: Vec<Atom>,
        bonds: Vec<Bond>,
        source: impl Into<String>,
    ) -> Result<Self, GraphError> {
        let mut seen = BTreeSet::new();
        for b in &bonds {
            if b.a >= atoms.len() || b.b >= atoms.len() {
                return Err(GraphError(format!("bond {}-{} outside {} atoms", b.a, b.b, atoms.len())));
            }
            if b.a == b.b {
                return Err(GraphError(format!("self bond on atom {}", b.a)));
            }
            if !seen.insert((b.a.min(b.b), b.a.max(b.b))) {
                return Err(GraphError(format!("duplicate bond {}-{}", b.a, b.b)));
            }
        }
        let ring = ring_atoms(atoms.len(), &bonds);
        for (atom, r) in atoms.iter_mut().zip(ring) {
            atom.in_ring = r;
        }
        Ok(MolGraph { atoms, bonds, source: source.into() })
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn bonds(&self) -> &[Bond] {
        &self.bonds
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn atom_count(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// Neighbor lists as `(atom, bond index)`.
    pub fn adjacency(&self) -> Vec<Vec<(usize, usize)>> {
        let mut adj = vec![Vec::new(); self.atoms.len()];
        for (i, b) in self.bonds.iter().enumerate() {
            adj[b.a].push((b.b, i));
            adj[b.b].push((b.a, i));
        }
        adj
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.atoms.len()];
        for b in &self.bonds {
            deg[b.a] += 1;
            deg[b.b] += 1;
        }
        deg
    }

    /// Connected components, each a sorted list of atom indices, ordered by
    /// their smallest atom.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let adj = self.adjacency();
        let mut comp = vec![usize::MAX; self.atoms.len()];
        let mut out = Vec::new();
        for start in 0..self.atoms.len() {
            if comp[start] != usize::MAX {
                continue;
            }
            let id = out.len();
            let mut members = vec![start];
            comp[start] = id;
            let mut stack = vec![start];
            while let Some(a) = stack.pop() {
                for &(n, _) in &adj[a] {
                    if comp[n] == usize::MAX {
                        comp[n] = id;
                        members.push(n);
                        stack.push(n);
                    }
                }
            }
            members.sort_unstable();
            out.push(members);
        }
        out
    }

    /// Induced subgraph on the atoms flagged in `keep`, plus the old index of
    /// every new atom.
    pub fn induced(&self, keep: &[bool]) -> (MolGraph, Vec<usize>) {
        let mut new_index = vec![usize::MAX; self.atoms.len()];
        let mut old_index = Vec::new();
        for (i, &k) in keep.iter().enumerate() {
            if k {
                new_index[i] = old_index.len();
                old_index.push(i);
            }
        }
        let atoms = old_index.iter().map(|&i| self.atoms[i].clone()).collect();
        let bonds = self
            .bonds
            .iter()
            .filter(|b| keep[b.a] && keep[b.b])
            .map(|b| Bond { a: new_index[b.a], b: new_index[b.b], order: b.order })
            .collect();
        let g = MolGraph::new(atoms, bonds, self.source.clone()).expect("induced subgraph of a valid graph");
        (g, old_index)
    }
}

/// Marks bonds lying on a cycle (non-bridges).
fn ring_bonds(n: usize, bonds: &[Bond]) -> Vec<bool> {
    let mut adj = vec![Vec::new(); n];
    for (i, b) in bonds.iter().enumerate() {
        adj[b.a].push((b.b, i));
        adj[b.b].push((b.a, i));
    }
    let mut on_cycle = vec![true; bonds.len()];
    let mut disc = vec![usize::MAX; n];
    let mut low = vec![0; n];
    let mut timer = 0;
    for root in 0..n {
        if disc[root] != usize::MAX {
            continue;
        }
        // (atom, parent bond, next neighbor position)
        let mut stack = vec![(root, usize::MAX, 0usize)];
        disc[root] = timer;
        low[root] = timer;
        timer += 1;
        while let Some(&mut (v, parent, ref mut next)) = stack.last_mut() {
            if *next < adj[v].len() {
                let (w, bond) = adj[v][*next];
                *next += 1;
                if bond == parent {
                    continue;
                }
                if disc[w] == usize::MAX {
                    disc[w] = timer;
                    low[w] = timer;
                    timer += 1;
                    stack.push((w, bond, 0));
                } else {
                    low[v] = low[v].min(disc[w]);
                }
            } else {
                stack.pop();
                if let Some(&(u, _, _)) = stack.last() {
                    low[u] = low[u].min(low[v]);
                    if low[v] > disc[u] {
                        on_cycle[parent] = false;
                    }
                }
            }
        }
    }
    on_cycle
}

fn ring_atoms(n: usize, bonds: &[Bond]) -> Vec<bool> {
    let mut ring = vec![false; n];
    for (b, on) in bonds.iter().zip(ring_bonds(n, bonds)) {
        if on {
            ring[b.a] = true;
            ring[b.b] = true;
        }
    }
    ring
}

/// parse, reduce to the Murcko scaffold, canonicalize.
pub fn scaffold_of(smiles: &str) -> Result<String, SmilesError> {
    Ok(canonical_key(&murcko_scaffold(&parse_smiles(smiles)?)))
}
