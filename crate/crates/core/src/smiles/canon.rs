use rand::seq::SliceRandom;
use rand::Rng;

use super::{Atom, BondOrder, MolGraph, ACYCLIC};

/// Search budget for tie-breaking on highly symmetric graphs.
const LEAF_CAP: usize = 20_000;

fn atom_symbol(a: &Atom) -> String {
    let el = a.element.as_str();
    let bare = if a.aromatic {
        matches!(el, "B" | "C" | "N" | "O" | "P" | "S")
    } else {
        matches!(el, "B" | "C" | "N" | "O" | "P" | "S" | "F" | "Cl" | "Br" | "I")
    };
    let sym = if a.aromatic { el.to_ascii_lowercase() } else { el.to_string() };
    if bare && a.charge == 0 {
        return sym;
    }
    let charge = match a.charge {
        0 => String::new(),
        1 => "+".into(),
        -1 => "-".into(),
        c if c > 0 => format!("+{c}"),
        c => format!("-{}", -c),
    };
    format!("[{sym}{charge}]")
}

fn bond_symbol(order: BondOrder, a: &Atom, b: &Atom) -> &'static str {
    let both_aromatic = a.aromatic && b.aromatic;
    match order {
        BondOrder::Single if both_aromatic => "-",
        BondOrder::Single => "",
        BondOrder::Double => "=",
        BondOrder::Triple => "#",
        BondOrder::Aromatic if both_aromatic => "",
        BondOrder::Aromatic => ":",
    }
}

fn ring_label(d: usize) -> String {
    if d < 10 {
        d.to_string()
    } else {
        format!("%{d:02}")
    }
}

struct Writer<'a> {
    g: &'a MolGraph,
    adj: Vec<Vec<(usize, usize)>>,
    visited: Vec<bool>,
    bond_seen: Vec<bool>,
    children: Vec<Vec<(usize, usize)>>,
    /// `(bond, opens)` in the order the digits follow the atom symbol.
    ring_events: Vec<Vec<(usize, bool)>>,
    digit_of: Vec<usize>,
    in_use: Vec<bool>,
}

impl Writer<'_> {
    fn plan(&mut self, v: usize) {
        self.visited[v] = true;
        for k in 0..self.adj[v].len() {
            let (w, b) = self.adj[v][k];
            if self.bond_seen[b] {
                continue;
            }
            self.bond_seen[b] = true;
            if self.visited[w] {
                self.ring_events[v].push((b, false));
                self.ring_events[w].push((b, true));
            } else {
                self.children[v].push((w, b));
                self.plan(w);
            }
        }
    }

    fn emit(&mut self, v: usize, out: &mut String) {
        let atoms = self.g.atoms();
        out.push_str(&atom_symbol(&atoms[v]));
        for k in 0..self.ring_events[v].len() {
            let (b, opens) = self.ring_events[v][k];
            if opens {
                let d = (1..self.in_use.len()).find(|&d| !self.in_use[d]).expect("at most 99 open rings");
                self.in_use[d] = true;
                self.digit_of[b] = d;
                let bond = self.g.bonds()[b];
                out.push_str(bond_symbol(bond.order, &atoms[bond.a], &atoms[bond.b]));
                out.push_str(&ring_label(d));
            } else {
                let d = self.digit_of[b];
                self.in_use[d] = false;
                out.push_str(&ring_label(d));
            }
        }
        let children = std::mem::take(&mut self.children[v]);
        for (i, &(c, b)) in children.iter().enumerate() {
            let branch = i + 1 < children.len();
            if branch {
                out.push('(');
            }
            out.push_str(bond_symbol(self.g.bonds()[b].order, &atoms[v], &atoms[c]));
            self.emit(c, out);
            if branch {
                out.push(')');
            }
        }
    }
}

/// Depth-first SMILES guided by `ranks`: each component starts at its
/// lowest-ranked atom, neighbors are visited in rank order and ring digits
/// are the lowest free. Components follow the rank of their first atom.
/// Hydrogens and stereo are not written.
pub fn write_smiles(g: &MolGraph, ranks: &[usize]) -> String {
    let n = g.atom_count();
    assert_eq!(ranks.len(), n, "one rank per atom");
    let mut adj = g.adjacency();
    for list in &mut adj {
        list.sort_by_key(|&(w, _)| (ranks[w], w));
    }
    let mut w = Writer {
        g,
        adj,
        visited: vec![false; n],
        bond_seen: vec![false; g.bonds().len()],
        children: vec![Vec::new(); n],
        ring_events: vec![Vec::new(); n],
        digit_of: vec![0; g.bonds().len()],
        in_use: vec![false; 100],
    };
    let mut starts: Vec<usize> = (0..n).collect();
    starts.sort_by_key(|&a| (ranks[a], a));
    let mut parts = Vec::new();
    for s in starts {
        if !w.visited[s] {
            w.plan(s);
            let mut out = String::new();
            w.emit(s, &mut out);
            parts.push(out);
        }
    }
    parts.join(".")
}

/// SMILES from a random atom order; reparsing yields an isomorphic graph.
pub fn random_smiles<R: Rng + ?Sized>(g: &MolGraph, rng: &mut R) -> String {
    let mut ranks: Vec<usize> = (0..g.atom_count()).collect();
    ranks.shuffle(rng);
    write_smiles(g, &ranks)
}

fn dense_ranks<K: Ord>(keys: &[K]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..keys.len()).collect();
    idx.sort_by(|&a, &b| keys[a].cmp(&keys[b]));
    let mut ranks = vec![0; keys.len()];
    for w in 1..idx.len() {
        let step = usize::from(keys[idx[w]] != keys[idx[w - 1]]);
        ranks[idx[w]] = ranks[idx[w - 1]] + step;
    }
    ranks
}

fn class_count(ranks: &[usize]) -> usize {
    ranks.iter().max().map_or(0, |m| m + 1)
}

fn refine(adj: &[Vec<(usize, u8)>], ranks: &mut Vec<usize>) {
    let mut classes = class_count(ranks);
    loop {
        let keys: Vec<(usize, Vec<(usize, u8)>)> = adj
            .iter()
            .enumerate()
            .map(|(a, list)| {
                let mut nb: Vec<(usize, u8)> = list.iter().map(|&(w, o)| (ranks[w], o)).collect();
                nb.sort_unstable();
                (ranks[a], nb)
            })
            .collect();
        *ranks = dense_ranks(&keys);
        let now = class_count(ranks);
        if now == classes {
            return;
        }
        classes = now;
    }
}

struct Search<'a> {
    g: &'a MolGraph,
    adj: Vec<Vec<(usize, u8)>>,
    best: Option<String>,
    leaves: usize,
}

impl Search<'_> {
    fn run(&mut self, mut ranks: Vec<usize>) {
        refine(&self.adj, &mut ranks);
        let n = ranks.len();
        let mut counts = vec![0usize; n];
        for &r in &ranks {
            counts[r] += 1;
        }
        match (0..n).find(|&r| counts[r] > 1) {
            None => {
                self.leaves += 1;
                let s = write_smiles(self.g, &ranks);
                if self.best.as_ref().is_none_or(|b| s < *b) {
                    self.best = Some(s);
                }
            }
            Some(cell) => {
                for x in (0..n).filter(|&a| ranks[a] == cell) {
                    if self.leaves >= LEAF_CAP {
                        return;
                    }
                    let keys: Vec<(usize, bool)> = (0..n).map(|a| (ranks[a], a != x)).collect();
                    self.run(dense_ranks(&keys));
                }
            }
        }
    }
}

fn canonical_component(g: &MolGraph) -> String {
    let deg = g.degrees();
    let initial: Vec<(&str, bool, i32, usize)> =
        g.atoms().iter().zip(&deg).map(|(a, &d)| (a.element.as_str(), a.aromatic, a.charge, d)).collect();
    let adj = g
        .adjacency()
        .into_iter()
        .map(|list| list.into_iter().map(|(w, b)| (w, g.bonds()[b].order.code())).collect())
        .collect();
    let mut search = Search { g, adj, best: None, leaves: 0 };
    search.run(dense_ranks(&initial));
    search.best.expect("at least one leaf")
}

/// Canonical SMILES of the graph, or [`ACYCLIC`] when it is empty.
/// Components are canonicalized separately, sorted and joined with `.`.
pub fn canonical_key(g: &MolGraph) -> String {
    if g.is_empty() {
        return ACYCLIC.to_string();
    }
    let mut parts: Vec<String> = g
        .components()
        .into_iter()
        .map(|members| {
            let mut keep = vec![false; g.atom_count()];
            for a in members {
                keep[a] = true;
            }
            canonical_component(&g.induced(&keep).0)
        })
        .collect();
    parts.sort();
    parts.join(".")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::smiles::{murcko_scaffold, parse_smiles};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const CORPUS: &[&str] = &[
        "c1ccccc1",
        "Cc1ccccc1",
        "c1ccc2ccccc2c1",
        "c1ccc2c(c1)[nH]c1ccccc12",
        "O=C1CCCCC1",
        "C1CC2CCC1C2",
        "C1CC2CC3CC1CC(C2)C3",
        "c1ccc(-c2ccccc2)cc1",
        "c1ccncc1Cc1ccco1",
        "O=C(Nc1ccccc1)c1ccc[n+](C)c1",
        "C1=CC=CC=C1",
        "C1CCC2(CC1)CCCC2",
        "c1cc2ccc3cccc4ccc(c1)c2c34",
        "CN1CCN(CC1)c1ccc(cc1)C#N",
        "c1ccccc1.C1CC1",
        "O=S(=O)(c1ccccc1)N1CCCC1",
        "C12C3C4C1C5C2C3C45",
    ];

    #[test]
    fn benzene_writings_agree() {
        let a = canonical_key(&parse_smiles("c1ccccc1").unwrap());
        let b = canonical_key(&parse_smiles("c1ccc(cc1)").unwrap());
        assert_eq!(a, b);
        assert_eq!(a, "c1ccccc1");
    }

    #[test]
    fn symbols() {
        let g = parse_smiles("[nH]1ccc[n+]1[O-].[Fe+3].Cl").unwrap();
        let k = canonical_key(&g);
        assert!(k.contains("[n+]") && k.contains("[O-]") && k.contains("[Fe+3]"), "{k}");
        assert_eq!(canonical_key(&parse_smiles("CC").unwrap()), "CC");
        assert_eq!(canonical_key(&MolGraph::new(vec![], vec![], "").unwrap()), ACYCLIC);
    }

    #[test]
    fn distinct_scaffolds_differ() {
        let keys: Vec<String> = ["c1ccccc1", "C1CCCCC1", "c1ccncc1", "C1=CC=CC=C1", "c1ccc2ccccc2c1"]
            .iter()
            .map(|s| canonical_key(&parse_smiles(s).unwrap()))
            .collect();
        for i in 0..keys.len() {
            for j in 0..i {
                assert_ne!(keys[i], keys[j]);
            }
        }
    }

    #[test]
    fn random_writings_reparse_to_the_same_key() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for s in CORPUS {
            let g = parse_smiles(s).unwrap();
            let key = canonical_key(&g);
            for _ in 0..20 {
                let w = random_smiles(&g, &mut rng);
                let h = parse_smiles(&w).unwrap_or_else(|e| panic!("{s} -> {w}: {e}"));
                assert_eq!(h.atom_count(), g.atom_count());
                assert_eq!(h.bonds().len(), g.bonds().len());
                assert_eq!(canonical_key(&h), key, "{s} -> {w}");
            }
        }
    }

    #[test]
    fn key_is_a_fixed_point() {
        for s in CORPUS {
            let sc = murcko_scaffold(&parse_smiles(s).unwrap());
            let key = canonical_key(&sc);
            if key != ACYCLIC {
                let again = canonical_key(&murcko_scaffold(&parse_smiles(&key).unwrap()));
                assert_eq!(again, key, "{s}");
            }
        }
    }
}
