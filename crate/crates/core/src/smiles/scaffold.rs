use super::MolGraph;

/// Atoms kept in the Bemis–Murcko framework.
///
/// Non-ring atoms of degree <= 1 are pruned until nothing changes. A terminal
/// atom survives only when its bond is double or triple and its neighbor
/// still has at least three neighbors, i.e. `=O` on a ring atom or on a
/// branching linker atom. Pruning is monotone, so the result does not depend
/// on atom order.
pub fn murcko_atoms(g: &MolGraph) -> Vec<bool> {
    let adj = g.adjacency();
    let bonds = g.bonds();
    let atoms = g.atoms();
    let mut keep = vec![true; g.atom_count()];
    let mut deg = g.degrees();
    loop {
        let mut changed = false;
        for a in 0..keep.len() {
            if !keep[a] || atoms[a].in_ring || deg[a] > 1 {
                continue;
            }
            if deg[a] == 1 {
                let &(n, bond) =
                    adj[a].iter().find(|&&(n, _)| keep[n]).expect("degree counts kept neighbors");
                if bonds[bond].order.is_multiple() && deg[n] >= 3 {
                    continue;
                }
                deg[n] -= 1;
            }
            keep[a] = false;
            deg[a] = 0;
            changed = true;
        }
        if !changed {
            return keep;
        }
    }
}

/// Ring systems, linkers and exocyclic multiply bonded atoms. Ring-free input
/// gives the empty graph.
pub fn murcko_scaffold(g: &MolGraph) -> MolGraph {
    g.induced(&murcko_atoms(g)).0
}
