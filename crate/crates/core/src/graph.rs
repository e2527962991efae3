//! Small digraph helpers over process identifiers.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use petgraph::algo::tarjan_scc;
use petgraph::graphmap::DiGraphMap;

use crate::model::Ident;

/// Strongly connected components that contain a cycle, each sorted, listed
/// by their smallest member.
pub(crate) fn cyclic_components<'a, I>(edges: I) -> Vec<Vec<Ident>>
where
    I: IntoIterator<Item = (&'a Ident, &'a Ident)>,
{
    let mut graph: DiGraphMap<&str, ()> = DiGraphMap::new();
    for (a, b) in edges {
        graph.add_edge(a.as_str(), b.as_str(), ());
    }
    let mut cycles: Vec<Vec<Ident>> = tarjan_scc(&graph)
        .into_iter()
        .filter(|scc| scc.len() > 1 || graph.contains_edge(scc[0], scc[0]))
        .map(|scc| {
            let mut ids: Vec<Ident> = scc.into_iter().map(Ident::from).collect();
            ids.sort();
            ids
        })
        .collect();
    cycles.sort();
    cycles
}

/// Everything reachable from `start` along `next`, excluding `start` unless
/// it lies on a cycle.
pub(crate) fn reachable<'a>(
    start: &'a Ident,
    next: &BTreeMap<&'a Ident, Vec<&'a Ident>>,
) -> BTreeSet<Ident> {
    let mut seen: BTreeSet<&Ident> = BTreeSet::new();
    let mut queue: VecDeque<&Ident> = VecDeque::from([start]);
    while let Some(node) = queue.pop_front() {
        for &succ in next.get(node).into_iter().flatten() {
            if seen.insert(succ) {
                queue.push_back(succ);
            }
        }
    }
    seen.into_iter().cloned().collect()
}
