//! Derived structure: triggering classes, process chains, process families,
//! group membership and decomposition closures.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{cyclic_components, reachable};
use crate::model::{Criterion, CustomerRef, Ident, ProcessMap, Relation};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AnalysisError {
    #[error("unknown process `{0}`")]
    UnknownProcess(String),
    #[error("specialization cycle through {}", .0.join(", "))]
    CyclicSpecialization(Vec<String>),
}

/// How a process gets started: by an external customer, from inside the
/// organization, both, or not at all.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TriggerClass {
    External,
    Internal,
    Hybrid,
    Untriggered,
}

impl TriggerClass {
    /// Started (at least partly) by an external customer.
    pub fn is_externally_triggered(self) -> bool {
        matches!(self, TriggerClass::External | TriggerClass::Hybrid)
    }
}

impl fmt::Display for TriggerClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TriggerClass::External => "external",
            TriggerClass::Internal => "internal",
            TriggerClass::Hybrid => "hybrid",
            TriggerClass::Untriggered => "untriggered",
        })
    }
}

/// Classifies every process by its trigger sources. External customers named
/// in inputs are external sources; actors, processes named in inputs and
/// incoming trigger relations are internal ones.
pub fn classify_triggering(map: &ProcessMap) -> BTreeMap<Ident, TriggerClass> {
    let triggered: BTreeSet<&Ident> = map
        .relations
        .iter()
        .filter_map(|r| match r {
            Relation::Trigger { dst, .. } => Some(dst),
            _ => None,
        })
        .collect();
    map.processes
        .values()
        .map(|p| {
            let external = p.inputs.iter().any(|i| i.source.is_external());
            let internal = triggered.contains(&p.id)
                || p.inputs.iter().any(|i| {
                    matches!(
                        i.source,
                        CustomerRef::InternalActor(_) | CustomerRef::InternalProcess(_)
                    )
                });
            let class = match (external, internal) {
                (true, false) => TriggerClass::External,
                (false, true) => TriggerClass::Internal,
                (true, true) => TriggerClass::Hybrid,
                (false, false) => TriggerClass::Untriggered,
            };
            (p.id.clone(), class)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrderingKind {
    Trigger,
    Flow,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainEdge {
    pub src: Ident,
    pub dst: Ident,
    pub kind: OrderingKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProcessChain {
    pub id: String,
    pub members: BTreeSet<Ident>,
    pub edges: Vec<ChainEdge>,
}

fn ordering_edge(r: &Relation) -> Option<ChainEdge> {
    match r {
        Relation::Trigger { src, dst } => Some(ChainEdge {
            src: src.clone(),
            dst: dst.clone(),
            kind: OrderingKind::Trigger,
        }),
        Relation::Flow { src, dst } => Some(ChainEdge {
            src: src.clone(),
            dst: dst.clone(),
            kind: OrderingKind::Flow,
        }),
        _ => None,
    }
}

/// Weakly connected components of the trigger/flow subgraph. Chains are
/// ordered by their smallest member and numbered `chain-1`, `chain-2`, ...
pub fn derive_chains(map: &ProcessMap) -> Vec<ProcessChain> {
    let edges: Vec<ChainEdge> = map.relations.iter().filter_map(ordering_edge).collect();
    let mut adjacent: BTreeMap<&Ident, Vec<&Ident>> = BTreeMap::new();
    for e in &edges {
        adjacent.entry(&e.src).or_default().push(&e.dst);
        adjacent.entry(&e.dst).or_default().push(&e.src);
    }

    let mut component_of: BTreeMap<&Ident, usize> = BTreeMap::new();
    let mut chains: Vec<ProcessChain> = Vec::new();
    for &start in adjacent.keys() {
        if component_of.contains_key(start) {
            continue;
        }
        let index = chains.len();
        let mut members = BTreeSet::new();
        let mut queue = VecDeque::from([start]);
        component_of.insert(start, index);
        while let Some(node) = queue.pop_front() {
            members.insert(node.clone());
            for &next in &adjacent[node] {
                if !component_of.contains_key(next) {
                    component_of.insert(next, index);
                    queue.push_back(next);
                }
            }
        }
        chains.push(ProcessChain {
            id: format!("chain-{}", index + 1),
            members,
            edges: Vec::new(),
        });
    }
    let owner: Vec<usize> = edges.iter().map(|e| component_of[&e.src]).collect();
    for (e, index) in edges.into_iter().zip(owner) {
        chains[index].edges.push(e);
    }
    chains
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProcessFamily {
    pub standard: Ident,
    pub variants: BTreeSet<Ident>,
}

/// One family per process that has variants; variants are transitive.
pub fn derive_families(map: &ProcessMap) -> Result<Vec<ProcessFamily>, AnalysisError> {
    let specs: Vec<(&Ident, &Ident)> = map
        .relations
        .iter()
        .filter_map(|r| match r {
            Relation::Specialization { variant, standard } => Some((variant, standard)),
            _ => None,
        })
        .collect();
    if let Some(cycle) = cyclic_components(specs.iter().copied()).into_iter().next() {
        return Err(AnalysisError::CyclicSpecialization(
            cycle.iter().map(|id| id.to_string()).collect(),
        ));
    }
    let mut variants_of: BTreeMap<&Ident, Vec<&Ident>> = BTreeMap::new();
    for (variant, standard) in specs {
        variants_of.entry(standard).or_default().push(variant);
    }
    Ok(variants_of
        .keys()
        .map(|&standard| ProcessFamily {
            standard: standard.clone(),
            variants: reachable(standard, &variants_of),
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupResult {
    pub group: String,
    pub members: BTreeSet<Ident>,
}

/// True if `category` is `target` or one of its (transitive) sub-categories.
fn within_category(map: &ProcessMap, category: &Ident, target: &Ident) -> bool {
    let mut seen = BTreeSet::new();
    let mut current = Some(category);
    while let Some(c) = current {
        if c == target {
            return true;
        }
        if !seen.insert(c) {
            return false;
        }
        current = map.categories.get(c).and_then(|c| c.parent.as_ref());
    }
    false
}

pub fn evaluate_groups(map: &ProcessMap) -> Vec<GroupResult> {
    map.groups
        .iter()
        .map(|group| {
            let members = match &group.criterion {
                Criterion::ExplicitList => group.explicit_members.clone().unwrap_or_default(),
                criterion => map
                    .processes
                    .values()
                    .filter(|p| match criterion {
                        Criterion::InCategory(c) => {
                            p.categories.iter().any(|pc| within_category(map, pc, c))
                        }
                        Criterion::InPhase(ph) => p.phases.contains(ph),
                        Criterion::OwnedBy(a) => p.owners.contains(a),
                        Criterion::Provides(s) => p.provides.contains(s),
                        Criterion::Uses(o) => p.uses.contains(o),
                        Criterion::Handles(o) => p.handles.contains(o),
                        Criterion::Property { key, value } => p.properties.get(key) == Some(value),
                        Criterion::ExplicitList => unreachable!(),
                    })
                    .map(|p| p.id.clone())
                    .collect(),
            };
            GroupResult {
                group: group.name.clone(),
                members,
            }
        })
        .collect()
}

fn children_index(map: &ProcessMap) -> BTreeMap<&Ident, Vec<&Ident>> {
    let mut children: BTreeMap<&Ident, Vec<&Ident>> = BTreeMap::new();
    for r in &map.relations {
        if let Relation::Decomposition { parent, child } = r {
            children.entry(parent).or_default().push(child);
        }
    }
    children
}

/// All direct and indirect sub-processes of `root`.
pub fn containment_closure(map: &ProcessMap, root: &str) -> Result<BTreeSet<Ident>, AnalysisError> {
    let (root, _) = map
        .processes
        .get_key_value(root)
        .ok_or_else(|| AnalysisError::UnknownProcess(root.to_owned()))?;
    let mut closure = reachable(root, &children_index(map));
    closure.remove(root);
    Ok(closure)
}

/// Internally triggered processes that no externally triggered process
/// contains, directly or transitively.
pub fn orphan_internal_processes(map: &ProcessMap) -> BTreeSet<Ident> {
    let classes = classify_triggering(map);
    let children = children_index(map);
    let served: BTreeSet<Ident> = classes
        .iter()
        .filter(|(_, class)| class.is_externally_triggered())
        .flat_map(|(id, _)| reachable(id, &children))
        .collect();
    classes
        .into_iter()
        .filter(|(id, class)| *class == TriggerClass::Internal && !served.contains(id))
        .map(|(id, _)| id)
        .collect()
}

/// Everything the analyses derive from one map.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub classification: BTreeMap<Ident, TriggerClass>,
    pub chains: Vec<ProcessChain>,
    pub families: Vec<ProcessFamily>,
    pub groups: Vec<GroupResult>,
    pub orphans: BTreeSet<Ident>,
}

pub fn analyze(map: &ProcessMap) -> Result<AnalysisReport, AnalysisError> {
    Ok(AnalysisReport {
        classification: classify_triggering(map),
        chains: derive_chains(map),
        families: derive_families(map)?,
        groups: evaluate_groups(map),
        orphans: orphan_internal_processes(map),
    })
}
