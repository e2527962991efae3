//! Shared helpers for integration tests: fixture loading, a seeded random map
//! generator, independent reference implementations of the analyses, and a
//! runner for the command-line binary.

#![allow(dead_code)]

pub mod grammar;

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::process::Command;

use promap::model::{
    Category, Criterion, CustomerRef, EaElement, EaKind, Group, InputSpec, ObjectKind, OutputKind,
    OutputSpec, Phase, Process, Spanned,
};
use promap::{assemble, Draft, Ident, ProcessMap, Relation};
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type TestRng = ChaCha8Rng;

pub fn rng(seed: u64) -> TestRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn fixture_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

pub fn fixture(name: &str) -> PathBuf {
    fixture_dir().join(name)
}

pub fn load_fixture(name: &str) -> ProcessMap {
    promap::load_path(&fixture(name)).unwrap_or_else(|d| panic!("{name}: {d:?}"))
}

/// Names of the well-formed `.promap` fixtures, sorted.
pub fn corpus() -> Vec<String> {
    let mut names: Vec<String> = std::fs::read_dir(fixture_dir())
        .expect("fixture directory")
        .filter_map(|e| {
            let name = e.ok()?.file_name().into_string().ok()?;
            name.ends_with(".promap").then_some(name)
        })
        .collect();
    names.sort();
    names
}

pub fn ids(items: &[&str]) -> BTreeSet<Ident> {
    items.iter().map(|s| Ident::from(*s)).collect()
}

// ---------------------------------------------------------------------------
// Random maps

/// Knobs for [`random_map`].
#[derive(Debug, Clone)]
pub struct Shape {
    pub processes: usize,
    /// Expected number of relations per process.
    pub relations_per_process: f64,
    /// Relation kinds to draw from, in the order trigger, flow,
    /// decomposition, specialization.
    pub kinds: [bool; 4],
    /// Keep triggers, decompositions, specializations and category parents
    /// acyclic.
    pub acyclic: bool,
    /// Add categories, phases, EA elements, customers, properties and groups.
    pub rich: bool,
}

impl Shape {
    pub fn rich(processes: usize) -> Self {
        Self {
            processes,
            relations_per_process: 1.5,
            kinds: [true; 4],
            acyclic: true,
            rich: true,
        }
    }

    pub fn only(kinds: [bool; 4], processes: usize, relations_per_process: f64) -> Self {
        Self {
            processes,
            relations_per_process,
            kinds,
            acyclic: false,
            rich: false,
        }
    }
}

const NAME_CHARS: &[&str] = &[
    "a", "b", "Z", " ", "-", "_", "1", "\"", "\\", "#", "{", "}", "é", "→", "\t", "\n", "->", "~>",
    "map", "process",
];

fn random_text(rng: &mut TestRng, max_parts: usize) -> String {
    let n = rng.random_range(0..=max_parts);
    (0..n).map(|_| *NAME_CHARS.choose(rng).unwrap()).collect()
}

fn non_empty_text(rng: &mut TestRng) -> String {
    let mut s = random_text(rng, 6);
    if s.is_empty() {
        s.push('x');
    }
    s
}

fn process_id(i: usize) -> String {
    match i % 3 {
        0 => format!("P{i}"),
        1 => format!("p_{i}"),
        _ => format!("Proc-{i}"),
    }
}

fn subset(rng: &mut TestRng, pool: &[Ident], p: f64) -> BTreeSet<Ident> {
    pool.iter()
        .filter(|_| rng.random_bool(p))
        .cloned()
        .collect()
}

/// Draws a map that always assembles. The generator only places references
/// to things it has declared, so an assembly failure is a bug.
pub fn random_map(rng: &mut TestRng, shape: &Shape) -> ProcessMap {
    let draft = random_draft(rng, shape);
    assemble(draft).unwrap_or_else(|d| panic!("generator produced an invalid map: {d:?}"))
}

pub fn random_draft(rng: &mut TestRng, shape: &Shape) -> Draft {
    let mut draft = Draft::named(if shape.rich {
        non_empty_text(rng)
    } else {
        "random".into()
    });
    let pids: Vec<Ident> = (0..shape.processes).map(|i| process_id(i).into()).collect();

    let mut cats: Vec<Ident> = Vec::new();
    let mut phases = Vec::new();
    let mut actors = Vec::new();
    let mut services = Vec::new();
    let mut objects = Vec::new();
    let mut customers = Vec::new();
    if shape.rich {
        for i in 0..rng.random_range(0..5) {
            let id = Ident::from(format!("Cat{i}"));
            let parent =
                (i > 0 && rng.random_bool(0.5)).then(|| cats[rng.random_range(0..i)].clone());
            draft.categories.push(Spanned::bare(Category {
                id: id.clone(),
                name: if rng.random_bool(0.5) {
                    id.to_string()
                } else {
                    random_text(rng, 5)
                },
                parent,
            }));
            cats.push(id);
        }
        let mut ordinals: Vec<u64> = (1..=8).collect();
        ordinals.shuffle(rng);
        let count = rng.random_range(0..4);
        for (i, ordinal) in ordinals.into_iter().take(count).enumerate() {
            let id = Ident::from(format!("Ph{i}"));
            draft.phases.push(Spanned::bare(Phase {
                id: id.clone(),
                name: random_text(rng, 4),
                ordinal: rng.random_bool(0.6).then_some(ordinal),
            }));
            phases.push(id);
        }
        let mut element = |prefix: &str, kind: EaKind, rng: &mut TestRng, into: &mut Vec<Ident>| {
            for i in 0..rng.random_range(0..3) {
                let id = Ident::from(format!("{prefix}{i}"));
                draft.ea_elements.push(Spanned::bare(EaElement {
                    id: id.clone(),
                    name: if rng.random_bool(0.5) {
                        id.to_string()
                    } else {
                        random_text(rng, 4)
                    },
                    kind,
                }));
                into.push(id);
            }
        };
        element("Actor", EaKind::Actor, rng, &mut actors);
        element("Svc", EaKind::Service, rng, &mut services);
        element("Cust", EaKind::ExternalCustomer, rng, &mut customers);
        for kind in [
            ObjectKind::Permanent,
            ObjectKind::Case,
            ObjectKind::Abstract,
        ] {
            element(
                kind.keyword(),
                EaKind::Object { object_kind: kind },
                rng,
                &mut objects,
            );
        }
    }

    for (i, id) in pids.iter().enumerate() {
        let mut p = Process::new(id.clone());
        if shape.rich {
            if rng.random_bool(0.4) {
                p.name = random_text(rng, 6);
            }
            p.categories = subset(rng, &cats, 0.3);
            p.phases = subset(rng, &phases, 0.3);
            p.owners = subset(rng, &actors, 0.3);
            p.provides = subset(rng, &services, 0.3);
            p.uses = subset(rng, &objects, 0.2);
            p.handles = subset(rng, &objects, 0.2);
            let others: Vec<&Ident> = pids.iter().filter(|q| *q != id).collect();
            let customer = |rng: &mut TestRng| -> Option<CustomerRef> {
                match rng.random_range(0..3) {
                    0 => customers
                        .choose(rng)
                        .cloned()
                        .map(CustomerRef::ExternalCustomer),
                    1 => actors.choose(rng).cloned().map(CustomerRef::InternalActor),
                    // Process inputs only point backwards so triggers stay acyclic.
                    _ => pids[..i]
                        .choose(rng)
                        .cloned()
                        .map(CustomerRef::InternalProcess),
                }
            };
            for _ in 0..rng.random_range(0..3) {
                if let Some(source) = customer(rng) {
                    p.inputs.push(InputSpec {
                        label: non_empty_text(rng),
                        source,
                    });
                }
            }
            for _ in 0..rng.random_range(0..3) {
                let destination = match rng.random_range(0..3) {
                    0 => customers
                        .choose(rng)
                        .cloned()
                        .map(CustomerRef::ExternalCustomer),
                    1 => actors.choose(rng).cloned().map(CustomerRef::InternalActor),
                    _ => others
                        .choose(rng)
                        .map(|q| CustomerRef::InternalProcess((*q).clone())),
                };
                if let Some(destination) = destination {
                    let kind = if rng.random_bool(0.5) {
                        OutputKind::Product
                    } else {
                        OutputKind::Outcome
                    };
                    p.outputs.push(OutputSpec {
                        label: non_empty_text(rng),
                        kind,
                        destination,
                    });
                }
            }
            for _ in 0..rng.random_range(0..3) {
                let key = if rng.random_bool(0.5) {
                    ["kpi", "owner_dept", "cost-centre", "sla"]
                        .choose(rng)
                        .unwrap()
                        .to_string()
                } else {
                    non_empty_text(rng)
                };
                p.properties.insert(key, random_text(rng, 4));
            }
        }
        draft.processes.push(Spanned::bare(p));
    }

    let kinds: Vec<usize> = (0..4).filter(|&k| shape.kinds[k]).collect();
    let n = shape.processes;
    if n >= 2 && !kinds.is_empty() {
        // A random rank order makes the acyclic case unbiased with respect
        // to identifier order.
        let mut rank: Vec<usize> = (0..n).collect();
        rank.shuffle(rng);
        let count = (shape.relations_per_process * n as f64).round() as usize;
        for _ in 0..count {
            let (mut a, mut b) = (rng.random_range(0..n), rng.random_range(0..n));
            if a == b {
                continue;
            }
            let kind = *kinds.choose(rng).unwrap();
            // Process inputs already point from lower to higher index.
            if shape.acyclic && kind != 1 {
                let ordered = if kind == 0 { a < b } else { rank[a] < rank[b] };
                if !ordered {
                    std::mem::swap(&mut a, &mut b);
                }
            }
            let (a, b) = (pids[a].clone(), pids[b].clone());
            let relation = match kind {
                0 => Relation::trigger(a, b),
                1 => Relation::flow(a, b),
                2 => Relation::decomposition(a, b),
                _ => Relation::specialization(a, b),
            };
            draft.relations.push(Spanned::bare(relation));
        }
    }

    if shape.rich {
        for _ in 0..rng.random_range(0..4) {
            let criterion = match rng.random_range(0..8) {
                0 => cats.choose(rng).cloned().map(Criterion::InCategory),
                1 => phases.choose(rng).cloned().map(Criterion::InPhase),
                2 => actors.choose(rng).cloned().map(Criterion::OwnedBy),
                3 => services.choose(rng).cloned().map(Criterion::Provides),
                4 => objects.choose(rng).cloned().map(Criterion::Uses),
                5 => objects.choose(rng).cloned().map(Criterion::Handles),
                6 => Some(Criterion::Property {
                    key: "kpi".into(),
                    value: random_text(rng, 2),
                }),
                _ => Some(Criterion::ExplicitList),
            };
            let Some(criterion) = criterion else { continue };
            let explicit_members =
                (criterion == Criterion::ExplicitList).then(|| subset(rng, &pids, 0.3));
            draft.groups.push(Spanned::bare(Group {
                name: non_empty_text(rng),
                criterion,
                explicit_members,
            }));
        }
    }
    draft
}

// ---------------------------------------------------------------------------
// Reference implementations

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, x: usize) -> usize {
        let mut root = x;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        let mut x = x;
        while self.parent[x] != root {
            let next = self.parent[x];
            self.parent[x] = root;
            x = next;
        }
        root
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra] = rb;
        }
    }
}

/// Process chains as sets of members: connected components of the trigger
/// and flow edges, ignoring direction, without isolated processes.
pub fn oracle_chains(map: &ProcessMap) -> BTreeSet<BTreeSet<Ident>> {
    let ids: Vec<&Ident> = map.processes.keys().collect();
    let index: BTreeMap<&Ident, usize> = ids.iter().enumerate().map(|(i, id)| (*id, i)).collect();
    let mut uf = UnionFind::new(ids.len());
    let mut touched = BTreeSet::new();
    for r in &map.relations {
        if let Relation::Trigger { src, dst } | Relation::Flow { src, dst } = r {
            uf.union(index[src], index[dst]);
            touched.insert(index[src]);
            touched.insert(index[dst]);
        }
    }
    let mut components: BTreeMap<usize, BTreeSet<Ident>> = BTreeMap::new();
    for i in touched {
        let root = uf.find(i);
        components.entry(root).or_default().insert(ids[i].clone());
    }
    components.into_values().collect()
}

/// Families by brute force: `v` is a variant of `s` iff some simple path of
/// specialization edges leads from `v` to `s`. Every simple path out of
/// every process is enumerated, so this is only for small maps. Returns
/// `None` when some path returns to its start.
pub fn oracle_families(map: &ProcessMap) -> Option<BTreeMap<Ident, BTreeSet<Ident>>> {
    let mut out: BTreeMap<&Ident, Vec<&Ident>> = BTreeMap::new();
    for r in &map.relations {
        if let Relation::Specialization { variant, standard } = r {
            out.entry(variant).or_default().push(standard);
        }
    }
    fn walk<'a>(
        at: &'a Ident,
        out: &BTreeMap<&'a Ident, Vec<&'a Ident>>,
        path: &mut Vec<&'a Ident>,
        reached: &mut BTreeSet<&'a Ident>,
    ) -> bool {
        for next in out.get(at).into_iter().flatten() {
            if *next == path[0] {
                return false;
            }
            if path.contains(next) {
                continue;
            }
            reached.insert(next);
            path.push(next);
            let acyclic = walk(next, out, path, reached);
            path.pop();
            if !acyclic {
                return false;
            }
        }
        true
    }
    let mut families: BTreeMap<Ident, BTreeSet<Ident>> = BTreeMap::new();
    for v in map.processes.keys() {
        let mut reached = BTreeSet::new();
        if !walk(v, &out, &mut vec![v], &mut reached) {
            return None;
        }
        for s in reached {
            families.entry(s.clone()).or_default().insert(v.clone());
        }
    }
    Some(families)
}

/// Containment closure by fixed-point iteration over the decomposition
/// edges. The root itself is never part of its closure.
pub fn oracle_closure(map: &ProcessMap, root: &str) -> BTreeSet<Ident> {
    let mut closure: BTreeSet<Ident> = BTreeSet::new();
    loop {
        let before = closure.len();
        for r in &map.relations {
            if let Relation::Decomposition { parent, child } = r {
                if parent.as_str() == root || closure.contains(parent) {
                    closure.insert(child.clone());
                }
            }
        }
        if closure.len() == before {
            closure.remove(root);
            return closure;
        }
    }
}

// ---------------------------------------------------------------------------
// Command-line runner

pub struct Output {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

pub fn promap_cmd() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_promap"));
    cmd.env_remove(promap::cli::CONFIG_ENV);
    cmd
}

pub fn run(args: &[&str]) -> Output {
    run_with(promap_cmd().args(args))
}

pub fn run_with(cmd: &mut Command) -> Output {
    let out = cmd.output().expect("binary runs");
    Output {
        code: out.status.code().expect("exit code"),
        stdout: String::from_utf8_lossy(&out.stdout).into_owned(),
        stderr: String::from_utf8_lossy(&out.stderr).into_owned(),
    }
}
