//! Random `.promap` programs drawn from the grammar, each paired with the
//! draft a correct parser must produce. Layout (blank lines, comments,
//! spacing, line endings, one-line blocks) is randomized independently of
//! content. A program may carry one injected statement that describes
//! process interiors (tasks, gateways, events); such programs must be
//! rejected as a whole.

use std::collections::btree_map::Entry;
use std::collections::{BTreeMap, BTreeSet};

use promap::model::{
    Category, Criterion, CustomerRef, EaElement, EaKind, Group, InputSpec, ObjectKind, OutputKind,
    OutputSpec, Phase, Process, Spanned,
};
use promap::{Draft, Ident, Relation};
use rand::seq::IndexedRandom;
use rand::Rng;

use super::TestRng;

/// Where an injected interior statement must be reported.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Injection {
    pub statement: String,
    pub line: u32,
    pub column: u32,
}

#[derive(Debug)]
pub struct Program {
    pub text: String,
    pub expected: Draft,
    pub injection: Option<Injection>,
}

const INTERIOR: &[&str] = &[
    "task",
    "gateway",
    "event",
    "activity",
    "subprocess",
    "lane",
    "pool",
    "start-event",
    "end-event",
    "sequence-flow",
    "xor",
    "step",
];

const STRING_PARTS: &[&str] = &[
    "a", "Order", " ", "é", "→", "#", "{", "}", "->", "map", "\"", "\\", "\n", "\t", "1",
];

/// Strips source spans so parsed drafts can be compared with expected ones.
pub fn strip(draft: &Draft) -> Draft {
    fn bare<T: Clone>(items: &[Spanned<T>]) -> Vec<Spanned<T>> {
        items
            .iter()
            .map(|s| Spanned::bare(s.node.clone()))
            .collect()
    }
    Draft {
        name: draft.name.clone(),
        schema_version: draft.schema_version.clone(),
        processes: bare(&draft.processes),
        ea_elements: bare(&draft.ea_elements),
        categories: bare(&draft.categories),
        phases: bare(&draft.phases),
        relations: bare(&draft.relations),
        groups: bare(&draft.groups),
    }
}

struct Gen<'r> {
    rng: &'r mut TestRng,
    lines: Vec<String>,
    /// Text of the line being built.
    cur: String,
    counter: usize,
    injection: Option<Injection>,
    inject: bool,
}

impl Gen<'_> {
    fn fresh(&mut self, prefix: &str) -> Ident {
        self.counter += 1;
        let id = match self.rng.random_range(0..4) {
            0 => format!("{prefix}{}", self.counter),
            1 => format!("{}_{}", prefix.to_lowercase(), self.counter),
            2 => format!("{prefix}-{}", self.counter),
            _ => format!("{prefix}x{}y", self.counter),
        };
        Ident::from(id)
    }

    fn reference(&mut self, pool: &[Ident]) -> Ident {
        match pool.choose(self.rng) {
            Some(id) if self.rng.random_bool(0.8) => id.clone(),
            _ => {
                self.counter += 1;
                Ident::from(format!("Ref{}", self.counter))
            }
        }
    }

    fn text(&mut self) -> String {
        let n = self.rng.random_range(0..6);
        (0..n)
            .map(|_| *STRING_PARTS.choose(self.rng).unwrap())
            .collect()
    }

    fn quoted(s: &str) -> String {
        let mut out = String::from("\"");
        for c in s.chars() {
            match c {
                '"' => out.push_str("\\\""),
                '\\' => out.push_str("\\\\"),
                '\n' => out.push_str("\\n"),
                '\t' => out.push_str("\\t"),
                c => out.push(c),
            }
        }
        out.push('"');
        out
    }

    fn space(&mut self) -> &'static str {
        [" ", " ", " ", "  ", "\t", " \t "]
            .choose(self.rng)
            .unwrap()
    }

    /// Appends a token to the current line, separated by random spacing.
    fn tok(&mut self, t: &str) {
        if !self.cur.is_empty() && !self.cur.ends_with([' ', '\t']) {
            let s = self.space();
            self.cur.push_str(s);
        }
        self.cur.push_str(t);
    }

    fn column(&self) -> u32 {
        self.cur.chars().count() as u32 + 1
    }

    fn end_line(&mut self) {
        let mut line = std::mem::take(&mut self.cur);
        if self.rng.random_bool(0.1) {
            line.push_str("  # trailing remark");
        }
        self.lines.push(line);
        for _ in 0..self.rng.random_range(0..2) {
            let filler = ["", "   ", "# comment line", "\t# indented comment"]
                .choose(self.rng)
                .unwrap();
            self.lines.push(filler.to_string());
        }
    }

    fn indent(&mut self, depth: usize) {
        self.cur = "  ".repeat(depth);
    }

    fn opt_name(&mut self, id: &Ident) -> String {
        if self.rng.random_bool(0.5) {
            let name = self.text();
            let q = Self::quoted(&name);
            self.tok(&q);
            name
        } else {
            id.to_string()
        }
    }

    fn id_list(&mut self, pool: &[Ident]) -> BTreeSet<Ident> {
        let mut set = BTreeSet::new();
        let n = self.rng.random_range(1..4);
        let mut first = true;
        for _ in 0..n {
            let id = self.reference(pool);
            if !set.insert(id.clone()) {
                continue;
            }
            if !first {
                self.cur.push(',');
            }
            first = false;
            self.tok(&id);
        }
        set
    }

    fn maybe_inject(&mut self, depth: usize, in_process: bool) {
        if !self.inject || self.injection.is_some() || !self.rng.random_bool(0.15) {
            return;
        }
        let word = *INTERIOR.choose(self.rng).unwrap();
        let target = format!("T{}", self.counter);
        self.indent(depth);
        let start = self.column();
        self.tok(word);
        self.tok(&target);
        let target_col = self.column() - target.chars().count() as u32;
        // Inside a process body the interior keyword itself is rejected; at
        // map level it reads as a relation source, so the parser stops at
        // the identifier that should have been an arrow.
        let column = if in_process { start } else { target_col };
        self.injection = Some(Injection {
            statement: format!("{word} {target}"),
            line: self.lines.len() as u32 + 1,
            column,
        });
        self.end_line();
    }
}

struct Pools {
    categories: Vec<Ident>,
    phases: Vec<Ident>,
    actors: Vec<Ident>,
    services: Vec<Ident>,
    objects: Vec<Ident>,
    customers: Vec<Ident>,
    processes: Vec<Ident>,
}

/// Draws one program. With `inject`, roughly half of the programs carry a
/// single interior statement.
pub fn program(rng: &mut TestRng, inject: bool) -> Program {
    let inject = inject && rng.random_bool(0.5);
    let mut g = Gen {
        rng,
        lines: Vec::new(),
        cur: String::new(),
        counter: 0,
        injection: None,
        inject,
    };
    let mut draft = Draft::named(g.text());
    if g.rng.random_bool(0.2) {
        g.lines.push("# leading comment".into());
    }
    g.tok("map");
    let q = Gen::quoted(&draft.name);
    g.tok(&q);
    g.tok("{");
    g.end_line();

    // Declare everything first so that references have something to hit.
    let mut pools = Pools {
        categories: Vec::new(),
        phases: Vec::new(),
        actors: Vec::new(),
        services: Vec::new(),
        objects: Vec::new(),
        customers: Vec::new(),
        processes: Vec::new(),
    };
    for _ in 0..g.rng.random_range(0..4) {
        category(&mut g, &mut draft, &mut pools, None, 1);
    }
    let mut ordinals: BTreeSet<u64> = BTreeSet::new();
    for _ in 0..g.rng.random_range(0..4) {
        g.indent(1);
        g.tok("phase");
        let id = g.fresh("Ph");
        g.tok(&id);
        let name = g.opt_name(&id);
        let ordinal = if g.rng.random_bool(0.5) {
            let n = g.rng.random_range(0..1000u64);
            ordinals.insert(n).then_some(n)
        } else {
            None
        };
        if let Some(n) = ordinal {
            g.tok("ordinal");
            g.tok(&n.to_string());
        }
        g.end_line();
        draft.phases.push(Spanned::bare(Phase {
            id: id.clone(),
            name,
            ordinal,
        }));
        pools.phases.push(id);
    }
    for _ in 0..g.rng.random_range(0..6) {
        g.indent(1);
        let (kind, prefix) = match g.rng.random_range(0..4) {
            0 => (EaKind::Actor, "Actor"),
            1 => (EaKind::Service, "Svc"),
            2 => (EaKind::ExternalCustomer, "Cust"),
            _ => (
                EaKind::Object {
                    object_kind: ObjectKind::Permanent,
                },
                "Obj",
            ),
        };
        match kind {
            EaKind::Actor => g.tok("actor"),
            EaKind::Service => g.tok("service"),
            EaKind::ExternalCustomer => {
                g.tok("external");
                g.tok("customer");
            }
            EaKind::Object { .. } => g.tok("object"),
        }
        let id = g.fresh(prefix);
        g.tok(&id);
        let name = g.opt_name(&id);
        let kind = match kind {
            EaKind::Object { .. } => {
                let object_kind = match g.rng.random_range(0..4) {
                    0 => ObjectKind::Case,
                    1 => ObjectKind::Abstract,
                    2 => {
                        g.tok("kind");
                        g.tok("permanent");
                        ObjectKind::Permanent
                    }
                    _ => ObjectKind::Permanent,
                };
                if object_kind != ObjectKind::Permanent {
                    g.tok("kind");
                    g.tok(object_kind.keyword());
                }
                pools.objects.push(id.clone());
                EaKind::Object { object_kind }
            }
            EaKind::Actor => {
                pools.actors.push(id.clone());
                kind
            }
            EaKind::Service => {
                pools.services.push(id.clone());
                kind
            }
            EaKind::ExternalCustomer => {
                pools.customers.push(id.clone());
                kind
            }
        };
        g.end_line();
        draft
            .ea_elements
            .push(Spanned::bare(EaElement { id, name, kind }));
    }
    g.maybe_inject(1, false);

    let process_ids: Vec<Ident> = (0..g.rng.random_range(0..7))
        .map(|_| g.fresh("P"))
        .collect();
    pools.processes = process_ids.clone();
    for id in process_ids {
        process(&mut g, &mut draft, &pools, id);
    }
    g.maybe_inject(1, false);

    for _ in 0..g.rng.random_range(0..6) {
        g.indent(1);
        let from = g.reference(&pools.processes);
        g.tok(&from);
        let op = g.rng.random_range(0..4);
        g.tok(["->", "~>", "contains", "variant-of"][op]);
        let targets: Vec<Ident> = (0..g.rng.random_range(1..4))
            .map(|_| g.reference(&pools.processes))
            .collect();
        for (i, to) in targets.iter().enumerate() {
            if i > 0 {
                g.cur.push(',');
            }
            g.tok(to);
            let (a, b) = (from.clone(), to.clone());
            draft.relations.push(Spanned::bare(match op {
                0 => Relation::trigger(a, b),
                1 => Relation::flow(a, b),
                2 => Relation::decomposition(a, b),
                _ => Relation::specialization(a, b),
            }));
        }
        g.end_line();
    }

    for _ in 0..g.rng.random_range(0..4) {
        g.indent(1);
        g.tok("group");
        let name = g.text();
        let q = Gen::quoted(&name);
        g.tok(&q);
        g.tok("by");
        let mut explicit_members = None;
        let pick = g.rng.random_range(0..8);
        let (kw, pool) = match pick {
            0 => ("category", &pools.categories),
            1 => ("phase", &pools.phases),
            2 => ("owner", &pools.actors),
            3 => ("provides", &pools.services),
            4 => ("uses", &pools.objects),
            5 => ("handles", &pools.objects),
            6 => ("tag", &pools.processes),
            _ => ("members", &pools.processes),
        };
        g.tok(kw);
        let criterion = match pick {
            6 => {
                let key = property_key(&mut g);
                g.tok("=");
                let value = g.text();
                let q = Gen::quoted(&value);
                g.tok(&q);
                Criterion::Property { key, value }
            }
            7 => {
                let members = if g.rng.random_bool(0.2) {
                    BTreeSet::new()
                } else {
                    g.id_list(pool)
                };
                explicit_members = Some(members);
                Criterion::ExplicitList
            }
            _ => {
                let id = g.reference(pool);
                g.tok(&id);
                match pick {
                    0 => Criterion::InCategory(id),
                    1 => Criterion::InPhase(id),
                    2 => Criterion::OwnedBy(id),
                    3 => Criterion::Provides(id),
                    4 => Criterion::Uses(id),
                    _ => Criterion::Handles(id),
                }
            }
        };
        g.end_line();
        draft.groups.push(Spanned::bare(Group {
            name,
            criterion,
            explicit_members,
        }));
    }
    g.maybe_inject(1, false);

    g.tok("}");
    g.end_line();

    let newline = if g.rng.random_bool(0.2) { "\r\n" } else { "\n" };
    let text = g.lines.join(newline);
    Program {
        text,
        expected: draft,
        injection: g.injection,
    }
}

fn property_key(g: &mut Gen<'_>) -> String {
    if g.rng.random_bool(0.5) {
        let id = g.fresh("k");
        g.tok(&id);
        id.to_string()
    } else {
        let key = g.text();
        let q = Gen::quoted(&key);
        g.tok(&q);
        key
    }
}

fn category(
    g: &mut Gen<'_>,
    draft: &mut Draft,
    pools: &mut Pools,
    parent: Option<&Ident>,
    depth: usize,
) {
    g.indent(depth);
    g.tok(if parent.is_some() {
        "subcategory"
    } else {
        "category"
    });
    let id = g.fresh("Cat");
    g.tok(&id);
    let name = g.opt_name(&id);
    let parent = match parent {
        Some(p) => Some(p.clone()),
        None if g.rng.random_bool(0.3) => {
            g.tok("parent");
            let p = g.reference(&pools.categories);
            g.tok(&p);
            Some(p)
        }
        None => None,
    };
    draft.categories.push(Spanned::bare(Category {
        id: id.clone(),
        name,
        parent,
    }));
    pools.categories.push(id.clone());
    if depth < 3 && g.rng.random_bool(0.3) {
        let n = g.rng.random_range(0..3);
        g.tok("{");
        if n == 0 {
            g.tok("}");
            g.end_line();
            return;
        }
        g.end_line();
        for _ in 0..n {
            category(g, draft, pools, Some(&id), depth + 1);
        }
        g.indent(depth);
        g.tok("}");
    }
    g.end_line();
}

fn customer(g: &mut Gen<'_>, pools: &Pools) -> CustomerRef {
    match g.rng.random_range(0..3) {
        0 => {
            g.tok("customer");
            let id = g.reference(&pools.customers);
            g.tok(&id);
            CustomerRef::ExternalCustomer(id)
        }
        1 => {
            g.tok("actor");
            let id = g.reference(&pools.actors);
            g.tok(&id);
            CustomerRef::InternalActor(id)
        }
        _ => {
            g.tok("process");
            let id = g.reference(&pools.processes);
            g.tok(&id);
            CustomerRef::InternalProcess(id)
        }
    }
}

fn process(g: &mut Gen<'_>, draft: &mut Draft, pools: &Pools, id: Ident) {
    g.indent(1);
    g.tok("process");
    g.tok(&id);
    let mut p = Process::new(id.clone());
    p.name = g.opt_name(&id);
    let items = g.rng.random_range(0..6);
    if items == 0 && g.rng.random_bool(0.7) {
        g.end_line();
        draft.processes.push(Spanned::bare(p));
        return;
    }
    g.tok("{");
    let one_line = items <= 1 && g.rng.random_bool(0.5) && !g.inject;
    if !one_line {
        g.end_line();
    }
    let mut tags: BTreeMap<String, String> = BTreeMap::new();
    for _ in 0..items {
        if !one_line {
            g.maybe_inject(2, true);
            g.indent(2);
        }
        match g.rng.random_range(0..9) {
            k @ 0..=5 => {
                let (kw, pool) = [
                    ("category", &pools.categories),
                    ("phase", &pools.phases),
                    ("owner", &pools.actors),
                    ("provides", &pools.services),
                    ("uses", &pools.objects),
                    ("handles", &pools.objects),
                ][k];
                g.tok(kw);
                let set = g.id_list(pool);
                let target = match k {
                    0 => &mut p.categories,
                    1 => &mut p.phases,
                    2 => &mut p.owners,
                    3 => &mut p.provides,
                    4 => &mut p.uses,
                    _ => &mut p.handles,
                };
                target.extend(set);
            }
            6 => {
                g.tok("input");
                let label = g.text();
                let q = Gen::quoted(&label);
                g.tok(&q);
                g.tok("from");
                let source = customer(g, pools);
                p.inputs.push(InputSpec { label, source });
            }
            7 => {
                g.tok("output");
                let label = g.text();
                let q = Gen::quoted(&label);
                g.tok(&q);
                let kind = match g.rng.random_range(0..3) {
                    0 => {
                        g.tok("outcome");
                        OutputKind::Outcome
                    }
                    1 => {
                        g.tok("product");
                        OutputKind::Product
                    }
                    _ => OutputKind::Product,
                };
                g.tok("to");
                let destination = customer(g, pools);
                p.outputs.push(OutputSpec {
                    label,
                    kind,
                    destination,
                });
            }
            _ => {
                let mark = g.cur.len();
                g.tok("tag");
                let key = property_key(g);
                match tags.entry(key) {
                    Entry::Occupied(_) => {
                        // Never emit a duplicate tag; finish the line with a
                        // harmless item instead.
                        g.cur.truncate(mark);
                        g.tok("phase");
                        let set = g.id_list(&pools.phases);
                        p.phases.extend(set);
                    }
                    Entry::Vacant(slot) => {
                        g.tok("=");
                        let value = g.text();
                        let q = Gen::quoted(&value);
                        g.tok(&q);
                        slot.insert(value);
                    }
                }
            }
        }
        if !one_line {
            g.end_line();
        }
    }
    if !one_line {
        g.maybe_inject(2, true);
        g.indent(1);
    }
    g.tok("}");
    g.end_line();
    p.properties = tags;
    draft.processes.push(Spanned::bare(p));
}
