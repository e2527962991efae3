//! The process-map meta-model and its assembly from drafts.
//!
//! A [`ProcessMap`] is only ever produced by [`assemble`], which checks every
//! identifier and reference. Processes are black boxes: they carry linkage to
//! enterprise-architecture elements, categories and phases, but no interior
//! activities.

use std::borrow::Borrow;
use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::diagnostic::{Diagnostic, SourceSpan};
use crate::dsl::is_keyword;

pub const SCHEMA_VERSION: &str = "promap/1";

/// A single-token element name: starts with an ASCII letter, continues with
/// letters, digits, `_` or `-`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Ident(String);

impl Ident {
    pub fn new(s: impl Into<String>) -> Self {
        Ident(s.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// Checks the lexical shape only; keywords pass this check.
    pub fn is_well_formed(s: &str) -> bool {
        let mut chars = s.chars();
        match chars.next() {
            Some(c) if c.is_ascii_alphabetic() => {}
            _ => return false,
        }
        chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
    }

    /// Whether the DSL can spell this identifier back.
    pub fn is_usable(s: &str) -> bool {
        Self::is_well_formed(s) && !is_keyword(s)
    }
}

impl Deref for Ident {
    type Target = str;
    fn deref(&self) -> &str {
        &self.0
    }
}

impl Borrow<str> for Ident {
    fn borrow(&self) -> &str {
        &self.0
    }
}

impl From<&str> for Ident {
    fn from(s: &str) -> Self {
        Ident(s.to_owned())
    }
}

impl From<String> for Ident {
    fn from(s: String) -> Self {
        Ident(s)
    }
}

impl fmt::Display for Ident {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectKind {
    #[default]
    Permanent,
    Case,
    Abstract,
}

impl ObjectKind {
    pub fn keyword(self) -> &'static str {
        match self {
            ObjectKind::Permanent => "permanent",
            ObjectKind::Case => "case",
            ObjectKind::Abstract => "abstract",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EaKind {
    Actor,
    Object {
        #[serde(default)]
        object_kind: ObjectKind,
    },
    Service,
    ExternalCustomer,
}

impl EaKind {
    pub fn describe(&self) -> &'static str {
        match self {
            EaKind::Actor => "actor",
            EaKind::Object { .. } => "object",
            EaKind::Service => "service",
            EaKind::ExternalCustomer => "external customer",
        }
    }
}

/// Actor, object, service or external customer that processes link to.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EaElement {
    pub id: Ident,
    pub name: String,
    #[serde(flatten)]
    pub kind: EaKind,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CustomerRef {
    ExternalCustomer(Ident),
    InternalActor(Ident),
    InternalProcess(Ident),
}

impl CustomerRef {
    pub fn is_external(&self) -> bool {
        matches!(self, CustomerRef::ExternalCustomer(_))
    }

    pub fn target(&self) -> &Ident {
        match self {
            CustomerRef::ExternalCustomer(id)
            | CustomerRef::InternalActor(id)
            | CustomerRef::InternalProcess(id) => id,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputSpec {
    pub label: String,
    pub source: CustomerRef,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputKind {
    #[default]
    Product,
    Outcome,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputSpec {
    pub label: String,
    #[serde(default)]
    pub kind: OutputKind,
    pub destination: CustomerRef,
}

/// An atomic business process.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Process {
    pub id: Ident,
    pub name: String,
    #[serde(default, skip_serializing_if = "BTreeSet::is_empty")]
    pub categories: BTreeSet<Ident>,
    #[serde(default, skip_serializing_if = "BTreeSet::is_empty")]
    pub phases: BTreeSet<Ident>,
    #[serde(default, skip_serializing_if = "BTreeSet::is_empty")]
    pub owners: BTreeSet<Ident>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub inputs: Vec<InputSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub outputs: Vec<OutputSpec>,
    #[serde(default, skip_serializing_if = "BTreeSet::is_empty")]
    pub provides: BTreeSet<Ident>,
    #[serde(default, skip_serializing_if = "BTreeSet::is_empty")]
    pub uses: BTreeSet<Ident>,
    #[serde(default, skip_serializing_if = "BTreeSet::is_empty")]
    pub handles: BTreeSet<Ident>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub properties: BTreeMap<String, String>,
}

impl Process {
    /// A bare process whose display name equals its identifier.
    pub fn new(id: impl Into<Ident>) -> Self {
        let id = id.into();
        Self {
            name: id.to_string(),
            id,
            categories: BTreeSet::new(),
            phases: BTreeSet::new(),
            owners: BTreeSet::new(),
            inputs: Vec::new(),
            outputs: Vec::new(),
            provides: BTreeSet::new(),
            uses: BTreeSet::new(),
            handles: BTreeSet::new(),
            properties: BTreeMap::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Category {
    pub id: Ident,
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parent: Option<Ident>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Phase {
    pub id: Ident,
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ordinal: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RelationKind {
    Trigger,
    Flow,
    Decomposition,
    Specialization,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Relation {
    Trigger { src: Ident, dst: Ident },
    Flow { src: Ident, dst: Ident },
    Decomposition { parent: Ident, child: Ident },
    Specialization { variant: Ident, standard: Ident },
}

impl Relation {
    pub fn trigger(src: impl Into<Ident>, dst: impl Into<Ident>) -> Self {
        Relation::Trigger {
            src: src.into(),
            dst: dst.into(),
        }
    }

    pub fn flow(src: impl Into<Ident>, dst: impl Into<Ident>) -> Self {
        Relation::Flow {
            src: src.into(),
            dst: dst.into(),
        }
    }

    pub fn decomposition(parent: impl Into<Ident>, child: impl Into<Ident>) -> Self {
        Relation::Decomposition {
            parent: parent.into(),
            child: child.into(),
        }
    }

    pub fn specialization(variant: impl Into<Ident>, standard: impl Into<Ident>) -> Self {
        Relation::Specialization {
            variant: variant.into(),
            standard: standard.into(),
        }
    }

    pub fn kind(&self) -> RelationKind {
        match self {
            Relation::Trigger { .. } => RelationKind::Trigger,
            Relation::Flow { .. } => RelationKind::Flow,
            Relation::Decomposition { .. } => RelationKind::Decomposition,
            Relation::Specialization { .. } => RelationKind::Specialization,
        }
    }

    /// (from, to) in the direction the relation is written.
    pub fn endpoints(&self) -> (&Ident, &Ident) {
        match self {
            Relation::Trigger { src, dst } | Relation::Flow { src, dst } => (src, dst),
            Relation::Decomposition { parent, child } => (parent, child),
            Relation::Specialization { variant, standard } => (variant, standard),
        }
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Relation::Trigger { src, dst } => write!(f, "{src} -> {dst}"),
            Relation::Flow { src, dst } => write!(f, "{src} ~> {dst}"),
            Relation::Decomposition { parent, child } => write!(f, "{parent} contains {child}"),
            Relation::Specialization { variant, standard } => {
                write!(f, "{variant} variant-of {standard}")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    InCategory(Ident),
    InPhase(Ident),
    OwnedBy(Ident),
    Provides(Ident),
    Uses(Ident),
    Handles(Ident),
    Property { key: String, value: String },
    ExplicitList,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Group {
    pub name: String,
    pub criterion: Criterion,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub explicit_members: Option<BTreeSet<Ident>>,
}

/// Where the elements of an assembled map were declared. Not part of map
/// equality: two maps with the same content but different layout are equal.
#[derive(Debug, Clone, Default)]
pub struct SourceIndex {
    pub processes: BTreeMap<Ident, SourceSpan>,
    pub ea_elements: BTreeMap<Ident, SourceSpan>,
    pub categories: BTreeMap<Ident, SourceSpan>,
    pub phases: BTreeMap<Ident, SourceSpan>,
    /// Parallel to [`ProcessMap::relations`].
    pub relations: Vec<Option<SourceSpan>>,
    /// Parallel to [`ProcessMap::groups`].
    pub groups: Vec<Option<SourceSpan>>,
}

#[derive(Debug, Clone)]
pub struct ProcessMap {
    pub name: String,
    pub processes: BTreeMap<Ident, Process>,
    pub ea_elements: BTreeMap<Ident, EaElement>,
    pub categories: BTreeMap<Ident, Category>,
    pub phases: BTreeMap<Ident, Phase>,
    pub relations: Vec<Relation>,
    pub groups: Vec<Group>,
    pub schema_version: String,
    pub origins: SourceIndex,
}

impl PartialEq for ProcessMap {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name
            && self.processes == other.processes
            && self.ea_elements == other.ea_elements
            && self.categories == other.categories
            && self.phases == other.phases
            && self.relations == other.relations
            && self.groups == other.groups
            && self.schema_version == other.schema_version
    }
}

impl Eq for ProcessMap {}

impl ProcessMap {
    pub fn find_process(&self, id: &str) -> Option<&Process> {
        self.processes.get(id)
    }

    /// Relations of one kind, in declaration order.
    pub fn relations_of_kind(&self, kind: RelationKind) -> Vec<&Relation> {
        self.relations.iter().filter(|r| r.kind() == kind).collect()
    }

    pub fn process_span(&self, id: &str) -> Option<SourceSpan> {
        self.origins.processes.get(id).cloned()
    }

    pub fn relation_span(&self, index: usize) -> Option<SourceSpan> {
        self.origins.relations.get(index).cloned().flatten()
    }
}

/// Free-function form of [`ProcessMap::find_process`].
pub fn find_process<'a>(map: &'a ProcessMap, id: &str) -> Option<&'a Process> {
    map.find_process(id)
}

/// Free-function form of [`ProcessMap::relations_of_kind`].
pub fn relations_of_kind(map: &ProcessMap, kind: RelationKind) -> Vec<&Relation> {
    map.relations_of_kind(kind)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Spanned<T> {
    pub node: T,
    pub span: Option<SourceSpan>,
}

impl<T> Spanned<T> {
    pub fn new(node: T, span: Option<SourceSpan>) -> Self {
        Self { node, span }
    }

    pub fn bare(node: T) -> Self {
        Self { node, span: None }
    }
}

/// Unchecked map content as produced by the DSL parser or the interchange
/// loader.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Draft {
    pub name: String,
    pub schema_version: Option<String>,
    pub processes: Vec<Spanned<Process>>,
    pub ea_elements: Vec<Spanned<EaElement>>,
    pub categories: Vec<Spanned<Category>>,
    pub phases: Vec<Spanned<Phase>>,
    pub relations: Vec<Spanned<Relation>>,
    pub groups: Vec<Spanned<Group>>,
}

impl Draft {
    pub fn named(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            ..Self::default()
        }
    }
}

/// Diagnostic codes raised by [`assemble`].
pub mod codes {
    pub const UNRESOLVED: &str = "E-REF";
    pub const DUPLICATE: &str = "E-DUP";
    pub const SELF_REFERENCE: &str = "E-SELF";
    pub const BAD_IDENT: &str = "E-IDENT";
    pub const EMPTY_LABEL: &str = "E-EMPTY";
    pub const GROUP_SHAPE: &str = "E-GROUP";
}

struct Assembler {
    diagnostics: Vec<Diagnostic>,
}

impl Assembler {
    fn fail(&mut self, code: &str, message: String, subjects: &[&str], span: &Option<SourceSpan>) {
        self.diagnostics.push(
            Diagnostic::error(code, message)
                .with_subjects(subjects.iter().copied())
                .with_span(span.clone()),
        );
    }

    fn check_ident(&mut self, what: &str, id: &Ident, span: &Option<SourceSpan>) {
        if !Ident::is_usable(id) {
            self.fail(
                codes::BAD_IDENT,
                format!("{what} identifier `{id}` is not a valid identifier"),
                &[id],
                span,
            );
        }
    }

    /// Keeps the first declaration of each identifier.
    fn unique<T: Clone>(
        &mut self,
        what: &str,
        items: Vec<Spanned<T>>,
        id_of: impl Fn(&T) -> &Ident,
    ) -> (BTreeMap<Ident, T>, BTreeMap<Ident, SourceSpan>) {
        let mut out = BTreeMap::new();
        let mut spans = BTreeMap::new();
        for Spanned { node, span } in items {
            let id = id_of(&node).clone();
            self.check_ident(what, &id, &span);
            if out.contains_key(&id) {
                self.fail(
                    codes::DUPLICATE,
                    format!("duplicate {what} `{id}`"),
                    &[&id],
                    &span,
                );
                continue;
            }
            if let Some(s) = span {
                spans.insert(id.clone(), s);
            }
            out.insert(id, node);
        }
        (out, spans)
    }
}

/// Checks a draft and builds the map, or returns every integrity failure.
/// Cycles among categories, decompositions and specializations are left to
/// the well-formedness rules.
pub fn assemble(draft: Draft) -> Result<ProcessMap, Vec<Diagnostic>> {
    let mut asm = Assembler {
        diagnostics: Vec::new(),
    };

    let (ea_elements, ea_spans) = asm.unique("element", draft.ea_elements, |e| &e.id);
    let (categories, cat_spans) = asm.unique("category", draft.categories, |c| &c.id);
    let (phases, phase_spans) = asm.unique("phase", draft.phases, |p| &p.id);
    let (processes, proc_spans) = asm.unique("process", draft.processes, |p| &p.id);

    let mut ordinals: BTreeMap<u64, &Ident> = BTreeMap::new();
    for phase in phases.values() {
        if let Some(ord) = phase.ordinal {
            if let Some(first) = ordinals.insert(ord, &phase.id) {
                asm.fail(
                    codes::DUPLICATE,
                    format!(
                        "phase `{}` reuses ordinal {ord} of phase `{first}`",
                        phase.id
                    ),
                    &[first, &phase.id],
                    &phase_spans.get(&phase.id).cloned(),
                );
            }
        }
    }

    for cat in categories.values() {
        if let Some(parent) = &cat.parent {
            if !categories.contains_key(parent) {
                asm.fail(
                    codes::UNRESOLVED,
                    format!("category `{}` has unknown parent `{parent}`", cat.id),
                    &[&cat.id, parent],
                    &cat_spans.get(&cat.id).cloned(),
                );
            }
        }
    }

    let element_of = |id: &Ident| ea_elements.get(id).map(|e| e.kind);
    let is_actor = |k: EaKind| k == EaKind::Actor;
    let is_object = |k: EaKind| matches!(k, EaKind::Object { .. });
    let is_service = |k: EaKind| k == EaKind::Service;
    let is_customer = |k: EaKind| k == EaKind::ExternalCustomer;

    for process in processes.values() {
        let span = proc_spans.get(&process.id).cloned();
        let pid: &str = &process.id;
        let expect = |asm: &mut Assembler,
                      role: &str,
                      id: &Ident,
                      want: &str,
                      ok: &dyn Fn(EaKind) -> bool| {
            match element_of(id) {
                None => asm.fail(
                    codes::UNRESOLVED,
                    format!("process `{pid}` {role} unknown {want} `{id}`"),
                    &[pid, id],
                    &span,
                ),
                Some(kind) if !ok(kind) => asm.fail(
                    codes::UNRESOLVED,
                    format!(
                        "process `{pid}` {role} `{id}`, which is {} {} rather than {} {want}",
                        article(kind.describe()),
                        kind.describe(),
                        article(want)
                    ),
                    &[pid, id],
                    &span,
                ),
                Some(_) => {}
            }
        };
        for id in &process.owners {
            expect(&mut asm, "is owned by", id, "actor", &is_actor);
        }
        for id in &process.provides {
            expect(&mut asm, "provides", id, "service", &is_service);
        }
        for id in &process.uses {
            expect(&mut asm, "uses", id, "object", &is_object);
        }
        for id in &process.handles {
            expect(&mut asm, "handles", id, "object", &is_object);
        }
        let customers = process
            .inputs
            .iter()
            .map(|i| (&i.label, &i.source, "takes input from"))
            .chain(
                process
                    .outputs
                    .iter()
                    .map(|o| (&o.label, &o.destination, "delivers output to")),
            );
        for (label, customer, role) in customers {
            if label.is_empty() {
                asm.fail(
                    codes::EMPTY_LABEL,
                    format!("process `{pid}` has an input or output with an empty label"),
                    &[pid],
                    &span,
                );
            }
            match customer {
                CustomerRef::ExternalCustomer(id) => {
                    expect(&mut asm, role, id, "external customer", &is_customer)
                }
                CustomerRef::InternalActor(id) => expect(&mut asm, role, id, "actor", &is_actor),
                CustomerRef::InternalProcess(id) if id == &process.id => asm.fail(
                    codes::SELF_REFERENCE,
                    format!("process `{pid}` cannot be its own customer"),
                    &[pid],
                    &span,
                ),
                CustomerRef::InternalProcess(id) if !processes.contains_key(id) => asm.fail(
                    codes::UNRESOLVED,
                    format!("process `{pid}` {role} unknown process `{id}`"),
                    &[pid, id],
                    &span,
                ),
                CustomerRef::InternalProcess(_) => {}
            }
        }
        for id in &process.categories {
            if !categories.contains_key(id) {
                asm.fail(
                    codes::UNRESOLVED,
                    format!("process `{pid}` is in unknown category `{id}`"),
                    &[pid, id],
                    &span,
                );
            }
        }
        for id in &process.phases {
            if !phases.contains_key(id) {
                asm.fail(
                    codes::UNRESOLVED,
                    format!("process `{pid}` is in unknown phase `{id}`"),
                    &[pid, id],
                    &span,
                );
            }
        }
    }

    let mut relations = Vec::new();
    let mut relation_spans = Vec::new();
    let mut seen = HashSet::new();
    for Spanned { node, span } in draft.relations {
        let (a, b) = node.endpoints();
        if a == b {
            asm.fail(
                codes::SELF_REFERENCE,
                format!("relation `{node}` relates a process to itself"),
                &[a],
                &span,
            );
            continue;
        }
        let mut resolved = true;
        for end in [a, b] {
            if !processes.contains_key(end) {
                asm.fail(
                    codes::UNRESOLVED,
                    format!("relation `{node}` refers to unknown process `{end}`"),
                    &[end],
                    &span,
                );
                resolved = false;
            }
        }
        if resolved && seen.insert(node.clone()) {
            relations.push(node);
            relation_spans.push(span);
        }
    }

    // `input ... from process P` inside Q stands for P -> Q.
    for process in processes.values() {
        for input in &process.inputs {
            if let CustomerRef::InternalProcess(src) = &input.source {
                if src == &process.id || !processes.contains_key(src) {
                    continue;
                }
                let trigger = Relation::trigger(src.clone(), process.id.clone());
                if seen.insert(trigger.clone()) {
                    relations.push(trigger);
                    relation_spans.push(proc_spans.get(&process.id).cloned());
                }
            }
        }
    }

    let mut groups = Vec::new();
    let mut group_spans = Vec::new();
    for Spanned {
        node: mut group,
        span,
    } in draft.groups
    {
        let gname = group.name.clone();
        let in_ns = |ok: bool, what: &str, id: &Ident, asm: &mut Assembler| {
            if !ok {
                asm.fail(
                    codes::UNRESOLVED,
                    format!("group \"{gname}\" refers to unknown {what} `{id}`"),
                    &[id],
                    &span,
                );
            }
        };
        let element_is = |id: &Ident, ok: &dyn Fn(EaKind) -> bool| element_of(id).is_some_and(ok);
        match &group.criterion {
            Criterion::InCategory(id) => {
                in_ns(categories.contains_key(id), "category", id, &mut asm)
            }
            Criterion::InPhase(id) => in_ns(phases.contains_key(id), "phase", id, &mut asm),
            Criterion::OwnedBy(id) => in_ns(element_is(id, &is_actor), "actor", id, &mut asm),
            Criterion::Provides(id) => in_ns(element_is(id, &is_service), "service", id, &mut asm),
            Criterion::Uses(id) | Criterion::Handles(id) => {
                in_ns(element_is(id, &is_object), "object", id, &mut asm)
            }
            Criterion::Property { .. } => {}
            Criterion::ExplicitList => {
                for id in group.explicit_members.iter().flatten() {
                    in_ns(processes.contains_key(id), "process", id, &mut asm);
                }
                group.explicit_members.get_or_insert_with(BTreeSet::new);
            }
        }
        if group.explicit_members.is_some() && group.criterion != Criterion::ExplicitList {
            asm.fail(
                codes::GROUP_SHAPE,
                format!("group \"{gname}\" lists members but is not an explicit-list group"),
                &[],
                &span,
            );
        }
        groups.push(group);
        group_spans.push(span);
    }

    if !asm.diagnostics.is_empty() {
        return Err(asm.diagnostics);
    }

    Ok(ProcessMap {
        name: draft.name,
        processes,
        ea_elements,
        categories,
        phases,
        relations,
        groups,
        schema_version: draft
            .schema_version
            .unwrap_or_else(|| SCHEMA_VERSION.to_owned()),
        origins: SourceIndex {
            processes: proc_spans,
            ea_elements: ea_spans,
            categories: cat_spans,
            phases: phase_spans,
            relations: relation_spans,
            groups: group_spans,
        },
    })
}

fn article(noun: &str) -> &'static str {
    match noun.as_bytes().first() {
        Some(b'a' | b'e' | b'i' | b'o' | b'u') => "an",
        _ => "a",
    }
}
