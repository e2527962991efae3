use std::fmt::Write;

use crate::model::{
    Criterion, CustomerRef, EaKind, Ident, ObjectKind, OutputKind, Process, ProcessMap,
};

/// Renders a map in canonical `.promap` form: declarations sorted by
/// identifier, relations and groups in declaration order.
pub fn format(map: &ProcessMap) -> String {
    let mut out = String::new();
    let _ = write!(out, "map {} {{", quote(&map.name));
    let empty = map.categories.is_empty()
        && map.phases.is_empty()
        && map.ea_elements.is_empty()
        && map.processes.is_empty()
        && map.relations.is_empty()
        && map.groups.is_empty();
    if empty {
        out.push_str("}\n");
        return out;
    }
    out.push('\n');

    let mut section = Section::new(&mut out);
    for cat in map.categories.values() {
        let mut line = format!("category {}{}", cat.id, display_name(&cat.id, &cat.name));
        if let Some(parent) = &cat.parent {
            let _ = write!(line, " parent {parent}");
        }
        section.line(1, &line);
    }
    section.gap();
    for phase in map.phases.values() {
        let mut line = format!("phase {}{}", phase.id, display_name(&phase.id, &phase.name));
        if let Some(ord) = phase.ordinal {
            let _ = write!(line, " ordinal {ord}");
        }
        section.line(1, &line);
    }
    section.gap();
    for el in map.ea_elements.values() {
        let name = display_name(&el.id, &el.name);
        let line = match el.kind {
            EaKind::Actor => format!("actor {}{name}", el.id),
            EaKind::Service => format!("service {}{name}", el.id),
            EaKind::ExternalCustomer => format!("external customer {}{name}", el.id),
            EaKind::Object { object_kind } => {
                let kind = match object_kind {
                    ObjectKind::Permanent => String::new(),
                    other => format!(" kind {}", other.keyword()),
                };
                format!("object {}{name}{kind}", el.id)
            }
        };
        section.line(1, &line);
    }
    section.gap();
    for process in map.processes.values() {
        write_process(&mut section, process);
    }
    section.gap();
    for relation in &map.relations {
        section.line(1, &relation.to_string());
    }
    section.gap();
    for group in &map.groups {
        let criterion = match &group.criterion {
            Criterion::InCategory(id) => format!("category {id}"),
            Criterion::InPhase(id) => format!("phase {id}"),
            Criterion::OwnedBy(id) => format!("owner {id}"),
            Criterion::Provides(id) => format!("provides {id}"),
            Criterion::Uses(id) => format!("uses {id}"),
            Criterion::Handles(id) => format!("handles {id}"),
            Criterion::Property { key, value } => {
                format!("tag {} = {}", property_key(key), quote(value))
            }
            Criterion::ExplicitList => {
                let members = group.explicit_members.iter().flatten();
                let list = join(members);
                if list.is_empty() {
                    "members".to_owned()
                } else {
                    format!("members {list}")
                }
            }
        };
        section.line(1, &format!("group {} by {criterion}", quote(&group.name)));
    }
    out.push_str("}\n");
    out
}

fn write_process(section: &mut Section<'_>, p: &Process) {
    let head = format!("process {}{}", p.id, display_name(&p.id, &p.name));
    let mut body = Vec::new();
    let lists = [
        ("category", &p.categories),
        ("phase", &p.phases),
        ("owner", &p.owners),
        ("provides", &p.provides),
        ("uses", &p.uses),
        ("handles", &p.handles),
    ];
    for (kw, ids) in lists {
        if !ids.is_empty() {
            body.push(format!("{kw} {}", join(ids)));
        }
    }
    for input in &p.inputs {
        body.push(format!(
            "input {} from {}",
            quote(&input.label),
            customer(&input.source)
        ));
    }
    for output in &p.outputs {
        let kind = match output.kind {
            OutputKind::Product => "product",
            OutputKind::Outcome => "outcome",
        };
        body.push(format!(
            "output {} {kind} to {}",
            quote(&output.label),
            customer(&output.destination)
        ));
    }
    for (key, value) in &p.properties {
        body.push(format!("tag {} = {}", property_key(key), quote(value)));
    }
    if body.is_empty() {
        section.line(1, &head);
        return;
    }
    section.line(1, &format!("{head} {{"));
    for line in &body {
        section.line(2, line);
    }
    section.line(1, "}");
}

/// Writes indented lines, separating non-empty sections by one blank line.
struct Section<'a> {
    out: &'a mut String,
    pending_gap: bool,
    wrote_any: bool,
}

impl<'a> Section<'a> {
    fn new(out: &'a mut String) -> Self {
        Self {
            out,
            pending_gap: false,
            wrote_any: false,
        }
    }

    fn line(&mut self, indent: usize, text: &str) {
        if self.pending_gap && self.wrote_any {
            self.out.push('\n');
        }
        self.pending_gap = false;
        self.wrote_any = true;
        for _ in 0..indent {
            self.out.push_str("  ");
        }
        self.out.push_str(text);
        self.out.push('\n');
    }

    fn gap(&mut self) {
        self.pending_gap = true;
    }
}

fn display_name(id: &Ident, name: &str) -> String {
    if id.as_str() == name {
        String::new()
    } else {
        format!(" {}", quote(name))
    }
}

fn customer(c: &CustomerRef) -> String {
    match c {
        CustomerRef::ExternalCustomer(id) => format!("customer {id}"),
        CustomerRef::InternalActor(id) => format!("actor {id}"),
        CustomerRef::InternalProcess(id) => format!("process {id}"),
    }
}

fn property_key(key: &str) -> String {
    if Ident::is_usable(key) {
        key.to_owned()
    } else {
        quote(key)
    }
}

fn join<'a>(ids: impl IntoIterator<Item = &'a Ident>) -> String {
    ids.into_iter()
        .map(Ident::as_str)
        .collect::<Vec<_>>()
        .join(", ")
}

pub(crate) fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            '\r' => out.push_str("\\r"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}
