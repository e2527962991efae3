//! Graphviz DOT export.
//!
//! Processes are boxes. Triggers are solid arrows, flows dashed arrows,
//! decompositions run parent to child with a diamond at the parent end, and
//! specializations point from variant to standard with a hollow triangle.
//! Decomposition is never drawn as nesting because a sub-process may have
//! several parents.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write;

use crate::analysis::{classify_triggering, evaluate_groups, TriggerClass};
use crate::model::{Ident, ProcessMap, Relation};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColorBy {
    Category,
    Phase,
    TriggerClass,
}

const PALETTE: &[&str] = &[
    "lightblue",
    "palegreen",
    "lightgoldenrod",
    "lightpink",
    "plum",
    "lightsalmon",
    "lightcyan",
    "khaki",
    "thistle",
    "wheat",
];

fn class_color(class: TriggerClass) -> &'static str {
    match class {
        TriggerClass::External => "lightblue",
        TriggerClass::Internal => "palegreen",
        TriggerClass::Hybrid => "khaki",
        TriggerClass::Untriggered => "lightgrey",
    }
}

/// Quoted DOT identifier or label.
fn q(s: &str) -> String {
    let mut out = String::from("\"");
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => {}
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

fn fill_colors(map: &ProcessMap, color_by: ColorBy) -> BTreeMap<&Ident, &'static str> {
    let keyed = |keys: Vec<&Ident>, pick: &dyn Fn(&crate::model::Process) -> Option<&Ident>| {
        let index: BTreeMap<&Ident, usize> =
            keys.into_iter().enumerate().map(|(i, k)| (k, i)).collect();
        map.processes
            .values()
            .filter_map(|p| {
                let key = pick(p)?;
                Some((&p.id, PALETTE[index[key] % PALETTE.len()]))
            })
            .collect()
    };
    match color_by {
        ColorBy::Category => keyed(map.categories.keys().collect(), &|p| p.categories.first()),
        ColorBy::Phase => keyed(map.phases.keys().collect(), &|p| p.phases.first()),
        ColorBy::TriggerClass => {
            let classes = classify_triggering(map);
            map.processes
                .keys()
                .map(|id| (id, class_color(classes[id])))
                .collect()
        }
    }
}

pub fn export_dot(map: &ProcessMap, color_by: Option<ColorBy>) -> String {
    let mut out = format!("digraph {} {{\n", q(&map.name));
    if map.processes.is_empty() {
        out.push_str("}\n");
        return out;
    }
    out.push_str("  node [shape=box];\n");

    let colors = color_by.map(|c| fill_colors(map, c)).unwrap_or_default();
    for p in map.processes.values() {
        let mut attrs = format!("label={}", q(&p.name));
        if let Some(color) = colors.get(&p.id) {
            let _ = write!(attrs, ", style=filled, fillcolor={color}");
        }
        let _ = writeln!(out, "  {} [{attrs}];", q(&p.id));
    }

    for r in &map.relations {
        let (a, b) = r.endpoints();
        let style = match r {
            Relation::Trigger { .. } => "style=solid",
            Relation::Flow { .. } => "style=dashed",
            Relation::Decomposition { .. } => "dir=both, arrowhead=none, arrowtail=diamond",
            Relation::Specialization { .. } => "arrowhead=empty",
        };
        let _ = writeln!(out, "  {} -> {} [{style}];", q(a), q(b));
    }

    let groups: Vec<_> = evaluate_groups(map)
        .into_iter()
        .filter(|g| !g.members.is_empty())
        .collect();
    let mut seen: BTreeSet<&Ident> = BTreeSet::new();
    let disjoint = groups
        .iter()
        .all(|g| g.members.iter().all(|m| seen.insert(m)));
    if disjoint {
        for (i, g) in groups.iter().enumerate() {
            let _ = writeln!(out, "  subgraph \"cluster_{}\" {{", i + 1);
            let _ = writeln!(out, "    label={};", q(&g.group));
            out.push_str("    style=dashed;\n");
            for m in &g.members {
                let _ = writeln!(out, "    {};", q(m));
            }
            out.push_str("  }\n");
        }
    } else {
        let mut legend = String::from("Groups\\l");
        for g in &groups {
            let members: Vec<&str> = g.members.iter().map(Ident::as_str).collect();
            let line = format!("{}: {}", g.group, members.join(", "));
            let quoted = q(&line);
            legend.push_str(&quoted[1..quoted.len() - 1]);
            legend.push_str("\\l");
        }
        let _ = writeln!(out, "  \"__groups\" [shape=note, label=\"{legend}\"];");
    }
    out.push_str("}\n");
    out
}
