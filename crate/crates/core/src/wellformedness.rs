//! Rule catalog and engine for structural and consistency checks on an
//! assembled map.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::{
    classify_triggering, evaluate_groups, orphan_internal_processes, TriggerClass,
};
use crate::diagnostic::{Diagnostic, Severity, SourceSpan};
use crate::graph::cyclic_components;
use crate::model::{Ident, ProcessMap, Relation};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Rule {
    pub code: &'static str,
    pub severity: Severity,
    pub description: &'static str,
}

pub mod codes {
    pub const DEC_CYCLE: &str = "E-DEC-CYCLE";
    pub const SPEC_CYCLE: &str = "E-SPEC-CYCLE";
    pub const CAT_CYCLE: &str = "E-CAT-CYCLE";
    pub const CUST_EXT: &str = "W-CUST-EXT";
    pub const CUST_INT: &str = "W-CUST-INT";
    pub const FLOW_COACT: &str = "W-FLOW-COACT";
    pub const UNTRIGGERED: &str = "W-UNTRIGGERED";
    pub const ORPHAN_INT: &str = "W-ORPHAN-INT";
    pub const EMPTY_GROUP: &str = "W-EMPTY-GROUP";
    pub const HYBRID_TRIG: &str = "W-HYBRID-TRIG";
}

const CATALOG: &[Rule] = &[
    Rule {
        code: codes::DEC_CYCLE,
        severity: Severity::Error,
        description: "decomposition relations must not form a cycle",
    },
    Rule {
        code: codes::SPEC_CYCLE,
        severity: Severity::Error,
        description: "specialization relations must not form a cycle",
    },
    Rule {
        code: codes::CAT_CYCLE,
        severity: Severity::Error,
        description: "category parent chains must not form a cycle",
    },
    Rule {
        code: codes::CUST_EXT,
        severity: Severity::Warning,
        description: "externally triggered process delivers no output to an external customer",
    },
    Rule {
        code: codes::CUST_INT,
        severity: Severity::Warning,
        description: "internally triggered process delivers output to an external customer",
    },
    Rule {
        code: codes::FLOW_COACT,
        severity: Severity::Warning,
        description: "flow target has no trigger source, so it is never active to receive",
    },
    Rule {
        code: codes::UNTRIGGERED,
        severity: Severity::Warning,
        description: "process has no input and no incoming trigger",
    },
    Rule {
        code: codes::ORPHAN_INT,
        severity: Severity::Info,
        description:
            "internally triggered process is not contained in any externally triggered process",
    },
    Rule {
        code: codes::EMPTY_GROUP,
        severity: Severity::Info,
        description: "group criterion matches no process",
    },
    Rule {
        code: codes::HYBRID_TRIG,
        severity: Severity::Info,
        description: "process is triggered both externally and internally",
    },
];

pub fn rule_catalog() -> Vec<Rule> {
    CATALOG.to_vec()
}

pub fn find_rule(code: &str) -> Option<&'static Rule> {
    CATALOG.iter().find(|r| r.code == code)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RuleSetting {
    Off,
    Info,
    Warning,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ConfigError {
    #[error("line {line}: expected `RULE = off|info|warning`")]
    Syntax { line: usize },
    #[error("line {line}: unknown rule `{code}`")]
    UnknownRule { line: usize, code: String },
    #[error("line {line}: unknown setting `{value}` (use off, info or warning)")]
    UnknownSetting { line: usize, value: String },
    #[error("rule `{0}` has error severity and cannot be reconfigured")]
    NotOverridable(String),
}

/// Per-rule overrides for Warning and Info rules.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RuleConfig {
    overrides: BTreeMap<&'static str, RuleSetting>,
}

impl RuleConfig {
    pub fn set(&mut self, code: &str, setting: RuleSetting) -> Result<(), ConfigError> {
        let rule = find_rule(code).ok_or_else(|| ConfigError::UnknownRule {
            line: 0,
            code: code.to_owned(),
        })?;
        if rule.severity == Severity::Error {
            return Err(ConfigError::NotOverridable(code.to_owned()));
        }
        self.overrides.insert(rule.code, setting);
        Ok(())
    }

    /// Reads `RULE = off|info|warning` lines; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut config = RuleConfig::default();
        for (index, raw) in text.lines().enumerate() {
            let line = index + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (code, value) = content
                .split_once('=')
                .ok_or(ConfigError::Syntax { line })?;
            let (code, value) = (code.trim(), value.trim().trim_matches('"'));
            let setting = match value {
                "off" => RuleSetting::Off,
                "info" => RuleSetting::Info,
                "warning" => RuleSetting::Warning,
                other => {
                    return Err(ConfigError::UnknownSetting {
                        line,
                        value: other.to_owned(),
                    })
                }
            };
            config.set(code, setting).map_err(|e| match e {
                ConfigError::UnknownRule { code, .. } => ConfigError::UnknownRule { line, code },
                other => other,
            })?;
        }
        Ok(config)
    }

    /// Effective severity, or `None` when the rule is switched off.
    pub fn severity_of(&self, rule: &Rule) -> Option<Severity> {
        match self.overrides.get(rule.code) {
            None => Some(rule.severity),
            Some(RuleSetting::Off) => None,
            Some(RuleSetting::Info) => Some(Severity::Info),
            Some(RuleSetting::Warning) => Some(Severity::Warning),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    PassWithWarnings,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub verdict: Verdict,
    pub rules_run: Vec<String>,
    pub diagnostics: Vec<Diagnostic>,
}

impl ValidationReport {
    pub fn count(&self, severity: Severity) -> usize {
        self.diagnostics
            .iter()
            .filter(|d| d.severity == severity)
            .count()
    }

    pub fn has_errors(&self) -> bool {
        self.verdict == Verdict::Fail
    }
}

struct Finding {
    subjects: Vec<Ident>,
    message: String,
    span: Option<SourceSpan>,
}

struct Context<'a> {
    map: &'a ProcessMap,
    classes: BTreeMap<Ident, TriggerClass>,
}

impl Context<'_> {
    fn process_finding(&self, id: &Ident, message: String) -> Finding {
        Finding {
            subjects: vec![id.clone()],
            message,
            span: self.map.process_span(id),
        }
    }

    fn relation_cycles(
        &self,
        what: &str,
        pick: fn(&Relation) -> Option<(&Ident, &Ident)>,
    ) -> Vec<Finding> {
        cyclic_components(self.map.relations.iter().filter_map(pick))
            .into_iter()
            .map(|cycle| {
                let span = self
                    .map
                    .relations
                    .iter()
                    .enumerate()
                    .find(|(_, r)| pick(r).is_some_and(|(a, _)| cycle.contains(a)))
                    .and_then(|(i, _)| self.map.relation_span(i));
                Finding {
                    message: format!("{what} cycle through {}", list(&cycle)),
                    subjects: cycle,
                    span,
                }
            })
            .collect()
    }
}

fn list(ids: &[Ident]) -> String {
    ids.iter().map(Ident::as_str).collect::<Vec<_>>().join(", ")
}

fn check(code: &str, ctx: &Context<'_>) -> Vec<Finding> {
    let map = ctx.map;
    match code {
        codes::DEC_CYCLE => ctx.relation_cycles("decomposition", |r| match r {
            Relation::Decomposition { parent, child } => Some((parent, child)),
            _ => None,
        }),
        codes::SPEC_CYCLE => ctx.relation_cycles("specialization", |r| match r {
            Relation::Specialization { variant, standard } => Some((variant, standard)),
            _ => None,
        }),
        codes::CAT_CYCLE => {
            let edges = map
                .categories
                .values()
                .filter_map(|c| c.parent.as_ref().map(|p| (&c.id, p)));
            cyclic_components(edges)
                .into_iter()
                .map(|cycle| Finding {
                    message: format!("category parent cycle through {}", list(&cycle)),
                    span: map.origins.categories.get(&cycle[0]).cloned(),
                    subjects: cycle,
                })
                .collect()
        }
        codes::CUST_EXT | codes::CUST_INT => {
            let (class, want_external, text) = if code == codes::CUST_EXT {
                (
                    TriggerClass::External,
                    false,
                    "is triggered by an external customer but delivers no output to one",
                )
            } else {
                (
                    TriggerClass::Internal,
                    true,
                    "is triggered internally but delivers output to an external customer",
                )
            };
            ctx.classes
                .iter()
                .filter(|(_, c)| **c == class)
                .filter(|(id, _)| {
                    let external_out = map.processes[*id]
                        .outputs
                        .iter()
                        .any(|o| o.destination.is_external());
                    external_out == want_external
                })
                .map(|(id, _)| ctx.process_finding(id, format!("process `{id}` {text}")))
                .collect()
        }
        codes::FLOW_COACT => map
            .relations
            .iter()
            .enumerate()
            .filter_map(|(i, r)| match r {
                Relation::Flow { src, dst } if ctx.classes[dst] == TriggerClass::Untriggered => {
                    Some(Finding {
                        subjects: vec![src.clone(), dst.clone()],
                        message: format!(
                            "flow `{src} ~> {dst}` targets `{dst}`, which nothing ever triggers"
                        ),
                        span: map.relation_span(i),
                    })
                }
                _ => None,
            })
            .collect(),
        codes::UNTRIGGERED => ctx
            .classes
            .iter()
            .filter(|(_, c)| **c == TriggerClass::Untriggered)
            .map(|(id, _)| {
                ctx.process_finding(id, format!("process `{id}` has no input and no incoming trigger"))
            })
            .collect(),
        codes::ORPHAN_INT => orphan_internal_processes(map)
            .iter()
            .map(|id| {
                ctx.process_finding(
                    id,
                    format!("internally triggered process `{id}` is not part of any externally triggered process"),
                )
            })
            .collect(),
        codes::EMPTY_GROUP => evaluate_groups(map)
            .into_iter()
            .enumerate()
            .filter(|(_, g)| g.members.is_empty())
            .map(|(i, g)| Finding {
                subjects: vec![Ident::new(g.group.clone())],
                message: format!("group \"{}\" has no members", g.group),
                span: map.origins.groups.get(i).cloned().flatten(),
            })
            .collect(),
        codes::HYBRID_TRIG => ctx
            .classes
            .iter()
            .filter(|(_, c)| **c == TriggerClass::Hybrid)
            .map(|(id, _)| {
                ctx.process_finding(
                    id,
                    format!("process `{id}` is triggered both by external customers and internally"),
                )
            })
            .collect(),
        other => unreachable!("rule {other} has no check"),
    }
}

/// Runs every enabled rule. Diagnostics are ordered by rule code, then by
/// the identifiers they concern.
pub fn validate(map: &ProcessMap, config: &RuleConfig) -> ValidationReport {
    let ctx = Context {
        map,
        classes: classify_triggering(map),
    };
    let mut rules: Vec<&Rule> = CATALOG.iter().collect();
    rules.sort_by_key(|r| r.code);

    let mut diagnostics = Vec::new();
    let mut rules_run = Vec::new();
    for rule in rules {
        let Some(severity) = config.severity_of(rule) else {
            continue;
        };
        rules_run.push(rule.code.to_owned());
        let mut findings = check(rule.code, &ctx);
        findings.sort_by(|a, b| a.subjects.cmp(&b.subjects));
        diagnostics.extend(findings.into_iter().map(|f| {
            Diagnostic::new(severity, rule.code, f.message)
                .with_subjects(f.subjects.iter().map(|s| s.to_string()))
                .with_span(f.span)
        }));
    }

    let verdict = if diagnostics.iter().any(Diagnostic::is_error) {
        Verdict::Fail
    } else if diagnostics.iter().any(|d| d.severity == Severity::Warning) {
        Verdict::PassWithWarnings
    } else {
        Verdict::Pass
    };
    ValidationReport {
        verdict,
        rules_run,
        diagnostics,
    }
}

/// Codes of all diagnostics of one severity, for quick assertions.
pub fn codes_with(report: &ValidationReport, severity: Severity) -> BTreeSet<&str> {
    report
        .diagnostics
        .iter()
        .filter(|d| d.severity == severity)
        .map(|d| d.code.as_str())
        .collect()
}
