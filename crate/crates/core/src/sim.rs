//! Executes trigger and flow relations over atomic process instances.
//!
//! Instances live in a FIFO work queue. Taking an instance off the queue
//! makes it act, fire its outgoing triggers (each creating and starting a
//! new instance), deliver its outgoing flows to the oldest started instance
//! of each target, and complete. A flow never creates an instance; when no
//! target instance is running the delivery is recorded as a violation.

use std::collections::{BTreeMap, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Ident, ProcessMap, Relation};

pub const DEFAULT_BUDGET: u64 = 10_000;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stimulus {
    pub process: Ident,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Scenario {
    pub stimuli: Vec<Stimulus>,
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("line {line}: {message}")]
pub struct ScenarioError {
    pub line: usize,
    pub message: String,
}

impl Scenario {
    pub fn new<I, S>(processes: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<Ident>,
    {
        Self {
            stimuli: processes
                .into_iter()
                .map(|p| Stimulus {
                    process: p.into(),
                    label: None,
                })
                .collect(),
        }
    }

    /// One `start <process> [label]` per line; blank lines and `#` comments
    /// are ignored. A label may be quoted.
    pub fn parse(text: &str) -> Result<Self, ScenarioError> {
        let mut stimuli = Vec::new();
        for (index, raw) in text.lines().enumerate() {
            let line = index + 1;
            let content = raw.trim();
            if content.is_empty() || content.starts_with('#') {
                continue;
            }
            let err = |message: String| ScenarioError { line, message };
            let rest = content
                .strip_prefix("start")
                .filter(|r| r.is_empty() || r.starts_with(char::is_whitespace))
                .ok_or_else(|| {
                    err(format!(
                        "expected `start <process> [label]`, found `{content}`"
                    ))
                })?
                .trim_start();
            let (process, label) = match rest.split_once(char::is_whitespace) {
                Some((p, l)) => (p, Some(l.trim())),
                None => (rest, None),
            };
            if !Ident::is_well_formed(process) {
                return Err(err(format!("`{process}` is not a process identifier")));
            }
            let label = label.filter(|l| !l.is_empty()).map(|l| {
                l.strip_prefix('"')
                    .and_then(|l| l.strip_suffix('"'))
                    .unwrap_or(l)
                    .to_owned()
            });
            stimuli.push(Stimulus {
                process: process.into(),
                label,
            });
        }
        Ok(Scenario { stimuli })
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SimError {
    #[error("scenario starts unknown process `{0}`")]
    UnknownProcess(String),
    #[error("step budget must be positive")]
    ZeroBudget,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Lifecycle {
    Created,
    Started,
    Acted,
    Completed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceState {
    pub instance: u64,
    pub process: Ident,
    pub lifecycle: Lifecycle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Instantiate,
    Start,
    Act,
    FlowDelivery,
    Complete,
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EventKind::Instantiate => "instantiate",
            EventKind::Start => "start",
            EventKind::Act => "act",
            EventKind::FlowDelivery => "flow-delivery",
            EventKind::Complete => "complete",
        })
    }
}

/// One step of a run. `peer` is the sending instance of a flow delivery and
/// the triggering instance of an instantiation; stimulus instantiations have
/// no peer but carry the stimulus label, if any.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceEvent {
    pub step: u64,
    pub kind: EventKind,
    pub process: Ident,
    pub instance: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub peer: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    FlowWithoutActiveTarget,
    StepBudgetExhausted,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub detail: String,
    pub step: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trace {
    pub steps_used: u64,
    pub events: Vec<TraceEvent>,
    pub violations: Vec<Violation>,
}

impl Trace {
    pub fn count(&self, kind: ViolationKind) -> usize {
        self.violations.iter().filter(|v| v.kind == kind).count()
    }
}

struct Halt;

struct Run<'m> {
    budget: u64,
    trace: Trace,
    instances: Vec<InstanceState>,
    triggers: BTreeMap<&'m Ident, Vec<&'m Ident>>,
    flows: BTreeMap<&'m Ident, Vec<&'m Ident>>,
}

impl Run<'_> {
    /// Records one event; halts the run once the budget is used up.
    fn emit(
        &mut self,
        kind: EventKind,
        instance: u64,
        peer: Option<u64>,
        label: Option<String>,
    ) -> Result<(), Halt> {
        self.trace.steps_used += 1;
        let step = self.trace.steps_used;
        let state = &mut self.instances[(instance - 1) as usize];
        match kind {
            EventKind::Instantiate => state.lifecycle = Lifecycle::Created,
            EventKind::Start => state.lifecycle = Lifecycle::Started,
            EventKind::Act => state.lifecycle = Lifecycle::Acted,
            EventKind::Complete => state.lifecycle = Lifecycle::Completed,
            EventKind::FlowDelivery => {}
        }
        self.trace.events.push(TraceEvent {
            step,
            kind,
            process: state.process.clone(),
            instance,
            peer,
            label,
        });
        if step == self.budget {
            self.trace.violations.push(Violation {
                kind: ViolationKind::StepBudgetExhausted,
                detail: format!("step budget of {} exhausted", self.budget),
                step,
            });
            return Err(Halt);
        }
        Ok(())
    }

    /// Instantiates and starts a new instance of `process`.
    fn spawn(
        &mut self,
        process: &Ident,
        cause: Option<u64>,
        label: Option<String>,
        queue: &mut VecDeque<u64>,
    ) -> Result<(), Halt> {
        let instance = self.instances.len() as u64 + 1;
        self.instances.push(InstanceState {
            instance,
            process: process.clone(),
            lifecycle: Lifecycle::Created,
        });
        queue.push_back(instance);
        self.emit(EventKind::Instantiate, instance, cause, label)?;
        self.emit(EventKind::Start, instance, None, None)
    }

    fn step(&mut self, instance: u64, queue: &mut VecDeque<u64>) -> Result<(), Halt> {
        let process = self.instances[(instance - 1) as usize].process.clone();
        self.emit(EventKind::Act, instance, None, None)?;
        let triggers = self.triggers.get(&process).cloned().unwrap_or_default();
        for target in triggers {
            self.spawn(target, Some(instance), None, queue)?;
        }
        let flows = self.flows.get(&process).cloned().unwrap_or_default();
        for target in flows {
            let receiver = self
                .instances
                .iter()
                .find(|s| {
                    &s.process == target
                        && matches!(s.lifecycle, Lifecycle::Started | Lifecycle::Acted)
                })
                .map(|s| s.instance);
            match receiver {
                Some(receiver) => self.emit(EventKind::FlowDelivery, receiver, Some(instance), None)?,
                None => self.trace.violations.push(Violation {
                    kind: ViolationKind::FlowWithoutActiveTarget,
                    detail: format!(
                        "flow {process} ~> {target} from instance {instance} found no started instance of {target}"
                    ),
                    step: self.trace.steps_used,
                }),
            }
        }
        self.emit(EventKind::Complete, instance, None, None)
    }
}

/// Runs a scenario for at most `budget` steps; every event takes one step.
/// Reaching the budget records [`ViolationKind::StepBudgetExhausted`].
pub fn simulate(map: &ProcessMap, scenario: &Scenario, budget: u64) -> Result<Trace, SimError> {
    if budget == 0 {
        return Err(SimError::ZeroBudget);
    }
    if let Some(s) = scenario
        .stimuli
        .iter()
        .find(|s| !map.processes.contains_key(&s.process))
    {
        return Err(SimError::UnknownProcess(s.process.to_string()));
    }

    let mut triggers: BTreeMap<&Ident, Vec<&Ident>> = BTreeMap::new();
    let mut flows: BTreeMap<&Ident, Vec<&Ident>> = BTreeMap::new();
    for r in &map.relations {
        match r {
            Relation::Trigger { src, dst } => triggers.entry(src).or_default().push(dst),
            Relation::Flow { src, dst } => flows.entry(src).or_default().push(dst),
            _ => {}
        }
    }
    let mut run = Run {
        budget,
        trace: Trace::default(),
        instances: Vec::new(),
        triggers,
        flows,
    };
    let mut queue = VecDeque::new();
    let _ = (|| -> Result<(), Halt> {
        for stimulus in &scenario.stimuli {
            run.spawn(&stimulus.process, None, stimulus.label.clone(), &mut queue)?;
        }
        while let Some(instance) = queue.pop_front() {
            run.step(instance, &mut queue)?;
        }
        Ok(())
    })();
    Ok(run.trace)
}

/// True iff every start of a `dst` instance comes after some `src` instance
/// has acted.
pub fn check_ordering(trace: &Trace, src: &str, dst: &str) -> bool {
    let first_act = trace
        .events
        .iter()
        .filter(|e| e.kind == EventKind::Act && e.process.as_str() == src)
        .map(|e| e.step)
        .min();
    trace
        .events
        .iter()
        .filter(|e| e.kind == EventKind::Start && e.process.as_str() == dst)
        .all(|e| first_act.is_some_and(|act| act < e.step))
}
