//! The `promap` command line.
//!
//! Diagnostics go to standard error, artifacts to standard output (or the
//! `-o` path). Exit status 0 means success, 1 means the run completed but
//! found errors or simulator violations, 2 means it could not complete.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::analysis::{analyze, AnalysisReport};
use crate::diagnostic::{Diagnostic, Severity};
use crate::dot::{export_dot, ColorBy};
use crate::dsl::{format, parse};
use crate::interchange::{export_interchange, load_interchange, Sections};
use crate::model::{assemble, ProcessMap};
use crate::sim::{simulate, EventKind, Scenario, Trace, DEFAULT_BUDGET};
use crate::wellformedness::{validate, RuleConfig, ValidationReport, Verdict};

pub const CONFIG_ENV: &str = "PROMAP_CONFIG";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum ExitStatus {
    Success,
    Failure,
    Error,
}

impl ExitStatus {
    pub fn code(self) -> u8 {
        match self {
            ExitStatus::Success => 0,
            ExitStatus::Failure => 1,
            ExitStatus::Error => 2,
        }
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "promap",
    version,
    about = "Check, analyze, simulate and export business process maps"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Validate one or more maps
    Check {
        #[arg(value_name = "FILE", required = true)]
        files: Vec<PathBuf>,
        /// Rule configuration file (`RULE = off|info|warning` lines)
        #[arg(long, value_name = "RULES")]
        config: Option<PathBuf>,
        /// Exit with status 1 when any warning is reported
        #[arg(long)]
        deny_warnings: bool,
        #[arg(long, value_enum, default_value_t = CheckFormat::Text)]
        format: CheckFormat,
    },
    /// Print derived structure of a map
    Analyze {
        #[arg(value_name = "FILE")]
        file: PathBuf,
        #[arg(long, value_enum, default_value_t = ReportKind::All)]
        report: ReportKind,
    },
    /// Run a scenario against the trigger and flow relations of a map
    Simulate {
        #[arg(value_name = "FILE")]
        file: PathBuf,
        #[arg(long, value_name = "SCENFILE")]
        scenario: PathBuf,
        #[arg(long, value_name = "N", default_value_t = DEFAULT_BUDGET,
              value_parser = clap::value_parser!(u64).range(1..))]
        max_steps: u64,
    },
    /// Export a map as an interchange document or DOT graph
    Export {
        #[arg(value_name = "FILE")]
        file: PathBuf,
        #[arg(long, value_enum)]
        format: ExportFormat,
        #[arg(long, value_enum)]
        color_by: Option<ColorChoice>,
        #[arg(short = 'o', value_name = "OUT")]
        output: Option<PathBuf>,
    },
    /// Print a map in canonical textual form
    Fmt {
        #[arg(value_name = "FILE")]
        file: PathBuf,
        #[arg(short = 'o', value_name = "OUT")]
        output: Option<PathBuf>,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum CheckFormat {
    Text,
    Interchange,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum ReportKind {
    Chains,
    Families,
    Groups,
    Classification,
    Orphans,
    All,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum ExportFormat {
    Interchange,
    Dot,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum ColorChoice {
    Category,
    Phase,
    TriggerClass,
}

impl From<ColorChoice> for ColorBy {
    fn from(c: ColorChoice) -> Self {
        match c {
            ColorChoice::Category => ColorBy::Category,
            ColorChoice::Phase => ColorBy::Phase,
            ColorChoice::TriggerClass => ColorBy::TriggerClass,
        }
    }
}

/// Output of one unit of work, written out in input order.
#[derive(Default)]
struct Outcome {
    out: Vec<u8>,
    err: Vec<u8>,
}

impl Outcome {
    fn diag(&mut self, file: &Path, d: &Diagnostic) {
        if d.span.is_some() {
            let _ = writeln!(self.err, "{d}");
        } else {
            let _ = writeln!(self.err, "{}: {d}", file.display());
        }
    }

    fn fail(&mut self, file: &Path, message: impl std::fmt::Display) -> ExitStatus {
        let _ = writeln!(self.err, "{}: error: {message}", file.display());
        ExitStatus::Error
    }
}

/// Reads and assembles a map. `.json` files are read as interchange
/// documents, anything else as `.promap` text.
fn load_map(path: &Path, o: &mut Outcome) -> Result<ProcessMap, ExitStatus> {
    let bytes = fs::read(path).map_err(|e| o.fail(path, e))?;
    if path.extension().is_some_and(|e| e == "json") {
        return load_interchange(&bytes).map_err(|diags| {
            for d in &diags {
                o.diag(path, d);
            }
            if diags.iter().all(|d| d.code.starts_with("E-")) {
                ExitStatus::Failure
            } else {
                ExitStatus::Error
            }
        });
    }
    let text = String::from_utf8(bytes).map_err(|_| o.fail(path, "file is not valid UTF-8"))?;
    let name = path.to_string_lossy();
    let draft = parse(&name, &text).map_err(|errs| {
        for e in &errs {
            o.diag(path, &e.to_diagnostic());
        }
        ExitStatus::Error
    })?;
    assemble(draft).map_err(|diags| {
        for d in &diags {
            o.diag(path, d);
        }
        ExitStatus::Failure
    })
}

/// Validates with default rules and reports errors; used before analyses
/// that need a structurally sound map.
fn require_sound(path: &Path, map: &ProcessMap, o: &mut Outcome) -> Result<(), ExitStatus> {
    let report = validate(map, &RuleConfig::default());
    if report.has_errors() {
        for d in report.diagnostics.iter().filter(|d| d.is_error()) {
            o.diag(path, d);
        }
        return Err(ExitStatus::Failure);
    }
    Ok(())
}

fn emit(artifact: &[u8], output: Option<&Path>, o: &mut Outcome) -> ExitStatus {
    match output {
        Some(path) => match fs::write(path, artifact) {
            Ok(()) => ExitStatus::Success,
            Err(e) => o.fail(path, e),
        },
        None => {
            o.out.extend_from_slice(artifact);
            ExitStatus::Success
        }
    }
}

fn check_file(
    path: &Path,
    config: &RuleConfig,
    deny_warnings: bool,
    format: CheckFormat,
) -> (ExitStatus, Outcome) {
    let mut o = Outcome::default();
    let map = match load_map(path, &mut o) {
        Ok(map) => map,
        Err(status) => return (status, o),
    };
    let report = validate(&map, config);
    for d in &report.diagnostics {
        o.diag(path, d);
    }
    match format {
        CheckFormat::Text => {
            let _ = writeln!(
                o.out,
                "{}: {} ({} errors, {} warnings, {} notes)",
                path.display(),
                verdict_text(report.verdict),
                report.count(Severity::Error),
                report.count(Severity::Warning),
                report.count(Severity::Info),
            );
        }
        CheckFormat::Interchange => {
            let sections = Sections {
                validation: Some(&report),
                ..Sections::default()
            };
            o.out.extend(export_interchange(&map, sections));
        }
    }
    let status = if fails(&report, deny_warnings) {
        ExitStatus::Failure
    } else {
        ExitStatus::Success
    };
    (status, o)
}

fn verdict_text(v: Verdict) -> &'static str {
    match v {
        Verdict::Pass => "pass",
        Verdict::PassWithWarnings => "pass with warnings",
        Verdict::Fail => "fail",
    }
}

fn render_report(report: &AnalysisReport, kind: ReportKind) -> String {
    let mut s = String::new();
    let all = kind == ReportKind::All;
    let ids = |set: &std::collections::BTreeSet<crate::model::Ident>| {
        if set.is_empty() {
            "(none)".to_owned()
        } else {
            set.iter()
                .map(|i| i.as_str())
                .collect::<Vec<_>>()
                .join(", ")
        }
    };
    if all || kind == ReportKind::Classification {
        s.push_str("classification:\n");
        for (id, class) in &report.classification {
            let _ = writeln!(s, "  {id}: {class}");
        }
    }
    if all || kind == ReportKind::Chains {
        s.push_str("chains:\n");
        for chain in &report.chains {
            let _ = writeln!(s, "  {}: {}", chain.id, ids(&chain.members));
            for e in &chain.edges {
                let arrow = match e.kind {
                    crate::analysis::OrderingKind::Trigger => "->",
                    crate::analysis::OrderingKind::Flow => "~>",
                };
                let _ = writeln!(s, "    {} {arrow} {}", e.src, e.dst);
            }
        }
    }
    if all || kind == ReportKind::Families {
        s.push_str("families:\n");
        for f in &report.families {
            let _ = writeln!(s, "  {}: {}", f.standard, ids(&f.variants));
        }
    }
    if all || kind == ReportKind::Groups {
        s.push_str("groups:\n");
        for g in &report.groups {
            let _ = writeln!(s, "  {}: {}", g.group, ids(&g.members));
        }
    }
    if all || kind == ReportKind::Orphans {
        let _ = writeln!(s, "orphans: {}", ids(&report.orphans));
    }
    s
}

/// One line per event: step, kind, instance and, where relevant, the peer.
pub fn render_trace(trace: &Trace) -> String {
    let mut s = String::new();
    for e in &trace.events {
        let _ = write!(
            s,
            "{:>6} {:<13} {}#{}",
            e.step, e.kind, e.process, e.instance
        );
        match (e.kind, e.peer) {
            (EventKind::FlowDelivery, Some(p)) => {
                let _ = write!(s, " from #{p}");
            }
            (EventKind::Instantiate, Some(p)) => {
                let _ = write!(s, " by #{p}");
            }
            _ => {}
        }
        if let Some(label) = &e.label {
            let _ = write!(s, " \"{label}\"");
        }
        s.push('\n');
    }
    s
}

fn load_config(path: Option<&Path>, o: &mut Outcome) -> Result<RuleConfig, ExitStatus> {
    let env_path = std::env::var_os(CONFIG_ENV).map(PathBuf::from);
    let Some(path) = path.map(Path::to_path_buf).or(env_path) else {
        return Ok(RuleConfig::default());
    };
    let text = fs::read_to_string(&path).map_err(|e| o.fail(&path, e))?;
    RuleConfig::parse(&text).map_err(|e| o.fail(&path, e))
}

fn run(command: Command) -> (ExitStatus, Vec<Outcome>) {
    let mut o = Outcome::default();
    let status = match command {
        Command::Check {
            files,
            config,
            deny_warnings,
            format,
        } => {
            let config = match load_config(config.as_deref(), &mut o) {
                Ok(c) => c,
                Err(status) => return (status, vec![o]),
            };
            let results: Vec<(ExitStatus, Outcome)> = std::thread::scope(|scope| {
                let handles: Vec<_> = files
                    .iter()
                    .map(|f| {
                        let config = &config;
                        scope.spawn(move || check_file(f, config, deny_warnings, format))
                    })
                    .collect();
                handles
                    .into_iter()
                    .map(|h| h.join().expect("check worker panicked"))
                    .collect()
            });
            let status = results
                .iter()
                .map(|(s, _)| *s)
                .max()
                .unwrap_or(ExitStatus::Success);
            return (status, results.into_iter().map(|(_, o)| o).collect());
        }
        Command::Analyze { file, report } => (|| {
            let map = load_map(&file, &mut o)?;
            require_sound(&file, &map, &mut o)?;
            let analysis = analyze(&map).map_err(|e| o.fail(&file, e))?;
            o.out.extend(render_report(&analysis, report).into_bytes());
            Ok(ExitStatus::Success)
        })()
        .unwrap_or_else(|s| s),
        Command::Simulate {
            file,
            scenario,
            max_steps,
        } => (|| {
            let map = load_map(&file, &mut o)?;
            require_sound(&file, &map, &mut o)?;
            let text = fs::read_to_string(&scenario).map_err(|e| o.fail(&scenario, e))?;
            let scenario_value = Scenario::parse(&text).map_err(|e| o.fail(&scenario, e))?;
            let trace =
                simulate(&map, &scenario_value, max_steps).map_err(|e| o.fail(&scenario, e))?;
            o.out.extend(render_trace(&trace).into_bytes());
            for v in &trace.violations {
                let kind = serde_json::to_value(v.kind).expect("violation kinds serialize");
                let _ = writeln!(
                    o.err,
                    "{}: violation[{}] at step {}: {}",
                    file.display(),
                    kind.as_str().unwrap_or_default(),
                    v.step,
                    v.detail
                );
            }
            let _ = writeln!(
                o.err,
                "{}: {} steps, {} violations",
                file.display(),
                trace.steps_used,
                trace.violations.len()
            );
            Ok(if trace.violations.is_empty() {
                ExitStatus::Success
            } else {
                ExitStatus::Failure
            })
        })()
        .unwrap_or_else(|s| s),
        Command::Export {
            file,
            format,
            color_by,
            output,
        } => (|| {
            let map = load_map(&file, &mut o)?;
            let artifact = match format {
                ExportFormat::Interchange => export_interchange(&map, Sections::default()),
                ExportFormat::Dot => export_dot(&map, color_by.map(ColorBy::from)).into_bytes(),
            };
            Ok(emit(&artifact, output.as_deref(), &mut o))
        })()
        .unwrap_or_else(|s| s),
        Command::Fmt { file, output } => (|| {
            let map = load_map(&file, &mut o)?;
            Ok(emit(format(&map).as_bytes(), output.as_deref(), &mut o))
        })()
        .unwrap_or_else(|s| s),
    };
    (status, vec![o])
}

/// Runs the command line with `argv` (including the program name) and
/// writes to the given streams.
pub fn run_cli<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> ExitStatus
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let rendered = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = stdout.write_all(rendered.as_bytes());
                    ExitStatus::Success
                }
                _ => {
                    let _ = stderr.write_all(rendered.as_bytes());
                    ExitStatus::Error
                }
            };
        }
    };
    let (status, outcomes) = run(cli.command);
    for o in outcomes {
        let _ = stdout.write_all(&o.out);
        let _ = stderr.write_all(&o.err);
    }
    let _ = stdout.flush();
    status
}

/// Whether a validation report makes `check` exit with status 1.
fn fails(report: &ValidationReport, deny_warnings: bool) -> bool {
    report.has_errors() || (deny_warnings && report.count(Severity::Warning) > 0)
}
