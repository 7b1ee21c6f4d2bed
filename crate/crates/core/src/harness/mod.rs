//! Scenario runner, counter benchmarks and static validation.

mod bench;
pub mod par;
mod report;
mod scenario;
mod validate;

use thiserror::Error;

pub use bench::{bench, sweep, BenchRow, BenchStrategy, Workload, CSV_HEADER};
pub use report::{ElementReport, Report, REPORT_SCHEMA};
pub use scenario::{resolve_target, Scenario, Step};
pub use validate::{validate, Diagnostic, Severity};

use crate::dom::{parse_fragment, Document, DomError, NodeId, Viewport};
use crate::elq::{Elq, ElqConfig, ElqError, MAX_SETTLE_ROUNDS};
use crate::layout::{Mutation, Page};
use crate::plugins::use_default_plugins;
use crate::resize::Strategy;
use crate::style::{CssError, Stylesheet};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HarnessError {
    #[error("document: {0}")]
    Dom(#[from] DomError),
    #[error("stylesheet: {0}")]
    Css(#[from] CssError),
    #[error("scenario: {0}")]
    Scenario(String),
    #[error("target: {0}")]
    Target(String),
    #[error("bench: {0}")]
    Bench(String),
    #[error(transparent)]
    Elq(#[from] ElqError),
}

impl HarnessError {
    /// Bad input, as opposed to a failure while running valid input.
    pub fn is_input_error(&self) -> bool {
        !matches!(self, HarnessError::Elq(_))
    }
}

#[derive(Clone, Debug)]
pub struct Config {
    pub strategy: Strategy,
    pub max_settle_rounds: usize,
    pub grid: bool,
    pub record_passes: bool,
}

impl Default for Config {
    fn default() -> Self {
        Config { strategy: Strategy::Scroll, max_settle_rounds: MAX_SETTLE_ROUNDS, grid: true, record_passes: false }
    }
}

impl Config {
    fn elq_config(&self) -> ElqConfig {
        ElqConfig {
            strategy: self.strategy,
            max_settle_rounds: self.max_settle_rounds,
            record_passes: self.record_passes,
            ..ElqConfig::default()
        }
    }
}

/// An instance with the bundled plugins registered.
pub fn build_engine(doc: Document, sheet: Stylesheet, config: &Config) -> Result<Elq, HarnessError> {
    let mut elq = Elq::new(Page::new(doc, sheet), config.elq_config());
    use_default_plugins(&mut elq, config.grid)?;
    Ok(elq)
}

/// Elements activated on load: everything carrying `elq`, plus grid
/// containers when the grid plugin is on.
pub fn bootstrap_targets(doc: &Document, from: NodeId, grid: bool) -> Vec<NodeId> {
    doc.descendants_inclusive(from)
        .into_iter()
        .filter(|id| {
            doc.get(*id)
                .is_some_and(|e| !e.injected && (e.has_elq_attribute("elq") || (grid && e.has_class("container"))))
        })
        .collect()
}

/// Parses inputs, activates, and settles.
pub fn load(doc_text: &str, css_text: &str, config: &Config) -> Result<Elq, HarnessError> {
    let doc = Document::parse(doc_text)?;
    let sheet = Stylesheet::parse(css_text)?;
    start(doc, sheet, config)
}

pub fn start(doc: Document, sheet: Stylesheet, config: &Config) -> Result<Elq, HarnessError> {
    let targets = bootstrap_targets(&doc, doc.root(), config.grid);
    let mut elq = build_engine(doc, sheet, config)?;
    // Activation failures are kept as warnings on the instance.
    let _ = elq.activate(&targets);
    elq.settle()?;
    Ok(elq)
}

/// Applies one step and settles.
pub fn apply_step(elq: &mut Elq, step: &Step, config: &Config) -> Result<(), HarnessError> {
    let doc = elq.page().doc();
    match step {
        Step::SetViewport { width, height } => {
            let height = height.unwrap_or(doc.viewport.height);
            elq.mutate(Mutation::SetViewport(Viewport { width: *width, height }))?;
        }
        Step::SetStyle { target, property, value } => {
            let el = resolve_target(doc, target)?;
            elq.mutate(Mutation::SetStyle { el, property: property.clone(), value: value.clone() })?;
        }
        Step::AddSubtree { parent, markup } => {
            let parent = resolve_target(doc, parent)?;
            let subtree = parse_fragment(markup)?;
            let mut roots = Vec::new();
            for node in subtree {
                let out = elq.mutate(Mutation::InsertSubtree { parent, subtree: vec![node], injected: false })?;
                roots.extend(out.inserted);
            }
            let doc = elq.page().doc();
            let targets: Vec<NodeId> = roots.iter().flat_map(|r| bootstrap_targets(doc, *r, config.grid)).collect();
            let _ = elq.activate(&targets);
        }
        Step::Remove { target } => {
            let el = resolve_target(doc, target)?;
            elq.mutate(Mutation::Remove { el })?;
        }
        Step::Settle => {}
    }
    elq.settle()?;
    Ok(())
}

pub fn run(doc_text: &str, css_text: &str, scenario: &Scenario, config: &Config) -> Result<Report, HarnessError> {
    let mut elq = load(doc_text, css_text, config)?;
    for step in &scenario.steps {
        apply_step(&mut elq, step, config)?;
    }
    Ok(Report::capture(&elq))
}

/// Independent runs share nothing, so they go through the parallel map.
pub fn run_many(jobs: &[(String, String, Scenario)], config: &Config) -> Vec<Result<Report, HarnessError>> {
    par::map(jobs, |(doc, css, scenario)| run(doc, css, scenario, config))
}
