//! The element query instance: plugin registry, activation and update
//! flows, events and cycle detection.
//!
//! Everything runs on the instance's own event loop. Updates go through the
//! batch processor on two levels above the detector levels, so a batch of
//! updates reads every size before any state is applied.

mod breakpoint;
mod cycle;
mod plugin;

use std::collections::hash_map::DefaultHasher;
use std::collections::BTreeMap;
use std::hash::{Hash, Hasher};

use thiserror::Error;

pub use breakpoint::{compute_states, merge_breakpoints, Breakpoint, BreakpointState, Dimension, Side, StateSet};
pub use cycle::{CycleHistory, MAX_SETTLE_ROUNDS};
use plugin::Request;
pub use plugin::{BehaviorProps, Hook, HookCx, InstanceInfo, PluginApi, PluginDefinition, PluginError, PluginOptions};

use crate::batch::{self, add, BatchError, BatchHost, BatchProcessor, PageAccess};
use crate::dom::NodeId;
use crate::layout::{
    run_tick, EventLoop, LayoutBox, LayoutCounters, LayoutError, Mutation, MutationOutcome, Page, PassRecord, Scheduler,
};
use crate::resize::{self, DetectorHost, DetectorRegistry, ResizeError, ResizeNotice, Strategy};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub const LEVEL_UPDATE_READ: i64 = 3;
pub const LEVEL_UPDATE_COMMIT: i64 = 4;

pub const W_CYCLE_DETECTED: &str = "W_CYCLE_DETECTED";
pub const W_PLUGIN_HOOK_FAILED: &str = "W_PLUGIN_HOOK_FAILED";
pub const W_DETECTOR_FAILED: &str = "W_DETECTOR_FAILED";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ElqError {
    #[error("plugin {0} is already registered")]
    DuplicatePlugin(String),
    #[error("plugin {0} is not compatible with this instance")]
    IncompatiblePlugin(String),
    #[error("unknown element {0}")]
    UnknownElement(NodeId),
    #[error("element {0} is not activated")]
    NotActivated(NodeId),
    #[error("plugin {plugin} failed in {hook}: {cause}")]
    PluginHookFailed { plugin: String, hook: Hook, cause: String },
    #[error("no quiescence after {ticks} ticks")]
    NonQuiescent { ticks: usize },
    #[error(transparent)]
    Layout(#[from] LayoutError),
    #[error(transparent)]
    Batch(#[from] BatchError),
    #[error(transparent)]
    Resize(#[from] ResizeError),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Warning {
    pub code: String,
    pub element: Option<NodeId>,
    pub message: String,
}

#[derive(Clone, Debug)]
pub struct ElqConfig {
    pub strategy: Strategy,
    pub max_settle_rounds: usize,
    /// Tick budget for one [`Elq::settle`] call.
    pub max_ticks: usize,
    /// Keep every committed layout pass for inspection.
    pub record_passes: bool,
}

impl Default for ElqConfig {
    fn default() -> Self {
        ElqConfig {
            strategy: Strategy::Scroll,
            max_settle_rounds: MAX_SETTLE_ROUNDS,
            max_ticks: 2000,
            record_passes: false,
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct ElementRecord {
    pub applied: Option<StateSet>,
    /// Context fingerprint the applied states were computed under.
    applied_context: u64,
    pending: Option<(StateSet, u64)>,
    update_queued: bool,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ElqStats {
    pub resize_events: u64,
    pub state_changes: u64,
    pub cycles_detected: u64,
    /// Ticks spent inside [`Elq::settle`].
    pub settle_rounds: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EventKind {
    Resize,
    BreakpointStatesChanged,
}

#[derive(Clone, Debug, PartialEq)]
pub enum ElqEvent {
    Resize { element: NodeId, width: f64, height: f64 },
    BreakpointStatesChanged { element: NodeId, states: StateSet },
}

impl ElqEvent {
    pub fn kind(&self) -> EventKind {
        match self {
            ElqEvent::Resize { .. } => EventKind::Resize,
            ElqEvent::BreakpointStatesChanged { .. } => EventKind::BreakpointStatesChanged,
        }
    }

    pub fn element(&self) -> NodeId {
        match self {
            ElqEvent::Resize { element, .. } | ElqEvent::BreakpointStatesChanged { element, .. } => *element,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Subscription(u64);

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UpdateOutcome {
    Unchanged,
    Applied,
    CycleAborted,
    /// Not rendered, so there is no size to compare against.
    Hidden,
}

type Listener = Box<dyn FnMut(&ElqEvent)>;

struct RegisteredPlugin {
    name: String,
    api: Box<dyn PluginApi>,
}

pub struct Elq {
    page: Page,
    scheduler: Scheduler<Elq>,
    batch: BatchProcessor<Elq>,
    detectors: DetectorRegistry,
    plugins: Vec<RegisteredPlugin>,
    records: BTreeMap<NodeId, ElementRecord>,
    cycles: CycleHistory,
    listeners: Vec<(Subscription, EventKind, Listener)>,
    next_subscription: u64,
    warnings: Vec<Warning>,
    errors: Vec<ElqError>,
    requests: Vec<Request>,
    stats: ElqStats,
    config: ElqConfig,
    pass_log: Vec<PassRecord>,
}

impl Elq {
    pub fn new(page: Page, config: ElqConfig) -> Self {
        Elq {
            page,
            scheduler: Scheduler::new(),
            batch: BatchProcessor::new(),
            detectors: DetectorRegistry::new(),
            plugins: Vec::new(),
            records: BTreeMap::new(),
            cycles: CycleHistory::new(config.max_settle_rounds),
            listeners: Vec::new(),
            next_subscription: 0,
            warnings: Vec::new(),
            errors: Vec::new(),
            requests: Vec::new(),
            stats: ElqStats::default(),
            config,
            pass_log: Vec::new(),
        }
    }

    pub fn info(&self) -> InstanceInfo {
        InstanceInfo {
            version: VERSION,
            strategy: self.config.strategy,
            plugins: self.plugins.iter().map(|p| p.name.clone()).collect(),
        }
    }

    pub fn use_plugin(&mut self, def: &dyn PluginDefinition, options: &PluginOptions) -> Result<(), ElqError> {
        let name = def.name().to_string();
        if self.plugins.iter().any(|p| p.name == name) {
            return Err(ElqError::DuplicatePlugin(name));
        }
        let info = self.info();
        if !def.is_compatible(&info) {
            return Err(ElqError::IncompatiblePlugin(name));
        }
        let api = def.make(&info, options);
        self.plugins.push(RegisteredPlugin { name, api });
        Ok(())
    }

    pub fn plugin_names(&self) -> Vec<&str> {
        self.plugins.iter().map(|p| p.name.as_str()).collect()
    }

    pub fn page(&self) -> &Page {
        &self.page
    }

    pub fn counters(&self) -> LayoutCounters {
        self.page.counters()
    }

    pub fn detectors(&self) -> &DetectorRegistry {
        &self.detectors
    }

    pub fn config(&self) -> &ElqConfig {
        &self.config
    }

    pub fn stats(&self) -> ElqStats {
        self.stats
    }

    pub fn warnings(&self) -> &[Warning] {
        &self.warnings
    }

    /// Failures from asynchronous work (batched jobs, deferred hooks).
    pub fn errors(&self) -> &[ElqError] {
        &self.errors
    }

    /// Committed layout passes, when `record_passes` is on.
    pub fn pass_log(&self) -> &[PassRecord] {
        &self.pass_log
    }

    pub fn cycle_history(&self) -> &CycleHistory {
        &self.cycles
    }

    pub fn is_activated(&self, el: NodeId) -> bool {
        self.records.contains_key(&el)
    }

    pub fn activated(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.records.keys().copied()
    }

    pub fn applied_states(&self, el: NodeId) -> Option<&StateSet> {
        self.records.get(&el).and_then(|r| r.applied.as_ref())
    }

    pub fn props(&self, el: NodeId) -> BehaviorProps {
        self.page.doc().get(el).map(|e| e.elq).unwrap_or_default()
    }

    pub fn on(&mut self, kind: EventKind, listener: impl FnMut(&ElqEvent) + 'static) -> Subscription {
        let sub = Subscription(self.next_subscription);
        self.next_subscription += 1;
        self.listeners.push((sub, kind, Box::new(listener)));
        sub
    }

    pub fn off(&mut self, sub: Subscription) -> bool {
        let before = self.listeners.len();
        self.listeners.retain(|(s, _, _)| *s != sub);
        self.listeners.len() != before
    }

    /// Activates elements. Every element is attempted; the first failure
    /// is returned after the rest have been processed.
    pub fn activate(&mut self, elements: &[NodeId]) -> Result<(), ElqError> {
        let mut first = None;
        for &el in elements {
            if let Err(e) = self.activate_one(el) {
                self.note_hook_failure(&e);
                first.get_or_insert(e);
            }
        }
        self.process_requests();
        self.deliver_passes();
        first.map_or(Ok(()), Err)
    }

    fn activate_one(&mut self, el: NodeId) -> Result<(), ElqError> {
        if !self.page.doc().contains(el) {
            return Err(ElqError::UnknownElement(el));
        }
        if self.records.contains_key(&el) {
            return Ok(());
        }
        self.records.insert(el, ElementRecord::default());
        *self.page.behavior_mut(el)? = BehaviorProps::default();

        let extras = match self.call_plugins(Hook::GetElements, |p, cx| p.get_elements(cx, el)) {
            Ok(lists) => lists,
            Err(e) => {
                self.rollback(el);
                return Err(e);
            }
        };
        for extra in extras.into_iter().flatten().filter(|x| *x != el) {
            if let Err(e) = self.activate_one(extra) {
                self.note_hook_failure(&e);
            }
        }
        if let Err(e) = self.call_plugins(Hook::Activate, |p, cx| p.activate(cx, el)) {
            self.rollback(el);
            return Err(e);
        }

        let props = self.props(el);
        if props.resize_detection && self.detectors.get(el).is_none() {
            let installed = match self.config.strategy {
                Strategy::Object => resize::install_object(self, el),
                Strategy::Scroll => resize::install_scroll(self, el),
            };
            if let Err(e) = installed {
                self.warn(W_DETECTOR_FAILED, Some(el), e.to_string());
            }
        }
        if props.update_breakpoints {
            self.schedule_update(el)?;
        }
        Ok(())
    }

    fn rollback(&mut self, el: NodeId) {
        self.records.remove(&el);
        if let Ok(props) = self.page.behavior_mut(el) {
            *props = BehaviorProps::default();
        }
    }

    /// Runs the update flow right away, reading the size synchronously.
    pub fn update(&mut self, el: NodeId) -> Result<UpdateOutcome, ElqError> {
        if !self.records.contains_key(&el) {
            return Err(ElqError::NotActivated(el));
        }
        if !self.props(el).update_breakpoints {
            return Ok(UpdateOutcome::Unchanged);
        }
        let outcome = match self.compute(el)? {
            Some((states, context)) => self.commit(el, states, context)?,
            None => UpdateOutcome::Hidden,
        };
        self.deliver_passes();
        Ok(outcome)
    }

    /// Queues the update flow on the batch processor: sizes are read on one
    /// level and states applied on the next. Queuing twice before the flush
    /// is a no-op.
    pub fn schedule_update(&mut self, el: NodeId) -> Result<(), ElqError> {
        let rec = self.records.get_mut(&el).ok_or(ElqError::NotActivated(el))?;
        if rec.update_queued {
            return Ok(());
        }
        rec.update_queued = true;
        add(self, LEVEL_UPDATE_READ, move |e: &mut Elq| {
            match e.compute(el) {
                Ok(states) => {
                    if let Some(rec) = e.records.get_mut(&el) {
                        rec.pending = states;
                    }
                }
                Err(err) => e.fail(err),
            }
            Ok(())
        })?;
        add(self, LEVEL_UPDATE_COMMIT, move |e: &mut Elq| {
            let Some(rec) = e.records.get_mut(&el) else { return Ok(()) };
            rec.update_queued = false;
            if let Some((states, context)) = rec.pending.take() {
                if let Err(err) = e.commit(el, states, context) {
                    e.fail(err);
                }
            }
            Ok(())
        })?;
        Ok(())
    }

    /// Current breakpoint states and the context they were computed in, or
    /// `None` for a hidden element.
    fn compute(&mut self, el: NodeId) -> Result<Option<(StateSet, u64)>, ElqError> {
        if !self.records.contains_key(&el) {
            return Err(ElqError::NotActivated(el));
        }
        let lists = self.call_plugins(Hook::GetBreakpoints, |p, cx| p.get_breakpoints(cx, el))?;
        let b = match self.page.read_size(el) {
            Ok(b) => b,
            Err(LayoutError::DisplayNone(_)) => return Ok(None),
            Err(e) => return Err(e.into()),
        };
        let root = self.page.doc().root_font_size;
        let merged = merge_breakpoints(lists, b.font_size, root);
        let states = compute_states(&merged, b.width, b.height, b.font_size, root);
        Ok(Some((states, self.context_fingerprint(el))))
    }

    /// What an element's size depends on from outside: the containing box
    /// and the classes of its ancestors.
    fn context_fingerprint(&self, el: NodeId) -> u64 {
        let doc = self.page.doc();
        let mut h = DefaultHasher::new();
        let parent = doc.get(el).and_then(|e| e.parent);
        let (w, hgt) = match parent.and_then(|p| self.page.layout().committed_box(p)) {
            Some(b) => b.size(),
            None => (doc.viewport.width, doc.viewport.height),
        };
        w.to_bits().hash(&mut h);
        hgt.to_bits().hash(&mut h);
        for a in doc.ancestors(el) {
            if let Some(e) = doc.get(a) {
                e.classes.hash(&mut h);
            }
        }
        h.finish()
    }

    fn commit(&mut self, el: NodeId, states: StateSet, context: u64) -> Result<UpdateOutcome, ElqError> {
        let rec = self.records.get(&el).ok_or(ElqError::NotActivated(el))?;
        if rec.applied.as_ref() == Some(&states) {
            return Ok(UpdateOutcome::Unchanged);
        }
        let previous = rec.applied.clone();
        let previous_context = rec.applied_context;
        let props = self.props(el);
        if props.cycle_detection {
            if let Some(prev) = &previous {
                self.cycles.seed(el, prev, previous_context);
            }
            if self.cycles.detect_cycle_in(el, &states, context) {
                self.stats.cycles_detected += 1;
                let kept = previous.map_or_else(|| "no states".to_string(), |p| p.to_string());
                self.warn(
                    W_CYCLE_DETECTED,
                    Some(el),
                    format!("style cycle on {el}: {states} was already applied; keeping {kept}"),
                );
                return Ok(UpdateOutcome::CycleAborted);
            }
        }
        if props.apply_breakpoint_states {
            self.call_plugins(Hook::ApplyBreakpointStates, |p, cx| p.apply_breakpoint_states(cx, el, &states))?;
        }
        if let Some(rec) = self.records.get_mut(&el) {
            rec.applied_context = context;
        }
        self.record_applied(el, states);
        self.process_requests();
        Ok(UpdateOutcome::Applied)
    }

    fn record_applied(&mut self, el: NodeId, states: StateSet) {
        if let Some(rec) = self.records.get_mut(&el) {
            rec.applied = Some(states.clone());
        }
        self.stats.state_changes += 1;
        self.emit(ElqEvent::BreakpointStatesChanged { element: el, states });
    }

    /// Applies states that plugins forwarded to other elements (mirrors).
    fn process_requests(&mut self) {
        while !self.requests.is_empty() {
            for Request::ApplyStates { to, states } in std::mem::take(&mut self.requests) {
                if !self.page.doc().contains(to) {
                    continue;
                }
                let Some(rec) = self.records.get(&to) else { continue };
                if rec.applied.as_ref() == Some(&states) {
                    continue;
                }
                if self.props(to).apply_breakpoint_states {
                    let applied = self
                        .call_plugins(Hook::ApplyBreakpointStates, |p, cx| p.apply_breakpoint_states(cx, to, &states));
                    if let Err(e) = applied {
                        self.fail(e);
                        continue;
                    }
                }
                self.record_applied(to, states);
            }
        }
    }

    fn call_plugins<T>(
        &mut self,
        hook: Hook,
        mut f: impl FnMut(&mut dyn PluginApi, &mut HookCx<'_>) -> Result<T, PluginError>,
    ) -> Result<Vec<T>, ElqError> {
        let mut out = Vec::with_capacity(self.plugins.len());
        for p in &mut self.plugins {
            let mut cx = HookCx {
                page: &mut self.page,
                records: &self.records,
                warnings: &mut self.warnings,
                requests: &mut self.requests,
                hook,
            };
            let value = f(p.api.as_mut(), &mut cx).map_err(|e| ElqError::PluginHookFailed {
                plugin: p.name.clone(),
                hook,
                cause: e.0,
            })?;
            out.push(value);
        }
        Ok(out)
    }

    fn emit(&mut self, event: ElqEvent) {
        let kind = event.kind();
        for (_, k, listener) in &mut self.listeners {
            if *k == kind {
                listener(&event);
            }
        }
        for p in &mut self.plugins {
            let mut cx = HookCx {
                page: &mut self.page,
                records: &self.records,
                warnings: &mut self.warnings,
                requests: &mut self.requests,
                hook: Hook::Event,
            };
            p.api.on_event(&mut cx, &event);
        }
    }

    fn warn(&mut self, code: &str, element: Option<NodeId>, message: String) {
        self.warnings.push(Warning { code: code.to_string(), element, message });
    }

    fn note_hook_failure(&mut self, e: &ElqError) {
        if let ElqError::PluginHookFailed { .. } = e {
            let message = e.to_string();
            self.warn(W_PLUGIN_HOOK_FAILED, None, message);
        }
    }

    fn fail(&mut self, e: ElqError) {
        self.note_hook_failure(&e);
        self.errors.push(e);
    }

    /// Applies a mutation through the page and forgets removed elements.
    pub fn mutate(&mut self, mutation: Mutation) -> Result<MutationOutcome, ElqError> {
        let outcome = self.page.mutate(mutation)?;
        for id in &outcome.removed {
            self.records.remove(id);
            if self.detectors.get(*id).is_some() {
                self.detectors.uninstall(&mut self.page, *id)?;
            }
        }
        Ok(outcome)
    }

    /// Reads geometry the way page scripts would, forcing layout if dirty.
    pub fn read_size(&mut self, el: NodeId) -> Result<LayoutBox, ElqError> {
        let b = self.page.read_size(el)?;
        self.deliver_passes();
        Ok(b)
    }

    fn deliver_passes(&mut self) {
        for pass in self.page.take_passes() {
            for notice in self.detectors.on_layout_committed(&pass) {
                self.scheduler.push_microtask(move |e: &mut Elq| e.on_resize(notice));
            }
            if self.config.record_passes {
                self.pass_log.push(pass);
            }
        }
    }

    fn on_resize(&mut self, notice: ResizeNotice) {
        if !self.detectors.deliver(&notice) {
            return;
        }
        self.stats.resize_events += 1;
        let el = notice.target;
        self.emit(ElqEvent::Resize { element: el, width: notice.width, height: notice.height });
        if self.records.contains_key(&el) && self.props(el).update_breakpoints {
            if let Err(e) = self.schedule_update(el) {
                self.fail(e);
            }
        }
    }

    pub fn tick(&mut self) {
        run_tick(self);
    }

    pub fn is_quiescent(&self) -> bool {
        self.scheduler.is_idle() && !self.page.is_dirty() && self.batch.pending_jobs() == 0
    }

    /// Ticks until nothing is pending and ends the settling sequence.
    /// Returns the number of ticks taken.
    pub fn settle(&mut self) -> Result<usize, ElqError> {
        self.deliver_passes();
        let mut ticks = 0;
        while !self.is_quiescent() {
            if ticks >= self.config.max_ticks {
                return Err(ElqError::NonQuiescent { ticks });
            }
            self.tick();
            ticks += 1;
        }
        self.cycles.clear();
        self.stats.settle_rounds += ticks as u64;
        Ok(ticks)
    }
}

impl EventLoop for Elq {
    fn scheduler(&mut self) -> &mut Scheduler<Self> {
        &mut self.scheduler
    }

    fn after_task(&mut self) {
        self.deliver_passes();
    }

    fn end_of_tick(&mut self) {
        self.page.scheduled_layout();
        self.deliver_passes();
    }
}

impl BatchHost for Elq {
    fn batch_processor(&mut self) -> &mut BatchProcessor<Self> {
        &mut self.batch
    }

    fn schedule_flush(&mut self) {
        self.scheduler.push_macrotask(|e: &mut Elq| {
            if let Err(err) = batch::flush(e) {
                e.fail(err.into());
            }
        });
    }
}

impl PageAccess for Elq {
    fn page_mut(&mut self) -> &mut Page {
        &mut self.page
    }
}

impl DetectorHost for Elq {
    fn detector_parts(&mut self) -> (&mut Page, &mut DetectorRegistry) {
        (&mut self.page, &mut self.detectors)
    }

    fn schedule_ready(&mut self, target: NodeId) {
        self.scheduler.push_macrotask(move |e: &mut Elq| {
            if let Some(notice) = e.detectors.mark_ready(&e.page, target) {
                e.scheduler.push_microtask(move |e: &mut Elq| e.on_resize(notice));
            }
        });
    }
}
