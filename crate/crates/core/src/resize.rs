//! Element resize detection by injection.
//!
//! Two strategies are modeled. The object strategy injects one frame-like
//! element per target and must read the target's size right away, so each
//! install on a dirty page costs a forced layout. The scroll strategy injects
//! a container with four overflow elements and splits its install into a
//! read level, a mutation level and a forced-layout level of the batch
//! processor, so a whole batch of installs pays for at most one layout per
//! level. Scroll handlers firing is modeled as the size check in
//! [`DetectorRegistry::on_layout_committed`].

use std::collections::BTreeMap;

use thiserror::Error;

use crate::batch::{add, BatchHost, JobFailure};
use crate::dom::{NewNode, NodeId};
use crate::layout::{LayoutError, Mutation, Page, PassRecord};

/// Class carried by every injected node, so stylesheets can steer clear.
pub const GUARD_CLASS: &str = "elq-injected";

pub const LEVEL_READ: i64 = 0;
pub const LEVEL_MUTATE: i64 = 1;
pub const LEVEL_LAYOUT: i64 = 2;

/// Heap cost of one object detector, in hundredths of a megabyte.
const OBJECT_MEMORY_CENTI_UNITS: u64 = 55;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ResizeError {
    #[error("cannot observe void element {0}")]
    VoidTarget(NodeId),
    #[error("element {0} already has a resize detector")]
    AlreadyInstalled(NodeId),
    #[error("element {0} has no resize detector")]
    NotInstalled(NodeId),
    #[error(transparent)]
    Layout(#[from] LayoutError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Object,
    Scroll,
}

impl Strategy {
    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::Object => "object",
            Strategy::Scroll => "scroll",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InstallState {
    Installing,
    Ready,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ResizeNotice {
    pub target: NodeId,
    pub width: f64,
    pub height: f64,
}

pub type ResizeListener = Box<dyn FnMut(&ResizeNotice)>;

pub struct Detector {
    pub target: NodeId,
    pub strategy: Strategy,
    pub last_size: Option<(f64, f64)>,
    pub injected_root: Option<NodeId>,
    pub install_state: InstallState,
    listeners: Vec<ResizeListener>,
    position_set: bool,
}

impl Detector {
    fn new(target: NodeId, strategy: Strategy) -> Self {
        Detector {
            target,
            strategy,
            last_size: None,
            injected_root: None,
            install_state: InstallState::Installing,
            listeners: Vec::new(),
            position_set: false,
        }
    }

    pub fn is_ready(&self) -> bool {
        self.install_state == InstallState::Ready
    }

    /// Whether installing this detector switched the target to
    /// `position: relative`.
    pub fn position_set(&self) -> bool {
        self.position_set
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize)]
pub struct StrategyCost {
    pub forced_layouts_during_install: u64,
    pub installed: u64,
    memory_centi_units: u64,
}

impl StrategyCost {
    pub fn memory_units(&self) -> f64 {
        self.memory_centi_units as f64 / 100.0
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct CostLedger {
    pub object: StrategyCost,
    pub scroll: StrategyCost,
}

impl CostLedger {
    pub fn get(&self, strategy: Strategy) -> &StrategyCost {
        match strategy {
            Strategy::Object => &self.object,
            Strategy::Scroll => &self.scroll,
        }
    }

    fn get_mut(&mut self, strategy: Strategy) -> &mut StrategyCost {
        match strategy {
            Strategy::Object => &mut self.object,
            Strategy::Scroll => &mut self.scroll,
        }
    }

    pub fn memory_units(&self) -> f64 {
        self.object.memory_units() + self.scroll.memory_units()
    }
}

#[derive(Default)]
pub struct DetectorRegistry {
    detectors: BTreeMap<NodeId, Detector>,
    /// Computed position of targets, captured by the scroll read level.
    shared_position: BTreeMap<NodeId, String>,
    ledger: CostLedger,
    position_changes: Vec<NodeId>,
}

impl DetectorRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, target: NodeId) -> Option<&Detector> {
        self.detectors.get(&target)
    }

    pub fn len(&self) -> usize {
        self.detectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.detectors.is_empty()
    }

    pub fn targets(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.detectors.keys().copied()
    }

    pub fn ledger(&self) -> &CostLedger {
        &self.ledger
    }

    /// Targets whose position was switched to `relative` by an install.
    pub fn position_changes(&self) -> &[NodeId] {
        &self.position_changes
    }

    pub fn add_listener(&mut self, target: NodeId, listener: ResizeListener) -> Result<(), ResizeError> {
        self.detectors.get_mut(&target).ok_or(ResizeError::NotInstalled(target))?.listeners.push(listener);
        Ok(())
    }

    fn register(&mut self, page: &Page, target: NodeId, strategy: Strategy) -> Result<(), ResizeError> {
        let el = page.doc().element(target).map_err(LayoutError::from)?;
        if el.is_void() {
            return Err(ResizeError::VoidTarget(target));
        }
        if self.detectors.contains_key(&target) {
            return Err(ResizeError::AlreadyInstalled(target));
        }
        self.detectors.insert(target, Detector::new(target, strategy));
        Ok(())
    }

    /// Injects a frame-like element and initializes it, which needs the
    /// target's size immediately.
    pub fn install_object(&mut self, page: &mut Page, target: NodeId) -> Result<(), ResizeError> {
        self.register(page, target, Strategy::Object)?;
        self.object_inject(page, target)
    }

    fn object_inject(&mut self, page: &mut Page, target: NodeId) -> Result<(), ResizeError> {
        let forced = page.counters().forced_layouts;
        let frame = NewNode::new("object").class(GUARD_CLASS).class("elq-object-detector").attr("type", "text/html");
        let injected =
            page.mutate(Mutation::InsertSubtree { parent: target, subtree: vec![frame], injected: true })?.inserted;
        let size = read_optional(page, target)?;
        let det = self.detectors.get_mut(&target).expect("registered");
        det.injected_root = injected;
        det.last_size = size;
        let cost = self.ledger.get_mut(Strategy::Object);
        cost.installed += 1;
        cost.memory_centi_units += OBJECT_MEMORY_CENTI_UNITS;
        cost.forced_layouts_during_install += page.counters().forced_layouts - forced;
        Ok(())
    }

    /// Registers a scroll detector whose install steps have yet to run.
    pub fn begin_scroll(&mut self, page: &Page, target: NodeId) -> Result<(), ResizeError> {
        self.register(page, target, Strategy::Scroll)
    }

    /// Read level: capture the target's computed style.
    pub fn scroll_read(&mut self, page: &mut Page, target: NodeId) -> Result<(), ResizeError> {
        if !self.pending_scroll(target) {
            return Ok(());
        }
        let forced = page.counters().forced_layouts;
        let position = page.read_style(target)?.position().to_string();
        self.shared_position.insert(target, position);
        self.ledger.scroll.forced_layouts_during_install += page.counters().forced_layouts - forced;
        Ok(())
    }

    /// Mutation level: make the target positioned if needed and inject the
    /// container with its two expand and two shrink elements.
    pub fn scroll_mutate(&mut self, page: &mut Page, target: NodeId) -> Result<(), ResizeError> {
        if !self.pending_scroll(target) {
            return Ok(());
        }
        let forced = page.counters().forced_layouts;
        let position = match self.shared_position.get(&target) {
            Some(p) => p.clone(),
            None => page.read_style(target)?.position().to_string(),
        };
        if position == "static" {
            page.mutate(Mutation::SetStyle {
                el: target,
                property: "position".into(),
                value: Some("relative".into()),
            })?;
            self.detectors.get_mut(&target).expect("registered").position_set = true;
            self.position_changes.push(target);
        }
        let part = |name: &str| NewNode::new("div").class(GUARD_CLASS).class(name);
        let container = part("elq-scroll-detector")
            .child(part("elq-expand").child(part("elq-expand-child")))
            .child(part("elq-shrink").child(part("elq-shrink-child")));
        let injected =
            page.mutate(Mutation::InsertSubtree { parent: target, subtree: vec![container], injected: true })?.inserted;
        self.detectors.get_mut(&target).expect("registered").injected_root = injected;
        self.ledger.scroll.forced_layouts_during_install += page.counters().forced_layouts - forced;
        Ok(())
    }

    /// Forced-layout level: store the current size and position the
    /// scrollbars, which needs a committed layout.
    pub fn scroll_position(&mut self, page: &mut Page, target: NodeId) -> Result<(), ResizeError> {
        if !self.pending_scroll(target) {
            return Ok(());
        }
        let forced = page.counters().forced_layouts;
        page.ensure_layout();
        let size = page.layout().committed_box(target).map(|b| b.size());
        let det = self.detectors.get_mut(&target).expect("registered");
        det.last_size = size;
        let cost = self.ledger.get_mut(Strategy::Scroll);
        cost.installed += 1;
        cost.forced_layouts_during_install += page.counters().forced_layouts - forced;
        self.shared_position.remove(&target);
        Ok(())
    }

    /// All scroll install steps back to back, without batching.
    pub fn install_scroll_unbatched(&mut self, page: &mut Page, target: NodeId) -> Result<(), ResizeError> {
        self.begin_scroll(page, target)?;
        self.scroll_read(page, target)?;
        self.scroll_mutate(page, target)?;
        self.scroll_position(page, target)
    }

    fn pending_scroll(&self, target: NodeId) -> bool {
        self.detectors.get(&target).is_some_and(|d| d.strategy == Strategy::Scroll && !d.is_ready())
    }

    /// Final install step, run asynchronously once the first scroll events
    /// (or the frame load) arrive. A size change that happened while
    /// installing is reported now.
    pub fn mark_ready(&mut self, page: &Page, target: NodeId) -> Option<ResizeNotice> {
        let det = self.detectors.get_mut(&target)?;
        if det.is_ready() {
            return None;
        }
        det.install_state = InstallState::Ready;
        let now = page.layout().committed_box(target)?.size();
        if det.last_size == Some(now) {
            return None;
        }
        det.last_size = Some(now);
        Some(ResizeNotice { target, width: now.0, height: now.1 })
    }

    /// Compares one committed pass against the last known sizes. Hidden
    /// targets are skipped and keep their last size.
    pub fn on_layout_committed(&mut self, pass: &PassRecord) -> Vec<ResizeNotice> {
        let mut notices = Vec::new();
        for (id, b) in &pass.changed {
            let (Some(det), Some(b)) = (self.detectors.get_mut(id), b) else { continue };
            if !det.is_ready() {
                continue;
            }
            let size = b.size();
            if det.last_size != Some(size) {
                det.last_size = Some(size);
                notices.push(ResizeNotice { target: *id, width: size.0, height: size.1 });
            }
        }
        notices
    }

    /// Invokes the detector's listeners in registration order.
    pub fn deliver(&mut self, notice: &ResizeNotice) -> bool {
        match self.detectors.get_mut(&notice.target) {
            Some(det) => {
                for listener in &mut det.listeners {
                    listener(notice);
                }
                true
            }
            None => false,
        }
    }

    /// Removes the detector and its injected nodes, restoring the target's
    /// position if the install changed it. Succeeds when the target itself
    /// is already gone.
    pub fn uninstall(&mut self, page: &mut Page, target: NodeId) -> Result<(), ResizeError> {
        let det = self.detectors.remove(&target).ok_or(ResizeError::NotInstalled(target))?;
        self.shared_position.remove(&target);
        if !page.doc().contains(target) {
            return Ok(());
        }
        if let Some(root) = det.injected_root.filter(|r| page.doc().contains(*r)) {
            page.mutate(Mutation::Remove { el: root })?;
        }
        if det.position_set {
            page.mutate(Mutation::SetStyle { el: target, property: "position".into(), value: None })?;
            self.position_changes.retain(|t| *t != target);
        }
        Ok(())
    }
}

fn read_optional(page: &mut Page, target: NodeId) -> Result<Option<(f64, f64)>, LayoutError> {
    match page.read_size(target) {
        Ok(b) => Ok(Some(b.size())),
        Err(LayoutError::DisplayNone(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

/// A context hosting detectors on a batched, event-looped page.
pub trait DetectorHost: BatchHost + 'static {
    fn detector_parts(&mut self) -> (&mut Page, &mut DetectorRegistry);

    /// Arranges for [`DetectorRegistry::mark_ready`] to run on a later tick.
    fn schedule_ready(&mut self, target: NodeId);
}

/// Batched object install: the injection and its size read run on the
/// mutation level.
pub fn install_object<C: DetectorHost>(cx: &mut C, target: NodeId) -> Result<(), ResizeError> {
    {
        let (page, reg) = cx.detector_parts();
        reg.register(page, target, Strategy::Object)?;
    }
    add(cx, LEVEL_MUTATE, move |cx: &mut C| {
        let (page, reg) = cx.detector_parts();
        if !reg.get(target).is_some_and(|d| d.injected_root.is_none()) || !page.doc().contains(target) {
            return Ok(());
        }
        reg.object_inject(page, target).map_err(job_failure)?;
        cx.schedule_ready(target);
        Ok(())
    })
    .expect("valid level");
    Ok(())
}

/// Batched scroll install across the read, mutation and forced-layout
/// levels.
pub fn install_scroll<C: DetectorHost>(cx: &mut C, target: NodeId) -> Result<(), ResizeError> {
    {
        let (page, reg) = cx.detector_parts();
        reg.begin_scroll(page, target)?;
    }
    let live = |page: &Page, t: NodeId| page.doc().contains(t);
    add(cx, LEVEL_READ, move |cx: &mut C| {
        let (page, reg) = cx.detector_parts();
        if live(page, target) {
            reg.scroll_read(page, target).map_err(job_failure)?;
        }
        Ok(())
    })
    .expect("valid level");
    add(cx, LEVEL_MUTATE, move |cx: &mut C| {
        let (page, reg) = cx.detector_parts();
        if live(page, target) {
            reg.scroll_mutate(page, target).map_err(job_failure)?;
        }
        Ok(())
    })
    .expect("valid level");
    add(cx, LEVEL_LAYOUT, move |cx: &mut C| {
        let (page, reg) = cx.detector_parts();
        if live(page, target) && reg.get(target).is_some() {
            reg.scroll_position(page, target).map_err(job_failure)?;
            cx.schedule_ready(target);
        }
        Ok(())
    })
    .expect("valid level");
    Ok(())
}

fn job_failure(e: ResizeError) -> JobFailure {
    JobFailure(e.to_string())
}
