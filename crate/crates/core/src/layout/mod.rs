//! Box layout with a browser-like invalidation model.
//!
//! Mutations apply to the document immediately but only mark the layout
//! dirty. Geometry reads on a dirty page force a synchronous layout pass;
//! otherwise the event loop commits pending work once per tick. The counters
//! in [`LayoutCounters`] are the performance observable.

mod scheduler;

use std::collections::BTreeMap;

use thiserror::Error;

pub use scheduler::{run_tick, EventLoop, Scheduler, Task};

use crate::dom::{Document, DomError, NewNode, NodeId, Viewport};
use crate::elq::BehaviorProps;
use crate::style::{cascade, ComputedStyle, Property, Rule, Stylesheet, Value};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LayoutError {
    #[error("unknown element {0}")]
    UnknownElement(NodeId),
    #[error("element {0} is not rendered (display: none)")]
    DisplayNone(NodeId),
    #[error(transparent)]
    Dom(#[from] DomError),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LayoutBox {
    pub element: NodeId,
    pub width: f64,
    pub height: f64,
    pub font_size: f64,
}

impl LayoutBox {
    pub fn size(&self) -> (f64, f64) {
        (self.width, self.height)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize)]
pub struct LayoutCounters {
    pub forced_layouts: u64,
    pub scheduled_layouts: u64,
    pub layout_passes: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PassKind {
    Forced,
    Scheduled,
}

/// Elements whose box changed in one pass. `None` means the element left
/// layout.
#[derive(Clone, Debug, PartialEq)]
pub struct PassRecord {
    pub index: u64,
    pub kind: PassKind,
    pub changed: Vec<(NodeId, Option<LayoutBox>)>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Mutation {
    SetClasses { el: NodeId, add: Vec<String>, remove: Vec<String> },
    SetStyle { el: NodeId, property: String, value: Option<String> },
    SetAttribute { el: NodeId, name: String, value: Option<String> },
    InsertSubtree { parent: NodeId, subtree: Vec<NewNode>, injected: bool },
    Remove { el: NodeId },
    SetViewport(Viewport),
    SetGeneratedRules { origin: String, rules: Vec<Rule> },
}

/// What the pending log remembers about a mutation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MutationRecord {
    Classes(NodeId),
    Style(NodeId, String),
    Attribute(NodeId, String),
    Insert(NodeId),
    Remove(NodeId),
    Viewport,
    Stylesheet(String),
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct MutationOutcome {
    pub inserted: Option<NodeId>,
    pub removed: Vec<NodeId>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LayoutState {
    committed: BTreeMap<NodeId, LayoutBox>,
    styles: BTreeMap<NodeId, ComputedStyle>,
    dirty: bool,
    pending: Vec<MutationRecord>,
    counters: LayoutCounters,
    undelivered: Vec<PassRecord>,
}

impl Default for LayoutState {
    fn default() -> Self {
        // A page that was never laid out is dirty.
        LayoutState {
            committed: BTreeMap::new(),
            styles: BTreeMap::new(),
            dirty: true,
            pending: Vec::new(),
            counters: LayoutCounters::default(),
            undelivered: Vec::new(),
        }
    }
}

impl LayoutState {
    pub fn is_dirty(&self) -> bool {
        self.dirty
    }

    pub fn pending(&self) -> &[MutationRecord] {
        &self.pending
    }

    pub fn counters(&self) -> LayoutCounters {
        self.counters
    }

    pub fn committed(&self) -> &BTreeMap<NodeId, LayoutBox> {
        &self.committed
    }

    pub fn committed_box(&self, el: NodeId) -> Option<LayoutBox> {
        self.committed.get(&el).copied()
    }

    pub fn committed_style(&self, el: NodeId) -> Option<&ComputedStyle> {
        self.styles.get(&el)
    }
}

/// Document, stylesheet and layout state managed together.
#[derive(Clone, Debug)]
pub struct Page {
    doc: Document,
    sheet: Stylesheet,
    layout: LayoutState,
}

impl Page {
    pub fn new(doc: Document, sheet: Stylesheet) -> Self {
        Page { doc, sheet, layout: LayoutState::default() }
    }

    pub fn doc(&self) -> &Document {
        &self.doc
    }

    pub fn sheet(&self) -> &Stylesheet {
        &self.sheet
    }

    pub fn layout(&self) -> &LayoutState {
        &self.layout
    }

    pub fn counters(&self) -> LayoutCounters {
        self.layout.counters
    }

    pub fn is_dirty(&self) -> bool {
        self.layout.dirty
    }

    /// Behavior flags live on the element but never affect layout, so they
    /// are written without invalidating it.
    pub fn behavior_mut(&mut self, el: NodeId) -> Result<&mut BehaviorProps, LayoutError> {
        Ok(&mut self.doc.element_mut(el)?.elq)
    }

    /// Committed geometry, flushing first (a forced layout) when dirty.
    pub fn read_size(&mut self, el: NodeId) -> Result<LayoutBox, LayoutError> {
        if !self.doc.contains(el) {
            return Err(LayoutError::UnknownElement(el));
        }
        self.ensure_layout();
        self.layout.committed_box(el).ok_or(LayoutError::DisplayNone(el))
    }

    /// Computed style, flushing first when dirty.
    pub fn read_style(&mut self, el: NodeId) -> Result<&ComputedStyle, LayoutError> {
        if !self.doc.contains(el) {
            return Err(LayoutError::UnknownElement(el));
        }
        self.ensure_layout();
        self.layout.styles.get(&el).ok_or(LayoutError::UnknownElement(el))
    }

    /// Work that needs a committed layout (such as scrollbar positioning).
    /// Returns whether a forced layout was needed.
    pub fn ensure_layout(&mut self) -> bool {
        if self.layout.dirty {
            self.layout_pass(PassKind::Forced);
            true
        } else {
            false
        }
    }

    /// Runs the end-of-tick layout if anything is pending.
    pub fn scheduled_layout(&mut self) -> Option<Vec<NodeId>> {
        self.layout.dirty.then(|| self.layout_pass(PassKind::Scheduled))
    }

    /// Applies a mutation to the document and queues it for layout.
    pub fn mutate(&mut self, mutation: Mutation) -> Result<MutationOutcome, LayoutError> {
        let mut outcome = MutationOutcome::default();
        let record = match mutation {
            Mutation::SetClasses { el, add, remove } => {
                if !self.doc.set_classes(el, &add, &remove)? {
                    return Ok(outcome);
                }
                MutationRecord::Classes(el)
            }
            Mutation::SetStyle { el, property, value } => {
                self.doc.set_inline_style(el, &property, value.as_deref())?;
                MutationRecord::Style(el, property)
            }
            Mutation::SetAttribute { el, name, value } => {
                self.doc.set_attribute(el, &name, value.as_deref())?;
                MutationRecord::Attribute(el, name)
            }
            Mutation::InsertSubtree { parent, subtree, injected } => {
                let id = self.doc.insert_subtree(parent, &subtree, injected)?;
                outcome.inserted = Some(id);
                MutationRecord::Insert(id)
            }
            Mutation::Remove { el } => {
                outcome.removed = self.doc.remove(el)?;
                MutationRecord::Remove(el)
            }
            Mutation::SetViewport(v) => {
                self.doc.viewport = v;
                MutationRecord::Viewport
            }
            Mutation::SetGeneratedRules { origin, rules } => {
                self.sheet.set_generated(&origin, rules);
                MutationRecord::Stylesheet(origin)
            }
        };
        self.layout.pending.push(record);
        self.layout.dirty = true;
        Ok(outcome)
    }

    /// Full layout pass. Returns the elements whose box changed.
    pub fn layout_pass(&mut self, kind: PassKind) -> Vec<NodeId> {
        let (boxes, styles) = compute_layout(&self.doc, &self.sheet);
        let mut changed = Vec::new();
        for (id, b) in &boxes {
            if self.layout.committed.get(id) != Some(b) {
                changed.push((*id, Some(*b)));
            }
        }
        for id in self.layout.committed.keys() {
            if !boxes.contains_key(id) {
                changed.push((*id, None));
            }
        }
        changed.sort_by_key(|(id, _)| *id);
        self.layout.committed = boxes;
        self.layout.styles = styles;
        self.layout.pending.clear();
        self.layout.dirty = false;
        let counters = &mut self.layout.counters;
        match kind {
            PassKind::Forced => counters.forced_layouts += 1,
            PassKind::Scheduled => counters.scheduled_layouts += 1,
        }
        counters.layout_passes += 1;
        let ids = changed.iter().map(|(id, _)| *id).collect();
        self.layout.undelivered.push(PassRecord { index: counters.layout_passes, kind, changed });
        ids
    }

    /// Drains the passes not yet seen by resize detection.
    pub fn take_passes(&mut self) -> Vec<PassRecord> {
        std::mem::take(&mut self.layout.undelivered)
    }
}

struct Containing {
    width: f64,
    height: Option<f64>,
    font_size: f64,
}

/// Computes every box from scratch. Pure in (document, stylesheet).
pub fn compute_layout(
    doc: &Document,
    sheet: &Stylesheet,
) -> (BTreeMap<NodeId, LayoutBox>, BTreeMap<NodeId, ComputedStyle>) {
    let mut boxes = BTreeMap::new();
    let mut styles = BTreeMap::new();
    let viewport =
        Containing { width: doc.viewport.width, height: Some(doc.viewport.height), font_size: doc.root_font_size };
    layout_element(doc, sheet, doc.root(), &viewport, &mut boxes, &mut styles);
    (boxes, styles)
}

fn layout_element(
    doc: &Document,
    sheet: &Stylesheet,
    id: NodeId,
    parent: &Containing,
    boxes: &mut BTreeMap<NodeId, LayoutBox>,
    styles: &mut BTreeMap<NodeId, ComputedStyle>,
) -> Option<f64> {
    let el = doc.get(id)?;
    let style = cascade(doc, sheet, id);
    if style.display_none() {
        styles.insert(id, style);
        return None;
    }
    let root_font = doc.root_font_size;
    let font_size = match style.get(Property::FontSize) {
        Some(Value::Length(l)) => l.to_px(parent.font_size, root_font),
        Some(Value::Percent(p)) => parent.font_size * p / 100.0,
        _ => parent.font_size,
    };
    let width = match style.get(Property::Width) {
        Some(Value::Length(l)) => l.to_px(font_size, root_font),
        Some(Value::Percent(p)) => parent.width * p / 100.0,
        _ => parent.width,
    };
    let definite_height = match style.get(Property::Height) {
        Some(Value::Length(l)) => Some(l.to_px(font_size, root_font)),
        Some(Value::Percent(p)) => parent.height.map(|h| h * p / 100.0),
        _ => None,
    };
    styles.insert(id, style);
    let inner = Containing { width, height: definite_height, font_size };
    let mut content_height = 0.0;
    for child in &el.children {
        let h = layout_element(doc, sheet, *child, &inner, boxes, styles);
        // Detector nodes never contribute to their host's size.
        if !doc.get(*child).is_some_and(|c| c.injected) {
            content_height += h.unwrap_or(0.0);
        }
    }
    let height = definite_height.unwrap_or(content_height).max(0.0);
    let width = width.max(0.0);
    boxes.insert(id, LayoutBox { element: id, width, height, font_size });
    Some(height)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn page(markup: &str, css: &str) -> Page {
        Page::new(Document::parse(markup).unwrap(), Stylesheet::parse(css).unwrap())
    }

    fn by_class(p: &Page, class: &str) -> NodeId {
        let doc = p.doc();
        doc.preorder().into_iter().find(|id| doc.get(*id).unwrap().has_class(class)).unwrap()
    }

    #[test]
    fn clean_read_is_free() {
        let mut p = page("<div><p></p></div>", "");
        p.ensure_layout();
        let before = p.counters();
        let b = p.read_size(p.doc().root()).unwrap();
        assert_eq!(b.width, 1000.0);
        assert_eq!(p.counters(), before);
    }

    #[test]
    fn read_after_mutation_forces_one_layout() {
        let mut p = page(r#"<div><p class="t"></p></div>"#, "");
        p.ensure_layout();
        let t = by_class(&p, "t");
        p.mutate(Mutation::SetStyle { el: t, property: "width".into(), value: Some("400px".into()) }).unwrap();
        assert_eq!(p.layout().pending().len(), 1);
        assert_eq!(p.layout().committed_box(t).unwrap().width, 1000.0);
        let forced = p.counters().forced_layouts;
        assert_eq!(p.read_size(t).unwrap().width, 400.0);
        assert_eq!(p.counters().forced_layouts, forced + 1);
        p.read_size(t).unwrap();
        assert_eq!(p.counters().forced_layouts, forced + 1);
        assert!(p.layout().pending().is_empty());
    }

    #[test]
    fn many_mutations_without_reads_force_nothing() {
        let mut p = page("<div></div>", "");
        let root = p.doc().root();
        for i in 0..1000 {
            p.mutate(Mutation::SetStyle { el: root, property: "width".into(), value: Some(format!("{i}px")) }).unwrap();
        }
        assert_eq!(p.counters().forced_layouts, 0);
        assert_eq!(p.layout().pending().len(), 1000);
    }

    #[test]
    fn mutation_on_unknown_element() {
        let mut p = page("<div></div>", "");
        let err = p.mutate(Mutation::SetStyle { el: NodeId(42), property: "width".into(), value: None }).unwrap_err();
        assert_eq!(err, LayoutError::Dom(DomError::UnknownElement(NodeId(42))));
        assert_eq!(p.read_size(NodeId(42)), Err(LayoutError::UnknownElement(NodeId(42))));
    }

    #[test]
    fn noop_class_change_is_not_a_mutation() {
        let mut p = page("<div></div>", "");
        p.ensure_layout();
        let root = p.doc().root();
        p.mutate(Mutation::SetClasses { el: root, add: vec![], remove: vec![] }).unwrap();
        assert!(!p.is_dirty());
    }

    #[test]
    fn percent_width() {
        let mut p = page(r#"<div style="width: 1000px"><div class="c"></div></div>"#, ".c { width: 50%; }");
        let c = by_class(&p, "c");
        assert_eq!(p.read_size(c).unwrap().width, 500.0);
    }

    #[test]
    fn em_width_uses_element_font_size() {
        let mut p = page(r#"<div style="font-size: 16px; width: 10em"></div>"#, "");
        let root = p.doc().root();
        assert_eq!(p.read_size(root).unwrap().width, 160.0);
        let mut q =
            page(r#"<div style="font-size: 20px"><p class="c" style="font-size: 2em; width: 3em"></p></div>"#, "");
        let c = by_class(&q, "c");
        let b = q.read_size(c).unwrap();
        assert_eq!((b.font_size, b.width), (40.0, 120.0));
    }

    #[test]
    fn percent_chain() {
        let mut p = page(
            r#"<div style="width: 1000px"><div style="width: 50%"><div style="width: 50%"><div class="c" style="width: 30%"></div></div></div></div>"#,
            "",
        );
        let c = by_class(&p, "c");
        assert_eq!(p.read_size(c).unwrap().width, 75.0);
    }

    #[test]
    fn heights_sum_children_and_skip_injected() {
        let mut p = page(
            r#"<div><p style="height: 10px"></p><p style="height: 2em"></p><p style="height: 50%"></p></div>"#,
            "",
        );
        let root = p.doc().root();
        assert_eq!(p.read_size(root).unwrap().height, 42.0);
        p.mutate(Mutation::InsertSubtree {
            parent: root,
            subtree: vec![NewNode::new("div").style("height", "500px")],
            injected: true,
        })
        .unwrap();
        assert_eq!(p.read_size(root).unwrap().height, 42.0);
    }

    #[test]
    fn percent_height_against_definite_parent() {
        let mut p = page(r#"<div style="height: 200px"><p class="c" style="height: 25%"></p></div>"#, "");
        let c = by_class(&p, "c");
        assert_eq!(p.read_size(c).unwrap().height, 50.0);
    }

    #[test]
    fn display_none_removes_subtree() {
        let mut p = page(
            r#"<div><p class="gone"><span class="inner"></span></p><p style="height: 5px"></p></div>"#,
            ".gone { display: none; }",
        );
        let gone = by_class(&p, "gone");
        let inner = by_class(&p, "inner");
        assert_eq!(p.read_size(gone), Err(LayoutError::DisplayNone(gone)));
        assert_eq!(p.read_size(inner), Err(LayoutError::DisplayNone(inner)));
        assert_eq!(p.read_size(p.doc().root()).unwrap().height, 5.0);
    }

    #[test]
    fn pass_reports_changed_boxes() {
        let mut p = page(r#"<div><p class="a"></p><p class="b"></p></div>"#, "");
        p.ensure_layout();
        p.take_passes();
        let a = by_class(&p, "a");
        p.mutate(Mutation::SetStyle { el: a, property: "height".into(), value: Some("7px".into()) }).unwrap();
        let changed = p.scheduled_layout().unwrap();
        // `a` grows and so does its auto-height parent.
        assert_eq!(changed, vec![p.doc().root(), a]);
        assert!(p.scheduled_layout().is_none());
        let passes = p.take_passes();
        assert_eq!(passes.len(), 1);
        assert_eq!(passes[0].kind, PassKind::Scheduled);
        assert_eq!(p.counters().layout_passes, 2);
    }

    #[test]
    fn layout_is_pure() {
        let p = page(
            r#"<div class="x"><p style="width: 3em; font-size: 1.5rem"></p><p class="y"></p></div>"#,
            ".x { width: 40%; } .y { height: 1em; }",
        );
        assert_eq!(compute_layout(p.doc(), p.sheet()), compute_layout(p.doc(), p.sheet()));
    }

    struct PageLoop {
        page: Page,
        scheduler: Scheduler<PageLoop>,
    }

    impl EventLoop for PageLoop {
        fn scheduler(&mut self) -> &mut Scheduler<Self> {
            &mut self.scheduler
        }

        fn end_of_tick(&mut self) {
            self.page.scheduled_layout();
        }
    }

    #[test]
    fn tick_commits_pending_mutations() {
        let mut cx = PageLoop { page: page("<div></div>", ""), scheduler: Scheduler::new() };
        run_tick(&mut cx);
        let before = cx.page.counters();
        assert_eq!(before.scheduled_layouts, 1);
        run_tick(&mut cx);
        assert_eq!(cx.page.counters(), before);

        let root = cx.page.doc().root();
        cx.page.mutate(Mutation::SetStyle { el: root, property: "width".into(), value: Some("5px".into()) }).unwrap();
        run_tick(&mut cx);
        let after = cx.page.counters();
        assert_eq!(after.scheduled_layouts, before.scheduled_layouts + 1);
        assert_eq!(after.forced_layouts, before.forced_layouts);
    }
}
