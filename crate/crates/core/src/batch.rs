//! Leveled batch processor.
//!
//! Jobs are grouped by integer level. The first job added to an empty
//! processor schedules one asynchronous flush; every synchronous `add` until
//! then lands in the same batch. A flush runs levels in ascending order and
//! jobs within a level in insertion order, so reads and writes placed on
//! different levels never interleave. Jobs added while a batch is flushing
//! go to the next batch.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::dom::NodeId;
use crate::layout::{run_tick, EventLoop, LayoutError, Mutation, Page, Scheduler};

#[derive(Debug, Error, Clone, PartialEq)]
#[error("{0}")]
pub struct JobFailure(pub String);

impl From<LayoutError> for JobFailure {
    fn from(e: LayoutError) -> Self {
        JobFailure(e.to_string())
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BatchError {
    #[error("negative batch level {0}")]
    NegativeLevel(i64),
    #[error("batch job {index} at level {level} failed: {cause}")]
    BatchJobFailed { level: u32, index: usize, cause: JobFailure },
}

pub type Job<C> = Box<dyn FnOnce(&mut C) -> Result<(), JobFailure>>;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BatchState {
    Pending,
    Flushing,
    Done,
}

pub struct BatchProcessor<C> {
    pending: BTreeMap<u32, Vec<Job<C>>>,
    flushing: bool,
    flushed: u64,
}

impl<C> Default for BatchProcessor<C> {
    fn default() -> Self {
        BatchProcessor { pending: BTreeMap::new(), flushing: false, flushed: 0 }
    }
}

impl<C> BatchProcessor<C> {
    pub fn new() -> Self {
        Self::default()
    }

    /// State of the batch currently accepting jobs, if any, or of the one
    /// being flushed.
    pub fn state(&self) -> BatchState {
        if self.flushing {
            BatchState::Flushing
        } else if !self.pending.is_empty() {
            BatchState::Pending
        } else {
            BatchState::Done
        }
    }

    pub fn pending_jobs(&self) -> usize {
        self.pending.values().map(Vec::len).sum()
    }

    pub fn batches_flushed(&self) -> u64 {
        self.flushed
    }

    /// Queues a job; returns true when this job opened a new batch.
    fn push(&mut self, level: u32, job: Job<C>) -> bool {
        let opened = self.pending.is_empty();
        self.pending.entry(level).or_default().push(job);
        opened
    }
}

/// A context that owns a batch processor over itself and can schedule an
/// asynchronous flush (normally a macrotask).
pub trait BatchHost: Sized {
    fn batch_processor(&mut self) -> &mut BatchProcessor<Self>;
    fn schedule_flush(&mut self);
}

pub fn add<C: BatchHost>(
    cx: &mut C,
    level: i64,
    job: impl FnOnce(&mut C) -> Result<(), JobFailure> + 'static,
) -> Result<(), BatchError> {
    let level = u32::try_from(level).map_err(|_| BatchError::NegativeLevel(level))?;
    if cx.batch_processor().push(level, Box::new(job)) {
        cx.schedule_flush();
    }
    Ok(())
}

/// Runs the pending batch. A failing job aborts the rest of its batch; the
/// processor stays usable.
pub fn flush<C: BatchHost>(cx: &mut C) -> Result<(), BatchError> {
    let levels = std::mem::take(&mut cx.batch_processor().pending);
    if levels.is_empty() {
        return Ok(());
    }
    cx.batch_processor().flushing = true;
    let mut result = Ok(());
    'levels: for (level, jobs) in levels {
        for (index, job) in jobs.into_iter().enumerate() {
            if let Err(cause) = job(cx) {
                result = Err(BatchError::BatchJobFailed { level, index, cause });
                break 'levels;
            }
        }
    }
    let bp = cx.batch_processor();
    bp.flushing = false;
    bp.flushed += 1;
    result
}

/// Access to the page for workloads that read and write geometry.
pub trait PageAccess {
    fn page_mut(&mut self) -> &mut Page;
}

/// Doubles an element's width and hands the resulting height to `callback`.
/// The width is read immediately; the write runs at level 0 and the height
/// read at level 1 of the pending batch.
pub fn double_width<C: BatchHost + PageAccess + 'static>(
    cx: &mut C,
    el: NodeId,
    callback: impl FnOnce(&mut C, f64) + 'static,
) -> Result<(), LayoutError> {
    let width = cx.page_mut().read_size(el)?.width;
    let new_width = format!("{}px", width * 2.0);
    add(cx, 0, move |cx: &mut C| {
        cx.page_mut().mutate(Mutation::SetStyle { el, property: "width".into(), value: Some(new_width) })?;
        Ok(())
    })
    .expect("level 0 is valid");
    add(cx, 1, move |cx: &mut C| {
        let height = cx.page_mut().read_size(el)?.height;
        callback(cx, height);
        Ok(())
    })
    .expect("level 1 is valid");
    Ok(())
}

/// The same work without batching: read, write, read, callback.
pub fn double_width_unbatched<C: PageAccess>(
    cx: &mut C,
    el: NodeId,
    callback: impl FnOnce(&mut C, f64),
) -> Result<(), LayoutError> {
    let page = cx.page_mut();
    let width = page.read_size(el)?.width;
    page.mutate(Mutation::SetStyle { el, property: "width".into(), value: Some(format!("{}px", width * 2.0)) })?;
    let height = page.read_size(el)?.height;
    callback(cx, height);
    Ok(())
}

/// A page driven by an event loop and a batch processor, with no element
/// query machinery on top.
pub struct BatchedPage {
    pub page: Page,
    scheduler: Scheduler<BatchedPage>,
    batch: BatchProcessor<BatchedPage>,
    pub errors: Vec<BatchError>,
}

impl BatchedPage {
    pub fn new(page: Page) -> Self {
        BatchedPage { page, scheduler: Scheduler::new(), batch: BatchProcessor::new(), errors: Vec::new() }
    }

    pub fn tick(&mut self) {
        run_tick(self);
    }

    /// Ticks until no task is queued and the layout is clean.
    pub fn run_until_idle(&mut self) -> usize {
        let mut ticks = 0;
        while !self.scheduler.is_idle() || self.page.is_dirty() {
            self.tick();
            ticks += 1;
        }
        ticks
    }
}

impl EventLoop for BatchedPage {
    fn scheduler(&mut self) -> &mut Scheduler<Self> {
        &mut self.scheduler
    }

    fn end_of_tick(&mut self) {
        self.page.scheduled_layout();
        self.page.take_passes();
    }
}

impl BatchHost for BatchedPage {
    fn batch_processor(&mut self) -> &mut BatchProcessor<Self> {
        &mut self.batch
    }

    fn schedule_flush(&mut self) {
        self.scheduler.push_macrotask(|cx: &mut BatchedPage| {
            if let Err(e) = flush(cx) {
                cx.errors.push(e);
            }
        });
    }
}

impl PageAccess for BatchedPage {
    fn page_mut(&mut self) -> &mut Page {
        &mut self.page
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dom::Document;
    use crate::style::Stylesheet;

    #[derive(Default)]
    struct Trace {
        bp: BatchProcessor<Trace>,
        log: Vec<String>,
        flushes_scheduled: usize,
    }

    impl BatchHost for Trace {
        fn batch_processor(&mut self) -> &mut BatchProcessor<Self> {
            &mut self.bp
        }

        fn schedule_flush(&mut self) {
            self.flushes_scheduled += 1;
        }
    }

    fn note(name: &'static str) -> impl FnOnce(&mut Trace) -> Result<(), JobFailure> {
        move |t: &mut Trace| {
            t.log.push(name.into());
            Ok(())
        }
    }

    #[test]
    fn levels_run_ascending() {
        let mut t = Trace::default();
        add(&mut t, 1, note("C")).unwrap();
        add(&mut t, 0, note("A")).unwrap();
        add(&mut t, 0, note("B")).unwrap();
        assert_eq!(t.flushes_scheduled, 1);
        assert_eq!(t.bp.state(), BatchState::Pending);
        flush(&mut t).unwrap();
        assert_eq!(t.log, ["A", "B", "C"]);
        assert_eq!(t.bp.state(), BatchState::Done);
    }

    #[test]
    fn sparse_levels() {
        let mut t = Trace::default();
        add(&mut t, 5, note("only")).unwrap();
        flush(&mut t).unwrap();
        assert_eq!(t.log, ["only"]);
    }

    #[test]
    fn negative_level_rejected() {
        let mut t = Trace::default();
        assert_eq!(add(&mut t, -1, note("x")).unwrap_err(), BatchError::NegativeLevel(-1));
        assert_eq!(t.flushes_scheduled, 0);
    }

    #[test]
    fn empty_flush_is_noop() {
        let mut t = Trace::default();
        flush(&mut t).unwrap();
        assert_eq!(t.bp.batches_flushed(), 0);
    }

    #[test]
    fn adds_during_flush_go_to_next_batch() {
        let mut t = Trace::default();
        add(&mut t, 0, |t: &mut Trace| {
            t.log.push("a".into());
            assert_eq!(t.bp.state(), BatchState::Flushing);
            add(t, 0, note("late")).unwrap();
            Ok(())
        })
        .unwrap();
        add(&mut t, 1, note("b")).unwrap();
        flush(&mut t).unwrap();
        // Reference simulation: a FIFO of batches, each sorted by level.
        assert_eq!(t.log, ["a", "b"]);
        assert_eq!(t.flushes_scheduled, 2);
        flush(&mut t).unwrap();
        assert_eq!(t.log, ["a", "b", "late"]);
    }

    #[test]
    fn failing_job_aborts_rest_of_batch_only() {
        let mut t = Trace::default();
        add(&mut t, 0, |_: &mut Trace| Err(JobFailure("boom".into()))).unwrap();
        add(&mut t, 0, note("same-level")).unwrap();
        add(&mut t, 1, note("never")).unwrap();
        let err = flush(&mut t).unwrap_err();
        assert_eq!(err, BatchError::BatchJobFailed { level: 0, index: 0, cause: JobFailure("boom".into()) });
        assert!(t.log.is_empty());
        add(&mut t, 0, note("next")).unwrap();
        flush(&mut t).unwrap();
        assert_eq!(t.log, ["next"]);
    }

    fn grid_page(n: usize, width: &str) -> (BatchedPage, Vec<NodeId>) {
        let mut markup = String::from("<div>");
        for _ in 0..n {
            markup.push_str(&format!(r#"<div style="width: {width}; height: 10px"></div>"#));
        }
        markup.push_str("</div>");
        let doc = Document::parse(&markup).unwrap();
        let kids = doc.element(doc.root()).unwrap().children.clone();
        (BatchedPage::new(Page::new(doc, Stylesheet::default())), kids)
    }

    #[test]
    fn double_width_callback_sees_new_width() {
        use std::cell::RefCell;
        use std::rc::Rc;
        let (mut bp, kids) = grid_page(1, "100px");
        let seen = Rc::new(RefCell::new(None));
        let sink = seen.clone();
        let el = kids[0];
        double_width(&mut bp, el, move |cx: &mut BatchedPage, h| {
            let w = cx.page.read_size(el).unwrap().width;
            *sink.borrow_mut() = Some((w, h));
        })
        .unwrap();
        assert!(seen.borrow().is_none(), "jobs never run synchronously");
        bp.run_until_idle();
        assert_eq!(*seen.borrow(), Some((200.0, 10.0)));
    }

    #[test]
    fn double_width_of_zero() {
        let (mut bp, kids) = grid_page(1, "0px");
        double_width(&mut bp, kids[0], |_, h| assert_eq!(h, 10.0)).unwrap();
        bp.run_until_idle();
        assert_eq!(bp.page.read_size(kids[0]).unwrap().width, 0.0);
    }

    #[test]
    fn batched_double_width_does_not_thrash() {
        let (mut bp, kids) = grid_page(1000, "10px");
        for el in &kids {
            double_width(&mut bp, *el, |_, _| {}).unwrap();
        }
        bp.run_until_idle();
        assert!(bp.page.counters().forced_layouts <= 2);
    }
}
