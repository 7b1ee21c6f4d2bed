//! Deterministic event loop: one macrotask per tick, then a full microtask
//! checkpoint, then the host's end-of-tick work (the scheduled layout).

use std::collections::VecDeque;

pub type Task<C> = Box<dyn FnOnce(&mut C)>;

pub struct Scheduler<C> {
    macrotasks: VecDeque<Task<C>>,
    microtasks: VecDeque<Task<C>>,
    tick: u64,
}

impl<C> Default for Scheduler<C> {
    fn default() -> Self {
        Scheduler { macrotasks: VecDeque::new(), microtasks: VecDeque::new(), tick: 0 }
    }
}

impl<C> Scheduler<C> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push_macrotask(&mut self, task: impl FnOnce(&mut C) + 'static) {
        self.macrotasks.push_back(Box::new(task));
    }

    pub fn push_microtask(&mut self, task: impl FnOnce(&mut C) + 'static) {
        self.microtasks.push_back(Box::new(task));
    }

    pub fn is_idle(&self) -> bool {
        self.macrotasks.is_empty() && self.microtasks.is_empty()
    }

    pub fn pending_macrotasks(&self) -> usize {
        self.macrotasks.len()
    }

    pub fn pending_microtasks(&self) -> usize {
        self.microtasks.len()
    }

    /// Index of the tick currently running (or last run).
    pub fn current_tick(&self) -> u64 {
        self.tick
    }
}

/// A context that owns a [`Scheduler`] over itself.
pub trait EventLoop: Sized {
    fn scheduler(&mut self) -> &mut Scheduler<Self>;

    /// Runs after every macrotask and microtask.
    fn after_task(&mut self) {}

    /// Runs once the microtask queue is drained.
    fn end_of_tick(&mut self) {}
}

/// Runs one tick. Microtasks queued during the checkpoint run in the same
/// checkpoint; anything queued by `end_of_tick` waits for the next tick.
pub fn run_tick<C: EventLoop>(cx: &mut C) {
    cx.scheduler().tick += 1;
    if let Some(task) = cx.scheduler().macrotasks.pop_front() {
        task(cx);
        cx.after_task();
    }
    while let Some(task) = cx.scheduler().microtasks.pop_front() {
        task(cx);
        cx.after_task();
    }
    cx.end_of_tick();
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Default)]
    struct Log {
        scheduler: Scheduler<Log>,
        events: Vec<String>,
    }

    impl EventLoop for Log {
        fn scheduler(&mut self) -> &mut Scheduler<Self> {
            &mut self.scheduler
        }

        fn end_of_tick(&mut self) {
            let t = self.scheduler.current_tick();
            self.events.push(format!("end{t}"));
        }
    }

    #[test]
    fn microtasks_drain_before_next_macrotask() {
        let mut cx = Log::default();
        cx.scheduler.push_macrotask(|c: &mut Log| {
            c.events.push("m1".into());
            c.scheduler.push_microtask(|c: &mut Log| {
                c.events.push("u1".into());
                c.scheduler.push_microtask(|c: &mut Log| c.events.push("u2".into()));
            });
        });
        cx.scheduler.push_macrotask(|c: &mut Log| c.events.push("m2".into()));
        run_tick(&mut cx);
        run_tick(&mut cx);
        assert_eq!(cx.events, ["m1", "u1", "u2", "end1", "m2", "end2"]);
        assert!(cx.scheduler.is_idle());
    }

    #[test]
    fn fifo_within_queue() {
        let mut cx = Log::default();
        for i in 0..5 {
            cx.scheduler.push_microtask(move |c: &mut Log| c.events.push(i.to_string()));
        }
        run_tick(&mut cx);
        assert_eq!(cx.events, ["0", "1", "2", "3", "4", "end1"]);
    }
}
