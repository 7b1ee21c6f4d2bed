//! Randomized invariants, checked against independent oracles. Shared by
//! the property tests and the acceptance runner.

#![allow(dead_code)]

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::rc::Rc;

use proptest::prelude::*;

use elq::batch::{self, add, BatchHost, BatchProcessor};
use elq::dom::{Document, NodeId, Viewport};
use elq::elq::{compute_states, Breakpoint, Dimension, ElqEvent, EventKind, Side};
use elq::harness::{bootstrap_targets, build_engine, Config};
use elq::layout::{compute_layout, Mutation, Page};
use elq::resize::{DetectorRegistry, Strategy as Detection};
use elq::style::{Length, Stylesheet};

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig { cases, failure_persistence: None, ..ProptestConfig::default() }
}

#[derive(Clone, Debug)]
struct Module {
    breakpoints: Vec<u32>,
    mirror: bool,
    children: Vec<Module>,
}

fn module() -> impl proptest::strategy::Strategy<Value = Module> {
    let leaf = (prop::collection::vec(1u32..10, 1..4), any::<bool>()).prop_map(|(bps, mirror)| Module {
        breakpoints: bps.into_iter().map(|b| b * 100).collect(),
        mirror,
        children: vec![],
    });
    leaf.prop_recursive(3, 16, 3, |inner| {
        (prop::collection::vec(1u32..10, 1..4), any::<bool>(), prop::collection::vec(inner, 1..4)).prop_map(
            |(bps, mirror, children)| Module {
                breakpoints: bps.into_iter().map(|b| b * 100).collect(),
                mirror,
                children,
            },
        )
    })
}

fn render(m: &Module, out: &mut String) {
    let bps: Vec<String> = m.breakpoints.iter().map(u32::to_string).collect();
    out.push_str(&format!(r#"<div class="m" elq elq-breakpoints elq-breakpoints-widths="{}">"#, bps.join(" ")));
    if m.mirror {
        out.push_str("<p elq elq-mirror>x</p>");
    }
    for c in &m.children {
        render(c, out);
    }
    out.push_str("</div>");
}

const MODULE_CSS: &str = "
.m { width: 80%; }
.m.elq-min-width-400px > .m { width: 45%; }
.m.elq-max-width-200px > .m { width: 100%; }
";

fn settle_modules(markup: &str, viewport: f64, order: &[usize], strategy: Detection) -> BTreeMap<NodeId, Vec<String>> {
    let mut doc = Document::parse(markup).unwrap();
    doc.viewport = Viewport { width: viewport, height: 800.0 };
    let targets = bootstrap_targets(&doc, doc.root(), false);
    let config = Config { strategy, ..Config::default() };
    let mut elq = build_engine(doc, Stylesheet::parse(MODULE_CSS).unwrap(), &config).unwrap();
    let ordered: Vec<NodeId> = order.iter().map(|i| targets[i % targets.len()]).collect();
    elq.activate(&ordered).unwrap();
    elq.activate(&targets).unwrap();
    elq.settle().unwrap();
    assert_eq!(elq.stats().cycles_detected, 0);
    let doc = elq.page().doc();
    targets.iter().map(|t| (*t, doc.element(*t).unwrap().classes.clone())).collect()
}

/// (a) Exactly one state per breakpoint, `min` iff size >= value.
pub fn state_partition(cases: u32) {
    proptest!(config(cases), |(
        bps in prop::collection::vec((0u32..2000, 0u8..3, any::<bool>()), 0..8),
        width in 0.0f64..2500.0,
        height in 0.0f64..2500.0,
        font in 8.0f64..32.0,
    )| {
        let breakpoints: Vec<Breakpoint> = bps
            .iter()
            .map(|(v, unit, wide)| {
                let value = match unit {
                    0 => Length::px(*v as f64),
                    1 => Length::em(*v as f64 / 10.0),
                    _ => Length::rem(*v as f64 / 10.0),
                };
                if *wide { Breakpoint::width(value) } else { Breakpoint::height(value) }
            })
            .collect();
        let states = compute_states(&breakpoints, width, height, font, 16.0);
        prop_assert_eq!(states.len(), breakpoints.len());
        for bp in &breakpoints {
            let matching: Vec<_> = states.states().iter().filter(|s| s.breakpoint == *bp).collect();
            prop_assert!(!matching.is_empty());
            let px = match bp.value.unit.as_str() {
                "em" => bp.value.magnitude * font,
                "rem" => bp.value.magnitude * 16.0,
                _ => bp.value.magnitude,
            };
            let size = if bp.dimension == Dimension::Width { width } else { height };
            for s in matching {
                prop_assert_eq!(s.side == Side::Min, size >= px);
            }
        }
    });
}

/// (a) The same through the whole engine: classes on a settled element.
pub fn state_partition_end_to_end(cases: u32) {
    proptest!(config(cases), |(
        bps in prop::collection::btree_set(1u32..1000, 1..5), width in 0u32..1200,
    )| {
        let list: Vec<String> = bps.iter().map(u32::to_string).collect();
        let markup = format!(
            r#"<div style="width: {width}px" elq elq-breakpoints elq-breakpoints-widths="{}"></div>"#,
            list.join(" ")
        );
        let mut elq = elq::harness::load(&markup, "", &Config::default()).unwrap();
        let root = elq.page().doc().root();
        prop_assert_eq!(elq.read_size(root).unwrap().width, width as f64);
        let classes = elq.page().doc().element(root).unwrap().classes.clone();
        prop_assert_eq!(classes.len(), bps.len());
        for bp in &bps {
            let side = if width >= *bp { "min" } else { "max" };
            let expected = format!("elq-{side}-width-{bp}px");
            prop_assert!(classes.contains(&expected), "{} not in {:?}", expected, classes);
        }
    });
}

/// (b) Final classes do not depend on activation order.
pub fn activation_order_independence(cases: u32) {
    proptest!(config(cases), |(
        tree in module(),
        viewport in 150.0f64..1600.0,
        order in Just((0..40usize).collect::<Vec<_>>()).prop_shuffle(),
        object in any::<bool>(),
    )| {
        let mut markup = String::new();
        render(&tree, &mut markup);
        let strategy = if object { Detection::Object } else { Detection::Scroll };
        let forward: Vec<usize> = (0..40).collect();
        let a = settle_modules(&markup, viewport, &forward, strategy);
        let b = settle_modules(&markup, viewport, &order, strategy);
        prop_assert_eq!(a, b);
    });
}

/// Mirrors end up with exactly their target's state classes.
pub fn mirror_consistency(cases: u32) {
    proptest!(config(cases), |(
        tree in module(), viewport in 150.0f64..1600.0,
    )| {
        let mut markup = String::new();
        render(&tree, &mut markup);
        let mut doc = Document::parse(&markup).unwrap();
        doc.viewport = Viewport { width: viewport, height: 800.0 };
        let elq = elq::harness::start(doc, Stylesheet::parse(MODULE_CSS).unwrap(), &Config::default()).unwrap();
        let doc = elq.page().doc();
        for id in doc.preorder() {
            let el = doc.element(id).unwrap();
            if el.has_elq_attribute("elq-mirror") {
                let target = el.parent.unwrap();
                let state_classes = |n: NodeId| -> Vec<String> {
                    doc.element(n).unwrap().classes.iter().filter(|c| c.starts_with("elq-")).cloned().collect()
                };
                prop_assert_eq!(state_classes(id), state_classes(target));
            }
        }
    });
}

/// (c) Every size change of an observed element, as seen by a polling
/// oracle and by the layout pass log, surfaces as a resize event.
pub fn detector_event_completeness(cases: u32) {
    proptest!(config(cases), |(
        widths in prop::collection::vec(prop::collection::vec(0u32..900, 3), 1..8),
        object in any::<bool>(),
    )| {
        let markup = r#"<div><div id="a" class="t"></div><div id="b" class="t"><div id="c" class="t"></div></div></div>"#;
        let doc = Document::parse(markup).unwrap();
        let targets: Vec<NodeId> = doc.preorder().into_iter().filter(|n| doc.element(*n).unwrap().has_class("t")).collect();
        let strategy = if object { Detection::Object } else { Detection::Scroll };
        let config = Config { strategy, record_passes: true, ..Config::default() };
        let mut elq = build_engine(doc, Stylesheet::default(), &config).unwrap();
        let events: Rc<RefCell<Vec<(NodeId, f64)>>> = Rc::default();
        let sink = events.clone();
        elq.on(EventKind::Resize, move |e| {
            if let ElqEvent::Resize { element, width, .. } = e {
                sink.borrow_mut().push((*element, *width));
            }
    });
    for t in &targets {
        match strategy {
            Detection::Object => elq::resize::install_object(&mut elq, *t).unwrap(),
            Detection::Scroll => elq::resize::install_scroll(&mut elq, *t).unwrap(),
        }
    }
    elq.settle().unwrap();
    let mut polled: BTreeMap<NodeId, f64> =
        targets.iter().map(|t| (*t, elq.page().layout().committed_box(*t).unwrap().width)).collect();
    let installed_passes = elq.pass_log().len();

    for step in &widths {
        for (t, w) in targets.iter().zip(step) {
            elq.mutate(Mutation::SetStyle { el: *t, property: "width".into(), value: Some(format!("{w}px")) }).unwrap();
        }
        events.borrow_mut().clear();
        elq.settle().unwrap();
        for t in &targets {
            let now = elq.page().layout().committed_box(*t).unwrap().width;
            let seen: Vec<f64> = events.borrow().iter().filter(|(e, _)| e == t).map(|(_, w)| *w).collect();
            if now != polled[t] {
                prop_assert_eq!(seen.last().copied(), Some(now), "missed change on {}", t);
            } else {
                prop_assert!(seen.is_empty() || seen.last() == Some(&now));
            }
            polled.insert(*t, now);
        }
    }

    // Every event after install matches a size some pass committed.
    let mut committed: BTreeMap<NodeId, Vec<f64>> = BTreeMap::new();
    for pass in &elq.pass_log()[installed_passes..] {
        for (id, b) in &pass.changed {
            if let Some(b) = b {
                committed.entry(*id).or_default().push(b.width);
            }
        }
    }
    let all = events.borrow();
    for (t, w) in all.iter() {
        prop_assert!(committed.get(t).is_some_and(|ws| ws.contains(w)));
    }
    });
}

/// (d) A flush runs jobs stably sorted by level; jobs added during a
/// flush run in the next batch.
pub fn batch_level_ordering(cases: u32) {
    proptest!(config(cases), |(
        jobs in prop::collection::vec((0i64..6, prop::option::of(0i64..6)), 0..40),
    )| {
        let mut host = Recorder::default();
        for (i, (level, follow)) in jobs.iter().enumerate() {
            let follow = *follow;
            add(&mut host, *level, move |h: &mut Recorder| {
                h.log.push(i);
                if let Some(l) = follow {
                    add(h, l, move |h: &mut Recorder| { h.log.push(1000 + i); Ok(()) }).unwrap();
                }
                Ok(())
            })
            .unwrap();
        }
        while host.flushes > 0 {
            host.flushes -= 1;
            batch::flush(&mut host).unwrap();
        }
        let mut first: Vec<(i64, usize)> = jobs.iter().enumerate().map(|(i, (l, _))| (*l, i)).collect();
        first.sort_by_key(|(l, _)| *l);
        let mut expected: Vec<usize> = first.iter().map(|(_, i)| *i).collect();
        let mut second: Vec<(i64, usize)> = first
            .iter()
            .filter_map(|(_, i)| jobs[*i].1.map(|l| (l, 1000 + i)))
            .collect();
        second.sort_by_key(|(l, _)| *l);
        expected.extend(second.iter().map(|(_, i)| *i));
        prop_assert_eq!(host.log, expected);
    });
}

/// (e) Injecting detectors leaves every authored box unchanged.
pub fn detector_injection_is_visually_neutral(cases: u32) {
    proptest!(config(cases), |(
        tree in module(),
        viewport in 100.0f64..1600.0,
        picks in prop::collection::vec(any::<bool>(), 40),
        object in any::<bool>(),
    )| {
        let mut markup = String::new();
        render(&tree, &mut markup);
        let mut doc = Document::parse(&markup).unwrap();
        doc.viewport = Viewport { width: viewport, height: 800.0 };
        let css = ".m { width: 80%; } p { height: 18px; } .m .m { height: 3em; }";
        let sheet = Stylesheet::parse(css).unwrap();
        let (before, _) = compute_layout(&doc, &sheet);

        let mut page = Page::new(doc, sheet);
        let mut reg = DetectorRegistry::new();
        let ids = page.doc().preorder();
        for (id, pick) in ids.iter().zip(&picks) {
            if *pick && !page.doc().element(*id).unwrap().is_void() {
                if object {
                    reg.install_object(&mut page, *id).unwrap();
                } else {
                    reg.install_scroll_unbatched(&mut page, *id).unwrap();
                }
            }
        }
        let (after, _) = compute_layout(page.doc(), page.sheet());
        for (id, b) in &before {
            prop_assert_eq!(after.get(id), Some(b));
        }
    });
}

#[derive(Default)]
struct Recorder {
    bp: BatchProcessor<Recorder>,
    flushes: usize,
    log: Vec<usize>,
}

impl BatchHost for Recorder {
    fn batch_processor(&mut self) -> &mut BatchProcessor<Self> {
        &mut self.bp
    }

    fn schedule_flush(&mut self) {
        self.flushes += 1;
    }
}

/// Arbitrary, possibly self-contradicting rules keyed on an element's own
/// states. Settling always terminates, and a run that reports no cycle ends
/// on a fixpoint: the classes shown match the element's final width.
pub fn cycle_safety(cases: u32) {
    proptest!(config(cases), |(
        rules in prop::collection::btree_map(1u32..10, (any::<bool>(), 1u32..10), 1..4),
        base in 1u32..10,
        viewport in 100.0f64..1200.0,
    )| {
        let bps: Vec<String> = rules.keys().map(|b| (b * 100).to_string()).collect();
        let mut css = format!(".foo {{ width: {}px; }}\n", base * 100 + 50);
        for (bp, (min, w)) in &rules {
            let side = if *min { "min" } else { "max" };
            css.push_str(&format!(".foo.elq-{side}-width-{}px {{ width: {}px; }}\n", bp * 100, w * 100 + 50));
        }
        let markup = format!(
            r#"<div><div id="t" class="foo" elq elq-breakpoints elq-breakpoints-widths="{}"></div></div>"#,
            bps.join(" ")
        );
        let mut doc = Document::parse(&markup).unwrap();
        doc.viewport = Viewport { width: viewport, height: 800.0 };
        let targets = bootstrap_targets(&doc, doc.root(), false);
        let mut elq = build_engine(doc, Stylesheet::parse(&css).unwrap(), &Config::default()).unwrap();
        elq.activate(&targets).unwrap();
        prop_assert!(elq.settle().is_ok());
        let t = targets[0];
        let width = elq.read_size(t).unwrap().width;
        let classes = elq.page().doc().element(t).unwrap().classes.clone();
        if elq.stats().cycles_detected == 0 {
            for bp in rules.keys() {
                let side = if width >= (bp * 100) as f64 { "min" } else { "max" };
                let expected = format!("elq-{side}-width-{}px", bp * 100);
                prop_assert!(classes.contains(&expected), "{} not in {:?} at {}", expected, classes, width);
            }
        } else {
            prop_assert!(elq.warnings().iter().any(|w| w.code == elq::elq::W_CYCLE_DETECTED));
        }
    });
}

/// Leaving a state set and coming back restores the element's class list
/// exactly, user classes included.
pub fn applier_round_trip(cases: u32) {
    proptest!(config(cases), |(
        user in prop::collection::btree_set("[a-z]{1,6}", 0..4),
        bps in prop::collection::btree_set(1u32..10, 1..4),
        a in 50.0f64..1100.0,
        b in 50.0f64..1100.0,
    )| {
        let list: Vec<String> = bps.iter().map(|b| (b * 100).to_string()).collect();
        let markup = format!(
            r#"<div><div id="t" class="{}" elq elq-breakpoints elq-breakpoints-widths="{}"></div></div>"#,
            user.iter().cloned().collect::<Vec<_>>().join(" "),
            list.join(" ")
        );
        let mut doc = Document::parse(&markup).unwrap();
        doc.viewport = Viewport { width: a, height: 800.0 };
        let targets = bootstrap_targets(&doc, doc.root(), false);
        let mut elq = build_engine(doc, Stylesheet::parse("").unwrap(), &Config::default()).unwrap();
        elq.activate(&targets).unwrap();
        elq.settle().unwrap();
        let t = targets[0];
        let first = elq.page().doc().element(t).unwrap().classes.clone();
        for w in [b, a] {
            elq.mutate(Mutation::SetViewport(Viewport { width: w, height: 800.0 })).unwrap();
            elq.settle().unwrap();
        }
        let back = elq.page().doc().element(t).unwrap().classes.clone();
        prop_assert_eq!(back, first);
    });
}

/// A grid nested in a column sizes its own columns from its own row width,
/// never from the outer row's states.
pub fn grid_encapsulation(cases: u32) {
    proptest!(config(cases), |(
        outer in (1u32..10, 1u32..=12),
        inner in (1u32..10, 1u32..=12),
        viewport in 100u32..1200,
    )| {
        let col = |(bp, size): (u32, u32)| format!("col-{}-{}", bp * 100, size);
        let markup = format!(
            r#"<div class="container"><div id="outer" class="row"><div id="oc" class="{}">
                 <div class="container"><div id="inner" class="row"><div id="ic" class="{}">x</div></div></div>
               </div></div></div>"#,
            col(outer),
            col(inner)
        );
        let mut doc = Document::parse(&markup).unwrap();
        doc.viewport = Viewport { width: viewport as f64, height: 800.0 };
        let targets = bootstrap_targets(&doc, doc.root(), true);
        let mut elq = build_engine(doc, Stylesheet::parse("").unwrap(), &Config::default()).unwrap();
        elq.activate(&targets).unwrap();
        elq.settle().unwrap();
        prop_assert_eq!(elq.stats().cycles_detected, 0);

        let band = |row: f64, (bp, size): (u32, u32)| {
            // Generated percentages carry four decimals.
            let percent = (size as f64 / 12.0 * 100.0 * 1e4).round() / 1e4;
            if row >= (bp * 100) as f64 { row * percent / 100.0 } else { row }
        };
        let oc = band(viewport as f64, outer);
        let ic = band(oc, inner);
        let doc = elq.page().doc();
        let (oc_id, ic_id) = (doc.by_id("oc").unwrap(), doc.by_id("ic").unwrap());
        prop_assert!((elq.read_size(oc_id).unwrap().width - oc).abs() < 1e-6);
        prop_assert!((elq.read_size(ic_id).unwrap().width - ic).abs() < 1e-6);
    });
}
