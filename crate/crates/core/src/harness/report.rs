use std::collections::BTreeMap;

use serde::Serialize;
use serde_json::Value;

use crate::dom::NodeId;
use crate::elq::Elq;
use crate::style::Property;

pub const REPORT_SCHEMA: u32 = 1;

const REPORTED_STYLE: [Property; 5] =
    [Property::BackgroundColor, Property::Color, Property::Display, Property::Position, Property::Width];

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoxReport {
    pub width: f64,
    pub height: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ElementReport {
    pub node: String,
    pub tag: String,
    pub id: Option<String>,
    pub classes: Vec<String>,
    /// `None` when not rendered.
    #[serde(rename = "box")]
    pub layout_box: Option<BoxReport>,
    pub activated: bool,
    pub states: Vec<String>,
    /// Computed values of the reported properties that are set.
    pub style: BTreeMap<String, String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Counters {
    pub forced_layouts: u64,
    pub scheduled_layouts: u64,
    pub layout_passes: u64,
    pub resize_events: u64,
    pub cycles_detected: u64,
    pub settle_rounds: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WarningReport {
    pub code: String,
    pub element: Option<String>,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DetectorReport {
    pub strategy: String,
    pub installed: usize,
    pub forced_layouts_during_install: u64,
    pub memory_units: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Report {
    pub schema: u32,
    pub elements: Vec<ElementReport>,
    pub counters: Counters,
    pub warnings: Vec<WarningReport>,
    pub generated_css: String,
    pub injected_nodes: usize,
    pub position_changes: Vec<String>,
    pub detectors: DetectorReport,
}

fn round4(v: f64) -> f64 {
    let r = (v * 1e4).round() / 1e4;
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

impl Report {
    /// Snapshot of a settled instance.
    pub fn capture(elq: &Elq) -> Report {
        let page = elq.page();
        let doc = page.doc();
        let layout = page.layout();
        let mut elements = Vec::new();
        let mut injected_nodes = 0;
        for id in doc.preorder() {
            let Some(el) = doc.get(id) else { continue };
            if el.injected {
                injected_nodes += 1;
                continue;
            }
            let style = layout
                .committed_style(id)
                .map(|s| {
                    REPORTED_STYLE
                        .iter()
                        .filter_map(|p| s.get(*p).map(|v| (p.name().to_string(), v.to_string())))
                        .collect()
                })
                .unwrap_or_default();
            elements.push(ElementReport {
                node: id.to_string(),
                tag: el.tag.clone(),
                id: el.attribute("id").map(str::to_string),
                classes: el.classes.clone(),
                layout_box: layout
                    .committed_box(id)
                    .map(|b| BoxReport { width: round4(b.width), height: round4(b.height) }),
                activated: elq.is_activated(id),
                states: elq.applied_states(id).map(|s| s.class_names()).unwrap_or_default(),
                style,
            });
        }
        let counters = page.counters();
        let stats = elq.stats();
        let detectors = elq.detectors();
        let strategy = elq.config().strategy;
        let cost = detectors.ledger().get(strategy);
        Report {
            schema: REPORT_SCHEMA,
            elements,
            counters: Counters {
                forced_layouts: counters.forced_layouts,
                scheduled_layouts: counters.scheduled_layouts,
                layout_passes: counters.layout_passes,
                resize_events: stats.resize_events,
                cycles_detected: stats.cycles_detected,
                settle_rounds: stats.settle_rounds,
            },
            warnings: elq
                .warnings()
                .iter()
                .map(|w| WarningReport {
                    code: w.code.clone(),
                    element: w.element.map(|e| e.to_string()),
                    message: w.message.clone(),
                })
                .collect(),
            generated_css: page.sheet().generated_css(),
            injected_nodes,
            position_changes: detectors.position_changes().iter().map(NodeId::to_string).collect(),
            detectors: DetectorReport {
                strategy: strategy.as_str().to_string(),
                installed: detectors.len(),
                forced_layouts_during_install: cost.forced_layouts_during_install,
                memory_units: round4(detectors.ledger().memory_units()),
            },
        }
    }

    pub fn element(&self, node: NodeId) -> Option<&ElementReport> {
        let key = node.to_string();
        self.elements.iter().find(|e| e.node == key)
    }

    pub fn element_by_id(&self, id: &str) -> Option<&ElementReport> {
        self.elements.iter().find(|e| e.id.as_deref() == Some(id))
    }

    pub fn to_value(&self) -> Value {
        serde_json::to_value(self).expect("report is plain data")
    }

    /// Sorted keys, two-space indentation, trailing newline.
    pub fn to_canonical_json(&self) -> String {
        // Object keys come out sorted because serde_json's map is ordered.
        let mut s = serde_json::to_string_pretty(&self.to_value()).expect("report is plain data");
        s.push('\n');
        s
    }
}
