use serde::Deserialize;

use super::HarnessError;
use crate::dom::{Document, NodeId};
use crate::style::{matches, parse_selector};

#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub steps: Vec<Step>,
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case", deny_unknown_fields)]
pub enum Step {
    SetViewport { width: f64, height: Option<f64> },
    SetStyle { target: String, property: String, value: Option<String> },
    AddSubtree { parent: String, markup: String },
    Remove { target: String },
    Settle,
}

impl Step {
    pub fn name(&self) -> &'static str {
        match self {
            Step::SetViewport { .. } => "set_viewport",
            Step::SetStyle { .. } => "set_style",
            Step::AddSubtree { .. } => "add_subtree",
            Step::Remove { .. } => "remove",
            Step::Settle => "settle",
        }
    }
}

impl Scenario {
    pub fn parse(text: &str) -> Result<Scenario, HarnessError> {
        serde_json::from_str(text).map_err(|e| HarnessError::Scenario(e.to_string()))
    }
}

/// Resolves `#id`, `@<node>` or a selector to exactly one authored element.
pub fn resolve_target(doc: &Document, target: &str) -> Result<NodeId, HarnessError> {
    let found: Vec<NodeId> = if let Some(n) = target.strip_prefix('@') {
        let id = n.parse().map(NodeId).map_err(|_| HarnessError::Target(format!("bad node reference {target:?}")))?;
        doc.get(id).filter(|e| !e.injected).map(|_| id).into_iter().collect()
    } else if let Some(id) = target.strip_prefix('#') {
        authored(doc).filter(|n| doc.get(*n).and_then(|e| e.attribute("id")) == Some(id)).collect()
    } else {
        let sel = parse_selector(target).map_err(|e| HarnessError::Target(format!("{target:?}: {e}")))?;
        authored(doc).filter(|n| matches(&sel, doc, *n)).collect()
    };
    match found.as_slice() {
        [one] => Ok(*one),
        _ => Err(HarnessError::Target(format!("{target:?} matches {} elements, expected one", found.len()))),
    }
}

fn authored(doc: &Document) -> impl Iterator<Item = NodeId> + '_ {
    doc.preorder().into_iter().filter(|n| doc.get(*n).is_some_and(|e| !e.injected))
}
