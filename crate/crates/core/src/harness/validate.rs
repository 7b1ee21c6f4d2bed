use std::fmt;

use serde::Serialize;

use super::{par, start, Config, HarnessError};
use crate::dom::{Document, NodeId};
use crate::plugins::{mirror_target, parse_breakpoints, parse_grid_class, MIRROR_ATTR, W_MIRROR_NO_ANCESTOR};
use crate::style::{matches, Stylesheet};

pub const E_BAD_BREAKPOINT: &str = "E_BAD_BREAKPOINT";
pub const E_BAD_COLUMN_CLASS: &str = "E_BAD_COLUMN_CLASS";
pub const W_SELECTOR_MATCHES_INJECTED: &str = "W_SELECTOR_MATCHES_INJECTED";
pub const W_GRID_COLUMN_OUTSIDE_ROW: &str = "W_GRID_COLUMN_OUTSIDE_ROW";

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub code: String,
    pub severity: Severity,
    pub element: Option<String>,
    pub message: String,
}

impl Diagnostic {
    fn new(code: &str, severity: Severity, element: Option<NodeId>, message: String) -> Self {
        Diagnostic { code: code.into(), severity, element: element.map(|e| e.to_string()), message }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let severity = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{severity} {}", self.code)?;
        if let Some(el) = &self.element {
            write!(f, " at {el}")?;
        }
        write!(f, ": {}", self.message)
    }
}

/// Static checks on a document and stylesheet. Selector checks run against
/// the document as it looks once detectors are injected.
pub fn validate(doc_text: &str, css_text: &str) -> Result<Vec<Diagnostic>, HarnessError> {
    let doc = Document::parse(doc_text)?;
    let sheet = Stylesheet::parse(css_text)?;
    let mut out = Vec::new();

    for id in doc.preorder() {
        let Some(el) = doc.get(id) else { continue };
        if let Err(e) = parse_breakpoints(el) {
            out.push(Diagnostic::new(E_BAD_BREAKPOINT, Severity::Error, Some(id), e.to_string()));
        }
        if el.has_elq_attribute(MIRROR_ATTR) && mirror_target(&doc, id).is_none() {
            out.push(Diagnostic::new(
                W_MIRROR_NO_ANCESTOR,
                Severity::Warning,
                Some(id),
                "mirror has no elq-breakpoints ancestor".into(),
            ));
        }
        let in_row = el.parent.and_then(|p| doc.get(p)).is_some_and(|p| p.has_class("row"));
        for token in &el.classes {
            match parse_grid_class(token) {
                Ok(Some(_)) if !in_row => out.push(Diagnostic::new(
                    W_GRID_COLUMN_OUTSIDE_ROW,
                    Severity::Warning,
                    Some(id),
                    format!("grid class {token} outside a .row"),
                )),
                Err(e) if in_row => {
                    out.push(Diagnostic::new(E_BAD_COLUMN_CLASS, Severity::Error, Some(id), e.to_string()))
                }
                _ => {}
            }
        }
    }

    let has_errors = out.iter().any(|d| d.severity == Severity::Error);
    if !has_errors {
        let elq = start(doc, Stylesheet::new(sheet.authored_rules().to_vec()), &Config::default())?;
        let doc = elq.page().doc();
        let injected: Vec<NodeId> =
            doc.preorder().into_iter().filter(|id| doc.get(*id).is_some_and(|e| e.injected)).collect();
        let rules = sheet.authored_rules();
        let hits = par::map(rules, |rule| injected.iter().find(|n| matches(&rule.selector, doc, **n)).copied());
        for (rule, hit) in rules.iter().zip(hits) {
            if let Some(node) = hit {
                out.push(Diagnostic::new(
                    W_SELECTOR_MATCHES_INJECTED,
                    Severity::Warning,
                    Some(node),
                    format!("selector `{}` matches injected detector nodes", rule.selector),
                ));
            }
        }
    }
    Ok(out)
}
