//! Twelve-column responsive grid.
//!
//! A `.row` is a breakpoints element whose breakpoints come from the
//! `col-{breakpoint}-{size}` and `hidden-{breakpoint}-up` classes of its
//! columns. The generated rules only use child combinators anchored at the
//! row, so nested grids never style each other's columns. Rules are emitted
//! in ascending breakpoint order, which lets the largest satisfied
//! breakpoint win through source order.

use std::collections::{BTreeMap, BTreeSet};

use super::PluginsError;
use crate::dom::{Document, NodeId};
use crate::elq::{
    Breakpoint, BreakpointState, HookCx, InstanceInfo, PluginApi, PluginDefinition, PluginError, PluginOptions, Side,
};
use crate::style::{format_number, parse_stylesheet, Length};

pub const GRID_ORIGIN: &str = "elq-grid";
pub const COLUMNS: u32 = 12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridColumnSpec {
    pub breakpoint: Length,
    pub size: u32,
}

impl GridColumnSpec {
    pub fn percent(&self) -> f64 {
        self.size as f64 / COLUMNS as f64 * 100.0
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum GridClass {
    Column { class: String, spec: GridColumnSpec },
    HiddenUp { class: String, breakpoint: Length },
}

impl GridClass {
    pub fn class(&self) -> &str {
        match self {
            GridClass::Column { class, .. } | GridClass::HiddenUp { class, .. } => class,
        }
    }

    pub fn breakpoint(&self) -> Length {
        match self {
            GridClass::Column { spec, .. } => spec.breakpoint,
            GridClass::HiddenUp { breakpoint, .. } => *breakpoint,
        }
    }
}

/// `Ok(None)` for tokens that are not grid classes at all.
pub fn parse_grid_class(token: &str) -> Result<Option<GridClass>, PluginsError> {
    let bad = || PluginsError::BadColumnClass(token.to_string());
    if let Some(rest) = token.strip_prefix("col-") {
        let (bp, size) = rest.rsplit_once('-').ok_or_else(bad)?;
        let breakpoint = Length::parse_token(bp).ok_or_else(bad)?;
        let size: u32 = size.parse().map_err(|_| bad())?;
        if !(1..=COLUMNS).contains(&size) {
            return Err(bad());
        }
        return Ok(Some(GridClass::Column { class: token.into(), spec: GridColumnSpec { breakpoint, size } }));
    }
    if let Some(bp) = token.strip_prefix("hidden-").and_then(|r| r.strip_suffix("-up")) {
        let breakpoint = Length::parse_token(bp).ok_or_else(bad)?;
        return Ok(Some(GridClass::HiddenUp { class: token.into(), breakpoint }));
    }
    Ok(None)
}

/// Grid classes on the direct children of `row`.
pub fn row_classes(doc: &Document, row: NodeId) -> Result<Vec<GridClass>, PluginsError> {
    let mut out = Vec::new();
    for child in doc.get(row).map(|r| r.children.as_slice()).unwrap_or_default() {
        let Some(col) = doc.get(*child) else { continue };
        for token in &col.classes {
            if let Some(c) = parse_grid_class(token)? {
                out.push(c);
            }
        }
    }
    Ok(out)
}

fn min_class(breakpoint: Length) -> String {
    BreakpointState { breakpoint: Breakpoint::width(breakpoint), side: Side::Min, px: 0.0 }.class_name()
}

fn round4(v: f64) -> f64 {
    (v * 1e4).round() / 1e4
}

/// Stylesheet text for a set of grid classes.
pub fn generate_css(classes: &[GridClass], root_font_size: f64) -> String {
    let mut unique: Vec<&GridClass> = Vec::new();
    for c in classes {
        if !unique.iter().any(|u| u.class() == c.class()) {
            unique.push(c);
        }
    }
    let px = |c: &GridClass| c.breakpoint().to_px(root_font_size, root_font_size);
    unique.sort_by(|a, b| {
        let hidden = |c: &GridClass| matches!(c, GridClass::HiddenUp { .. });
        px(a).total_cmp(&px(b)).then(hidden(a).cmp(&hidden(b))).then(a.class().cmp(b.class()))
    });

    let mut css = String::new();
    for c in &unique {
        if let GridClass::Column { class, .. } = c {
            css.push_str(&format!(".{class} {{ width: 100%; }}\n"));
        }
    }
    for c in &unique {
        let row = format!(".row.{}", min_class(c.breakpoint()));
        match c {
            GridClass::Column { class, spec } => {
                css.push_str(&format!("{row} > .{class} {{ width: {}%; }}\n", format_number(round4(spec.percent()))))
            }
            GridClass::HiddenUp { class, .. } => css.push_str(&format!("{row} > .{class} {{ display: none; }}\n")),
        }
    }
    css
}

pub struct Grid;

impl PluginDefinition for Grid {
    fn name(&self) -> &str {
        "elq-grid"
    }

    fn version(&self) -> &str {
        "0.1.0"
    }

    fn make(&self, _instance: &InstanceInfo, _options: &PluginOptions) -> Box<dyn PluginApi> {
        Box::new(GridPlugin::default())
    }
}

#[derive(Default)]
pub struct GridPlugin {
    rows: BTreeMap<NodeId, Vec<GridClass>>,
    generated: String,
}

impl GridPlugin {
    fn regenerate(&mut self, cx: &mut HookCx<'_>) -> Result<(), PluginError> {
        self.rows.retain(|row, _| cx.doc().contains(*row));
        let all: Vec<GridClass> = self.rows.values().flatten().cloned().collect();
        let css = generate_css(&all, cx.root_font_size());
        if css == self.generated {
            return Ok(());
        }
        let sheet = parse_stylesheet(&css).map_err(|e| PluginError(e.to_string()))?;
        cx.set_generated_rules(GRID_ORIGIN, sheet.rules().to_vec())?;
        self.generated = css;
        Ok(())
    }
}

impl PluginApi for GridPlugin {
    /// Every row below a container, nested grids included.
    fn get_elements(&mut self, cx: &mut HookCx<'_>, el: NodeId) -> Result<Vec<NodeId>, PluginError> {
        if !cx.element(el)?.has_class("container") {
            return Ok(Vec::new());
        }
        let doc = cx.doc();
        Ok(doc
            .descendants_inclusive(el)
            .into_iter()
            .filter(|id| *id != el && doc.get(*id).is_some_and(|e| e.has_class("row") && !e.injected))
            .collect())
    }

    fn activate(&mut self, cx: &mut HookCx<'_>, el: NodeId) -> Result<(), PluginError> {
        if !cx.element(el)?.has_class("row") {
            return Ok(());
        }
        let classes = row_classes(cx.doc(), el).map_err(|e| PluginError(e.to_string()))?;
        cx.raise(el, |p| {
            p.resize_detection = true;
            p.update_breakpoints = true;
            p.apply_breakpoint_states = true;
            p.cycle_detection = true;
        })?;
        self.rows.insert(el, classes);
        self.regenerate(cx)
    }

    fn get_breakpoints(&mut self, _cx: &mut HookCx<'_>, el: NodeId) -> Result<Vec<Breakpoint>, PluginError> {
        let mut seen = BTreeSet::new();
        Ok(self
            .rows
            .get(&el)
            .into_iter()
            .flatten()
            .map(GridClass::breakpoint)
            .filter(|bp| seen.insert(bp.to_string()))
            .map(Breakpoint::width)
            .collect())
    }
}
