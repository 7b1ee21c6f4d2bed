use std::cmp::Ordering;
use std::fmt;

use serde::Serialize;

use crate::style::{format_number, Length};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Dimension {
    Width,
    Height,
}

impl Dimension {
    pub fn as_str(self) -> &'static str {
        match self {
            Dimension::Width => "width",
            Dimension::Height => "height",
        }
    }
}

/// A point on an element's width or height range.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Breakpoint {
    pub dimension: Dimension,
    pub value: Length,
}

impl Breakpoint {
    pub fn width(value: Length) -> Self {
        Breakpoint { dimension: Dimension::Width, value }
    }

    pub fn height(value: Length) -> Self {
        Breakpoint { dimension: Dimension::Height, value }
    }

    /// `em` resolves against the element's own font size, `rem` against the
    /// root font size.
    pub fn resolve_px(&self, font_size: f64, root_font_size: f64) -> f64 {
        self.value.to_px(font_size, root_font_size)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    /// At or above the breakpoint.
    Min,
    /// Below the breakpoint.
    Max,
}

impl Side {
    pub fn as_str(self) -> &'static str {
        match self {
            Side::Min => "min",
            Side::Max => "max",
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct BreakpointState {
    pub breakpoint: Breakpoint,
    pub side: Side,
    /// Resolved pixel value at the time the state was computed.
    pub px: f64,
}

impl BreakpointState {
    /// `elq-{min|max}-{width|height}-{value}{unit}`, keeping the authored unit.
    pub fn class_name(&self) -> String {
        format!(
            "elq-{}-{}-{}{}",
            self.side.as_str(),
            self.breakpoint.dimension.as_str(),
            format_number(self.breakpoint.value.magnitude),
            self.breakpoint.value.unit.as_str()
        )
    }
}

impl PartialEq for BreakpointState {
    fn eq(&self, other: &Self) -> bool {
        self.breakpoint == other.breakpoint && self.side == other.side
    }
}

impl fmt::Display for BreakpointState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}@{}", self.side.as_str(), self.breakpoint.value)
    }
}

/// One state per breakpoint, ordered by (dimension, resolved px).
#[derive(Clone, Debug, Default, PartialEq)]
pub struct StateSet(Vec<BreakpointState>);

impl StateSet {
    pub fn new(mut states: Vec<BreakpointState>) -> Self {
        states.sort_by(|a, b| {
            a.breakpoint.dimension.cmp(&b.breakpoint.dimension).then(a.px.partial_cmp(&b.px).unwrap_or(Ordering::Equal))
        });
        StateSet(states)
    }

    pub fn states(&self) -> &[BreakpointState] {
        &self.0
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn class_names(&self) -> Vec<String> {
        self.0.iter().map(BreakpointState::class_name).collect()
    }
}

impl fmt::Display for StateSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(ToString::to_string).collect();
        write!(f, "{{{}}}", parts.join(", "))
    }
}

/// Union of breakpoint lists, de-duplicated on (dimension, resolved px);
/// the first occurrence wins.
pub fn merge_breakpoints(
    lists: impl IntoIterator<Item = Vec<Breakpoint>>,
    font_size: f64,
    root_font_size: f64,
) -> Vec<Breakpoint> {
    let mut out: Vec<Breakpoint> = Vec::new();
    for bp in lists.into_iter().flatten() {
        let px = bp.resolve_px(font_size, root_font_size);
        let dup = out.iter().any(|o| o.dimension == bp.dimension && o.resolve_px(font_size, root_font_size) == px);
        if !dup {
            out.push(bp);
        }
    }
    out
}

/// `min` iff the current size on the breakpoint's dimension is at least the
/// breakpoint.
pub fn compute_states(
    breakpoints: &[Breakpoint],
    width: f64,
    height: f64,
    font_size: f64,
    root_font_size: f64,
) -> StateSet {
    StateSet::new(
        breakpoints
            .iter()
            .map(|bp| {
                let px = bp.resolve_px(font_size, root_font_size);
                let size = match bp.dimension {
                    Dimension::Width => width,
                    Dimension::Height => height,
                };
                let side = if size >= px { Side::Min } else { Side::Max };
                BreakpointState { breakpoint: *bp, side, px }
            })
            .collect(),
    )
}
