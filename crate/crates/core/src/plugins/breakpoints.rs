use super::PluginsError;
use crate::dom::{Element, NodeId};
use crate::elq::{Breakpoint, HookCx, InstanceInfo, PluginApi, PluginDefinition, PluginError, PluginOptions};
use crate::style::Length;

pub const ATTR: &str = "elq-breakpoints";
type Constructor = fn(Length) -> Breakpoint;
const DIMENSIONS: [(&str, Constructor); 2] =
    [("elq-breakpoints-widths", Breakpoint::width), ("elq-breakpoints-heights", Breakpoint::height)];

/// Breakpoints declared on an element through its `elq-breakpoints-widths`
/// and `elq-breakpoints-heights` attributes. Unannotated elements have none.
pub fn parse_breakpoints(el: &Element) -> Result<Vec<Breakpoint>, PluginsError> {
    if !el.has_elq_attribute(ATTR) {
        return Ok(Vec::new());
    }
    let mut out = Vec::new();
    for (attr, make) in DIMENSIONS {
        for token in el.elq_attribute(attr).unwrap_or("").split_whitespace() {
            let value = Length::parse_token(token).ok_or_else(|| PluginsError::BadBreakpointToken(token.into()))?;
            out.push(make(value));
        }
    }
    Ok(out)
}

pub struct BreakpointAttributes;

impl PluginDefinition for BreakpointAttributes {
    fn name(&self) -> &str {
        "elq-breakpoints"
    }

    fn version(&self) -> &str {
        "0.1.0"
    }

    fn make(&self, _instance: &InstanceInfo, _options: &PluginOptions) -> Box<dyn PluginApi> {
        Box::new(BreakpointsPlugin)
    }
}

pub struct BreakpointsPlugin;

impl PluginApi for BreakpointsPlugin {
    fn activate(&mut self, cx: &mut HookCx<'_>, el: NodeId) -> Result<(), PluginError> {
        if !cx.element(el)?.has_elq_attribute(ATTR) {
            return Ok(());
        }
        cx.raise(el, |p| {
            p.resize_detection = true;
            p.update_breakpoints = true;
            p.apply_breakpoint_states = true;
            p.cycle_detection = true;
        })
    }

    fn get_breakpoints(&mut self, cx: &mut HookCx<'_>, el: NodeId) -> Result<Vec<Breakpoint>, PluginError> {
        parse_breakpoints(cx.element(el)?).map_err(|e| PluginError(e.to_string()))
    }
}
