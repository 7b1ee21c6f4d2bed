use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use super::{Breakpoint, ElementRecord, ElqEvent, StateSet, Warning};
use crate::dom::{Document, Element, NodeId};
use crate::layout::{LayoutBox, Mutation, Page};
use crate::resize::Strategy;
use crate::style::Rule;

/// Per-element flags steering the engine. Plugins raise them in `activate`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize)]
pub struct BehaviorProps {
    pub resize_detection: bool,
    pub cycle_detection: bool,
    pub update_breakpoints: bool,
    pub apply_breakpoint_states: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Hook {
    Activate,
    GetElements,
    GetBreakpoints,
    ApplyBreakpointStates,
    Event,
}

impl Hook {
    pub fn as_str(self) -> &'static str {
        match self {
            Hook::Activate => "activate",
            Hook::GetElements => "getElements",
            Hook::GetBreakpoints => "getBreakpoints",
            Hook::ApplyBreakpointStates => "applyBreakpointStates",
            Hook::Event => "event",
        }
    }
}

impl fmt::Display for Hook {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
#[error("{0}")]
pub struct PluginError(pub String);

impl PluginError {
    pub fn new(message: impl Into<String>) -> Self {
        PluginError(message.into())
    }
}

/// What a plugin definition gets to see of the instance it is joining.
#[derive(Clone, Debug)]
pub struct InstanceInfo {
    pub version: &'static str,
    pub strategy: Strategy,
    pub plugins: Vec<String>,
}

pub type PluginOptions = BTreeMap<String, String>;

pub trait PluginDefinition {
    fn name(&self) -> &str;

    fn version(&self) -> &str;

    fn is_compatible(&self, _instance: &InstanceInfo) -> bool {
        true
    }

    fn make(&self, instance: &InstanceInfo, options: &PluginOptions) -> Box<dyn PluginApi>;
}

/// Hooks a plugin may implement. All default to doing nothing.
pub trait PluginApi {
    fn activate(&mut self, _cx: &mut HookCx<'_>, _el: NodeId) -> Result<(), PluginError> {
        Ok(())
    }

    fn get_elements(&mut self, _cx: &mut HookCx<'_>, _el: NodeId) -> Result<Vec<NodeId>, PluginError> {
        Ok(Vec::new())
    }

    fn get_breakpoints(&mut self, _cx: &mut HookCx<'_>, _el: NodeId) -> Result<Vec<Breakpoint>, PluginError> {
        Ok(Vec::new())
    }

    fn apply_breakpoint_states(
        &mut self,
        _cx: &mut HookCx<'_>,
        _el: NodeId,
        _states: &StateSet,
    ) -> Result<(), PluginError> {
        Ok(())
    }

    fn on_event(&mut self, _cx: &mut HookCx<'_>, _event: &ElqEvent) {}
}

#[derive(Clone, Debug, PartialEq)]
pub(crate) enum Request {
    ApplyStates { to: NodeId, states: StateSet },
}

/// The documented operations available to hooks.
pub struct HookCx<'a> {
    pub(crate) page: &'a mut Page,
    pub(crate) records: &'a BTreeMap<NodeId, ElementRecord>,
    pub(crate) warnings: &'a mut Vec<Warning>,
    pub(crate) requests: &'a mut Vec<Request>,
    pub(crate) hook: Hook,
}

impl HookCx<'_> {
    pub fn hook(&self) -> Hook {
        self.hook
    }

    pub fn doc(&self) -> &Document {
        self.page.doc()
    }

    pub fn element(&self, el: NodeId) -> Result<&Element, PluginError> {
        self.page.doc().element(el).map_err(|e| PluginError(e.to_string()))
    }

    pub fn props(&self, el: NodeId) -> BehaviorProps {
        self.page.doc().get(el).map(|e| e.elq).unwrap_or_default()
    }

    /// Raises behavior flags. Only allowed while activating.
    pub fn raise(&mut self, el: NodeId, f: impl FnOnce(&mut BehaviorProps)) -> Result<(), PluginError> {
        if self.hook != Hook::Activate {
            return Err(PluginError::new(format!("behavior flags are locked during {}", self.hook)));
        }
        let props = self.page.behavior_mut(el).map_err(|e| PluginError(e.to_string()))?;
        f(props);
        Ok(())
    }

    pub fn set_classes(&mut self, el: NodeId, add: Vec<String>, remove: Vec<String>) -> Result<(), PluginError> {
        self.page.mutate(Mutation::SetClasses { el, add, remove }).map(|_| ()).map_err(|e| PluginError(e.to_string()))
    }

    pub fn set_generated_rules(&mut self, origin: &str, rules: Vec<Rule>) -> Result<(), PluginError> {
        self.page
            .mutate(Mutation::SetGeneratedRules { origin: origin.to_string(), rules })
            .map(|_| ())
            .map_err(|e| PluginError(e.to_string()))
    }

    pub fn is_activated(&self, el: NodeId) -> bool {
        self.records.contains_key(&el)
    }

    pub fn applied_states(&self, el: NodeId) -> Option<&StateSet> {
        self.records.get(&el).and_then(|r| r.applied.as_ref())
    }

    /// Asks the engine to apply `states` to another element once the
    /// current hook returns.
    pub fn forward_states(&mut self, to: NodeId, states: StateSet) {
        self.requests.push(Request::ApplyStates { to, states });
    }

    /// Last committed box; never forces a layout.
    pub fn committed_box(&self, el: NodeId) -> Option<LayoutBox> {
        self.page.layout().committed_box(el)
    }

    pub fn root_font_size(&self) -> f64 {
        self.page.doc().root_font_size
    }

    pub fn warn(&mut self, code: &str, el: Option<NodeId>, message: impl Into<String>) {
        self.warnings.push(Warning { code: code.to_string(), element: el, message: message.into() });
    }
}
