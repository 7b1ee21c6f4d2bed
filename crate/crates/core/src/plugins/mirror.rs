use std::collections::BTreeMap;

use super::breakpoints::ATTR as BREAKPOINTS_ATTR;
use crate::dom::{Document, NodeId};
use crate::elq::{HookCx, InstanceInfo, PluginApi, PluginDefinition, PluginError, PluginOptions, StateSet};

pub const MIRROR_ATTR: &str = "elq-mirror";
pub const W_MIRROR_NO_ANCESTOR: &str = "W_MIRROR_NO_ANCESTOR";

/// Nearest ancestor carrying `elq-breakpoints`.
pub fn mirror_target(doc: &Document, el: NodeId) -> Option<NodeId> {
    doc.ancestors(el).find(|a| doc.get(*a).is_some_and(|e| e.has_elq_attribute(BREAKPOINTS_ATTR)))
}

pub struct Mirror;

impl PluginDefinition for Mirror {
    fn name(&self) -> &str {
        "elq-mirror"
    }

    fn version(&self) -> &str {
        "0.1.0"
    }

    fn make(&self, _instance: &InstanceInfo, _options: &PluginOptions) -> Box<dyn PluginApi> {
        Box::new(MirrorPlugin::default())
    }
}

/// Copies the state classes of a breakpoints element onto its mirrors. A
/// mirror has no detector of its own.
#[derive(Default)]
pub struct MirrorPlugin {
    mirrors: BTreeMap<NodeId, Vec<NodeId>>,
}

impl MirrorPlugin {
    fn is_mirror(cx: &HookCx<'_>, el: NodeId) -> Result<bool, PluginError> {
        Ok(cx.element(el)?.has_elq_attribute(MIRROR_ATTR))
    }
}

impl PluginApi for MirrorPlugin {
    fn get_elements(&mut self, cx: &mut HookCx<'_>, el: NodeId) -> Result<Vec<NodeId>, PluginError> {
        if !Self::is_mirror(cx, el)? {
            return Ok(Vec::new());
        }
        Ok(mirror_target(cx.doc(), el).into_iter().collect())
    }

    fn activate(&mut self, cx: &mut HookCx<'_>, el: NodeId) -> Result<(), PluginError> {
        if !Self::is_mirror(cx, el)? {
            return Ok(());
        }
        let Some(target) = mirror_target(cx.doc(), el) else {
            cx.warn(W_MIRROR_NO_ANCESTOR, Some(el), format!("mirror {el} has no elq-breakpoints ancestor"));
            return Ok(());
        };
        cx.raise(el, |p| p.apply_breakpoint_states = true)?;
        self.mirrors.entry(target).or_default().push(el);
        if let Some(states) = cx.applied_states(target).cloned() {
            cx.forward_states(el, states);
        }
        Ok(())
    }

    fn apply_breakpoint_states(
        &mut self,
        cx: &mut HookCx<'_>,
        el: NodeId,
        states: &StateSet,
    ) -> Result<(), PluginError> {
        for m in self.mirrors.get(&el).into_iter().flatten() {
            cx.forward_states(*m, states.clone());
        }
        Ok(())
    }
}
