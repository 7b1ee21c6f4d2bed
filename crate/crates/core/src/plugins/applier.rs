use std::collections::BTreeMap;

use crate::dom::NodeId;
use crate::elq::{HookCx, InstanceInfo, PluginApi, PluginDefinition, PluginError, PluginOptions, StateSet};

pub struct StateClasses;

impl PluginDefinition for StateClasses {
    fn name(&self) -> &str {
        "elq-breakpoint-classes"
    }

    fn version(&self) -> &str {
        "0.1.0"
    }

    fn make(&self, _instance: &InstanceInfo, _options: &PluginOptions) -> Box<dyn PluginApi> {
        Box::new(ClassApplier::default())
    }
}

/// Writes one class per breakpoint state, after the element's own classes.
/// Only tokens this plugin added are ever removed.
#[derive(Default)]
pub struct ClassApplier {
    owned: BTreeMap<NodeId, Vec<String>>,
}

impl ClassApplier {
    pub fn owned(&self, el: NodeId) -> &[String] {
        self.owned.get(&el).map_or(&[], Vec::as_slice)
    }
}

impl PluginApi for ClassApplier {
    fn apply_breakpoint_states(
        &mut self,
        cx: &mut HookCx<'_>,
        el: NodeId,
        states: &StateSet,
    ) -> Result<(), PluginError> {
        let next = states.class_names();
        let prev = self.owned.remove(&el).unwrap_or_default();
        if prev != next {
            // Re-adding every token keeps state classes in breakpoint order.
            cx.set_classes(el, next.clone(), prev)?;
        }
        self.owned.insert(el, next);
        Ok(())
    }
}
