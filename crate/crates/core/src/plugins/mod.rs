//! The bundled plugins: breakpoint attributes, state classes, mirrors and
//! the responsive grid.

mod applier;
mod breakpoints;
mod grid;
mod mirror;

use thiserror::Error;

pub use applier::{ClassApplier, StateClasses};
pub use breakpoints::{parse_breakpoints, BreakpointAttributes, BreakpointsPlugin};
pub use grid::{generate_css, parse_grid_class, row_classes, Grid, GridClass, GridColumnSpec, GridPlugin, GRID_ORIGIN};
pub use mirror::{mirror_target, Mirror, MirrorPlugin, MIRROR_ATTR, W_MIRROR_NO_ANCESTOR};

use crate::elq::{Elq, ElqError, PluginDefinition, PluginOptions};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PluginsError {
    #[error("bad breakpoint token {0:?}")]
    BadBreakpointToken(String),
    #[error("bad grid column class {0:?}")]
    BadColumnClass(String),
}

/// Registers the breakpoints, state class and mirror plugins, plus the grid
/// when asked for.
pub fn use_default_plugins(elq: &mut Elq, grid: bool) -> Result<(), ElqError> {
    let options = PluginOptions::new();
    let mut defs: Vec<Box<dyn PluginDefinition>> =
        vec![Box::new(BreakpointAttributes), Box::new(StateClasses), Box::new(Mirror)];
    if grid {
        defs.push(Box::new(Grid));
    }
    for def in defs {
        elq.use_plugin(def.as_ref(), &options)?;
    }
    Ok(())
}
