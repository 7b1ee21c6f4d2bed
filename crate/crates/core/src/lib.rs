//! Element queries on a simulated browser page.
//!
//! A small document model, CSS subset and box layout stand in for the
//! browser. On top of that sit the leveled batch processor, injected resize
//! detectors and the element query instance with its bundled plugins.

pub mod batch;
pub mod dom;
pub mod elq;
pub mod harness;
pub mod layout;
pub mod plugins;
pub mod resize;
pub mod style;

pub use dom::{Document, NodeId};
pub use elq::{Elq, ElqConfig, ElqError};
pub use layout::Page;
pub use style::Stylesheet;
