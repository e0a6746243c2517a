//! IO and orchestration around the solver core: grayscale image and label
//! files, the binary model and map formats, CSV emission, dataset
//! resolution, and the building blocks of the `scsc` command line tool.

pub mod csvout;
pub mod dataset;
pub mod error;
pub mod labels;
pub mod mask;
pub mod model;
pub mod mosaic;
pub mod pipeline;
pub mod raster;

pub mod cli;

pub use error::{ToolError, ToolResult};
