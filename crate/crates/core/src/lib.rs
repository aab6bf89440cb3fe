//! Bit-accurate simulation of an approximate array multiplier, exhaustive
//! error characterization, and a decision-tree compensation model applied
//! per multiplier or per accelerator.
//!
//! Pipeline: [`build_netlist`] → [`characterize`] → [`build_table`] →
//! [`train_tree`] → [`CompensatedMultiplier`] / [`BlendEngine`].

pub mod cells;
pub mod compensator;
pub mod config;
pub mod error;
pub mod imaging;
pub mod learner;
pub mod mularray;
pub mod persist;
pub mod profiler;

pub use cells::{cell_error_rows, eval_cell, AdderCellKind, AdderCellSpec, CellInputs};
pub use compensator::{
    accelerator_compensation, characterize_compensated, compensate_profile, multiply_compensated,
    AcceleratorConfig, ComparisonReport, CompensatedMultiplier, CompensationMode,
};
pub use config::RunConfig;
pub use error::{Error, Result};
pub use imaging::{
    blend_channel, blend_images, load_image, psnr, psnr_rgb, save_image, synthetic_pair,
    synthetic_suite, BlendEngine, BlendMode, BlendReport, ImageChannel, ModeQuality, RgbImage,
};
pub use learner::{
    build_table, export_model, import_model, predict, train_tree, CompensationModel,
    CompensationTable, CompensationTree, Feature, ModelFile, Quantizer, TreeNode,
};
pub use mularray::{
    build_netlist, cell_census, error_distance, multiply, ArrayTopology, CellCensus,
    MultiplierConfig, MultiplierNetlist, Placement, PlacementKind,
};
pub use profiler::{characterize, histogram, tail_count, ErrorProfile, ErrorStats, Histogram};
