//! Operand quantization, per-cluster compensation targets and the decision
//! tree that compresses them.

mod model;
mod quantizer;
mod table;
mod tree;

pub use model::{export_model, import_model, CompensationModel, ModelFile};
pub use quantizer::Quantizer;
pub use table::{build_table, CompensationTable};
pub use tree::{predict, train_tree, CompensationTree, Feature, TreeNode};
