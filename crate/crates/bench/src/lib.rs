//! Shared workloads for the criterion benches in `benches/`.

use selfcomp_core::{
    build_netlist, characterize, synthetic_pair, BlendEngine, CompensationModel, ErrorProfile,
    MultiplierConfig, MultiplierNetlist, Quantizer, RgbImage,
};

pub struct Fixture {
    pub netlist: MultiplierNetlist,
    pub profile: ErrorProfile,
    pub model: CompensationModel,
    pub engine: BlendEngine,
    pub images: (RgbImage, RgbImage),
}

/// Baseline multiplier, its trained model and one synthetic pair of the
/// given size.
pub fn fixture(width: u32, height: u32) -> Fixture {
    let netlist = build_netlist(MultiplierConfig::baseline()).unwrap();
    let profile = characterize(&netlist).unwrap();
    let model = CompensationModel::train(&profile, Quantizer::new(16, 8).unwrap()).unwrap();
    let engine = BlendEngine::new(&netlist, Some(model.clone())).unwrap();
    Fixture {
        netlist,
        profile,
        model,
        engine,
        images: synthetic_pair(2019, 0, width, height),
    }
}
