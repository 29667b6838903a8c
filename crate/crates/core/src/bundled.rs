//! Oil-wildcatter models shipped with the crate (see `models/` at the
//! repository root).

use crate::io::parse_model_specs;
use crate::model::{IridModel, ModelSpecs};

/// Budget-constrained wildcatter: B constrains D through relevance arrows.
/// Passing on a wet well is charged the lost profit.
pub const WILDCATTER_IRID: &str = include_str!("../../../models/wildcatter_irid.json");
/// Same, but with P(R=o | O=y, T=t2) = 0.90.
pub const WILDCATTER_IRID_LISTING_R: &str =
    include_str!("../../../models/wildcatter_irid_listing_r.json");
/// Same, but passing on a wet well costs only the test rather than the lost profit.
pub const WILDCATTER_IRID_TABLE1_PAYOFFS: &str =
    include_str!("../../../models/wildcatter_irid_table1_payoffs.json");
/// Budget observed before both decisions but constraining nothing.
pub const WILDCATTER_INFO_ONLY: &str = include_str!("../../../models/wildcatter_info_only.json");
/// The plain two-decision wildcatter without a budget node.
pub const WILDCATTER_NO_BUDGET: &str = include_str!("../../../models/wildcatter_no_budget.json");
/// Standard-ID encoding of the budget through a deterministic "drilling happens" node.
pub const WILDCATTER_BUDGET_WORKAROUND: &str =
    include_str!("../../../models/wildcatter_budget_workaround.json");

fn load(src: &str) -> IridModel {
    crate::io::parse_model(src.as_bytes()).expect("bundled model is valid")
}

pub fn wildcatter_specs() -> ModelSpecs {
    parse_model_specs(WILDCATTER_IRID.as_bytes()).expect("bundled model parses")
}

pub fn wildcatter_irid() -> IridModel {
    load(WILDCATTER_IRID)
}

pub fn wildcatter_irid_listing_r() -> IridModel {
    load(WILDCATTER_IRID_LISTING_R)
}

pub fn wildcatter_irid_table1_payoffs() -> IridModel {
    load(WILDCATTER_IRID_TABLE1_PAYOFFS)
}

pub fn wildcatter_info_only() -> IridModel {
    load(WILDCATTER_INFO_ONLY)
}

pub fn wildcatter_no_budget() -> IridModel {
    load(WILDCATTER_NO_BUDGET)
}

pub fn wildcatter_budget_workaround() -> IridModel {
    load(WILDCATTER_BUDGET_WORKAROUND)
}
