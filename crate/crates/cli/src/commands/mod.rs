pub mod compute;
pub mod eval;
pub mod fixtures;
pub mod mix_plan;
pub mod smooth;
pub mod viz;
