//! Random instances, batch verification and ratio reports.

mod generate;
mod verify;

pub use generate::{generate, generate_detailed, random_table, Generated, GeneratorSpec, SizeDistribution, TableSpec};
pub use verify::{
    check_charge_monotone, check_oneshot, verify, verify_forest, verify_instance, Failure, Level, RatioReport,
    RatioRow, VerifyOptions,
};
