//! Forward attribute reduction for classic and neighborhood rough sets.
//!
//! The crate provides four greedy reducers sharing one instrumented search
//! skeleton: a plain reducer, a sample-shrinking reducer, one that also
//! drops attributes proven redundant on the undecided region, and the
//! local-redundancy (LRA) reducer that additionally restricts every
//! candidate's evaluation to its active region. All four select the same
//! attributes; they differ only in how much work they do.
//!
//! ```
//! use rough_reduct::{reduce, synth, Mode, NeighborhoodConfig, SynthSpec, Variant};
//!
//! let sys = synth(&SynthSpec::new(7, 200, 6, 0, 2).with_duplicate(5, 0)).unwrap();
//! let cfg = NeighborhoodConfig::new(0.16).unwrap();
//! let plain = reduce(&sys, Mode::Neighborhood, Variant::Plain, Some(cfg)).unwrap();
//! let lra = reduce(&sys, Mode::Neighborhood, Variant::Lra, Some(cfg)).unwrap();
//! assert_eq!(plain.reduct, lra.reduct);
//! assert!(lra.counters.samples_touched < plain.counters.samples_touched);
//! ```

pub mod data;
pub mod error;
pub mod granulation;
pub mod harness;
pub mod lra;
pub mod oracle;
pub mod reduction;

pub use data::{
    load_csv, synth, write_csv, write_schema, AttrId, AttributeColumn, AttributeKind, ColumnRole,
    DecisionSystem, SampleSet, Schema, SynthSpec,
};
pub use error::{Error, Result};
pub use granulation::{
    dependency, neighborhood, partition, positive_region_classic, positive_region_nbr, refine,
    GranuleView, Mode, NeighborhoodConfig, Partition, PositiveRegion, Relation,
};
pub use harness::{run_bench, BenchReport, BenchSpec};
pub use lra::{lra_step, ActiveRegionMap};
pub use oracle::{audit_reducts, verify_slr, verify_sr, OracleBudget, VerifyReport};
pub use reduction::{reduce, reduce_with, step, sr_test, Instrumentation, ReductState, ReductionReport, Variant};
