//! Checks of the exact identities and inequalities, operator-norm probes and
//! grid-refinement studies.

pub mod consistency;
pub mod distributional;
pub mod domination;
pub mod family;
pub mod gradient_bound;
pub mod probe;
pub mod refinement;
pub mod report;
pub mod representation;
pub mod symbols;

pub use consistency::{
    verify_spherical_consistency, verify_spherical_consistency_with, ConsistencySettings,
};
pub use distributional::{
    distributional_sides, verify_distributional_gradient, verify_distributional_gradient_with,
    DistributionalSettings, GaussianBump,
};
pub use domination::{verify_domination, verify_domination_with};
pub use family::{FamilyEntry, FunctionFamily, Member, FAMILY_IDS};
pub use gradient_bound::{
    verify_gradient_bound, verify_gradient_bound_with, GradientBoundSettings,
};
pub use probe::{
    probe_operator_norm, probe_with_refinement, ProbeOperator, ProbeResult, ProbeRow,
    ProbeSettings, Refinement, PROBE_CSV_HEADER,
};
pub use refinement::{refinement_study, StudyRow, StudyTable, ORACLES, STUDY_CSV_HEADER};
pub use report::{write_csv, CheckReport, Sample, CSV_HEADER};
pub use representation::{
    auto_quad_order, verify_representation, verify_representation_with, RepresentationSettings,
};
pub use symbols::{catalog_symbols, verify_boundary_constants, verify_zero_mean};
