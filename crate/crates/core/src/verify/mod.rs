//! Named experiments that turn structural properties into pass/fail reports.

mod comparison;
mod cross;
mod markov;
pub mod models;
mod report;
mod stability;
mod suite;

pub use comparison::{comparison_experiment, comparison_precondition, random_ordered_pairs};
pub use cross::cross_validate;
pub use markov::markov_property_check;
pub use report::{render_table, PropertyReport, ReportKind, Status};
pub use stability::{one_over_n, stability_experiment, StabilityOutcome};
pub use suite::{
    cole_hopf_report, comparison_report, fenchel_report, markov_reports, pde_reports,
    property_suite, reflection_reports, stopping_report, SuiteSettings, Tolerances,
};
