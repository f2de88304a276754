//! Minimality diagnostics for stopped one-dimensional diffusions and
//! Brownian motions: scale functions and boundary classification, the
//! Kotani martingale test, uniform-integrability tail diagnostics, scalar
//! test transforms, and the assembled sufficiency report.

pub mod expr;
pub mod kotani;
pub mod report;
pub mod scale;
pub mod tail;
pub mod transform;
pub mod ui;

pub use expr::Expr;
pub use kotani::{kotani_test, KotaniReport, KotaniVerdict};
pub use report::{
    assemble_overall, minimality_report, ConditionReport, ConditionStatus, GChoice,
    MinimalityReport, Overall, ProcessModel, ReportConfig, Shortcut, StoppingRule,
};
pub use scale::{BoundaryClassification, DiffusionKind, DiffusionSpec, ScaleFunctionTable};
pub use transform::GTransform;
pub use ui::{ui_diagnostic, SignedPart, StoppedPaths, UiConfig, UiReport, UiVerdict};
