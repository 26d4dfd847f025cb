//! Economic panel assembly and structural-equation fitting.

mod fit;
mod model;
mod panel;
mod report;
mod series;

pub use fit::{
    fit_ml, implied_covariance, implied_covariance_jacobian, ml_discrepancy, ml_gradient, stars, ParameterEstimate,
    SemFit, GRADIENT_TOLERANCE, MAX_ITERATIONS,
};
pub use model::{
    builtin_swb_model, display_name, parse_model, Link, LinkKind, ModelError, ParamKind, Parameter, SemModel,
    BUILTIN_SWB_MODEL, SINGLE_INDICATOR_RESIDUAL,
};
pub use panel::{build_panel, parse_frequencies, read_panel_csv, write_panel_csv, Panel, Standardization};
pub use report::{render_csv, render_text, report_rows, ReportRow};
pub use series::{interpolate_quarterly_to_monthly, EconSeries, Frequency, YearMonth};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SemError {
    #[error("wrong frequency for {name}: expected {expected}, got {got}")]
    WrongFrequency {
        name: String,
        expected: Frequency,
        got: Frequency,
    },
    #[error("{name} needs at least {needed} observations, got {got}")]
    TooFewObservations { name: String, needed: usize, got: usize },
    #[error("{name}: periods must be strictly increasing (at {at})")]
    Unordered { name: String, at: YearMonth },
    #[error("{name}: non-finite value at {at}")]
    NonFinite { name: String, at: YearMonth },
    #[error("empty panel: no month has every variable")]
    EmptyPanel,
    #[error("column {0} appears twice")]
    DuplicateColumn(String),
    #[error("column {0} is constant and cannot be standardized")]
    ConstantColumn(String),
    #[error("variable {0} is not in the panel")]
    MissingVariable(String),
    #[error("panel csv line {line}: {message}")]
    Csv { line: u64, message: String },
    #[error("frequency sidecar: {0}")]
    Sidecar(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("not positive definite: {0}")]
    NotPositiveDefinite(String),
    #[error("cyclic or degenerate path structure")]
    Degenerate,
    #[error("sample size {n} must exceed the {p} observed variables")]
    SampleSize { n: usize, p: usize },
}
