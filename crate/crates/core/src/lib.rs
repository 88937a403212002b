//! Numerics for the Cauchy mean value equation over quasi-arithmetic means.
//!
//! Given functions `φ, ψ` and a generator `H`, the equation asks for
//!
//! ```text
//! [φ(y) − φ(x)] ψ'(h) = [ψ(y) − ψ(x)] φ'(h),   h = H⁻¹(αH(x) + βH(y)),
//! ```
//!
//! for all `x, y` in an interval. The crate parses and differentiates
//! expressions, builds means, checks the equation on grids, constructs the
//! known solution families, and classifies a given pair into one of them.
//!
//! ```
//! use cauchy_qam::{build_pair, verify_grid, FamilySpec, Generator, Interval, MeanWeights,
//!     QuasiArithmeticMean, SamplePlan};
//!
//! let gen = Generator::ln(Interval::positive()).unwrap();
//! let spec = FamilySpec::exponential(2.0, [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]);
//! let pair = build_pair(&spec, &gen).unwrap();
//! let q = QuasiArithmeticMean::new(gen, MeanWeights::symmetric());
//! let plan = SamplePlan::uniform(Interval::new(0.5, 4.0).unwrap(), 51);
//! let report = verify_grid(&pair.phi, &pair.psi, &q, &plan, 1e-9).unwrap();
//! assert!(report.pass);
//! ```

pub mod classify;
pub mod cli;
pub mod error;
pub mod expr;
pub mod families;
pub mod funcmodel;
pub mod qam;
pub mod residual;

pub use classify::{
    classify_original, classify_pair, decompose_support, dependence_test, fit_representation, ode_level,
    ClassificationReport, ClassifyOptions, RepresentationFit, SupportDecomposition, Verdict,
};
pub use error::{Error, Result};
pub use expr::{parse, EvalError, Expr, ParseError};
pub use families::{build_pair, counterexample_pair, Basis, Case, CounterexamplePair, FamilySpec, SolutionPair};
pub use funcmodel::{finite_window, Func1D, Interval, SampleMode, SamplePlan};
pub use qam::{Direction, Generator, MeanWeights, QuasiArithmeticMean};
pub use residual::{
    locate_mean_points, reduce, reduced_residual, residual, scaled_residual, verify_grid, MeanPoints,
    ReducedPair, ResidualReport, ResidualTerms,
};
