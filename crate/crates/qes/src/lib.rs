//! Analytic eigenpairs of quasi-exactly solvable Schrödinger equations.
//!
//! A one-dimensional stationary Schrödinger problem whose potential is a
//! finite Laurent expansion in a factor function `f(x)`, and whose
//! eigenfunctions are a weight times a power of `f` times a polynomial in
//! a basis function `h(x)`, reduces to a finite system of algebraic
//! equations in the expansion data. This crate builds that system from a
//! declarative [`model::ProblemSpec`], solves it in stages (weight chain,
//! factor exponent, energy pencil, constraint fitting, iterative
//! polishing), and verifies every emitted eigenpair against the original
//! differential equation on a grid that never touches the coefficient
//! algebra.
//!
//! The arithmetic backbone is [`coeffseq::CoeffSeq`], a sparse
//! integer-indexed sequence type closed under convolution:
//!
//! ```
//! use qes::coeffseq::CoeffSeq;
//! use qes::scalar::Scalar;
//!
//! // (1 + 3h²)² = 1 + 6h² + 9h⁴
//! let f = CoeffSeq::from_entries(vec![(0, Scalar::from_int(1)), (2, Scalar::from_int(3))]);
//! let sq = f.convolve(&f);
//! assert_eq!(sq.get(2), Scalar::from_int(6));
//! assert_eq!(sq.power(2), sq.convolve(&f).convolve(&f).power(0).convolve(&sq));
//! assert_eq!(sq.window(), Some((0, 4)));
//! ```
//!
//! End to end, solving a bundled preset takes a few lines:
//!
//! ```
//! use qes::catalog;
//! use qes::solver::{solve, SolveOptions};
//!
//! let preset = catalog::preset("kuliy-tkachuk", &[("b", 1.0)]).unwrap();
//! let records = solve(&preset.spec.with_n(0), &SolveOptions::default()).unwrap();
//! assert!(records.iter().any(|r| r.energy.to_f64().abs() < 1e-9));
//! ```

pub mod assembler;
pub mod catalog;
pub mod coeffseq;
pub mod elliptic;
pub mod error;
pub mod model;
pub mod oracle;
pub mod poly;
pub mod report;
pub mod scalar;
pub mod solver;

pub use error::{Error, Result};

use model::{Diagnostics, ProblemSpec};

/// Validate a problem spec: structural invariants plus the active row
/// window of the assembled system.
pub fn validate(p: &ProblemSpec) -> Diagnostics {
    let mut d = model::validate_structure(p);
    if d.is_ok() {
        match assembler::assemble(p) {
            Ok(sys) => d.j_window = Some(sys.j_window),
            Err(e) => d.push(model::Severity::Error, format!("{e}")),
        }
    }
    d
}

/// Cap the global thread pool from the `QES_THREADS` environment
/// variable. Call once at startup; later calls are ignored.
pub fn init_threads_from_env() {
    if let Ok(v) = std::env::var("QES_THREADS") {
        if let Ok(n) = v.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
        }
    }
}
