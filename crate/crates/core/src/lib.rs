//! Numerical toolkit for curves of maximal slope.
//!
//! Computes minimizing-movement steps `argmin_u sigma R((u - u0) / sigma) + E(u)`
//! (or their metric counterparts), the slopes entering energy-dissipation
//! estimates, and the De Giorgi gap between the two sides of the estimate
//! along the variational interpolant.

pub mod banach_gs;
pub mod convex_kernel;
pub mod error;
pub mod linalg;
pub mod metric_gs;
pub mod mms_driver;
pub mod models;
pub mod moreau;
pub mod quadrature;
pub mod report;
pub mod sets;
pub mod solver;
pub mod step;
pub mod system;
pub mod tolerances;

pub use error::{Error, Result};
