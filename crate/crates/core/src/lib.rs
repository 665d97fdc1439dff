//! Numerical workbench for a sharp local area–diastole inequality on the
//! two-sphere carrying the flat metric built from two unit equilateral
//! triangles.
//!
//! The sphere is realized as the quotient of the hexagonal flat torus by an
//! order-3 rotation, ramified over three cone points of angle 2π/3. The
//! crate constructs the horizontal geodesic loop family and the sweep-out
//! cycles contracting it to the cone points, and verifies every identity and
//! inequality along the way at configurable precision for user-supplied
//! conformal perturbations e^{2u} of the flat metric:
//!
//! - [`lattice`]: hexagonal lattice reduction, the flat-torus systole and
//!   the Loewner inequality checker;
//! - [`cover`]: the deck rotation, its fixed points, and torus quadrature
//!   (areas and sup norms) for conformal factors;
//! - [`field`]: exact Fourier conformal factors with deck symmetrization;
//! - [`sweep`]: the loop family, sweep cycles, development hexagons,
//!   trapezoid domains and the Stokes identity;
//! - [`verify`]: the averaging/Cauchy–Schwarz chain, neighborhood
//!   certificates, the sweep diastole bound and the final verdict;
//! - [`conformal`]: the singular conformal density and cone-angle checks.

pub mod conformal;
pub mod cover;
pub mod field;
pub mod lattice;
pub mod quad;
pub mod report;
pub mod sweep;
pub mod verify;

pub use field::{ConformalFactorField, FieldError, FieldValue};
pub use lattice::{hex_basis, LatticeBasis, PlanePoint, TorusPoint};
pub use report::{InequalityReport, ReportBundle, Verdict};
pub use verify::{theorem_check, TheoremVerdict, VerifySettings};
