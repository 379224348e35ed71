//! Construction and validation of variational integrators two ways:
//!
//! * **Galerkin**: restrict the one-step action to a polynomial control-point
//!   space, approximate it by quadrature, and extremize over the interior
//!   points ([`galerkin`]), including the SO(3) specializations — the rigid
//!   body velocity-Verlet analogue and discrete Euler-Poincare reduction
//!   ([`liegroup`]).
//! * **Shooting**: evaluate the quadrature sum along the node states of an
//!   arbitrary one-step method whose initial velocity is solved so the
//!   terminal position hits the right endpoint ([`shooting`]). The resulting
//!   integrator has order `min(p, q)` in the method order `p` and quadrature
//!   order `q`, is self-adjoint when both ingredients are, and inherits
//!   momentum conservation from equivariant steppers.
//!
//! Supporting modules: [`geometry`] (SO(3)/so(3) kernels), [`systems`]
//! (mechanical models), [`numerics`] (quadrature, Newton, finite
//! differences), and [`onestep`] (the method catalog).

pub mod error;
pub mod galerkin;
pub mod geometry;
pub mod liegroup;
pub mod linalg;
pub mod numerics;
pub mod onestep;
pub mod rng;
pub mod shooting;
pub mod systems;

pub use error::{Error, Result};
pub use systems::{PhaseState, TangentState};
