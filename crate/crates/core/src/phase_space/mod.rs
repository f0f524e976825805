//! Grids, field storage, quadrature, interpolation and finite differences
//! over position space and phase space.
//!
//! Vector fields are stored interleaved (`cell * dim + component`); phase
//! fields are stored with the position index slowest and the velocity index
//! fastest, so each spatial cell owns a contiguous velocity block.

mod gradient;
mod grid;
mod interp;
mod state;

pub use gradient::{axis_derivative, grad_x, phase_grad_v, phase_grad_x};
pub use grid::{norm, pairwise_sum, Axis, Boundary, PhaseGrid, SpatialGrid, MAX_DIM, MIN_CELLS};
pub use interp::interpolate;
pub(crate) use interp::interpolate_zero_ext;
pub use state::{moments, FluidState, KineticState, Moments, EPS_VAC};
