//! The fractional Laplacian, the limit of the rescaled mutation kernel and
//! the mass-control cutoffs.

mod constant;
mod cutoff;
mod kernel_limit;
mod laplacian;

pub use constant::c_alpha;
pub use cutoff::{mass_control_bound_check, mass_control_value, CutoffBoundReport, CutoffPoint};
pub use kernel_limit::{
    exact_regime_bound, kernel_increment, kernel_limit_error, KernelLimitPoint, KernelLimitReport,
};
pub use laplacian::{
    frac_laplacian_grid, frac_laplacian_point, scaled_generator_point, LaplacianValue, QuadratureSpec,
};

pub(crate) use laplacian::check_alpha;
