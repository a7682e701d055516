//! Parameter-plane constructions: parameter rays and equipotentials, the parapuzzle
//! pieces `P(n)` and `Q(n)`, superstable centers, the Fibonacci parameter, the
//! rescaling `r_{n,c}` and the parameter map `M_n`.

mod centers;
mod map;
mod pieces;
mod rays;

pub use rays::{
    misiurewicz_newton, parabolic_landing, parameter_equipotential, parameter_green, parameter_ray_point,
    trace_parameter_ray,
};
pub use centers::{
    find_fibonacci_parameter, find_superstable, fibonacci_kneading, itinerary, kneading_cmp,
    FibonacciParameter, SuperstableCenter, MAX_CENTER_LEVEL,
};
pub use pieces::{build_parapiece, parapiece_combinatorics, ParaKind, ParaPiece};
pub use map::{rescaling_map, ParameterMap, ParameterMapSamples, Rescaling, RescalingSign};
pub use crate::geometry::winding_number;
