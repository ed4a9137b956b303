//! Characteristic quasi-polynomials, crossings and delay-dependent stability.

pub mod charfn;
pub mod crossing;
pub mod roots;
pub mod stability;
pub mod system;
pub mod wpoly;

pub use charfn::{char_function, CfTerm, CharacteristicFunction};
pub use crossing::{crossing_sweep, default_omega_max, root_tendency, CrossingPoint, Tendency};
pub use roots::{rightmost_roots, RootSet};
pub use stability::{stability_map, stability_map_with, DirectionMethod, StabilityEvent, StabilityInterval, StabilityMap};
pub use system::{DelayTerm, TimeDelaySystem};
pub use wpoly::{w_derivative_sign, w_polynomial, w_value, WPolynomial, WSign};

use num_complex::Complex64;

/// `F(s, tau)`.
pub fn evaluate_cf(f: &CharacteristicFunction, s: Complex64, tau: f64) -> Complex64 {
    f.eval(s, tau)
}
