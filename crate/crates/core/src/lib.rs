//! Numerical toolkit for parabolic germs `f(x) = x + a x^{k+1} + …`.
//!
//! The crate is organised bottom-up:
//!
//! * [`series`] — truncated Laurent series over `Complex64`.
//! * [`germ`] — parabolic germs, orbits, iterative residue, prenormalization.
//! * [`fatou`] — formal and sectorial Fatou coordinates, Borel monomials.
//! * [`contour`] — Hankel / ray / circle quadrature.
//! * [`theta`] — the dynamic theta function and its continuation.
//! * [`invariants`] — Écalle–Voronin moduli by horn maps and by theta singularities.
//! * [`fractal`] — ε-sequences, tube functions, fractal theta, critical time.
//! * [`cli`] — batch driver used by the `parabolic` binary.

pub mod cli;
pub mod contour;
pub mod error;
pub mod fatou;
pub mod fractal;
pub mod germ;
pub mod invariants;
pub mod quad;
pub mod series;
pub mod special;
pub mod theta;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;

/// Shorthand for building a complex number.
#[inline]
pub fn c64(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}
