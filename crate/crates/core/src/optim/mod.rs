//! Deterministic optimization and sampling utilities.
//!
//! Contents: seeded uniform/low-discrepancy sampling with an explicit
//! seed-splitting scheme, Gauss–Hermite and Gauss–Legendre rules, a
//! box-constrained quasi-Newton local maximizer with multistart, and the
//! DIRECT (dividing rectangles) global maximizer.

mod direct;
mod lbfgs;
mod quadrature;
mod sampling;

pub use direct::direct_maximize;
pub use lbfgs::{
    local_maximize, local_maximize_with, multistart_maximize, multistart_maximize_with, LocalOpts,
};
pub use quadrature::{gauss_hermite, gauss_legendre, QuadratureRule};
pub use sampling::{halton_box, halton_unit, rng_from, seeded_uniform, split_seed};

use crate::error::{Error, Result};

/// A deterministic objective over a fixed-dimensional box, with an optional
/// analytic gradient. When no gradient is supplied, optimizers fall back to
/// central finite differences scaled to the box width.
pub struct ObjectiveHandle<'a> {
    dim: usize,
    f: ValueFn<'a>,
    grad: Option<GradientFn<'a>>,
}

type ValueFn<'a> = Box<dyn Fn(&[f64]) -> f64 + 'a>;
type GradientFn<'a> = Box<dyn Fn(&[f64]) -> Vec<f64> + 'a>;

impl<'a> ObjectiveHandle<'a> {
    pub fn new(dim: usize, f: impl Fn(&[f64]) -> f64 + 'a) -> Self {
        ObjectiveHandle {
            dim,
            f: Box::new(f),
            grad: None,
        }
    }

    pub fn with_gradient(
        dim: usize,
        f: impl Fn(&[f64]) -> f64 + 'a,
        grad: impl Fn(&[f64]) -> Vec<f64> + 'a,
    ) -> Self {
        ObjectiveHandle {
            dim,
            f: Box::new(f),
            grad: Some(Box::new(grad)),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim);
        (self.f)(x)
    }

    pub fn gradient(&self, x: &[f64]) -> Option<Vec<f64>> {
        self.grad.as_ref().map(|g| g(x))
    }

    pub fn has_gradient(&self) -> bool {
        self.grad.is_some()
    }

    pub(crate) fn check_dim(&self, domain_dim: usize) -> Result<()> {
        if self.dim != domain_dim {
            return Err(Error::input(format!(
                "objective dimension {} does not match domain dimension {}",
                self.dim, domain_dim
            )));
        }
        Ok(())
    }
}

/// Result of a maximization: the argmax found and its objective value.
#[derive(Debug, Clone, PartialEq)]
pub struct Optimum {
    pub x: Vec<f64>,
    pub value: f64,
}
