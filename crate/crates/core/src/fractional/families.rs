//! Multiplier families s -> m_s(xi) used to build time functions h(v) = m_v(xi) / v.

use crate::error::{Error, Result};
use crate::multipliers::gauss_multiplier_derivatives;
use crate::special::{binomial, Jet};
use crate::theta::{ScaleParam, TorusPoint, TruncationPolicy, MAX_DERIVATIVE_ORDER};

use super::DecayBound;

/// Upper bound for the slope of [`smooth_step`] (the exact maximum is 2, at x = 1/2).
pub const SMOOTH_STEP_SLOPE_BOUND: f64 = 2.0;

/// A one-parameter family of multipliers with s-derivatives.
pub trait MultiplierFamily: Send + Sync {
    fn name(&self) -> &'static str;

    /// d^j/ds^j m_s(xi) for j = 0..=n.
    fn derivatives(&self, n: usize, s: f64, xi: &TorusPoint) -> Result<Vec<f64>>;

    /// Declared bound for the l^1 norm of the convolution kernels.
    fn l1_bound(&self) -> f64;

    /// Decay of h(v) = m_v(xi) / v, in the form |h'(v)| <= K v^{-2} for v >= s0.
    fn decay(&self, xi: &TorusPoint) -> DecayBound;
}

fn check_order(n: usize) -> Result<()> {
    if n > MAX_DERIVATIVE_ORDER {
        return Err(Error::DerivativeOrderTooLarge {
            order: n,
            cap: MAX_DERIVATIVE_ORDER,
        });
    }
    Ok(())
}

/// m_s = F g_s.
#[derive(Clone, Debug, Default)]
pub struct GaussFamily {
    pub pol: TruncationPolicy,
}

impl MultiplierFamily for GaussFamily {
    fn name(&self) -> &'static str {
        "gauss"
    }

    fn derivatives(&self, n: usize, s: f64, xi: &TorusPoint) -> Result<Vec<f64>> {
        check_order(n)?;
        let d = gauss_multiplier_derivatives(n, ScaleParam::new(s)?, xi, &self.pol)?;
        Ok(d.into_iter().map(|c| c.value).collect())
    }

    fn l1_bound(&self) -> f64 {
        1.0
    }

    fn decay(&self, xi: &TorusPoint) -> DecayBound {
        DecayBound {
            k: 1.0 + xi.dim() as f64,
            beta: 1.0,
            s0: 1.0,
        }
    }
}

/// m_s = 1.
#[derive(Clone, Copy, Debug, Default)]
pub struct ConstantFamily;

impl MultiplierFamily for ConstantFamily {
    fn name(&self) -> &'static str {
        "constant"
    }

    fn derivatives(&self, n: usize, _s: f64, _xi: &TorusPoint) -> Result<Vec<f64>> {
        check_order(n)?;
        let mut v = vec![0.0; n + 1];
        v[0] = 1.0;
        Ok(v)
    }

    fn l1_bound(&self) -> f64 {
        1.0
    }

    fn decay(&self, _xi: &TorusPoint) -> DecayBound {
        DecayBound {
            k: 1.0,
            beta: 1.0,
            s0: 1e-3,
        }
    }
}

/// m_s = chi(s) F g_s with a smooth cutoff chi = 0 on (0, start] and 1 on [start + 1, inf).
#[derive(Clone, Debug)]
pub struct CutoffGaussFamily {
    pub pol: TruncationPolicy,
    pub start: f64,
}

impl Default for CutoffGaussFamily {
    fn default() -> Self {
        Self {
            pol: TruncationPolicy::default(),
            start: 15.0,
        }
    }
}

/// phi(x) = f(x) / (f(x) + f(1 - x)) with f(x) = e^{-1/x} for x > 0: smooth, 0 for x <= 0
/// and 1 for x >= 1. Returns phi^{(j)}(x) for j = 0..=n.
pub fn smooth_step(n: usize, x: f64) -> Vec<f64> {
    let mut out = vec![0.0; n + 1];
    if x <= 0.0 {
        return out;
    }
    if x >= 1.0 {
        out[0] = 1.0;
        return out;
    }
    let f = |j: Jet| j.recip().scale(-1.0).exp();
    let a = f(Jet::variable(x, n));
    let b = f(Jet::variable(x, n).scale(-1.0).add(&Jet::constant(1.0, n)));
    a.mul(&a.add(&b).recip()).derivatives()
}

impl MultiplierFamily for CutoffGaussFamily {
    fn name(&self) -> &'static str {
        "cutoff-gauss"
    }

    fn derivatives(&self, n: usize, s: f64, xi: &TorusPoint) -> Result<Vec<f64>> {
        check_order(n)?;
        let chi = smooth_step(n, s - self.start);
        if chi.iter().all(|&c| c == 0.0) {
            return Ok(vec![0.0; n + 1]);
        }
        let g = GaussFamily { pol: self.pol }.derivatives(n, s, xi)?;
        Ok((0..=n)
            .map(|j| (0..=j).map(|i| binomial(j, i) * chi[i] * g[j - i]).sum())
            .collect())
    }

    fn l1_bound(&self) -> f64 {
        1.0
    }

    fn decay(&self, xi: &TorusPoint) -> DecayBound {
        DecayBound {
            k: 1.0 + xi.dim() as f64 + (self.start + 1.0) * SMOOTH_STEP_SLOPE_BOUND,
            beta: 1.0,
            s0: 1.0,
        }
    }
}
