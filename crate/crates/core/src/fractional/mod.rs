//! Marchaud-type fractional derivatives of time functions,
//!
//!   D^a h(u) = -Gamma(1-a)^{-1} int_u^inf (s-u)^{-a} h'(s) ds,
//!
//! the inverse Gamma(a)^{-1} int_v^inf (u-v)^{a-1} D^a h(u) du = h(v), the kernel
//! A(t,u), the multipliers p_u = u^{a+1} D^a[m_v / v](u), the increment ratio of A,
//! the sampled B_n functional and derivative combinatorics.

pub mod combinatorics;
pub mod families;
pub mod quadrature;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::{beta, gamma};
use crate::theta::{CertifiedValue, TorusPoint, MAX_DERIVATIVE_ORDER};

pub use combinatorics::{
    compose_derivative, faa_di_bruno_tuples, inverse_derivative, inverse_tuples, IndexTupleSet, TupleKind,
};
pub use families::{smooth_step, ConstantFamily, CutoffGaussFamily, GaussFamily, MultiplierFamily};
use quadrature::PanelRule;

/// Relative target for a single fractional derivative.
const DERIVATIVE_REL_TOL: f64 = 1e-12;
/// Relative target for the outer integral of a reconstruction.
const OUTER_REL_TOL: f64 = 1e-10;
/// Number of sample points used to check a declared decay bound.
const DECAY_SAMPLES: usize = 100;
/// The samples span [s0, s0 * 10^DECAY_DECADES].
const DECAY_DECADES: f64 = 6.0;

/// |h'(s)| <= k s^{-beta-1} for s >= s0.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayBound {
    pub k: f64,
    pub beta: f64,
    pub s0: f64,
}

/// A scalar function of time with its derivative and a declared decay bound.
pub trait TimeFunction: Sync {
    fn value(&self, s: f64) -> Result<f64>;
    fn derivative(&self, s: f64) -> Result<f64>;
    fn decay(&self) -> DecayBound;
}

/// h(s) = c s^{-beta}.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PowerLaw {
    pub c: f64,
    pub beta: f64,
}

impl TimeFunction for PowerLaw {
    fn value(&self, s: f64) -> Result<f64> {
        Ok(self.c * s.powf(-self.beta))
    }

    fn derivative(&self, s: f64) -> Result<f64> {
        Ok(-self.c * self.beta * s.powf(-self.beta - 1.0))
    }

    fn decay(&self) -> DecayBound {
        DecayBound {
            k: self.c.abs() * self.beta,
            beta: self.beta,
            s0: 1e-3,
        }
    }
}

/// h(s) = c. Its derivative vanishes, but it has no decay, so reconstruction rejects it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Constant(pub f64);

impl TimeFunction for Constant {
    fn value(&self, _s: f64) -> Result<f64> {
        Ok(self.0)
    }

    fn derivative(&self, _s: f64) -> Result<f64> {
        Ok(0.0)
    }

    fn decay(&self) -> DecayBound {
        DecayBound {
            k: 0.0,
            beta: 1.0,
            s0: 1e-3,
        }
    }
}

/// h(v) = m_v(xi) / v for a multiplier family at a fixed frequency.
pub struct OverTime<'a> {
    pub family: &'a dyn MultiplierFamily,
    pub xi: TorusPoint,
}

impl TimeFunction for OverTime<'_> {
    fn value(&self, s: f64) -> Result<f64> {
        Ok(self.family.derivatives(0, s, &self.xi)?[0] / s)
    }

    fn derivative(&self, s: f64) -> Result<f64> {
        let m = self.family.derivatives(1, s, &self.xi)?;
        Ok(m[1] / s - m[0] / (s * s))
    }

    fn decay(&self) -> DecayBound {
        self.family.decay(&self.xi)
    }
}

/// Fractional order and quadrature settings.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FracParams {
    pub alpha: f64,
    /// Gauss-Legendre nodes per panel.
    pub quad_nodes: usize,
    /// Integrals starting at u are never extended past u + tail_cut * u.
    pub tail_cut: f64,
}

impl FracParams {
    pub fn new(alpha: f64) -> Result<Self> {
        Self::with_settings(alpha, 20, 1e30)
    }

    pub fn with_settings(alpha: f64, quad_nodes: usize, tail_cut: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::InvalidOrder(alpha));
        }
        if quad_nodes == 0 {
            return Err(Error::InvalidPolicy("quad_nodes must be positive".into()));
        }
        if !(tail_cut > 1.0) {
            return Err(Error::InvalidPolicy(format!("tail_cut must exceed 1, got {tail_cut}")));
        }
        Ok(Self {
            alpha,
            quad_nodes,
            tail_cut,
        })
    }

    fn rule(&self, rel_tol: f64) -> PanelRule {
        PanelRule::new(self.quad_nodes, rel_tol, self.tail_cut)
    }
}

fn positive(x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::NonPositiveScale(x))
    }
}

/// Check the declared decay at log-spaced samples with a 1% allowance; with
/// `check_value` also |h(s)| <= 1.01 (K / beta) s^{-beta}.
pub fn verify_decay(h: &dyn TimeFunction, check_value: bool) -> Result<()> {
    let dec = h.decay();
    if !(dec.k >= 0.0 && dec.beta > 0.0 && dec.s0 > 0.0) {
        return Err(Error::InvalidPolicy(format!("malformed decay bound {dec:?}")));
    }
    for i in 0..DECAY_SAMPLES {
        let s = dec.s0 * 10f64.powf(DECAY_DECADES * i as f64 / (DECAY_SAMPLES - 1) as f64);
        let d = h.derivative(s)?.abs();
        let bound = 1.01 * dec.k * s.powf(-dec.beta - 1.0);
        if !(d <= bound) {
            return Err(Error::DecayBoundViolated { s, value: d, bound });
        }
        if check_value {
            let v = h.value(s)?.abs();
            let bound = 1.01 * dec.k / dec.beta * s.powf(-dec.beta);
            if !(v <= bound) {
                return Err(Error::DecayBoundViolated { s, value: v, bound });
            }
        }
    }
    Ok(())
}

/// D^a h(u) without re-checking the decay declaration.
fn derivative_unchecked(h: &dyn TimeFunction, fp: &FracParams, rule: &PanelRule, u: f64) -> Result<CertifiedValue> {
    let a = fp.alpha;
    let dec = h.decay();
    let start = (2.0 * u).max(dec.s0);
    let tail = |s: f64| {
        if s < start {
            f64::INFINITY
        } else {
            dec.k * 2f64.powf(a) * s.powf(-a - dec.beta) / (a + dec.beta)
        }
    };
    let floor = 1e-17 * dec.k * u.powf(-a - dec.beta);
    let (int, bound) = rule.weighted(u, u, 1.0 - a, floor, |s| h.derivative(s), tail)?;
    let c = 1.0 / gamma(1.0 - a);
    Ok(CertifiedValue {
        value: -c * int,
        tail_bound: c * bound,
    })
}

/// D^a h(u); the attached bound covers the truncated tail.
pub fn frac_derivative(h: &dyn TimeFunction, fp: &FracParams, u: f64) -> Result<CertifiedValue> {
    positive(u)?;
    verify_decay(h, false)?;
    derivative_unchecked(h, fp, &fp.rule(DERIVATIVE_REL_TOL), u)
}

/// sup_{u >= s0} u^{a+beta} |D^a h(u)| implied by the decay declaration.
fn derivative_decay_constant(dec: &DecayBound, a: f64) -> f64 {
    dec.k * beta(1.0 - a, a + dec.beta) / gamma(1.0 - a)
}

/// Gamma(a)^{-1} int_v^inf (u-v)^{a-1} D^a h(u) du, which recovers h(v).
pub fn frac_reconstruct(h: &dyn TimeFunction, fp: &FracParams, v: f64) -> Result<CertifiedValue> {
    positive(v)?;
    verify_decay(h, true)?;
    let a = fp.alpha;
    let dec = h.decay();
    let inner = fp.rule(DERIVATIVE_REL_TOL);
    let cd = derivative_decay_constant(&dec, a);
    let start = (2.0 * v).max(dec.s0);
    let tail = |s: f64| {
        if s < start {
            f64::INFINITY
        } else {
            cd * 2f64.powf(1.0 - a) * s.powf(-dec.beta) / dec.beta
        }
    };
    let floor = 1e-15 * dec.k * v.powf(-dec.beta);
    let (int, bound) = fp.rule(OUTER_REL_TOL).weighted(
        v,
        v,
        a,
        floor,
        |u| Ok(derivative_unchecked(h, fp, &inner, u)?.value),
        tail,
    )?;
    let c = 1.0 / gamma(a);
    Ok(CertifiedValue {
        value: c * int,
        tail_bound: c * bound,
    })
}

/// A(t,u) = Gamma(a)^{-1} (t/u) (1 - t/u)^{a-1} / u for u > t, else 0.
pub fn kernel_a(t: f64, u: f64, fp: &FracParams) -> f64 {
    if u <= t {
        return 0.0;
    }
    let x = t / u;
    x * (1.0 - x).powf(fp.alpha - 1.0) / (u * gamma(fp.alpha))
}

/// A(t,u) / (u-t)^{a-1} = t u^{-a-1} / Gamma(a), the smooth part of the kernel.
fn kernel_a_smooth(t: f64, u: f64, a: f64) -> f64 {
    t * u.powf(-a - 1.0) / gamma(a)
}

/// int_t^inf A(t,u) du by quadrature; equals 1/Gamma(1+a).
pub fn kernel_a_mass(t: f64, fp: &FracParams) -> Result<CertifiedValue> {
    positive(t)?;
    let a = fp.alpha;
    let tail = |s: f64| {
        if s < 2.0 * t {
            f64::INFINITY
        } else {
            2f64.powf(1.0 - a) * t / (gamma(a) * s)
        }
    };
    let (value, tail_bound) = fp
        .rule(DERIVATIVE_REL_TOL)
        .weighted(t, t, a, 0.0, |u| Ok(kernel_a_smooth(t, u, a)), tail)?;
    Ok(CertifiedValue { value, tail_bound })
}

/// p_u(xi) = u^{a+1} D^a_v[m_v(xi)/v](u).
pub fn p_multiplier(family: &dyn MultiplierFamily, fp: &FracParams, u: f64, xi: &TorusPoint) -> Result<CertifiedValue> {
    positive(u)?;
    let h = OverTime {
        family,
        xi: xi.clone(),
    };
    verify_decay(&h, false)?;
    let d = derivative_unchecked(&h, fp, &fp.rule(DERIVATIVE_REL_TOL), u)?;
    let sc = u.powf(fp.alpha + 1.0);
    Ok(CertifiedValue {
        value: sc * d.value,
        tail_bound: sc * d.tail_bound,
    })
}

/// int_t^inf A(t,u) p_u(xi) du, which recovers m_t(xi).
pub fn multiplier_reconstruct(
    family: &dyn MultiplierFamily,
    fp: &FracParams,
    t: f64,
    xi: &TorusPoint,
) -> Result<CertifiedValue> {
    positive(t)?;
    let a = fp.alpha;
    let h = OverTime {
        family,
        xi: xi.clone(),
    };
    verify_decay(&h, true)?;
    let dec = h.decay();
    let inner = fp.rule(DERIVATIVE_REL_TOL);
    // |p_u| <= cd u^{1-beta} for u >= s0
    let cd = derivative_decay_constant(&dec, a);
    let start = (2.0 * t).max(dec.s0);
    let tail = |s: f64| {
        if s < start {
            f64::INFINITY
        } else {
            2f64.powf(1.0 - a) * t * cd * s.powf(-dec.beta) / (dec.beta * gamma(a))
        }
    };
    let p = |u: f64| -> Result<f64> {
        let d = derivative_unchecked(&h, fp, &inner, u)?;
        Ok(u.powf(a + 1.0) * d.value)
    };
    let floor = 1e-15 * dec.k;
    let (value, tail_bound) = fp.rule(OUTER_REL_TOL).weighted(
        t,
        t,
        a,
        floor,
        |u| Ok(kernel_a_smooth(t, u, a) * p(u)?),
        tail,
    )?;
    Ok(CertifiedValue { value, tail_bound })
}

/// (int_0^inf |A(t+w,u) - A(t,u)| du) / (w/t)^a for 0 < w <= t/2, integrating
/// separately over (t, t+w], (t+w, t+2w] and (t+2w, inf).
pub fn delta_kernel_ratio(t: f64, w: f64, fp: &FracParams) -> Result<f64> {
    positive(t)?;
    positive(w)?;
    if w > t / 2.0 {
        return Err(Error::InvalidPolicy(format!("increment w = {w} exceeds t/2 = {}", t / 2.0)));
    }
    let a = fp.alpha;
    let s = t + w;
    let rule = fp.rule(DERIVATIVE_REL_TOL);
    let r1 = rule.singular(t, w, a, |u| Ok(kernel_a_smooth(t, u, a)))?;
    let r2 = rule.singular(s, w, a, |u| {
        Ok((kernel_a_smooth(s, u, a) - (u - s).powf(1.0 - a) * kernel_a(t, u, fp)).abs())
    })?;
    // For u >= 2s, 0 <= A(s,u) - A(t,u) <= w (2-a) 2^{1-a} u^{-2} / Gamma(a).
    let tail = |x: f64| {
        if x < 2.0 * s {
            f64::INFINITY
        } else {
            w * (2.0 - a) * 2f64.powf(1.0 - a) / (gamma(a) * x)
        }
    };
    let (r3, _) = rule.dyadic_tail(
        s,
        w,
        1.0,
        0.0,
        r1 + r2,
        |u| Ok((kernel_a(s, u, fp) - kernel_a(t, u, fp)).abs()),
        tail,
    )?;
    Ok((r1 + r2 + r3) / (w / t).powf(a))
}

/// Sampled B_n = sup_{j <= n, s, xi} |s^j d^j/ds^j m_s(xi)| + l1 bound + 1. A lower bound
/// for the supremum over all s and xi.
pub fn b_n_estimate(family: &dyn MultiplierFamily, n: usize, t_grid: &[f64], xi_sample: &[TorusPoint]) -> Result<f64> {
    if n > MAX_DERIVATIVE_ORDER {
        return Err(Error::DerivativeOrderTooLarge {
            order: n,
            cap: MAX_DERIVATIVE_ORDER,
        });
    }
    for &s in t_grid {
        positive(s)?;
    }
    let pairs: Vec<(f64, &TorusPoint)> = t_grid
        .iter()
        .flat_map(|&s| xi_sample.iter().map(move |x| (s, x)))
        .collect();
    let sups: Vec<f64> = pairs
        .par_iter()
        .map(|&(s, xi)| {
            let d = family.derivatives(n, s, xi)?;
            Ok(d.iter()
                .enumerate()
                .map(|(j, v)| (s.powi(j as i32) * v).abs())
                .fold(0.0, f64::max))
        })
        .collect::<Result<_>>()?;
    Ok(sups.into_iter().fold(0.0, f64::max) + family.l1_bound() + 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn xi(c: &[f64]) -> TorusPoint {
        TorusPoint::new(c.to_vec()).unwrap()
    }

    #[test]
    fn power_law_closed_form() {
        let fp = FracParams::new(0.5).unwrap();
        let h = PowerLaw { c: 1.0, beta: 1.0 };
        let v = frac_derivative(&h, &fp, 2.0).unwrap();
        let want = std::f64::consts::PI.sqrt() / 2.0 * 2f64.powf(-1.5);
        assert!((v.value - want).abs() < 1e-10 * want);
        assert!((want - 0.313329).abs() < 1e-6);
        for a in [0.2, 0.5, 0.8] {
            let fp = FracParams::new(a).unwrap();
            for b in [0.5, 1.0, 2.0] {
                let h = PowerLaw { c: 1.0, beta: b };
                for u in [0.01, 0.3, 1.0, 7.0, 100.0] {
                    let got = frac_derivative(&h, &fp, u).unwrap().value;
                    let want = gamma(a + b) / gamma(b) * u.powf(-a - b);
                    assert!((got - want).abs() <= 1e-9 * want, "a={a} b={b} u={u} {got} {want}");
                }
            }
        }
    }

    #[test]
    fn constant_has_zero_derivative_and_is_not_reconstructed() {
        let fp = FracParams::new(0.4).unwrap();
        assert_eq!(frac_derivative(&Constant(3.0), &fp, 1.5).unwrap().value, 0.0);
        assert!(matches!(
            frac_reconstruct(&Constant(3.0), &fp, 1.5),
            Err(Error::DecayBoundViolated { .. })
        ));
    }

    #[test]
    fn understated_decay_is_rejected() {
        struct Liar;
        impl TimeFunction for Liar {
            fn value(&self, s: f64) -> Result<f64> {
                Ok(s.powf(-0.5))
            }
            fn derivative(&self, s: f64) -> Result<f64> {
                Ok(-0.5 * s.powf(-1.5))
            }
            fn decay(&self) -> DecayBound {
                DecayBound { k: 0.5, beta: 1.0, s0: 1.0 }
            }
        }
        let fp = FracParams::new(0.5).unwrap();
        assert!(matches!(frac_derivative(&Liar, &fp, 1.0), Err(Error::DecayBoundViolated { .. })));
    }

    #[test]
    fn reconstruction_of_power_laws() {
        let fp = FracParams::new(0.5).unwrap();
        let r = frac_reconstruct(&PowerLaw { c: 1.0, beta: 1.0 }, &fp, 1.0).unwrap();
        assert!((r.value - 1.0).abs() < 1e-8, "{}", r.value);
        for (a, b, v) in [(0.2, 0.5, 3.0), (0.8, 2.0, 0.5), (0.3, 1.0, 20.0)] {
            let fp = FracParams::new(a).unwrap();
            let h = PowerLaw { c: 2.0, beta: b };
            let r = frac_reconstruct(&h, &fp, v).unwrap().value;
            let want = h.value(v).unwrap();
            assert!((r - want).abs() <= 1e-7 * want, "a={a} b={b} v={v}: {r} vs {want}");
        }
    }

    #[test]
    fn kernel_a_values_and_mass() {
        let fp = FracParams::new(0.5).unwrap();
        assert_eq!(kernel_a(2.0, 1.5, &fp), 0.0);
        assert_eq!(kernel_a(2.0, 2.0, &fp), 0.0);
        // t = 1, u = 2: (1/2)(1/2)^{-1/2}(1/2)/sqrt(pi)
        let want = 0.5 * 2f64.sqrt() * 0.5 / std::f64::consts::PI.sqrt();
        assert!((kernel_a(1.0, 2.0, &fp) - want).abs() < 1e-15);
        for a in [0.1, 0.5, 0.9] {
            let fp = FracParams::new(a).unwrap();
            for t in [0.1, 1.0, 10.0] {
                let m = kernel_a_mass(t, &fp).unwrap();
                assert!((m.value - 1.0 / gamma(1.0 + a)).abs() < 1e-10, "a={a} t={t}: {}", m.value);
            }
        }
    }

    #[test]
    fn p_multiplier_of_constant_family() {
        for a in [0.3, 0.5, 0.7] {
            let fp = FracParams::new(a).unwrap();
            for u in [1.0, 17.0, 400.0] {
                let p = p_multiplier(&ConstantFamily, &fp, u, &xi(&[0.2])).unwrap();
                assert!((p.value - gamma(1.0 + a)).abs() < 1e-9, "a={a} u={u}");
            }
        }
    }

    #[test]
    fn delta_ratio_matches_closed_form() {
        // Since A(t+w,.) >= A(t,.) past t+w and both have mass 1/Gamma(1+a), the
        // L^1 distance is 2 int_t^{t+w} A(t,u) du = 2 (w/(t+w))^a / Gamma(1+a).
        for a in [0.2, 0.5, 0.8] {
            let fp = FracParams::new(a).unwrap();
            for (t, w) in [(1.0, 0.5), (1.0, 1e-4), (3.0, 0.01), (1e-3, 1e-9)] {
                let got = delta_kernel_ratio(t, w, &fp).unwrap();
                let want = 2.0 * (t / (t + w)).powf(a) / gamma(1.0 + a);
                assert!((got - want).abs() < 1e-7 * want, "a={a} t={t} w={w}: {got} {want}");
            }
        }
        let fp = FracParams::new(0.5).unwrap();
        assert!(delta_kernel_ratio(1.0, 0.6, &fp).is_err());
    }

    #[test]
    fn b_n_examples() {
        let g = GaussFamily::default();
        let grid: Vec<f64> = (0..8).map(|i| 15.0 * 2f64.powi(i)).collect();
        let xs = vec![xi(&[0.0, 0.0]), xi(&[0.1, 0.3]), xi(&[0.5, 0.5])];
        assert_eq!(b_n_estimate(&g, 0, &grid, &xs).unwrap(), 3.0);
        let b1 = b_n_estimate(&g, 1, &grid, &xs).unwrap();
        let b2 = b_n_estimate(&g, 2, &grid, &xs).unwrap();
        assert!(b1 >= 3.0 && b2 >= b1 && b2.is_finite());
        assert!(b_n_estimate(&g, 9, &grid, &xs).is_err());
    }

    #[test]
    fn gauss_family_reconstructions() {
        let g = GaussFamily::default();
        let x = xi(&[0.2]);
        let fp = FracParams::new(0.3).unwrap();
        let h = OverTime { family: &g, xi: x.clone() };
        let r = frac_reconstruct(&h, &fp, 20.0).unwrap().value;
        let want = h.value(20.0).unwrap();
        assert!((r - want).abs() < 1e-7 * want.abs(), "{r} {want}");
        let fp = FracParams::new(0.4).unwrap();
        let m = multiplier_reconstruct(&g, &fp, 20.0, &x).unwrap().value;
        let want = g.derivatives(0, 20.0, &x).unwrap()[0];
        assert!((m - want).abs() < 1e-7, "{m} {want}");
    }

    #[test]
    fn zero_frequency_reconstructs_one_for_small_alpha() {
        let g = GaussFamily::default();
        let x = xi(&[0.0]);
        for a in [0.2, 0.5] {
            let fp = FracParams::new(a).unwrap();
            let m = multiplier_reconstruct(&g, &fp, 16.0, &x).unwrap();
            assert!((m.value - 1.0).abs() < 1e-8, "alpha {a}: {}", m.value);
        }
    }

    #[test]
    fn cutoff_p_multiplier_is_bounded() {
        let c = CutoffGaussFamily::default();
        let fp = FracParams::new(0.5).unwrap();
        let x = xi(&[0.05, 0.3]);
        let mut sup = 0.0f64;
        for i in 0..=16 {
            let u = 10f64.powf(i as f64 / 4.0);
            sup = sup.max(p_multiplier(&c, &fp, u, &x).unwrap().value.abs());
        }
        assert!(sup.is_finite() && sup > 0.0 && sup < 10.0, "{sup}");
    }
}
