//! Fourier multiplier of the discrete Gaussian g_t on Z^d,
//!
//!   F g_t(xi) = prod_j theta_t(xi_j) / theta_t(0)
//!             = Theta_{1/t}(0)^{-1} sum_n e^{-pi |n|^2 / t} cos(2 pi n.xi),
//!
//! its t-derivatives, the torus heat kernel, the semigroup and Littlewood-Paley
//! symbols, and the change of variable psi(t) = e^{-pi/t}.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::{binomial, exp_inv_derivative, exp_inv_derivative_constant};
use crate::theta::{
    certified_product, factor_policy, gaussian_tail_bound, reduce_coordinate, theta1_derivatives,
    theta1_direct, theta1_dual, theta_d, CertifiedValue, ScaleParam, TorusPoint, TruncationPolicy,
    MAX_DERIVATIVE_ORDER,
};

/// Omitted cosine-series terms are kept below this fraction of the first term.
const RELATIVE_TAIL: f64 = 1e-17;

/// Below this scale the cosine-series form is used for 1 - F, which avoids cancellation.
const DEFICIT_DUAL_MAX_T: f64 = 16.0;

/// A multiplier evaluation request.
#[derive(Clone, Debug, PartialEq)]
pub struct MultiplierQuery {
    pub t: ScaleParam,
    pub xi: TorusPoint,
    pub pol: TruncationPolicy,
    pub deriv_order: usize,
}

impl MultiplierQuery {
    pub fn new(t: f64, xi: TorusPoint, pol: TruncationPolicy, deriv_order: usize) -> Result<Self> {
        if deriv_order > MAX_DERIVATIVE_ORDER {
            return Err(Error::DerivativeOrderTooLarge {
                order: deriv_order,
                cap: MAX_DERIVATIVE_ORDER,
            });
        }
        Ok(Self {
            t: ScaleParam::new(t)?,
            xi,
            pol,
            deriv_order,
        })
    }
}

/// Retry a computation with shrinking internal tail targets until the propagated
/// bound meets `pol.eps`.
fn refine<T>(
    pol: &TruncationPolicy,
    mut compute: impl FnMut(&TruncationPolicy) -> Result<(T, f64)>,
) -> Result<T> {
    let mut inner = TruncationPolicy {
        eps: pol.eps / 8.0,
        max_terms: pol.max_terms,
    };
    for _ in 0..8 {
        let (value, bound) = compute(&inner)?;
        if bound <= pol.eps {
            return Ok(value);
        }
        inner.eps = (inner.eps * (pol.eps / bound).min(1.0) / 16.0).max(f64::MIN_POSITIVE);
    }
    Err(Error::TruncationBudgetExceeded {
        eps: pol.eps,
        max_terms: pol.max_terms,
    })
}

/// Derivatives of num/den given derivative tables of both, by the recursion
/// den * q = num. Bounds are propagated rigorously from the input bounds.
fn quotient_derivatives(num: &[CertifiedValue], den: &[CertifiedValue]) -> Vec<CertifiedValue> {
    let n = num.len();
    let b0 = den[0].value;
    let e0 = den[0].tail_bound;
    let mut out: Vec<CertifiedValue> = Vec::with_capacity(n);
    for order in 0..n {
        let mut value = num[order].value;
        let mut err = num[order].tail_bound;
        for (k, q) in out.iter().enumerate() {
            let c = binomial(order, k);
            let b = &den[order - k];
            value -= c * q.value * b.value;
            err += c * (q.tail_bound * (b.value.abs() + b.tail_bound) + q.value.abs() * b.tail_bound);
        }
        let value = value / b0;
        let tail_bound = (err + value.abs() * e0) / (b0 - e0);
        out.push(CertifiedValue { value, tail_bound });
    }
    out
}

/// Derivatives of r(t) = theta_t(z)/theta_t(0) from direct-series theta derivatives.
fn ratio_derivatives_direct_at(
    nmax: usize,
    t: ScaleParam,
    z: f64,
    inner: &TruncationPolicy,
) -> Result<Vec<CertifiedValue>> {
    let num = crate::theta::theta1_derivatives_direct(nmax, t, z, inner)?;
    let den = crate::theta::theta1_derivatives_direct(nmax, t, 0.0, inner)?;
    Ok(quotient_derivatives(&num, &den))
}

/// Derivatives of r(t) = 1 + J(t)/P(t) with P = sum_n e^{-pi n^2/t} and
/// J = -4 sum_{j>=1} e^{-pi j^2/t} sin^2(pi j z), summed with radius n.
fn ratio_derivatives_dual_at(nmax: usize, t: f64, z: f64, n: usize) -> Vec<CertifiedValue> {
    let mut p = vec![0.0; nmax + 1];
    let mut j = vec![0.0; nmax + 1];
    for k in (1..n).rev() {
        let a = PI * (k * k) as f64;
        let s = (PI * k as f64 * z).sin();
        let s2 = s * s;
        for m in 0..=nmax {
            let e = exp_inv_derivative(m, a, t);
            p[m] += 2.0 * e;
            j[m] -= 4.0 * s2 * e;
        }
    }
    p[0] += 1.0;
    let tail = |m: usize, scale: f64| {
        if m == 0 {
            scale * gaussian_tail_bound(1.0 / t, n)
        } else {
            scale * t.powi(-(m as i32)) * exp_inv_derivative_constant(m) * gaussian_tail_bound(0.5 / t, n)
        }
    };
    let pc: Vec<_> = (0..=nmax)
        .map(|m| CertifiedValue {
            value: p[m],
            tail_bound: tail(m, 1.0),
        })
        .collect();
    let jc: Vec<_> = (0..=nmax)
        .map(|m| CertifiedValue {
            value: j[m],
            tail_bound: tail(m, 2.0),
        })
        .collect();
    let mut q = quotient_derivatives(&jc, &pc);
    q[0].value += 1.0;
    q
}

fn ratio_derivatives_dual(
    nmax: usize,
    t: f64,
    z: f64,
    pol: &TruncationPolicy,
) -> Result<Vec<CertifiedValue>> {
    let worst = |v: &[CertifiedValue]| v.iter().map(|c| c.tail_bound).fold(0.0, f64::max);
    // Size of the j = 1 terms, up to the factor t^{-m}: the omitted terms must also be
    // small against it, or a tiny J would be truncated to zero.
    let first = (-PI / t).exp();
    for n in 2..=pol.max_terms {
        // Cheap pre-screen on the raw tails before doing the full evaluation.
        let (raw, rel) = (0..=nmax)
            .map(|m| {
                if m == 0 {
                    let b = gaussian_tail_bound(1.0 / t, n);
                    (b, b)
                } else {
                    let b = exp_inv_derivative_constant(m) * gaussian_tail_bound(0.5 / t, n);
                    (t.powi(-(m as i32)) * b, b)
                }
            })
            .fold((0.0f64, 0.0f64), |a, b| (a.0.max(b.0), a.1.max(b.1)));
        if raw > pol.eps || rel > RELATIVE_TAIL * first {
            continue;
        }
        let v = ratio_derivatives_dual_at(nmax, t, z, n);
        if worst(&v) <= pol.eps {
            return Ok(v);
        }
    }
    Err(Error::TruncationBudgetExceeded {
        eps: pol.eps,
        max_terms: pol.max_terms,
    })
}

/// Derivatives of the one-dimensional factor r(t) = theta_t(z)/theta_t(0), orders 0..=nmax.
/// Uses the quotient recursion on direct-series derivatives for t >= 1 and the
/// Poisson-dual form for t < 1.
pub fn ratio_factor_derivatives(
    nmax: usize,
    t: ScaleParam,
    zeta: f64,
    pol: &TruncationPolicy,
) -> Result<Vec<CertifiedValue>> {
    if nmax > MAX_DERIVATIVE_ORDER {
        return Err(Error::DerivativeOrderTooLarge {
            order: nmax,
            cap: MAX_DERIVATIVE_ORDER,
        });
    }
    let z = reduce_coordinate(zeta);
    let worst = |v: &[CertifiedValue]| v.iter().map(|c| c.tail_bound).fold(0.0, f64::max);
    if t.get() >= 1.0 {
        refine(pol, |inner| {
            let v = ratio_derivatives_direct_at(nmax, t, z, inner)?;
            let w = worst(&v);
            Ok((v, w))
        })
    } else {
        ratio_derivatives_dual(nmax, t.get(), z, pol)
    }
}

/// Derivatives of the one-dimensional factor computed with the quotient rule on
/// whichever theta representation `theta1_derivatives` selects. Used for cross-checks.
pub fn ratio_factor_derivatives_quotient(
    nmax: usize,
    t: ScaleParam,
    zeta: f64,
    pol: &TruncationPolicy,
) -> Result<Vec<CertifiedValue>> {
    let num = theta1_derivatives(nmax, t, zeta, pol)?;
    let den = theta1_derivatives(nmax, t, 0.0, pol)?;
    Ok(quotient_derivatives(&num, &den))
}

/// 1 - theta_t(z)/theta_t(0), computed without cancellation.
pub fn ratio_deficit(t: ScaleParam, zeta: f64, pol: &TruncationPolicy) -> Result<CertifiedValue> {
    let z = reduce_coordinate(zeta);
    if t.get() > DEFICIT_DUAL_MAX_T {
        let r = ratio_factor_derivatives(0, t, z, pol)?[0];
        return Ok(CertifiedValue {
            value: 1.0 - r.value,
            tail_bound: r.tail_bound,
        });
    }
    let t = t.get();
    let s = 1.0 / t;
    let first = (-PI * s).exp();
    for n in 2..=pol.max_terms {
        let tp = gaussian_tail_bound(s, n);
        if tp > pol.eps / 4.0 || tp > RELATIVE_TAIL * first {
            continue;
        }
        let mut num = 0.0;
        let mut den = 0.0;
        for k in (1..n).rev() {
            let e = (-PI * s * (k * k) as f64).exp();
            let sn = (PI * k as f64 * z).sin();
            num += 4.0 * e * sn * sn;
            den += 2.0 * e;
        }
        den += 1.0;
        let value = num / den;
        let tail_bound = (2.0 * tp + value * tp) / (den - tp);
        if tail_bound <= pol.eps {
            return Ok(CertifiedValue { value, tail_bound });
        }
    }
    Err(Error::TruncationBudgetExceeded {
        eps: pol.eps,
        max_terms: pol.max_terms,
    })
}

fn check_order_zero(q: &MultiplierQuery) -> Result<()> {
    if q.deriv_order != 0 {
        return Err(Error::InvalidPolicy(format!(
            "expected a value query, got derivative order {}",
            q.deriv_order
        )));
    }
    Ok(())
}

/// F g_t(xi), using the ratio form for t >= 1 and the cosine form for t < 1.
pub fn gauss_multiplier(q: &MultiplierQuery) -> Result<CertifiedValue> {
    check_order_zero(q)?;
    if q.t.get() >= 1.0 {
        gauss_multiplier_ratio_form(q)
    } else {
        gauss_multiplier_dual(q)
    }
}

/// F g_t(xi) = prod_j theta_t(xi_j)/theta_t(0) with every theta summed as a direct series.
pub fn gauss_multiplier_ratio_form(q: &MultiplierQuery) -> Result<CertifiedValue> {
    check_order_zero(q)?;
    let d = q.xi.dim();
    let fpol = factor_policy(&q.pol, d, 1.0);
    let factors = q
        .xi
        .coords()
        .iter()
        .map(|&z| {
            refine(&fpol, |inner| {
                let num = theta1_direct(q.t, z, inner)?;
                let den = theta1_direct(q.t, 0.0, inner)?;
                let c = quotient_derivatives(&[num], &[den])[0];
                Ok((c, c.tail_bound))
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(certified_product(&factors))
}

/// F g_t(xi) = Theta_{1/t}(0)^{-1} sum_n e^{-pi|n|^2/t} cos(2 pi n.xi), tensorized into
/// one-dimensional cosine series.
pub fn gauss_multiplier_dual(q: &MultiplierQuery) -> Result<CertifiedValue> {
    check_order_zero(q)?;
    let d = q.xi.dim();
    let fpol = factor_policy(&q.pol, d, 1.0);
    let factors = q
        .xi
        .coords()
        .iter()
        .map(|&z| {
            refine(&fpol, |inner| {
                let num = theta1_dual(q.t, z, inner)?;
                let den = theta1_dual(q.t, 0.0, inner)?;
                let c = quotient_derivatives(&[num], &[den])[0];
                Ok((c, c.tail_bound))
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(certified_product(&factors))
}

/// 1 - F g_t(xi), accurate for small deficits. Factors are combined as
/// P <- P + e - P e, which has no cancellation.
pub fn gauss_multiplier_deficit(t: ScaleParam, xi: &TorusPoint, pol: &TruncationPolicy) -> Result<CertifiedValue> {
    let d = xi.dim();
    let fpol = TruncationPolicy {
        eps: pol.eps / (2.0 * d as f64),
        max_terms: pol.max_terms,
    };
    let mut value = 0.0;
    let mut tail = 0.0;
    for &z in xi.coords() {
        let e = ratio_deficit(t, z, &fpol)?;
        value = value + e.value - value * e.value;
        tail += e.tail_bound;
    }
    Ok(CertifiedValue {
        value,
        tail_bound: tail * (1.0 + tail),
    })
}

/// Derivatives d^m/dt^m F g_t(xi) for m = 0..=nmax, by the Leibniz rule over the
/// d-fold product of one-dimensional factors.
pub fn gauss_multiplier_derivatives(
    nmax: usize,
    t: ScaleParam,
    xi: &TorusPoint,
    pol: &TruncationPolicy,
) -> Result<Vec<CertifiedValue>> {
    let d = xi.dim();
    refine(pol, |inner| {
        let fpol = TruncationPolicy {
            eps: inner.eps / d as f64,
            max_terms: inner.max_terms,
        };
        let mut cur = vec![CertifiedValue::exact(0.0); nmax + 1];
        cur[0] = CertifiedValue::exact(1.0);
        for &z in xi.coords() {
            let fac = ratio_factor_derivatives(nmax, t, z, &fpol)?;
            let mut next = vec![CertifiedValue::exact(0.0); nmax + 1];
            for n in 0..=nmax {
                let mut v = 0.0;
                let mut e = 0.0;
                for k in 0..=n {
                    let c = binomial(n, k);
                    let (a, b) = (&cur[k], &fac[n - k]);
                    v += c * a.value * b.value;
                    e += c * (a.tail_bound * (b.value.abs() + b.tail_bound) + a.value.abs() * b.tail_bound);
                }
                next[n] = CertifiedValue {
                    value: v,
                    tail_bound: e,
                };
            }
            cur = next;
        }
        let worst = cur.iter().map(|c| c.tail_bound).fold(0.0, f64::max);
        Ok((cur, worst))
    })
}

/// d^n/dt^n F g_t(xi) for the query's derivative order.
pub fn gauss_multiplier_derivative(q: &MultiplierQuery) -> Result<CertifiedValue> {
    if q.deriv_order == 0 {
        return gauss_multiplier(q);
    }
    Ok(gauss_multiplier_derivatives(q.deriv_order, q.t, &q.xi, &q.pol)?[q.deriv_order])
}

/// H_t(xi) = (4 pi t)^{-d/2} Theta_{1/(4 pi t)}(xi).
pub fn heat_kernel_torus(t: ScaleParam, xi: &TorusPoint, pol: &TruncationPolicy) -> Result<CertifiedValue> {
    let d = xi.dim() as f64;
    let pre = (4.0 * PI * t.get()).powf(-d / 2.0);
    let u = ScaleParam::new(1.0 / (4.0 * PI * t.get()))?;
    let inner = TruncationPolicy {
        eps: pol.eps / pre,
        max_terms: pol.max_terms,
    };
    let th = theta_d(u, xi, &inner)?;
    Ok(CertifiedValue {
        value: pre * th.value,
        tail_bound: pre * th.tail_bound,
    })
}

/// H_t(xi) / H_t(0), equal to F g_{1/(4 pi t)}(xi).
pub fn heat_kernel_ratio(t: ScaleParam, xi: &TorusPoint, pol: &TruncationPolicy) -> Result<CertifiedValue> {
    let q = MultiplierQuery {
        t: ScaleParam::new(1.0 / (4.0 * PI * t.get()))?,
        xi: xi.clone(),
        pol: *pol,
        deriv_order: 0,
    };
    gauss_multiplier(&q)
}

fn sin_sq_sum(xi: &TorusPoint) -> f64 {
    xi.coords()
        .iter()
        .map(|&x| {
            let s = (PI * reduce_coordinate(x)).sin();
            s * s
        })
        .sum()
}

/// q_t(xi) = exp(-t sum_i sin^2(pi xi_i)).
pub fn semigroup_symbol(t: ScaleParam, xi: &TorusPoint) -> f64 {
    (-t.get() * sin_sq_sum(xi)).exp()
}

/// q_{2^{j-1}}(xi) - q_{2^j}(xi), evaluated as q_s (1 - q_s) with s = 2^{j-1}.
pub fn littlewood_paley_symbol(j: i32, xi: &TorusPoint) -> f64 {
    let x = 2f64.powi(j - 1) * sin_sq_sum(xi);
    (-x).exp() * -(-x).exp_m1()
}

/// A value of psi, strictly inside (0, 1).
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct PsiValue(f64);

impl PsiValue {
    pub fn new(u: f64) -> Result<Self> {
        if u > 0.0 && u < 1.0 {
            Ok(Self(u))
        } else {
            Err(Error::DomainError(u))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

/// psi(t) = e^{-pi/t}.
pub fn psi(t: ScaleParam) -> Result<PsiValue> {
    PsiValue::new((-PI / t.get()).exp())
}

/// psi^{-1}(u) = -pi / ln u.
pub fn psi_inv(u: PsiValue) -> ScaleParam {
    ScaleParam::new(-PI / u.get().ln()).expect("psi_inv maps (0,1) to (0,inf)")
}

/// Derivatives psi^{(j)}(s) for j = 0..=n.
pub fn psi_derivatives(n: usize, s: f64) -> Vec<f64> {
    (0..=n).map(|m| exp_inv_derivative(m, PI, s)).collect()
}
