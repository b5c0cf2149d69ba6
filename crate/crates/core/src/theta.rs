//! Certified evaluation of the one- and d-dimensional Theta functions
//!
//!   theta_t(z) = sum_k exp(-pi (k - z)^2 t),   Theta_t(xi) = prod_j theta_t(xi_j),
//!
//! and their t-derivatives. For t < 1 the Poisson-dual cosine series
//! theta_t(z) = t^{-1/2} sum_n exp(-pi n^2 / t) cos(2 pi n z) is summed instead,
//! so the working parameter is always max(t, 1/t) >= 1.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::{binomial, exp_inv_derivative, exp_inv_derivative_constant, poly_gauss_constant};

/// Largest supported t-derivative order.
pub const MAX_DERIVATIVE_ORDER: usize = 8;

/// Reduce a real number into [-1/2, 1/2) modulo 1.
pub fn reduce_coordinate(x: f64) -> f64 {
    let mut r = x - (x + 0.5).floor();
    if r >= 0.5 {
        r -= 1.0;
    }
    if r < -0.5 {
        r += 1.0;
    }
    r
}

/// A frequency on the torus T^d, coordinates reduced into [-1/2, 1/2).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TorusPoint {
    coords: Vec<f64>,
}

impl TorusPoint {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::InvalidPoint("dimension must be at least 1".into()));
        }
        if let Some(x) = coords.iter().find(|x| !x.is_finite()) {
            return Err(Error::InvalidPoint(format!("non-finite coordinate {x}")));
        }
        Ok(Self {
            coords: coords.into_iter().map(reduce_coordinate).collect(),
        })
    }

    pub fn origin(dim: usize) -> Self {
        Self {
            coords: vec![0.0; dim.max(1)],
        }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    /// Squared Euclidean norm of the reduced representative.
    pub fn norm_sq(&self) -> f64 {
        self.coords.iter().map(|x| x * x).sum()
    }
}

/// A strictly positive, finite scale t.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct ScaleParam(f64);

impl ScaleParam {
    pub fn new(t: f64) -> Result<Self> {
        if t > 0.0 && t.is_finite() {
            Ok(Self(t))
        } else {
            Err(Error::NonPositiveScale(t))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

/// Absolute tail target and a hard cap on the number of series terms per side.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruncationPolicy {
    pub eps: f64,
    pub max_terms: usize,
}

impl Default for TruncationPolicy {
    fn default() -> Self {
        Self {
            eps: 1e-15,
            max_terms: 512,
        }
    }
}

impl TruncationPolicy {
    pub fn new(eps: f64, max_terms: usize) -> Result<Self> {
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::InvalidPolicy(format!("eps must be positive, got {eps}")));
        }
        if max_terms < 3 {
            return Err(Error::InvalidPolicy(format!("max_terms must be >= 3, got {max_terms}")));
        }
        Ok(Self { eps, max_terms })
    }

    pub fn with_eps(eps: f64) -> Result<Self> {
        Self::new(eps, Self::default().max_terms)
    }
}

/// A value together with a rigorous bound on the discarded series tail.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertifiedValue {
    pub value: f64,
    pub tail_bound: f64,
}

impl CertifiedValue {
    pub fn exact(value: f64) -> Self {
        Self {
            value,
            tail_bound: 0.0,
        }
    }
}

/// The bound 2 e^{-pi t (N - 1/2)^2} / (1 - e^{-pi t}) on sum_{|k| >= N} e^{-pi t (k - z)^2},
/// valid for |z| <= 1/2 and N >= 1.
pub fn gaussian_tail_bound(t: f64, n: usize) -> f64 {
    let h = n as f64 - 0.5;
    2.0 * (-PI * t * h * h).exp() / (-(-PI * t).exp_m1())
}

fn smallest_radius(pol: &TruncationPolicy, bound: impl Fn(usize) -> f64) -> Result<usize> {
    (1..=pol.max_terms)
        .find(|&n| bound(n) <= pol.eps)
        .ok_or(Error::TruncationBudgetExceeded {
            eps: pol.eps,
            max_terms: pol.max_terms,
        })
}

/// Smallest N >= 1 with gaussian_tail_bound(t_eff, N) <= eps. The series is then
/// summed over |k| <= N - 1.
pub fn truncation_radius(t_eff: f64, pol: &TruncationPolicy) -> Result<usize> {
    ScaleParam::new(t_eff)?;
    smallest_radius(pol, |n| gaussian_tail_bound(t_eff, n))
}

/// sum_{|k| <= n-1} e^{-pi t (k - z)^2}, paired so that z and -z give identical results.
fn direct_sum(t: f64, z: f64, n: usize) -> f64 {
    let mut acc = 0.0;
    for k in (1..n).rev() {
        let (a, b) = (k as f64 - z, k as f64 + z);
        acc += (-PI * t * a * a).exp() + (-PI * t * b * b).exp();
    }
    acc + (-PI * t * z * z).exp()
}

/// 1 + 2 sum_{n=1}^{N-1} e^{-pi s n^2} cos(2 pi n z).
fn cosine_sum(s: f64, z: f64, n: usize) -> f64 {
    let mut acc = 0.0;
    for k in (1..n).rev() {
        let kf = k as f64;
        acc += (-PI * s * kf * kf).exp() * (2.0 * PI * kf * z).cos();
    }
    1.0 + 2.0 * acc
}

/// theta_t(z) from the direct series, for any t > 0.
pub fn theta1_direct(t: ScaleParam, zeta: f64, pol: &TruncationPolicy) -> Result<CertifiedValue> {
    let t = t.get();
    let z = reduce_coordinate(zeta);
    let n = truncation_radius(t, pol)?;
    Ok(CertifiedValue {
        value: direct_sum(t, z, n),
        tail_bound: gaussian_tail_bound(t, n),
    })
}

/// theta_t(z) from the Poisson-dual cosine series, for any t > 0.
pub fn theta1_dual(t: ScaleParam, zeta: f64, pol: &TruncationPolicy) -> Result<CertifiedValue> {
    let t = t.get();
    let z = reduce_coordinate(zeta);
    let s = 1.0 / t;
    let pre = s.sqrt();
    let n = smallest_radius(pol, |n| pre * gaussian_tail_bound(s, n))?;
    Ok(CertifiedValue {
        value: pre * cosine_sum(s, z, n),
        tail_bound: pre * gaussian_tail_bound(s, n),
    })
}

/// theta_t(z), choosing the representation with effective parameter max(t, 1/t).
pub fn theta1(t: ScaleParam, zeta: f64, pol: &TruncationPolicy) -> Result<CertifiedValue> {
    if t.get() >= 1.0 {
        theta1_direct(t, zeta, pol)
    } else {
        theta1_dual(t, zeta, pol)
    }
}

/// Combine certified factors into a certified product. The bound is the exact
/// telescoping expansion of prod(|v_j| + e_j) - prod |v_j|.
pub fn certified_product(factors: &[CertifiedValue]) -> CertifiedValue {
    let value = factors.iter().map(|f| f.value).product();
    let mut tail = 0.0;
    for j in 0..factors.len() {
        let mut term = factors[j].tail_bound;
        for (i, f) in factors.iter().enumerate() {
            if i < j {
                term *= f.value.abs() + f.tail_bound;
            } else if i > j {
                term *= f.value.abs();
            }
        }
        tail += term;
    }
    CertifiedValue {
        value,
        tail_bound: tail,
    }
}

/// Per-factor tail target so that a product of `d` factors bounded by `m` meets `eps`.
pub(crate) fn factor_policy(pol: &TruncationPolicy, d: usize, m: f64) -> TruncationPolicy {
    let eps = if d <= 1 {
        pol.eps
    } else {
        pol.eps / (d as f64 * (m + pol.eps).powi(d as i32 - 1))
    };
    TruncationPolicy {
        eps,
        max_terms: pol.max_terms,
    }
}

/// Theta_t(xi) = prod_j theta_t(xi_j).
pub fn theta_d(t: ScaleParam, xi: &TorusPoint, pol: &TruncationPolicy) -> Result<CertifiedValue> {
    let d = xi.dim();
    let fpol = factor_policy(pol, d, 1.0 + t.get().powf(-0.5));
    let factors = xi
        .coords()
        .iter()
        .map(|&z| theta1(t, z, &fpol))
        .collect::<Result<Vec<_>>>()?;
    Ok(certified_product(&factors))
}

fn check_order(n: usize) -> Result<()> {
    if n > MAX_DERIVATIVE_ORDER {
        Err(Error::DerivativeOrderTooLarge {
            order: n,
            cap: MAX_DERIVATIVE_ORDER,
        })
    } else {
        Ok(())
    }
}

/// All derivatives d^m/dt^m theta_t(z), m = 0..=nmax, from the term-wise differentiated
/// direct series sum_k (-pi (k - z)^2)^m e^{-pi t (k - z)^2}.
pub fn theta1_derivatives_direct(
    nmax: usize,
    t: ScaleParam,
    zeta: f64,
    pol: &TruncationPolicy,
) -> Result<Vec<CertifiedValue>> {
    check_order(nmax)?;
    let t = t.get();
    let z = reduce_coordinate(zeta);
    // (pi x^2)^m e^{-pi t x^2} = t^{-m} y^m e^{-y} <= t^{-m} c_m e^{-y/2} with y = pi t x^2.
    let tail = |m: usize, n: usize| {
        if m == 0 {
            gaussian_tail_bound(t, n)
        } else {
            t.powi(-(m as i32)) * poly_gauss_constant(m) * gaussian_tail_bound(t / 2.0, n)
        }
    };
    let n = smallest_radius(pol, |n| (0..=nmax).map(|m| tail(m, n)).fold(0.0, f64::max))?;
    let mut acc = vec![0.0; nmax + 1];
    let mut add = |x: f64| {
        let w = -PI * x * x;
        let mut term = (w * t).exp();
        for a in acc.iter_mut() {
            *a += term;
            term *= w;
        }
    };
    for k in (1..n).rev() {
        add(k as f64 - z);
        add(k as f64 + z);
    }
    add(z);
    Ok(acc
        .into_iter()
        .enumerate()
        .map(|(m, value)| CertifiedValue {
            value,
            tail_bound: tail(m, n),
        })
        .collect())
}

/// All derivatives of theta_t(z) = t^{-1/2} C(1/t), C(s) = sum_n e^{-pi s n^2} cos(2 pi n z),
/// by the Leibniz rule, using closed forms for d^m/dt^m e^{-a/t}.
pub fn theta1_derivatives_dual(
    nmax: usize,
    t: ScaleParam,
    zeta: f64,
    pol: &TruncationPolicy,
) -> Result<Vec<CertifiedValue>> {
    check_order(nmax)?;
    let t = t.get();
    let z = reduce_coordinate(zeta);
    // d^k/dt^k t^{-1/2} = p_k t^{-1/2-k}
    let mut p = vec![1.0; nmax + 1];
    for k in 1..=nmax {
        p[k] = p[k - 1] * (-0.5 - (k - 1) as f64);
    }
    let pw = |k: usize| p[k] * t.powf(-0.5 - k as f64);
    // Tail of d^m C(1/t) over |n| >= N.
    let c_tail = |m: usize, n: usize| {
        if m == 0 {
            gaussian_tail_bound(1.0 / t, n)
        } else {
            t.powi(-(m as i32)) * exp_inv_derivative_constant(m) * gaussian_tail_bound(0.5 / t, n)
        }
    };
    let total_tail = |order: usize, n: usize| {
        (0..=order)
            .map(|k| binomial(order, k) * pw(k).abs() * c_tail(order - k, n))
            .sum::<f64>()
    };
    let n = smallest_radius(pol, |n| (0..=nmax).map(|m| total_tail(m, n)).fold(0.0, f64::max))?;
    let mut c = vec![0.0; nmax + 1];
    for k in (1..n).rev() {
        let a = PI * (k * k) as f64;
        let w = 2.0 * (2.0 * PI * k as f64 * z).cos();
        for (m, cm) in c.iter_mut().enumerate() {
            *cm += w * exp_inv_derivative(m, a, t);
        }
    }
    c[0] += 1.0;
    Ok((0..=nmax)
        .map(|order| {
            let value = (0..=order)
                .map(|k| binomial(order, k) * pw(k) * c[order - k])
                .sum();
            CertifiedValue {
                value,
                tail_bound: total_tail(order, n),
            }
        })
        .collect())
}

/// All derivatives of theta_t(z) up to nmax, switching representation at t = 1.
pub fn theta1_derivatives(
    nmax: usize,
    t: ScaleParam,
    zeta: f64,
    pol: &TruncationPolicy,
) -> Result<Vec<CertifiedValue>> {
    if t.get() >= 1.0 {
        theta1_derivatives_direct(nmax, t, zeta, pol)
    } else {
        theta1_derivatives_dual(nmax, t, zeta, pol)
    }
}

/// d^n/dt^n theta_t(z).
pub fn theta1_time_derivative(
    n: usize,
    t: ScaleParam,
    zeta: f64,
    pol: &TruncationPolicy,
) -> Result<CertifiedValue> {
    check_order(n)?;
    if n == 0 {
        return theta1(t, zeta, pol);
    }
    Ok(theta1_derivatives(n, t, zeta, pol)?[n])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn st(t: f64) -> ScaleParam {
        ScaleParam::new(t).unwrap()
    }

    fn pol(eps: f64) -> TruncationPolicy {
        TruncationPolicy::with_eps(eps).unwrap()
    }

    /// Plain summation over |k| <= 40, independent of the truncation machinery.
    fn oracle_theta(t: f64, z: f64) -> f64 {
        (-40..=40)
            .map(|k| {
                let x = k as f64 - z;
                (-PI * t * x * x).exp()
            })
            .sum()
    }

    #[test]
    fn theta_at_one_matches_oracle() {
        let v = theta1(st(1.0), 0.0, &pol(1e-14)).unwrap();
        let o = oracle_theta(1.0, 0.0);
        assert!((v.value - o).abs() <= 1e-14);
        assert!((v.value - 1.086434811213308).abs() <= 1e-14);
        assert!(v.tail_bound <= 1e-14);
    }

    #[test]
    fn theta_large_t_is_one() {
        let v = theta1(st(100.0), 0.0, &pol(1e-14)).unwrap();
        assert_eq!(v.value, 1.0);
    }

    #[test]
    fn poisson_quarter() {
        let a = theta1(st(0.25), 0.0, &pol(1e-15)).unwrap().value;
        let b = theta1(st(4.0), 0.0, &pol(1e-15)).unwrap().value;
        assert!((a - 2.0 * b).abs() <= 1e-14);
    }

    #[test]
    fn direct_and_dual_agree() {
        for &t in &[0.01, 0.3, 1.0, 2.5, 17.0] {
            for &z in &[-0.5, -0.31, 0.0, 0.123, 0.49] {
                let a = theta1_direct(st(t), z, &pol(1e-15)).unwrap();
                let b = theta1_dual(st(t), z, &pol(1e-15)).unwrap();
                let o = oracle_theta(t, z);
                let tol = 2.0 * (a.tail_bound + b.tail_bound) + 1e-12 * o;
                assert!((a.value - b.value).abs() <= tol, "t={t} z={z}");
            }
        }
    }

    #[test]
    fn truncation_radius_examples() {
        assert!(truncation_radius(1.0, &pol(1e-15)).unwrap() <= 5);
        assert!(truncation_radius(10.0, &pol(1e-15)).unwrap() <= 2);
        let big = 2.0 / (-(-PI).exp_m1());
        assert_eq!(truncation_radius(1.0, &pol(big)).unwrap(), 1);
        let tiny = TruncationPolicy { eps: 1e-300, max_terms: 3 };
        assert!(matches!(
            truncation_radius(1.0, &tiny),
            Err(Error::TruncationBudgetExceeded { .. })
        ));
    }

    #[test]
    fn tail_bound_is_monotone_in_n() {
        for &t in &[1.0, 3.0, 50.0] {
            let mut prev = f64::INFINITY;
            for n in 1..20 {
                let b = gaussian_tail_bound(t, n);
                assert!(b <= prev);
                prev = b;
            }
        }
    }

    #[test]
    fn reported_tail_bounds_the_true_error() {
        for &t in &[1.0, 1.7, 6.0] {
            for &z in &[0.0, 0.2, -0.5] {
                let loose = TruncationPolicy::with_eps(1e-3).unwrap();
                let v = theta1_direct(st(t), z, &loose).unwrap();
                let err = (v.value - oracle_theta(t, z)).abs();
                assert!(err <= v.tail_bound + 4.0 * f64::EPSILON, "t={t} z={z} err={err} bound={}", v.tail_bound);
            }
        }
    }

    #[test]
    fn symmetry_is_bitwise() {
        for &t in &[0.05, 0.7, 1.0, 3.3] {
            for &z in &[0.1, 0.25, 0.3777, 0.4999] {
                let a = theta1(st(t), z, &pol(1e-15)).unwrap();
                let b = theta1(st(t), -z, &pol(1e-15)).unwrap();
                assert_eq!(a.value.to_bits(), b.value.to_bits());
            }
        }
    }

    #[test]
    fn theta_d_examples() {
        let t1 = theta1(st(1.0), 0.0, &pol(1e-15)).unwrap().value;
        let v = theta_d(st(1.0), &TorusPoint::origin(2), &pol(1e-14)).unwrap();
        assert!((v.value - t1 * t1).abs() <= 1e-14);
        assert!((v.value - 1.1803405990160962).abs() <= 1e-14);
        for d in 1..=4 {
            for &t in &[0.2, 3.0] {
                let a = theta_d(st(1.0 / t), &TorusPoint::origin(d), &pol(1e-15)).unwrap().value;
                let b = theta_d(st(t), &TorusPoint::origin(d), &pol(1e-15)).unwrap().value;
                assert!((a - t.powf(d as f64 / 2.0) * b).abs() <= 1e-13 * a);
            }
        }
    }

    #[test]
    fn theta_d_tail_respects_eps() {
        let xi = TorusPoint::new(vec![0.1, -0.2, 0.3, 0.4]).unwrap();
        let v = theta_d(st(0.01), &xi, &pol(1e-12)).unwrap();
        assert!(v.tail_bound <= 1e-12);
    }

    #[test]
    fn torus_reduction() {
        let p = TorusPoint::new(vec![0.5, 1.25, -0.75, 3.0]).unwrap();
        assert_eq!(p.coords(), &[-0.5, 0.25, 0.25, 0.0]);
        assert!(TorusPoint::new(vec![]).is_err());
        assert!(ScaleParam::new(0.0).is_err());
        assert!(ScaleParam::new(-1.0).is_err());
    }

    #[test]
    fn first_derivative_at_one_matches_oracle() {
        // -pi sum_j j^2 e^{-pi j^2} over |j| <= 12
        let oracle: f64 = (-12i32..=12)
            .map(|j| -PI * (j * j) as f64 * (-PI * (j * j) as f64).exp())
            .sum();
        let v = theta1_time_derivative(1, st(1.0), 0.0, &pol(1e-15)).unwrap();
        assert!((v.value - oracle).abs() <= 1e-14);
        assert!((v.value + 0.2716).abs() < 1e-4);
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let h = 1e-4;
        let f = |t: f64| theta1(st(t), 0.3, &pol(1e-15)).unwrap().value;
        let fd = (f(2.0 + h) - f(2.0 - h)) / (2.0 * h);
        let v = theta1_time_derivative(1, st(2.0), 0.3, &pol(1e-15)).unwrap();
        assert!((fd - v.value).abs() <= 1e-7);
    }

    #[test]
    fn derivative_representations_agree() {
        for &t in &[0.3, 0.8, 1.0, 1.5, 4.0] {
            for &z in &[0.0, 0.17, 0.5] {
                let a = theta1_derivatives_direct(5, st(t), z, &pol(1e-13)).unwrap();
                let b = theta1_derivatives_dual(5, st(t), z, &pol(1e-13)).unwrap();
                for m in 0..=5 {
                    let scale = a[m].value.abs().max(1.0);
                    assert!(
                        (a[m].value - b[m].value).abs() <= 1e-10 * scale,
                        "t={t} z={z} m={m}: {} vs {}",
                        a[m].value,
                        b[m].value
                    );
                }
            }
        }
    }

    #[test]
    fn derivative_order_cap() {
        assert!(matches!(
            theta1_time_derivative(9, st(1.0), 0.0, &pol(1e-12)),
            Err(Error::DerivativeOrderTooLarge { .. })
        ));
        let z = theta1_time_derivative(0, st(2.0), 0.1, &pol(1e-15)).unwrap();
        assert_eq!(z, theta1(st(2.0), 0.1, &pol(1e-15)).unwrap());
    }
}
