//! Small special-function and combinatorial helpers shared across modules.

/// Gamma function (libm port of the musl implementation).
pub fn gamma(x: f64) -> f64 {
    libm::tgamma(x)
}

/// Euler Beta function B(a, b).
pub fn beta(a: f64, b: f64) -> f64 {
    (libm::lgamma(a) + libm::lgamma(b) - libm::lgamma(a + b)).exp()
}

pub fn factorial(n: usize) -> f64 {
    (1..=n).fold(1.0, |acc, k| acc * k as f64)
}

pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc.round()
}

/// Unsigned Lah number L(n, k) = C(n-1, k-1) n! / k!, with L(0, 0) = 1.
pub fn lah(n: usize, k: usize) -> f64 {
    if n == 0 && k == 0 {
        return 1.0;
    }
    if k == 0 || k > n {
        return 0.0;
    }
    (binomial(n - 1, k - 1) * factorial(n) / factorial(k)).round()
}

/// sup_{y >= 0} y^n e^{-y/2} = (2n/e)^n, with the value 1 at n = 0.
pub fn poly_gauss_constant(n: usize) -> f64 {
    if n == 0 {
        1.0
    } else {
        (2.0 * n as f64 / std::f64::consts::E).powi(n as i32)
    }
}

/// The m-th t-derivative of e^{-a/t}:
/// e^{-a/t} * sum_{k=1}^m L(m,k) (-1)^{m+k} a^k t^{-m-k}.
pub fn exp_inv_derivative(m: usize, a: f64, t: f64) -> f64 {
    let e = (-a / t).exp();
    if m == 0 {
        return e;
    }
    if e == 0.0 {
        return 0.0;
    }
    let mut acc = 0.0;
    for k in 1..=m {
        let sign = if (m + k) % 2 == 0 { 1.0 } else { -1.0 };
        acc += sign * lah(m, k) * (a / t).powi(k as i32);
    }
    e * acc * t.powi(-(m as i32))
}

/// Sum_k L(m,k) c_k: bounds |t^m d^m/dt^m e^{-a/t}| <= value * e^{-a/(2t)}.
pub fn exp_inv_derivative_constant(m: usize) -> f64 {
    if m == 0 {
        return 1.0;
    }
    (1..=m).map(|k| lah(m, k) * poly_gauss_constant(k)).sum()
}

/// Truncated Taylor coefficients c_0..c_n of a function at a point.
#[derive(Clone, Debug, PartialEq)]
pub struct Jet(pub Vec<f64>);

impl Jet {
    /// The variable x at x0, to order n.
    pub fn variable(x0: f64, n: usize) -> Self {
        let mut c = vec![0.0; n + 1];
        c[0] = x0;
        if n > 0 {
            c[1] = 1.0;
        }
        Self(c)
    }

    pub fn constant(v: f64, n: usize) -> Self {
        let mut c = vec![0.0; n + 1];
        c[0] = v;
        Self(c)
    }

    pub fn order(&self) -> usize {
        self.0.len() - 1
    }

    pub fn scale(&self, a: f64) -> Self {
        Self(self.0.iter().map(|c| a * c).collect())
    }

    pub fn add(&self, o: &Self) -> Self {
        Self(self.0.iter().zip(&o.0).map(|(a, b)| a + b).collect())
    }

    pub fn mul(&self, o: &Self) -> Self {
        let n = self.order();
        Self((0..=n).map(|k| (0..=k).map(|i| self.0[i] * o.0[k - i]).sum()).collect())
    }

    pub fn recip(&self) -> Self {
        let n = self.order();
        let mut b = vec![0.0; n + 1];
        b[0] = 1.0 / self.0[0];
        for k in 1..=n {
            let s: f64 = (1..=k).map(|i| self.0[i] * b[k - i]).sum();
            b[k] = -s * b[0];
        }
        Self(b)
    }

    pub fn exp(&self) -> Self {
        let n = self.order();
        let mut b = vec![0.0; n + 1];
        b[0] = self.0[0].exp();
        for k in 1..=n {
            let s: f64 = (1..=k).map(|i| i as f64 * self.0[i] * b[k - i]).sum();
            b[k] = s / k as f64;
        }
        Self(b)
    }

    /// Derivatives f^{(j)} = j! c_j.
    pub fn derivatives(&self) -> Vec<f64> {
        self.0.iter().enumerate().map(|(j, c)| factorial(j) * c).collect()
    }
}
