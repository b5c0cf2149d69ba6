//! Gauss-Legendre panels for integrals of the form int_a^inf (s - a)^{gamma - 1} F(s) ds
//! with smooth F: a graded panel set absorbs the endpoint singularity after the
//! substitution s = a + x^{1/gamma}, and dyadic panels cover [a + W, inf) until a
//! caller-supplied tail bound is small enough.

use crate::error::{Error, Result};

/// Gauss-Legendre rule on [-1, 1].
#[derive(Clone, Debug)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        let n = n.max(1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() <= 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// int_a^b f.
    pub fn integrate(&self, a: f64, b: f64, mut f: impl FnMut(f64) -> Result<f64>) -> Result<f64> {
        let h = 0.5 * (b - a);
        let c = 0.5 * (b + a);
        let mut acc = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc += w * f(c + h * x)?;
        }
        Ok(acc * h)
    }
}

/// P_n(x) and P_n'(x) by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Settings for the panel integrator.
#[derive(Clone, Debug)]
pub struct PanelRule {
    pub gl: GaussLegendre,
    /// Number of geometrically graded panels toward the singular endpoint.
    pub levels: usize,
    /// Relative stopping tolerance for the tail.
    pub rel_tol: f64,
    /// Largest allowed (S - a) / W before giving up.
    pub max_extent: f64,
}

impl PanelRule {
    pub fn new(nodes: usize, rel_tol: f64, max_extent: f64) -> Self {
        Self {
            gl: GaussLegendre::new(nodes),
            levels: 24,
            rel_tol,
            max_extent,
        }
    }

    /// int_a^{a+W} (s - a)^{gamma - 1} F(s) ds = (1/gamma) int_0^{W^gamma} F(a + x^{1/gamma}) dx.
    pub fn singular(&self, a: f64, width: f64, gamma: f64, mut f: impl FnMut(f64) -> Result<f64>) -> Result<f64> {
        let top = width.powf(gamma);
        let inv = 1.0 / gamma;
        let mut acc = 0.0;
        let mut hi = top;
        for level in 0..=self.levels {
            let lo = if level == self.levels { 0.0 } else { hi * 0.5 };
            acc += self.gl.integrate(lo, hi, |x| f(a + x.powf(inv)))?;
            hi = lo;
        }
        Ok(acc * inv)
    }

    /// int_{a+W}^inf (s - a)^{gamma - 1} F(s) ds over dyadic panels. `tail(S)` must bound
    /// |int_S^inf (s - a)^{gamma-1} F(s) ds|; panels are added until it drops below
    /// rel_tol * |total| + abs_floor. Returns the integral and the tail bound at the cut.
    pub fn dyadic_tail(
        &self,
        a: f64,
        width: f64,
        gamma: f64,
        abs_floor: f64,
        base: f64,
        mut f: impl FnMut(f64) -> Result<f64>,
        tail: impl Fn(f64) -> f64,
    ) -> Result<(f64, f64)> {
        let mut acc = 0.0;
        let mut lo = width;
        loop {
            let hi = 2.0 * lo;
            acc += self
                .gl
                .integrate(a + lo, a + hi, |s| Ok((s - a).powf(gamma - 1.0) * f(s)?))?;
            let bound = tail(a + hi);
            if bound <= self.rel_tol * (acc + base).abs() + abs_floor {
                return Ok((acc, bound));
            }
            if hi / width > self.max_extent {
                return Err(Error::QuadratureBudgetExceeded(format!(
                    "tail bound {bound:e} still above tolerance at s = {:e}",
                    a + hi
                )));
            }
            lo = hi;
        }
    }

    /// int_a^inf (s - a)^{gamma-1} F(s) ds with natural scale W, and the tail bound.
    pub fn weighted(
        &self,
        a: f64,
        width: f64,
        gamma: f64,
        abs_floor: f64,
        mut f: impl FnMut(f64) -> Result<f64>,
        tail: impl Fn(f64) -> f64,
    ) -> Result<(f64, f64)> {
        let near = self.singular(a, width, gamma, &mut f)?;
        let (far, bound) = self.dyadic_tail(a, width, gamma, abs_floor, near, &mut f, tail)?;
        Ok((near + far, bound))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_is_exact_for_polynomials() {
        for n in [1, 2, 5, 16, 30] {
            let gl = GaussLegendre::new(n);
            let wsum: f64 = gl.weights.iter().sum();
            assert!((wsum - 2.0).abs() < 1e-14);
            for deg in 0..(2 * n) {
                let v = gl.integrate(0.0, 1.0, |x| Ok(x.powi(deg as i32))).unwrap();
                assert!((v - 1.0 / (deg as f64 + 1.0)).abs() < 1e-13, "n={n} deg={deg}");
            }
        }
    }

    #[test]
    fn singular_beta_integral() {
        // int_0^1 x^{gamma-1} (1 - x) dx = 1/gamma - 1/(gamma+1)
        let rule = PanelRule::new(20, 1e-14, 1e60);
        for gamma in [0.1, 0.5, 0.9] {
            let v = rule.singular(0.0, 1.0, gamma, |s| Ok(1.0 - s)).unwrap();
            let exact = 1.0 / gamma - 1.0 / (gamma + 1.0);
            assert!((v - exact).abs() < 1e-13 * exact, "gamma={gamma}");
        }
    }

    #[test]
    fn weighted_power_law() {
        // int_1^inf (s-1)^{-1/2} s^{-2} ds = B(1/2, 3/2) = pi/2
        let rule = PanelRule::new(20, 1e-14, 1e60);
        let tail = |s: f64| 2f64.sqrt() * 2.0 * s.powf(-1.5) / 3.0;
        let (v, b) = rule.weighted(1.0, 1.0, 0.5, 0.0, |s| Ok(s.powi(-2)), tail).unwrap();
        assert!((v - std::f64::consts::FRAC_PI_2).abs() < 1e-12, "{v}");
        assert!(b <= 1e-14 * v);
    }
}
