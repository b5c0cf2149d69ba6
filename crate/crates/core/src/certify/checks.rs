//! Checks on theta functions, the Gauss multiplier, the heat kernel ratio and their
//! time derivatives.

use std::f64::consts::PI;

use rayon::prelude::*;

use super::ledger::ConstantLedger;
use super::sampling::xi_points;
use super::{incompatible, CheckId, GridSpec, Outcome};
use crate::error::{Error, Result};
use crate::fractional::{compose_derivative, inverse_derivative};
use crate::multipliers::{
    gauss_multiplier_deficit, gauss_multiplier_derivatives, gauss_multiplier_dual, gauss_multiplier_ratio_form,
    psi_derivatives, ratio_deficit, ratio_factor_derivatives, MultiplierQuery,
};
use crate::theta::{
    reduce_coordinate, theta1, theta1_direct, ScaleParam, TorusPoint, TruncationPolicy, MAX_DERIVATIVE_ORDER,
};

/// Terms per side in the log-domain direct sums (s >= 1).
const LOG_TERMS: i64 = 10;
/// Relative round-off allowance for log-domain comparisons.
const LOG_ROUNDING: f64 = 4.0 * f64::EPSILON;

pub(crate) fn pol() -> TruncationPolicy {
    TruncationPolicy::default()
}

fn st(t: f64) -> Result<ScaleParam> {
    ScaleParam::new(t)
}

/// Map work items in parallel and concatenate the outcomes in input order.
pub(crate) fn sweep<T: Sync>(items: &[T], f: impl Fn(&T) -> Vec<Outcome> + Sync + Send) -> Vec<Outcome> {
    items.par_iter().map(f).collect::<Vec<_>>().into_iter().flatten().collect()
}

/// Run a fallible item, turning an error into a single failed outcome.
fn guarded(point: &[(&str, f64)], xi: &[f64], f: impl FnOnce(&mut Vec<Outcome>) -> Result<()>) -> Vec<Outcome> {
    let mut out = Vec::new();
    match f(&mut out) {
        Ok(()) => out,
        Err(e) => vec![Outcome::failed("error", point, xi, &e)],
    }
}

struct Item {
    t: f64,
    d: usize,
    xi: TorusPoint,
}

/// (t, d, xi) items, t outermost.
fn items(grid: &GridSpec, dims: &[usize]) -> Result<Vec<Item>> {
    let per_dim: Vec<Vec<TorusPoint>> = dims
        .iter()
        .map(|&d| xi_points(d, grid.xi_samples, grid.seed))
        .collect::<Result<_>>()?;
    let mut out = Vec::new();
    for t in grid.t.points() {
        for (&d, xs) in dims.iter().zip(&per_dim) {
            for xi in xs {
                out.push(Item { t, d, xi: xi.clone() });
            }
        }
    }
    Ok(out)
}

fn need_t_at_least(id: CheckId, grid: &GridSpec, lo: f64) -> Result<()> {
    if grid.t.start < lo {
        return Err(incompatible(id, format!("requires t >= {lo}, grid starts at {}", grid.t.start)));
    }
    Ok(())
}

fn need_one_dim(id: CheckId, grid: &GridSpec) -> Result<()> {
    if grid.dims.iter().any(|&d| d != 1) {
        return Err(incompatible(id, "one-dimensional check"));
    }
    Ok(())
}

fn scale_bound(id: CheckId, grid: &GridSpec) -> Result<f64> {
    let d = grid
        .scale_bound
        .ok_or_else(|| incompatible(id, "needs a scale bound"))?;
    if grid.t.stop > d {
        return Err(incompatible(id, format!("grid reaches t = {} beyond the bound {d}", grid.t.stop)));
    }
    Ok(d)
}

fn orders(id: CheckId, grid: &GridSpec, min: usize) -> Result<Vec<usize>> {
    if grid.orders.is_empty() {
        return Err(incompatible(id, "needs derivative orders"));
    }
    if let Some(&n) = grid.orders.iter().find(|&&n| n < min || n > MAX_DERIVATIVE_ORDER) {
        return Err(incompatible(id, format!("order {n} outside {min}..={MAX_DERIVATIVE_ORDER}")));
    }
    Ok(grid.orders.clone())
}

fn cap(ledger: &ConstantLedger, id: CheckId, slice: &str) -> f64 {
    ledger.get(id, slice).map_or(f64::MAX, |e| e.value)
}

/// lhs / shape, with 0/0 read as 0.
fn ratio(lhs: f64, shape: f64) -> Result<f64> {
    if lhs == 0.0 {
        Ok(0.0)
    } else if shape > 0.0 {
        Ok(lhs / shape)
    } else {
        Err(Error::InvalidPoint(format!("reference shape vanishes while |lhs| = {lhs:e}")))
    }
}

/// ln theta_s(z) with an absolute error bound. For s >= 1 the factor e^{-pi s z^2} is
/// taken out of the direct sum, so the result does not underflow.
fn ln_theta(s: f64, zeta: f64) -> Result<(f64, f64)> {
    let z = reduce_coordinate(zeta);
    if s >= 1.0 {
        let mut acc = 0.0;
        for k in (1..=LOG_TERMS).rev() {
            let k = k as f64;
            acc += (-PI * s * (k * k - 2.0 * k * z)).exp() + (-PI * s * (k * k + 2.0 * k * z)).exp();
        }
        acc += 1.0;
        // Omitted terms: e^{-pi s k (k - 1)} at most, for |k| > LOG_TERMS.
        let n = (LOG_TERMS + 1) as f64;
        let tail = 2.0 * (-PI * s * n * (n - 1.0)).exp() / -(-2.0 * PI * s * n).exp_m1();
        Ok((-PI * s * z * z + acc.ln(), tail))
    } else {
        let th = theta1(st(s)?, z, &pol())?;
        Ok((th.value.ln(), th.tail_bound / (th.value - th.tail_bound)))
    }
}

/// ln(theta_s(z) / theta_s(0)).
fn ln_ratio(s: f64, z: f64) -> Result<(f64, f64)> {
    if s >= 1.0 {
        let (a, ea) = ln_theta(s, z)?;
        let (b, eb) = ln_theta(s, 0.0)?;
        Ok((a - b, ea + eb))
    } else {
        let e = ratio_deficit(st(s)?, z, &pol())?;
        Ok(((-e.value).ln_1p(), e.tail_bound / (1.0 - e.value - e.tail_bound)))
    }
}

/// ln F g_s(xi).
fn ln_multiplier(s: f64, xi: &TorusPoint) -> Result<(f64, f64)> {
    let mut v = 0.0;
    let mut e = 0.0;
    for &z in xi.coords() {
        let (a, b) = ln_ratio(s, z)?;
        v += a;
        e += b;
    }
    Ok((v, e))
}

/// Record lhs <= rhs given in log form, both as a log comparison and as values.
fn both(out: &mut Vec<Outcome>, label: &str, point: &[(&str, f64)], xi: &[f64], lhs: f64, rhs: f64, err: f64) {
    out.push(Outcome::new(
        &format!("{label}/log"),
        point,
        xi,
        lhs,
        rhs,
        err + LOG_ROUNDING * (lhs.abs() + rhs.abs()),
    ));
    let (l, r) = (lhs.exp(), rhs.exp());
    out.push(Outcome::new(
        &format!("{label}/value"),
        point,
        xi,
        l,
        r,
        l.max(r) * (err + LOG_ROUNDING * (lhs.abs() + rhs.abs())).exp_m1(),
    ));
}

pub fn l1_theta0(grid: &GridSpec) -> Result<Vec<Outcome>> {
    Ok(sweep(&grid.t.points(), |&t| {
        let p = [("t", t)];
        guarded(&p, &[0.0], |out| {
            let th = theta1(st(t)?, 0.0, &pol())?;
            let r = t.powf(-0.5);
            out.push(Outcome::new("lower", &p, &[0.0], r.max(1.0), th.value, th.tail_bound));
            out.push(Outcome::new("upper", &p, &[0.0], th.value, 1.0 + r, th.tail_bound));
            Ok(())
        })
    }))
}

pub fn poisson(grid: &GridSpec) -> Result<Vec<Outcome>> {
    Ok(sweep(&grid.t.points(), |&t| {
        let p = [("t", t)];
        guarded(&p, &[0.0], |out| {
            let a = theta1_direct(st(t)?, 0.0, &pol())?;
            let b = theta1_direct(st(1.0 / t)?, 0.0, &pol())?;
            let r = t.powf(-0.5);
            let lhs = (a.value - r * b.value).abs() / a.value;
            let slack = (a.tail_bound + r * b.tail_bound) / a.value;
            out.push(Outcome::new("relative", &p, &[0.0], lhs, 1e-12, slack));
            Ok(())
        })
    }))
}

pub fn ft_dual(grid: &GridSpec) -> Result<Vec<Outcome>> {
    let it = items(grid, &grid.dims)?;
    Ok(sweep(&it, |i| {
        let p = [("t", i.t), ("d", i.d as f64)];
        guarded(&p, i.xi.coords(), |out| {
            let q = MultiplierQuery::new(i.t, i.xi.clone(), pol(), 0)?;
            let a = gauss_multiplier_ratio_form(&q)?;
            let b = gauss_multiplier_dual(&q)?;
            out.push(Outcome::new(
                "deviation",
                &p,
                i.xi.coords(),
                (a.value - b.value).abs(),
                1e-12,
                a.tail_bound + b.tail_bound,
            ));
            Ok(())
        })
    }))
}

pub fn est0_global(grid: &GridSpec) -> Result<Vec<Outcome>> {
    let it = items(grid, &grid.dims)?;
    Ok(sweep(&it, |i| {
        let p = [("t", i.t), ("d", i.d as f64)];
        guarded(&p, i.xi.coords(), |out| {
            let e = gauss_multiplier_deficit(st(i.t)?, &i.xi, &pol())?;
            let rhs = 6.0 * PI * i.t * i.xi.norm_sq();
            out.push(Outcome::new("deficit", &p, i.xi.coords(), e.value, rhs, e.tail_bound));
            Ok(())
        })
    }))
}

pub fn est0_local(grid: &GridSpec, ledger: &ConstantLedger) -> Result<Vec<Outcome>> {
    let id = CheckId::Est0Local;
    let dcap = scale_bound(id, grid)?;
    let slice = format!("D={dcap}");
    let c = cap(ledger, id, &slice);
    let it = items(grid, &grid.dims)?;
    Ok(sweep(&it, |i| {
        let p = [("t", i.t), ("d", i.d as f64)];
        guarded(&p, i.xi.coords(), |out| {
            let e = gauss_multiplier_deficit(st(i.t)?, &i.xi, &pol())?;
            let r = ratio(e.value, (-PI / i.t).exp() * i.xi.norm_sq())?;
            out.push(Outcome::new("ratio", &p, i.xi.coords(), r, c, 0.0).capped(slice.clone()));
            Ok(())
        })
    }))
}

pub fn lem2(grid: &GridSpec) -> Result<Vec<Outcome>> {
    need_one_dim(CheckId::Lem2, grid)?;
    let it = items(grid, &[1])?;
    Ok(sweep(&it, |i| {
        let p = [("t", i.t)];
        let z = i.xi.coords()[0];
        guarded(&p, i.xi.coords(), |out| {
            let (a, ea) = ln_theta(i.t, z)?;
            let (b, eb) = ln_theta(i.t / 8.0, 0.0)?;
            let g = PI * i.t * z * z / 2.0;
            both(out, "theta", &p, i.xi.coords(), a, b - g, ea + eb);
            both(out, "constant", &p, i.xi.coords(), b - g, (3.0 / i.t.sqrt()).ln_1p() - g, eb);
            Ok(())
        })
    }))
}

pub fn lem4(grid: &GridSpec) -> Result<Vec<Outcome>> {
    let id = CheckId::Lem4;
    need_one_dim(id, grid)?;
    if grid.alphas.is_empty() || grid.alphas.iter().any(|&a| !(a > 0.0 && a < 0.5)) {
        return Err(incompatible(id, "needs radii a in (0, 1/2)"));
    }
    let it = items(grid, &[1])?;
    let work: Vec<(f64, &Item)> = grid.alphas.iter().flat_map(|&a| it.iter().map(move |i| (a, i))).collect();
    Ok(sweep(&work, |&(a, i)| {
        let p = [("alpha", a), ("t", i.t)];
        let raw = i.xi.coords()[0];
        // Frequencies rescaled into [-a, a].
        let z = 2.0 * a * raw;
        guarded(&p, &[z], |out| {
            let (r, e) = ln_ratio(i.t, z)?;
            let g = -PI * i.t * z * z;
            let up = g + 2.0 * z * z * (-PI * i.t * (0.25 - a / 2.0)).exp() / (0.5 - a).powi(2);
            both(out, "lower", &p, &[z], g, r, e);
            both(out, "upper", &p, &[z], r, up, e);
            let (r, e) = ln_ratio(i.t, raw)?;
            both(out, "lower_any", &p, &[raw], -PI * i.t * raw * raw, r, e);
            Ok(())
        })
    }))
}

pub fn cor1(grid: &GridSpec) -> Result<Vec<Outcome>> {
    let id = CheckId::Cor1;
    need_one_dim(id, grid)?;
    need_t_at_least(id, grid, 15.0)?;
    let it = items(grid, &[1])?;
    Ok(sweep(&it, |i| {
        let p = [("t", i.t)];
        let z = i.xi.coords()[0];
        guarded(&p, i.xi.coords(), |out| {
            let (r, e) = ln_ratio(i.t, z)?;
            both(out, "upper", &p, i.xi.coords(), r, -PI * i.t * z * z / 10.0, e);
            Ok(())
        })
    }))
}

pub fn est_inf(grid: &GridSpec) -> Result<Vec<Outcome>> {
    need_t_at_least(CheckId::EstInf, grid, 15.0)?;
    let it = items(grid, &grid.dims)?;
    Ok(sweep(&it, |i| {
        let p = [("t", i.t), ("d", i.d as f64)];
        guarded(&p, i.xi.coords(), |out| {
            let (f, e) = ln_multiplier(i.t, &i.xi)?;
            both(out, "upper", &p, i.xi.coords(), f, -PI * i.t * i.xi.norm_sq() / 10.0, e);
            Ok(())
        })
    }))
}

pub fn prop1mod(grid: &GridSpec, ledger: &ConstantLedger) -> Result<Vec<Outcome>> {
    let id = CheckId::Prop1Mod;
    let dcap = scale_bound(id, grid)?;
    let c_up = ledger.value(id, &format!("D={dcap},bound=upper"))?;
    let c_lo = ledger.value(id, &format!("D={dcap},bound=lower"))?;
    let it = items(grid, &grid.dims)?;
    Ok(sweep(&it, |i| {
        let p = [("t", i.t), ("d", i.d as f64)];
        guarded(&p, i.xi.coords(), |out| {
            // Both bounds in deficit form: 1 - e^{-C x} vs 1 - F.
            let def = gauss_multiplier_deficit(st(i.t)?, &i.xi, &pol())?;
            let x = (-PI / i.t).exp() * i.xi.norm_sq();
            let lower = -(-c_lo * x).exp_m1();
            let upper = -(-c_up * x).exp_m1();
            out.push(Outcome::new("lower", &p, i.xi.coords(), def.value, lower, def.tail_bound));
            out.push(Outcome::new("upper", &p, i.xi.coords(), upper, def.value, def.tail_bound));
            Ok(())
        })
    }))
}

pub fn htd1(grid: &GridSpec) -> Result<Vec<Outcome>> {
    let lim = 2f64.powi(-8);
    if grid.t.stop >= lim {
        return Err(incompatible(CheckId::Htd1, format!("requires t < {lim}")));
    }
    let it = items(grid, &grid.dims)?;
    Ok(sweep(&it, |i| {
        let p = [("t", i.t), ("d", i.d as f64)];
        guarded(&p, i.xi.coords(), |out| {
            let (f, e) = ln_multiplier(1.0 / (4.0 * PI * i.t), &i.xi)?;
            let n2 = i.xi.norm_sq();
            both(out, "lower", &p, i.xi.coords(), -n2 / (4.0 * i.t), f, e);
            both(out, "upper", &p, i.xi.coords(), f, -n2 / (40.0 * i.t), e);
            Ok(())
        })
    }))
}

pub fn htd2(grid: &GridSpec, ledger: &ConstantLedger) -> Result<Vec<Outcome>> {
    let id = CheckId::Htd2;
    need_t_at_least(id, grid, 2f64.powi(-8))?;
    let c_up = ledger.value(id, "bound=upper")?;
    let c_lo = ledger.value(id, "bound=lower")?;
    let it = items(grid, &grid.dims)?;
    Ok(sweep(&it, |i| {
        let p = [("t", i.t), ("d", i.d as f64)];
        guarded(&p, i.xi.coords(), |out| {
            let def = gauss_multiplier_deficit(st(1.0 / (4.0 * PI * i.t))?, &i.xi, &pol())?;
            let x = (-4.0 * PI * PI * i.t).exp() * i.xi.norm_sq();
            let lower = -(-c_lo * x).exp_m1();
            let upper = -(-c_up * x).exp_m1();
            out.push(Outcome::new("lower", &p, i.xi.coords(), def.value, lower, def.tail_bound));
            out.push(Outcome::new("upper", &p, i.xi.coords(), upper, def.value, def.tail_bound));
            Ok(())
        })
    }))
}

pub fn deriv_1d(grid: &GridSpec, ledger: &ConstantLedger) -> Result<Vec<Outcome>> {
    let id = CheckId::Deriv1d;
    need_one_dim(id, grid)?;
    if grid.t.start <= 1.0 {
        return Err(incompatible(id, "requires t > 1"));
    }
    let ns = orders(id, grid, 1)?;
    let nmax = *ns.iter().max().expect("nonempty");
    let it = items(grid, &[1])?;
    Ok(sweep(&it, |i| {
        let p = [("t", i.t)];
        let z = i.xi.coords()[0];
        guarded(&p, i.xi.coords(), |out| {
            let v = ratio_factor_derivatives(nmax, st(i.t)?, z, &pol())?;
            for &n in &ns {
                let t = i.t;
                let nf = n as i32;
                let lhs = (t.powi(nf) * v[n].value).abs();
                let shape = (t.powi(nf) * z.powi(2 * nf) + z * z * (-PI * t / 5.0).exp()) * (-PI * t * z * z / 5.0).exp();
                let slice = format!("n={n}");
                let pn = [("t", t), ("n", n as f64)];
                out.push(
                    Outcome::new("ratio", &pn, i.xi.coords(), ratio(lhs, shape)?, cap(ledger, id, &slice), 0.0)
                        .capped(slice),
                );
            }
            Ok(())
        })
    }))
}

pub fn deriv_d(grid: &GridSpec, ledger: &ConstantLedger) -> Result<Vec<Outcome>> {
    let id = CheckId::DerivD;
    need_t_at_least(id, grid, 15.0)?;
    let ns = orders(id, grid, 1)?;
    let nmax = *ns.iter().max().expect("nonempty");
    let it = items(grid, &grid.dims)?;
    Ok(sweep(&it, |i| {
        let p = [("t", i.t), ("d", i.d as f64)];
        guarded(&p, i.xi.coords(), |out| {
            let v = gauss_multiplier_derivatives(nmax, st(i.t)?, &i.xi, &pol())?;
            for &n in &ns {
                let lhs = (i.t.powi(n as i32) * v[n].value).abs();
                let shape = (-PI * i.t * i.xi.norm_sq() * 2f64.powi(-(n as i32)) / 10.0).exp();
                let slice = format!("n={n}");
                let pn = [("t", i.t), ("d", i.d as f64), ("n", n as f64)];
                out.push(
                    Outcome::new("ratio", &pn, i.xi.coords(), ratio(lhs, shape)?, cap(ledger, id, &slice), 0.0)
                        .capped(slice),
                );
            }
            Ok(())
        })
    }))
}

pub fn g12(grid: &GridSpec, ledger: &ConstantLedger) -> Result<Vec<Outcome>> {
    let id = CheckId::G12;
    need_one_dim(id, grid)?;
    let dcap = scale_bound(id, grid)?;
    let ns = orders(id, grid, 1)?;
    let nmax = *ns.iter().max().expect("nonempty");
    let it = items(grid, &[1])?;
    Ok(sweep(&it, |i| {
        let p = [("t", i.t)];
        let z = i.xi.coords()[0];
        guarded(&p, i.xi.coords(), |out| {
            let v = ratio_factor_derivatives(nmax, st(i.t)?, z, &pol())?;
            let e = (-PI / i.t).exp();
            let shape = e * z * z * (-e * z * z).exp();
            for &n in &ns {
                let lhs = (i.t.powi(2 * n as i32) * v[n].value).abs();
                let slice = format!("D={dcap},n={n}");
                let pn = [("t", i.t), ("n", n as f64)];
                out.push(
                    Outcome::new("ratio", &pn, i.xi.coords(), ratio(lhs, shape)?, cap(ledger, id, &slice), 0.0)
                        .capped(slice),
                );
            }
            Ok(())
        })
    }))
}

pub fn g14(grid: &GridSpec, ledger: &ConstantLedger) -> Result<Vec<Outcome>> {
    let id = CheckId::G14;
    let dcap = scale_bound(id, grid)?;
    let ns = orders(id, grid, 0)?;
    let nmax = *ns.iter().max().expect("nonempty");
    let decay: Vec<f64> = ns
        .iter()
        .map(|n| ledger.value(id, &format!("D={dcap},n={n},role=decay")))
        .collect::<Result<_>>()?;
    let it = items(grid, &grid.dims)?;
    Ok(sweep(&it, |i| {
        let p = [("t", i.t), ("d", i.d as f64)];
        guarded(&p, i.xi.coords(), |out| {
            let v = gauss_multiplier_derivatives(nmax, st(i.t)?, &i.xi, &pol())?;
            let x = (-PI / i.t).exp() * i.xi.norm_sq();
            for (&n, &c) in ns.iter().zip(&decay) {
                let lhs = (i.t.powi(2 * n as i32) * v[n].value).abs();
                let slice = format!("D={dcap},n={n},role=cap");
                let pn = [("t", i.t), ("d", i.d as f64), ("n", n as f64)];
                out.push(
                    Outcome::new("ratio", &pn, i.xi.coords(), lhs * (c * x).exp(), cap(ledger, id, &slice), 0.0)
                        .capped(slice),
                );
            }
            Ok(())
        })
    }))
}

/// d^j/dt^j F g_{psi^{-1}(t)}(xi) for j = 0..=nmax, via the chain rule and the
/// derivatives of the inverse of psi.
pub fn psi_composed_derivatives(nmax: usize, t: f64, xi: &TorusPoint) -> Result<Vec<f64>> {
    if !(t > 0.0 && t < 1.0) {
        return Err(Error::DomainError(t));
    }
    let s = -PI / t.ln();
    let outer: Vec<f64> = gauss_multiplier_derivatives(nmax, st(s)?, xi, &pol())?
        .into_iter()
        .map(|c| c.value)
        .collect();
    let mut inner = vec![s];
    for j in 1..=nmax {
        inner.push(inverse_derivative(j, &psi_derivatives(j, s))?);
    }
    (0..=nmax)
        .map(|n| compose_derivative(n, &outer[..=n], &inner[..=n]))
        .collect()
}

pub fn psi_deriv(grid: &GridSpec, ledger: &ConstantLedger) -> Result<Vec<Outcome>> {
    let id = CheckId::PsiDeriv;
    let c = scale_bound(id, grid)?;
    if c >= 1.0 {
        return Err(incompatible(id, "the bound c must be below 1"));
    }
    let ns = orders(id, grid, 0)?;
    let nmax = *ns.iter().max().expect("nonempty");
    let it = items(grid, &grid.dims)?;
    Ok(sweep(&it, |i| {
        let p = [("t", i.t), ("d", i.d as f64)];
        guarded(&p, i.xi.coords(), |out| {
            let v = psi_composed_derivatives(nmax, i.t, &i.xi)?;
            for &n in &ns {
                let lhs = (i.t.powi(n as i32) * v[n]).abs();
                let slice = format!("c={c},n={n}");
                let pn = [("t", i.t), ("d", i.d as f64), ("n", n as f64)];
                out.push(Outcome::new("ratio", &pn, i.xi.coords(), lhs, cap(ledger, id, &slice), 0.0).capped(slice));
            }
            Ok(())
        })
    }))
}
