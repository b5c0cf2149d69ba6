//! Checks on lattice operators, seminorms and the fractional-integration identities,
//! and the empirical dimension-growth estimate.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::checks::{pol, sweep};
use super::ledger::ConstantLedger;
use super::sampling::{random_signal, random_values, rng_for, xi_points};
use super::{incompatible, CheckId, GridSpec, Outcome};
use crate::error::{Error, Result};
use crate::fractional::{
    delta_kernel_ratio, frac_derivative, frac_reconstruct, kernel_a_mass, multiplier_reconstruct, FracParams,
    GaussFamily, MultiplierFamily, PowerLaw, TimeFunction,
};
use crate::lattice::{ball_maximal_at, gauss_symbol_table, kernel_mass_outside, lp_norm, EmbeddingGrid, LatticeSignal};
use crate::seminorms::{jump_count, oscillation, variation, Partition, SampledFamily};
use crate::special::gamma;
use crate::theta::{theta1, ScaleParam};

/// Support radius of the random test signals.
const SIGNAL_RADIUS: i64 = 2;
/// Tolerance of the contraction comparison.
const CONTRACTION_TOL: f64 = 1e-10;
/// Tolerance of the seminorm inequalities.
const SEMINORM_TOL: f64 = 1e-12;

fn exponent_label(p: f64) -> String {
    if p.is_infinite() {
        "inf".into()
    } else {
        format!("{p}")
    }
}

/// g1(n) = e^{-pi n^2/t} / theta_{1/t}(0) for n = 0..=r.
fn kernel_1d(t: f64, r: usize) -> Result<Vec<f64>> {
    let th = theta1(ScaleParam::new(1.0 / t)?, 0.0, &pol())?.value;
    Ok((0..=r).map(|n| (-PI * (n * n) as f64 / t).exp() / th).collect())
}

/// Smallest radius with discarded one-dimensional kernel mass below the default eps.
fn kernel_radius(t: f64) -> usize {
    (1..).find(|&r| kernel_mass_outside(t, r as u64 + 1) <= pol().eps).expect("mass decays")
}

/// A signal on the dense box [-h, h]^d, last coordinate fastest.
struct DenseBox {
    dim: usize,
    half: i64,
    data: Vec<Complex64>,
}

impl DenseBox {
    fn side(&self) -> usize {
        (2 * self.half + 1) as usize
    }

    fn from_signal(f: &LatticeSignal, half: i64) -> Self {
        let dim = f.dim();
        let side = (2 * half + 1) as usize;
        let mut data = vec![Complex64::default(); side.pow(dim as u32)];
        for (k, v) in f.iter() {
            let idx = k.iter().fold(0usize, |acc, &c| acc * side + (c + half) as usize);
            data[idx] = *v;
        }
        Self { dim, half, data }
    }

    /// Convolve with the one-dimensional table along every axis. Values pushed past the
    /// box edge are dropped, so the box must cover the support plus the kernel radius.
    fn convolve_separable(&self, table: &[f64]) -> Vec<Complex64> {
        let side = self.side();
        let r = table.len() as i64 - 1;
        let mut cur = self.data.clone();
        let mut line = vec![Complex64::default(); side];
        for axis in 0..self.dim {
            let stride = side.pow((self.dim - 1 - axis) as u32);
            let block = stride * side;
            for base in (0..cur.len()).step_by(block) {
                for off in 0..stride {
                    for (i, x) in line.iter_mut().enumerate() {
                        *x = cur[base + off + i * stride];
                    }
                    for i in 0..side as i64 {
                        let lo = (i - r).max(0);
                        let hi = (i + r).min(side as i64 - 1);
                        let mut acc = Complex64::default();
                        for j in lo..=hi {
                            acc += line[j as usize] * table[(i - j).unsigned_abs() as usize];
                        }
                        cur[base + off + i as usize * stride] = acc;
                    }
                }
            }
        }
        cur
    }
}

fn dense_lp(data: &[Complex64], p: f64) -> f64 {
    let m = data.iter().map(|v| v.norm()).fold(0.0, f64::max);
    if p.is_infinite() || m == 0.0 {
        return m;
    }
    m * data.iter().map(|v| (v.norm() / m).powf(p)).sum::<f64>().powf(1.0 / p)
}

/// G_t f on a box large enough for every time up to `t_max`.
fn gauss_on_box(f: &LatticeSignal, t: f64, t_max: f64) -> Result<Vec<Complex64>> {
    let half = SIGNAL_RADIUS + kernel_radius(t_max) as i64;
    let b = DenseBox::from_signal(f, half);
    Ok(b.convolve_separable(&kernel_1d(t, kernel_radius(t))?))
}

fn need_dims(id: CheckId, grid: &GridSpec, max: usize) -> Result<()> {
    if grid.dims.iter().any(|&d| d > max) {
        return Err(incompatible(id, format!("dimensions above {max} are too costly")));
    }
    Ok(())
}

fn exponents(id: CheckId, grid: &GridSpec) -> Result<Vec<f64>> {
    if grid.exponents.is_empty() || grid.exponents.iter().any(|&p| p.is_nan() || p < 1.0) {
        return Err(incompatible(id, "needs exponents p >= 1"));
    }
    Ok(grid.exponents.clone())
}

fn alphas(id: CheckId, grid: &GridSpec) -> Result<Vec<f64>> {
    if grid.alphas.is_empty() || grid.alphas.iter().any(|&a| !(a > 0.0 && a < 1.0)) {
        return Err(incompatible(id, "needs orders alpha in (0, 1)"));
    }
    Ok(grid.alphas.clone())
}

fn cap(ledger: &ConstantLedger, id: CheckId, slice: &str) -> f64 {
    ledger.get(id, slice).map_or(f64::MAX, |e| e.value)
}

fn guarded(point: &[(&str, f64)], f: impl FnOnce(&mut Vec<Outcome>) -> Result<()>) -> Vec<Outcome> {
    let mut out = Vec::new();
    match f(&mut out) {
        Ok(()) => out,
        Err(e) => vec![Outcome::failed("error", point, &[], &e)],
    }
}

pub fn ptwise_dom(grid: &GridSpec) -> Result<Vec<Outcome>> {
    let id = CheckId::PtwiseDom;
    need_dims(id, grid, 4)?;
    let times = grid.t.points();
    let reach = 2 * SIGNAL_RADIUS as usize + 2;
    let tables: Vec<Vec<f64>> = times.iter().map(|&t| kernel_1d(t, reach)).collect::<Result<_>>()?;
    let work: Vec<(usize, usize)> = grid
        .dims
        .iter()
        .flat_map(|&d| (0..grid.trials).map(move |k| (d, k)))
        .collect();
    Ok(sweep(&work, |&(d, k)| {
        let p = [("d", d as f64), ("trial", k as f64)];
        guarded(&p, |out| {
            let mut rng = rng_for(grid.seed, 0x7000 + 1000 * d as u64 + k as u64);
            let f = random_signal(&mut rng, d, SIGNAL_RADIUS, true)?;
            let h = SIGNAL_RADIUS + 1;
            let side = (2 * h + 1) as usize;
            for flat in 0..side.pow(d as u32) {
                let mut rem = flat;
                let mut x = vec![0i64; d];
                for c in x.iter_mut().rev() {
                    *c = (rem % side) as i64 - h;
                    rem /= side;
                }
                // Exact kernel sums at x for every sampled time.
                let mut best = 0.0f64;
                for table in &tables {
                    let v: f64 = f
                        .iter()
                        .map(|(y, v)| {
                            v.re * x
                                .iter()
                                .zip(y)
                                .map(|(a, b)| table[(a - b).unsigned_abs() as usize])
                                .product::<f64>()
                        })
                        .sum();
                    best = best.max(v);
                }
                let m = ball_maximal_at(&f, &x)?;
                let xf: Vec<f64> = x.iter().map(|&c| c as f64).collect();
                out.push(Outcome::new("pointwise", &p, &xf, best, m, 0.0));
            }
            Ok(())
        })
    }))
}

/// A random family at times 1..=n and a random partition at sample times.
fn random_family(seed: u64, k: usize) -> Result<(SampledFamily, Partition)> {
    let mut rng = rng_for(seed, 0x5000 + k as u64);
    let n = rng.gen_range(2..=12usize);
    let fam = SampledFamily::new((1..=n).map(|i| i as f64).collect(), random_values(&mut rng, n))?;
    let mut cuts: Vec<f64> = vec![1.0, (n + 1) as f64];
    for i in 2..=n {
        if rng.gen::<f64>() < 0.3 {
            cuts.push(i as f64);
        }
    }
    cuts.sort_by(f64::total_cmp);
    Ok((fam, Partition::new(cuts)?))
}

pub fn seminorm_chain(grid: &GridSpec) -> Result<Vec<Outcome>> {
    let id = CheckId::SeminormChain;
    let rs = exponents(id, grid)?;
    if rs.iter().any(|r| r.is_infinite()) {
        return Err(incompatible(id, "variation exponents must be finite"));
    }
    if grid.secondary.iter().any(|&l| !(l > 0.0)) {
        return Err(incompatible(id, "jump thresholds must be positive"));
    }
    let work: Vec<usize> = (0..grid.trials).collect();
    Ok(sweep(&work, |&k| {
        let p0 = [("trial", k as f64)];
        guarded(&p0, |out| {
            let (fam, part) = random_family(grid.seed, k)?;
            let abs: Vec<f64> = fam.values().iter().map(|v| v.norm()).collect();
            let sup = abs.iter().cloned().fold(0.0, f64::max);
            let inf = abs.iter().cloned().fold(f64::INFINITY, f64::min);
            for &r in &rs {
                let p = [("trial", k as f64), ("r", r)];
                let v = variation(&fam, r)?;
                out.push(Outcome::new("sup", &p, &[], sup, inf + v, SEMINORM_TOL));
                for &lambda in &grid.secondary {
                    let n = jump_count(&fam, lambda)? as f64;
                    let pl = [("trial", k as f64), ("r", r), ("lambda", lambda)];
                    out.push(Outcome::new("jump", &pl, &[], lambda * n.powf(1.0 / r), v, SEMINORM_TOL));
                }
                let o = oscillation(&fam, &part, r)?;
                out.push(Outcome::new("oscillation", &p, &[], o, v, SEMINORM_TOL));
                let s = abs.iter().map(|a| a.powf(r)).sum::<f64>().powf(1.0 / r);
                out.push(Outcome::new("sum", &p, &[], v, 2.0 * s, SEMINORM_TOL));
            }
            Ok(())
        })
    }))
}

pub fn a_integral(grid: &GridSpec) -> Result<Vec<Outcome>> {
    let al = alphas(CheckId::AIntegral, grid)?;
    let work: Vec<(f64, f64)> = al.iter().flat_map(|&a| grid.t.points().into_iter().map(move |t| (a, t))).collect();
    Ok(sweep(&work, |&(a, t)| {
        let p = [("alpha", a), ("t", t)];
        guarded(&p, |out| {
            let m = kernel_a_mass(t, &FracParams::new(a)?)?;
            let want = 1.0 / gamma(1.0 + a);
            out.push(Outcome::new("mass", &p, &[], (m.value - want).abs(), 1e-8, m.tail_bound));
            Ok(())
        })
    }))
}

pub fn delta_ratio(grid: &GridSpec, ledger: &ConstantLedger) -> Result<Vec<Outcome>> {
    let id = CheckId::DeltaRatio;
    let al = alphas(id, grid)?;
    if grid.secondary.is_empty() || grid.secondary.iter().any(|&q| !(q > 0.0 && q <= 0.5)) {
        return Err(incompatible(id, "increments w/t must lie in (0, 1/2]"));
    }
    let mut work = Vec::new();
    for &a in &al {
        for t in grid.t.points() {
            for &q in &grid.secondary {
                work.push((a, t, q));
            }
        }
    }
    Ok(sweep(&work, |&(a, t, q)| {
        let p = [("alpha", a), ("t", t), ("w_over_t", q)];
        guarded(&p, |out| {
            let r = delta_kernel_ratio(t, q * t, &FracParams::new(a)?)?;
            let slice = format!("alpha={a}");
            out.push(Outcome::new("ratio", &p, &[], r, cap(ledger, id, &slice), 0.0).capped(slice));
            Ok(())
        })
    }))
}

pub fn frac_recon(grid: &GridSpec) -> Result<Vec<Outcome>> {
    let al = alphas(CheckId::FracRecon, grid)?;
    let betas: Vec<f64> = (1..=grid.xi_samples).map(|k| 0.5 * k as f64).collect();
    let mut work = Vec::new();
    for &a in &al {
        for &b in &betas {
            for v in grid.t.points() {
                work.push((a, b, v));
            }
        }
    }
    Ok(sweep(&work, |&(a, b, v)| {
        let p = [("alpha", a), ("beta", b), ("v", v)];
        guarded(&p, |out| {
            let fp = FracParams::new(a)?;
            let h = PowerLaw { c: 1.0, beta: b };
            let d = frac_derivative(&h, &fp, v)?;
            let want = gamma(a + b) / gamma(b) * v.powf(-a - b);
            out.push(Outcome::new(
                "closed_form",
                &p,
                &[],
                (d.value - want).abs() / want,
                1e-8,
                d.tail_bound / want,
            ));
            let r = frac_reconstruct(&h, &fp, v)?;
            let hv = h.value(v)?;
            out.push(Outcome::new(
                "reconstruction",
                &p,
                &[],
                (r.value - hv).abs() / hv,
                1e-6,
                r.tail_bound / hv,
            ));
            Ok(())
        })
    }))
}

pub fn frac_mult_recon(grid: &GridSpec) -> Result<Vec<Outcome>> {
    let al = alphas(CheckId::FracMultRecon, grid)?;
    let ts = grid.t.points();
    let xis: Vec<_> = grid
        .dims
        .iter()
        .map(|&d| xi_points(d, grid.xi_samples, grid.seed))
        .collect::<Result<_>>()?;
    // A deterministic walk through (t, alpha, d, xi) with `trials` points.
    let work: Vec<(f64, f64, usize, usize)> = (0..grid.trials)
        .map(|i| (ts[i % ts.len()], al[(i / ts.len()) % al.len()], i % grid.dims.len(), i % grid.xi_samples))
        .collect();
    let family = GaussFamily::default();
    Ok(sweep(&work, |&(t, a, di, xk)| {
        let xi = &xis[di][xk];
        let p = [("t", t), ("alpha", a), ("d", grid.dims[di] as f64)];
        guarded(&p, |out| {
            let r = multiplier_reconstruct(&family, &FracParams::new(a)?, t, xi)?;
            let m = family.derivatives(0, t, xi)?[0];
            out.push(Outcome::new("multiplier", &p, xi.coords(), (r.value - m).abs(), 1e-5, r.tail_bound));
            Ok(())
        })
    }))
}

pub fn contraction(grid: &GridSpec) -> Result<Vec<Outcome>> {
    let id = CheckId::Contraction;
    need_dims(id, grid, 3)?;
    let ps = exponents(id, grid)?;
    let ts = grid.t.points();
    let t_max = grid.t.stop;
    let mut work = Vec::new();
    for &d in &grid.dims {
        for &t in &ts {
            for k in 0..grid.trials {
                work.push((d, t, k));
            }
        }
    }
    Ok(sweep(&work, |&(d, t, k)| {
        let p = [("d", d as f64), ("t", t), ("trial", k as f64)];
        guarded(&p, |out| {
            let mut rng = rng_for(grid.seed, 0x8000 + 1000 * d as u64 + k as u64);
            let f = random_signal(&mut rng, d, SIGNAL_RADIUS, false)?;
            let g = gauss_on_box(&f, t, t_max)?;
            for &q in &ps {
                let label = format!("p={}", exponent_label(q));
                let pq: Vec<(&str, f64)> = if q.is_finite() { vec![("d", d as f64), ("t", t), ("trial", k as f64), ("p", q)] } else { p.to_vec() };
                out.push(Outcome::new(&label, &pq, &[], dense_lp(&g, q), lp_norm(&f, q)?, CONTRACTION_TOL));
            }
            Ok(())
        })
    }))
}

pub fn gdiff_holder(grid: &GridSpec, ledger: &ConstantLedger) -> Result<Vec<Outcome>> {
    let id = CheckId::GdiffHolder;
    if grid.t.start < 16.0 {
        return Err(incompatible(id, "requires t >= 16"));
    }
    need_dims(id, grid, 3)?;
    let al = alphas(id, grid)?;
    let ps = exponents(id, grid)?;
    if grid.secondary.is_empty() || grid.secondary.iter().any(|&q| !(q > 0.0)) {
        return Err(incompatible(id, "increments w/t must be positive"));
    }
    let ts = grid.t.points();
    let qmax = grid.secondary.iter().cloned().fold(0.0, f64::max);
    let t_max = grid.t.stop * (1.0 + qmax);
    let mut work = Vec::new();
    for &d in &grid.dims {
        for &t in &ts {
            for k in 0..grid.trials {
                work.push((d, t, k));
            }
        }
    }
    Ok(sweep(&work, |&(d, t, k)| {
        let p = [("d", d as f64), ("t", t), ("trial", k as f64)];
        guarded(&p, |out| {
            let mut rng = rng_for(grid.seed, 0x9000 + 1000 * d as u64 + k as u64);
            let f = random_signal(&mut rng, d, SIGNAL_RADIUS, false)?;
            let base = gauss_on_box(&f, t, t_max)?;
            for &q in &grid.secondary {
                let moved = gauss_on_box(&f, t * (1.0 + q), t_max)?;
                let diff: Vec<Complex64> = moved.iter().zip(&base).map(|(a, b)| a - b).collect();
                for &pp in &ps {
                    let num = dense_lp(&diff, pp);
                    let den = lp_norm(&f, pp)?;
                    for &a in &al {
                        let slice = format!("alpha={a},p={}", exponent_label(pp));
                        let mut pt = vec![("d", d as f64), ("t", t), ("trial", k as f64), ("w_over_t", q), ("alpha", a)];
                        if pp.is_finite() {
                            pt.push(("p", pp));
                        }
                        let r = num / (q.powf(a) * den);
                        out.push(Outcome::new("ratio", &pt, &[], r, cap(ledger, id, &slice), 0.0).capped(slice));
                    }
                }
            }
            Ok(())
        })
    }))
}

/// Settings of the dimension-growth estimate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormGrowthConfig {
    pub p: f64,
    pub dims: Vec<usize>,
    pub times: Vec<f64>,
    pub trials: usize,
    /// Side of the periodic grid.
    pub side: usize,
    pub seed: u64,
    /// Jump thresholds, as fractions of max f.
    pub lambdas: Vec<f64>,
    /// Variation exponent.
    pub r: f64,
    /// Largest allowed side^d * number of times.
    pub max_cells: usize,
}

impl NormGrowthConfig {
    pub fn new(p: f64, dims: Vec<usize>, times: Vec<f64>, trials: usize, seed: u64) -> Self {
        Self {
            p,
            dims,
            times,
            trials,
            side: 16,
            seed,
            lambdas: vec![0.25, 0.0625, 0.015625],
            r: 2.5,
            max_cells: 1 << 24,
        }
    }
}

/// Per dimension, the largest ratio over trials of ||F f||_p / ||f||_p for the
/// maximal function over the time grid, sup over thresholds of lambda N_lambda^{1/2},
/// and the r-variation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormGrowth {
    pub p: f64,
    pub dims: Vec<usize>,
    pub maximal: Vec<f64>,
    pub jump: Vec<f64>,
    pub variation: Vec<f64>,
    /// maximal ratio at the last dimension over that at the first.
    pub growth: f64,
}

fn torus_lp(values: &[f64], p: f64) -> f64 {
    let m = values.iter().map(|v| v.abs()).fold(0.0, f64::max);
    if p.is_infinite() || m == 0.0 {
        return m;
    }
    m * values.iter().map(|v| (v.abs() / m).powf(p)).sum::<f64>().powf(1.0 / p)
}

/// Ratios for one random nonnegative signal on the periodic grid of side L.
fn growth_trial(cfg: &NormGrowthConfig, d: usize, k: usize) -> Result<[f64; 3]> {
    let grid = EmbeddingGrid::new(cfg.side, d)?;
    let mut rng = rng_for(cfg.seed, 0xA000 + 1000 * d as u64 + k as u64);
    let f = random_signal(&mut rng, d, SIGNAL_RADIUS, true)?;
    let mut spectrum = grid.embed(&f)?;
    grid.fft(&mut spectrum, false);
    let cells = grid.cells();
    let nt = cfg.times.len();
    // values[x * nt + j] = G_{t_j} f(x)
    let mut values = vec![0.0; cells * nt];
    for (j, &t) in cfg.times.iter().enumerate() {
        let table = gauss_symbol_table(ScaleParam::new(t)?, cfg.side, &pol())?;
        let mut data = spectrum.clone();
        grid.apply_product_symbol(&mut data, &table);
        grid.fft(&mut data, true);
        for (x, v) in data.iter().enumerate() {
            values[x * nt + j] = v.re;
        }
    }
    let times = cfg.times.clone();
    let fmax = f.sup_norm();
    let per_cell: Vec<[f64; 3]> = values
        .par_chunks(nt)
        .map(|a| {
            let m = a.iter().map(|v| v.abs()).fold(0.0, f64::max);
            let fam = SampledFamily::new(times.clone(), a.iter().map(|&v| Complex64::new(v, 0.0)).collect())?;
            let mut jmax = 0.0f64;
            for &l in &cfg.lambdas {
                let lambda = l * fmax;
                jmax = jmax.max(lambda * (jump_count(&fam, lambda)? as f64).sqrt());
            }
            Ok([m, jmax, variation(&fam, cfg.r)?])
        })
        .collect::<Result<_>>()?;
    let fnorm = lp_norm(&f, cfg.p)?;
    let mut out = [0.0; 3];
    for (c, o) in out.iter_mut().enumerate() {
        let col: Vec<f64> = per_cell.iter().map(|v| v[c]).collect();
        *o = torus_lp(&col, cfg.p) / fnorm;
    }
    Ok(out)
}

/// Empirical growth in d of maximal, jump and variation norm ratios on a periodic grid.
pub fn estimate_norm_growth(cfg: &NormGrowthConfig) -> Result<NormGrowth> {
    if cfg.dims.is_empty() || cfg.times.is_empty() || cfg.trials == 0 {
        return Err(Error::InvalidSignal("dimensions, times and trials must be nonempty".into()));
    }
    if cfg.p.is_nan() || cfg.p < 1.0 {
        return Err(Error::InvalidExponent(cfg.p));
    }
    if cfg.times.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidSignal("time grid must be strictly increasing".into()));
    }
    for &d in &cfg.dims {
        let cells = (cfg.side as f64).powi(d as i32) * cfg.times.len() as f64;
        if d > 6 || cells > cfg.max_cells as f64 {
            return Err(Error::ResourceBudgetExceeded(format!(
                "dimension {d} needs {cells} cells, cap {}",
                cfg.max_cells
            )));
        }
    }
    let mut maximal = Vec::new();
    let mut jump = Vec::new();
    let mut var = Vec::new();
    for &d in &cfg.dims {
        let mut best = [0.0f64; 3];
        for k in 0..cfg.trials {
            let r = growth_trial(cfg, d, k)?;
            for c in 0..3 {
                best[c] = best[c].max(r[c]);
            }
        }
        maximal.push(best[0]);
        jump.push(best[1]);
        var.push(best[2]);
    }
    let growth = maximal[maximal.len() - 1] / maximal[0];
    Ok(NormGrowth {
        p: cfg.p,
        dims: cfg.dims.clone(),
        maximal,
        jump,
        variation: var,
        growth,
    })
}

pub fn norm_growth(grid: &GridSpec, ledger: &ConstantLedger) -> Result<Vec<Outcome>> {
    let id = CheckId::NormGrowth;
    let p = *exponents(id, grid)?.first().expect("nonempty");
    let cfg = NormGrowthConfig::new(p, grid.dims.clone(), grid.t.points(), grid.trials, grid.seed);
    let g = estimate_norm_growth(&cfg).map_err(|e| match e {
        Error::ResourceBudgetExceeded(_) => e,
        other => incompatible(id, other.to_string()),
    })?;
    let mut out = Vec::new();
    for (i, &d) in g.dims.iter().enumerate() {
        let pt = [("d", d as f64), ("p", p)];
        for (label, v) in [("maximal", g.maximal[i]), ("jump", g.jump[i]), ("variation", g.variation[i])] {
            out.push(Outcome::new(label, &pt, &[], v, v, 0.0));
        }
    }
    let slice = format!("p={},L={}", exponent_label(p), cfg.side);
    let pt = [("d_first", g.dims[0] as f64), ("d_last", g.dims[g.dims.len() - 1] as f64), ("p", p)];
    out.push(Outcome::new("growth", &pt, &[], g.growth, cap(ledger, id, &slice), 0.0).capped(slice));
    Ok(out)
}
