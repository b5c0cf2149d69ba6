//! Finitely supported signals on Z^d and the convolution operators acting on them.
//!
//! G_t f = g_t * f is evaluated either by direct summation against a truncated
//! kernel table, or spectrally on a periodic embedding grid of side L. The
//! semigroup Q_t and the Littlewood-Paley pieces S_j are applied spectrally.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::multipliers::ratio_factor_derivatives;
use crate::theta::{theta1, CertifiedValue, ScaleParam, TruncationPolicy};

/// A finitely supported complex function on Z^d, stored without explicit zeros.
#[derive(Clone, Debug, PartialEq)]
pub struct LatticeSignal {
    dim: usize,
    entries: BTreeMap<Vec<i64>, Complex64>,
}

impl LatticeSignal {
    pub fn zero(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidSignal("dimension must be at least 1".into()));
        }
        Ok(Self {
            dim,
            entries: BTreeMap::new(),
        })
    }

    pub fn delta(dim: usize) -> Result<Self> {
        let mut s = Self::zero(dim)?;
        s.insert(vec![0; dim], Complex64::new(1.0, 0.0))?;
        Ok(s)
    }

    pub fn from_entries(dim: usize, entries: impl IntoIterator<Item = (Vec<i64>, Complex64)>) -> Result<Self> {
        let mut s = Self::zero(dim)?;
        for (k, v) in entries {
            if s.entries.contains_key(&k) {
                return Err(Error::InvalidSignal(format!("duplicate point {k:?}")));
            }
            s.insert(k, v)?;
        }
        Ok(s)
    }

    pub fn from_real(dim: usize, entries: impl IntoIterator<Item = (Vec<i64>, f64)>) -> Result<Self> {
        Self::from_entries(dim, entries.into_iter().map(|(k, v)| (k, Complex64::new(v, 0.0))))
    }

    /// Set the value at `point`; zero values remove the entry.
    pub fn insert(&mut self, point: Vec<i64>, value: Complex64) -> Result<()> {
        if point.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: point.len(),
            });
        }
        if !(value.re.is_finite() && value.im.is_finite()) {
            return Err(Error::InvalidSignal(format!("non-finite value at {point:?}")));
        }
        if value == Complex64::new(0.0, 0.0) {
            self.entries.remove(&point);
        } else {
            self.entries.insert(point, value);
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, point: &[i64]) -> Complex64 {
        self.entries.get(point).copied().unwrap_or_default()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Vec<i64>, &Complex64)> {
        self.entries.iter()
    }

    /// Maximum l-infinity coordinate magnitude over the support (0 for the zero signal).
    pub fn support_radius(&self) -> u64 {
        self.entries
            .keys()
            .flat_map(|k| k.iter().map(|c| c.unsigned_abs()))
            .max()
            .unwrap_or(0)
    }

    pub fn sup_norm(&self) -> f64 {
        self.entries.values().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn is_real_nonnegative(&self) -> bool {
        self.entries.values().all(|v| v.im == 0.0 && v.re >= 0.0)
    }

    /// The reflected signal n -> f(-n).
    pub fn reflect(&self) -> Self {
        Self {
            dim: self.dim,
            entries: self
                .entries
                .iter()
                .map(|(k, v)| (k.iter().map(|c| -c).collect(), *v))
                .collect(),
        }
    }

    /// Text form: `dim=<d>` then `<n_1> ... <n_d> <re> [<im>]` in lexicographic key order.
    /// Numbers use the shortest representation that parses back to the same bits.
    pub fn to_text(&self) -> String {
        let mut out = format!("dim={}\n", self.dim);
        for (k, v) in &self.entries {
            for c in k {
                let _ = write!(out, "{c} ");
            }
            let _ = write!(out, "{:?}", v.re);
            if v.im.to_bits() != 0 {
                let _ = write!(out, " {:?}", v.im);
            }
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (_, header) = lines
            .next()
            .ok_or_else(|| Error::Parse("missing `dim=<d>` header".into()))?;
        let dim: usize = header
            .strip_prefix("dim=")
            .and_then(|d| d.trim().parse().ok())
            .ok_or_else(|| Error::Parse(format!("bad header `{header}`")))?;
        let mut s = Self::zero(dim)?;
        for (lineno, line) in lines {
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != dim + 1 && fields.len() != dim + 2 {
                return Err(Error::Parse(format!(
                    "line {lineno}: expected {} or {} fields, got {}",
                    dim + 1,
                    dim + 2,
                    fields.len()
                )));
            }
            let point = fields[..dim]
                .iter()
                .map(|f| f.parse::<i64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::Parse(format!("line {lineno}: {e}")))?;
            let num = |f: &str| {
                f.parse::<f64>()
                    .map_err(|e| Error::Parse(format!("line {lineno}: `{f}`: {e}")))
            };
            let re = num(fields[dim])?;
            let im = if fields.len() == dim + 2 { num(fields[dim + 1])? } else { 0.0 };
            if s.entries.contains_key(&point) {
                return Err(Error::Parse(format!("line {lineno}: duplicate point {point:?}")));
            }
            s.insert(point, Complex64::new(re, im))?;
        }
        Ok(s)
    }

    pub fn read_file(path: &Path) -> Result<Self> {
        Self::from_text(&std::fs::read_to_string(path)?)
    }

    pub fn write_file(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }
}

/// (sum |f|^p)^{1/p}, or max |f| for p = infinity.
pub fn lp_norm(f: &LatticeSignal, p: f64) -> Result<f64> {
    if p.is_nan() || p < 1.0 {
        return Err(Error::InvalidExponent(p));
    }
    if p.is_infinite() {
        return Ok(f.sup_norm());
    }
    if p == 1.0 {
        return Ok(f.entries.values().map(|v| v.norm()).sum());
    }
    // Scale by the maximum to avoid overflow/underflow in |f|^p.
    let m = f.sup_norm();
    if m == 0.0 {
        return Ok(0.0);
    }
    let s: f64 = f.entries.values().map(|v| (v.norm() / m).powf(p)).sum();
    Ok(m * s.powf(1.0 / p))
}

/// Bound on sum_{|n| >= r} e^{-pi n^2 / t} / theta_{1/t}(0) for the one-dimensional kernel.
pub fn kernel_mass_outside(t: f64, r: u64) -> f64 {
    if r == 0 {
        return 1.0;
    }
    let r = r as f64;
    (2.0 * (-PI * r * r / t).exp() / -(-PI * (2.0 * r + 1.0) / t).exp_m1()).min(1.0)
}

/// g_t(n) = Theta_{1/t}(0)^{-1} e^{-pi |n|^2 / t}.
pub fn gauss_kernel_value(t: ScaleParam, n: &[i64], pol: &TruncationPolicy) -> Result<CertifiedValue> {
    let d = n.len();
    if d == 0 {
        return Err(Error::InvalidSignal("empty lattice point".into()));
    }
    let s = ScaleParam::new(1.0 / t.get())?;
    let fpol = TruncationPolicy {
        eps: pol.eps / (2.0 * d as f64),
        max_terms: pol.max_terms,
    };
    let th = theta1(s, 0.0, &fpol)?;
    let norm2: f64 = n.iter().map(|&c| (c as f64) * (c as f64)).sum();
    let e = (-PI * norm2 / t.get()).exp();
    let den = th.value.powi(d as i32);
    // |1/x^d - 1/y^d| <= d |x - y| / min(x,y)^{d+1} with both >= 1 - tail.
    let lo = (th.value - th.tail_bound).max(1.0);
    let tail_bound = e * d as f64 * th.tail_bound / lo.powi(d as i32 + 1);
    Ok(CertifiedValue {
        value: e / den,
        tail_bound,
    })
}

/// One-dimensional kernel table g1(n), n = -r..=r.
fn kernel_table_1d(t: f64, r: u64, pol: &TruncationPolicy) -> Result<Vec<f64>> {
    let th = theta1(ScaleParam::new(1.0 / t)?, 0.0, pol)?.value;
    Ok((-(r as i64)..=r as i64)
        .map(|n| (-PI * (n * n) as f64 / t).exp() / th)
        .collect())
}

/// A periodic embedding grid of even side L in dimension d.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EmbeddingGrid {
    pub side: usize,
    pub dim: usize,
}

impl EmbeddingGrid {
    pub fn new(side: usize, dim: usize) -> Result<Self> {
        if side == 0 || side % 2 != 0 {
            return Err(Error::GridTooSmall { side, needed: 2 });
        }
        if dim == 0 {
            return Err(Error::InvalidSignal("dimension must be at least 1".into()));
        }
        Ok(Self { side, dim })
    }

    fn check(&self, f: &LatticeSignal) -> Result<()> {
        if f.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: f.dim(),
            });
        }
        let needed = 2 * f.support_radius() as usize + 2;
        if self.side < needed {
            return Err(Error::GridTooSmall {
                side: self.side,
                needed,
            });
        }
        Ok(())
    }

    pub fn cells(&self) -> usize {
        self.side.pow(self.dim as u32)
    }

    /// Embed f with n -> n mod L.
    pub fn embed(&self, f: &LatticeSignal) -> Result<Vec<Complex64>> {
        self.check(f)?;
        let mut data = vec![Complex64::default(); self.cells()];
        for (k, v) in f.iter() {
            data[self.index_of(k)] = *v;
        }
        Ok(data)
    }

    pub fn index_of(&self, point: &[i64]) -> usize {
        let l = self.side as i64;
        point
            .iter()
            .fold(0usize, |acc, &c| acc * self.side + c.rem_euclid(l) as usize)
    }

    /// Lattice point in [-L/2, L/2)^d represented by a flat index.
    pub fn point_of(&self, mut index: usize) -> Vec<i64> {
        let half = (self.side / 2) as i64;
        let mut p = vec![0i64; self.dim];
        for c in p.iter_mut().rev() {
            let i = (index % self.side) as i64;
            index /= self.side;
            *c = if i < half { i } else { i - self.side as i64 };
        }
        p
    }

    /// Frequency index tuple (each in 0..L) of a flat index.
    fn freq_of(&self, mut index: usize, out: &mut [usize]) {
        for c in out.iter_mut().rev() {
            *c = index % self.side;
            index /= self.side;
        }
    }

    /// Re-sparsify grid data into a signal on [-L/2, L/2)^d.
    pub fn extract(&self, data: &[Complex64]) -> LatticeSignal {
        let mut s = LatticeSignal::zero(self.dim).expect("dim >= 1");
        for (i, v) in data.iter().enumerate() {
            if *v != Complex64::default() {
                s.entries.insert(self.point_of(i), *v);
            }
        }
        s
    }

    /// In-place d-dimensional DFT (unnormalized) or its normalized inverse.
    pub fn fft(&self, data: &mut [Complex64], inverse: bool) {
        let l = self.side;
        let mut planner = FftPlanner::<f64>::new();
        let plan = if inverse {
            planner.plan_fft_inverse(l)
        } else {
            planner.plan_fft_forward(l)
        };
        let mut line = vec![Complex64::default(); l];
        let mut scratch = vec![Complex64::default(); plan.get_inplace_scratch_len()];
        for axis in 0..self.dim {
            let stride = l.pow((self.dim - 1 - axis) as u32);
            let block = stride * l;
            for base in (0..data.len()).step_by(block) {
                for off in 0..stride {
                    for (i, x) in line.iter_mut().enumerate() {
                        *x = data[base + off + i * stride];
                    }
                    plan.process_with_scratch(&mut line, &mut scratch);
                    for (i, x) in line.iter().enumerate() {
                        data[base + off + i * stride] = *x;
                    }
                }
            }
        }
        if inverse {
            let scale = 1.0 / data.len() as f64;
            data.iter_mut().for_each(|x| *x *= scale);
        }
    }

    /// Multiply grid spectrum by a product symbol prod_j table[k_j].
    pub fn apply_product_symbol(&self, spectrum: &mut [Complex64], table: &[f64]) {
        let mut k = vec![0usize; self.dim];
        for (i, x) in spectrum.iter_mut().enumerate() {
            self.freq_of(i, &mut k);
            *x *= k.iter().map(|&j| table[j]).product::<f64>();
        }
    }

    /// Multiply grid spectrum by an arbitrary symbol of the frequency tuple.
    pub fn apply_symbol(&self, spectrum: &mut [Complex64], symbol: impl Fn(&[usize]) -> f64) {
        let mut k = vec![0usize; self.dim];
        for (i, x) in spectrum.iter_mut().enumerate() {
            self.freq_of(i, &mut k);
            *x *= symbol(&k);
        }
    }
}

/// Which evaluation path a convolution plan uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    DirectTruncated,
    Spectral,
}

/// A prepared G_t convolution.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvolutionPlan {
    pub method: Method,
    pub t: ScaleParam,
    pub pol: TruncationPolicy,
    pub dim: usize,
    /// Kernel radius (direct path): |n_i| <= kernel_radius for every coordinate.
    pub kernel_radius: u64,
    /// Embedding grid (spectral path).
    pub grid: Option<EmbeddingGrid>,
    /// Spectral path: kernel mass outside the l-infinity ball of radius L/2 for a
    /// signal supported at the origin. Use `error_bound` for a given signal.
    pub wraparound_bound: f64,
}

impl ConvolutionPlan {
    /// Direct plan: the discarded kernel mass d * tail1(R + 1) is at most pol.eps.
    pub fn direct(t: ScaleParam, pol: TruncationPolicy, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidSignal("dimension must be at least 1".into()));
        }
        let r = (0..pol.max_terms as u64)
            .find(|&r| dim as f64 * kernel_mass_outside(t.get(), r + 1) <= pol.eps)
            .ok_or(Error::TruncationBudgetExceeded {
                eps: pol.eps,
                max_terms: pol.max_terms,
            })?;
        Ok(Self {
            method: Method::DirectTruncated,
            t,
            pol,
            dim,
            kernel_radius: r,
            grid: None,
            wraparound_bound: 0.0,
        })
    }

    pub fn spectral(t: ScaleParam, pol: TruncationPolicy, grid: EmbeddingGrid) -> Result<Self> {
        Ok(Self {
            method: Method::Spectral,
            t,
            pol,
            dim: grid.dim,
            kernel_radius: 0,
            grid: Some(grid),
            wraparound_bound: grid.dim as f64 * kernel_mass_outside(t.get(), (grid.side / 2) as u64),
        })
    }

    /// Kernel l1 mass that may be misplaced when convolving a signal of the given support radius.
    pub fn kernel_error_mass(&self, support_radius: u64) -> f64 {
        match self.method {
            Method::DirectTruncated => self.dim as f64 * kernel_mass_outside(self.t.get(), self.kernel_radius + 1),
            Method::Spectral => {
                let half = (self.grid.expect("spectral plan has a grid").side / 2) as u64;
                let r = half.saturating_sub(support_radius);
                (self.dim as f64 * kernel_mass_outside(self.t.get(), r)).min(1.0)
            }
        }
    }

    /// Pointwise bound on |computed - exact| for input f: kernel error mass times ||f||_inf.
    pub fn error_bound(&self, f: &LatticeSignal) -> f64 {
        self.kernel_error_mass(f.support_radius()) * f.sup_norm()
    }
}

/// G_t f by the plan's method.
pub fn convolve_gauss(f: &LatticeSignal, plan: &ConvolutionPlan) -> Result<LatticeSignal> {
    if f.dim() != plan.dim {
        return Err(Error::DimensionMismatch {
            expected: plan.dim,
            got: f.dim(),
        });
    }
    match plan.method {
        Method::DirectTruncated => convolve_direct(f, plan),
        Method::Spectral => {
            let grid = plan.grid.expect("spectral plan has a grid");
            let mut data = grid.embed(f)?;
            grid.fft(&mut data, false);
            let table = gauss_symbol_table(plan.t, grid.side, &plan.pol)?;
            grid.apply_product_symbol(&mut data, &table);
            grid.fft(&mut data, true);
            Ok(grid.extract(&data))
        }
    }
}

/// F g_t(k/L) for k = 0..L, one coordinate.
pub fn gauss_symbol_table(t: ScaleParam, side: usize, pol: &TruncationPolicy) -> Result<Vec<f64>> {
    (0..side)
        .map(|k| Ok(ratio_factor_derivatives(0, t, k as f64 / side as f64, pol)?[0].value))
        .collect()
}

fn convolve_direct(f: &LatticeSignal, plan: &ConvolutionPlan) -> Result<LatticeSignal> {
    let d = plan.dim;
    let r = plan.kernel_radius as i64;
    let mut out = LatticeSignal::zero(d)?;
    if f.is_empty() {
        return Ok(out);
    }
    let table = kernel_table_1d(plan.t.get(), r as u64, &plan.pol)?;
    // Dense accumulation over the bounding box of the output support.
    let mut lo = vec![i64::MAX; d];
    let mut hi = vec![i64::MIN; d];
    for k in f.entries.keys() {
        for i in 0..d {
            lo[i] = lo[i].min(k[i] - r);
            hi[i] = hi[i].max(k[i] + r);
        }
    }
    let sides: Vec<usize> = (0..d).map(|i| (hi[i] - lo[i] + 1) as usize).collect();
    let total: usize = sides.iter().product();
    let mut acc = vec![Complex64::default(); total];
    let w = (2 * r + 1) as usize;
    let cube = w.pow(d as u32);
    let mut strides = vec![1usize; d];
    for i in (0..d.saturating_sub(1)).rev() {
        strides[i] = strides[i + 1] * sides[i + 1];
    }
    // Precompute the kernel cube weights and their flat offsets relative to the corner.
    let mut weights = Vec::with_capacity(cube);
    let mut offsets = Vec::with_capacity(cube);
    let mut idx = vec![0usize; d];
    for _ in 0..cube {
        weights.push(idx.iter().map(|&j| table[j]).product::<f64>());
        offsets.push(idx.iter().zip(&strides).map(|(&j, &s)| j * s).sum::<usize>());
        for i in (0..d).rev() {
            idx[i] += 1;
            if idx[i] < w {
                break;
            }
            idx[i] = 0;
        }
    }
    for (k, v) in f.iter() {
        let corner: usize = (0..d)
            .map(|i| (k[i] - r - lo[i]) as usize * strides[i])
            .sum();
        for (wt, off) in weights.iter().zip(&offsets) {
            acc[corner + off] += v * wt;
        }
    }
    let mut point = vec![0i64; d];
    for (flat, v) in acc.into_iter().enumerate() {
        if v == Complex64::default() {
            continue;
        }
        let mut rem = flat;
        for i in (0..d).rev() {
            point[i] = lo[i] + (rem % sides[i]) as i64;
            rem /= sides[i];
        }
        out.entries.insert(point.clone(), v);
    }
    Ok(out)
}

/// Bound on the l1 mass of the Q_t kernel outside the l-infinity ball of radius r.
/// The one-dimensional kernel is e^{-t/2} I_n(t/2) <= (t/4)^n / n!.
pub fn semigroup_kernel_mass_outside(t: f64, dim: usize, r: u64) -> f64 {
    if r == 0 {
        return 1.0;
    }
    let x = t / 4.0;
    let rf = r as f64;
    if x >= rf + 1.0 {
        return 1.0;
    }
    let log_term = rf * x.ln() - libm::lgamma(rf + 1.0);
    let one_side = log_term.exp() / (1.0 - x / (rf + 1.0));
    (dim as f64 * 2.0 * one_side).min(1.0)
}

fn sin_sq_table(side: usize) -> Vec<f64> {
    (0..side)
        .map(|k| {
            let s = (PI * crate::theta::reduce_coordinate(k as f64 / side as f64)).sin();
            s * s
        })
        .collect()
}

/// Q_t f on the embedding grid via the symbol exp(-t sum sin^2(pi xi_i)).
pub fn convolve_semigroup(f: &LatticeSignal, t: ScaleParam, grid: EmbeddingGrid) -> Result<LatticeSignal> {
    let mut data = grid.embed(f)?;
    grid.fft(&mut data, false);
    let table: Vec<f64> = sin_sq_table(grid.side)
        .into_iter()
        .map(|s| (-t.get() * s).exp())
        .collect();
    grid.apply_product_symbol(&mut data, &table);
    grid.fft(&mut data, true);
    Ok(grid.extract(&data))
}

/// Wraparound bound for `convolve_semigroup` applied to f.
pub fn semigroup_error_bound(f: &LatticeSignal, t: ScaleParam, grid: EmbeddingGrid) -> f64 {
    let r = ((grid.side / 2) as u64).saturating_sub(f.support_radius());
    semigroup_kernel_mass_outside(t.get(), grid.dim, r) * f.sup_norm()
}

/// S_j f = Q_{2^{j-1}} f - Q_{2^j} f with the symbol q_s (1 - q_s), s = 2^{j-1}.
pub fn littlewood_paley_apply(f: &LatticeSignal, j: i32, grid: EmbeddingGrid) -> Result<LatticeSignal> {
    let mut data = grid.embed(f)?;
    grid.fft(&mut data, false);
    let sq = sin_sq_table(grid.side);
    let s = 2f64.powi(j - 1);
    grid.apply_symbol(&mut data, |k| {
        let x = s * k.iter().map(|&i| sq[i]).sum::<f64>();
        (-x).exp() * -(-x).exp_m1()
    });
    grid.fft(&mut data, true);
    Ok(grid.extract(&data))
}

/// Lattice points y with |y|_2 <= r.
pub fn ball_offsets(dim: usize, r: f64) -> Vec<Vec<i64>> {
    let m = r.floor().max(0.0) as i64;
    // Relative slack so that radii given as sqrt(k) include the sphere |n|^2 = k.
    let r2 = r * r * (1.0 + 8.0 * f64::EPSILON);
    let w = (2 * m + 1) as usize;
    let mut out = Vec::new();
    let mut p = vec![-m; dim];
    for _ in 0..w.pow(dim as u32) {
        let n2: i64 = p.iter().map(|c| c * c).sum();
        if (n2 as f64) <= r2 {
            out.push(p.clone());
        }
        for i in (0..dim).rev() {
            p[i] += 1;
            if p[i] <= m {
                break;
            }
            p[i] = -m;
        }
    }
    out
}

/// x -> |B_r cap Z^d|^{-1} sum_{|y| <= r} f(x - y).
pub fn ball_average(f: &LatticeSignal, r: f64) -> Result<LatticeSignal> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::InvalidSignal(format!("ball radius must be positive, got {r}")));
    }
    let offsets = ball_offsets(f.dim(), r);
    let scale = 1.0 / offsets.len() as f64;
    let mut acc: BTreeMap<Vec<i64>, Complex64> = BTreeMap::new();
    for (k, v) in f.iter() {
        for y in &offsets {
            let x: Vec<i64> = k.iter().zip(y).map(|(a, b)| a + b).collect();
            *acc.entry(x).or_default() += v * scale;
        }
    }
    LatticeSignal::from_entries(f.dim(), acc.into_iter().filter(|(_, v)| *v != Complex64::default()))
}

/// Counts |{n in Z^d : |n|^2 <= k}| for k = 0..=kmax.
pub fn lattice_ball_counts(dim: usize, kmax: usize) -> Vec<u64> {
    // Representation numbers r_d(m) by repeated convolution of the one-dimensional counts.
    let mut one = vec![0u64; kmax + 1];
    for n in 0.. {
        let sq = n * n;
        if sq > kmax {
            break;
        }
        one[sq] += if n == 0 { 1 } else { 2 };
    }
    let mut rep = one.clone();
    for _ in 1..dim {
        let mut next = vec![0u64; kmax + 1];
        for (a, &ra) in rep.iter().enumerate() {
            if ra == 0 {
                continue;
            }
            for (b, &rb) in one.iter().enumerate().take(kmax + 1 - a) {
                next[a + b] += ra * rb;
            }
        }
        rep = next;
    }
    let mut acc = 0;
    rep.into_iter()
        .map(|r| {
            acc += r;
            acc
        })
        .collect()
}

/// sup_{r > 0} (A_r f)(x) for real nonnegative f, computed exactly: the supremum
/// is attained at a radius equal to the distance from x to a support point.
pub fn ball_maximal_at(f: &LatticeSignal, x: &[i64]) -> Result<f64> {
    if !f.is_real_nonnegative() {
        return Err(Error::InvalidSignal("ball maximal function needs a nonnegative real signal".into()));
    }
    if x.len() != f.dim() {
        return Err(Error::DimensionMismatch {
            expected: f.dim(),
            got: x.len(),
        });
    }
    let mut dist: Vec<(u64, f64)> = f
        .iter()
        .map(|(k, v)| {
            let d2: i64 = k.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum();
            (d2 as u64, v.re)
        })
        .collect();
    if dist.is_empty() {
        return Ok(0.0);
    }
    dist.sort_by(|a, b| a.0.cmp(&b.0));
    let kmax = dist.last().expect("nonempty").0 as usize;
    let counts = lattice_ball_counts(f.dim(), kmax);
    let mut best = 0.0f64;
    let mut sum = 0.0;
    let mut i = 0;
    while i < dist.len() {
        let k = dist[i].0;
        while i < dist.len() && dist[i].0 == k {
            sum += dist[i].1;
            i += 1;
        }
        best = best.max(sum / counts[k as usize] as f64);
    }
    Ok(best)
}

/// x -> max over the time grid of |G_t f(x)|, using direct plans with policy `pol`.
pub fn maximal_over_times(f: &LatticeSignal, times: &[ScaleParam], pol: &TruncationPolicy) -> Result<LatticeSignal> {
    if times.is_empty() {
        return Err(Error::InvalidSignal("time grid must be nonempty".into()));
    }
    if times.windows(2).any(|w| w[0].get() >= w[1].get()) {
        return Err(Error::InvalidSignal("time grid must be strictly increasing".into()));
    }
    let mut acc: BTreeMap<Vec<i64>, f64> = BTreeMap::new();
    for &t in times {
        let plan = ConvolutionPlan::direct(t, *pol, f.dim())?;
        let g = convolve_gauss(f, &plan)?;
        for (k, v) in g.iter() {
            let e = acc.entry(k.clone()).or_insert(0.0);
            *e = e.max(v.norm());
        }
    }
    LatticeSignal::from_real(f.dim(), acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn st(t: f64) -> ScaleParam {
        ScaleParam::new(t).unwrap()
    }

    fn random_signal(rng: &mut ChaCha8Rng, dim: usize, radius: i64, count: usize) -> LatticeSignal {
        let mut s = LatticeSignal::zero(dim).unwrap();
        for _ in 0..count {
            let p: Vec<i64> = (0..dim).map(|_| rng.gen_range(-radius..=radius)).collect();
            s.insert(p, Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).unwrap();
        }
        s
    }

    #[test]
    fn kernel_examples() {
        let pol = TruncationPolicy::default();
        let g = gauss_kernel_value(st(1.0), &[0], &pol).unwrap();
        assert!((g.value - 1.0 / 1.086434811213308).abs() <= 1e-15);
        assert!((g.value - 0.920441787835591).abs() < 1e-15);
        let mut total = 0.0;
        for a in -6i64..=6 {
            for b in -6i64..=6 {
                total += gauss_kernel_value(st(1.0), &[a, b], &pol).unwrap().value;
            }
        }
        assert!((total - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn delta_convolution_is_kernel_table() {
        let pol = TruncationPolicy::new(1e-13, 512).unwrap();
        let plan = ConvolutionPlan::direct(st(2.0), pol, 2).unwrap();
        let out = convolve_gauss(&LatticeSignal::delta(2).unwrap(), &plan).unwrap();
        let r = plan.kernel_radius as i64;
        assert_eq!(out.len(), ((2 * r + 1) * (2 * r + 1)) as usize);
        for (k, v) in out.iter() {
            let g = gauss_kernel_value(st(2.0), k, &pol).unwrap().value;
            assert!((v.re - g).abs() <= 1e-16);
        }
    }

    #[test]
    fn direct_and_spectral_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let f = random_signal(&mut rng, 2, 3, 20);
        let pol = TruncationPolicy::new(1e-13, 512).unwrap();
        let d = convolve_gauss(&f, &ConvolutionPlan::direct(st(2.0), pol, 2).unwrap()).unwrap();
        let grid = EmbeddingGrid::new(32, 2).unwrap();
        let s = convolve_gauss(&f, &ConvolutionPlan::spectral(st(2.0), pol, grid).unwrap()).unwrap();
        let mut worst = 0.0f64;
        for i in 0..grid.cells() {
            let p = grid.point_of(i);
            worst = worst.max((d.get(&p) - s.get(&p)).norm());
        }
        assert!(worst <= 1e-10, "{worst}");
    }

    #[test]
    fn grid_too_small() {
        let f = LatticeSignal::from_real(1, [(vec![5], 1.0)]).unwrap();
        let grid = EmbeddingGrid::new(8, 1).unwrap();
        assert!(matches!(convolve_semigroup(&f, st(1.0), grid), Err(Error::GridTooSmall { .. })));
        assert!(EmbeddingGrid::new(7, 1).is_err());
    }

    #[test]
    fn semigroup_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let f = random_signal(&mut rng, 2, 4, 15);
        let grid = EmbeddingGrid::new(32, 2).unwrap();
        let q = convolve_semigroup(&f, st(1e-8), grid).unwrap();
        let mut worst = 0.0f64;
        for i in 0..grid.cells() {
            let p = grid.point_of(i);
            worst = worst.max((q.get(&p) - f.get(&p)).norm());
        }
        assert!(worst <= 1e-7 * f.sup_norm());

        let g64 = EmbeddingGrid::new(64, 1).unwrap();
        let q = convolve_semigroup(&LatticeSignal::delta(1).unwrap(), st(1.0), g64).unwrap();
        let mass: f64 = q.iter().map(|(_, v)| v.re).sum();
        assert!((mass - 1.0).abs() <= 1e-12);
        let q128 = convolve_semigroup(&LatticeSignal::delta(1).unwrap(), st(1.0), EmbeddingGrid::new(128, 1).unwrap()).unwrap();
        for n in -64i64..64 {
            let a = if (-32..32).contains(&n) { q.get(&[n]) } else { Complex64::default() };
            assert!((a - q128.get(&[n])).norm() <= 1e-10);
        }
        // Bessel kernel oracle: e^{-t/2} I_n(t/2) at t = 1, n = 0.
        let i0: f64 = (0..30).map(|k| (0.25f64).powi(2 * k) / crate::special::factorial(k as usize).powi(2)).sum();
        assert!((q.get(&[0]).re - (-0.5f64).exp() * i0).abs() <= 1e-14);
    }

    #[test]
    fn littlewood_paley_examples() {
        let grid = EmbeddingGrid::new(16, 1).unwrap();
        let s = littlewood_paley_apply(&LatticeSignal::delta(1).unwrap(), 2, grid).unwrap();
        let mut data = vec![Complex64::default(); 16];
        for (k, v) in s.iter() {
            data[grid.index_of(k)] = *v;
        }
        grid.fft(&mut data, false);
        for (k, v) in data.iter().enumerate() {
            let xi = crate::theta::TorusPoint::new(vec![k as f64 / 16.0]).unwrap();
            let sym = crate::multipliers::littlewood_paley_symbol(2, &xi);
            assert!((v - Complex64::new(sym, 0.0)).norm() <= 1e-14);
        }
        // constant on the whole grid is a zero-frequency signal
        let half = 8i64;
        let c = LatticeSignal::from_real(1, (-half..half).map(|n| (vec![n], 1.0))).unwrap();
        let big = EmbeddingGrid::new(16, 1).unwrap();
        let mut data = vec![Complex64::new(1.0, 0.0); 16];
        big.fft(&mut data, false);
        big.apply_symbol(&mut data, |k| {
            let x = 2f64.powi(2) * k.iter().map(|&i| (PI * i as f64 / 16.0).sin().powi(2)).sum::<f64>();
            (-x).exp() * -(-x).exp_m1()
        });
        big.fft(&mut data, true);
        assert!(data.iter().all(|v| v.norm() <= 1e-12));
        assert_eq!(c.len(), 16);
    }

    #[test]
    fn norms() {
        let d = LatticeSignal::delta(3).unwrap();
        for p in [1.0, 1.5, 2.0, f64::INFINITY] {
            assert_eq!(lp_norm(&d, p).unwrap(), 1.0);
        }
        let f = LatticeSignal::from_real(1, [(vec![0], 3.0), (vec![4], 4.0)]).unwrap();
        assert!((lp_norm(&f, 2.0).unwrap() - 5.0).abs() <= 1e-15);
        assert!(matches!(lp_norm(&f, 0.5), Err(Error::InvalidExponent(_))));
    }

    #[test]
    fn ball_average_examples() {
        let d = LatticeSignal::delta(1).unwrap();
        assert_eq!(ball_average(&d, 0.5).unwrap(), d);
        let a = ball_average(&d, 1.0).unwrap();
        assert_eq!(a.len(), 3);
        for n in -1..=1 {
            assert!((a.get(&[n]).re - 1.0 / 3.0).abs() <= 1e-16);
        }
        let c = LatticeSignal::from_real(2, (-6..=6).flat_map(|a| (-6..=6).map(move |b| (vec![a, b], 2.5)))).unwrap();
        let avg = ball_average(&c, 2.3).unwrap();
        assert!((avg.get(&[0, 0]).re - 2.5).abs() <= 1e-14);
        assert!((avg.get(&[2, -3]).re - 2.5).abs() <= 1e-14);
    }

    #[test]
    fn ball_counts_match_enumeration() {
        for d in 1..=4 {
            let counts = lattice_ball_counts(d, 20);
            for k in 0..=20 {
                assert_eq!(counts[k], ball_offsets(d, (k as f64).sqrt()).len() as u64, "d={d} k={k}");
            }
        }
    }

    #[test]
    fn ball_maximal_matches_radius_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..5 {
            let f = LatticeSignal::from_real(
                2,
                (0..6).map(|_| (vec![rng.gen_range(-3..=3), rng.gen_range(-3..=3)], rng.gen_range(0.0..1.0))),
            );
            let Ok(f) = f else { continue };
            let x = vec![1, -1];
            let m = ball_maximal_at(&f, &x).unwrap();
            let mut scan = 0.0f64;
            for k in 0..=200 {
                let r = (k as f64 / 2.0).sqrt() + 1e-9;
                scan = scan.max(ball_average(&f, r).unwrap().get(&x).re);
            }
            assert!((m - scan).abs() <= 1e-14, "{m} {scan}");
        }
    }

    #[test]
    fn maximal_over_times_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let f = LatticeSignal::from_real(2, (0..8).map(|i| (vec![i % 3, i / 3], rng.gen_range(0.0..1.0)))).unwrap();
        let pol = TruncationPolicy::new(1e-12, 512).unwrap();
        let one = maximal_over_times(&f, &[st(2.0)], &pol).unwrap();
        let g = convolve_gauss(&f, &ConvolutionPlan::direct(st(2.0), pol, 2).unwrap()).unwrap();
        for (k, v) in g.iter() {
            assert_eq!(one.get(k).re, v.norm());
        }
        let coarse = maximal_over_times(&f, &[st(0.5), st(4.0)], &pol).unwrap();
        let fine = maximal_over_times(&f, &[st(0.5), st(1.0), st(2.0), st(4.0)], &pol).unwrap();
        for (k, v) in coarse.iter() {
            assert!(fine.get(k).re >= v.re);
        }
        for x in [[0i64, 0], [1, 1], [3, -2]] {
            assert!(fine.get(&x).re <= ball_maximal_at(&f, &x).unwrap() + 1e-12);
        }
    }

    #[test]
    fn text_round_trip_is_bit_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut f = random_signal(&mut rng, 3, 5, 40);
        f.insert(vec![9, 9, 9], Complex64::new(1e-300, -0.0)).unwrap();
        f.insert(vec![-9, 0, 1], Complex64::new(-0.0, 2.5e300)).unwrap();
        let back = LatticeSignal::from_text(&f.to_text()).unwrap();
        assert_eq!(back.len(), f.len());
        for ((k1, v1), (k2, v2)) in f.iter().zip(back.iter()) {
            assert_eq!(k1, k2);
            assert_eq!(v1.re.to_bits(), v2.re.to_bits());
            assert_eq!(v1.im.to_bits(), v2.im.to_bits());
        }
        assert!(LatticeSignal::from_text("dim=2\n1 2\n").is_err());
        assert!(LatticeSignal::from_text("1 2 3\n").is_err());
        let unordered = LatticeSignal::from_text("dim=1\n3 1.5\n-2 0.5 1\n").unwrap();
        assert_eq!(unordered.to_text(), "dim=1\n-2 0.5 1.0\n3 1.5\n");
    }
}
