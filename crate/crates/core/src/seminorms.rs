//! r-variation, lambda-jump counts and r-oscillation of finitely sampled families.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Values a_t sampled at strictly increasing positive times.
#[derive(Clone, Debug, PartialEq)]
pub struct SampledFamily {
    times: Vec<f64>,
    values: Vec<Complex64>,
}

impl SampledFamily {
    pub fn new(times: Vec<f64>, values: Vec<Complex64>) -> Result<Self> {
        if times.is_empty() {
            return Err(Error::InvalidFamily("at least one sample is required".into()));
        }
        if times.len() != values.len() {
            return Err(Error::InvalidFamily(format!(
                "{} times but {} values",
                times.len(),
                values.len()
            )));
        }
        if times.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
            return Err(Error::InvalidFamily("times must be positive and finite".into()));
        }
        if times.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidFamily("times must be strictly increasing".into()));
        }
        if values.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(Error::InvalidFamily("values must be finite".into()));
        }
        Ok(Self { times, values })
    }

    /// Real values at times 1, 2, ..., n.
    pub fn from_real(values: &[f64]) -> Result<Self> {
        Self::new(
            (1..=values.len()).map(|i| i as f64).collect(),
            values.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
        )
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// Strictly increasing boundaries I_0 < ... < I_J, J >= 1.
#[derive(Clone, Debug, PartialEq)]
pub struct Partition {
    boundaries: Vec<f64>,
}

impl Partition {
    pub fn new(boundaries: Vec<f64>) -> Result<Self> {
        if boundaries.len() < 2 {
            return Err(Error::InvalidPartition("need at least two boundaries".into()));
        }
        if boundaries.iter().any(|b| !(b.is_finite() && *b > 0.0)) {
            return Err(Error::InvalidPartition("boundaries must be positive and finite".into()));
        }
        if boundaries.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidPartition("boundaries must be strictly increasing".into()));
        }
        Ok(Self { boundaries })
    }

    pub fn boundaries(&self) -> &[f64] {
        &self.boundaries
    }
}

fn check_r(r: f64) -> Result<()> {
    if r.is_nan() || r < 1.0 || r.is_infinite() {
        Err(Error::InvalidExponent(r))
    } else {
        Ok(())
    }
}

/// V^r = sup over increasing subsequences of (sum |a_{t_{k+1}} - a_{t_k}|^r)^{1/r},
/// by dynamic programming on best(i) = max_{j<i} best(j) + |a_i - a_j|^r.
pub fn variation(fam: &SampledFamily, r: f64) -> Result<f64> {
    check_r(r)?;
    let a = &fam.values;
    let mut best = vec![0.0f64; a.len()];
    for i in 1..a.len() {
        let mut b = 0.0f64;
        for j in 0..i {
            b = b.max(best[j] + (a[i] - a[j]).norm().powf(r));
        }
        best[i] = b;
    }
    Ok(best.into_iter().fold(0.0, f64::max).powf(1.0 / r))
}

/// N_lambda: the largest J with t_0 < ... < t_J and every consecutive gap >= lambda.
/// Computed exactly by dynamic programming; a left-to-right greedy scan is not optimal.
pub fn jump_count(fam: &SampledFamily, lambda: f64) -> Result<usize> {
    if !(lambda > 0.0) || lambda.is_infinite() {
        return Err(Error::InvalidThreshold(lambda));
    }
    let a = &fam.values;
    let mut best = vec![0usize; a.len()];
    for i in 1..a.len() {
        for j in 0..i {
            if (a[i] - a[j]).norm() >= lambda {
                best[i] = best[i].max(best[j] + 1);
            }
        }
    }
    Ok(best.into_iter().max().unwrap_or(0))
}

/// O^r = (sum_j sup_{t in [I_j, I_{j+1}) cap grid} |a_t - a_{I_j}|^r)^{1/r}. Empty windows
/// contribute zero; a nonempty window must start at a sample time.
pub fn oscillation(fam: &SampledFamily, part: &Partition, r: f64) -> Result<f64> {
    check_r(r)?;
    let mut total = 0.0;
    for w in part.boundaries.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let inside: Vec<usize> = (0..fam.len())
            .filter(|&i| fam.times[i] >= lo && fam.times[i] < hi)
            .collect();
        let Some(&first) = inside.first() else { continue };
        if fam.times[first] != lo {
            return Err(Error::InvalidPartition(format!(
                "window [{lo}, {hi}) is nonempty but {lo} is not a sample time"
            )));
        }
        let base = fam.values[first];
        let sup = inside
            .iter()
            .map(|&i| (fam.values[i] - base).norm().powf(r))
            .fold(0.0, f64::max);
        total += sup;
    }
    Ok(total.powf(1.0 / r))
}

/// Variation of many families in parallel, in input order.
pub fn variation_many(fams: &[SampledFamily], r: f64) -> Result<Vec<f64>> {
    fams.par_iter().map(|f| variation(f, r)).collect()
}

/// Jump counts of many families in parallel, in input order.
pub fn jump_count_many(fams: &[SampledFamily], lambda: f64) -> Result<Vec<usize>> {
    fams.par_iter().map(|f| jump_count(f, lambda)).collect()
}
