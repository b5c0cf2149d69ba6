//! Index sets and sums for derivatives of compositions (Faa di Bruno) and of
//! inverse functions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::factorial;

/// Largest order for which the index sets are enumerated.
pub const MAX_TUPLE_ORDER: usize = 12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum TupleKind {
    /// sum_j j m_j = n
    Composition,
    /// sum_j s_j = n - 1 and sum_j j s_j = 2(n - 1)
    Inverse,
}

/// All n-tuples of one kind, in lexicographic order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexTupleSet {
    pub n: usize,
    pub kind: TupleKind,
    pub tuples: Vec<Vec<usize>>,
}

impl IndexTupleSet {
    pub fn len(&self) -> usize {
        self.tuples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }
}

fn check_order(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidOrder(0.0));
    }
    if n > MAX_TUPLE_ORDER {
        return Err(Error::OrderTooLarge {
            n,
            cap: MAX_TUPLE_ORDER,
        });
    }
    Ok(())
}

/// Fill positions j = pos+1..=n; `count` and `weight` are the remaining budgets for
/// sum s_j and sum j s_j (None means unconstrained).
fn enumerate(
    n: usize,
    pos: usize,
    count: Option<usize>,
    weight: usize,
    cur: &mut Vec<usize>,
    out: &mut Vec<Vec<usize>>,
) {
    if pos == n {
        if weight == 0 && count.is_none_or(|c| c == 0) {
            out.push(cur.clone());
        }
        return;
    }
    let j = pos + 1;
    let mut max = weight / j;
    if let Some(c) = count {
        max = max.min(c);
    }
    for m in 0..=max {
        cur.push(m);
        enumerate(n, pos + 1, count.map(|c| c - m), weight - j * m, cur, out);
        cur.pop();
    }
}

/// S(n) = {(m_1..m_n) : sum_j j m_j = n}.
pub fn faa_di_bruno_tuples(n: usize) -> Result<IndexTupleSet> {
    check_order(n)?;
    let mut tuples = Vec::new();
    enumerate(n, 0, None, n, &mut Vec::with_capacity(n), &mut tuples);
    Ok(IndexTupleSet {
        n,
        kind: TupleKind::Composition,
        tuples,
    })
}

/// T(n) = {(s_1..s_n) : sum s_j = n - 1, sum j s_j = 2(n - 1)}. T(1) is the single zero
/// tuple, whose summand is 1.
pub fn inverse_tuples(n: usize) -> Result<IndexTupleSet> {
    check_order(n)?;
    let mut tuples = Vec::new();
    enumerate(n, 0, Some(n - 1), 2 * (n - 1), &mut Vec::with_capacity(n), &mut tuples);
    Ok(IndexTupleSet {
        n,
        kind: TupleKind::Inverse,
        tuples,
    })
}

fn need(arr: &[f64], n: usize) -> Result<()> {
    if arr.len() < n + 1 {
        Err(Error::InsufficientDerivatives {
            needed: n + 1,
            got: arr.len(),
        })
    } else {
        Ok(())
    }
}

/// (f o g)^{(n)}(x) from outer[k] = f^{(k)}(g(x)) and inner[j] = g^{(j)}(x), k, j = 0..=n.
pub fn compose_derivative(n: usize, outer: &[f64], inner: &[f64]) -> Result<f64> {
    need(outer, n)?;
    if n == 0 {
        return Ok(outer[0]);
    }
    need(inner, n)?;
    let set = faa_di_bruno_tuples(n)?;
    let nf = factorial(n);
    let mut acc = 0.0;
    for m in &set.tuples {
        let mut term = nf * outer[m.iter().sum::<usize>()];
        for (idx, &mj) in m.iter().enumerate() {
            let j = idx + 1;
            term *= (inner[j] / factorial(j)).powi(mj as i32) / factorial(mj);
        }
        acc += term;
    }
    Ok(acc)
}

/// (f^{-1})^{(n)}(f(t)) from fder[j] = f^{(j)}(t), j = 0..=n, n >= 1.
pub fn inverse_derivative(n: usize, fder: &[f64]) -> Result<f64> {
    check_order(n)?;
    need(fder, n)?;
    let set = inverse_tuples(n)?;
    let mut acc = 0.0;
    for s in &set.tuples {
        let sign = if s[0] % 2 == 0 { 1.0 } else { -1.0 };
        let mut term = sign * factorial(2 * n - s[0] - 2);
        for (idx, &sj) in s.iter().enumerate() {
            let j = idx + 1;
            if j >= 2 {
                term /= factorial(sj);
            }
            term *= (fder[j] / factorial(j)).powi(sj as i32);
        }
        acc += term;
    }
    let sign = if (n - 1) % 2 == 0 { 1.0 } else { -1.0 };
    Ok(sign * acc / fder[1].powi(2 * n as i32 - 1))
}
