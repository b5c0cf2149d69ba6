//! Constants used by the checks. Explicit constants are closed-form expressions and are
//! re-derived whenever a ledger is loaded; empirical caps were frozen from a recorded
//! pre-run and carry its identifier.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::CheckId;
use crate::error::{Error, Result};

/// Identifier of the pre-run that froze the empirical caps.
pub const PRE_RUN_ID: &str = "prerun-2026-10-16";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConstantMode {
    Explicit,
    Empirical,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub check: CheckId,
    pub slice: String,
    pub mode: ConstantMode,
    pub value: f64,
    pub provenance: String,
}

/// c_D = 16 / (1 + sqrt(D)).
pub fn small_scale_decay(d_cap: f64) -> f64 {
    16.0 / (1.0 + d_cap.sqrt())
}

/// C_D = max{8 pi^2 (1 + D^2 e^{-pi/(2D)} / pi^2), 8 pi^3 D (1 + D^2 e^{-pi/(2D)} / pi^2)}.
pub fn small_scale_growth(d_cap: f64) -> f64 {
    let k = 1.0 + d_cap * d_cap * (-PI / (2.0 * d_cap)).exp() / (PI * PI);
    (8.0 * PI * PI * k).max(8.0 * PI.powi(3) * d_cap * k)
}

/// 256 (pi^3 + 1024 pi e^{-pi/64}).
pub fn heat_lower_constant() -> f64 {
    256.0 * (PI.powi(3) + 1024.0 * PI * (-PI / 64.0).exp())
}

/// 16 / (1 + 4 sqrt 2).
pub fn heat_upper_constant() -> f64 {
    16.0 / (1.0 + 4.0 * 2f64.sqrt())
}

/// Decay exponents c_{n,D}: c_0 = c_D and c_{n+1} = min_{k <= n} min(c_k, 1) / 2.
pub fn derivative_decay_chain(d_cap: f64, nmax: usize) -> Vec<f64> {
    let mut c = vec![small_scale_decay(d_cap)];
    for _ in 0..nmax {
        let m = c.iter().fold(f64::INFINITY, |a, &b| a.min(b.min(1.0)));
        c.push(0.5 * m);
    }
    c
}

fn parse_slice(slice: &str) -> BTreeMap<&str, &str> {
    slice
        .split(',')
        .filter_map(|kv| kv.split_once('='))
        .map(|(k, v)| (k.trim(), v.trim()))
        .collect()
}

/// Re-derive an explicit constant from its formula.
pub fn explicit_formula(check: CheckId, slice: &str) -> Option<f64> {
    let p = parse_slice(slice);
    let num = |k: &str| p.get(k).and_then(|v| v.parse::<f64>().ok());
    match (check, p.get("bound").copied()) {
        (CheckId::Prop1Mod, Some("upper")) => Some(small_scale_decay(num("D")?)),
        (CheckId::Prop1Mod, Some("lower")) => Some(small_scale_growth(num("D")?)),
        (CheckId::Htd2, Some("upper")) => Some(heat_upper_constant()),
        (CheckId::Htd2, Some("lower")) => Some(heat_lower_constant()),
        (CheckId::G14, None) if p.get("role") == Some(&"decay") => {
            let n: usize = p.get("n")?.parse().ok()?;
            Some(derivative_decay_chain(num("D")?, n)[n])
        }
        _ => None,
    }
}

/// Keyed constants for all checks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstantLedger {
    entries: Vec<LedgerEntry>,
}

/// Empirical caps frozen from the pre-run: the larger measured supremum over the default
/// and refined grids times 1.25, rounded up to two significant digits. The norm growth cap
/// is a fixed target rather than a measurement.
const EMPIRICAL_CAPS: &[(CheckId, &str, f64)] = &[
    (CheckId::Est0Local, "D=32", 140.0),
    (CheckId::Deriv1d, "n=1", 4.5),
    (CheckId::Deriv1d, "n=2", 21.0),
    (CheckId::Deriv1d, "n=3", 92.0),
    (CheckId::DerivD, "n=1", 0.49),
    (CheckId::DerivD, "n=2", 0.72),
    (CheckId::DerivD, "n=3", 1.8),
    (CheckId::G12, "D=32,n=1", 4500.0),
    (CheckId::G12, "D=32,n=2", 53000.0),
    (CheckId::G12, "D=32,n=3", 2.6e6),
    (CheckId::G14, "D=32,n=0,role=cap", 1.3),
    (CheckId::G14, "D=32,n=1,role=cap", 15.0),
    (CheckId::G14, "D=32,n=2,role=cap", 700.0),
    (CheckId::G14, "D=32,n=3,role=cap", 56000.0),
    (CheckId::PsiDeriv, "c=0.5,n=0", 1.3),
    (CheckId::PsiDeriv, "c=0.5,n=1", 0.67),
    (CheckId::PsiDeriv, "c=0.5,n=2", 1.2),
    (CheckId::PsiDeriv, "c=0.5,n=3", 2.3),
    (CheckId::DeltaRatio, "alpha=0.25", 2.8),
    (CheckId::DeltaRatio, "alpha=0.5", 2.9),
    (CheckId::DeltaRatio, "alpha=0.75", 2.8),
    (CheckId::GdiffHolder, "alpha=0.5,p=1.5", 0.24),
    (CheckId::NormGrowth, "p=2,L=16", 2.0),
];

impl ConstantLedger {
    /// The built-in ledger.
    pub fn standard() -> Self {
        let mut entries = Vec::new();
        let mut explicit = |check: CheckId, slice: String, what: &str| {
            let value = explicit_formula(check, &slice).expect("built-in explicit slice");
            entries.push(LedgerEntry {
                check,
                slice,
                mode: ConstantMode::Explicit,
                value,
                provenance: what.to_string(),
            });
        };
        explicit(CheckId::Prop1Mod, "D=32,bound=upper".into(), "c_D = 16/(1+sqrt(D))");
        explicit(
            CheckId::Prop1Mod,
            "D=32,bound=lower".into(),
            "C_D = max{8pi^2(1+D^2e^{-pi/(2D)}/pi^2), 8pi^3 D(1+D^2e^{-pi/(2D)}/pi^2)}",
        );
        explicit(CheckId::Htd2, "bound=upper".into(), "16/(1+4sqrt(2))");
        explicit(CheckId::Htd2, "bound=lower".into(), "256(pi^3+1024 pi e^{-pi/64})");
        for n in 0..=3 {
            explicit(
                CheckId::G14,
                format!("D=32,n={n},role=decay"),
                "c_0 = 16/(1+sqrt(D)), c_{n+1} = min_{k<=n} min(c_k,1)/2",
            );
        }
        for &(check, slice, value) in EMPIRICAL_CAPS {
            entries.push(LedgerEntry {
                check,
                slice: slice.to_string(),
                mode: ConstantMode::Empirical,
                value,
                provenance: PRE_RUN_ID.to_string(),
            });
        }
        Self { entries }
    }

    pub fn entries(&self) -> &[LedgerEntry] {
        &self.entries
    }

    /// Re-derive every explicit entry and require bit-for-bit equality; empirical entries
    /// must name a pre-run.
    pub fn verify(&self) -> Result<()> {
        for e in &self.entries {
            match e.mode {
                ConstantMode::Explicit => {
                    let want = explicit_formula(e.check, &e.slice).ok_or_else(|| {
                        Error::LedgerMismatch(format!("no formula for {} [{}]", e.check.name(), e.slice))
                    })?;
                    if want.to_bits() != e.value.to_bits() {
                        return Err(Error::LedgerMismatch(format!(
                            "{} [{}]: stored {:?}, formula gives {:?}",
                            e.check.name(),
                            e.slice,
                            e.value,
                            want
                        )));
                    }
                }
                ConstantMode::Empirical => {
                    if e.provenance.is_empty() || !(e.value > 0.0) {
                        return Err(Error::LedgerMismatch(format!(
                            "{} [{}]: empirical cap needs a positive value and a pre-run id",
                            e.check.name(),
                            e.slice
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let l: Self = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        l.verify()?;
        Ok(l)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("ledger serializes")
    }

    pub fn get(&self, check: CheckId, slice: &str) -> Option<&LedgerEntry> {
        self.entries.iter().find(|e| e.check == check && e.slice == slice)
    }

    /// The value for a slice, or an IncompatibleGrid error naming the missing constant.
    pub fn value(&self, check: CheckId, slice: &str) -> Result<f64> {
        self.get(check, slice)
            .map(|e| e.value)
            .ok_or_else(|| Error::IncompatibleGrid {
                check: check.name().to_string(),
                reason: format!("no ledger constant for [{slice}]"),
            })
    }

    /// Replace or add an empirical cap.
    pub fn set_cap(&mut self, check: CheckId, slice: &str, value: f64, provenance: &str) {
        self.entries.retain(|e| !(e.check == check && e.slice == slice));
        self.entries.push(LedgerEntry {
            check,
            slice: slice.to_string(),
            mode: ConstantMode::Empirical,
            value,
            provenance: provenance.to_string(),
        });
    }
}
