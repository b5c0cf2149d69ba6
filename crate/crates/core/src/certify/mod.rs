//! Inequality certification: a fixed registry of checks, grid specifications, the
//! constant ledger and structured reports.
//!
//! Every check compares a left-hand side with a right-hand side at each grid point.
//! Explicit checks use closed-form constants and must hold up to the attached
//! truncation slack plus a round-off allowance. Empirical-cap checks measure a ratio
//! whose constant is only known to exist, and compare it with a cap frozen from a
//! recorded pre-run. Report checks emit a measured curve with a loose regression cap.

mod checks;
pub mod ledger;
mod operators;
pub mod sampling;

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
pub use ledger::{ConstantLedger, ConstantMode, LedgerEntry, PRE_RUN_ID};
pub use operators::{estimate_norm_growth, NormGrowth, NormGrowthConfig};

/// Round-off allowance added to every truncation slack.
pub const ROUNDOFF_SLACK: f64 = 1e-13;

/// Default sampler seed.
pub const DEFAULT_SEED: u64 = 20_161_016;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum CheckId {
    #[serde(rename = "L1_THETA0")]
    L1Theta0,
    #[serde(rename = "PS2_POISSON")]
    Ps2Poisson,
    #[serde(rename = "FT_DUAL")]
    FtDual,
    #[serde(rename = "EST0_GLOBAL")]
    Est0Global,
    #[serde(rename = "EST0_LOCAL")]
    Est0Local,
    #[serde(rename = "LEM2")]
    Lem2,
    #[serde(rename = "LEM4")]
    Lem4,
    #[serde(rename = "COR1")]
    Cor1,
    #[serde(rename = "EST_INF")]
    EstInf,
    #[serde(rename = "PROP1MOD")]
    Prop1Mod,
    #[serde(rename = "HTD1")]
    Htd1,
    #[serde(rename = "HTD2")]
    Htd2,
    #[serde(rename = "DERIV_1D")]
    Deriv1d,
    #[serde(rename = "DERIV_D")]
    DerivD,
    #[serde(rename = "G12")]
    G12,
    #[serde(rename = "G14")]
    G14,
    #[serde(rename = "PSI_DERIV")]
    PsiDeriv,
    #[serde(rename = "PTWISE_DOM")]
    PtwiseDom,
    #[serde(rename = "SEMINORM_CHAIN")]
    SeminormChain,
    #[serde(rename = "A_INTEGRAL")]
    AIntegral,
    #[serde(rename = "DELTA_RATIO")]
    DeltaRatio,
    #[serde(rename = "FRAC_RECON")]
    FracRecon,
    #[serde(rename = "FRAC_MULT_RECON")]
    FracMultRecon,
    #[serde(rename = "CONTRACTION")]
    Contraction,
    #[serde(rename = "GDIFF_HOLDER")]
    GdiffHolder,
    #[serde(rename = "NORM_GROWTH")]
    NormGrowth,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckMode {
    Explicit,
    EmpiricalCap,
    Report,
}

use CheckId::*;

const REGISTRY: [(CheckId, &str, CheckMode, &str); 26] = [
    (L1Theta0, "L1_THETA0", CheckMode::Explicit, "max(1, t^-1/2) <= theta_t(0) <= 1 + t^-1/2"),
    (Ps2Poisson, "PS2_POISSON", CheckMode::Explicit, "theta_t(0) = t^-1/2 theta_{1/t}(0), both by direct summation"),
    (FtDual, "FT_DUAL", CheckMode::Explicit, "cosine-series and theta-ratio forms of F g_t(xi) agree"),
    (Est0Global, "EST0_GLOBAL", CheckMode::Explicit, "|F g_t(xi) - 1| <= 6 pi t |xi|^2"),
    (Est0Local, "EST0_LOCAL", CheckMode::EmpiricalCap, "|F g_t(xi) - 1| <= C e^{-pi/t} |xi|^2 for t <= D"),
    (Lem2, "LEM2", CheckMode::Explicit, "theta_t(xi) <= theta_{t/8}(0) e^{-pi t xi^2/2} <= (1 + 3 t^-1/2) e^{-pi t xi^2/2}"),
    (Lem4, "LEM4", CheckMode::Explicit, "e^{-pi t xi^2} <= theta_t(xi)/theta_t(0) <= e^{-pi t xi^2} exp(2 xi^2 e^{-pi t (1/4 - a/2)} / (1/2 - a)^2) for |xi| <= a"),
    (Cor1, "COR1", CheckMode::Explicit, "theta_t(xi)/theta_t(0) <= e^{-pi t xi^2/10} for t >= 15"),
    (EstInf, "EST_INF", CheckMode::Explicit, "F g_t(xi) <= e^{-pi t |xi|^2/10} for t >= 15"),
    (Prop1Mod, "PROP1MOD", CheckMode::Explicit, "e^{-C_D e^{-pi/t} |xi|^2} <= F g_t(xi) <= e^{-c_D e^{-pi/t} |xi|^2} for t <= D"),
    (Htd1, "HTD1", CheckMode::Explicit, "H_t(0) e^{-|xi|^2/(4t)} <= H_t(xi) <= H_t(0) e^{-|xi|^2/(40t)} for t < 2^-8"),
    (Htd2, "HTD2", CheckMode::Explicit, "H_t(0) e^{-K e^{-4 pi^2 t} |xi|^2} <= H_t(xi) <= H_t(0) e^{-c e^{-4 pi^2 t} |xi|^2} for t >= 2^-8"),
    (Deriv1d, "DERIV_1D", CheckMode::EmpiricalCap, "|t^n d_t^n (theta_t(xi)/theta_t(0))| <= C_n (t^n xi^2n + xi^2 e^{-pi t/5}) e^{-pi t xi^2/5} for t > 1"),
    (DerivD, "DERIV_D", CheckMode::EmpiricalCap, "|t^n d_t^n F g_t(xi)| <= C_n e^{-pi t |xi|^2 2^-n/10} for t >= 15"),
    (G12, "G12", CheckMode::EmpiricalCap, "|d_t^n (theta_t(xi)/theta_t(0))| <= C_n t^-2n e^{-pi/t} xi^2 e^{-e^{-pi/t} xi^2} for t <= D, n >= 1"),
    (G14, "G14", CheckMode::EmpiricalCap, "|t^2n d_t^n F g_t(xi)| <= C_n e^{-c_n e^{-pi/t} |xi|^2} for t <= D"),
    (PsiDeriv, "PSI_DERIV", CheckMode::EmpiricalCap, "|t^n d_t^n F g_{psi^-1(t)}(xi)| <= C_n for t <= c"),
    (PtwiseDom, "PTWISE_DOM", CheckMode::Explicit, "max over sampled t of G_t f(x) <= sup_r ball average of f at x, for f >= 0"),
    (SeminormChain, "SEMINORM_CHAIN", CheckMode::Explicit, "sup|a| <= |a_t0| + V^r; lambda N_lambda^{1/r} <= V^r; O^r <= V^r <= 2 (sum |a|^r)^{1/r}"),
    (AIntegral, "A_INTEGRAL", CheckMode::Explicit, "int A(t,u) du = 1/Gamma(1+a) (deviation <= 1e-8)"),
    (DeltaRatio, "DELTA_RATIO", CheckMode::EmpiricalCap, "int |A(t+w,u) - A(t,u)| du <= C_a (w/t)^a for w <= t/2"),
    (FracRecon, "FRAC_RECON", CheckMode::Explicit, "Gamma(a)^-1 int (u-v)^{a-1} D^a h(u) du = h(v) (relative deviation <= 1e-6)"),
    (FracMultRecon, "FRAC_MULT_RECON", CheckMode::Explicit, "int A(t,u) p_u(xi) du = m_t(xi) (deviation <= 1e-5)"),
    (Contraction, "CONTRACTION", CheckMode::Explicit, "||G_t f||_p <= ||f||_p"),
    (GdiffHolder, "GDIFF_HOLDER", CheckMode::EmpiricalCap, "||G_{t+w} f - G_t f||_p <= C (w/t)^a ||f||_p for t >= 16"),
    (NormGrowth, "NORM_GROWTH", CheckMode::Report, "growth of ||max_t |G_t f| ||_p / ||f||_p from the smallest to the largest dimension"),
];

impl CheckId {
    fn entry(self) -> &'static (CheckId, &'static str, CheckMode, &'static str) {
        REGISTRY.iter().find(|e| e.0 == self).expect("every id is registered")
    }

    pub fn name(self) -> &'static str {
        self.entry().1
    }

    pub fn mode(self) -> CheckMode {
        self.entry().2
    }

    pub fn statement(self) -> &'static str {
        self.entry().3
    }

    pub fn parse(s: &str) -> Result<Self> {
        REGISTRY
            .iter()
            .find(|e| e.1.eq_ignore_ascii_case(s))
            .map(|e| e.0)
            .ok_or_else(|| Error::UnknownCheck(s.to_string()))
    }
}

impl std::fmt::Display for CheckId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// The full registry in fixed order.
pub fn list_checks() -> Vec<CheckId> {
    REGISTRY.iter().map(|e| e.0).collect()
}

/// One axis `start:stop:count[:log]`, endpoints included.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AxisSpec {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
    pub log: bool,
}

impl AxisSpec {
    pub fn new(start: f64, stop: f64, count: usize, log: bool) -> Result<Self> {
        let a = Self { start, stop, count, log };
        a.validate()?;
        Ok(a)
    }

    pub fn log(start: f64, stop: f64, count: usize) -> Self {
        Self { start, stop, count, log: true }
    }

    pub fn linear(start: f64, stop: f64, count: usize) -> Self {
        Self { start, stop, count, log: false }
    }

    fn validate(&self) -> Result<()> {
        if self.count == 0 || !self.start.is_finite() || !self.stop.is_finite() || self.stop < self.start {
            return Err(Error::Parse(format!("invalid axis {self:?}")));
        }
        if self.count > 1 && self.stop == self.start {
            return Err(Error::Parse("an axis with several points needs start < stop".into()));
        }
        if self.log && self.start <= 0.0 {
            return Err(Error::Parse("a log axis needs a positive start".into()));
        }
        Ok(())
    }

    pub fn parse(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let num = |x: &str| x.trim().parse::<f64>().map_err(|e| Error::Parse(format!("{x:?}: {e}")));
        let (log, n) = match parts.len() {
            3 => (false, 3),
            4 if parts[3] == "log" => (true, 3),
            4 if parts[3] == "lin" => (false, 3),
            _ => return Err(Error::Parse(format!("expected start:stop:count[:log], got {s:?}"))),
        };
        let count = parts[2]
            .trim()
            .parse::<usize>()
            .map_err(|e| Error::Parse(format!("{:?}: {e}", parts[2])))?;
        let _ = n;
        Self::new(num(parts[0])?, num(parts[1])?, count, log)
    }

    pub fn points(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.start];
        }
        let m = (self.count - 1) as f64;
        (0..self.count)
            .map(|i| {
                if i == 0 {
                    return self.start;
                }
                if i == self.count - 1 {
                    return self.stop;
                }
                let x = i as f64 / m;
                if self.log {
                    (self.start.ln() + x * (self.stop.ln() - self.start.ln())).exp()
                } else {
                    self.start + x * (self.stop - self.start)
                }
            })
            .collect()
    }

    /// Twice as dense, containing the original points.
    pub fn refined(&self) -> Self {
        Self {
            count: if self.count == 1 { 1 } else { 2 * self.count - 1 },
            ..self.clone()
        }
    }
}

mod exponent_list {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Exponent {
        Finite(f64),
        Named(String),
    }

    pub fn serialize<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
        v.iter()
            .map(|&p| {
                if p.is_infinite() {
                    Exponent::Named("inf".into())
                } else {
                    Exponent::Finite(p)
                }
            })
            .collect::<Vec<_>>()
            .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        Vec::<Exponent>::deserialize(d)?
            .into_iter()
            .map(|e| match e {
                Exponent::Finite(p) => Ok(p),
                Exponent::Named(n) if n == "inf" => Ok(f64::INFINITY),
                Exponent::Named(n) => Err(serde::de::Error::custom(format!("bad exponent {n:?}"))),
            })
            .collect()
    }
}

/// Grid of parameters for one check. Axes a check does not use are ignored.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub t: AxisSpec,
    pub dims: Vec<usize>,
    pub xi_samples: usize,
    pub seed: u64,
    pub alphas: Vec<f64>,
    pub orders: Vec<usize>,
    /// l^p exponents or variation exponents r. Infinity is written as "inf".
    #[serde(with = "exponent_list")]
    pub exponents: Vec<f64>,
    /// Check-specific secondary axis: increments w/t, jump thresholds or times.
    pub secondary: Vec<f64>,
    /// Random signals or families.
    pub trials: usize,
    /// The scale bound D (or c) in statements uniform over t <= D.
    pub scale_bound: Option<f64>,
}

impl GridSpec {
    fn base(t: AxisSpec) -> Self {
        Self {
            t,
            dims: vec![1],
            xi_samples: 1,
            seed: DEFAULT_SEED,
            alphas: vec![],
            orders: vec![],
            exponents: vec![],
            secondary: vec![],
            trials: 1,
            scale_bound: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.t.validate()?;
        if self.dims.is_empty() || self.dims.contains(&0) || self.xi_samples == 0 || self.trials == 0 {
            return Err(Error::Parse("grid counts must be at least 1".into()));
        }
        Ok(())
    }

    /// Twice as dense along t, with twice as many frequencies and trials.
    pub fn refined(&self) -> Self {
        Self {
            t: self.t.refined(),
            xi_samples: 2 * self.xi_samples,
            trials: 2 * self.trials,
            ..self.clone()
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

/// The default grid of a check.
pub fn default_grid(id: CheckId) -> GridSpec {
    let wide = AxisSpec::log(2f64.powi(-8), 2f64.powi(8), 33);
    let mut g = GridSpec::base(wide.clone());
    match id {
        L1Theta0 | Ps2Poisson => {}
        FtDual => {
            g.dims = vec![1, 2, 4];
            g.xi_samples = 100;
        }
        Est0Global => {
            g.t = AxisSpec::log(2f64.powi(-6), 2f64.powi(6), 25);
            g.dims = vec![1, 2, 4];
            g.xi_samples = 500;
        }
        Est0Local => {
            g.t = AxisSpec::log(2f64.powi(-6), 32.0, 23);
            g.dims = vec![1, 2, 4];
            g.xi_samples = 200;
            g.scale_bound = Some(32.0);
        }
        Lem2 => g.xi_samples = 200,
        Lem4 => {
            g.xi_samples = 200;
            g.alphas = vec![0.1, 0.25, 0.4];
        }
        Cor1 => {
            g.t = AxisSpec::log(15.0, 200.0, 20);
            g.xi_samples = 200;
        }
        EstInf => {
            g.t = AxisSpec::log(15.0, 200.0, 20);
            g.dims = vec![1, 2, 4, 8];
            g.xi_samples = 1000;
        }
        Prop1Mod => {
            g.t = AxisSpec::log(2f64.powi(-7), 32.0, 40);
            g.xi_samples = 200;
            g.scale_bound = Some(32.0);
        }
        Htd1 => {
            g.t = AxisSpec::log(2f64.powi(-16), 0.0039, 20);
            g.dims = vec![1, 2, 4];
            g.xi_samples = 500;
        }
        Htd2 => {
            g.t = AxisSpec::log(2f64.powi(-8), 4.0, 20);
            g.dims = vec![1, 2, 4];
            g.xi_samples = 500;
        }
        Deriv1d => {
            g.t = AxisSpec::log(1.25, 200.0, 23);
            g.xi_samples = 200;
            g.orders = vec![1, 2, 3];
        }
        DerivD => {
            g.t = AxisSpec::log(15.0, 200.0, 12);
            g.dims = vec![1, 2, 4, 8];
            g.xi_samples = 100;
            g.orders = vec![1, 2, 3];
        }
        G12 => {
            g.t = AxisSpec::log(2f64.powi(-5), 32.0, 23);
            g.xi_samples = 200;
            g.orders = vec![1, 2, 3];
            g.scale_bound = Some(32.0);
        }
        G14 => {
            g.t = AxisSpec::log(2f64.powi(-5), 32.0, 23);
            g.dims = vec![1, 2, 4];
            g.xi_samples = 100;
            g.orders = vec![0, 1, 2, 3];
            g.scale_bound = Some(32.0);
        }
        PsiDeriv => {
            g.t = AxisSpec::log(2f64.powi(-10), 0.5, 19);
            g.dims = vec![1, 2];
            g.xi_samples = 100;
            g.orders = vec![0, 1, 2, 3];
            g.scale_bound = Some(0.5);
        }
        PtwiseDom => {
            g.t = AxisSpec::log(0.25, 16.0, 7);
            g.dims = vec![1, 2, 3];
            g.trials = 50;
        }
        SeminormChain => {
            g.exponents = vec![1.0, 2.0, 3.0];
            g.secondary = vec![0.1, 0.25, 0.5, 1.0, 1.5];
            g.trials = 1000;
        }
        AIntegral => {
            g.t = AxisSpec::log(0.1, 10.0, 3);
            g.alphas = vec![0.1, 0.5, 0.9];
        }
        DeltaRatio => {
            g.t = AxisSpec::log(0.1, 10.0, 3);
            g.alphas = vec![0.25, 0.5, 0.75];
            g.secondary = vec![1e-6, 1e-4, 1e-2, 0.1, 0.5];
        }
        FracRecon => {
            g.t = AxisSpec::log(16.0, 100.0, 4);
            g.alphas = vec![0.3, 0.5, 0.7];
            g.xi_samples = 3;
        }
        FracMultRecon => {
            g.t = AxisSpec::log(16.0, 100.0, 5);
            g.alphas = vec![0.2, 0.4, 0.6, 0.8];
            g.dims = vec![1, 2];
            g.xi_samples = 10;
            g.trials = 20;
        }
        Contraction => {
            g.t = AxisSpec::log(0.5, 64.0, 4);
            g.dims = vec![1, 2, 3];
            g.exponents = vec![1.0, 1.5, 2.0, 3.0, f64::INFINITY];
            g.trials = 100;
        }
        GdiffHolder => {
            g.t = AxisSpec::log(16.0, 64.0, 3);
            g.dims = vec![1, 2];
            g.alphas = vec![0.5];
            g.exponents = vec![1.5];
            g.secondary = vec![1.0 / 64.0, 1.0 / 16.0, 0.25, 1.0];
            g.trials = 10;
        }
        NormGrowth => {
            g.t = AxisSpec::log(0.25, 64.0, 16);
            g.dims = vec![1, 2, 3, 4];
            g.exponents = vec![2.0];
            g.trials = 50;
        }
    }
    g
}

/// One evaluated inequality instance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub check_id: CheckId,
    pub index: usize,
    /// Which side or variant of the check this record belongs to.
    pub label: String,
    pub point: BTreeMap<String, f64>,
    pub xi: Vec<f64>,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub slack: f64,
    pub pass: bool,
    pub error: Option<String>,
}

/// Measured supremum of an empirical ratio with its frozen cap.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalSummary {
    pub check_id: CheckId,
    pub slice: String,
    pub measured: f64,
    pub cap: Option<f64>,
    pub provenance: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub total: usize,
    pub failures: usize,
    pub errors: usize,
    pub worst_margin: Option<f64>,
    pub empirical: Vec<EmpiricalSummary>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertReport {
    pub suite: String,
    pub seed: u64,
    pub grid: BTreeMap<String, GridSpec>,
    pub records: Vec<Record>,
    pub summary: Summary,
}

/// A check outcome before margins and verdicts are attached.
#[derive(Clone, Debug)]
pub(crate) struct Outcome {
    pub label: String,
    pub point: BTreeMap<String, f64>,
    pub xi: Vec<f64>,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    pub error: Option<String>,
    /// Ledger slice of the empirical cap used, if any.
    pub cap_slice: Option<String>,
}

impl Outcome {
    pub fn new(label: &str, point: &[(&str, f64)], xi: &[f64], lhs: f64, rhs: f64, slack: f64) -> Self {
        Self {
            label: label.to_string(),
            point: point.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            xi: xi.to_vec(),
            lhs,
            rhs,
            slack,
            error: None,
            cap_slice: None,
        }
    }

    pub fn failed(label: &str, point: &[(&str, f64)], xi: &[f64], err: &Error) -> Self {
        let mut o = Self::new(label, point, xi, 0.0, 0.0, 0.0);
        o.error = Some(err.to_string());
        o
    }

    pub fn capped(mut self, slice: String) -> Self {
        self.cap_slice = Some(slice);
        self
    }
}

fn summarize(records: &[Record], empirical: Vec<EmpiricalSummary>) -> Summary {
    Summary {
        total: records.len(),
        failures: records.iter().filter(|r| !r.pass).count(),
        errors: records.iter().filter(|r| r.error.is_some()).count(),
        worst_margin: records
            .iter()
            .filter(|r| r.error.is_none())
            .map(|r| r.margin)
            .fold(None, |a: Option<f64>, m| Some(a.map_or(m, |a| a.min(m)))),
        empirical,
    }
}

fn assemble(id: CheckId, grid: &GridSpec, ledger: &ConstantLedger, outcomes: Vec<Outcome>) -> CertReport {
    let mut sups: BTreeMap<String, f64> = BTreeMap::new();
    let records: Vec<Record> = outcomes
        .into_iter()
        .enumerate()
        .map(|(index, o)| {
            let margin = o.rhs - o.lhs;
            let pass = o.error.is_none() && margin >= -(o.slack + ROUNDOFF_SLACK);
            if let (Some(slice), None) = (&o.cap_slice, &o.error) {
                let e = sups.entry(slice.clone()).or_insert(f64::NEG_INFINITY);
                *e = e.max(o.lhs);
            }
            Record {
                check_id: id,
                index,
                label: o.label,
                point: o.point,
                xi: o.xi,
                lhs: o.lhs,
                rhs: o.rhs,
                margin,
                slack: o.slack,
                pass,
                error: o.error,
            }
        })
        .collect();
    let empirical = sups
        .into_iter()
        .map(|(slice, measured)| {
            let entry = ledger.get(id, &slice);
            EmpiricalSummary {
                check_id: id,
                cap: entry.map(|e| e.value),
                provenance: entry.map_or_else(String::new, |e| e.provenance.clone()),
                slice,
                measured,
            }
        })
        .collect();
    let summary = summarize(&records, empirical);
    CertReport {
        suite: id.name().to_string(),
        seed: grid.seed,
        grid: BTreeMap::from([(id.name().to_string(), grid.clone())]),
        records,
        summary,
    }
}

pub(crate) fn incompatible(id: CheckId, reason: impl Into<String>) -> Error {
    Error::IncompatibleGrid {
        check: id.name().to_string(),
        reason: reason.into(),
    }
}

/// Evaluate one check over a grid. Numeric failures at individual points are recorded
/// in the report; grids outside the check's parameter range are rejected.
pub fn run_check(id: CheckId, grid: &GridSpec, ledger: &ConstantLedger) -> Result<CertReport> {
    grid.validate()?;
    let outcomes = match id {
        L1Theta0 => checks::l1_theta0(grid),
        Ps2Poisson => checks::poisson(grid),
        FtDual => checks::ft_dual(grid),
        Est0Global => checks::est0_global(grid),
        Est0Local => checks::est0_local(grid, ledger),
        Lem2 => checks::lem2(grid),
        Lem4 => checks::lem4(grid),
        Cor1 => checks::cor1(grid),
        EstInf => checks::est_inf(grid),
        Prop1Mod => checks::prop1mod(grid, ledger),
        Htd1 => checks::htd1(grid),
        Htd2 => checks::htd2(grid, ledger),
        Deriv1d => checks::deriv_1d(grid, ledger),
        DerivD => checks::deriv_d(grid, ledger),
        G12 => checks::g12(grid, ledger),
        G14 => checks::g14(grid, ledger),
        PsiDeriv => checks::psi_deriv(grid, ledger),
        PtwiseDom => operators::ptwise_dom(grid),
        SeminormChain => operators::seminorm_chain(grid),
        AIntegral => operators::a_integral(grid),
        DeltaRatio => operators::delta_ratio(grid, ledger),
        FracRecon => operators::frac_recon(grid),
        FracMultRecon => operators::frac_mult_recon(grid),
        Contraction => operators::contraction(grid),
        GdiffHolder => operators::gdiff_holder(grid, ledger),
        NormGrowth => operators::norm_growth(grid, ledger),
    }?;
    Ok(assemble(id, grid, ledger, outcomes))
}

/// Named collections of checks.
pub fn suite_checks(suite: &str) -> Result<Vec<CheckId>> {
    let all = list_checks();
    Ok(match suite {
        "all" => all,
        "explicit" => all.into_iter().filter(|c| c.mode() == CheckMode::Explicit).collect(),
        "empirical" => all.into_iter().filter(|c| c.mode() != CheckMode::Explicit).collect(),
        other => vec![CheckId::parse(other).map_err(|_| Error::UnknownCheck(format!("suite {other}")))?],
    })
}

/// Run several checks on their default grids (with the given seed) and merge the reports.
pub fn run_suite(suite: &str, seed: u64, ledger: &ConstantLedger) -> Result<CertReport> {
    let ids = suite_checks(suite)?;
    let mut parts = Vec::with_capacity(ids.len());
    for id in ids {
        parts.push(run_check(id, &default_grid(id).with_seed(seed), ledger)?);
    }
    Ok(CertReport::merge(suite, seed, parts))
}

impl CertReport {
    /// Concatenate reports, renumbering records in order.
    pub fn merge(suite: &str, seed: u64, parts: Vec<CertReport>) -> CertReport {
        let mut grid = BTreeMap::new();
        let mut records = Vec::new();
        let mut empirical = Vec::new();
        for p in parts {
            grid.extend(p.grid);
            records.extend(p.records);
            empirical.extend(p.summary.empirical);
        }
        for (i, r) in records.iter_mut().enumerate() {
            r.index = i;
        }
        let summary = summarize(&records, empirical);
        CertReport {
            suite: suite.to_string(),
            seed,
            grid,
            records,
            summary,
        }
    }

    /// Whether every record passed.
    pub fn all_pass(&self) -> bool {
        self.summary.failures == 0
    }

    /// Failures among explicit-mode records.
    pub fn explicit_failures(&self) -> usize {
        self.records
            .iter()
            .filter(|r| !r.pass && r.check_id.mode() == CheckMode::Explicit)
            .count()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    /// One record per row with a fixed header.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "check_id", "index", "label", "point", "xi", "lhs", "rhs", "margin", "slack", "pass", "error",
        ])
        .map_err(|e| Error::Io(e.to_string()))?;
        for r in &self.records {
            let point = r
                .point
                .iter()
                .map(|(k, v)| format!("{k}={v:?}"))
                .collect::<Vec<_>>()
                .join(";");
            let xi = r.xi.iter().map(|v| format!("{v:?}")).collect::<Vec<_>>().join(" ");
            w.write_record([
                r.check_id.name().to_string(),
                r.index.to_string(),
                r.label.clone(),
                point,
                xi,
                format!("{:?}", r.lhs),
                format!("{:?}", r.rhs),
                format!("{:?}", r.margin),
                format!("{:?}", r.slack),
                r.pass.to_string(),
                r.error.clone().unwrap_or_default(),
            ])
            .map_err(|e| Error::Io(e.to_string()))?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
    }

    /// Per-check human-readable table.
    pub fn summary_table(&self) -> String {
        let mut by: BTreeMap<(usize, CheckId), (usize, usize, f64)> = BTreeMap::new();
        let order: BTreeMap<CheckId, usize> = list_checks().into_iter().enumerate().map(|(i, c)| (c, i)).collect();
        for r in &self.records {
            let e = by.entry((order[&r.check_id], r.check_id)).or_insert((0, 0, f64::INFINITY));
            e.0 += 1;
            if !r.pass {
                e.1 += 1;
            }
            if r.error.is_none() {
                e.2 = e.2.min(r.margin);
            }
        }
        let mut s = String::new();
        let _ = writeln!(s, "{:<16} {:<13} {:>8} {:>8} {:>24}", "check", "mode", "points", "failed", "worst margin");
        for ((_, id), (n, f, m)) in by {
            let mode = match id.mode() {
                CheckMode::Explicit => "explicit",
                CheckMode::EmpiricalCap => "empirical",
                CheckMode::Report => "report",
            };
            let _ = writeln!(s, "{:<16} {:<13} {:>8} {:>8} {:>24.17e}", id.name(), mode, n, f, m);
        }
        for e in &self.summary.empirical {
            let _ = writeln!(
                s,
                "cap {:<12} [{}] measured {:.17e} cap {} ({})",
                e.check_id.name(),
                e.slice,
                e.measured,
                e.cap.map_or_else(|| "missing".to_string(), |c| format!("{c:.17e}")),
                e.provenance
            );
        }
        let _ = writeln!(
            s,
            "total {} failures {} errors {}",
            self.summary.total, self.summary.failures, self.summary.errors
        );
        s
    }
}
