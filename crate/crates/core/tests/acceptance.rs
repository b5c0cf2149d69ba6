//! Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.
//! Tolerances are pinned here, independent of the slack used inside the checks.

use std::f64::consts::PI;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use dgauss::certify::{default_grid, run_check, CertReport, CheckId, ConstantLedger, DEFAULT_SEED};
use dgauss::fractional::{compose_derivative, faa_di_bruno_tuples, inverse_derivative};
use dgauss::multipliers::{gauss_multiplier, MultiplierQuery};
use dgauss::seminorms::{jump_count, variation, SampledFamily};
use dgauss::theta::{TorusPoint, TruncationPolicy};

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

fn run(id: CheckId) -> CertReport {
    let ledger = ConstantLedger::standard();
    run_check(id, &default_grid(id).with_seed(DEFAULT_SEED), &ledger).expect("default grid is compatible")
}

fn run_refined(id: CheckId) -> CertReport {
    let ledger = ConstantLedger::standard();
    run_check(id, &default_grid(id).with_seed(DEFAULT_SEED).refined(), &ledger).expect("refined grid is compatible")
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, f64) {
    let start = Instant::now();
    let v = f();
    (v, start.elapsed().as_secs_f64())
}

fn clean(r: &CertReport) -> bool {
    r.summary.failures == 0 && r.summary.errors == 0
}

fn counts(r: &CertReport) -> String {
    format!("{} records, {} failures, {} errors", r.summary.total, r.summary.failures, r.summary.errors)
}

fn max_by(r: &CertReport, f: impl Fn(&dgauss::certify::Record) -> f64) -> f64 {
    r.records.iter().map(f).fold(f64::NEG_INFINITY, f64::max)
}

fn c1() -> Verdict {
    let (r, secs) = timed(|| run(CheckId::FtDual));
    let excess = max_by(&r, |x| x.lhs - x.slack - 1e-12);
    verdict(
        clean(&r) && excess <= 0.0 && secs <= 10.0,
        format!("{}; max(deviation - tails - 1e-12) = {excess:.3e}; {secs:.2}s", counts(&r)),
    )
}

fn c2() -> Verdict {
    let (r, secs) = timed(|| run(CheckId::Ps2Poisson));
    let worst = max_by(&r, |x| x.lhs);
    let slack = max_by(&r, |x| x.slack);
    verdict(
        clean(&r) && worst <= 1e-12 + slack && r.records.len() == 33 && secs <= 1.0,
        format!("{}; max relative deviation {worst:.3e}; {secs:.3}s", counts(&r)),
    )
}

fn c3() -> Verdict {
    let r = run(CheckId::L1Theta0);
    let worst = r.summary.worst_margin.unwrap_or(f64::NAN);
    verdict(clean(&r) && worst >= -1e-14, format!("{}; worst margin {worst:.3e}", counts(&r)))
}

fn c4() -> Verdict {
    let (r, secs) = timed(|| run(CheckId::Est0Global));
    verdict(
        clean(&r) && r.summary.total == 25 * 3 * 500 && secs <= 30.0,
        format!("{}; {secs:.2}s", counts(&r)),
    )
}

fn c5() -> Verdict {
    let (r, secs) = timed(|| run(CheckId::EstInf));
    let q = MultiplierQuery::new(15.0, TorusPoint::new(vec![0.25]).unwrap(), TruncationPolicy::default(), 0).unwrap();
    let lhs = gauss_multiplier(&q).unwrap().value;
    let rhs = (-PI * 15.0 * 0.0625 / 10.0).exp();
    let spot = (lhs - 0.0526).abs() < 1e-4 && (rhs - 0.7449).abs() < 1e-4 && (rhs - lhs - 0.692).abs() < 1e-3;
    verdict(
        clean(&r) && spot && secs <= 60.0,
        format!("{}; spot t=15 xi=0.25 d=1: lhs {lhs:.4} rhs {rhs:.4} margin {:.4}; {secs:.2}s", counts(&r), rhs - lhs),
    )
}

fn c6() -> Verdict {
    let r = run(CheckId::Prop1Mod);
    let ledger = ConstantLedger::standard();
    let c = ledger.value(CheckId::Prop1Mod, "D=32,bound=upper").unwrap();
    let exact = c.to_bits() == (16.0 / (1.0 + 4.0 * 2f64.sqrt())).to_bits() && (c - 2.4035).abs() < 1e-4;
    let big = ledger.value(CheckId::Prop1Mod, "D=32,bound=lower").unwrap();
    verdict(clean(&r) && exact, format!("{}; c_32 = {c:.6}, C_32 = {big:.6e}", counts(&r)))
}

fn c7() -> Verdict {
    let ((a, b), secs) = timed(|| (run(CheckId::Htd1), run(CheckId::Htd2)));
    verdict(
        clean(&a) && clean(&b) && secs <= 60.0,
        format!("HTD1 {}; HTD2 {}; {secs:.2}s", counts(&a), counts(&b)),
    )
}

fn c8() -> Verdict {
    let g = default_grid(CheckId::Lem4);
    let alphas_ok = g.alphas == vec![0.1, 0.25, 0.4];
    let reps: Vec<CertReport> = [CheckId::Lem2, CheckId::Lem4, CheckId::Cor1].into_iter().map(run).collect();
    verdict(
        alphas_ok && reps.iter().all(clean),
        reps.iter().map(|r| format!("{} {}", r.suite, counts(r))).collect::<Vec<_>>().join("; "),
    )
}

/// Largest sum of |a_{k+1} - a_k|^r over index subsets, and the largest number of
/// consecutive gaps >= lambda, by enumerating every subset.
fn brute(values: &[f64], rs: &[f64], lambdas: &[f64]) -> (Vec<f64>, Vec<usize>) {
    let n = values.len();
    let mut var = vec![0.0f64; rs.len()];
    let mut jumps = vec![0usize; lambdas.len()];
    let mut idx = Vec::with_capacity(n);
    for mask in 1u32..(1 << n) {
        idx.clear();
        idx.extend((0..n).filter(|&i| mask & (1 << i) != 0));
        let gaps: Vec<f64> = idx.windows(2).map(|w| (values[w[1]] - values[w[0]]).abs()).collect();
        for (k, &r) in rs.iter().enumerate() {
            var[k] = var[k].max(gaps.iter().map(|g| g.powf(r)).sum());
        }
        for (k, &l) in lambdas.iter().enumerate() {
            if gaps.iter().all(|&g| g >= l) {
                jumps[k] = jumps[k].max(gaps.len());
            }
        }
    }
    (var.iter().zip(rs).map(|(v, r)| v.powf(1.0 / r)).collect(), jumps)
}

fn c9() -> Verdict {
    let (res, secs) = timed(|| {
        let rs = [1.0, 2.0, 3.0];
        let lambdas = [0.5, 1.0, 1.5, 2.0];
        let mut cases = 0usize;
        let mut mismatches = 0usize;
        let mut check = |values: &[f64]| {
            let f = SampledFamily::from_real(values).unwrap();
            let (v, j) = brute(values, &rs, &lambdas);
            for (k, &r) in rs.iter().enumerate() {
                if (variation(&f, r).unwrap() - v[k]).abs() > 1e-12 * (1.0 + v[k]) {
                    mismatches += 1;
                }
            }
            for (k, &l) in lambdas.iter().enumerate() {
                if jump_count(&f, l).unwrap() != j[k] {
                    mismatches += 1;
                }
            }
            cases += 1;
        };
        for len in 1..=9u32 {
            for code in 0..3usize.pow(len) {
                let mut c = code;
                let values: Vec<f64> = (0..len)
                    .map(|_| {
                        let v = (c % 3) as f64 - 1.0;
                        c /= 3;
                        v
                    })
                    .collect();
                check(&values);
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(DEFAULT_SEED);
        for _ in 0..500 {
            let values: Vec<f64> = (0..12).map(|_| rng.gen_range(-2.0..2.0)).collect();
            check(&values);
        }
        (cases, mismatches)
    });
    let (cases, mismatches) = res;
    verdict(
        mismatches == 0 && cases == 29_523 + 500 && secs <= 120.0,
        format!("{cases} sequences x 7 parameters, {mismatches} mismatches; {secs:.2}s"),
    )
}

fn c10() -> Verdict {
    let r = run(CheckId::SeminormChain);
    let g = default_grid(CheckId::SeminormChain);
    let excess = max_by(&r, |x| x.lhs - x.rhs);
    verdict(
        clean(&r) && g.trials == 1000 && excess <= 1e-12,
        format!("{}; max violation {excess:.3e}", counts(&r)),
    )
}

fn c11() -> Verdict {
    let ((fr, ai, fm), secs) =
        timed(|| (run(CheckId::FracRecon), run(CheckId::AIntegral), run(CheckId::FracMultRecon)));
    let worst = |r: &CertReport, label: &str| {
        r.records.iter().filter(|x| x.label == label).map(|x| x.lhs).fold(0.0, f64::max)
    };
    let closed = worst(&fr, "closed_form");
    let recon = worst(&fr, "reconstruction");
    let mass = max_by(&ai, |x| x.lhs);
    let mult = max_by(&fm, |x| x.lhs);
    let ok = clean(&fr)
        && clean(&ai)
        && clean(&fm)
        && closed <= 1e-8
        && recon <= 1e-6
        && mass <= 1e-8
        && mult <= 1e-5
        && fm.records.len() == 20
        && secs <= 60.0;
    verdict(
        ok,
        format!(
            "closed form {closed:.2e}, reconstruction {recon:.2e}, A-mass {mass:.2e}, multiplier {mult:.2e} over {} points; {secs:.2}s",
            fm.records.len()
        ),
    )
}

fn c12() -> Verdict {
    let r = run(CheckId::Contraction);
    let excess = max_by(&r, |x| x.lhs - x.rhs);
    verdict(clean(&r) && excess <= 1e-10, format!("{}; max(|Gf|_p - |f|_p) = {excess:.3e}", counts(&r)))
}

fn c13() -> Verdict {
    let r = run(CheckId::PtwiseDom);
    let g = default_grid(CheckId::PtwiseDom);
    verdict(
        clean(&r) && g.trials == 50 && g.dims == vec![1, 2, 3],
        format!("{}; worst margin {:.3e}", counts(&r), r.summary.worst_margin.unwrap_or(f64::NAN)),
    )
}

fn c14() -> Verdict {
    let ids = [
        CheckId::Est0Local,
        CheckId::Deriv1d,
        CheckId::DerivD,
        CheckId::G12,
        CheckId::G14,
        CheckId::PsiDeriv,
        CheckId::DeltaRatio,
        CheckId::GdiffHolder,
    ];
    let mut ok = true;
    let mut slices = 0;
    let mut worst_drift = 0.0f64;
    let mut worst_use = 0.0f64;
    for id in ids {
        let a = run(id);
        let b = run_refined(id);
        ok &= clean(&a) && clean(&b) && !a.summary.empirical.is_empty();
        for e in &a.summary.empirical {
            slices += 1;
            let Some(f) = b.summary.empirical.iter().find(|x| x.slice == e.slice) else {
                ok = false;
                continue;
            };
            let drift = (f.measured / e.measured - 1.0).abs();
            worst_drift = worst_drift.max(drift);
            match e.cap {
                Some(cap) => {
                    worst_use = worst_use.max(e.measured.max(f.measured) / cap);
                    ok &= e.measured.is_finite() && drift <= 0.10 && e.measured <= cap && f.measured <= cap;
                }
                None => ok = false,
            }
        }
    }
    verdict(
        ok,
        format!("{slices} slices; max refinement drift {:.2}%; max measured/cap {worst_use:.3}", 100.0 * worst_drift),
    )
}

fn c15() -> Verdict {
    let (r, secs) = timed(|| run(CheckId::NormGrowth));
    let g = default_grid(CheckId::NormGrowth);
    let grid_ok = g.dims == vec![1, 2, 3, 4] && g.trials == 50 && g.t.count == 16 && g.exponents == vec![2.0];
    let growth = r.summary.empirical.iter().find(|e| e.slice == "p=2,L=16");
    let curve: Vec<String> = r
        .records
        .iter()
        .filter(|x| x.label == "maximal")
        .map(|x| format!("d={} {:.4}", x.point.get("d").copied().unwrap_or(f64::NAN), x.lhs))
        .collect();
    let ok = grid_ok
        && clean(&r)
        && secs <= 300.0
        && growth.is_some_and(|e| e.cap == Some(2.0) && e.measured <= 2.0);
    verdict(
        ok,
        format!(
            "growth {:.4} (cap 2.0); maximal ratios [{}]; {secs:.1}s",
            growth.map_or(f64::NAN, |e| e.measured),
            curve.join(", ")
        ),
    )
}

/// Partition numbers by the coin-change recurrence.
fn partitions(n: usize) -> usize {
    let mut p = vec![0usize; n + 1];
    p[0] = 1;
    for part in 1..=n {
        for m in part..=n {
            p[m] += p[m - part];
        }
    }
    p[n]
}

fn c16() -> Verdict {
    let mut ok = true;
    for n in 1..=10 {
        ok &= faa_di_bruno_tuples(n).unwrap().len() == partitions(n);
    }
    // f(t) = e^t + t^2 at t = 0.3; h = f^{-1}. Composing f's derivatives with h's gives
    // the identity's derivatives (1, 0, 0, ...).
    let t0: f64 = 0.3;
    let e = t0.exp();
    let f = [e + t0 * t0, e + 2.0 * t0, e + 2.0, e, e, e];
    let mut h = vec![t0];
    for n in 1..=5 {
        h.push(inverse_derivative(n, &f).unwrap());
    }
    let mut worst = 0.0f64;
    for n in 1..=5 {
        let c = compose_derivative(n, &f, &h).unwrap();
        worst = worst.max((c - if n == 1 { 1.0 } else { 0.0 }).abs());
    }
    // ln = exp^{-1}: ln^{(n)}(1) = (-1)^{n-1} (n-1)!.
    let mut fact = 1.0;
    for n in 1..=5 {
        if n > 1 {
            fact *= (n - 1) as f64;
        }
        let want = if n % 2 == 1 { fact } else { -fact };
        worst = worst.max((inverse_derivative(n, &[1.0; 6]).unwrap() - want).abs());
    }
    ok &= worst <= 1e-9;
    verdict(ok, format!("|S(n)| = p(n) for n <= 10: {ok}; round-trip error {worst:.2e}"))
}

fn main() {
    let criteria: [(&str, fn() -> Verdict); 16] = [
        ("dual representation agreement", c1),
        ("Poisson identity", c2),
        ("theta(0) sandwich", c3),
        ("global small-frequency estimate", c4),
        ("large-scale decay", c5),
        ("explicit D = 32 bounds", c6),
        ("torus heat kernel bounds", c7),
        ("two-sided exponential bounds", c8),
        ("seminorm brute-force oracles", c9),
        ("seminorm chain", c10),
        ("fractional calculus", c11),
        ("l^p contraction", c12),
        ("pointwise domination", c13),
        ("empirical caps", c14),
        ("dimension growth", c15),
        ("combinatorics", c16),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let v = f();
        if !v.pass {
            failed += 1;
        }
        println!("criterion {:>2} {} {name}: {}", i + 1, if v.pass { "PASS" } else { "FAIL" }, v.detail);
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
