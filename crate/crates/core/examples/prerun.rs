//! Run every check on its default grid and on the refined grid, print timings and
//! failures, and propose empirical caps (1.25 x the larger measured supremum, rounded up
//! to two significant digits).

use std::collections::BTreeMap;
use std::time::Instant;

use dgauss::certify::{default_grid, list_checks, run_check, CheckMode, ConstantLedger, DEFAULT_SEED};

fn round_up_2sig(x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let e = x.log10().floor() - 1.0;
    let s = 10f64.powf(e);
    (x / s).ceil() * s
}

fn main() {
    let ledger = ConstantLedger::standard();
    let only: Vec<String> = std::env::args().skip(1).collect();
    for id in list_checks() {
        if !only.is_empty() && !only.iter().any(|o| o == id.name()) {
            continue;
        }
        let grid = default_grid(id).with_seed(DEFAULT_SEED);
        let mut sups: Vec<BTreeMap<String, f64>> = Vec::new();
        for g in [grid.clone(), grid.refined()] {
            let start = Instant::now();
            let rep = run_check(id, &g, &ledger).expect("grid accepted");
            let secs = start.elapsed().as_secs_f64();
            let s = &rep.summary;
            println!(
                "{:<16} records {:>7} failures {:>5} errors {:>4} worst {:>12.4e} time {:>8.2}s",
                id.name(),
                s.total,
                s.failures,
                s.errors,
                s.worst_margin.unwrap_or(f64::NAN),
                secs
            );
            for r in rep.records.iter().filter(|r| !r.pass).take(3) {
                println!("   FAIL {} {:?} xi {:?} lhs {:e} rhs {:e} err {:?}", r.label, r.point, r.xi, r.lhs, r.rhs, r.error);
            }
            if std::env::var("PRERUN_RELATIVE").is_ok() {
                let mut rel: Vec<_> = rep
                    .records
                    .iter()
                    .filter(|r| r.error.is_none())
                    .map(|r| (r.margin / r.lhs.abs().max(r.rhs.abs()).max(f64::MIN_POSITIVE), r))
                    .collect();
                rel.sort_by(|a, b| a.0.total_cmp(&b.0));
                for (m, r) in rel.iter().take(3) {
                    println!("   rel {m:e} {} {:?} xi {:?} lhs {:e} rhs {:e}", r.label, r.point, r.xi, r.lhs, r.rhs);
                }
            }
            sups.push(s.empirical.iter().map(|e| (e.slice.clone(), e.measured)).collect());
        }
        if id.mode() != CheckMode::Explicit {
            for (slice, a) in &sups[0] {
                let b = sups[1].get(slice).copied().unwrap_or(f64::NAN);
                println!(
                    "   cap [{slice}] default {a:.6e} refined {b:.6e} change {:+.2}% proposed {:e}",
                    100.0 * (b - a) / a,
                    round_up_2sig(1.25 * a.max(b))
                );
            }
        }
    }
}
