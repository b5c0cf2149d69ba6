use std::f64::consts::PI;

use num_complex::Complex64;
use proptest::prelude::*;

use dgauss::certify::{default_grid, AxisSpec, CheckId, ConstantLedger, GridSpec};
use dgauss::fractional::{compose_derivative, faa_di_bruno_tuples, inverse_derivative};
use dgauss::lattice::{convolve_gauss, lp_norm, ConvolutionPlan, LatticeSignal};
use dgauss::multipliers::{gauss_multiplier, gauss_multiplier_deficit, psi, psi_inv, MultiplierQuery};
use dgauss::seminorms::{jump_count, oscillation, variation, Partition, SampledFamily};
use dgauss::theta::{theta1, theta1_direct, theta1_dual, ScaleParam, TorusPoint, TruncationPolicy};

fn st(t: f64) -> ScaleParam {
    ScaleParam::new(t).unwrap()
}

fn pol() -> TruncationPolicy {
    TruncationPolicy::default()
}

fn log_t() -> impl Strategy<Value = f64> {
    (-8.0f64..8.0).prop_map(f64::exp2)
}

fn torus(d: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-0.5f64..0.5, d)
}

fn multiplier(t: f64, xi: &[f64]) -> f64 {
    let q = MultiplierQuery::new(t, TorusPoint::new(xi.to_vec()).unwrap(), pol(), 0).unwrap();
    gauss_multiplier(&q).unwrap().value
}

proptest! {
    #[test]
    fn theta_is_even_periodic_and_poisson_dual(t in log_t(), z in -0.5f64..0.5, k in -3i32..3) {
        let v = theta1(st(t), z, &pol()).unwrap().value;
        prop_assert!(v > 0.0);
        let even = theta1(st(t), -z, &pol()).unwrap().value;
        let shifted = theta1(st(t), z + k as f64, &pol()).unwrap().value;
        prop_assert!((v - even).abs() <= 1e-14 * v);
        prop_assert!((v - shifted).abs() <= 1e-13 * v);
        let a = theta1_direct(st(t), z, &pol()).unwrap();
        let b = theta1_dual(st(t), z, &pol()).unwrap();
        // Both series cancel down to v from terms of size up to 1 + t^{-1/2}.
        let scale = v.max(1.0 + t.powf(-0.5));
        prop_assert!((a.value - b.value).abs() <= a.tail_bound + b.tail_bound + 1e-13 * scale);
        let p = theta1(st(t), 0.0, &pol()).unwrap().value;
        let q = theta1(st(1.0 / t), 0.0, &pol()).unwrap().value;
        prop_assert!((p - q / t.sqrt()).abs() <= 1e-13 * p);
    }

    #[test]
    fn theta_at_zero_sandwich(t in log_t()) {
        let v = theta1(st(t), 0.0, &pol()).unwrap().value;
        prop_assert!(v >= t.powf(-0.5) - 1e-14 && v <= 1.0 + t.powf(-0.5) + 1e-14);
    }

    #[test]
    fn multiplier_is_a_probability_characteristic(t in log_t(), xi in torus(3)) {
        let m = multiplier(t, &xi);
        prop_assert!(m > 0.0 && m <= 1.0 + 1e-15);
        let d = gauss_multiplier_deficit(st(t), &TorusPoint::new(xi.clone()).unwrap(), &pol()).unwrap().value;
        prop_assert!(d >= 0.0 && (m + d - 1.0).abs() < 1e-14);
        let sq: f64 = xi.iter().map(|x| x * x).sum();
        prop_assert!(d <= 6.0 * PI * t * sq + 1e-13);
    }

    #[test]
    fn multiplier_tensorizes(t in log_t(), a in torus(2), b in torus(1)) {
        let joint: Vec<f64> = a.iter().chain(&b).copied().collect();
        let lhs = multiplier(t, &joint);
        let rhs = multiplier(t, &a) * multiplier(t, &b);
        prop_assert!((lhs - rhs).abs() <= 1e-14);
    }

    #[test]
    fn large_scale_decay(t in 15.0f64..200.0, xi in torus(4)) {
        let sq: f64 = xi.iter().map(|x| x * x).sum();
        prop_assert!(multiplier(t, &xi) <= (-PI * t * sq / 10.0).exp() * (1.0 + 1e-13));
    }

    #[test]
    fn psi_round_trip(t in (-7.0f64..8.0).prop_map(f64::exp2)) {
        let back = psi_inv(psi(st(t)).unwrap()).get();
        prop_assert!((back - t).abs() <= 1e-12 * t);
    }
}

fn family(values: &[f64]) -> SampledFamily {
    SampledFamily::from_real(values).unwrap()
}

proptest! {
    #[test]
    fn variation_is_monotone_in_r_and_dominates_jumps(
        v in prop::collection::vec(-3.0f64..3.0, 1..16),
        lambda in 0.05f64..3.0,
    ) {
        let f = family(&v);
        let mut last = f64::INFINITY;
        for r in [1.0, 1.5, 2.0, 3.0, 6.0] {
            let vr = variation(&f, r).unwrap();
            prop_assert!(vr <= last + 1e-12);
            last = vr;
            let n = jump_count(&f, lambda).unwrap() as f64;
            prop_assert!(lambda * n.powf(1.0 / r) <= vr + 1e-12);
        }
        let mut sup = 0.0f64;
        for a in &v {
            sup = sup.max((a - v[0]).abs());
        }
        prop_assert!(variation(&f, 1.0).unwrap() >= sup - 1e-12);
    }

    #[test]
    fn oscillation_is_bounded_by_variation(
        v in prop::collection::vec(-2.0f64..2.0, 2..12),
        cuts in prop::collection::btree_set(2usize..12, 0..5),
        r in 1.0f64..4.0,
    ) {
        let f = family(&v);
        let n = v.len();
        let mut b: Vec<f64> = std::iter::once(1.0)
            .chain(cuts.into_iter().filter(|&c| c <= n).map(|c| c as f64))
            .collect();
        b.push(n as f64 + 1.0);
        b.dedup();
        let part = Partition::new(b).unwrap();
        prop_assert!(oscillation(&f, &part, r).unwrap() <= variation(&f, r).unwrap() + 1e-12);
    }

    #[test]
    fn jump_count_is_invariant_under_phase(
        v in prop::collection::vec(-2.0f64..2.0, 1..10),
        theta in 0.0f64..std::f64::consts::TAU,
        lambda in 0.1f64..2.0,
    ) {
        let rot = Complex64::from_polar(1.0, theta);
        let times: Vec<f64> = (1..=v.len()).map(|i| i as f64).collect();
        let g = SampledFamily::new(times, v.iter().map(|&x| rot * x).collect()).unwrap();
        prop_assert_eq!(jump_count(&g, lambda).unwrap(), jump_count(&family(&v), lambda).unwrap());
    }
}

fn signal(d: usize) -> impl Strategy<Value = LatticeSignal> {
    prop::collection::vec((prop::collection::vec(-3i64..=3, d), -2.0f64..2.0, -1.0f64..1.0), 1..8).prop_map(
        move |pts| {
            let mut s = LatticeSignal::zero(d).unwrap();
            for (p, re, im) in pts {
                s.insert(p, Complex64::new(re, im)).unwrap();
            }
            s
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn signal_text_round_trip_is_bit_exact(f in signal(2)) {
        let text = f.to_text();
        let back = LatticeSignal::from_text(&text).unwrap();
        prop_assert_eq!(back.to_text(), text);
        for (k, v) in f.iter() {
            let w = back.get(k);
            prop_assert_eq!(v.re.to_bits(), w.re.to_bits());
        }
    }

    #[test]
    fn convolution_contracts_lp_and_preserves_mass(f in signal(2), t in 0.05f64..20.0) {
        let plan = ConvolutionPlan::direct(st(t), pol(), 2).unwrap();
        let g = convolve_gauss(&f, &plan).unwrap();
        for p in [1.0, 1.5, 2.0, 3.0, f64::INFINITY] {
            prop_assert!(lp_norm(&g, p).unwrap() <= lp_norm(&f, p).unwrap() + 1e-10);
        }
        let sf: Complex64 = f.iter().map(|(_, v)| *v).sum();
        let sg: Complex64 = g.iter().map(|(_, v)| *v).sum();
        prop_assert!((sf - sg).norm() < 1e-12);
    }
}

proptest! {
    #[test]
    fn inverse_derivatives_invert_compositions(
        d1 in prop_oneof![0.3f64..3.0, -3.0f64..-0.3],
        rest in prop::collection::vec(-2.0f64..2.0, 5),
    ) {
        // f has derivatives (0, d1, rest...) at 0; h = f^{-1} near 0. Then
        // (f o h)^{(n)} = delta_{n1}, so composing f's derivatives with h's must give that.
        let mut f = vec![0.0, d1];
        f.extend(rest);
        let mut h = vec![0.0];
        for n in 1..=5 {
            h.push(inverse_derivative(n, &f).unwrap());
        }
        for n in 1..=5 {
            let c = compose_derivative(n, &f, &h).unwrap();
            let want = if n == 1 { 1.0 } else { 0.0 };
            let scale = f.iter().chain(&h).map(|x| x.abs()).fold(1.0, f64::max).powi(n as i32);
            prop_assert!((c - want).abs() <= 1e-9 * scale, "n={} c={}", n, c);
        }
    }

    #[test]
    fn composition_tuples_satisfy_their_constraint(n in 1usize..=10) {
        for m in faa_di_bruno_tuples(n).unwrap().tuples {
            prop_assert_eq!(m.iter().enumerate().map(|(j, c)| (j + 1) * c).sum::<usize>(), n);
        }
    }

    #[test]
    fn axis_points_are_monotone_with_exact_endpoints(
        a in 0.01f64..10.0,
        span in 1.5f64..100.0,
        n in 2usize..40,
        log in any::<bool>(),
    ) {
        let ax = AxisSpec::new(a, a * span, n, log).unwrap();
        let p = ax.points();
        prop_assert_eq!(p.len(), n);
        prop_assert_eq!(p[0], a);
        prop_assert_eq!(p[n - 1], a * span);
        prop_assert!(p.windows(2).all(|w| w[0] < w[1]));
        let r = ax.refined().points();
        prop_assert_eq!(r.len(), 2 * n - 1);
        for (i, x) in p.iter().enumerate() {
            prop_assert_eq!(r[2 * i], *x);
        }
    }
}

#[test]
fn ledger_survives_serialization_and_rejects_edits() {
    let l = ConstantLedger::standard();
    let text = l.to_json();
    assert_eq!(ConstantLedger::from_json(&text).unwrap(), l);
    let mut doc: serde_json::Value = serde_json::from_str(&text).unwrap();
    let entry = doc["entries"]
        .as_array_mut()
        .unwrap()
        .iter_mut()
        .find(|e| e["mode"] == "explicit")
        .unwrap();
    let v = entry["value"].as_f64().unwrap();
    entry["value"] = serde_json::json!(v * (1.0 + 1e-15));
    assert!(ConstantLedger::from_json(&doc.to_string()).is_err());

    let text = serde_json::to_string(&default_grid(CheckId::Contraction)).unwrap();
    let grid: GridSpec = serde_json::from_str(&text).unwrap();
    assert!(grid.exponents.iter().any(|p| p.is_infinite()));
}
