use proptest::prelude::*;

use cycle_census::analytic::{jensen_zero_bound, log_sups, winding_zero_count, ComplexPoly, Count};
use cycle_census::family::{empirical_tail, expectation_and_variance};
use cycle_census::field::{coefficient_count, Ellipsoid, PlanarField};
use cycle_census::io::{parse_field_json, parse_family_spec, parse_thresholds};
use cycle_census::poincare::{PicardSolver, SolverConfig};
use cycle_census::random_poly::{classify_roots, Annulus};
use cycle_census::sampling::{mix, rng_from_seed};
use cycle_census::{default_budget, C64};

fn finite() -> impl Strategy<Value = f64> {
    prop_oneof![
        any::<f64>().prop_filter("finite", |x| x.is_finite()),
        -1.0f64..1.0,
        Just(0.0),
        Just(-0.0),
        Just(f64::MIN_POSITIVE),
    ]
}

fn field_strategy() -> impl Strategy<Value = PlanarField> {
    (1usize..=5).prop_flat_map(|d| {
        prop::collection::vec(finite(), coefficient_count(d))
            .prop_map(move |v| PlanarField::from_vector(d, &v).unwrap())
    })
}

fn counts_strategy() -> impl Strategy<Value = Vec<Count>> {
    prop::collection::vec(
        prop_oneof![9 => (0u32..40).prop_map(Count::Finite), 1 => Just(Count::Degenerate)],
        1..300,
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn field_json_round_trip_is_bit_exact(field in field_strategy()) {
        let text = serde_json::to_string(&field).unwrap();
        let back = parse_field_json(&text).unwrap();
        let bits = |f: &PlanarField| f.to_vector().iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        prop_assert_eq!(bits(&back), bits(&field));
    }

    #[test]
    fn vector_layout_round_trips(field in field_strategy()) {
        let v = field.to_vector();
        prop_assert_eq!(v.len(), coefficient_count(field.degree()));
        prop_assert_eq!(PlanarField::from_vector(field.degree(), &v).unwrap(), field);
    }

    #[test]
    fn ellipsoid_samples_are_inside(d in 1usize..=6, a in 0.2f64..1.0, seed: u64) {
        let ell = Ellipsoid::new(a, default_budget(d), d).unwrap();
        let mut rng = rng_from_seed(seed);
        for _ in 0..8 {
            prop_assert!(ell.contains(&ell.sample(&mut rng)).unwrap());
        }
    }

    #[test]
    fn winding_count_matches_placed_roots(
        roots in prop::collection::vec((0.0f64..1.5, 0.0f64..std::f64::consts::TAU), 1..10),
        rho in 0.2f64..1.2,
    ) {
        let roots: Vec<C64> = roots.into_iter().map(|(r, t)| C64::from_polar(r, t)).collect();
        prop_assume!(roots.iter().all(|z| (z.norm() - rho).abs() > 1e-3));
        let p = ComplexPoly::from_roots(&roots);
        let inside = roots.iter().filter(|z| z.norm() < rho).count() as u32;
        let got = winding_zero_count(|z| p.eval(z), rho, 0.0).unwrap();
        prop_assert_eq!(got.count, Count::Finite(inside));
    }

    #[test]
    fn jensen_bound_holds_for_polynomials(
        roots in prop::collection::vec((0.0f64..1.2, 0.0f64..std::f64::consts::TAU), 1..8),
        s in 0.2f64..0.8,
    ) {
        let roots: Vec<C64> = roots.into_iter().map(|(r, t)| C64::from_polar(r, t)).collect();
        let p = ComplexPoly::from_roots(&roots);
        let inside = roots.iter().filter(|z| z.norm() <= s).count() as f64;
        let (m1, m2) = log_sups(|z| p.eval(z), s).unwrap();
        prop_assume!(m2.is_finite());
        prop_assert!(inside <= jensen_zero_bound(m1, m2, s).unwrap() + 1e-9);
    }

    #[test]
    fn tail_is_nonincreasing(counts in counts_strategy()) {
        let thresholds: Vec<u32> = (0..45).collect();
        let table = empirical_tail(&counts, &thresholds).unwrap();
        prop_assert!(table.is_nonincreasing());
        prop_assert_eq!(table.tail_fractions[0], 1.0);
    }

    #[test]
    fn expectation_equals_rearrangement(counts in counts_strategy()) {
        prop_assume!(counts.iter().any(|c| !c.is_degenerate()));
        let stats = expectation_and_variance(&counts).unwrap();
        let scale = stats.expectation.abs().max(1.0);
        prop_assert!((stats.expectation - stats.rearrangement_expectation).abs() <= 1e-12 * scale);
        prop_assert!(stats.variance >= 0.0);
    }

    #[test]
    fn count_order_puts_sentinel_last(a in 0u32..1000, b in 0u32..1000) {
        prop_assert_eq!(Count::Finite(a).cmp(&Count::Finite(b)), a.cmp(&b));
        prop_assert!(Count::Degenerate > Count::Finite(a));
        prop_assert!(Count::Degenerate.at_least(a));
    }

    #[test]
    fn reversal_swaps_inside_and_outside(
        coeffs in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 3..40),
        eps in 0.02f64..0.5,
    ) {
        let c: Vec<C64> = coeffs.iter().map(|&(re, im)| C64::new(re, im)).collect();
        prop_assume!(c[0].norm() > 1e-3 && c[c.len() - 1].norm() > 1e-3);
        let k = c.len() - 1;
        let p = ComplexPoly::new(c);
        let ann = Annulus::from_epsilon(eps).unwrap();
        let fwd = classify_roots(&p, k, &ann).unwrap();
        let rev = classify_roots(&p.reversed(), k, &ann.inverted()).unwrap();
        prop_assert_eq!(fwd.total(), k);
        prop_assert_eq!((fwd.inside, fwd.annulus, fwd.outside), (rev.outside, rev.annulus, rev.inside));
    }

    #[test]
    fn real_and_complex_picard_paths_agree(seed: u64, w in 0.01f64..0.7) {
        let d = 3;
        let ell = Ellipsoid::new(1.0, default_budget(d), d).unwrap();
        let field = ell.sample(&mut rng_from_seed(seed));
        let solver = PicardSolver::new(&field.polar(), &SolverConfig::default()).unwrap();
        let real = solver.displacement_real(w).unwrap();
        let complex = solver.displacement(C64::new(w, 0.0)).unwrap();
        prop_assert!((real - complex.re).abs() < 1e-15);
        prop_assert!(complex.im.abs() < 1e-15);
    }

    #[test]
    fn seed_mixing_separates_indices(master: u64, i in 0u64..1 << 40, j in 0u64..1 << 40) {
        prop_assume!(i != j);
        prop_assert_ne!(mix(master, i), mix(master, j));
        prop_assert_eq!(mix(master, i), mix(master, i));
    }

    #[test]
    fn parsers_never_panic(text in ".{0,200}") {
        let _ = parse_thresholds(&text);
        let _ = parse_field_json(&text);
        let _ = parse_family_spec(&text);
    }

    #[test]
    fn threshold_ranges_expand(lo in 0u32..500, width in 0u32..50) {
        let hi = lo + width;
        let parsed = parse_thresholds(&format!("{lo}-{hi}")).unwrap();
        prop_assert_eq!(parsed, (lo..=hi).collect::<Vec<_>>());
    }
}
