use std::cell::RefCell;

use permpois_core::glm::{fit_poisson_columns, IrlsOptions};
use permpois_core::harness::{evaluate_replicate, replicate_seed, MethodSet, Verdict};
use permpois_core::permtest::{permutation_pvalue, permutation_pvalue_by, shuffle, PermutationTally};
use permpois_core::{Dataset, PermutationOptions, ScenarioSpec, SeedPath};
use proptest::prelude::*;

fn small_data() -> Dataset {
    ScenarioSpec::OmittedPredictor { beta0: 0.5, beta2: 0.8 }
        .generate(60, SeedPath::new(3).replicate(1))
        .unwrap()
}

#[test]
fn shuffle_orderings_are_uniform() {
    let x = [1.0, 2.0, 3.0];
    let mut counts = std::collections::HashMap::new();
    for j in 0..12_000 {
        let s = shuffle(&x, SeedPath::new(8).permutation(j));
        *counts.entry(s.iter().map(|v| *v as u8).collect::<Vec<_>>()).or_insert(0) += 1;
    }
    assert_eq!(counts.len(), 6);
    for (order, c) in counts {
        assert!((1800..=2200).contains(&c), "{order:?}: {c}");
    }
}

#[test]
fn outcome_is_never_permuted() {
    let data = small_data();
    let original_ptr = data.y.as_ptr();
    let calls = RefCell::new(0u32);
    let opts = PermutationOptions::with_permutations(100);
    let irls = IrlsOptions::default();
    permutation_pvalue_by(&data, &opts, SeedPath::new(5), |y, x| {
        *calls.borrow_mut() += 1;
        assert_eq!(y.as_ptr(), original_ptr);
        assert_eq!(y, data.y.as_slice());
        let mut a = x.to_vec();
        let mut b = data.x1.clone();
        a.sort_by(f64::total_cmp);
        b.sort_by(f64::total_cmp);
        assert_eq!(a, b);
        fit_poisson_columns(y, Some(x), &irls).ok()?.slope()
    })
    .unwrap();
    assert_eq!(*calls.borrow(), 101);
}

#[test]
fn result_is_deterministic_and_order_free() {
    let data = small_data();
    let opts = PermutationOptions::with_permutations(200);
    let seed = SeedPath::new(6).replicate(2);
    let a = permutation_pvalue(&data, &opts, seed).unwrap();
    let b = permutation_pvalue(&data, &opts, seed).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.n_perm, 200);
    assert_eq!(a.p_value * 200.0, f64::from(a.count));
}

#[test]
fn null_permutation_p_values_roughly_uniform() {
    // smaller cousin of the full decile check in the acceptance suite
    let spec = ScenarioSpec::NullPoisson { beta0: 0.3 };
    let opts = PermutationOptions::with_permutations(100);
    let mut deciles = [0u32; 10];
    for r in 0..300 {
        let out = evaluate_replicate(&spec, 100, replicate_seed(9, &spec, 0, r), MethodSet::BOTH, &opts).unwrap();
        if let Some(Verdict::PValue(p)) = out.permutation {
            deciles[((p * 10.0) as usize).min(9)] += 1;
        }
    }
    assert_eq!(deciles.iter().sum::<u32>(), 300);
    assert!(deciles.iter().all(|&c| (6..=54).contains(&c)), "{deciles:?}");
}

proptest! {
    #[test]
    fn granularity_and_monotonicity(
        slopes in prop::collection::vec(-2.0f64..2.0, 1..200),
        a in 0.0f64..2.0,
        b in 0.0f64..2.0,
    ) {
        let (small, large) = if a <= b { (a, b) } else { (b, a) };
        let tally = |orig: f64| {
            let mut t = PermutationTally::default();
            for &s in &slopes {
                t.record(orig, Some(s));
            }
            t
        };
        let ts = tally(small);
        let tl = tally(large);
        prop_assert!(tl.count <= ts.count);
        let r = ts.finish(small, false).unwrap();
        let scaled = r.p_value * slopes.len() as f64;
        prop_assert!((scaled - scaled.round()).abs() < 1e-9);
        prop_assert!((0.0..=1.0).contains(&r.p_value));
    }
}
