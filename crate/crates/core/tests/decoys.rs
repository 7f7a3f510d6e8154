use moles_core::round::seeded_rng;
use moles_core::{pick_decoys, Letter};
use statrs::distribution::{ChiSquared, ContinuousCDF};

#[test]
fn decoys_are_uniform_over_remaining_letters() {
    let correct = Letter::try_from('o').unwrap();
    let mut rng = seeded_rng(2024);
    let mut counts = [0u64; 26];
    let draws = 100_000;
    for _ in 0..draws {
        for l in pick_decoys(&mut rng, correct, 2).unwrap() {
            counts[l.index()] += 1;
        }
    }
    assert_eq!(counts[correct.index()], 0);

    let expected = draws as f64 * 2.0 / 25.0;
    let chi2: f64 = Letter::all()
        .filter(|&l| l != correct)
        .map(|l| {
            let d = counts[l.index()] as f64 - expected;
            d * d / expected
        })
        .sum();
    let critical = ChiSquared::new(24.0).unwrap().inverse_cdf(0.999);
    assert!(chi2 < critical, "chi2 {chi2} >= {critical}");
}
