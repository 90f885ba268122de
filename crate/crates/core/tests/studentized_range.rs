use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};
use vtc_core::eval::{studentized_range_cdf, StudentizedRange};

#[test]
fn matches_monte_carlo() {
    let mut rng = ChaCha8Rng::seed_from_u64(60);
    let chi = ChiSquared::new(60.0).unwrap();
    let draws = 1_000_000;
    let mut exceed = 0usize;
    for _ in 0..draws {
        let z: [f64; 3] = std::array::from_fn(|_| rng.sample(StandardNormal));
        let range =
            z.iter().copied().fold(f64::MIN, f64::max) - z.iter().copied().fold(f64::MAX, f64::min);
        let s = (Distribution::<f64>::sample(&chi, &mut rng) / 60.0).sqrt();
        if range / s > 3.40 {
            exceed += 1;
        }
    }
    let mc = exceed as f64 / draws as f64;
    let quad = 1.0 - studentized_range_cdf(3.40, 3, 60.0);
    // Monte Carlo standard error is about 2.2e-4
    assert!((mc - quad).abs() < 1.5e-3, "mc {mc} vs quadrature {quad}");
}

#[test]
fn default_grid_agrees_with_a_dense_reference() {
    let dense = StudentizedRange::new(256, 256);
    let default = StudentizedRange::default();
    let mut worst = 0.0f64;
    for k in [2, 3, 5, 10, 20] {
        for df in [2.0, 5.0, 10.0, 30.0, 120.0, 1000.0, f64::INFINITY] {
            for q in [0.5, 1.0, 2.0, 3.0, 4.0, 5.0, 6.5, 8.0] {
                worst = worst.max((dense.cdf(q, k, df) - default.cdf(q, k, df)).abs());
            }
        }
    }
    assert!(worst < 1e-4, "worst deviation {worst}");
}
