use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use rfi_core::{confidence_interval, paired_t_one_sided, sign_flip_exact};

#[test]
fn t_interval_coverage() {
    let mut rng = ChaCha20Rng::seed_from_u64(1);
    let trials = 1000;
    let mut covered = 0;
    for _ in 0..trials {
        let d: Vec<f64> = (0..10_000).map(|_| StandardNormal.sample(&mut rng)).collect();
        let (lo, hi) = confidence_interval(&d, 0.95).unwrap();
        if lo <= 0.0 && 0.0 <= hi {
            covered += 1;
        }
    }
    let rate = covered as f64 / trials as f64;
    let se = (0.95 * 0.05 / trials as f64).sqrt();
    assert!((rate - 0.95).abs() < 3.0 * se, "coverage {rate}");
}

#[test]
fn twelve_positive_sign_flip_enumeration() {
    // by enumeration: only the all-plus sign vector reaches the observed sum
    let d = [0.3, 1.0, 2.0, 0.01, 5.0, 0.7, 0.7, 1.1, 0.2, 3.3, 0.05, 9.0];
    let mut hits = 0;
    for mask in 0u32..4096 {
        let s: f64 = d.iter().enumerate().map(|(i, x)| if mask >> i & 1 == 1 { -x } else { *x }).sum();
        if s >= d.iter().sum::<f64>() {
            hits += 1;
        }
    }
    assert_eq!(hits, 1);
    assert_eq!(sign_flip_exact(&d, 4096, 0, 0.01).unwrap().p_value, 1.0 / 4096.0);
}

#[test]
fn null_rejection_rate_near_nominal() {
    let mut rng = ChaCha20Rng::seed_from_u64(2);
    let trials = 10_000;
    let rejections = (0..trials)
        .filter(|_| {
            let d: Vec<f64> = (0..50).map(|_| StandardNormal.sample(&mut rng)).collect();
            paired_t_one_sided(&d, 0.01).unwrap().rejects()
        })
        .count();
    let rate = rejections as f64 / trials as f64;
    assert!(rate > 0.005 && rate < 0.02, "{rate}");
}
