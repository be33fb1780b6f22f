use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use overlapq::semi::{self, mm1_diff_density, mm1_wait_tail, TailFunction};
use overlapq::QueueParams;

fn random_params(rng: &mut ChaCha8Rng) -> QueueParams {
    let mu = rng.random_range(0.5..2.0);
    let rho = rng.random_range(0.05..0.95);
    QueueParams::new(rho * mu, mu).unwrap()
}

#[test]
fn numeric_tails_are_ordered_and_monotone() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..20 {
        let q = random_params(&mut rng);
        let wait = mm1_wait_tail(q);
        let diff = mm1_diff_density(q);
        let mut prev = (1.0, 1.0);
        for j in 0..40 {
            let t = j as f64 * 0.25 / q.gap();
            let hi = semi::max_tail_numeric(&wait, &diff, q.prob_service_shorter(), t).unwrap();
            let lo = semi::min_tail_numeric(&wait, &diff, q.prob_service_longer(), t).unwrap();
            assert!(lo <= hi + 1e-12);
            assert!(hi <= prev.0 + 1e-12 && lo <= prev.1 + 1e-12);
            assert!((0.0..=1.0).contains(&hi) && (0.0..=1.0).contains(&lo));
            prev = (hi, lo);
        }
    }
}

#[test]
fn moments_from_numeric_tails() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..5 {
        let q = random_params(&mut rng);
        let wait = mm1_wait_tail(q);
        let diff = mm1_diff_density(q);
        let max_tail = semi::max_tail_function(&wait, &diff, q.prob_service_shorter());
        let min_tail = semi::min_tail_function(&wait, &diff, q.prob_service_longer());
        for p in 1..=3 {
            let m = semi::tail_to_moments(&max_tail, p).unwrap();
            let exact = q.max_moment(p).unwrap();
            assert!(((m - exact) / exact).abs() < 1e-6, "max p={p}: {m} vs {exact}");
            let m = semi::tail_to_moments(&min_tail, p).unwrap();
            let exact = q.min_moment(p).unwrap();
            assert!(((m - exact) / exact).abs() < 1e-6, "min p={p}: {m} vs {exact}");
        }
    }
}

#[test]
fn tail_to_moments_of_plain_exponential() {
    let tail = TailFunction::new(|t: f64| (-2.0 * t).exp(), 1.0).with_decay(2.0);
    assert!((semi::tail_to_moments(&tail, 1).unwrap() - 0.5).abs() < 1e-8);
    assert!((semi::tail_to_moments(&tail, 2).unwrap() - 0.5).abs() < 1e-8);
    assert!((semi::tail_to_moments(&tail, 3).unwrap() - 0.75).abs() < 1e-8);
    assert!(semi::tail_to_moments(&tail, 4).is_err());
}

#[test]
fn inconsistent_split_probability_is_rejected() {
    let q = QueueParams::new(0.5, 1.0).unwrap();
    let wait = mm1_wait_tail(q);
    let diff = mm1_diff_density(q);
    assert!(semi::max_tail_numeric(&wait, &diff, 0.2, 1.0).is_err());
    assert!(semi::min_tail_numeric(&wait, &diff, 0.9, 1.0).is_err());
}
