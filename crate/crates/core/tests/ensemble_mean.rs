use num_bigint::BigInt;
use num_rational::BigRational;
use onset_core::ensemble::{average_probabilities, classify};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn exact(x: f64) -> BigRational {
    BigRational::from_float(x).unwrap()
}

fn abs(x: BigRational) -> BigRational {
    if x < BigRational::from_integer(BigInt::from(0)) {
        -x
    } else {
        x
    }
}

fn exact_mean(ps: &[f64]) -> BigRational {
    let sum = ps.iter().fold(BigRational::from_integer(BigInt::from(0)), |acc, &p| acc + exact(p));
    sum / BigRational::from_integer(BigInt::from(ps.len()))
}

/// `got` is the float nearest the exact mean, ties to an even mantissa.
fn assert_correctly_rounded(ps: &[f64], got: f64) {
    let target = exact_mean(ps);
    let err = abs(exact(got) - &target);
    for neighbour in [got.next_down(), got.next_up()] {
        if !(0.0..=1.0).contains(&neighbour) {
            continue;
        }
        let other = abs(exact(neighbour) - &target);
        assert!(err <= other, "{got} is not the nearest float to the mean of {ps:?}");
        if err == other {
            assert_eq!(got.to_bits() & 1, 0, "tie must round to even");
        }
    }
}

fn random_probability(rng: &mut ChaCha8Rng) -> f64 {
    match rng.random_range(0..4) {
        0 => rng.random::<f64>(),
        1 => rng.random_range(0..=20) as f64 / 20.0,
        2 => rng.random::<f64>() * 1e-6,
        _ => 1.0 - rng.random::<f64>() * 1e-9,
    }
}

#[test]
fn mean_is_exact_and_order_free() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..1000 {
        let mut ps: Vec<f64> = (0..5).map(|_| random_probability(&mut rng)).collect();
        let p_bar = average_probabilities(&ps).unwrap();
        assert_correctly_rounded(&ps, p_bar);
        let lo = ps.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = ps.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        assert!(lo <= p_bar && p_bar <= hi);
        ps.shuffle(&mut rng);
        assert_eq!(average_probabilities(&ps).unwrap().to_bits(), p_bar.to_bits());
    }
}

#[test]
fn identical_members_reproduce_their_output() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    for _ in 0..1000 {
        let p = random_probability(&mut rng);
        assert_eq!(average_probabilities(&[p; 5]).unwrap().to_bits(), p.to_bits());
    }
}

#[test]
fn flagged_set_grows_with_the_boundary() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let ps: Vec<f64> = (0..300).map(|_| rng.random::<f64>()).collect();
    let mut previous = 0;
    for i in 0..=100 {
        let t = i as f64 / 100.0;
        let flagged: Vec<bool> = ps.iter().map(|&p| classify(p, t)).collect();
        let count = flagged.iter().filter(|&&f| f).count();
        assert!(count >= previous);
        if i > 0 {
            let before: Vec<bool> = ps.iter().map(|&p| classify(p, (i - 1) as f64 / 100.0)).collect();
            assert!(before.iter().zip(&flagged).all(|(&b, &a)| !b || a));
        }
        previous = count;
    }
    assert_eq!(previous, ps.len());
}
