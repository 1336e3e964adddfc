use mpc_bandit::protocols::{
    argmax_one_hot, count_wraps, public_div, run_compute, sec_add, sec_add_public, sec_dot,
    sec_ge, sec_matmul, sec_matvec, sec_mul, sec_reciprocal, sec_square, Party, ReciprocalConfig,
};
use mpc_bandit::ring::{FixedPointConfig, RingElement};
use mpc_bandit::sharing::{
    a2b, b2a, b2a_single_bit, reconstruct, reconstruct_binary, share_arithmetic, share_binary,
    ArithmeticShare, BinaryShare,
};
use mpc_bandit::tensor::{RingTensor, Shape};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

fn fx() -> FixedPointConfig {
    FixedPointConfig::default()
}

fn shared(xs: &[f64], shape: Shape, parties: usize, seed: u64) -> Vec<ArithmeticShare> {
    let t = RingTensor::encode(shape, xs, fx()).unwrap();
    share_arithmetic(&t, parties, &mut ChaCha20Rng::seed_from_u64(seed)).unwrap()
}

fn open(shares: Vec<ArithmeticShare>) -> Vec<f64> {
    reconstruct(&shares).unwrap().decode(fx())
}

fn open_int(shares: Vec<ArithmeticShare>) -> Vec<i64> {
    reconstruct(&shares).unwrap().data().iter().map(|e| e.signed()).collect()
}

/// Runs `f` on two parties, returning results and the rounds it used.
fn two<T: Send>(
    seed: u64,
    f: impl Fn(&mut Party) -> mpc_bandit::Result<T> + Sync,
) -> (Vec<T>, u64) {
    let out = run_compute(2, seed, fx(), |p| {
        let before = p.rounds();
        let r = f(p)?;
        Ok((r, p.rounds() - before))
    })
    .unwrap();
    let rounds = out.results[0].1;
    (out.results.into_iter().map(|(r, _)| r).collect(), rounds)
}

#[test]
fn addition_is_free() {
    let x = shared(&[2.0], Shape::scalar(), 2, 1);
    let y = shared(&[3.0], Shape::scalar(), 2, 2);
    let (res, rounds) = two(1, |p| {
        let s = sec_add(&x[p.id()], &y[p.id()])?;
        sec_add_public(&s, &RingTensor::zeros(Shape::scalar()))
    });
    assert_eq!(rounds, 0);
    assert_eq!(open(res), vec![5.0]);
}

#[test]
fn multiplication_examples_and_rounds() {
    let x = shared(&[2.5, 0.7], Shape::vector(2), 2, 3);
    let y = shared(&[-1.5, 1.0], Shape::vector(2), 2, 4);
    let (res, rounds) = two(2, |p| sec_mul(p, &x[p.id()], &y[p.id()]));
    assert_eq!(rounds, 2);
    let v = open(res);
    assert!((v[0] + 3.75).abs() <= 2f64.powi(-18));
    assert!((v[1] - 0.7).abs() <= 2f64.powi(-18));
}

#[test]
fn multiplication_three_parties() {
    let mut rng = ChaCha20Rng::seed_from_u64(5);
    let a: Vec<f64> = (0..200).map(|_| rng.random_range(-10.0..10.0)).collect();
    let b: Vec<f64> = (0..200).map(|_| rng.random_range(-10.0..10.0)).collect();
    let x = shared(&a, Shape::vector(200), 3, 6);
    let y = shared(&b, Shape::vector(200), 3, 7);
    let out = run_compute(3, 3, fx(), |p| sec_mul(p, &x[p.id()], &y[p.id()])).unwrap();
    for ((got, x), y) in open(out.results).iter().zip(&a).zip(&b) {
        assert!((got - x * y).abs() < 2f64.powi(-17), "{got} vs {}", x * y);
    }
}

#[test]
fn square_matches_mul() {
    let mut rng = ChaCha20Rng::seed_from_u64(8);
    let a: Vec<f64> = (0..1000).map(|_| rng.random_range(-20.0..20.0)).collect();
    let mut with_edges = a.clone();
    with_edges[0] = 0.0;
    with_edges[1] = 3.0;
    let x = shared(&with_edges, Shape::vector(1000), 2, 9);
    let (res, rounds) = two(4, |p| {
        let s = sec_square(p, &x[p.id()])?;
        let m = sec_mul(p, &x[p.id()], &x[p.id()])?;
        Ok((s, m))
    });
    assert_eq!(rounds, 4);
    let (sq, mu): (Vec<_>, Vec<_>) = res.into_iter().unzip();
    let (sq, mu) = (open(sq), open(mu));
    assert_eq!(sq[0], 0.0);
    assert!((sq[1] - 9.0).abs() <= 2f64.powi(-17));
    for (s, m) in sq.iter().zip(&mu) {
        assert!((s - m).abs() <= 2f64.powi(-17));
    }
}

#[test]
fn matmul_identity_zero_and_random() {
    let mut rng = ChaCha20Rng::seed_from_u64(10);
    let d = 20;
    let m: Vec<f64> = (0..d * d).map(|_| rng.random_range(-1.0..1.0)).collect();
    let v: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
    let mut ident = vec![0.0; d * d];
    for i in 0..d {
        ident[i * d + i] = 1.0;
    }
    let sm = shared(&m, Shape::matrix(d, d), 2, 11);
    let si = shared(&ident, Shape::matrix(d, d), 2, 12);
    let sz = shared(&vec![0.0; d * d], Shape::matrix(d, d), 2, 13);
    let sv = shared(&v, Shape::vector(d), 2, 14);
    let (res, rounds) = two(5, |p| {
        let me = p.id();
        let a = sec_matvec(p, &sm[me], &sv[me])?;
        let b = sec_matvec(p, &si[me], &sv[me])?;
        let c = sec_matvec(p, &sz[me], &sv[me])?;
        let dot = sec_dot(p, &sv[me], &sv[me])?;
        let mm = sec_matmul(p, &sm[me], &si[me])?;
        Ok(vec![a, b, c, dot, mm])
    });
    assert_eq!(rounds, 10);
    let mut cols: Vec<Vec<ArithmeticShare>> = vec![Vec::new(); 5];
    for per_party in res {
        for (k, s) in per_party.into_iter().enumerate() {
            cols[k].push(s);
        }
    }
    let mut it = cols.into_iter().map(open);
    let (mv, iv, zv, dot, mm) = (
        it.next().unwrap(),
        it.next().unwrap(),
        it.next().unwrap(),
        it.next().unwrap(),
        it.next().unwrap(),
    );
    for i in 0..d {
        let want: f64 = (0..d).map(|j| m[i * d + j] * v[j]).sum();
        assert!((mv[i] - want).abs() < 1e-3);
        assert!((iv[i] - v[i]).abs() < 2f64.powi(-18));
        assert_eq!(zv[i], 0.0);
    }
    let want_dot: f64 = v.iter().map(|x| x * x).sum();
    assert!((dot[0] - want_dot).abs() < 1e-4);
    for (a, b) in mm.iter().zip(&m) {
        assert!((a - b).abs() < 2f64.powi(-18));
    }
}

#[test]
fn count_wraps_examples() {
    let cases: [([u64; 2], u64); 2] = [([3, 4], 0), ([u64::MAX, 2], 1)];
    for (shares, theta) in cases {
        let (res, rounds) = two(6, move |p| count_wraps(p, &[RingElement(shares[p.id()])]));
        assert_eq!(rounds, 1);
        assert_eq!((res[0][0] + res[1][0]).0, theta);
    }
}

#[test]
fn count_wraps_error_rate_small_values() {
    let n = 100_000;
    let mut rng = ChaCha20Rng::seed_from_u64(15);
    let secrets: Vec<i64> = (0..n).map(|_| rng.random_range(-(1i64 << 40)..(1i64 << 40))).collect();
    let t = RingTensor::vector(secrets.iter().map(|&s| RingElement::from_i64(s)).collect());
    let sh = share_arithmetic(&t, 2, &mut rng).unwrap();
    let (res, _) = two(7, |p| count_wraps(p, sh[p.id()].data()));
    let mut errors = 0;
    for i in 0..n {
        let sum = sh[0].data()[i].0 as i128 + sh[1].data()[i].0 as i128;
        let exact = ((sum - secrets[i] as i128) >> 64) as u64;
        if (res[0][i] + res[1][i]).0 != exact {
            errors += 1;
        }
    }
    let bound = 10.0 * (1u64 << 40) as f64 / 2f64.powi(64) * n as f64;
    assert!((errors as f64) <= bound.max(1.0), "{errors} errors");
}

#[test]
fn public_division_exact_cases() {
    let x = shared(&[8.0, -8.0, 0.0], Shape::vector(3), 2, 16);
    let (res, rounds) = two(8, |p| public_div(p, &x[p.id()], 2));
    assert_eq!(rounds, 1);
    assert_eq!(open(res), vec![2.0, -2.0, 0.0]);
    // B * B truncated by L gives one
    let raw = RingTensor::vector(vec![RingElement(1u64 << 40)]);
    let sh = share_arithmetic(&raw, 2, &mut ChaCha20Rng::seed_from_u64(17)).unwrap();
    let (res, _) = two(9, |p| public_div(p, &sh[p.id()], 20));
    assert_eq!(open(res), vec![1.0]);
}

#[test]
fn comparison_examples_and_rounds() {
    let x = shared(&[5.0, 3.0, 2.0, -1.0, 0.0], Shape::vector(5), 2, 18);
    let y = shared(&[3.0, 3.0, 5.0, -2.0, -0.0], Shape::vector(5), 2, 19);
    let (res, rounds) = two(10, |p| sec_ge(p, &x[p.id()], &y[p.id()]));
    assert_eq!(rounds, 7);
    assert_eq!(open_int(res), vec![1, 1, 0, 1, 1]);
}

#[test]
fn comparison_random_many_parties() {
    for parties in [2, 3, 4] {
        let mut rng = ChaCha20Rng::seed_from_u64(20 + parties as u64);
        let a: Vec<f64> = (0..300).map(|_| rng.random_range(-100.0..100.0)).collect();
        let b: Vec<f64> = (0..300).map(|_| rng.random_range(-100.0..100.0)).collect();
        let x = shared(&a, Shape::vector(300), parties, 21);
        let y = shared(&b, Shape::vector(300), parties, 22);
        let out = run_compute(parties, 11, fx(), |p| sec_ge(p, &x[p.id()], &y[p.id()])).unwrap();
        let got = open_int(out.results);
        for i in 0..300 {
            assert_eq!(got[i], (a[i] >= b[i]) as i64, "parties {parties} i {i}");
        }
    }
}

#[test]
fn a2b_b2a_round_trips() {
    let mut rng = ChaCha20Rng::seed_from_u64(23);
    let mut words: Vec<u64> = (0..1000).map(|_| rng.random()).collect();
    words[0] = 0;
    let t = RingTensor::from_u64(Shape::vector(1000), words.clone()).unwrap();
    for parties in [2, 3] {
        let sh = share_arithmetic(&t, parties, &mut rng).unwrap();
        let out = run_compute(parties, 12, fx(), |p| {
            let before = p.rounds();
            let b = a2b(p, &sh[p.id()])?;
            let a2b_rounds = p.rounds() - before;
            let back = b2a(p, &b)?;
            Ok((b, back, a2b_rounds))
        })
        .unwrap();
        if parties == 2 {
            assert_eq!(out.results[0].2, 7);
        }
        let bins: Vec<BinaryShare> = out.results.iter().map(|r| r.0.clone()).collect();
        assert_eq!(reconstruct_binary(&bins).unwrap(), words);
        let backs: Vec<ArithmeticShare> = out.results.into_iter().map(|r| r.1).collect();
        assert_eq!(reconstruct(&backs).unwrap().to_u64(), words);
    }
}

#[test]
fn b2a_examples() {
    let mut rng = ChaCha20Rng::seed_from_u64(24);
    let vals = vec![0u64, 1 << 5, 1];
    let sh = share_binary(&vals, Shape::vector(3), 2, &mut rng).unwrap();
    let (res, rounds) = two(13, |p| b2a(p, &sh[p.id()]));
    assert_eq!(rounds, 1);
    assert_eq!(reconstruct(&res).unwrap().to_u64(), vals);

    let bits: Vec<u64> = (0..10_000).map(|_| rng.random_range(0..2)).collect();
    let sh = share_binary(&bits, Shape::vector(bits.len()), 2, &mut rng).unwrap();
    let masked: Vec<BinaryShare> = sh
        .into_iter()
        .map(|s| BinaryShare::vector(s.party, s.bits.iter().map(|b| b & 1).collect()))
        .collect();
    let (res, _) = two(14, |p| b2a_single_bit(p, &masked[p.id()]));
    assert_eq!(reconstruct(&res).unwrap().to_u64(), bits);
}

#[test]
fn argmax_examples() {
    let x = shared(&[1.0, 3.0, 2.0], Shape::vector(3), 2, 25);
    let g = share_arithmetic(
        &RingTensor::from_u64(Shape::vector(3), vec![2, 3, 1]).unwrap(),
        2,
        &mut ChaCha20Rng::seed_from_u64(26),
    )
    .unwrap();
    let (res, rounds) = two(15, |p| {
        let me = p.id();
        argmax_one_hot(p, x[me].data(), g[me].data())
    });
    assert_eq!(rounds, 2 * (7 + 2) + 1);
    let open: Vec<i64> = (0..3).map(|i| (res[0][i] + res[1][i]).signed()).collect();
    assert_eq!(open, vec![0, 1, 0]);

    let one = shared(&[0.4], Shape::vector(1), 2, 27);
    let (res, rounds) = two(16, |p| argmax_one_hot(p, one[p.id()].data(), &[p.constant(RingElement(1))]));
    assert_eq!(rounds, 0);
    assert_eq!((res[0][0] + res[1][0]).0, 1);
}

#[test]
fn reciprocal_examples_and_rounds() {
    let x = shared(&[1.0, 4.0, 10.0, 2.5], Shape::vector(4), 2, 28);
    let (res, rounds) = two(17, |p| sec_reciprocal(p, &x[p.id()], &ReciprocalConfig::default()));
    assert_eq!(rounds, 30);
    let v = open(res);
    for (got, x) in v.iter().zip([1.0, 4.0, 10.0, 2.5]) {
        assert!((got * x - 1.0).abs() < 1e-3, "1/{x} = {got}");
    }
}
