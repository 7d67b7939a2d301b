#![allow(dead_code)]

use cuntz_core::matrix::{ComplexMatrix, Permutation, UnitaryMatrix, C64};
use cuntz_core::sequence::{Sequence, TailRule, UnitarySequence};
use cuntz_core::words::{Multiindex, WordPolynomial};
use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Haar-distributed unitary: QR of a complex Gaussian matrix with the
/// phases of R's diagonal moved into Q.
pub fn random_unitary(dim: usize, rng: &mut ChaCha8Rng) -> UnitaryMatrix {
    let g = DMatrix::<C64>::from_fn(dim, dim, |_, _| {
        C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    let qr = g.qr();
    let (q, r) = (qr.q(), qr.r());
    let m = ComplexMatrix::from_fn(dim, |i, j| {
        let d = r[(j, j)];
        q[(i, j)] * (d / d.norm())
    });
    UnitaryMatrix::new(m).expect("QR factor is unitary")
}

pub fn random_permutation(m: usize, rng: &mut ChaCha8Rng) -> Permutation {
    let mut images: Vec<usize> = (0..m).collect();
    images.shuffle(rng);
    Permutation::new(images).unwrap()
}

pub fn constant_tail_sequence(n: usize, prefix_len: usize, rng: &mut ChaCha8Rng) -> UnitarySequence {
    let prefix = (0..prefix_len).map(|_| random_unitary(n, rng)).collect();
    Sequence::new(n, prefix, TailRule::Constant(random_unitary(n, rng))).unwrap()
}

/// Random sequence with a periodic tail, fully populated for `depth` factors.
pub fn periodic_sequence(n: usize, rng: &mut ChaCha8Rng) -> UnitarySequence {
    let prefix_len = rng.gen_range(0..=2);
    let period = rng.gen_range(1..=3);
    let prefix = (0..prefix_len).map(|_| random_unitary(n, rng)).collect();
    let cycle = (0..period).map(|_| random_unitary(n, rng)).collect();
    Sequence::new(n, prefix, TailRule::Periodic(cycle)).unwrap()
}

/// Small Gaussian integers keep products exact.
pub fn gaussian_int(rng: &mut ChaCha8Rng) -> C64 {
    C64::new(rng.gen_range(-2..=2) as f64, rng.gen_range(-2..=2) as f64)
}

pub fn random_word(n: usize, len: usize, rng: &mut ChaCha8Rng) -> Multiindex {
    Multiindex::new((0..len).map(|_| rng.gen_range(0..n) as u8).collect())
}

/// Polynomial with up to `terms` monomials of length ≤ `max_len`.
pub fn random_polynomial(
    n: usize,
    terms: usize,
    max_len: usize,
    balanced: bool,
    rng: &mut ChaCha8Rng,
) -> WordPolynomial {
    let mut x = WordPolynomial::zero(n);
    for _ in 0..terms {
        let la = rng.gen_range(0..=max_len);
        let lb = if balanced { la } else { rng.gen_range(0..=max_len) };
        let m = WordPolynomial::monomial(n, random_word(n, la, rng), random_word(n, lb, rng), gaussian_int(rng))
            .unwrap();
        x = x.add(&m).unwrap();
    }
    x
}

pub fn random_matrix(dim: usize, rng: &mut ChaCha8Rng) -> ComplexMatrix {
    ComplexMatrix::from_fn(dim, |_, _| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
}

/// Random unitary as a word polynomial at `level`.
pub fn random_unitary_word(n: usize, level: usize, rng: &mut ChaCha8Rng) -> WordPolynomial {
    let u = random_unitary(n.pow(level as u32), rng);
    WordPolynomial::from_matrix(n, level, u.matrix()).unwrap()
}

/// All matrix units `S_α S_β*` with `|α| = |β| = k`.
pub fn matrix_units(n: usize, k: usize) -> Vec<WordPolynomial> {
    let ws: Vec<Multiindex> = cuntz_core::words::words(n, k).collect();
    let mut out = Vec::new();
    for a in &ws {
        for b in &ws {
            out.push(WordPolynomial::unit(n, a, b));
        }
    }
    out
}
