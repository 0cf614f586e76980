use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{ComplexMatrix, C64, ZERO};

/// Haar-distributed unitary from the QR (Gram–Schmidt) of a complex Ginibre matrix.
pub fn haar_random_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> ComplexMatrix {
    let mut cols: Vec<Vec<C64>> = (0..n)
        .map(|_| {
            (0..n)
                .map(|_| {
                    let re: f64 = rng.sample(StandardNormal);
                    let im: f64 = rng.sample(StandardNormal);
                    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
                })
                .collect()
        })
        .collect();
    for j in 0..n {
        // Two passes of modified Gram–Schmidt.
        for _ in 0..2 {
            let (done, rest) = cols.split_at_mut(j);
            let cur = &mut rest[0];
            for prev in done.iter() {
                let proj: C64 = prev.iter().zip(cur.iter()).map(|(a, b)| a.conj() * b).sum();
                for (c, v) in cur.iter_mut().zip(prev) {
                    *c -= proj * v;
                }
            }
        }
        let norm = cols[j].iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        for z in cols[j].iter_mut() {
            *z /= norm;
        }
    }
    let mut u = ComplexMatrix::zeros(n);
    for (c, col) in cols.iter().enumerate() {
        for (r, &z) in col.iter().enumerate() {
            u[(r, c)] = if z.is_nan() { ZERO } else { z };
        }
    }
    u
}

/// Deterministic Haar sample in SU(N): a Haar unitary divided by a principal
/// N-th root of its determinant.
pub fn haar_random_special_unitary(n: usize, seed: u64) -> ComplexMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let u = haar_random_unitary(n, &mut rng);
    let phase = u.det().arg() / n as f64;
    u.scale(C64::from_polar(1.0, -phase))
}
