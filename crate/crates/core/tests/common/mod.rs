//! Random generators shared by the integration tests.
#![allow(dead_code)]

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use superchan::{CMatrix64, DensityMatrix64};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rng: &mut impl Rng, rows: usize, cols: usize) -> CMatrix64 {
    CMatrix64::from_fn(rows, cols, |_, _| Complex::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
}

pub fn random_density(rng: &mut impl Rng, n: usize) -> DensityMatrix64 {
    let g = gaussian(rng, n, n);
    let r = &g * &g.adjoint();
    let t = r.trace().re;
    DensityMatrix64::new(r.scale(1.0 / t)).unwrap()
}

pub fn random_ket(rng: &mut impl Rng, n: usize) -> Vec<Complex<f64>> {
    let g = gaussian(rng, n, 1);
    let norm = g.frobenius_norm();
    g.scale(1.0 / norm).into_data()
}

pub fn random_pure(rng: &mut impl Rng, n: usize) -> DensityMatrix64 {
    DensityMatrix64::pure(&random_ket(rng, n)).unwrap()
}

/// Haar-random unitary from the QR decomposition of a Gaussian matrix.
pub fn random_unitary(rng: &mut impl Rng, n: usize) -> CMatrix64 {
    let g = gaussian(rng, n, n);
    let mut cols: Vec<Vec<Complex<f64>>> = Vec::with_capacity(n);
    for j in 0..n {
        let mut v: Vec<Complex<f64>> = (0..n).map(|i| g[(i, j)]).collect();
        for u in &cols {
            let proj: Complex<f64> = u.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
            for (x, y) in v.iter_mut().zip(u) {
                *x -= proj * y;
            }
        }
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        v.iter_mut().for_each(|z| *z /= norm);
        cols.push(v);
    }
    CMatrix64::from_fn(n, n, |i, j| cols[j][i])
}
