//! Dense complex matrix kernel.
//!
//! Everything here is a pure function of its inputs. Vectorization is
//! column stacking throughout, so ⟨⟨A|B⟩⟩ = Tr[A†B].

mod eig;
mod json;
mod matrix;
pub mod real;
mod subsystem;

pub use eig::{herm_eig, min_eigenvalue, project_psd, psd_sqrt, trace_norm, uhlmann_fidelity, HermEig};
pub use matrix::{c, CMatrix};
pub use subsystem::{devectorize, partial_trace, vectorize, SubsystemShape};

/// Standard Kronecker product.
pub fn kron<T: crate::Scalar>(a: &CMatrix<T>, b: &CMatrix<T>) -> CMatrix<T> {
    a.kron(b)
}

#[cfg(test)]
pub(crate) mod testutil {
    use num_complex::Complex;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    use super::CMatrix;

    pub fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    pub fn gaussian(rng: &mut impl Rng, rows: usize, cols: usize) -> CMatrix<f64> {
        CMatrix::from_fn(rows, cols, |_, _| Complex::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
    }

    pub fn random_hermitian(rng: &mut impl Rng, n: usize) -> CMatrix<f64> {
        gaussian(rng, n, n).hermitian_part()
    }

    pub fn random_density(rng: &mut impl Rng, n: usize) -> CMatrix<f64> {
        let g = gaussian(rng, n, n);
        let r = &g * &g.adjoint();
        let t = r.trace().re;
        r.scale(1.0 / t)
    }

    pub fn random_pure(rng: &mut impl Rng, n: usize) -> CMatrix<f64> {
        let g = gaussian(rng, n, 1);
        let norm = g.frobenius_norm();
        CMatrix::ket_bra(g.scale(1.0 / norm).data())
    }

    /// Haar-random unitary via Gram–Schmidt on a Gaussian matrix.
    pub fn random_unitary(rng: &mut impl Rng, n: usize) -> CMatrix<f64> {
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
        CMatrix::from_fn(n, n, |i, j| cols[j][i])
    }
}

#[cfg(test)]
mod tests {
    use approx::assert_abs_diff_eq;
    use num_complex::Complex;
    use proptest::prelude::*;

    use super::testutil::*;
    use super::*;

    type M = CMatrix<f64>;

    fn sz() -> M {
        M::from_diag(&[1.0, -1.0])
    }

    #[test]
    fn kron_examples() {
        let i2 = M::identity(2);
        assert_eq!(kron(&i2, &i2), M::identity(4));
        assert_eq!(kron(&sz(), &i2), M::from_diag(&[1.0, 1.0, -1.0, -1.0]));
        let h = M::unit(2, 0, 0);
        let v = M::unit(2, 1, 1);
        // |HV⟩ is basis index 1
        assert_eq!(kron(&h, &v), M::unit(4, 1, 1));
    }

    #[test]
    fn partial_trace_examples() {
        let mut r = rng(1);
        let rho = random_density(&mut r, 2);
        let sigma = random_hermitian(&mut r, 2);
        let shape = SubsystemShape::new([2, 2]).unwrap();
        let out = partial_trace(&kron(&rho, &sigma), &shape, &[1]).unwrap();
        assert!(out.distance(&rho.scale_c(sigma.trace())) < 1e-14);

        let s = std::f64::consts::FRAC_1_SQRT_2;
        let bell = M::ket_bra(&[c(s, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(s, 0.0)]);
        let reduced = partial_trace(&bell, &shape, &[0]).unwrap();
        assert!(reduced.distance(&M::identity(2).scale(0.5)) < 1e-15);

        let a = random_hermitian(&mut r, 8);
        let all = partial_trace(&a, &SubsystemShape::new([2, 2, 2]).unwrap(), &[0, 1, 2]).unwrap();
        assert_eq!((all.rows(), all.cols()), (1, 1));
        assert!((all[(0, 0)] - a.trace()).norm() < 1e-13);
    }

    #[test]
    fn partial_trace_middle_factor() {
        // Tr_2[A ⊗ B ⊗ C] = Tr[B] · A ⊗ C
        let mut r = rng(2);
        let a = gaussian(&mut r, 2, 2);
        let b = gaussian(&mut r, 3, 3);
        let cc = gaussian(&mut r, 2, 2);
        let full = kron(&kron(&a, &b), &cc);
        let out = partial_trace(&full, &SubsystemShape::new([2, 3, 2]).unwrap(), &[1]).unwrap();
        assert!(out.distance(&kron(&a, &cc).scale_c(b.trace())) < 1e-12);
    }

    #[test]
    fn partial_trace_shape_errors() {
        let a = M::identity(4);
        assert!(partial_trace(&a, &SubsystemShape::new([2, 3]).unwrap(), &[0]).is_err());
        assert!(partial_trace(&a, &SubsystemShape::new([2, 2]).unwrap(), &[2]).is_err());
        assert!(partial_trace(&M::zeros(2, 4), &SubsystemShape::new([2]).unwrap(), &[0]).is_err());
        assert!(SubsystemShape::new([2, 0]).is_err());
    }

    #[test]
    fn vectorize_examples() {
        let v = vectorize(&M::identity(2));
        assert_eq!(v.data(), &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
        // |0⟩⟨1| sits at row 0, column 1 → column-stacked position 1·2 + 0
        let e01 = vectorize(&M::unit(2, 0, 1));
        let pos: Vec<usize> = (0..4).filter(|&k| e01.data()[k].norm() > 0.0).collect();
        assert_eq!(pos, vec![2]);
        let a = gaussian(&mut rng(3), 3, 3);
        assert_eq!(devectorize(&vectorize(&a)).unwrap(), a);
        assert!(devectorize(&M::zeros(5, 1)).is_err());
        assert!(devectorize(&M::zeros(4, 2)).is_err());
    }

    #[test]
    fn herm_eig_examples() {
        let e = herm_eig(&sz()).unwrap();
        assert_eq!(e.values, vec![-1.0, 1.0]);
        assert_eq!(herm_eig(&M::identity(4)).unwrap().values, vec![1.0; 4]);
        let mut r = rng(4);
        for n in [2, 5, 8, 16] {
            let h = random_hermitian(&mut r, n);
            let e = herm_eig(&h).unwrap();
            assert!(e.reconstruct().distance(&h) <= 1e-10 * h.frobenius_norm());
            assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
            assert!(e.vectors.unitarity_defect() < 1e-10);
        }
    }

    #[test]
    fn herm_eig_rejects_non_hermitian() {
        let a = M::unit(2, 0, 1);
        assert!(matches!(herm_eig(&a), Err(crate::Error::NonHermitian { .. })));
    }

    #[test]
    fn herm_eig_handles_degenerate_and_complex() {
        // σy has complex eigenvectors
        let sy = M::new(2, 2, vec![c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0)]).unwrap();
        let e = herm_eig(&sy).unwrap();
        assert_abs_diff_eq!(e.values[0], -1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(e.values[1], 1.0, epsilon = 1e-14);
        assert!(e.reconstruct().distance(&sy) < 1e-14);
        let zero = herm_eig(&M::zeros(3, 3)).unwrap();
        assert_eq!(zero.values, vec![0.0; 3]);
    }

    #[test]
    fn psd_function_examples() {
        assert_abs_diff_eq!(trace_norm(&sz()).unwrap(), 2.0, epsilon = 1e-14);
        let four = M::identity(2).scale(4.0);
        assert!(psd_sqrt(&four).unwrap().distance(&M::identity(2).scale(2.0)) < 1e-14);
        let clipped = project_psd(&M::from_diag(&[1.0, -0.5])).unwrap();
        assert!(clipped.distance(&M::from_diag(&[1.0, 0.0])) < 1e-15);
        assert!(matches!(psd_sqrt(&sz()), Err(crate::Error::NotPsd { .. })));
    }

    #[test]
    fn trace_norm_non_hermitian() {
        // |0⟩⟨1| has a single unit singular value
        assert_abs_diff_eq!(trace_norm(&M::unit(2, 0, 1)).unwrap(), 1.0, epsilon = 1e-12);
        assert!(trace_norm(&M::zeros(2, 3)).is_err());
    }

    #[test]
    fn fidelity_examples() {
        let mut r = rng(5);
        let rho = random_density(&mut r, 3).scale(1.7);
        assert_abs_diff_eq!(uhlmann_fidelity(&rho, &rho).unwrap(), 1.7 * 1.7, epsilon = 1e-10);
        let p0 = M::unit(2, 0, 0);
        let p1 = M::unit(2, 1, 1);
        assert_abs_diff_eq!(uhlmann_fidelity(&p0, &p1).unwrap(), 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(uhlmann_fidelity(&p0, &M::identity(2).scale(0.5)).unwrap(), 0.5, epsilon = 1e-14);
        assert!(uhlmann_fidelity(&sz(), &p0).is_err());
    }

    #[test]
    fn herm_coordinates_are_isometric() {
        let mut r = rng(6);
        let a = random_hermitian(&mut r, 4);
        let b = random_hermitian(&mut r, 4);
        let xa = real::herm_to_coords(&a);
        let xb = real::herm_to_coords(&b);
        assert!(real::coords_to_herm(&xa, 4).distance(&a) < 1e-14);
        assert_abs_diff_eq!(real::dot(&xa, &xb), a.trace_product(&b).re, epsilon = 1e-12);
        let basis = real::traceless_herm_basis::<f64>(3);
        assert_eq!(basis.len(), 8);
        for (i, bi) in basis.iter().enumerate() {
            assert!(bi.trace().norm() < 1e-15);
            for (j, bj) in basis.iter().enumerate() {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(bi.trace_product(bj).re, expect, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn cholesky_solves_spd_system() {
        let a = [4.0, 2.0, 0.6, 2.0, 5.0, 1.0, 0.6, 1.0, 3.0];
        let l = real::cholesky(&a, 3).unwrap();
        let x = real::cholesky_solve(&l, 3, &[1.0, 2.0, 3.0]);
        for i in 0..3 {
            let row: f64 = (0..3).map(|j| a[i * 3 + j] * x[j]).sum();
            assert_abs_diff_eq!(row, [1.0, 2.0, 3.0][i], epsilon = 1e-13);
        }
        assert!(real::cholesky(&[1.0, 2.0, 2.0, 1.0], 2).is_none());
    }

    #[test]
    fn json_round_trip_is_bit_exact() {
        let a = gaussian(&mut rng(7), 3, 2).scale(1.0 / 3.0);
        let s = serde_json::to_string(&a).unwrap();
        let back: M = serde_json::from_str(&s).unwrap();
        assert_eq!(a, back);
        assert!(s.starts_with("{\"rows\":3,\"cols\":2,\"re\":["));
        assert!(serde_json::from_str::<M>(r#"{"rows":2,"cols":2,"re":[1,2,3],"im":[0,0,0]}"#).is_err());
    }

    #[test]
    fn constructor_rejects_bad_input() {
        assert!(M::new(2, 2, vec![c(1.0, 0.0); 3]).is_err());
        assert!(matches!(
            M::new(1, 2, vec![c(1.0, 0.0), Complex::new(f64::NAN, 0.0)]),
            Err(crate::Error::NonFinite(1))
        ));
    }

    #[test]
    fn works_in_single_precision() {
        let a = CMatrix::<f32>::from_diag(&[3.0, -1.0, 2.0]);
        let e = herm_eig(&a).unwrap();
        assert_eq!(e.values, vec![-1.0f32, 2.0, 3.0]);
        assert!((trace_norm(&a).unwrap() - 6.0).abs() < 1e-5);
    }

    fn arb_matrix(n: usize) -> impl Strategy<Value = M> {
        proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), n * n)
            .prop_map(move |v| M::new(n, n, v.into_iter().map(|(re, im)| Complex::new(re, im)).collect()).unwrap())
    }

    proptest! {
        #[test]
        fn partial_trace_preserves_trace(a in arb_matrix(8), k in 0usize..3) {
            let shape = SubsystemShape::new([2, 2, 2]).unwrap();
            let out = partial_trace(&a, &shape, &[k]).unwrap();
            prop_assert!((out.trace() - a.trace()).norm() < 1e-12);
        }

        #[test]
        fn kron_trace_multiplies(a in arb_matrix(2), b in arb_matrix(3)) {
            prop_assert!((kron(&a, &b).trace() - a.trace() * b.trace()).norm() < 1e-12);
        }

        #[test]
        fn vectorize_is_linear_and_isometric(a in arb_matrix(3), b in arb_matrix(3), s in -2.0f64..2.0) {
            let lhs = vectorize(&(&a + &b.scale(s)));
            let rhs = &vectorize(&a) + &vectorize(&b).scale(s);
            prop_assert!(lhs.distance(&rhs) < 1e-13);
            prop_assert!((vectorize(&a).frobenius_norm() - a.frobenius_norm()).abs() < 1e-13);
        }

        #[test]
        fn project_psd_idempotent(a in arb_matrix(4)) {
            let h = a.hermitian_part();
            let p = project_psd(&h).unwrap();
            prop_assert!(min_eigenvalue(&p).unwrap() > -1e-12);
            prop_assert!(project_psd(&p).unwrap().distance(&p) < 1e-12);
            let psd = &h * &h;
            prop_assert!(project_psd(&psd).unwrap().distance(&psd) < 1e-12);
        }

        #[test]
        fn fidelity_bounds_and_symmetry(a in arb_matrix(3), b in arb_matrix(3)) {
            let pa = &a * &a.adjoint();
            let pb = &b * &b.adjoint();
            let f_ab = uhlmann_fidelity(&pa, &pb).unwrap();
            let f_ba = uhlmann_fidelity(&pb, &pa).unwrap();
            prop_assert!((f_ab - f_ba).abs() < 1e-9);
            prop_assert!(f_ab >= -1e-12);
            prop_assert!(f_ab <= pa.trace().re * pb.trace().re + 1e-9);
        }
    }
}
