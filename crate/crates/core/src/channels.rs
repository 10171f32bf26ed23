//! Choi-matrix channels, density matrices, the polarization basis and the
//! gate library.
//!
//! Choi matrices are ordered input ⊗ output everywhere in the crate:
//! Λ = Σ_ij |i⟩⟨j| ⊗ E(|i⟩⟨j|), with E(ρ) = Tr_in[(ρᵀ ⊗ 1) Λ].

use std::fmt;
use std::str::FromStr;

use num_complex::Complex;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::qmat::{c, herm_eig, partial_trace, vectorize, CMatrix, SubsystemShape};
use crate::scalar::Scalar;

/// Unit-trace positive semidefinite operator.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix<T> {
    mat: CMatrix<T>,
}

impl<T: Scalar> DensityMatrix<T> {
    /// Validates Hermiticity, positivity and unit trace.
    pub fn new(mat: CMatrix<T>) -> Result<Self> {
        let mat = mat.symmetrized(T::herm_tol())?;
        let tr = mat.trace().re;
        if (tr - T::one()).abs() > T::psd_tol() {
            return Err(Error::InvalidState(format!("trace {tr} is not 1")));
        }
        let min = herm_eig(&mat)?.min();
        if min < -T::psd_tol() {
            return Err(Error::NotPsd { min_eig: min.to_f64_lossy() });
        }
        Ok(Self { mat })
    }

    /// |ψ⟩⟨ψ| for a (not necessarily normalized) nonzero vector.
    pub fn pure(psi: &[Complex<T>]) -> Result<Self> {
        let norm = psi.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt();
        if !(norm > T::zero()) {
            return Err(Error::InvalidState("zero state vector".into()));
        }
        let v: Vec<Complex<T>> = psi.iter().map(|z| z / norm).collect();
        Ok(Self { mat: CMatrix::ket_bra(&v) })
    }

    /// I/d.
    pub fn maximally_mixed(d: usize) -> Self {
        Self { mat: CMatrix::identity(d).scale(T::one() / T::from_usize(d).unwrap()) }
    }

    pub fn dim(&self) -> usize {
        self.mat.rows()
    }

    pub fn matrix(&self) -> &CMatrix<T> {
        &self.mat
    }

    pub fn into_matrix(self) -> CMatrix<T> {
        self.mat
    }

    /// Tr[ρ²].
    pub fn purity(&self) -> T {
        self.mat.trace_product(&self.mat).re
    }

    pub fn is_pure(&self, tol: T) -> bool {
        self.purity() >= T::one() - tol
    }
}

/// Completely positive map stored as its Choi matrix (input ⊗ output).
///
/// CP and TP are checkable properties, not constructor requirements, so
/// raw tomographic estimates can be represented too.
#[derive(Clone, Debug, PartialEq)]
pub struct Channel<T> {
    choi: CMatrix<T>,
    dim_in: usize,
    dim_out: usize,
}

impl<T: Scalar> Channel<T> {
    pub fn new(choi: CMatrix<T>, dim_in: usize, dim_out: usize) -> Result<Self> {
        if dim_in == 0 || dim_out == 0 || choi.rows() != dim_in * dim_out || !choi.is_square() {
            return Err(Error::ShapeMismatch(format!(
                "Choi matrix {}x{} for dims {dim_in} -> {dim_out}",
                choi.rows(),
                choi.cols()
            )));
        }
        let choi = choi.symmetrized(T::herm_tol())?;
        Ok(Self { choi, dim_in, dim_out })
    }

    /// Assembles Λ = Σ_ij |i⟩⟨j| ⊗ E(|i⟩⟨j|) from the images of the matrix
    /// units, listed row-major (`images[i * d_in + j] = E(|i⟩⟨j|)`).
    pub fn from_basis_images(images: &[CMatrix<T>], dim_in: usize, dim_out: usize) -> Result<Self> {
        if images.len() != dim_in * dim_in {
            return Err(Error::ShapeMismatch(format!(
                "{} basis images for input dimension {dim_in}",
                images.len()
            )));
        }
        if let Some(bad) = images.iter().find(|m| m.rows() != dim_out || m.cols() != dim_out) {
            return Err(Error::ShapeMismatch(format!(
                "basis image is {}x{}, expected {dim_out}x{dim_out}",
                bad.rows(),
                bad.cols()
            )));
        }
        let mut choi = CMatrix::zeros(dim_in * dim_out, dim_in * dim_out);
        for i in 0..dim_in {
            for j in 0..dim_in {
                let img = &images[i * dim_in + j];
                for k in 0..dim_out {
                    for l in 0..dim_out {
                        choi[(i * dim_out + k, j * dim_out + l)] = img[(k, l)];
                    }
                }
            }
        }
        Self::new(choi, dim_in, dim_out)
    }

    /// Choi matrix of a linear map given as a closure on operators.
    pub fn from_map(dim_in: usize, dim_out: usize, map: impl Fn(&CMatrix<T>) -> CMatrix<T>) -> Result<Self> {
        let images: Vec<CMatrix<T>> =
            (0..dim_in * dim_in).map(|k| map(&CMatrix::unit(dim_in, k / dim_in, k % dim_in))).collect();
        Self::from_basis_images(&images, dim_in, dim_out)
    }

    /// Λ_U = |U⟩⟩⟨⟨U| for a unitary U.
    pub fn from_unitary(u: &CMatrix<T>) -> Result<Self> {
        let defect = u.unitarity_defect();
        if defect > T::herm_tol() {
            return Err(Error::NonUnitary { defect: defect.to_f64_lossy() });
        }
        let d = u.rows();
        let v = vectorize(u);
        Self::new(CMatrix::ket_bra(v.data()), d, d)
    }

    /// Identity channel on dimension d.
    pub fn identity(d: usize) -> Self {
        Self::from_unitary(&CMatrix::identity(d)).expect("identity is unitary")
    }

    pub fn choi(&self) -> &CMatrix<T> {
        &self.choi
    }

    pub fn into_choi(self) -> CMatrix<T> {
        self.choi
    }

    pub fn dim_in(&self) -> usize {
        self.dim_in
    }

    pub fn dim_out(&self) -> usize {
        self.dim_out
    }

    /// E(X) = Tr_in[(Xᵀ ⊗ 1) Λ] for any operator X on the input space.
    pub fn apply_operator(&self, x: &CMatrix<T>) -> Result<CMatrix<T>> {
        apply_choi(&self.choi, self.dim_in, self.dim_out, x)
    }

    pub fn apply(&self, rho: &DensityMatrix<T>) -> Result<CMatrix<T>> {
        self.apply_operator(rho.matrix())
    }

    /// Tr_out[Λ].
    pub fn input_marginal(&self) -> CMatrix<T> {
        let shape = SubsystemShape::new([self.dim_in, self.dim_out]).expect("positive dims");
        partial_trace(&self.choi, &shape, &[1]).expect("consistent shape")
    }

    pub fn min_choi_eigenvalue(&self) -> T {
        herm_eig(&self.choi).expect("Choi matrix is Hermitian").min()
    }

    /// ‖Tr_out[Λ] − I‖_F.
    pub fn tp_defect(&self) -> T {
        self.input_marginal().distance(&CMatrix::identity(self.dim_in))
    }

    pub fn is_cp(&self, tol: T) -> bool {
        self.min_choi_eigenvalue() >= -tol
    }

    pub fn is_tp(&self, tol: T) -> bool {
        self.tp_defect() <= tol
    }

    /// The same Choi matrix scaled by `s` (no longer TP unless s = 1).
    pub fn scaled(&self, s: T) -> Self {
        Self { choi: self.choi.scale(s), dim_in: self.dim_in, dim_out: self.dim_out }
    }
}

/// Contracts a Choi matrix (input ⊗ output) with an input operator.
pub(crate) fn apply_choi<T: Scalar>(choi: &CMatrix<T>, dim_in: usize, dim_out: usize, x: &CMatrix<T>) -> Result<CMatrix<T>> {
    if x.rows() != dim_in || x.cols() != dim_in {
        return Err(Error::ShapeMismatch(format!(
            "input operator is {}x{}, channel input dimension is {dim_in}",
            x.rows(),
            x.cols()
        )));
    }
    let mut out = CMatrix::zeros(dim_out, dim_out);
    for n in 0..dim_in {
        for m in 0..dim_in {
            let xnm = x[(n, m)];
            if xnm.re == T::zero() && xnm.im == T::zero() {
                continue;
            }
            for i in 0..dim_out {
                for j in 0..dim_out {
                    out[(i, j)] += xnm * choi[(n * dim_out + i, m * dim_out + j)];
                }
            }
        }
    }
    Ok(out)
}

/// Polarization states: |0⟩ = |H⟩, |1⟩ = |V⟩, |D/A⟩ = (|H⟩ ± |V⟩)/√2,
/// |R/L⟩ = (|H⟩ ± i|V⟩)/√2.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PolState {
    H,
    V,
    D,
    A,
    R,
    L,
}

impl PolState {
    pub const ALL: [PolState; 6] = [PolState::H, PolState::V, PolState::D, PolState::A, PolState::R, PolState::L];

    pub fn ket<T: Scalar>(self) -> [Complex<T>; 2] {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        match self {
            PolState::H => [c(1.0, 0.0), c(0.0, 0.0)],
            PolState::V => [c(0.0, 0.0), c(1.0, 0.0)],
            PolState::D => [c(s, 0.0), c(s, 0.0)],
            PolState::A => [c(s, 0.0), c(-s, 0.0)],
            PolState::R => [c(s, 0.0), c(0.0, s)],
            PolState::L => [c(s, 0.0), c(0.0, -s)],
        }
    }

    pub fn density<T: Scalar>(self) -> DensityMatrix<T> {
        DensityMatrix { mat: CMatrix::ket_bra(&self.ket::<T>()) }
    }

    /// Orthogonal partner within the same measurement basis.
    pub fn complement(self) -> PolState {
        match self {
            PolState::H => PolState::V,
            PolState::V => PolState::H,
            PolState::D => PolState::A,
            PolState::A => PolState::D,
            PolState::R => PolState::L,
            PolState::L => PolState::R,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            PolState::H => "H",
            PolState::V => "V",
            PolState::D => "D",
            PolState::A => "A",
            PolState::R => "R",
            PolState::L => "L",
        }
    }
}

impl fmt::Display for PolState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for PolState {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "H" | "h" => Ok(PolState::H),
            "V" | "v" => Ok(PolState::V),
            "D" | "d" => Ok(PolState::D),
            "A" | "a" => Ok(PolState::A),
            "R" | "r" => Ok(PolState::R),
            "L" | "l" => Ok(PolState::L),
            other => Err(Error::UnknownName { kind: "polarization state", name: other.to_string() }),
        }
    }
}

/// Single- and two-qubit gates used by the simulated interactions.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Gate {
    I,
    X,
    Y,
    Z,
    H,
    /// π/4 rotation about σ_y, fixed so that H = R Z R†.
    RY,
    CZ,
    /// U(θ, φ, λ) = [[cos θ/2, −e^{iλ} sin θ/2], [e^{iφ} sin θ/2, e^{i(φ+λ)} cos θ/2]].
    Generic { theta: f64, phi: f64, lambda: f64 },
}

impl Gate {
    pub fn matrix<T: Scalar>(self) -> CMatrix<T> {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let z = c::<T>(0.0, 0.0);
        let one = c::<T>(1.0, 0.0);
        let m = |v: Vec<Complex<T>>| CMatrix::new(2, 2, v).expect("2x2 gate");
        match self {
            Gate::I => CMatrix::identity(2),
            Gate::X => m(vec![z, one, one, z]),
            Gate::Y => m(vec![z, c(0.0, -1.0), c(0.0, 1.0), z]),
            Gate::Z => CMatrix::from_diag(&[T::one(), -T::one()]),
            Gate::H => m(vec![c(s, 0.0), c(s, 0.0), c(s, 0.0), c(-s, 0.0)]),
            Gate::RY => {
                let (sn, cs) = (std::f64::consts::PI / 8.0).sin_cos();
                m(vec![c(cs, 0.0), c(-sn, 0.0), c(sn, 0.0), c(cs, 0.0)])
            }
            Gate::CZ => CMatrix::from_diag(&[T::one(), T::one(), T::one(), -T::one()]),
            Gate::Generic { theta, phi, lambda } => {
                let (sn, cs) = (theta / 2.0).sin_cos();
                let e = |a: f64| Complex::new(T::lit(a.cos()), T::lit(a.sin()));
                m(vec![
                    c(cs, 0.0),
                    -e(lambda) * T::lit(sn),
                    e(phi) * T::lit(sn),
                    e(phi + lambda) * T::lit(cs),
                ])
            }
        }
    }
}

impl FromStr for Gate {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "I" | "ID" => Ok(Gate::I),
            "X" => Ok(Gate::X),
            "Y" => Ok(Gate::Y),
            "Z" => Ok(Gate::Z),
            "H" => Ok(Gate::H),
            "RY" => Ok(Gate::RY),
            "CZ" => Ok(Gate::CZ),
            _ => Err(Error::UnknownName { kind: "gate", name: s.to_string() }),
        }
    }
}

/// Looks a gate up by name.
pub fn gate<T: Scalar>(name: &str) -> Result<CMatrix<T>> {
    Ok(name.parse::<Gate>()?.matrix())
}

#[derive(Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
struct ChannelJson<T> {
    dim_in: usize,
    dim_out: usize,
    choi: CMatrix<T>,
}

impl<T: Scalar> Serialize for Channel<T> {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        ChannelJson { dim_in: self.dim_in, dim_out: self.dim_out, choi: self.choi.clone() }.serialize(serializer)
    }
}

impl<'de, T: Scalar> Deserialize<'de> for Channel<T> {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let raw = ChannelJson::<T>::deserialize(deserializer)?;
        Channel::new(raw.choi, raw.dim_in, raw.dim_out).map_err(serde::de::Error::custom)
    }
}

impl<T: Scalar> Serialize for DensityMatrix<T> {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.mat.serialize(serializer)
    }
}

impl<'de, T: Scalar> Deserialize<'de> for DensityMatrix<T> {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        DensityMatrix::new(CMatrix::deserialize(deserializer)?).map_err(serde::de::Error::custom)
    }
}
