use crate::channels::{DensityMatrix, PolState};
use crate::error::{Error, Result};
use crate::qmat::real::herm_to_coords;
use crate::qmat::{herm_eig, CMatrix};
use crate::scalar::Scalar;
use crate::superchannel::Superchannel;

/// Singular values below this fraction of the largest count as zero.
pub const RANK_RTOL: f64 = 1e-8;

/// Projective tomography frame Π_ijk = ρ_i ⊗ conj(ρ_j) ⊗ ρ_k over a list of
/// pure states, in lexicographic (i, j, k) order.
#[derive(Clone, Debug)]
pub struct Frame<T> {
    labels: Vec<String>,
    states: Vec<DensityMatrix<T>>,
    projectors: Vec<CMatrix<T>>,
    /// Real coordinates of each projector; p = ⟨row, coords(Λ)⟩.
    rows: Vec<Vec<T>>,
    rank: usize,
}

impl<T: Scalar> Frame<T> {
    /// Frame over the given polarization states.
    pub fn polarization(states: &[PolState]) -> Result<Self> {
        Self::labelled(states.iter().map(|s| (s.label().to_string(), s.density())).collect())
    }

    /// The six-state frame {H, V, D, A, R, L}.
    pub fn standard() -> Self {
        Self::polarization(&PolState::ALL).expect("polarization states are pure")
    }

    pub fn labelled(states: Vec<(String, DensityMatrix<T>)>) -> Result<Self> {
        let Some(first) = states.first() else {
            return Err(Error::InvalidArgument("frame needs at least one state".into()));
        };
        let d = first.1.dim();
        for (label, s) in &states {
            if s.dim() != d {
                return Err(Error::ShapeMismatch(format!("frame state {label} has dimension {}", s.dim())));
            }
            if !s.is_pure(T::psd_tol()) {
                return Err(Error::NotPure { purity: s.purity().to_f64_lossy() });
            }
        }
        let (labels, states): (Vec<_>, Vec<_>) = states.into_iter().unzip();
        let mut projectors = Vec::with_capacity(states.len().pow(3));
        for si in &states {
            for sj in &states {
                let left = si.matrix().kron(&sj.matrix().conj());
                for sk in &states {
                    projectors.push(left.kron(sk.matrix()));
                }
            }
        }
        let rows: Vec<Vec<T>> = projectors.iter().map(herm_to_coords).collect();
        let rank = rank_of(&gram(&rows, None));
        Ok(Self { labels, states, projectors, rows, rank })
    }

    pub fn d(&self) -> usize {
        self.states[0].dim()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn states(&self) -> &[DensityMatrix<T>] {
        &self.states
    }

    pub fn projectors(&self) -> &[CMatrix<T>] {
        &self.projectors
    }

    pub fn len(&self) -> usize {
        self.projectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.projectors.is_empty()
    }

    /// Rank of the frame operator Σ |Π⟩⟩⟨⟨Π|.
    pub fn rank(&self) -> usize {
        self.rank
    }

    /// Dimension of the Hermitian operator space on X1 ⊗ X2 ⊗ X3.
    pub fn full_rank(&self) -> usize {
        self.d().pow(6)
    }

    pub fn is_informationally_complete(&self) -> bool {
        self.rank == self.full_rank()
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    /// Flat index of (i, j, k).
    pub fn element(&self, i: usize, j: usize, k: usize) -> usize {
        let n = self.states.len();
        (i * n + j) * n + k
    }

    /// (i, j, k) of a flat index.
    pub fn triple(&self, b: usize) -> (usize, usize, usize) {
        let n = self.states.len();
        (b / (n * n), (b / n) % n, b % n)
    }

    /// Index of the state orthogonal to state `i`, if the frame contains one.
    pub fn complement(&self, i: usize) -> Option<usize> {
        let tol = T::lit(1e-8);
        let si = self.states[i].matrix();
        (0..self.states.len()).find(|&k| k != i && si.trace_product(self.states[k].matrix()).norm() <= tol)
    }

    pub(crate) fn rows(&self) -> &[Vec<T>] {
        &self.rows
    }
}

/// Builds the frame over arbitrary pure states, labelled by position.
pub fn build_frame<T: Scalar>(states: &[DensityMatrix<T>]) -> Result<Frame<T>> {
    Frame::labelled(states.iter().enumerate().map(|(k, s)| (k.to_string(), s.clone())).collect())
}

/// p_ijk = Tr[Π_ijk† Λ_M] in frame order.
pub fn probabilities<T: Scalar>(m: &Superchannel<T>, frame: &Frame<T>) -> Result<Vec<T>> {
    if m.d() != frame.d() {
        return Err(Error::ShapeMismatch(format!("superchannel dimension {} vs frame dimension {}", m.d(), frame.d())));
    }
    Ok(frame.projectors.iter().map(|p| p.trace_product(m.choi()).re).collect())
}

/// Σ_b w_b² r_b r_bᵀ (w = 1 when absent), row-major.
pub(crate) fn gram<T: Scalar>(rows: &[Vec<T>], w: Option<&[T]>) -> Vec<T> {
    let n = rows.first().map_or(0, Vec::len);
    let mut g = vec![T::zero(); n * n];
    for (b, r) in rows.iter().enumerate() {
        let w2 = w.map_or(T::one(), |w| w[b] * w[b]);
        for i in 0..n {
            let ri = r[i] * w2;
            if ri == T::zero() {
                continue;
            }
            for j in 0..n {
                g[i * n + j] += ri * r[j];
            }
        }
    }
    g
}

/// Eigendecomposition of a real symmetric matrix: (ascending values, column-major vectors).
pub(crate) fn sym_eig<T: Scalar>(a: &[T], n: usize) -> Result<(Vec<T>, Vec<Vec<T>>)> {
    let e = herm_eig(&CMatrix::from_real(n, n, a)?)?;
    let vectors = (0..n).map(|k| (0..n).map(|i| e.vectors[(i, k)].re).collect()).collect();
    Ok((e.values, vectors))
}

fn rank_of<T: Scalar>(g: &[T]) -> usize {
    let n = (g.len() as f64).sqrt() as usize;
    let (values, _) = sym_eig(g, n).expect("Gram matrix is symmetric");
    let top = values.last().copied().unwrap_or(T::zero());
    values.iter().filter(|&&l| l > T::lit(RANK_RTOL) * top).count()
}
