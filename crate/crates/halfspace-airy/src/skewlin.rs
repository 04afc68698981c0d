//! Complex skew-symmetric linear algebra.
//!
//! The central routine is [`pfaffian`], a Parlett–Reid style reduction of a
//! skew-symmetric matrix with partial pivoting.  A factorial-cost
//! [`pfaffian_bruteforce`] implements the defining permutation sum and serves
//! as an oracle for small matrices.  [`assemble_block_skew`] builds the
//! `2n × 2n` matrix of 2×2 kernel blocks whose Pfaffian is an `n`-point
//! correlation function.

use crate::{Error, Result, C64};
use nalgebra::DMatrix;

/// Absolute tolerance for the skew-symmetry check at construction.
pub const SKEW_TOL: f64 = 1e-12;

/// Tolerance used by [`assemble_block_skew`] when comparing `K(x,y)` against
/// `-K(y,x)ᵀ`.
pub const BLOCK_SKEW_TOL: f64 = 1e-8;

/// An even-dimensional complex skew-symmetric matrix stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct SkewMatrix {
    dim: usize,
    entries: Vec<C64>,
}

impl SkewMatrix {
    /// Builds a matrix from row-major entries, checking `A = -Aᵀ` to
    /// [`SKEW_TOL`] and that the dimension is even.
    pub fn new(dim: usize, entries: Vec<C64>) -> Result<Self> {
        Self::with_tolerance(dim, entries, SKEW_TOL)
    }

    /// As [`SkewMatrix::new`] with a caller-chosen skew tolerance (useful for
    /// matrices assembled from quadrature output).  The stored matrix is
    /// exactly skew: the strictly upper triangle is kept and mirrored.
    pub fn with_tolerance(dim: usize, mut entries: Vec<C64>, tol: f64) -> Result<Self> {
        if !dim.is_multiple_of(2) {
            return Err(Error::InvalidInput(format!("skew matrix dimension {dim} is odd")));
        }
        if entries.len() != dim * dim {
            return Err(Error::InvalidInput(format!(
                "expected {} entries for dimension {dim}, got {}",
                dim * dim,
                entries.len()
            )));
        }
        for i in 0..dim {
            for j in i..dim {
                let a = entries[i * dim + j];
                let b = entries[j * dim + i];
                if (a + b).norm() > tol {
                    return Err(Error::InvalidInput(format!(
                        "entries ({i},{j}) and ({j},{i}) violate skew-symmetry: {a} vs {b}"
                    )));
                }
                if i == j {
                    entries[i * dim + i] = C64::new(0.0, 0.0);
                } else {
                    entries[j * dim + i] = -a;
                }
            }
        }
        Ok(Self { dim, entries })
    }

    /// Builds a skew matrix from a function giving the strictly upper
    /// triangle `(i, j)`, `i < j`.
    pub fn from_upper(dim: usize, mut f: impl FnMut(usize, usize) -> C64) -> Result<Self> {
        if !dim.is_multiple_of(2) {
            return Err(Error::InvalidInput(format!("skew matrix dimension {dim} is odd")));
        }
        let mut entries = vec![C64::new(0.0, 0.0); dim * dim];
        for i in 0..dim {
            for j in i + 1..dim {
                let v = f(i, j);
                entries[i * dim + j] = v;
                entries[j * dim + i] = -v;
            }
        }
        Ok(Self { dim, entries })
    }

    /// The zero-dimensional matrix, whose Pfaffian is 1.
    pub fn empty() -> Self {
        Self { dim: 0, entries: Vec::new() }
    }

    /// Matrix dimension (always even).
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Entry `(i, j)`.
    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.entries[i * self.dim + j]
    }

    /// Row-major entries.
    pub fn entries(&self) -> &[C64] {
        &self.entries
    }

    /// Copy as an `nalgebra` matrix.
    pub fn to_dmatrix(&self) -> DMatrix<C64> {
        DMatrix::from_row_slice(self.dim, self.dim, &self.entries)
    }

    /// Congruence `R A Rᵀ`, which is again skew-symmetric.
    pub fn congruence(&self, r: &DMatrix<C64>) -> Result<Self> {
        if r.nrows() != self.dim || r.ncols() != self.dim {
            return Err(Error::InvalidInput("congruence matrix has the wrong shape".into()));
        }
        let m = r * self.to_dmatrix() * r.transpose();
        let dim = self.dim;
        Self::from_upper(dim, |i, j| (m[(i, j)] - m[(j, i)]) * 0.5)
    }
}

/// The 2×2 block `K(x, y)` of a Pfaffian correlation kernel.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct KernelValue {
    pub k11: C64,
    pub k12: C64,
    pub k21: C64,
    pub k22: C64,
}

impl KernelValue {
    /// Block from its four entries.
    pub fn new(k11: C64, k12: C64, k21: C64, k22: C64) -> Self {
        Self { k11, k12, k21, k22 }
    }

    /// Entry `(i, j)` with `i, j ∈ {1, 2}`.
    pub fn get(&self, i: usize, j: usize) -> C64 {
        match (i, j) {
            (1, 1) => self.k11,
            (1, 2) => self.k12,
            (2, 1) => self.k21,
            (2, 2) => self.k22,
            _ => panic!("kernel block index ({i},{j}) out of range"),
        }
    }

    /// `-K(x,y)ᵀ`, which must equal `K(y,x)` for a block-skew kernel.
    pub fn neg_transpose(&self) -> Self {
        Self { k11: -self.k11, k12: -self.k21, k21: -self.k12, k22: -self.k22 }
    }

    /// Largest entry modulus.
    pub fn max_norm(&self) -> f64 {
        self.k11.norm().max(self.k12.norm()).max(self.k21.norm()).max(self.k22.norm())
    }

    /// Entry-wise difference.
    pub fn sub(&self, other: &Self) -> Self {
        Self {
            k11: self.k11 - other.k11,
            k12: self.k12 - other.k12,
            k21: self.k21 - other.k21,
            k22: self.k22 - other.k22,
        }
    }
}

/// Pfaffian together with a crude condition estimate (ratio of largest to
/// smallest pivot modulus; infinite if a zero pivot was met).
#[derive(Clone, Copy, Debug)]
pub struct PfaffianReport {
    pub value: C64,
    pub condition: f64,
}

/// Pfaffian by skew-symmetric Gaussian elimination with partial pivoting.
///
/// At step `k` the largest entry of column `k` below the diagonal is swapped
/// into position `(k+1, k)` by a simultaneous row/column exchange (each
/// exchange flips the sign), then congruence updates clear row `k` beyond
/// column `k+1`.  The Pfaffian is the signed product of the pivots
/// `A[k][k+1]`, `k = 0, 2, 4, …`.
pub fn pfaffian(a: &SkewMatrix) -> C64 {
    pfaffian_report(a).value
}

/// [`pfaffian`] with the pivot-based condition estimate.
pub fn pfaffian_report(a: &SkewMatrix) -> PfaffianReport {
    let n = a.dim;
    if n == 0 {
        return PfaffianReport { value: C64::new(1.0, 0.0), condition: 1.0 };
    }
    let mut m = a.entries.clone();
    let idx = |i: usize, j: usize| i * n + j;
    let mut pf = C64::new(1.0, 0.0);
    let mut pmax = 0.0f64;
    let mut pmin = f64::INFINITY;
    let mut k = 0;
    while k + 1 < n {
        // pivot search in column k, rows k+1..n
        let mut p = k + 1;
        let mut best = m[idx(k + 1, k)].norm();
        for i in k + 2..n {
            let v = m[idx(i, k)].norm();
            if v > best {
                best = v;
                p = i;
            }
        }
        if p != k + 1 {
            // swap rows and columns p and k+1
            for j in 0..n {
                m.swap(idx(p, j), idx(k + 1, j));
            }
            for i in 0..n {
                m.swap(idx(i, p), idx(i, k + 1));
            }
            pf = -pf;
        }
        let piv = m[idx(k, k + 1)];
        if piv.norm() == 0.0 {
            return PfaffianReport { value: C64::new(0.0, 0.0), condition: f64::INFINITY };
        }
        pmax = pmax.max(piv.norm());
        pmin = pmin.min(piv.norm());
        pf *= piv;
        // tau_i = A[k][i] / A[k][k+1]; A'[i][j] = A[i][j] - tau_i A[k+1][j] + tau_j A[k+1][i]
        if k + 2 < n {
            let tau: Vec<C64> = (k + 2..n).map(|i| m[idx(k, i)] / piv).collect();
            let row: Vec<C64> = (k + 2..n).map(|j| m[idx(k + 1, j)]).collect();
            for (ii, i) in (k + 2..n).enumerate() {
                for (jj, j) in (k + 2..n).enumerate().skip(ii + 1) {
                    let v = m[idx(i, j)] - tau[ii] * row[jj] + tau[jj] * row[ii];
                    m[idx(i, j)] = v;
                    m[idx(j, i)] = -v;
                }
            }
        }
        k += 2;
    }
    PfaffianReport { value: pf, condition: pmax / pmin }
}

/// Largest dimension accepted by [`pfaffian_bruteforce`].
pub const BRUTEFORCE_MAX_DIM: usize = 10;

/// Pfaffian from its defining sum
/// `(1 / (2ⁿ n!)) Σ_{σ ∈ S_{2n}} sgn(σ) ∏ A[σ(2i-1)][σ(2i)]`.
///
/// Cost is `(2n)!`; only intended as an oracle for `dim ≤ 10`.
pub fn pfaffian_bruteforce(a: &SkewMatrix) -> Result<C64> {
    let n = a.dim;
    if n > BRUTEFORCE_MAX_DIM {
        return Err(Error::SizeLimit { dim: n, max: BRUTEFORCE_MAX_DIM });
    }
    if n == 0 {
        return Ok(C64::new(1.0, 0.0));
    }
    // Heap's algorithm, tracking the sign (each swap is a transposition).
    let mut perm: Vec<usize> = (0..n).collect();
    let mut c = vec![0usize; n];
    let term = |perm: &[usize]| -> C64 {
        let mut p = C64::new(1.0, 0.0);
        for i in 0..n / 2 {
            p *= a.get(perm[2 * i], perm[2 * i + 1]);
        }
        p
    };
    let mut sign = 1.0;
    let mut total = term(&perm);
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            sign = -sign;
            total += term(&perm) * sign;
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    let half = n / 2;
    let norm = (1..=half).fold(1.0, |acc, k| acc * k as f64) * 2f64.powi(half as i32);
    Ok(total / norm)
}

/// Determinant by LU factorisation (independent of the Pfaffian routine).
pub fn determinant(m: &DMatrix<C64>) -> C64 {
    if m.nrows() == 0 {
        return C64::new(1.0, 0.0);
    }
    m.clone().lu().determinant()
}

/// Assembles the `2n × 2n` skew matrix with 2×2 block `(i, j)` equal to
/// `K(x_i, x_j)`.
///
/// Off-diagonal blocks are computed for both orders and compared:
/// `K(x_j, x_i)` must equal `-K(x_i, x_j)ᵀ` within [`BLOCK_SKEW_TOL`]
/// (relative to the block size, with an absolute floor of 1).  Diagonal
/// blocks must be skew themselves.  Violations name the offending pair.
pub fn assemble_block_skew<P, F>(points: &[P], mut kernel: F) -> Result<SkewMatrix>
where
    F: FnMut(&P, &P) -> Result<KernelValue>,
{
    let n = points.len();
    let mut blocks: Vec<KernelValue> = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            blocks.push(kernel(&points[i], &points[j])?);
        }
    }
    for i in 0..n {
        for j in i..n {
            let a = blocks[i * n + j];
            let b = blocks[j * n + i];
            let scale = 1.0f64.max(a.max_norm()).max(b.max_norm());
            let d = b.sub(&a.neg_transpose()).max_norm();
            if d > BLOCK_SKEW_TOL * scale {
                return Err(Error::Inconsistency(format!(
                    "K(x_{j}, x_{i}) differs from -K(x_{i}, x_{j})^T by {d:.3e} (points {i} and {j})"
                )));
            }
        }
    }
    block_matrix_from_upper(n, |i, j| blocks[i * n + j])
}

/// Assembles the block matrix from the blocks with `i ≤ j` only, trusting
/// the kernel's skew structure.  Used by the Fredholm routines where the
/// kernel is known to be skew by construction.
pub fn block_matrix_from_upper(n: usize, block: impl Fn(usize, usize) -> KernelValue) -> Result<SkewMatrix> {
    let dim = 2 * n;
    SkewMatrix::from_upper(dim, |r, c| {
        let (i, a) = (r / 2, r % 2);
        let (j, b) = (c / 2, c % 2);
        block(i, j).get(a + 1, b + 1)
    })
}

/// Hadamard-type Pfaffian bound for a kernel with entry-wise bounds
/// `|K11(x,y)| ≤ C e^{-a x - a y}`, `|K12(x,y)| ≤ C e^{-a x + b y}`,
/// `|K22(x,y)| ≤ C e^{b x + b y}`:
/// `|Pf[K(x_i, x_j)]| ≤ (2n)^{n/2} Cⁿ ∏ e^{-(a-b) x_i}`.
pub fn hadamard_pfaffian_bound(c: f64, a: f64, b: f64, xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    (2.0 * n).powf(n / 2.0) * c.powf(n) * xs.iter().map(|x| (-(a - b) * x).exp()).product::<f64>()
}
