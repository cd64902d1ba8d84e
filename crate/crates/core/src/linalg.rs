//! Dense complex matrix kernel.
//!
//! Matrices are [`nalgebra::DMatrix`] over `Complex<f64>`; singular value and
//! Hermitian eigen-decompositions are delegated to `faer`. Everything here is
//! a pure function of its inputs. Block conventions follow the bipartite
//! layout `H_A ⊗ H_B`: an `mn × mn` operator is an `m × m` grid of `n × n`
//! blocks, block `(i, j)` occupying rows `i*n..(i+1)*n` and columns
//! `j*n..(j+1)*n`.

use faer::{Mat, MatRef, Side};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex;

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;
pub type ComplexMatrix = DMatrix<C64>;
pub type ComplexVector = DVector<C64>;

/// Relative tolerance used to accept a matrix as Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-10;

/// Subsystem dimensions of a bipartite operator on `C^m ⊗ C^n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BipartiteDims {
    pub m: usize,
    pub n: usize,
}

impl BipartiteDims {
    pub fn new(m: usize, n: usize) -> Result<Self> {
        if m == 0 || n == 0 {
            return Err(Error::DimensionMismatch(format!(
                "subsystem dimensions must be positive, got {m}x{n}"
            )));
        }
        Ok(Self { m, n })
    }

    /// Total dimension `m·n`.
    pub fn total(&self) -> usize {
        self.m * self.n
    }

    /// Dimensions with the two subsystems exchanged.
    pub fn swapped(&self) -> Self {
        Self { m: self.n, n: self.m }
    }

    /// Checks that `z` is a square `mn × mn` matrix.
    pub fn check_square(&self, z: &ComplexMatrix) -> Result<()> {
        let d = self.total();
        if z.nrows() != d || z.ncols() != d {
            return Err(Error::DimensionMismatch(format!(
                "expected {d}x{d} matrix for {}x{} system, got {}x{}",
                self.m,
                self.n,
                z.nrows(),
                z.ncols()
            )));
        }
        Ok(())
    }
}

impl std::fmt::Display for BipartiteDims {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}x{}", self.m, self.n)
    }
}

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn real(re: f64) -> C64 {
    C64::new(re, 0.0)
}

pub fn identity(d: usize) -> ComplexMatrix {
    ComplexMatrix::identity(d, d)
}

/// Builds a matrix from real row-major data.
pub fn from_real_rows(rows: usize, cols: usize, data: &[f64]) -> ComplexMatrix {
    assert_eq!(data.len(), rows * cols, "row-major data length");
    ComplexMatrix::from_fn(rows, cols, |i, j| real(data[i * cols + j]))
}

/// Returns the first non-finite entry, if any.
pub fn check_finite(a: &ComplexMatrix) -> Result<()> {
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            let z = a[(i, j)];
            if !z.re.is_finite() || !z.im.is_finite() {
                return Err(Error::NonFinite { row: i, col: j });
            }
        }
    }
    Ok(())
}

/// Column-stacking vectorization: `[a11, …, am1, a12, …, amn]ᵀ`.
pub fn vec(a: &ComplexMatrix) -> ComplexMatrix {
    // nalgebra storage is already column-major
    ComplexMatrix::from_column_slice(a.nrows() * a.ncols(), 1, a.as_slice())
}

/// Realignment of an `mn × mn` block matrix into an `m² × n²` matrix.
///
/// Row `j·m + i` holds `vec(Z_{i,j})ᵀ`, i.e. blocks are visited down each
/// block-column first: `Z_{1,1}, …, Z_{m,1}, Z_{1,2}, …, Z_{m,m}`.
pub fn realign(z: &ComplexMatrix, dims: BipartiteDims) -> Result<ComplexMatrix> {
    dims.check_square(z)?;
    let BipartiteDims { m, n } = dims;
    let mut out = ComplexMatrix::zeros(m * m, n * n);
    for bj in 0..m {
        for bi in 0..m {
            let row = bj * m + bi;
            for l in 0..n {
                for k in 0..n {
                    out[(row, l * n + k)] = z[(bi * n + k, bj * n + l)];
                }
            }
        }
    }
    Ok(out)
}

/// Inverse of [`realign`]: maps an `m² × n²` matrix back to `mn × mn`.
pub fn realign_inverse(y: &ComplexMatrix, dims: BipartiteDims) -> Result<ComplexMatrix> {
    let BipartiteDims { m, n } = dims;
    if y.nrows() != m * m || y.ncols() != n * n {
        return Err(Error::DimensionMismatch(format!(
            "realigned matrix for {dims} system must be {}x{}, got {}x{}",
            m * m,
            n * n,
            y.nrows(),
            y.ncols()
        )));
    }
    let mut out = ComplexMatrix::zeros(m * n, m * n);
    for bj in 0..m {
        for bi in 0..m {
            let row = bj * m + bi;
            for l in 0..n {
                for k in 0..n {
                    out[(bi * n + k, bj * n + l)] = y[(row, l * n + k)];
                }
            }
        }
    }
    Ok(out)
}

/// Partial transpose on the first subsystem: block `(i, j)` ↔ block `(j, i)`.
pub fn partial_transpose_a(z: &ComplexMatrix, dims: BipartiteDims) -> Result<ComplexMatrix> {
    dims.check_square(z)?;
    let BipartiteDims { m, n } = dims;
    let mut out = ComplexMatrix::zeros(m * n, m * n);
    for bi in 0..m {
        for bj in 0..m {
            out.view_mut((bi * n, bj * n), (n, n))
                .copy_from(&z.view((bj * n, bi * n), (n, n)));
        }
    }
    Ok(out)
}

/// Partial transpose on the second subsystem: every block is transposed in place.
pub fn partial_transpose_b(z: &ComplexMatrix, dims: BipartiteDims) -> Result<ComplexMatrix> {
    dims.check_square(z)?;
    let BipartiteDims { m, n } = dims;
    let mut out = ComplexMatrix::zeros(m * n, m * n);
    for bi in 0..m {
        for bj in 0..m {
            out.view_mut((bi * n, bj * n), (n, n))
                .copy_from(&z.view((bi * n, bj * n), (n, n)).transpose());
        }
    }
    Ok(out)
}

/// Copy of the `n × n` block `(i, j)` of an `mn × mn` matrix.
pub fn block(z: &ComplexMatrix, n: usize, i: usize, j: usize) -> ComplexMatrix {
    z.view((i * n, j * n), (n, n)).into_owned()
}

fn to_faer(g: &ComplexMatrix) -> Mat<C64> {
    Mat::from_fn(g.nrows(), g.ncols(), |i, j| g[(i, j)])
}

fn from_faer(g: MatRef<'_, C64>) -> ComplexMatrix {
    ComplexMatrix::from_fn(g.nrows(), g.ncols(), |i, j| g[(i, j)])
}

/// Singular values, sorted descending.
pub fn singular_values(g: &ComplexMatrix) -> Vec<f64> {
    if g.is_empty() {
        return Vec::new();
    }
    let mut s = to_faer(g)
        .singular_values()
        .expect("SVD of a finite matrix converges");
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Trace norm `Tr √(GG†)`: the sum of singular values.
pub fn trace_norm(g: &ComplexMatrix) -> f64 {
    singular_values(g).iter().sum()
}

/// Compact singular value decomposition `G = U·diag(S)·V†`.
#[derive(Debug, Clone, PartialEq)]
pub struct Svd {
    /// `rows × q` with orthonormal columns.
    pub u: ComplexMatrix,
    /// `q` singular values, descending.
    pub s: Vec<f64>,
    /// `cols × q` with orthonormal columns.
    pub v: ComplexMatrix,
}

impl Svd {
    pub fn reconstruct(&self) -> ComplexMatrix {
        let mut us = self.u.clone();
        for (k, &sk) in self.s.iter().enumerate() {
            us.column_mut(k).scale_mut(sk);
        }
        us * self.v.adjoint()
    }
}

/// Compact SVD with `q = min(rows, cols)`.
///
/// Phase convention: in each singular triplet the largest-magnitude entry of
/// the `U` column is made real and positive (lowest row index wins a tie), and
/// the matching `V` column is rotated by the same phase.
pub fn svd(g: &ComplexMatrix) -> Result<Svd> {
    let (rows, cols) = g.shape();
    let q = rows.min(cols);
    let raw = to_faer(g).thin_svd().map_err(|_| Error::SvdFailed)?;
    let u_raw = from_faer(raw.U());
    let v_raw = from_faer(raw.V());
    let sv: Vec<f64> = raw.S().column_vector().iter().map(|z| z.re).collect();

    let mut order: Vec<usize> = (0..q).collect();
    order.sort_by(|&a, &b| sv[b].total_cmp(&sv[a]));

    let mut u = ComplexMatrix::zeros(rows, q);
    let mut v = ComplexMatrix::zeros(cols, q);
    let mut s = Vec::with_capacity(q);
    for (k, &src) in order.iter().enumerate() {
        let ucol = u_raw.column(src);
        let mut pivot = 0;
        let mut best = -1.0;
        for i in 0..rows {
            let mag = ucol[i].norm();
            if mag > best {
                best = mag;
                pivot = i;
            }
        }
        let phase = if best > 0.0 {
            ucol[pivot].conj() / best
        } else {
            C64::new(1.0, 0.0)
        };
        u.set_column(k, &(ucol * phase));
        v.set_column(k, &(v_raw.column(src) * phase));
        s.push(sv[src]);
    }
    Ok(Svd { u, s, v })
}

/// Largest entry magnitude of `H − H†`, relative to the largest entry of `H`.
pub fn hermitian_defect(h: &ComplexMatrix) -> f64 {
    if h.nrows() != h.ncols() {
        return f64::INFINITY;
    }
    let scale = h.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()));
    if scale == 0.0 {
        return 0.0;
    }
    let d = h.nrows();
    let mut defect = 0.0_f64;
    for i in 0..d {
        for j in i..d {
            defect = defect.max((h[(i, j)] - h[(j, i)].conj()).norm());
        }
    }
    defect / scale
}

/// `(H + H†) / 2`.
pub fn symmetrize(h: &ComplexMatrix) -> ComplexMatrix {
    (h + h.adjoint()).scale(0.5)
}

/// Symmetrizes `h` after checking it is Hermitian within [`HERMITIAN_TOL`].
pub fn checked_symmetrize(h: &ComplexMatrix) -> Result<ComplexMatrix> {
    if h.nrows() != h.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "Hermitian matrix must be square, got {}x{}",
            h.nrows(),
            h.ncols()
        )));
    }
    let defect = hermitian_defect(h);
    if defect > HERMITIAN_TOL {
        return Err(Error::NotHermitian {
            defect,
            tol: HERMITIAN_TOL,
        });
    }
    Ok(symmetrize(h))
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(h: &ComplexMatrix) -> Result<Vec<f64>> {
    let h = checked_symmetrize(h)?;
    Ok(sorted_eigenvalues(h))
}

/// Eigenvalues of `(H + H†)/2` without the Hermiticity check. For internal
/// callers whose input is Hermitian by construction.
pub(crate) fn eigenvalues_symmetrized(h: &ComplexMatrix) -> Vec<f64> {
    sorted_eigenvalues(symmetrize(h))
}

fn sorted_eigenvalues(h: ComplexMatrix) -> Vec<f64> {
    if h.is_empty() {
        return Vec::new();
    }
    let mut ev = to_faer(&h)
        .self_adjoint_eigenvalues(Side::Lower)
        .expect("Hermitian eigensolver converges on finite input");
    ev.sort_by(f64::total_cmp);
    ev
}

/// Eigen-decomposition of a Hermitian matrix: ascending eigenvalues and the
/// matching unit eigenvectors as columns.
pub fn hermitian_eigen(h: &ComplexMatrix) -> Result<(Vec<f64>, ComplexMatrix)> {
    let h = checked_symmetrize(h)?;
    let d = h.nrows();
    let eig = to_faer(&h)
        .self_adjoint_eigen(Side::Lower)
        .expect("Hermitian eigensolver converges on finite input");
    let raw: Vec<f64> = eig.S().column_vector().iter().map(|z| z.re).collect();
    let u = from_faer(eig.U());
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| raw[a].total_cmp(&raw[b]));
    let values = order.iter().map(|&k| raw[k]).collect();
    let mut vectors = ComplexMatrix::zeros(d, d);
    for (k, &src) in order.iter().enumerate() {
        vectors.set_column(k, &u.column(src));
    }
    Ok((values, vectors))
}

pub fn min_eigenvalue(h: &ComplexMatrix) -> Result<f64> {
    hermitian_eigenvalues(h)?
        .first()
        .copied()
        .ok_or_else(|| Error::DimensionMismatch("empty matrix has no eigenvalues".into()))
}

pub fn max_eigenvalue(h: &ComplexMatrix) -> Result<f64> {
    hermitian_eigenvalues(h)?
        .last()
        .copied()
        .ok_or_else(|| Error::DimensionMismatch("empty matrix has no eigenvalues".into()))
}

pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.kronecker(b)
}

/// `|Φ⟩⟨Φ|` with `|Φ⟩ = m^{-1/2} Σ_i |ii⟩`, an `m² × m²` rank-one projector.
pub fn max_entangled_projector(m: usize) -> ComplexMatrix {
    let d = m * m;
    let w = 1.0 / m as f64;
    ComplexMatrix::from_fn(d, d, |r, s| {
        if r % (m + 1) == 0 && s % (m + 1) == 0 {
            real(w)
        } else {
            real(0.0)
        }
    })
}

/// `Tr(A·B)` without forming the product.
pub fn trace_of_product(a: &ComplexMatrix, b: &ComplexMatrix) -> C64 {
    debug_assert_eq!(a.ncols(), b.nrows());
    debug_assert_eq!(a.nrows(), b.ncols());
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..a.nrows() {
        for k in 0..a.ncols() {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

/// `|ψ⟩⟨ψ|` for a column vector.
pub fn outer(psi: &ComplexVector) -> ComplexMatrix {
    psi * psi.adjoint()
}

pub fn max_abs_diff(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.iter()
        .zip(b.iter())
        .fold(0.0_f64, |acc, (x, y)| acc.max((x - y).norm()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cm(rows: usize, cols: usize, data: &[f64]) -> ComplexMatrix {
        from_real_rows(rows, cols, data)
    }

    fn pseudo_random(rows: usize, cols: usize, salt: u64) -> ComplexMatrix {
        // small LCG, enough for shape tests that need no distribution
        let mut x = 0x9e37_79b9_7f4a_7c15_u64 ^ salt;
        let mut next = move || {
            x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((x >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        ComplexMatrix::from_fn(rows, cols, |_, _| c(next(), next()))
    }

    #[test]
    fn vec_stacks_columns() {
        let a = cm(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(vec(&a), cm(4, 1, &[1.0, 3.0, 2.0, 4.0]));
        let b = cm(2, 3, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        assert_eq!(vec(&b), cm(6, 1, &[1.0, 4.0, 2.0, 5.0, 3.0, 6.0]));
        let one = cm(1, 1, &[7.0]);
        assert_eq!(vec(&one), one);
    }

    #[test]
    fn realign_matches_two_qubit_pattern() {
        // entries labelled 11..44 by (row, col), 1-based
        let z = ComplexMatrix::from_fn(4, 4, |i, j| real((10 * (i + 1) + j + 1) as f64));
        let r = realign(&z, BipartiteDims::new(2, 2).unwrap()).unwrap();
        let expected = cm(
            4,
            4,
            &[
                11.0, 21.0, 12.0, 22.0, //
                31.0, 41.0, 32.0, 42.0, //
                13.0, 23.0, 14.0, 24.0, //
                33.0, 43.0, 34.0, 44.0,
            ],
        );
        assert_eq!(r, expected);
    }

    #[test]
    fn realign_identity_and_scalar() {
        let d = BipartiteDims::new(2, 2).unwrap();
        let r = realign(&identity(4), d).unwrap();
        let expected = cm(
            4,
            4,
            &[
                1.0, 0.0, 0.0, 1.0, //
                0.0, 0.0, 0.0, 0.0, //
                0.0, 0.0, 0.0, 0.0, //
                1.0, 0.0, 0.0, 1.0,
            ],
        );
        assert_eq!(r, expected);
        assert_eq!(realign_inverse(&expected, d).unwrap(), identity(4));

        let one = BipartiteDims::new(1, 1).unwrap();
        let s = cm(1, 1, &[3.5]);
        assert_eq!(realign(&s, one).unwrap(), s);
        assert_eq!(realign_inverse(&s, one).unwrap(), s);
    }

    #[test]
    fn realign_rectangular_round_trip() {
        let d = BipartiteDims::new(2, 3).unwrap();
        let z = pseudo_random(6, 6, 1);
        let r = realign(&z, d).unwrap();
        assert_eq!(r.shape(), (4, 9));
        assert_eq!(realign_inverse(&r, d).unwrap(), z);
    }

    #[test]
    fn realign_rejects_wrong_shape() {
        let d = BipartiteDims::new(2, 3).unwrap();
        assert!(matches!(
            realign(&identity(5), d),
            Err(Error::DimensionMismatch(_))
        ));
        assert!(realign_inverse(&identity(6), d).is_err());
        assert!(partial_transpose_a(&identity(4), d).is_err());
        assert!(BipartiteDims::new(0, 2).is_err());
    }

    #[test]
    fn partial_transpose_of_basis_operator() {
        // |01⟩⟨10| → |11⟩⟨00|
        let d = BipartiteDims::new(2, 2).unwrap();
        let mut rho = ComplexMatrix::zeros(4, 4);
        rho[(1, 2)] = real(1.0);
        let mut expected = ComplexMatrix::zeros(4, 4);
        expected[(3, 0)] = real(1.0);
        assert_eq!(partial_transpose_a(&rho, d).unwrap(), expected);
    }

    #[test]
    fn partial_transpose_is_involutive() {
        let d = BipartiteDims::new(3, 2).unwrap();
        let z = pseudo_random(6, 6, 2);
        let once = partial_transpose_a(&z, d).unwrap();
        assert_eq!(partial_transpose_a(&once, d).unwrap(), z);
        let b_once = partial_transpose_b(&z, d).unwrap();
        assert_eq!(partial_transpose_b(&b_once, d).unwrap(), z);
        // T_A ∘ T_B is the full transpose
        assert_eq!(partial_transpose_b(&once, d).unwrap(), z.transpose());
    }

    #[test]
    fn trace_norm_basics() {
        assert!((trace_norm(&identity(5)) - 5.0).abs() < 1e-12);
        let u = ComplexVector::from_vec(vec![c(0.6, 0.0), c(0.0, 0.8)]);
        let v = ComplexVector::from_vec(vec![real(1.0 / 3f64.sqrt()); 3]);
        let rank1 = &u * v.transpose();
        assert!((trace_norm(&rank1) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn svd_of_diagonal() {
        let g = cm(2, 2, &[3.0, 0.0, 0.0, 1.0]);
        let f = svd(&g).unwrap();
        assert_eq!(f.s.len(), 2);
        assert!((f.s[0] - 3.0).abs() < 1e-14 && (f.s[1] - 1.0).abs() < 1e-14);
        assert!(max_abs_diff(&f.u, &identity(2)) < 1e-14);
        assert!(max_abs_diff(&f.v, &identity(2)) < 1e-14);
    }

    #[test]
    fn svd_reconstructs_and_is_deterministic() {
        for (rows, cols) in [(9, 9), (4, 9), (9, 4)] {
            let g = pseudo_random(rows, cols, (rows * 31 + cols) as u64);
            let f = svd(&g).unwrap();
            let q = rows.min(cols);
            assert_eq!(f.u.shape(), (rows, q));
            assert_eq!(f.v.shape(), (cols, q));
            let scale = g.norm();
            assert!(max_abs_diff(&f.reconstruct(), &g) <= 1e-10 * scale);
            assert!(max_abs_diff(&(f.u.adjoint() * &f.u), &identity(q)) < 1e-12);
            assert!(max_abs_diff(&(f.v.adjoint() * &f.v), &identity(q)) < 1e-12);
            assert!(f.s.windows(2).all(|w| w[0] >= w[1]));
            assert!((trace_norm(&g) - f.s.iter().sum::<f64>()).abs() < 1e-12);
            assert_eq!(svd(&g).unwrap(), f);
            for k in 0..q {
                let col = f.u.column(k);
                let (pivot, _) = col
                    .iter()
                    .enumerate()
                    .fold((0, -1.0), |acc, (i, z)| if z.norm() > acc.1 { (i, z.norm()) } else { acc });
                assert!(col[pivot].im.abs() < 1e-15 && col[pivot].re > 0.0);
            }
        }
    }

    #[test]
    fn eigenvalue_extremes() {
        let h = cm(3, 3, &[-1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 2.0]);
        assert!((min_eigenvalue(&h).unwrap() + 1.0).abs() < 1e-14);
        assert!((max_eigenvalue(&h).unwrap() - 2.0).abs() < 1e-14);
        let mut bad = h.clone();
        bad[(0, 1)] = real(1e-3);
        assert!(matches!(
            min_eigenvalue(&bad),
            Err(Error::NotHermitian { .. })
        ));
    }

    #[test]
    fn hermitian_eigen_vectors_diagonalize() {
        let g = pseudo_random(5, 5, 9);
        let h = symmetrize(&g);
        let (vals, vecs) = hermitian_eigen(&h).unwrap();
        for (k, &lam) in vals.iter().enumerate() {
            let v = vecs.column(k).into_owned();
            let resid = &h * &v - v.scale(lam);
            assert!(resid.norm() < 1e-12);
        }
    }

    #[test]
    fn kron_mixed_product() {
        assert_eq!(kron(&identity(2), &identity(3)), identity(6));
        let a = pseudo_random(2, 2, 3);
        let b = pseudo_random(2, 2, 4);
        let cc = pseudo_random(2, 2, 5);
        let d = pseudo_random(2, 2, 6);
        let lhs = kron(&a, &b) * kron(&cc, &d);
        let rhs = kron(&(&a * &cc), &(&b * &d));
        assert!(max_abs_diff(&lhs, &rhs) < 1e-12);
    }

    #[test]
    fn max_entangled_projector_is_pure() {
        assert_eq!(max_entangled_projector(1), identity(1));
        let p2 = max_entangled_projector(2);
        let expected = cm(
            4,
            4,
            &[
                0.5, 0.0, 0.0, 0.5, //
                0.0, 0.0, 0.0, 0.0, //
                0.0, 0.0, 0.0, 0.0, //
                0.5, 0.0, 0.0, 0.5,
            ],
        );
        assert_eq!(p2, expected);
        for m in 1..5 {
            let p = max_entangled_projector(m);
            assert!((p.trace().re - 1.0).abs() < 1e-14);
            assert!(((&p * &p).trace().re - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn finite_check_reports_position() {
        let mut a = identity(3);
        a[(2, 1)] = c(f64::NAN, 0.0);
        assert_eq!(check_finite(&a), Err(Error::NonFinite { row: 2, col: 1 }));
    }
}
