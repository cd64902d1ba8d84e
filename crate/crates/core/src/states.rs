//! Bipartite density matrices: the fixed test families, noisy mixtures and
//! seeded random samplers.
//!
//! All randomness comes from [`StateRng`] (ChaCha8 seeded with an explicit
//! 64-bit seed), so every sampler is reproducible bit for bit.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{
    self, c, kron, partial_transpose_a, real, BipartiteDims, ComplexMatrix, ComplexVector,
    HERMITIAN_TOL,
};

/// Deterministic generator used by every sampler in the crate.
pub type StateRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> StateRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub const TRACE_TOL: f64 = 1e-10;
pub const PSD_TOL: f64 = 1e-9;

/// A validated bipartite state: Hermitian, unit trace, positive semidefinite.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    mat: ComplexMatrix,
    dims: BipartiteDims,
}

impl DensityMatrix {
    /// Validates `mat` and stores its Hermitian part.
    pub fn new(mat: ComplexMatrix, dims: BipartiteDims) -> Result<Self> {
        dims.check_square(&mat)?;
        linalg::check_finite(&mat)?;
        let mat = linalg::checked_symmetrize(&mat)?;
        let tr = mat.trace().re;
        if (tr - 1.0).abs() > TRACE_TOL {
            return Err(Error::InvalidState(format!(
                "trace {tr} differs from 1 by more than {TRACE_TOL:e}"
            )));
        }
        let lam = linalg::eigenvalues_symmetrized(&mat)[0];
        if lam < -PSD_TOL {
            return Err(Error::InvalidState(format!(
                "minimum eigenvalue {lam:e} is below -{PSD_TOL:e}"
            )));
        }
        Ok(Self { mat, dims })
    }

    /// `I/(mn)`.
    pub fn maximally_mixed(dims: BipartiteDims) -> Self {
        let d = dims.total();
        Self {
            mat: linalg::identity(d).scale(1.0 / d as f64),
            dims,
        }
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.mat
    }

    pub fn dims(&self) -> BipartiteDims {
        self.dims
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.mat
    }

    pub fn partial_transpose(&self) -> ComplexMatrix {
        partial_transpose_a(&self.mat, self.dims).expect("dims validated at construction")
    }

    pub fn realigned(&self) -> ComplexMatrix {
        linalg::realign(&self.mat, self.dims).expect("dims validated at construction")
    }

    /// Eigenvalues, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        linalg::eigenvalues_symmetrized(&self.mat)
    }

    /// `U ρ U†`; the result is re-validated.
    pub fn conjugated(&self, u: &ComplexMatrix) -> Result<Self> {
        Self::new(u * &self.mat * u.adjoint(), self.dims)
    }
}

/// Unit vector in `C^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    vec: ComplexVector,
}

impl PureState {
    pub const NORM_TOL: f64 = 1e-12;

    pub fn new(vec: ComplexVector) -> Result<Self> {
        let norm = vec.norm();
        if (norm - 1.0).abs() > Self::NORM_TOL {
            return Err(Error::InvalidState(format!(
                "pure state norm {norm} is not 1"
            )));
        }
        Ok(Self { vec })
    }

    /// Normalizes a non-zero vector.
    pub fn normalized(vec: ComplexVector) -> Result<Self> {
        let norm = vec.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::InvalidState("cannot normalize a zero vector".into()));
        }
        Ok(Self {
            vec: vec.unscale(norm),
        })
    }

    /// Haar-random state: a normalized standard complex Gaussian vector.
    pub fn random(dim: usize, rng: &mut StateRng) -> Self {
        loop {
            let v = ComplexVector::from_fn(dim, |_, _| gaussian(rng));
            if let Ok(s) = Self::normalized(v) {
                return s;
            }
        }
    }

    pub fn vector(&self) -> &ComplexVector {
        &self.vec
    }

    pub fn dim(&self) -> usize {
        self.vec.len()
    }

    pub fn projector(&self) -> ComplexMatrix {
        linalg::outer(&self.vec)
    }

    /// `|self⟩ ⊗ |other⟩`.
    pub fn tensor(&self, other: &PureState) -> PureState {
        PureState {
            vec: self.vec.kronecker(&other.vec),
        }
    }
}

fn gaussian(rng: &mut StateRng) -> linalg::C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    c(re, im)
}

/// Swap operator `V = Σ_{ij} |ij⟩⟨ji|` on `C^d ⊗ C^d`.
pub fn swap_operator(d: usize) -> ComplexMatrix {
    let mut v = ComplexMatrix::zeros(d * d, d * d);
    for i in 0..d {
        for j in 0..d {
            v[(i * d + j, j * d + i)] = real(1.0);
        }
    }
    v
}

/// Two-qubit Werner family `((2−f)·I + (2f−1)·V) / 6`, `f ∈ [−1, 1]`.
/// Entangled exactly for `f < 0`.
pub fn werner_2x2(f: f64) -> Result<DensityMatrix> {
    if !(-1.0..=1.0).contains(&f) {
        return Err(Error::ParameterOutOfRange {
            name: "f",
            value: f,
            interval: "[-1, 1]",
        });
    }
    let mat = (linalg::identity(4).scale(2.0 - f) + swap_operator(2).scale(2.0 * f - 1.0))
        .scale(1.0 / 6.0);
    DensityMatrix::new(mat, BipartiteDims { m: 2, n: 2 })
}

fn basis3(k: usize) -> ComplexVector {
    let mut v = ComplexVector::zeros(3);
    v[k] = real(1.0);
    v
}

/// The five orthonormal product vectors of the 3×3 "Tiles" unextendible
/// product basis.
pub fn upb_tiles_basis() -> [PureState; 5] {
    let e = |k| basis3(k);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let minus = |a: usize, b: usize| (e(a) - e(b)).scale(s);
    let plus_all = (e(0) + e(1) + e(2)).scale(1.0 / 3f64.sqrt());
    let prod = |a: ComplexVector, b: ComplexVector| PureState { vec: a.kronecker(&b) };
    [
        prod(e(0), minus(0, 1)),
        prod(minus(0, 1), e(2)),
        prod(e(2), minus(1, 2)),
        prod(minus(1, 2), e(0)),
        prod(plus_all.clone(), plus_all),
    ]
}

/// Bound entangled 3×3 state `(I − Σ_i |ψ_i⟩⟨ψ_i|) / 4` built from the Tiles UPB.
pub fn upb_tiles_bes() -> DensityMatrix {
    let mut mat = linalg::identity(9);
    for psi in upb_tiles_basis() {
        mat -= psi.projector();
    }
    DensityMatrix::new(mat.scale(0.25), BipartiteDims { m: 3, n: 3 })
        .expect("Tiles state is a valid density matrix")
}

/// Horodecki's 2×4 bound entangled family, `b ∈ (0, 1)`.
pub fn horodecki_2x4(b: f64) -> Result<DensityMatrix> {
    if !(b > 0.0 && b < 1.0) {
        return Err(Error::ParameterOutOfRange {
            name: "b",
            value: b,
            interval: "(0, 1)",
        });
    }
    let mut r = [[0.0_f64; 8]; 8];
    for (i, row) in r.iter_mut().enumerate() {
        row[i] = b;
    }
    let d = (1.0 + b) / 2.0;
    let s = (1.0 - b * b).sqrt() / 2.0;
    r[4][4] = d;
    r[7][7] = d;
    for (i, j) in [(0, 5), (1, 6), (2, 7)] {
        r[i][j] = b;
        r[j][i] = b;
    }
    r[4][7] = s;
    r[7][4] = s;
    let norm = 1.0 / (7.0 * b + 1.0);
    let mat = ComplexMatrix::from_fn(8, 8, |i, j| real(r[i][j] * norm));
    DensityMatrix::new(mat, BipartiteDims { m: 2, n: 4 })
}

/// `p·ρ + (1−p)·I/d`.
pub fn noisy_mixture(rho: &DensityMatrix, p: f64) -> Result<DensityMatrix> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::ParameterOutOfRange {
            name: "p",
            value: p,
            interval: "[0, 1]",
        });
    }
    let d = rho.dims.total();
    let mat = rho.mat.scale(p) + linalg::identity(d).scale((1.0 - p) / d as f64);
    DensityMatrix::new(mat, rho.dims)
}

/// Convex combination `Σ w_k ρ_k` of states with common dims; weights are
/// normalized.
pub fn convex_mixture(parts: &[(f64, DensityMatrix)]) -> Result<DensityMatrix> {
    let first = parts
        .first()
        .ok_or_else(|| Error::InvalidState("empty mixture".into()))?;
    let dims = first.1.dims;
    let total: f64 = parts.iter().map(|(w, _)| *w).sum();
    if total.is_nan() || total <= 0.0 || parts.iter().any(|(w, _)| *w < 0.0) {
        return Err(Error::InvalidState("mixture weights must be nonnegative".into()));
    }
    let d = dims.total();
    let mut mat = ComplexMatrix::zeros(d, d);
    for (w, rho) in parts {
        if rho.dims != dims {
            return Err(Error::DimensionMismatch(format!(
                "cannot mix {} and {} states",
                dims, rho.dims
            )));
        }
        mat += rho.mat.scale(*w / total);
    }
    DensityMatrix::new(mat, dims)
}

/// `GG† / Tr(GG†)` for a standard complex Gaussian `G`, drawn from `rng`.
pub fn random_density_with(dims: BipartiteDims, rng: &mut StateRng) -> DensityMatrix {
    let d = dims.total();
    let g = ComplexMatrix::from_fn(d, d, |_, _| gaussian(rng));
    let gg = linalg::symmetrize(&(&g * g.adjoint()));
    let tr = gg.trace().re;
    DensityMatrix::new(gg.unscale(tr), dims).expect("Gram matrix is a valid state")
}

pub fn random_density(dims: BipartiteDims, seed: u64) -> DensityMatrix {
    random_density_with(dims, &mut rng_from_seed(seed))
}

/// Random state with `σ = σ^{T_A}` exactly: draws [`random_density_with`],
/// averages it with its partial transpose and accepts the first PSD result.
pub fn random_ppt_symmetric_with(
    dims: BipartiteDims,
    rng: &mut StateRng,
    max_tries: usize,
) -> Result<DensityMatrix> {
    for _ in 0..max_tries {
        let sigma = random_density_with(dims, rng);
        let pt = sigma.partial_transpose();
        let sym = (&sigma.mat + &pt).scale(0.5);
        let lam = linalg::eigenvalues_symmetrized(&sym)[0];
        if lam >= -HERMITIAN_TOL {
            return DensityMatrix::new(sym, dims);
        }
    }
    Err(Error::SamplingExhausted(max_tries))
}

pub fn random_ppt_symmetric(
    dims: BipartiteDims,
    seed: u64,
    max_tries: usize,
) -> Result<DensityMatrix> {
    random_ppt_symmetric_with(dims, &mut rng_from_seed(seed), max_tries)
}

/// `|a⟩⟨a| ⊗ |b⟩⟨b|` with Haar-random `a ∈ C^m`, `b ∈ C^n`.
pub fn random_pure_product_with(dims: BipartiteDims, rng: &mut StateRng) -> DensityMatrix {
    let a = PureState::random(dims.m, rng);
    let b = PureState::random(dims.n, rng);
    product_state(&a, &b)
}

pub fn random_pure_product(dims: BipartiteDims, seed: u64) -> DensityMatrix {
    random_pure_product_with(dims, &mut rng_from_seed(seed))
}

/// `|a⟩⟨a| ⊗ |b⟩⟨b|`.
pub fn product_state(a: &PureState, b: &PureState) -> DensityMatrix {
    let mat = kron(&a.projector(), &b.projector());
    DensityMatrix {
        mat: linalg::symmetrize(&mat),
        dims: BipartiteDims {
            m: a.dim(),
            n: b.dim(),
        },
    }
}

/// Separable state: random convex weights over `terms` random pure products.
pub fn random_separable_with(
    dims: BipartiteDims,
    terms: usize,
    rng: &mut StateRng,
) -> Result<DensityMatrix> {
    let parts: Vec<(f64, DensityMatrix)> = (0..terms.max(1))
        .map(|_| {
            let w: f64 = rng.random::<f64>() + 1e-3;
            (w, random_pure_product_with(dims, rng))
        })
        .collect();
    convex_mixture(&parts)
}

/// Haar-random unitary from the QR decomposition of a complex Gaussian matrix,
/// with the phases of `R`'s diagonal absorbed into `Q`.
pub fn random_unitary(d: usize, rng: &mut StateRng) -> ComplexMatrix {
    let g = ComplexMatrix::from_fn(d, d, |_, _| gaussian(rng));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for k in 0..d {
        let z = r[(k, k)];
        let n = z.norm();
        if n > 0.0 {
            let phase = z / n;
            let mut col = q.column_mut(k);
            col *= phase;
        }
    }
    q
}

/// `U_A ⊗ U_B` for independent Haar unitaries.
pub fn random_local_unitary(dims: BipartiteDims, rng: &mut StateRng) -> ComplexMatrix {
    let ua = random_unitary(dims.m, rng);
    let ub = random_unitary(dims.n, rng);
    kron(&ua, &ub)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{max_abs_diff, min_eigenvalue, trace_norm};

    fn d(m: usize, n: usize) -> BipartiteDims {
        BipartiteDims::new(m, n).unwrap()
    }

    #[test]
    fn werner_half_is_maximally_mixed() {
        let rho = werner_2x2(0.5).unwrap();
        assert!(max_abs_diff(rho.matrix(), &linalg::identity(4).scale(0.25)) < 1e-15);
        for f in [-1.0, 0.0, 0.5, 1.0] {
            assert!((werner_2x2(f).unwrap().matrix().trace().re - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn werner_singlet_end_is_npt() {
        // f = -1: ρ = (3I - 3V)/6 = singlet projector; ρ^{T_A} has eigenvalue -1/2
        let rho = werner_2x2(-1.0).unwrap();
        let lam = min_eigenvalue(&rho.partial_transpose()).unwrap();
        assert!((lam + 0.5).abs() < 1e-12);
    }

    #[test]
    fn werner_rejects_out_of_range() {
        assert!(matches!(
            werner_2x2(1.5),
            Err(Error::ParameterOutOfRange { name: "f", .. })
        ));
        assert!(werner_2x2(f64::NAN).is_err());
    }

    #[test]
    fn werner_ppt_boundary_on_grid() {
        for k in 0..=100 {
            let f = -1.0 + 0.99 * k as f64 / 100.0;
            let lam = min_eigenvalue(&werner_2x2(f).unwrap().partial_transpose()).unwrap();
            assert!(lam < -1e-6, "f = {f}: {lam}");
        }
        for k in 0..=100 {
            let f = k as f64 / 100.0;
            let lam = min_eigenvalue(&werner_2x2(f).unwrap().partial_transpose()).unwrap();
            assert!(lam >= -1e-12, "f = {f}: {lam}");
        }
    }

    #[test]
    fn tiles_basis_is_orthonormal() {
        let basis = upb_tiles_basis();
        for (i, a) in basis.iter().enumerate() {
            for (j, b) in basis.iter().enumerate() {
                let ip = a.vector().dotc(b.vector());
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((ip - real(expected)).norm() < 1e-15, "<{i}|{j}> = {ip}");
            }
        }
    }

    #[test]
    fn tiles_state_is_ppt_but_realignment_exceeds_one() {
        let rho = upb_tiles_bes();
        assert!(min_eigenvalue(&rho.partial_transpose()).unwrap() >= -1e-10);
        assert!(trace_norm(&rho.realigned()) > 1.0);
        // rank 4 projector / 4
        let ev = rho.eigenvalues();
        assert_eq!(ev.iter().filter(|&&x| x > 1e-9).count(), 4);
    }

    #[test]
    fn horodecki_family_is_ppt_real_symmetric() {
        for b in [0.2, 0.5, 0.8] {
            let rho = horodecki_2x4(b).unwrap();
            assert!(min_eigenvalue(&rho.partial_transpose()).unwrap() >= -1e-10);
            let m = rho.matrix();
            assert!(m.iter().all(|z| z.im == 0.0));
            assert_eq!(m, &m.transpose());
        }
        let rho = horodecki_2x4(0.5).unwrap();
        assert!((rho.matrix().trace().re - 1.0).abs() < 1e-15);
        assert!(horodecki_2x4(0.0).is_err());
        assert!(horodecki_2x4(1.0).is_err());
    }

    #[test]
    fn noisy_mixture_endpoints_and_affinity() {
        let rho = upb_tiles_bes();
        let zero = noisy_mixture(&rho, 0.0).unwrap();
        assert!(max_abs_diff(zero.matrix(), &linalg::identity(9).scale(1.0 / 9.0)) < 1e-15);
        assert!(max_abs_diff(noisy_mixture(&rho, 1.0).unwrap().matrix(), rho.matrix()) < 1e-15);
        assert!((noisy_mixture(&rho, 0.3).unwrap().matrix().trace().re - 1.0).abs() < 1e-14);
        let (p1, p2) = (0.2, 0.9);
        let mid = noisy_mixture(&rho, 0.5 * (p1 + p2)).unwrap();
        let avg = (noisy_mixture(&rho, p1).unwrap().into_matrix()
            + noisy_mixture(&rho, p2).unwrap().into_matrix())
        .scale(0.5);
        assert!(max_abs_diff(mid.matrix(), &avg) < 1e-12);
        assert!(noisy_mixture(&rho, 1.01).is_err());
    }

    #[test]
    fn random_density_is_valid_and_seeded() {
        for seed in 0..1000 {
            let rho = random_density(d(2, 3), seed);
            assert!(rho.eigenvalues()[0] >= -1e-12);
            assert!((rho.matrix().trace().re - 1.0).abs() < 1e-12);
        }
        assert_eq!(random_density(d(3, 3), 7), random_density(d(3, 3), 7));
        assert_ne!(random_density(d(3, 3), 7), random_density(d(3, 3), 8));
    }

    #[test]
    fn ppt_symmetric_sampler_is_exactly_symmetric() {
        for seed in 0..20 {
            let sigma = random_ppt_symmetric(d(3, 3), seed, 1000).unwrap();
            assert_eq!(&sigma.partial_transpose(), sigma.matrix());
            assert!(sigma.eigenvalues()[0] >= -1e-10);
            assert!((trace_norm(&sigma.partial_transpose()) - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn ppt_symmetric_sampler_reports_exhaustion() {
        assert_eq!(
            random_ppt_symmetric(d(3, 3), 1, 0),
            Err(Error::SamplingExhausted(0))
        );
    }

    #[test]
    fn pure_product_saturates_both_criteria() {
        for seed in 0..50 {
            let rho = random_pure_product(d(2, 3), seed);
            let ev = rho.eigenvalues();
            assert!((ev[5] - 1.0).abs() < 1e-12 && ev[4].abs() < 1e-12);
            assert!((trace_norm(&rho.realigned()) - 1.0).abs() < 1e-10);
            assert!(min_eigenvalue(&rho.partial_transpose()).unwrap() >= -1e-12);
        }
    }

    #[test]
    fn random_unitary_is_unitary() {
        let mut rng = rng_from_seed(3);
        let u = random_unitary(4, &mut rng);
        assert!(max_abs_diff(&(u.adjoint() * &u), &linalg::identity(4)) < 1e-12);
    }

    #[test]
    fn density_validation_rejects_bad_input() {
        let dims = d(2, 2);
        assert!(matches!(
            DensityMatrix::new(linalg::identity(4), dims),
            Err(Error::InvalidState(_))
        ));
        let mut neg = linalg::identity(4).scale(0.5);
        neg[(0, 0)] = real(-0.5);
        neg[(1, 1)] = real(0.5);
        assert!(DensityMatrix::new(neg, dims).is_err());
        assert!(DensityMatrix::new(linalg::identity(3).scale(1.0 / 3.0), dims).is_err());
        let mut nan = linalg::identity(4).scale(0.25);
        nan[(0, 0)] = c(f64::NAN, 0.0);
        assert!(matches!(
            DensityMatrix::new(nan, dims),
            Err(Error::NonFinite { .. })
        ));
    }
}
