//! Linear maps between matrix algebras and their use as entanglement tests.
//!
//! A map `Λ: M_a → M_b` is stored as the images of the matrix units,
//! `blocks[i·a + j] = Λ(|i⟩⟨j|)`. Read as an `a × a` block matrix these are
//! exactly the blocks of the associated witness, `Λ(|i⟩⟨j|) = ⟨i|W|j⟩`, so
//! [`from_witness`] and [`to_witness`] are mutually inverse without any
//! normalization factor.

use crate::criteria::DECISION_TOL;
use crate::error::{Error, Result};
use crate::linalg::{self, real, BipartiteDims, ComplexMatrix, C64};
use crate::states::{rng_from_seed, DensityMatrix, PureState};
use crate::witness::{Witness, WitnessOrigin};

#[derive(Debug, Clone, PartialEq)]
pub struct LinearMap {
    in_dim: usize,
    out_dim: usize,
    blocks: Vec<ComplexMatrix>,
}

impl LinearMap {
    pub fn from_blocks(in_dim: usize, out_dim: usize, blocks: Vec<ComplexMatrix>) -> Result<Self> {
        if in_dim == 0 || out_dim == 0 {
            return Err(Error::DimensionMismatch(
                "map dimensions must be positive".into(),
            ));
        }
        if blocks.len() != in_dim * in_dim {
            return Err(Error::DimensionMismatch(format!(
                "expected {} matrix-unit images, got {}",
                in_dim * in_dim,
                blocks.len()
            )));
        }
        if let Some(b) = blocks.iter().find(|b| b.shape() != (out_dim, out_dim)) {
            return Err(Error::DimensionMismatch(format!(
                "matrix-unit image must be {out_dim}x{out_dim}, got {}x{}",
                b.nrows(),
                b.ncols()
            )));
        }
        Ok(Self {
            in_dim,
            out_dim,
            blocks,
        })
    }

    /// Tabulates an arbitrary linear function on the matrix units.
    pub fn from_fn<F>(in_dim: usize, out_dim: usize, f: F) -> Result<Self>
    where
        F: Fn(&ComplexMatrix) -> ComplexMatrix,
    {
        let blocks = (0..in_dim * in_dim)
            .map(|k| f(&matrix_unit(in_dim, k / in_dim, k % in_dim)))
            .collect();
        Self::from_blocks(in_dim, out_dim, blocks)
    }

    pub fn identity(d: usize) -> Self {
        Self::from_fn(d, d, |x| x.clone()).expect("square identity map")
    }

    pub fn transposition(d: usize) -> Self {
        Self::from_fn(d, d, |x| x.transpose()).expect("square transposition map")
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    /// `Λ(|i⟩⟨j|)`.
    pub fn image_of_unit(&self, i: usize, j: usize) -> &ComplexMatrix {
        &self.blocks[i * self.in_dim + j]
    }

    /// `Λ(X) = Σ_{ij} X_{ij} Λ(|i⟩⟨j|)`.
    pub fn apply(&self, x: &ComplexMatrix) -> Result<ComplexMatrix> {
        let a = self.in_dim;
        if x.shape() != (a, a) {
            return Err(Error::DimensionMismatch(format!(
                "map input must be {a}x{a}, got {}x{}",
                x.nrows(),
                x.ncols()
            )));
        }
        let mut out = ComplexMatrix::zeros(self.out_dim, self.out_dim);
        for i in 0..a {
            for j in 0..a {
                let xij = x[(i, j)];
                if xij != C64::new(0.0, 0.0) {
                    out += self.image_of_unit(i, j) * xij;
                }
            }
        }
        Ok(out)
    }

    /// `(Id ⊗ Λ) ρ` on an `m × n` operator with `n = in_dim`; output is
    /// `m·out_dim` square, block `(i, j)` being `Λ(ρ_{ij})`.
    pub fn apply_id_tensor(&self, z: &ComplexMatrix, dims: BipartiteDims) -> Result<ComplexMatrix> {
        dims.check_square(z)?;
        if dims.n != self.in_dim {
            return Err(Error::DimensionMismatch(format!(
                "Id⊗Λ needs second subsystem of dimension {}, state is {dims}",
                self.in_dim
            )));
        }
        let (m, n, k) = (dims.m, dims.n, self.out_dim);
        let mut out = ComplexMatrix::zeros(m * k, m * k);
        for bi in 0..m {
            for bj in 0..m {
                let img = self.apply(&linalg::block(z, n, bi, bj))?;
                out.view_mut((bi * k, bj * k), (k, k)).copy_from(&img);
            }
        }
        Ok(out)
    }

    /// `(Λ ⊗ Id) ρ` on an `m × n` operator with `m = in_dim`:
    /// `Σ_{ij} Λ(|i⟩⟨j|) ⊗ ρ_{ij}`.
    pub fn apply_tensor_id(&self, z: &ComplexMatrix, dims: BipartiteDims) -> Result<ComplexMatrix> {
        dims.check_square(z)?;
        if dims.m != self.in_dim {
            return Err(Error::DimensionMismatch(format!(
                "Λ⊗Id needs first subsystem of dimension {}, state is {dims}",
                self.in_dim
            )));
        }
        let (m, n) = (dims.m, dims.n);
        let d = self.out_dim * n;
        let mut out = ComplexMatrix::zeros(d, d);
        for i in 0..m {
            for j in 0..m {
                out += linalg::kron(self.image_of_unit(i, j), &linalg::block(z, n, i, j));
            }
        }
        Ok(out)
    }

    /// Hilbert–Schmidt adjoint: `Tr(Λ(A)† B) = Tr(A† Λ′(B))`.
    pub fn dual(&self) -> Self {
        let (a, b) = (self.in_dim, self.out_dim);
        let blocks = (0..b * b)
            .map(|kl| {
                let (k, l) = (kl / b, kl % b);
                ComplexMatrix::from_fn(a, a, |i, j| self.image_of_unit(i, j)[(k, l)].conj())
            })
            .collect();
        Self {
            in_dim: b,
            out_dim: a,
            blocks,
        }
    }

    /// Largest `‖Λ(|j⟩⟨i|) − Λ(|i⟩⟨j|)†‖` entry; zero for maps that preserve
    /// Hermiticity.
    pub fn hermiticity_defect(&self) -> f64 {
        let a = self.in_dim;
        let mut defect = 0.0_f64;
        for i in 0..a {
            for j in i..a {
                let d = linalg::max_abs_diff(
                    self.image_of_unit(j, i),
                    &self.image_of_unit(i, j).adjoint(),
                );
                defect = defect.max(d);
            }
        }
        defect
    }

    /// Unnormalized Choi matrix `Σ_{ij} |i⟩⟨j| ⊗ Λ(|i⟩⟨j|)`.
    pub fn choi_matrix(&self) -> ComplexMatrix {
        let (a, b) = (self.in_dim, self.out_dim);
        let mut c = ComplexMatrix::zeros(a * b, a * b);
        for i in 0..a {
            for j in 0..a {
                c.view_mut((i * b, j * b), (b, b))
                    .copy_from(self.image_of_unit(i, j));
            }
        }
        c
    }

    /// Choi matrix scaled by `1/in_dim`, i.e. `(Id ⊗ Λ) P₊`.
    pub fn normalized_choi_matrix(&self) -> ComplexMatrix {
        self.choi_matrix().scale(1.0 / self.in_dim as f64)
    }
}

fn matrix_unit(d: usize, i: usize, j: usize) -> ComplexMatrix {
    let mut e = ComplexMatrix::zeros(d, d);
    e[(i, j)] = real(1.0);
    e
}

/// `Λ(|i⟩⟨j|) = ⟨i|W|j⟩`: a map `M_m → M_n` from a witness on `m × n`.
pub fn from_witness(w: &Witness) -> LinearMap {
    let BipartiteDims { m, n } = w.dims();
    let blocks = (0..m * m).map(|k| w.block(k / m, k % m)).collect();
    LinearMap {
        in_dim: m,
        out_dim: n,
        blocks,
    }
}

/// Inverse of [`from_witness`]: the unnormalized Choi matrix as a witness.
pub fn to_witness(map: &LinearMap) -> Result<Witness> {
    let dims = BipartiteDims::new(map.in_dim, map.out_dim)?;
    Witness::new(map.choi_matrix(), dims, WitnessOrigin::External)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MapDetectionReport {
    pub lambda_min: f64,
    pub entangled: bool,
    /// Ascending spectrum of the transformed operator.
    pub operator_spectrum: Vec<f64>,
}

impl MapDetectionReport {
    fn from_operator(op: &ComplexMatrix) -> Self {
        let spectrum = linalg::eigenvalues_symmetrized(op);
        let lambda_min = spectrum[0];
        Self {
            lambda_min,
            entangled: lambda_min < -DECISION_TOL,
            operator_spectrum: spectrum,
        }
    }

    /// `min{0, λ_min}`.
    pub fn clipped(&self) -> f64 {
        self.lambda_min.min(0.0)
    }
}

/// Smallest eigenvalue of `(Id ⊗ Λ) ρ`.
pub fn detection_value(map: &LinearMap, rho: &DensityMatrix) -> Result<MapDetectionReport> {
    let op = map.apply_id_tensor(rho.matrix(), rho.dims())?;
    Ok(MapDetectionReport::from_operator(&op))
}

/// Smallest eigenvalue of `(Λ ⊗ Id) ρ`.
pub fn detection_value_tensor_id(
    map: &LinearMap,
    rho: &DensityMatrix,
) -> Result<MapDetectionReport> {
    let op = map.apply_tensor_id(rho.matrix(), rho.dims())?;
    Ok(MapDetectionReport::from_operator(&op))
}

/// Result of a sampled positivity check over Haar-random pure inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct PositivityReport {
    pub min_eigenvalue: f64,
    pub samples: usize,
    /// Input that attained the minimum.
    pub worst_input: Option<PureState>,
}

impl PositivityReport {
    pub fn is_positive(&self, tol: f64) -> bool {
        self.min_eigenvalue >= -tol
    }
}

/// Minimum over sampled pure `ψ` of `λ_min(Λ(|ψ⟩⟨ψ|))`. Sampling cannot prove
/// positivity; it can only refute it.
pub fn sampled_positivity(map: &LinearMap, samples: usize, seed: u64) -> PositivityReport {
    let mut rng = rng_from_seed(seed);
    let mut report = PositivityReport {
        min_eigenvalue: f64::INFINITY,
        samples,
        worst_input: None,
    };
    for _ in 0..samples {
        let psi = PureState::random(map.in_dim, &mut rng);
        let img = map.apply(&psi.projector()).expect("input has map dimension");
        let lam = linalg::eigenvalues_symmetrized(&img)[0];
        if lam < report.min_eigenvalue {
            report.min_eigenvalue = lam;
            report.worst_input = Some(psi);
        }
    }
    report
}

fn check_tang_params(u: f64, eps: f64) -> Result<()> {
    if !(u > 0.0 && u < 1.0) {
        return Err(Error::ParameterOutOfRange {
            name: "u",
            value: u,
            interval: "(0, 1)",
        });
    }
    if !(eps > 0.0 && eps <= u * u / 6.0) {
        return Err(Error::ParameterOutOfRange {
            name: "eps",
            value: eps,
            interval: "(0, u^2/6]",
        });
    }
    Ok(())
}

/// The Tang map `M₄ → M₂`, with `0 < u < 1`, `0 < ε ≤ u²/6` (default `u²/6`).
///
/// With 1-based entries `a_{ij}` of the input:
///
/// ```text
/// out11 = (1−ε)a11 + a22 + 2a33 + a44
/// out12 = −2a23 − 2a34 + u·a31 − a12
/// out21 = −2a32 − 2a43 + u·a13 − a21
/// out22 = u²a11 − u·a14 + 2a22 − u·a41 + a44
/// ```
///
/// Note that in this form the map is not positive: for
/// `ψ = (1, 0, 1, u)` the `out22` entry of `Λ(|ψ⟩⟨ψ|)` vanishes while
/// `out12 = −u`, giving a negative eigenvalue.
pub fn tang_map(u: f64, eps: Option<f64>) -> Result<LinearMap> {
    let eps = eps.unwrap_or(u * u / 6.0);
    check_tang_params(u, eps)?;
    LinearMap::from_fn(4, 2, |x| {
        let a = |i: usize, j: usize| x[(i - 1, j - 1)];
        let mut out = ComplexMatrix::zeros(2, 2);
        out[(0, 0)] = a(1, 1) * (1.0 - eps) + a(2, 2) + a(3, 3) * 2.0 + a(4, 4);
        out[(0, 1)] = -a(2, 3) * 2.0 - a(3, 4) * 2.0 + a(3, 1) * u - a(1, 2);
        out[(1, 0)] = -a(3, 2) * 2.0 - a(4, 3) * 2.0 + a(1, 3) * u - a(2, 1);
        out[(1, 1)] = a(1, 1) * (u * u) - a(1, 4) * u + a(2, 2) * 2.0 - a(4, 1) * u + a(4, 4);
        out
    })
}

/// Hilbert–Schmidt dual of [`tang_map`], `M₂ → M₄`.
pub fn tang_dual(u: f64, eps: Option<f64>) -> Result<LinearMap> {
    Ok(tang_map(u, eps)?.dual())
}

#[derive(Debug, Clone, PartialEq)]
pub struct IndecomposabilityReport {
    /// `λ_min(ρ^{T_A})`.
    pub ppt_min_eigenvalue: f64,
    /// `λ_min((Id ⊗ Λ) ρ)`.
    pub map_lambda_min: f64,
    /// The state is PPT and the map detects it.
    pub certified: bool,
}

/// A map that detects a PPT state cannot be of the form `Λ₁ + T∘Λ₂` with
/// `Λ₁, Λ₂` completely positive.
pub fn indecomposability_certificate(
    map: &LinearMap,
    rho: &DensityMatrix,
) -> Result<IndecomposabilityReport> {
    let ppt_min = linalg::eigenvalues_symmetrized(&rho.partial_transpose())[0];
    let det = detection_value(map, rho)?;
    Ok(IndecomposabilityReport {
        ppt_min_eigenvalue: ppt_min,
        map_lambda_min: det.lambda_min,
        certified: ppt_min >= -DECISION_TOL && det.entangled,
    })
}
