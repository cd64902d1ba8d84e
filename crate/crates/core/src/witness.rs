//! Entanglement witnesses.
//!
//! Three constructions are provided, each tied to a state `ρ`:
//!
//! * [`realignment_witness`]: `W = I − (R⁻¹(U* Vᵀ))ᵀ` from the SVD
//!   `R(ρ) = U Σ V†`, with `Tr(Wρ) = 1 − ‖R(ρ)‖`;
//! * [`partial_transpose_witness`]: `W = I − (V U†)^{T_A}` from the SVD
//!   `ρ^{T_A} = U Σ V†`, with `Tr(Wρ) = 1 − ‖ρ^{T_A}‖`;
//! * [`projection_witness`]: `W = ε I − ρ`, `ε` the largest overlap of `ρ`
//!   with a pure product state.
//!
//! Any block-positive `W` can be shifted to `W − ε I` by [`optimize`], where
//! `ε = min Tr(W ρ_A ⊗ ρ_B)`. The minimum over `ρ_B` is the smallest
//! eigenvalue of `G(a) = Σ_{ij} W_{ij} a_j a_i*`, which leaves a search over
//! the pure state `a` of the first subsystem only.

use std::fmt;

use crate::criteria::DECISION_TOL;
use crate::error::{Error, Result};
use crate::linalg::{
    self, partial_transpose_a, realign, realign_inverse, BipartiteDims, ComplexMatrix,
    ComplexVector, C64,
};
use crate::states::{rng_from_seed, DensityMatrix, PureState, StateRng};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WitnessOrigin {
    /// Built from the SVD of the realigned state.
    Realignment,
    /// Built from the SVD of the partial transpose.
    PartialTranspose,
    /// `ε I − ρ`.
    Projection { epsilon: f64 },
    /// `W − ε I` for a previously built `W`.
    Optimized { epsilon: f64 },
    /// Read from a file or supplied by the caller.
    External,
}

impl WitnessOrigin {
    pub fn label(&self) -> &'static str {
        match self {
            WitnessOrigin::Realignment => "thm1",
            WitnessOrigin::PartialTranspose => "thm2",
            WitnessOrigin::Projection { .. } => "projection",
            WitnessOrigin::Optimized { .. } => "optimized",
            WitnessOrigin::External => "external",
        }
    }
}

impl fmt::Display for WitnessOrigin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Hermitian observable on `C^m ⊗ C^n`.
#[derive(Debug, Clone, PartialEq)]
pub struct Witness {
    mat: ComplexMatrix,
    dims: BipartiteDims,
    origin: WitnessOrigin,
    construction_defect: f64,
}

impl Witness {
    /// Validates Hermiticity within [`linalg::HERMITIAN_TOL`] and stores the
    /// Hermitian part.
    pub fn new(mat: ComplexMatrix, dims: BipartiteDims, origin: WitnessOrigin) -> Result<Self> {
        dims.check_square(&mat)?;
        linalg::check_finite(&mat)?;
        let mat = linalg::checked_symmetrize(&mat)?;
        Ok(Self {
            mat,
            dims,
            origin,
            construction_defect: 0.0,
        })
    }

    /// Symmetrizes unconditionally, remembering how far from Hermitian the
    /// raw construction was.
    fn from_construction(raw: ComplexMatrix, dims: BipartiteDims, origin: WitnessOrigin) -> Self {
        let construction_defect = linalg::hermitian_defect(&raw);
        Self {
            mat: linalg::symmetrize(&raw),
            dims,
            origin,
            construction_defect,
        }
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.mat
    }

    pub fn dims(&self) -> BipartiteDims {
        self.dims
    }

    pub fn origin(&self) -> WitnessOrigin {
        self.origin
    }

    /// Relative Hermiticity defect of the matrix before symmetrization.
    /// Non-zero only when zero singular values leave the SVD factors free.
    pub fn construction_defect(&self) -> f64 {
        self.construction_defect
    }

    pub fn min_eigenvalue(&self) -> f64 {
        linalg::eigenvalues_symmetrized(&self.mat)[0]
    }

    /// A witness is useful when it has a negative eigenvalue, i.e. some state
    /// can be detected by it at all.
    pub fn is_useful(&self) -> bool {
        self.min_eigenvalue() < -DECISION_TOL
    }

    /// `n × n` block `(i, j)`.
    pub fn block(&self, i: usize, j: usize) -> ComplexMatrix {
        linalg::block(&self.mat, self.dims.n, i, j)
    }

    /// `⟨a⊗b| W |a⊗b⟩`.
    pub fn product_expectation(&self, a: &PureState, b: &PureState) -> f64 {
        let ab = a.tensor(b);
        ab.vector().dotc(&(&self.mat * ab.vector())).re
    }
}

/// `W = I − (R⁻¹(U* Vᵀ))ᵀ` for `R(ρ) = U Σ V†`.
pub fn realignment_witness(rho: &DensityMatrix) -> Result<Witness> {
    let dims = rho.dims();
    let f = linalg::svd(&realign(rho.matrix(), dims)?)?;
    // W₁ᵀ = (V U†)ᵀ = U* Vᵀ
    let w1t = f.u.conjugate() * f.v.transpose();
    let w2 = realign_inverse(&w1t, dims)?.transpose();
    let raw = linalg::identity(dims.total()) - w2;
    Ok(Witness::from_construction(raw, dims, WitnessOrigin::Realignment))
}

/// `W = I − (V U†)^{T_A}` for `ρ^{T_A} = U Σ V†`.
pub fn partial_transpose_witness(rho: &DensityMatrix) -> Result<Witness> {
    let dims = rho.dims();
    let f = linalg::svd(&rho.partial_transpose())?;
    let vu = &f.v * f.u.adjoint();
    let raw = linalg::identity(dims.total()) - partial_transpose_a(&vu, dims)?;
    Ok(Witness::from_construction(
        raw,
        dims,
        WitnessOrigin::PartialTranspose,
    ))
}

/// `W = ε I − ρ` with `ε = max Tr(ρ · ρ_A ⊗ ρ_B)` over pure products.
pub fn projection_witness(
    rho: &DensityMatrix,
    opts: &ExtremumOptions,
) -> Result<(Witness, ProductExtremum)> {
    let dims = rho.dims();
    let ext = product_expectation_extremum(rho.matrix(), dims, ExtremumMode::Max, opts)?;
    let mat = linalg::identity(dims.total()).scale(ext.value) - rho.matrix();
    let w = Witness::new(
        mat,
        dims,
        WitnessOrigin::Projection { epsilon: ext.value },
    )?;
    Ok((w, ext))
}

/// `W′ = W − ε I` with `ε = min Tr(W ρ_A ⊗ ρ_B)`.
pub fn optimize(w: &Witness, opts: &ExtremumOptions) -> Result<(Witness, ProductExtremum)> {
    let ext = product_expectation_extremum(&w.mat, w.dims, ExtremumMode::Min, opts)?;
    let mat = &w.mat - linalg::identity(w.dims.total()).scale(ext.value);
    let shifted = Witness {
        mat: linalg::symmetrize(&mat),
        dims: w.dims,
        origin: WitnessOrigin::Optimized { epsilon: ext.value },
        construction_defect: w.construction_defect,
    };
    Ok((shifted, ext))
}

/// `Re Tr(W ρ)`.
pub fn evaluate(w: &Witness, rho: &DensityMatrix) -> Result<f64> {
    if w.dims != rho.dims() {
        return Err(Error::DimensionMismatch(format!(
            "witness is {} but state is {}",
            w.dims,
            rho.dims()
        )));
    }
    let t = linalg::trace_of_product(&w.mat, rho.matrix());
    debug_assert!(
        t.im.abs() <= 1e-10 * (1.0 + t.re.abs()),
        "imaginary residue {} in Tr(Wρ)",
        t.im
    );
    Ok(t.re)
}

/// `Tr(Wρ) < 0` beyond the decision tolerance.
pub fn detects(w: &Witness, rho: &DensityMatrix) -> Result<bool> {
    Ok(evaluate(w, rho)? < -DECISION_TOL)
}

/// Smallest `⟨a⊗b|W|a⊗b⟩` over `samples` Haar-random pure products.
pub fn sampled_block_positivity(w: &Witness, samples: usize, seed: u64) -> f64 {
    let mut rng = rng_from_seed(seed);
    (0..samples)
        .map(|_| {
            let a = PureState::random(w.dims.m, &mut rng);
            let b = PureState::random(w.dims.n, &mut rng);
            w.product_expectation(&a, &b)
        })
        .fold(f64::INFINITY, f64::min)
}

/// Singular-value structure of `R(ρ)`; zero or clustered singular values leave
/// the realignment witness partly convention dependent.
#[derive(Debug, Clone, PartialEq)]
pub struct SvdDiagnostic {
    pub singular_values: Vec<f64>,
    /// Singular values below `1e-12 · σ_max`.
    pub zero_count: usize,
    /// Smallest gap between consecutive non-zero singular values, relative to `σ_max`.
    pub min_relative_gap: f64,
}

pub fn realignment_svd_diagnostic(rho: &DensityMatrix) -> SvdDiagnostic {
    let s = linalg::singular_values(&rho.realigned());
    let top = s.first().copied().unwrap_or(0.0).max(f64::MIN_POSITIVE);
    let nonzero: Vec<f64> = s.iter().copied().filter(|&x| x > 1e-12 * top).collect();
    let min_relative_gap = nonzero
        .windows(2)
        .map(|w| (w[0] - w[1]) / top)
        .fold(f64::INFINITY, f64::min);
    SvdDiagnostic {
        zero_count: s.len() - nonzero.len(),
        singular_values: s,
        min_relative_gap,
    }
}

// ---------------------------------------------------------------------------
// product-state extremum

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExtremumMode {
    Min,
    Max,
}

/// Search schedule for [`product_expectation_extremum`].
#[derive(Debug, Clone, PartialEq)]
pub struct ExtremumOptions {
    /// Random starting points for the local descent.
    pub restarts: usize,
    /// Simplex diameter at which a descent is considered converged.
    pub step_tol: f64,
    /// Evaluation budget per descent.
    pub max_evals: usize,
    /// Points per axis of the exhaustive Bloch-sphere grid used when `m = 2`.
    pub grid: Option<usize>,
    /// Points per angle of the coarse grid used when `m = 3`.
    pub coarse_grid: usize,
    pub seed: u64,
}

impl Default for ExtremumOptions {
    fn default() -> Self {
        Self {
            restarts: 50,
            step_tol: 1e-9,
            max_evals: 20_000,
            grid: Some(1000),
            coarse_grid: 12,
            seed: 0,
        }
    }
}

impl ExtremumOptions {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_grid(mut self, grid: Option<usize>) -> Self {
        self.grid = grid;
        self
    }
}

/// Tolerance the extremum search is expected to reach.
pub const OPT_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct ProductExtremum {
    /// Best value found: `min` or `max` of `Tr(W ρ_A ⊗ ρ_B)`.
    pub value: f64,
    pub a: PureState,
    pub b: PureState,
    /// Best value from the random-restart local descents alone.
    pub local_value: f64,
    /// Best value on the exhaustive grid, when one was run.
    pub grid_value: Option<f64>,
    pub evaluations: usize,
}

impl ProductExtremum {
    /// Disagreement between the local search and the grid, if a grid ran.
    pub fn agreement(&self) -> Option<f64> {
        self.grid_value.map(|g| (g - self.local_value).abs())
    }
}

/// `min` or `max` of `Tr(H · |a⟩⟨a| ⊗ |b⟩⟨b|)` over unit `a ∈ C^m`, `b ∈ C^n`.
///
/// For fixed `a` the optimum over `b` is an extreme eigenvalue of
/// `G(a) = Σ_{ij} H_{ij} a_j a_i*`; `a` is searched with multi-start
/// Nelder–Mead over `2m − 2` hyperspherical angles, plus a grid for `m ≤ 3`.
pub fn product_expectation_extremum(
    h: &ComplexMatrix,
    dims: BipartiteDims,
    mode: ExtremumMode,
    opts: &ExtremumOptions,
) -> Result<ProductExtremum> {
    dims.check_square(h)?;
    let h = linalg::checked_symmetrize(h)?;
    let objective = ReducedObjective::new(&h, dims, mode);
    let m = dims.m;
    let nparams = 2 * (m - 1);
    let mut evaluations = 0;

    if nparams == 0 {
        let a = ComplexVector::from_element(1, C64::new(1.0, 0.0));
        let (val, b) = objective.solve_b(&a);
        return Ok(ProductExtremum {
            value: mode.unsign(val),
            a: PureState::normalized(a)?,
            b,
            local_value: mode.unsign(val),
            grid_value: None,
            evaluations: 1,
        });
    }

    let mut rng = rng_from_seed(opts.seed);
    let mut best_local = (f64::INFINITY, vec![0.0; nparams]);
    for _ in 0..opts.restarts.max(1) {
        let start = random_angles(m, &mut rng);
        let (x, fx, evals) = nelder_mead(
            |x| objective.value(&angles_to_state(x, m)),
            &start,
            0.5,
            opts.step_tol,
            opts.max_evals,
        );
        evaluations += evals;
        if fx < best_local.0 {
            best_local = (fx, x);
        }
    }

    let mut best = best_local.clone();
    let mut grid_value = None;
    let grid_start = match m {
        2 => opts.grid.map(|g| bloch_grid(&objective, g, &mut evaluations)),
        3 if opts.coarse_grid > 1 => Some(coarse_grid(
            &objective,
            m,
            opts.coarse_grid,
            &mut evaluations,
        )),
        _ => None,
    };
    if let Some((gval, gx)) = grid_start {
        // polish the best grid point so both routes report converged values
        let (x, fx, evals) = nelder_mead(
            |x| objective.value(&angles_to_state(x, m)),
            &gx,
            0.05,
            opts.step_tol,
            opts.max_evals,
        );
        evaluations += evals;
        let polished = if fx < gval { (fx, x) } else { (gval, gx) };
        grid_value = Some(mode.unsign(polished.0));
        if polished.0 < best.0 {
            best = polished;
        }
    }

    let a = angles_to_state(&best.1, m);
    let (val, b) = objective.solve_b(&a);
    Ok(ProductExtremum {
        value: mode.unsign(val),
        a: PureState::normalized(a)?,
        b,
        local_value: mode.unsign(best_local.0),
        grid_value,
        evaluations,
    })
}

impl ExtremumMode {
    /// Objective values are always minimized; `Max` is handled by negation.
    fn unsign(self, v: f64) -> f64 {
        match self {
            ExtremumMode::Min => v,
            ExtremumMode::Max => -v,
        }
    }
}

struct ReducedObjective {
    blocks: Vec<ComplexMatrix>,
    m: usize,
    n: usize,
    mode: ExtremumMode,
}

impl ReducedObjective {
    fn new(h: &ComplexMatrix, dims: BipartiteDims, mode: ExtremumMode) -> Self {
        let BipartiteDims { m, n } = dims;
        let blocks = (0..m * m)
            .map(|k| linalg::block(h, n, k / m, k % m))
            .collect();
        Self { blocks, m, n, mode }
    }

    fn reduced(&self, a: &ComplexVector) -> ComplexMatrix {
        let mut g = ComplexMatrix::zeros(self.n, self.n);
        for i in 0..self.m {
            for j in 0..self.m {
                let coef = a[j] * a[i].conj();
                if coef != C64::new(0.0, 0.0) {
                    g += &self.blocks[i * self.m + j] * coef;
                }
            }
        }
        g
    }

    /// Signed objective (always minimized).
    fn value(&self, a: &ComplexVector) -> f64 {
        let ev = linalg::eigenvalues_symmetrized(&self.reduced(a));
        match self.mode {
            ExtremumMode::Min => ev[0],
            ExtremumMode::Max => -ev[self.n - 1],
        }
    }

    fn solve_b(&self, a: &ComplexVector) -> (f64, PureState) {
        let g = linalg::symmetrize(&self.reduced(a));
        let (vals, vecs) = linalg::hermitian_eigen(&g).expect("reduced operator is Hermitian");
        let k = match self.mode {
            ExtremumMode::Min => 0,
            ExtremumMode::Max => self.n - 1,
        };
        let b = PureState::normalized(vecs.column(k).into_owned())
            .expect("eigenvectors are non-zero");
        let signed = match self.mode {
            ExtremumMode::Min => vals[k],
            ExtremumMode::Max => -vals[k],
        };
        (signed, b)
    }
}

/// Unit vector in `C^m` from `m − 1` polar angles followed by `m − 1` phases;
/// the first component is real.
fn angles_to_state(x: &[f64], m: usize) -> ComplexVector {
    let (theta, phi) = x.split_at(m - 1);
    let mut a = ComplexVector::zeros(m);
    let mut radius = 1.0;
    for k in 0..m {
        let mag = if k < m - 1 {
            let v = radius * theta[k].cos();
            radius *= theta[k].sin();
            v
        } else {
            radius
        };
        a[k] = if k == 0 {
            C64::new(mag, 0.0)
        } else {
            C64::from_polar(mag, phi[k - 1])
        };
    }
    a
}

fn random_angles(m: usize, rng: &mut StateRng) -> Vec<f64> {
    // start from a Haar point so restarts are spread uniformly
    let psi = PureState::random(m, rng);
    let v = psi.vector();
    let phase = if v[0].norm() > 0.0 {
        v[0].conj() / v[0].norm()
    } else {
        C64::new(1.0, 0.0)
    };
    let v: Vec<C64> = v.iter().map(|z| z * phase).collect();
    let mut theta = Vec::with_capacity(m - 1);
    let mut tail: f64 = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    for z in v.iter().take(m - 1) {
        let ratio = if tail > 0.0 { (z.norm() / tail).clamp(-1.0, 1.0) } else { 1.0 };
        theta.push(ratio.acos());
        tail = (tail * tail - z.norm_sqr()).max(0.0).sqrt();
    }
    let phi = v[1..].iter().map(|z| z.arg());
    theta.into_iter().chain(phi).collect()
}

/// Full `g × g` Bloch-sphere grid for `m = 2`; returns the best point.
fn bloch_grid(obj: &ReducedObjective, g: usize, evals: &mut usize) -> (f64, Vec<f64>) {
    let g = g.max(2);
    let mut best = (f64::INFINITY, vec![0.0, 0.0]);
    for it in 0..g {
        // polar angle θ ∈ [0, π]; the state angle is θ/2
        let half = 0.5 * std::f64::consts::PI * it as f64 / (g - 1) as f64;
        for ip in 0..g {
            let phi = 2.0 * std::f64::consts::PI * ip as f64 / g as f64;
            let x = [half, phi];
            let v = obj.value(&angles_to_state(&x, 2));
            if v < best.0 {
                best = (v, x.to_vec());
            }
        }
    }
    *evals += g * g;
    best
}

/// Coarse tensor grid over all `2m − 2` angles.
fn coarse_grid(
    obj: &ReducedObjective,
    m: usize,
    per_axis: usize,
    evals: &mut usize,
) -> (f64, Vec<f64>) {
    let dim = 2 * (m - 1);
    let total = per_axis.pow(dim as u32);
    let mut best = (f64::INFINITY, vec![0.0; dim]);
    let mut x = vec![0.0; dim];
    for idx in 0..total {
        let mut r = idx;
        for (k, xk) in x.iter_mut().enumerate() {
            let t = (r % per_axis) as f64;
            r /= per_axis;
            *xk = if k < m - 1 {
                0.5 * std::f64::consts::PI * t / (per_axis - 1) as f64
            } else {
                2.0 * std::f64::consts::PI * t / per_axis as f64
            };
        }
        let v = obj.value(&angles_to_state(&x, m));
        if v < best.0 {
            best = (v, x.clone());
        }
    }
    *evals += total;
    best
}

/// Nelder–Mead simplex descent. Returns `(argmin, min, evaluations)`.
fn nelder_mead<F: Fn(&[f64]) -> f64>(
    f: F,
    start: &[f64],
    initial_step: f64,
    step_tol: f64,
    max_evals: usize,
) -> (Vec<f64>, f64, usize) {
    let dim = start.len();
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(dim + 1);
    simplex.push((start.to_vec(), f(start)));
    for k in 0..dim {
        let mut p = start.to_vec();
        p[k] += initial_step;
        let fp = f(&p);
        simplex.push((p, fp));
    }
    let mut evals = dim + 1;

    let lerp = |a: &[f64], b: &[f64], t: f64| -> Vec<f64> {
        a.iter().zip(b).map(|(x, y)| x + t * (y - x)).collect()
    };

    while evals < max_evals {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let diameter = simplex[1..]
            .iter()
            .map(|(p, _)| {
                p.iter()
                    .zip(&simplex[0].0)
                    .map(|(x, y)| (x - y).abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);
        if diameter < step_tol {
            break;
        }

        let mut centroid = vec![0.0; dim];
        for (p, _) in &simplex[..dim] {
            for (c, x) in centroid.iter_mut().zip(p) {
                *c += x / dim as f64;
            }
        }
        let worst = simplex[dim].clone();
        let reflected = lerp(&centroid, &worst.0, -1.0);
        let fr = f(&reflected);
        evals += 1;

        if fr < simplex[0].1 {
            let expanded = lerp(&centroid, &worst.0, -2.0);
            let fe = f(&expanded);
            evals += 1;
            simplex[dim] = if fe < fr { (expanded, fe) } else { (reflected, fr) };
        } else if fr < simplex[dim - 1].1 {
            simplex[dim] = (reflected, fr);
        } else {
            let (contracted, fc) = if fr < worst.1 {
                let p = lerp(&centroid, &worst.0, -0.5);
                let fp = f(&p);
                (p, fp)
            } else {
                let p = lerp(&centroid, &worst.0, 0.5);
                let fp = f(&p);
                (p, fp)
            };
            evals += 1;
            if fc < worst.1.min(fr) {
                simplex[dim] = (contracted, fc);
            } else {
                // shrink toward the best vertex
                let best = simplex[0].0.clone();
                for entry in simplex.iter_mut().skip(1) {
                    let p = lerp(&best, &entry.0, 0.5);
                    let fp = f(&p);
                    *entry = (p, fp);
                }
                evals += dim;
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (x, fx) = simplex.swap_remove(0);
    (x, fx, evals)
}
