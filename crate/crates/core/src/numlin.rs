//! Dense complex linear-algebra kernels.
//!
//! Everything here works on [`CMatrix`] (`nalgebra::DMatrix<Complex64>`). The
//! Hermitian eigensolver is a cyclic Jacobi iteration, which is deterministic
//! and accurate to a few ulps of the matrix norm for the small sizes used
//! throughout the crate. Singular value decompositions are obtained from the
//! Hermitian dilation `[[0, M], [M*, 0]]`, so no squaring of singular values
//! takes place.
//!
//! Eigenvectors follow a fixed phase convention: the first component of
//! largest modulus is real and nonnegative. Together with the deterministic
//! sweep order this makes every derived basis bit-stable across runs.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;

/// Default relative cutoff for numerical rank decisions.
pub const DEFAULT_RANK_TOL: f64 = 1e-10;
/// Default relative tolerance for clamping slightly negative eigenvalues.
pub const DEFAULT_CLAMP_TOL: f64 = 1e-10;
/// Relative cutoff on singular values used for kernels in subspace iterations.
pub const DEFAULT_KERNEL_TOL: f64 = 1e-8;

const HERMITIAN_TOL: f64 = 1e-10;
const MAX_SWEEPS: usize = 100;

#[inline]
pub fn cx(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[inline]
pub fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

pub fn zeros(rows: usize, cols: usize) -> CMatrix {
    CMatrix::zeros(rows, cols)
}

/// Real scalar multiple of a matrix.
pub fn scale(m: &CMatrix, s: f64) -> CMatrix {
    m * re(s)
}

pub fn fro_norm(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Largest absolute entry; zero for empty matrices.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Spectral norm (largest singular value).
pub fn op_norm(m: &CMatrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    let gram = if m.nrows() <= m.ncols() {
        m * m.adjoint()
    } else {
        m.adjoint() * m
    };
    match hermitian_eig(&gram) {
        Ok(e) => e.values.first().copied().unwrap_or(0.0).max(0.0).sqrt(),
        Err(_) => f64::NAN,
    }
}

pub fn ensure_finite(m: &CMatrix) -> Result<()> {
    if m.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite)
    }
}

pub fn ensure_square(m: &CMatrix) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    Ok(())
}

/// Frobenius norm of `M - M*`.
pub fn hermitian_asymmetry(m: &CMatrix) -> f64 {
    fro_norm(&(m - m.adjoint()))
}

/// `max(‖U*U − I‖, ‖UU* − I‖)` in Frobenius norm.
pub fn unitarity_residual(u: &CMatrix) -> f64 {
    let a = fro_norm(&(u.adjoint() * u - identity(u.ncols())));
    let b = fro_norm(&(u * u.adjoint() - identity(u.nrows())));
    a.max(b)
}

/// `‖Q*Q − I‖` in Frobenius norm.
pub fn isometry_residual(q: &CMatrix) -> f64 {
    fro_norm(&(q.adjoint() * q - identity(q.ncols())))
}

/// `‖QQ* − I‖` in Frobenius norm.
pub fn coisometry_residual(q: &CMatrix) -> f64 {
    fro_norm(&(q * q.adjoint() - identity(q.nrows())))
}

/// Horizontal concatenation; all parts must share the row count `rows`.
pub fn hstack(rows: usize, parts: &[&CMatrix]) -> CMatrix {
    let cols: usize = parts.iter().map(|p| p.ncols()).sum();
    let mut out = zeros(rows, cols);
    let mut at = 0;
    for p in parts {
        debug_assert_eq!(p.nrows(), rows);
        out.view_mut((0, at), (rows, p.ncols())).copy_from(*p);
        at += p.ncols();
    }
    out
}

/// Vertical concatenation; all parts must share the column count `cols`.
pub fn vstack(cols: usize, parts: &[&CMatrix]) -> CMatrix {
    let rows: usize = parts.iter().map(|p| p.nrows()).sum();
    let mut out = zeros(rows, cols);
    let mut at = 0;
    for p in parts {
        debug_assert_eq!(p.ncols(), cols);
        out.view_mut((at, 0), (p.nrows(), cols)).copy_from(*p);
        at += p.nrows();
    }
    out
}

/// Block-diagonal matrix.
pub fn block_diag(parts: &[&CMatrix]) -> CMatrix {
    let rows: usize = parts.iter().map(|p| p.nrows()).sum();
    let cols: usize = parts.iter().map(|p| p.ncols()).sum();
    let mut out = zeros(rows, cols);
    let (mut r, mut c) = (0, 0);
    for p in parts {
        out.view_mut((r, c), (p.nrows(), p.ncols())).copy_from(*p);
        r += p.nrows();
        c += p.ncols();
    }
    out
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// Eigen-decomposition of a Hermitian matrix.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    /// Eigenvalues in descending order.
    pub values: Vec<f64>,
    /// Unitary matrix whose columns are the matching eigenvectors.
    pub vectors: CMatrix,
}

impl HermitianEigen {
    /// `V·diag(f(λ))·V*`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> CMatrix {
        let n = self.values.len();
        let mut scaled = self.vectors.clone();
        for (j, &lambda) in self.values.iter().enumerate() {
            let s = re(f(lambda));
            for i in 0..n {
                scaled[(i, j)] *= s;
            }
        }
        scaled * self.vectors.adjoint()
    }

    /// Columns of `V` selected by `keep(λ)`, in eigenvalue order.
    pub fn select(&self, keep: impl Fn(f64) -> bool) -> CMatrix {
        let idx: Vec<usize> = (0..self.values.len())
            .filter(|&j| keep(self.values[j]))
            .collect();
        let mut out = zeros(self.vectors.nrows(), idx.len());
        for (k, &j) in idx.iter().enumerate() {
            out.set_column(k, &self.vectors.column(j));
        }
        out
    }
}

/// Rotates a vector so that its first entry of largest modulus is real and
/// nonnegative.
fn fix_phase(v: &mut [Complex64]) {
    let max = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if max == 0.0 {
        return;
    }
    let pivot = v
        .iter()
        .position(|z| z.norm() >= max * (1.0 - 1e-10))
        .unwrap_or(0);
    let phase = v[pivot].conj() / v[pivot].norm();
    for z in v.iter_mut() {
        *z *= phase;
    }
    v[pivot] = re(v[pivot].re);
}

/// Cyclic Jacobi eigensolver for Hermitian matrices.
pub fn hermitian_eig(m: &CMatrix) -> Result<HermitianEigen> {
    ensure_square(m)?;
    ensure_finite(m)?;
    let n = m.nrows();
    let asym = hermitian_asymmetry(m);
    if asym > HERMITIAN_TOL * (1.0 + fro_norm(m)) {
        return Err(Error::NotHermitian { asymmetry: asym });
    }
    // column-major working copies
    let mut a: Vec<Complex64> = vec![Complex64::default(); n * n];
    for j in 0..n {
        for i in 0..n {
            a[i + j * n] = (m[(i, j)] + m[(j, i)].conj()) * 0.5;
        }
        a[j + j * n] = re(a[j + j * n].re);
    }
    let mut v: Vec<Complex64> = vec![Complex64::default(); n * n];
    for i in 0..n {
        v[i + i * n] = re(1.0);
    }

    let total: f64 = a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if total > 0.0 {
        for _ in 0..MAX_SWEEPS {
            let mut off = 0.0;
            for q in 0..n {
                for p in 0..q {
                    off += a[p + q * n].norm_sqr();
                }
            }
            if off.sqrt() <= f64::EPSILON * 0.5 * total {
                break;
            }
            for q in 1..n {
                for p in 0..q {
                    let apq = a[p + q * n];
                    let r = apq.norm();
                    if r <= 1e-300 || r <= f64::EPSILON * 1e-3 * total {
                        continue;
                    }
                    let app = a[p + p * n].re;
                    let aqq = a[q + q * n].re;
                    // phase e^{-iφ} with a_pq = r e^{iφ}
                    let ph = apq.conj() / r;
                    let theta = (aqq - app) / (2.0 * r);
                    let t = if theta >= 0.0 {
                        1.0 / (theta + (theta * theta + 1.0).sqrt())
                    } else {
                        -1.0 / (-theta + (theta * theta + 1.0).sqrt())
                    };
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    // A <- A G with G_pp = c, G_pq = s, G_qp = -s ph, G_qq = c ph
                    for k in 0..n {
                        let akp = a[k + p * n];
                        let akq = a[k + q * n];
                        a[k + p * n] = akp * c - akq * ph * s;
                        a[k + q * n] = akp * s + akq * ph * c;
                    }
                    // A <- G* A
                    let phc = ph.conj();
                    for k in 0..n {
                        let apk = a[p + k * n];
                        let aqk = a[q + k * n];
                        a[p + k * n] = apk * c - aqk * phc * s;
                        a[q + k * n] = apk * s + aqk * phc * c;
                    }
                    a[p + q * n] = Complex64::default();
                    a[q + p * n] = Complex64::default();
                    a[p + p * n] = re(a[p + p * n].re);
                    a[q + q * n] = re(a[q + q * n].re);
                    for k in 0..n {
                        let vkp = v[k + p * n];
                        let vkq = v[k + q * n];
                        v[k + p * n] = vkp * c - vkq * ph * s;
                        v[k + q * n] = vkp * s + vkq * ph * c;
                    }
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        a[j + j * n]
            .re
            .partial_cmp(&a[i + i * n].re)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(i.cmp(&j))
    });
    let values: Vec<f64> = order.iter().map(|&i| a[i + i * n].re).collect();
    let mut vectors = zeros(n, n);
    for (k, &j) in order.iter().enumerate() {
        let mut col: Vec<Complex64> = v[j * n..(j + 1) * n].to_vec();
        fix_phase(&mut col);
        for i in 0..n {
            vectors[(i, k)] = col[i];
        }
    }
    Ok(HermitianEigen { values, vectors })
}

/// Square root of a positive semidefinite Hermitian matrix.
///
/// Eigenvalues in `[-clamp_tol·‖M‖, 0)` are clamped to zero; anything more
/// negative is rejected.
pub fn psd_sqrt(m: &CMatrix, clamp_tol: f64) -> Result<CMatrix> {
    let eig = hermitian_eig(m)?;
    check_psd(&eig, clamp_tol)?;
    Ok(eig.map(|l| l.max(0.0).sqrt()))
}

pub(crate) fn check_psd(eig: &HermitianEigen, clamp_tol: f64) -> Result<()> {
    let norm = eig.values.iter().map(|l| l.abs()).fold(0.0, f64::max);
    if let Some(&min) = eig.values.last() {
        if min < -clamp_tol * norm.max(1.0) {
            return Err(Error::NotPsd {
                min_eigenvalue: min,
            });
        }
    }
    Ok(())
}

/// Columns of an isometry, i.e. an orthonormal basis of a subspace of
/// `C^ambient_dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct OrthonormalBasis {
    vectors: CMatrix,
}

impl OrthonormalBasis {
    pub fn from_isometry(vectors: CMatrix) -> Self {
        debug_assert!(isometry_residual(&vectors) < 1e-8);
        Self { vectors }
    }

    pub fn empty(ambient_dim: usize) -> Self {
        Self {
            vectors: zeros(ambient_dim, 0),
        }
    }

    pub fn full(ambient_dim: usize) -> Self {
        Self {
            vectors: identity(ambient_dim),
        }
    }

    pub fn ambient_dim(&self) -> usize {
        self.vectors.nrows()
    }

    pub fn dim(&self) -> usize {
        self.vectors.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.dim() == 0
    }

    /// The isometry `Q` whose columns are the basis vectors.
    pub fn matrix(&self) -> &CMatrix {
        &self.vectors
    }

    pub fn projector(&self) -> CMatrix {
        &self.vectors * self.vectors.adjoint()
    }

    /// Orthonormal basis of the orthogonal complement, chosen
    /// deterministically from the eigenvectors of `I − QQ*`.
    pub fn complement(&self) -> OrthonormalBasis {
        let n = self.ambient_dim();
        if self.dim() == 0 {
            return Self::full(n);
        }
        if self.dim() >= n {
            return Self::empty(n);
        }
        let eig = hermitian_eig(&(identity(n) - self.projector()))
            .expect("complement projector is Hermitian");
        Self {
            vectors: eig.select(|l| l > 0.5),
        }
    }

    /// Gram residual `‖Q*Q − I‖`.
    pub fn gram_residual(&self) -> f64 {
        isometry_residual(&self.vectors)
    }

    /// Distance of the given vectors from the span (Frobenius norm of the
    /// residual after projection).
    pub fn distance_from_span(&self, x: &CMatrix) -> f64 {
        fro_norm(&(x - self.projector() * x))
    }
}

/// Orthonormal basis of the range of a Hermitian PSD matrix: eigenvectors
/// whose eigenvalue exceeds `rank_tol·max(λ_max, 1)`.
pub fn range_onb(m: &CMatrix, rank_tol: f64) -> Result<OrthonormalBasis> {
    let eig = hermitian_eig(m)?;
    Ok(range_from_eig(&eig, rank_tol))
}

pub(crate) fn range_from_eig(eig: &HermitianEigen, rank_tol: f64) -> OrthonormalBasis {
    let lmax = eig.values.first().copied().unwrap_or(0.0);
    let cutoff = rank_tol * lmax.max(1.0);
    OrthonormalBasis {
        vectors: eig.select(|l| l > cutoff),
    }
}

/// Compact singular value decomposition `M ≈ U·diag(s)·V*` keeping only
/// singular values above a cutoff.
#[derive(Debug, Clone)]
pub struct CompactSvd {
    pub u: CMatrix,
    pub s: Vec<f64>,
    pub v: CMatrix,
}

/// Singular triplets with `σ > rel_tol·σ_max` from the Hermitian dilation.
pub fn svd_compact(m: &CMatrix, rel_tol: f64) -> CompactSvd {
    let (rows, cols) = m.shape();
    if rows == 0 || cols == 0 {
        return CompactSvd {
            u: zeros(rows, 0),
            s: vec![],
            v: zeros(cols, 0),
        };
    }
    let mut dil = zeros(rows + cols, rows + cols);
    dil.view_mut((0, rows), (rows, cols)).copy_from(m);
    dil.view_mut((rows, 0), (cols, rows)).copy_from(&m.adjoint());
    let eig = hermitian_eig(&dil).expect("dilation is Hermitian");
    let smax = eig.values.first().copied().unwrap_or(0.0).max(0.0);
    let cutoff = rel_tol * smax;
    let keep: Vec<usize> = (0..eig.values.len())
        .filter(|&j| eig.values[j] > cutoff && eig.values[j] > 0.0)
        .collect();
    let r = keep.len().min(rows).min(cols);
    let mut u = zeros(rows, r);
    let mut v = zeros(cols, r);
    let mut s = Vec::with_capacity(r);
    let sqrt2 = std::f64::consts::SQRT_2;
    for (k, &j) in keep.iter().take(r).enumerate() {
        let col = eig.vectors.column(j);
        for i in 0..rows {
            u[(i, k)] = col[i] * sqrt2;
        }
        for i in 0..cols {
            v[(i, k)] = col[rows + i] * sqrt2;
        }
        s.push(eig.values[j]);
    }
    CompactSvd { u, s, v }
}

/// Moore–Penrose pseudo-inverse at relative rank cutoff `rank_tol`.
pub fn pinv(m: &CMatrix, rank_tol: f64) -> CMatrix {
    let svd = svd_compact(m, rank_tol);
    let mut vs = svd.v.clone();
    for (k, &s) in svd.s.iter().enumerate() {
        let inv = re(1.0 / s);
        for i in 0..vs.nrows() {
            vs[(i, k)] *= inv;
        }
    }
    vs * svd.u.adjoint()
}

/// Singular values in descending order, padded with zeros to `min(rows, cols)`.
pub fn singular_values(m: &CMatrix) -> Vec<f64> {
    let k = m.nrows().min(m.ncols());
    let mut s = svd_compact(m, 0.0).s;
    s.resize(k, 0.0);
    s
}

/// Orthonormal basis of `ker M`: the complement of the right singular
/// vectors with `σ > tol·max(σ_max, 1)`.
pub fn null_space(m: &CMatrix, tol: f64) -> OrthonormalBasis {
    let cols = m.ncols();
    if m.nrows() == 0 {
        return OrthonormalBasis::full(cols);
    }
    let smax = op_norm(m);
    let rel = if smax > 0.0 { tol * smax.max(1.0) / smax } else { 1.0 };
    let svd = svd_compact(m, rel);
    if svd.s.is_empty() {
        return OrthonormalBasis::full(cols);
    }
    OrthonormalBasis::from_isometry(orthonormalize(&svd.v)).complement()
}

/// Re-orthonormalizes nearly orthonormal columns (modified Gram–Schmidt,
/// two passes).
fn orthonormalize(q: &CMatrix) -> CMatrix {
    let mut out = q.clone();
    for _ in 0..2 {
        for j in 0..out.ncols() {
            for k in 0..j {
                let proj = out.column(k).dotc(&out.column(j));
                let ck = out.column(k).into_owned();
                let mut cj = out.column_mut(j);
                cj -= ck * proj;
            }
            let nrm = out.column(j).norm();
            if nrm > 0.0 {
                let mut cj = out.column_mut(j);
                cj /= re(nrm);
            }
        }
    }
    out
}

/// Largest subspace of `start` invariant under every operator in `ops`:
/// `M_{k+1} = {h ∈ M_k : X h ∈ M_k for all X}`, iterated until the
/// dimension stops dropping (at most `dim start` steps).
pub fn largest_invariant_subspace(
    start: &OrthonormalBasis,
    ops: &[CMatrix],
    tol: f64,
) -> OrthonormalBasis {
    let n = start.ambient_dim();
    let mut q = start.matrix().clone();
    loop {
        let k = q.ncols();
        if k == 0 || ops.is_empty() {
            return OrthonormalBasis { vectors: q };
        }
        let leak = identity(n) - &q * q.adjoint();
        let parts: Vec<CMatrix> = ops.iter().map(|x| &leak * x * &q).collect();
        let refs: Vec<&CMatrix> = parts.iter().collect();
        let stacked = vstack(k, &refs);
        let ker = null_space(&stacked, tol);
        if ker.dim() == k {
            return OrthonormalBasis { vectors: q };
        }
        q = orthonormalize(&(&q * ker.matrix()));
    }
}

/// Orthonormal basis of the column span of `m` (singular values above
/// `rel_tol·max(σ_max, 1)`).
pub fn column_span(m: &CMatrix, rel_tol: f64) -> OrthonormalBasis {
    let smax = op_norm(m);
    if smax <= rel_tol {
        return OrthonormalBasis::empty(m.nrows());
    }
    let svd = svd_compact(m, rel_tol * smax.max(1.0) / smax);
    OrthonormalBasis {
        vectors: orthonormalize(&svd.u),
    }
}

/// Unitary factor `U` of the polar decomposition `M = U·P`.
///
/// Directions belonging to (numerically) zero singular values are completed
/// by pairing deterministic bases of the left and right complements.
pub fn polar_unitary(m: &CMatrix) -> Result<CMatrix> {
    ensure_square(m)?;
    ensure_finite(m)?;
    let n = m.nrows();
    if n == 0 {
        return Ok(zeros(0, 0));
    }
    let svd = svd_compact(m, 1e-13);
    let u = orthonormalize(&svd.u);
    let v = orthonormalize(&svd.v);
    let mut out = &u * v.adjoint();
    if svd.s.len() < n {
        let uc = OrthonormalBasis::from_isometry(u).complement();
        let vc = OrthonormalBasis::from_isometry(v).complement();
        out += uc.matrix() * vc.matrix().adjoint();
    }
    Ok(out)
}

/// Orthogonal Procrustes: the unitary `U` maximizing `Σ Re tr(U*·X_k*·Y_k)`,
/// i.e. the best fit of `Y_k ≈ X_k·U`.
pub fn procrustes(pairs: &[(CMatrix, CMatrix)]) -> Result<CMatrix> {
    let Some((x0, y0)) = pairs.first() else {
        return Err(Error::ShapeMismatch("no Procrustes targets".into()));
    };
    if x0.ncols() != y0.ncols() {
        return Err(Error::ShapeMismatch(format!(
            "Procrustes needs a square unknown, got {}x{}",
            x0.ncols(),
            y0.ncols()
        )));
    }
    let mut acc = zeros(x0.ncols(), y0.ncols());
    for (x, y) in pairs {
        if x.shape() != x0.shape() || y.shape() != y0.shape() || x.nrows() != y.nrows() {
            return Err(Error::ShapeMismatch(format!(
                "Procrustes pair shapes {:?} / {:?}",
                x.shape(),
                y.shape()
            )));
        }
        acc += x.adjoint() * y;
    }
    polar_unitary(&acc)
}

/// Solves `M·X = B` for square invertible `M` via LU.
pub fn solve(m: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    ensure_square(m)?;
    m.clone()
        .lu()
        .solve(b)
        .ok_or_else(|| Error::BadParameter("singular matrix in linear solve".into()))
}

pub fn inverse(m: &CMatrix) -> Result<CMatrix> {
    solve(m, &identity(m.nrows()))
}
