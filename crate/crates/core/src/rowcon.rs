//! Row contractions `T̲ = [T_1 … T_d] : H^d → H`, their defect operators,
//! the c.n.c. test and the characteristic symbol `θ_T`.

use crate::colligation::Colligation;
use crate::error::{Error, Result};
use crate::fock::{fock_cached, neumann_oracle, prefix_table, NCSeries};
use crate::numlin::{
    check_psd, ensure_finite, hermitian_eig, hstack, identity, largest_invariant_subspace,
    range_from_eig, re, zeros, CMatrix, OrthonormalBasis, DEFAULT_CLAMP_TOL, DEFAULT_KERNEL_TOL,
    DEFAULT_RANK_TOL,
};

/// Tolerance on `λ_max(Σ T_iT_i*) − 1` accepted as contractive.
pub const CONTRACTION_TOL: f64 = 1e-10;

/// A `d`-tuple of `n × n` matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct RowContraction {
    blocks: Vec<CMatrix>,
}

impl RowContraction {
    /// Checks shapes and finiteness; contractivity is checked by
    /// [`validate`].
    pub fn new(blocks: Vec<CMatrix>) -> Result<Self> {
        let Some(first) = blocks.first() else {
            return Err(Error::BadParameter("arity must be at least 1".into()));
        };
        let n = first.nrows();
        for b in &blocks {
            if b.shape() != (n, n) {
                return Err(Error::ShapeMismatch(format!(
                    "block shape {:?}, expected ({n}, {n})",
                    b.shape()
                )));
            }
            ensure_finite(b)?;
        }
        Ok(Self { blocks })
    }

    /// Splits an `n × nd` row into its `d` blocks.
    pub fn from_row(row: &CMatrix, d: usize) -> Result<Self> {
        let n = row.nrows();
        if d == 0 || row.ncols() != n * d {
            return Err(Error::ShapeMismatch(format!(
                "row of shape {:?} is not n×(n·{d})",
                row.shape()
            )));
        }
        Self::new((0..d).map(|i| row.columns(i * n, n).into_owned()).collect())
    }

    /// Single contraction as a tuple of arity one.
    pub fn single(t: CMatrix) -> Result<Self> {
        Self::new(vec![t])
    }

    pub fn scalar(x: f64) -> Self {
        Self {
            blocks: vec![CMatrix::from_element(1, 1, re(x))],
        }
    }

    pub fn dim(&self) -> usize {
        self.blocks[0].nrows()
    }

    pub fn arity(&self) -> usize {
        self.blocks.len()
    }

    pub fn blocks(&self) -> &[CMatrix] {
        &self.blocks
    }

    /// `T_i` for 0-based `i`.
    pub fn block(&self, i: usize) -> &CMatrix {
        &self.blocks[i]
    }

    /// `T̲ = [T_1 … T_d]` as an `n × nd` matrix.
    pub fn row(&self) -> CMatrix {
        let refs: Vec<&CMatrix> = self.blocks.iter().collect();
        hstack(self.dim(), &refs)
    }

    /// `T̲*`, an `nd × n` column.
    pub fn column_adjoint(&self) -> CMatrix {
        self.row().adjoint()
    }

    /// `Σ T_i T_i*`.
    pub fn gram(&self) -> CMatrix {
        let n = self.dim();
        self.blocks
            .iter()
            .fold(zeros(n, n), |acc, t| acc + t * t.adjoint())
    }

    /// `T_α = T_{α_1} ⋯ T_{α_m}` (letters 1-based).
    pub fn word_product(&self, letters: &[usize]) -> CMatrix {
        letters
            .iter()
            .fold(identity(self.dim()), |acc, &l| acc * &self.blocks[l - 1])
    }

    /// Adjoints `T_i*`.
    pub fn adjoint_blocks(&self) -> Vec<CMatrix> {
        self.blocks.iter().map(|t| t.adjoint()).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContractionReport {
    pub is_contraction: bool,
    /// `‖T̲‖ = λ_max(Σ T_iT_i*)^{1/2}`.
    pub norm: f64,
}

pub fn validate(t: &RowContraction) -> ContractionReport {
    let lmax = hermitian_eig(&t.gram())
        .map(|e| e.values.first().copied().unwrap_or(0.0))
        .unwrap_or(f64::INFINITY);
    ContractionReport {
        is_contraction: lmax <= 1.0 + CONTRACTION_TOL,
        norm: lmax.max(0.0).sqrt(),
    }
}

fn ensure_contraction(t: &RowContraction) -> Result<()> {
    let r = validate(t);
    if !r.is_contraction {
        return Err(Error::NotContraction { norm: r.norm });
    }
    Ok(())
}

/// Defect operators `D_T = (I − T̲*T̲)^{1/2}` and `D_{*,T} = (I − T̲T̲*)^{1/2}`
/// with orthonormal bases of their ranges.
///
/// The range bases are eigenvectors of the squared defects, and `mu_d`,
/// `mu_dstar` hold the matching eigenvalues, so that `D_T Q = Q·diag(√μ)`.
#[derive(Debug, Clone)]
pub struct DefectPair {
    pub d: CMatrix,
    pub dstar: CMatrix,
    pub basis_d: OrthonormalBasis,
    pub basis_dstar: OrthonormalBasis,
    pub mu_d: Vec<f64>,
    pub mu_dstar: Vec<f64>,
    pub rank_tol: f64,
}

/// Square root, range basis and the eigenvalues on that range of a PSD
/// matrix `X`. Eigenvalues below the rank cutoff are dropped from the root.
pub(crate) fn defect_of(x: &CMatrix, rank_tol: f64) -> Result<(CMatrix, OrthonormalBasis, Vec<f64>)> {
    let eig = hermitian_eig(x)?;
    check_psd(&eig, DEFAULT_CLAMP_TOL)?;
    let basis = range_from_eig(&eig, rank_tol);
    let mu = eig.values[..basis.dim()].to_vec();
    let root = basis.matrix() * sqrt_diag(&mu) * basis.matrix().adjoint();
    Ok((root, basis, mu))
}

impl DefectPair {
    pub fn dim_d(&self) -> usize {
        self.basis_d.dim()
    }

    pub fn dim_dstar(&self) -> usize {
        self.basis_dstar.dim()
    }

    /// `Q_D`.
    pub fn q_d(&self) -> &CMatrix {
        self.basis_d.matrix()
    }

    /// `Q_{*}`.
    pub fn q_dstar(&self) -> &CMatrix {
        self.basis_dstar.matrix()
    }

    /// Inverse of `D_T` on its range, extended by zero: `Q·diag(μ^{-1/2})·Q*`.
    pub fn d_inv(&self) -> CMatrix {
        restricted_inverse(self.q_d(), &self.mu_d)
    }

    pub fn dstar_inv(&self) -> CMatrix {
        restricted_inverse(self.q_dstar(), &self.mu_dstar)
    }

    /// `D_T` restricted to `𝔇_T` in coordinates: `diag(√μ)`.
    pub fn d_coords(&self) -> CMatrix {
        sqrt_diag(&self.mu_d)
    }

    pub fn dstar_coords(&self) -> CMatrix {
        sqrt_diag(&self.mu_dstar)
    }
}

pub(crate) fn sqrt_diag(mu: &[f64]) -> CMatrix {
    let mut m = zeros(mu.len(), mu.len());
    for (k, &x) in mu.iter().enumerate() {
        m[(k, k)] = re(x.sqrt());
    }
    m
}

pub(crate) fn inv_sqrt_diag(mu: &[f64]) -> CMatrix {
    let mut m = zeros(mu.len(), mu.len());
    for (k, &x) in mu.iter().enumerate() {
        m[(k, k)] = re(1.0 / x.sqrt());
    }
    m
}

pub(crate) fn restricted_inverse(q: &CMatrix, mu: &[f64]) -> CMatrix {
    q * inv_sqrt_diag(mu) * q.adjoint()
}

pub fn defects(t: &RowContraction, rank_tol: f64) -> Result<DefectPair> {
    ensure_contraction(t)?;
    let row = t.row();
    let n = t.dim();
    let nd = n * t.arity();
    let (d, basis_d, mu_d) = defect_of(&(identity(nd) - row.adjoint() * &row), rank_tol)?;
    let (dstar, basis_dstar, mu_dstar) = defect_of(&(identity(n) - &row * row.adjoint()), rank_tol)?;
    Ok(DefectPair {
        d,
        dstar,
        basis_d,
        basis_dstar,
        mu_d,
        mu_dstar,
        rank_tol,
    })
}

/// Basis of `H_T^1`: the largest subspace of `ker D_{*,T}` invariant under
/// every `T_i*`. `T` is c.n.c. iff this is empty.
pub fn cnc_subspace(t: &RowContraction) -> Result<OrthonormalBasis> {
    let dp = defects(t, DEFAULT_RANK_TOL)?;
    Ok(cnc_subspace_from(t, &dp))
}

pub fn cnc_subspace_from(t: &RowContraction, dp: &DefectPair) -> OrthonormalBasis {
    let start = dp.basis_dstar.complement();
    largest_invariant_subspace(&start, &t.adjoint_blocks(), DEFAULT_KERNEL_TOL)
}

pub fn is_cnc(t: &RowContraction) -> Result<bool> {
    Ok(cnc_subspace(t)?.is_empty())
}

/// Characteristic symbol `θ_T` in defect coordinates (`𝔇_T → 𝔇_{*,T}`).
///
/// `c_∅ = −Q_*^* T̲ Q_D` and `c_{(j,k_1,…,k_m)} = Q_*^* D_{*,T} T_{k_m}* ⋯
/// T_{k_1}* Π_j D_T Q_D`.
pub fn char_symbol(t: &RowContraction, degree: usize) -> Result<NCSeries> {
    let dp = defects(t, DEFAULT_RANK_TOL)?;
    char_symbol_from(t, &dp, degree)
}

pub fn char_symbol_from(t: &RowContraction, dp: &DefectPair, degree: usize) -> Result<NCSeries> {
    let d = t.arity();
    let n = t.dim();
    let (p, q) = (dp.dim_d(), dp.dim_dstar());
    let mut s = NCSeries::zero(d, p, q, degree)?;
    let words = s.words();
    let parents = prefix_table(&words, d);
    let qs_star = dp.q_dstar().adjoint();
    *s.coeff_at_mut(0) = -(&qs_star * t.row() * dp.q_d());
    if degree == 0 {
        return Ok(s);
    }
    let dq = &dp.d * dp.q_d();
    let out = &qs_star * &dp.dstar;
    let adj = t.adjoint_blocks();
    // x[w] = T_{k_m}* ⋯ T_{k_1}* Π_j D_T Q_D for w = (j, k_1, …, k_m)
    let mut x: Vec<CMatrix> = vec![zeros(n, p); words.len()];
    for (k, w) in words.iter().enumerate().skip(1) {
        let (parent, last) = parents[k].unwrap();
        x[k] = if w.len() == 1 {
            dq.rows((last - 1) * n, n).into_owned()
        } else {
            &adj[last - 1] * &x[parent]
        };
        *s.coeff_at_mut(k) = &out * &x[k];
    }
    Ok(s)
}

/// `θ_T` evaluated as `−I⊗T̲ + (I⊗D_*)(I − (R̲⊗I)(I⊗T̲*))^{-1}(R̲⊗I)(I⊗D_T)`
/// on the truncated Fock space.
pub fn char_symbol_oracle(t: &RowContraction, degree: usize) -> Result<NCSeries> {
    let dp = defects(t, DEFAULT_RANK_TOL)?;
    let fock = fock_cached(t.arity(), degree)?;
    let n = t.dim();
    let dq = &dp.d * dp.q_d();
    let b: Vec<CMatrix> = (0..t.arity())
        .map(|j| dq.rows(j * n, n).into_owned())
        .collect();
    let qs = dp.q_dstar().adjoint();
    neumann_oracle(
        &fock,
        &t.adjoint_blocks(),
        &b,
        &(&qs * &dp.dstar),
        &(-(&qs * t.row() * dp.q_d())),
    )
}

/// The co-isometric colligation `W_T = [[T̲*, D_T], [D_{*,T}, −T̲]]` with
/// input `𝔇_T` and output `𝔇_{*,T}` in defect coordinates.
pub fn popescu_colligation(t: &RowContraction) -> Result<Colligation> {
    let dp = defects(t, DEFAULT_RANK_TOL)?;
    popescu_colligation_from(t, &dp)
}

pub fn popescu_colligation_from(t: &RowContraction, dp: &DefectPair) -> Result<Colligation> {
    let qs = dp.q_dstar().adjoint();
    Colligation::new(
        t.adjoint_blocks(),
        &dp.d * dp.q_d(),
        &qs * &dp.dstar,
        -(&qs * t.row() * dp.q_d()),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::colligation::{is_coisometric, transfer_symbol, unobservable_subspace};
    use crate::fock::{multianalytic_norm, Word};
    use crate::numlin::{block_diag, fro_norm, max_abs, DEFAULT_RANK_TOL};
    use crate::testgen::{random_non_cnc, random_row_contraction, rng_from_seed};

    fn scalar(x: f64) -> CMatrix {
        CMatrix::from_element(1, 1, re(x))
    }

    #[test]
    fn validate_examples() {
        let r = validate(&RowContraction::scalar(0.5));
        assert!(r.is_contraction);
        let t = RowContraction::new(vec![scalar(1.0), scalar(1.0)]).unwrap();
        let r = validate(&t);
        assert!(!r.is_contraction);
        assert!((r.norm - 2f64.sqrt()).abs() < 1e-14);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let r = validate(&RowContraction::new(vec![scalar(h), scalar(h)]).unwrap());
        assert!(r.is_contraction);
        assert!((r.norm - 1.0).abs() < 1e-14);
    }

    #[test]
    fn shape_errors() {
        assert!(RowContraction::new(vec![identity(2), identity(3)]).is_err());
        assert!(RowContraction::new(vec![]).is_err());
        assert!(RowContraction::new(vec![zeros(2, 3)]).is_err());
    }

    #[test]
    fn defect_examples() {
        let dp = defects(&RowContraction::scalar(0.5), DEFAULT_RANK_TOL).unwrap();
        assert!((dp.d[(0, 0)].re - 3f64.sqrt() / 2.0).abs() < 1e-15);
        assert_eq!(dp.dim_d(), 1);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let t = RowContraction::new(vec![scalar(h), scalar(h)]).unwrap();
        let dp = defects(&t, DEFAULT_RANK_TOL).unwrap();
        assert!(max_abs(&dp.dstar) < 1e-7);
        assert_eq!(dp.dim_dstar(), 0);
        assert_eq!(dp.dim_d(), 1);
        assert!(matches!(
            defects(&RowContraction::scalar(1.5), DEFAULT_RANK_TOL),
            Err(Error::NotContraction { .. })
        ));
    }

    #[test]
    fn defect_reconstruction() {
        let mut rng = rng_from_seed(17);
        for (n, d) in [(1, 1), (2, 2), (3, 3), (4, 2)] {
            let t = random_row_contraction(&mut rng, n, d, 0.8);
            let dp = defects(&t, DEFAULT_RANK_TOL).unwrap();
            let row = t.row();
            assert!(fro_norm(&(&dp.d * &dp.d + row.adjoint() * &row - identity(n * d))) < 1e-10);
            assert!(fro_norm(&(&dp.dstar * &dp.dstar + &row * row.adjoint() - identity(n))) < 1e-10);
            assert!(dp.basis_d.gram_residual() < 1e-12);
            // D Q = Q diag(√μ)
            assert!(fro_norm(&(&dp.d * dp.q_d() - dp.q_d() * dp.d_coords())) < 1e-10);
        }
    }

    #[test]
    fn cnc_examples() {
        assert_eq!(cnc_subspace(&RowContraction::single(identity(2)).unwrap()).unwrap().dim(), 2);
        assert!(is_cnc(&RowContraction::scalar(0.9)).unwrap());
        let t = RowContraction::single(block_diag(&[&scalar(1.0), &scalar(0.5)])).unwrap();
        let h1 = cnc_subspace(&t).unwrap();
        assert_eq!(h1.dim(), 1);
        assert!((h1.matrix()[(0, 0)].norm() - 1.0).abs() < 1e-12);

        let mut rng = rng_from_seed(2);
        let t = random_non_cnc(&mut rng, 4, 2, 2);
        assert_eq!(cnc_subspace(&t).unwrap().dim(), 2);
    }

    #[test]
    fn char_symbol_of_zero_is_z() {
        let th = char_symbol(&RowContraction::scalar(0.0), 4).unwrap();
        assert!(max_abs(th.coeff_at(0)) < 1e-15);
        assert!((th.coeff(&Word(vec![1])).unwrap()[(0, 0)] - re(1.0)).norm() < 1e-15);
        assert!(th.coeffs()[2..].iter().all(|c| max_abs(c) < 1e-15));
    }

    #[test]
    fn char_symbol_of_half() {
        let th = char_symbol(&RowContraction::scalar(0.5), 8).unwrap();
        assert!((th.coeff_at(0)[(0, 0)] - re(-0.5)).norm() < 1e-15);
        for n in 1..=8 {
            let expect = 0.75 * 0.5f64.powi(n as i32 - 1);
            assert!((th.coeff_at(n)[(0, 0)] - re(expect)).norm() < 1e-14);
        }
    }

    #[test]
    fn char_symbol_of_zero_pair() {
        let t = RowContraction::new(vec![scalar(0.0), scalar(0.0)]).unwrap();
        let th = char_symbol(&t, 3).unwrap();
        assert_eq!(th.in_dim(), 2);
        assert_eq!(th.out_dim(), 1);
        let c1 = th.coeff(&Word(vec![1])).unwrap();
        let c2 = th.coeff(&Word(vec![2])).unwrap();
        // the first defect basis vector is e_1, the second e_2
        assert!((c1[(0, 0)] - re(1.0)).norm() < 1e-15 && c1[(0, 1)].norm() < 1e-15);
        assert!((c2[(0, 1)] - re(1.0)).norm() < 1e-15 && c2[(0, 0)].norm() < 1e-15);
        let long = th.coeffs()[3..].iter().map(max_abs).fold(0.0, f64::max);
        assert!(long < 1e-15);
    }

    #[test]
    fn closed_form_matches_oracle() {
        let mut rng = rng_from_seed(99);
        for (n, d) in [(1, 1), (2, 2), (3, 2), (2, 3)] {
            let t = random_row_contraction(&mut rng, n, d, 0.9);
            let a = char_symbol(&t, 4).unwrap();
            let b = char_symbol_oracle(&t, 4).unwrap();
            assert!(a.max_deviation(&b).unwrap() < 1e-12);
        }
    }

    #[test]
    fn popescu_colligation_properties() {
        let mut rng = rng_from_seed(7);
        let t = random_row_contraction(&mut rng, 3, 2, 0.85);
        let w = popescu_colligation(&t).unwrap();
        assert!(is_coisometric(&w, 1e-10).0);
        assert!(unobservable_subspace(&w).is_empty());
        let th = char_symbol(&t, 4).unwrap();
        assert!(transfer_symbol(&w, 4).unwrap().max_deviation(&th).unwrap() < 1e-12);
        assert!(multianalytic_norm(&th).unwrap() <= 1.0 + 1e-8);
    }

    #[test]
    fn blaschke_up_to_unimodular() {
        let alpha = crate::numlin::cx(0.3, -0.2);
        let t = RowContraction::single(CMatrix::from_element(1, 1, alpha)).unwrap();
        let th = char_symbol(&t, 10).unwrap();
        let lam = crate::numlin::cx(0.2, 0.1);
        let v = crate::fock::series_eval_scalar(&th, lam).unwrap()[(0, 0)];
        let b = (lam - alpha) / (re(1.0) - alpha.conj() * lam);
        assert!((v - b).norm() < 1e-6);
    }
}
