//! Words over `d` letters, truncated noncommutative power series and the
//! creation operators of the truncated full Fock space.
//!
//! Words are ordered graded-lexicographically (by length, then letter by
//! letter) with 1-based letters. A series of degree `N` stores one
//! coefficient for each of the `Σ_{k≤N} d^k` words in that order.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numlin::{fro_norm, max_abs, op_norm, re, zeros, CMatrix};

/// Upper bound on the number of basis words of a truncated Fock space.
pub const MAX_WORDS: usize = 200_000;

/// A word `α = (α_1, …, α_m)` over the letters `1..=d`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Word(pub Vec<usize>);

impl Word {
    pub fn empty() -> Self {
        Word(Vec::new())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn letters(&self) -> &[usize] {
        &self.0
    }

    /// `α·i`.
    pub fn push(&self, letter: usize) -> Word {
        let mut v = self.0.clone();
        v.push(letter);
        Word(v)
    }

    /// `i·α`.
    pub fn prepend(&self, letter: usize) -> Word {
        let mut v = Vec::with_capacity(self.0.len() + 1);
        v.push(letter);
        v.extend_from_slice(&self.0);
        Word(v)
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        Word(v)
    }

    pub fn is_valid(&self, d: usize) -> bool {
        self.0.iter().all(|&l| l >= 1 && l <= d)
    }
}

impl Ord for Word {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0
            .len()
            .cmp(&other.0.len())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Word {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "∅");
        }
        write!(f, "(")?;
        for (k, l) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{l}")?;
        }
        write!(f, ")")
    }
}

/// `Σ_{k≤n} d^k`, or `None` on overflow.
pub fn word_count(d: usize, n: usize) -> Option<usize> {
    let mut total: usize = 0;
    let mut layer: usize = 1;
    for k in 0..=n {
        total = total.checked_add(layer)?;
        if k < n {
            layer = layer.checked_mul(d)?;
        }
    }
    Some(total)
}

fn checked_count(d: usize, n: usize) -> Result<usize> {
    match word_count(d, n) {
        Some(w) if w <= MAX_WORDS => Ok(w),
        Some(w) => Err(Error::TooLarge {
            words: w,
            limit: MAX_WORDS,
        }),
        None => Err(Error::TooLarge {
            words: usize::MAX,
            limit: MAX_WORDS,
        }),
    }
}

/// All words of length at most `n` in graded-lex order.
pub fn enumerate_words(d: usize, n: usize) -> Vec<Word> {
    let mut out = vec![Word::empty()];
    if d == 0 {
        return out;
    }
    let mut start = 0;
    for _ in 0..n {
        let end = out.len();
        for k in start..end {
            for l in 1..=d {
                let w = out[k].push(l);
                out.push(w);
            }
        }
        start = end;
    }
    out
}

/// Position of `w` in [`enumerate_words`]`(d, ·)`.
pub fn word_index(w: &Word, d: usize) -> usize {
    let m = w.len();
    let mut offset = 0usize;
    let mut layer = 1usize;
    for _ in 0..m {
        offset += layer;
        layer *= d;
    }
    let mut pos = 0usize;
    for &l in w.letters() {
        pos = pos * d + (l - 1);
    }
    offset + pos
}

/// Index of the prefix `(α_1…α_{m−1})` and the last letter `α_m` for every
/// nonempty word, indexed like [`enumerate_words`].
pub fn prefix_table(words: &[Word], d: usize) -> Vec<Option<(usize, usize)>> {
    words
        .iter()
        .map(|w| {
            let l = w.letters();
            l.last()
                .map(|&last| (word_index(&Word(l[..l.len() - 1].to_vec()), d), last))
        })
        .collect()
}

/// Truncated noncommutative power series `Σ_{|α|≤N} c_α z^α` with
/// `q × p` matrix coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct NCSeries {
    arity: usize,
    in_dim: usize,
    out_dim: usize,
    degree: usize,
    coeffs: Vec<CMatrix>,
}

impl NCSeries {
    pub fn zero(arity: usize, in_dim: usize, out_dim: usize, degree: usize) -> Result<Self> {
        if arity == 0 {
            return Err(Error::BadParameter("arity must be at least 1".into()));
        }
        let w = checked_count(arity, degree)?;
        Ok(Self {
            arity,
            in_dim,
            out_dim,
            degree,
            coeffs: vec![zeros(out_dim, in_dim); w],
        })
    }

    /// Builds a series from coefficients listed in graded-lex order.
    pub fn from_coeffs(
        arity: usize,
        in_dim: usize,
        out_dim: usize,
        degree: usize,
        coeffs: Vec<CMatrix>,
    ) -> Result<Self> {
        let expected = checked_count(arity.max(1), degree)?;
        if arity == 0 {
            return Err(Error::BadParameter("arity must be at least 1".into()));
        }
        if coeffs.len() != expected {
            return Err(Error::ShapeMismatch(format!(
                "expected {expected} coefficients, got {}",
                coeffs.len()
            )));
        }
        for c in &coeffs {
            if c.shape() != (out_dim, in_dim) {
                return Err(Error::ShapeMismatch(format!(
                    "coefficient shape {:?}, expected ({out_dim}, {in_dim})",
                    c.shape()
                )));
            }
            crate::numlin::ensure_finite(c)?;
        }
        Ok(Self {
            arity,
            in_dim,
            out_dim,
            degree,
            coeffs,
        })
    }

    pub fn arity(&self) -> usize {
        self.arity
    }
    pub fn in_dim(&self) -> usize {
        self.in_dim
    }
    pub fn out_dim(&self) -> usize {
        self.out_dim
    }
    pub fn degree(&self) -> usize {
        self.degree
    }
    pub fn len(&self) -> usize {
        self.coeffs.len()
    }
    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn words(&self) -> Vec<Word> {
        enumerate_words(self.arity, self.degree)
    }

    pub fn coeffs(&self) -> &[CMatrix] {
        &self.coeffs
    }

    pub fn coeff_at(&self, index: usize) -> &CMatrix {
        &self.coeffs[index]
    }

    pub fn coeff_at_mut(&mut self, index: usize) -> &mut CMatrix {
        &mut self.coeffs[index]
    }

    /// Coefficient of `w`, or `None` if `w` is too long or has bad letters.
    pub fn coeff(&self, w: &Word) -> Option<&CMatrix> {
        if w.len() > self.degree || !w.is_valid(self.arity) {
            return None;
        }
        self.coeffs.get(word_index(w, self.arity))
    }

    pub fn set_coeff(&mut self, w: &Word, m: CMatrix) -> Result<()> {
        if w.len() > self.degree || !w.is_valid(self.arity) {
            return Err(Error::OutOfRange(format!("word {w} not stored")));
        }
        if m.shape() != (self.out_dim, self.in_dim) {
            return Err(Error::ShapeMismatch(format!(
                "coefficient shape {:?}, expected ({}, {})",
                m.shape(),
                self.out_dim,
                self.in_dim
            )));
        }
        let i = word_index(w, self.arity);
        self.coeffs[i] = m;
        Ok(())
    }

    /// Pairs `(word, coefficient)` in graded-lex order.
    pub fn iter(&self) -> impl Iterator<Item = (Word, &CMatrix)> {
        self.words().into_iter().zip(self.coeffs.iter())
    }

    /// Largest entrywise deviation from another series of the same shape.
    pub fn max_deviation(&self, other: &NCSeries) -> Result<f64> {
        self.check_same_shape(other)?;
        Ok(self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| max_abs(&(a - b)))
            .fold(0.0, f64::max))
    }

    /// `sqrt(Σ_w ‖c_w‖_F²)`.
    pub fn fro_norm(&self) -> f64 {
        self.coeffs
            .iter()
            .map(|c| fro_norm(c).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    /// `Σ_w ‖c_w‖_F`.
    pub fn coeff_norm_sum(&self) -> f64 {
        self.coeffs.iter().map(fro_norm).sum()
    }

    fn check_same_shape(&self, other: &NCSeries) -> Result<()> {
        if self.arity != other.arity
            || self.in_dim != other.in_dim
            || self.out_dim != other.out_dim
            || self.degree != other.degree
        {
            return Err(Error::ShapeMismatch(format!(
                "series shapes (d={}, {}→{}, N={}) and (d={}, {}→{}, N={})",
                self.arity,
                self.in_dim,
                self.out_dim,
                self.degree,
                other.arity,
                other.in_dim,
                other.out_dim,
                other.degree
            )));
        }
        Ok(())
    }

    /// Every coefficient multiplied on the right by `g` (input change).
    pub fn apply_input(&self, g: &CMatrix) -> Result<NCSeries> {
        if g.nrows() != self.in_dim {
            return Err(Error::ShapeMismatch(format!(
                "input map has {} rows, series input dimension is {}",
                g.nrows(),
                self.in_dim
            )));
        }
        Ok(NCSeries {
            arity: self.arity,
            in_dim: g.ncols(),
            out_dim: self.out_dim,
            degree: self.degree,
            coeffs: self.coeffs.iter().map(|c| c * g).collect(),
        })
    }

    /// Restriction to words of length at most `degree`.
    pub fn truncate(&self, degree: usize) -> NCSeries {
        if degree >= self.degree {
            return self.clone();
        }
        let w = word_count(self.arity, degree).unwrap();
        NCSeries {
            arity: self.arity,
            in_dim: self.in_dim,
            out_dim: self.out_dim,
            degree,
            coeffs: self.coeffs[..w].to_vec(),
        }
    }

    /// `[s_1, s_2]`: horizontal concatenation of two series with the same
    /// output space.
    pub fn hcat(&self, other: &NCSeries) -> Result<NCSeries> {
        if self.arity != other.arity || self.degree != other.degree || self.out_dim != other.out_dim
        {
            return Err(Error::ShapeMismatch("hcat of incompatible series".into()));
        }
        let q = self.out_dim;
        Ok(NCSeries {
            arity: self.arity,
            in_dim: self.in_dim + other.in_dim,
            out_dim: q,
            degree: self.degree,
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| crate::numlin::hstack(q, &[a, b]))
                .collect(),
        })
    }
}

/// `G·s`: every coefficient multiplied on the left by `g`.
pub fn series_apply_output(g: &CMatrix, s: &NCSeries) -> Result<NCSeries> {
    if g.ncols() != s.out_dim {
        return Err(Error::ShapeMismatch(format!(
            "output map has {} columns, series output dimension is {}",
            g.ncols(),
            s.out_dim
        )));
    }
    Ok(NCSeries {
        arity: s.arity,
        in_dim: s.in_dim,
        out_dim: g.nrows(),
        degree: s.degree,
        coeffs: s.coeffs.iter().map(|c| g * c).collect(),
    })
}

/// `Σ_{n≤N} λⁿ c_n` for a one-variable series (Horner).
///
/// If every `‖c_n‖ ≤ 1`, the neglected tail has norm at most
/// [`tail_bound`]`(N, |λ|)`.
pub fn series_eval_scalar(s: &NCSeries, lambda: Complex64) -> Result<CMatrix> {
    if s.arity != 1 {
        return Err(Error::ArityNotOne(s.arity));
    }
    if lambda.norm() >= 1.0 {
        return Err(Error::BadParameter(format!(
            "evaluation point |λ| = {} is not inside the unit disc",
            lambda.norm()
        )));
    }
    let mut acc = zeros(s.out_dim, s.in_dim);
    for c in s.coeffs.iter().rev() {
        acc = acc * lambda + c;
    }
    Ok(acc)
}

/// `r^{N+1} / (1 − r)`.
pub fn tail_bound(degree: usize, r: f64) -> f64 {
    if r >= 1.0 {
        return f64::INFINITY;
    }
    r.powi(degree as i32 + 1) / (1.0 - r)
}

/// Creation operators on the span of words of length `≤ N`, stored as index
/// maps: `right[i][k]` is the index of `α_k·(i+1)` (or `None` past the
/// truncation), `left[i][k]` that of `(i+1)·α_k`.
#[derive(Debug, Clone)]
pub struct TruncatedFock {
    arity: usize,
    degree: usize,
    words: Vec<Word>,
    right: Vec<Vec<Option<usize>>>,
    left: Vec<Vec<Option<usize>>>,
}

pub fn build_fock(d: usize, n: usize) -> Result<TruncatedFock> {
    if d == 0 {
        return Err(Error::BadParameter("arity must be at least 1".into()));
    }
    checked_count(d, n)?;
    let words = enumerate_words(d, n);
    let map = |f: &dyn Fn(&Word) -> Word| -> Vec<Option<usize>> {
        words
            .iter()
            .map(|w| (w.len() < n).then(|| word_index(&f(w), d)))
            .collect()
    };
    let right = (1..=d).map(|i| map(&|w: &Word| w.push(i))).collect();
    let left = (1..=d).map(|i| map(&|w: &Word| w.prepend(i))).collect();
    Ok(TruncatedFock {
        arity: d,
        degree: n,
        words,
        right,
        left,
    })
}

type FockCache = Mutex<HashMap<(usize, usize), Arc<TruncatedFock>>>;

/// Memoized [`build_fock`].
pub fn fock_cached(d: usize, n: usize) -> Result<Arc<TruncatedFock>> {
    static CACHE: OnceLock<FockCache> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(f) = cache.lock().unwrap().get(&(d, n)) {
        return Ok(f.clone());
    }
    let f = Arc::new(build_fock(d, n)?);
    cache.lock().unwrap().insert((d, n), f.clone());
    Ok(f)
}

impl TruncatedFock {
    pub fn arity(&self) -> usize {
        self.arity
    }
    pub fn degree(&self) -> usize {
        self.degree
    }
    pub fn dim(&self) -> usize {
        self.words.len()
    }
    pub fn words(&self) -> &[Word] {
        &self.words
    }

    /// Index map of `R_{i}` (`i` is 1-based).
    pub fn right_map(&self, i: usize) -> &[Option<usize>] {
        &self.right[i - 1]
    }

    /// Index map of `L_{i}` (`i` is 1-based).
    pub fn left_map(&self, i: usize) -> &[Option<usize>] {
        &self.left[i - 1]
    }

    fn dense(map: &[Option<usize>]) -> CMatrix {
        let n = map.len();
        let mut m = zeros(n, n);
        for (col, row) in map.iter().enumerate() {
            if let Some(r) = row {
                m[(*r, col)] = re(1.0);
            }
        }
        m
    }

    pub fn right_dense(&self, i: usize) -> CMatrix {
        Self::dense(self.right_map(i))
    }

    pub fn left_dense(&self, i: usize) -> CMatrix {
        Self::dense(self.left_map(i))
    }
}

/// The matrix of `M_θ` on the truncated space `Γ_N ⊗ C^p → Γ_N ⊗ C^q`.
///
/// Block `(β, α)` is `c_w` when `β = α·w`, so that `M_θ(e_α ⊗ h) =
/// Σ_w e_{αw} ⊗ c_w h` and `M_θ` commutes with `L_i ⊗ I`.
pub fn multianalytic_matrix(s: &NCSeries, fock: &TruncatedFock) -> Result<CMatrix> {
    if fock.arity != s.arity || fock.degree != s.degree {
        return Err(Error::ShapeMismatch(format!(
            "Fock space (d={}, N={}) does not match series (d={}, N={})",
            fock.arity, fock.degree, s.arity, s.degree
        )));
    }
    let (p, q) = (s.in_dim, s.out_dim);
    let w = fock.dim();
    let mut m = zeros(w * q, w * p);
    for ai in 0..w {
        // walk the subtree of words extending alpha
        let mut stack = vec![(ai, 0usize)];
        while let Some((bi, wi)) = stack.pop() {
            m.view_mut((bi * q, ai * p), (q, p))
                .copy_from(&s.coeffs[wi]);
            if fock.words[bi].len() < fock.degree {
                for i in 1..=fock.arity {
                    let nb = fock.right_map(i)[bi].unwrap();
                    let nw = word_index(&fock.words[wi].push(i), fock.arity);
                    stack.push((nb, nw));
                }
            }
        }
    }
    Ok(m)
}

/// Coefficients `c_α` read off as the `(α, ∅)` blocks of `m`.
pub fn series_from_fock_operator(
    m: &CMatrix,
    fock: &TruncatedFock,
    p: usize,
    q: usize,
) -> Result<NCSeries> {
    let w = fock.dim();
    if m.shape() != (w * q, w * p) {
        return Err(Error::ShapeMismatch(format!(
            "operator shape {:?}, expected ({}, {})",
            m.shape(),
            w * q,
            w * p
        )));
    }
    let coeffs = (0..w)
        .map(|k| m.view((k * q, 0), (q, p)).into_owned())
        .collect();
    NCSeries::from_coeffs(fock.arity, p, q, fock.degree, coeffs)
}

/// Evaluates `D + C(I − (R̲⊗I)(I⊗A))^{-1}(R̲⊗I)(I⊗B)` on the vacuum block
/// column `e_∅ ⊗ C^p` by an explicit walk over the right creation maps.
///
/// `a` holds the blocks `A_i` of the stacked map `H → H^d`, `b` the blocks
/// `B_j : C^p → H`. The operator `(R̲⊗I)(I⊗A)` is nilpotent on the
/// truncated space, so the Neumann series is finite.
pub fn neumann_oracle(
    fock: &TruncatedFock,
    a: &[CMatrix],
    b: &[CMatrix],
    c: &CMatrix,
    d: &CMatrix,
) -> Result<NCSeries> {
    let dd = fock.arity;
    if a.len() != dd || b.len() != dd {
        return Err(Error::ShapeMismatch("block count differs from arity".into()));
    }
    let n = c.ncols();
    let p = d.ncols();
    let q = d.nrows();
    let w = fock.dim();
    // y = (R̲⊗I)(I⊗B)(e_∅ ⊗ ·), stored as one n×p block per word
    let mut y: Vec<CMatrix> = vec![zeros(n, p); w];
    if fock.degree >= 1 {
        for j in 1..=dd {
            let at = fock.right_map(j)[0].unwrap();
            y[at] += &b[j - 1];
        }
    }
    let mut acc = y.clone();
    loop {
        let mut next: Vec<CMatrix> = vec![zeros(n, p); w];
        let mut nonzero = false;
        for (k, blk) in y.iter().enumerate() {
            if blk.iter().all(|z| *z == Complex64::default()) {
                continue;
            }
            for i in 1..=dd {
                if let Some(t) = fock.right_map(i)[k] {
                    next[t] += &a[i - 1] * blk;
                    nonzero = true;
                }
            }
        }
        if !nonzero {
            break;
        }
        for (s, t) in acc.iter_mut().zip(&next) {
            *s += t;
        }
        y = next;
    }
    let mut coeffs: Vec<CMatrix> = acc.iter().map(|blk| c * blk).collect();
    coeffs[0] += d;
    NCSeries::from_coeffs(dd, p, q, fock.degree, coeffs)
}

/// Largest singular value of the multi-analytic matrix, estimated by power
/// iteration on `M*M`.
pub fn multianalytic_norm(s: &NCSeries) -> Result<f64> {
    let fock = fock_cached(s.arity, s.degree)?;
    let m = multianalytic_matrix(s, &fock)?;
    if m.ncols() <= 64 {
        return Ok(op_norm(&m));
    }
    Ok(power_norm(&m, 500))
}

/// Power iteration estimate of `‖M‖` from a fixed start vector.
pub fn power_norm(m: &CMatrix, iters: usize) -> f64 {
    let n = m.ncols();
    if n == 0 || m.nrows() == 0 {
        return 0.0;
    }
    let mut v = CMatrix::from_fn(n, 1, |i, _| re(1.0 + (i as f64 * 0.618).sin()));
    let mut est = 0.0;
    for _ in 0..iters {
        let nv = v.norm();
        if nv == 0.0 {
            return 0.0;
        }
        v /= re(nv);
        let w = m * &v;
        let z = m.adjoint() * &w;
        let new_est = w.norm();
        v = z;
        if (new_est - est).abs() <= 1e-14 * new_est.max(1.0) {
            est = new_est;
            break;
        }
        est = new_est;
    }
    est
}
