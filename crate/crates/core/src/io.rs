//! JSON forms of matrices, row contractions, series, colligations and
//! liftings. Complex scalars are `[re, im]`; matrix data is row-major.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::colligation::Colligation;
use crate::error::{Error, Result};
use crate::fock::{enumerate_words, NCSeries, Word};
use crate::lifting::{build_lifting, Lifting};
use crate::numlin::{ensure_finite, CMatrix};
use crate::rowcon::RowContraction;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixJson {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowContractionJson {
    pub dim: usize,
    pub arity: usize,
    pub blocks: Vec<MatrixJson>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoeffJson {
    pub word: Vec<usize>,
    pub matrix: MatrixJson,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NCSeriesJson {
    pub arity: usize,
    pub in_dim: usize,
    pub out_dim: usize,
    pub degree: usize,
    pub coeffs: Vec<CoeffJson>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColligationJson {
    pub arity: usize,
    pub state_dim: usize,
    pub in_dim: usize,
    pub out_dim: usize,
    #[serde(rename = "A")]
    pub a: Vec<MatrixJson>,
    #[serde(rename = "B")]
    pub b: MatrixJson,
    #[serde(rename = "C")]
    pub c: MatrixJson,
    #[serde(rename = "D")]
    pub d: MatrixJson,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LiftingJson {
    Parts {
        #[serde(rename = "C")]
        c: RowContractionJson,
        #[serde(rename = "A")]
        a: RowContractionJson,
        gamma: MatrixJson,
    },
    Assembled {
        #[serde(rename = "E")]
        e: RowContractionJson,
        split: usize,
    },
}

pub fn complex_to_json(z: Complex64) -> [f64; 2] {
    [z.re, z.im]
}

pub fn complex_from_json(z: [f64; 2]) -> Complex64 {
    Complex64::new(z[0], z[1])
}

pub fn matrix_to_json(m: &CMatrix) -> MatrixJson {
    let mut data = Vec::with_capacity(m.len());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            data.push(complex_to_json(m[(i, j)]));
        }
    }
    MatrixJson {
        rows: m.nrows(),
        cols: m.ncols(),
        data,
    }
}

pub fn matrix_from_json(j: &MatrixJson) -> Result<CMatrix> {
    if j.data.len() != j.rows * j.cols {
        return Err(Error::ShapeMismatch(format!(
            "matrix {}x{} has {} entries",
            j.rows,
            j.cols,
            j.data.len()
        )));
    }
    let m = CMatrix::from_row_iterator(j.rows, j.cols, j.data.iter().map(|&z| complex_from_json(z)));
    ensure_finite(&m)?;
    Ok(m)
}

pub fn rowcon_to_json(t: &RowContraction) -> RowContractionJson {
    RowContractionJson {
        dim: t.dim(),
        arity: t.arity(),
        blocks: t.blocks().iter().map(matrix_to_json).collect(),
    }
}

pub fn rowcon_from_json(j: &RowContractionJson) -> Result<RowContraction> {
    if j.blocks.len() != j.arity {
        return Err(Error::ShapeMismatch(format!(
            "arity {} but {} blocks",
            j.arity,
            j.blocks.len()
        )));
    }
    let blocks = j.blocks.iter().map(matrix_from_json).collect::<Result<Vec<_>>>()?;
    let t = RowContraction::new(blocks)?;
    if t.dim() != j.dim {
        return Err(Error::ShapeMismatch(format!("dim {} but blocks are {}", j.dim, t.dim())));
    }
    Ok(t)
}

pub fn series_to_json(s: &NCSeries) -> NCSeriesJson {
    NCSeriesJson {
        arity: s.arity(),
        in_dim: s.in_dim(),
        out_dim: s.out_dim(),
        degree: s.degree(),
        coeffs: s
            .iter()
            .map(|(w, m)| CoeffJson {
                word: w.0,
                matrix: matrix_to_json(m),
            })
            .collect(),
    }
}

/// Words must appear in graded-lex order; missing trailing words are zero.
pub fn series_from_json(j: &NCSeriesJson) -> Result<NCSeries> {
    let mut s = NCSeries::zero(j.arity, j.in_dim, j.out_dim, j.degree)?;
    let words = enumerate_words(j.arity, j.degree);
    if j.coeffs.len() > words.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} coefficients for {} words",
            j.coeffs.len(),
            words.len()
        )));
    }
    for (k, c) in j.coeffs.iter().enumerate() {
        let w = Word(c.word.clone());
        if w != words[k] {
            return Err(Error::BadParameter(format!(
                "coefficient {k} has word {w}, expected {} (graded-lex order)",
                words[k]
            )));
        }
        s.set_coeff(&w, matrix_from_json(&c.matrix)?)?;
    }
    Ok(s)
}

pub fn colligation_to_json(w: &Colligation) -> ColligationJson {
    ColligationJson {
        arity: w.arity(),
        state_dim: w.state_dim(),
        in_dim: w.in_dim(),
        out_dim: w.out_dim(),
        a: w.a_blocks().iter().map(matrix_to_json).collect(),
        b: matrix_to_json(w.b()),
        c: matrix_to_json(w.c()),
        d: matrix_to_json(w.d()),
    }
}

pub fn colligation_from_json(j: &ColligationJson) -> Result<Colligation> {
    let a = j.a.iter().map(matrix_from_json).collect::<Result<Vec<_>>>()?;
    let w = Colligation::new(
        a,
        matrix_from_json(&j.b)?,
        matrix_from_json(&j.c)?,
        matrix_from_json(&j.d)?,
    )?;
    if (w.arity(), w.state_dim(), w.in_dim(), w.out_dim())
        != (j.arity, j.state_dim, j.in_dim, j.out_dim)
    {
        return Err(Error::ShapeMismatch("colligation header disagrees with blocks".into()));
    }
    Ok(w)
}

pub fn lifting_to_json(e: &Lifting) -> LiftingJson {
    LiftingJson::Assembled {
        e: rowcon_to_json(e.e()),
        split: e.n_c(),
    }
}

pub fn lifting_from_json(j: &LiftingJson) -> Result<Lifting> {
    match j {
        LiftingJson::Parts { c, a, gamma } => build_lifting(
            &rowcon_from_json(c)?,
            &rowcon_from_json(a)?,
            &matrix_from_json(gamma)?,
        ),
        LiftingJson::Assembled { e, split } => Lifting::from_e(&rowcon_from_json(e)?, *split),
    }
}

pub fn parse<T: for<'de> Deserialize<'de>>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::BadParameter(format!("invalid JSON: {e}")))
}

pub fn to_pretty<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("JSON forms always serialize")
}
