//! Canonical JSON files for datasets and models.
//!
//! Keys appear in a fixed order and every float is printed with 17
//! significant digits (`{:.16e}`), so parsing and re-serializing a canonical
//! file reproduces it byte for byte. Complex numbers are `[re, im]` pairs.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::DMatrix;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::linalg::{MatrixC, VectorC, C64};
use crate::model::{
    BasisKind, CompressedParametricModel, FrequencyResponseDataset, ParametricBasis, ParametricModel,
    PoleResidueModel,
};
use crate::multiparam::{CompressedParametricModel2, FrequencyResponseDataset2, ParametricModel2};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub enum DatasetFile {
    OneParam(FrequencyResponseDataset),
    TwoParam(FrequencyResponseDataset2),
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModelFile {
    Parametric(ParametricModel),
    Compressed(CompressedParametricModel),
    Parametric2(ParametricModel2),
    Compressed2(CompressedParametricModel2),
}

impl ModelFile {
    pub fn kind(&self) -> &'static str {
        match self {
            Self::Parametric(_) => "parametric",
            Self::Compressed(_) => "compressed",
            Self::Parametric2(_) => "parametric2",
            Self::Compressed2(_) => "compressed2",
        }
    }
}

// ---------------------------------------------------------------- writing

fn num(out: &mut String, x: f64) {
    let _ = write!(out, "{x:.16e}");
}

fn cplx(out: &mut String, z: C64) {
    out.push('[');
    num(out, z.re);
    out.push(',');
    num(out, z.im);
    out.push(']');
}

fn list<T>(out: &mut String, items: impl IntoIterator<Item = T>, mut f: impl FnMut(&mut String, T)) {
    out.push('[');
    for (i, x) in items.into_iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        f(out, x);
    }
    out.push(']');
}

fn key(out: &mut String, k: &str) {
    if !out.ends_with('{') {
        out.push(',');
    }
    let _ = write!(out, "\"{k}\":");
}

fn cmatrix(out: &mut String, m: &MatrixC) {
    list(out, 0..m.nrows(), |o, i| list(o, m.row(i).iter(), |o, z| cplx(o, *z)));
}

fn basis_json(out: &mut String, b: &ParametricBasis) {
    out.push('{');
    key(out, "kind");
    match b.kind() {
        BasisKind::Monomial { degree } => {
            out.push_str("\"monomial\"");
            key(out, "degree");
            let _ = write!(out, "{degree}");
        }
        BasisKind::Bernstein { degree } => {
            out.push_str("\"bernstein\"");
            key(out, "degree");
            let _ = write!(out, "{degree}");
        }
        BasisKind::RationalPoles { poles } => {
            out.push_str("\"rational\"");
            key(out, "poles");
            list(out, poles.iter(), |o, z| cplx(o, *z));
        }
    }
    key(out, "interval");
    let (a, b) = b.domain();
    list(out, [a, b], num);
    out.push('}');
}

fn locals_json(out: &mut String, locals: &[PoleResidueModel]) {
    key(out, "local_models");
    list(out, locals.iter(), |o, m| {
        o.push('{');
        key(o, "poles");
        list(o, m.poles().iter(), |o, z| cplx(o, *z));
        key(o, "residues");
        list(o, m.residues().iter(), |o, z| cplx(o, *z));
        o.push('}');
    });
}

fn reduced_json(out: &mut String, r: &MatrixC, a: &MatrixC, b: &VectorC, c: &MatrixC) {
    key(out, "gram_chol");
    cmatrix(out, r);
    key(out, "a_red");
    cmatrix(out, a);
    key(out, "b_red");
    list(out, b.iter(), |o, z| cplx(o, *z));
    key(out, "c_red_unweighted");
    cmatrix(out, c);
}

/// Canonical serialization of a dataset (one line, trailing newline).
pub fn dataset_to_json(d: &DatasetFile) -> String {
    let mut out = String::from("{");
    key(&mut out, "version");
    let _ = write!(out, "{FORMAT_VERSION}");
    let (freqs, samples, weights, real) = match d {
        DatasetFile::OneParam(d) => {
            key(&mut out, "kind");
            out.push_str("\"1p\"");
            (d.frequencies(), d.samples(), d.weights(), d.real_symmetric())
        }
        DatasetFile::TwoParam(d) => {
            key(&mut out, "kind");
            out.push_str("\"2p\"");
            (d.frequencies(), d.samples(), d.weights(), d.real_symmetric())
        }
    };
    key(&mut out, "frequencies");
    list(&mut out, freqs.iter(), |o, z| cplx(o, *z));
    key(&mut out, "parameters");
    match d {
        DatasetFile::OneParam(d) => list(&mut out, d.parameters().iter(), |o, p| num(o, p.re)),
        DatasetFile::TwoParam(d) => {
            out.push('{');
            key(&mut out, "p");
            list(&mut out, d.params_p().iter(), |o, x| num(o, *x));
            key(&mut out, "q");
            list(&mut out, d.params_q().iter(), |o, x| num(o, *x));
            out.push('}');
        }
    }
    key(&mut out, "samples");
    cmatrix(&mut out, samples);
    if let Some(w) = weights {
        key(&mut out, "weights");
        list(&mut out, 0..w.nrows(), |o, i| list(o, w.row(i).iter(), |o, x| num(o, *x)));
    }
    key(&mut out, "real_symmetric");
    let _ = write!(out, "{real}");
    out.push_str("}\n");
    out
}

/// Canonical serialization of a model (one line, trailing newline).
pub fn model_to_json(m: &ModelFile) -> String {
    let mut out = String::from("{");
    key(&mut out, "version");
    let _ = write!(out, "{FORMAT_VERSION}");
    key(&mut out, "kind");
    let _ = write!(out, "\"{}\"", m.kind());
    let real = match m {
        ModelFile::Parametric(m) => {
            locals_json(&mut out, m.local_models());
            key(&mut out, "basis");
            basis_json(&mut out, m.basis());
            key(&mut out, "coefficients");
            cmatrix(&mut out, m.coefficients());
            m.real_flag()
        }
        ModelFile::Parametric2(m) => {
            locals_json(&mut out, m.local_models());
            key(&mut out, "basis_p");
            basis_json(&mut out, m.basis_p());
            key(&mut out, "basis_q");
            basis_json(&mut out, m.basis_q());
            key(&mut out, "coefficients");
            cmatrix(&mut out, m.coefficients());
            m.real_flag()
        }
        ModelFile::Compressed(m) => {
            key(&mut out, "basis");
            basis_json(&mut out, &m.basis);
            reduced_json(&mut out, &m.gram_chol, &m.a_red, &m.b_red, &m.c_red_unweighted);
            false
        }
        ModelFile::Compressed2(m) => {
            key(&mut out, "basis_p");
            basis_json(&mut out, &m.basis_p);
            key(&mut out, "basis_q");
            basis_json(&mut out, &m.basis_q);
            reduced_json(&mut out, &m.gram_chol, &m.a_red, &m.b_red, &m.c_red_unweighted);
            false
        }
    };
    key(&mut out, "real_flag");
    let _ = write!(out, "{real}");
    out.push_str("}\n");
    out
}

// ---------------------------------------------------------------- reading

type Pair = [f64; 2];

#[derive(Deserialize)]
#[serde(untagged)]
enum RawParams {
    One(Vec<f64>),
    Two { p: Vec<f64>, q: Vec<f64> },
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDataset {
    version: u32,
    kind: String,
    frequencies: Vec<Pair>,
    parameters: RawParams,
    samples: Vec<Vec<Pair>>,
    #[serde(default)]
    weights: Option<Vec<Vec<f64>>>,
    real_symmetric: bool,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBasis {
    kind: String,
    #[serde(default)]
    degree: Option<usize>,
    #[serde(default)]
    poles: Option<Vec<Pair>>,
    interval: [f64; 2],
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLocal {
    poles: Vec<Pair>,
    residues: Vec<Pair>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    version: u32,
    kind: String,
    #[serde(default)]
    local_models: Option<Vec<RawLocal>>,
    #[serde(default)]
    basis: Option<RawBasis>,
    #[serde(default)]
    basis_p: Option<RawBasis>,
    #[serde(default)]
    basis_q: Option<RawBasis>,
    #[serde(default)]
    coefficients: Option<Vec<Vec<Pair>>>,
    #[serde(default)]
    gram_chol: Option<Vec<Vec<Pair>>>,
    #[serde(default)]
    a_red: Option<Vec<Vec<Pair>>>,
    #[serde(default)]
    b_red: Option<Vec<Pair>>,
    #[serde(default)]
    c_red_unweighted: Option<Vec<Vec<Pair>>>,
    real_flag: bool,
}

fn c(p: &Pair) -> C64 {
    C64::new(p[0], p[1])
}

fn cvec(v: &[Pair]) -> Vec<C64> {
    v.iter().map(c).collect()
}

fn rows_to_matrix(rows: &[Vec<Pair>], what: &str) -> Result<MatrixC> {
    let ncols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::Format(format!("{what}: ragged rows")));
    }
    Ok(MatrixC::from_fn(rows.len(), ncols, |i, j| c(&rows[i][j])))
}

fn need<T>(v: Option<T>, what: &str) -> Result<T> {
    v.ok_or_else(|| Error::Format(format!("missing field `{what}`")))
}

fn check_version(v: u32) -> Result<()> {
    if v != FORMAT_VERSION {
        return Err(Error::Format(format!("unsupported version {v}")));
    }
    Ok(())
}

fn basis_from(raw: &RawBasis) -> Result<ParametricBasis> {
    let [a, b] = raw.interval;
    let kind = match raw.kind.as_str() {
        "monomial" => BasisKind::Monomial {
            degree: need(raw.degree, "degree")?,
        },
        "bernstein" => BasisKind::Bernstein {
            degree: need(raw.degree, "degree")?,
        },
        "rational" => BasisKind::RationalPoles {
            poles: cvec(need(raw.poles.as_deref(), "poles")?),
        },
        other => return Err(Error::Format(format!("unknown basis kind `{other}`"))),
    };
    ParametricBasis::new(kind, a, b)
}

fn locals_from(raw: &[RawLocal]) -> Result<Vec<PoleResidueModel>> {
    raw.iter().map(|m| PoleResidueModel::new(cvec(&m.poles), cvec(&m.residues))).collect()
}

pub fn dataset_from_json(text: &str) -> Result<DatasetFile> {
    let raw: RawDataset = serde_json::from_str(text)?;
    check_version(raw.version)?;
    let freqs = cvec(&raw.frequencies);
    let samples = rows_to_matrix(&raw.samples, "samples")?;
    if samples.nrows() != freqs.len() {
        return Err(Error::ShapeMismatch(format!("{} sample rows for {} frequencies", samples.nrows(), freqs.len())));
    }
    let weights = match &raw.weights {
        None => None,
        Some(rows) => {
            let ncols = rows.first().map_or(0, Vec::len);
            if rows.iter().any(|r| r.len() != ncols) {
                return Err(Error::Format("weights: ragged rows".into()));
            }
            Some(DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]))
        }
    };
    match (raw.kind.as_str(), raw.parameters) {
        ("1p", RawParams::One(p)) => Ok(DatasetFile::OneParam(FrequencyResponseDataset::new(
            freqs,
            p.into_iter().map(|x| C64::new(x, 0.0)).collect(),
            samples,
            weights,
            raw.real_symmetric,
        )?)),
        ("2p", RawParams::Two { p, q }) => Ok(DatasetFile::TwoParam(FrequencyResponseDataset2::new(
            freqs,
            p,
            q,
            samples,
            weights,
            raw.real_symmetric,
        )?)),
        (k, _) => Err(Error::Format(format!("dataset kind `{k}` does not match its parameter layout"))),
    }
}

pub fn model_from_json(text: &str) -> Result<ModelFile> {
    let raw: RawModel = serde_json::from_str(text)?;
    check_version(raw.version)?;
    match raw.kind.as_str() {
        "parametric" => {
            let locals = locals_from(need(raw.local_models.as_deref(), "local_models")?)?;
            let basis = basis_from(need(raw.basis.as_ref(), "basis")?)?;
            let x = rows_to_matrix(need(raw.coefficients.as_deref(), "coefficients")?, "coefficients")?;
            Ok(ModelFile::Parametric(ParametricModel::new(locals, basis, x, raw.real_flag)?))
        }
        "parametric2" => {
            let locals = locals_from(need(raw.local_models.as_deref(), "local_models")?)?;
            let bp = basis_from(need(raw.basis_p.as_ref(), "basis_p")?)?;
            let bq = basis_from(need(raw.basis_q.as_ref(), "basis_q")?)?;
            let x = rows_to_matrix(need(raw.coefficients.as_deref(), "coefficients")?, "coefficients")?;
            Ok(ModelFile::Parametric2(ParametricModel2::new(locals, bp, bq, x, raw.real_flag)?))
        }
        "compressed" | "compressed2" => {
            let r = rows_to_matrix(need(raw.gram_chol.as_deref(), "gram_chol")?, "gram_chol")?;
            let a = rows_to_matrix(need(raw.a_red.as_deref(), "a_red")?, "a_red")?;
            let b = VectorC::from_vec(cvec(need(raw.b_red.as_deref(), "b_red")?));
            let cu = rows_to_matrix(need(raw.c_red_unweighted.as_deref(), "c_red_unweighted")?, "c_red_unweighted")?;
            let n = a.nrows();
            if a.ncols() != n || b.len() != n || cu.ncols() != n || r.nrows() != cu.nrows() || !r.is_square() {
                return Err(Error::ShapeMismatch("compressed model blocks have inconsistent sizes".into()));
            }
            if raw.kind == "compressed" {
                let basis = basis_from(need(raw.basis.as_ref(), "basis")?)?;
                if basis.len() != cu.nrows() {
                    return Err(Error::ShapeMismatch("basis size does not match c_red_unweighted".into()));
                }
                Ok(ModelFile::Compressed(CompressedParametricModel {
                    basis,
                    gram_chol: r,
                    a_red: a,
                    b_red: b,
                    c_red_unweighted: cu,
                }))
            } else {
                let bp = basis_from(need(raw.basis_p.as_ref(), "basis_p")?)?;
                let bq = basis_from(need(raw.basis_q.as_ref(), "basis_q")?)?;
                if bp.len() * bq.len() != cu.nrows() {
                    return Err(Error::ShapeMismatch("basis sizes do not match c_red_unweighted".into()));
                }
                Ok(ModelFile::Compressed2(CompressedParametricModel2 {
                    basis_p: bp,
                    basis_q: bq,
                    gram_chol: r,
                    a_red: a,
                    b_red: b,
                    c_red_unweighted: cu,
                }))
            }
        }
        other => Err(Error::Format(format!("unknown model kind `{other}`"))),
    }
}

pub fn read_dataset(path: &Path) -> Result<DatasetFile> {
    dataset_from_json(&std::fs::read_to_string(path)?)
}

pub fn write_dataset(path: &Path, d: &DatasetFile) -> Result<()> {
    Ok(std::fs::write(path, dataset_to_json(d))?)
}

pub fn read_model(path: &Path) -> Result<ModelFile> {
    model_from_json(&std::fs::read_to_string(path)?)
}

pub fn write_model(path: &Path, m: &ModelFile) -> Result<()> {
    Ok(std::fs::write(path, model_to_json(m))?)
}
