//! Jobs resolved from parsed blocks.

use std::path::PathBuf;
use std::sync::Arc;

use dagger_core::arith::{CoeffSpec, Rational, Scalar};
use dagger_core::dagalg::{FringeElement, Key, Presentation, UniPoly};
use dagger_core::diffcalc::{Connection, ElemMatrix};
use num_bigint::BigInt;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::grammar::{parse, Block, Entry, ParseError, Pos, Tok};

pub const PRECISION_ENV: &str = "DAGGER_PRECISION";
const FALLBACK_PRECISION: i64 = 20;

#[derive(Debug, Error)]
pub enum JobError {
    #[error("parse error at {0}")]
    Parse(#[from] ParseError),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("{context}: {message}")]
    Library { context: String, message: String },
    #[error("{0}: no stabilization within the truncation sweep")]
    NotStabilized(String, Vec<(usize, Vec<usize>)>),
    #[error("cannot write report: {0}")]
    Io(String),
}

impl JobError {
    pub fn library(context: &str, e: impl std::fmt::Display) -> Self {
        JobError::Library { context: context.to_string(), message: e.to_string() }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            JobError::Parse(_) | JobError::Unsupported(_) | JobError::Io(_) => 2,
            JobError::NotStabilized(..) => 3,
            JobError::Library { .. } => 1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Truncation {
    pub d: usize,
    pub precision: i64,
    pub n: u32,
    pub n_jet: u32,
    pub k_max: usize,
}

impl Truncation {
    fn from_block(b: &Block, default_precision: i64) -> Result<Self, ParseError> {
        b.expect_only(&["d", "N", "n", "n_jet", "k_max"], &[])?;
        let positive = |key: &str| -> Result<usize, ParseError> {
            let e = b.require(key)?;
            let v: usize = e.parse_single("a positive integer")?;
            if v == 0 {
                return Err(e.value_pos().error(format!("`{key}` must be positive")));
            }
            Ok(v)
        };
        let precision = match b.entry("N") {
            Some(e) => {
                let v: i64 = e.parse_single("a positive integer")?;
                if v <= 0 {
                    return Err(e.value_pos().error("`N` must be positive"));
                }
                v
            }
            None => default_precision,
        };
        Ok(Truncation {
            d: positive("d")?,
            precision,
            n: positive("n")? as u32,
            n_jet: positive("n_jet")? as u32,
            k_max: positive("k_max")?,
        })
    }
}

/// Default p-adic precision: `DAGGER_PRECISION`, else 20.
pub fn default_precision() -> Result<i64, JobError> {
    match std::env::var(PRECISION_ENV) {
        Ok(v) => v
            .trim()
            .parse::<i64>()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| JobError::Unsupported(format!("{PRECISION_ENV}={v} is not a positive integer"))),
        Err(_) => Ok(FALLBACK_PRECISION),
    }
}

#[derive(Clone, Debug)]
pub struct JobSpec {
    pub name: String,
    pub command: String,
    pub command_pos: Pos,
    pub truncation: Truncation,
    pub output: Option<PathBuf>,
    pub seed: Option<u64>,
    /// The whole job block, for command-specific keys.
    pub block: Block,
}

const JOB_KEYS: &[&str] = &["command", "output", "seed", "support", "orders", "datum", "rank", "degree"];
const JOB_BLOCKS: &[&str] = &["presentation", "connection", "truncation", "cover", "tower"];

impl JobSpec {
    pub fn from_block(b: &Block, default_precision: i64) -> Result<Self, ParseError> {
        if b.name != "job" {
            return Err(b.pos.error(format!("expected a `job` block, found `{}`", b.name)));
        }
        b.expect_only(JOB_KEYS, JOB_BLOCKS)?;
        let name = b.label.clone().ok_or_else(|| b.pos.error("a job needs a name: `job <name> {`"))?;
        let cmd = b.require("command")?;
        let (command, command_pos) = cmd.single()?;
        let truncation = Truncation::from_block(
            b.block("truncation").ok_or_else(|| b.pos.error("job is missing its `truncation` block"))?,
            default_precision,
        )?;
        let output = b.entry("output").map(|e| e.single().map(|(w, _)| PathBuf::from(w))).transpose()?;
        let seed = b.entry("seed").map(|e| e.parse_single("a non-negative integer")).transpose()?;
        Ok(JobSpec { name, command, command_pos, truncation, output, seed, block: b.clone() })
    }

    pub fn coefficients(&self) -> Result<CoeffSpec, ParseError> {
        let p = self.presentation_block()?;
        coefficients(p, self.truncation.precision)
    }

    fn presentation_block(&self) -> Result<&Block, ParseError> {
        self.block.block("presentation").ok_or_else(|| self.block.pos.error("job is missing its `presentation` block"))
    }

    pub fn presentation(&self) -> Result<Arc<Presentation>, JobError> {
        let b = self.presentation_block()?;
        b.expect_only(&["kind", "dim", "f", "coefficients"], &[])?;
        let spec = coefficients(b, self.truncation.precision)?;
        let kind = b.require("kind")?;
        let (k, kpos) = kind.single()?;
        let dim =
            || -> Result<usize, ParseError> { b.entry("dim").map_or(Ok(1), |e| e.parse_single("a positive integer")) };
        let poly = || -> Result<UniPoly, ParseError> {
            let e = b.require("f")?;
            let coeffs = e.words()?.into_iter().map(|(w, p)| scalar(&w, p, spec)).collect::<Result<Vec<_>, _>>()?;
            Ok(UniPoly::new(spec, coeffs))
        };
        let built = match k.as_str() {
            "affine" => Presentation::affine_space(dim()?, spec),
            "torus" => Presentation::torus(dim()?, spec),
            "localized" => Presentation::localized_line(poly()?),
            "hyperelliptic" => Presentation::hyperelliptic(poly()?),
            other => return Err(kpos.error(format!("unknown presentation kind `{other}`")).into()),
        };
        built.map_err(|e| JobError::Unsupported(format!("presentation at {kpos}: {e}")))
    }

    /// The job's connection over `pres`; `None` when there is no `connection` block.
    pub fn connection(&self, pres: &Arc<Presentation>) -> Result<Option<Connection>, JobError> {
        match self.block.block("connection") {
            None => Ok(None),
            Some(b) => connection(b, pres, self.seed.unwrap_or(0)).map(Some),
        }
    }

    pub fn connection_or_trivial(&self, pres: &Arc<Presentation>) -> Result<Connection, JobError> {
        Ok(self.connection(pres)?.unwrap_or_else(|| Connection::trivial(pres, 1)))
    }
}

fn coefficients(b: &Block, precision: i64) -> Result<CoeffSpec, ParseError> {
    let Some(e) = b.entry("coefficients") else { return Ok(CoeffSpec::Rational) };
    let w = e.words()?;
    match w.as_slice() {
        [(r, _)] if r == "rational" => Ok(CoeffSpec::Rational),
        [(k, _), (p, pp), rest @ ..] if k == "padic" && rest.len() <= 1 => {
            let prime: u32 = p
                .parse()
                .ok()
                .filter(|&q: &u32| is_prime(q))
                .ok_or_else(|| pp.error(format!("`{p}` is not a prime")))?;
            let n = match rest {
                [(n, np)] => n
                    .parse::<i64>()
                    .ok()
                    .filter(|&v| v > 0)
                    .ok_or_else(|| np.error(format!("`{n}` is not a positive precision")))?,
                _ => precision,
            };
            Ok(CoeffSpec::padic(prime, n))
        }
        _ => Err(e.value_pos().error("coefficients must be `rational` or `padic <p> [N]`")),
    }
}

fn is_prime(p: u32) -> bool {
    p >= 2 && (2..).take_while(|d| d * d <= p).all(|d| p % d != 0)
}

/// `num`, `num/den`, or `num@vN` (meaning `num · p^N`).
pub fn scalar(w: &str, pos: Pos, spec: CoeffSpec) -> Result<Scalar, ParseError> {
    let bad = || pos.error(format!("`{w}` is not a coefficient (`num`, `num/den` or `num@vN`)"));
    if let Some((num, val)) = w.split_once("@v") {
        let n: BigInt = num.parse().map_err(|_| bad())?;
        let v: i64 = val.parse().map_err(|_| bad())?;
        return spec
            .with_valuation(&Rational::from_integer(n), v)
            .map_err(|_| pos.error(format!("`{w}` needs p-adic coefficients")));
    }
    let r = match w.split_once('/') {
        Some((n, d)) => {
            let n: BigInt = n.parse().map_err(|_| bad())?;
            let d: BigInt = d.parse().map_err(|_| bad())?;
            if d == BigInt::from(0) {
                return Err(pos.error("zero denominator"));
            }
            Rational::new(n, d)
        }
        None => Rational::from_integer(w.parse().map_err(|_| bad())?),
    };
    Ok(spec.rational(&r))
}

/// `c1 [k…] + c2 [k…] + …`; a term without a key is a constant.
pub fn element(e: &Entry, pres: &Arc<Presentation>) -> Result<FringeElement, JobError> {
    let spec = pres.spec();
    let len = pres.raw_key_len();
    let mut raw: Vec<(Key, Scalar)> = Vec::new();
    let toks = &e.value;
    let mut i = 0;
    if toks.is_empty() {
        return Err(e.pos.error(format!("`{}` needs a value", e.key)).into());
    }
    while i < toks.len() {
        let (c, cpos) = match &toks[i].tok {
            Tok::Word(w) => (w.clone(), toks[i].pos),
            t => return Err(toks[i].pos.error(format!("expected a coefficient, found `{t}`")).into()),
        };
        let coef = scalar(&c, cpos, spec)?;
        i += 1;
        let mut key = vec![0; len];
        if matches!(toks.get(i), Some(s) if s.tok == Tok::LBracket) {
            let open = toks[i].pos;
            i += 1;
            let mut k = Vec::new();
            loop {
                match toks.get(i).map(|s| &s.tok) {
                    Some(Tok::Word(w)) => {
                        k.push(w.parse::<i64>().map_err(|_| toks[i].pos.error(format!("`{w}` is not an exponent")))?);
                        i += 1;
                    }
                    Some(Tok::Comma) => i += 1,
                    Some(Tok::RBracket) => {
                        i += 1;
                        break;
                    }
                    _ => return Err(open.error("unclosed `[`").into()),
                }
            }
            if k.len() != len {
                return Err(open.error(format!("{} expects keys of {len} exponents, found {}", pres, k.len())).into());
            }
            key = k;
        }
        raw.push((key, coef));
        match toks.get(i).map(|s| &s.tok) {
            None => break,
            Some(Tok::Plus) => i += 1,
            Some(t) => return Err(toks[i].pos.error(format!("expected `+` between terms, found `{t}`")).into()),
        }
    }
    FringeElement::normal_form(&raw, pres).map_err(|err| JobError::Unsupported(format!("value at {}: {err}", e.pos)))
}

fn connection(b: &Block, pres: &Arc<Presentation>, seed: u64) -> Result<Connection, JobError> {
    b.expect_only(&["rank", "kind", "exponent", "degree"], &["matrix"])?;
    let rank: usize = b.entry("rank").map_or(Ok(1), |e| e.parse_single("a non-negative integer"))?;
    let kind = match b.entry("kind") {
        Some(e) => e.single()?,
        None if b.blocks.is_empty() => ("trivial".to_string(), b.pos),
        None => ("matrices".to_string(), b.pos),
    };
    let lib = |e: dagger_core::diffcalc::DiffError| JobError::library("connection", e);
    match kind.0.as_str() {
        "trivial" => Ok(Connection::trivial(pres, rank)),
        "kummer" => {
            let e = b.require("exponent")?;
            let (w, p) = e.single()?;
            Connection::kummer(pres, scalar(&w, p, pres.spec())?).map_err(lib)
        }
        "random" => {
            if !pres.is_curve() {
                return Err(JobError::Unsupported("random connections are generated on curves only".into()));
            }
            let deg: i64 = b.entry("degree").map_or(Ok(2), |e| e.parse_single("a non-negative integer"))?;
            let mut r = rng(seed);
            let rows = (0..rank).map(|_| (0..rank).map(|_| random_element(pres, deg, 0.4, &mut r)).collect()).collect();
            Connection::new(pres, vec![ElemMatrix::from_rows(pres, rows)]).map_err(lib)
        }
        "matrices" => {
            let mut mats = vec![ElemMatrix::zeros(pres, rank, rank); pres.dim()];
            for m in b.blocks_named("matrix") {
                m.expect_only(&["entry"], &[])?;
                let label =
                    m.label.as_deref().ok_or_else(|| m.pos.error("`matrix` needs a coordinate index: `matrix 0 {`"))?;
                let i: usize = label
                    .parse()
                    .ok()
                    .filter(|&i| i < pres.dim())
                    .ok_or_else(|| m.pos.error(format!("coordinate index `{label}` out of range for {pres}")))?;
                for e in &m.entries {
                    let (r, c, rest) = entry_index(e, rank)?;
                    mats[i].set(r, c, element(&rest, pres)?);
                }
            }
            Connection::new(pres, mats).map_err(lib)
        }
        other => Err(kind.1.error(format!("unknown connection kind `{other}`")).into()),
    }
}

/// `entry <row> <col> = …` is tokenized as key `entry` with value `row col = …`; the parser
/// stops values at `=`, so the indices are written inside the value: `entry = r c : terms`.
fn entry_index(e: &Entry, rank: usize) -> Result<(usize, usize, Entry), ParseError> {
    let idx = |k: usize| -> Result<usize, ParseError> {
        let s = e.value.get(k).ok_or_else(|| e.pos.error("`entry` needs `<row> <col> : <terms>`"))?;
        match &s.tok {
            Tok::Word(w) => w
                .parse()
                .ok()
                .filter(|&v| v < rank)
                .ok_or_else(|| s.pos.error(format!("index `{w}` out of range for rank {rank}"))),
            t => Err(s.pos.error(format!("expected an index, found `{t}`"))),
        }
    };
    let (r, c) = (idx(0)?, idx(1)?);
    match e.value.get(2) {
        Some(s) if s.tok == Tok::Word(":".into()) => {}
        Some(s) => return Err(s.pos.error("expected `:` after the entry indices")),
        None => return Err(e.pos.error("`entry` needs `<row> <col> : <terms>`")),
    }
    Ok((r, c, Entry { key: e.key.clone(), pos: e.value[2].pos, value: e.value[3..].to_vec() }))
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    rand::SeedableRng::seed_from_u64(seed)
}

/// Random element on keys of size at most `deg`, small rational coefficients.
pub fn random_element(pres: &Arc<Presentation>, deg: i64, density: f64, r: &mut ChaCha8Rng) -> FringeElement {
    let raw: Vec<(Key, Scalar)> = pres
        .basis_keys(deg)
        .into_iter()
        .filter_map(|k| {
            if !r.gen_bool(density) {
                return None;
            }
            let n: i64 = r.gen_range(-4..=4);
            let d: i64 = r.gen_range(1..=3);
            (n != 0).then(|| (k, pres.spec().ratio(n, d)))
        })
        .collect();
    FringeElement::from_terms(pres, raw.into_iter().collect()).expect("normal-form keys")
}

/// Every `job` block of a file.
pub fn parse_jobs(src: &str) -> Result<Vec<JobSpec>, JobError> {
    let doc = parse(src)?;
    if let Some(e) = doc.entries.first() {
        return Err(e.pos.error(format!("`{}` outside of a job block", e.key)).into());
    }
    if doc.blocks.is_empty() {
        return Err(ParseError { line: 1, col: 1, msg: "no `job` blocks".into() }.into());
    }
    let precision = default_precision()?;
    Ok(doc.blocks.iter().map(|b| JobSpec::from_block(b, precision)).collect::<Result<_, _>>()?)
}
