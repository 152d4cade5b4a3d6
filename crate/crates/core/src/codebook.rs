//! Energy-constrained codebooks, signatures and the truncation normalizer.

use std::io::{self, BufRead, Read, Write};

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::rng::fill_normal;
use crate::special::{gamma_p, gamma_q};

/// Retry limit for one rejection-sampled vector.
pub const MAX_REJECTIONS: u64 = 1_000_000;

/// `1 - ln 2`, the exponent constant of the Chernoff bound on the normalizer.
pub const TAU: f64 = 1.0 - std::f64::consts::LN_2;

/// Gaussian vectors conditioned on lying inside an energy ball.
///
/// Coordinates are i.i.d. `N(0, E / (2 len))`; draws with `|x|^2 > E` are
/// rejected and redrawn.
#[derive(Debug, Clone, Copy)]
pub struct TruncatedGaussian {
    len: usize,
    energy: f64,
    sigma: f64,
}

impl TruncatedGaussian {
    pub fn new(len: usize, energy: f64) -> Result<Self> {
        if len == 0 {
            return Err(domain("vector length must be positive"));
        }
        if !(energy > 0.0 && energy.is_finite()) {
            return Err(domain(format!("energy must be positive, got {energy}")));
        }
        Ok(Self { len, energy, sigma: (energy / (2.0 * len as f64)).sqrt() })
    }

    /// Draws one accepted vector and reports how many raw draws it took.
    pub fn sample_counted<R: RngCore + ?Sized>(&self, rng: &mut R) -> Result<(Vec<f64>, u64)> {
        let mut x = vec![0.0; self.len];
        for attempt in 1..=MAX_REJECTIONS {
            fill_normal(rng, self.sigma, &mut x);
            if squared_norm(&x) <= self.energy {
                return Ok((x, attempt));
            }
        }
        Err(Error::RejectionLimit(MAX_REJECTIONS))
    }

    pub fn sample<R: RngCore + ?Sized>(&self, rng: &mut R) -> Result<Vec<f64>> {
        self.sample_counted(rng).map(|(x, _)| x)
    }
}

/// `count` independent truncated Gaussian vectors of length `len`.
pub fn gen_truncated_gaussian<R: RngCore + ?Sized>(
    count: usize,
    len: usize,
    energy: f64,
    rng: &mut R,
) -> Result<Vec<Vec<f64>>> {
    if count == 0 {
        return Err(domain("count must be positive"));
    }
    let sampler = TruncatedGaussian::new(len, energy)?;
    (0..count).map(|_| sampler.sample(rng)).collect()
}

pub(crate) fn squared_norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Codewords of one user; word 0 is the all-zero word of an inactive user.
#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    m: u32,
    len: usize,
    energy: f64,
    words: Vec<Vec<f64>>,
}

impl Codebook {
    /// Wraps explicit words `1..=M`; the zero word is prepended.
    pub fn from_words(energy: f64, words: Vec<Vec<f64>>) -> Result<Self> {
        let m = words.len();
        if m < 1 {
            return Err(domain("codebook needs at least one nonzero word"));
        }
        let len = words[0].len();
        let tol = 1e-9 * energy.max(1.0);
        for w in &words {
            crate::error::check_len(len, w.len())?;
            if squared_norm(w) > energy + tol {
                return Err(domain("codeword violates the energy constraint"));
            }
        }
        let mut all = Vec::with_capacity(m + 1);
        all.push(vec![0.0; len]);
        all.extend(words);
        Ok(Self { m: m as u32, len, energy, words: all })
    }

    /// Number of nonzero messages.
    pub fn m(&self) -> u32 {
        self.m
    }
    pub fn len(&self) -> usize {
        self.len
    }
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }
    pub fn energy(&self) -> f64 {
        self.energy
    }
    /// Codeword for message `w` (0 is the zero word).
    pub fn word(&self, w: u32) -> &[f64] {
        &self.words[w as usize]
    }
    /// All `M + 1` words, zero word first.
    pub fn words(&self) -> &[Vec<f64>] {
        &self.words
    }
}

/// Random codebook with truncated Gaussian words `1..=M`.
pub fn gen_codebook<R: RngCore + ?Sized>(m: u32, len: usize, energy: f64, rng: &mut R) -> Result<Codebook> {
    if m < 2 {
        return Err(domain(format!("M must be at least 2, got {m}")));
    }
    let words = gen_truncated_gaussian(m as usize, len, energy, rng)?;
    Codebook::from_words(energy, words)
}

/// Pulse-position codebook: a pilot `sqrt(tE)` at position 0 and
/// `sqrt((1-t)E)` at position `w` for message `w`.
pub fn gen_ppm_codebook(m: u32, slot_len: usize, energy: f64, t: f64) -> Result<Codebook> {
    if m < 1 {
        return Err(domain("M must be positive"));
    }
    if slot_len < m as usize + 1 {
        return Err(Error::Size(format!(
            "slot of length {slot_len} cannot hold a pilot and {m} positions"
        )));
    }
    if !(t > 0.0 && t < 1.0) || !(energy > 0.0) {
        return Err(domain(format!("need 0 < t < 1 and E > 0, got t={t}, E={energy}")));
    }
    let pilot = (t * energy).sqrt();
    let pulse = ((1.0 - t) * energy).sqrt();
    let words = (1..=m as usize)
        .map(|w| {
            let mut x = vec![0.0; slot_len];
            x[0] = pilot;
            x[w] = pulse;
            x
        })
        .collect();
    Codebook::from_words(energy, words)
}

/// Per-user signatures used for activity detection.
#[derive(Debug, Clone, PartialEq)]
pub struct SignatureMatrix {
    len: usize,
    energy: f64,
    cols: Vec<Vec<f64>>,
}

impl SignatureMatrix {
    pub fn from_columns(energy: f64, cols: Vec<Vec<f64>>) -> Result<Self> {
        let len = cols.first().map_or(0, Vec::len);
        for c in &cols {
            crate::error::check_len(len, c.len())?;
        }
        Ok(Self { len, energy, cols })
    }
    /// Number of users.
    pub fn users(&self) -> usize {
        self.cols.len()
    }
    /// Signature length.
    pub fn len(&self) -> usize {
        self.len
    }
    pub fn is_empty(&self) -> bool {
        self.cols.is_empty()
    }
    pub fn energy(&self) -> f64 {
        self.energy
    }
    pub fn column(&self, i: usize) -> &[f64] {
        &self.cols[i]
    }
    pub fn columns(&self) -> &[Vec<f64>] {
        &self.cols
    }
}

/// `ell` independent truncated Gaussian signatures of length `n_sig`.
pub fn gen_signatures<R: RngCore + ?Sized>(
    ell: usize,
    n_sig: usize,
    energy: f64,
    rng: &mut R,
) -> Result<SignatureMatrix> {
    let cols = gen_truncated_gaussian(ell, n_sig, energy, rng)?;
    SignatureMatrix::from_columns(energy, cols)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MuMethod {
    Exact,
    ChernoffLb,
    MonteCarlo,
}

/// Probability that an untruncated Gaussian draw lands in the energy ball.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MuEstimate {
    pub value: f64,
    pub method: MuMethod,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stderr: Option<f64>,
}

fn check_mu_len(len: usize) -> Result<()> {
    if len == 0 {
        Err(domain("normalizer needs len >= 1"))
    } else {
        Ok(())
    }
}

/// `Pr(chi2_len <= 2 len)` through the regularized incomplete gamma function.
pub fn mu_exact(len: usize) -> Result<MuEstimate> {
    check_mu_len(len)?;
    let value = gamma_p(len as f64 / 2.0, len as f64)?;
    Ok(MuEstimate { value, method: MuMethod::Exact, stderr: None })
}

/// `1 - mu = Pr(chi2_len > 2 len)`, computed directly so that it stays
/// informative where `mu` rounds to 1.
pub fn mu_tail(len: usize) -> Result<f64> {
    check_mu_len(len)?;
    gamma_q(len as f64 / 2.0, len as f64)
}

/// Chernoff lower bound `1 - exp(-len tau / 2)`.
pub fn mu_chernoff_lb(len: usize) -> Result<MuEstimate> {
    check_mu_len(len)?;
    let value = -(-(len as f64) * TAU / 2.0).exp_m1();
    Ok(MuEstimate { value, method: MuMethod::ChernoffLb, stderr: None })
}

/// Acceptance rate of the raw Gaussian sampler over `trials` draws.
pub fn mu_monte_carlo<R: RngCore + ?Sized>(len: usize, trials: u64, rng: &mut R) -> Result<MuEstimate> {
    check_mu_len(len)?;
    if trials == 0 {
        return Err(domain("Monte Carlo needs at least one trial"));
    }
    // Scale-free: unit energy cap with variance 1 / (2 len).
    let sigma = (1.0 / (2.0 * len as f64)).sqrt();
    let mut x = vec![0.0; len];
    let mut hits = 0u64;
    for _ in 0..trials {
        fill_normal(rng, sigma, &mut x);
        if squared_norm(&x) <= 1.0 {
            hits += 1;
        }
    }
    let p = hits as f64 / trials as f64;
    Ok(MuEstimate {
        value: p,
        method: MuMethod::MonteCarlo,
        stderr: Some((p * (1.0 - p) / trials as f64).sqrt()),
    })
}

const SNAPSHOT_MAGIC: &[u8; 8] = b"MNACMAT1";

/// Writes rows as CSV, one row per line, shortest round-trip decimal form.
pub fn write_matrix_csv<W: Write>(rows: &[Vec<f64>], mut out: W) -> io::Result<()> {
    for row in rows {
        let line: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
        writeln!(out, "{}", line.join(","))?;
    }
    Ok(())
}

/// Reads a CSV matrix written by [`write_matrix_csv`].
pub fn read_matrix_csv<R: BufRead>(input: R) -> io::Result<Vec<Vec<f64>>> {
    let mut rows = Vec::new();
    for line in input.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .map(|s| s.trim().parse::<f64>().map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e)))
            .collect::<io::Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok(rows)
}

/// Flat binary snapshot: magic, row count, column count (little-endian
/// `u64`), then row-major little-endian `f64` values.
pub fn write_matrix_binary<W: Write>(rows: &[Vec<f64>], mut out: W) -> io::Result<()> {
    let cols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != cols) {
        return Err(io::Error::new(io::ErrorKind::InvalidInput, "ragged matrix"));
    }
    out.write_all(SNAPSHOT_MAGIC)?;
    out.write_all(&(rows.len() as u64).to_le_bytes())?;
    out.write_all(&(cols as u64).to_le_bytes())?;
    for v in rows.iter().flatten() {
        out.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

/// Reads a snapshot written by [`write_matrix_binary`].
pub fn read_matrix_binary<R: Read>(mut input: R) -> io::Result<Vec<Vec<f64>>> {
    let mut magic = [0u8; 8];
    input.read_exact(&mut magic)?;
    if &magic != SNAPSHOT_MAGIC {
        return Err(io::Error::new(io::ErrorKind::InvalidData, "bad snapshot magic"));
    }
    let mut word = [0u8; 8];
    input.read_exact(&mut word)?;
    let rows = u64::from_le_bytes(word) as usize;
    input.read_exact(&mut word)?;
    let cols = u64::from_le_bytes(word) as usize;
    let mut out = Vec::with_capacity(rows);
    for _ in 0..rows {
        let mut row = Vec::with_capacity(cols);
        for _ in 0..cols {
            input.read_exact(&mut word)?;
            row.push(f64::from_le_bytes(word));
        }
        out.push(row);
    }
    Ok(out)
}
