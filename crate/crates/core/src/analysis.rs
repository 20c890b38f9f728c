//! Brute-force evaluation of the rank and determinant criteria.
//!
//! The code is real-linear in the symbol coordinates, so a codeword difference
//! `S(a) − S(b)` equals `S(a − b)`. The searches therefore run over difference
//! vectors drawn from the per-symbol alphabet `D = {a − b}` instead of over
//! codeword pairs, and visit only one of `dx` and `−dx`.

use std::cmp::Ordering;

use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constellation::{square_qam, Constellation};
use crate::error::{Error, Result};
use crate::numcore::{det_in_place, singular_values, ComplexMat};
use crate::scalar::{Cx, Scalar};
use crate::stbc::LinearDispersionCode;

/// Default cap on determinant evaluations for the exhaustive search.
pub const DEFAULT_BUDGET: u128 = 100_000_000;
/// Singular values below this fraction of the largest count as zero.
pub const RANK_REL_TOL: f64 = 1e-9;

const KEY_SCALE: f64 = 1e9;

/// The set of per-symbol differences `{a − b : a, b ∈ A}`, including zero.
///
/// Sorted lexicographically by (re, im), which makes it antisymmetric about its
/// midpoint: `diffs[i] = −diffs[len − 1 − i]` exactly, and `diffs[len / 2] = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct DifferenceAlphabet<T: Scalar> {
    diffs: Vec<Cx<T>>,
}

impl<T: Scalar> DifferenceAlphabet<T> {
    pub fn new(c: &Constellation<T>) -> Self {
        let key = |z: &Cx<T>| {
            let re = (z.re.to_f64_lossy() * KEY_SCALE).round() as i64;
            let im = (z.im.to_f64_lossy() * KEY_SCALE).round() as i64;
            (re, im)
        };
        let mut positive: Vec<((i64, i64), Cx<T>)> = Vec::new();
        for a in c.points() {
            for b in c.points() {
                let d = a - b;
                let k = key(&d);
                if k > (0, 0) && !positive.iter().any(|(pk, _)| *pk == k) {
                    positive.push((k, d));
                }
            }
        }
        positive.sort_by_key(|x| x.0);
        let mut diffs: Vec<Cx<T>> = positive.iter().rev().map(|(_, d)| -*d).collect();
        diffs.push(Cx::zero());
        diffs.extend(positive.iter().map(|(_, d)| *d));
        Self { diffs }
    }

    pub fn values(&self) -> &[Cx<T>] {
        &self.diffs
    }

    pub fn len(&self) -> usize {
        self.diffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diffs.is_empty()
    }

    /// Position of the zero difference.
    pub fn zero_index(&self) -> usize {
        self.diffs.len() / 2
    }

    /// Index of `−diffs[i]`.
    pub fn negate_index(&self, i: usize) -> usize {
        self.diffs.len() - 1 - i
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SearchMode {
    Exhaustive,
    Sampled,
}

/// Outcome of a determinant/rank search. In `Sampled` mode `min_det` is only an upper bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodeAnalysisReport {
    pub min_det: f64,
    pub min_rank: usize,
    pub coding_gain: f64,
    /// Minimizing difference vector as `[re, im]` pairs.
    pub argmin_dx: Vec<[f64; 2]>,
    pub pairs_evaluated: u64,
    pub mode: SearchMode,
    /// Smallest product of the nonzero eigenvalues of `ΔΔᴴ` over differences of minimum rank.
    pub min_rank_eig_product: f64,
    /// Largest `|Im det(ΔΔᴴ)|` seen.
    pub max_imag_residue: f64,
    /// Number of transmit antennas of the analysed code.
    pub n_t: usize,
}

/// `(Π λᵢ)^{1/r}` over the supplied nonzero eigenvalues; zero when the list is empty.
pub fn coding_gain_from_eigenvalues(eigs: &[f64]) -> f64 {
    if eigs.is_empty() {
        return 0.0;
    }
    eigs.iter().product::<f64>().powf(1.0 / eigs.len() as f64)
}

/// `δ_min^{1/n_t}` for full-rank codes, otherwise the `r`-th root of the smallest
/// nonzero-eigenvalue product among minimum-rank differences.
pub fn coding_gain(report: &CodeAnalysisReport) -> f64 {
    gain_of(report.min_rank, report.n_t, report.min_det, report.min_rank_eig_product)
}

fn gain_of(min_rank: usize, n_t: usize, min_det: f64, eig_product: f64) -> f64 {
    if min_rank == 0 {
        0.0
    } else if min_rank == n_t {
        min_det.max(0.0).powf(1.0 / n_t as f64)
    } else {
        eig_product.max(0.0).powf(1.0 / min_rank as f64)
    }
}

/// `S(dx)`: valid as the codeword difference because the code is real-linear.
pub fn difference_codeword<T: Scalar>(dx: &[Cx<T>], code: &LinearDispersionCode<T>) -> ComplexMat<T> {
    code.encode(dx)
}

/// `det(ΔΔᴴ)` for a square difference matrix.
pub fn gram_det<T: Scalar>(delta: &ComplexMat<T>) -> Cx<T> {
    let g = delta * &delta.hermitian();
    let n = g.rows();
    let mut buf = g.as_slice().to_vec();
    det_in_place(&mut buf, n)
}

/// Numerical rank: singular values above `RANK_REL_TOL` times the largest.
pub fn numerical_rank<T: Scalar>(m: &ComplexMat<T>) -> usize {
    let sv = singular_values(m);
    let top = sv.first().copied().unwrap_or_else(T::zero);
    if top.is_zero() {
        return 0;
    }
    sv.iter().filter(|&&s| s > T::lit(RANK_REL_TOL) * top).count()
}

#[derive(Debug, Clone, Copy)]
pub struct SearchOptions {
    pub budget: u128,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self { budget: DEFAULT_BUDGET }
    }
}

/// Per-worker accumulator; merging is associative and commutative, so the
/// result does not depend on how work is split.
#[derive(Debug, Clone)]
struct Partial {
    min_det: f64,
    det_index: u64,
    min_rank: usize,
    rank_eig_product: f64,
    pairs: u64,
    max_imag: f64,
}

impl Partial {
    fn empty(n_t: usize) -> Self {
        Self { min_det: f64::INFINITY, det_index: u64::MAX, min_rank: n_t, rank_eig_product: f64::INFINITY, pairs: 0, max_imag: 0.0 }
    }

    fn merge(mut self, o: Partial) -> Partial {
        match self.min_det.partial_cmp(&o.min_det).unwrap_or(Ordering::Equal) {
            Ordering::Greater => {
                self.min_det = o.min_det;
                self.det_index = o.det_index;
            }
            Ordering::Equal => self.det_index = self.det_index.min(o.det_index),
            Ordering::Less => {}
        }
        match self.min_rank.cmp(&o.min_rank) {
            Ordering::Greater => {
                self.min_rank = o.min_rank;
                self.rank_eig_product = o.rank_eig_product;
            }
            Ordering::Equal => self.rank_eig_product = self.rank_eig_product.min(o.rank_eig_product),
            Ordering::Less => {}
        }
        self.pairs += o.pairs;
        self.max_imag = self.max_imag.max(o.max_imag);
        self
    }

    fn observe<T: Scalar>(&mut self, delta: &[Cx<T>; 16], index: u64) {
        let det = gram_det4(delta);
        self.pairs += 1;
        let (re, im) = (det.re.to_f64_lossy(), det.im.to_f64_lossy());
        self.max_imag = self.max_imag.max(im.abs());
        if re < self.min_det || (re == self.min_det && index < self.det_index) {
            self.min_det = re;
            self.det_index = index;
        }
        // det = Πσᵢ² ≤ σ_min² σ_max⁶ and σ_max ≤ ‖Δ‖_F, so σ_min/σ_max ≥ √det / ‖Δ‖_F⁴.
        let f2: f64 = delta.iter().map(|z| z.norm_sqr().to_f64_lossy()).sum();
        if re > 0.0 && re.sqrt() > RANK_REL_TOL * f2 * f2 {
            if self.min_rank == 4 {
                self.rank_eig_product = self.rank_eig_product.min(re);
            }
            return;
        }
        let m = ComplexMat::from_row_major(4, 4, delta.to_vec());
        let sv = singular_values(&m);
        let top = sv[0];
        let kept: Vec<f64> = sv
            .iter()
            .filter(|&&s| s > T::lit(RANK_REL_TOL) * top && !top.is_zero())
            .map(|s| (s.to_f64_lossy()).powi(2))
            .collect();
        let rank = kept.len();
        let prod = kept.iter().product::<f64>();
        match rank.cmp(&self.min_rank) {
            Ordering::Less => {
                self.min_rank = rank;
                self.rank_eig_product = prod;
            }
            Ordering::Equal => self.rank_eig_product = self.rank_eig_product.min(prod),
            Ordering::Greater => {}
        }
    }
}

/// `det(ΔΔᴴ)` for a row-major 4×4 `Δ`, using only the upper triangle of the Gram matrix.
#[inline]
fn gram_det4<T: Scalar>(d: &[Cx<T>; 16]) -> Cx<T> {
    let mut g = [Cx::<T>::zero(); 16];
    for r in 0..4 {
        for c in r..4 {
            let mut acc = Cx::zero();
            for k in 0..4 {
                acc += d[r * 4 + k] * d[c * 4 + k].conj();
            }
            g[r * 4 + c] = acc;
            g[c * 4 + r] = acc.conj();
        }
    }
    det_in_place(&mut g, 4)
}

struct Tables<T: Scalar> {
    alphabet: DifferenceAlphabet<T>,
    /// `contrib[m][a]`: codeword contribution of difference `a` in symbol slot `m`.
    contrib: Vec<Vec<[Cx<T>; 16]>>,
}

impl<T: Scalar> Tables<T> {
    fn new(code: &LinearDispersionCode<T>, c: &Constellation<T>) -> Result<Self> {
        if code.n_t() != 4 || code.t_uses() != 4 {
            return Err(Error::Dimension("determinant search expects 4x4 codewords".into()));
        }
        let alphabet = DifferenceAlphabet::new(c);
        let contrib = (0..code.k())
            .map(|m| {
                let (wi, wq) = (code.weights()[2 * m].as_slice(), code.weights()[2 * m + 1].as_slice());
                alphabet
                    .values()
                    .iter()
                    .map(|d| {
                        let mut out = [Cx::zero(); 16];
                        for e in 0..16 {
                            out[e] = wi[e].scale(d.re) + wq[e].scale(d.im);
                        }
                        out
                    })
                    .collect()
            })
            .collect();
        Ok(Self { alphabet, contrib })
    }

    fn sum(&self, digits: &[usize], offset: usize) -> [Cx<T>; 16] {
        let mut out = [Cx::zero(); 16];
        for (j, &a) in digits.iter().enumerate() {
            let t = &self.contrib[offset + j][a];
            for e in 0..16 {
                out[e] += t[e];
            }
        }
        out
    }

    fn vector(&self, digits: &[usize]) -> Vec<[f64; 2]> {
        digits.iter().map(|&a| self.alphabet.values()[a]).map(|z| [z.re.to_f64_lossy(), z.im.to_f64_lossy()]).collect()
    }
}

fn digits_of(mut index: u64, base: usize, len: usize) -> Vec<usize> {
    let mut out = vec![0; len];
    for slot in out.iter_mut().rev() {
        *slot = (index % base as u64) as usize;
        index /= base as u64;
    }
    out
}

/// `-1`, `0` or `1` according to whether the first non-zero digit sits below,
/// at (all zero), or above the zero index.
fn leading_sign(digits: &[usize], zero: usize) -> Ordering {
    digits.iter().find(|&&d| d != zero).map_or(Ordering::Equal, |&d| d.cmp(&zero))
}

/// Exact `δ_min` and minimum rank over every nonzero difference vector.
pub fn min_determinant<T: Scalar>(code: &LinearDispersionCode<T>, c: &Constellation<T>) -> Result<CodeAnalysisReport> {
    min_determinant_with(code, c, SearchOptions::default())
}

pub fn min_determinant_with<T: Scalar>(
    code: &LinearDispersionCode<T>,
    c: &Constellation<T>,
    opts: SearchOptions,
) -> Result<CodeAnalysisReport> {
    let tables = Tables::new(code, c)?;
    let k = code.k();
    let n = tables.alphabet.len();
    let zero = tables.alphabet.zero_index();
    let total = (n as u128).pow(k as u32);
    let required = (total - 1) / 2;
    if required > opts.budget {
        return Err(Error::SearchSpaceTooLarge { required, budget: opts.budget });
    }

    let head_len = k / 2;
    let tail_len = k - head_len;
    let tail_count = n.pow(tail_len as u32);
    let head_count = n.pow(head_len as u32);
    let tails: Vec<[Cx<T>; 16]> =
        (0..tail_count).map(|t| tables.sum(&digits_of(t as u64, n, tail_len), head_len)).collect();
    let tail_signs: Vec<Ordering> = (0..tail_count).map(|t| leading_sign(&digits_of(t as u64, n, tail_len), zero)).collect();

    let acc = (0..head_count)
        .into_par_iter()
        .map(|h| {
            let mut part = Partial::empty(code.n_t());
            let hd = digits_of(h as u64, n, head_len);
            let head_sign = leading_sign(&hd, zero);
            if head_sign == Ordering::Greater {
                return part;
            }
            let head = tables.sum(&hd, 0);
            let mut delta = [Cx::zero(); 16];
            for (t, tail) in tails.iter().enumerate() {
                if head_sign == Ordering::Equal && tail_signs[t] != Ordering::Less {
                    continue;
                }
                for e in 0..16 {
                    delta[e] = head[e] + tail[e];
                }
                part.observe(&delta, (h * tail_count + t) as u64);
            }
            part
        })
        .reduce(|| Partial::empty(code.n_t()), Partial::merge);

    Ok(finish(acc, &tables, k, SearchMode::Exhaustive, code.n_t()))
}

fn finish<T: Scalar>(acc: Partial, tables: &Tables<T>, k: usize, mode: SearchMode, n_t: usize) -> CodeAnalysisReport {
    let n = tables.alphabet.len();
    let argmin_dx = if acc.det_index == u64::MAX { Vec::new() } else { tables.vector(&digits_of(acc.det_index, n, k)) };
    let min_det = acc.min_det.max(0.0);
    CodeAnalysisReport {
        min_det,
        min_rank: acc.min_rank,
        coding_gain: gain_of(acc.min_rank, n_t, min_det, acc.rank_eig_product),
        argmin_dx,
        pairs_evaluated: acc.pairs,
        mode,
        min_rank_eig_product: acc.rank_eig_product,
        max_imag_residue: acc.max_imag,
        n_t,
    }
}

/// Minimum rank of `ΔS` over nonzero differences (exhaustive).
pub fn diversity_rank<T: Scalar>(code: &LinearDispersionCode<T>, c: &Constellation<T>) -> Result<usize> {
    Ok(min_determinant(code, c)?.min_rank)
}

/// Upper bound on `δ_min` from every difference vector of Hamming weight one or
/// two plus `samples` random nonzero vectors drawn with a seeded generator.
pub fn min_determinant_sampled<T: Scalar>(
    code: &LinearDispersionCode<T>,
    c: &Constellation<T>,
    samples: u64,
    seed: u64,
) -> Result<CodeAnalysisReport> {
    let tables = Tables::new(code, c)?;
    let k = code.k();
    let n = tables.alphabet.len();
    let zero = tables.alphabet.zero_index();
    let index_of = |d: &[usize]| d.iter().fold(0u64, |acc, &x| acc * n as u64 + x as u64);
    let mut part = Partial::empty(code.n_t());

    let mut digits = vec![zero; k];
    for i in 0..k {
        for a in 0..n {
            if a == zero {
                continue;
            }
            digits[i] = a;
            part.observe(&tables.sum(&digits, 0), index_of(&digits));
            for j in i + 1..k {
                for b in 0..n {
                    if b == zero {
                        continue;
                    }
                    digits[j] = b;
                    part.observe(&tables.sum(&digits, 0), index_of(&digits));
                }
                digits[j] = zero;
            }
        }
        digits[i] = zero;
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut drawn = 0;
    while drawn < samples {
        let d: Vec<usize> = (0..k).map(|_| rng.random_range(0..n)).collect();
        if d.iter().all(|&x| x == zero) {
            continue;
        }
        part.observe(&tables.sum(&d, 0), index_of(&d));
        drawn += 1;
    }
    Ok(finish(part, &tables, k, SearchMode::Sampled, code.n_t()))
}

/// Exhaustive `δ_min` of the full code over unit-energy 4-QAM as a function of the inter-block phase.
pub fn min_det_vs_theta(theta_g: f64, theta: f64) -> f64 {
    let qam = square_qam::<f64>(4).expect("4-QAM");
    min_determinant(&LinearDispersionCode::new(theta_g, theta), &qam).map(|r| r.min_det).unwrap_or(0.0)
}

/// Exhaustive `δ_min` of the four-symbol CIOD over unit-energy 4-QAM as a function of `θ_g`.
pub fn ciod_min_det_vs_theta_g(theta_g: f64) -> f64 {
    let qam = square_qam::<f64>(4).expect("4-QAM");
    min_determinant(&LinearDispersionCode::ciod_only(theta_g), &qam).map(|r| r.min_det).unwrap_or(0.0)
}
