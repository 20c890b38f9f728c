//! Maximum-likelihood detection for the code: an exhaustive oracle, the
//! conditional decoder that fixes the second-layer symbols and decodes the
//! first four independently, and a real-valued sphere decoder that exploits the
//! block structure of the triangular factor.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::channel::ChannelRealization;
use crate::constellation::{Constellation, QamGrid};
use crate::error::{Error, Result};
use crate::numcore::{check_op, gram_schmidt_qr, kron, norm, vec_real, ComplexMat, RealMat};
use crate::scalar::{Cx, Scalar};
use crate::stbc::LinearDispersionCode;

/// Default cap on the number of codewords the exhaustive decoder will score.
pub const DEFAULT_ML_BUDGET: u128 = 100_000_000;
/// Off-pattern entries of `R₁` must be below this fraction of `‖R‖_F`.
pub const STRUCTURE_TOL: f64 = 1e-9;

/// Coordinate order `[x₁I, x₁Q, x₂I, ..., x₈Q]` of the real model columns.
pub const COLUMN_ORDER: [usize; 16] = [0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15];

/// `vec_real(Y) = H′_eq·x̃ + vec_real(N)` and its QR factorization.
#[derive(Debug, Clone)]
pub struct RealEquivalentModel<T: Scalar> {
    pub h_eq_prime: RealMat<T>,
    pub q: RealMat<T>,
    pub r: RealMat<T>,
    pub column_order: Vec<usize>,
}

pub fn build_equivalent<T: Scalar>(h: &ChannelRealization<T>, code: &LinearDispersionCode<T>) -> Result<RealEquivalentModel<T>> {
    build_equivalent_with_order(h, code, &COLUMN_ORDER)
}

/// Same as [`build_equivalent`] with the columns of `H′_eq` taken in `order`.
pub fn build_equivalent_with_order<T: Scalar>(
    h: &ChannelRealization<T>,
    code: &LinearDispersionCode<T>,
    order: &[usize],
) -> Result<RealEquivalentModel<T>> {
    let g = code.generator_matrix();
    if order.len() != g.cols() {
        return Err(Error::Dimension(format!("column order has {} entries, generator has {} columns", order.len(), g.cols())));
    }
    let lifted = kron(&RealMat::identity(code.t_uses()), &check_op(&h.h));
    let h_eq_prime = (&lifted * &g).permute_columns(order);
    let qr = gram_schmidt_qr(&h_eq_prime)?;
    Ok(RealEquivalentModel { h_eq_prime, q: qr.q, r: qr.r, column_order: order.to_vec() })
}

/// True when the top-left 8×8 block of `R` is block diagonal with 2×2 blocks.
pub fn qr_structure_check<T: Scalar>(model: &RealEquivalentModel<T>) -> bool {
    let r = &model.r;
    let n = r.rows();
    if n < 8 || !r.is_square() {
        return false;
    }
    let tol = T::lit(STRUCTURE_TOL) * r.frobenius();
    for i in 0..n {
        for j in 0..i {
            if r[(i, j)].abs() >= tol {
                return false;
            }
        }
    }
    for i in 0..8 {
        if !(r[(i, i)] > T::zero()) {
            return false;
        }
        for j in 0..8 {
            if i / 2 != j / 2 && r[(i, j)].abs() >= tol {
                return false;
            }
        }
    }
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecodeResult<T> {
    /// Constellation index of each decided symbol.
    pub indices: Vec<usize>,
    pub x_hat: Vec<Cx<T>>,
    pub metric: T,
    pub metric_evaluations: u64,
    /// Leaves reached in the 8-dimensional stage (sphere decoder only).
    pub nodes_visited: u64,
}

fn result<T: Scalar>(indices: Vec<usize>, c: &Constellation<T>, metric: T, evals: u64, nodes: u64) -> DecodeResult<T> {
    let x_hat = indices.iter().map(|&i| c.points()[i]).collect();
    DecodeResult { indices, x_hat, metric, metric_evaluations: evals, nodes_visited: nodes }
}

/// Smaller metric wins; exact ties go to the lexicographically smaller index vector.
#[inline]
fn improves<T: Scalar>(metric: T, idx: &[usize], best: T, best_idx: &[usize]) -> bool {
    match metric.partial_cmp(&best) {
        Some(Ordering::Less) => true,
        Some(Ordering::Equal) => idx < best_idx,
        _ => false,
    }
}

/// `‖Y − H·encode(x̂)‖²_F` by direct complex arithmetic.
pub fn residual_metric<T: Scalar>(y: &ComplexMat<T>, h: &ChannelRealization<T>, code: &LinearDispersionCode<T>, x_hat: &[Cx<T>]) -> T {
    (y - &(&h.h * &code.encode(x_hat))).frobenius_sqr()
}

fn sqr_dist<T: Scalar>(a: &[Cx<T>], b: &[Cx<T>]) -> T {
    a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum()
}

fn re_inner<T: Scalar>(a: &[Cx<T>], b: &[Cx<T>]) -> T {
    a.iter().zip(b).map(|(x, y)| x.re * y.re + x.im * y.im).sum()
}

/// `H·T_m(a)` for every symbol slot `m` and constellation point `a`, where
/// `T_m(a) = re(a)·A_{2m−1} + im(a)·A_{2m}`.
fn received_contributions<T: Scalar>(h: &ChannelRealization<T>, code: &LinearDispersionCode<T>, c: &Constellation<T>) -> Vec<Vec<Vec<Cx<T>>>> {
    (0..code.k())
        .map(|m| {
            let hi = &h.h * &code.weights()[2 * m];
            let hq = &h.h * &code.weights()[2 * m + 1];
            c.points()
                .iter()
                .map(|p| hi.as_slice().iter().zip(hq.as_slice()).map(|(u, v)| u.scale(p.re) + v.scale(p.im)).collect())
                .collect()
        })
        .collect()
}

/// `T_m = re(x_m)·A_{2m−1} + im(x_m)·A_{2m}` with `m` zero-based.
pub fn symbol_term<T: Scalar>(code: &LinearDispersionCode<T>, m: usize, x: Cx<T>) -> ComplexMat<T> {
    &code.weights()[2 * m].scale(Cx::new(x.re, T::zero())) + &code.weights()[2 * m + 1].scale(Cx::new(x.im, T::zero()))
}

/// Split of the metric for a fixed second layer: `‖Y − HS‖² = Σ per_symbol + constant`.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricDecomposition<T> {
    /// `‖Y − HT_m‖² + 2·Re tr(HS₂(HT_m)ᴴ)` for `m = 1..4`.
    pub per_symbol: Vec<T>,
    /// `‖Y − HS₂‖² − 4·tr(YYᴴ)`.
    pub constant: T,
}

pub fn decompose_metric<T: Scalar>(
    y: &ComplexMat<T>,
    h: &ChannelRealization<T>,
    code: &LinearDispersionCode<T>,
    x: &[Cx<T>],
) -> MetricDecomposition<T> {
    let half = code.k() / 2;
    let mut s2 = ComplexMat::zeros(code.n_t(), code.t_uses());
    for (m, &v) in x.iter().enumerate().skip(half) {
        s2 = &s2 + &symbol_term(code, m, v);
    }
    let hs2 = &h.h * &s2;
    let per_symbol = (0..half)
        .map(|m| {
            let ht = &h.h * &symbol_term(code, m, x[m]);
            (y - &ht).frobenius_sqr() + T::lit(2.0) * re_inner(hs2.as_slice(), ht.as_slice())
        })
        .collect();
    let constant = (y - &hs2).frobenius_sqr() - T::lit(4.0) * y.frobenius_sqr();
    MetricDecomposition { per_symbol, constant }
}

/// Exhaustive search over all `M^k` codewords.
pub fn ml_exhaustive<T: Scalar>(
    y: &ComplexMat<T>,
    h: &ChannelRealization<T>,
    code: &LinearDispersionCode<T>,
    c: &Constellation<T>,
) -> Result<DecodeResult<T>> {
    ml_exhaustive_with(y, h, code, c, DEFAULT_ML_BUDGET)
}

pub fn ml_exhaustive_with<T: Scalar>(
    y: &ComplexMat<T>,
    h: &ChannelRealization<T>,
    code: &LinearDispersionCode<T>,
    c: &Constellation<T>,
    budget: u128,
) -> Result<DecodeResult<T>> {
    let k = code.k();
    let size = c.size();
    let required = (size as u128).checked_pow(k as u32).unwrap_or(u128::MAX);
    if required > budget {
        return Err(Error::SearchSpaceTooLarge { required, budget });
    }
    let contrib = received_contributions(h, code, c);

    struct Search<'a, T: Scalar> {
        contrib: &'a [Vec<Vec<Cx<T>>>],
        size: usize,
        partial: Vec<Vec<Cx<T>>>,
        idx: Vec<usize>,
        best: T,
        best_idx: Vec<usize>,
    }

    impl<T: Scalar> Search<'_, T> {
        fn walk(&mut self, level: usize) {
            if level == self.contrib.len() {
                let metric: T = self.partial[level].iter().map(|z| z.norm_sqr()).sum();
                if metric < self.best {
                    self.best = metric;
                    self.best_idx.copy_from_slice(&self.idx);
                }
                return;
            }
            for a in 0..self.size {
                self.idx[level] = a;
                let (head, tail) = self.partial.split_at_mut(level + 1);
                for ((out, &p), &t) in tail[0].iter_mut().zip(&head[level]).zip(&self.contrib[level][a]) {
                    *out = p - t;
                }
                self.walk(level + 1);
            }
        }
    }

    let mut s = Search {
        contrib: &contrib,
        size,
        partial: vec![y.as_slice().to_vec(); k + 1],
        idx: vec![0; k],
        best: T::infinity(),
        best_idx: vec![0; k],
    };
    // Lexicographic traversal with a strict comparison keeps the smallest index on ties.
    s.walk(0);
    Ok(result(s.best_idx, c, s.best, required as u64, 0))
}

/// For every choice of `(x₅..x₈)`, decode `x₁..x₄` independently from the
/// per-symbol metrics, then keep the overall best. Scores `4·M⁵` per-symbol metrics.
pub fn ml_conditional<T: Scalar>(
    y: &ComplexMat<T>,
    h: &ChannelRealization<T>,
    code: &LinearDispersionCode<T>,
    c: &Constellation<T>,
) -> Result<DecodeResult<T>> {
    let k = code.k();
    if !k.is_multiple_of(2) {
        return Err(Error::Dimension("conditional decoding expects an even symbol count".into()));
    }
    let half = k / 2;
    let size = c.size();
    let contrib = received_contributions(h, code, c);
    let ys = y.as_slice();
    let y_energy: T = ys.iter().map(|z| z.norm_sqr()).sum();
    // ‖Y − HT_m(a)‖² does not depend on the second layer.
    let own: Vec<Vec<T>> = contrib[..half].iter().map(|per| per.iter().map(|t| sqr_dist(ys, t)).collect()).collect();

    let outer_count = size.pow(half as u32);
    let mut hs2 = vec![Cx::<T>::default(); ys.len()];
    let mut best = T::infinity();
    let mut best_idx = vec![0; k];
    let mut idx = vec![0; k];
    let mut evals = 0u64;
    for outer in 0..outer_count {
        let mut rem = outer;
        for m in (half..k).rev() {
            idx[m] = rem % size;
            rem /= size;
        }
        hs2.iter_mut().for_each(|z| *z = Cx::default());
        for m in half..k {
            for (z, t) in hs2.iter_mut().zip(&contrib[m][idx[m]]) {
                *z += *t;
            }
        }
        let mut total = sqr_dist(ys, &hs2) - T::lit(4.0) * y_energy;
        for m in 0..half {
            let mut inner_best = T::infinity();
            for a in 0..size {
                let v = own[m][a] + T::lit(2.0) * re_inner(&hs2, &contrib[m][a]);
                evals += 1;
                if v < inner_best {
                    inner_best = v;
                    idx[m] = a;
                }
            }
            total += inner_best;
        }
        if improves(total, &idx, best, &best_idx) {
            best = total;
            best_idx.copy_from_slice(&idx);
        }
    }
    Ok(result(best_idx, c, best, evals, 0))
}

/// Depth-first Schnorr–Euchner search over the eight second-layer coordinates,
/// followed at each leaf by four independent scans over the first-layer symbols.
///
/// Falls back to [`ml_conditional`] when the constellation is not a square QAM or
/// the triangular factor lacks the block pattern. Propagates `RankDeficient`.
pub fn sphere_decode<T: Scalar>(
    y: &ComplexMat<T>,
    h: &ChannelRealization<T>,
    code: &LinearDispersionCode<T>,
    c: &Constellation<T>,
) -> Result<DecodeResult<T>> {
    let Some(grid) = c.grid() else {
        return ml_conditional(y, h, code, c);
    };
    if code.k() != 8 {
        return ml_conditional(y, h, code, c);
    }
    let model = build_equivalent(h, code)?;
    if !qr_structure_check(&model) {
        return ml_conditional(y, h, code, c);
    }
    let z = model.q.tr_mul_vec(&vec_real(y));
    let mut sd = Sphere {
        r: &model.r,
        z: &z,
        levels: &grid.levels,
        points: c.points(),
        x: [T::zero(); 16],
        lvl: [0; 16],
        best: T::infinity(),
        best_idx: [0; 8],
        leaves: 0,
        evals: 0,
    };
    sd.descend(15, T::zero(), grid);
    let indices = sd.best_idx.to_vec();
    Ok(result(indices, c, sd.best, sd.evals, sd.leaves))
}

struct Sphere<'a, T: Scalar> {
    r: &'a RealMat<T>,
    z: &'a [T],
    levels: &'a [T],
    points: &'a [Cx<T>],
    x: [T; 16],
    lvl: [usize; 16],
    best: T,
    best_idx: [usize; 8],
    leaves: u64,
    evals: u64,
}

impl<T: Scalar> Sphere<'_, T> {
    fn descend(&mut self, row: usize, partial: T, grid: &QamGrid<T>) {
        let mut e = self.z[row];
        for l in row + 1..16 {
            e -= self.r[(row, l)] * self.x[l];
        }
        let diag = self.r[(row, row)];
        let center = e / diag;
        let side = self.levels.len();
        let mut order = [0usize; 16];
        for (i, o) in order.iter_mut().enumerate().take(side) {
            *o = i;
        }
        order[..side].sort_by(|&a, &b| {
            let da = (self.levels[a] - center).abs();
            let db = (self.levels[b] - center).abs();
            da.partial_cmp(&db).unwrap_or(Ordering::Equal).then(a.cmp(&b))
        });
        for &li in &order[..side] {
            let v = self.levels[li];
            let d = e - diag * v;
            let cost = partial + d * d;
            if cost > self.best {
                break;
            }
            self.x[row] = v;
            self.lvl[row] = li;
            if row == 8 {
                self.leaf(cost, grid);
            } else {
                self.descend(row - 1, cost, grid);
            }
        }
    }

    fn leaf(&mut self, partial: T, grid: &QamGrid<T>) {
        self.leaves += 1;
        let mut w = [T::zero(); 8];
        for (i, wi) in w.iter_mut().enumerate() {
            let mut acc = self.z[i];
            for l in 8..16 {
                acc -= self.r[(i, l)] * self.x[l];
            }
            *wi = acc;
        }
        let mut idx = [0usize; 8];
        let mut total = partial;
        for m in 0..4 {
            let (a, b) = (2 * m, 2 * m + 1);
            let (r00, r01, r11) = (self.r[(a, a)], self.r[(a, b)], self.r[(b, b)]);
            let mut inner = T::infinity();
            for (p, pt) in self.points.iter().enumerate() {
                let u = w[a] - r00 * pt.re - r01 * pt.im;
                let v = w[b] - r11 * pt.im;
                let cost = u * u + v * v;
                self.evals += 1;
                if cost < inner {
                    inner = cost;
                    idx[m] = p;
                }
            }
            total += inner;
        }
        for m in 4..8 {
            idx[m] = grid.point_index(self.lvl[2 * m], self.lvl[2 * m + 1]);
        }
        if improves(total, &idx, self.best, &self.best_idx) {
            self.best = total;
            self.best_idx = idx;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DecoderKind {
    Exhaustive,
    Conditional,
    Sphere,
}

impl std::str::FromStr for DecoderKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exhaustive" => Ok(Self::Exhaustive),
            "conditional" => Ok(Self::Conditional),
            "sphere" => Ok(Self::Sphere),
            other => Err(Error::Config(format!("unknown decoder '{other}' (expected exhaustive, conditional or sphere)"))),
        }
    }
}

impl std::fmt::Display for DecoderKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Exhaustive => "exhaustive",
            Self::Conditional => "conditional",
            Self::Sphere => "sphere",
        })
    }
}

/// Runs the selected decoder. A rank-deficient channel sends the sphere
/// decoder to exhaustive search when that fits the default budget.
pub fn decode<T: Scalar>(
    kind: DecoderKind,
    y: &ComplexMat<T>,
    h: &ChannelRealization<T>,
    code: &LinearDispersionCode<T>,
    c: &Constellation<T>,
) -> Result<DecodeResult<T>> {
    match kind {
        DecoderKind::Exhaustive => ml_exhaustive(y, h, code, c),
        DecoderKind::Conditional => ml_conditional(y, h, code, c),
        DecoderKind::Sphere => match sphere_decode(y, h, code, c) {
            Err(Error::RankDeficient { .. }) => ml_exhaustive(y, h, code, c),
            other => other,
        },
    }
}

/// `‖vec_real(Y) − H′_eq·x̃‖` in the model's column order.
pub fn real_model_residual<T: Scalar>(model: &RealEquivalentModel<T>, y: &ComplexMat<T>, x: &[Cx<T>]) -> T {
    let coords: Vec<T> = x.iter().flat_map(|v| [v.re, v.im]).collect();
    let ordered: Vec<T> = model.column_order.iter().map(|&i| coords[i]).collect();
    let pred = model.h_eq_prime.mul_vec(&ordered);
    let yv = vec_real(y);
    let diff: Vec<T> = yv.iter().zip(&pred).map(|(a, b)| *a - *b).collect();
    norm(&diff)
}
