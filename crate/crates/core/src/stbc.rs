//! The coordinate-interleaved 4×4 block, the full-rate 4×2 code built from two of
//! them, and its linear-dispersion (weight matrix) description.
//!
//! A codeword carries eight QAM symbols `x₁..x₈`. Each is rotated by `θ_g`
//! (`sₘ = e^{jθ_g}xₘ`) and the codeword is
//! `S = X(s₁..s₄) + e^{jθ}·X(s₅..s₈)·P`, where `X` is the CIOD block and `P`
//! swaps the two column pairs. The two summands occupy disjoint 2×2 blocks.

use std::path::Path;

use num_rational::Ratio;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::constellation::{ciod_angle, RotationMatrix};
use crate::error::{Error, Result};
use crate::numcore::{interleave, vec_real, ComplexMat, RealMat};
use crate::scalar::{cx, Cx, Scalar};

/// Transmit antennas.
pub const NT: usize = 4;
/// Channel uses per codeword.
pub const T_USES: usize = 4;
/// Complex symbols per codeword.
pub const K_SYMBOLS: usize = 8;

/// Default inter-block phase `θ = π/4`.
pub fn default_theta<T: Scalar>() -> T {
    T::FRAC_PI_4()
}

/// The coordinate interleaved orthogonal design for four antennas.
pub fn ciod4<T: Scalar>(s: &[Cx<T>]) -> ComplexMat<T> {
    assert_eq!(s.len(), 4, "CIOD block takes four symbols");
    let (s1, s2, s3, s4) = (s[0], s[1], s[2], s[3]);
    let z = Cx::zero();
    ComplexMat::from_rows(&[
        [cx(s1.re, s3.im), cx(-s2.re, s4.im), z, z],
        [cx(s2.re, s4.im), cx(s1.re, -s3.im), z, z],
        [z, z, cx(s3.re, s1.im), cx(-s4.re, s2.im)],
        [z, z, cx(s4.re, s2.im), cx(s3.re, -s1.im)],
    ])
}

pub fn permutation_p<T: Scalar>() -> ComplexMat<T> {
    let (o, l) = (Cx::zero(), Cx::one());
    ComplexMat::from_rows(&[[o, o, l, o], [o, o, o, l], [l, o, o, o], [o, l, o, o]])
}

/// Codeword for eight unrotated symbols, built directly from the block construction.
pub fn encode<T: Scalar>(x: &[Cx<T>], theta_g: T, theta: T) -> ComplexMat<T> {
    let (upper, lower) = encode_parts(x, theta_g, theta);
    &upper + &lower
}

/// The two disjoint-support summands `(X(s₁..s₄), e^{jθ}X(s₅..s₈)P)`.
pub fn encode_parts<T: Scalar>(x: &[Cx<T>], theta_g: T, theta: T) -> (ComplexMat<T>, ComplexMat<T>) {
    assert_eq!(x.len(), K_SYMBOLS, "codeword carries eight symbols");
    let rot = Cx::from_polar(T::one(), theta_g);
    let s: Vec<Cx<T>> = x.iter().map(|&v| v * rot).collect();
    let first = ciod4(&s[..4]);
    let second = (&ciod4(&s[4..]) * &permutation_p()).scale(Cx::from_polar(T::one(), theta));
    (first, second)
}

/// `F = diag[J, ..., J]` with eight copies of `J(θ_g)`; maps `x̃` to `s̃`.
pub fn f_matrix<T: Scalar>(theta_g: T) -> RealMat<T> {
    let j = RotationMatrix::new(theta_g).matrix();
    RealMat::block_diag(&vec![j; K_SYMBOLS])
}

/// `k / T` symbols per channel use.
pub fn code_rate(k: u32, t: u32) -> Ratio<u32> {
    Ratio::new(k, t)
}

/// Index of the weight matrix whose quasi-orthogonality partner is `m` (1-based).
pub fn partner(m: usize) -> usize {
    if m % 2 == 1 {
        m + 1
    } else {
        m - 1
    }
}

/// The sixteen weight matrices transcribed entry by entry, with the `e^{jπ/4}`
/// factor of `A₉..A₁₆` generalized to `e^{jθ}`.
pub fn printed_weight_matrices<T: Scalar>(theta_g: T, theta: T) -> Vec<ComplexMat<T>> {
    let (s, c) = theta_g.sin_cos();
    let z = T::zero();
    let r = |v: T| cx(v, z);
    let i = |v: T| cx(z, v);
    let o = Cx::zero();
    let m = |rows: [[Cx<T>; 4]; 4]| ComplexMat::from_rows(&rows);
    let ph = Cx::from_polar(T::one(), theta);

    let mut w = vec![
        m([[r(c), o, o, o], [o, r(c), o, o], [o, o, i(s), o], [o, o, o, i(-s)]]),
        m([[r(-s), o, o, o], [o, r(-s), o, o], [o, o, i(c), o], [o, o, o, i(-c)]]),
        m([[o, r(-c), o, o], [r(c), o, o, o], [o, o, o, i(s)], [o, o, i(s), o]]),
        m([[o, r(s), o, o], [r(-s), o, o, o], [o, o, o, i(c)], [o, o, i(c), o]]),
        m([[i(s), o, o, o], [o, i(-s), o, o], [o, o, r(c), o], [o, o, o, r(c)]]),
        m([[i(c), o, o, o], [o, i(-c), o, o], [o, o, r(-s), o], [o, o, o, r(-s)]]),
        m([[o, i(s), o, o], [i(s), o, o, o], [o, o, o, r(-c)], [o, o, r(c), o]]),
        m([[o, i(c), o, o], [i(c), o, o, o], [o, o, o, r(s)], [o, o, r(-s), o]]),
    ];
    // Entries fed by a quadrature component (s5Q..s8Q) carry the factor j that
    // the full codeword matrix shows; the second-layer listing omits it.
    let upper = [
        m([[o, o, r(c), o], [o, o, o, r(c)], [i(s), o, o, o], [o, i(-s), o, o]]),
        m([[o, o, r(-s), o], [o, o, o, r(-s)], [i(c), o, o, o], [o, i(-c), o, o]]),
        m([[o, o, o, r(-c)], [o, o, r(c), o], [o, i(s), o, o], [i(s), o, o, o]]),
        m([[o, o, o, r(s)], [o, o, r(-s), o], [o, i(c), o, o], [i(c), o, o, o]]),
        m([[o, o, i(s), o], [o, o, o, i(-s)], [r(c), o, o, o], [o, r(c), o, o]]),
        m([[o, o, i(c), o], [o, o, o, i(-c)], [r(-s), o, o, o], [o, r(-s), o, o]]),
        m([[o, o, o, i(s)], [o, o, i(s), o], [o, r(-c), o, o], [r(c), o, o, o]]),
        m([[o, o, o, i(c)], [o, o, i(c), o], [o, r(s), o, o], [r(-s), o, o, o]]),
    ];
    w.extend(upper.into_iter().map(|a| a.scale(ph)));
    w
}

/// Weight matrices obtained by encoding each unit real coordinate of `x̃`.
pub fn derived_weight_matrices<T: Scalar>(theta_g: T, theta: T) -> Vec<ComplexMat<T>> {
    (0..2 * K_SYMBOLS)
        .map(|k| {
            let mut x = vec![Cx::<T>::zero(); K_SYMBOLS];
            x[k / 2] = if k % 2 == 0 { cx(T::one(), T::zero()) } else { cx(T::zero(), T::one()) };
            encode(&x, theta_g, theta)
        })
        .collect()
}

/// A code described by its weight matrices: `S = Σₘ (x_{mI} A_{2m-1} + x_{mQ} A_{2m})`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearDispersionCode<T: Scalar> {
    weights: Vec<ComplexMat<T>>,
    n_t: usize,
    t_uses: usize,
    theta_g: T,
    theta: T,
}

impl<T: Scalar> LinearDispersionCode<T> {
    /// The full-rate 4×2 code with explicit angles.
    pub fn new(theta_g: T, theta: T) -> Self {
        Self { weights: printed_weight_matrices(theta_g, theta), n_t: NT, t_uses: T_USES, theta_g, theta }
    }

    /// Default angles: `θ_g = ½·atan(2)`, `θ = π/4`.
    pub fn proposed() -> Self {
        Self::new(ciod_angle(), default_theta())
    }

    /// The four-symbol CIOD alone (weights `A₁..A₈`).
    pub fn ciod_only(theta_g: T) -> Self {
        let mut weights = printed_weight_matrices(theta_g, T::zero());
        weights.truncate(8);
        Self { weights, n_t: NT, t_uses: T_USES, theta_g, theta: T::zero() }
    }

    /// Arbitrary weight set (even count, all `n_t × T`).
    pub fn from_weights(weights: Vec<ComplexMat<T>>, theta_g: T, theta: T) -> Result<Self> {
        let first = weights.first().ok_or_else(|| Error::Dimension("no weight matrices".into()))?;
        let (n_t, t_uses) = (first.rows(), first.cols());
        if !weights.len().is_multiple_of(2) || weights.iter().any(|w| w.rows() != n_t || w.cols() != t_uses) {
            return Err(Error::Dimension("weights must come in I/Q pairs of equal shape".into()));
        }
        Ok(Self { weights, n_t, t_uses, theta_g, theta })
    }

    pub fn weights(&self) -> &[ComplexMat<T>] {
        &self.weights
    }

    /// `A_k`, 1-based as in the listing.
    pub fn weight(&self, k: usize) -> &ComplexMat<T> {
        &self.weights[k - 1]
    }

    pub fn n_t(&self) -> usize {
        self.n_t
    }

    pub fn t_uses(&self) -> usize {
        self.t_uses
    }

    /// Number of complex information symbols.
    pub fn k(&self) -> usize {
        self.weights.len() / 2
    }

    pub fn theta_g(&self) -> T {
        self.theta_g
    }

    pub fn theta(&self) -> T {
        self.theta
    }

    pub fn rate(&self) -> Ratio<u32> {
        code_rate(self.k() as u32, self.t_uses as u32)
    }

    /// Real-linear combination of the weights with the coordinates of `x`.
    pub fn encode(&self, x: &[Cx<T>]) -> ComplexMat<T> {
        assert_eq!(x.len(), self.k(), "symbol count must match the code");
        let mut s = ComplexMat::zeros(self.n_t, self.t_uses);
        for (m, v) in x.iter().enumerate() {
            s = &s + &self.weights[2 * m].scale(cx(v.re, T::zero()));
            s = &s + &self.weights[2 * m + 1].scale(cx(v.im, T::zero()));
        }
        s
    }

    /// 32×16 real matrix with column `k` equal to `vec_real(A_k)`, so that
    /// `vec_real(S) = G·x̃`.
    pub fn generator_matrix(&self) -> RealMat<T> {
        let rows = 2 * self.n_t * self.t_uses;
        let mut g = RealMat::zeros(rows, self.weights.len());
        for (k, a) in self.weights.iter().enumerate() {
            g.set_column(k, &vec_real(a));
        }
        g
    }

    /// Generator over the rotated coordinates `s̃`: `G_s = G·Fᵀ`.
    pub fn generator_matrix_rotated(&self) -> RealMat<T> {
        let f = RealMat::block_diag(&vec![RotationMatrix::new(self.theta_g).matrix(); self.k()]);
        &self.generator_matrix() * &f.transpose()
    }

    /// Largest `|A_m A_lᴴ + A_l A_mᴴ|` entry over non-partner pairs within
    /// `A₁..A₈`; zero for the quasi-orthogonal structure.
    pub fn quasi_orthogonality_residual(&self) -> T {
        let mut worst = T::zero();
        let n = self.weights.len().min(8);
        for m in 1..=n {
            for l in 1..=n {
                if l == m || l == partner(m) {
                    continue;
                }
                let (am, al) = (self.weight(m), self.weight(l));
                let sum = &(am * &al.hermitian()) + &(al * &am.hermitian());
                worst = worst.max(sum.max_abs_diff(&ComplexMat::zeros(self.n_t, self.n_t)));
            }
        }
        worst
    }

    pub fn weights_json(&self) -> WeightsFile {
        WeightsFile::from_mats(&self.weights)
    }

    pub fn write_weights_json(&self, path: impl AsRef<Path>) -> Result<()> {
        let f = std::fs::File::create(path)?;
        serde_json::to_writer_pretty(std::io::BufWriter::new(f), &self.weights_json())?;
        Ok(())
    }
}

/// On-disk form of a weight set: an array of matrices, each a list of rows of `[re, im]` pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct WeightsFile(pub Vec<Vec<Vec<[f64; 2]>>>);

impl WeightsFile {
    pub fn from_mats<T: Scalar>(mats: &[ComplexMat<T>]) -> Self {
        WeightsFile(
            mats.iter()
                .map(|m| {
                    (0..m.rows())
                        .map(|r| (0..m.cols()).map(|c| [m[(r, c)].re.to_f64_lossy(), m[(r, c)].im.to_f64_lossy()]).collect())
                        .collect()
                })
                .collect(),
        )
    }

    pub fn to_mats<T: Scalar>(&self) -> Result<Vec<ComplexMat<T>>> {
        self.0
            .iter()
            .map(|rows| {
                let cols = rows.first().map_or(0, Vec::len);
                if rows.iter().any(|r| r.len() != cols) {
                    return Err(Error::Dimension("ragged weight matrix".into()));
                }
                Ok(ComplexMat::from_fn(rows.len(), cols, |r, c| cx(T::lit(rows[r][c][0]), T::lit(rows[r][c][1]))))
            })
            .collect()
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let f = std::fs::File::open(path)?;
        Ok(serde_json::from_reader(std::io::BufReader::new(f))?)
    }
}

/// `x̃` for a symbol vector.
pub fn real_coords<T: Scalar>(x: &[Cx<T>]) -> Vec<T> {
    interleave(x)
}
