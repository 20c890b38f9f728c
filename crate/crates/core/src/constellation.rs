//! Square QAM signal sets, rotations, and the coordinate-distinctness test that
//! coordinate-interleaved designs need for full diversity.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::numcore::RealMat;
use crate::scalar::{Cx, Scalar};

/// Absolute tolerance for deciding two coordinates coincide.
pub const COORD_TOL: f64 = 1e-9;

/// Axis layout of an unrotated square QAM: point `index[a * side + b]` sits at
/// `levels[a] + j·levels[b]`.
#[derive(Debug, Clone, PartialEq)]
pub struct QamGrid<T: Scalar> {
    pub side: usize,
    /// Normalized PAM levels, ascending.
    pub levels: Vec<T>,
    index: Vec<usize>,
}

impl<T: Scalar> QamGrid<T> {
    /// Point index for the (real level, imaginary level) pair.
    #[inline]
    pub fn point_index(&self, re_level: usize, im_level: usize) -> usize {
        self.index[re_level * self.side + im_level]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constellation<T: Scalar> {
    points: Vec<Cx<T>>,
    label: String,
    grid: Option<QamGrid<T>>,
}

impl<T: Scalar> Constellation<T> {
    /// Arbitrary point set, used as given (no normalization).
    pub fn from_points(label: impl Into<String>, points: Vec<Cx<T>>) -> Self {
        Self { points, label: label.into(), grid: None }
    }

    pub fn points(&self) -> &[Cx<T>] {
        &self.points
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Number of points, `M`.
    pub fn size(&self) -> usize {
        self.points.len()
    }

    /// PAM layout; present only for unrotated square QAM.
    pub fn grid(&self) -> Option<&QamGrid<T>> {
        self.grid.as_ref()
    }

    pub fn average_energy(&self) -> T {
        let n = T::from_usize(self.points.len()).unwrap();
        self.points.iter().map(|p| p.norm_sqr()).sum::<T>() / n
    }

    /// Every point multiplied by `e^{jθ}`.
    pub fn rotate(&self, theta: T) -> Self {
        let r = Cx::from_polar(T::one(), theta);
        Self {
            points: self.points.iter().map(|&p| p * r).collect(),
            label: format!("{} rotated {:.4} rad", self.label, theta.to_f64_lossy()),
            grid: None,
        }
    }

    /// Index of the point nearest to `z`.
    pub fn nearest(&self, z: Cx<T>) -> usize {
        let mut best = 0;
        let mut best_d = T::infinity();
        for (i, p) in self.points.iter().enumerate() {
            let d = (p - z).norm_sqr();
            if d < best_d {
                best_d = d;
                best = i;
            }
        }
        best
    }
}

fn gray_to_binary(mut g: usize) -> usize {
    let mut b = g;
    while g > 0 {
        g >>= 1;
        b ^= g;
    }
    b
}

/// Square `M`-QAM on odd-integer coordinates, scaled to unit average energy.
///
/// Point `k` carries the Gray label `k`: its high half-bits select the real level
/// and its low half-bits the imaginary level, each through an inverse Gray map.
pub fn square_qam<T: Scalar>(m: usize) -> Result<Constellation<T>> {
    if !matches!(m, 4 | 16 | 64 | 256) {
        return Err(Error::NotSquareQam(m));
    }
    let side = (m as f64).sqrt().round() as usize;
    // Mean of squared odd levels per axis is (side² - 1)/3; two axes.
    let scale = T::one() / T::lit(2.0 * ((side * side - 1) as f64) / 3.0).sqrt();
    let levels: Vec<T> = (0..side).map(|i| T::lit((2 * i) as f64 - (side - 1) as f64) * scale).collect();

    let mut points = Vec::with_capacity(m);
    let mut index = vec![0; m];
    for k in 0..m {
        let a = gray_to_binary(k / side);
        let b = gray_to_binary(k % side);
        index[a * side + b] = k;
        points.push(Cx::new(levels[a], levels[b]));
    }
    Ok(Constellation { points, label: format!("{m}-QAM"), grid: Some(QamGrid { side, levels, index }) })
}

/// CIOD rotation angle `θ_g = ½·atan(2)` radians (≈ 31.7175°).
pub fn ciod_angle<T: Scalar>() -> T {
    T::lit(0.5 * 2f64.atan())
}

/// True iff all real parts are pairwise distinct and all imaginary parts are pairwise distinct.
pub fn coordinate_distinctness<T: Scalar>(c: &Constellation<T>) -> bool {
    let tol = T::lit(COORD_TOL);
    let pts = c.points();
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            if (pts[i].re - pts[j].re).abs() < tol || (pts[i].im - pts[j].im).abs() < tol {
                return false;
            }
        }
    }
    true
}

/// 2×2 rotation `J(θ) = [[cos θ, -sin θ], [sin θ, cos θ]]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotationMatrix<T: Scalar> {
    pub theta: T,
}

impl<T: Scalar> RotationMatrix<T> {
    pub fn new(theta: T) -> Self {
        Self { theta }
    }

    pub fn matrix(&self) -> RealMat<T> {
        let (s, c) = self.theta.sin_cos();
        RealMat::from_rows(&[[c, -s], [s, c]])
    }

    pub fn apply(&self, v: [T; 2]) -> [T; 2] {
        let (s, c) = self.theta.sin_cos();
        [c * v[0] - s * v[1], s * v[0] + c * v[1]]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult<T> {
    pub best_angle: T,
    pub best_value: T,
    /// `(angle, evaluator value)` for every grid point, in grid order.
    pub values: Vec<(T, T)>,
}

/// Relative tolerance under which two sweep values count as tied.
pub const SWEEP_TIE_TOL: f64 = 1e-9;

/// Evaluate `evaluator` on every grid angle (in parallel) and return the maximizer.
/// Ties go to the smallest angle regardless of evaluation order.
pub fn angle_sweep<T, F>(grid: &[T], evaluator: F) -> Result<SweepResult<T>>
where
    T: Scalar,
    F: Fn(T) -> T + Sync,
{
    if grid.is_empty() {
        return Err(Error::Config("angle sweep grid is empty".into()));
    }
    let values: Vec<(T, T)> = grid.par_iter().map(|&a| (a, evaluator(a))).collect();
    let tol = T::lit(SWEEP_TIE_TOL);
    let peak = values.iter().map(|v| v.1).fold(T::neg_infinity(), T::max);
    let (best_angle, best_value) = values
        .iter()
        .filter(|(_, v)| *v >= peak - tol * peak.abs().max(T::one()))
        .copied()
        .fold((T::infinity(), T::zero()), |acc, (a, v)| if a < acc.0 { (a, v) } else { acc });
    Ok(SweepResult { best_angle, best_value, values })
}

/// Degree grid `start, start+step, ..., stop` converted to radians.
pub fn degree_grid<T: Scalar>(start: f64, stop: f64, step: f64) -> Vec<T> {
    let n = ((stop - start) / step + 1e-9).floor() as usize + 1;
    (0..n).map(|i| T::lit((start + i as f64 * step).to_radians())).collect()
}
