//! Self-test battery run by the `verify` command.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::channel::{n0_for_snr, sample_channel, sample_noise, transmit, ChannelRealization};
use crate::constellation::square_qam;
use crate::decoder::{
    build_equivalent, decompose_metric, ml_conditional, ml_exhaustive, qr_structure_check, residual_metric, sphere_decode,
    symbol_term,
};
use crate::numcore::{check_op, vec_real, ComplexMat};
use crate::scalar::Cx;
use crate::stbc::{real_coords, LinearDispersionCode};

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn rand_symbols(g: &mut impl Rng, k: usize) -> Vec<Cx<f64>> {
    (0..k).map(|_| Cx::new(g.random_range(-1.0..1.0), g.random_range(-1.0..1.0))).collect()
}

fn rand_cmat(g: &mut impl Rng, rows: usize, cols: usize) -> ComplexMat<f64> {
    ComplexMat::from_fn(rows, cols, |_, _| Cx::new(g.random_range(-1.0..1.0), g.random_range(-1.0..1.0)))
}

/// Largest `‖S − Σ x̃_k A_k‖` entry over `draws` random symbol vectors, with `S`
/// built from the layered construction.
pub fn weight_expansion_error(code: &LinearDispersionCode<f64>, draws: usize, seed: u64) -> f64 {
    let mut g = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..draws {
        let x = rand_symbols(&mut g, code.k());
        let direct = crate::stbc::encode(&x, code.theta_g(), code.theta());
        worst = worst.max(direct.max_abs_diff(&code.encode(&x)));
    }
    worst
}

/// Largest `‖vec_real(S) − G·x̃‖_∞` over random draws.
pub fn generator_error(code: &LinearDispersionCode<f64>, draws: usize, seed: u64) -> f64 {
    let mut g = ChaCha8Rng::seed_from_u64(seed);
    let gen = code.generator_matrix();
    let mut worst: f64 = 0.0;
    for _ in 0..draws {
        let x = rand_symbols(&mut g, code.k());
        let lhs = vec_real(&code.encode(&x));
        let rhs = gen.mul_vec(&real_coords(&x));
        worst = lhs.iter().zip(&rhs).fold(worst, |w, (a, b)| w.max((a - b).abs()));
    }
    worst
}

/// Largest `‖(AB)ˇ − ǍB̌‖` entry over random complex matrix pairs.
pub fn check_op_error(draws: usize, seed: u64) -> f64 {
    let mut g = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..draws {
        let a = rand_cmat(&mut g, 2, 4);
        let b = rand_cmat(&mut g, 4, 4);
        worst = worst.max(check_op(&(&a * &b)).max_abs_diff(&(&check_op(&a) * &check_op(&b))));
    }
    worst
}

/// Largest absolute gap between `Σ M(x_m) + M_c` and `‖Y − HS‖²` over random `(H, Y, x)`.
pub fn decomposition_error(code: &LinearDispersionCode<f64>, instances: usize, seed: u64) -> f64 {
    let mut g = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..instances {
        let h = ChannelRealization::new(rand_cmat(&mut g, 2, 4));
        let y = rand_cmat(&mut g, 2, code.t_uses());
        let x = rand_symbols(&mut g, code.k());
        let d = decompose_metric(&y, &h, code, &x);
        let sum: f64 = d.per_symbol.iter().sum::<f64>() + d.constant;
        let direct = residual_metric(&y, &h, code, &x);
        worst = worst.max((sum - direct).abs());
    }
    worst
}

/// Largest absolute gap in `Σ‖Y − HT_m‖² − 3‖Y‖² = ‖Y − HS₁‖²` over random inputs.
pub fn ciod_identity_error(code: &LinearDispersionCode<f64>, instances: usize, seed: u64) -> f64 {
    let mut g = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..instances {
        let h = rand_cmat(&mut g, 2, 4);
        let y = rand_cmat(&mut g, 2, code.t_uses());
        let x = rand_symbols(&mut g, 4);
        let mut s1 = ComplexMat::zeros(code.n_t(), code.t_uses());
        let mut lhs = -3.0 * y.frobenius_sqr();
        for (m, &v) in x.iter().enumerate() {
            let t = symbol_term(code, m, v);
            lhs += (&y - &(&h * &t)).frobenius_sqr();
            s1 = &s1 + &t;
        }
        let rhs = (&y - &(&h * &s1)).frobenius_sqr();
        worst = worst.max((lhs - rhs).abs());
    }
    worst
}

/// Number of random channels whose triangular factor shows the block pattern.
pub fn qr_pattern_passes(code: &LinearDispersionCode<f64>, channels: usize, seed: u64) -> usize {
    let mut g = ChaCha8Rng::seed_from_u64(seed);
    (0..channels)
        .filter(|_| build_equivalent(&sample_channel(&mut g), code).map(|m| qr_structure_check(&m)).unwrap_or(false))
        .count()
}

/// Frames on which the conditional and sphere decoders reproduce the exhaustive metric and decision.
pub fn decoder_agreement(code: &LinearDispersionCode<f64>, frames: usize, snr_db: f64, seed: u64) -> usize {
    let c = square_qam::<f64>(4).expect("4-QAM");
    let mut g = ChaCha8Rng::seed_from_u64(seed);
    let noise = n0_for_snr(snr_db);
    (0..frames)
        .filter(|_| {
            let x: Vec<_> = (0..code.k()).map(|_| c.points()[g.random_range(0..c.size())]).collect();
            let h = sample_channel(&mut g);
            let n = sample_noise(&mut g, noise);
            let y = transmit(&h, &code.encode(&x), &n);
            let (Ok(ex), Ok(co), Ok(sp)) =
                (ml_exhaustive(&y, &h, code, &c), ml_conditional(&y, &h, code, &c), sphere_decode(&y, &h, code, &c))
            else {
                return false;
            };
            (co.metric - ex.metric).abs() < 1e-9
                && (sp.metric - ex.metric).abs() < 1e-9
                && co.indices == ex.indices
                && sp.indices == ex.indices
        })
        .count()
}

/// Runs every structural check on the default code.
pub fn run_battery(decoder_frames: usize, seed: u64) -> Vec<CheckOutcome> {
    let code = LinearDispersionCode::<f64>::proposed();
    let mut out = Vec::new();
    let mut push = |name, passed, detail: String| out.push(CheckOutcome { name, passed, detail });

    let e = weight_expansion_error(&code, 1000, seed);
    push("weight expansion", e < 1e-12, format!("max deviation {e:.2e}"));
    let q = code.quasi_orthogonality_residual();
    push("quasi-orthogonality", q < 1e-12, format!("max residual {q:.2e}"));
    let ge = generator_error(&code, 1000, seed + 1);
    push("generator consistency", ge < 1e-12, format!("max deviation {ge:.2e}"));
    let ce = check_op_error(1000, seed + 2);
    push("check-operator homomorphism", ce < 1e-12, format!("max deviation {ce:.2e}"));
    let de = decomposition_error(&code, 1000, seed + 8);
    push("metric decomposition", de < 1e-9, format!("max gap {de:.2e}"));
    let ci = ciod_identity_error(&code, 1000, seed + 9);
    push("CIOD metric identity", ci < 1e-9, format!("max gap {ci:.2e}"));
    let qp = qr_pattern_passes(&code, 1000, seed + 3);
    push("QR block pattern", qp == 1000, format!("{qp}/1000 channels"));
    for (i, snr) in [0.0, 10.0, 20.0].into_iter().enumerate() {
        let agree = decoder_agreement(&code, decoder_frames, snr, seed + 4 + i as u64);
        let name = match i {
            0 => "decoder equivalence @ 0 dB",
            1 => "decoder equivalence @ 10 dB",
            _ => "decoder equivalence @ 20 dB",
        };
        push(name, agree == decoder_frames, format!("{agree}/{decoder_frames} frames"));
    }
    out
}
