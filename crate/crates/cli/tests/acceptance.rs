//! End-to-end acceptance checks. Runs as a plain binary and prints one line per criterion.

use std::cell::OnceCell;
use std::process::{Command, ExitCode};
use std::time::Instant;

use stbc_core::analysis::{ciod_min_det_vs_theta_g, min_det_vs_theta};
use stbc_core::channel::n0_for_snr;
use stbc_core::constellation::{angle_sweep, ciod_angle, degree_grid, square_qam};
use stbc_core::decoder::{ml_conditional, ml_exhaustive, residual_metric, sphere_decode, DecoderKind};
use stbc_core::sim::{cer_is_monotone, run_cer, FrameContext, SimConfig};
use stbc_core::stbc::LinearDispersionCode;
use stbc_core::verify;

type Outcome = (bool, String);

fn stbc(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_stbc")).args(args).output().expect("run stbc binary")
}

struct Analysis {
    min_det: f64,
    min_rank: u64,
    pairs: u64,
}

fn analyze() -> Result<Analysis, String> {
    let out = stbc(&["analyze", "--M", "4", "--format", "json"]);
    if !out.status.success() {
        return Err(String::from_utf8_lossy(&out.stderr).into_owned());
    }
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).map_err(|e| e.to_string())?;
    Ok(Analysis {
        min_det: v["min_det"].as_f64().ok_or("min_det missing")?,
        min_rank: v["min_rank"].as_u64().ok_or("min_rank missing")?,
        pairs: v["pairs_evaluated"].as_u64().ok_or("pairs_evaluated missing")?,
    })
}

fn criterion_1(a: &Result<Analysis, String>) -> Outcome {
    match a {
        Ok(a) => ((a.min_det - 0.64).abs() <= 1e-6, format!("min_det = {:.10} over {} difference vectors", a.min_det, a.pairs)),
        Err(e) => (false, e.clone()),
    }
}

fn criterion_2(a: &Result<Analysis, String>) -> Outcome {
    match a {
        Ok(a) => (a.min_rank == 4, format!("minimum rank of the difference matrices = {}", a.min_rank)),
        Err(e) => (false, e.clone()),
    }
}

fn criterion_3() -> Outcome {
    let theta = angle_sweep(&degree_grid::<f64>(0.0, 45.0, 1.0), |t| min_det_vs_theta(ciod_angle(), t)).unwrap();
    let theta_g = angle_sweep(&degree_grid::<f64>(25.0, 40.0, 0.25), ciod_min_det_vs_theta_g).unwrap();
    let best_theta = theta.best_angle.to_degrees();
    let best_theta_g = theta_g.best_angle.to_degrees();
    let runner_up = theta.values.iter().filter(|(a, _)| (a.to_degrees() - 45.0).abs() > 0.5).map(|v| v.1).fold(0.0, f64::max);
    let ok = (best_theta - 45.0).abs() < 1e-9 && (best_theta_g - ciod_angle::<f64>().to_degrees()).abs() <= 0.25;
    (
        ok,
        format!(
            "theta peak {best_theta:.2} deg (min_det {:.4}, next best {runner_up:.4}); theta_g peak {best_theta_g:.2} deg (min_det {:.4})",
            theta.best_value, theta_g.best_value
        ),
    )
}

struct DecoderStats {
    agree: bool,
    frames: usize,
    max_cond_evals: u64,
    max_leaves: u64,
    mean_leaves: Vec<(f64, f64)>,
    mismatch: String,
}

fn decoder_trials() -> DecoderStats {
    let code = LinearDispersionCode::<f64>::proposed();
    let c = square_qam::<f64>(4).unwrap();
    let ctx = FrameContext { code: &code, constellation: &c, decoder: DecoderKind::Exhaustive, seed: 2024 };
    let mut stats =
        DecoderStats { agree: true, frames: 0, max_cond_evals: 0, max_leaves: 0, mean_leaves: Vec::new(), mismatch: String::new() };
    for (si, snr) in [0.0, 10.0, 20.0].into_iter().enumerate() {
        let noise = n0_for_snr(snr);
        let mut leaves = 0u64;
        let frames = 100;
        for fi in 0..frames {
            let f = ctx.frame(si as u64, fi, noise);
            let ex = ml_exhaustive(&f.y, &f.h, &code, &c).unwrap();
            let co = ml_conditional(&f.y, &f.h, &code, &c).unwrap();
            let sp = sphere_decode(&f.y, &f.h, &code, &c).unwrap();
            for (name, r) in [("conditional", &co), ("sphere", &sp)] {
                let metric_ok = (r.metric - ex.metric).abs() <= 1e-9;
                // Different decisions are acceptable only when their metrics are within 1e-6.
                let gap = (residual_metric(&f.y, &f.h, &code, &r.x_hat) - residual_metric(&f.y, &f.h, &code, &ex.x_hat)).abs();
                let decision_ok = r.indices == ex.indices || gap <= 1e-6;
                if !(metric_ok && decision_ok) && stats.agree {
                    stats.agree = false;
                    stats.mismatch = format!("{name} differs at {snr} dB frame {fi}");
                }
            }
            stats.max_cond_evals = stats.max_cond_evals.max(co.metric_evaluations);
            stats.max_leaves = stats.max_leaves.max(sp.nodes_visited);
            leaves += sp.nodes_visited;
            stats.frames += 1;
        }
        stats.mean_leaves.push((snr, leaves as f64 / frames as f64));
    }
    stats
}

fn criterion_4(s: &DecoderStats) -> Outcome {
    let detail = if s.agree {
        format!("{} frames at 0/10/20 dB, conditional and sphere match exhaustive", s.frames)
    } else {
        s.mismatch.clone()
    };
    (s.agree, detail)
}

fn criterion_5() -> Outcome {
    let code = LinearDispersionCode::<f64>::proposed();
    let d = verify::decomposition_error(&code, 1000, 51);
    let c = verify::ciod_identity_error(&code, 1000, 52);
    (d <= 1e-9 && c <= 1e-9, format!("max gap {d:.2e} (full metric), {c:.2e} (CIOD identity) over 1000 instances"))
}

fn criterion_6() -> Outcome {
    let passes = verify::qr_pattern_passes(&LinearDispersionCode::<f64>::proposed(), 1000, 61);
    (passes == 1000, format!("{passes}/1000 random channels show the block pattern"))
}

fn criterion_7(s: &DecoderStats) -> Outcome {
    let low = s.mean_leaves.first().map_or(0.0, |v| v.1);
    let high = s.mean_leaves.last().map_or(0.0, |v| v.1);
    let ok = s.max_cond_evals <= 4096 && s.max_leaves <= 256 && high < low;
    let means: Vec<String> = s.mean_leaves.iter().map(|(snr, m)| format!("{snr} dB: {m:.2}")).collect();
    (
        ok,
        format!(
            "conditional max {} metrics/frame, sphere max {} leaves/frame, mean leaves [{}]",
            s.max_cond_evals,
            s.max_leaves,
            means.join(", ")
        ),
    )
}

fn criterion_8() -> Outcome {
    let code = LinearDispersionCode::<f64>::proposed();
    let w = verify::weight_expansion_error(&code, 1000, 81);
    let q = code.quasi_orthogonality_residual();
    let g = verify::generator_error(&code, 1000, 82);
    let h = verify::check_op_error(1000, 83);
    let ok = [w, q, g, h].iter().all(|&e| e <= 1e-12);
    (ok, format!("weight expansion {w:.1e}, quasi-orthogonality {q:.1e}, generator {g:.1e}, check operator {h:.1e}"))
}

fn quick_config(decoder: DecoderKind, snr: Vec<f64>, frames: u64, seed: u64) -> SimConfig {
    let mut cfg = SimConfig::new(4, snr, decoder);
    cfg.max_frames = frames;
    cfg.seed = seed;
    cfg.timing = false;
    cfg
}

fn criterion_9() -> Outcome {
    let noiseless = run_cer(&quick_config(DecoderKind::Sphere, vec![60.0], 1000, 90)).unwrap();
    let a = noiseless.points[0].errors == 0 && noiseless.points[0].frames == 1000;

    let grid: Vec<f64> = (1..=6).map(|i| 4.0 * i as f64).collect();
    let curve = run_cer(&quick_config(DecoderKind::Sphere, grid, 1_000_000, 7)).unwrap();
    let complete = curve.points.iter().all(|p| p.errors >= 100 || p.frames == 1_000_000);
    let resolved = curve.points.iter().filter(|p| p.errors >= 100).count();
    let b = cer_is_monotone(&curve) && complete;
    let capped: Vec<String> = curve
        .points
        .iter()
        .filter(|p| p.errors < 100)
        .map(|p| format!("{} dB: {} errors in {} frames", p.snr_db, p.errors, p.frames))
        .collect();

    let shared = vec![4.0, 8.0, 12.0, 16.0];
    let sphere = run_cer(&quick_config(DecoderKind::Sphere, shared.clone(), 20_000, 91)).unwrap();
    let cond = run_cer(&quick_config(DecoderKind::Conditional, shared, 20_000, 91)).unwrap();
    let c = sphere.points.iter().zip(&cond.points).all(|(s, k)| s.frames == k.frames && s.errors == k.errors);

    let cers: Vec<String> = curve.points.iter().map(|p| format!("{}:{:.2e}", p.snr_db, p.cer)).collect();
    (
        a && b && c,
        format!(
            "(a) 60 dB errors {}; (b) CER [{}], {resolved}/6 points with >=100 errors, frame cap reached at [{}]; (c) sphere/conditional tables {}",
            noiseless.points[0].errors,
            cers.join(" "),
            capped.join("; "),
            if c { "identical" } else { "differ" }
        ),
    )
}

fn criterion_10() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str, workers: &str| {
        let path = dir.path().join(name);
        let out = stbc(&[
            "simulate", "--M", "4", "--snr", "0:8:4", "--decoder", "sphere", "--frames", "3000", "--errors", "200", "--seed", "42",
            "--workers", workers, "--no-timing", "--out", path.to_str().unwrap(),
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        std::fs::read(path).unwrap()
    };
    let a = run("a.csv", "1");
    let b = run("b.csv", "1");
    let c = run("c.csv", "4");
    (a == b && a == c && !a.is_empty(), format!("{} bytes, identical across repeated runs and 1 vs 4 workers", a.len()))
}

fn main() -> ExitCode {
    let started = Instant::now();
    let analysis = OnceCell::new();
    let decoders = OnceCell::new();
    let checks: Vec<(&str, Box<dyn Fn() -> Outcome + '_>)> = vec![
        ("minimum determinant", Box::new(|| criterion_1(analysis.get_or_init(analyze)))),
        ("full diversity", Box::new(|| criterion_2(analysis.get_or_init(analyze)))),
        ("angle optimality", Box::new(criterion_3)),
        ("decoder equivalence", Box::new(|| criterion_4(decoders.get_or_init(decoder_trials)))),
        ("metric decomposition", Box::new(criterion_5)),
        ("structural QR pattern", Box::new(criterion_6)),
        ("complexity bounds", Box::new(|| criterion_7(decoders.get_or_init(decoder_trials)))),
        ("algebraic identities", Box::new(criterion_8)),
        ("CER behaviour", Box::new(criterion_9)),
        ("determinism", Box::new(criterion_10)),
    ];
    let mut failed = 0;
    for (i, (name, check)) in checks.iter().enumerate() {
        let t = Instant::now();
        let (ok, detail) = check();
        if !ok {
            failed += 1;
        }
        println!(
            "criterion {:>2} {} {name}: {detail} [{:.1}s]",
            i + 1,
            if ok { "PASS" } else { "FAIL" },
            t.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {}/{} passed in {:.0}s", checks.len() - failed, checks.len(), started.elapsed().as_secs_f64());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
