//! Monte Carlo codeword-error-rate runs with reproducible per-frame randomness.

use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{frame_rng, n0_for_snr, sample_channel, sample_noise, transmit, ChannelRealization, NoiseParams};
use crate::constellation::{ciod_angle, square_qam, Constellation};
use crate::decoder::{decode, DecoderKind};
use crate::error::{Error, Result};
use crate::numcore::ComplexMat;
use crate::scalar::Cx;
use crate::stbc::LinearDispersionCode;

/// Frames decoded per parallel batch before the stopping rule is applied.
const BATCH: u64 = 512;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl std::str::FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            other => Err(Error::Config(format!("unknown output format '{other}' (expected csv or json)"))),
        }
    }
}

fn default_m() -> usize {
    4
}
fn default_decoder() -> DecoderKind {
    DecoderKind::Sphere
}
fn default_max_frames() -> u64 {
    1_000_000
}
fn default_target_errors() -> u64 {
    100
}
fn default_timing() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    #[serde(default = "default_m", alias = "M")]
    pub m: usize,
    pub snr_db: Vec<f64>,
    #[serde(default = "default_decoder")]
    pub decoder: DecoderKind,
    #[serde(default = "default_max_frames")]
    pub max_frames: u64,
    #[serde(default = "default_target_errors")]
    pub target_errors: u64,
    #[serde(default)]
    pub seed: u64,
    /// Constellation rotation in degrees; the CIOD angle when absent.
    #[serde(default)]
    pub theta_g_deg: Option<f64>,
    /// Second-layer phase in degrees; 45 when absent.
    #[serde(default)]
    pub theta_deg: Option<f64>,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub format: OutputFormat,
    #[serde(default)]
    pub workers: Option<usize>,
    /// Record wall time per SNR point. Disable for byte-reproducible output.
    #[serde(default = "default_timing")]
    pub timing: bool,
}

impl SimConfig {
    pub fn new(m: usize, snr_db: Vec<f64>, decoder: DecoderKind) -> Self {
        Self {
            m,
            snr_db,
            decoder,
            max_frames: default_max_frames(),
            target_errors: default_target_errors(),
            seed: 0,
            theta_g_deg: None,
            theta_deg: None,
            out: None,
            format: OutputFormat::Csv,
            workers: None,
            timing: true,
        }
    }

    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if !matches!(self.m, 4 | 16) {
            return fail(format!("constellation size must be 4 or 16, got {}", self.m));
        }
        if self.snr_db.is_empty() {
            return fail("SNR list is empty".into());
        }
        if self.snr_db.iter().any(|s| !s.is_finite()) {
            return fail("SNR values must be finite".into());
        }
        if self.snr_db.windows(2).any(|w| w[1] <= w[0]) {
            return fail("SNR list must be strictly increasing".into());
        }
        if self.target_errors < 1 {
            return fail("target errors must be at least 1".into());
        }
        if self.max_frames < 1 {
            return fail("max frames must be at least 1".into());
        }
        if self.decoder == DecoderKind::Exhaustive && self.m != 4 {
            return fail("the exhaustive decoder is limited to 4-QAM".into());
        }
        if self.workers == Some(0) {
            return fail("worker count must be at least 1".into());
        }
        for (name, v) in [("theta_g", self.theta_g_deg), ("theta", self.theta_deg)] {
            if v.is_some_and(|x| !x.is_finite()) {
                return fail(format!("{name} must be finite"));
            }
        }
        Ok(())
    }

    pub fn theta_g(&self) -> f64 {
        self.theta_g_deg.map_or_else(ciod_angle, f64::to_radians)
    }

    pub fn theta(&self) -> f64 {
        self.theta_deg.unwrap_or(45.0).to_radians()
    }

    pub fn code(&self) -> LinearDispersionCode<f64> {
        LinearDispersionCode::new(self.theta_g(), self.theta())
    }

    pub fn constellation(&self) -> Result<Constellation<f64>> {
        square_qam(self.m)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CerPoint {
    pub snr_db: f64,
    pub frames: u64,
    pub errors: u64,
    pub cer: f64,
    pub mean_metric_evals: f64,
    pub mean_nodes: f64,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct CerTable {
    pub points: Vec<CerPoint>,
}

pub const CSV_HEADER: &str = "snr_db,frames,errors,cer,mean_metric_evals,mean_nodes,seconds";

impl CerTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for p in &self.points {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                p.snr_db, p.frames, p.errors, p.cer, p.mean_metric_evals, p.mean_nodes, p.seconds
            ));
        }
        out
    }
}

impl fmt::Display for CerTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:>8} {:>10} {:>8} {:>12} {:>12} {:>10} {:>9}", "SNR(dB)", "frames", "errors", "CER", "metrics", "leaves", "seconds")?;
        for p in &self.points {
            writeln!(
                f,
                "{:>8.2} {:>10} {:>8} {:>12.4e} {:>12.1} {:>10.2} {:>9.2}",
                p.snr_db, p.frames, p.errors, p.cer, p.mean_metric_evals, p.mean_nodes, p.seconds
            )?;
        }
        Ok(())
    }
}

/// JSON document written by [`emit`]: the table together with the configuration that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CerReport {
    pub config: SimConfig,
    pub table: CerTable,
}

pub fn emit(table: &CerTable, config: &SimConfig, format: OutputFormat, path: impl AsRef<Path>) -> Result<()> {
    let mut file = std::fs::File::create(path)?;
    match format {
        OutputFormat::Csv => file.write_all(table.to_csv().as_bytes())?,
        OutputFormat::Json => {
            let report = CerReport { config: config.clone(), table: table.clone() };
            serde_json::to_writer_pretty(&mut file, &report)?;
            file.write_all(b"\n")?;
        }
    }
    Ok(())
}

/// Outcome of decoding one simulated frame.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameOutcome {
    pub sent: Vec<usize>,
    pub decided: Vec<usize>,
    pub metric_evaluations: u64,
    pub nodes_visited: u64,
}

impl FrameOutcome {
    pub fn is_error(&self) -> bool {
        self.sent != self.decided
    }
}

/// One transmitted codeword and what the receiver sees.
#[derive(Debug, Clone)]
pub struct Frame {
    pub sent: Vec<usize>,
    pub x: Vec<Cx<f64>>,
    pub h: ChannelRealization<f64>,
    pub y: ComplexMat<f64>,
}

/// Draws symbols, channel and noise, in that order, from `rng`.
pub fn draw_frame<R: Rng + ?Sized>(
    rng: &mut R,
    code: &LinearDispersionCode<f64>,
    constellation: &Constellation<f64>,
    noise: NoiseParams<f64>,
) -> Frame {
    let size = constellation.size();
    let sent: Vec<usize> = (0..code.k()).map(|_| rng.random_range(0..size)).collect();
    let x: Vec<_> = sent.iter().map(|&i| constellation.points()[i]).collect();
    let h = sample_channel(rng);
    let n = sample_noise(rng, noise);
    let y = transmit(&h, &code.encode(&x), &n);
    Frame { sent, x, h, y }
}

/// Everything needed to simulate frames at one operating point.
pub struct FrameContext<'a> {
    pub code: &'a LinearDispersionCode<f64>,
    pub constellation: &'a Constellation<f64>,
    pub decoder: DecoderKind,
    pub seed: u64,
}

impl FrameContext<'_> {
    /// The frame drawn from its own `(seed, snr_index, frame_index)` stream.
    pub fn frame(&self, snr_index: u64, frame_index: u64, noise: NoiseParams<f64>) -> Frame {
        draw_frame(&mut frame_rng(self.seed, snr_index, frame_index), self.code, self.constellation, noise)
    }

    pub fn run(&self, snr_index: u64, frame_index: u64, noise: NoiseParams<f64>) -> Result<FrameOutcome> {
        let f = self.frame(snr_index, frame_index, noise);
        let r = decode(self.decoder, &f.y, &f.h, self.code, self.constellation)?;
        Ok(FrameOutcome { sent: f.sent, decided: r.indices, metric_evaluations: r.metric_evaluations, nodes_visited: r.nodes_visited })
    }
}

pub fn run_cer(config: &SimConfig) -> Result<CerTable> {
    config.validate()?;
    match config.workers {
        Some(w) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(w)
                .build()
                .map_err(|e| Error::Config(format!("cannot start {w} workers: {e}")))?;
            pool.install(|| run_points(config))
        }
        None => run_points(config),
    }
}

fn run_points(config: &SimConfig) -> Result<CerTable> {
    let code = config.code();
    let constellation = config.constellation()?;
    let ctx = FrameContext { code: &code, constellation: &constellation, decoder: config.decoder, seed: config.seed };
    let mut points = Vec::with_capacity(config.snr_db.len());
    for (si, &snr) in config.snr_db.iter().enumerate() {
        let start = Instant::now();
        let noise = n0_for_snr(snr);
        let (mut frames, mut errors, mut evals, mut nodes) = (0u64, 0u64, 0u64, 0u64);
        'batches: while frames < config.max_frames && errors < config.target_errors {
            let end = (frames + BATCH).min(config.max_frames);
            let outcomes: Vec<Result<FrameOutcome>> =
                (frames..end).into_par_iter().map(|fi| ctx.run(si as u64, fi, noise)).collect();
            // Frames are tallied in index order so the stopping point is independent of scheduling.
            for o in outcomes {
                let o = o?;
                frames += 1;
                evals += o.metric_evaluations;
                nodes += o.nodes_visited;
                if o.is_error() {
                    errors += 1;
                    if errors >= config.target_errors {
                        break 'batches;
                    }
                }
            }
        }
        let seconds = if config.timing { start.elapsed().as_secs_f64() } else { 0.0 };
        points.push(CerPoint {
            snr_db: snr,
            frames,
            errors,
            cer: errors as f64 / frames as f64,
            mean_metric_evals: evals as f64 / frames as f64,
            mean_nodes: nodes as f64 / frames as f64,
            seconds,
        });
    }
    Ok(CerTable { points })
}

/// Parses `start:stop:step` (inclusive of `stop`) or a comma-separated list.
pub fn parse_snr_list(spec: &str) -> Result<Vec<f64>> {
    let bad = |why: &str| Error::Config(format!("invalid SNR specification '{spec}': {why}"));
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad("not a number"));
    if spec.contains(':') {
        let parts: Vec<&str> = spec.split(':').collect();
        if parts.len() != 3 {
            return Err(bad("expected start:stop:step"));
        }
        let (start, stop, step) = (num(parts[0])?, num(parts[1])?, num(parts[2])?);
        if !(step > 0.0) || stop < start {
            return Err(bad("step must be positive and stop must not precede start"));
        }
        let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
        Ok((0..count).map(|i| start + i as f64 * step).collect())
    } else {
        spec.split(',').filter(|s| !s.trim().is_empty()).map(num).collect()
    }
}

/// Wilson score interval for a binomial proportion at normal quantile `z`.
pub fn wilson_interval(errors: u64, frames: u64, z: f64) -> (f64, f64) {
    if frames == 0 {
        return (0.0, 1.0);
    }
    let n = frames as f64;
    let p = errors as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// CER non-increasing across the table, tolerating at most one inversion whose
/// adjacent 95% Wilson intervals overlap.
pub fn cer_is_monotone(table: &CerTable) -> bool {
    let mut inversions = 0;
    for w in table.points.windows(2) {
        if w[1].cer > w[0].cer {
            let a = wilson_interval(w[0].errors, w[0].frames, 1.96);
            let b = wilson_interval(w[1].errors, w[1].frames, 1.96);
            if a.1 < b.0 {
                return false;
            }
            inversions += 1;
        }
    }
    inversions <= 1
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick(decoder: DecoderKind, snr: Vec<f64>, frames: u64) -> SimConfig {
        let mut c = SimConfig::new(4, snr, decoder);
        c.max_frames = frames;
        c.seed = 11;
        c.timing = false;
        c
    }

    #[test]
    fn snr_parsing() {
        assert_eq!(parse_snr_list("4:24:4").unwrap(), vec![4.0, 8.0, 12.0, 16.0, 20.0, 24.0]);
        assert_eq!(parse_snr_list("0,10, 20").unwrap(), vec![0.0, 10.0, 20.0]);
        assert_eq!(parse_snr_list("0:1:0.25").unwrap().len(), 5);
        assert!(parse_snr_list("0:1").is_err());
        assert!(parse_snr_list("a,b").is_err());
        assert!(parse_snr_list("5:0:1").is_err());
    }

    #[test]
    fn validation() {
        assert!(quick(DecoderKind::Sphere, vec![0.0, 5.0], 10).validate().is_ok());
        let mut c = quick(DecoderKind::Sphere, vec![5.0, 0.0], 10);
        assert!(matches!(c.validate(), Err(Error::Config(_))));
        c.snr_db = vec![];
        assert!(c.validate().is_err());
        c.snr_db = vec![1.0];
        c.m = 8;
        assert!(c.validate().is_err());
        c.m = 16;
        c.decoder = DecoderKind::Exhaustive;
        assert!(c.validate().is_err());
        c.decoder = DecoderKind::Sphere;
        c.target_errors = 0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn noiseless_limit_has_no_errors() {
        let t = run_cer(&quick(DecoderKind::Sphere, vec![60.0], 1000)).unwrap();
        assert_eq!(t.points[0].frames, 1000);
        assert_eq!(t.points[0].errors, 0);
    }

    #[test]
    fn reproducible_and_worker_independent() {
        let mut a = quick(DecoderKind::Sphere, vec![0.0, 6.0], 700);
        a.target_errors = 50;
        let t1 = run_cer(&a).unwrap();
        let t2 = run_cer(&a).unwrap();
        a.workers = Some(3);
        let t3 = run_cer(&a).unwrap();
        assert_eq!(t1.to_csv(), t2.to_csv());
        assert_eq!(t1.to_csv(), t3.to_csv());
        assert_eq!(t1.points[0].errors, 50);
    }

    #[test]
    fn early_stop_counts_exact_target() {
        let mut c = quick(DecoderKind::Conditional, vec![-5.0], 100_000);
        c.target_errors = 7;
        let t = run_cer(&c).unwrap();
        assert_eq!(t.points[0].errors, 7);
        assert!(t.points[0].frames < 100);
    }

    #[test]
    fn csv_and_json_emission() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = quick(DecoderKind::Sphere, vec![0.0, 4.0, 8.0], 64);
        let table = run_cer(&cfg).unwrap();
        let csv = dir.path().join("cer.csv");
        emit(&table, &cfg, OutputFormat::Csv, &csv).unwrap();
        let text = std::fs::read_to_string(&csv).unwrap();
        assert_eq!(text.lines().count(), 4);
        assert_eq!(text.lines().next().unwrap(), CSV_HEADER);

        let json = dir.path().join("cer.json");
        emit(&table, &cfg, OutputFormat::Json, &json).unwrap();
        let back: CerReport = serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
        assert_eq!(back.table, table);
        assert_eq!(back.config, cfg);

        let empty = dir.path().join("empty.csv");
        emit(&CerTable::default(), &cfg, OutputFormat::Csv, &empty).unwrap();
        assert_eq!(std::fs::read_to_string(&empty).unwrap(), format!("{CSV_HEADER}\n"));
    }

    #[test]
    fn config_file_defaults() {
        let cfg: SimConfig = serde_json::from_str(r#"{"M": 4, "snr_db": [0, 5]}"#).unwrap();
        assert_eq!(cfg.decoder, DecoderKind::Sphere);
        assert_eq!(cfg.target_errors, 100);
        assert_eq!(cfg.max_frames, 1_000_000);
        assert!((cfg.theta_g() - ciod_angle::<f64>()).abs() < 1e-15);
        assert!((cfg.theta() - std::f64::consts::FRAC_PI_4).abs() < 1e-15);
        assert!(serde_json::from_str::<SimConfig>(r#"{"snr_db": [0], "bogus": 1}"#).is_err());
    }

    #[test]
    fn shared_randomness_gives_identical_decisions() {
        let code = LinearDispersionCode::<f64>::proposed();
        let q = square_qam::<f64>(4).unwrap();
        let sphere = FrameContext { code: &code, constellation: &q, decoder: DecoderKind::Sphere, seed: 5 };
        let cond = FrameContext { code: &code, constellation: &q, decoder: DecoderKind::Conditional, seed: 5 };
        let noise = n0_for_snr(2.0);
        for fi in 0..100 {
            let a = sphere.run(0, fi, noise).unwrap();
            let b = cond.run(0, fi, noise).unwrap();
            assert_eq!(a.sent, b.sent);
            assert_eq!(a.decided, b.decided);
        }
    }

    #[test]
    fn wilson_bounds() {
        let (lo, hi) = wilson_interval(100, 10_000, 1.96);
        assert!(lo < 0.01 && hi > 0.01);
        assert!((lo - 0.00823).abs() < 1e-4 && (hi - 0.01215).abs() < 1e-4);
        assert_eq!(wilson_interval(0, 0, 1.96), (0.0, 1.0));
        let (lo0, _) = wilson_interval(0, 50, 1.96);
        assert_eq!(lo0, 0.0);
    }

    #[test]
    fn monotonicity_rule() {
        let pt = |errors, frames| CerPoint {
            snr_db: 0.0,
            frames,
            errors,
            cer: errors as f64 / frames as f64,
            mean_metric_evals: 0.0,
            mean_nodes: 0.0,
            seconds: 0.0,
        };
        assert!(cer_is_monotone(&CerTable { points: vec![pt(100, 200), pt(100, 1000), pt(100, 5000)] }));
        assert!(cer_is_monotone(&CerTable { points: vec![pt(100, 1000), pt(105, 1000)] }));
        assert!(!cer_is_monotone(&CerTable { points: vec![pt(100, 10_000), pt(300, 10_000)] }));
    }
}
