//! Size calculator, channel model and the timing experiment.
//!
//! Three schemes are compared: the Bloom-filter construction, the signed
//! identity list, and a per-device baseline that attaches one 512-bit tag
//! for every designated device.
//!
//! Entire time for a broadcast is `sign + tx + verify`: the manager signs,
//! the payload goes out serially over one shared downlink, and all devices
//! verify in parallel, so one device's verify time counts once.

use std::f64::consts::LN_2;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cmdvs::keyring::ParseError;
use crate::cmdvs::{self, probes_for, CmdvsError, SetupConfig};
use crate::iotrex::{self, HEADER_LEN};
use crate::sigscheme::{DsKeyPair, DsSignature, Ed25519, SignatureScheme};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Generic,
    Trivial,
    Baseline,
}

impl Scheme {
    pub const ALL: [Scheme; 3] = [Scheme::Generic, Scheme::Trivial, Scheme::Baseline];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Generic => "generic",
            Scheme::Trivial => "trivial",
            Scheme::Baseline => "baseline",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Scheme::ALL.into_iter().find(|x| x.name() == s)
    }
}

/// Signature size in bits as tabulated for each scheme.
///
/// generic: `ceil((d + 1/2) k ell / ln 2) + floor(log2 k) + 514`, `k = ceil(lambda / ell)`;
/// trivial: `64 d + 512`; baseline: `512 d`.
pub fn theoretical_size(scheme: Scheme, d: u64, lambda: u32, ell: u32) -> u64 {
    let sig_bits = Ed25519.signature_bit_length() as u64;
    match scheme {
        Scheme::Generic => {
            let k = probes_for(lambda, ell);
            let filter = ((d as f64 + 0.5) * k as f64 * ell as f64 / LN_2).ceil() as u64;
            filter + k.ilog2() as u64 + sig_bits + 2
        }
        Scheme::Trivial => d * cmdvs::ID_BITS as u64 + sig_bits,
        Scheme::Baseline => d * sig_bits,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChannelModel {
    pub name: String,
    pub rate_bps: f64,
}

impl ChannelModel {
    pub fn new(name: &str, rate_bps: f64) -> Option<Self> {
        (rate_bps > 0.0 && rate_bps.is_finite()).then(|| ChannelModel { name: name.to_string(), rate_bps })
    }

    pub fn lora() -> Self {
        ChannelModel { name: "lora".into(), rate_bps: 250_000.0 }
    }

    pub fn sigfox() -> Self {
        ChannelModel { name: "sigfox".into(), rate_bps: 600.0 }
    }

    pub fn emtc() -> Self {
        ChannelModel { name: "emtc".into(), rate_bps: 1_000_000.0 }
    }

    /// A preset name, or `name:rate` for a custom channel.
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "lora" => Some(Self::lora()),
            "sigfox" => Some(Self::sigfox()),
            "emtc" => Some(Self::emtc()),
            _ => {
                let (name, rate) = s.split_once(':')?;
                ChannelModel::new(name, rate.parse().ok()?)
            }
        }
    }
}

pub fn channel_time(bits: u64, channel: &ChannelModel) -> f64 {
    bits as f64 / channel.rate_bps
}

/// One DS signature over `id ‖ cmd` per designated device.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BaselineTagBundle {
    pub tags: Vec<(u64, DsSignature)>,
}

impl BaselineTagBundle {
    pub fn payload_bits(&self) -> u64 {
        self.tags.iter().map(|(_, t)| t.len() as u64 * 8).sum()
    }

    pub fn tag_for(&self, id: u64) -> Option<&DsSignature> {
        self.tags.iter().find(|(i, _)| *i == id).map(|(_, t)| t)
    }
}

fn baseline_message(id: u64, cmd: &[u8]) -> Vec<u8> {
    let mut m = Vec::with_capacity(8 + cmd.len());
    m.extend_from_slice(&id.to_be_bytes());
    m.extend_from_slice(cmd);
    m
}

pub fn baseline_sign(ds: &DsKeyPair, designated: &[u64], cmd: &[u8]) -> Result<BaselineTagBundle, CmdvsError> {
    if designated.is_empty() {
        return Err(CmdvsError::EmptyDesignatedSet);
    }
    let tags = designated
        .iter()
        .map(|&id| Ok((id, Ed25519.sign(&ds.sigk, &baseline_message(id, cmd))?)))
        .collect::<Result<_, CmdvsError>>()?;
    Ok(BaselineTagBundle { tags })
}

pub fn baseline_verify(verk: &[u8], id: u64, cmd: &[u8], bundle: &BaselineTagBundle) -> bool {
    bundle.tag_for(id).is_some_and(|t| Ed25519.verify(verk, &baseline_message(id, cmd), t))
}

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("config {0}")]
    Config(#[from] ParseError),
    #[error(transparent)]
    Cmdvs(#[from] CmdvsError),
    #[error("signature for |D| = {0} exceeded the length bound")]
    Bottom(u64),
    #[error("report is empty")]
    EmptyReport,
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchConfig {
    pub schemes: Vec<Scheme>,
    pub d_list: Vec<u64>,
    pub lambda_list: Vec<u32>,
    pub ell: u32,
    pub channels: Vec<ChannelModel>,
    pub trials: usize,
    pub seed: u64,
    pub out_dir: PathBuf,
}

pub const MIN_TRIALS: usize = 5;

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            schemes: Scheme::ALL.to_vec(),
            d_list: vec![100, 1000, 10_000],
            lambda_list: vec![10],
            ell: 1,
            channels: vec![ChannelModel::lora()],
            trials: MIN_TRIALS,
            seed: 0,
            out_dir: PathBuf::from("."),
        }
    }
}

fn list<T>(line: usize, key: &str, v: &str, f: impl Fn(&str) -> Option<T>) -> Result<Vec<T>, ParseError> {
    let items: Vec<T> = v
        .split(',')
        .map(str::trim)
        .map(|s| f(s).ok_or_else(|| ParseError { line, msg: format!("{key}: bad item {s:?}") }))
        .collect::<Result<_, _>>()?;
    if items.is_empty() {
        return Err(ParseError { line, msg: format!("{key}: empty list") });
    }
    Ok(items)
}

fn positive<T: std::str::FromStr + PartialOrd + Default>(s: &str) -> Option<T> {
    s.parse().ok().filter(|x| *x > T::default())
}

impl BenchConfig {
    /// `key = value` lines; `#` comments and blank lines are skipped. Keys
    /// not given keep their defaults.
    pub fn parse(text: &str) -> Result<Self, ParseError> {
        let mut cfg = BenchConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let l = raw.trim();
            if l.is_empty() || l.starts_with('#') {
                continue;
            }
            let Some((key, value)) = l.split_once('=') else {
                return Err(ParseError { line, msg: "expected key = value".into() });
            };
            let (key, value) = (key.trim(), value.trim());
            let bad = |what: &str| ParseError { line, msg: format!("{key}: {what}") };
            match key {
                "schemes" => cfg.schemes = list(line, key, value, Scheme::parse)?,
                "d_list" => cfg.d_list = list(line, key, value, positive::<u64>)?,
                "lambda_list" => cfg.lambda_list = list(line, key, value, positive::<u32>)?,
                "ell" => cfg.ell = positive(value).ok_or_else(|| bad("expected a positive integer"))?,
                "channels" => cfg.channels = list(line, key, value, ChannelModel::parse)?,
                "trials" => {
                    cfg.trials = value.parse().map_err(|_| bad("expected an integer"))?;
                    if cfg.trials < MIN_TRIALS {
                        return Err(bad(&format!("at least {MIN_TRIALS} runs are needed for a median")));
                    }
                }
                "seed" => cfg.seed = value.parse().map_err(|_| bad("expected an integer"))?,
                "out_dir" => cfg.out_dir = PathBuf::from(value),
                _ => return Err(ParseError { line, msg: format!("unknown key {key}") }),
            }
        }
        Ok(cfg)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub scheme: Scheme,
    pub d: u64,
    pub lambda: u32,
    pub ell: u32,
    pub channel: String,
    /// Tabulated size from [`theoretical_size`].
    pub theoretical_bits: u64,
    /// Serialized signature (or tag bundle) size.
    pub payload_bits: u64,
    /// Everything on the air: framing, command and signature.
    pub wire_bits: u64,
    pub sign_seconds: f64,
    pub verify_seconds_per_device: f64,
    pub tx_seconds: f64,
    pub entire_seconds: f64,
    pub devices_per_second: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MachineInfo {
    pub os: &'static str,
    pub arch: &'static str,
    pub cpus: usize,
}

impl MachineInfo {
    pub fn current() -> Self {
        MachineInfo {
            os: std::env::consts::OS,
            arch: std::env::consts::ARCH,
            cpus: std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentReport {
    pub rows: Vec<ReportRow>,
    pub machine: MachineInfo,
}

pub fn median(xs: &mut [f64]) -> f64 {
    assert!(!xs.is_empty());
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        (xs[n / 2 - 1] + xs[n / 2]) / 2.0
    }
}

fn time_median(trials: usize, mut f: impl FnMut()) -> f64 {
    // One warm-up run.
    f();
    let mut samples: Vec<f64> = (0..trials)
        .map(|_| {
            let t = Instant::now();
            f();
            t.elapsed().as_secs_f64()
        })
        .collect();
    median(&mut samples)
}

struct Measured {
    payload_bits: u64,
    wire_bits: u64,
    sign_seconds: f64,
    verify_seconds: f64,
}

fn measure(scheme: Scheme, d: u64, lambda: u32, ell: u32, trials: usize, rng: &mut ChaCha20Rng) -> Result<Measured, BenchError> {
    let seed: [u8; 32] = rng.gen();
    let ids: Vec<u64> = (0..d).map(|_| rng.gen()).collect();
    let mut cmd = vec![0u8; iotrex::DEFAULT_CMD_LEN];
    rng.fill(&mut cmd[..]);
    let probe = ids[0];

    match scheme {
        Scheme::Generic | Scheme::Trivial => {
            let setup_cfg = if scheme == Scheme::Generic { SetupConfig::generic(ell) } else { SetupConfig::trivial() };
            let (pp, sk) = cmdvs::setup(&setup_cfg, &seed)?;
            let issue = || iotrex::manager_issue(&sk, &ids, &cmd, u64::MAX, lambda);
            let ac = issue()?.ok_or(BenchError::Bottom(d))?;
            let sign_seconds = time_median(trials, || {
                std::hint::black_box(issue().unwrap());
            });
            let vrk = cmdvs::verification_key(&sk, probe);
            let wire = ac.encode();
            let verify_seconds = time_median(trials, || {
                let mut dev = iotrex::DeviceState::new(pp.clone(), vrk.clone());
                let dec = iotrex::device_process(&mut dev, std::hint::black_box(&wire));
                assert!(matches!(dec, iotrex::DeviceDecision::Execute(_)));
            });
            Ok(Measured {
                payload_bits: ac.sigma.encoded_bits(),
                wire_bits: ac.encoded_bits(),
                sign_seconds,
                verify_seconds,
            })
        }
        Scheme::Baseline => {
            let ds = Ed25519.generate(&seed).map_err(CmdvsError::from)?;
            let bundle = baseline_sign(&ds, &ids, &cmd)?;
            let sign_seconds = time_median(trials, || {
                std::hint::black_box(baseline_sign(&ds, &ids, &cmd).unwrap());
            });
            // A device only checks its own tag.
            let tag = [(probe, bundle.tags[0].1.clone())];
            let own = BaselineTagBundle { tags: tag.to_vec() };
            let verify_seconds = time_median(trials, || {
                assert!(baseline_verify(&ds.verk, probe, &cmd, std::hint::black_box(&own)));
            });
            let payload_bits = bundle.payload_bits();
            Ok(Measured {
                payload_bits,
                wire_bits: (HEADER_LEN + cmd.len()) as u64 * 8 + payload_bits,
                sign_seconds,
                verify_seconds,
            })
        }
    }
}

/// Runs every grid cell and returns one row per (cell, channel).
pub fn run_experiment(cfg: &BenchConfig) -> Result<ExperimentReport, BenchError> {
    let mut rng = ChaCha20Rng::seed_from_u64(cfg.seed);
    let mut rows = Vec::new();
    for &scheme in &cfg.schemes {
        for &lambda in &cfg.lambda_list {
            for &d in &cfg.d_list {
                let m = measure(scheme, d, lambda, cfg.ell, cfg.trials, &mut rng)?;
                for ch in &cfg.channels {
                    let tx = channel_time(m.wire_bits, ch);
                    let entire = m.sign_seconds + tx + m.verify_seconds;
                    rows.push(ReportRow {
                        scheme,
                        d,
                        lambda,
                        ell: cfg.ell,
                        channel: ch.name.clone(),
                        theoretical_bits: theoretical_size(scheme, d, lambda, cfg.ell),
                        payload_bits: m.payload_bits,
                        wire_bits: m.wire_bits,
                        sign_seconds: m.sign_seconds,
                        verify_seconds_per_device: m.verify_seconds,
                        tx_seconds: tx,
                        entire_seconds: entire,
                        devices_per_second: d as f64 / entire,
                    });
                }
            }
        }
    }
    Ok(ExperimentReport { rows, machine: MachineInfo::current() })
}

pub fn report_to_csv(report: &ExperimentReport) -> Result<String, BenchError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in &report.rows {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| csv::Error::from(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn rows_from_csv(text: &str) -> Result<Vec<ReportRow>, BenchError> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    Ok(r.deserialize().collect::<Result<_, _>>()?)
}

const DAT_COLUMNS: [&str; 13] = [
    "scheme",
    "d",
    "lambda",
    "ell",
    "channel",
    "theoretical_bits",
    "payload_bits",
    "wire_bits",
    "sign_s",
    "verify_s",
    "tx_s",
    "entire_s",
    "devices_per_s",
];

/// Whitespace columns with `#` header lines, for gnuplot.
pub fn report_to_dat(report: &ExperimentReport) -> String {
    let m = &report.machine;
    let mut s = format!("# machine: os={} arch={} cpus={}\n# {}\n", m.os, m.arch, m.cpus, DAT_COLUMNS.join(" "));
    for r in &report.rows {
        s.push_str(&format!(
            "{} {} {} {} {} {} {} {} {:.9e} {:.9e} {:.9e} {:.9e} {:.6}\n",
            r.scheme.name(),
            r.d,
            r.lambda,
            r.ell,
            r.channel,
            r.theoretical_bits,
            r.payload_bits,
            r.wire_bits,
            r.sign_seconds,
            r.verify_seconds_per_device,
            r.tx_seconds,
            r.entire_seconds,
            r.devices_per_second
        ));
    }
    s
}

/// Writes `report.csv` and `report.dat` into `dir`; returns both paths.
pub fn emit_report(report: &ExperimentReport, dir: &Path) -> Result<(PathBuf, PathBuf), BenchError> {
    if report.rows.is_empty() {
        return Err(BenchError::EmptyReport);
    }
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| BenchError::Io { path, source }
    };
    fs::create_dir_all(dir).map_err(io(dir))?;
    let csv_path = dir.join("report.csv");
    let dat_path = dir.join("report.dat");
    fs::write(&csv_path, report_to_csv(report)?).map_err(io(&csv_path))?;
    fs::write(&dat_path, report_to_dat(report)).map_err(io(&dat_path))?;
    Ok((csv_path, dat_path))
}
