use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use iotrex_core::bench::{self, BenchConfig, Scheme};
use iotrex_core::cmdvs::{self, keyring, Mode, SetupConfig, VerificationKey};
use iotrex_core::iotrex::{self, DeviceDecision, DeviceState};
use iotrex_core::{Probing, PublicParams, SigningKey};

const EXIT_REJECT: u8 = 1;
const EXIT_USAGE: u8 = 2;

#[derive(Parser)]
#[command(
    name = "iotrex",
    version,
    about = "Designated-verifier command broadcast for IoT fleets",
    after_help = "Defaults: --lambda 15, --ell 1, --mode generic.\n\
                  Exit status: 0 success; 1 the check failed (device did not execute, or the signature \
                  exceeded --max-bits); 2 usage or input error."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Generic,
    Trivial,
}

#[derive(Clone, Copy, ValueEnum)]
enum ProbingArg {
    Finalized,
    Plain,
}

#[derive(Clone, Copy, ValueEnum)]
enum SchemeArg {
    Generic,
    Trivial,
    Baseline,
}

#[derive(Subcommand)]
enum Command {
    /// Create public parameters and the signing key in a keyring directory
    Setup {
        #[arg(long)]
        keyring: PathBuf,
        /// 32 bytes of hex; all key material is derived from it
        #[arg(long)]
        seed: String,
        #[arg(long, default_value_t = cmdvs::DEFAULT_ELL)]
        ell: u32,
        #[arg(long, value_enum, default_value = "generic")]
        mode: ModeArg,
        #[arg(long, value_enum, default_value = "finalized")]
        probing: ProbingArg,
        /// Fixed filter size in bits (constant-size signatures)
        #[arg(long)]
        fixed_m: Option<u32>,
        #[arg(long, default_value_t = cmdvs::DEFAULT_KAPPA)]
        kappa: u32,
    },
    /// Issue device keys for every id in a file and record them
    Keygen {
        #[arg(long)]
        keyring: PathBuf,
        /// One 16-hex-digit id per line
        #[arg(long)]
        ids: PathBuf,
    },
    /// Authenticate a command for a designated set of devices
    Sign {
        #[arg(long)]
        keyring: PathBuf,
        /// One 16-hex-digit id per line
        #[arg(long)]
        designate: PathBuf,
        /// Raw command bytes
        #[arg(long)]
        cmd_file: PathBuf,
        #[arg(long, default_value_t = cmdvs::DEFAULT_LAMBDA)]
        lambda: u32,
        /// Largest acceptable signature, in bits
        #[arg(long, default_value_t = u64::MAX)]
        max_bits: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Process a broadcast as one device; exit 0 iff it executes
    Verify {
        #[arg(long)]
        keyring: PathBuf,
        /// Device id, 16 hex digits
        #[arg(long)]
        device: String,
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// Deliver one broadcast to a fleet and write per-device decisions as CSV
    FleetRun {
        #[arg(long)]
        keyring: PathBuf,
        /// One 16-hex-digit id per line
        #[arg(long)]
        fleet: PathBuf,
        #[arg(long = "in")]
        input: PathBuf,
        /// Decision CSV; stdout when omitted
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the timing experiment and write report.csv and report.dat
    Bench {
        /// key = value lines
        #[arg(long)]
        config: PathBuf,
        /// Overrides out_dir from the config
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Print the tabulated signature length in bits
    Size {
        #[arg(long, value_enum, default_value = "generic")]
        scheme: SchemeArg,
        #[arg(long)]
        d: u64,
        #[arg(long, default_value_t = cmdvs::DEFAULT_LAMBDA)]
        lambda: u32,
        #[arg(long, default_value_t = cmdvs::DEFAULT_ELL)]
        ell: u32,
    },
}

struct Keyring {
    dir: PathBuf,
}

impl Keyring {
    fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    fn read(&self, name: &str) -> Result<String> {
        read_text(&self.path(name))
    }

    fn public_params(&self) -> Result<PublicParams> {
        keyring::parse_public_params(&self.read("pp.txt")?).context("pp.txt")
    }

    fn signing_key(&self) -> Result<SigningKey> {
        let registry = keyring::parse_ids(&self.read("registry.txt")?).context("registry.txt")?;
        keyring::parse_signing_key(&self.read("sk.txt")?, registry.into_iter().collect()).context("sk.txt")
    }

    fn keys(&self, mode: Mode) -> Result<BTreeMap<u64, VerificationKey>> {
        keyring::parse_keyring(&self.read("keyring.txt")?, mode).context("keyring.txt")
    }

    fn write(&self, name: &str, text: &str) -> Result<()> {
        let p = self.path(name);
        fs::write(&p, text).with_context(|| format!("writing {}", p.display()))
    }

    /// A provisioned key if one was issued, otherwise the key the signer
    /// would issue. Devices are provisioned statically, so both agree.
    fn device_key(&self, pp: &PublicParams, known: &BTreeMap<u64, VerificationKey>, id: u64) -> Result<VerificationKey> {
        if let Some(k) = known.get(&id) {
            return Ok(k.clone());
        }
        let sk = self.signing_key()?;
        if sk.public_params() != *pp {
            bail!("pp.txt does not match sk.txt");
        }
        Ok(cmdvs::verification_key(&sk, id))
    }
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).with_context(|| format!("reading {}", path.display()))
}

fn parse_seed(s: &str) -> Result<[u8; 32]> {
    let bytes = hex::decode(s).context("--seed must be hex")?;
    bytes.try_into().map_err(|b: Vec<u8>| anyhow!("--seed must be 32 bytes, got {}", b.len()))
}

fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Setup { keyring: dir, seed, ell, mode, probing, fixed_m, kappa } => {
            let seed = parse_seed(&seed)?;
            let cfg = SetupConfig {
                kappa,
                ell,
                mode: match mode {
                    ModeArg::Generic => Mode::Generic,
                    ModeArg::Trivial => Mode::Trivial,
                },
                probing: match probing {
                    ProbingArg::Finalized => Probing::Finalized,
                    ProbingArg::Plain => Probing::Plain,
                },
                fixed_m,
            };
            let (pp, sk) = cmdvs::setup(&cfg, &seed)?;
            fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
            let kr = Keyring { dir };
            kr.write("pp.txt", &keyring::format_public_params(&pp))?;
            kr.write("sk.txt", &keyring::format_signing_key(&sk))?;
            kr.write("registry.txt", "")?;
            kr.write("keyring.txt", "")?;
            eprintln!("wrote {}", kr.dir.display());
        }
        Command::Keygen { keyring: dir, ids } => {
            let ids = keyring::parse_ids(&read_text(&ids)?).context("ids file")?;
            let kr = Keyring { dir };
            let pp = kr.public_params()?;
            let mut sk = kr.signing_key()?;
            let mut keys = kr.keys(pp.mode)?;
            for &id in &ids {
                keys.insert(id, cmdvs::keygen(&pp, &mut sk, id));
            }
            let registry: Vec<u64> = sk.registry().iter().copied().collect();
            kr.write("registry.txt", &keyring::format_ids(&registry))?;
            kr.write("keyring.txt", &keyring::format_keyring(&keys))?;
            eprintln!("issued {} keys ({} registered)", ids.len(), registry.len());
        }
        Command::Sign { keyring: dir, designate, cmd_file, lambda, max_bits, out } => {
            let designated = keyring::parse_ids(&read_text(&designate)?).context("designate file")?;
            let cmd = read_bytes(&cmd_file)?;
            let sk = Keyring { dir }.signing_key()?;
            let Some(ac) = iotrex::manager_issue(&sk, &designated, &cmd, max_bits, lambda)? else {
                eprintln!("signature would exceed {max_bits} bits");
                return Ok(EXIT_REJECT);
            };
            fs::write(&out, ac.encode()).with_context(|| format!("writing {}", out.display()))?;
            eprintln!(
                "{} designated, signature {} bits, broadcast {} bits",
                designated.len(),
                ac.sigma.encoded_bits(),
                ac.encoded_bits()
            );
        }
        Command::Verify { keyring: dir, device, input } => {
            let id = keyring::parse_id(&device).ok_or_else(|| anyhow!("--device must be 16 hex digits"))?;
            let wire = read_bytes(&input)?;
            let kr = Keyring { dir };
            let pp = kr.public_params()?;
            let known = kr.keys(pp.mode)?;
            let vrk = kr.device_key(&pp, &known, id)?;
            let mut state = DeviceState::new(pp, vrk);
            let decision = iotrex::device_process(&mut state, &wire);
            println!("{}", decision.label());
            if !matches!(decision, DeviceDecision::Execute(_)) {
                return Ok(EXIT_REJECT);
            }
        }
        Command::FleetRun { keyring: dir, fleet, input, out } => {
            let ids = keyring::parse_ids(&read_text(&fleet)?).context("fleet file")?;
            let wire = read_bytes(&input)?;
            let kr = Keyring { dir };
            let pp = kr.public_params()?;
            let known = kr.keys(pp.mode)?;
            let mut devices = ids
                .iter()
                .map(|&id| Ok(DeviceState::new(pp.clone(), kr.device_key(&pp, &known, id)?)))
                .collect::<Result<Vec<_>>>()?;
            let decisions = iotrex::fleet_broadcast(&mut devices, &wire);
            let executed = decisions.values().filter(|d| matches!(d, DeviceDecision::Execute(_))).count();
            match out {
                Some(p) => {
                    let f = fs::File::create(&p).with_context(|| format!("writing {}", p.display()))?;
                    iotrex::write_decisions_csv(f, &decisions)?;
                }
                None => {
                    let stdout = std::io::stdout();
                    iotrex::write_decisions_csv(stdout.lock(), &decisions)?;
                }
            }
            eprintln!("{executed} of {} devices executed", decisions.len());
        }
        Command::Bench { config, out_dir } => {
            let mut cfg = BenchConfig::parse(&read_text(&config)?).with_context(|| config.display().to_string())?;
            if let Some(d) = out_dir {
                cfg.out_dir = d;
            }
            let report = bench::run_experiment(&cfg)?;
            let (csv, dat) = bench::emit_report(&report, &cfg.out_dir)?;
            eprintln!("wrote {} and {}", csv.display(), dat.display());
        }
        Command::Size { scheme, d, lambda, ell } => {
            if d == 0 || lambda == 0 || ell == 0 {
                bail!("--d, --lambda and --ell must be at least 1");
            }
            let scheme = match scheme {
                SchemeArg::Generic => Scheme::Generic,
                SchemeArg::Trivial => Scheme::Trivial,
                SchemeArg::Baseline => Scheme::Baseline,
            };
            println!("{}", bench::theoretical_size(scheme, d, lambda, ell));
        }
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            let _ = writeln!(std::io::stderr(), "error: {e:#}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}
