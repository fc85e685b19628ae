use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const SUBCOMMANDS: [&str; 7] = ["setup", "keygen", "sign", "verify", "fleet-run", "bench", "size"];
const SEED: &str = "000102030405060708090a0b0c0d0e0f101112131415161718191a1b1c1d1e1f";

fn iotrex(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_iotrex")).args(args).output().unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn word_count(text: &str, word: &str) -> usize {
    text.split(|c: char| !(c.is_ascii_alphanumeric() || c == '-')).filter(|w| *w == word).count()
}

#[test]
fn usage_lists_each_subcommand_once() {
    let o = iotrex(&["--help"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    for sub in SUBCOMMANDS {
        assert_eq!(word_count(&text, sub), 1, "{sub} in:\n{text}");
    }
    assert!(text.contains("--lambda 15") && text.contains("--ell 1") && text.contains("--mode generic"));
}

#[test]
fn subcommand_help_exits_zero_and_shows_defaults() {
    for sub in SUBCOMMANDS {
        let o = iotrex(&[sub, "--help"]);
        assert_eq!(o.status.code(), Some(0), "{sub}");
    }
    let sign = stdout(&iotrex(&["sign", "--help"]));
    assert!(sign.contains("[default: 15]"));
    let setup = stdout(&iotrex(&["setup", "--help"]));
    assert!(setup.contains("[default: 1]") && setup.contains("[default: generic]"));
}

#[test]
fn usage_errors_exit_two() {
    let o = iotrex(&["size", "--d", "10", "--bogus"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));
    assert_eq!(iotrex(&[]).status.code(), Some(2));
    assert_eq!(iotrex(&["setup", "--keyring", "/tmp/x", "--seed", "abcd"]).status.code(), Some(2));
}

#[test]
fn size_calculator() {
    let o = iotrex(&["size", "--d", "100", "--lambda", "10"]);
    assert_eq!(stdout(&o).trim(), "1967");
    let o = iotrex(&["size", "--scheme", "trivial", "--d", "1000"]);
    assert_eq!(stdout(&o).trim(), "64512");
    let o = iotrex(&["size", "--scheme", "baseline", "--d", "3"]);
    assert_eq!(stdout(&o).trim(), "1536");
}

fn end_to_end(mode: &str) {
    let dir = tempfile::tempdir().unwrap();
    let kr = dir.path().join("k.dir");
    let ids = dir.path().join("ids.txt");
    let fleet = dir.path().join("fleet.txt");
    let cmd = dir.path().join("c.bin");
    let out = dir.path().join("cmd.irx");
    fs::write(&ids, "00000000000000a1\n00000000000000a2\n00000000000000a3\n").unwrap();
    fs::write(&fleet, "00000000000000a1\n00000000000000a2\n00000000000000a3\n00000000000000b0\n").unwrap();
    fs::write(&cmd, b"reboot").unwrap();

    let o = iotrex(&["setup", "--ell", "1", "--seed", SEED, "--keyring", p(&kr), "--mode", mode]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["pp.txt", "sk.txt", "registry.txt", "keyring.txt"] {
        assert!(kr.join(f).exists(), "{f}");
    }

    let args = ["sign", "--keyring", p(&kr), "--designate", p(&ids), "--cmd-file", p(&cmd), "--lambda", "15", "--out", p(&out)];
    assert_eq!(iotrex(&args).status.code(), Some(0));

    // Designated device without a provisioned key: derived from the signer.
    let o = iotrex(&["verify", "--keyring", p(&kr), "--device", "00000000000000a2", "--in", p(&out)]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).trim(), "execute");
    let o = iotrex(&["verify", "--keyring", p(&kr), "--device", "00000000000000b0", "--in", p(&out)]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(stdout(&o).trim(), "ignore");

    // Provision, then the same check goes through keyring.txt.
    assert_eq!(iotrex(&["keygen", "--keyring", p(&kr), "--ids", p(&fleet)]).status.code(), Some(0));
    assert_eq!(fs::read_to_string(kr.join("keyring.txt")).unwrap().lines().count(), 4);
    assert_eq!(fs::read_to_string(kr.join("registry.txt")).unwrap().lines().count(), 4);
    let o = iotrex(&["verify", "--keyring", p(&kr), "--device", "00000000000000a1", "--in", p(&out)]);
    assert_eq!(o.status.code(), Some(0));

    let csv = dir.path().join("decisions.csv");
    let o = iotrex(&["fleet-run", "--keyring", p(&kr), "--fleet", p(&fleet), "--in", p(&out), "--out", p(&csv)]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(
        fs::read_to_string(&csv).unwrap(),
        "id,decision\n00000000000000a1,execute\n00000000000000a2,execute\n00000000000000a3,execute\n00000000000000b0,ignore\n"
    );

    let mut bytes = fs::read(&out).unwrap();
    bytes.truncate(bytes.len() - 1);
    fs::write(&out, &bytes).unwrap();
    let o = iotrex(&["verify", "--keyring", p(&kr), "--device", "00000000000000a1", "--in", p(&out)]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(stdout(&o).trim(), "reject");
}

#[test]
fn end_to_end_generic() {
    end_to_end("generic");
}

#[test]
fn end_to_end_trivial() {
    end_to_end("trivial");
}

#[test]
fn sign_bottom_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let kr = dir.path().join("k");
    let ids = dir.path().join("ids.txt");
    let cmd = dir.path().join("c.bin");
    fs::write(&ids, "0000000000000001\n").unwrap();
    fs::write(&cmd, b"x").unwrap();
    assert_eq!(iotrex(&["setup", "--seed", SEED, "--keyring", p(&kr)]).status.code(), Some(0));
    let out = dir.path().join("o.irx");
    let o = iotrex(&["sign", "--keyring", p(&kr), "--designate", p(&ids), "--cmd-file", p(&cmd), "--max-bits", "64", "--out", p(&out)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(!out.exists());
}

#[test]
fn bad_ids_file_reports_line() {
    let dir = tempfile::tempdir().unwrap();
    let kr = dir.path().join("k");
    let ids = dir.path().join("ids.txt");
    fs::write(&ids, "0000000000000001\nnope\n").unwrap();
    assert_eq!(iotrex(&["setup", "--seed", SEED, "--keyring", p(&kr)]).status.code(), Some(0));
    let o = iotrex(&["keygen", "--keyring", p(&kr), "--ids", p(&ids)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));
}

#[test]
fn bench_report_sizes_match_calculator() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bench.cfg");
    let out = dir.path().join("out");
    fs::write(&cfg, format!("schemes = generic, trivial, baseline\nd_list = 10, 100\nlambda_list = 10\ntrials = 5\nseed = 1\nout_dir = {}\n", p(&out))).unwrap();
    let o = iotrex(&["bench", "--config", p(&cfg)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(out.join("report.csv")).unwrap();
    let rows = iotrex_core::bench::rows_from_csv(&text).unwrap();
    assert_eq!(rows.len(), 6);
    for r in rows {
        let o = iotrex(&["size", "--scheme", r.scheme.name(), "--d", &r.d.to_string(), "--lambda", &r.lambda.to_string()]);
        assert_eq!(stdout(&o).trim(), r.theoretical_bits.to_string());
        assert!(r.payload_bits.abs_diff(r.theoretical_bits) <= 24 * 8);
    }
    assert!(out.join("report.dat").exists());

    fs::write(&cfg, "trials = 5\nd_list = ten\n").unwrap();
    let o = iotrex(&["bench", "--config", p(&cfg)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));
}
