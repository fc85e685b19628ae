//! Line-oriented text persistence for keys and identity lists.
//!
//! All binary material is lowercase hex. Blank lines and lines starting
//! with `#` are ignored on input.
//!
//! * public params: `key value` lines for `verk`, `ell`, `mode`, `probing`
//! * signing key: the public fields plus `sigk`, `kappa`, `seed0`, `seed1`
//!   (generic only) and `fixed_m` (optional)
//! * keyring: `<id as 16 hex digits> <key material hex>` per line
//! * id list: one 16-hex-digit id per line

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;

use thiserror::Error;

use crate::amq::{HashPair, Probing};
use crate::sigscheme::{DsKeyPair, Ed25519, SignatureScheme};

use super::{Mode, PublicParams, SigningKey, VerificationKey};

#[derive(Debug, Error, PartialEq, Eq)]
#[error("line {line}: {msg}")]
pub struct ParseError {
    pub line: usize,
    pub msg: String,
}

fn err(line: usize, msg: impl Into<String>) -> ParseError {
    ParseError { line, msg: msg.into() }
}

/// Yields `(line number, trimmed content)` for meaningful lines.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

pub fn parse_id(s: &str) -> Option<u64> {
    if s.len() != 16 || !s.bytes().all(|b| b.is_ascii_hexdigit()) {
        return None;
    }
    u64::from_str_radix(s, 16).ok()
}

pub fn format_id(id: u64) -> String {
    format!("{id:016x}")
}

/// Parses an id list. Duplicates are an error.
pub fn parse_ids(text: &str) -> Result<Vec<u64>, ParseError> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for (line, l) in content_lines(text) {
        let id = parse_id(l).ok_or_else(|| err(line, format!("expected 16 hex digits, got {l:?}")))?;
        if !seen.insert(id) {
            return Err(err(line, format!("duplicate id {l}")));
        }
        out.push(id);
    }
    Ok(out)
}

pub fn format_ids(ids: &[u64]) -> String {
    ids.iter().map(|&id| format_id(id) + "\n").collect()
}

fn parse_fields(text: &str) -> Result<HashMap<String, (usize, String)>, ParseError> {
    let mut out = HashMap::new();
    for (line, l) in content_lines(text) {
        let (k, v) = l.split_once(char::is_whitespace).ok_or_else(|| err(line, "expected `key value`"))?;
        if out.insert(k.to_string(), (line, v.trim().to_string())).is_some() {
            return Err(err(line, format!("duplicate key {k}")));
        }
    }
    Ok(out)
}

struct Fields(HashMap<String, (usize, String)>);

impl Fields {
    fn get(&self, key: &str) -> Result<(usize, &str), ParseError> {
        self.0
            .get(key)
            .map(|(l, v)| (*l, v.as_str()))
            .ok_or_else(|| err(0, format!("missing key {key}")))
    }

    fn hex(&self, key: &str) -> Result<Vec<u8>, ParseError> {
        let (line, v) = self.get(key)?;
        hex::decode(v).map_err(|e| err(line, format!("{key}: {e}")))
    }

    fn num<T: std::str::FromStr>(&self, key: &str) -> Result<T, ParseError> {
        let (line, v) = self.get(key)?;
        v.parse().map_err(|_| err(line, format!("{key}: not a number: {v}")))
    }

    fn hex_u64(&self, key: &str) -> Result<u64, ParseError> {
        let (line, v) = self.get(key)?;
        parse_id(v).ok_or_else(|| err(line, format!("{key}: expected 16 hex digits")))
    }

    fn mode(&self) -> Result<Mode, ParseError> {
        let (line, v) = self.get("mode")?;
        Mode::parse(v).ok_or_else(|| err(line, format!("unknown mode {v}")))
    }

    fn probing(&self) -> Result<Probing, ParseError> {
        let (line, v) = self.get("probing")?;
        Probing::parse(v).ok_or_else(|| err(line, format!("unknown probing {v}")))
    }
}

pub fn format_public_params(pp: &PublicParams) -> String {
    format!(
        "verk {}\nell {}\nmode {}\nprobing {}\n",
        hex::encode(&pp.verk),
        pp.ell,
        pp.mode.name(),
        pp.probing.name()
    )
}

pub fn parse_public_params(text: &str) -> Result<PublicParams, ParseError> {
    let f = Fields(parse_fields(text)?);
    Ok(PublicParams { verk: f.hex("verk")?, ell: f.num("ell")?, mode: f.mode()?, probing: f.probing()? })
}

pub fn format_signing_key(sk: &SigningKey) -> String {
    let mut s = String::new();
    writeln!(s, "sigk {}", hex::encode(&sk.ds.sigk)).unwrap();
    s.push_str(&format_public_params(&sk.public_params()));
    writeln!(s, "kappa {}", sk.kappa).unwrap();
    if let Some(h) = sk.hash {
        writeln!(s, "seed0 {}", format_id(h.seed0)).unwrap();
        writeln!(s, "seed1 {}", format_id(h.seed1)).unwrap();
    }
    if let Some(m) = sk.fixed_m {
        writeln!(s, "fixed_m {m}").unwrap();
    }
    s
}

/// The registry is not part of the key file; pass it separately.
pub fn parse_signing_key(text: &str, registry: BTreeSet<u64>) -> Result<SigningKey, ParseError> {
    let f = Fields(parse_fields(text)?);
    let sigk = f.hex("sigk")?;
    let sigk_line = f.get("sigk")?.0;
    let ds = Ed25519.generate(&sigk).map_err(|e| err(sigk_line, e.to_string()))?;
    let verk = f.hex("verk")?;
    if verk != ds.verk {
        return Err(err(f.get("verk")?.0, "verk does not match sigk"));
    }
    let mode = f.mode()?;
    let hash = match mode {
        Mode::Generic => Some(HashPair::new(f.hex_u64("seed0")?, f.hex_u64("seed1")?)),
        Mode::Trivial => None,
    };
    let fixed_m = match f.0.contains_key("fixed_m") {
        true => Some(f.num("fixed_m")?),
        false => None,
    };
    Ok(SigningKey {
        ds: DsKeyPair { sigk: ds.sigk, verk },
        kappa: f.num("kappa")?,
        ell: f.num("ell")?,
        mode,
        probing: f.probing()?,
        hash,
        fixed_m,
        registry,
    })
}

pub fn format_keyring(keys: &BTreeMap<u64, VerificationKey>) -> String {
    keys.iter().map(|(&id, k)| format!("{} {}\n", format_id(id), hex::encode(k.material()))).collect()
}

pub fn parse_keyring(text: &str, mode: Mode) -> Result<BTreeMap<u64, VerificationKey>, ParseError> {
    let mut out = BTreeMap::new();
    for (line, l) in content_lines(text) {
        let (id, mat) = l.split_once(char::is_whitespace).ok_or_else(|| err(line, "expected `<id> <hex>`"))?;
        let id = parse_id(id).ok_or_else(|| err(line, "id must be 16 hex digits"))?;
        let bytes = hex::decode(mat.trim()).map_err(|e| err(line, e.to_string()))?;
        let vrk = VerificationKey::from_material(mode, id, &bytes).map_err(|e| err(line, e.to_string()))?;
        if out.insert(id, vrk).is_some() {
            return Err(err(line, format!("duplicate id {}", format_id(id))));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cmdvs::{keygen, setup, SetupConfig};

    #[test]
    fn ids_roundtrip_and_errors() {
        let ids = vec![0, 1, u64::MAX, 0x0123_4567_89ab_cdef];
        assert_eq!(parse_ids(&format_ids(&ids)).unwrap(), ids);
        assert_eq!(parse_ids("# c\n\n000000000000000a\n").unwrap(), vec![10]);
        assert_eq!(parse_ids("000000000000000a\nzz\n").unwrap_err().line, 2);
        assert_eq!(parse_ids("a\n").unwrap_err().line, 1);
        assert_eq!(parse_ids("000000000000000a\n000000000000000A\n").unwrap_err().line, 2);
    }

    #[test]
    fn key_files_roundtrip() {
        for cfg in [
            SetupConfig::generic(3),
            SetupConfig::trivial(),
            SetupConfig { fixed_m: Some(1451), ..SetupConfig::generic(1) },
            SetupConfig { probing: Probing::Plain, ..SetupConfig::generic(1) },
        ] {
            let (pp, mut sk) = setup(&cfg, &[4u8; 32]).unwrap();
            let mut ring = BTreeMap::new();
            for id in [5u64, 1, 99] {
                ring.insert(id, keygen(&pp, &mut sk, id));
            }
            assert_eq!(parse_public_params(&format_public_params(&pp)).unwrap(), pp);
            let back = parse_signing_key(&format_signing_key(&sk), sk.registry().clone()).unwrap();
            assert_eq!(back, sk);
            assert_eq!(parse_keyring(&format_keyring(&ring), pp.mode).unwrap(), ring);
        }
    }

    #[test]
    fn tampered_signing_key_rejected() {
        let (_, sk) = setup(&SetupConfig::default(), &[4u8; 32]).unwrap();
        let text = format_signing_key(&sk).replace(&hex::encode(&sk.ds.verk), &"00".repeat(32));
        assert!(parse_signing_key(&text, BTreeSet::new()).unwrap_err().msg.contains("does not match"));
    }

    #[test]
    fn keyring_errors_carry_lines() {
        assert_eq!(parse_keyring("0000000000000001 zz\n", Mode::Generic).unwrap_err().line, 1);
        assert_eq!(parse_keyring("\n0000000000000001 00\n", Mode::Generic).unwrap_err().line, 2);
        assert!(parse_public_params("verk 00\nell x\nmode generic\nprobing finalized\n").is_err());
        assert!(parse_public_params("verk 00\n").unwrap_err().msg.contains("missing"));
    }
}
