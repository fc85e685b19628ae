//! Remote-control protocol on top of CMDVS.
//!
//! A manager broadcasts one authenticated command to the whole fleet; each
//! device decides on its own whether to run it.
//!
//! Wire format: `"IRX1"` ‖ mode (u8, 0 generic / 1 trivial) ‖ cmd length
//! (u32 BE) ‖ cmd ‖ signature body ‖ 64-byte DS signature.

use std::collections::BTreeMap;
use std::io::Write;

use crate::cmdvs::{self, CmdvsError, CmdvsSignature, Mode, PublicParams, SigningKey, VerificationKey};

pub const MAGIC: &[u8; 4] = b"IRX1";
/// Magic, mode byte and command length.
pub const HEADER_LEN: usize = 9;
/// Command size used by the benchmarks (256 bits).
pub const DEFAULT_CMD_LEN: usize = 32;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AuthenticatedCommand {
    pub cmd: Vec<u8>,
    pub sigma: CmdvsSignature,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WireError {
    TooShort,
    BadMagic,
    UnknownMode(u8),
    Truncated,
    Signature,
}

impl AuthenticatedCommand {
    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.encoded_len());
        out.extend_from_slice(MAGIC);
        out.push(self.sigma.mode().wire_byte());
        out.extend_from_slice(&(self.cmd.len() as u32).to_be_bytes());
        out.extend_from_slice(&self.cmd);
        self.sigma.encode_into(&mut out);
        out
    }

    pub fn encoded_len(&self) -> usize {
        HEADER_LEN + self.cmd.len() + self.sigma.encoded_len()
    }

    pub fn encoded_bits(&self) -> u64 {
        self.encoded_len() as u64 * 8
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, WireError> {
        if bytes.len() < HEADER_LEN {
            return Err(WireError::TooShort);
        }
        if &bytes[..4] != MAGIC {
            return Err(WireError::BadMagic);
        }
        let mode = Mode::from_wire_byte(bytes[4]).ok_or(WireError::UnknownMode(bytes[4]))?;
        let len = u32::from_be_bytes(bytes[5..9].try_into().unwrap()) as usize;
        let rest = &bytes[HEADER_LEN..];
        if rest.len() < len {
            return Err(WireError::Truncated);
        }
        let (cmd, sig) = rest.split_at(len);
        let sigma = CmdvsSignature::decode(mode, sig).map_err(|_| WireError::Signature)?;
        Ok(AuthenticatedCommand { cmd: cmd.to_vec(), sigma })
    }
}

/// What a device stores: its identity, the public params and its key.
#[derive(Clone, Debug)]
pub struct DeviceState {
    pub id: u64,
    pub pp: PublicParams,
    pub vrk: VerificationKey,
    executed: Vec<Vec<u8>>,
}

impl DeviceState {
    pub fn new(pp: PublicParams, vrk: VerificationKey) -> Self {
        DeviceState { id: vrk.id(), pp, vrk, executed: Vec::new() }
    }

    /// Commands executed so far, oldest first.
    pub fn executed(&self) -> &[Vec<u8>] {
        &self.executed
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DeviceDecision {
    Execute(Vec<u8>),
    /// Well-formed but not accepted.
    Ignore,
    /// Could not be parsed, or framed for another mode.
    Reject,
}

impl DeviceDecision {
    pub fn label(&self) -> &'static str {
        match self {
            DeviceDecision::Execute(_) => "execute",
            DeviceDecision::Ignore => "ignore",
            DeviceDecision::Reject => "reject",
        }
    }
}

/// `Ok(None)` when the signature would not fit in `max_bits`.
pub fn manager_issue(
    sk: &SigningKey,
    designated: &[u64],
    cmd: &[u8],
    max_bits: u64,
    lambda: u32,
) -> Result<Option<AuthenticatedCommand>, CmdvsError> {
    if cmd.is_empty() {
        return Err(CmdvsError::InvalidArgument("command must be non-empty"));
    }
    Ok(cmdvs::sign(sk, designated, cmd, max_bits, lambda)?.map(|sigma| AuthenticatedCommand { cmd: cmd.to_vec(), sigma }))
}

pub fn device_process(state: &mut DeviceState, wire: &[u8]) -> DeviceDecision {
    let Ok(ac) = AuthenticatedCommand::decode(wire) else {
        return DeviceDecision::Reject;
    };
    if ac.sigma.mode() != state.pp.mode {
        return DeviceDecision::Reject;
    }
    if cmdvs::verify(&state.pp, &state.vrk, &ac.cmd, &ac.sigma) {
        state.executed.push(ac.cmd.clone());
        DeviceDecision::Execute(ac.cmd)
    } else {
        DeviceDecision::Ignore
    }
}

/// Every device sees the same bytes.
pub fn fleet_broadcast(fleet: &mut [DeviceState], wire: &[u8]) -> BTreeMap<u64, DeviceDecision> {
    fleet.iter_mut().map(|d| (d.id, device_process(d, wire))).collect()
}

/// Provisions one device per id with keys from `keygen`.
pub fn provision_fleet(pp: &PublicParams, sk: &mut SigningKey, ids: &[u64]) -> Vec<DeviceState> {
    ids.iter().map(|&id| DeviceState::new(pp.clone(), cmdvs::keygen(pp, sk, id))).collect()
}

/// `id,decision` rows with a header line.
pub fn write_decisions_csv<W: Write>(out: W, decisions: &BTreeMap<u64, DeviceDecision>) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["id", "decision"])?;
    for (&id, d) in decisions {
        w.write_record([crate::cmdvs::keyring::format_id(id).as_str(), d.label()])?;
    }
    w.flush()?;
    Ok(())
}
