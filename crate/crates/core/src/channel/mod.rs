//! Two-party payment channels.
//!
//! A [`Channel`] is driven by a single owner that plays both parties: every
//! message of the update protocol is exchanged in memory, in order, and
//! recorded in the channel's event trace. Balances move off-chain; the base
//! chain sees only the funding transaction and whatever closes the channel.

mod close;
mod commitment;
mod trace;
mod update;


use std::collections::BTreeMap;
use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use thiserror::Error;

pub use commitment::{CommitmentTx, HtlcOutput};
pub use trace::{AlgorithmStep, ChannelEvent, EventKind};
pub use update::UpdateKind;

use crate::basechain::{
    Ledger, LedgerError, OutPoint, Output, SpendCondition, Transaction, TxIn, Txid, Witness,
    TX_FEE_MSAT,
};
use crate::crypto::{PaymentHash, Preimage, PublicKey, SecretKey, Signature};
use crate::htlc::{HtlcId, HtlcParams};
use crate::{AssetId, ChannelId, NodeId};

/// Blocks the broadcaster of a commitment waits before sweeping its own
/// balance.
pub const DEFAULT_TO_SELF_DELAY: u32 = 144;

/// Missed heartbeat ticks before a peer is treated as gone.
pub const DEFAULT_LIVENESS_TIMEOUT_TICKS: u64 = 6;

/// The wallet key a node uses for funding, payouts and delayed outputs.
pub fn node_key(node: &NodeId) -> SecretKey {
    SecretKey::derive("node", node.as_bytes())
}

/// Position of a party within a channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Side {
    A,
    B,
}

impl Side {
    pub fn other(self) -> Side {
        match self {
            Side::A => Side::B,
            Side::B => Side::A,
        }
    }

    pub fn idx(self) -> usize {
        match self {
            Side::A => 0,
            Side::B => 1,
        }
    }

    pub fn letter(self) -> char {
        match self {
            Side::A => 'A',
            Side::B => 'B',
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.letter())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChannelState {
    Opening,
    Open,
    PendingUpdate,
    CooperativeClosed,
    UnilateralClosing { broadcaster: Side, broadcast_height: u64 },
    Punished { victim: Side },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ChannelError {
    #[error("a channel needs two distinct parties")]
    SameParty,
    #[error("channel capacity must be positive")]
    ZeroCapacity,
    #[error("funding transaction is not confirmed yet")]
    FundingUnconfirmed,
    #[error("channel is not open (state {0:?})")]
    ChannelNotOpen(ChannelState),
    #[error("another update is already in flight")]
    ConcurrentUpdate,
    #[error("channel balance {available} msat cannot cover {needed} msat")]
    InsufficientChannelBalance { needed: u64, available: u64 },
    #[error("party {0} is offline")]
    PartyOffline(Side),
    #[error("both parties are offline")]
    BothOffline,
    #[error("party has no countersigned commitment")]
    NoSignedCommitment,
    #[error("no revocation secret for commitment version {version}")]
    NoRevocationSecret { version: u64 },
    #[error("revoked output can no longer be claimed; the delay elapsed")]
    DelayElapsed,
    #[error("delayed output spendable from height {ready_at}")]
    DelayNotElapsed { ready_at: u64 },
    #[error("transaction is not confirmed")]
    NotConfirmed,
    #[error("nothing left to sweep that covers the fee")]
    NothingToSweep,
    #[error("HTLCs are still pending")]
    HtlcsPending,
    #[error("transaction is not a commitment of this channel")]
    UnknownCommitment,
    #[error("capacity below the on-chain fee")]
    CapacityBelowFee,
    #[error("HTLC expiry {expiry} is not after current height {height}")]
    ExpiredBeforeAdd { expiry: u64, height: u64 },
    #[error("HTLC amount must be at least 1 msat")]
    ZeroAmountHtlc,
    #[error("unknown HTLC {0:?}")]
    UnknownHtlc(HtlcId),
    #[error("preimage does not match the payment hash")]
    WrongPreimage,
    #[error("HTLC expired at {expiry}, current height {height}")]
    PastExpiry { expiry: u64, height: u64 },
    #[error("HTLC expires at {expiry}, current height {height}")]
    NotYetExpired { expiry: u64, height: u64 },
    #[error("no update is in flight")]
    NoUpdateInFlight,
    #[error("protocol violation: {0}")]
    ProtocolViolation(&'static str),
    #[error(transparent)]
    Ledger(#[from] LedgerError),
}

/// A disclosed per-version secret. Its public key is the revocation key of
/// the owner's commitment of that version.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RevocationSecret {
    pub version_n: u64,
    pub secret: SecretKey,
    pub owner: Side,
}

/// What one party holds.
#[derive(Debug, Clone)]
pub struct PartyState {
    pub(crate) own_secrets: Vec<SecretKey>,
    pub(crate) latest: CommitmentTx,
    /// Revoked commitments of this party, indexed by version.
    pub(crate) history: Vec<CommitmentTx>,
    pub(crate) received_revocations: BTreeMap<u64, RevocationSecret>,
    pub(crate) pending: Option<CommitmentTx>,
}

impl PartyState {
    pub fn latest_commitment(&self) -> &CommitmentTx {
        &self.latest
    }

    pub fn revoked_commitments(&self) -> &[CommitmentTx] {
        &self.history
    }

    pub fn received_revocations(&self) -> &BTreeMap<u64, RevocationSecret> {
        &self.received_revocations
    }
}

#[derive(Debug, Clone)]
pub struct OpenParams {
    pub id: ChannelId,
    pub a: NodeId,
    pub b: NodeId,
    pub fund_a_msat: u64,
    pub fund_b_msat: u64,
    pub to_self_delay: u32,
    /// Seeds the revocation-secret generator.
    pub seed: u64,
}

impl OpenParams {
    pub fn new(
        id: impl Into<ChannelId>,
        a: impl Into<NodeId>,
        b: impl Into<NodeId>,
        fund_a_msat: u64,
        fund_b_msat: u64,
    ) -> Self {
        Self {
            id: id.into(),
            a: a.into(),
            b: b.into(),
            fund_a_msat,
            fund_b_msat,
            to_self_delay: DEFAULT_TO_SELF_DELAY,
            seed: 0,
        }
    }

    pub fn with_delay(mut self, to_self_delay: u32) -> Self {
        self.to_self_delay = to_self_delay;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

/// The commitment that went on-chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Broadcast {
    pub holder: Side,
    pub version: u64,
    pub txid: Txid,
}

#[derive(Debug, Clone)]
pub struct Channel {
    pub(crate) id: ChannelId,
    pub(crate) asset: AssetId,
    pub(crate) nodes: [NodeId; 2],
    pub(crate) keys: [SecretKey; 2],
    pub(crate) capacity: u64,
    pub(crate) balances: [u64; 2],
    pub(crate) version: u64,
    pub(crate) funding: OutPoint,
    pub(crate) to_self_delay: u32,
    pub(crate) htlcs: Vec<HtlcParams>,
    pub(crate) next_htlc_id: u64,
    pub(crate) state: ChannelState,
    pub(crate) online: [bool; 2],
    pub(crate) parties: [PartyState; 2],
    pub(crate) in_flight: Option<update::InFlight>,
    pub(crate) trace: Vec<ChannelEvent>,
    pub(crate) tick: u64,
    pub(crate) rng: ChaCha20Rng,
    pub(crate) commitment_index: BTreeMap<Txid, (Side, u64)>,
    pub(crate) broadcast: Option<Broadcast>,
    pub(crate) close_txid: Option<Txid>,
    pub(crate) offchain_transfers: u64,
    pub(crate) preimages: BTreeMap<PaymentHash, Preimage>,
}

/// Opens a channel: builds the funding transaction, exchanges signed
/// version-0 commitments, and only then broadcasts the funding. The channel
/// is [`ChannelState::Opening`] until [`Channel::confirm_funding`] sees the
/// funding confirmed.
///
/// Side A pays the funding fee.
pub fn open_channel(ledger: &mut Ledger, params: OpenParams) -> Result<Channel, ChannelError> {
    if params.a == params.b {
        return Err(ChannelError::SameParty);
    }
    let capacity = params.fund_a_msat + params.fund_b_msat;
    if capacity == 0 {
        return Err(ChannelError::ZeroCapacity);
    }
    let keys = [node_key(&params.a), node_key(&params.b)];
    let pks = [keys[0].public_key(), keys[1].public_key()];
    let needs = [params.fund_a_msat + TX_FEE_MSAT, params.fund_b_msat];

    let mut inputs = Vec::new();
    let mut change = Vec::new();
    for side in [Side::A, Side::B] {
        let (coins, total) = ledger.select_coins(&pks[side.idx()], needs[side.idx()])?;
        inputs.extend(coins.into_iter().map(|op| (op, side)));
        if total > needs[side.idx()] {
            change.push(Output::single_key(
                total - needs[side.idx()],
                pks[side.idx()].clone(),
            ));
        }
    }
    let mut funding_tx = Transaction {
        inputs: inputs
            .iter()
            .map(|(op, _)| TxIn {
                prevout: *op,
                witness: Witness::KeySig(Signature::EMPTY),
            })
            .collect(),
        outputs: std::iter::once(Output {
            amount_msat: capacity,
            condition: SpendCondition::Multisig2of2(pks[0].clone(), pks[1].clone()),
        })
        .chain(change)
        .collect(),
        locktime_height: 0,
    };
    let funding_txid = funding_tx.txid();

    let mut rng = ChaCha20Rng::seed_from_u64(params.seed);
    let secrets = [SecretKey::random(&mut rng), SecretKey::random(&mut rng)];
    let funding = OutPoint::new(funding_txid, 0);
    let balances = [params.fund_a_msat, params.fund_b_msat];
    let mut commitments = [Side::A, Side::B].map(|holder| {
        CommitmentTx::build(commitment::CommitmentSpec {
            funding,
            holder,
            version: 0,
            balances,
            htlcs: &[],
            keys: [&pks[0], &pks[1]],
            revocation_key: secrets[holder.idx()].public_key(),
            to_self_delay: params.to_self_delay,
        })
    });
    // Each side signs the other's initial commitment before any funds move.
    for c in &mut commitments {
        let sighash = c.txid();
        c.counterparty_signature = Some(keys[c.holder.other().idx()].sign(&sighash.0));
        c.holder_signature = Some(keys[c.holder.idx()].sign(&sighash.0));
    }
    let mut commitment_index = BTreeMap::new();
    for c in &commitments {
        commitment_index.insert(c.txid(), (c.holder, 0));
    }

    let sighash = funding_txid;
    for (input, (_, side)) in funding_tx.inputs.iter_mut().zip(&inputs) {
        input.witness = Witness::KeySig(keys[side.idx()].sign(&sighash.0));
    }
    ledger.submit_transaction(funding_tx)?;

    let [ca, cb] = commitments;
    let [sa, sb] = secrets;
    Ok(Channel {
        id: params.id,
        asset: ledger.asset_id().clone(),
        nodes: [params.a, params.b],
        keys,
        capacity,
        balances,
        version: 0,
        funding,
        to_self_delay: params.to_self_delay,
        htlcs: Vec::new(),
        next_htlc_id: 0,
        state: ChannelState::Opening,
        online: [true, true],
        parties: [
            PartyState {
                own_secrets: vec![sa],
                latest: ca,
                history: Vec::new(),
                received_revocations: BTreeMap::new(),
                pending: None,
            },
            PartyState {
                own_secrets: vec![sb],
                latest: cb,
                history: Vec::new(),
                received_revocations: BTreeMap::new(),
                pending: None,
            },
        ],
        in_flight: None,
        trace: Vec::new(),
        tick: 0,
        rng,
        commitment_index,
        broadcast: None,
        close_txid: None,
        offchain_transfers: 0,
        preimages: BTreeMap::new(),
    })
}

impl Channel {
    /// Moves an `Opening` channel to `Open` once the funding is confirmed.
    pub fn confirm_funding(&mut self, ledger: &Ledger) -> Result<(), ChannelError> {
        match self.state {
            ChannelState::Opening => {}
            ChannelState::Open | ChannelState::PendingUpdate => return Ok(()),
            other => return Err(ChannelError::ChannelNotOpen(other)),
        }
        if ledger.confirmation_height(&self.funding.txid).is_none() {
            return Err(ChannelError::FundingUnconfirmed);
        }
        self.state = ChannelState::Open;
        self.record(EventKind::Funded, self.version);
        Ok(())
    }

    pub fn id(&self) -> &ChannelId {
        &self.id
    }

    pub fn asset(&self) -> &AssetId {
        &self.asset
    }

    pub fn node(&self, side: Side) -> &NodeId {
        &self.nodes[side.idx()]
    }

    pub fn nodes(&self) -> &[NodeId; 2] {
        &self.nodes
    }

    pub fn side_of(&self, node: &NodeId) -> Option<Side> {
        if &self.nodes[0] == node {
            Some(Side::A)
        } else if &self.nodes[1] == node {
            Some(Side::B)
        } else {
            None
        }
    }

    pub fn public_key(&self, side: Side) -> PublicKey {
        self.keys[side.idx()].public_key()
    }

    pub fn capacity_msat(&self) -> u64 {
        self.capacity
    }

    pub fn balance(&self, side: Side) -> u64 {
        self.balances[side.idx()]
    }

    pub fn balances(&self) -> [u64; 2] {
        self.balances
    }

    pub fn version(&self) -> u64 {
        self.version
    }

    pub fn state(&self) -> ChannelState {
        self.state
    }

    pub fn is_open(&self) -> bool {
        matches!(self.state, ChannelState::Open | ChannelState::PendingUpdate)
    }

    pub fn funding_outpoint(&self) -> OutPoint {
        self.funding
    }

    pub fn to_self_delay(&self) -> u32 {
        self.to_self_delay
    }

    pub fn pending_htlcs(&self) -> &[HtlcParams] {
        &self.htlcs
    }

    pub fn htlc_total(&self) -> u64 {
        self.htlcs.iter().map(|h| h.amount_msat).sum()
    }

    /// `balance_A + balance_B + pending HTLCs == capacity`.
    pub fn conserves_capacity(&self) -> bool {
        self.balances[0] + self.balances[1] + self.htlc_total() == self.capacity
    }

    pub fn party(&self, side: Side) -> &PartyState {
        &self.parties[side.idx()]
    }

    pub fn is_online(&self, side: Side) -> bool {
        self.online[side.idx()]
    }

    pub fn set_online(&mut self, side: Side, online: bool) {
        self.online[side.idx()] = online;
    }

    pub fn trace(&self) -> &[ChannelEvent] {
        &self.trace
    }

    /// Tick stamped on subsequently recorded events.
    pub fn set_tick(&mut self, tick: u64) {
        self.tick = tick;
    }

    pub fn broadcast(&self) -> Option<Broadcast> {
        self.broadcast
    }

    pub fn close_txid(&self) -> Option<Txid> {
        self.close_txid
    }

    /// Completed off-chain value transfers: direct updates plus settled
    /// HTLCs.
    pub fn offchain_transfers(&self) -> u64 {
        self.offchain_transfers
    }

    /// Which party's commitment, and which version, `txid` is.
    pub fn identify_commitment(&self, txid: &Txid) -> Option<(Side, u64)> {
        self.commitment_index.get(txid).copied()
    }

    /// A party's own commitment of `version`, current or revoked.
    pub fn commitment(&self, holder: Side, version: u64) -> Option<&CommitmentTx> {
        let p = &self.parties[holder.idx()];
        if p.latest.version_n == version {
            Some(&p.latest)
        } else {
            p.history.get(version as usize)
        }
    }

    pub(crate) fn record(&mut self, event: EventKind, version: u64) {
        self.trace.push(ChannelEvent {
            tick: self.tick,
            channel_id: self.id.clone(),
            event,
            version,
            balance_a_msat: self.balances[0],
            balance_b_msat: self.balances[1],
        });
    }

    pub(crate) fn check_can_update(&self) -> Result<(), ChannelError> {
        match self.state {
            ChannelState::Open => {}
            ChannelState::PendingUpdate => return Err(ChannelError::ConcurrentUpdate),
            other => return Err(ChannelError::ChannelNotOpen(other)),
        }
        for side in [Side::A, Side::B] {
            if !self.online[side.idx()] {
                return Err(ChannelError::PartyOffline(side));
            }
        }
        Ok(())
    }

    pub(crate) fn own_secret(&mut self, side: Side, version: u64) -> SecretKey {
        let secrets = &mut self.parties[side.idx()].own_secrets;
        while secrets.len() as u64 <= version {
            secrets.push(SecretKey::random(&mut self.rng));
        }
        secrets[version as usize].clone()
    }
}
