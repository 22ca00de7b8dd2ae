//! Cross-chain swaps from two HTLCs sharing one payment hash.
//!
//! The initiator locks `amount_x` on chain X towards the responder, who
//! answers with `amount_y` on chain Y towards the initiator under a shorter
//! expiry. The initiator takes the Y leg by revealing the preimage; the
//! responder uses that preimage to take the X leg.
//!
//! Both parties follow honest timers: the responder claims as soon as it
//! learns the preimage (immediately when revealed off-chain, at
//! confirmation when revealed on-chain), the initiator reveals only while
//! its claim is still valid, and each offerer refunds its leg once expired.
//! A party going offline drops its channel connections; the counterparty
//! force-closes both swap channels and everything left resolves on-chain.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::basechain::{Ledger, Txid};
use crate::channel::{Channel, ChannelError, Side};
use crate::crypto::{PaymentHash, Preimage};
use crate::NodeId;

use super::HtlcId;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SwapTerms {
    pub amount_x_msat: u64,
    pub amount_y_msat: u64,
    /// Minimum lead of the X expiry over the Y expiry, in X blocks.
    pub delta_blocks: u64,
    /// Blocks until the responder's (chain Y) HTLC expires.
    pub expiry_y_blocks: u64,
    /// Blocks until the initiator's (chain X) HTLC expires.
    pub expiry_x_blocks: u64,
}

impl SwapTerms {
    pub fn new(amount_x_msat: u64, amount_y_msat: u64, delta_blocks: u64) -> Self {
        Self {
            amount_x_msat,
            amount_y_msat,
            delta_blocks,
            expiry_y_blocks: 2 * delta_blocks.max(1),
            expiry_x_blocks: 2 * delta_blocks.max(1) + delta_blocks,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SwapError {
    #[error("both swap channels are on the same asset")]
    SameAsset,
    #[error("initiator and responder must be the two parties of both channels")]
    NotParticipant,
    #[error(
        "responder expiry at tick {short_ticks} must precede initiator expiry at tick \
         {long_ticks} by at least {delta_ticks} ticks"
    )]
    BadTimeoutOrdering {
        short_ticks: u64,
        long_ticks: u64,
        delta_ticks: u64,
    },
    #[error("responder declined the swap")]
    ResponderDeclined,
    #[error(transparent)]
    Channel(#[from] ChannelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum LegStatus {
    Pending,
    Settled,
    Refunded,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SwapOutcome {
    BothSettled,
    BothRefunded,
    /// One leg settled and the other refunded.
    Mixed { x: LegStatus, y: LegStatus },
    /// A leg is still locked.
    Unresolved { x: LegStatus, y: LegStatus },
}

impl SwapOutcome {
    pub fn is_atomic(self) -> bool {
        matches!(self, SwapOutcome::BothSettled | SwapOutcome::BothRefunded)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SwapEvent {
    Reveal,
    OfflineInitiator,
    OfflineResponder,
    /// Advances the shared clock to the next block time and mines every
    /// chain that is due.
    Tick,
}

const X: usize = 0;
const Y: usize = 1;
const INITIATOR: usize = 0;
const RESPONDER: usize = 1;

#[derive(Debug, Clone)]
struct Leg {
    channel: Channel,
    ledger: Ledger,
    htlc: HtlcId,
    expiry: u64,
    /// Channel side of [initiator, responder].
    sides: [Side; 2],
    next_block_tick: u64,
    status: LegStatus,
    pending_tx: Option<(Txid, LegStatus)>,
}

impl Leg {
    fn offchain(&self) -> bool {
        self.channel.is_open()
            && self.channel.is_online(Side::A)
            && self.channel.is_online(Side::B)
    }

    fn interval(&self) -> u64 {
        self.ledger.params().block_interval_secs
    }
}

/// A running swap over two channels and their ledgers.
#[derive(Debug, Clone)]
pub struct SwapSession {
    legs: [Leg; 2],
    preimage: Preimage,
    responder_knows: bool,
    clock: u64,
}

impl SwapSession {
    /// Locks both legs. `initiator` must be a party of both channels and
    /// the other party of `ch_x` the other party of `ch_y`.
    pub fn open(
        (ch_x, ledger_x): (Channel, Ledger),
        (ch_y, ledger_y): (Channel, Ledger),
        initiator: &NodeId,
        terms: &SwapTerms,
        preimage: Preimage,
    ) -> Result<Self, SwapError> {
        if ledger_x.asset_id() == ledger_y.asset_id() {
            return Err(SwapError::SameAsset);
        }
        let ix = ch_x.side_of(initiator).ok_or(SwapError::NotParticipant)?;
        let iy = ch_y.side_of(initiator).ok_or(SwapError::NotParticipant)?;
        if ch_x.node(ix.other()) != ch_y.node(iy.other()) {
            return Err(SwapError::NotParticipant);
        }
        let ivx = ledger_x.params().block_interval_secs;
        let ivy = ledger_y.params().block_interval_secs;
        let short_ticks = terms.expiry_y_blocks * ivy;
        let long_ticks = terms.expiry_x_blocks * ivx;
        let delta_ticks = terms.delta_blocks * ivx;
        if short_ticks + delta_ticks > long_ticks {
            return Err(SwapError::BadTimeoutOrdering {
                short_ticks,
                long_ticks,
                delta_ticks,
            });
        }
        let hash: PaymentHash = preimage.payment_hash();
        let mut ch_x = ch_x;
        let mut ch_y = ch_y;

        let expiry_x = ledger_x.height() + terms.expiry_x_blocks;
        let hx = ch_x.add_htlc(ix, hash, terms.amount_x_msat, expiry_x, ledger_x.height())?;
        let expiry_y = ledger_y.height() + terms.expiry_y_blocks;
        let responder_y = iy.other();
        let hy = match ch_y.add_htlc(
            responder_y,
            hash,
            terms.amount_y_msat,
            expiry_y,
            ledger_y.height(),
        ) {
            Ok(id) => id,
            Err(_) => {
                ch_x.fail_htlc(hx)?;
                return Err(SwapError::ResponderDeclined);
            }
        };
        Ok(Self {
            legs: [
                Leg {
                    channel: ch_x,
                    ledger: ledger_x,
                    htlc: hx,
                    expiry: expiry_x,
                    sides: [ix, ix.other()],
                    next_block_tick: ivx,
                    status: LegStatus::Pending,
                    pending_tx: None,
                },
                Leg {
                    channel: ch_y,
                    ledger: ledger_y,
                    htlc: hy,
                    expiry: expiry_y,
                    sides: [iy, responder_y],
                    next_block_tick: ivy,
                    status: LegStatus::Pending,
                    pending_tx: None,
                },
            ],
            preimage,
            responder_knows: false,
            clock: 0,
        })
    }

    pub fn apply(&mut self, event: SwapEvent) {
        for leg in &mut self.legs {
            leg.channel.set_tick(self.clock);
        }
        match event {
            SwapEvent::Reveal => self.reveal(),
            SwapEvent::OfflineInitiator => self.go_offline(INITIATOR),
            SwapEvent::OfflineResponder => self.go_offline(RESPONDER),
            SwapEvent::Tick => self.tick(),
        }
        self.react();
    }

    /// Ticks until both legs are resolved or `max_ticks` have passed.
    pub fn drain(&mut self, max_ticks: u64) -> SwapOutcome {
        for _ in 0..max_ticks {
            if !self.outcome_is_pending() {
                break;
            }
            self.apply(SwapEvent::Tick);
        }
        self.outcome()
    }

    /// Enough ticks for any open leg to expire and be refunded on-chain.
    pub fn drain_bound(&self) -> u64 {
        let blocks = self.legs.iter().map(|l| l.expiry).max().unwrap_or(0) + 4;
        let slowest = self.legs.iter().map(Leg::interval).max().unwrap_or(1);
        let fastest = self.legs.iter().map(Leg::interval).min().unwrap_or(1).max(1);
        blocks * slowest.div_ceil(fastest) + 4
    }

    pub fn statuses(&self) -> (LegStatus, LegStatus) {
        (self.legs[X].status, self.legs[Y].status)
    }

    pub fn outcome(&self) -> SwapOutcome {
        use LegStatus::*;
        let (x, y) = self.statuses();
        match (x, y) {
            (Settled, Settled) => SwapOutcome::BothSettled,
            (Refunded, Refunded) => SwapOutcome::BothRefunded,
            (Pending, _) | (_, Pending) => SwapOutcome::Unresolved { x, y },
            _ => SwapOutcome::Mixed { x, y },
        }
    }

    fn outcome_is_pending(&self) -> bool {
        matches!(self.outcome(), SwapOutcome::Unresolved { .. })
    }

    pub fn channel_x(&self) -> &Channel {
        &self.legs[X].channel
    }

    pub fn channel_y(&self) -> &Channel {
        &self.legs[Y].channel
    }

    pub fn ledger_x(&self) -> &Ledger {
        &self.legs[X].ledger
    }

    pub fn ledger_y(&self) -> &Ledger {
        &self.legs[Y].ledger
    }

    pub fn into_parts(self) -> [(Channel, Ledger); 2] {
        self.legs.map(|l| (l.channel, l.ledger))
    }

    fn reveal(&mut self) {
        let preimage = self.preimage;
        let leg = &mut self.legs[Y];
        if leg.status != LegStatus::Pending || leg.pending_tx.is_some() {
            return;
        }
        let height = leg.ledger.height();
        if leg.offchain() {
            if leg.channel.settle_htlc(leg.htlc, preimage, height).is_ok() {
                leg.status = LegStatus::Settled;
                self.responder_knows = true;
            }
        } else if let Ok(txid) = leg
            .channel
            .claim_htlc_onchain(leg.htlc, preimage, &mut leg.ledger)
        {
            leg.pending_tx = Some((txid, LegStatus::Settled));
        }
    }

    fn go_offline(&mut self, who: usize) {
        for leg in &mut self.legs {
            let side = leg.sides[who];
            if leg.channel.is_open() {
                let _ = leg.channel.on_party_offline(side, &mut leg.ledger);
            } else {
                leg.channel.set_online(side, false);
            }
        }
    }

    fn tick(&mut self) {
        let next = self.legs.iter().map(|l| l.next_block_tick).min().unwrap_or(0);
        self.clock = next;
        for leg in &mut self.legs {
            if leg.next_block_tick == next {
                leg.ledger.mine_block();
                leg.next_block_tick += leg.interval();
            }
            if let Some((txid, target)) = leg.pending_tx {
                if leg.ledger.confirmation_height(&txid).is_some() {
                    leg.status = target;
                    leg.pending_tx = None;
                } else if !leg.ledger.in_mempool(&txid) {
                    leg.pending_tx = None;
                }
            }
        }
        if self.legs[Y].status == LegStatus::Settled {
            self.responder_knows = true;
        }
    }

    /// Honest reactions after every event.
    fn react(&mut self) {
        let preimage = self.preimage;
        if self.responder_knows {
            let leg = &mut self.legs[X];
            if leg.status == LegStatus::Pending && leg.pending_tx.is_none() {
                let height = leg.ledger.height();
                if leg.offchain() {
                    if leg.channel.settle_htlc(leg.htlc, preimage, height).is_ok() {
                        leg.status = LegStatus::Settled;
                    }
                } else if let Ok(txid) =
                    leg.channel
                        .claim_htlc_onchain(leg.htlc, preimage, &mut leg.ledger)
                {
                    leg.pending_tx = Some((txid, LegStatus::Settled));
                }
            }
        }
        for leg in &mut self.legs {
            if leg.status != LegStatus::Pending || leg.pending_tx.is_some() {
                continue;
            }
            let height = leg.ledger.height();
            if leg.offchain() {
                if height >= leg.expiry && leg.channel.expire_htlc(leg.htlc, height).is_ok() {
                    leg.status = LegStatus::Refunded;
                }
            } else if let Ok(txid) = leg.channel.refund_htlc_onchain(leg.htlc, &mut leg.ledger) {
                leg.pending_tx = Some((txid, LegStatus::Refunded));
            }
        }
    }
}

/// Runs a swap between honest parties: locks both legs, reveals (or, with
/// `reveal = false`, never reveals) and waits for both legs to resolve.
/// The channels and ledgers are updated in place.
pub fn atomic_swap(
    x: (&mut Channel, &mut Ledger),
    y: (&mut Channel, &mut Ledger),
    initiator: &NodeId,
    terms: &SwapTerms,
    preimage: Preimage,
    reveal: bool,
) -> Result<SwapOutcome, SwapError> {
    let mut session = SwapSession::open(
        (x.0.clone(), x.1.clone()),
        (y.0.clone(), y.1.clone()),
        initiator,
        terms,
        preimage,
    )?;
    if reveal {
        session.apply(SwapEvent::Reveal);
    }
    let outcome = session.drain(session.drain_bound());
    let [(cx, lx), (cy, ly)] = session.into_parts();
    *x.0 = cx;
    *x.1 = lx;
    *y.0 = cy;
    *y.1 = ly;
    Ok(outcome)
}

/// Every ordering of every subset of the distinct events, interleaved with
/// up to `max_ticks` ticks.
pub fn interleavings(max_ticks: usize) -> Vec<Vec<SwapEvent>> {
    let distinct = [
        SwapEvent::Reveal,
        SwapEvent::OfflineInitiator,
        SwapEvent::OfflineResponder,
    ];
    let mut out = Vec::new();
    for ticks in 0..=max_ticks {
        let mut seq = Vec::new();
        extend(&distinct, [false; 3], ticks, &mut seq, &mut out);
    }
    out
}

fn extend(
    distinct: &[SwapEvent; 3],
    used: [bool; 3],
    ticks_left: usize,
    seq: &mut Vec<SwapEvent>,
    out: &mut Vec<Vec<SwapEvent>>,
) {
    if ticks_left == 0 {
        out.push(seq.clone());
    } else {
        seq.push(SwapEvent::Tick);
        extend(distinct, used, ticks_left - 1, seq, out);
        seq.pop();
    }
    for (i, e) in distinct.iter().enumerate() {
        if used[i] {
            continue;
        }
        let mut u = used;
        u[i] = true;
        seq.push(*e);
        extend(distinct, u, ticks_left, seq, out);
        seq.pop();
    }
}

/// Plays every sequence from [`interleavings`] against a copy of `base`,
/// drains it, and tallies the outcomes.
pub fn explore(base: &SwapSession, max_ticks: usize) -> BTreeMap<SwapOutcome, usize> {
    let mut tally = BTreeMap::new();
    let bound = base.drain_bound();
    for seq in interleavings(max_ticks) {
        let mut s = base.clone();
        for e in seq {
            s.apply(e);
        }
        *tally.entry(s.drain(bound)).or_insert(0) += 1;
    }
    tally
}
