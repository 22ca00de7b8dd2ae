//! Hashed-timelock contracts carried on channels, invoices, and the
//! two-chain atomic swap built from a pair of HTLCs sharing one hash.

mod invoice;
pub mod swap;

use std::collections::BTreeMap;

pub use invoice::{Invoice, InvoiceParseError};
pub use swap::{atomic_swap, SwapError, SwapOutcome, SwapTerms};

use crate::channel::{Channel, ChannelError, EventKind, Side, UpdateKind};
use crate::crypto::{PaymentHash, Preimage};
use crate::NodeId;

/// Default expiry margin per hop or swap leg, in blocks.
pub const DEFAULT_DELTA_BLOCKS: u64 = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct HtlcId(pub u64);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HtlcParams {
    pub htlc_id: HtlcId,
    pub payment_hash: PaymentHash,
    pub amount_msat: u64,
    pub expiry_height: u64,
    pub offerer: Side,
}

impl Channel {
    /// Locks `amount_msat` from `offerer`'s balance into a new HTLC and
    /// advances both commitments one version through the update protocol.
    pub fn add_htlc(
        &mut self,
        offerer: Side,
        payment_hash: PaymentHash,
        amount_msat: u64,
        expiry_height: u64,
        current_height: u64,
    ) -> Result<HtlcId, ChannelError> {
        self.check_can_update()?;
        if amount_msat == 0 {
            return Err(ChannelError::ZeroAmountHtlc);
        }
        if expiry_height <= current_height {
            return Err(ChannelError::ExpiredBeforeAdd {
                expiry: expiry_height,
                height: current_height,
            });
        }
        let available = self.balances[offerer.idx()];
        if amount_msat > available {
            return Err(ChannelError::InsufficientChannelBalance {
                needed: amount_msat,
                available,
            });
        }
        let id = HtlcId(self.next_htlc_id);
        let mut balances = self.balances;
        balances[offerer.idx()] -= amount_msat;
        let mut htlcs = self.htlcs.clone();
        htlcs.push(HtlcParams {
            htlc_id: id,
            payment_hash,
            amount_msat,
            expiry_height,
            offerer,
        });
        self.run_update(offerer, balances, htlcs, UpdateKind::AddHtlc(id))?;
        self.next_htlc_id += 1;
        Ok(id)
    }

    /// Pays a pending HTLC to its receiver against the matching preimage.
    pub fn settle_htlc(
        &mut self,
        id: HtlcId,
        preimage: Preimage,
        current_height: u64,
    ) -> Result<(), ChannelError> {
        self.check_can_update()?;
        let h = self.pending_htlc(id)?.clone();
        if preimage.payment_hash() != h.payment_hash {
            return Err(ChannelError::WrongPreimage);
        }
        if current_height >= h.expiry_height {
            return Err(ChannelError::PastExpiry {
                expiry: h.expiry_height,
                height: current_height,
            });
        }
        let receiver = h.offerer.other();
        let mut balances = self.balances;
        balances[receiver.idx()] += h.amount_msat;
        let htlcs = self.htlcs_without(id);
        self.run_update(receiver, balances, htlcs, UpdateKind::SettleHtlc(id))?;
        self.preimages.insert(h.payment_hash, preimage);
        self.offchain_transfers += 1;
        Ok(())
    }

    /// Cooperatively removes a pending HTLC, refunding the offerer.
    pub fn fail_htlc(&mut self, id: HtlcId) -> Result<(), ChannelError> {
        self.check_can_update()?;
        let h = self.pending_htlc(id)?.clone();
        self.refund(h, UpdateKind::FailHtlc(id))
    }

    /// Refunds an HTLC whose expiry has been reached. If the counterparty is
    /// unavailable the refund has to go on-chain instead, through
    /// [`Channel::unilateral_close`] and [`Channel::refund_htlc_onchain`].
    pub fn expire_htlc(&mut self, id: HtlcId, current_height: u64) -> Result<(), ChannelError> {
        let h = self.pending_htlc(id)?.clone();
        if current_height < h.expiry_height {
            return Err(ChannelError::NotYetExpired {
                expiry: h.expiry_height,
                height: current_height,
            });
        }
        self.check_can_update()?;
        self.refund(h, UpdateKind::ExpireHtlc(id))
    }

    fn refund(&mut self, h: HtlcParams, kind: UpdateKind) -> Result<(), ChannelError> {
        let mut balances = self.balances;
        balances[h.offerer.idx()] += h.amount_msat;
        let htlcs = self.htlcs_without(h.htlc_id);
        let initiator = match kind {
            UpdateKind::ExpireHtlc(_) => h.offerer,
            _ => h.offerer.other(),
        };
        self.run_update(initiator, balances, htlcs, kind)
    }

    pub fn pending_htlc(&self, id: HtlcId) -> Result<&HtlcParams, ChannelError> {
        self.htlcs
            .iter()
            .find(|h| h.htlc_id == id)
            .ok_or(ChannelError::UnknownHtlc(id))
    }

    fn htlcs_without(&self, id: HtlcId) -> Vec<HtlcParams> {
        self.htlcs.iter().filter(|h| h.htlc_id != id).cloned().collect()
    }

    /// Preimages this channel has seen settle, for upstream forwarding.
    pub fn learned_preimage(&self, hash: &PaymentHash) -> Option<Preimage> {
        self.preimages.get(hash).copied()
    }

    pub(crate) fn htlc_event(kind: &UpdateKind) -> EventKind {
        match kind {
            UpdateKind::Transfer => EventKind::Updated,
            UpdateKind::AddHtlc(id) => EventKind::HtlcAdded(*id),
            UpdateKind::SettleHtlc(id) => EventKind::HtlcSettled(*id),
            UpdateKind::FailHtlc(id) => EventKind::HtlcFailed(*id),
            UpdateKind::ExpireHtlc(id) => EventKind::HtlcExpired(*id),
        }
    }
}

/// Preimages held by invoice issuers, keyed by payment hash.
#[derive(Debug, Clone, Default)]
pub struct InvoiceBook {
    entries: BTreeMap<PaymentHash, (NodeId, Preimage)>,
}

impl InvoiceBook {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registers an invoice issued by `destination` and returns it.
    pub fn issue(
        &mut self,
        destination: NodeId,
        asset_id: crate::AssetId,
        amount_msat: u64,
        preimage: Preimage,
    ) -> Invoice {
        let payment_hash = preimage.payment_hash();
        self.entries
            .insert(payment_hash, (destination.clone(), preimage));
        Invoice {
            asset_id,
            amount_msat,
            payment_hash,
            destination,
        }
    }

    /// The preimage, if `node` issued the invoice for `hash`.
    pub fn preimage_for(&self, node: &NodeId, hash: &PaymentHash) -> Option<Preimage> {
        self.entries
            .get(hash)
            .filter(|(dest, _)| dest == node)
            .map(|(_, p)| *p)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}
