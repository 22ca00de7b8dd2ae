use crate::basechain::{Ledger, OutPoint, Output, SpendCondition, Transaction, TxIn, Txid, Witness};
use crate::basechain::TX_FEE_MSAT;
use crate::crypto::{Preimage, Signature};
use crate::htlc::HtlcId;

use super::{Broadcast, Channel, ChannelError, ChannelState, CommitmentTx, EventKind, Side};

/// Fills every input's witness once the (witness-independent) txid is known.
fn signed(mut tx: Transaction, witness: impl Fn(usize, &Txid) -> Witness) -> Transaction {
    let txid = tx.txid();
    for (i, input) in tx.inputs.iter_mut().enumerate() {
        input.witness = witness(i, &txid);
    }
    tx
}

fn unsigned_input(prevout: OutPoint) -> TxIn {
    TxIn {
        prevout,
        witness: Witness::KeySig(Signature::EMPTY),
    }
}

impl Channel {
    /// Both parties sign a transaction paying each their balance, with the
    /// fee split in proportion to the balances.
    pub fn cooperative_close(&mut self, ledger: &mut Ledger) -> Result<Txid, ChannelError> {
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
        if !self.htlcs.is_empty() {
            return Err(ChannelError::HtlcsPending);
        }
        if self.capacity < TX_FEE_MSAT {
            return Err(ChannelError::CapacityBelowFee);
        }
        let fee_a =
            (u128::from(TX_FEE_MSAT) * u128::from(self.balances[0]) / u128::from(self.capacity)) as u64;
        let fees = [fee_a, TX_FEE_MSAT - fee_a];
        let outputs = [Side::A, Side::B]
            .into_iter()
            .filter_map(|s| {
                let amount = self.balances[s.idx()] - fees[s.idx()];
                (amount > 0).then(|| Output::single_key(amount, self.public_key(s)))
            })
            .collect();
        let tx = Transaction {
            inputs: vec![unsigned_input(self.funding)],
            outputs,
            locktime_height: 0,
        };
        let keys = self.keys.clone();
        let tx = signed(tx, |_, id| {
            Witness::Sigs2of2(keys[0].sign(&id.0), keys[1].sign(&id.0))
        });
        let txid = ledger.submit_transaction(tx)?;
        self.state = ChannelState::CooperativeClosed;
        self.close_txid = Some(txid);
        self.record(EventKind::CooperativeClose, self.version);
        Ok(txid)
    }

    /// `broadcaster` publishes its latest fully signed commitment. An
    /// update still in flight is abandoned.
    pub fn unilateral_close(
        &mut self,
        broadcaster: Side,
        ledger: &mut Ledger,
    ) -> Result<Txid, ChannelError> {
        match self.state {
            ChannelState::Open | ChannelState::PendingUpdate => {}
            other => return Err(ChannelError::ChannelNotOpen(other)),
        }
        if !self.online[broadcaster.idx()] {
            return Err(ChannelError::PartyOffline(broadcaster));
        }
        let c = &self.parties[broadcaster.idx()].latest;
        let version = c.version_n;
        let tx = c.signed_tx().ok_or(ChannelError::NoSignedCommitment)?;
        let txid = ledger.submit_transaction(tx)?;
        self.in_flight = None;
        for p in &mut self.parties {
            p.pending = None;
        }
        self.mark_broadcast(broadcaster, version, txid, ledger.height());
        Ok(txid)
    }

    /// Publishes `cheater`'s revoked commitment of `version`.
    pub fn broadcast_revoked(
        &mut self,
        cheater: Side,
        version: u64,
        ledger: &mut Ledger,
    ) -> Result<Txid, ChannelError> {
        match self.state {
            ChannelState::Open => {}
            other => return Err(ChannelError::ChannelNotOpen(other)),
        }
        let c = self.parties[cheater.idx()]
            .history
            .get(version as usize)
            .ok_or(ChannelError::UnknownCommitment)?;
        let tx = c.signed_tx().ok_or(ChannelError::NoSignedCommitment)?;
        let txid = ledger.submit_transaction(tx)?;
        self.mark_broadcast(cheater, version, txid, ledger.height());
        Ok(txid)
    }

    fn mark_broadcast(&mut self, holder: Side, version: u64, txid: Txid, height: u64) {
        self.broadcast = Some(Broadcast {
            holder,
            version,
            txid,
        });
        self.state = ChannelState::UnilateralClosing {
            broadcaster: holder,
            broadcast_height: height,
        };
        self.record(EventKind::UnilateralClose(holder), version);
    }

    /// `side` has gone offline. The other party, if still online, closes
    /// unilaterally.
    pub fn on_party_offline(
        &mut self,
        side: Side,
        ledger: &mut Ledger,
    ) -> Result<Txid, ChannelError> {
        self.online[side.idx()] = false;
        self.record(EventKind::PartyOffline(side), self.version);
        if !self.online[side.other().idx()] {
            return Err(ChannelError::BothOffline);
        }
        self.unilateral_close(side.other(), ledger)
    }

    fn broadcast_commitment(&self) -> Result<(Broadcast, &CommitmentTx), ChannelError> {
        let b = self.broadcast.ok_or(ChannelError::NoSignedCommitment)?;
        let c = self
            .commitment(b.holder, b.version)
            .ok_or(ChannelError::UnknownCommitment)?;
        Ok((b, c))
    }

    fn confirmed_broadcast(
        &self,
        ledger: &Ledger,
    ) -> Result<(Broadcast, &CommitmentTx, u64), ChannelError> {
        let (b, c) = self.broadcast_commitment()?;
        let conf = ledger
            .confirmation_height(&b.txid)
            .ok_or(ChannelError::NotConfirmed)?;
        Ok((b, c, conf))
    }

    /// The broadcaster collects its own balance once the delay has passed.
    /// Succeeding on a revoked commitment is a successful cheat.
    pub fn sweep_delayed(&mut self, side: Side, ledger: &mut Ledger) -> Result<Txid, ChannelError> {
        let (b, c, conf) = self.confirmed_broadcast(ledger)?;
        if b.holder != side {
            return Err(ChannelError::UnknownCommitment);
        }
        let vout = c.holder_vout.ok_or(ChannelError::NothingToSweep)?;
        let ready_at = conf + u64::from(self.to_self_delay);
        if ledger.height() + 1 < ready_at {
            return Err(ChannelError::DelayNotElapsed { ready_at });
        }
        if c.to_holder_msat <= TX_FEE_MSAT {
            return Err(ChannelError::NothingToSweep);
        }
        let tx = Transaction {
            inputs: vec![unsigned_input(OutPoint::new(b.txid, vout))],
            outputs: vec![Output::single_key(
                c.to_holder_msat - TX_FEE_MSAT,
                self.public_key(side),
            )],
            locktime_height: 0,
        };
        let key = self.keys[side.idx()].clone();
        let tx = signed(tx, |_, id| Witness::LocalAfterDelay(key.sign(&id.0)));
        let txid = ledger.submit_transaction(tx)?;
        let revoked = b.version < self.parties[side.idx()].latest.version_n;
        self.close_txid = Some(txid);
        if revoked {
            self.record(EventKind::CheatSucceeded { cheater: side }, b.version);
        } else {
            self.record(EventKind::DelayedSweep(side), b.version);
        }
        Ok(txid)
    }

    /// `victim` answers a confirmed revoked commitment of its counterparty by
    /// sweeping every remaining output of it with the disclosed secret.
    pub fn punish(&mut self, victim: Side, ledger: &mut Ledger) -> Result<Txid, ChannelError> {
        let (b, c, conf) = self.confirmed_broadcast(ledger)?;
        if b.holder != victim.other() {
            return Err(ChannelError::UnknownCommitment);
        }
        let secret = self.parties[victim.idx()]
            .received_revocations
            .get(&b.version)
            .ok_or(ChannelError::NoRevocationSecret { version: b.version })?
            .secret
            .clone();
        if let Some(vout) = c.holder_vout {
            let spent = ledger.utxo(&OutPoint::new(b.txid, vout)).is_none();
            if spent || ledger.height() >= conf + u64::from(self.to_self_delay) {
                return Err(ChannelError::DelayElapsed);
            }
        }
        let mut inputs = Vec::new();
        let mut total = 0u64;
        for (vout, out) in c.tx.outputs.iter().enumerate() {
            let op = OutPoint::new(b.txid, vout as u32);
            if ledger.utxo(&op).is_none() {
                continue;
            }
            let own = matches!(out.condition, SpendCondition::SingleKey(_));
            inputs.push((op, own));
            total += out.amount_msat;
        }
        if total <= TX_FEE_MSAT {
            return Err(ChannelError::NothingToSweep);
        }
        let tx = Transaction {
            inputs: inputs.iter().map(|(op, _)| unsigned_input(*op)).collect(),
            outputs: vec![Output::single_key(
                total - TX_FEE_MSAT,
                self.public_key(victim),
            )],
            locktime_height: 0,
        };
        let key = self.keys[victim.idx()].clone();
        let tx = signed(tx, |i, id| {
            if inputs[i].1 {
                Witness::KeySig(key.sign(&id.0))
            } else {
                Witness::Revocation(secret.sign(&id.0))
            }
        });
        let txid = ledger.submit_transaction(tx)?;
        self.state = ChannelState::Punished { victim };
        self.close_txid = Some(txid);
        self.record(EventKind::Punished { victim }, b.version);
        Ok(txid)
    }

    /// The receiver of HTLC `id` claims its output on the broadcast
    /// commitment with the preimage.
    pub fn claim_htlc_onchain(
        &mut self,
        id: HtlcId,
        preimage: Preimage,
        ledger: &mut Ledger,
    ) -> Result<Txid, ChannelError> {
        let (b, c, _) = self.confirmed_broadcast(ledger)?;
        let h = c.htlc(id).ok_or(ChannelError::UnknownHtlc(id))?.clone();
        if preimage.payment_hash() != h.params.payment_hash {
            return Err(ChannelError::WrongPreimage);
        }
        if ledger.height() + 1 >= h.params.expiry_height {
            return Err(ChannelError::PastExpiry {
                expiry: h.params.expiry_height,
                height: ledger.height(),
            });
        }
        let receiver = h.params.offerer.other();
        let txid = self.spend_htlc(b.txid, &h, receiver, ledger, |sig| {
            Witness::HashlockClaim(preimage, sig)
        })?;
        self.preimages.insert(h.params.payment_hash, preimage);
        self.record(EventKind::HtlcClaimedOnchain(id), b.version);
        Ok(txid)
    }

    /// The offerer of HTLC `id` takes its output back after expiry.
    pub fn refund_htlc_onchain(
        &mut self,
        id: HtlcId,
        ledger: &mut Ledger,
    ) -> Result<Txid, ChannelError> {
        let (b, c, _) = self.confirmed_broadcast(ledger)?;
        let h = c.htlc(id).ok_or(ChannelError::UnknownHtlc(id))?.clone();
        if ledger.height() + 1 < h.params.expiry_height {
            return Err(ChannelError::NotYetExpired {
                expiry: h.params.expiry_height,
                height: ledger.height(),
            });
        }
        let txid = self.spend_htlc(b.txid, &h, h.params.offerer, ledger, Witness::HashlockRefund)?;
        self.record(EventKind::HtlcRefundedOnchain(id), b.version);
        Ok(txid)
    }

    fn spend_htlc(
        &self,
        commitment: Txid,
        h: &super::HtlcOutput,
        to: Side,
        ledger: &mut Ledger,
        witness: impl Fn(Signature) -> Witness,
    ) -> Result<Txid, ChannelError> {
        if h.params.amount_msat <= TX_FEE_MSAT {
            return Err(ChannelError::NothingToSweep);
        }
        let tx = Transaction {
            inputs: vec![unsigned_input(OutPoint::new(commitment, h.vout))],
            outputs: vec![Output::single_key(
                h.params.amount_msat - TX_FEE_MSAT,
                self.public_key(to),
            )],
            locktime_height: 0,
        };
        let key = &self.keys[to.idx()];
        let tx = signed(tx, |_, id| witness(key.sign(&id.0)));
        Ok(ledger.submit_transaction(tx)?)
    }
}
