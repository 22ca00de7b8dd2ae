use std::cmp::Ordering;

use crate::htlc::{HtlcId, HtlcParams};

use super::commitment::{CommitmentSpec, CommitmentTx};
use super::{AlgorithmStep, Channel, ChannelError, ChannelState, EventKind, RevocationSecret, Side};

/// Why the commitments are advancing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UpdateKind {
    Transfer,
    AddHtlc(HtlcId),
    SettleHtlc(HtlcId),
    FailHtlc(HtlcId),
    ExpireHtlc(HtlcId),
}

#[derive(Debug, Clone)]
pub(crate) struct InFlight {
    initiator: Side,
    next: Option<AlgorithmStep>,
    balances: [u64; 2],
    htlcs: Vec<HtlcParams>,
    kind: UpdateKind,
    counterparty_commitment: Option<CommitmentTx>,
    initiator_commitment: Option<CommitmentTx>,
}

impl Channel {
    /// Transfers `amount_msat` from `payer` to the other party through the
    /// full eight-step exchange. No base-chain interaction.
    pub fn update_balance(&mut self, payer: Side, amount_msat: u64) -> Result<(), ChannelError> {
        self.check_can_update()?;
        let available = self.balances[payer.idx()];
        if amount_msat > available {
            return Err(ChannelError::InsufficientChannelBalance {
                needed: amount_msat,
                available,
            });
        }
        let mut balances = self.balances;
        balances[payer.idx()] -= amount_msat;
        balances[payer.other().idx()] += amount_msat;
        let htlcs = self.htlcs.clone();
        self.run_update(payer, balances, htlcs, UpdateKind::Transfer)?;
        self.offchain_transfers += 1;
        Ok(())
    }

    /// Starts a transfer but executes none of its steps; drive it with
    /// [`Channel::step_update`]. While it is in flight the channel is
    /// [`ChannelState::PendingUpdate`] and rejects other updates.
    pub fn begin_transfer(&mut self, payer: Side, amount_msat: u64) -> Result<(), ChannelError> {
        self.check_can_update()?;
        let available = self.balances[payer.idx()];
        if amount_msat > available {
            return Err(ChannelError::InsufficientChannelBalance {
                needed: amount_msat,
                available,
            });
        }
        let mut balances = self.balances;
        balances[payer.idx()] -= amount_msat;
        balances[payer.other().idx()] += amount_msat;
        let htlcs = self.htlcs.clone();
        self.begin(payer, balances, htlcs, UpdateKind::Transfer)
    }

    /// Both parties try to pay at once. The party with the
    /// lexicographically smaller node id goes first; the other is deferred
    /// and retried afterwards. Results are returned in argument order.
    pub fn update_balance_concurrent(
        &mut self,
        first: (Side, u64),
        second: (Side, u64),
    ) -> [Result<(), ChannelError>; 2] {
        let first_wins = self.nodes[first.0.idx()].cmp(&self.nodes[second.0.idx()]) != Ordering::Greater;
        let (winner, loser) = if first_wins {
            (first, second)
        } else {
            (second, first)
        };
        let win = self.update_balance(winner.0, winner.1);
        self.record(EventKind::ConcurrentUpdateDeferred(loser.0), self.version);
        let lose = self.update_balance(loser.0, loser.1);
        if first_wins {
            [win, lose]
        } else {
            [lose, win]
        }
    }

    pub(crate) fn run_update(
        &mut self,
        initiator: Side,
        balances: [u64; 2],
        htlcs: Vec<HtlcParams>,
        kind: UpdateKind,
    ) -> Result<(), ChannelError> {
        self.begin(initiator, balances, htlcs, kind)?;
        while self.in_flight.is_some() {
            self.step_update()?;
        }
        Ok(())
    }

    fn begin(
        &mut self,
        initiator: Side,
        balances: [u64; 2],
        htlcs: Vec<HtlcParams>,
        kind: UpdateKind,
    ) -> Result<(), ChannelError> {
        self.check_can_update()?;
        let locked: u64 = htlcs.iter().map(|h| h.amount_msat).sum();
        if balances[0] + balances[1] + locked != self.capacity {
            return Err(ChannelError::ProtocolViolation(
                "proposed state does not conserve capacity",
            ));
        }
        self.in_flight = Some(InFlight {
            initiator,
            next: Some(AlgorithmStep::BuildCounterpartyCommitment),
            balances,
            htlcs,
            kind,
            counterparty_commitment: None,
            initiator_commitment: None,
        });
        self.state = ChannelState::PendingUpdate;
        Ok(())
    }

    /// Executes the next protocol step of the in-flight update and returns
    /// it. A failing step abandons the update and leaves the channel at its
    /// previous version.
    pub fn step_update(&mut self) -> Result<AlgorithmStep, ChannelError> {
        let Some(fl) = self.in_flight.take() else {
            return Err(ChannelError::NoUpdateInFlight);
        };
        let result = self.apply_step(fl);
        if result.is_err() {
            for p in &mut self.parties {
                p.pending = None;
            }
            self.state = ChannelState::Open;
        }
        result
    }

    fn apply_step(&mut self, mut fl: InFlight) -> Result<AlgorithmStep, ChannelError> {
        let step = fl.next.expect("finished updates are not kept in flight");
        let initiator = fl.initiator;
        let cp = initiator.other();
        let n = self.version;
        match step {
            AlgorithmStep::BuildCounterpartyCommitment => {
                fl.counterparty_commitment = Some(self.build_commitment(cp, n + 1, &fl));
            }
            AlgorithmStep::SignCounterpartyCommitment => {
                let c = fl.counterparty_commitment.as_mut().expect("built in step 1");
                c.counterparty_signature = Some(self.keys[initiator.idx()].sign(&c.txid().0));
            }
            AlgorithmStep::CounterpartyCountersigns => {
                let c = fl.counterparty_commitment.as_mut().expect("built in step 1");
                self.countersign(cp, c)?;
                self.parties[cp.idx()].pending = Some(c.clone());
            }
            AlgorithmStep::BuildInitiatorCommitment => {
                fl.initiator_commitment = Some(self.build_commitment(initiator, n + 1, &fl));
            }
            AlgorithmStep::SignInitiatorCommitment => {
                let c = fl.initiator_commitment.as_mut().expect("built in step 4");
                c.counterparty_signature = Some(self.keys[cp.idx()].sign(&c.txid().0));
            }
            AlgorithmStep::InitiatorCountersigns => {
                let c = fl.initiator_commitment.as_mut().expect("built in step 4");
                self.countersign(initiator, c)?;
                self.parties[initiator.idx()].pending = Some(c.clone());
            }
            AlgorithmStep::InitiatorRevokes => self.revoke(initiator, n)?,
            AlgorithmStep::CounterpartyRevokes => self.revoke(cp, n)?,
        }
        let version = if step < AlgorithmStep::InitiatorRevokes {
            n + 1
        } else {
            n
        };
        self.record(EventKind::Step { step, initiator }, version);
        fl.next = step.next();
        if fl.next.is_none() {
            self.version = n + 1;
            self.balances = fl.balances;
            self.htlcs = fl.htlcs;
            self.state = ChannelState::Open;
            self.record(Channel::htlc_event(&fl.kind), self.version);
        } else {
            self.in_flight = Some(fl);
        }
        Ok(step)
    }

    fn build_commitment(&mut self, holder: Side, version: u64, fl: &InFlight) -> CommitmentTx {
        let revocation_key = self.own_secret(holder, version).public_key();
        let pks = [self.keys[0].public_key(), self.keys[1].public_key()];
        CommitmentTx::build(CommitmentSpec {
            funding: self.funding,
            holder,
            version,
            balances: fl.balances,
            htlcs: &fl.htlcs,
            keys: [&pks[0], &pks[1]],
            revocation_key,
            to_self_delay: self.to_self_delay,
        })
    }

    /// `holder` checks the counterparty's signature on its new commitment,
    /// adds its own and retains it.
    fn countersign(&mut self, holder: Side, c: &mut CommitmentTx) -> Result<(), ChannelError> {
        let sighash = c.txid();
        let sig = c
            .counterparty_signature
            .ok_or(ChannelError::ProtocolViolation("commitment arrived unsigned"))?;
        if !self.keys[holder.other().idx()]
            .public_key()
            .verify(&sighash.0, &sig)
        {
            return Err(ChannelError::ProtocolViolation("bad counterparty signature"));
        }
        c.holder_signature = Some(self.keys[holder.idx()].sign(&sighash.0));
        self.commitment_index.insert(sighash, (holder, c.version_n));
        Ok(())
    }

    /// `owner` discloses the secret of its version-`n` commitment, which the
    /// counterparty checks against that commitment's revocation key. The old
    /// commitment is then replaced by the retained new one.
    fn revoke(&mut self, owner: Side, n: u64) -> Result<(), ChannelError> {
        // a party that already revoked holds its new commitment as latest
        let both_signed = [Side::A, Side::B].iter().all(|s| {
            let p = &self.parties[s.idx()];
            match &p.pending {
                Some(c) => c.is_fully_signed(),
                None => *s != owner && p.latest.version_n == n + 1,
            }
        });
        if !both_signed {
            return Err(ChannelError::ProtocolViolation(
                "revocation before both new commitments are countersigned",
            ));
        }
        let secret = self.own_secret(owner, n);
        let receiver = owner.other();
        if secret.public_key() != self.parties[owner.idx()].latest.revocation_key {
            return Err(ChannelError::ProtocolViolation("revocation secret mismatch"));
        }
        self.parties[receiver.idx()].received_revocations.insert(
            n,
            RevocationSecret {
                version_n: n,
                secret,
                owner,
            },
        );
        let party = &mut self.parties[owner.idx()];
        let next = party.pending.take().expect("checked above");
        let old = std::mem::replace(&mut party.latest, next);
        party.history.push(old);
        Ok(())
    }
}
