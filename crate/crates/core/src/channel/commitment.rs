use crate::basechain::{
    OutPoint, Output, SpendCondition, Transaction, TxIn, Txid, Witness, TX_FEE_MSAT,
};
use crate::crypto::{PublicKey, Signature};
use crate::htlc::{HtlcId, HtlcParams};

use super::Side;

/// An HTLC as it appears on a particular commitment transaction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HtlcOutput {
    pub params: HtlcParams,
    pub vout: u32,
}

/// One party's version of the channel state, spending the funding output.
///
/// The holder's own balance is paid to a [`SpendCondition::CommitmentScript`]
/// (delayed for the holder, revocable by the counterparty); the
/// counterparty's balance is paid immediately. The holder absorbs the
/// on-chain fee, falling back to the counterparty's side only for the part
/// the holder cannot cover.
#[derive(Debug, Clone)]
pub struct CommitmentTx {
    pub version_n: u64,
    pub holder: Side,
    pub to_holder_msat: u64,
    pub to_counterparty_msat: u64,
    pub htlc_outputs: Vec<HtlcOutput>,
    pub fee_msat: u64,
    pub revocation_key: PublicKey,
    /// Counterparty's signature over the funding spend.
    pub counterparty_signature: Option<Signature>,
    pub holder_signature: Option<Signature>,
    pub holder_vout: Option<u32>,
    pub counterparty_vout: Option<u32>,
    pub(crate) tx: Transaction,
}

pub(crate) struct CommitmentSpec<'a> {
    pub funding: OutPoint,
    pub holder: Side,
    pub version: u64,
    pub balances: [u64; 2],
    pub htlcs: &'a [HtlcParams],
    pub keys: [&'a PublicKey; 2],
    pub revocation_key: PublicKey,
    pub to_self_delay: u32,
}

impl CommitmentTx {
    pub(crate) fn build(spec: CommitmentSpec<'_>) -> Self {
        let holder = spec.holder;
        let cp = holder.other();
        let holder_bal = spec.balances[holder.idx()];
        let cp_bal = spec.balances[cp.idx()];
        let fee = TX_FEE_MSAT.min(holder_bal + cp_bal);
        let from_holder = fee.min(holder_bal);
        let to_holder = holder_bal - from_holder;
        let to_cp = cp_bal - (fee - from_holder);

        let mut outputs = Vec::new();
        let mut holder_vout = None;
        let mut counterparty_vout = None;
        if to_holder > 0 {
            holder_vout = Some(outputs.len() as u32);
            outputs.push(Output {
                amount_msat: to_holder,
                condition: SpendCondition::CommitmentScript {
                    local_key: spec.keys[holder.idx()].clone(),
                    revocation_key: spec.revocation_key.clone(),
                    to_self_delay_blocks: spec.to_self_delay,
                },
            });
        }
        if to_cp > 0 {
            counterparty_vout = Some(outputs.len() as u32);
            outputs.push(Output::single_key(to_cp, spec.keys[cp.idx()].clone()));
        }
        let mut htlc_outputs = Vec::with_capacity(spec.htlcs.len());
        for h in spec.htlcs {
            htlc_outputs.push(HtlcOutput {
                params: h.clone(),
                vout: outputs.len() as u32,
            });
            outputs.push(Output {
                amount_msat: h.amount_msat,
                condition: SpendCondition::Hashlock {
                    payment_hash: h.payment_hash,
                    claim_key: spec.keys[h.offerer.other().idx()].clone(),
                    refund_key: spec.keys[h.offerer.idx()].clone(),
                    expiry_height: h.expiry_height,
                    revocation_key: Some(spec.revocation_key.clone()),
                },
            });
        }
        let tx = Transaction {
            inputs: vec![TxIn {
                prevout: spec.funding,
                witness: Witness::Sigs2of2(Signature::EMPTY, Signature::EMPTY),
            }],
            outputs,
            locktime_height: 0,
        };
        Self {
            version_n: spec.version,
            holder,
            to_holder_msat: to_holder,
            to_counterparty_msat: to_cp,
            htlc_outputs,
            fee_msat: fee,
            revocation_key: spec.revocation_key,
            counterparty_signature: None,
            holder_signature: None,
            holder_vout,
            counterparty_vout,
            tx,
        }
    }

    pub fn txid(&self) -> Txid {
        self.tx.txid()
    }

    pub fn unsigned_tx(&self) -> &Transaction {
        &self.tx
    }

    pub fn is_fully_signed(&self) -> bool {
        self.counterparty_signature.is_some() && self.holder_signature.is_some()
    }

    pub fn htlc_total(&self) -> u64 {
        self.htlc_outputs.iter().map(|h| h.params.amount_msat).sum()
    }

    pub fn htlc(&self, id: HtlcId) -> Option<&HtlcOutput> {
        self.htlc_outputs.iter().find(|h| h.params.htlc_id == id)
    }

    /// The broadcastable transaction, with the 2-of-2 witness ordered as
    /// the funding script's keys (side A first).
    pub fn signed_tx(&self) -> Option<Transaction> {
        let (h, c) = (self.holder_signature?, self.counterparty_signature?);
        let (sa, sb) = match self.holder {
            Side::A => (h, c),
            Side::B => (c, h),
        };
        let mut tx = self.tx.clone();
        tx.inputs[0].witness = Witness::Sigs2of2(sa, sb);
        Some(tx)
    }

    /// Commitment label in the `A1`, `B2`, ... style: holder letter plus
    /// one-based version.
    pub fn label(&self) -> String {
        format!("{}{}", self.holder.letter(), self.version_n + 1)
    }
}
