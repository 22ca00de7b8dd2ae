//! Transactions and their canonical encoding.
//!
//! Every field is written as a 4-byte big-endian length followed by the
//! field bytes, in declaration order:
//!
//! ```text
//! tx      = field(u32 n_inputs)  { field(prev_txid[32]) field(u32 vout) }*
//!           field(u32 n_outputs) { field(u64 amount_msat) condition }*
//!           field(u64 locktime_height)
//! condition:
//!   SingleKey        = field(u8 0) field(key)
//!   Multisig2of2     = field(u8 1) field(key1) field(key2)
//!   CommitmentScript = field(u8 2) field(local_key) field(revocation_key) field(u32 delay)
//!   Hashlock         = field(u8 3) field(hash[32]) field(claim_key) field(refund_key)
//!                      field(u64 expiry) field(revocation_key | empty)
//! ```
//!
//! Keys are their 32-byte public identifiers. Witnesses are not part of the
//! encoding, so the txid (SHA-256 of the encoding) is also the message every
//! input signs.

use std::fmt;

use crate::crypto::{sha256, PaymentHash, Preimage, PublicKey, Signature};

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Txid(pub [u8; 32]);

impl Txid {
    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }
}

impl fmt::Debug for Txid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Txid({})", hex::encode(&self.0[..8]))
    }
}

impl fmt::Display for Txid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct OutPoint {
    pub txid: Txid,
    pub vout: u32,
}

impl OutPoint {
    pub fn new(txid: Txid, vout: u32) -> Self {
        Self { txid, vout }
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum SpendCondition {
    SingleKey(PublicKey),
    Multisig2of2(PublicKey, PublicKey),
    /// Holder's balance on a commitment: spendable by `local_key` after
    /// `to_self_delay_blocks`, or at any time with the revocation key.
    CommitmentScript {
        local_key: PublicKey,
        revocation_key: PublicKey,
        to_self_delay_blocks: u32,
    },
    /// HTLC output. `revocation_key` is set when the output sits on a
    /// commitment transaction, so a revoked broadcast forfeits it as well.
    Hashlock {
        payment_hash: PaymentHash,
        claim_key: PublicKey,
        refund_key: PublicKey,
        expiry_height: u64,
        revocation_key: Option<PublicKey>,
    },
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Output {
    pub amount_msat: u64,
    pub condition: SpendCondition,
}

impl Output {
    pub fn single_key(amount_msat: u64, key: PublicKey) -> Self {
        Self {
            amount_msat,
            condition: SpendCondition::SingleKey(key),
        }
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Witness {
    KeySig(Signature),
    Sigs2of2(Signature, Signature),
    LocalAfterDelay(Signature),
    Revocation(Signature),
    HashlockClaim(Preimage, Signature),
    HashlockRefund(Signature),
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct TxIn {
    pub prevout: OutPoint,
    pub witness: Witness,
}

#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct Transaction {
    pub inputs: Vec<TxIn>,
    pub outputs: Vec<Output>,
    pub locktime_height: u64,
}

struct Encoder(Vec<u8>);

impl Encoder {
    fn field(&mut self, bytes: &[u8]) {
        self.0.extend_from_slice(&(bytes.len() as u32).to_be_bytes());
        self.0.extend_from_slice(bytes);
    }

    fn key(&mut self, k: &PublicKey) {
        self.field(k.id());
    }
}

impl Transaction {
    pub fn canonical_bytes(&self) -> Vec<u8> {
        let mut e = Encoder(Vec::with_capacity(64 + 128 * self.outputs.len()));
        e.field(&(self.inputs.len() as u32).to_be_bytes());
        for i in &self.inputs {
            e.field(&i.prevout.txid.0);
            e.field(&i.prevout.vout.to_be_bytes());
        }
        e.field(&(self.outputs.len() as u32).to_be_bytes());
        for o in &self.outputs {
            e.field(&o.amount_msat.to_be_bytes());
            match &o.condition {
                SpendCondition::SingleKey(k) => {
                    e.field(&[0]);
                    e.key(k);
                }
                SpendCondition::Multisig2of2(k1, k2) => {
                    e.field(&[1]);
                    e.key(k1);
                    e.key(k2);
                }
                SpendCondition::CommitmentScript {
                    local_key,
                    revocation_key,
                    to_self_delay_blocks,
                } => {
                    e.field(&[2]);
                    e.key(local_key);
                    e.key(revocation_key);
                    e.field(&to_self_delay_blocks.to_be_bytes());
                }
                SpendCondition::Hashlock {
                    payment_hash,
                    claim_key,
                    refund_key,
                    expiry_height,
                    revocation_key,
                } => {
                    e.field(&[3]);
                    e.field(&payment_hash.0);
                    e.key(claim_key);
                    e.key(refund_key);
                    e.field(&expiry_height.to_be_bytes());
                    match revocation_key {
                        Some(k) => e.key(k),
                        None => e.field(&[]),
                    }
                }
            }
        }
        e.field(&self.locktime_height.to_be_bytes());
        e.0
    }

    pub fn txid(&self) -> Txid {
        Txid(sha256(&self.canonical_bytes()))
    }

    pub fn output_total(&self) -> u64 {
        self.outputs.iter().map(|o| o.amount_msat).sum()
    }

    /// Outpoint of output `vout` of this transaction.
    pub fn outpoint(&self, vout: u32) -> OutPoint {
        OutPoint::new(self.txid(), vout)
    }
}
