//! Simulated base-layer ledgers, one per asset.
//!
//! A [`Ledger`] is a UTXO set with a FIFO mempool and a block producer that
//! confirms at most `tps_cap * block_interval_secs` transactions per block.
//! Every transaction pays a fixed [`TX_FEE_MSAT`], which is burned, so
//! `supply + fees_burned == genesis_supply` holds after every block.

mod script;
mod tx;

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use thiserror::Error;

pub use script::evaluate_spend;
pub use tx::{OutPoint, Output, SpendCondition, Transaction, TxIn, Txid, Witness};

use crate::crypto::{PublicKey, SecretKey};
use crate::AssetId;

/// Flat on-chain fee per transaction, burned.
pub const TX_FEE_MSAT: u64 = 1_000;

/// How far past the next block a locktime may point at submission.
pub const LOCKTIME_HORIZON: u64 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LedgerError {
    #[error("asset {0} is already registered")]
    DuplicateAsset(AssetId),
    #[error("invalid chain parameters: {0}")]
    InvalidParams(&'static str),
    #[error("input {0:?} does not exist")]
    UnknownInput(OutPoint),
    #[error("input {0:?} is already spent")]
    DoubleSpend(OutPoint),
    #[error("witness for input {input} does not satisfy its spend condition")]
    BadWitness { input: usize },
    #[error("outputs ({outputs} msat) exceed inputs ({inputs} msat)")]
    ValueCreated { inputs: u64, outputs: u64 },
    #[error("fee {paid} msat below required {required} msat")]
    FeeTooLow { paid: u64, required: u64 },
    #[error("locktime {locktime} beyond acceptance horizon at height {height}")]
    PrematureLocktime { locktime: u64, height: u64 },
    #[error("insufficient funds: need {needed} msat, have {available} msat")]
    InsufficientFunds { needed: u64, available: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChainParams {
    pub asset_id: AssetId,
    pub tps_cap: u64,
    pub block_interval_secs: u64,
    pub genesis_allocations: BTreeMap<PublicKey, u64>,
}

impl ChainParams {
    pub fn new(asset_id: impl Into<AssetId>, tps_cap: u64, block_interval_secs: u64) -> Self {
        Self {
            asset_id: asset_id.into(),
            tps_cap,
            block_interval_secs,
            genesis_allocations: BTreeMap::new(),
        }
    }

    /// Bitcoin-like defaults: 7 TPS, 600 s blocks.
    pub fn bitcoin_like(asset_id: impl Into<AssetId>) -> Self {
        Self::new(asset_id, 7, 600)
    }

    pub fn with_allocation(mut self, key: PublicKey, amount_msat: u64) -> Self {
        *self.genesis_allocations.entry(key).or_insert(0) += amount_msat;
        self
    }

    pub fn block_capacity(&self) -> u64 {
        self.tps_cap * self.block_interval_secs
    }
}

/// An unspent output together with the height of the block that created it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Utxo {
    pub output: Output,
    pub height: u64,
}

#[derive(Debug, Clone)]
pub struct ConfirmedTx {
    pub txid: Txid,
    pub height: u64,
    pub fee_msat: u64,
    pub tx: Transaction,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DroppedTx {
    pub txid: Txid,
    pub height: u64,
    pub reason: LedgerError,
}

#[derive(Debug, Clone)]
pub struct Ledger {
    params: ChainParams,
    height: u64,
    genesis_txid: Txid,
    genesis_supply: u64,
    fees_burned: u64,
    utxos: BTreeMap<OutPoint, Utxo>,
    by_owner: BTreeMap<PublicKey, BTreeSet<OutPoint>>,
    spent: BTreeMap<OutPoint, Txid>,
    mempool: VecDeque<Transaction>,
    mempool_ids: BTreeSet<Txid>,
    mempool_spends: BTreeMap<OutPoint, usize>,
    confirmed: Vec<ConfirmedTx>,
    confirmed_index: BTreeMap<Txid, usize>,
    dropped: Vec<DroppedTx>,
}

impl Ledger {
    /// A ledger at height 0 whose genesis block pays each allocation to a
    /// single-key output, in key order.
    pub fn new(params: ChainParams) -> Result<Self, LedgerError> {
        if params.tps_cap < 1 {
            return Err(LedgerError::InvalidParams("tps_cap must be at least 1"));
        }
        if params.block_interval_secs < 1 {
            return Err(LedgerError::InvalidParams("block_interval_secs must be at least 1"));
        }
        let genesis = Transaction {
            inputs: Vec::new(),
            outputs: params
                .genesis_allocations
                .iter()
                .map(|(k, amt)| Output::single_key(*amt, k.clone()))
                .collect(),
            locktime_height: 0,
        };
        let genesis_txid = genesis.txid();
        let utxos: BTreeMap<OutPoint, Utxo> = genesis
            .outputs
            .iter()
            .enumerate()
            .map(|(i, o)| {
                (
                    OutPoint::new(genesis_txid, i as u32),
                    Utxo {
                        output: o.clone(),
                        height: 0,
                    },
                )
            })
            .collect();
        let mut by_owner: BTreeMap<PublicKey, BTreeSet<OutPoint>> = BTreeMap::new();
        for (op, u) in &utxos {
            if let SpendCondition::SingleKey(k) = &u.output.condition {
                by_owner.entry(k.clone()).or_default().insert(*op);
            }
        }
        Ok(Self {
            by_owner,
            genesis_supply: genesis.output_total(),
            params,
            height: 0,
            genesis_txid,
            fees_burned: 0,
            utxos,
            spent: BTreeMap::new(),
            mempool: VecDeque::new(),
            mempool_ids: BTreeSet::new(),
            mempool_spends: BTreeMap::new(),
            confirmed: Vec::new(),
            confirmed_index: BTreeMap::new(),
            dropped: Vec::new(),
        })
    }

    pub fn params(&self) -> &ChainParams {
        &self.params
    }

    pub fn asset_id(&self) -> &AssetId {
        &self.params.asset_id
    }

    pub fn height(&self) -> u64 {
        self.height
    }

    pub fn genesis_txid(&self) -> Txid {
        self.genesis_txid
    }

    pub fn genesis_supply(&self) -> u64 {
        self.genesis_supply
    }

    pub fn fees_burned(&self) -> u64 {
        self.fees_burned
    }

    /// Sum of all unspent outputs.
    pub fn supply(&self) -> u64 {
        self.utxos.values().map(|u| u.output.amount_msat).sum()
    }

    /// `supply + fees_burned == genesis_supply`.
    pub fn conserves_value(&self) -> bool {
        self.supply() + self.fees_burned == self.genesis_supply
    }

    pub fn utxo(&self, outpoint: &OutPoint) -> Option<&Utxo> {
        self.utxos.get(outpoint)
    }

    pub fn utxos(&self) -> impl Iterator<Item = (&OutPoint, &Utxo)> {
        self.utxos.iter()
    }

    /// The confirmed transaction that spent `outpoint`, if any.
    pub fn spender_of(&self, outpoint: &OutPoint) -> Option<Txid> {
        self.spent.get(outpoint).copied()
    }

    pub fn mempool(&self) -> impl Iterator<Item = &Transaction> {
        self.mempool.iter()
    }

    pub fn mempool_len(&self) -> usize {
        self.mempool.len()
    }

    pub fn in_mempool(&self, txid: &Txid) -> bool {
        self.mempool_ids.contains(txid)
    }

    pub fn confirmed(&self) -> &[ConfirmedTx] {
        &self.confirmed
    }

    pub fn confirmed_tx(&self, txid: &Txid) -> Option<&ConfirmedTx> {
        self.confirmed_index.get(txid).map(|&i| &self.confirmed[i])
    }

    pub fn confirmation_height(&self, txid: &Txid) -> Option<u64> {
        self.confirmed_tx(txid).map(|c| c.height)
    }

    pub fn dropped(&self) -> &[DroppedTx] {
        &self.dropped
    }

    /// Sum of confirmed single-key outputs owned by `key`.
    pub fn balance_of(&self, key: &PublicKey) -> u64 {
        self.by_owner
            .get(key)
            .into_iter()
            .flatten()
            .map(|op| self.utxos[op].output.amount_msat)
            .sum()
    }

    /// Confirmed single-key outputs of `key` not already claimed by a
    /// mempool transaction, in outpoint order.
    pub fn spendable(&self, key: &PublicKey) -> Vec<(OutPoint, u64)> {
        self.by_owner
            .get(key)
            .into_iter()
            .flatten()
            .filter(|op| !self.mempool_spends.contains_key(op))
            .map(|op| (*op, self.utxos[op].output.amount_msat))
            .collect()
    }

    /// Picks a single spendable output of `key` worth exactly `target` if
    /// there is one, otherwise outputs in outpoint order until `target` is
    /// covered. Returns the chosen outpoints and their total.
    pub fn select_coins(
        &self,
        key: &PublicKey,
        target: u64,
    ) -> Result<(Vec<OutPoint>, u64), LedgerError> {
        let mut chosen = Vec::new();
        let mut total = 0u64;
        if target == 0 {
            return Ok((chosen, 0));
        }
        let coins = self.spendable(key);
        if let Some((op, amt)) = coins.iter().find(|(_, amt)| *amt == target) {
            return Ok((vec![*op], *amt));
        }
        for (op, amt) in coins {
            chosen.push(op);
            total += amt;
            if total >= target {
                return Ok((chosen, total));
            }
        }
        Err(LedgerError::InsufficientFunds {
            needed: target,
            available: total,
        })
    }

    /// Validates `tx` against the confirmed UTXO set and queues it.
    ///
    /// Witnesses are checked as if the transaction were confirmed in the
    /// next block. Conflicts with other mempool entries are resolved at
    /// mining time (first seen wins); resubmitting an identical transaction
    /// is rejected as a double spend.
    pub fn submit_transaction(&mut self, tx: Transaction) -> Result<Txid, LedgerError> {
        let txid = tx.txid();
        if self.mempool_ids.contains(&txid) || self.confirmed_index.contains_key(&txid) {
            let op = tx
                .inputs
                .first()
                .map(|i| i.prevout)
                .unwrap_or(OutPoint::new(txid, 0));
            return Err(LedgerError::DoubleSpend(op));
        }
        if tx.locktime_height > self.height + LOCKTIME_HORIZON {
            return Err(LedgerError::PrematureLocktime {
                locktime: tx.locktime_height,
                height: self.height,
            });
        }
        self.validate(&tx, &txid, self.height + 1)?;
        for i in &tx.inputs {
            *self.mempool_spends.entry(i.prevout).or_insert(0) += 1;
        }
        self.mempool_ids.insert(txid);
        self.mempool.push_back(tx);
        Ok(txid)
    }

    /// Returns the fee on success.
    fn validate(&self, tx: &Transaction, txid: &Txid, height: u64) -> Result<u64, LedgerError> {
        if tx.locktime_height > height {
            return Err(LedgerError::PrematureLocktime {
                locktime: tx.locktime_height,
                height,
            });
        }
        let mut seen = BTreeSet::new();
        let mut inputs = 0u64;
        for (idx, input) in tx.inputs.iter().enumerate() {
            if !seen.insert(input.prevout) {
                return Err(LedgerError::DoubleSpend(input.prevout));
            }
            let utxo = match self.utxos.get(&input.prevout) {
                Some(u) => u,
                None if self.spent.contains_key(&input.prevout) => {
                    return Err(LedgerError::DoubleSpend(input.prevout))
                }
                None => return Err(LedgerError::UnknownInput(input.prevout)),
            };
            if !evaluate_spend(utxo, &input.witness, txid, height) {
                return Err(LedgerError::BadWitness { input: idx });
            }
            inputs += utxo.output.amount_msat;
        }
        let outputs = tx.output_total();
        if outputs > inputs {
            return Err(LedgerError::ValueCreated { inputs, outputs });
        }
        let fee = inputs - outputs;
        if fee < TX_FEE_MSAT {
            return Err(LedgerError::FeeTooLow {
                paid: fee,
                required: TX_FEE_MSAT,
            });
        }
        Ok(fee)
    }

    /// Produces the next block: confirms mempool transactions in FIFO order
    /// up to the block capacity, re-validating each against the UTXO set as
    /// it evolves. Entries that no longer validate are dropped.
    pub fn mine_block(&mut self) -> Vec<Txid> {
        self.height += 1;
        let capacity = self.params.block_capacity();
        let mut included = Vec::new();
        while (included.len() as u64) < capacity {
            let Some(tx) = self.mempool.pop_front() else {
                break;
            };
            let txid = tx.txid();
            self.mempool_ids.remove(&txid);
            for i in &tx.inputs {
                if let Some(n) = self.mempool_spends.get_mut(&i.prevout) {
                    *n -= 1;
                    if *n == 0 {
                        self.mempool_spends.remove(&i.prevout);
                    }
                }
            }
            match self.validate(&tx, &txid, self.height) {
                Ok(fee) => {
                    for i in &tx.inputs {
                        if let Some(u) = self.utxos.remove(&i.prevout) {
                            if let SpendCondition::SingleKey(k) = &u.output.condition {
                                if let Some(set) = self.by_owner.get_mut(k) {
                                    set.remove(&i.prevout);
                                }
                            }
                        }
                        self.spent.insert(i.prevout, txid);
                    }
                    for (vout, o) in tx.outputs.iter().enumerate() {
                        let op = OutPoint::new(txid, vout as u32);
                        if let SpendCondition::SingleKey(k) = &o.condition {
                            self.by_owner.entry(k.clone()).or_default().insert(op);
                        }
                        self.utxos.insert(
                            op,
                            Utxo {
                                output: o.clone(),
                                height: self.height,
                            },
                        );
                    }
                    self.fees_burned += fee;
                    self.confirmed_index.insert(txid, self.confirmed.len());
                    self.confirmed.push(ConfirmedTx {
                        txid,
                        height: self.height,
                        fee_msat: fee,
                        tx,
                    });
                    included.push(txid);
                }
                Err(reason) => self.dropped.push(DroppedTx {
                    txid,
                    height: self.height,
                    reason,
                }),
            }
        }
        included
    }
}

/// Builds and signs a transaction funding `outputs` from `payer`'s
/// single-key outputs, returning change to the payer. The payer covers the
/// fee.
pub fn build_payment(
    ledger: &Ledger,
    payer: &SecretKey,
    outputs: Vec<Output>,
) -> Result<Transaction, LedgerError> {
    let payer_pk = payer.public_key();
    let needed = outputs.iter().map(|o| o.amount_msat).sum::<u64>() + TX_FEE_MSAT;
    let (coins, total) = ledger.select_coins(&payer_pk, needed)?;
    let mut tx = Transaction {
        inputs: coins
            .into_iter()
            .map(|prevout| TxIn {
                prevout,
                witness: Witness::KeySig(crate::crypto::Signature::EMPTY),
            })
            .collect(),
        outputs,
        locktime_height: 0,
    };
    if total > needed {
        tx.outputs.push(Output::single_key(total - needed, payer_pk));
    }
    let sighash = tx.txid();
    let sig = payer.sign(&sighash.0);
    for i in &mut tx.inputs {
        i.witness = Witness::KeySig(sig);
    }
    Ok(tx)
}

/// Registry enforcing one ledger per asset.
#[derive(Debug, Clone, Default)]
pub struct ChainRegistry {
    ledgers: BTreeMap<AssetId, Ledger>,
}

impl ChainRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn register_chain(&mut self, params: ChainParams) -> Result<&mut Ledger, LedgerError> {
        if self.ledgers.contains_key(&params.asset_id) {
            return Err(LedgerError::DuplicateAsset(params.asset_id));
        }
        let asset = params.asset_id.clone();
        let ledger = Ledger::new(params)?;
        Ok(self.ledgers.entry(asset).or_insert(ledger))
    }

    pub fn get(&self, asset: &AssetId) -> Option<&Ledger> {
        self.ledgers.get(asset)
    }

    pub fn get_mut(&mut self, asset: &AssetId) -> Option<&mut Ledger> {
        self.ledgers.get_mut(asset)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&AssetId, &Ledger)> {
        self.ledgers.iter()
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = (&AssetId, &mut Ledger)> {
        self.ledgers.iter_mut()
    }

    pub fn len(&self) -> usize {
        self.ledgers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ledgers.is_empty()
    }
}
