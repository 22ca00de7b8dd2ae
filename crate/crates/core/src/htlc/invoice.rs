use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::crypto::PaymentHash;
use crate::{AssetId, NodeId};

/// A payment request. Its text form is a single line:
///
/// ```text
/// invoice asset_id=BTC amount_msat=100000000000 payment_hash=<64 lowercase hex> destination=trudy
/// ```
///
/// Fields appear in exactly this order, separated by single spaces, and
/// parsing accepts only text that re-emits identically.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Invoice {
    pub asset_id: AssetId,
    pub amount_msat: u64,
    pub payment_hash: PaymentHash,
    pub destination: NodeId,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InvoiceParseError {
    #[error("expected field `{0}`")]
    MissingField(&'static str),
    #[error("invalid value for `{0}`")]
    BadValue(&'static str),
    #[error("unexpected trailing input")]
    Trailing,
}

const FIELDS: [&str; 4] = ["asset_id", "amount_msat", "payment_hash", "destination"];

impl fmt::Display for Invoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "invoice asset_id={} amount_msat={} payment_hash={} destination={}",
            self.asset_id,
            self.amount_msat,
            self.payment_hash.to_hex(),
            self.destination
        )
    }
}

fn plain_token(s: &str) -> bool {
    !s.is_empty() && !s.bytes().any(|b| b.is_ascii_whitespace() || b == b'=')
}

impl FromStr for Invoice {
    type Err = InvoiceParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut parts = s.split(' ');
        if parts.next() != Some("invoice") {
            return Err(InvoiceParseError::MissingField("invoice"));
        }
        let mut values = [""; 4];
        for (slot, name) in values.iter_mut().zip(FIELDS) {
            let part = parts.next().ok_or(InvoiceParseError::MissingField(name))?;
            let value = part
                .strip_prefix(name)
                .and_then(|r| r.strip_prefix('='))
                .ok_or(InvoiceParseError::MissingField(name))?;
            if !plain_token(value) {
                return Err(InvoiceParseError::BadValue(name));
            }
            *slot = value;
        }
        if parts.next().is_some() {
            return Err(InvoiceParseError::Trailing);
        }
        let [asset, amount, hash, dest] = values;

        let amount_msat: u64 = amount
            .parse()
            .map_err(|_| InvoiceParseError::BadValue("amount_msat"))?;
        if amount_msat.to_string() != amount {
            return Err(InvoiceParseError::BadValue("amount_msat"));
        }
        let bytes = hex::decode(hash).map_err(|_| InvoiceParseError::BadValue("payment_hash"))?;
        let payment_hash = PaymentHash(
            bytes
                .try_into()
                .map_err(|_| InvoiceParseError::BadValue("payment_hash"))?,
        );
        if payment_hash.to_hex() != hash {
            return Err(InvoiceParseError::BadValue("payment_hash"));
        }
        Ok(Invoice {
            asset_id: AssetId::new(asset),
            amount_msat,
            payment_hash,
            destination: NodeId::new(dest),
        })
    }
}
