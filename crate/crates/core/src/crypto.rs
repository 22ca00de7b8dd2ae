//! Simulated key material, signatures and hashing.
//!
//! Nothing here is real public-key cryptography. A signature is
//! `SHA-256(secret || message)` and verification recomputes it. To make that
//! possible a [`PublicKey`] carries the secret it was derived from, but only
//! exposes the derived 32-byte identifier; the only way to produce a
//! signature is through a [`SecretKey`]. Protocol code therefore still has to
//! possess the secret to sign, which is all the simulation needs.

use std::fmt;
use std::hash::{Hash, Hasher};

use rand::RngCore;
use sha2::{Digest, Sha256};

pub fn sha256(data: &[u8]) -> [u8; 32] {
    Sha256::digest(data).into()
}

/// SHA-256 over the plain concatenation of `parts`.
pub fn sha256_concat(parts: &[&[u8]]) -> [u8; 32] {
    let mut h = Sha256::new();
    for p in parts {
        h.update(p);
    }
    h.finalize().into()
}

#[derive(Clone, PartialEq, Eq)]
pub struct SecretKey([u8; 32]);

impl SecretKey {
    pub fn from_bytes(bytes: [u8; 32]) -> Self {
        Self(bytes)
    }

    /// Deterministic key for a `(domain, label)` pair.
    pub fn derive(domain: &str, label: &[u8]) -> Self {
        Self(sha256_concat(&[b"lnsim/key/", domain.as_bytes(), b"/", label]))
    }

    pub fn random<R: RngCore + ?Sized>(rng: &mut R) -> Self {
        let mut b = [0u8; 32];
        rng.fill_bytes(&mut b);
        Self(b)
    }

    pub fn as_bytes(&self) -> &[u8; 32] {
        &self.0
    }

    pub fn public_key(&self) -> PublicKey {
        PublicKey {
            id: sha256_concat(&[b"lnsim/pubkey", &self.0]),
            secret: self.0,
        }
    }

    pub fn sign(&self, msg: &[u8]) -> Signature {
        Signature(sha256_concat(&[&self.0, msg]))
    }

    /// Secret shared with whoever holds the matching [`PublicKey`].
    /// Stands in for an ECDH exchange.
    pub fn shared_secret(&self, domain: &[u8], nonce: &[u8]) -> [u8; 32] {
        sha256_concat(&[b"lnsim/ss/", domain, &self.0, nonce])
    }
}

impl fmt::Debug for SecretKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("SecretKey(..)")
    }
}

#[derive(Clone)]
pub struct PublicKey {
    id: [u8; 32],
    secret: [u8; 32],
}

impl PublicKey {
    /// The public identifier; this is what gets serialized.
    pub fn id(&self) -> &[u8; 32] {
        &self.id
    }

    pub fn verify(&self, msg: &[u8], sig: &Signature) -> bool {
        sha256_concat(&[&self.secret, msg]) == sig.0
    }

    pub fn shared_secret(&self, domain: &[u8], nonce: &[u8]) -> [u8; 32] {
        sha256_concat(&[b"lnsim/ss/", domain, &self.secret, nonce])
    }
}

impl PartialEq for PublicKey {
    fn eq(&self, other: &Self) -> bool {
        self.id == other.id
    }
}

impl Eq for PublicKey {}

impl PartialOrd for PublicKey {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for PublicKey {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.id.cmp(&other.id)
    }
}

impl Hash for PublicKey {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.id.hash(state)
    }
}

impl fmt::Debug for PublicKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PublicKey({})", hex::encode(&self.id[..8]))
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Signature(pub [u8; 32]);

impl Signature {
    /// Placeholder used in unsigned transactions.
    pub const EMPTY: Signature = Signature([0u8; 32]);
}

impl fmt::Debug for Signature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Signature({})", hex::encode(&self.0[..8]))
    }
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PaymentHash(pub [u8; 32]);

impl PaymentHash {
    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }
}

impl fmt::Debug for PaymentHash {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PaymentHash({})", hex::encode(&self.0[..8]))
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Preimage(pub [u8; 32]);

impl Preimage {
    pub fn random<R: RngCore + ?Sized>(rng: &mut R) -> Self {
        let mut b = [0u8; 32];
        rng.fill_bytes(&mut b);
        Self(b)
    }

    pub fn payment_hash(&self) -> PaymentHash {
        PaymentHash(sha256(&self.0))
    }
}

impl fmt::Debug for Preimage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Preimage({})", hex::encode(&self.0[..8]))
    }
}
