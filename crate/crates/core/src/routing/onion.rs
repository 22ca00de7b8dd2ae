//! Fixed-size layered routing packets.
//!
//! Each hop shares a secret with the sender derived from the hop's node key
//! and a per-hop nonce. From it come a keystream (SHA-256 in counter mode)
//! that masks the routing information and a MAC key that binds the layer
//! to its addressee. Peeling strips one fixed-size payload off the front
//! and shifts fresh keystream bytes in at the back, so the packet size
//! never reveals a hop's position.
//!
//! Wire format:
//!
//! ```text
//! packet  = version(1) nonce(32) routing_info(MAX_HOPS * HOP_LEN) mac(32)
//! payload = kind(1) id_len(1) id(32) amount_msat(u64 BE) expiry(u64 BE) next_mac(32)
//! ```
//!
//! A forward payload's id is the outgoing channel; a final payload's id is the
//! payment hash.

use rand::RngCore;
use thiserror::Error;

use crate::channel::node_key;
use crate::crypto::{sha256_concat, PaymentHash, SecretKey};
use crate::{ChannelId, NodeId};

use super::pathfind::{Route, MAX_ROUTE_HOPS};

pub const HOP_LEN: usize = 82;
pub const ROUTING_INFO_LEN: usize = MAX_ROUTE_HOPS * HOP_LEN;
pub const PACKET_LEN: usize = 1 + 32 + ROUTING_INFO_LEN + 32;
const ID_LEN: usize = 32;
const KIND_FORWARD: u8 = 0;
const KIND_FINAL: u8 = 1;
const VERSION: u8 = 0;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OnionError {
    #[error("route has no hops")]
    EmptyRoute,
    #[error("route longer than {MAX_ROUTE_HOPS} hops")]
    TooManyHops,
    #[error("channel id {0} is longer than 32 bytes")]
    IdTooLong(ChannelId),
    #[error("packet is not addressed to this node")]
    NotAddressee,
    #[error("malformed packet")]
    Malformed,
}

#[derive(Clone, PartialEq, Eq)]
pub struct OnionPacket {
    pub version: u8,
    pub nonce: [u8; 32],
    pub routing_info: Vec<u8>,
    pub mac: [u8; 32],
}

impl std::fmt::Debug for OnionPacket {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "OnionPacket({})", hex::encode(&self.mac[..8]))
    }
}

impl OnionPacket {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(PACKET_LEN);
        out.push(self.version);
        out.extend_from_slice(&self.nonce);
        out.extend_from_slice(&self.routing_info);
        out.extend_from_slice(&self.mac);
        out
    }

    pub fn from_bytes(b: &[u8]) -> Result<Self, OnionError> {
        if b.len() != PACKET_LEN || b[0] != VERSION {
            return Err(OnionError::Malformed);
        }
        Ok(Self {
            version: b[0],
            nonce: b[1..33].try_into().expect("length checked"),
            routing_info: b[33..33 + ROUTING_INFO_LEN].to_vec(),
            mac: b[33 + ROUTING_INFO_LEN..].try_into().expect("length checked"),
        })
    }
}

/// What a hop learns when it opens its layer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum HopPayload {
    /// The hop forwards over `next_channel`; its peer on that channel is
    /// the next hop.
    Forward {
        next_channel: ChannelId,
        amount_to_forward_msat: u64,
        outgoing_expiry: u64,
    },
    Final {
        payment_hash: PaymentHash,
        amount_msat: u64,
        expiry_height: u64,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Peeled {
    pub payload: HopPayload,
    /// Packet for the next hop; `None` at the destination.
    pub next: Option<OnionPacket>,
}

impl Peeled {
    /// Everything the peeling node holds afterwards, serialized.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = encode_payload(&self.payload, &[0; 32]).to_vec();
        if let Some(p) = &self.next {
            out.extend_from_slice(&p.to_bytes());
        }
        out
    }
}

struct HopKeys {
    rho: [u8; 32],
    mu: [u8; 32],
}

fn hop_keys(shared: &[u8; 32]) -> HopKeys {
    HopKeys {
        rho: sha256_concat(&[b"lnsim/onion/rho", shared]),
        mu: sha256_concat(&[b"lnsim/onion/mu", shared]),
    }
}

fn next_nonce(nonce: &[u8; 32], shared: &[u8; 32]) -> [u8; 32] {
    sha256_concat(&[b"lnsim/onion/blind", nonce, shared])
}

fn keystream(key: &[u8; 32], len: usize) -> Vec<u8> {
    let mut out = Vec::with_capacity(len + 32);
    let mut counter = 0u32;
    while out.len() < len {
        out.extend_from_slice(&sha256_concat(&[key, &counter.to_be_bytes()]));
        counter += 1;
    }
    out.truncate(len);
    out
}

fn xor(dst: &mut [u8], src: &[u8]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d ^= s;
    }
}

fn mac(key: &[u8; 32], data: &[u8]) -> [u8; 32] {
    sha256_concat(&[key, data])
}

const SHARED_DOMAIN: &[u8] = b"onion";

fn encode_payload(p: &HopPayload, next_mac: &[u8; 32]) -> [u8; HOP_LEN] {
    let mut b = [0u8; HOP_LEN];
    let (kind, id, amount, expiry): (u8, &[u8], u64, u64) = match p {
        HopPayload::Forward {
            next_channel,
            amount_to_forward_msat,
            outgoing_expiry,
        } => (
            KIND_FORWARD,
            next_channel.as_bytes(),
            *amount_to_forward_msat,
            *outgoing_expiry,
        ),
        HopPayload::Final {
            payment_hash,
            amount_msat,
            expiry_height,
        } => (KIND_FINAL, &payment_hash.0, *amount_msat, *expiry_height),
    };
    b[0] = kind;
    b[1] = id.len() as u8;
    b[2..2 + id.len()].copy_from_slice(id);
    b[34..42].copy_from_slice(&amount.to_be_bytes());
    b[42..50].copy_from_slice(&expiry.to_be_bytes());
    b[50..82].copy_from_slice(next_mac);
    b
}

fn decode_payload(b: &[u8]) -> Result<(HopPayload, [u8; 32]), OnionError> {
    let len = b[1] as usize;
    if len > ID_LEN {
        return Err(OnionError::Malformed);
    }
    let id = &b[2..2 + len];
    let amount = u64::from_be_bytes(b[34..42].try_into().expect("fixed slice"));
    let expiry = u64::from_be_bytes(b[42..50].try_into().expect("fixed slice"));
    let next_mac: [u8; 32] = b[50..82].try_into().expect("fixed slice");
    let payload = match b[0] {
        KIND_FORWARD => HopPayload::Forward {
            next_channel: ChannelId::new(
                String::from_utf8(id.to_vec()).map_err(|_| OnionError::Malformed)?,
            ),
            amount_to_forward_msat: amount,
            outgoing_expiry: expiry,
        },
        KIND_FINAL => HopPayload::Final {
            payment_hash: PaymentHash(id.try_into().map_err(|_| OnionError::Malformed)?),
            amount_msat: amount,
            expiry_height: expiry,
        },
        _ => return Err(OnionError::Malformed),
    };
    Ok((payload, next_mac))
}

/// Wraps the route's per-hop instructions so that hop `i` can open only
/// layer `i`, which names the channel to hop `i + 1` (or, at the destination, the
/// payment hash).
pub fn build_onion<R: RngCore + ?Sized>(
    route: &Route,
    payment_hash: PaymentHash,
    rng: &mut R,
) -> Result<OnionPacket, OnionError> {
    let k = route.hops.len();
    if k == 0 {
        return Err(OnionError::EmptyRoute);
    }
    if k > MAX_ROUTE_HOPS {
        return Err(OnionError::TooManyHops);
    }
    for h in &route.hops[1..] {
        if h.channel_id.as_bytes().len() > ID_LEN {
            return Err(OnionError::IdTooLong(h.channel_id.clone()));
        }
    }
    let payloads: Vec<HopPayload> = (0..k)
        .map(|i| match route.hops.get(i + 1) {
            Some(next) => HopPayload::Forward {
                next_channel: next.channel_id.clone(),
                amount_to_forward_msat: next.amount_to_forward_msat,
                outgoing_expiry: next.expiry_height,
            },
            None => HopPayload::Final {
                payment_hash,
                amount_msat: route.hops[i].amount_to_forward_msat,
                expiry_height: route.hops[i].expiry_height,
            },
        })
        .collect();

    let mut session = [0u8; 32];
    rng.fill_bytes(&mut session);
    let mut nonces = Vec::with_capacity(k);
    let mut keys = Vec::with_capacity(k);
    let mut nonce = session;
    for h in &route.hops {
        let pk = node_key(&h.node_id).public_key();
        let shared = pk.shared_secret(SHARED_DOMAIN, &nonce);
        nonces.push(nonce);
        keys.push(hop_keys(&shared));
        nonce = next_nonce(&nonce, &shared);
    }

    // Bytes the last hop will see shifted in by the earlier peels.
    let mut filler: Vec<u8> = Vec::new();
    for key in &keys[..k - 1] {
        filler.extend_from_slice(&[0; HOP_LEN]);
        let stream = keystream(&key.rho, ROUTING_INFO_LEN + HOP_LEN);
        let start = stream.len() - filler.len();
        xor(&mut filler, &stream[start..]);
    }

    let mut info = keystream(&sha256_concat(&[b"lnsim/onion/pad", &session]), ROUTING_INFO_LEN);
    let mut next_mac = [0u8; 32];
    for i in (0..k).rev() {
        info.rotate_right(HOP_LEN);
        info[..HOP_LEN].copy_from_slice(&encode_payload(&payloads[i], &next_mac));
        xor(&mut info, &keystream(&keys[i].rho, ROUTING_INFO_LEN));
        if i == k - 1 && !filler.is_empty() {
            let start = ROUTING_INFO_LEN - filler.len();
            info[start..].copy_from_slice(&filler);
        }
        next_mac = mac(&keys[i].mu, &info);
    }
    Ok(OnionPacket {
        version: VERSION,
        nonce: nonces[0],
        routing_info: info,
        mac: next_mac,
    })
}

/// Opens the outer layer as `node`.
pub fn peel_onion(packet: &OnionPacket, node: &NodeId) -> Result<Peeled, OnionError> {
    peel_with_key(packet, &node_key(node))
}

pub fn peel_with_key(packet: &OnionPacket, key: &SecretKey) -> Result<Peeled, OnionError> {
    if packet.version != VERSION || packet.routing_info.len() != ROUTING_INFO_LEN {
        return Err(OnionError::Malformed);
    }
    let shared = key.shared_secret(SHARED_DOMAIN, &packet.nonce);
    let keys = hop_keys(&shared);
    if mac(&keys.mu, &packet.routing_info) != packet.mac {
        return Err(OnionError::NotAddressee);
    }
    let mut buf = packet.routing_info.clone();
    buf.extend_from_slice(&[0; HOP_LEN]);
    xor(&mut buf, &keystream(&keys.rho, ROUTING_INFO_LEN + HOP_LEN));
    let (payload, next_mac) = decode_payload(&buf[..HOP_LEN])?;
    let next = match payload {
        HopPayload::Final { .. } => None,
        HopPayload::Forward { .. } => Some(OnionPacket {
            version: VERSION,
            nonce: next_nonce(&packet.nonce, &shared),
            routing_info: buf[HOP_LEN..].to_vec(),
            mac: next_mac,
        }),
    };
    Ok(Peeled { payload, next })
}
