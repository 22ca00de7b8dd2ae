use super::tx::{SpendCondition, Txid, Witness};
use crate::basechain::Utxo;

/// Whether `witness` unlocks `utxo` in a transaction with signing message
/// `sighash` that would be confirmed at block `height`.
///
/// Relative timelocks count from the block that confirmed `utxo`.
pub fn evaluate_spend(utxo: &Utxo, witness: &Witness, sighash: &Txid, height: u64) -> bool {
    let msg = &sighash.0[..];
    match (&utxo.output.condition, witness) {
        (SpendCondition::SingleKey(k), Witness::KeySig(sig)) => k.verify(msg, sig),
        (SpendCondition::Multisig2of2(k1, k2), Witness::Sigs2of2(s1, s2)) => {
            k1.verify(msg, s1) && k2.verify(msg, s2)
        }
        (
            SpendCondition::CommitmentScript {
                local_key,
                to_self_delay_blocks,
                ..
            },
            Witness::LocalAfterDelay(sig),
        ) => {
            height >= utxo.height + u64::from(*to_self_delay_blocks) && local_key.verify(msg, sig)
        }
        (SpendCondition::CommitmentScript { revocation_key, .. }, Witness::Revocation(sig)) => {
            revocation_key.verify(msg, sig)
        }
        (
            SpendCondition::Hashlock {
                payment_hash,
                claim_key,
                expiry_height,
                ..
            },
            Witness::HashlockClaim(preimage, sig),
        ) => {
            height < *expiry_height
                && preimage.payment_hash() == *payment_hash
                && claim_key.verify(msg, sig)
        }
        (
            SpendCondition::Hashlock {
                refund_key,
                expiry_height,
                ..
            },
            Witness::HashlockRefund(sig),
        ) => height >= *expiry_height && refund_key.verify(msg, sig),
        (
            SpendCondition::Hashlock {
                revocation_key: Some(rk),
                ..
            },
            Witness::Revocation(sig),
        ) => rk.verify(msg, sig),
        _ => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basechain::tx::Output;
    use crate::crypto::{Preimage, SecretKey, Signature};

    fn key(n: &str) -> SecretKey {
        SecretKey::derive("script-test", n.as_bytes())
    }

    fn utxo(condition: SpendCondition, height: u64) -> Utxo {
        Utxo {
            output: Output {
                amount_msat: 1_000,
                condition,
            },
            height,
        }
    }

    const MSG: Txid = Txid([42; 32]);

    fn commitment_utxo(broadcast_height: u64, delay: u32) -> (Utxo, SecretKey, SecretKey) {
        let local = key("local");
        let rev = key("revocation");
        let u = utxo(
            SpendCondition::CommitmentScript {
                local_key: local.public_key(),
                revocation_key: rev.public_key(),
                to_self_delay_blocks: delay,
            },
            broadcast_height,
        );
        (u, local, rev)
    }

    #[test]
    fn revocation_spends_commitment_immediately() {
        let (u, _, rev) = commitment_utxo(100, 144);
        let w = Witness::Revocation(rev.sign(&MSG.0));
        assert!(evaluate_spend(&u, &w, &MSG, 101));
    }

    #[test]
    fn local_after_delay_respects_timelock() {
        let (u, local, _) = commitment_utxo(100, 144);
        let w = Witness::LocalAfterDelay(local.sign(&MSG.0));
        assert!(!evaluate_spend(&u, &w, &MSG, 100 + 144 - 1));
        assert!(evaluate_spend(&u, &w, &MSG, 100 + 144));
    }

    #[test]
    fn local_key_cannot_use_revocation_path() {
        let (u, local, _) = commitment_utxo(100, 144);
        let w = Witness::Revocation(local.sign(&MSG.0));
        assert!(!evaluate_spend(&u, &w, &MSG, 500));
    }

    #[test]
    fn multisig_needs_both_signatures() {
        let (a, b) = (key("a"), key("b"));
        let u = utxo(SpendCondition::Multisig2of2(a.public_key(), b.public_key()), 1);
        let both = Witness::Sigs2of2(a.sign(&MSG.0), b.sign(&MSG.0));
        let one = Witness::Sigs2of2(a.sign(&MSG.0), Signature::EMPTY);
        let swapped = Witness::Sigs2of2(b.sign(&MSG.0), a.sign(&MSG.0));
        assert!(evaluate_spend(&u, &both, &MSG, 2));
        assert!(!evaluate_spend(&u, &one, &MSG, 2));
        assert!(!evaluate_spend(&u, &swapped, &MSG, 2));
    }

    fn hashlock(preimage: &Preimage, expiry: u64) -> (Utxo, SecretKey, SecretKey) {
        let (claim, refund) = (key("claim"), key("refund"));
        let u = utxo(
            SpendCondition::Hashlock {
                payment_hash: preimage.payment_hash(),
                claim_key: claim.public_key(),
                refund_key: refund.public_key(),
                expiry_height: expiry,
                revocation_key: None,
            },
            1,
        );
        (u, claim, refund)
    }

    #[test]
    fn hashlock_claim_requires_matching_preimage_before_expiry() {
        let p = Preimage([3; 32]);
        let (u, claim, _) = hashlock(&p, 50);
        let good = Witness::HashlockClaim(p, claim.sign(&MSG.0));
        let wrong = Witness::HashlockClaim(Preimage([4; 32]), claim.sign(&MSG.0));
        assert!(evaluate_spend(&u, &good, &MSG, 49));
        assert!(!evaluate_spend(&u, &good, &MSG, 50));
        assert!(!evaluate_spend(&u, &wrong, &MSG, 10));
    }

    #[test]
    fn hashlock_refund_from_expiry_inclusive() {
        let p = Preimage([3; 32]);
        let (u, _, refund) = hashlock(&p, 50);
        let w = Witness::HashlockRefund(refund.sign(&MSG.0));
        assert!(!evaluate_spend(&u, &w, &MSG, 49));
        assert!(evaluate_spend(&u, &w, &MSG, 50));
    }

    #[test]
    fn hashlock_without_revocation_key_rejects_revocation() {
        let p = Preimage([3; 32]);
        let (u, claim, _) = hashlock(&p, 50);
        assert!(!evaluate_spend(&u, &Witness::Revocation(claim.sign(&MSG.0)), &MSG, 2));
    }

    #[test]
    fn signature_binds_message() {
        let k = key("single");
        let u = utxo(SpendCondition::SingleKey(k.public_key()), 0);
        let other = Txid([1; 32]);
        assert!(evaluate_spend(&u, &Witness::KeySig(k.sign(&MSG.0)), &MSG, 1));
        assert!(!evaluate_spend(&u, &Witness::KeySig(k.sign(&other.0)), &MSG, 1));
    }
}
