use std::fmt;

use crate::htlc::HtlcId;
use crate::ChannelId;

use super::Side;

/// The eight steps of a commitment update, in protocol order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AlgorithmStep {
    BuildCounterpartyCommitment = 1,
    SignCounterpartyCommitment = 2,
    CounterpartyCountersigns = 3,
    BuildInitiatorCommitment = 4,
    SignInitiatorCommitment = 5,
    InitiatorCountersigns = 6,
    InitiatorRevokes = 7,
    CounterpartyRevokes = 8,
}

impl AlgorithmStep {
    pub const ALL: [AlgorithmStep; 8] = [
        AlgorithmStep::BuildCounterpartyCommitment,
        AlgorithmStep::SignCounterpartyCommitment,
        AlgorithmStep::CounterpartyCountersigns,
        AlgorithmStep::BuildInitiatorCommitment,
        AlgorithmStep::SignInitiatorCommitment,
        AlgorithmStep::InitiatorCountersigns,
        AlgorithmStep::InitiatorRevokes,
        AlgorithmStep::CounterpartyRevokes,
    ];

    pub fn number(self) -> u8 {
        self as u8
    }

    pub fn slug(self) -> &'static str {
        match self {
            AlgorithmStep::BuildCounterpartyCommitment => "build_counterparty_commitment",
            AlgorithmStep::SignCounterpartyCommitment => "sign_counterparty_commitment",
            AlgorithmStep::CounterpartyCountersigns => "counterparty_countersigns",
            AlgorithmStep::BuildInitiatorCommitment => "build_initiator_commitment",
            AlgorithmStep::SignInitiatorCommitment => "sign_initiator_commitment",
            AlgorithmStep::InitiatorCountersigns => "initiator_countersigns",
            AlgorithmStep::InitiatorRevokes => "initiator_revokes",
            AlgorithmStep::CounterpartyRevokes => "counterparty_revokes",
        }
    }

    pub(crate) fn next(self) -> Option<AlgorithmStep> {
        Self::ALL.get(self.number() as usize).copied()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EventKind {
    Funded,
    Step {
        step: AlgorithmStep,
        initiator: Side,
    },
    Updated,
    ConcurrentUpdateDeferred(Side),
    HtlcAdded(HtlcId),
    HtlcSettled(HtlcId),
    HtlcFailed(HtlcId),
    HtlcExpired(HtlcId),
    CooperativeClose,
    UnilateralClose(Side),
    PartyOffline(Side),
    DelayedSweep(Side),
    HtlcClaimedOnchain(HtlcId),
    HtlcRefundedOnchain(HtlcId),
    Punished { victim: Side },
    CheatSucceeded { cheater: Side },
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EventKind::Funded => f.write_str("funding"),
            EventKind::Step { step, initiator } => {
                write!(f, "step{}_{}:{}", step.number(), step.slug(), initiator)
            }
            EventKind::Updated => f.write_str("updated"),
            EventKind::ConcurrentUpdateDeferred(s) => write!(f, "concurrent_update_deferred:{s}"),
            EventKind::HtlcAdded(id) => write!(f, "htlc_added:{}", id.0),
            EventKind::HtlcSettled(id) => write!(f, "htlc_settled:{}", id.0),
            EventKind::HtlcFailed(id) => write!(f, "htlc_failed:{}", id.0),
            EventKind::HtlcExpired(id) => write!(f, "htlc_expired:{}", id.0),
            EventKind::CooperativeClose => f.write_str("cooperative_close"),
            EventKind::UnilateralClose(s) => write!(f, "unilateral_close:{s}"),
            EventKind::PartyOffline(s) => write!(f, "party_offline:{s}"),
            EventKind::DelayedSweep(s) => write!(f, "delayed_sweep:{s}"),
            EventKind::HtlcClaimedOnchain(id) => write!(f, "htlc_claimed_onchain:{}", id.0),
            EventKind::HtlcRefundedOnchain(id) => write!(f, "htlc_refunded_onchain:{}", id.0),
            EventKind::Punished { victim } => write!(f, "punished:{victim}"),
            EventKind::CheatSucceeded { cheater } => write!(f, "cheat_succeeded:{cheater}"),
        }
    }
}

/// One line of a channel's event log.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChannelEvent {
    pub tick: u64,
    pub channel_id: ChannelId,
    pub event: EventKind,
    pub version: u64,
    pub balance_a_msat: u64,
    pub balance_b_msat: u64,
}

impl fmt::Display for ChannelEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "tick={} channel={} event={} version={} balance_a_msat={} balance_b_msat={}",
            self.tick,
            self.channel_id,
            self.event,
            self.version,
            self.balance_a_msat,
            self.balance_b_msat
        )
    }
}
