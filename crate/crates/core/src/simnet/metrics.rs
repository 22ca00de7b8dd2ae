use std::fmt::Write;

use crate::format_btc;

/// Column names of [`Metrics::csv_row`], in order.
pub const CSV_HEADER: &str = "payments_attempted,payments_succeeded,payments_failed,payments_inflight,\
mean_hops,mean_latency_ticks,total_fees_msat,total_fees_btc,onchain_tx_count,\
offchain_update_count,netting_ratio,ln_capacity_msat,ln_capacity_btc,reachable_nodes,\
active_nodes,cheat_attempts,cheats_punished";

/// A snapshot of a world's counters.
///
/// * `onchain_tx_count`: transactions broadcast after genesis, confirmed or
///   queued, excluding the wallet preparation done while building.
/// * `offchain_update_count`: completed off-chain transfers (direct updates
///   and settled HTLC hops).
/// * `netting_ratio`: `offchain_update_count` over the settlement
///   transactions, i.e. on-chain transactions other than channel fundings
///   and base-chain payments; 0 when there are none.
/// * `reachable_nodes`: nodes currently online. `active_nodes`: online
///   nodes carrying the active flag.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Metrics {
    pub payments_attempted: u64,
    pub payments_succeeded: u64,
    pub payments_failed: u64,
    pub payments_inflight: u64,
    pub mean_hops: f64,
    pub mean_latency_ticks: f64,
    pub total_fees_msat: u64,
    pub onchain_tx_count: u64,
    pub settlement_tx_count: u64,
    pub offchain_update_count: u64,
    pub netting_ratio: f64,
    pub ln_capacity_msat: u64,
    pub reachable_nodes: u64,
    pub active_nodes: u64,
    pub cheat_attempts: u64,
    pub cheats_punished: u64,
}

impl Metrics {
    pub fn csv_header() -> &'static str {
        CSV_HEADER
    }

    pub fn success_rate(&self) -> f64 {
        if self.payments_attempted == 0 {
            0.0
        } else {
            self.payments_succeeded as f64 / self.payments_attempted as f64
        }
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{:.6},{:.6},{},{},{},{},{:.6},{},{},{},{},{},{}",
            self.payments_attempted,
            self.payments_succeeded,
            self.payments_failed,
            self.payments_inflight,
            self.mean_hops,
            self.mean_latency_ticks,
            self.total_fees_msat,
            format_btc(self.total_fees_msat),
            self.onchain_tx_count,
            self.offchain_update_count,
            self.netting_ratio,
            self.ln_capacity_msat,
            format_btc(self.ln_capacity_msat),
            self.reachable_nodes,
            self.active_nodes,
            self.cheat_attempts,
            self.cheats_punished,
        )
    }

    /// Header line and row, newline-terminated.
    pub fn to_csv(&self) -> String {
        format!("{CSV_HEADER}\n{}\n", self.csv_row())
    }

    /// One `name=value` line per column.
    pub fn to_lines(&self) -> String {
        let row = self.csv_row();
        let mut out = String::new();
        for (k, v) in CSV_HEADER.split(',').zip(row.split(',')) {
            let _ = writeln!(out, "{k}={v}");
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_and_row_have_the_same_width() {
        let m = Metrics {
            total_fees_msat: 101_000,
            ln_capacity_msat: 61_851_000_000_000,
            netting_ratio: 1000.0,
            ..Metrics::default()
        };
        let row = m.csv_row();
        assert_eq!(row.split(',').count(), CSV_HEADER.split(',').count());
        assert!(row.contains(",0.00000101000,"));
        assert!(row.contains(",1000.000000,"));
        assert!(row.contains(",618.51000000000,"));
        assert!(m.to_lines().contains("netting_ratio=1000.000000\n"));
    }
}
