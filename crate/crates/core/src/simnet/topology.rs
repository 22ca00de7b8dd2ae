use std::collections::BTreeSet;

use rand::Rng;

use super::config::{CapacityRange, ScenarioConfig, TopologyConfig};

/// A channel to be opened at build time, by node index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlannedChannel {
    pub id: String,
    pub a: usize,
    pub b: usize,
    pub asset: String,
    pub fund_a_msat: u64,
    pub fund_b_msat: u64,
}

impl PlannedChannel {
    pub fn capacity_msat(&self) -> u64 {
        self.fund_a_msat + self.fund_b_msat
    }
}

fn dual_funded(id: String, a: usize, b: usize, asset: &str, capacity: u64) -> PlannedChannel {
    let fund_a_msat = capacity / 2;
    PlannedChannel {
        id,
        a,
        b,
        asset: asset.to_string(),
        fund_a_msat,
        fund_b_msat: capacity - fund_a_msat,
    }
}

fn channel_id(i: usize) -> String {
    format!("ch-{i:05}")
}

pub fn plan_channels<R: Rng>(cfg: &ScenarioConfig, names: &[String], rng: &mut R) -> Vec<PlannedChannel> {
    let default_asset = cfg.chains[0].asset.as_str();
    let index = |n: &str| names.iter().position(|x| x == n).expect("validated node");
    match &cfg.topology {
        TopologyConfig::Explicit { edges } => edges
            .iter()
            .enumerate()
            .map(|(i, e)| {
                let (fa, fb) = match (e.fund_a_msat, e.fund_b_msat) {
                    (Some(fa), Some(fb)) => (fa, fb),
                    _ => {
                        let c = e.capacity_msat.expect("validated capacity");
                        (c / 2, c - c / 2)
                    }
                };
                PlannedChannel {
                    id: e.id.clone().unwrap_or_else(|| channel_id(i)),
                    a: index(&e.a),
                    b: index(&e.b),
                    asset: e.asset.clone().unwrap_or_else(|| default_asset.to_string()),
                    fund_a_msat: fa,
                    fund_b_msat: fb,
                }
            })
            .collect(),
        TopologyConfig::Random { edge_count } => {
            let n = names.len();
            let mut seen = BTreeSet::new();
            let mut out = Vec::with_capacity(*edge_count);
            while out.len() < *edge_count {
                let a = rng.gen_range(0..n);
                let b = rng.gen_range(0..n);
                if a == b || !seen.insert((a.min(b), a.max(b))) {
                    continue;
                }
                let cap = sample_capacity(&cfg.capacity, rng);
                out.push(dual_funded(channel_id(out.len()), a, b, default_asset, cap));
            }
            out
        }
        TopologyConfig::Snapshot {
            channels,
            total_capacity_msat,
        } => {
            let pairs = preferential_attachment(names.len(), *channels, rng);
            let raw: Vec<u64> = pairs.iter().map(|_| sample_capacity(&cfg.capacity, rng)).collect();
            let caps = scale_to_total(&raw, *total_capacity_msat);
            pairs
                .into_iter()
                .zip(caps)
                .enumerate()
                .map(|(i, ((a, b), cap))| dual_funded(channel_id(i), a, b, default_asset, cap))
                .collect()
        }
    }
}

fn sample_capacity<R: Rng>(range: &CapacityRange, rng: &mut R) -> u64 {
    rng.gen_range(range.min_msat..=range.max_msat)
}

/// `edges` distinct pairs over `n` nodes grown one node at a time, each new
/// node linking to earlier nodes picked with probability proportional to
/// degree + 1. Every node ends up connected.
pub fn preferential_attachment<R: Rng>(n: usize, edges: usize, rng: &mut R) -> Vec<(usize, usize)> {
    // links contributed by node i, capped by the i earlier nodes
    let mut quota = vec![0usize; n];
    let mut remaining = edges;
    for (i, q) in quota.iter_mut().enumerate().skip(1) {
        *q = 1.min(i);
        remaining -= *q;
    }
    while remaining > 0 {
        let before = remaining;
        for i in (1..n).rev() {
            if remaining == 0 {
                break;
            }
            if quota[i] < i {
                quota[i] += 1;
                remaining -= 1;
            }
        }
        assert!(remaining < before, "edge count exceeds node pairs");
    }
    let mut out = Vec::with_capacity(edges);
    let mut endpoints: Vec<usize> = Vec::with_capacity(2 * edges);
    for (i, &q) in quota.iter().enumerate().skip(1) {
        let mut targets = BTreeSet::new();
        while targets.len() < q {
            let r = rng.gen_range(0..endpoints.len() + i);
            let t = if r < endpoints.len() {
                endpoints[r]
            } else {
                r - endpoints.len()
            };
            targets.insert(t);
        }
        for t in targets {
            out.push((t, i));
            endpoints.push(t);
            endpoints.push(i);
        }
    }
    out
}

/// Scales `raw` so the results sum to exactly `total`: floor of the exact
/// share, then one extra msat to the largest remainders (lower index first
/// on ties).
pub fn scale_to_total(raw: &[u64], total: u64) -> Vec<u64> {
    let sum: u128 = raw.iter().map(|&r| u128::from(r)).sum();
    let mut out = Vec::with_capacity(raw.len());
    let mut rems = Vec::with_capacity(raw.len());
    for (i, &r) in raw.iter().enumerate() {
        let exact = u128::from(r) * u128::from(total);
        out.push((exact / sum) as u64);
        rems.push((exact % sum, i));
    }
    let short = total - out.iter().sum::<u64>();
    rems.sort_by(|x, y| y.0.cmp(&x.0).then(x.1.cmp(&y.1)));
    for &(_, i) in rems.iter().take(short as usize) {
        out[i] += 1;
    }
    out
}
