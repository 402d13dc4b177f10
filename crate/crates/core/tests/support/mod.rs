//! Reference implementations and fixtures shared by the integration tests
//! and the acceptance runner. Everything here is written from the
//! definitions, independently of the library code it checks.
#![allow(dead_code)]

use std::net::Ipv4Addr;

use flowlens::flow_meter::{
    assemble_flows, extract, tcp_flags, FeatureSchema, FeatureTable, FlowMeterConfig, PacketRecord, PROTO_TCP,
    PROTO_UDP,
};
use flowlens::models::{DecisionTree, Forest, Mlp, Node};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// ---- Shapley ----

/// Appends a random subtree (splits on features `< p`) and returns its sample count.
pub fn grow(rng: &mut ChaCha8Rng, nodes: &mut Vec<Node>, p: usize, depth: usize) -> usize {
    let at = nodes.len();
    if depth == 0 || rng.random_bool(0.25) {
        let counts = [rng.random_range(0..6), rng.random_range(1..6)];
        nodes.push(Node::leaf(counts));
        return counts[0] + counts[1];
    }
    nodes.push(Node::leaf([0, 1]));
    let feature = rng.random_range(0..p);
    let threshold = rng.random_range(0.1..0.9);
    let left = nodes.len();
    let l = grow(rng, nodes, p, depth - 1);
    let right = nodes.len();
    let r = grow(rng, nodes, p, depth - 1);
    nodes[at] = Node::Split { feature, threshold, left, right, samples: l + r };
    l + r
}

pub fn random_forest(rng: &mut ChaCha8Rng, p: usize, max_depth: usize, max_trees: usize) -> Forest {
    let n_trees = rng.random_range(1..=max_trees);
    let trees = (0..n_trees)
        .map(|_| {
            let mut nodes = Vec::new();
            let depth = rng.random_range(1..=max_depth);
            grow(rng, &mut nodes, p, depth);
            DecisionTree::from_nodes(nodes).unwrap()
        })
        .collect();
    Forest::from_trees(trees, p).unwrap()
}

pub fn random_rows(rng: &mut ChaCha8Rng, n: usize, p: usize) -> Vec<Vec<f64>> {
    (0..n).map(|_| (0..p).map(|_| rng.random::<f64>()).collect()).collect()
}

/// Shapley values averaged over all feature orderings, with coalition values
/// computed directly from the definition.
pub fn permutation_oracle(f: &dyn Fn(&[f64]) -> f64, x: &[f64], bg: &[Vec<f64>]) -> Vec<f64> {
    let p = x.len();
    let val = |members: &[bool]| -> f64 {
        bg.iter()
            .map(|b| {
                let z: Vec<f64> = (0..p).map(|j| if members[j] { x[j] } else { b[j] }).collect();
                f(&z)
            })
            .sum::<f64>()
            / bg.len() as f64
    };
    let mut phi = vec![0.0; p];
    let mut perm: Vec<usize> = (0..p).collect();
    let mut count = 0usize;
    loop {
        let mut members = vec![false; p];
        let mut prev = val(&members);
        for &j in &perm {
            members[j] = true;
            let next = val(&members);
            phi[j] += next - prev;
            prev = next;
        }
        count += 1;
        // next lexicographic permutation
        let Some(i) = (0..p.saturating_sub(1)).rev().find(|&i| perm[i] < perm[i + 1]) else { break };
        let k = (i + 1..p).rev().find(|&k| perm[k] > perm[i]).unwrap();
        perm.swap(i, k);
        perm[i + 1..].reverse();
    }
    phi.iter().map(|v| v / count as f64).collect()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

// ---- AUC ----

/// P(score+ > score-) + P(tie)/2 over all pairs, counted in half units.
pub fn pairwise_auc(labels: &[u8], scores: &[f64]) -> f64 {
    let (mut half_wins, mut pairs) = (0u64, 0u64);
    for (i, &li) in labels.iter().enumerate() {
        for (j, &lj) in labels.iter().enumerate() {
            if li == 1 && lj == 0 {
                pairs += 1;
                half_wins += if scores[i] > scores[j] { 2 } else if scores[i] == scores[j] { 1 } else { 0 };
            }
        }
    }
    half_wins as f64 / (2 * pairs) as f64
}

// ---- gradients ----

/// Largest relative gap between analytic and central-difference gradients,
/// or `None` when a hidden pre-activation sits within `1e-2` of the ReLU
/// kink (central differences straddle the kink there).
pub fn gradient_gap(mlp: &Mlp, x: &[Vec<f64>], y: &[u8], h: f64) -> Option<f64> {
    let near_kink = x.iter().any(|r| {
        let zs = mlp.preactivations(r);
        zs[..zs.len() - 1].iter().flatten().any(|z| z.abs() < 1e-2)
    });
    if near_kink {
        return None;
    }
    let g = mlp.gradient(x, y).unwrap();
    let mut worst: f64 = 0.0;
    for l in 0..mlp.layers.len() {
        let n_w = mlp.layers[l].weights.len();
        for k in 0..n_w + mlp.layers[l].bias.len() {
            let nudged = |delta: f64| {
                let mut m = mlp.clone();
                let layer = &mut m.layers[l];
                if k < n_w {
                    layer.weights[k] += delta;
                } else {
                    layer.bias[k - n_w] += delta;
                }
                m.loss(x, y)
            };
            let fd = (nudged(h) - nudged(-h)) / (2.0 * h);
            let analytic = if k < n_w { g.layers[l].weights[k] } else { g.layers[l].bias[k - n_w] };
            let scale = 1f64.max(analytic.abs()).max(fd.abs());
            worst = worst.max((analytic - fd).abs() / scale);
        }
    }
    Some(worst)
}

/// A random net with random biases and a small batch to check it on.
pub fn random_net(widths: &[usize], seed: u64) -> (Mlp, Vec<Vec<f64>>, Vec<u8>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut mlp = Mlp::random(widths, seed).unwrap();
    for l in &mut mlp.layers {
        l.bias.iter_mut().for_each(|b| *b = rng.random_range(-0.5..0.5));
    }
    let x: Vec<Vec<f64>> = (0..6).map(|_| (0..widths[0]).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
    let y: Vec<u8> = (0..6).map(|i| (i % 2) as u8).collect();
    (mlp, x, y)
}

// ---- flow meter ----

pub fn packet(ts: u64, src: (Ipv4Addr, u16), dst: (Ipv4Addr, u16), proto: u8, side: &Side, k: usize) -> PacketRecord {
    let l4 = if proto == PROTO_TCP { 20 } else { 8 };
    let payload = side.sizes[k % side.sizes.len()];
    PacketRecord {
        ts_micros: ts,
        src_ip: src.0,
        dst_ip: dst.0,
        src_port: src.1,
        dst_port: dst.1,
        protocol: proto,
        ttl: side.ttl,
        ip_total_len: 20 + l4 + payload,
        l4_header_len: l4,
        payload_len: payload,
        tcp_flags: if proto == PROTO_TCP { side.flags[k % side.flags.len()] } else { 0 },
        tcp_window: if proto == PROTO_TCP { side.window } else { 0 },
        tcp_seq: if proto == PROTO_TCP { side.seq0.wrapping_add(k as u32 * 1000) } else { 0 },
        icmp_type: 0,
        icmp_code: 0,
    }
}

/// What one endpoint of a conversation sends.
#[derive(Debug, Clone)]
pub struct Side {
    pub sizes: Vec<u16>,
    pub flags: Vec<u8>,
    pub ttl: u8,
    pub window: u16,
    pub seq0: u32,
}

fn random_side(rng: &mut ChaCha8Rng) -> Side {
    use tcp_flags::{ACK, PSH, URG};
    let n = rng.random_range(1..5);
    let options = [ACK, ACK | PSH, ACK | PSH | URG, ACK];
    Side {
        sizes: (0..n).map(|_| rng.random_range(0..1400)).collect(),
        flags: (0..n).map(|_| options[rng.random_range(0..options.len())]).collect(),
        ttl: rng.random_range(30..130),
        window: rng.random_range(1000..65000),
        seq0: rng.random(),
    }
}

/// Conversations in which both endpoints send the same number of packets on
/// the same timing pattern, the follower `eps` microseconds behind the
/// leader. Returns the capture with endpoint A leading and the one with B
/// leading; every packet keeps its sender's sizes, flags, TTL and window.
pub fn leader_swap_captures(seed: u64, conversations: usize) -> (Vec<PacketRecord>, Vec<PacketRecord>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut original = Vec::new();
    let mut swapped = Vec::new();
    for c in 0..conversations {
        let a = (Ipv4Addr::new(10, 0, (c / 200) as u8, (c % 200) as u8 + 1), 20000 + c as u16);
        let b = (Ipv4Addr::new(172, 16, 0, (c % 250) as u8 + 1), [80, 443, 53, 8080][c % 4]);
        let proto = if c % 3 == 2 { PROTO_UDP } else { PROTO_TCP };
        let (side_a, side_b) = (random_side(&mut rng), random_side(&mut rng));
        let n = rng.random_range(1..12);
        let eps = rng.random_range(50..400);
        let start = 1_000_000_000 + c as u64 * 60_000_000;
        let mut t = start;
        let mut times = Vec::with_capacity(n);
        for _ in 0..n {
            times.push(t);
            // gaps beyond 1 s and 5 s exercise subflow and idle statistics
            t += match rng.random_range(0..10) {
                0 => rng.random_range(1_500_000..7_000_000),
                _ => rng.random_range(1_000..400_000),
            };
        }
        for (k, &t) in times.iter().enumerate() {
            original.push(packet(t, a, b, proto, &side_a, k));
            original.push(packet(t + eps, b, a, proto, &side_b, k));
            swapped.push(packet(t, b, a, proto, &side_b, k));
            swapped.push(packet(t + eps, a, b, proto, &side_a, k));
        }
    }
    original.sort_by_key(|p| p.ts_micros);
    swapped.sort_by_key(|p| p.ts_micros);
    (original, swapped)
}

/// The column that measures the same thing in the other direction, if any.
pub fn direction_partner(name: &str) -> Option<String> {
    const PAIRS: [(&str, &str); 15] = [
        ("Total Fwd Packet", "Total Bwd packets"),
        ("FWD Init Win Bytes", "Bwd Init Win Bytes"),
        ("SRC_TO_DST", "DST_TO_SRC"),
        ("CLIENT", "SERVER"),
        ("RETRANSMITTED_IN", "RETRANSMITTED_OUT"),
        ("TCP_WIN_MAX_IN", "TCP_WIN_MAX_OUT"),
        ("DURATION_IN", "DURATION_OUT"),
        ("IN_BYTES", "OUT_BYTES"),
        ("IN_PKTS", "OUT_PKTS"),
        ("IPV4_SRC_ADDR", "IPV4_DST_ADDR"),
        ("L4_SRC_PORT", "L4_DST_PORT"),
        ("Src IP", "Dst IP"),
        ("Src Port", "Dst Port"),
        ("Fwd", "Bwd"),
        ("fwd", "bwd"),
    ];
    for (a, b) in PAIRS {
        if name.contains(a) {
            return Some(name.replacen(a, b, 1));
        }
        if name.contains(b) {
            return Some(name.replacen(b, a, 1));
        }
    }
    None
}

/// Forward-only columns with no backward counterpart.
pub const ONE_SIDED: [&str; 2] = ["Fwd Act Data Pkts", "Fwd Seg Size Min"];

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * 1f64.max(a.abs()).max(b.abs())
}

/// Checks that leading with the other endpoint exchanges each directional
/// column with its partner and leaves every other column unchanged.
pub fn check_direction_swap(schema: &FeatureSchema, original: &FeatureTable, swapped: &FeatureTable) -> Result<usize, String> {
    if original.rows.len() != swapped.rows.len() {
        return Err(format!("{} rows vs {} after the swap", original.rows.len(), swapped.rows.len()));
    }
    let names: Vec<&str> = schema.column_names().collect();
    let n_ids = schema.identifier_count();
    let cell = |t: &FeatureTable, r: usize, j: usize| -> String {
        if j < n_ids { t.rows[r].ids[j].clone() } else { t.rows[r].values[j - n_ids].to_string() }
    };
    let mut compared = 0;
    for (j, name) in names.iter().enumerate() {
        if ONE_SIDED.contains(name) {
            continue;
        }
        let partner = match direction_partner(name) {
            Some(p) => names.iter().position(|n| *n == p).ok_or_else(|| format!("'{name}' pairs with unknown column '{p}'"))?,
            None => j,
        };
        for r in 0..original.rows.len() {
            let (before, after) = (cell(original, r, j), cell(swapped, r, partner));
            let same = if *name == "Flow ID" {
                let f: Vec<&str> = before.split('-').collect();
                after == format!("{}-{}-{}-{}-{}", f[1], f[0], f[3], f[2], f[4])
            } else if j < n_ids {
                before == after
            } else {
                close(original.rows[r].values[j - n_ids], swapped.rows[r].values[partner - n_ids])
            };
            if !same {
                return Err(format!("row {r}: '{name}' = {before} but its swap '{}' = {after}", names[partner]));
            }
            compared += 1;
        }
    }
    Ok(compared)
}

/// Partition, extrema ordering, time bounds and byte conservation on one
/// capture, plus run-to-run determinism of the CSV bytes.
pub fn check_flow_invariants(packets: &[PacketRecord]) -> Result<(), String> {
    let config = FlowMeterConfig::default();
    let flows = assemble_flows(packets, config.timeouts);
    let assigned: usize = flows.iter().map(|f| f.packet_count()).sum();
    if assigned != packets.len() {
        return Err(format!("{assigned} of {} packets assigned to flows", packets.len()));
    }
    for f in &flows {
        if f.fwd_packets.is_empty() || f.first_ts > f.last_ts {
            return Err(format!("flow {:?} is malformed", f.key));
        }
        if f.fwd_packets.iter().chain(&f.bwd_packets).any(|p| p.ts < f.first_ts || p.ts > f.last_ts) {
            return Err(format!("flow {:?} has a packet outside its time bounds", f.key));
        }
    }
    let ip_bytes: u64 = packets.iter().map(|p| u64::from(p.ip_total_len)).sum();

    let nf = FeatureSchema::netflow();
    let (table, _) = extract(packets, nf, &config).map_err(|e| e.to_string())?;
    let v = |r: usize, n: &str| table.rows[r].values[nf.learnable_index(n).unwrap()];
    let mut bytes = 0.0;
    for (r, f) in flows.iter().enumerate() {
        if v(r, "IN_PKTS") + v(r, "OUT_PKTS") != f.packet_count() as f64 {
            return Err(format!("row {r}: IN_PKTS + OUT_PKTS != packets"));
        }
        if v(r, "SHORTEST_FLOW_PKT") > v(r, "LONGEST_FLOW_PKT") || v(r, "MIN_TTL") > v(r, "MAX_TTL") {
            return Err(format!("row {r}: minimum above maximum"));
        }
        bytes += v(r, "IN_BYTES") + v(r, "OUT_BYTES");
    }
    if bytes != ip_bytes as f64 {
        return Err(format!("IN_BYTES + OUT_BYTES = {bytes}, packets carry {ip_bytes}"));
    }

    let cic = FeatureSchema::cic();
    let (ctable, _) = extract(packets, cic, &config).map_err(|e| e.to_string())?;
    let c = |r: usize, n: &str| ctable.rows[r].values[cic.learnable_index(n).unwrap()];
    for (r, f) in flows.iter().enumerate() {
        if c(r, "Total Fwd Packet") + c(r, "Total Bwd packets") != f.packet_count() as f64 {
            return Err(format!("row {r}: Fwd + Bwd packets != packets"));
        }
        for fam in ["Flow", "Fwd", "Bwd"] {
            let (lo, mean, hi) = (c(r, &format!("{fam} IAT Min")), c(r, &format!("{fam} IAT Mean")), c(r, &format!("{fam} IAT Max")));
            if !(lo <= mean + 1e-9 && mean <= hi + 1e-9) {
                return Err(format!("row {r}: {fam} IAT min {lo} mean {mean} max {hi}"));
            }
        }
    }

    for schema in [nf, cic] {
        let csv = |pk: &[PacketRecord]| {
            let (t, _) = extract(pk, schema, &config).unwrap();
            let mut out = Vec::new();
            t.write_csv(&mut out).unwrap();
            out
        };
        let reparsed = flowlens::flow_meter::parse_pcap(&flowlens::flow_meter::write_pcap(packets).unwrap()).unwrap();
        if csv(packets) != csv(packets) || csv(packets) != csv(&reparsed.packets) {
            return Err(format!("{} CSV differs between runs", schema.name));
        }
    }
    Ok(())
}
