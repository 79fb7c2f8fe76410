//! Adjacency pairs, per-dialogue-act-pair communication networks, and the
//! density / degree-centralization metrics computed on them.
//!
//! A network always has the five team roles as nodes. An edge `i → j`
//! carries the number of adjacency pairs in which `i` spoke and `j`
//! answered. Out- and in-degree centrality of a node are its row and column
//! weight sums; centralization of the network is
//!
//! ```text
//! C = Σ_i (c_max − c(i)) / ((N − 1) · U)
//! ```
//!
//! where `U` is the normalizer selected by [`Normalization`].

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{DaPair, PlayerId, Role, Utterance, TEAM_SIZE};

/// Default maximum start-time gap between two utterances of an adjacency pair.
pub const DEFAULT_MAX_GAP_MS: u64 = 5_000;

const NODE_PAIRS: usize = TEAM_SIZE * (TEAM_SIZE - 1) / 2;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NetworkError {
    #[error("utterances are not in (start, end, speaker) order at index {0}")]
    Unsorted(usize),
    #[error("utterance-count normalization needs the window's utterance count")]
    MissingUtteranceCount,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AdjacencyPair {
    pub sender: PlayerId,
    pub receiver: PlayerId,
    pub da_pair: DaPair,
    /// Start of the sender's utterance; the pair's timestamp.
    pub sent_at_ms: u64,
    pub gap_ms: u64,
}

/// Turns a sorted utterance sequence into adjacency pairs.
///
/// Every consecutive pair `(i, i+1)` with different speakers and a start gap
/// of at most `max_gap_ms` becomes a pair. Skipped pairs do not break the
/// chain: utterance `i+1` is still the sender for `i+2`.
pub fn extract_adjacency_pairs(utterances: &[Utterance], max_gap_ms: u64) -> Result<Vec<AdjacencyPair>, NetworkError> {
    if let Some(i) = utterances.windows(2).position(|w| w[0].order_key() > w[1].order_key()) {
        return Err(NetworkError::Unsorted(i + 1));
    }
    Ok(utterances
        .windows(2)
        .filter_map(|w| {
            let (a, b) = (&w[0], &w[1]);
            let gap_ms = b.start_ms - a.start_ms;
            (a.speaker != b.speaker && gap_ms <= max_gap_ms).then(|| AdjacencyPair {
                sender: a.speaker,
                receiver: b.speaker,
                da_pair: DaPair::new(a.da, b.da),
                sent_at_ms: a.start_ms,
                gap_ms,
            })
        })
        .collect())
}

/// Which adjacency pairs a network aggregates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum NetworkTag {
    Pair(DaPair),
    All,
}

impl NetworkTag {
    pub fn matches(self, pair: DaPair) -> bool {
        match self {
            NetworkTag::Pair(p) => p == pair,
            NetworkTag::All => true,
        }
    }
}

impl fmt::Display for NetworkTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NetworkTag::Pair(p) => write!(f, "{p}"),
            NetworkTag::All => f.write_str("all"),
        }
    }
}

impl From<NetworkTag> for String {
    fn from(t: NetworkTag) -> String {
        t.to_string()
    }
}

impl TryFrom<String> for NetworkTag {
    type Error = crate::model::ModelError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl std::str::FromStr for NetworkTag {
    type Err = crate::model::ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.trim().eq_ignore_ascii_case("all") {
            Ok(NetworkTag::All)
        } else {
            s.parse().map(NetworkTag::Pair)
        }
    }
}

/// Directed weighted network over the five team roles.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommNetwork {
    pub tag: NetworkTag,
    /// `weights[i][j]` = pairs sent by role `i` and answered by role `j`.
    pub weights: [[u32; TEAM_SIZE]; TEAM_SIZE],
}

impl CommNetwork {
    pub fn empty(tag: NetworkTag) -> Self {
        CommNetwork { tag, weights: [[0; TEAM_SIZE]; TEAM_SIZE] }
    }

    /// Adds one exchange; self-loops are ignored.
    pub fn add(&mut self, sender: Role, receiver: Role) {
        if sender != receiver {
            self.weights[sender.index()][receiver.index()] += 1;
        }
    }

    pub fn from_edges(tag: NetworkTag, edges: &[(Role, Role, u32)]) -> Self {
        let mut net = CommNetwork::empty(tag);
        for &(a, b, w) in edges {
            if a != b {
                net.weights[a.index()][b.index()] += w;
            }
        }
        net
    }

    pub fn weight(&self, sender: Role, receiver: Role) -> u32 {
        self.weights[sender.index()][receiver.index()]
    }

    /// Total edge weight `U`.
    pub fn pair_count(&self) -> u64 {
        self.weights.iter().flatten().map(|&w| u64::from(w)).sum()
    }

    pub fn edges(&self) -> impl Iterator<Item = (Role, Role, u32)> + '_ {
        Role::ALL.into_iter().flat_map(move |a| {
            Role::ALL.into_iter().filter_map(move |b| {
                let w = self.weight(a, b);
                (w > 0).then_some((a, b, w))
            })
        })
    }

    pub fn out_degrees(&self) -> [u64; TEAM_SIZE] {
        std::array::from_fn(|i| self.weights[i].iter().map(|&w| u64::from(w)).sum())
    }

    pub fn in_degrees(&self) -> [u64; TEAM_SIZE] {
        std::array::from_fn(|j| self.weights.iter().map(|row| u64::from(row[j])).sum())
    }
}

/// Builds one network per requested tag plus the untagged `All` network.
pub fn build_networks(pairs: &[AdjacencyPair], tags: &[DaPair]) -> BTreeMap<NetworkTag, CommNetwork> {
    let mut out: BTreeMap<NetworkTag, CommNetwork> = tags
        .iter()
        .map(|&p| NetworkTag::Pair(p))
        .chain([NetworkTag::All])
        .map(|t| (t, CommNetwork::empty(t)))
        .collect();
    for pair in pairs {
        let (s, r) = (pair.sender.role(), pair.receiver.role());
        if let Some(net) = out.get_mut(&NetworkTag::Pair(pair.da_pair)) {
            net.add(s, r);
        }
        if let Some(net) = out.get_mut(&NetworkTag::All) {
            net.add(s, r);
        }
    }
    out
}

/// Fraction of the ten unordered player pairs that exchanged at least once,
/// in either direction.
pub fn density(net: &CommNetwork) -> f64 {
    let mut connected = 0usize;
    for i in 0..TEAM_SIZE {
        for j in (i + 1)..TEAM_SIZE {
            if net.weights[i][j] + net.weights[j][i] > 0 {
                connected += 1;
            }
        }
    }
    connected as f64 / NODE_PAIRS as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Direction {
    Out,
    In,
}

/// Normalizer `U` of the centralization denominator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Normalization {
    /// `U` = total pair weight of the network; a single sender or receiver
    /// of every pair gives exactly 1.
    #[default]
    Pairs,
    /// `U` = number of utterances in the window.
    Utterances,
}

impl Normalization {
    pub fn as_str(self) -> &'static str {
        match self {
            Normalization::Pairs => "pairs",
            Normalization::Utterances => "utterances",
        }
    }
}

impl std::str::FromStr for Normalization {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "pairs" => Ok(Normalization::Pairs),
            "utterances" => Ok(Normalization::Utterances),
            other => Err(format!("unknown normalization `{other}` (expected pairs|utterances)")),
        }
    }
}

fn normalizer(net: &CommNetwork, normalization: Normalization, utterance_count: Option<usize>) -> Result<u64, NetworkError> {
    match normalization {
        Normalization::Pairs => Ok(net.pair_count()),
        Normalization::Utterances => utterance_count.map(|n| n as u64).ok_or(NetworkError::MissingUtteranceCount),
    }
}

fn centralization_of(degrees: &[u64; TEAM_SIZE], u: u64) -> f64 {
    if u == 0 {
        return 0.0;
    }
    let max = degrees.iter().copied().max().unwrap_or(0);
    let spread: u64 = degrees.iter().map(|&d| max - d).sum();
    spread as f64 / ((TEAM_SIZE as u64 - 1) * u) as f64
}

/// Degree centralization of the network; 0 when the normalizer is 0.
pub fn centralization(
    net: &CommNetwork,
    direction: Direction,
    normalization: Normalization,
    utterance_count: Option<usize>,
) -> Result<f64, NetworkError> {
    let u = normalizer(net, normalization, utterance_count)?;
    let degrees = match direction {
        Direction::Out => net.out_degrees(),
        Direction::In => net.in_degrees(),
    };
    Ok(centralization_of(&degrees, u))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NodeCentrality {
    pub out_degree: u64,
    pub in_degree: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkMetrics {
    pub rho: f64,
    pub c_od: f64,
    pub c_id: f64,
    pub pair_count: u64,
    pub per_node: [NodeCentrality; TEAM_SIZE],
    pub normalization: Normalization,
    /// The normalizer was zero; all three metrics are reported as 0.
    pub degenerate: bool,
}

pub fn metrics(
    net: &CommNetwork,
    normalization: Normalization,
    utterance_count: Option<usize>,
) -> Result<NetworkMetrics, NetworkError> {
    let u = normalizer(net, normalization, utterance_count)?;
    let out = net.out_degrees();
    let inn = net.in_degrees();
    let pair_count = net.pair_count();
    Ok(NetworkMetrics {
        rho: density(net),
        c_od: centralization_of(&out, u),
        c_id: centralization_of(&inn, u),
        pair_count,
        per_node: std::array::from_fn(|i| NodeCentrality { out_degree: out[i], in_degree: inn[i] }),
        normalization,
        degenerate: u == 0 || pair_count == 0,
    })
}
