//! Campaign discovery: emails are split by sector, then by the full set of
//! generic actions, then by the first impersonated company, and finally by
//! main topic and specific action.

mod summary;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::codebook::{join_multi, normalize_company, normalize_invivo, CodedEmail};
use crate::corpus::EmailId;

pub use summary::{
    campaign_report, summarize_cluster, transport_rows, CampaignError, CampaignReport, ClusterSummary, CorpusIndex,
    LayerListing, TransportRow,
};

/// Default edit budget for the Levenshtein matcher.
pub const DEFAULT_LEVENSHTEIN_THRESHOLD: usize = 5;

/// Unit-cost edit distance over Unicode scalar values.
pub fn levenshtein(s: &str, t: &str) -> usize {
    let t: Vec<char> = t.chars().collect();
    let mut prev: Vec<usize> = (0..=t.len()).collect();
    let mut cur = vec![0; t.len() + 1];
    for (i, a) in s.chars().enumerate() {
        cur[0] = i + 1;
        for (j, b) in t.iter().enumerate() {
            let sub = prev[j] + usize::from(a != *b);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[t.len()]
}

/// How step 4 decides that two (topic, specific action) pairs belong together.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Matcher {
    Exact,
    /// Single-linkage: pairs within `threshold` total edits (topic plus
    /// joined specific actions) are chained into one cluster.
    Levenshtein {
        threshold: usize,
    },
}

impl Default for Matcher {
    fn default() -> Self {
        Matcher::Exact
    }
}

impl fmt::Display for Matcher {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Matcher::Exact => f.write_str("exact"),
            Matcher::Levenshtein { threshold } => write!(f, "levenshtein:{threshold}"),
        }
    }
}

impl FromStr for Matcher {
    type Err = String;

    /// `exact`, `levenshtein` or `levenshtein:N`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim().to_lowercase();
        match s.split_once(':') {
            None if s == "exact" => Ok(Matcher::Exact),
            None if s == "levenshtein" => Ok(Matcher::Levenshtein { threshold: DEFAULT_LEVENSHTEIN_THRESHOLD }),
            Some(("levenshtein", n)) => n
                .trim()
                .parse()
                .map(|threshold| Matcher::Levenshtein { threshold })
                .map_err(|_| format!("invalid levenshtein threshold {n:?}")),
            _ => Err(format!("unknown matcher {s:?} (expected exact or levenshtein[:N])")),
        }
    }
}

/// The coded values a cluster shares, down to its depth.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ClusterKey {
    pub depth: u8,
    pub sector: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub action_set: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub company: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub topic: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub action_specific: Option<String>,
}

impl ClusterKey {
    fn at_depth(c: &CodedEmail, depth: u8) -> Self {
        ClusterKey {
            depth,
            sector: c.sector.trim().to_lowercase(),
            action_set: (depth >= 2).then(|| action_set(c)),
            company: (depth >= 3).then(|| normalize_company(c.first_company())),
            topic: (depth >= 4).then(|| normalize_invivo(&c.main_topic)),
            action_specific: (depth >= 4).then(|| specific_key(c)),
        }
    }

    fn parent(&self) -> Option<ClusterKey> {
        let mut p = self.clone();
        match self.depth {
            4 => {
                p.topic = None;
                p.action_specific = None;
            }
            3 => p.company = None,
            2 => p.action_set = None,
            _ => return None,
        }
        p.depth -= 1;
        Some(p)
    }
}

fn action_set(c: &CodedEmail) -> String {
    let set: BTreeSet<String> = c.actions_generic.iter().map(|a| a.trim().to_lowercase()).collect();
    join_multi(&set)
}

fn specific_key(c: &CodedEmail) -> String {
    c.action_specific.iter().map(|p| normalize_invivo(p)).filter(|p| !p.is_empty()).collect::<Vec<_>>().join(", ")
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cluster {
    pub key: ClusterKey,
    pub member_ids: Vec<String>,
}

impl Cluster {
    pub fn size(&self) -> usize {
        self.member_ids.len()
    }
}

/// Every layer of the four-step split; `layers[3]` holds the leaves.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Clustering {
    pub matcher: Matcher,
    pub layers: Vec<Vec<Cluster>>,
}

impl Clustering {
    pub fn leaves(&self) -> &[Cluster] {
        self.layers.last().map_or(&[], Vec::as_slice)
    }

    /// Clusters at `depth` (1 = sector ... 4 = leaves).
    pub fn layer(&self, depth: u8) -> &[Cluster] {
        depth.checked_sub(1).and_then(|i| self.layers.get(i as usize)).map_or(&[], Vec::as_slice)
    }
}

/// Sort ids numerically when they are corpus ids, else as strings.
pub(crate) fn sort_ids(ids: &mut [String]) {
    ids.sort_by_cached_key(|s| match s.parse::<EmailId>() {
        Ok(id) => (0, Some(id), String::new()),
        Err(_) => (1, None, s.clone()),
    });
}

fn group(coded: &[CodedEmail], depth: u8) -> Vec<Cluster> {
    let mut map: BTreeMap<ClusterKey, Vec<String>> = BTreeMap::new();
    for c in coded {
        map.entry(ClusterKey::at_depth(c, depth)).or_default().push(c.email_id.clone());
    }
    map.into_iter()
        .map(|(key, mut member_ids)| {
            sort_ids(&mut member_ids);
            Cluster { key, member_ids }
        })
        .collect()
}

struct DisjointSet(Vec<usize>);

impl DisjointSet {
    fn find(&mut self, x: usize) -> usize {
        let mut root = x;
        while self.0[root] != root {
            root = self.0[root];
        }
        let mut x = x;
        while self.0[x] != root {
            let next = self.0[x];
            self.0[x] = root;
            x = next;
        }
        root
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        // smaller index wins so roots do not depend on merge order
        let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
        self.0[hi] = lo;
    }
}

/// Merge exact step-4 clusters that lie within `threshold` edits of each
/// other, per step-3 parent. The merged key takes the smallest member key.
fn merge_by_levenshtein(exact: Vec<Cluster>, threshold: usize) -> Vec<Cluster> {
    let mut by_parent: BTreeMap<ClusterKey, Vec<Cluster>> = BTreeMap::new();
    for c in exact {
        by_parent.entry(c.key.parent().expect("leaf depth")).or_default().push(c);
    }
    let mut out = Vec::new();
    for (_, group) in by_parent {
        let mut dsu = DisjointSet((0..group.len()).collect());
        for i in 0..group.len() {
            for j in i + 1..group.len() {
                let (a, b) = (&group[i].key, &group[j].key);
                let d = levenshtein(a.topic.as_deref().unwrap_or(""), b.topic.as_deref().unwrap_or(""))
                    + levenshtein(
                        a.action_specific.as_deref().unwrap_or(""),
                        b.action_specific.as_deref().unwrap_or(""),
                    );
                if d <= threshold {
                    dsu.union(i, j);
                }
            }
        }
        let mut merged: BTreeMap<usize, Cluster> = BTreeMap::new();
        for (i, c) in group.into_iter().enumerate() {
            let root = dsu.find(i);
            match merged.get_mut(&root) {
                Some(m) => {
                    m.member_ids.extend(c.member_ids);
                    if c.key < m.key {
                        m.key = c.key;
                    }
                }
                None => {
                    merged.insert(root, c);
                }
            }
        }
        out.extend(merged.into_values().map(|mut c| {
            sort_ids(&mut c.member_ids);
            c
        }));
    }
    out.sort_by(|a, b| a.key.cmp(&b.key));
    out
}

/// Four-step clustering of coded emails. Keys, not input order, define the
/// clusters, so any permutation of `coded` gives the same result.
pub fn cluster_multilayer(coded: &[CodedEmail], matcher: Matcher) -> Clustering {
    let mut layers: Vec<Vec<Cluster>> = (1..=4).map(|d| group(coded, d)).collect();
    if let Matcher::Levenshtein { threshold } = matcher {
        let exact = layers.pop().expect("four layers");
        layers.push(merge_by_levenshtein(exact, threshold));
    }
    Clustering { matcher, layers }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterStats {
    pub total_clusters: usize,
    /// Clusters with more than one email.
    pub multi_clusters: usize,
    /// Clusters with more than five emails.
    pub large_clusters: usize,
    pub mean_size_excl_singletons: Option<f64>,
    pub median_size_excl_singletons: Option<f64>,
}

pub const LARGE_CLUSTER_MIN: usize = 6;

pub fn cluster_stats(clusters: &[Cluster]) -> ClusterStats {
    let mut sizes: Vec<usize> = clusters.iter().map(Cluster::size).filter(|&s| s > 1).collect();
    sizes.sort_unstable();
    let mean = (!sizes.is_empty()).then(|| sizes.iter().sum::<usize>() as f64 / sizes.len() as f64);
    let median = (!sizes.is_empty()).then(|| {
        let m = sizes.len() / 2;
        if sizes.len() % 2 == 1 {
            sizes[m] as f64
        } else {
            (sizes[m - 1] + sizes[m]) as f64 / 2.0
        }
    });
    ClusterStats {
        total_clusters: clusters.len(),
        multi_clusters: sizes.len(),
        large_clusters: sizes.iter().filter(|&&s| s >= LARGE_CLUSTER_MIN).count(),
        mean_size_excl_singletons: mean,
        median_size_excl_singletons: median,
    }
}
