//! Two-round labeling support: sample selection, inter-annotator agreement,
//! and community stance classification. The labeling itself is done by
//! humans through the sample/label files; nothing here auto-labels stance.

use std::collections::{BTreeMap, HashMap, HashSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::cluster::Partition;
use crate::error::{Error, Result};
use crate::ingest::TweetEvent;

/// Tweet stance label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    ProVax,
    NoVax,
    Other,
}

impl Label {
    pub fn parse(s: &str) -> Result<Label> {
        match s.trim() {
            "pro-vax" => Ok(Label::ProVax),
            "no-vax" => Ok(Label::NoVax),
            "other" => Ok(Label::Other),
            other => Err(Error::InvalidInput(format!("unknown label {other:?}"))),
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Label::ProVax => "pro-vax",
            Label::NoVax => "no-vax",
            Label::Other => "other",
        }
    }
}

/// Community-level stance: `A` for communities over the no-vax label
/// threshold, `O` for everything else.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Stance {
    NoVax,
    Other,
}

impl Stance {
    pub fn as_str(&self) -> &'static str {
        match self {
            Stance::NoVax => "A",
            Stance::Other => "O",
        }
    }

    pub fn parse(s: &str) -> Result<Stance> {
        match s.trim() {
            "A" => Ok(Stance::NoVax),
            "O" => Ok(Stance::Other),
            other => Err(Error::InvalidInput(format!("unknown stance {other:?}"))),
        }
    }
}

/// One human annotation, as stored in label files:
/// `tweet_id<TAB>community_id<TAB>round<TAB>annotator_id<TAB>label`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelRecord {
    pub tweet_id: String,
    pub community_id: String,
    pub round: u8,
    pub annotator_id: String,
    pub label: Label,
}

impl LabelRecord {
    pub fn parse_file(text: &str) -> Result<Vec<LabelRecord>> {
        let mut records = Vec::new();
        for (no, line) in text.lines().enumerate() {
            let line = line.trim_end();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let parts: Vec<&str> = line.split('\t').collect();
            if parts.len() != 5 {
                return Err(Error::Format(format!(
                    "label file line {}: expected 5 fields",
                    no + 1
                )));
            }
            let round: u8 = parts[2]
                .parse()
                .map_err(|_| Error::Format(format!("label file line {}: bad round", no + 1)))?;
            if round != 1 && round != 2 {
                return Err(Error::Format(format!(
                    "label file line {}: round must be 1 or 2",
                    no + 1
                )));
            }
            records.push(LabelRecord {
                tweet_id: parts[0].to_string(),
                community_id: parts[1].to_string(),
                round,
                annotator_id: parts[3].to_string(),
                label: Label::parse(parts[4])?,
            });
        }
        Ok(records)
    }

    pub fn to_line(&self) -> String {
        format!(
            "{}\t{}\t{}\t{}\t{}",
            self.tweet_id,
            self.community_id,
            self.round,
            self.annotator_id,
            self.label.as_str()
        )
    }
}

/// Community stance assignments with the no-vax label tallies that produced
/// them. Keys are the caller's community identifiers.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StanceMap {
    entries: BTreeMap<String, (Stance, u32)>,
}

impl StanceMap {
    pub fn stance_of(&self, community: &str) -> Option<Stance> {
        self.entries.get(community).map(|(s, _)| *s)
    }

    pub fn novax_labels(&self, community: &str) -> u32 {
        self.entries.get(community).map(|(_, n)| *n).unwrap_or(0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, Stance, u32)> {
        self.entries.iter().map(|(c, (s, n))| (c.as_str(), *s, *n))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn insert(&mut self, community: String, stance: Stance, novax_labels: u32) {
        self.entries.insert(community, (stance, novax_labels));
    }

    /// True iff any community carries stance A.
    pub fn has_novax(&self) -> bool {
        self.entries.values().any(|(s, _)| *s == Stance::NoVax)
    }
}

/// Per-community label tallies from one round.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LabelCounts {
    pub pro: u32,
    pub no: u32,
    pub other: u32,
}

impl LabelCounts {
    pub fn add(&mut self, label: Label) {
        match label {
            Label::ProVax => self.pro += 1,
            Label::NoVax => self.no += 1,
            Label::Other => self.other += 1,
        }
    }

    /// No-vax is the strict plurality class.
    pub fn novax_plurality(&self) -> bool {
        self.no > self.pro && self.no > self.other
    }
}

/// Tallies label records per community for one round (0 = both rounds).
pub fn tally_labels(records: &[LabelRecord], round: u8) -> BTreeMap<String, LabelCounts> {
    let mut out: BTreeMap<String, LabelCounts> = BTreeMap::new();
    for r in records {
        if round == 0 || r.round == round {
            out.entry(r.community_id.clone()).or_default().add(r.label);
        }
    }
    out
}

/// Round-one sample: for every community holding more than `min_frac` of
/// the partition's users, uniformly samples `n` distinct tweets authored by
/// its members (all of them when fewer exist). Deterministic given `seed`.
pub fn sample_round1(
    partition: &Partition,
    events: &[TweetEvent],
    n: usize,
    min_frac: f64,
    seed: u64,
) -> Vec<(u32, String)> {
    let total = partition.len();
    if total == 0 {
        return Vec::new();
    }
    let sizes = partition.community_sizes();
    // community -> sorted distinct tweet ids authored by members
    let mut tweets: BTreeMap<u32, Vec<&str>> = BTreeMap::new();
    let mut seen: HashSet<&str> = HashSet::new();
    for ev in events {
        if let Some(c) = partition.community_of(&ev.user_id) {
            if seen.insert(&ev.tweet_id) {
                tweets.entry(c).or_default().push(&ev.tweet_id);
            }
        }
    }
    let mut out = Vec::new();
    for (c, mut ids) in tweets {
        let share = sizes[c as usize] as f64 / total as f64;
        if share <= min_frac {
            continue;
        }
        ids.sort_unstable();
        let mut rng = ChaCha20Rng::seed_from_u64(seed ^ mix(c as u64));
        ids.shuffle(&mut rng);
        for id in ids.into_iter().take(n) {
            out.push((c, id.to_string()));
        }
    }
    out
}

fn mix(x: u64) -> u64 {
    // splitmix64 finalizer
    let mut z = x.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Round-two sample: for every community whose round-one labels make no-vax
/// the strict plurality, returns its `top` most retweeted tweets after
/// dropping the `exclude_top` most retweeted tweets of the whole network.
/// Popularity ties break by tweet id.
pub fn sample_round2(
    partition: &Partition,
    events: &[TweetEvent],
    round1_counts: &BTreeMap<u32, LabelCounts>,
    top: usize,
    exclude_top: usize,
) -> Vec<(u32, String)> {
    // popularity: retweet count of each tweet within these events
    let mut popularity: HashMap<&str, u64> = HashMap::new();
    for ev in events {
        if let Some(orig) = &ev.retweeted_tweet_id {
            *popularity.entry(orig.as_str()).or_default() += 1;
        }
    }
    let pop_of = |id: &str| popularity.get(id).copied().unwrap_or(0);

    // distinct tweets authored by members, per community
    let mut tweets: BTreeMap<u32, Vec<&str>> = BTreeMap::new();
    let mut all: Vec<&str> = Vec::new();
    let mut seen: HashSet<&str> = HashSet::new();
    for ev in events {
        if let Some(c) = partition.community_of(&ev.user_id) {
            if seen.insert(&ev.tweet_id) {
                tweets.entry(c).or_default().push(&ev.tweet_id);
                all.push(&ev.tweet_id);
            }
        }
    }

    // network-wide exclusion set
    all.sort_unstable_by(|a, b| pop_of(b).cmp(&pop_of(a)).then(a.cmp(b)));
    let excluded: HashSet<&str> = all.into_iter().take(exclude_top).collect();

    let mut out = Vec::new();
    for (c, mut ids) in tweets {
        let eligible = round1_counts.get(&c).is_some_and(|t| t.novax_plurality());
        if !eligible {
            continue;
        }
        ids.retain(|id| !excluded.contains(id));
        ids.sort_unstable_by(|a, b| pop_of(b).cmp(&pop_of(a)).then(a.cmp(b)));
        for id in ids.into_iter().take(top) {
            out.push((c, id.to_string()));
        }
    }
    out
}

/// Cohen's kappa over two aligned label vectors, restricted to the given
/// class set (pairs with an out-of-set label on either side are dropped).
pub fn cohen_kappa<T: Eq + std::hash::Hash + Copy>(
    labels_a: &[T],
    labels_b: &[T],
    classes: &[T],
) -> Result<f64> {
    if labels_a.len() != labels_b.len() {
        return Err(Error::InvalidInput(format!(
            "label vectors differ in length: {} vs {}",
            labels_a.len(),
            labels_b.len()
        )));
    }
    let class_set: HashSet<T> = classes.iter().copied().collect();
    let pairs: Vec<(T, T)> = labels_a
        .iter()
        .zip(labels_b)
        .filter(|(a, b)| class_set.contains(a) && class_set.contains(b))
        .map(|(a, b)| (*a, *b))
        .collect();
    if pairs.is_empty() {
        return Err(Error::InvalidInput(
            "no label pairs within the class set".into(),
        ));
    }
    let n = pairs.len() as f64;
    let mut agree = 0u64;
    let mut marg_a: HashMap<T, u64> = HashMap::new();
    let mut marg_b: HashMap<T, u64> = HashMap::new();
    for (a, b) in &pairs {
        if a == b {
            agree += 1;
        }
        *marg_a.entry(*a).or_default() += 1;
        *marg_b.entry(*b).or_default() += 1;
    }
    let p_o = agree as f64 / n;
    let mut p_e = 0.0;
    for class in classes {
        let pa = marg_a.get(class).copied().unwrap_or(0) as f64 / n;
        let pb = marg_b.get(class).copied().unwrap_or(0) as f64 / n;
        p_e += pa * pb;
    }
    if (1.0 - p_e).abs() < 1e-15 {
        return Err(Error::Numerical(
            "degenerate marginals: expected agreement is 1".into(),
        ));
    }
    Ok((p_o - p_e) / (1.0 - p_e))
}

/// A community is stance A iff its total no-vax labels across both rounds
/// and all annotators strictly exceed `threshold`.
pub fn classify_communities(records: &[LabelRecord], threshold: u32) -> StanceMap {
    let mut counts: BTreeMap<String, u32> = BTreeMap::new();
    for r in records {
        let entry = counts.entry(r.community_id.clone()).or_default();
        if r.label == Label::NoVax {
            *entry += 1;
        }
    }
    let mut map = StanceMap::default();
    for (community, novax) in counts {
        let stance = if novax > threshold {
            Stance::NoVax
        } else {
            Stance::Other
        };
        map.insert(community, stance, novax);
    }
    map
}
