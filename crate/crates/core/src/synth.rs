//! Ground-truth generators: stochastic block model graphs and synthetic
//! multi-country event corpora with exact truth files. These are the
//! verification oracles for the clustering, polarization, and flow layers.

use std::collections::BTreeMap;

use chrono::Duration;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Poisson};

use crate::annotate::Stance;
use crate::cohorts::{AccountStatus, Status};
use crate::error::{Error, Result};
use crate::graph::WeightedGraph;
use crate::ingest::{Period, TweetEvent};

/// Stochastic block model with geometric integer edge weights.
#[derive(Debug, Clone)]
pub struct SbmSpec {
    pub block_sizes: Vec<u32>,
    pub p_in: f64,
    pub p_out: f64,
    /// Mean of the geometric weight distribution, at least 1.
    pub mean_weight: f64,
    pub seed: u64,
}

impl SbmSpec {
    fn validate(&self) -> Result<()> {
        if self.block_sizes.is_empty() || self.block_sizes.contains(&0) {
            return Err(Error::InvalidInput("block sizes must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.p_out)
            || !(0.0..=1.0).contains(&self.p_in)
            || self.p_out > self.p_in
        {
            return Err(Error::InvalidInput("need 0 <= p_out <= p_in <= 1".into()));
        }
        if self.mean_weight < 1.0 {
            return Err(Error::InvalidInput("mean_weight must be at least 1".into()));
        }
        Ok(())
    }

    pub fn node_count(&self) -> u32 {
        self.block_sizes.iter().sum()
    }

    /// Planted block of each node index.
    pub fn block_assignment(&self) -> Vec<u32> {
        let mut out = Vec::with_capacity(self.node_count() as usize);
        for (b, &size) in self.block_sizes.iter().enumerate() {
            out.extend(std::iter::repeat_n(b as u32, size as usize));
        }
        out
    }
}

pub fn sbm_node_name(idx: u32) -> String {
    format!("n{idx:06}")
}

/// Number of indices skipped before the next success, for Bernoulli(p)
/// trials enumerated in order (geometric jumps keep generation O(edges)).
fn geometric_skip<R: Rng>(rng: &mut R, p: f64) -> Option<u64> {
    if p <= 0.0 {
        return None;
    }
    if p >= 1.0 {
        return Some(0);
    }
    let u: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
    Some((u.ln() / (1.0 - p).ln()).floor() as u64)
}

fn geometric_weight<R: Rng>(rng: &mut R, mean: f64) -> u64 {
    if mean <= 1.0 {
        return 1;
    }
    let q = 1.0 / mean;
    let u: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
    1 + (u.ln() / (1.0 - q).ln()).floor() as u64
}

/// Generates the undirected weighted SBM graph, deterministic per seed.
pub fn sbm_generate(spec: &SbmSpec) -> Result<WeightedGraph> {
    spec.validate()?;
    let mut rng = ChaCha20Rng::seed_from_u64(spec.seed);
    let blocks = spec.block_sizes.len();
    let mut starts = Vec::with_capacity(blocks);
    let mut acc = 0u64;
    for &s in &spec.block_sizes {
        starts.push(acc);
        acc += s as u64;
    }
    let mut edges: Vec<(u32, u32, u64)> = Vec::new();

    // intra-block pairs (i < j), enumerated in triangular order
    for (b, &size) in spec.block_sizes.iter().enumerate() {
        let m = size as u64;
        let n_pairs = m * (m - 1) / 2;
        let base = starts[b];
        let mut pos: i64 = -1;
        while let Some(skip) = geometric_skip(&mut rng, spec.p_in) {
            pos += 1 + skip as i64;
            if pos as u64 >= n_pairs {
                break;
            }
            let (i, j) = unrank_pair(pos as u64, m);
            let w = geometric_weight(&mut rng, spec.mean_weight);
            edges.push(((base + i) as u32, (base + j) as u32, w));
        }
    }

    // inter-block pairs, block-by-block rectangles
    for a in 0..blocks {
        for b in (a + 1)..blocks {
            let (na, nb) = (spec.block_sizes[a] as u64, spec.block_sizes[b] as u64);
            let n_pairs = na * nb;
            let mut pos: i64 = -1;
            while let Some(skip) = geometric_skip(&mut rng, spec.p_out) {
                pos += 1 + skip as i64;
                if pos as u64 >= n_pairs {
                    break;
                }
                let i = starts[a] + pos as u64 / nb;
                let j = starts[b] + pos as u64 % nb;
                let w = geometric_weight(&mut rng, spec.mean_weight);
                edges.push((i as u32, j as u32, w));
            }
        }
    }

    let names: Vec<String> = (0..spec.node_count()).map(sbm_node_name).collect();
    Ok(WeightedGraph::from_weighted_edges(
        false,
        edges
            .iter()
            .map(|&(i, j, w)| (names[i as usize].as_str(), names[j as usize].as_str(), w)),
    ))
}

/// Maps a triangular pair rank to (i, j) with i < j < m.
fn unrank_pair(k: u64, m: u64) -> (u64, u64) {
    // find the largest i with i*(2m - i - 1)/2 <= k
    let kf = k as f64;
    let mf = m as f64;
    let mut i = ((2.0 * mf - 1.0 - ((2.0 * mf - 1.0) * (2.0 * mf - 1.0) - 8.0 * kf).sqrt()) / 2.0)
        .floor() as u64;
    // float guard: correct by at most one step either way
    let offset = |i: u64| i * (2 * m - i - 1) / 2;
    while i > 0 && offset(i) > k {
        i -= 1;
    }
    while offset(i + 1) <= k {
        i += 1;
    }
    let j = i + 1 + (k - offset(i));
    (i, j)
}

/// One synthetic community.
#[derive(Debug, Clone)]
pub struct CommunitySpec {
    pub stance: Stance,
    pub n_users: u32,
}

/// One synthetic country.
#[derive(Debug, Clone)]
pub struct CountrySpec {
    pub code: String,
    pub lang: String,
    pub communities: Vec<CommunitySpec>,
}

/// Full corpus specification. Retweet rates are expected counts per user
/// per period; `aa_cross_multiplier` scales the cross-border rate between
/// same-stance no-vax users (0 removes those retweets entirely).
#[derive(Debug, Clone)]
pub struct CorpusSpec {
    pub countries: Vec<CountrySpec>,
    pub periods: Vec<Period>,
    pub posts_per_user: f64,
    pub urls_per_user_novax: f64,
    pub urls_per_user_other: f64,
    pub lowcred_rate_novax: f64,
    pub lowcred_rate_other: f64,
    pub retweets_intra: f64,
    pub retweets_inter: f64,
    pub retweets_cross: f64,
    pub aa_cross_multiplier: f64,
    pub suspension_rate_novax: f64,
    pub suspension_rate_other: f64,
    /// Every Nth user gets a non-location profile string (0 disables).
    pub missing_location_every: u32,
    pub seed: u64,
}

impl CorpusSpec {
    fn validate(&self) -> Result<()> {
        if self.countries.is_empty() || self.periods.is_empty() {
            return Err(Error::InvalidInput(
                "corpus needs at least one country and period".into(),
            ));
        }
        for rate in [
            self.lowcred_rate_novax,
            self.lowcred_rate_other,
            self.suspension_rate_novax,
            self.suspension_rate_other,
        ] {
            if !(0.0..=1.0).contains(&rate) {
                return Err(Error::InvalidInput(
                    "probabilities must be within [0, 1]".into(),
                ));
            }
        }
        for rate in [
            self.posts_per_user,
            self.urls_per_user_novax,
            self.urls_per_user_other,
            self.retweets_intra,
            self.retweets_inter,
            self.retweets_cross,
            self.aa_cross_multiplier,
        ] {
            if rate < 0.0 {
                return Err(Error::InvalidInput("rates must be non-negative".into()));
            }
        }
        Ok(())
    }

    /// Parses the declarative key = value spec format. `period` and
    /// `country` keys repeat; country values look like
    /// `US en novax:150 other:150`.
    pub fn parse(text: &str) -> Result<CorpusSpec> {
        let mut spec = CorpusSpec {
            countries: Vec::new(),
            periods: Vec::new(),
            posts_per_user: 3.0,
            urls_per_user_novax: 12.0,
            urls_per_user_other: 12.0,
            lowcred_rate_novax: 0.25,
            lowcred_rate_other: 0.02,
            retweets_intra: 8.0,
            retweets_inter: 1.0,
            retweets_cross: 0.3,
            aa_cross_multiplier: 10.0,
            suspension_rate_novax: 0.0,
            suspension_rate_other: 0.0,
            missing_location_every: 0,
            seed: 0,
        };
        for (no, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Format(format!("spec line {}: expected key = value", no + 1))
            })?;
            let (key, value) = (key.trim(), value.trim());
            let bad = |what: &str| Error::Format(format!("spec line {}: bad {what}", no + 1));
            match key {
                "seed" => spec.seed = value.parse().map_err(|_| bad("seed"))?,
                "period" => {
                    let parts: Vec<&str> = value.split_whitespace().collect();
                    if parts.len() != 3 {
                        return Err(bad("period (want: name start end)"));
                    }
                    let parse_ts = |s: &str| {
                        chrono::DateTime::parse_from_rfc3339(s)
                            .map(|t| t.with_timezone(&chrono::Utc))
                            .map_err(|_| bad("period timestamp"))
                    };
                    spec.periods.push(Period::new(
                        parts[0],
                        parse_ts(parts[1])?,
                        parse_ts(parts[2])?,
                    )?);
                }
                "country" => {
                    let parts: Vec<&str> = value.split_whitespace().collect();
                    if parts.len() < 3 {
                        return Err(bad("country (want: CODE lang stance:count ...)"));
                    }
                    let mut communities = Vec::new();
                    for part in &parts[2..] {
                        let (stance, count) =
                            part.split_once(':').ok_or_else(|| bad("community"))?;
                        let stance = match stance {
                            "novax" => Stance::NoVax,
                            "other" => Stance::Other,
                            _ => return Err(bad("community stance (novax|other)")),
                        };
                        communities.push(CommunitySpec {
                            stance,
                            n_users: count.parse().map_err(|_| bad("community count"))?,
                        });
                    }
                    spec.countries.push(CountrySpec {
                        code: parts[0].to_uppercase(),
                        lang: parts[1].to_lowercase(),
                        communities,
                    });
                }
                "posts_per_user" => spec.posts_per_user = value.parse().map_err(|_| bad(key))?,
                "urls_per_user_novax" => {
                    spec.urls_per_user_novax = value.parse().map_err(|_| bad(key))?
                }
                "urls_per_user_other" => {
                    spec.urls_per_user_other = value.parse().map_err(|_| bad(key))?
                }
                "lowcred_rate_novax" => {
                    spec.lowcred_rate_novax = value.parse().map_err(|_| bad(key))?
                }
                "lowcred_rate_other" => {
                    spec.lowcred_rate_other = value.parse().map_err(|_| bad(key))?
                }
                "retweets_intra" => spec.retweets_intra = value.parse().map_err(|_| bad(key))?,
                "retweets_inter" => spec.retweets_inter = value.parse().map_err(|_| bad(key))?,
                "retweets_cross" => spec.retweets_cross = value.parse().map_err(|_| bad(key))?,
                "aa_cross_multiplier" => {
                    spec.aa_cross_multiplier = value.parse().map_err(|_| bad(key))?
                }
                "suspension_rate_novax" => {
                    spec.suspension_rate_novax = value.parse().map_err(|_| bad(key))?
                }
                "suspension_rate_other" => {
                    spec.suspension_rate_other = value.parse().map_err(|_| bad(key))?
                }
                "missing_location_every" => {
                    spec.missing_location_every = value.parse().map_err(|_| bad(key))?
                }
                other => {
                    return Err(Error::Format(format!(
                        "spec line {}: unknown key {other:?}",
                        no + 1
                    )))
                }
            }
        }
        spec.validate()?;
        Ok(spec)
    }
}

/// Generated corpus with its exact ground truth.
#[derive(Debug, Clone)]
pub struct SynthCorpus {
    pub events: Vec<TweetEvent>,
    /// user -> country
    pub user_geo: BTreeMap<String, String>,
    /// user -> planted community id ("US:0")
    pub communities: BTreeMap<String, String>,
    /// planted community id -> stance
    pub stances: BTreeMap<String, Stance>,
    pub statuses: AccountStatus,
    /// place string -> country code
    pub gazetteer: Vec<(String, String)>,
    pub stoplist: Vec<String>,
    /// lang -> keyword
    pub keywords: Vec<(String, String)>,
    /// country -> spoken language
    pub country_langs: Vec<(String, String)>,
    pub lowcred_domains: Vec<String>,
}

struct UserInfo {
    id: String,
    country: usize,
    community: String,
    stance: Stance,
    location: Option<String>,
}

fn keyword_for(lang: &str) -> String {
    match lang {
        "en" => "vaccine".to_string(),
        "es" => "vacuna".to_string(),
        "de" => "impfung".to_string(),
        "fr" => "vaccin".to_string(),
        "it" => "vaccino".to_string(),
        "pt" => "vacina".to_string(),
        other => format!("vax{other}"),
    }
}

fn poisson<R: Rng>(rng: &mut R, lambda: f64) -> u64 {
    if lambda <= 0.0 {
        return 0;
    }
    let dist = Poisson::new(lambda).expect("positive lambda");
    dist.sample(rng) as u64
}

/// A pool of URLs with separate low-credibility and clean halves. Each
/// share first draws its low-credibility flag at the author's planted rate
/// and then picks a URL from the matching half, so realized cohort
/// fractions match the planted rates exactly in expectation.
struct UrlPool {
    lowcred: Vec<String>,
    clean: Vec<String>,
}

impl UrlPool {
    fn pick<R: Rng>(&self, rng: &mut R, is_lowcred: bool) -> String {
        let list = if is_lowcred {
            &self.lowcred
        } else {
            &self.clean
        };
        list[rng.random_range(0..list.len())].clone()
    }
}

const STOPLIST_TERMS: [&str; 3] = ["worldwide", "the internet", "everywhere"];

pub fn synth_corpus(spec: &CorpusSpec) -> Result<SynthCorpus> {
    spec.validate()?;
    let mut rng = ChaCha20Rng::seed_from_u64(spec.seed);

    let lowcred_domains: Vec<String> = (0..10).map(|k| format!("lc{k}.badnews.test")).collect();
    let mut clean_domains: Vec<String> = (0..18).map(|k| format!("site{k}.news.test")).collect();
    clean_domains.push("youtube.com".to_string());
    clean_domains.push("youtu.be".to_string());

    // roster
    let mut users: Vec<UserInfo> = Vec::new();
    let mut gazetteer = Vec::new();
    let mut keywords = Vec::new();
    let mut country_langs = Vec::new();
    let mut stances = BTreeMap::new();
    let mut seen_langs: std::collections::BTreeSet<String> = Default::default();
    for (ci, country) in spec.countries.iter().enumerate() {
        let code = &country.code;
        let places = [
            format!("{} city", code.to_lowercase()),
            format!("{} capital", code.to_lowercase()),
        ];
        for p in &places {
            gazetteer.push((p.clone(), code.clone()));
        }
        country_langs.push((code.clone(), country.lang.clone()));
        if seen_langs.insert(country.lang.clone()) {
            keywords.push((country.lang.clone(), keyword_for(&country.lang)));
        }
        let mut user_seq = 0u32;
        for (k, community) in country.communities.iter().enumerate() {
            let community_id = format!("{code}:{k}");
            stances.insert(community_id.clone(), community.stance);
            for _ in 0..community.n_users {
                let idx = user_seq;
                user_seq += 1;
                let location = if spec.missing_location_every > 0
                    && (idx + 1).is_multiple_of(spec.missing_location_every)
                {
                    Some(STOPLIST_TERMS[idx as usize % STOPLIST_TERMS.len()].to_string())
                } else {
                    Some(places[idx as usize % 2].clone())
                };
                users.push(UserInfo {
                    id: format!("{}u{idx:05}", code.to_lowercase()),
                    country: ci,
                    community: community_id.clone(),
                    stance: community.stance,
                    location,
                });
            }
        }
    }

    // URL pools: per community and a per-country glue pool shared by stances
    let mut url_seq = 0u64;
    let mut fresh_url = |lowcred: bool, rng: &mut ChaCha20Rng| {
        let domain = if lowcred {
            &lowcred_domains[rng.random_range(0..lowcred_domains.len())]
        } else {
            &clean_domains[rng.random_range(0..clean_domains.len())]
        };
        url_seq += 1;
        format!("https://{domain}/a{url_seq}")
    };
    let mut community_pools: BTreeMap<String, UrlPool> = BTreeMap::new();
    let mut country_pools: Vec<UrlPool> = Vec::new();
    for (ci, country) in spec.countries.iter().enumerate() {
        for (k, community) in country.communities.iter().enumerate() {
            let id = format!("{}:{k}", country.code);
            let n = community.n_users.max(10);
            let pool = UrlPool {
                lowcred: (0..(n / 10).max(2))
                    .map(|_| fresh_url(true, &mut rng))
                    .collect(),
                clean: (0..(n / 5).max(4))
                    .map(|_| fresh_url(false, &mut rng))
                    .collect(),
            };
            community_pools.insert(id, pool);
        }
        let _ = ci;
        country_pools.push(UrlPool {
            lowcred: (0..3).map(|_| fresh_url(true, &mut rng)).collect(),
            clean: (0..6).map(|_| fresh_url(false, &mut rng)).collect(),
        });
    }

    let lowcred_rate = |s: Stance| match s {
        Stance::NoVax => spec.lowcred_rate_novax,
        Stance::Other => spec.lowcred_rate_other,
    };
    let url_rate = |s: Stance| match s {
        Stance::NoVax => spec.urls_per_user_novax,
        Stance::Other => spec.urls_per_user_other,
    };

    // pre-index users by (country, community) and by (country, stance)
    let mut by_community: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    let mut by_country: Vec<Vec<usize>> = vec![Vec::new(); spec.countries.len()];
    let mut by_country_stance: Vec<BTreeMap<Stance, Vec<usize>>> =
        vec![BTreeMap::new(); spec.countries.len()];
    for (i, u) in users.iter().enumerate() {
        by_community.entry(&u.community).or_default().push(i);
        by_country[u.country].push(i);
        by_country_stance[u.country]
            .entry(u.stance)
            .or_default()
            .push(i);
    }

    let mut events: Vec<TweetEvent> = Vec::new();
    let mut tweet_seq = 0u64;

    for period in &spec.periods {
        let span = (period.end - period.start).num_seconds().max(1);
        let stamp =
            |rng: &mut ChaCha20Rng| period.start + Duration::seconds(rng.random_range(0..span));

        // pass 1: original posts with URL shares
        let mut posts_of: Vec<Vec<String>> = vec![Vec::new(); users.len()];
        for (ui, user) in users.iter().enumerate() {
            let lang = &spec.countries[user.country].lang;
            let keyword = keyword_for(lang);
            let n_posts = 1 + poisson(&mut rng, (spec.posts_per_user - 1.0).max(0.0));
            let n_urls = poisson(&mut rng, url_rate(user.stance));
            let mut urls_per_post = vec![Vec::new(); n_posts as usize];
            for s in 0..n_urls {
                let is_lc = rng.random_bool(lowcred_rate(user.stance));
                let roll: f64 = rng.random();
                let url = if roll < 0.85 {
                    community_pools[user.community.as_str()].pick(&mut rng, is_lc)
                } else if roll < 0.95 {
                    country_pools[user.country].pick(&mut rng, is_lc)
                } else {
                    fresh_url(is_lc, &mut rng)
                };
                urls_per_post[(s % n_posts) as usize].push(url);
            }
            for urls in urls_per_post {
                tweet_seq += 1;
                let id = format!("t{tweet_seq:08}");
                events.push(TweetEvent {
                    tweet_id: id.clone(),
                    user_id: user.id.clone(),
                    timestamp: stamp(&mut rng),
                    lang: lang.clone(),
                    text: format!("{keyword} debate update {tweet_seq}"),
                    retweeted_user_id: None,
                    retweeted_tweet_id: None,
                    urls,
                    profile_location: user.location.clone(),
                });
                posts_of[ui].push(id);
            }
        }

        // pass 2: retweets referencing the posts above
        let mut emit_retweet = |rng: &mut ChaCha20Rng,
                                events: &mut Vec<TweetEvent>,
                                author: usize,
                                target: usize,
                                with_url: bool| {
            let posts = &posts_of[target];
            if posts.is_empty() {
                return;
            }
            let orig = &posts[rng.random_range(0..posts.len())];
            let author_info = &users[author];
            let target_info = &users[target];
            let lang = &spec.countries[target_info.country].lang;
            let keyword = keyword_for(lang);
            tweet_seq += 1;
            let urls = if with_url && rng.random_bool(0.5) {
                let is_lc = rng.random_bool(lowcred_rate(author_info.stance));
                vec![community_pools[target_info.community.as_str()].pick(rng, is_lc)]
            } else {
                Vec::new()
            };
            events.push(TweetEvent {
                tweet_id: format!("t{tweet_seq:08}"),
                user_id: author_info.id.clone(),
                timestamp: stamp(rng),
                lang: lang.clone(),
                text: format!("rt {keyword} take {tweet_seq}"),
                retweeted_user_id: Some(target_info.id.clone()),
                retweeted_tweet_id: Some(orig.clone()),
                urls,
                profile_location: author_info.location.clone(),
            });
        };

        for ui in 0..users.len() {
            let user = &users[ui];
            // within own community
            let own = &by_community[user.community.as_str()];
            if own.len() > 1 {
                for _ in 0..poisson(&mut rng, spec.retweets_intra) {
                    let mut t = own[rng.random_range(0..own.len())];
                    while t == ui {
                        t = own[rng.random_range(0..own.len())];
                    }
                    emit_retweet(&mut rng, &mut events, ui, t, false);
                }
            }
            // other communities, same country
            let country_users = &by_country[user.country];
            let others: Vec<usize> = country_users
                .iter()
                .copied()
                .filter(|&t| users[t].community != user.community)
                .collect();
            if !others.is_empty() {
                for _ in 0..poisson(&mut rng, spec.retweets_inter) {
                    let t = others[rng.random_range(0..others.len())];
                    emit_retweet(&mut rng, &mut events, ui, t, false);
                }
            }
            // cross-border, same stance (A-A scaled by the multiplier)
            let same_rate = if user.stance == Stance::NoVax {
                spec.retweets_cross * spec.aa_cross_multiplier
            } else {
                spec.retweets_cross
            };
            let mut same_targets: Vec<usize> = Vec::new();
            let mut diff_targets: Vec<usize> = Vec::new();
            for (ci, per_stance) in by_country_stance.iter().enumerate() {
                if ci == user.country {
                    continue;
                }
                for (&stance, list) in per_stance {
                    if stance == user.stance {
                        same_targets.extend_from_slice(list);
                    } else {
                        diff_targets.extend_from_slice(list);
                    }
                }
            }
            if !same_targets.is_empty() {
                for _ in 0..poisson(&mut rng, same_rate) {
                    let t = same_targets[rng.random_range(0..same_targets.len())];
                    emit_retweet(&mut rng, &mut events, ui, t, true);
                }
            }
            if !diff_targets.is_empty() {
                for _ in 0..poisson(&mut rng, spec.retweets_cross) {
                    let t = diff_targets[rng.random_range(0..diff_targets.len())];
                    emit_retweet(&mut rng, &mut events, ui, t, true);
                }
            }
        }
    }

    // planted suspensions
    let mut statuses = AccountStatus::default();
    for user in &users {
        let rate = match user.stance {
            Stance::NoVax => spec.suspension_rate_novax,
            Stance::Other => spec.suspension_rate_other,
        };
        let status = if rate > 0.0 && rng.random_bool(rate) {
            Status::Suspended
        } else {
            Status::Active
        };
        statuses.insert(user.id.clone(), status);
    }

    let user_geo: BTreeMap<String, String> = users
        .iter()
        .map(|u| (u.id.clone(), spec.countries[u.country].code.clone()))
        .collect();
    let communities: BTreeMap<String, String> = users
        .iter()
        .map(|u| (u.id.clone(), u.community.clone()))
        .collect();

    Ok(SynthCorpus {
        events,
        user_geo,
        communities,
        stances,
        statuses,
        gazetteer,
        stoplist: STOPLIST_TERMS.iter().map(|s| s.to_string()).collect(),
        keywords,
        country_langs,
        lowcred_domains,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::parse_events;
    use crate::lowcred::DomainList;

    fn small_sbm(p_in: f64, p_out: f64, seed: u64) -> SbmSpec {
        SbmSpec {
            block_sizes: vec![100, 100],
            p_in,
            p_out,
            mean_weight: 1.0,
            seed,
        }
    }

    #[test]
    fn sbm_no_cross_edges_when_p_out_zero() {
        let spec = small_sbm(0.1, 0.0, 3);
        let g = sbm_generate(&spec).unwrap();
        let blocks = spec.block_assignment();
        for &(u, v, _) in g.edges() {
            let bu = blocks[g.node_id(u)[1..].parse::<usize>().unwrap()];
            let bv = blocks[g.node_id(v)[1..].parse::<usize>().unwrap()];
            assert_eq!(bu, bv, "cross-block edge {u}->{v}");
        }
    }

    #[test]
    fn sbm_intra_edge_count_matches_binomial_oracle() {
        // expected intra edges = 2 * C(100,2) * 0.1 = 990, sd = sqrt(9900 * 0.1 * 0.9)
        let spec = small_sbm(0.1, 0.0, 17);
        let g = sbm_generate(&spec).unwrap();
        let expected = 990.0;
        let sd = (9900.0f64 * 0.1 * 0.9).sqrt();
        let observed = g.edge_count() as f64;
        assert!(
            (observed - expected).abs() < 4.0 * sd,
            "observed {observed}, expected {expected} +- {}",
            4.0 * sd
        );
    }

    #[test]
    fn sbm_deterministic_per_seed() {
        let spec = small_sbm(0.05, 0.01, 99);
        let a = sbm_generate(&spec).unwrap();
        let b = sbm_generate(&spec).unwrap();
        assert_eq!(a.to_tsv(), b.to_tsv());
        let other = sbm_generate(&small_sbm(0.05, 0.01, 100)).unwrap();
        assert_ne!(a.to_tsv(), other.to_tsv());
    }

    #[test]
    fn sbm_weights_have_requested_mean() {
        let spec = SbmSpec {
            mean_weight: 3.0,
            ..small_sbm(0.1, 0.0, 5)
        };
        let g = sbm_generate(&spec).unwrap();
        let mean: f64 = g.edges().iter().map(|e| e.2).sum::<f64>() / g.edge_count() as f64;
        assert!((mean - 3.0).abs() < 0.3, "weight mean {mean}");
    }

    #[test]
    fn sbm_rejects_bad_specs() {
        assert!(sbm_generate(&SbmSpec {
            block_sizes: vec![10],
            p_in: 0.1,
            p_out: 0.5,
            mean_weight: 1.0,
            seed: 0
        })
        .is_err());
        assert!(sbm_generate(&SbmSpec {
            block_sizes: vec![],
            p_in: 0.1,
            p_out: 0.0,
            mean_weight: 1.0,
            seed: 0
        })
        .is_err());
    }

    fn tiny_spec() -> CorpusSpec {
        CorpusSpec::parse(
            "seed = 11\n\
             period = p1 2020-01-01T00:00:00Z 2020-04-01T00:00:00Z\n\
             country = AA en novax:30 other:30\n\
             country = BB en novax:30 other:30\n\
             posts_per_user = 2\n\
             urls_per_user_novax = 6\n\
             urls_per_user_other = 6\n\
             lowcred_rate_novax = 0.3\n\
             lowcred_rate_other = 0.05\n\
             retweets_intra = 4\n\
             retweets_inter = 0.5\n\
             retweets_cross = 0.4\n\
             aa_cross_multiplier = 5\n",
        )
        .unwrap()
    }

    #[test]
    fn corpus_zero_multiplier_kills_aa_cross_retweets() {
        let mut spec = tiny_spec();
        spec.aa_cross_multiplier = 0.0;
        let corpus = synth_corpus(&spec).unwrap();
        for ev in &corpus.events {
            let Some(target) = &ev.retweeted_user_id else {
                continue;
            };
            let (cu, ct) = (&corpus.user_geo[&ev.user_id], &corpus.user_geo[target]);
            if cu == ct {
                continue;
            }
            let su = corpus.stances[&corpus.communities[&ev.user_id]];
            let st = corpus.stances[&corpus.communities[target]];
            assert!(
                !(su == Stance::NoVax && st == Stance::NoVax),
                "found A-A cross-border retweet with multiplier 0"
            );
        }
    }

    #[test]
    fn corpus_planted_lowcred_rates_within_tolerance() {
        let spec = CorpusSpec::parse(
            "seed = 23\n\
             period = p1 2020-01-01T00:00:00Z 2020-04-01T00:00:00Z\n\
             country = AA en novax:120 other:120\n\
             posts_per_user = 3\n\
             urls_per_user_novax = 90\n\
             urls_per_user_other = 90\n\
             lowcred_rate_novax = 0.26\n\
             lowcred_rate_other = 0.024\n\
             retweets_intra = 1\n\
             retweets_inter = 0.2\n\
             retweets_cross = 0\n\
             aa_cross_multiplier = 1\n",
        )
        .unwrap();
        let corpus = synth_corpus(&spec).unwrap();
        let mut list = DomainList::new();
        for d in &corpus.lowcred_domains {
            list.add(d, "synthetic");
        }
        for (stance, planted) in [(Stance::NoVax, 0.26), (Stance::Other, 0.024)] {
            let events: Vec<TweetEvent> = corpus
                .events
                .iter()
                .filter(|e| corpus.stances[&corpus.communities[&e.user_id]] == stance)
                .cloned()
                .collect();
            let shares: usize = events.iter().map(|e| e.urls.len()).sum();
            assert!(shares > 10_000, "need at least 10k shares, got {shares}");
            let measured = crate::lowcred::lowcred_fraction(&events, &list).unwrap();
            assert!(
                (measured - planted).abs() < 0.02,
                "stance {stance:?}: measured {measured} vs planted {planted}"
            );
        }
    }

    #[test]
    fn corpus_roundtrips_through_parser() {
        let corpus = synth_corpus(&tiny_spec()).unwrap();
        let text: String = corpus
            .events
            .iter()
            .map(|e| e.to_json_line() + "\n")
            .collect();
        let (parsed, report) = parse_events(text.as_bytes()).unwrap();
        assert_eq!(report.rejected(), 0);
        assert_eq!(parsed, corpus.events);
    }

    #[test]
    fn corpus_deterministic() {
        let a = synth_corpus(&tiny_spec()).unwrap();
        let b = synth_corpus(&tiny_spec()).unwrap();
        assert_eq!(a.events, b.events);
        assert_eq!(a.user_geo, b.user_geo);
    }

    #[test]
    fn corpus_truth_is_complete() {
        let corpus = synth_corpus(&tiny_spec()).unwrap();
        assert_eq!(corpus.user_geo.len(), 120);
        assert_eq!(corpus.stances.len(), 4);
        for ev in &corpus.events {
            assert!(corpus.communities.contains_key(&ev.user_id));
        }
        // every user posts at least once per period
        let authors: std::collections::HashSet<&str> =
            corpus.events.iter().map(|e| e.user_id.as_str()).collect();
        assert_eq!(authors.len(), 120);
    }

    #[test]
    fn spec_parser_rejects_garbage() {
        assert!(CorpusSpec::parse("nonsense").is_err());
        assert!(CorpusSpec::parse("unknown_key = 1\n").is_err());
        assert!(CorpusSpec::parse("country = XX\n").is_err());
    }
}
