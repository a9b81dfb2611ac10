//! Profile-string geolocation against a gazetteer, plus the cleaning rules
//! that guard against users who move countries or hoover up another
//! country's retweets.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use chrono::{DateTime, Utc};

use crate::error::{Error, Result};
use crate::ingest::{Period, TweetEvent};

/// Place-name lookup table. Keys are normalized (case-folded, trimmed,
/// sigils stripped at the ends); the stoplist holds normalized strings that
/// must never be treated as locations and wins over the map.
#[derive(Debug, Clone, Default)]
pub struct Gazetteer {
    places: HashMap<String, String>,
    stoplist: HashSet<String>,
}

impl Gazetteer {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_place(&mut self, name: &str, country: &str) {
        let key = normalize_place(name);
        if !key.is_empty() {
            self.places.insert(key, country.trim().to_uppercase());
        }
    }

    pub fn add_stop(&mut self, term: &str) {
        let key = normalize_place(term);
        if !key.is_empty() {
            self.stoplist.insert(key);
        }
    }

    /// Loads a `name<TAB>country_code` file.
    pub fn parse_places(&mut self, text: &str) -> Result<()> {
        for (no, line) in text.lines().enumerate() {
            let line = line.trim_end();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (name, cc) = line.split_once('\t').ok_or_else(|| {
                Error::Format(format!(
                    "gazetteer line {}: expected name<TAB>country",
                    no + 1
                ))
            })?;
            self.add_place(name, cc);
        }
        Ok(())
    }

    /// Loads a stoplist file, one term per line.
    pub fn parse_stoplist(&mut self, text: &str) {
        for line in text.lines() {
            let line = line.trim_end();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            self.add_stop(line);
        }
    }

    pub fn len(&self) -> usize {
        self.places.len()
    }

    pub fn is_empty(&self) -> bool {
        self.places.is_empty()
    }
}

/// Case-folds, trims, and strips non-alphanumeric characters (emoji,
/// decorative punctuation) from both ends. Interior punctuation survives.
fn normalize_place(raw: &str) -> String {
    let lowered = raw.trim().to_lowercase();
    lowered
        .trim_matches(|c: char| !c.is_alphanumeric())
        .to_string()
}

/// Resolves a raw profile-location string to a country code.
///
/// The whole normalized string and each comma-separated segment are checked
/// against the stoplist first; otherwise the longest gazetteer-matching
/// segment wins, rightmost on ties.
pub fn match_location(raw: &str, gazetteer: &Gazetteer) -> Option<String> {
    let whole = normalize_place(raw);
    if whole.is_empty() {
        return None;
    }
    let segments: Vec<String> = raw.split(',').map(normalize_place).collect();
    if gazetteer.stoplist.contains(&whole)
        || segments.iter().any(|s| gazetteer.stoplist.contains(s))
    {
        return None;
    }
    let mut best: Option<(usize, &str)> = None; // (length, country)
    for seg in &segments {
        if seg.is_empty() {
            continue;
        }
        if let Some(cc) = gazetteer.places.get(seg) {
            let len = seg.chars().count();
            // rightmost wins on equal length
            if best.is_none_or(|(blen, _)| len >= blen) {
                best = Some((len, cc));
            }
        }
    }
    best.map(|(_, cc)| cc.to_string())
}

/// User-to-country assignment plus the exclusion and inspection reports.
#[derive(Debug, Clone, Default)]
pub struct UserGeo {
    map: BTreeMap<String, String>,
    /// Users dropped from the map, with the reason.
    pub report: Vec<(String, String)>,
    /// Users that concentrate >50% of a cross-country retweet flow in some
    /// period; kept in the map, surfaced for manual inspection.
    pub flagged: Vec<FlaggedUser>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlaggedUser {
    pub user_id: String,
    /// Country whose users produced the retweets.
    pub from_country: String,
    /// Country of the flagged (retweeted) user.
    pub to_country: String,
    pub period: String,
    pub share: f64,
}

impl UserGeo {
    pub fn insert(&mut self, user_id: String, country: &str) {
        self.map.insert(user_id, country.to_string());
    }

    pub fn country_of(&self, user_id: &str) -> Option<&str> {
        self.map.get(user_id).map(|s| s.as_str())
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.map.iter().map(|(u, c)| (u.as_str(), c.as_str()))
    }

    /// Applies a manual exclusion list (outcome of flag inspection).
    pub fn exclude(&mut self, user_id: &str, reason: &str) {
        if self.map.remove(user_id).is_some() {
            self.report.push((user_id.to_string(), reason.to_string()));
        }
    }
}

/// Assigns a country to each user from profile locations, one resolution per
/// period (latest profile string seen in that period wins). Users whose
/// resolved country changes across periods are excluded; users receiving
/// more than half of a cross-country retweet flow are flagged, not excluded.
pub fn assign_countries(
    events_by_period: &[(&Period, &[TweetEvent])],
    gazetteer: &Gazetteer,
) -> UserGeo {
    let mut geo = UserGeo::default();

    // user -> set of countries resolved in any period
    let mut resolved: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for (_, events) in events_by_period {
        // latest profile_location per user within this period
        let mut latest: HashMap<&str, (DateTime<Utc>, &str)> = HashMap::new();
        for ev in events.iter() {
            if let Some(loc) = &ev.profile_location {
                match latest.get(ev.user_id.as_str()) {
                    Some((ts, _)) if *ts > ev.timestamp => {}
                    _ => {
                        latest.insert(&ev.user_id, (ev.timestamp, loc));
                    }
                }
            }
        }
        for (user, (_, loc)) in latest {
            if let Some(cc) = match_location(loc, gazetteer) {
                resolved.entry(user.to_string()).or_default().insert(cc);
            }
        }
    }

    for (user, countries) in resolved {
        if countries.len() == 1 {
            let cc = countries.into_iter().next().unwrap();
            geo.map.insert(user, cc);
        } else {
            geo.report.push((user, "country-change".to_string()));
        }
    }

    // Flag users receiving >50% of any cross-country flow within a period.
    for (period, events) in events_by_period {
        // (from, to) -> (total, per-user counts)
        let mut flows: BTreeMap<(String, String), (u64, BTreeMap<String, u64>)> = BTreeMap::new();
        for ev in events.iter() {
            let Some(rt_user) = &ev.retweeted_user_id else {
                continue;
            };
            let (Some(from), Some(to)) = (geo.country_of(&ev.user_id), geo.country_of(rt_user))
            else {
                continue;
            };
            if from == to {
                continue;
            }
            let entry = flows.entry((from.to_string(), to.to_string())).or_default();
            entry.0 += 1;
            *entry.1.entry(rt_user.clone()).or_default() += 1;
        }
        for ((from, to), (total, per_user)) in flows {
            for (user, n) in per_user {
                let share = n as f64 / total as f64;
                if share > 0.5 {
                    geo.flagged.push(FlaggedUser {
                        user_id: user,
                        from_country: from.clone(),
                        to_country: to.clone(),
                        period: period.name.clone(),
                        share,
                    });
                }
            }
        }
    }

    geo
}

/// Countries with strictly more than `min_users` distinct geolocated active
/// users in every period.
pub fn eligible_countries(
    user_geo: &UserGeo,
    events_by_period: &[(&Period, &[TweetEvent])],
    min_users: u64,
) -> BTreeSet<String> {
    let mut per_period: Vec<BTreeMap<&str, BTreeSet<&str>>> = Vec::new();
    for (_, events) in events_by_period {
        let mut active: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
        for ev in events.iter() {
            if let Some(cc) = user_geo.country_of(&ev.user_id) {
                active.entry(cc).or_default().insert(ev.user_id.as_str());
            }
        }
        per_period.push(active);
    }
    let mut all_countries: BTreeSet<&str> = BTreeSet::new();
    for m in &per_period {
        all_countries.extend(m.keys().copied());
    }
    all_countries
        .into_iter()
        .filter(|cc| {
            per_period
                .iter()
                .all(|m| m.get(cc).map_or(0, |s| s.len() as u64) > min_users)
        })
        .map(|s| s.to_string())
        .collect()
}
