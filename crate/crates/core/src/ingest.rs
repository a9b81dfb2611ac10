//! Event-log ingestion: parsing, keyword filtering, time windowing and
//! per-country language statistics.
//!
//! The on-disk event format is UTF-8 newline-delimited JSON, one flat object
//! per line with the keys `tweet_id`, `user_id`, `timestamp` (RFC 3339 with a
//! zone), `lang`, `text`, `retweeted_user_id` / `retweeted_tweet_id`
//! (optional, present together), `urls` (array of absolute URL strings) and
//! `profile_location` (optional). Lines starting with `#` are comments.

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Read};

use chrono::{DateTime, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geolocate::UserGeo;

/// One post or retweet record.
///
/// `retweeted_user_id` and `retweeted_tweet_id` are present together exactly
/// when the event is a retweet. Producers are expected to keep `tweet_id`
/// unique within a log; parsing is stateless per line and does not enforce
/// cross-line uniqueness.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TweetEvent {
    pub tweet_id: String,
    pub user_id: String,
    #[serde(with = "rfc3339")]
    pub timestamp: DateTime<Utc>,
    pub lang: String,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub retweeted_user_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub retweeted_tweet_id: Option<String>,
    pub urls: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile_location: Option<String>,
}

mod rfc3339 {
    use chrono::{DateTime, SecondsFormat, Utc};
    use serde::{self, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(ts: &DateTime<Utc>, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&ts.to_rfc3339_opts(SecondsFormat::AutoSi, true))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DateTime<Utc>, D::Error> {
        let raw = String::deserialize(d)?;
        DateTime::parse_from_rfc3339(&raw)
            .map(|t| t.with_timezone(&Utc))
            .map_err(serde::de::Error::custom)
    }
}

impl TweetEvent {
    pub fn is_retweet(&self) -> bool {
        self.retweeted_user_id.is_some()
    }

    /// Serializes to one NDJSON line (no trailing newline).
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("event serialization cannot fail")
    }

    fn validate(&self) -> std::result::Result<(), String> {
        if self.tweet_id.is_empty() {
            return Err("empty tweet_id".into());
        }
        if self.user_id.is_empty() {
            return Err("empty user_id".into());
        }
        if self.retweeted_user_id.is_some() != self.retweeted_tweet_id.is_some() {
            return Err("retweeted_user_id and retweeted_tweet_id must be present together".into());
        }
        for u in &self.urls {
            match url::Url::parse(u) {
                Ok(parsed) if parsed.host_str().is_some() => {}
                _ => return Err(format!("url without host: {u}")),
            }
        }
        Ok(())
    }
}

/// A named half-open time window `[start, end)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Period {
    pub name: String,
    pub start: DateTime<Utc>,
    pub end: DateTime<Utc>,
}

impl Period {
    pub fn new(name: impl Into<String>, start: DateTime<Utc>, end: DateTime<Utc>) -> Result<Self> {
        if start >= end {
            return Err(Error::InvalidInput(format!(
                "period start must precede end ({start} >= {end})"
            )));
        }
        Ok(Period {
            name: name.into(),
            start,
            end,
        })
    }

    pub fn contains(&self, ts: DateTime<Utc>) -> bool {
        self.start <= ts && ts < self.end
    }
}

/// Parses a period file: one `name<TAB>start<TAB>end` line per period.
/// Names must be unique; they key per-period artifacts downstream.
pub fn parse_periods(text: &str) -> Result<Vec<Period>> {
    let mut periods: Vec<Period> = Vec::new();
    for (no, line) in text.lines().enumerate() {
        let line = line.trim_end();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let parts: Vec<&str> = line.split('\t').collect();
        if parts.len() != 3 {
            return Err(Error::Format(format!(
                "period file line {}: expected 3 fields",
                no + 1
            )));
        }
        let parse = |s: &str| {
            DateTime::parse_from_rfc3339(s)
                .map(|t| t.with_timezone(&Utc))
                .map_err(|e| Error::Format(format!("period file line {}: {e}", no + 1)))
        };
        if periods.iter().any(|p| p.name == parts[0]) {
            return Err(Error::Format(format!(
                "period file line {}: duplicate period name {:?}",
                no + 1,
                parts[0]
            )));
        }
        periods.push(Period::new(parts[0], parse(parts[1])?, parse(parts[2])?)?);
    }
    Ok(periods)
}

/// Per-language keyword lists. Matching is case-folded exact token match,
/// never substring, so "vaccine" does not hit "vaccinate" or URLs.
#[derive(Debug, Clone, Default)]
pub struct KeywordSet {
    // keyword -> tokenized form, per language
    by_lang: HashMap<String, Vec<Vec<String>>>,
}

impl KeywordSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, lang: &str, keyword: &str) {
        let toks = tokenize(keyword);
        if toks.is_empty() {
            return;
        }
        self.by_lang
            .entry(lang.trim().to_lowercase())
            .or_default()
            .push(toks);
    }

    /// Parses a keyword file: one `lang<TAB>keyword` per line.
    pub fn parse(text: &str) -> Result<Self> {
        let mut set = Self::new();
        for (no, line) in text.lines().enumerate() {
            let line = line.trim_end();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (lang, kw) = line.split_once('\t').ok_or_else(|| {
                Error::Format(format!(
                    "keyword file line {}: expected lang<TAB>keyword",
                    no + 1
                ))
            })?;
            set.add(lang, kw);
        }
        Ok(set)
    }

    pub fn languages(&self) -> impl Iterator<Item = &str> {
        self.by_lang.keys().map(|s| s.as_str())
    }

    pub fn is_empty(&self) -> bool {
        self.by_lang.is_empty()
    }

    fn lists_for(&self, lang: &str) -> Option<&Vec<Vec<String>>> {
        self.by_lang.get(&lang.to_lowercase())
    }
}

/// Splits text into lowercase alphanumeric tokens. Hashtag and mention
/// sigils are delimiters, so "#Vaccine" yields the token "vaccine".
pub fn tokenize(text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    let mut cur = String::new();
    for ch in text.chars() {
        if ch.is_alphanumeric() {
            for lc in ch.to_lowercase() {
                cur.push(lc);
            }
        } else if !cur.is_empty() {
            tokens.push(std::mem::take(&mut cur));
        }
    }
    if !cur.is_empty() {
        tokens.push(cur);
    }
    tokens
}

fn matches_any(tokens: &[String], keywords: &[Vec<String>]) -> bool {
    keywords.iter().any(|kw| {
        if kw.len() == 1 {
            tokens.iter().any(|t| *t == kw[0])
        } else {
            tokens.windows(kw.len()).any(|w| w == kw.as_slice())
        }
    })
}

/// Outcome of parsing one event log.
#[derive(Debug, Default)]
pub struct ParseReport {
    /// Number of non-comment, non-blank lines seen.
    pub records: usize,
    /// (line number, reason) for every rejected line.
    pub rejects: Vec<(usize, String)>,
}

impl ParseReport {
    pub fn rejected(&self) -> usize {
        self.rejects.len()
    }
}

/// Parses newline-delimited event records from a byte stream.
///
/// Malformed lines are recorded in the report and skipped; the call only
/// fails on unreadable input or when more than half of the records are
/// malformed, which signals that the wrong file was supplied.
pub fn parse_events<R: Read>(reader: R) -> Result<(Vec<TweetEvent>, ParseReport)> {
    let mut events = Vec::new();
    let mut report = ParseReport::default();
    for (no, line) in BufReader::new(reader).lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        report.records += 1;
        match serde_json::from_str::<TweetEvent>(trimmed) {
            Ok(ev) => match ev.validate() {
                Ok(()) => events.push(ev),
                Err(reason) => report.rejects.push((no + 1, reason)),
            },
            Err(e) => report.rejects.push((no + 1, e.to_string())),
        }
    }
    if report.rejected() * 2 > report.records {
        return Err(Error::Format(format!(
            "{} of {} records malformed; input does not look like an event log",
            report.rejected(),
            report.records
        )));
    }
    Ok((events, report))
}

/// Keeps events whose text contains at least one keyword for the event's
/// language or for `reference_lang`. Events in a language with no keyword
/// list are matched against the reference list only. Order is preserved.
pub fn filter_keywords(
    events: &[TweetEvent],
    keywords: &KeywordSet,
    reference_lang: &str,
) -> Vec<TweetEvent> {
    let reference = keywords.lists_for(reference_lang);
    events
        .iter()
        .filter(|ev| {
            let tokens = tokenize(&ev.text);
            let own = keywords.lists_for(&ev.lang);
            own.is_some_and(|l| matches_any(&tokens, l))
                || reference.is_some_and(|l| matches_any(&tokens, l))
        })
        .cloned()
        .collect()
}

/// Keeps events with `period.start <= timestamp < period.end`, preserving order.
pub fn slice_period(events: &[TweetEvent], period: &Period) -> Vec<TweetEvent> {
    events
        .iter()
        .filter(|ev| period.contains(ev.timestamp))
        .cloned()
        .collect()
}

/// Returns the most frequent event language among users geolocated to
/// `country`, restricted to the country's spoken languages. Ties break
/// lexicographically.
pub fn dominant_language(
    events: &[TweetEvent],
    country: &str,
    user_geo: &UserGeo,
    spoken_langs: &[String],
) -> Result<String> {
    let mut counts: HashMap<&str, u64> = HashMap::new();
    let mut saw_country_event = false;
    for ev in events {
        if user_geo.country_of(&ev.user_id) == Some(country) {
            saw_country_event = true;
            *counts.entry(ev.lang.as_str()).or_default() += 1;
        }
    }
    if !saw_country_event {
        return Err(Error::InvalidInput(format!(
            "no events authored in country {country}"
        )));
    }
    let mut best: Option<(&str, u64)> = None;
    for lang in spoken_langs {
        if let Some(&n) = counts.get(lang.as_str()) {
            best = match best {
                Some((bl, bn)) if bn > n || (bn == n && bl <= lang.as_str()) => Some((bl, bn)),
                _ => Some((lang.as_str(), n)),
            };
        }
    }
    match best {
        Some((lang, _)) => Ok(lang.to_string()),
        None => Err(Error::InvalidInput(format!(
            "none of the spoken languages of {country} appear in the data"
        ))),
    }
}

/// Formats a timestamp the way event logs store it.
pub fn format_timestamp(ts: DateTime<Utc>) -> String {
    ts.to_rfc3339_opts(SecondsFormat::AutoSi, true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::TimeZone;

    pub(crate) fn ts(s: &str) -> DateTime<Utc> {
        DateTime::parse_from_rfc3339(s).unwrap().with_timezone(&Utc)
    }

    pub(crate) fn event(id: &str, user: &str, when: &str, lang: &str, text: &str) -> TweetEvent {
        TweetEvent {
            tweet_id: id.into(),
            user_id: user.into(),
            timestamp: ts(when),
            lang: lang.into(),
            text: text.into(),
            retweeted_user_id: None,
            retweeted_tweet_id: None,
            urls: vec![],
            profile_location: None,
        }
    }

    #[test]
    fn parse_single_line_roundtrip() {
        let ev = event("t1", "u1", "2020-01-01T00:00:00Z", "en", "get your vaccine");
        let line = ev.to_json_line();
        let (parsed, report) = parse_events(line.as_bytes()).unwrap();
        assert_eq!(parsed, vec![ev]);
        assert_eq!(report.records, 1);
        assert_eq!(report.rejected(), 0);
    }

    #[test]
    fn parse_empty_stream() {
        let (events, report) = parse_events(&b""[..]).unwrap();
        assert!(events.is_empty());
        assert_eq!(report.records, 0);
        assert_eq!(report.rejected(), 0);
    }

    #[test]
    fn parse_counts_rejects() {
        let good = |i: usize| {
            event(
                &format!("t{i}"),
                "u1",
                "2020-01-01T00:00:00Z",
                "en",
                "hello",
            )
            .to_json_line()
        };
        let bad = r#"{"user_id":"u1","timestamp":"2020-01-01T00:00:00Z","lang":"en","text":"x","urls":[]}"#;
        let input = format!("{}\n{}\n{}\n{}\n", good(1), good(2), bad, good(3));
        let (events, report) = parse_events(input.as_bytes()).unwrap();
        assert_eq!(events.len(), 3);
        assert_eq!(report.records, 4);
        assert_eq!(report.rejected(), 1);
    }

    #[test]
    fn parse_rejects_retweet_field_mismatch() {
        let mut ev = event("t1", "u1", "2020-01-01T00:00:00Z", "en", "x");
        ev.retweeted_user_id = Some("u2".into());
        let input = ev.to_json_line();
        // one record, one reject: over the 50% threshold
        assert!(parse_events(input.as_bytes()).is_err());
    }

    #[test]
    fn parse_mostly_garbage_is_format_error() {
        let input = "not json\nstill not json\n{\"broken\":1}\n";
        match parse_events(input.as_bytes()) {
            Err(Error::Format(_)) => {}
            other => panic!("expected format error, got {other:?}"),
        }
    }

    #[test]
    fn comments_and_blank_lines_are_not_records() {
        let ev = event("t1", "u1", "2020-01-01T00:00:00Z", "en", "x");
        let input = format!("# header\n\n{}\n", ev.to_json_line());
        let (events, report) = parse_events(input.as_bytes()).unwrap();
        assert_eq!(events.len(), 1);
        assert_eq!(report.records, 1);
    }

    #[test]
    fn keyword_exact_token_match() {
        let mut kw = KeywordSet::new();
        kw.add("en", "vaccine");
        let events = vec![
            event("t1", "u1", "2020-01-01T00:00:00Z", "en", "Get your vaccine"),
            event("t2", "u1", "2020-01-01T00:00:00Z", "en", "vaccinate now"),
            event("t3", "u1", "2020-01-01T00:00:00Z", "en", "#Vaccine mandate"),
        ];
        let kept = filter_keywords(&events, &kw, "en");
        let ids: Vec<&str> = kept.iter().map(|e| e.tweet_id.as_str()).collect();
        assert_eq!(ids, vec!["t1", "t3"]);
    }

    #[test]
    fn keyword_reference_language_fallback() {
        let mut kw = KeywordSet::new();
        kw.add("en", "vaccine");
        let ev = event("t1", "u1", "2020-01-01T00:00:00Z", "fi", "vaccine uutinen");
        assert_eq!(filter_keywords(&[ev], &kw, "en").len(), 1);
    }

    #[test]
    fn empty_keyword_set_drops_everything() {
        let kw = KeywordSet::new();
        let ev = event("t1", "u1", "2020-01-01T00:00:00Z", "en", "vaccine");
        assert!(filter_keywords(&[ev], &kw, "en").is_empty());
    }

    #[test]
    fn multi_word_keyword_matches_contiguous_tokens() {
        let mut kw = KeywordSet::new();
        kw.add("en", "vaccine passport");
        let yes = event(
            "t1",
            "u1",
            "2020-01-01T00:00:00Z",
            "en",
            "no Vaccine Passport here",
        );
        let no = event(
            "t2",
            "u1",
            "2020-01-01T00:00:00Z",
            "en",
            "vaccine and passport",
        );
        assert_eq!(filter_keywords(&[yes, no], &kw, "en").len(), 1);
    }

    #[test]
    fn slice_period_bounds() {
        let period =
            Period::new("p", ts("2020-01-01T00:00:00Z"), ts("2020-04-01T00:00:00Z")).unwrap();
        let at_start = event("t1", "u1", "2020-01-01T00:00:00Z", "en", "x");
        let at_end = event("t2", "u1", "2020-04-01T00:00:00Z", "en", "x");
        let kept = slice_period(&[at_start, at_end], &period);
        assert_eq!(kept.len(), 1);
        assert_eq!(kept[0].tweet_id, "t1");
    }

    #[test]
    fn slice_period_counting_oracle() {
        // 100 events spread hourly-ish over 12 months against a 3-month window.
        let start = Utc.with_ymd_and_hms(2020, 1, 1, 0, 0, 0).unwrap();
        let events: Vec<TweetEvent> = (0..100)
            .map(|i| {
                let when = start + chrono::Duration::hours(i * 87); // ~12 months span
                event(&format!("t{i}"), "u1", &format_timestamp(when), "en", "x")
            })
            .collect();
        let period = Period::new(
            "q2",
            Utc.with_ymd_and_hms(2020, 4, 1, 0, 0, 0).unwrap(),
            Utc.with_ymd_and_hms(2020, 7, 1, 0, 0, 0).unwrap(),
        )
        .unwrap();
        let expected = events
            .iter()
            .filter(|e| period.contains(e.timestamp))
            .count();
        let kept = slice_period(&events, &period);
        assert_eq!(kept.len(), expected);
        assert!(
            expected > 15 && expected < 35,
            "fixture spread is off: {expected}"
        );
    }

    #[test]
    fn filters_are_idempotent_and_commute() {
        let mut kw = KeywordSet::new();
        kw.add("en", "vaccine");
        let period =
            Period::new("p", ts("2020-01-01T00:00:00Z"), ts("2020-02-01T00:00:00Z")).unwrap();
        let events: Vec<TweetEvent> = (0..40)
            .map(|i| {
                let text = if i % 3 == 0 {
                    "vaccine talk"
                } else {
                    "other talk"
                };
                let when = if i % 2 == 0 {
                    "2020-01-15T00:00:00Z"
                } else {
                    "2020-03-15T00:00:00Z"
                };
                event(&format!("t{i}"), "u1", when, "en", text)
            })
            .collect();
        let a = filter_keywords(&slice_period(&events, &period), &kw, "en");
        let b = slice_period(&filter_keywords(&events, &kw, "en"), &period);
        assert_eq!(a, b);
        assert_eq!(filter_keywords(&a, &kw, "en"), a);
        assert_eq!(slice_period(&b, &period), b);
    }

    #[test]
    fn slice_output_is_subsequence() {
        let period =
            Period::new("p", ts("2020-01-01T00:00:00Z"), ts("2020-02-01T00:00:00Z")).unwrap();
        let events: Vec<TweetEvent> = (0..20)
            .map(|i| {
                let when = if i % 2 == 0 {
                    "2020-01-10T00:00:00Z"
                } else {
                    "2020-05-10T00:00:00Z"
                };
                event(&format!("t{i}"), "u1", when, "en", "x")
            })
            .collect();
        let kept = slice_period(&events, &period);
        let mut it = events.iter();
        for k in &kept {
            assert!(it.any(|e| e == k), "output must be a subsequence of input");
        }
    }

    #[test]
    fn dominant_language_counting() {
        let mut geo = UserGeo::default();
        for i in 0..10 {
            geo.insert(format!("u{i}"), "DE");
        }
        let mut events = Vec::new();
        for i in 0..90 {
            events.push(event(
                &format!("a{i}"),
                &format!("u{}", i % 10),
                "2020-01-01T00:00:00Z",
                "de",
                "x",
            ));
        }
        for i in 0..10 {
            events.push(event(
                &format!("b{i}"),
                &format!("u{}", i % 10),
                "2020-01-01T00:00:00Z",
                "en",
                "x",
            ));
        }
        let langs = vec!["de".to_string()];
        assert_eq!(
            dominant_language(&events, "DE", &geo, &langs).unwrap(),
            "de"
        );

        // 60/40 with both spoken
        let mut events2 = Vec::new();
        for i in 0..60 {
            events2.push(event(
                &format!("c{i}"),
                "u0",
                "2020-01-01T00:00:00Z",
                "en",
                "x",
            ));
        }
        for i in 0..40 {
            events2.push(event(
                &format!("d{i}"),
                "u0",
                "2020-01-01T00:00:00Z",
                "es",
                "x",
            ));
        }
        let both = vec!["en".to_string(), "es".to_string()];
        assert_eq!(
            dominant_language(&events2, "DE", &geo, &both).unwrap(),
            "en"
        );
    }

    #[test]
    fn dominant_language_tie_is_lexicographic() {
        let mut geo = UserGeo::default();
        geo.insert("u0".to_string(), "US");
        let mut events = Vec::new();
        for i in 0..50 {
            events.push(event(
                &format!("a{i}"),
                "u0",
                "2020-01-01T00:00:00Z",
                "es",
                "x",
            ));
            events.push(event(
                &format!("b{i}"),
                "u0",
                "2020-01-01T00:00:00Z",
                "en",
                "x",
            ));
        }
        let both = vec!["es".to_string(), "en".to_string()];
        assert_eq!(dominant_language(&events, "US", &geo, &both).unwrap(), "en");
    }

    #[test]
    fn dominant_language_errors() {
        let geo = UserGeo::default();
        let ev = event("t1", "u1", "2020-01-01T00:00:00Z", "en", "x");
        assert!(
            dominant_language(std::slice::from_ref(&ev), "US", &geo, &["en".to_string()]).is_err()
        );

        let mut geo2 = UserGeo::default();
        geo2.insert("u1".to_string(), "US");
        assert!(dominant_language(&[ev], "US", &geo2, &["fr".to_string()]).is_err());
    }

    #[test]
    fn period_file_parses() {
        let text = "p1\t2020-01-01T00:00:00Z\t2020-04-01T00:00:00Z\np2\t2020-04-01T00:00:00Z\t2020-07-01T00:00:00Z\n";
        let periods = parse_periods(text).unwrap();
        assert_eq!(periods.len(), 2);
        assert_eq!(periods[0].name, "p1");
        assert!(parse_periods("bad\t2020-01-01T00:00:00Z\t2019-01-01T00:00:00Z\n").is_err());
        let dup = "p\t2020-01-01T00:00:00Z\t2020-02-01T00:00:00Z\np\t2020-02-01T00:00:00Z\t2020-03-01T00:00:00Z\n";
        assert!(parse_periods(dup).is_err(), "duplicate names must be rejected");
    }

    #[test]
    fn tokenizer_handles_non_latin_scripts() {
        assert_eq!(tokenize("Вакцина — спасение!"), vec!["вакцина", "спасение"]);
        assert_eq!(tokenize("IMPFPFLICHT: ärgerlich?"), vec!["impfpflicht", "ärgerlich"]);
        assert_eq!(tokenize("#vacuna\u{2019}2021"), vec!["vacuna", "2021"]);

        let mut kw = KeywordSet::new();
        kw.add("ru", "Вакцина");
        let ev = event("t1", "u1", "2020-01-01T00:00:00Z", "ru", "вакцина нужна");
        assert_eq!(filter_keywords(&[ev], &kw, "en").len(), 1);
    }

    #[test]
    fn roundtrip_holds_for_randomized_unicode_events() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand::rngs::StdRng::seed_from_u64(8);
        let alphabet: Vec<char> =
            "abcXYZ äöü 北京 вакцина 😀\t\"\\{}[]:,\n'".chars().collect();
        let mut events = Vec::new();
        for i in 0..200 {
            let text: String = (0..rng.random_range(0..40))
                .map(|_| alphabet[rng.random_range(0..alphabet.len())])
                .collect();
            let loc: Option<String> = if rng.random_bool(0.5) {
                Some(
                    (0..rng.random_range(1..12))
                        .map(|_| alphabet[rng.random_range(0..alphabet.len())])
                        .collect(),
                )
            } else {
                None
            };
            let retweet = rng.random_bool(0.4);
            events.push(TweetEvent {
                tweet_id: format!("t{i}"),
                user_id: format!("u{}", rng.random_range(0..20u32)),
                timestamp: ts("2020-06-01T00:00:00Z")
                    + chrono::Duration::milliseconds(rng.random_range(0..86_400_000)),
                lang: ["en", "es", "ru"][rng.random_range(0..3)].to_string(),
                text,
                retweeted_user_id: retweet.then(|| format!("v{}", rng.random_range(0..20u32))),
                retweeted_tweet_id: retweet.then(|| format!("o{i}")),
                urls: (0..rng.random_range(0..3))
                    .map(|k| format!("https://host{k}.example/p{i}?q=a%20b"))
                    .collect(),
                profile_location: loc,
            });
        }
        let serialized: String = events.iter().map(|e| e.to_json_line() + "\n").collect();
        let (parsed, report) = parse_events(serialized.as_bytes()).unwrap();
        assert_eq!(report.rejected(), 0);
        assert_eq!(parsed, events);
    }
}
