//! Low-credibility domain lists and URL/domain statistics.

use std::collections::{BTreeMap, HashMap};

use crate::error::{Error, Result};
use crate::ingest::TweetEvent;

/// Set of normalized registrable domains considered low-credibility.
/// Entries are lowercase, scheme-less, without a leading `www.` or a path.
#[derive(Debug, Clone, Default)]
pub struct DomainList {
    domains: BTreeMap<String, String>, // domain -> source tag
}

impl DomainList {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, domain: &str, source: &str) {
        let mut d = domain.trim().to_lowercase();
        if let Some(rest) = d.strip_prefix("www.") {
            d = rest.to_string();
        }
        if let Some(slash) = d.find('/') {
            d.truncate(slash);
        }
        if !d.is_empty() {
            self.domains.insert(d, source.to_string());
        }
    }

    /// Loads a domain list file: one domain per line, `#` comments, optional
    /// `<TAB>source` tag.
    pub fn parse(text: &str) -> Self {
        let mut list = Self::new();
        for line in text.lines() {
            let line = line.trim_end();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            match line.split_once('\t') {
                Some((domain, source)) => list.add(domain, source),
                None => list.add(line, ""),
            }
        }
        list
    }

    pub fn len(&self) -> usize {
        self.domains.len()
    }

    pub fn is_empty(&self) -> bool {
        self.domains.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.domains.iter().map(|(d, s)| (d.as_str(), s.as_str()))
    }
}

/// Optional pre-resolution map for URL shorteners: `short_url<TAB>resolved_url`.
#[derive(Debug, Clone, Default)]
pub struct ShortenerMap {
    map: HashMap<String, String>,
}

impl ShortenerMap {
    pub fn parse(text: &str) -> Result<Self> {
        let mut map = HashMap::new();
        for (no, line) in text.lines().enumerate() {
            let line = line.trim_end();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (short, resolved) = line.split_once('\t').ok_or_else(|| {
                Error::Format(format!(
                    "shortener map line {}: expected short<TAB>resolved",
                    no + 1
                ))
            })?;
            map.insert(short.to_string(), resolved.to_string());
        }
        Ok(Self { map })
    }

    pub fn resolve<'a>(&'a self, url: &'a str) -> &'a str {
        self.map.get(url).map(|s| s.as_str()).unwrap_or(url)
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

/// Extracts the normalized host from a URL: lowercased, port stripped, one
/// leading `www.` stripped.
///
/// Inputs without a scheme are treated as already-extracted domains and only
/// validated and lowercased, which makes the function idempotent on its own
/// output.
pub fn extract_domain(url: &str) -> Result<String> {
    let trimmed = url.trim();
    if trimmed.contains("://") {
        let parsed = url::Url::parse(trimmed)
            .map_err(|e| Error::InvalidInput(format!("cannot parse url {trimmed:?}: {e}")))?;
        let host = parsed
            .host_str()
            .ok_or_else(|| Error::InvalidInput(format!("url has no host: {trimmed:?}")))?;
        let host = host.to_lowercase();
        let host = host.strip_prefix("www.").unwrap_or(&host);
        if !host.contains('.') {
            return Err(Error::InvalidInput(format!(
                "host is not a domain: {host:?}"
            )));
        }
        Ok(host.to_string())
    } else {
        // bare domain, possibly with port or path remnants
        let mut host = trimmed.to_lowercase();
        if let Some(slash) = host.find('/') {
            host.truncate(slash);
        }
        if let Some(colon) = host.find(':') {
            host.truncate(colon);
        }
        if host.is_empty() || !host.contains('.') || host.contains(char::is_whitespace) {
            return Err(Error::InvalidInput(format!("not a domain: {url:?}")));
        }
        Ok(host)
    }
}

/// Canonical URL identity used by the co-sharing graph: scheme and fragment
/// are dropped, the host is normalized like [`extract_domain`], the rest of
/// the URL is kept verbatim.
pub fn normalize_url(url: &str) -> Result<String> {
    let parsed = url::Url::parse(url.trim())
        .map_err(|e| Error::InvalidInput(format!("cannot parse url {url:?}: {e}")))?;
    let host = parsed
        .host_str()
        .ok_or_else(|| Error::InvalidInput(format!("url has no host: {url:?}")))?;
    let host = host.to_lowercase();
    let host = host.strip_prefix("www.").unwrap_or(&host).to_string();
    let mut out = host;
    let path = parsed.path();
    if path != "/" || parsed.query().is_some() {
        out.push_str(path);
    }
    if let Some(q) = parsed.query() {
        out.push('?');
        out.push_str(q);
    }
    Ok(out)
}

/// True iff `domain` equals a list entry or is a subdomain of one
/// (suffix match on a dot boundary).
pub fn is_lowcred(domain: &str, list: &DomainList) -> bool {
    let mut rest = domain;
    loop {
        if list.domains.contains_key(rest) {
            return true;
        }
        match rest.find('.') {
            Some(dot) => rest = &rest[dot + 1..],
            None => return false,
        }
    }
}

/// Convenience: true iff the URL's domain is on the list.
pub fn url_is_lowcred(url: &str, list: &DomainList) -> bool {
    extract_domain(url)
        .map(|d| is_lowcred(&d, list))
        .unwrap_or(false)
}

/// Fraction of URL share occurrences that hit the low-credibility list,
/// over occurrences with an extractable domain. `None` when the events
/// carry no usable URLs.
pub fn lowcred_fraction(events: &[TweetEvent], list: &DomainList) -> Option<f64> {
    let mut total = 0u64;
    let mut hits = 0u64;
    for ev in events {
        for u in &ev.urls {
            if let Ok(domain) = extract_domain(u) {
                total += 1;
                if is_lowcred(&domain, list) {
                    hits += 1;
                }
            }
        }
    }
    if total == 0 {
        None
    } else {
        Some(hits as f64 / total as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::Utc;

    #[test]
    fn extract_domain_cases() {
        assert_eq!(
            extract_domain("https://WWW.Zerohedge.com/a/b").unwrap(),
            "zerohedge.com"
        );
        assert_eq!(
            extract_domain("http://example.com:8080/x").unwrap(),
            "example.com"
        );
        assert!(extract_domain("notaurl").is_err());
    }

    #[test]
    fn extract_domain_idempotent() {
        for url in [
            "https://WWW.Zerohedge.com/a/b",
            "http://example.com:8080/x",
            "https://news.site.org/path?q=1#frag",
        ] {
            let once = extract_domain(url).unwrap();
            let twice = extract_domain(&once).unwrap();
            assert_eq!(once, twice);
        }
    }

    #[test]
    fn normalize_url_strips_scheme_and_fragment() {
        assert_eq!(
            normalize_url("https://Example.com/a?q=1#frag").unwrap(),
            "example.com/a?q=1"
        );
        assert_eq!(
            normalize_url("http://www.example.com/").unwrap(),
            "example.com"
        );
        assert_eq!(
            normalize_url("http://example.com/a").unwrap(),
            normalize_url("https://example.com/a#other").unwrap()
        );
    }

    #[test]
    fn lowcred_membership() {
        let mut list = DomainList::new();
        list.add("zerohedge.com", "test");
        assert!(is_lowcred("zerohedge.com", &list));
        assert!(is_lowcred("news.zerohedge.com", &list));
        assert!(!is_lowcred("azerohedge.com", &list));
    }

    #[test]
    fn lowcred_monotone_under_additions() {
        let mut list = DomainList::new();
        list.add("a.com", "");
        let domains = ["a.com", "x.a.com", "b.org", "c.net"];
        let before: Vec<bool> = domains.iter().map(|d| is_lowcred(d, &list)).collect();
        list.add("b.org", "");
        for (i, d) in domains.iter().enumerate() {
            if before[i] {
                assert!(is_lowcred(d, &list), "adding entries must not clear {d}");
            }
        }
    }

    #[test]
    fn list_parse_normalizes_entries() {
        let list = DomainList::parse("# comment\nWWW.Example.COM/path\tsrc\nplain.org\n");
        assert!(is_lowcred("example.com", &list));
        assert!(is_lowcred("plain.org", &list));
        assert_eq!(list.len(), 2);
    }

    fn ev_with_urls(urls: Vec<&str>) -> TweetEvent {
        TweetEvent {
            tweet_id: "t".into(),
            user_id: "u".into(),
            timestamp: Utc::now(),
            lang: "en".into(),
            text: String::new(),
            retweeted_user_id: None,
            retweeted_tweet_id: None,
            urls: urls.into_iter().map(String::from).collect(),
            profile_location: None,
        }
    }

    #[test]
    fn fraction_counts_occurrences() {
        let mut list = DomainList::new();
        list.add("bad.com", "");
        let events = vec![ev_with_urls(vec![
            "https://bad.com/a",
            "https://ok.org/b",
            "https://ok.org/b",
            "https://fine.net/c",
        ])];
        assert_eq!(lowcred_fraction(&events, &list), Some(0.25));
        assert_eq!(lowcred_fraction(&[ev_with_urls(vec![])], &list), None);
    }

    #[test]
    fn shortener_resolution() {
        let map = ShortenerMap::parse("https://t.co/x\thttps://bad.com/article\n").unwrap();
        assert_eq!(map.resolve("https://t.co/x"), "https://bad.com/article");
        assert_eq!(map.resolve("https://other.com"), "https://other.com");
    }
}
