//! Per-cohort behavior statistics (retweets, URL shares, YouTube shares,
//! low-credibility fraction) and account-suspension statistics.

use std::collections::BTreeMap;

use chrono::NaiveDate;

use crate::annotate::Stance;
use crate::cluster::Partition;
use crate::error::{Error, Result};
use crate::ingest::TweetEvent;
use crate::lowcred::{extract_domain, lowcred_fraction, DomainList};

/// Account status snapshot, loaded from `user_id<TAB>status` lines with an
/// optional third column carrying the date of the user's last tweet.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Active,
    Suspended,
    Deleted,
}

impl Status {
    pub fn parse(s: &str) -> Result<Status> {
        match s.trim() {
            "active" => Ok(Status::Active),
            "suspended" => Ok(Status::Suspended),
            "deleted" => Ok(Status::Deleted),
            other => Err(Error::InvalidInput(format!(
                "unknown account status {other:?}"
            ))),
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Status::Active => "active",
            Status::Suspended => "suspended",
            Status::Deleted => "deleted",
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct AccountStatus {
    status: BTreeMap<String, Status>,
    last_tweet: BTreeMap<String, NaiveDate>,
}

impl AccountStatus {
    pub fn parse(text: &str) -> Result<Self> {
        let mut out = AccountStatus::default();
        for (no, line) in text.lines().enumerate() {
            let line = line.trim_end();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let parts: Vec<&str> = line.split('\t').collect();
            if parts.len() < 2 || parts.len() > 3 {
                return Err(Error::Format(format!(
                    "status file line {}: expected user<TAB>status[<TAB>date]",
                    no + 1
                )));
            }
            let status = Status::parse(parts[1])?;
            out.status.insert(parts[0].to_string(), status);
            if let Some(date) = parts.get(2) {
                let d = NaiveDate::parse_from_str(date, "%Y-%m-%d").map_err(|e| {
                    Error::Format(format!("status file line {}: bad date: {e}", no + 1))
                })?;
                out.last_tweet.insert(parts[0].to_string(), d);
            }
        }
        Ok(out)
    }

    /// Users absent from the snapshot count as active.
    pub fn status_of(&self, user: &str) -> Status {
        self.status.get(user).copied().unwrap_or(Status::Active)
    }

    pub fn known(&self, user: &str) -> bool {
        self.status.contains_key(user)
    }

    pub fn last_tweet_of(&self, user: &str) -> Option<NaiveDate> {
        self.last_tweet.get(user).copied()
    }

    pub fn insert(&mut self, user: String, status: Status) {
        self.status.insert(user, status);
    }

    pub fn len(&self) -> usize {
        self.status.len()
    }

    pub fn is_empty(&self) -> bool {
        self.status.is_empty()
    }
}

/// Aggregated behavior of one cohort of a network. `stance = None` marks
/// the fallback single "all users" cohort used when no stance map exists.
#[derive(Debug, Clone, PartialEq)]
pub struct CohortStats {
    pub stance: Option<Stance>,
    pub n_users: u32,
    pub avg_retweets: f64,
    pub avg_urls: f64,
    pub avg_youtube_urls: f64,
    pub lowcred_fraction: Option<f64>,
}

fn is_youtube(url: &str) -> bool {
    matches!(
        extract_domain(url).as_deref(),
        Ok("youtube.com") | Ok("youtu.be")
    )
}

/// Splits the partition's users into stance cohorts and computes per-user
/// averages over the given events. Users in communities with no stance
/// entry fall into the O cohort; with no stance map at all, one cohort
/// covering every partitioned user is returned.
pub fn cohort_behavior(
    events: &[TweetEvent],
    partition: &Partition,
    stances: Option<&BTreeMap<u32, Stance>>,
    domains: &DomainList,
) -> Vec<CohortStats> {
    let cohort_of = |community: u32| -> Option<Stance> {
        stances.map(|m| m.get(&community).copied().unwrap_or(Stance::Other))
    };

    // cohort -> user set
    let mut cohorts: BTreeMap<Option<Stance>, Vec<&str>> = BTreeMap::new();
    for (user, community) in partition.iter() {
        cohorts.entry(cohort_of(community)).or_default().push(user);
    }

    let mut out = Vec::new();
    for (stance, users) in cohorts {
        let user_set: std::collections::HashSet<&str> = users.iter().copied().collect();
        let cohort_events: Vec<TweetEvent> = events
            .iter()
            .filter(|ev| user_set.contains(ev.user_id.as_str()))
            .cloned()
            .collect();
        let n_users = users.len() as u32;
        let retweets = cohort_events.iter().filter(|e| e.is_retweet()).count() as f64;
        let urls: usize = cohort_events.iter().map(|e| e.urls.len()).sum();
        let youtube: usize = cohort_events
            .iter()
            .map(|e| e.urls.iter().filter(|u| is_youtube(u)).count())
            .sum();
        out.push(CohortStats {
            stance,
            n_users,
            avg_retweets: retweets / n_users as f64,
            avg_urls: urls as f64 / n_users as f64,
            avg_youtube_urls: youtube as f64 / n_users as f64,
            lowcred_fraction: lowcred_fraction(&cohort_events, domains),
        });
    }
    out
}

/// Suspension proportions per cohort plus the last-tweet-date series of
/// suspended users.
#[derive(Debug, Clone)]
pub struct SuspensionStats {
    pub cohorts: Vec<CohortSuspension>,
    /// Share of the partition's users present in the status snapshot.
    pub coverage: f64,
    /// Suspended users with their last-tweet date (from the snapshot when
    /// present, otherwise the latest event timestamp).
    pub suspended_last_dates: BTreeMap<String, Option<NaiveDate>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CohortSuspension {
    pub stance: Option<Stance>,
    pub n_users: u32,
    pub n_suspended: u32,
    pub proportion: f64,
}

/// Counts suspended users per stance cohort. Users missing from the status
/// snapshot are treated as active but reduce the reported coverage.
pub fn suspension_stats(
    partition: &Partition,
    stances: Option<&BTreeMap<u32, Stance>>,
    status: &AccountStatus,
    events: &[TweetEvent],
) -> SuspensionStats {
    let cohort_of = |community: u32| -> Option<Stance> {
        stances.map(|m| m.get(&community).copied().unwrap_or(Stance::Other))
    };

    let mut last_event: BTreeMap<&str, chrono::DateTime<chrono::Utc>> = BTreeMap::new();
    for ev in events {
        match last_event.get(ev.user_id.as_str()) {
            Some(ts) if *ts >= ev.timestamp => {}
            _ => {
                last_event.insert(&ev.user_id, ev.timestamp);
            }
        }
    }

    let mut per_cohort: BTreeMap<Option<Stance>, (u32, u32)> = BTreeMap::new();
    let mut known = 0u32;
    let mut suspended_last_dates = BTreeMap::new();
    for (user, community) in partition.iter() {
        let entry = per_cohort.entry(cohort_of(community)).or_default();
        entry.0 += 1;
        if status.known(user) {
            known += 1;
        }
        if status.status_of(user) == Status::Suspended {
            entry.1 += 1;
            let date = status
                .last_tweet_of(user)
                .or_else(|| last_event.get(user).map(|ts| ts.date_naive()));
            suspended_last_dates.insert(user.to_string(), date);
        }
    }

    let cohorts = per_cohort
        .into_iter()
        .map(|(stance, (n_users, n_suspended))| CohortSuspension {
            stance,
            n_users,
            n_suspended,
            proportion: if n_users > 0 {
                n_suspended as f64 / n_users as f64
            } else {
                0.0
            },
        })
        .collect();
    let total = partition.len() as f64;
    SuspensionStats {
        cohorts,
        coverage: if total > 0.0 {
            known as f64 / total
        } else {
            0.0
        },
        suspended_last_dates,
    }
}

/// Daily histogram of suspended users by last-tweet date (users with an
/// unknown date are skipped).
pub fn suspension_timeline(stats: &SuspensionStats) -> BTreeMap<NaiveDate, u32> {
    let mut out: BTreeMap<NaiveDate, u32> = BTreeMap::new();
    for date in stats.suspended_last_dates.values().flatten() {
        *out.entry(*date).or_default() += 1;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::{DateTime, Utc};

    fn ts(s: &str) -> DateTime<Utc> {
        DateTime::parse_from_rfc3339(s).unwrap().with_timezone(&Utc)
    }

    fn event(id: &str, user: &str, when: &str, retweet: bool, urls: Vec<&str>) -> TweetEvent {
        TweetEvent {
            tweet_id: id.into(),
            user_id: user.into(),
            timestamp: ts(when),
            lang: "en".into(),
            text: String::new(),
            retweeted_user_id: retweet.then(|| "someone".to_string()),
            retweeted_tweet_id: retweet.then(|| format!("o-{id}")),
            urls: urls.into_iter().map(String::from).collect(),
            profile_location: None,
        }
    }

    fn two_cohort_partition() -> (Partition, BTreeMap<u32, Stance>) {
        let partition = Partition::from_labeled(vec![
            ("a1".to_string(), "novax"),
            ("a2".to_string(), "novax"),
            ("o1".to_string(), "rest"),
            ("o2".to_string(), "rest"),
        ]);
        let mut stances = BTreeMap::new();
        stances.insert(partition.community_of("a1").unwrap(), Stance::NoVax);
        stances.insert(partition.community_of("o1").unwrap(), Stance::Other);
        (partition, stances)
    }

    #[test]
    fn behavior_average_retweets() {
        let (partition, stances) = two_cohort_partition();
        let mut events = Vec::new();
        for i in 0..3 {
            events.push(event(
                &format!("r{i}"),
                "a1",
                "2020-01-01T00:00:00Z",
                true,
                vec![],
            ));
        }
        for i in 0..5 {
            events.push(event(
                &format!("s{i}"),
                "a2",
                "2020-01-01T00:00:00Z",
                true,
                vec![],
            ));
        }
        let stats = cohort_behavior(&events, &partition, Some(&stances), &DomainList::new());
        let a = stats
            .iter()
            .find(|s| s.stance == Some(Stance::NoVax))
            .unwrap();
        assert_eq!(a.n_users, 2);
        assert_eq!(a.avg_retweets, 4.0);
        let o = stats
            .iter()
            .find(|s| s.stance == Some(Stance::Other))
            .unwrap();
        assert_eq!(o.avg_retweets, 0.0);
        assert_eq!(o.lowcred_fraction, None);
    }

    #[test]
    fn behavior_counts_youtube_variants() {
        let (partition, stances) = two_cohort_partition();
        let events = vec![event(
            "t1",
            "a1",
            "2020-01-01T00:00:00Z",
            false,
            vec![
                "https://youtu.be/x",
                "https://www.youtube.com/watch?v=1",
                "https://other.org/v",
            ],
        )];
        let stats = cohort_behavior(&events, &partition, Some(&stances), &DomainList::new());
        let a = stats
            .iter()
            .find(|s| s.stance == Some(Stance::NoVax))
            .unwrap();
        assert_eq!(a.avg_urls, 1.5);
        assert_eq!(a.avg_youtube_urls, 1.0);
    }

    #[test]
    fn behavior_without_stance_map_is_single_cohort() {
        let (partition, _) = two_cohort_partition();
        let events = vec![event("t1", "a1", "2020-01-01T00:00:00Z", true, vec![])];
        let stats = cohort_behavior(&events, &partition, None, &DomainList::new());
        assert_eq!(stats.len(), 1);
        assert_eq!(stats[0].stance, None);
        assert_eq!(stats[0].n_users, 4);
    }

    #[test]
    fn suspension_proportions() {
        let (partition, stances) = two_cohort_partition();
        let mut status = AccountStatus::default();
        status.insert("a1".into(), Status::Suspended);
        status.insert("a2".into(), Status::Active);
        status.insert("o1".into(), Status::Deleted);
        status.insert("o2".into(), Status::Active);
        let events = vec![event("t1", "a1", "2020-01-06T12:00:00Z", false, vec![])];
        let stats = suspension_stats(&partition, Some(&stances), &status, &events);
        let a = stats
            .cohorts
            .iter()
            .find(|c| c.stance == Some(Stance::NoVax))
            .unwrap();
        assert_eq!(a.proportion, 0.5);
        let o = stats
            .cohorts
            .iter()
            .find(|c| c.stance == Some(Stance::Other))
            .unwrap();
        assert_eq!(o.proportion, 0.0, "deleted accounts are not suspended");
        assert_eq!(stats.coverage, 1.0);
        assert_eq!(
            stats.suspended_last_dates["a1"],
            Some(NaiveDate::from_ymd_opt(2020, 1, 6).unwrap())
        );
    }

    #[test]
    fn suspension_unknown_users_count_active_with_low_coverage() {
        let (partition, stances) = two_cohort_partition();
        let status = AccountStatus::default();
        let stats = suspension_stats(&partition, Some(&stances), &status, &[]);
        assert_eq!(stats.coverage, 0.0);
        for c in &stats.cohorts {
            assert_eq!(c.proportion, 0.0);
        }
    }

    #[test]
    fn suspension_proportion_two_of_ten() {
        let partition =
            Partition::from_labeled((0..10).map(|i| (format!("u{i}"), "all".to_string())));
        let mut status = AccountStatus::default();
        for i in 0..10 {
            let s = if i < 2 { Status::Suspended } else { Status::Active };
            status.insert(format!("u{i}"), s);
        }
        let stats = suspension_stats(&partition, None, &status, &[]);
        assert_eq!(stats.cohorts.len(), 1);
        assert_eq!(stats.cohorts[0].proportion, 0.2);
    }

    #[test]
    fn suspension_timeline_peaks_on_burst_date() {
        let partition =
            Partition::from_labeled((0..10).map(|i| (format!("u{i}"), "all".to_string())));
        let mut status = AccountStatus::default();
        let mut events = Vec::new();
        for i in 0..10 {
            let user = format!("u{i}");
            // 6 suspended users last tweeted on the burst day
            if i < 6 {
                status.insert(user.clone(), Status::Suspended);
                events.push(event(
                    &format!("t{i}"),
                    &user,
                    "2021-01-08T10:00:00Z",
                    false,
                    vec![],
                ));
            } else if i < 8 {
                status.insert(user.clone(), Status::Suspended);
                events.push(event(
                    &format!("t{i}"),
                    &user,
                    "2021-02-01T10:00:00Z",
                    false,
                    vec![],
                ));
            } else {
                status.insert(user.clone(), Status::Active);
                events.push(event(
                    &format!("t{i}"),
                    &user,
                    "2021-02-03T10:00:00Z",
                    false,
                    vec![],
                ));
            }
        }
        let stats = suspension_stats(&partition, None, &status, &events);
        let timeline = suspension_timeline(&stats);
        let burst = NaiveDate::from_ymd_opt(2021, 1, 8).unwrap();
        assert_eq!(timeline[&burst], 6);
        let total: u32 = timeline.values().sum();
        assert_eq!(total as usize, stats.suspended_last_dates.len());
        assert_eq!(timeline.values().max(), Some(&6));
    }

    #[test]
    fn status_file_parse() {
        let text = "u1\tsuspended\nu2\tactive\nu3\tdeleted\t2021-01-06\n";
        let status = AccountStatus::parse(text).unwrap();
        assert_eq!(status.status_of("u1"), Status::Suspended);
        assert_eq!(status.status_of("unknown"), Status::Active);
        assert!(!status.known("unknown"));
        assert_eq!(
            status.last_tweet_of("u3"),
            Some(NaiveDate::from_ymd_opt(2021, 1, 6).unwrap())
        );
        assert!(AccountStatus::parse("u1\tbanned\n").is_err());
    }
}
