//! Country-by-country flow matrices: raw retweet counts, strength-normalized
//! volume, no-vax density ratios, and low-credibility import statistics.
//!
//! Every matrix here uses one orientation: row `i` is the retweeting
//! (importing) country and column `j` the retweeted (source) country, so the
//! entry at `(i, j)` counts retweets by users of `i` of content from `j`.
//! Because information travels from the retweeted user to the retweeter,
//! this is simultaneously the export convention "entry (i, j) = flow from
//! country j to country i"; no transposition happens anywhere.

use std::collections::{BTreeMap, HashSet};

use crate::annotate::Stance;
use crate::error::{Error, Result};
use crate::geolocate::UserGeo;
use crate::ingest::{Period, TweetEvent};
use crate::lowcred::{url_is_lowcred, DomainList};

/// One matrix entry. Masked entries are structurally undefined (diagonals,
/// countries without stance data, below-threshold imports) and are never a
/// plain zero; `Infinite` marks density ratios with an empty denominator but
/// observed numerator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cell {
    Val(f64),
    Masked,
    Infinite,
}

impl Cell {
    pub fn value(&self) -> Option<f64> {
        match self {
            Cell::Val(v) => Some(*v),
            _ => None,
        }
    }

    fn render(&self) -> String {
        match self {
            Cell::Val(v) => format!("{v}"),
            Cell::Masked => "NA".to_string(),
            Cell::Infinite => "inf".to_string(),
        }
    }

    fn parse(s: &str) -> Result<Cell> {
        match s {
            "NA" => Ok(Cell::Masked),
            "inf" => Ok(Cell::Infinite),
            v => v
                .parse::<f64>()
                .map(Cell::Val)
                .map_err(|_| Error::Format(format!("bad matrix cell {v:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixKind {
    Raw,
    Normalized,
    DensityRatio,
    LowcredRate,
    LowcredShare,
}

impl MatrixKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            MatrixKind::Raw => "raw",
            MatrixKind::Normalized => "normalized",
            MatrixKind::DensityRatio => "density-ratio",
            MatrixKind::LowcredRate => "lowcred-rate",
            MatrixKind::LowcredShare => "lowcred-share",
        }
    }
}

/// Square country-by-country matrix; see the module docs for orientation.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowMatrix {
    countries: Vec<String>,
    kind: MatrixKind,
    cells: Vec<Cell>, // row-major
}

impl FlowMatrix {
    pub fn filled(countries: Vec<String>, kind: MatrixKind, fill: Cell) -> Self {
        let n = countries.len();
        FlowMatrix {
            countries,
            kind,
            cells: vec![fill; n * n],
        }
    }

    pub fn countries(&self) -> &[String] {
        &self.countries
    }

    pub fn kind(&self) -> MatrixKind {
        self.kind
    }

    pub fn size(&self) -> usize {
        self.countries.len()
    }

    pub fn get(&self, row: usize, col: usize) -> Cell {
        self.cells[row * self.countries.len() + col]
    }

    pub fn set(&mut self, row: usize, col: usize, cell: Cell) {
        self.cells[row * self.countries.len() + col] = cell;
    }

    pub fn country_index(&self, code: &str) -> Option<usize> {
        self.countries.iter().position(|c| c == code)
    }

    /// Row sums over defined entries.
    pub fn row_sum(&self, row: usize) -> f64 {
        (0..self.size())
            .filter_map(|c| self.get(row, c).value())
            .sum()
    }

    pub fn col_sum(&self, col: usize) -> f64 {
        (0..self.size())
            .filter_map(|r| self.get(r, col).value())
            .sum()
    }

    pub fn total(&self) -> f64 {
        self.cells.iter().filter_map(Cell::value).sum()
    }

    /// CSV with a country header row and column; masked entries are "NA".
    pub fn to_csv(&self) -> String {
        let mut out = String::from("country");
        for c in &self.countries {
            out.push(',');
            out.push_str(c);
        }
        out.push('\n');
        for (r, country) in self.countries.iter().enumerate() {
            out.push_str(country);
            for c in 0..self.countries.len() {
                out.push(',');
                out.push_str(&self.get(r, c).render());
            }
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str, kind: MatrixKind) -> Result<FlowMatrix> {
        let mut lines = text
            .lines()
            .filter(|l| !l.starts_with('#') && !l.trim().is_empty());
        let header = lines
            .next()
            .ok_or_else(|| Error::Format("empty matrix csv".into()))?;
        let countries: Vec<String> = header.split(',').skip(1).map(String::from).collect();
        let mut m = FlowMatrix::filled(countries, kind, Cell::Masked);
        for (r, line) in lines.enumerate() {
            let mut fields = line.split(',');
            let _row_label = fields.next();
            for (c, field) in fields.enumerate() {
                m.set(r, c, Cell::parse(field)?);
            }
        }
        Ok(m)
    }
}

/// Counts retweets between countries within a period: entry `(i, j)` is the
/// number of retweet events whose author is geolocated to `i` and whose
/// retweeted user is geolocated to `j`. The diagonal is kept; the
/// normalization step needs it.
pub fn raw_rt_matrix(
    events: &[TweetEvent],
    user_geo: &UserGeo,
    countries: &[String],
    period: &Period,
) -> FlowMatrix {
    let idx: BTreeMap<&str, usize> = countries
        .iter()
        .enumerate()
        .map(|(i, c)| (c.as_str(), i))
        .collect();
    let n = countries.len();
    let mut counts = vec![0u64; n * n];
    for ev in events {
        let Some(target) = ev.retweeted_user_id.as_deref() else {
            continue;
        };
        if !period.contains(ev.timestamp) {
            continue;
        }
        let (Some(from), Some(to)) = (
            user_geo.country_of(&ev.user_id),
            user_geo.country_of(target),
        ) else {
            continue;
        };
        let (Some(&i), Some(&j)) = (idx.get(from), idx.get(to)) else {
            continue;
        };
        counts[i * n + j] += 1;
    }
    let mut m = FlowMatrix::filled(countries.to_vec(), MatrixKind::Raw, Cell::Val(0.0));
    for i in 0..n {
        for j in 0..n {
            m.set(i, j, Cell::Val(counts[i * n + j] as f64));
        }
    }
    m
}

/// Strength-normalized volume: `n_ij = a_ij / (s_out_i * s_in_j) * E` off
/// the diagonal, where `s_out_i` is row i's total, `s_in_j` column j's
/// total, and `E` the grand total. Entries with a zero marginal are masked
/// and reported in the warning list; the diagonal is always masked.
#[allow(clippy::needless_range_loop)] // index loops mirror the matrix formula
pub fn normalize_flow(raw: &FlowMatrix) -> (FlowMatrix, Vec<String>) {
    let n = raw.size();
    let s_out: Vec<f64> = (0..n).map(|i| raw.row_sum(i)).collect();
    let s_in: Vec<f64> = (0..n).map(|j| raw.col_sum(j)).collect();
    let total = raw.total();
    let mut warnings = Vec::new();
    let mut m = FlowMatrix::filled(raw.countries.clone(), MatrixKind::Normalized, Cell::Masked);
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let a = match raw.get(i, j) {
                Cell::Val(v) => v,
                _ => continue,
            };
            if s_out[i] == 0.0 || s_in[j] == 0.0 {
                warnings.push(format!(
                    "normalization undefined for {} -> {}: zero marginal",
                    raw.countries[i], raw.countries[j]
                ));
                continue;
            }
            m.set(i, j, Cell::Val(a / (s_out[i] * s_in[j]) * total));
        }
    }
    (m, warnings)
}

/// Users of one country split by community stance.
#[derive(Debug, Clone, Default)]
pub struct StanceSets {
    pub novax: HashSet<String>,
    pub other: HashSet<String>,
}

impl StanceSets {
    pub fn users(&self, stance: Stance) -> &HashSet<String> {
        match stance {
            Stance::NoVax => &self.novax,
            Stance::Other => &self.other,
        }
    }
}

/// Ratio of cross-border retweet densities between no-vax cohorts and the
/// rest: `theta_ij = delta_A(i,j) / delta_O(i,j)` with
/// `delta_K = E_K / (|V_K_i| * |V_K_j|)`.
///
/// Rows and columns of countries without stance data (no entry in
/// `stance_sets`, or no no-vax community) are masked. A zero `delta_O`
/// against a positive `delta_A` yields `Infinite`; zero against zero is
/// masked.
pub fn density_ratio(
    events: &[TweetEvent],
    user_geo: &UserGeo,
    countries: &[String],
    stance_sets: &BTreeMap<String, StanceSets>,
    period: &Period,
) -> FlowMatrix {
    let idx: BTreeMap<&str, usize> = countries
        .iter()
        .enumerate()
        .map(|(i, c)| (c.as_str(), i))
        .collect();
    let n = countries.len();
    let mut e_novax = vec![0u64; n * n];
    let mut e_other = vec![0u64; n * n];
    for ev in events {
        let Some(target) = ev.retweeted_user_id.as_deref() else {
            continue;
        };
        if !period.contains(ev.timestamp) {
            continue;
        }
        let (Some(from), Some(to)) = (
            user_geo.country_of(&ev.user_id),
            user_geo.country_of(target),
        ) else {
            continue;
        };
        if from == to {
            continue;
        }
        let (Some(&i), Some(&j)) = (idx.get(from), idx.get(to)) else {
            continue;
        };
        let (Some(si), Some(sj)) = (stance_sets.get(from), stance_sets.get(to)) else {
            continue;
        };
        if si.novax.contains(&ev.user_id) && sj.novax.contains(target) {
            e_novax[i * n + j] += 1;
        } else if si.other.contains(&ev.user_id) && sj.other.contains(target) {
            e_other[i * n + j] += 1;
        }
    }

    let usable: Vec<bool> = countries
        .iter()
        .map(|c| {
            stance_sets
                .get(c)
                .is_some_and(|s| !s.novax.is_empty() && !s.other.is_empty())
        })
        .collect();

    let mut m = FlowMatrix::filled(countries.to_vec(), MatrixKind::DensityRatio, Cell::Masked);
    for i in 0..n {
        for j in 0..n {
            if i == j || !usable[i] || !usable[j] {
                continue;
            }
            let (si, sj) = (&stance_sets[&countries[i]], &stance_sets[&countries[j]]);
            let delta_a =
                e_novax[i * n + j] as f64 / (si.novax.len() as f64 * sj.novax.len() as f64);
            let delta_o =
                e_other[i * n + j] as f64 / (si.other.len() as f64 * sj.other.len() as f64);
            let cell = if delta_o > 0.0 {
                Cell::Val(delta_a / delta_o)
            } else if delta_a > 0.0 {
                Cell::Infinite
            } else {
                Cell::Masked
            };
            m.set(i, j, cell);
        }
    }
    m
}

/// Cross-border low-credibility import statistics.
///
/// The first matrix is the rate: among retweets by country `i` of country
/// `j`, the fraction carrying at least one low-credibility URL. The second
/// is the share: among country `i`'s imported low-credibility retweets, the
/// fraction sourced from `j`; rows of countries importing fewer than
/// `min_imports` low-credibility retweets are masked.
pub fn lowcred_import_matrix(
    events: &[TweetEvent],
    user_geo: &UserGeo,
    countries: &[String],
    domains: &DomainList,
    period: &Period,
    min_imports: u64,
) -> (FlowMatrix, FlowMatrix) {
    let idx: BTreeMap<&str, usize> = countries
        .iter()
        .enumerate()
        .map(|(i, c)| (c.as_str(), i))
        .collect();
    let n = countries.len();
    let mut total = vec![0u64; n * n];
    let mut lowcred = vec![0u64; n * n];
    for ev in events {
        let Some(target) = ev.retweeted_user_id.as_deref() else {
            continue;
        };
        if !period.contains(ev.timestamp) {
            continue;
        }
        let (Some(from), Some(to)) = (
            user_geo.country_of(&ev.user_id),
            user_geo.country_of(target),
        ) else {
            continue;
        };
        if from == to {
            continue;
        }
        let (Some(&i), Some(&j)) = (idx.get(from), idx.get(to)) else {
            continue;
        };
        total[i * n + j] += 1;
        if ev.urls.iter().any(|u| url_is_lowcred(u, domains)) {
            lowcred[i * n + j] += 1;
        }
    }

    let mut rate = FlowMatrix::filled(countries.to_vec(), MatrixKind::LowcredRate, Cell::Masked);
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            if total[i * n + j] > 0 {
                rate.set(
                    i,
                    j,
                    Cell::Val(lowcred[i * n + j] as f64 / total[i * n + j] as f64),
                );
            }
        }
    }

    let mut share = FlowMatrix::filled(countries.to_vec(), MatrixKind::LowcredShare, Cell::Masked);
    for i in 0..n {
        let imports: u64 = (0..n).map(|j| lowcred[i * n + j]).sum();
        if imports < min_imports {
            continue;
        }
        for j in 0..n {
            if i != j {
                share.set(i, j, Cell::Val(lowcred[i * n + j] as f64 / imports as f64));
            }
        }
    }
    (rate, share)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geolocate::UserGeo;
    use chrono::{DateTime, Utc};

    fn ts(s: &str) -> DateTime<Utc> {
        DateTime::parse_from_rfc3339(s).unwrap().with_timezone(&Utc)
    }

    fn period() -> Period {
        Period::new("p", ts("2020-01-01T00:00:00Z"), ts("2020-02-01T00:00:00Z")).unwrap()
    }

    fn retweet(id: &str, user: &str, target: &str, urls: Vec<&str>) -> TweetEvent {
        TweetEvent {
            tweet_id: id.into(),
            user_id: user.into(),
            timestamp: ts("2020-01-15T00:00:00Z"),
            lang: "en".into(),
            text: String::new(),
            retweeted_user_id: Some(target.into()),
            retweeted_tweet_id: Some(format!("o-{id}")),
            urls: urls.into_iter().map(String::from).collect(),
            profile_location: None,
        }
    }

    fn geo(pairs: &[(&str, &str)]) -> UserGeo {
        let mut g = UserGeo::default();
        for (u, c) in pairs {
            g.insert(u.to_string(), c);
        }
        g
    }

    fn countries(list: &[&str]) -> Vec<String> {
        list.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn raw_matrix_counts() {
        let geo = geo(&[("fr1", "FR"), ("de1", "DE"), ("us1", "US"), ("us2", "US")]);
        let mut events = vec![retweet("r0", "fr1", "de1", vec![])];
        for i in 0..10 {
            events.push(retweet(&format!("w{i}"), "us1", "us2", vec![]));
        }
        let cc = countries(&["DE", "FR", "US"]);
        let m = raw_rt_matrix(&events, &geo, &cc, &period());
        let fr = m.country_index("FR").unwrap();
        let de = m.country_index("DE").unwrap();
        let us = m.country_index("US").unwrap();
        assert_eq!(m.get(fr, de), Cell::Val(1.0));
        assert_eq!(m.get(us, us), Cell::Val(10.0));
        assert_eq!(m.get(de, fr), Cell::Val(0.0));

        // row sums equal retweets authored per country; grand marginal identity
        assert_eq!(m.row_sum(fr), 1.0);
        assert_eq!(m.row_sum(us), 10.0);
        let e: f64 = m.total();
        let s_out: f64 = (0..m.size()).map(|i| m.row_sum(i)).sum();
        let s_in: f64 = (0..m.size()).map(|j| m.col_sum(j)).sum();
        assert_eq!(s_out, e);
        assert_eq!(s_in, e);
    }

    #[test]
    fn raw_matrix_equals_hand_count_on_three_country_fixture() {
        let geo = geo(&[
            ("a1", "AR"),
            ("a2", "AR"),
            ("b1", "BR"),
            ("b2", "BR"),
            ("c1", "CL"),
        ]);
        let pairs = [
            ("a1", "b1"),
            ("a2", "b1"),
            ("a1", "b2"),
            ("b1", "a1"),
            ("b2", "c1"),
            ("c1", "c1"),
            ("c1", "a2"),
            ("a1", "a2"),
            ("a1", "a2"),
        ];
        let events: Vec<TweetEvent> = pairs
            .iter()
            .enumerate()
            .map(|(i, (u, v))| retweet(&format!("t{i}"), u, v, vec![]))
            .collect();
        let cc = countries(&["AR", "BR", "CL"]);
        let m = raw_rt_matrix(&events, &geo, &cc, &period());

        // independent counting oracle over the same events
        let mut expected = vec![vec![0u64; 3]; 3];
        for ev in &events {
            let from = geo.country_of(&ev.user_id).unwrap();
            let to = geo.country_of(ev.retweeted_user_id.as_deref().unwrap()).unwrap();
            let fi = cc.iter().position(|c| c == from).unwrap();
            let ti = cc.iter().position(|c| c == to).unwrap();
            expected[fi][ti] += 1;
        }
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(m.get(i, j), Cell::Val(expected[i][j] as f64), "cell ({i},{j})");
            }
        }
    }

    #[test]
    fn normalized_flow_hand_values() {
        let mut raw = FlowMatrix::filled(countries(&["A", "B"]), MatrixKind::Raw, Cell::Val(0.0));
        raw.set(0, 1, Cell::Val(2.0));
        raw.set(1, 0, Cell::Val(8.0));
        let (n, warnings) = normalize_flow(&raw);
        assert!(warnings.is_empty());
        // s_out = [2, 8], s_in = [8, 2], E = 10
        assert_eq!(n.get(0, 1), Cell::Val(2.0 / (2.0 * 2.0) * 10.0));
        assert_eq!(n.get(1, 0), Cell::Val(8.0 / (8.0 * 8.0) * 10.0));
        assert_eq!(n.get(0, 0), Cell::Masked);
        assert_eq!(n.get(1, 1), Cell::Masked);
    }

    #[test]
    fn normalized_flow_expectation_matched_is_one() {
        // a_ij = s_out_i * s_in_j / E by construction
        let s_out = [6.0, 4.0, 10.0];
        let s_in = [8.0, 7.0, 5.0];
        let e: f64 = s_out.iter().sum();
        let mut raw =
            FlowMatrix::filled(countries(&["A", "B", "C"]), MatrixKind::Raw, Cell::Val(0.0));
        for i in 0..3 {
            for j in 0..3 {
                raw.set(i, j, Cell::Val(s_out[i] * s_in[j] / e));
            }
        }
        let (n, _) = normalize_flow(&raw);
        for i in 0..3 {
            for j in 0..3 {
                if i != j {
                    let v = n.get(i, j).value().unwrap();
                    assert!((v - 1.0).abs() < 1e-9, "n[{i}][{j}] = {v}");
                }
            }
        }
    }

    #[test]
    fn normalized_flow_invariant_under_duplication() {
        let mut raw = FlowMatrix::filled(countries(&["A", "B"]), MatrixKind::Raw, Cell::Val(0.0));
        raw.set(0, 1, Cell::Val(3.0));
        raw.set(1, 0, Cell::Val(5.0));
        raw.set(0, 0, Cell::Val(20.0));
        raw.set(1, 1, Cell::Val(30.0));
        let (n1, _) = normalize_flow(&raw);
        let mut doubled = raw.clone();
        for i in 0..2 {
            for j in 0..2 {
                let v = raw.get(i, j).value().unwrap();
                doubled.set(i, j, Cell::Val(2.0 * v));
            }
        }
        let (n2, _) = normalize_flow(&doubled);
        for i in 0..2 {
            for j in 0..2 {
                match (n1.get(i, j), n2.get(i, j)) {
                    (Cell::Val(a), Cell::Val(b)) => assert!((a - b).abs() < 1e-12),
                    (a, b) => assert_eq!(a, b),
                }
            }
        }
    }

    #[test]
    fn normalized_flow_masks_zero_marginal() {
        let mut raw =
            FlowMatrix::filled(countries(&["A", "B", "C"]), MatrixKind::Raw, Cell::Val(0.0));
        raw.set(0, 1, Cell::Val(4.0));
        raw.set(1, 0, Cell::Val(4.0));
        // country C never retweets and is never retweeted
        let (n, warnings) = normalize_flow(&raw);
        assert_eq!(n.get(0, 2), Cell::Masked);
        assert_eq!(n.get(2, 0), Cell::Masked);
        assert!(!warnings.is_empty());
    }

    fn stance_fixture() -> BTreeMap<String, StanceSets> {
        let mut sets = BTreeMap::new();
        for cc in ["I", "J"] {
            let mut s = StanceSets::default();
            for k in 0..10 {
                s.novax.insert(format!("{cc}a{k}"));
            }
            for k in 0..100 {
                s.other.insert(format!("{cc}o{k}"));
            }
            sets.insert(cc.to_string(), s);
        }
        sets
    }

    #[test]
    fn theta_hand_value() {
        let sets = stance_fixture();
        let mut geo = UserGeo::default();
        for (cc, s) in &sets {
            for u in s.novax.iter().chain(&s.other) {
                geo.insert(u.clone(), cc);
            }
        }
        let mut events = Vec::new();
        // E_A(I->J) = 5 over 10*10 pairs: delta_A = 0.05
        for k in 0..5 {
            events.push(retweet(
                &format!("a{k}"),
                &format!("Ia{k}"),
                &format!("Ja{k}"),
                vec![],
            ));
        }
        // E_O(I->J) = 50 over 100*100 pairs: delta_O = 0.005
        for k in 0..50 {
            events.push(retweet(
                &format!("o{k}"),
                &format!("Io{}", k % 100),
                &format!("Jo{}", (k * 7) % 100),
                vec![],
            ));
        }
        let cc = countries(&["I", "J"]);
        let theta = density_ratio(&events, &geo, &cc, &sets, &period());
        let i = theta.country_index("I").unwrap();
        let j = theta.country_index("J").unwrap();
        let v = theta.get(i, j).value().unwrap();
        assert!((v - 10.0).abs() < 1e-12, "theta = {v}");
        // no events in the other direction: masked (0/0)
        assert_eq!(theta.get(j, i), Cell::Masked);
    }

    #[test]
    fn theta_is_one_at_equal_densities() {
        let sets = stance_fixture();
        let mut geo = UserGeo::default();
        for (cc, s) in &sets {
            for u in s.novax.iter().chain(&s.other) {
                geo.insert(u.clone(), cc);
            }
        }
        // delta_A = 2/100, delta_O = 200/10000: both 0.02
        let mut events = Vec::new();
        for k in 0..2 {
            events.push(retweet(
                &format!("a{k}"),
                &format!("Ia{k}"),
                &format!("Ja{k}"),
                vec![],
            ));
        }
        for k in 0..200 {
            events.push(retweet(
                &format!("o{k}"),
                &format!("Io{}", k % 100),
                &format!("Jo{}", (k * 3 + k / 100) % 100),
                vec![],
            ));
        }
        let cc = countries(&["I", "J"]);
        let theta = density_ratio(&events, &geo, &cc, &sets, &period());
        let i = theta.country_index("I").unwrap();
        let j = theta.country_index("J").unwrap();
        let v = theta.get(i, j).value().unwrap();
        assert!((v - 1.0).abs() < 1e-12, "equal densities must give theta = 1, got {v}");
    }

    #[test]
    fn theta_masks_countries_without_stance() {
        let mut sets = stance_fixture();
        sets.remove("J");
        let mut geo = UserGeo::default();
        for (cc, s) in &sets {
            for u in s.novax.iter().chain(&s.other) {
                geo.insert(u.clone(), cc);
            }
        }
        let cc = countries(&["I", "J"]);
        let theta = density_ratio(&[], &geo, &cc, &sets, &period());
        for r in 0..2 {
            for c in 0..2 {
                assert_eq!(theta.get(r, c), Cell::Masked);
            }
        }
    }

    #[test]
    fn theta_infinite_when_only_novax_connect() {
        let sets = stance_fixture();
        let mut geo = UserGeo::default();
        for (cc, s) in &sets {
            for u in s.novax.iter().chain(&s.other) {
                geo.insert(u.clone(), cc);
            }
        }
        let events = vec![retweet("a0", "Ia0", "Ja0", vec![])];
        let cc = countries(&["I", "J"]);
        let theta = density_ratio(&events, &geo, &cc, &sets, &period());
        let i = theta.country_index("I").unwrap();
        let j = theta.country_index("J").unwrap();
        assert_eq!(theta.get(i, j), Cell::Infinite);
    }

    #[test]
    fn theta_isolated_relabel_changes_only_denominators() {
        let sets = stance_fixture();
        let mut geo = UserGeo::default();
        for (cc, s) in &sets {
            for u in s.novax.iter().chain(&s.other) {
                geo.insert(u.clone(), cc);
            }
        }
        let mut events = Vec::new();
        for k in 0..4 {
            events.push(retweet(
                &format!("a{k}"),
                &format!("Ia{k}"),
                &format!("Ja{k}"),
                vec![],
            ));
            events.push(retweet(
                &format!("o{k}"),
                &format!("Io{k}"),
                &format!("Jo{k}"),
                vec![],
            ));
        }
        let cc = countries(&["I", "J"]);
        let before = density_ratio(&events, &geo, &cc, &sets, &period());

        // move an isolated user (no cross-border edges) from O to A in country I
        let mut moved = sets.clone();
        let s = moved.get_mut("I").unwrap();
        s.other.remove("Io99");
        s.novax.insert("Io99".to_string());
        let after = density_ratio(&events, &geo, &cc, &moved, &period());

        let i = before.country_index("I").unwrap();
        let j = before.country_index("J").unwrap();
        let (b, a) = (
            before.get(i, j).value().unwrap(),
            after.get(i, j).value().unwrap(),
        );
        // numerators unchanged; V_A_i grew by one, V_O_i shrank by one
        let expected = b * (10.0 / 11.0) * (99.0 / 100.0);
        assert!((a - expected).abs() < 1e-12, "{a} vs {expected}");
    }

    #[test]
    fn lowcred_matrices_and_masking() {
        let mut domains = DomainList::new();
        domains.add("bad.com", "");
        let geo = geo(&[
            ("a1", "AA"),
            ("b1", "BB"),
            ("c1", "CC"),
            ("b2", "BB"),
            ("c2", "CC"),
        ]);
        let mut events = Vec::new();
        // AA imports 12 lowcred retweets from BB and 4 clean from CC
        for k in 0..12 {
            events.push(retweet(
                &format!("x{k}"),
                "a1",
                "b1",
                vec!["https://bad.com/p"],
            ));
        }
        for k in 0..4 {
            events.push(retweet(
                &format!("y{k}"),
                "a1",
                "c1",
                vec!["https://ok.org/p"],
            ));
        }
        // BB imports only 2 lowcred: below the default threshold of 10
        for k in 0..2 {
            events.push(retweet(
                &format!("z{k}"),
                "b2",
                "c2",
                vec!["https://bad.com/q"],
            ));
        }
        let cc = countries(&["AA", "BB", "CC"]);
        let (rate, share) = lowcred_import_matrix(&events, &geo, &cc, &domains, &period(), 10);
        let aa = rate.country_index("AA").unwrap();
        let bb = rate.country_index("BB").unwrap();
        let ccx = rate.country_index("CC").unwrap();

        assert_eq!(rate.get(aa, bb), Cell::Val(1.0));
        assert_eq!(rate.get(aa, ccx), Cell::Val(0.0));
        assert_eq!(rate.get(bb, ccx), Cell::Val(1.0));
        assert_eq!(
            rate.get(ccx, aa),
            Cell::Masked,
            "no retweets at all stays masked"
        );

        // share: all of AA's imports come from BB
        assert_eq!(share.get(aa, bb), Cell::Val(1.0));
        assert_eq!(share.get(aa, ccx), Cell::Val(0.0));
        // row sums to one over defined entries
        assert!((share.row_sum(aa) - 1.0).abs() < 1e-9);
        // BB imported fewer than 10: whole row masked
        assert_eq!(share.get(bb, ccx), Cell::Masked);
        assert_eq!(share.get(bb, aa), Cell::Masked);
    }

    #[test]
    fn csv_roundtrip() {
        let mut m = FlowMatrix::filled(
            countries(&["X", "Y"]),
            MatrixKind::DensityRatio,
            Cell::Masked,
        );
        m.set(0, 1, Cell::Val(2.5));
        m.set(1, 0, Cell::Infinite);
        let text = m.to_csv();
        let back = FlowMatrix::from_csv(&text, MatrixKind::DensityRatio).unwrap();
        assert_eq!(back, m);
        assert!(text.starts_with("country,X,Y\n"));
    }
}
