//! Stage implementations. Every stage reads prior artifacts from the output
//! directory (or config-referenced inputs), computes, and writes its own
//! artifacts with stable ordering so reruns are byte-identical.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use echoflow_core::annotate::{
    classify_communities, cohen_kappa, sample_round1, sample_round2, tally_labels, Label,
    LabelCounts, LabelRecord, Stance, StanceMap,
};
use echoflow_core::cluster::{modularity, paris_dendrogram, select_partition, Partition};
use echoflow_core::cohorts::{cohort_behavior, suspension_stats, AccountStatus};
use echoflow_core::flows::{
    density_ratio, lowcred_import_matrix, normalize_flow, raw_rt_matrix, FlowMatrix, StanceSets,
};
use echoflow_core::geolocate::{assign_countries, eligible_countries, Gazetteer, UserGeo};
use echoflow_core::graph::{
    build_co_graph, build_rt_graph, giant_component, overlap_coefficient, prune, WeightedGraph,
};
use echoflow_core::ingest::{
    dominant_language, filter_keywords, parse_events, parse_periods, slice_period, KeywordSet,
    Period, TweetEvent,
};
use echoflow_core::lowcred::{DomainList, ShortenerMap};
use echoflow_core::polarization::{
    default_k_absorb, nmi, rwc_exact, rwc_montecarlo, Bipartition, RwcResult,
};
use echoflow_core::synth::{synth_corpus, CorpusSpec};

use crate::config::{Config, KAbsorbPolicy, RwcMethodChoice};
use crate::{read_artifact, read_input, sub_seed, write_artifact, CliError, CliResult};

/// Maximum transient-set size for which `rwc_method = auto` picks the exact
/// linear-system solve.
const RWC_EXACT_AUTO_LIMIT: usize = 1500;

pub struct Pipeline {
    pub cfg: Config,
    pub out: PathBuf,
    pub digest: String,
    pub country_filter: Option<String>,
    pub period_filter: Option<String>,
}

impl Pipeline {
    pub fn new(cfg: Config, out: PathBuf) -> Pipeline {
        let digest = cfg.digest();
        Pipeline {
            cfg,
            out,
            digest,
            country_filter: None,
            period_filter: None,
        }
    }

    fn write(&self, rel: &str, body: &str) -> CliResult<()> {
        write_artifact(&self.out.join(rel), &self.digest, body)
    }

    // ---- shared artifact loaders -------------------------------------

    fn periods(&self) -> CliResult<Vec<Period>> {
        let path = self.cfg.require(&self.cfg.periods, "periods")?;
        let text = read_input(path, "periods")?;
        let periods = parse_periods(&text).map_err(|e| CliError::stage("ingest", e))?;
        if periods.is_empty() {
            return Err(CliError::Config("periods file declares no periods".into()));
        }
        Ok(periods)
    }

    fn selected_periods(&self) -> CliResult<Vec<Period>> {
        let mut periods = self.periods()?;
        if let Some(name) = &self.period_filter {
            periods.retain(|p| &p.name == name);
            if periods.is_empty() {
                return Err(CliError::Config(format!("unknown period {name:?}")));
            }
        }
        Ok(periods)
    }

    fn load_period_events(&self, period: &str) -> CliResult<Vec<TweetEvent>> {
        let path = self.out.join(format!("ingest/events_{period}.ndjson"));
        let text = read_artifact(&path, "ingest")?;
        let (events, _) = parse_events(text.as_bytes())
            .map_err(|e| CliError::stage("ingest", format!("{}: {e}", path.display())))?;
        Ok(events)
    }

    fn load_user_geo(&self) -> CliResult<UserGeo> {
        let text = read_artifact(&self.out.join("geo/user_geo.tsv"), "geolocate")?;
        let mut geo = UserGeo::default();
        for line in text
            .lines()
            .filter(|l| !l.starts_with('#') && !l.is_empty())
        {
            let (user, cc) = line.split_once('\t').ok_or_else(|| {
                CliError::stage("geolocate", format!("bad user_geo line {line:?}"))
            })?;
            geo.insert(user.to_string(), cc);
        }
        Ok(geo)
    }

    fn load_eligible(&self) -> CliResult<Vec<String>> {
        let text = read_artifact(&self.out.join("geo/eligible.tsv"), "geolocate")?;
        Ok(text
            .lines()
            .filter(|l| !l.starts_with('#') && !l.is_empty())
            .map(String::from)
            .collect())
    }

    fn selected_countries(&self) -> CliResult<Vec<String>> {
        let mut countries = self.load_eligible()?;
        if countries.is_empty() {
            eprintln!(
                "warning: no eligible countries (check min_users = {} against the corpus size)",
                self.cfg.min_users
            );
        }
        if let Some(cc) = &self.country_filter {
            countries.retain(|c| c == cc);
            if countries.is_empty() {
                return Err(CliError::Config(format!(
                    "country {cc:?} is not in the eligible set"
                )));
            }
        }
        Ok(countries)
    }

    fn load_dominant_langs(&self) -> CliResult<BTreeMap<String, String>> {
        let text = read_artifact(&self.out.join("geo/dominant_langs.tsv"), "geolocate")?;
        let mut out = BTreeMap::new();
        for line in text
            .lines()
            .filter(|l| !l.starts_with('#') && !l.is_empty())
        {
            let (cc, lang) = line.split_once('\t').ok_or_else(|| {
                CliError::stage("geolocate", format!("bad dominant_langs line {line:?}"))
            })?;
            out.insert(cc.to_string(), lang.to_string());
        }
        Ok(out)
    }

    fn graph_path(&self, net: &str, cc: &str, period: &str) -> PathBuf {
        self.out.join(format!("graphs/{net}_{cc}_{period}.tsv"))
    }

    fn load_graph(&self, net: &str, cc: &str, period: &str) -> CliResult<WeightedGraph> {
        let text = read_artifact(&self.graph_path(net, cc, period), "build-graphs")?;
        WeightedGraph::from_tsv(&text).map_err(|e| CliError::stage("build-graphs", e))
    }

    fn partition_path(&self, net: &str, cc: &str, period: &str) -> PathBuf {
        self.out
            .join(format!("cluster/partition_{net}_{cc}_{period}.tsv"))
    }

    fn load_partition(&self, net: &str, cc: &str, period: &str) -> CliResult<Option<Partition>> {
        let path = self.partition_path(net, cc, period);
        if !path.exists() {
            // the graph may have been too small to cluster; require that the
            // cluster stage itself ran
            let marker = self.out.join("cluster/summary.tsv");
            if !marker.exists() {
                return Err(CliError::MissingArtifact {
                    path: marker,
                    produced_by: "cluster",
                });
            }
            return Ok(None);
        }
        let text = read_artifact(&path, "cluster")?;
        Ok(Some(
            Partition::from_tsv(&text).map_err(|e| CliError::stage("cluster", e))?,
        ))
    }

    fn load_stances(&self) -> CliResult<Option<StanceMap>> {
        let path = self.out.join("stance/stance.tsv");
        if !path.exists() {
            return Ok(None);
        }
        let text = read_artifact(&path, "classify")?;
        let mut map = StanceMap::default();
        for line in text.lines().filter(|l| !l.starts_with('#') && !l.is_empty()) {
            let parts: Vec<&str> = line.split('\t').collect();
            if parts.len() != 3 {
                return Err(CliError::stage(
                    "classify",
                    format!("bad stance line {line:?}"),
                ));
            }
            let stance = Stance::parse(parts[1]).map_err(|e| CliError::stage("classify", e))?;
            let count: u32 = parts[2]
                .parse()
                .map_err(|_| CliError::stage("classify", format!("bad count in {line:?}")))?;
            map.insert(parts[0].to_string(), stance, count);
        }
        Ok(Some(map))
    }

    fn load_domains(&self) -> CliResult<Option<DomainList>> {
        match &self.cfg.domains {
            Some(path) => Ok(Some(DomainList::parse(&read_input(path, "domains")?))),
            None => Ok(None),
        }
    }

    fn network_prefix(cc: &str, period: &str, net: &str) -> String {
        format!("{cc}/{period}/{net}")
    }

    /// Period names in config order (for report assembly).
    pub(crate) fn config_periods(&self) -> CliResult<Vec<String>> {
        Ok(self.periods()?.into_iter().map(|p| p.name).collect())
    }

    pub(crate) fn report_partition(&self, cc: &str, period: &str) -> CliResult<Option<Partition>> {
        self.load_partition("rt", cc, period)
    }

    /// Stance entries for one network, keyed by local community id.
    fn network_stances(stances: &StanceMap, prefix: &str) -> Option<BTreeMap<u32, Stance>> {
        let mut out = BTreeMap::new();
        for (community, stance, _) in stances.iter() {
            if let Some(rest) = community.strip_prefix(prefix) {
                if let Some(k) = rest.strip_prefix('/').and_then(|s| s.parse::<u32>().ok()) {
                    out.insert(k, stance);
                }
            }
        }
        if out.is_empty() {
            None
        } else {
            Some(out)
        }
    }

    // ---- stages ------------------------------------------------------

    /// Parse the raw event log, resolve shorteners, filter by keywords, and
    /// slice into per-period event files.
    pub fn stage_ingest(&self) -> CliResult<()> {
        let events_path = self.cfg.require(&self.cfg.events, "events")?;
        let keywords_path = self.cfg.require(&self.cfg.keywords, "keywords")?;
        let periods = self.periods()?;

        let file = File::open(events_path).map_err(|e| {
            CliError::Config(format!(
                "cannot read events file {}: {e}",
                events_path.display()
            ))
        })?;
        let (mut events, report) = parse_events(file).map_err(|e| CliError::stage("ingest", e))?;
        if report.rejected() > 0 {
            eprintln!(
                "ingest: {} of {} records malformed (first: line {} {})",
                report.rejected(),
                report.records,
                report.rejects[0].0,
                report.rejects[0].1
            );
        }

        if let Some(short_path) = &self.cfg.shorteners {
            let map = ShortenerMap::parse(&read_input(short_path, "shorteners")?)
                .map_err(|e| CliError::stage("ingest", e))?;
            if !map.is_empty() {
                for ev in &mut events {
                    for url in &mut ev.urls {
                        let resolved = map.resolve(url);
                        if resolved != url {
                            *url = resolved.to_string();
                        }
                    }
                }
            }
        }

        let keywords = KeywordSet::parse(&read_input(keywords_path, "keywords")?)
            .map_err(|e| CliError::stage("ingest", e))?;
        let kept = filter_keywords(&events, &keywords, &self.cfg.reference_lang);

        let mut summary = String::from("period\tevents\n");
        summary.push_str(&format!(
            "(parsed)\t{}\n(malformed)\t{}\n",
            events.len(),
            report.rejected()
        ));
        summary.push_str(&format!("(keyword-matched)\t{}\n", kept.len()));
        for period in &periods {
            let sliced = slice_period(&kept, period);
            let body: String = sliced.iter().map(|e| e.to_json_line() + "\n").collect();
            self.write(&format!("ingest/events_{}.ndjson", period.name), &body)?;
            summary.push_str(&format!("{}\t{}\n", period.name, sliced.len()));
        }
        self.write("ingest/summary.tsv", &summary)
    }

    /// Geolocate users, apply manual exclusions, select eligible countries,
    /// and fix each country's dominant language.
    pub fn stage_geolocate(&self) -> CliResult<()> {
        let gazetteer_path = self.cfg.require(&self.cfg.gazetteer, "gazetteer")?;
        let langs_path = self.cfg.require(&self.cfg.country_langs, "country_langs")?;
        let periods = self.periods()?;

        let mut gazetteer = Gazetteer::new();
        gazetteer
            .parse_places(&read_input(gazetteer_path, "gazetteer")?)
            .map_err(|e| CliError::stage("geolocate", e))?;
        if let Some(stop) = &self.cfg.stoplist {
            gazetteer.parse_stoplist(&read_input(stop, "stoplist")?);
        }

        let events_by_period: Vec<(Period, Vec<TweetEvent>)> = periods
            .iter()
            .map(|p| Ok((p.clone(), self.load_period_events(&p.name)?)))
            .collect::<CliResult<_>>()?;
        let borrowed: Vec<(&Period, &[TweetEvent])> = events_by_period
            .iter()
            .map(|(p, e)| (p, e.as_slice()))
            .collect();

        let mut geo = assign_countries(&borrowed, &gazetteer);
        if let Some(excl) = &self.cfg.exclusions {
            for line in read_input(excl, "exclusions")?.lines() {
                let user = line.trim();
                if !user.is_empty() && !user.starts_with('#') {
                    geo.exclude(user, "manual-exclusion");
                }
            }
        }

        let eligible = eligible_countries(&geo, &borrowed, self.cfg.min_users);

        // country -> spoken languages
        let mut spoken: BTreeMap<String, Vec<String>> = BTreeMap::new();
        for line in read_input(langs_path, "country_langs")?.lines() {
            let line = line.trim_end();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (cc, lang) = line.split_once('\t').ok_or_else(|| {
                CliError::Config(format!(
                    "country_langs: expected country<TAB>lang, got {line:?}"
                ))
            })?;
            spoken
                .entry(cc.to_uppercase())
                .or_default()
                .push(lang.to_lowercase());
        }

        let all_events: Vec<TweetEvent> = events_by_period
            .iter()
            .flat_map(|(_, e)| e.iter().cloned())
            .collect();
        let mut langs_out = String::new();
        for cc in &eligible {
            let spoken_langs = spoken.get(cc).ok_or_else(|| {
                CliError::Config(format!("country_langs file lacks an entry for {cc}"))
            })?;
            let lang = dominant_language(&all_events, cc, &geo, spoken_langs)
                .map_err(|e| CliError::stage("geolocate", format!("{cc}: {e}")))?;
            langs_out.push_str(&format!("{cc}\t{lang}\n"));
        }

        let geo_body: String = geo.iter().map(|(u, c)| format!("{u}\t{c}\n")).collect();
        self.write("geo/user_geo.tsv", &geo_body)?;

        let mut excluded: Vec<String> = geo
            .report
            .iter()
            .map(|(u, r)| format!("{u}\t{r}\n"))
            .collect();
        excluded.sort();
        self.write("geo/excluded.tsv", &excluded.concat())?;

        let mut flagged: Vec<String> = geo
            .flagged
            .iter()
            .map(|f| {
                format!(
                    "{}\t{}\t{}\t{}\t{}\n",
                    f.user_id, f.from_country, f.to_country, f.period, f.share
                )
            })
            .collect();
        flagged.sort();
        self.write("geo/flagged.tsv", &flagged.concat())?;
        if !geo.flagged.is_empty() {
            eprintln!(
                "geolocate: {} user(s) concentrate >50% of a cross-country flow; review geo/flagged.tsv and supply an exclusions file if needed",
                geo.flagged.len()
            );
        }

        let eligible_body: String = eligible.iter().map(|c| format!("{c}\n")).collect();
        self.write("geo/eligible.tsv", &eligible_body)?;
        self.write("geo/dominant_langs.tsv", &langs_out)
    }

    /// Build, prune, and reduce the RT and CO networks per country/period.
    pub fn stage_build_graphs(&self) -> CliResult<()> {
        let geo = self.load_user_geo()?;
        let countries = self.selected_countries()?;
        let periods = self.selected_periods()?;
        let langs = self.load_dominant_langs()?;

        let mut units: Vec<(String, Period)> = Vec::new();
        for cc in &countries {
            for p in &periods {
                units.push((cc.clone(), p.clone()));
            }
        }
        // (country, period, rt edge list, co edge list, stats row)
        type GraphsOut = (String, String, String, String, String);
        let results: CliResult<Vec<GraphsOut>> = units
            .par_iter()
            .map(|(cc, period)| {
                let lang = langs.get(cc).ok_or_else(|| {
                    CliError::stage("build-graphs", format!("no dominant language for {cc}"))
                })?;
                let events = self.load_period_events(&period.name)?;
                let rt_raw = build_rt_graph(&events, cc, lang, &geo);
                let rt = giant_component(&prune(&rt_raw, self.cfg.prune_rt, self.cfg.prune_co));
                let co_raw = build_co_graph(&events, cc, lang, &geo);
                let co = giant_component(&prune(&co_raw, self.cfg.prune_rt, self.cfg.prune_co));
                let oc = match overlap_coefficient(&rt.node_set(), &co.node_set()) {
                    Ok(v) => format!("{v}"),
                    Err(_) => "NA".to_string(),
                };
                let stats = format!(
                    "{cc}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{oc}\n",
                    period.name,
                    rt_raw.node_count(),
                    rt.node_count(),
                    rt.edge_count(),
                    co_raw.node_count(),
                    co.node_count(),
                    co.edge_count(),
                    lang,
                );
                Ok((
                    cc.clone(),
                    period.name.clone(),
                    rt.to_tsv(),
                    co.to_tsv(),
                    stats,
                ))
            })
            .collect();
        let mut results = results?;
        results.sort_by(|a, b| (&a.0, &a.1).cmp(&(&b.0, &b.1)));

        let mut stats =
            String::from("country\tperiod\trt_built\trt_gcc_nodes\trt_gcc_edges\tco_built\tco_gcc_nodes\tco_gcc_edges\tlang\toc\n");
        for (cc, period, rt, co, row) in &results {
            self.write(&format!("graphs/rt_{cc}_{period}.tsv"), rt)?;
            self.write(&format!("graphs/co_{cc}_{period}.tsv"), co)?;
            stats.push_str(row);
        }
        self.write("graphs/stats.tsv", &stats)
    }

    /// Paris dendrograms and selected partitions for every built network.
    pub fn stage_cluster(&self) -> CliResult<()> {
        let countries = self.selected_countries()?;
        let periods = self.selected_periods()?;
        // require the build stage marker even if every graph is empty
        read_artifact(&self.out.join("graphs/stats.tsv"), "build-graphs")?;

        let mut units: Vec<(String, String, String)> = Vec::new();
        for cc in &countries {
            for p in &periods {
                for net in ["rt", "co"] {
                    units.push((net.to_string(), cc.clone(), p.name.clone()));
                }
            }
        }
        type ClusterOut = (String, String, String, Option<(String, String)>, String);
        let results: CliResult<Vec<ClusterOut>> = units
            .par_iter()
            .map(|(net, cc, period)| {
                let graph = self.load_graph(net, cc, period)?;
                if graph.node_count() < 2 {
                    let row = format!(
                        "{cc}\t{period}\t{net}\t{}\t{}\tskipped: fewer than 2 nodes\n",
                        graph.node_count(),
                        graph.edge_count()
                    );
                    return Ok((net.clone(), cc.clone(), period.clone(), None, row));
                }
                let dendro = paris_dendrogram(&graph).map_err(|e| CliError::stage("cluster", e))?;
                let partition = select_partition(&graph, &dendro, self.cfg.dominance)
                    .map_err(|e| CliError::stage("cluster", e))?;
                let q =
                    modularity(&graph, &partition).map_err(|e| CliError::stage("cluster", e))?;
                let row = format!(
                    "{cc}\t{period}\t{net}\t{}\t{}\tk={} q={q}\n",
                    graph.node_count(),
                    graph.edge_count(),
                    partition.n_communities()
                );
                Ok((
                    net.clone(),
                    cc.clone(),
                    period.clone(),
                    Some((dendro.to_tsv(), partition.to_tsv())),
                    row,
                ))
            })
            .collect();
        let mut results = results?;
        results.sort_by(|a, b| (&a.1, &a.2, &a.0).cmp(&(&b.1, &b.2, &b.0)));

        let mut summary = String::from("country\tperiod\tnet\tnodes\tedges\toutcome\n");
        for (net, cc, period, files, row) in &results {
            if let Some((dendro, partition)) = files {
                self.write(&format!("cluster/dendro_{net}_{cc}_{period}.tsv"), dendro)?;
                self.write(
                    &format!("cluster/partition_{net}_{cc}_{period}.tsv"),
                    partition,
                )?;
            }
            summary.push_str(row);
        }
        self.write("cluster/summary.tsv", &summary)
    }

    /// Round-one or round-two labeling samples over the RT partitions.
    /// Popularity and the exclusion list are scoped to the country's own
    /// period events.
    pub fn stage_sample(&self, round: u8) -> CliResult<()> {
        if round != 1 && round != 2 {
            return Err(CliError::Config(format!("round must be 1 or 2, got {round}")));
        }
        let countries = self.selected_countries()?;
        let periods = self.selected_periods()?;
        let geo = self.load_user_geo()?;

        let records = if round == 2 {
            let labels_path = self.cfg.require(&self.cfg.labels, "labels")?;
            let text = read_input(labels_path, "labels")?;
            Some(LabelRecord::parse_file(&text).map_err(|e| CliError::stage("sample", e))?)
        } else {
            None
        };

        let mut rows = String::from("# community_id\ttweet_id\ttext\n");
        for cc in &countries {
            for period in &periods {
                let Some(partition) = self.load_partition("rt", cc, &period.name)? else {
                    eprintln!("sample: no rt partition for {cc}/{}; skipping", period.name);
                    continue;
                };
                let mut events = self.load_period_events(&period.name)?;
                events.retain(|e| geo.country_of(&e.user_id) == Some(cc));
                let prefix = Self::network_prefix(cc, &period.name, "rt");
                let sample = match round {
                    1 => {
                        let seed = sub_seed(self.cfg.seed, &format!("sample1/{prefix}"));
                        sample_round1(
                            &partition,
                            &events,
                            self.cfg.sample_n,
                            self.cfg.min_frac,
                            seed,
                        )
                    }
                    _ => {
                        let records = records.as_ref().unwrap();
                        let mut counts: BTreeMap<u32, LabelCounts> = BTreeMap::new();
                        for (community, tally) in tally_labels(records, 1) {
                            if let Some(rest) = community.strip_prefix(&prefix) {
                                if let Some(k) =
                                    rest.strip_prefix('/').and_then(|s| s.parse::<u32>().ok())
                                {
                                    counts.insert(k, tally);
                                }
                            }
                        }
                        sample_round2(
                            &partition,
                            &events,
                            &counts,
                            self.cfg.sample_top,
                            self.cfg.sample_exclude_top,
                        )
                    }
                };
                let text_of: BTreeMap<&str, &str> = events
                    .iter()
                    .map(|e| (e.tweet_id.as_str(), e.text.as_str()))
                    .collect();
                for (k, tweet_id) in sample {
                    let text = text_of
                        .get(tweet_id.as_str())
                        .map(|t| t.replace(['\t', '\n', '\r'], " "))
                        .unwrap_or_default();
                    rows.push_str(&format!("{prefix}/{k}\t{tweet_id}\t{text}\n"));
                }
            }
        }
        self.write(&format!("samples/round{round}.tsv"), &rows)
    }

    /// Stance classification from the accumulated label records, plus
    /// inter-annotator agreement statistics.
    pub fn stage_classify(&self) -> CliResult<()> {
        let labels_path = self.cfg.require(&self.cfg.labels, "labels")?;
        let text = read_input(labels_path, "labels")?;
        let records = LabelRecord::parse_file(&text).map_err(|e| CliError::stage("classify", e))?;
        if records.is_empty() {
            return Err(CliError::Config(format!(
                "label file {} contains no records",
                labels_path.display()
            )));
        }

        let stances = classify_communities(&records, self.cfg.stance_threshold);
        let mut body = String::from("# community_id\tstance\tnovax_labels\n");
        for (community, stance, novax) in stances.iter() {
            body.push_str(&format!("{community}\t{}\t{novax}\n", stance.as_str()));
        }
        self.write("stance/stance.tsv", &body)?;

        // agreement over annotator overlaps, pooled across items
        let mut by_item: BTreeMap<(u8, &str, &str), BTreeMap<&str, Label>> = BTreeMap::new();
        for r in &records {
            by_item
                .entry((r.round, r.community_id.as_str(), r.tweet_id.as_str()))
                .or_default()
                .insert(r.annotator_id.as_str(), r.label);
        }
        let mut pairs_a: Vec<Label> = Vec::new();
        let mut pairs_b: Vec<Label> = Vec::new();
        for annotators in by_item.values() {
            let list: Vec<(&&str, &Label)> = annotators.iter().collect();
            for i in 0..list.len() {
                for j in (i + 1)..list.len() {
                    pairs_a.push(*list[i].1);
                    pairs_b.push(*list[j].1);
                }
            }
        }
        let mut agreement = String::from("mode\tn_pairs\tkappa\n");
        for (mode, classes) in [
            ("2-class", vec![Label::ProVax, Label::NoVax]),
            ("3-class", vec![Label::ProVax, Label::NoVax, Label::Other]),
        ] {
            let n = pairs_a
                .iter()
                .zip(&pairs_b)
                .filter(|(a, b)| classes.contains(a) && classes.contains(b))
                .count();
            match cohen_kappa(&pairs_a, &pairs_b, &classes) {
                Ok(k) => agreement.push_str(&format!("{mode}\t{n}\t{k}\n")),
                Err(_) => agreement.push_str(&format!("{mode}\t{n}\tNA\n")),
            }
        }
        self.write("stance/agreement.tsv", &agreement)
    }

    fn rwc_for_network(
        &self,
        graph: &WeightedGraph,
        novax_users: &BTreeSet<String>,
        tag: &str,
    ) -> Result<RwcResult, String> {
        let split = Bipartition::from_side_x(graph, novax_users.iter().map(|s| s.as_str()));
        let (nx, ny) = (split.side_x().len(), split.side_y().len());
        if nx == 0 || ny == 0 {
            return Err(format!("degenerate bipartition ({nx} vs {ny} nodes)"));
        }
        let min_side = nx.min(ny);
        let k = match self.cfg.k_absorb {
            KAbsorbPolicy::Auto => default_k_absorb(min_side),
            KAbsorbPolicy::Fixed(k) => k,
        };
        let k = k.min(min_side.saturating_sub(1)).max(1);
        let transient = graph.node_count().saturating_sub(2 * k);
        let use_exact = match self.cfg.rwc_method {
            RwcMethodChoice::Exact => true,
            RwcMethodChoice::MonteCarlo => false,
            RwcMethodChoice::Auto => transient <= RWC_EXACT_AUTO_LIMIT,
        };
        let result = if use_exact {
            rwc_exact(graph, &split, k)
        } else {
            let seed = sub_seed(self.cfg.seed, &format!("rwc/{tag}"));
            rwc_montecarlo(graph, &split, k, self.cfg.n_walks, seed)
        };
        result.map_err(|e| e.to_string())
    }

    /// Polarization metrics: RWC for networks with a no-vax side, NMI
    /// between the RT and CO partitions for every network.
    pub fn stage_metrics(&self) -> CliResult<()> {
        let countries = self.selected_countries()?;
        let periods = self.selected_periods()?;
        let stances = self.load_stances()?;
        if stances.is_none() {
            eprintln!("metrics: no stance map found; RWC rows skipped, NMI still computed");
        }

        let mut rows = String::from("# country\tperiod\tmetric\tvalue\tstderr\n");
        for cc in &countries {
            for period in &periods {
                let rt = self.load_partition("rt", cc, &period.name)?;
                let co = self.load_partition("co", cc, &period.name)?;
                if let (Some(rt_p), Some(co_p)) = (&rt, &co) {
                    match nmi(rt_p, co_p) {
                        Ok(v) => {
                            rows.push_str(&format!("{cc}\t{}\tnmi_rt_co\t{v}\t\n", period.name))
                        }
                        Err(e) => eprintln!("metrics: nmi {cc}/{}: {e}", period.name),
                    }
                }
                let (Some(stance_map), Some(rt_p)) = (&stances, &rt) else {
                    continue;
                };
                let prefix = Self::network_prefix(cc, &period.name, "rt");
                let Some(net_stances) = Self::network_stances(stance_map, &prefix) else {
                    continue;
                };
                let novax: BTreeSet<String> = rt_p
                    .iter()
                    .filter(|(_, k)| net_stances.get(k) == Some(&Stance::NoVax))
                    .map(|(u, _)| u.to_string())
                    .collect();
                if novax.is_empty() {
                    continue; // no no-vax community in this network
                }
                let graph = self.load_graph("rt", cc, &period.name)?;
                match self.rwc_for_network(&graph, &novax, &prefix) {
                    Ok(r) => {
                        let se = r.stderr.map(|s| s.to_string()).unwrap_or_default();
                        rows.push_str(&format!("{cc}\t{}\trwc\t{}\t{se}\n", period.name, r.rwc));
                        rows.push_str(&format!(
                            "{cc}\t{}\trwc_method\t{}\t\n",
                            period.name,
                            r.method.as_str()
                        ));
                        rows.push_str(&format!("{cc}\t{}\trwc_pxx\t{}\t\n", period.name, r.p_xx));
                        rows.push_str(&format!("{cc}\t{}\trwc_pyy\t{}\t\n", period.name, r.p_yy));
                    }
                    Err(e) => eprintln!("metrics: rwc {cc}/{} skipped: {e}", period.name),
                }
            }
        }
        self.write("metrics/metrics.tsv", &rows)
    }

    /// Cross-border matrices per period: raw and normalized retweet volume,
    /// no-vax density ratio, and low-credibility import statistics.
    pub fn stage_flows(&self) -> CliResult<()> {
        let geo = self.load_user_geo()?;
        // flow matrices always span the full eligible set
        let countries = self.load_eligible()?;
        if countries.is_empty() {
            return Err(CliError::stage("flows", "no eligible countries"));
        }
        let periods = self.selected_periods()?;
        let stances = self.load_stances()?;
        let domains = self.load_domains()?;

        for period in &periods {
            let events = self.load_period_events(&period.name)?;
            let raw = raw_rt_matrix(&events, &geo, &countries, period);
            self.write_matrix(&format!("raw_{}", period.name), &raw)?;

            let (normalized, warnings) = normalize_flow(&raw);
            for w in warnings {
                eprintln!("flows: {}: {w}", period.name);
            }
            self.write_matrix(&format!("normalized_{}", period.name), &normalized)?;

            if let Some(stance_map) = &stances {
                let mut sets: BTreeMap<String, StanceSets> = BTreeMap::new();
                for cc in &countries {
                    let Some(partition) = self.load_partition("rt", cc, &period.name)? else {
                        continue;
                    };
                    let prefix = Self::network_prefix(cc, &period.name, "rt");
                    let Some(net_stances) = Self::network_stances(stance_map, &prefix) else {
                        continue;
                    };
                    let mut s = StanceSets::default();
                    for (user, k) in partition.iter() {
                        if net_stances.get(&k) == Some(&Stance::NoVax) {
                            s.novax.insert(user.to_string());
                        } else {
                            s.other.insert(user.to_string());
                        }
                    }
                    sets.insert(cc.clone(), s);
                }
                let theta = density_ratio(&events, &geo, &countries, &sets, period);
                self.write_matrix(&format!("theta_{}", period.name), &theta)?;
            } else {
                eprintln!(
                    "flows: no stance map; theta matrix skipped for {}",
                    period.name
                );
            }

            if let Some(domains) = &domains {
                let (rate, share) = lowcred_import_matrix(
                    &events,
                    &geo,
                    &countries,
                    domains,
                    period,
                    self.cfg.min_lowcred_imports,
                );
                self.write_matrix(&format!("lowcred_rate_{}", period.name), &rate)?;
                self.write_matrix(&format!("lowcred_share_{}", period.name), &share)?;
            } else {
                eprintln!("flows: no domain list configured; low-credibility matrices skipped");
            }
        }
        Ok(())
    }

    fn write_matrix(&self, stem: &str, matrix: &FlowMatrix) -> CliResult<()> {
        self.write(&format!("flows/{stem}.csv"), &matrix.to_csv())?;
        if self.cfg.svg {
            let svg = crate::svg::heatmap(matrix);
            self.write(&format!("flows/{stem}.svg"), &svg)?;
        }
        Ok(())
    }

    /// Per-cohort behavior and suspension statistics over the RT partitions.
    pub fn stage_cohorts(&self) -> CliResult<()> {
        let countries = self.selected_countries()?;
        let periods = self.selected_periods()?;
        let stances = self.load_stances()?;
        let domains = self.load_domains()?;
        let status = match &self.cfg.status {
            Some(path) => AccountStatus::parse(&read_input(path, "status")?)
                .map_err(|e| CliError::stage("cohorts", e))?,
            None => AccountStatus::default(),
        };
        if self.cfg.status.is_none() {
            eprintln!("cohorts: no status file configured; all accounts treated as active");
        }

        // full-corpus events for last-tweet dates
        let all_events: Vec<TweetEvent> = {
            let mut all = Vec::new();
            for p in self.periods()? {
                all.extend(self.load_period_events(&p.name)?);
            }
            all
        };

        let stance_label = |s: Option<Stance>| match s {
            Some(st) => st.as_str(),
            None => "all",
        };

        let mut behavior =
            String::from("country\tperiod\tcohort\tn_users\tavg_retweets\tavg_urls\tavg_youtube_urls\tlowcred_fraction\n");
        let mut suspensions =
            String::from("country\tperiod\tcohort\tn_users\tn_suspended\tproportion\tcoverage\n");
        // country -> suspended user -> last date
        let mut timeline_users: BTreeMap<String, BTreeMap<String, Option<chrono::NaiveDate>>> =
            BTreeMap::new();

        for cc in &countries {
            for period in &periods {
                let Some(partition) = self.load_partition("rt", cc, &period.name)? else {
                    continue;
                };
                let events = self.load_period_events(&period.name)?;
                let prefix = Self::network_prefix(cc, &period.name, "rt");
                let net_stances = stances
                    .as_ref()
                    .and_then(|m| Self::network_stances(m, &prefix));

                let empty = DomainList::new();
                let list = domains.as_ref().unwrap_or(&empty);
                for stat in cohort_behavior(&events, &partition, net_stances.as_ref(), list) {
                    let lowcred = match (&domains, stat.lowcred_fraction) {
                        (Some(_), Some(f)) => f.to_string(),
                        _ => "NA".to_string(),
                    };
                    behavior.push_str(&format!(
                        "{cc}\t{}\t{}\t{}\t{}\t{}\t{}\t{lowcred}\n",
                        period.name,
                        stance_label(stat.stance),
                        stat.n_users,
                        stat.avg_retweets,
                        stat.avg_urls,
                        stat.avg_youtube_urls,
                    ));
                }

                let stats =
                    suspension_stats(&partition, net_stances.as_ref(), &status, &all_events);
                if self.cfg.status.is_some() && stats.coverage == 0.0 {
                    eprintln!(
                        "cohorts: status file covers none of {cc}/{}'s users",
                        period.name
                    );
                }
                for c in &stats.cohorts {
                    suspensions.push_str(&format!(
                        "{cc}\t{}\t{}\t{}\t{}\t{}\t{}\n",
                        period.name,
                        stance_label(c.stance),
                        c.n_users,
                        c.n_suspended,
                        c.proportion,
                        stats.coverage,
                    ));
                }
                let bucket = timeline_users.entry(cc.clone()).or_default();
                for (user, date) in &stats.suspended_last_dates {
                    bucket.insert(user.clone(), *date);
                }
            }
        }

        let mut timeline = String::from("country\tdate\tsuspended_users\n");
        for (cc, users) in &timeline_users {
            let mut by_date: BTreeMap<chrono::NaiveDate, u32> = BTreeMap::new();
            for date in users.values().flatten() {
                *by_date.entry(*date).or_default() += 1;
            }
            for (date, count) in by_date {
                timeline.push_str(&format!("{cc}\t{date}\t{count}\n"));
            }
        }

        self.write("cohorts/behavior.tsv", &behavior)?;
        self.write("cohorts/suspensions.tsv", &suspensions)?;
        self.write("cohorts/suspension_timeline.tsv", &timeline)
    }

    /// Generate a synthetic corpus plus ground truth and a ready-to-run
    /// pipeline config.
    pub fn stage_synth(&self, spec_path: &Path) -> CliResult<()> {
        let text = read_input(spec_path, "corpus spec")?;
        let mut spec = CorpusSpec::parse(&text).map_err(|e| CliError::Config(e.to_string()))?;
        // --seed overrides the spec seed so reruns can be varied externally
        if self.cfg.seed != Config::default().seed {
            spec.seed = self.cfg.seed;
        }
        let corpus = synth_corpus(&spec).map_err(|e| CliError::stage("synth", e))?;

        let events: String = corpus
            .events
            .iter()
            .map(|e| e.to_json_line() + "\n")
            .collect();
        self.write("corpus/events.ndjson", &events)?;

        let gaz: String = corpus
            .gazetteer
            .iter()
            .map(|(p, c)| format!("{p}\t{c}\n"))
            .collect();
        self.write("corpus/gazetteer.tsv", &gaz)?;
        let stop: String = corpus.stoplist.iter().map(|s| format!("{s}\n")).collect();
        self.write("corpus/stoplist.tsv", &stop)?;
        let kw: String = corpus
            .keywords
            .iter()
            .map(|(l, k)| format!("{l}\t{k}\n"))
            .collect();
        self.write("corpus/keywords.tsv", &kw)?;
        let langs: String = corpus
            .country_langs
            .iter()
            .map(|(c, l)| format!("{c}\t{l}\n"))
            .collect();
        self.write("corpus/country_langs.tsv", &langs)?;
        let domains: String = corpus
            .lowcred_domains
            .iter()
            .map(|d| format!("{d}\tsynthetic\n"))
            .collect();
        self.write("corpus/domains.tsv", &domains)?;
        let periods: String = spec
            .periods
            .iter()
            .map(|p| {
                format!(
                    "{}\t{}\t{}\n",
                    p.name,
                    echoflow_core::ingest::format_timestamp(p.start),
                    echoflow_core::ingest::format_timestamp(p.end)
                )
            })
            .collect();
        self.write("corpus/periods.tsv", &periods)?;

        let mut status = String::new();
        for user in corpus.user_geo.keys() {
            status.push_str(&format!(
                "{user}\t{}\n",
                corpus.statuses.status_of(user).as_str()
            ));
        }
        self.write("corpus/status.tsv", &status)?;

        let truth_geo: String = corpus
            .user_geo
            .iter()
            .map(|(u, c)| format!("{u}\t{c}\n"))
            .collect();
        self.write("corpus/truth/user_geo.tsv", &truth_geo)?;
        let truth_comm: String = corpus
            .communities
            .iter()
            .map(|(u, c)| format!("{u}\t{c}\n"))
            .collect();
        self.write("corpus/truth/communities.tsv", &truth_comm)?;
        let truth_stance: String = corpus
            .stances
            .iter()
            .map(|(c, s)| format!("{c}\t{}\n", s.as_str()))
            .collect();
        self.write("corpus/truth/stances.tsv", &truth_stance)?;

        let conf = format!(
            "# generated pipeline config for the synthetic corpus\n\
             events = events.ndjson\n\
             keywords = keywords.tsv\n\
             periods = periods.tsv\n\
             gazetteer = gazetteer.tsv\n\
             stoplist = stoplist.tsv\n\
             country_langs = country_langs.tsv\n\
             domains = domains.tsv\n\
             status = status.tsv\n\
             labels = labels.tsv\n\
             min_users = 100\n\
             n_walks = 20000\n\
             seed = {}\n",
            spec.seed
        );
        let conf_path = self.out.join("corpus/pipeline.conf");
        std::fs::write(&conf_path, conf).map_err(|e| {
            CliError::stage("synth", format!("writing {}: {e}", conf_path.display()))
        })?;
        Ok(())
    }
}
