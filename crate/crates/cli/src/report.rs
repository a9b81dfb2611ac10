//! Report assembly: reshapes earlier artifacts into per-figure CSVs
//! (country/period summary, cohort behavior, suspensions, flow matrices).

use std::collections::BTreeMap;

use echoflow_core::annotate::{Label, LabelRecord, Stance};

use crate::stages::Pipeline;
use crate::{read_artifact, read_input, CliResult};

/// Rows keyed (country, period) from the metrics artifact.
fn metric_table(text: &str) -> BTreeMap<(String, String, String), String> {
    let mut out = BTreeMap::new();
    for line in text.lines().filter(|l| !l.starts_with('#')) {
        let parts: Vec<&str> = line.split('\t').collect();
        if parts.len() >= 4 {
            out.insert(
                (
                    parts[0].to_string(),
                    parts[1].to_string(),
                    parts[2].to_string(),
                ),
                parts[3].to_string(),
            );
        }
    }
    out
}

fn tsv_to_csv(text: &str) -> String {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| l.replace('\t', ",") + "\n")
        .collect()
}

impl Pipeline {
    /// Assembles the figure-shaped report CSVs from prior artifacts.
    pub fn stage_report(&self) -> CliResult<()> {
        let countries = self.report_countries()?;
        let periods = self.report_periods()?;
        let metrics = metric_table(&read_artifact(
            &self.out.join("metrics/metrics.tsv"),
            "metrics",
        )?);
        let stances = self.report_stances()?;
        let labels = self.report_label_shares()?;

        // per-network summary: size, communities, no-vax shares, rwc, nmi
        let mut fig2 = String::from(
            "country,period,rt_nodes,rt_communities,novax_user_share,novax_label_share,rwc,rwc_method,nmi_rt_co\n",
        );
        for cc in &countries {
            for period in &periods {
                let Some(partition) = self.report_partition(cc, period)? else {
                    continue;
                };
                let n = partition.len();
                let prefix = format!("{cc}/{period}/rt");
                let user_share = match &stances {
                    Some(map) => {
                        let novax_users = partition
                            .iter()
                            .filter(|(_, k)| {
                                map.get(&format!("{prefix}/{k}")) == Some(&Stance::NoVax)
                            })
                            .count();
                        if map.keys().any(|c| c.starts_with(&prefix)) {
                            format!("{}", novax_users as f64 / n as f64)
                        } else {
                            "NA".to_string()
                        }
                    }
                    None => "NA".to_string(),
                };
                let label_share = labels
                    .get(&prefix)
                    .map(|v| v.to_string())
                    .unwrap_or_else(|| "NA".to_string());
                let get = |metric: &str| {
                    metrics
                        .get(&(cc.clone(), period.clone(), metric.to_string()))
                        .cloned()
                        .unwrap_or_else(|| "NA".to_string())
                };
                fig2.push_str(&format!(
                    "{cc},{period},{n},{},{user_share},{label_share},{},{},{}\n",
                    partition.n_communities(),
                    get("rwc"),
                    get("rwc_method"),
                    get("nmi_rt_co"),
                ));
            }
        }
        self.write_report("report/fig2_summary.csv", &fig2)?;

        let behavior = read_artifact(&self.out.join("cohorts/behavior.tsv"), "cohorts")?;
        self.write_report("report/fig3_behavior.csv", &tsv_to_csv(&behavior))?;
        let suspensions = read_artifact(&self.out.join("cohorts/suspensions.tsv"), "cohorts")?;
        self.write_report("report/fig4_suspensions.csv", &tsv_to_csv(&suspensions))?;
        let timeline = read_artifact(&self.out.join("cohorts/suspension_timeline.tsv"), "cohorts")?;
        self.write_report("report/fig4_timeline.csv", &tsv_to_csv(&timeline))?;

        for period in &periods {
            for (fig, stem) in [
                ("fig5a", "normalized"),
                ("fig5b", "theta"),
                ("fig5c", "lowcred_share"),
            ] {
                let src = self.out.join(format!("flows/{stem}_{period}.csv"));
                if !src.exists() && stem != "normalized" {
                    continue; // theta/lowcred are optional (no stance map or domain list)
                }
                let body: String = read_artifact(&src, "flows")?
                    .lines()
                    .filter(|l| !l.starts_with('#'))
                    .map(|l| l.to_string() + "\n")
                    .collect();
                self.write_report(&format!("report/{fig}_{period}.csv"), &body)?;
                let svg = self.out.join(format!("flows/{stem}_{period}.svg"));
                if svg.exists() {
                    let content = read_artifact(&svg, "flows")?;
                    self.write_report(&format!("report/{fig}_{period}.svg"), &content)?;
                }
            }
        }
        Ok(())
    }

    fn write_report(&self, rel: &str, body: &str) -> CliResult<()> {
        // report files already embed the digest via write_artifact
        crate::write_artifact(&self.out.join(rel), &self.digest, body)
    }

    fn report_countries(&self) -> CliResult<Vec<String>> {
        let text = read_artifact(&self.out.join("geo/eligible.tsv"), "geolocate")?;
        let mut countries: Vec<String> = text
            .lines()
            .filter(|l| !l.starts_with('#') && !l.is_empty())
            .map(String::from)
            .collect();
        if let Some(cc) = &self.country_filter {
            countries.retain(|c| c == cc);
        }
        countries.sort();
        Ok(countries)
    }

    fn report_periods(&self) -> CliResult<Vec<String>> {
        Ok(self
            .config_periods()?
            .into_iter()
            .filter(|p| self.period_filter.as_ref().is_none_or(|f| f == p))
            .collect())
    }

    fn report_stances(&self) -> CliResult<Option<BTreeMap<String, Stance>>> {
        let path = self.out.join("stance/stance.tsv");
        if !path.exists() {
            return Ok(None);
        }
        let mut out = BTreeMap::new();
        for line in read_artifact(&path, "classify")?.lines().filter(|l| !l.starts_with('#')) {
            let parts: Vec<&str> = line.split('\t').collect();
            if parts.len() == 3 {
                if let Ok(stance) = Stance::parse(parts[1]) {
                    out.insert(parts[0].to_string(), stance);
                }
            }
        }
        Ok(Some(out))
    }

    /// Share of no-vax labels among all labels, per network prefix.
    fn report_label_shares(&self) -> CliResult<BTreeMap<String, f64>> {
        let mut out = BTreeMap::new();
        let Some(path) = &self.cfg.labels else {
            return Ok(out);
        };
        if !path.exists() {
            return Ok(out);
        }
        let records = LabelRecord::parse_file(&read_input(path, "labels")?)
            .map_err(|e| crate::CliError::stage("report", e))?;
        let mut totals: BTreeMap<String, (u64, u64)> = BTreeMap::new();
        for r in &records {
            // community ids look like CC/period/net/k; aggregate per network
            let prefix = match r.community_id.rsplit_once('/') {
                Some((net, _)) => net.to_string(),
                None => r.community_id.clone(),
            };
            let entry = totals.entry(prefix).or_default();
            entry.0 += 1;
            if r.label == Label::NoVax {
                entry.1 += 1;
            }
        }
        for (prefix, (total, novax)) in totals {
            if total > 0 {
                out.insert(prefix, novax as f64 / total as f64);
            }
        }
        Ok(out)
    }
}
