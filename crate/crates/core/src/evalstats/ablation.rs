//! Cross-variant comparison tables.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::ranks::{friedman_test, wilcoxon_signed_rank};
use super::report::{csv_cell, higher_is_better, MetricReport, METRICS, NOISY_METRICS};
use crate::error::{Error, Result};
use crate::preprocess::WindowLabel;

pub const ALPHA: f64 = 0.01;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricComparison {
    /// Clean-window metrics keep their name; noisy ones get a `noisy_` prefix.
    pub metric: String,
    pub higher_is_better: bool,
    /// Windows where every variant has a value.
    pub blocks: usize,
    pub means: Vec<Option<f64>>,
    pub best: Option<usize>,
    pub friedman_p: Option<f64>,
    /// `p[i][j]`, two-sided Wilcoxon of variant `i` against `j`; `None` on
    /// the diagonal and where the test is undefined (e.g. identical outputs).
    pub wilcoxon_p: Vec<Vec<Option<f64>>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AblationReport {
    pub variants: Vec<String>,
    pub param_counts: Vec<Option<usize>>,
    pub metrics: Vec<MetricComparison>,
}

fn compare(metric: String, section: WindowLabel, name: &str, reports: &[&MetricReport]) -> MetricComparison {
    let higher = higher_is_better(name);
    let idx = METRICS.iter().position(|m| *m == name).expect("known metric");
    let rows = &reports[0].rows;
    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); reports.len()];
    for (w, row) in rows.iter().enumerate() {
        if row.label != section {
            continue;
        }
        let vals: Vec<Option<f64>> = reports.iter().map(|r| r.rows[w].values[idx].filter(|v| v.is_finite())).collect();
        if vals.iter().all(Option::is_some) {
            for (c, v) in columns.iter_mut().zip(vals) {
                c.push(v.unwrap());
            }
        }
    }
    let blocks = columns[0].len();
    let means: Vec<Option<f64>> = columns
        .iter()
        .map(|c| (!c.is_empty()).then(|| c.iter().sum::<f64>() / c.len() as f64))
        .collect();
    let best = means
        .iter()
        .enumerate()
        .filter_map(|(i, m)| m.map(|m| (i, m)))
        .reduce(|a, b| {
            let better = if higher { b.1 > a.1 } else { b.1 < a.1 };
            if better { b } else { a }
        })
        .map(|(i, _)| i);
    let friedman_p = friedman_test(&columns).ok().map(|r| r.p);
    let k = reports.len();
    let wilcoxon_p = (0..k)
        .map(|i| {
            (0..k)
                .map(|j| (i != j).then(|| wilcoxon_signed_rank(&columns[i], &columns[j]).ok().map(|r| r.p_two_sided)).flatten())
                .collect()
        })
        .collect();
    MetricComparison { metric, higher_is_better: higher, blocks, means, best, friedman_p, wilcoxon_p }
}

/// Per-metric means, Friedman p (three or more variants), pairwise
/// Wilcoxon p and the best variant, over the windows every variant scored.
pub fn ablation_report(reports: &[(String, &MetricReport)], param_counts: &[Option<usize>]) -> Result<AblationReport> {
    if reports.len() < 2 {
        return Err(Error::InvalidArgument("ablation needs at least two variants".into()));
    }
    let first = reports[0].1;
    for (name, r) in reports {
        let same = r.rows.len() == first.rows.len()
            && r.rows.iter().zip(&first.rows).all(|(a, b)| a.window == b.window && a.label == b.label);
        if !same || r.channel != first.channel {
            return Err(Error::InvalidArgument(format!("variant {name} was evaluated on a different window set")));
        }
    }
    let refs: Vec<&MetricReport> = reports.iter().map(|(_, r)| *r).collect();
    let mut metrics: Vec<MetricComparison> = METRICS
        .iter()
        .filter(|m| **m != "smape_sd")
        .map(|m| compare(m.to_string(), WindowLabel::Clean, m, &refs))
        .collect();
    metrics.extend(NOISY_METRICS.iter().map(|m| compare(format!("noisy_{m}"), WindowLabel::Noisy, m, &refs)));
    let mut counts = param_counts.to_vec();
    counts.resize(reports.len(), None);
    Ok(AblationReport { variants: reports.iter().map(|(n, _)| n.clone()).collect(), param_counts: counts, metrics })
}

impl AblationReport {
    /// How often each variant is best over error metrics that have a winner.
    pub fn best_counts(&self, error_metrics_only: bool) -> Vec<usize> {
        let mut c = vec![0; self.variants.len()];
        for m in &self.metrics {
            if error_metrics_only && m.higher_is_better {
                continue;
            }
            if let Some(b) = m.best {
                c[b] += 1;
            }
        }
        c
    }

    /// One row per metric: means per variant, best marker (`*` for a
    /// minimum, `#` for a maximum) and the Friedman p.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("metric,direction,blocks");
        for v in &self.variants {
            out.push_str(&format!(",mean_{v}"));
        }
        out.push_str(",best,friedman_p\n");
        out.push_str("param_count,min,");
        for c in &self.param_counts {
            out.push_str(&format!(",{}", c.map_or(String::new(), |c| c.to_string())));
        }
        out.push_str(",,\n");
        for m in &self.metrics {
            let dir = if m.higher_is_better { "max" } else { "min" };
            out.push_str(&format!("{},{dir},{}", m.metric, m.blocks));
            for v in &m.means {
                out.push_str(&format!(",{}", csv_cell(*v)));
            }
            let mark = m
                .best
                .map(|b| format!("{}{}", self.variants[b], if m.higher_is_better { "#" } else { "*" }))
                .unwrap_or_default();
            out.push_str(&format!(",{mark},{}\n", csv_cell(m.friedman_p)));
        }
        out
    }

    /// Long-form pairwise Wilcoxon table.
    pub fn wilcoxon_csv(&self) -> String {
        let mut out = String::from("metric,variant_a,variant_b,p_two_sided,significant\n");
        for m in &self.metrics {
            for (i, row) in m.wilcoxon_p.iter().enumerate() {
                for (j, p) in row.iter().enumerate() {
                    if i == j {
                        continue;
                    }
                    let sig = p.map_or(String::new(), |p| (p < ALPHA).to_string());
                    out.push_str(&format!("{},{},{},{},{sig}\n", m.metric, self.variants[i], self.variants[j], csv_cell(*p)));
                }
            }
        }
        out
    }

    /// Writes `ablation.csv`, `wilcoxon.csv` and `ablation.json`.
    pub fn save(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("ablation.csv"), self.to_csv())?;
        std::fs::write(dir.join("wilcoxon.csv"), self.wilcoxon_csv())?;
        std::fs::write(dir.join("ablation.json"), serde_json::to_string_pretty(self)?)?;
        Ok(())
    }
}
