//! Evaluation protocols and their aggregation.
//!
//! * Topic-query: each topic's name is one query whose relevant set is the
//!   topic's experts.
//! * Document-query: every document of every expert of a topic is a query,
//!   with that document left out of the ranker's data.
//!
//! Rankings are restricted to the pool of all annotated experts before any
//! metric is computed.

mod metrics;
mod report;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::Dataset;
use crate::rankers::{restrict_to, Ranker, Ranking};
use crate::{Error, Result};

pub use metrics::{
    average_precision, first_relevant_rank, mean_std, precision_at_k, roc_auc, RocCurve,
};
pub use report::{merge_reports, SummaryTable, TableCell, TableRow};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Protocol {
    Topic,
    Document,
}

impl Protocol {
    pub fn as_str(&self) -> &'static str {
        match self {
            Protocol::Topic => "topic",
            Protocol::Document => "document",
        }
    }
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Protocol {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "topic" | "topic-query" => Ok(Protocol::Topic),
            "document" | "document-query" => Ok(Protocol::Document),
            other => Err(Error::InvalidConfig(format!("unknown protocol `{other}`"))),
        }
    }
}

/// Reported metrics. `Rr` is the first relevant rank (the "RR" column of
/// the reference tables, where lower is better); `ReciprocalRank` is its
/// inverse.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Auc,
    PAtK,
    Ap,
    Rr,
    ReciprocalRank,
}

impl Metric {
    pub const ALL: [Metric; 5] = [
        Metric::Auc,
        Metric::PAtK,
        Metric::Ap,
        Metric::Rr,
        Metric::ReciprocalRank,
    ];

    pub fn higher_is_better(&self) -> bool {
        !matches!(self, Metric::Rr)
    }

    pub fn display_name(&self, k: usize) -> String {
        match self {
            Metric::Auc => "AUC".into(),
            Metric::PAtK => format!("P@{k}"),
            Metric::Ap => "AP".into(),
            Metric::Rr => "RR".into(),
            Metric::ReciprocalRank => "1/RR".into(),
        }
    }

    pub fn key(&self) -> &'static str {
        match self {
            Metric::Auc => "auc",
            Metric::PAtK => "p_at_k",
            Metric::Ap => "ap",
            Metric::Rr => "rr",
            Metric::ReciprocalRank => "reciprocal_rank",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryScore {
    pub query_id: String,
    pub topic: String,
    pub p_at_k: Option<f64>,
    pub average_precision: Option<f64>,
    pub first_relevant_rank: Option<usize>,
    pub reciprocal_rank: Option<f64>,
    pub roc_auc: Option<f64>,
    /// False when the ranker reported non-convergence.
    pub converged: bool,
    #[serde(skip)]
    pub roc_points: Vec<(f64, f64)>,
}

impl QueryScore {
    pub fn value(&self, metric: Metric) -> Option<f64> {
        match metric {
            Metric::Auc => self.roc_auc,
            Metric::PAtK => self.p_at_k,
            Metric::Ap => self.average_precision,
            Metric::Rr => self.first_relevant_rank.map(|r| r as f64),
            Metric::ReciprocalRank => self.reciprocal_rank,
        }
    }
}

/// Restricts `ranking` to `pool` and scores it against `experts`.
pub fn evaluate_ranking(
    ranking: &Ranking,
    experts: &BTreeSet<usize>,
    pool: &BTreeSet<usize>,
    k: usize,
) -> QueryScore {
    let restricted = restrict_to(ranking, pool);
    let relevant: BTreeSet<usize> = experts.intersection(pool).copied().collect();
    let defined = !relevant.is_empty();
    let first = first_relevant_rank(&restricted, &relevant);
    let roc = roc_auc(&restricted, &relevant);
    QueryScore {
        query_id: String::new(),
        topic: String::new(),
        p_at_k: defined.then(|| precision_at_k(&restricted, &relevant, k)),
        average_precision: average_precision(&restricted, &relevant),
        first_relevant_rank: first,
        reciprocal_rank: first.map(|r| 1.0 / r as f64),
        roc_auc: roc.as_ref().map(|r| r.auc),
        converged: ranking.converged(),
        roc_points: roc.map(|r| r.points).unwrap_or_default(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub mean: f64,
    /// Population STD over queries.
    pub std: f64,
    /// Population STD over per-topic means.
    pub topic_std: f64,
    pub count: usize,
    /// Queries for which the metric is undefined.
    pub excluded: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub protocol: Protocol,
    pub ranker: String,
    pub representation: String,
    pub k: usize,
    pub summary: BTreeMap<Metric, MetricSummary>,
    pub topic_means: BTreeMap<String, BTreeMap<Metric, f64>>,
    /// Topics without experts; they produce no queries.
    pub skipped_topics: Vec<String>,
    pub non_converged: usize,
    pub queries: Vec<QueryScore>,
}

/// Global and per-topic aggregation of per-query scores.
pub fn aggregate(
    scores: &[QueryScore],
) -> (
    BTreeMap<Metric, MetricSummary>,
    BTreeMap<String, BTreeMap<Metric, f64>>,
) {
    let mut summary = BTreeMap::new();
    let mut topic_means: BTreeMap<String, BTreeMap<Metric, f64>> = BTreeMap::new();
    for metric in Metric::ALL {
        let values: Vec<f64> = scores.iter().filter_map(|s| s.value(metric)).collect();
        let mut by_topic: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
        for s in scores {
            if let Some(v) = s.value(metric) {
                by_topic.entry(&s.topic).or_default().push(v);
            }
        }
        let per_topic: Vec<f64> = by_topic
            .iter()
            .map(|(topic, vals)| {
                let (m, _) = mean_std(vals).expect("non-empty group");
                topic_means
                    .entry(topic.to_string())
                    .or_default()
                    .insert(metric, m);
                m
            })
            .collect();
        if let Some((mean, std)) = mean_std(&values) {
            let (_, topic_std) = mean_std(&per_topic).expect("non-empty when values are");
            summary.insert(
                metric,
                MetricSummary {
                    mean,
                    std,
                    topic_std,
                    count: values.len(),
                    excluded: scores.len() - values.len(),
                },
            );
        }
    }
    (summary, topic_means)
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ReportLabels {
    pub ranker: String,
    pub representation: String,
}

/// One query of a protocol run.
#[derive(Debug, Clone, PartialEq)]
pub struct QuerySpec {
    pub query_id: String,
    pub topic: String,
    pub text: String,
    pub leave_out: Option<usize>,
}

pub fn topic_queries(dataset: &Dataset) -> (Vec<QuerySpec>, Vec<String>) {
    let mut skipped = Vec::new();
    let mut queries = Vec::new();
    for (topic, experts) in dataset.topics() {
        if experts.is_empty() {
            skipped.push(topic.clone());
            continue;
        }
        queries.push(QuerySpec {
            query_id: topic.clone(),
            topic: topic.clone(),
            text: topic.clone(),
            leave_out: None,
        });
    }
    (queries, skipped)
}

/// Nested topic → expert → document enumeration. A document co-authored by
/// several experts of a topic is queried once per expert.
pub fn document_queries(dataset: &Dataset) -> (Vec<QuerySpec>, Vec<String>) {
    let mut skipped = Vec::new();
    let mut queries = Vec::new();
    for (topic, experts) in dataset.topics() {
        if experts.is_empty() {
            skipped.push(topic.clone());
            continue;
        }
        for &e in experts {
            for &d in dataset.documents_of(e) {
                let doc = &dataset.documents()[d];
                queries.push(QuerySpec {
                    query_id: format!("{topic}/{}/{}", dataset.candidates()[e].id, doc.id),
                    topic: topic.clone(),
                    text: doc.text.clone(),
                    leave_out: Some(d),
                });
            }
        }
    }
    (queries, skipped)
}

/// Runs `queries` (in parallel) and assembles a report in query order.
pub fn run_queries<R: Ranker + ?Sized>(
    dataset: &Dataset,
    ranker: &R,
    protocol: Protocol,
    queries: &[QuerySpec],
    skipped_topics: Vec<String>,
    k: usize,
    labels: &ReportLabels,
) -> EvalReport {
    let pool = dataset.experts_all();
    let scores: Vec<QueryScore> = queries
        .par_iter()
        .map(|q| {
            let ranking = ranker.rank_text(&q.text, q.leave_out);
            let mut s = evaluate_ranking(&ranking, &dataset.topics()[&q.topic], pool, k);
            s.query_id = q.query_id.clone();
            s.topic = q.topic.clone();
            s
        })
        .collect();
    let (summary, topic_means) = aggregate(&scores);
    EvalReport {
        protocol,
        ranker: labels.ranker.clone(),
        representation: labels.representation.clone(),
        k,
        summary,
        topic_means,
        skipped_topics,
        non_converged: scores.iter().filter(|s| !s.converged).count(),
        queries: scores,
    }
}

pub fn run_topic_query<R: Ranker + ?Sized>(
    dataset: &Dataset,
    ranker: &R,
    k: usize,
    labels: &ReportLabels,
) -> EvalReport {
    let (queries, skipped) = topic_queries(dataset);
    run_queries(dataset, ranker, Protocol::Topic, &queries, skipped, k, labels)
}

pub fn run_document_query<R: Ranker + ?Sized>(
    dataset: &Dataset,
    ranker: &R,
    k: usize,
    labels: &ReportLabels,
) -> EvalReport {
    let (queries, skipped) = document_queries(dataset);
    run_queries(dataset, ranker, Protocol::Document, &queries, skipped, k, labels)
}

pub fn run_protocol<R: Ranker + ?Sized>(
    protocol: Protocol,
    dataset: &Dataset,
    ranker: &R,
    k: usize,
    labels: &ReportLabels,
) -> EvalReport {
    match protocol {
        Protocol::Topic => run_topic_query(dataset, ranker, k, labels),
        Protocol::Document => run_document_query(dataset, ranker, k, labels),
    }
}

impl EvalReport {
    /// One CSV row per metric: `metric,mean,std,topic_std,count,excluded`.
    pub fn summary_csv(&self) -> String {
        let mut out = String::from("metric,mean,std,topic_std,count,excluded\n");
        for (metric, s) in &self.summary {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                metric.display_name(self.k),
                s.mean,
                s.std,
                s.topic_std,
                s.count,
                s.excluded
            ));
        }
        out
    }

    /// One JSON line per query holding its ROC curve points.
    pub fn roc_jsonl(&self) -> String {
        let mut out = String::new();
        for q in &self.queries {
            let line = serde_json::json!({ "query_id": q.query_id, "points": q.roc_points });
            out.push_str(&line.to_string());
            out.push('\n');
        }
        out
    }
}
