use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::io::BufRead;

use super::{Candidate, Dataset, Document};
use crate::{Error, Result};

/// One publication block of an AMiner citation dump.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RawRecord {
    pub index: String,
    pub title: String,
    pub authors: Vec<String>,
    pub year: Option<i32>,
    pub venue: Option<String>,
    pub abstract_text: Option<String>,
    pub references: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ParseOutcome {
    pub records: Vec<RawRecord>,
    /// Blocks dropped for a missing, empty or repeated `#index`.
    pub rejected: usize,
    pub blocks: usize,
}

/// Parses the line-prefixed AMiner format: `#*` title, `#@` authors,
/// `#t` year, `#c` venue, `#index` id, `#%` reference, `#!` abstract.
/// Records are separated by blank lines.
pub fn parse_aminer<R: BufRead>(reader: R) -> Result<ParseOutcome> {
    let mut out = ParseOutcome::default();
    let mut seen = HashSet::new();
    let mut current: Option<RawRecord> = None;
    let mut has_index = false;

    let mut finish = |rec: Option<RawRecord>, has_index: bool, out: &mut ParseOutcome| {
        let Some(rec) = rec else { return };
        out.blocks += 1;
        if has_index && !rec.index.is_empty() && seen.insert(rec.index.clone()) {
            out.records.push(rec);
        } else {
            out.rejected += 1;
        }
    };

    for line in reader.lines() {
        let line = line?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            finish(current.take(), has_index, &mut out);
            has_index = false;
            continue;
        }
        let rec = current.get_or_insert_with(RawRecord::default);
        if let Some(v) = line.strip_prefix("#index") {
            rec.index = v.trim().to_string();
            has_index = true;
        } else if let Some(v) = line.strip_prefix("#*") {
            rec.title = v.trim().to_string();
        } else if let Some(v) = line.strip_prefix("#@") {
            rec.authors = v
                .split(';')
                .map(str::trim)
                .filter(|a| !a.is_empty())
                .map(String::from)
                .collect();
        } else if let Some(v) = line.strip_prefix("#t") {
            rec.year = v.trim().parse().ok();
        } else if let Some(v) = line.strip_prefix("#c") {
            let v = v.trim();
            rec.venue = (!v.is_empty()).then(|| v.to_string());
        } else if let Some(v) = line.strip_prefix("#%") {
            let v = v.trim();
            if !v.is_empty() {
                rec.references.push(v.to_string());
            }
        } else if let Some(v) = line.strip_prefix("#!") {
            let v = v.trim();
            rec.abstract_text = (!v.is_empty()).then(|| v.to_string());
        }
    }
    finish(current.take(), has_index, &mut out);
    Ok(out)
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BuildReport {
    /// (topic, name) pairs with no matching candidate.
    pub dropped_experts: Vec<(String, String)>,
    /// Topics whose expert set resolved to nothing. They are kept.
    pub empty_topics: Vec<String>,
}

/// Builds a dataset from parsed records. Authors are identified by exact
/// name, so the candidate id is the author name itself.
pub fn build_dataset(
    records: &[RawRecord],
    expert_list: &BTreeMap<String, Vec<String>>,
) -> Result<(Dataset, BuildReport)> {
    let mut names = BTreeSet::new();
    let mut documents = Vec::with_capacity(records.len());
    let mut edges = Vec::new();
    for rec in records {
        let text = match &rec.abstract_text {
            Some(a) => format!("{} {}", rec.title, a),
            None => rec.title.clone(),
        };
        documents.push(Document {
            id: rec.index.clone(),
            text,
        });
        for author in &rec.authors {
            names.insert(author.clone());
            edges.push((rec.index.clone(), author.clone()));
        }
    }

    let mut report = BuildReport::default();
    let mut topics = BTreeMap::new();
    for (topic, experts) in expert_list {
        let mut set = BTreeSet::new();
        for name in experts {
            if names.contains(name) {
                set.insert(name.clone());
            } else {
                report.dropped_experts.push((topic.clone(), name.clone()));
            }
        }
        if set.is_empty() {
            report.empty_topics.push(topic.clone());
        }
        topics.insert(topic.clone(), set);
    }

    let candidates = names
        .into_iter()
        .map(|n| Candidate {
            id: n.clone(),
            name: n,
        })
        .collect();
    let dataset = Dataset::from_parts(candidates, documents, edges, topics).map_err(|e| match e {
        Error::InvalidDataset(m) => Error::InvalidDataset(format!("building from records: {m}")),
        other => other,
    })?;
    Ok((dataset, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> ParseOutcome {
        parse_aminer(s.as_bytes()).unwrap()
    }

    #[test]
    fn parses_single_block() {
        let out = parse("#*T1\n#@Ann Smith;Bo Li\n#index7\n#!Hello world");
        assert_eq!(out.rejected, 0);
        assert_eq!(
            out.records,
            vec![RawRecord {
                index: "7".into(),
                title: "T1".into(),
                authors: vec!["Ann Smith".into(), "Bo Li".into()],
                abstract_text: Some("Hello world".into()),
                ..Default::default()
            }]
        );
    }

    #[test]
    fn empty_stream() {
        assert_eq!(parse(""), ParseOutcome::default());
    }

    #[test]
    fn missing_index_is_rejected() {
        let out = parse("#*No id\n#@A\n");
        assert_eq!(out.records.len(), 0);
        assert_eq!(out.rejected, 1);
        assert_eq!(out.blocks, 1);
    }

    #[test]
    fn all_fields_and_unknown_prefixes() {
        let text = "#*Title\n#@ A ; B ;\n#t2008\n#cKDD\n#index42\n#%1\n#%2\n#xjunk\nplain\n#!Abs\n\n\n#index43\n#*Other\n";
        let out = parse(text);
        assert_eq!(out.blocks, 2);
        let r = &out.records[0];
        assert_eq!(r.authors, vec!["A", "B"]);
        assert_eq!(r.year, Some(2008));
        assert_eq!(r.venue.as_deref(), Some("KDD"));
        assert_eq!(r.references, vec!["1", "2"]);
        assert_eq!(out.records[1].index, "43");
    }

    #[test]
    fn duplicate_index_rejected() {
        let out = parse("#index1\n#*a\n\n#index1\n#*b\n");
        assert_eq!(out.records.len(), 1);
        assert_eq!(out.rejected, 1);
    }

    #[test]
    fn invalid_utf8_is_fatal() {
        let bytes: &[u8] = b"#index1\n#*\xff\xfe\n";
        assert!(matches!(parse_aminer(bytes), Err(Error::Stream(_))));
    }

    fn rec(index: &str, authors: &[&str], abs: Option<&str>) -> RawRecord {
        RawRecord {
            index: index.into(),
            title: format!("title {index}"),
            authors: authors.iter().map(|s| s.to_string()).collect(),
            abstract_text: abs.map(String::from),
            ..Default::default()
        }
    }

    #[test]
    fn build_counts() {
        let (ds, report) = build_dataset(&[rec("1", &["A", "B"], Some("abs"))], &BTreeMap::new()).unwrap();
        assert_eq!(ds.num_candidates(), 2);
        assert_eq!(ds.num_documents(), 1);
        assert_eq!(ds.edges().len(), 2);
        assert_eq!(ds.documents()[0].text, "title 1 abs");
        assert!(report.dropped_experts.is_empty());
    }

    #[test]
    fn build_resolves_experts() {
        let experts = BTreeMap::from([
            ("data mining".to_string(), vec!["A".to_string()]),
            ("ghosts".to_string(), vec!["Zed".to_string()]),
        ]);
        let (ds, report) =
            build_dataset(&[rec("1", &["A", "B", "A"], None), rec("2", &["B"], None)], &experts).unwrap();
        let a = ds.candidate_index("A").unwrap();
        assert_eq!(ds.topics()["data mining"], BTreeSet::from([a]));
        assert_eq!(ds.experts_all(), &BTreeSet::from([a]));
        assert_eq!(report.dropped_experts.len(), 1);
        assert_eq!(report.empty_topics, vec!["ghosts".to_string()]);
        assert!(ds.topics()["ghosts"].is_empty());
        // distinct authors per record: 2 + 1
        assert_eq!(ds.edges().len(), 3);
        assert_eq!(ds.documents()[0].text, "title 1");
    }
}
