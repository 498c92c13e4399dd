//! Canonical on-disk layout: `documents.jsonl`, `edges.jsonl`, `labels.json`.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{Candidate, Dataset, Document, DOCUMENTS_FILE, EDGES_FILE, LABELS_FILE};
use crate::{Error, Result};

#[derive(Serialize, Deserialize)]
struct EdgeLine<'a> {
    doc: std::borrow::Cow<'a, str>,
    candidate: std::borrow::Cow<'a, str>,
}

#[derive(Serialize, Deserialize)]
struct Labels {
    candidates: Vec<Candidate>,
    topics: BTreeMap<String, Vec<String>>,
}

fn write_documents<W: Write>(ds: &Dataset, mut w: W) -> std::io::Result<()> {
    for d in ds.documents() {
        serde_json::to_writer(&mut w, d)?;
        w.write_all(b"\n")?;
    }
    w.flush()
}

fn write_edges<W: Write>(ds: &Dataset, mut w: W) -> std::io::Result<()> {
    for &(d, c) in ds.edges() {
        let line = EdgeLine {
            doc: ds.documents()[d].id.as_str().into(),
            candidate: ds.candidates()[c].id.as_str().into(),
        };
        serde_json::to_writer(&mut w, &line)?;
        w.write_all(b"\n")?;
    }
    w.flush()
}

fn write_labels<W: Write>(ds: &Dataset, mut w: W) -> std::io::Result<()> {
    let labels = Labels {
        candidates: ds.candidates().to_vec(),
        topics: ds
            .topic_ids()
            .into_iter()
            .map(|(t, set)| (t, set.into_iter().collect()))
            .collect(),
    };
    serde_json::to_writer(&mut w, &labels)?;
    w.write_all(b"\n")?;
    w.flush()
}

pub fn save_dataset(ds: &Dataset, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let create = |name: &str| {
        let p = dir.join(name);
        File::create(&p)
            .map(BufWriter::new)
            .map_err(|e| Error::io(&p, e))
    };
    write_documents(ds, create(DOCUMENTS_FILE)?).map_err(|e| Error::io(dir.join(DOCUMENTS_FILE), e))?;
    write_edges(ds, create(EDGES_FILE)?).map_err(|e| Error::io(dir.join(EDGES_FILE), e))?;
    write_labels(ds, create(LABELS_FILE)?).map_err(|e| Error::io(dir.join(LABELS_FILE), e))?;
    Ok(())
}

/// Hex SHA-256 of the canonical serialization.
pub fn dataset_fingerprint(ds: &Dataset) -> String {
    let mut buf = Vec::new();
    write_documents(ds, &mut buf).expect("in-memory write");
    buf.push(0);
    write_edges(ds, &mut buf).expect("in-memory write");
    buf.push(0);
    write_labels(ds, &mut buf).expect("in-memory write");
    hex::encode(Sha256::digest(&buf))
}

fn read_jsonl<T, F>(path: &Path, mut f: F) -> Result<()>
where
    T: for<'de> Deserialize<'de>,
    F: FnMut(usize, T) -> Result<()>,
{
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let value = serde_json::from_str(&line).map_err(|e| Error::Format {
            path: path.to_path_buf(),
            line: i + 1,
            message: e.to_string(),
        })?;
        f(i + 1, value)?;
    }
    Ok(())
}

pub fn load_dataset(dir: &Path) -> Result<Dataset> {
    let doc_path = dir.join(DOCUMENTS_FILE);
    let mut documents = Vec::new();
    let mut seen = HashSet::new();
    read_jsonl(&doc_path, |line, d: Document| {
        if !seen.insert(d.id.clone()) {
            return Err(Error::Format {
                path: doc_path.clone(),
                line,
                message: format!("duplicate document id `{}`", d.id),
            });
        }
        documents.push(d);
        Ok(())
    })?;

    let edge_path = dir.join(EDGES_FILE);
    let mut edges = Vec::new();
    read_jsonl(&edge_path, |_, e: EdgeLine| {
        edges.push((e.doc.into_owned(), e.candidate.into_owned()));
        Ok(())
    })?;

    let label_path = dir.join(LABELS_FILE);
    let raw = fs::read_to_string(&label_path).map_err(|e| Error::io(&label_path, e))?;
    let labels: Labels = serde_json::from_str(&raw).map_err(|e| Error::Format {
        path: label_path.clone(),
        line: e.line(),
        message: e.to_string(),
    })?;
    let topics = labels
        .topics
        .into_iter()
        .map(|(t, ids)| (t, ids.into_iter().collect::<BTreeSet<_>>()))
        .collect();

    Dataset::from_parts(labels.candidates, documents, edges, topics)
}

/// Reads a JSON map of topic name → expert author names.
pub fn load_expert_list(path: &Path) -> Result<BTreeMap<String, Vec<String>>> {
    let raw = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&raw).map_err(|e| Error::Format {
        path: path.to_path_buf(),
        line: e.line(),
        message: e.to_string(),
    })
}
