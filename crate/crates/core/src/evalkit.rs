//! AP@k / MAP@k against class ground truth.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;
use std::fs;
use std::hash::Hash;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Denominator of the recall increment.
#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RecallBase {
    /// `|truth \ seeds|`
    #[default]
    Full,
    /// `min(|truth \ seeds|, k)`
    CappedAtK,
}

/// Average precision of the first `k` expanded items. Seeds are removed from
/// both the ranking and the truth before scoring; an empty recall base
/// scores 0.
pub fn ap_at_k<T: Eq + Hash>(
    ranked: &[T],
    truth: &HashSet<T>,
    seeds: &HashSet<T>,
    k: usize,
    base: RecallBase,
) -> f64 {
    let mut n = truth.iter().filter(|t| !seeds.contains(t)).count();
    if base == RecallBase::CappedAtK {
        n = n.min(k);
    }
    if n == 0 {
        return 0.0;
    }
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (i, item) in ranked.iter().filter(|x| !seeds.contains(x)).take(k).enumerate() {
        if truth.contains(item) {
            hits += 1;
            sum += hits as f64 / (i + 1) as f64;
        }
    }
    sum / n as f64
}

/// Mean of per-run AP; 0 for no runs.
pub fn map_at_k(aps: &[f64]) -> f64 {
    if aps.is_empty() {
        return 0.0;
    }
    aps.iter().sum::<f64>() / aps.len() as f64
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Query {
    #[serde(default)]
    pub id: Option<String>,
    pub class: String,
    pub seeds: Vec<String>,
}

impl Query {
    /// The explicit id, or `q<line>` when absent.
    pub fn key(&self, position: usize) -> String {
        self.id.clone().unwrap_or_else(|| format!("q{}", position + 1))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TruthRecord {
    pub class: String,
    pub entities: Vec<String>,
}

fn read_jsonl<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let f = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(f).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| Error::Parse {
            source_name: path.display().to_string(),
            line: i + 1,
            message: e.to_string(),
        })?);
    }
    Ok(out)
}

pub fn load_queries(path: impl AsRef<Path>) -> Result<Vec<Query>> {
    read_jsonl(path.as_ref())
}

/// Class name to entity set; records for one class are unioned.
pub fn load_truth(path: impl AsRef<Path>) -> Result<BTreeMap<String, HashSet<String>>> {
    let path = path.as_ref();
    let mut out: BTreeMap<String, HashSet<String>> = BTreeMap::new();
    for r in read_jsonl::<TruthRecord>(path)? {
        out.entry(r.class).or_default().extend(r.entities);
    }
    if let Some((class, _)) = out.iter().find(|(_, v)| v.is_empty()) {
        return Err(Error::Validation {
            doc_id: path.display().to_string(),
            message: format!("class {class} has no entities"),
        });
    }
    Ok(out)
}

/// Entity names of a ranking file (`rank \t score \t entity`).
pub fn read_ranking(path: impl AsRef<Path>) -> Result<Vec<String>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.is_empty())
        .map(|(i, l)| {
            l.splitn(3, '\t').nth(2).map(str::to_owned).ok_or_else(|| Error::Parse {
                source_name: path.display().to_string(),
                line: i + 1,
                message: "expected rank, score and entity separated by tabs".into(),
            })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QueryScore {
    pub id: String,
    pub class: String,
    pub ap: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub ks: Vec<usize>,
    pub recall_base: RecallBase,
    pub queries: Vec<QueryScore>,
    pub map: Vec<f64>,
}

impl Report {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = write!(s, "{:<16}{:<16}", "query", "class");
        for k in &self.ks {
            let _ = write!(s, "{:>10}", format!("AP@{k}"));
        }
        s.push('\n');
        for q in &self.queries {
            let _ = write!(s, "{:<16}{:<16}", q.id, q.class);
            for ap in &q.ap {
                let _ = write!(s, "{ap:>10.4}");
            }
            s.push('\n');
        }
        let _ = write!(s, "{:<32}", "MAP");
        for m in &self.map {
            let _ = write!(s, "{m:>10.4}");
        }
        s.push('\n');
        s
    }
}

/// Score every query whose ranking exists in `rankings_dir` (`<key>.tsv`).
pub fn evaluate(
    rankings_dir: impl AsRef<Path>,
    queries: &[Query],
    truth: &BTreeMap<String, HashSet<String>>,
    ks: &[usize],
    base: RecallBase,
) -> Result<Report> {
    let dir = rankings_dir.as_ref();
    if ks.is_empty() || ks.contains(&0) {
        return Err(Error::Config("cutoffs must be at least 1".into()));
    }
    let mut scores = Vec::new();
    for (i, q) in queries.iter().enumerate() {
        let id = q.key(i);
        let path = dir.join(format!("{id}.tsv"));
        if !path.exists() {
            continue;
        }
        let class_truth = truth
            .get(&q.class)
            .ok_or_else(|| Error::NotFound(format!("no ground truth for class {}", q.class)))?;
        let ranked = read_ranking(&path)?;
        let seeds: HashSet<String> = q.seeds.iter().cloned().collect();
        let ap = ks
            .iter()
            .map(|&k| ap_at_k(&ranked, class_truth, &seeds, k, base))
            .collect();
        scores.push(QueryScore {
            id,
            class: q.class.clone(),
            ap,
        });
    }
    if scores.is_empty() {
        return Err(Error::NotFound(format!("no rankings for any query in {}", dir.display())));
    }
    let map = (0..ks.len())
        .map(|j| map_at_k(&scores.iter().map(|s| s.ap[j]).collect::<Vec<_>>()))
        .collect();
    Ok(Report {
        ks: ks.to_vec(),
        recall_base: base,
        queries: scores,
        map,
    })
}
