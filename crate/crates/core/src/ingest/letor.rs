//! LETOR rank-aggregation files.
//!
//! Each line is `grade qid:Q 1:v1 2:v2 ... D:vD #docid = X` where `v_j` is
//! the position ranker `j` gave the document (1 = best) or a missing marker.
//! A dataset directory holds `Fold1` to `Fold5`, each with `train.txt`,
//! `vali.txt` and `test.txt`.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::imputation::extend_columns;
use crate::learning::label_to_ranking;
use crate::par::{self, Exec};
use crate::rank::{Direction, ObjectId, PartialRanking, RankMatrix, Ranking};

pub const FOLDS: usize = 5;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LetorOptions {
    /// Only `NULL` marks a missing position and positions must be integers.
    /// Otherwise `0` is also read as missing and fractional positions pass.
    pub strict: bool,
}

/// One query: its documents in file order, their grades and one partial
/// list per ranker.
#[derive(Debug, Clone, PartialEq)]
pub struct QueryInstance {
    pub qid: String,
    pub docs: Vec<ObjectId>,
    pub grades: BTreeMap<ObjectId, i32>,
    pub expert_lists: Vec<PartialRanking>,
}

impl QueryInstance {
    /// Completes every ranker's list over the query's documents. Rankers
    /// that placed no document become the constant column 1/2.
    pub fn extended(&self, direction: Direction) -> Result<RankMatrix> {
        let lists: Vec<PartialRanking> = self
            .expert_lists
            .iter()
            .map(|p| p.clone().with_direction(direction))
            .collect();
        extend_columns(&lists, &self.docs)
    }

    pub fn label(&self) -> Result<Ranking> {
        label_to_ranking(self.grades.iter().map(|(k, g)| (k, f64::from(*g))))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Fold {
    pub train: Vec<String>,
    pub vali: Vec<String>,
    pub test: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Dataset {
    pub expert_names: Vec<String>,
    pub queries: Vec<QueryInstance>,
    pub folds: Vec<Fold>,
}

impl Dataset {
    pub fn d(&self) -> usize {
        self.expert_names.len()
    }

    pub fn query(&self, qid: &str) -> Option<&QueryInstance> {
        self.queries.iter().find(|q| q.qid == qid)
    }

    /// Looks up each qid, failing on unknown ones.
    pub fn select(&self, qids: &[String]) -> Result<Vec<&QueryInstance>> {
        let index: HashMap<&str, &QueryInstance> = self.queries.iter().map(|q| (q.qid.as_str(), q)).collect();
        qids.iter()
            .map(|id| {
                index
                    .get(id.as_str())
                    .copied()
                    .ok_or_else(|| Error::invalid(format!("unknown query `{id}`")))
            })
            .collect()
    }
}

struct Line {
    grade: i32,
    qid: String,
    positions: Vec<Option<f64>>,
    docid: Option<String>,
}

fn parse_line(raw: &str, opts: LetorOptions) -> std::result::Result<Option<Line>, String> {
    let (body, comment) = match raw.find('#') {
        Some(i) => (&raw[..i], Some(&raw[i + 1..])),
        None => (raw, None),
    };
    let mut tokens = body.split_whitespace();
    let Some(grade) = tokens.next() else {
        return Ok(None);
    };
    let grade: i32 = grade
        .parse()
        .map_err(|_| format!("grade `{grade}` is not an integer"))?;
    let qid = tokens
        .next()
        .and_then(|t| t.strip_prefix("qid:"))
        .ok_or("expected `qid:<id>` after the grade")?
        .to_string();
    let mut positions = Vec::new();
    for tok in tokens {
        let (idx, val) = tok
            .split_once(':')
            .ok_or_else(|| format!("feature `{tok}` is not `index:value`"))?;
        let idx: usize = idx
            .parse()
            .map_err(|_| format!("feature index `{idx}` is not an integer"))?;
        if idx != positions.len() + 1 {
            return Err(format!("expected feature {}, found {idx}", positions.len() + 1));
        }
        positions.push(parse_position(val, opts)?);
    }
    let docid = comment.and_then(|c| {
        let rest = &c[c.find("docid")? + 5..];
        let rest = rest.trim_start().strip_prefix('=')?;
        rest.split_whitespace().next().map(str::to_string)
    });
    Ok(Some(Line {
        grade,
        qid,
        positions,
        docid,
    }))
}

fn parse_position(val: &str, opts: LetorOptions) -> std::result::Result<Option<f64>, String> {
    if val == "NULL" {
        return Ok(None);
    }
    let p: f64 = val
        .parse()
        .map_err(|_| format!("position `{val}` is not a number"))?;
    if !p.is_finite() || p < 0.0 {
        return Err(format!("position `{val}` is invalid"));
    }
    if p == 0.0 {
        return if opts.strict {
            Err("position 0 in strict mode (use NULL for missing)".into())
        } else {
            Ok(None)
        };
    }
    if opts.strict && p.fract() != 0.0 {
        return Err(format!("position `{val}` is not an integer"));
    }
    if p < 1.0 {
        return Err(format!("position `{val}` is below 1"));
    }
    Ok(Some(p))
}

/// Parses LETOR text. `origin` only labels error messages. Queries keep
/// their first-appearance order; documents keep file order.
pub fn parse_letor_str(text: &str, origin: &str, opts: LetorOptions) -> Result<Vec<QueryInstance>> {
    struct Acc {
        docs: Vec<ObjectId>,
        grades: BTreeMap<ObjectId, i32>,
        positions: Vec<Vec<(ObjectId, f64)>>,
    }
    let err = |line: usize, msg: String| Error::Parse {
        path: origin.to_string(),
        line,
        msg,
    };
    let mut d: Option<usize> = None;
    let mut order: Vec<String> = Vec::new();
    let mut acc: HashMap<String, Acc> = HashMap::new();
    for (i, raw) in text.lines().enumerate() {
        let lineno = i + 1;
        let Some(line) = parse_line(raw, opts).map_err(|m| err(lineno, m))? else {
            continue;
        };
        match d {
            None => d = Some(line.positions.len()),
            Some(d) if d != line.positions.len() => {
                return Err(err(
                    lineno,
                    format!("{} rankers, earlier lines have {d}", line.positions.len()),
                ))
            }
            _ => {}
        }
        let q = acc.entry(line.qid.clone()).or_insert_with(|| {
            order.push(line.qid.clone());
            Acc {
                docs: Vec::new(),
                grades: BTreeMap::new(),
                positions: vec![Vec::new(); line.positions.len()],
            }
        });
        let doc = ObjectId::new(
            line.docid
                .unwrap_or_else(|| format!("{}-{}", line.qid, q.docs.len() + 1)),
        );
        if q.grades.insert(doc.clone(), line.grade).is_some() {
            return Err(err(
                lineno,
                format!("document `{doc}` repeated in query {}", line.qid),
            ));
        }
        q.docs.push(doc.clone());
        for (list, p) in q.positions.iter_mut().zip(line.positions) {
            if let Some(p) = p {
                list.push((doc.clone(), p));
            }
        }
    }
    order
        .into_iter()
        .map(|qid| {
            let q = acc.remove(&qid).expect("recorded qid");
            let n = q.docs.len();
            let expert_lists = q
                .positions
                .into_iter()
                .map(|list| {
                    PartialRanking::from_positions(list, Direction::Top).map(|p| p.with_domain_size(n))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(QueryInstance {
                qid,
                docs: q.docs,
                grades: q.grades,
                expert_lists,
            })
        })
        .collect()
}

pub fn parse_letor_file(path: &Path, opts: LetorOptions) -> Result<Vec<QueryInstance>> {
    let text = std::fs::read_to_string(path)?;
    parse_letor_str(&text, &path.display().to_string(), opts)
}

/// Loads `Fold1..=Fold5/{train,vali,test}.txt` under `dir`. Queries that
/// appear in several files are kept once.
pub fn parse_letor_agg(dir: &Path, opts: LetorOptions) -> Result<Dataset> {
    let mut paths: Vec<PathBuf> = Vec::new();
    for f in 1..=FOLDS {
        for split in ["train", "vali", "test"] {
            let p = dir.join(format!("Fold{f}")).join(format!("{split}.txt"));
            if !p.is_file() {
                return Err(Error::MissingFold(p));
            }
            paths.push(p);
        }
    }
    let parsed = par::map(Exec::default(), &paths, |p| parse_letor_file(p, opts));
    let mut dataset = Dataset::default();
    let mut seen: HashMap<String, usize> = HashMap::new();
    let mut d: Option<usize> = None;
    for (chunk, files) in parsed.chunks(3).zip(paths.chunks(3)) {
        let mut splits: Vec<Vec<String>> = Vec::with_capacity(3);
        for (result, path) in chunk.iter().zip(files) {
            let queries = match result {
                Ok(q) => q,
                Err(e) => return Err(clone_err(e)),
            };
            for q in queries {
                match d {
                    None => d = Some(q.expert_lists.len()),
                    Some(d) if d != q.expert_lists.len() => {
                        return Err(Error::Schema(format!(
                            "{}: {} rankers, other files have {d}",
                            path.display(),
                            q.expert_lists.len()
                        )))
                    }
                    _ => {}
                }
                if !seen.contains_key(&q.qid) {
                    seen.insert(q.qid.clone(), dataset.queries.len());
                    dataset.queries.push(q.clone());
                }
            }
            splits.push(queries.iter().map(|q| q.qid.clone()).collect());
        }
        let test = splits.pop().unwrap_or_default();
        let vali = splits.pop().unwrap_or_default();
        let train = splits.pop().unwrap_or_default();
        dataset.folds.push(Fold { train, vali, test });
    }
    dataset.expert_names = (1..=d.unwrap_or(0)).map(|j| j.to_string()).collect();
    Ok(dataset)
}

// Parse errors are not Clone because of the io variant.
fn clone_err(e: &Error) -> Error {
    match e {
        Error::Parse { path, line, msg } => Error::Parse {
            path: path.clone(),
            line: *line,
            msg: msg.clone(),
        },
        Error::Io(io) => Error::Io(std::io::Error::new(io.kind(), io.to_string())),
        other => Error::invalid(other.to_string()),
    }
}

/// Serializes queries back to LETOR lines. Tied documents share the
/// smallest position of their group, so re-parsing gives the same lists.
pub fn write_letor(queries: &[QueryInstance]) -> String {
    let mut out = String::new();
    for q in queries {
        let positions: Vec<HashMap<&ObjectId, u64>> =
            q.expert_lists.iter().map(competition_positions).collect();
        for doc in &q.docs {
            let _ = write!(out, "{} qid:{}", q.grades[doc], q.qid);
            for (j, pos) in positions.iter().enumerate() {
                match pos.get(doc) {
                    Some(p) => {
                        let _ = write!(out, " {}:{p}", j + 1);
                    }
                    None => {
                        let _ = write!(out, " {}:NULL", j + 1);
                    }
                }
            }
            let _ = writeln!(out, " #docid = {doc}");
        }
    }
    out
}

fn competition_positions(p: &PartialRanking) -> HashMap<&ObjectId, u64> {
    let mut entries: Vec<(&ObjectId, f64)> = p.ranking().iter().collect();
    entries.sort_by(|a, b| a.1.total_cmp(&b.1));
    let mut out = HashMap::with_capacity(entries.len());
    let mut start = 0;
    for (i, (id, v)) in entries.iter().enumerate() {
        if i == 0 || *v != entries[i - 1].1 {
            start = i as u64 + 1;
        }
        out.insert(*id, start);
    }
    out
}
