//! Readers and writers for the on-disk formats.
//!
//! Parse errors carry the file, the 1-based line and the offending field.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use beliefspace_core::corpus::{IngestReport, RawPolarity, RawVote};
use beliefspace_core::encoder::format::{self, MODEL_MAGIC, VECTORS_MAGIC};
use beliefspace_core::encoder::{EncoderModel, PrecomputedStore};
use beliefspace_core::evalkit::StsPair;
use beliefspace_core::predict::PredictionOutcome;
use beliefspace_core::profile::{IssueStance, Party, Profiles, Religion, UserProfile};
use beliefspace_core::{Corpus, Debate, Polarity};
use serde_json::{Map, Value};

use crate::error::{CliError, CliResult};

pub fn read_bytes(path: &Path) -> CliResult<Vec<u8>> {
    fs::read(path).map_err(|e| CliError::io(path, e))
}

pub fn read_text(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

/// Non-blank lines of a JSON Lines file, parsed as objects.
fn json_lines(path: &Path) -> CliResult<Vec<(usize, Map<String, Value>)>> {
    let text = read_text(path)?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let value: Value = serde_json::from_str(line)
            .map_err(|e| CliError::parse(path, i + 1, "<line>", e.to_string()))?;
        match value {
            Value::Object(map) => out.push((i + 1, map)),
            _ => {
                return Err(CliError::parse(
                    path,
                    i + 1,
                    "<line>",
                    "expected a JSON object",
                ))
            }
        }
    }
    Ok(out)
}

fn required_str(
    path: &Path,
    line: usize,
    map: &Map<String, Value>,
    field: &str,
) -> CliResult<String> {
    match map.get(field) {
        Some(Value::String(s)) => Ok(s.clone()),
        Some(_) => Err(CliError::parse(path, line, field, "expected a string")),
        None => Err(CliError::parse(path, line, field, "missing")),
    }
}

fn optional_str(
    path: &Path,
    line: usize,
    map: &Map<String, Value>,
    field: &str,
) -> CliResult<Option<String>> {
    match map.get(field) {
        None | Some(Value::Null) => Ok(None),
        Some(Value::String(s)) => Ok(Some(s.clone())),
        Some(_) => Err(CliError::parse(
            path,
            line,
            field,
            "expected a string or null",
        )),
    }
}

pub fn read_debates(path: &Path) -> CliResult<Vec<Debate>> {
    json_lines(path)?
        .into_iter()
        .map(|(line, map)| {
            Ok(Debate {
                debate_id: required_str(path, line, &map, "debate_id")?,
                title: required_str(path, line, &map, "title")?,
                category: optional_str(path, line, &map, "category")?,
            })
        })
        .collect()
}

/// Header-indexed CSV reader; returns the positions of the `wanted` columns.
fn csv_columns(
    path: &Path,
    reader: &mut csv::Reader<&[u8]>,
    wanted: &[&str],
) -> CliResult<Vec<usize>> {
    let header = reader
        .headers()
        .map_err(|e| CliError::parse(path, 1, "<header>", e.to_string()))?
        .clone();
    wanted
        .iter()
        .map(|w| {
            header
                .iter()
                .position(|h| h.trim() == *w)
                .ok_or_else(|| CliError::parse(path, 1, w, "column missing from header"))
        })
        .collect()
}

fn record_line(record: &csv::StringRecord) -> usize {
    record.position().map_or(0, |p| p.line() as usize)
}

pub fn read_votes(path: &Path) -> CliResult<Vec<RawVote>> {
    let bytes = read_bytes(path)?;
    let mut reader = csv::ReaderBuilder::new().from_reader(bytes.as_slice());
    let cols = csv_columns(path, &mut reader, &["user_id", "debate_id", "polarity"])?;
    let mut votes = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            CliError::parse(path, line, "<record>", e.to_string())
        })?;
        let line = record_line(&record);
        let field = |i: usize, name: &str| -> CliResult<String> {
            match record.get(cols[i]).map(str::trim) {
                Some(s) if !s.is_empty() => Ok(s.to_owned()),
                _ => Err(CliError::parse(path, line, name, "empty")),
            }
        };
        let raw = field(2, "polarity")?;
        let polarity = RawPolarity::parse(&raw).ok_or_else(|| {
            CliError::parse(
                path,
                line,
                "polarity",
                format!("expected PRO, CON or TIE, got {raw:?}"),
            )
        })?;
        votes.push(RawVote {
            user_id: field(0, "user_id")?,
            debate_id: field(1, "debate_id")?,
            polarity,
        });
    }
    Ok(votes)
}

pub fn read_exclusions(path: &Path) -> CliResult<BTreeSet<String>> {
    Ok(read_text(path)?
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(String::from)
        .collect())
}

pub fn load_corpus(
    debates: &Path,
    votes: &Path,
    exclusions: Option<&Path>,
) -> CliResult<(Corpus, IngestReport)> {
    let excluded = match exclusions {
        Some(p) => read_exclusions(p)?,
        None => BTreeSet::new(),
    };
    Corpus::from_records(read_debates(debates)?, read_votes(votes)?, &excluded).map_err(
        CliError::data(format!("{} + {}", debates.display(), votes.display())),
    )
}

pub fn read_profiles(path: &Path) -> CliResult<Profiles> {
    let mut profiles = Profiles::new();
    for (line, map) in json_lines(path)? {
        let user_id = required_str(path, line, &map, "user_id")?;
        let party = optional_str(path, line, &map, "party")?.map(|s| Party::parse(&s));
        let religion = optional_str(path, line, &map, "religion")?.map(|s| Religion::parse(&s));
        let mut big_issues = BTreeMap::new();
        match map.get("big_issues") {
            None | Some(Value::Null) => {}
            Some(Value::Object(issues)) => {
                for (issue, v) in issues {
                    let field = format!("big_issues.{issue}");
                    let stance = v.as_str().and_then(IssueStance::parse).ok_or_else(|| {
                        CliError::parse(path, line, &field, "expected PRO, CON or OTHER")
                    })?;
                    big_issues.insert(issue.clone(), stance);
                }
            }
            Some(_) => {
                return Err(CliError::parse(
                    path,
                    line,
                    "big_issues",
                    "expected an object",
                ))
            }
        }
        if profiles.contains_key(&user_id) {
            return Err(CliError::parse(
                path,
                line,
                "user_id",
                format!("duplicate user {user_id:?}"),
            ));
        }
        profiles.insert(
            user_id.clone(),
            UserProfile {
                user_id,
                party,
                religion,
                big_issues,
            },
        );
    }
    Ok(profiles)
}

/// Tab-separated `sentence_a, sentence_b, score` rows without a header.
pub fn read_sts(path: &Path) -> CliResult<Vec<StsPair>> {
    let text = read_text(path)?;
    let mut pairs = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 3 {
            return Err(CliError::parse(
                path,
                i + 1,
                "<line>",
                format!("expected 3 tab-separated columns, found {}", cols.len()),
            ));
        }
        let score: f64 = cols[2].trim().parse().map_err(|_| {
            CliError::parse(path, i + 1, "score", format!("not a number: {:?}", cols[2]))
        })?;
        if !(0.0..=5.0).contains(&score) {
            return Err(CliError::parse(
                path,
                i + 1,
                "score",
                format!("{score} outside [0, 5]"),
            ));
        }
        pairs.push(StsPair {
            sentence_a: cols[0].to_owned(),
            sentence_b: cols[1].to_owned(),
            score,
        });
    }
    Ok(pairs)
}

/// Precomputed statement vectors, either binary (`BLFV`) or JSON Lines of
/// `{"text": str, "vector": [number]}`.
pub fn read_vectors(path: &Path) -> CliResult<PrecomputedStore> {
    let bytes = read_bytes(path)?;
    if bytes.starts_with(VECTORS_MAGIC) {
        return format::vectors_from_bytes(&bytes)
            .map_err(CliError::data(path.display().to_string()));
    }
    let mut store: Option<PrecomputedStore> = None;
    for (line, map) in json_lines(path)? {
        let text = required_str(path, line, &map, "text")?;
        let vector: Vec<f64> = match map.get("vector") {
            Some(Value::Array(xs)) => xs
                .iter()
                .map(|x| {
                    x.as_f64()
                        .ok_or_else(|| CliError::parse(path, line, "vector", "expected numbers"))
                })
                .collect::<CliResult<_>>()?,
            Some(_) => return Err(CliError::parse(path, line, "vector", "expected an array")),
            None => return Err(CliError::parse(path, line, "vector", "missing")),
        };
        let s = store.get_or_insert_with(|| PrecomputedStore::new(vector.len()));
        s.insert(text, vector)
            .map_err(|e| CliError::parse(path, line, "vector", e.to_string()))?;
    }
    store.ok_or_else(|| CliError::Invalid(format!("{}: no vectors", path.display())))
}

pub fn vectors_to_jsonl(store: &PrecomputedStore) -> Vec<u8> {
    let mut out = Vec::new();
    for (text, vector) in store.iter() {
        let line = serde_json::json!({ "text": text, "vector": vector });
        out.extend_from_slice(line.to_string().as_bytes());
        out.push(b'\n');
    }
    out
}

pub fn read_model(path: &Path) -> CliResult<EncoderModel> {
    let bytes = read_bytes(path)?;
    if !bytes.starts_with(MODEL_MAGIC) {
        return Err(CliError::Invalid(format!(
            "{}: not a model file",
            path.display()
        )));
    }
    format::model_from_bytes(&bytes).map_err(CliError::data(path.display().to_string()))
}

/// A trained or saved model (`--model`) or a precomputed vector file (`--vectors`).
pub fn load_encoder(model: Option<&Path>, vectors: Option<&Path>) -> CliResult<EncoderModel> {
    match (model, vectors) {
        (Some(m), None) => read_model(m),
        (None, Some(v)) => Ok(EncoderModel::Precomputed(read_vectors(v)?)),
        (None, None) => Err(CliError::Usage(
            "one of --model or --vectors is required".into(),
        )),
        (Some(_), Some(_)) => Err(CliError::Usage(
            "--model and --vectors are mutually exclusive".into(),
        )),
    }
}

pub fn debates_to_jsonl(debates: &[Debate]) -> Vec<u8> {
    let mut out = Vec::new();
    for d in debates {
        let line = serde_json::json!({ "debate_id": d.debate_id, "title": d.title, "category": d.category });
        out.extend_from_slice(line.to_string().as_bytes());
        out.push(b'\n');
    }
    out
}

pub fn votes_to_csv(corpus: &Corpus) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["user_id", "debate_id", "polarity"])
        .expect("in-memory write");
    for (user, debate, polarity) in corpus.vote_rows() {
        w.write_record([user, debate, polarity.as_str()])
            .expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

pub fn profiles_to_jsonl(profiles: &Profiles) -> Vec<u8> {
    let mut out = Vec::new();
    for p in profiles.values() {
        let issues: Map<String, Value> = p
            .big_issues
            .iter()
            .map(|(k, v)| (k.clone(), Value::String(v.as_str().into())))
            .collect();
        let line = serde_json::json!({
            "user_id": p.user_id,
            "party": p.party.as_ref().map(|x| x.as_str()),
            "religion": p.religion.as_ref().map(|x| x.as_str()),
            "big_issues": issues,
        });
        out.extend_from_slice(line.to_string().as_bytes());
        out.push(b'\n');
    }
    out
}

pub const OUTCOME_COLUMNS: [&str; 11] = [
    "user_id",
    "debate_id",
    "category",
    "d_min",
    "d_max",
    "d_avg",
    "d_star",
    "predicted",
    "truth",
    "correct",
    "tie",
];

fn parse_polarity(path: &Path, line: usize, field: &str, s: &str) -> CliResult<Polarity> {
    match s {
        "PRO" => Ok(Polarity::Pro),
        "CON" => Ok(Polarity::Con),
        _ => Err(CliError::parse(
            path,
            line,
            field,
            format!("expected PRO or CON, got {s:?}"),
        )),
    }
}

fn parse_flag(path: &Path, line: usize, field: &str, s: &str) -> CliResult<bool> {
    match s {
        "1" | "true" => Ok(true),
        "0" | "false" => Ok(false),
        _ => Err(CliError::parse(
            path,
            line,
            field,
            format!("expected 0 or 1, got {s:?}"),
        )),
    }
}

/// Outcomes written by `predict` or `eval`. History length is not exported and reads as 0.
pub fn read_outcomes(path: &Path) -> CliResult<Vec<PredictionOutcome>> {
    let bytes = read_bytes(path)?;
    let mut reader = csv::ReaderBuilder::new().from_reader(bytes.as_slice());
    let cols = csv_columns(path, &mut reader, &OUTCOME_COLUMNS)?;
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| CliError::parse(path, 0, "<record>", e.to_string()))?;
        let line = record_line(&record);
        let get = |i: usize| record.get(cols[i]).unwrap_or("").trim();
        let num = |i: usize| -> CliResult<f64> {
            get(i).parse().map_err(|_| {
                CliError::parse(
                    path,
                    line,
                    OUTCOME_COLUMNS[i],
                    format!("not a number: {:?}", get(i)),
                )
            })
        };
        let category = match get(2) {
            "" => None,
            c => Some(c.to_owned()),
        };
        out.push(PredictionOutcome {
            user_id: get(0).to_owned(),
            debate_id: get(1).to_owned(),
            category,
            history: 0,
            d_min: num(3)?,
            d_max: num(4)?,
            d_avg: num(5)?,
            predicted: parse_polarity(path, line, "predicted", get(7))?,
            truth: parse_polarity(path, line, "truth", get(8))?,
            correct: parse_flag(path, line, "correct", get(9))?,
            tie: parse_flag(path, line, "tie", get(10))?,
        });
    }
    Ok(out)
}

/// One keyword phrase per line; blank lines and `#` comments skipped.
pub fn read_keywords(path: &Path) -> CliResult<Vec<String>> {
    Ok(read_exclusions(path)?.into_iter().collect())
}
