use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use gapband_core::corruption::RetentionMask;
use gapband_core::{Dataset, Trial};

use crate::config::Provenance;
use crate::error::FormatError;

const KEY_COLUMNS: [&str; 5] = ["subject", "session", "trial", "label", "time_s"];

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> FormatError + '_ {
    move |source| FormatError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn parse_err(path: &Path, line: u64, message: impl Into<String>) -> FormatError {
    FormatError::Parse {
        path: path.display().to_string(),
        line,
        message: message.into(),
    }
}

/// Writes `contents` to `path`, creating parent directories.
pub fn write_file(path: &Path, contents: &[u8]) -> Result<(), FormatError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(io_err(path))?;
    }
    std::fs::write(path, contents).map_err(io_err(path))
}

/// Builds a CSV document: metadata comment, header, rows.
pub struct CsvDoc {
    writer: csv::Writer<Vec<u8>>,
}

impl CsvDoc {
    pub fn new(comment: &str, header: &[String]) -> Self {
        let mut buf = Vec::new();
        writeln!(buf, "{comment}").unwrap();
        let mut writer = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(buf);
        writer.write_record(header).unwrap();
        Self { writer }
    }

    pub fn row(&mut self, fields: &[String]) {
        self.writer.write_record(fields).unwrap();
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.writer.into_inner().expect("in-memory writer")
    }
}

pub fn strings<const N: usize>(fields: [&str; N]) -> Vec<String> {
    fields.iter().map(|s| s.to_string()).collect()
}

/// `key=value` pairs from a metadata comment line.
pub fn parse_metadata(line: &str) -> HashMap<String, String> {
    line.split_whitespace()
        .filter_map(|tok| tok.split_once('='))
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect()
}

/// Metadata, header, and data rows tagged with their line numbers.
pub type CsvTable = (HashMap<String, String>, Vec<String>, Vec<(u64, Vec<String>)>);

/// Reads a comment-prefixed CSV. Returns the metadata from leading
/// comment lines, the header and the data rows with their 1-based line
/// numbers.
pub fn read_csv(path: &Path) -> Result<CsvTable, FormatError> {
    let mut meta = HashMap::new();
    let file = File::open(path).map_err(io_err(path))?;
    for line in BufReader::new(file).lines() {
        let line = line.map_err(io_err(path))?;
        match line.trim_start().strip_prefix('#') {
            Some(rest) => meta.extend(parse_metadata(rest)),
            None if line.trim().is_empty() => continue,
            None => break,
        }
    }

    let file = File::open(path).map_err(io_err(path))?;
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(file);
    let mut header: Option<Vec<String>> = None;
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, csv::Position::line);
            match e.into_kind() {
                csv::ErrorKind::Io(source) => FormatError::Io {
                    path: path.display().to_string(),
                    source,
                },
                csv::ErrorKind::UnequalLengths { expected_len, len, .. } => {
                    parse_err(path, line, format!("expected {expected_len} fields, found {len}"))
                }
                other => parse_err(path, line, format!("{other:?}")),
            }
        })?;
        let line = record.position().map_or(0, csv::Position::line);
        let fields: Vec<String> = record.iter().map(str::to_string).collect();
        if header.is_none() {
            header = Some(fields);
        } else {
            rows.push((line, fields));
        }
    }
    let header = header.ok_or_else(|| parse_err(path, 1, "no header row"))?;
    Ok((meta, header, rows))
}

fn parse_field<T: std::str::FromStr>(path: &Path, line: u64, column: &str, raw: &str) -> Result<T, FormatError> {
    raw.parse()
        .map_err(|_| parse_err(path, line, format!("column {column}: cannot parse {raw:?}")))
}

fn require_columns(path: &Path, header: &[String], required: &[String]) -> Result<Vec<usize>, FormatError> {
    let missing: Vec<String> = required.iter().filter(|c| !header.contains(c)).cloned().collect();
    if !missing.is_empty() {
        return Err(FormatError::Schema {
            path: path.display().to_string(),
            missing,
        });
    }
    Ok(required
        .iter()
        .map(|c| header.iter().position(|h| h == c).unwrap())
        .collect())
}

fn channel_columns(header: &[String]) -> Vec<String> {
    let count = header
        .iter()
        .filter(|h| h.starts_with("ch") && h[2..].parse::<usize>().is_ok())
        .count();
    (1..=count.max(1)).map(|c| format!("ch{c}")).collect()
}

/// Writes a dataset as one row per retained sampling instant.
pub fn save_dataset(dataset: &Dataset, path: &Path, provenance: &Provenance) -> Result<(), FormatError> {
    let channels = dataset.channel_count().unwrap_or(0);
    let (rate, duration) = dataset
        .trials
        .first()
        .map_or((0.0, 0.0), |t| (t.sample_rate(), t.nominal_duration()));
    let mut header = strings(KEY_COLUMNS);
    header.extend((1..=channels).map(|c| format!("ch{c}")));
    let comment = provenance.comment(&[("sample_rate", rate.to_string()), ("duration", duration.to_string())]);
    let mut doc = CsvDoc::new(&comment, &header);
    for t in &dataset.trials {
        for (i, time) in t.times().iter().enumerate() {
            let mut row = vec![
                t.subject.to_string(),
                t.session.to_string(),
                t.trial.to_string(),
                t.label.to_string(),
                time.to_string(),
            ];
            row.extend(t.channels().iter().map(|c| c[i].to_string()));
            doc.row(&row);
        }
    }
    write_file(path, &doc.into_bytes())
}

struct PendingTrial {
    key: (u32, u32, u32),
    label: usize,
    first_line: u64,
    times: Vec<f64>,
    channels: Vec<Vec<f64>>,
}

/// Reads a dataset CSV. Sampling rate and nominal duration come from the
/// metadata line when present; otherwise the rate is the inverse of the
/// smallest time step and the duration is the longest trial rounded up to
/// a whole sample.
pub fn load_dataset(path: &Path) -> Result<Dataset, FormatError> {
    let (meta, header, rows) = read_csv(path)?;
    let mut required = strings(KEY_COLUMNS);
    let channel_names = channel_columns(&header);
    required.extend(channel_names.iter().cloned());
    let idx = require_columns(path, &header, &required)?;

    let mut pending: Vec<PendingTrial> = Vec::new();
    let mut seen: HashMap<(u32, u32, u32), usize> = HashMap::new();
    for (line, fields) in &rows {
        let line = *line;
        let get = |k: usize| fields[idx[k]].as_str();
        let key = (
            parse_field(path, line, "subject", get(0))?,
            parse_field(path, line, "session", get(1))?,
            parse_field(path, line, "trial", get(2))?,
        );
        let label: usize = parse_field(path, line, "label", get(3))?;
        let time: f64 = parse_field(path, line, "time_s", get(4))?;
        let values = (0..channel_names.len())
            .map(|c| parse_field::<f64>(path, line, &channel_names[c], get(5 + c)))
            .collect::<Result<Vec<_>, _>>()?;
        let continuing = pending.last().is_some_and(|p| p.key == key);
        if !continuing {
            if seen.contains_key(&key) {
                return Err(parse_err(
                    path,
                    line,
                    format!("rows of trial {key:?} are not contiguous"),
                ));
            }
            seen.insert(key, pending.len());
            pending.push(PendingTrial {
                key,
                label,
                first_line: line,
                times: Vec::new(),
                channels: vec![Vec::new(); channel_names.len()],
            });
        }
        let current = pending.last_mut().unwrap();
        if current.label != label {
            return Err(parse_err(path, line, format!("label changes within trial {key:?}")));
        }
        if let Some(&prev) = current.times.last() {
            if time.is_nan() || time <= prev {
                return Err(parse_err(
                    path,
                    line,
                    format!("row {line}: time {time} does not increase after {prev}"),
                ));
            }
        }
        current.times.push(time);
        for (c, v) in values.into_iter().enumerate() {
            current.channels[c].push(v);
        }
    }
    if pending.is_empty() {
        return Err(parse_err(path, 2, "no data rows"));
    }

    let meta_f64 = |k: &str| -> Result<Option<f64>, FormatError> {
        meta.get(k).map(|v| parse_field::<f64>(path, 1, k, v)).transpose()
    };
    let rate = match meta_f64("sample_rate")? {
        Some(r) => r,
        None => {
            let step = pending
                .iter()
                .flat_map(|p| p.times.windows(2).map(|w| w[1] - w[0]))
                .fold(f64::INFINITY, f64::min);
            if !step.is_finite() {
                return Err(parse_err(
                    path,
                    1,
                    "cannot infer sample_rate; add it to the metadata line",
                ));
            }
            1.0 / step
        }
    };
    let duration = match meta_f64("duration")? {
        Some(d) => d,
        None => {
            let last = pending
                .iter()
                .filter_map(|p| p.times.last())
                .fold(0.0f64, |a, &b| a.max(b));
            ((last * rate).round() + 1.0) / rate
        }
    };
    let trials = pending
        .into_iter()
        .map(|p| {
            Trial::new(p.key.0, p.key.1, p.key.2, p.label, rate, duration, p.times, p.channels)
                .map_err(|e| parse_err(path, p.first_line, e.to_string()))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Dataset::new(trials))
}

/// One labelled feature row with its origin.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRow {
    pub subject: u32,
    pub session: u32,
    pub trial: u32,
    pub segment: usize,
    pub label: usize,
    pub values: Vec<f64>,
}

pub fn feature_header(dim: usize, bands: usize) -> Vec<String> {
    let mut header = strings(["subject", "session", "trial", "segment", "label"]);
    header.extend((0..dim).map(|i| format!("ch{}_b{}", i / bands + 1, i % bands + 1)));
    header
}

pub fn features_csv(rows: &[FeatureRow], bands: usize, comment: &str) -> Vec<u8> {
    let dim = rows.first().map_or(0, |r| r.values.len());
    let mut doc = CsvDoc::new(comment, &feature_header(dim, bands));
    for r in rows {
        let mut fields = vec![
            r.subject.to_string(),
            r.session.to_string(),
            r.trial.to_string(),
            r.segment.to_string(),
            r.label.to_string(),
        ];
        fields.extend(r.values.iter().map(f64::to_string));
        doc.row(&fields);
    }
    doc.into_bytes()
}

pub fn load_features(path: &Path) -> Result<Vec<FeatureRow>, FormatError> {
    let (_, header, rows) = read_csv(path)?;
    let keys = strings(["subject", "session", "trial", "segment", "label"]);
    let idx = require_columns(path, &header, &keys)?;
    let value_cols: Vec<usize> = (0..header.len()).filter(|i| !idx.contains(i)).collect();
    if value_cols.is_empty() {
        return Err(FormatError::Schema {
            path: path.display().to_string(),
            missing: vec!["feature columns".into()],
        });
    }
    rows.iter()
        .map(|(line, f)| {
            Ok(FeatureRow {
                subject: parse_field(path, *line, "subject", &f[idx[0]])?,
                session: parse_field(path, *line, "session", &f[idx[1]])?,
                trial: parse_field(path, *line, "trial", &f[idx[2]])?,
                segment: parse_field(path, *line, "segment", &f[idx[3]])?,
                label: parse_field(path, *line, "label", &f[idx[4]])?,
                values: value_cols
                    .iter()
                    .map(|&c| parse_field(path, *line, &header[c], &f[c]))
                    .collect::<Result<_, _>>()?,
            })
        })
        .collect()
}

/// Run-length text form of a mask: `keep:a drop:b …`.
pub fn mask_to_rle(mask: &RetentionMask) -> String {
    mask.runs()
        .into_iter()
        .map(|(kept, len)| format!("{}:{len}", if kept { "keep" } else { "drop" }))
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn mask_from_rle(text: &str) -> Result<RetentionMask, String> {
    let mut kept = Vec::new();
    for token in text.split_whitespace() {
        let (kind, len) = token.split_once(':').ok_or_else(|| format!("bad run {token:?}"))?;
        let len: usize = len.parse().map_err(|_| format!("bad run length in {token:?}"))?;
        let flag = match kind {
            "keep" => true,
            "drop" => false,
            _ => return Err(format!("bad run kind in {token:?}")),
        };
        kept.extend(std::iter::repeat_n(flag, len));
    }
    Ok(RetentionMask::from_kept(kept))
}
