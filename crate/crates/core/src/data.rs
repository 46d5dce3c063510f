//! Datasets and their on-disk formats.
//!
//! Three inputs are understood:
//!
//! * dense CSV with a mandatory `label,f1,..,fd` header,
//! * sparse lines `<label> <fid>:<value> ...` with 1-based ascending ids,
//! * raw text corpora (a `label<TAB>text` file, or a directory with one
//!   sub-directory of documents per class), which are tokenized, pruned to
//!   a vocabulary and turned into normalized term-frequency rows.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{MemdError, Result};

/// Class names indexed by class id.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct LabelMap {
    names: Vec<String>,
    #[serde(skip)]
    index: HashMap<String, usize>,
}

impl LabelMap {
    pub fn new(names: Vec<String>) -> Result<Self> {
        let mut index = HashMap::with_capacity(names.len());
        for (i, name) in names.iter().enumerate() {
            if index.insert(name.clone(), i).is_some() {
                return Err(MemdError::InvalidConfig(format!(
                    "duplicate label {name:?}"
                )));
            }
        }
        Ok(LabelMap { names, index })
    }

    /// Id for `name`, assigning the next id on first sight.
    pub fn intern(&mut self, name: &str) -> usize {
        if let Some(&id) = self.index.get(name) {
            return id;
        }
        let id = self.names.len();
        self.names.push(name.to_string());
        self.index.insert(name.to_string(), id);
        id
    }

    pub fn id(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn name(&self, id: usize) -> &str {
        &self.names[id]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }
}

impl TryFrom<Vec<String>> for LabelMap {
    type Error = MemdError;

    fn try_from(names: Vec<String>) -> Result<Self> {
        Self::new(names)
    }
}

impl From<LabelMap> for Vec<String> {
    fn from(map: LabelMap) -> Self {
        map.names
    }
}

/// Read access to one instance's feature values.
pub trait Features {
    fn value(&self, feature: usize) -> f64;
}

impl Features for [f64] {
    fn value(&self, feature: usize) -> f64 {
        self.get(feature).copied().unwrap_or(0.0)
    }
}

impl Features for Vec<f64> {
    fn value(&self, feature: usize) -> f64 {
        self.as_slice().value(feature)
    }
}

/// Non-zero entries of a row, indices strictly ascending.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SparseRow {
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseRow {
    pub fn new(indices: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        if indices.len() != values.len() {
            return Err(MemdError::InvalidConfig(
                "sparse row index/value length mismatch".into(),
            ));
        }
        if indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(MemdError::InvalidConfig(
                "sparse row indices must be strictly ascending".into(),
            ));
        }
        Ok(SparseRow { indices, values })
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.indices
            .iter()
            .copied()
            .zip(self.values.iter().copied())
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }
}

impl Features for SparseRow {
    fn value(&self, feature: usize) -> f64 {
        match self.indices.binary_search(&feature) {
            Ok(pos) => self.values[pos],
            Err(_) => 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Row {
    Dense(Vec<f64>),
    Sparse(SparseRow),
}

impl Row {
    /// Stored entries as `(feature, value)`; dense rows yield every feature.
    pub fn entries(&self) -> Box<dyn Iterator<Item = (usize, f64)> + '_> {
        match self {
            Row::Dense(v) => Box::new(v.iter().copied().enumerate()),
            Row::Sparse(s) => Box::new(s.iter()),
        }
    }

    pub fn to_dense(&self, dim: usize) -> Vec<f64> {
        match self {
            Row::Dense(v) => v.clone(),
            Row::Sparse(s) => {
                let mut out = vec![0.0; dim];
                for (i, v) in s.iter() {
                    if i < dim {
                        out[i] = v;
                    }
                }
                out
            }
        }
    }
}

impl Features for Row {
    fn value(&self, feature: usize) -> f64 {
        match self {
            Row::Dense(v) => v.value(feature),
            Row::Sparse(s) => s.value(feature),
        }
    }
}

/// Labelled instances with a fixed feature dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    rows: Vec<Row>,
    labels: Vec<usize>,
    dim: usize,
    label_map: LabelMap,
    feature_names: Vec<String>,
}

impl Dataset {
    pub fn new(
        rows: Vec<Row>,
        labels: Vec<usize>,
        dim: usize,
        label_map: LabelMap,
        feature_names: Option<Vec<String>>,
    ) -> Result<Self> {
        if rows.len() != labels.len() {
            return Err(MemdError::InvalidConfig(format!(
                "{} rows but {} labels",
                rows.len(),
                labels.len()
            )));
        }
        for (i, (row, &label)) in rows.iter().zip(&labels).enumerate() {
            if label >= label_map.len() {
                return Err(MemdError::InvalidConfig(format!(
                    "instance {i} has label id {label} but only {} classes",
                    label_map.len()
                )));
            }
            let in_range = match row {
                Row::Dense(v) => v.len() == dim,
                Row::Sparse(s) => s.indices.last().is_none_or(|&last| last < dim),
            };
            if !in_range {
                return Err(MemdError::InvalidConfig(format!(
                    "instance {i} does not fit {dim} features"
                )));
            }
            if row.entries().any(|(_, v)| !v.is_finite()) {
                return Err(MemdError::InvalidConfig(format!(
                    "instance {i} has a non-finite feature value"
                )));
            }
        }
        let feature_names = match feature_names {
            Some(names) if names.len() == dim => names,
            Some(names) => {
                return Err(MemdError::InvalidConfig(format!(
                    "{} feature names for {dim} features",
                    names.len()
                )))
            }
            None => (1..=dim).map(|i| i.to_string()).collect(),
        };
        Ok(Dataset {
            rows,
            labels,
            dim,
            label_map,
            feature_names,
        })
    }

    /// Dense dataset from plain vectors, labels already as ids.
    pub fn from_dense(
        rows: Vec<Vec<f64>>,
        labels: Vec<usize>,
        label_map: LabelMap,
    ) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        Self::new(
            rows.into_iter().map(Row::Dense).collect(),
            labels,
            dim,
            label_map,
            None,
        )
    }

    pub fn rows(&self) -> &[Row] {
        &self.rows
    }

    pub fn row(&self, i: usize) -> &Row {
        &self.rows[i]
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn num_classes(&self) -> usize {
        self.label_map.len()
    }

    pub fn label_map(&self) -> &LabelMap {
        &self.label_map
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.num_classes()];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    /// Instances at `indices`, in that order. Dimension and label map are kept.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            dim: self.dim,
            label_map: self.label_map.clone(),
            feature_names: self.feature_names.clone(),
        }
    }

    /// Same instances with labels replaced (ids into the existing label map).
    pub fn with_labels(&self, labels: Vec<usize>) -> Result<Dataset> {
        Dataset::new(
            self.rows.clone(),
            labels,
            self.dim,
            self.label_map.clone(),
            Some(self.feature_names.clone()),
        )
    }
}

/// Tokens of one document, lowercase and non-empty.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Document {
    pub tokens: Vec<String>,
}

/// Lowercases and splits on anything that is not alphanumeric.
pub fn tokenize(raw: &str) -> Document {
    Document {
        tokens: raw
            .split(|c: char| !c.is_alphanumeric())
            .filter(|t| !t.is_empty())
            .map(str::to_lowercase)
            .collect(),
    }
}

/// Retained words with lexicographically assigned feature ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    words: Vec<String>,
    index: HashMap<String, usize>,
}

impl Vocabulary {
    pub fn from_words(words: Vec<String>) -> Result<Self> {
        if words.is_empty() {
            return Err(MemdError::EmptyVocabulary);
        }
        let mut sorted = words;
        sorted.sort();
        sorted.dedup();
        let index = sorted
            .iter()
            .enumerate()
            .map(|(i, w)| (w.clone(), i))
            .collect();
        Ok(Vocabulary {
            words: sorted,
            index,
        })
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn id(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

/// Keeps words occurring at least `gamma` times in the whole corpus that
/// are not stop words.
pub fn build_vocabulary(
    docs: &[Document],
    stopwords: &HashSet<String>,
    gamma: usize,
) -> Result<Vocabulary> {
    if gamma == 0 {
        return Err(MemdError::InvalidConfig("gamma must be at least 1".into()));
    }
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for doc in docs {
        for token in &doc.tokens {
            *counts.entry(token.as_str()).or_default() += 1;
        }
    }
    let words: Vec<String> = counts
        .into_iter()
        .filter(|(w, c)| *c >= gamma && !stopwords.contains(*w))
        .map(|(w, _)| w.to_string())
        .collect();
    Vocabulary::from_words(words)
}

/// Normalized term frequencies of one document.
#[derive(Debug, Clone, PartialEq)]
pub struct TfRow {
    pub row: SparseRow,
    /// No in-vocabulary token: the row is all zeros.
    pub flagged: bool,
}

/// `W_i = N(w_i, D) / Σ_k N(w_k, D)`, counts restricted to the vocabulary.
pub fn tf_weights(doc: &Document, vocab: &Vocabulary) -> TfRow {
    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    for token in &doc.tokens {
        if let Some(id) = vocab.id(token) {
            *counts.entry(id).or_default() += 1;
        }
    }
    let total: usize = counts.values().sum();
    if total == 0 {
        return TfRow {
            row: SparseRow::default(),
            flagged: true,
        };
    }
    let (indices, values) = counts
        .into_iter()
        .map(|(id, c)| (id, c as f64 / total as f64))
        .unzip();
    TfRow {
        row: SparseRow { indices, values },
        flagged: false,
    }
}

/// Tokenized documents with class labels, before vectorization.
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    pub docs: Vec<Document>,
    pub labels: Vec<usize>,
    pub label_map: LabelMap,
}

impl Corpus {
    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    pub fn subset(&self, indices: &[usize]) -> Corpus {
        Corpus {
            docs: indices.iter().map(|&i| self.docs[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            label_map: self.label_map.clone(),
        }
    }

    /// Term-frequency rows over `vocab`. The second value counts documents
    /// left with no in-vocabulary token.
    pub fn vectorize(&self, vocab: &Vocabulary) -> Result<(Dataset, usize)> {
        let mut flagged = 0;
        let rows = self
            .docs
            .iter()
            .map(|doc| {
                let tf = tf_weights(doc, vocab);
                flagged += usize::from(tf.flagged);
                Row::Sparse(tf.row)
            })
            .collect();
        let data = Dataset::new(
            rows,
            self.labels.clone(),
            vocab.len(),
            self.label_map.clone(),
            Some(vocab.words().to_vec()),
        )?;
        Ok((data, flagged))
    }
}

/// Reads a corpus: a directory of per-class sub-directories, or a
/// `label<TAB>text` file with one document per line.
pub fn load_corpus(path: &Path) -> Result<Corpus> {
    if path.is_dir() {
        load_corpus_dir(path)
    } else {
        load_corpus_tsv(path)
    }
}

fn load_corpus_dir(path: &Path) -> Result<Corpus> {
    let mut classes: Vec<_> = fs::read_dir(path)?
        .filter_map(|e| e.ok())
        .filter(|e| e.path().is_dir())
        .collect();
    classes.sort_by_key(|e| e.file_name());
    let mut label_map = LabelMap::default();
    let mut docs = Vec::new();
    let mut labels = Vec::new();
    for class in classes {
        let label = label_map.intern(&class.file_name().to_string_lossy());
        let mut files: Vec<_> = fs::read_dir(class.path())?
            .filter_map(|e| e.ok())
            .filter(|e| e.path().is_file())
            .collect();
        files.sort_by_key(|e| e.file_name());
        for file in files {
            let bytes = fs::read(file.path())?;
            docs.push(tokenize(&String::from_utf8_lossy(&bytes)));
            labels.push(label);
        }
    }
    Ok(Corpus {
        docs,
        labels,
        label_map,
    })
}

fn load_corpus_tsv(path: &Path) -> Result<Corpus> {
    let reader = BufReader::new(fs::File::open(path)?);
    let mut label_map = LabelMap::default();
    let mut docs = Vec::new();
    let mut labels = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let (label, text) = line
            .split_once('\t')
            .ok_or_else(|| MemdError::parse(i + 1, "expected `label<TAB>text`"))?;
        let label = label.trim();
        if label.is_empty() {
            return Err(MemdError::parse(i + 1, "empty label"));
        }
        labels.push(label_map.intern(label));
        docs.push(tokenize(text));
    }
    Ok(Corpus {
        docs,
        labels,
        label_map,
    })
}

/// One stop word per line, lowercased; blank lines ignored.
pub fn load_stopwords(path: &Path) -> Result<HashSet<String>> {
    let text = fs::read_to_string(path)?;
    Ok(text
        .lines()
        .map(|l| l.trim().to_lowercase())
        .filter(|l| !l.is_empty())
        .collect())
}

/// Dense CSV with header `label,f1,..,fd`; labels get ids in order of first
/// appearance.
pub fn load_dense_csv(path: &Path) -> Result<Dataset> {
    let file = fs::File::open(path)?;
    read_dense_csv(file)
}

pub fn read_dense_csv(input: impl std::io::Read) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(input);
    let mut records = reader.records();
    let header = match records.next() {
        Some(record) => record.map_err(|e| csv_error(e, 1))?,
        None => return Err(MemdError::parse(1, "missing header row")),
    };
    if header.get(0).map(str::trim) != Some("label") {
        return Err(MemdError::parse(1, "header must start with `label`"));
    }
    let feature_names: Vec<String> = header
        .iter()
        .skip(1)
        .map(|s| s.trim().to_string())
        .collect();
    let dim = feature_names.len();
    let mut label_map = LabelMap::default();
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for record in records {
        let record = record.map_err(|e| csv_error(e, 0))?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.len() == 1 && record.get(0).is_some_and(|s| s.trim().is_empty()) {
            continue;
        }
        if record.len() != dim + 1 {
            return Err(MemdError::parse(
                line,
                format!("expected {} fields, found {}", dim + 1, record.len()),
            ));
        }
        let label = record[0].trim();
        if label.is_empty() {
            return Err(MemdError::parse(line, "empty label"));
        }
        let mut values = Vec::with_capacity(dim);
        for (j, cell) in record.iter().skip(1).enumerate() {
            let v: f64 = cell.trim().parse().map_err(|_| {
                MemdError::parse(line, format!("column {}: `{cell}` is not a number", j + 2))
            })?;
            if !v.is_finite() {
                return Err(MemdError::parse(
                    line,
                    format!("column {}: non-finite value `{cell}`", j + 2),
                ));
            }
            values.push(v);
        }
        labels.push(label_map.intern(label));
        rows.push(Row::Dense(values));
    }
    Dataset::new(rows, labels, dim, label_map, Some(feature_names))
}

fn csv_error(err: csv::Error, fallback_line: usize) -> MemdError {
    let line = err.position().map_or(fallback_line, |p| p.line() as usize);
    MemdError::parse(line, err.to_string())
}

pub fn write_dense_csv(data: &Dataset, path: &Path) -> Result<()> {
    let mut writer = csv::Writer::from_path(path).map_err(|e| csv_error(e, 0))?;
    let mut header = vec!["label".to_string()];
    header.extend(data.feature_names().iter().cloned());
    writer.write_record(&header).map_err(|e| csv_error(e, 0))?;
    for (row, &label) in data.rows().iter().zip(data.labels()) {
        let mut record = vec![data.label_map().name(label).to_string()];
        record.extend(row.to_dense(data.dim()).iter().map(f64::to_string));
        writer.write_record(&record).map_err(|e| csv_error(e, 0))?;
    }
    writer.flush()?;
    Ok(())
}

/// Sparse `<label> <fid>:<value> ...` lines; dimension is the largest id.
pub fn load_sparse(path: &Path) -> Result<Dataset> {
    load_sparse_with_dim(path, 0)
}

/// [`load_sparse`] with the dimension raised to at least `min_dim`.
pub fn load_sparse_with_dim(path: &Path, min_dim: usize) -> Result<Dataset> {
    let file = fs::File::open(path)?;
    read_sparse(BufReader::new(file), min_dim)
}

pub fn read_sparse(input: impl BufRead, min_dim: usize) -> Result<Dataset> {
    let mut label_map = LabelMap::default();
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    let mut dim = min_dim;
    for (i, line) in input.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        let mut parts = line.split_whitespace();
        let Some(label) = parts.next() else {
            continue;
        };
        let mut indices = Vec::new();
        let mut values = Vec::new();
        for pair in parts {
            let (fid, value) = pair
                .split_once(':')
                .ok_or_else(|| MemdError::parse(line_no, format!("malformed pair `{pair}`")))?;
            let fid: usize = fid
                .parse()
                .map_err(|_| MemdError::parse(line_no, format!("bad feature id in `{pair}`")))?;
            if fid == 0 {
                return Err(MemdError::parse(line_no, "feature ids are 1-based"));
            }
            let value: f64 = value
                .parse()
                .map_err(|_| MemdError::parse(line_no, format!("bad value in `{pair}`")))?;
            if !value.is_finite() {
                return Err(MemdError::parse(
                    line_no,
                    format!("non-finite value in `{pair}`"),
                ));
            }
            if indices.last().is_some_and(|&last| last >= fid - 1) {
                return Err(MemdError::parse(
                    line_no,
                    format!("feature id {fid} is not strictly ascending"),
                ));
            }
            indices.push(fid - 1);
            values.push(value);
        }
        if let Some(&last) = indices.last() {
            dim = dim.max(last + 1);
        }
        labels.push(label_map.intern(label));
        rows.push(Row::Sparse(SparseRow { indices, values }));
    }
    Dataset::new(rows, labels, dim, label_map, None)
}

pub fn write_sparse(data: &Dataset, path: &Path) -> Result<()> {
    let mut out = BufWriter::new(fs::File::create(path)?);
    for (row, &label) in data.rows().iter().zip(data.labels()) {
        write!(out, "{}", data.label_map().name(label))?;
        for (i, v) in row.entries() {
            if v != 0.0 {
                write!(out, " {}:{}", i + 1, v)?;
            }
        }
        writeln!(out)?;
    }
    out.flush()?;
    Ok(())
}
