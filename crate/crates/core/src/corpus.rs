//! Labeled datasets: ingestion, validation, stratified subsetting, and the
//! augmented-example JSONL format.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::seq::index;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::RngStream;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("line {line}: {reason}")]
    Schema { line: usize, reason: String },
    #[error("line {line}: invalid UTF-8")]
    Encoding { line: usize },
    #[error("missing column {0:?}")]
    MissingColumn(String),
    #[error("requested subset of {requested} from a dataset of {available}")]
    SubsetTooLarge { requested: usize, available: usize },
    #[error("invalid dataset: {0}")]
    Invalid(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

impl CorpusError {
    fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    /// The 1-based line number for schema errors.
    pub fn line(&self) -> Option<usize> {
        match self {
            Self::Schema { line, .. } | Self::Encoding { line } => Some(*line),
            _ => None,
        }
    }
}

/// A labeled text record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Example {
    pub id: u64,
    pub text: String,
    pub label: String,
}

/// A validated, non-empty collection of labeled examples with unique ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dataset {
    name: String,
    examples: Vec<Example>,
    label_set: BTreeSet<String>,
}

impl Dataset {
    /// Validates and builds a dataset. The label set is the set of labels
    /// observed.
    pub fn new(name: impl Into<String>, examples: Vec<Example>) -> Result<Self, CorpusError> {
        let label_set = examples.iter().map(|e| e.label.clone()).collect();
        Self::with_labels(name, examples, label_set)
    }

    /// Builds a dataset against a declared label set, which may include
    /// labels with no examples (subsets of a larger corpus).
    pub fn with_labels(
        name: impl Into<String>,
        examples: Vec<Example>,
        label_set: BTreeSet<String>,
    ) -> Result<Self, CorpusError> {
        if examples.is_empty() {
            return Err(CorpusError::EmptyDataset);
        }
        let mut ids = HashSet::with_capacity(examples.len());
        for e in &examples {
            if e.text.trim().is_empty() {
                return Err(CorpusError::Invalid(format!("example {} has blank text", e.id)));
            }
            if !ids.insert(e.id) {
                return Err(CorpusError::Invalid(format!("duplicate id {}", e.id)));
            }
            if !label_set.contains(&e.label) {
                return Err(CorpusError::Invalid(format!(
                    "example {} has label {:?} outside the label set",
                    e.id, e.label
                )));
            }
        }
        Ok(Self {
            name: name.into(),
            examples,
            label_set,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Classification needs at least two classes. Loading does not enforce
    /// this so that single-label files can still be inspected and augmented.
    pub fn ensure_multiclass(&self) -> Result<(), CorpusError> {
        if self.label_set.len() < 2 {
            return Err(CorpusError::Invalid(format!(
                "dataset {:?} needs at least 2 labels, found {}",
                self.name,
                self.label_set.len()
            )));
        }
        Ok(())
    }

    pub fn examples(&self) -> &[Example] {
        &self.examples
    }

    pub fn label_set(&self) -> &BTreeSet<String> {
        &self.label_set
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub fn get(&self, id: u64) -> Option<&Example> {
        self.examples.iter().find(|e| e.id == id)
    }

    /// Examples whose ids are not in `exclude`, keeping this dataset's label
    /// set.
    pub fn without(&self, exclude: &HashSet<u64>) -> Result<Self, CorpusError> {
        let rest = self
            .examples
            .iter()
            .filter(|e| !exclude.contains(&e.id))
            .cloned()
            .collect();
        Self::with_labels(self.name.clone(), rest, self.label_set.clone())
    }
}

/// Tag identifying how an augmented example was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Iterative mask fill.
    Imf,
    /// Random insertion of a synonym.
    Ri,
    /// Random swap.
    Rs,
    /// Random deletion.
    Rd,
    /// Synonym replacement.
    Sr,
    /// Back translation.
    Bt,
    /// Non-iterative masked-LM replacement.
    Br,
    /// Real held-out data rather than an augmentation.
    Real,
}

impl Method {
    pub const AUGMENTERS: [Method; 7] = [
        Method::Ri,
        Method::Rs,
        Method::Rd,
        Method::Sr,
        Method::Bt,
        Method::Br,
        Method::Imf,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Imf => "imf",
            Method::Ri => "ri",
            Method::Rs => "rs",
            Method::Rd => "rd",
            Method::Sr => "sr",
            Method::Bt => "bt",
            Method::Br => "br",
            Method::Real => "real",
        }
    }

    pub fn needs_mlm(self) -> bool {
        matches!(self, Method::Imf | Method::Br)
    }

    pub fn needs_translator(self) -> bool {
        matches!(self, Method::Bt)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown method {0:?} (expected one of imf, ri, rs, rd, sr, bt, br, real)")]
pub struct UnknownMethod(pub String);

impl FromStr for Method {
    type Err = UnknownMethod;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "imf" => Method::Imf,
            "ri" => Method::Ri,
            "rs" => Method::Rs,
            "rd" => Method::Rd,
            "sr" => Method::Sr,
            "bt" => Method::Bt,
            "br" => Method::Br,
            "real" => Method::Real,
            other => return Err(UnknownMethod(other.to_string())),
        })
    }
}

/// An augmented text pointing back at its source example.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentedExample {
    pub orig_id: u64,
    pub method: Method,
    pub text: String,
    pub label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub loss: Option<f64>,
}

#[derive(Deserialize)]
struct JsonRecord {
    text: String,
    label: String,
}

fn split_lines(path: &Path) -> Result<Vec<(usize, String)>, CorpusError> {
    let mut raw = Vec::new();
    File::open(path)
        .and_then(|mut f| f.read_to_end(&mut raw))
        .map_err(|e| CorpusError::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in raw.split(|&b| b == b'\n').enumerate() {
        let line_no = i + 1;
        let line = std::str::from_utf8(line).map_err(|_| CorpusError::Encoding { line: line_no })?;
        let line = line.strip_suffix('\r').unwrap_or(line);
        if !line.trim().is_empty() {
            out.push((line_no, line.to_string()));
        }
    }
    Ok(out)
}

/// Reads a dataset from JSONL, one `{"text": .., "label": ..}` object per
/// line. Ids follow line order among non-blank lines.
pub fn load_jsonl(path: impl AsRef<Path>) -> Result<Dataset, CorpusError> {
    let path = path.as_ref();
    let mut examples = Vec::new();
    for (line, content) in split_lines(path)? {
        let record: JsonRecord = serde_json::from_str(&content).map_err(|e| CorpusError::Schema {
            line,
            reason: e.to_string(),
        })?;
        if record.text.trim().is_empty() {
            return Err(CorpusError::Schema {
                line,
                reason: "blank \"text\"".into(),
            });
        }
        examples.push(Example {
            id: examples.len() as u64,
            text: record.text,
            label: record.label,
        });
    }
    if examples.is_empty() {
        return Err(CorpusError::EmptyDataset);
    }
    Dataset::new(dataset_name(path), examples)
}

/// Reads a dataset from RFC 4180 CSV with a header row.
pub fn load_csv(path: impl AsRef<Path>, text_column: &str, label_column: &str) -> Result<Dataset, CorpusError> {
    let path = path.as_ref();
    let csv_err = |source| CorpusError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(csv_err)?;
    let headers = reader.byte_headers().map_err(csv_err)?.clone();
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h == name.as_bytes())
            .ok_or_else(|| CorpusError::MissingColumn(name.to_string()))
    };
    let text_idx = column(text_column)?;
    let label_idx = column(label_column)?;

    let mut examples = Vec::new();
    for record in reader.byte_records() {
        let record = record.map_err(csv_err)?;
        // header is line 1
        let line = record.position().map_or(0, |p| p.line() as usize);
        let field = |idx: usize, name: &str| -> Result<String, CorpusError> {
            let bytes = record.get(idx).ok_or_else(|| CorpusError::Schema {
                line,
                reason: format!("missing field {name:?}"),
            })?;
            String::from_utf8(bytes.to_vec()).map_err(|_| CorpusError::Encoding { line })
        };
        let text = field(text_idx, text_column)?;
        let label = field(label_idx, label_column)?;
        if text.trim().is_empty() {
            return Err(CorpusError::Schema {
                line,
                reason: "blank text".into(),
            });
        }
        examples.push(Example {
            id: examples.len() as u64,
            text,
            label,
        });
    }
    if examples.is_empty() {
        return Err(CorpusError::EmptyDataset);
    }
    Dataset::new(dataset_name(path), examples)
}

/// Loads JSONL or CSV depending on the file extension.
pub fn load_dataset(path: impl AsRef<Path>, text_column: &str, label_column: &str) -> Result<Dataset, CorpusError> {
    let path = path.as_ref();
    match path.extension().and_then(|e| e.to_str()) {
        Some(ext) if ext.eq_ignore_ascii_case("csv") => load_csv(path, text_column, label_column),
        _ => load_jsonl(path),
    }
}

fn dataset_name(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".into())
}

/// Writes a dataset as JSONL (`text`, `label`).
pub fn save_jsonl(path: impl AsRef<Path>, dataset: &Dataset) -> Result<(), CorpusError> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| CorpusError::io(path, e))?;
    let mut w = BufWriter::new(file);
    for e in dataset.examples() {
        let line = serde_json::json!({ "text": e.text, "label": e.label });
        writeln!(w, "{line}").map_err(|e| CorpusError::io(path, e))?;
    }
    w.flush().map_err(|e| CorpusError::io(path, e))
}

/// Stratified sample of `n` examples without replacement.
///
/// Per-label quotas are proportional to label frequency with largest-remainder
/// rounding (remainder ties go to the lexicographically smaller label). Within
/// each label the chosen examples are uniform. Output keeps the input's
/// relative order.
pub fn sample_subset(d: &Dataset, n: usize, seed: u64) -> Result<Dataset, CorpusError> {
    let total = d.len();
    if n > total {
        return Err(CorpusError::SubsetTooLarge {
            requested: n,
            available: total,
        });
    }
    if n == 0 {
        return Err(CorpusError::EmptyDataset);
    }

    let mut by_label: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, e) in d.examples().iter().enumerate() {
        by_label.entry(e.label.as_str()).or_default().push(i);
    }
    let quotas = stratified_quotas(&by_label.values().map(Vec::len).collect::<Vec<_>>(), n);

    let mut rng = RngStream::derive(seed, "sample_subset", 0);
    let mut chosen = Vec::with_capacity(n);
    for (members, &quota) in by_label.values().zip(&quotas) {
        chosen.extend(
            index::sample(&mut rng, members.len(), quota)
                .into_iter()
                .map(|j| members[j]),
        );
    }
    chosen.sort_unstable();
    let examples = chosen.into_iter().map(|i| d.examples()[i].clone()).collect();
    Dataset::with_labels(d.name(), examples, d.label_set().clone())
}

/// Largest-remainder apportionment of `n` across groups of the given sizes.
pub fn stratified_quotas(sizes: &[usize], n: usize) -> Vec<usize> {
    let total: usize = sizes.iter().sum();
    if total == 0 {
        return vec![0; sizes.len()];
    }
    // Exact integer arithmetic: quota = floor(n*size/total), remainder = n*size mod total.
    let mut quotas: Vec<usize> = sizes.iter().map(|&s| n * s / total).collect();
    let assigned: usize = quotas.iter().sum();
    let mut order: Vec<usize> = (0..sizes.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = n * sizes[a] % total;
        let rb = n * sizes[b] % total;
        rb.cmp(&ra).then(a.cmp(&b))
    });
    for &g in order.iter().take(n - assigned) {
        quotas[g] += 1;
    }
    quotas
}

/// Writes augmented examples as JSONL. `loss` is omitted when absent.
pub fn save_augmented(path: impl AsRef<Path>, items: &[AugmentedExample]) -> Result<(), CorpusError> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| CorpusError::io(path, e))?;
    let mut w = BufWriter::new(file);
    for item in items {
        let line = serde_json::to_string(item).map_err(|e| CorpusError::Schema {
            line: 0,
            reason: e.to_string(),
        })?;
        writeln!(w, "{line}").map_err(|e| CorpusError::io(path, e))?;
    }
    w.flush().map_err(|e| CorpusError::io(path, e))
}

/// Reads augmented examples written by [`save_augmented`]. An empty file
/// yields an empty list.
pub fn load_augmented(path: impl AsRef<Path>) -> Result<Vec<AugmentedExample>, CorpusError> {
    let path = path.as_ref();
    let reader = BufReader::new(File::open(path).map_err(|e| CorpusError::io(path, e))?);
    let mut out = Vec::new();
    for (i, line) in reader.split(b'\n').enumerate() {
        let line_no = i + 1;
        let bytes = line.map_err(|e| CorpusError::io(path, e))?;
        let line = std::str::from_utf8(&bytes).map_err(|_| CorpusError::Encoding { line: line_no })?;
        if line.trim().is_empty() {
            continue;
        }
        let item: AugmentedExample = serde_json::from_str(line).map_err(|e| CorpusError::Schema {
            line: line_no,
            reason: e.to_string(),
        })?;
        if matches!(item.loss, Some(l) if l.is_nan() || l < 0.0) {
            return Err(CorpusError::Schema {
                line: line_no,
                reason: "loss must be non-negative".into(),
            });
        }
        out.push(item);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::collections::HashMap;
    use tempfile::TempDir;

    fn write(dir: &TempDir, name: &str, content: &[u8]) -> PathBuf {
        let p = dir.path().join(name);
        std::fs::write(&p, content).unwrap();
        p
    }

    fn ds(labels: &[&str]) -> Dataset {
        let examples = labels
            .iter()
            .enumerate()
            .map(|(i, l)| Example {
                id: i as u64,
                text: format!("text {i}"),
                label: l.to_string(),
            })
            .collect();
        Dataset::new("t", examples).unwrap()
    }

    #[test]
    fn jsonl_two_lines() {
        let dir = TempDir::new().unwrap();
        let p = write(
            &dir,
            "d.jsonl",
            b"{\"text\":\"a\",\"label\":\"x\"}\n{\"text\":\"b\",\"label\":\"y\"}\n",
        );
        let d = load_jsonl(&p).unwrap();
        assert_eq!(d.len(), 2);
        assert_eq!(d.examples()[1].id, 1);
        assert_eq!(
            d.label_set().iter().cloned().collect::<Vec<_>>(),
            vec!["x".to_string(), "y".to_string()]
        );
    }

    #[test]
    fn jsonl_empty_file() {
        let dir = TempDir::new().unwrap();
        let p = write(&dir, "d.jsonl", b"");
        assert!(matches!(load_jsonl(&p), Err(CorpusError::EmptyDataset)));
    }

    #[test]
    fn jsonl_missing_label_reports_line() {
        let dir = TempDir::new().unwrap();
        let p = write(&dir, "d.jsonl", b"{\"text\":\"a\",\"label\":\"x\"}\n{\"text\":\"b\"}\n");
        let err = load_jsonl(&p).unwrap_err();
        assert_eq!(err.line(), Some(2), "{err}");
    }

    #[test]
    fn jsonl_ill_typed_field() {
        let dir = TempDir::new().unwrap();
        let p = write(&dir, "d.jsonl", b"{\"text\":3,\"label\":\"x\"}\n");
        assert_eq!(load_jsonl(&p).unwrap_err().line(), Some(1));
    }

    #[test]
    fn jsonl_invalid_utf8_is_error() {
        let dir = TempDir::new().unwrap();
        let p = write(
            &dir,
            "d.jsonl",
            b"{\"text\":\"a\",\"label\":\"x\"}\n{\"text\":\"\xff\",\"label\":\"y\"}\n",
        );
        assert!(matches!(load_jsonl(&p), Err(CorpusError::Encoding { line: 2 })));
    }

    #[test]
    fn csv_single_row() {
        let dir = TempDir::new().unwrap();
        let p = write(&dir, "d.csv", b"text,label\nhi,pos\n");
        let d = load_csv(&p, "text", "label").unwrap();
        assert_eq!(d.len(), 1);
        assert_eq!(d.examples()[0].text, "hi");
        assert!(d.ensure_multiclass().is_err());
    }

    #[test]
    fn csv_missing_column() {
        let dir = TempDir::new().unwrap();
        let p = write(&dir, "d.csv", b"text,class\nhi,pos\n");
        match load_csv(&p, "text", "label") {
            Err(CorpusError::MissingColumn(c)) => assert_eq!(c, "label"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn csv_quoted_fields() {
        let dir = TempDir::new().unwrap();
        let p = write(
            &dir,
            "d.csv",
            b"label,text\nx,\"a, b\"\ny,\"two\nlines \"\"quoted\"\"\"\n",
        );
        let d = load_csv(&p, "text", "label").unwrap();
        assert_eq!(d.examples()[0].text, "a, b");
        assert_eq!(d.examples()[1].text, "two\nlines \"quoted\"");
    }

    #[test]
    fn csv_header_only_is_empty() {
        let dir = TempDir::new().unwrap();
        let p = write(&dir, "d.csv", b"text,label\n");
        assert!(matches!(load_csv(&p, "text", "label"), Err(CorpusError::EmptyDataset)));
    }

    #[test]
    fn dataset_rejects_duplicate_ids_and_single_label() {
        let e = |id, l: &str| Example {
            id,
            text: "t".into(),
            label: l.into(),
        };
        assert!(Dataset::new("d", vec![e(0, "a"), e(0, "b")]).is_err());
        assert!(Dataset::new("d", vec![e(0, "a"), e(1, "a")])
            .unwrap()
            .ensure_multiclass()
            .is_err());
        assert!(matches!(Dataset::new("d", vec![]), Err(CorpusError::EmptyDataset)));
    }

    #[test]
    fn subset_full_size_is_same_multiset() {
        let d = ds(&["a", "b", "a", "c", "b"]);
        let s = sample_subset(&d, d.len(), 9).unwrap();
        assert_eq!(s.examples(), d.examples());
    }

    #[test]
    fn subset_balanced_pair_enumeration() {
        // Enumerate every stratified outcome: the only admissible subsets
        // contain one x and one y, i.e. {0,1}x{2,3}.
        let d = ds(&["x", "x", "y", "y"]);
        let admissible: HashSet<Vec<u64>> = [[0, 2], [0, 3], [1, 2], [1, 3]].iter().map(|v| v.to_vec()).collect();
        let mut seen = HashSet::new();
        for seed in 0..200 {
            let s = sample_subset(&d, 2, seed).unwrap();
            let ids: Vec<u64> = s.examples().iter().map(|e| e.id).collect();
            assert!(admissible.contains(&ids), "{ids:?}");
            seen.insert(ids);
        }
        assert_eq!(seen, admissible);
    }

    #[test]
    fn subset_too_large() {
        let d = ds(&["x", "x", "y", "y"]);
        assert!(matches!(
            sample_subset(&d, 5, 0),
            Err(CorpusError::SubsetTooLarge {
                requested: 5,
                available: 4
            })
        ));
    }

    #[test]
    fn quotas_largest_remainder() {
        assert_eq!(stratified_quotas(&[2, 2], 2), vec![1, 1]);
        assert_eq!(stratified_quotas(&[5, 3, 2], 5), vec![3, 1, 1]);
        assert_eq!(stratified_quotas(&[1, 1, 1], 2), vec![1, 1, 0]);
    }

    #[test]
    fn augmented_round_trip() {
        let dir = TempDir::new().unwrap();
        let p = dir.path().join("a.jsonl");
        let items = vec![
            AugmentedExample {
                orig_id: 7,
                method: Method::Imf,
                text: "they developed".into(),
                label: "x".into(),
                loss: Some(0.5),
            },
            AugmentedExample {
                orig_id: 1,
                method: Method::Rs,
                text: "b a".into(),
                label: "y".into(),
                loss: None,
            },
            AugmentedExample {
                orig_id: 2,
                method: Method::Real,
                text: "c".into(),
                label: "y".into(),
                loss: Some(0.0),
            },
        ];
        save_augmented(&p, &items).unwrap();
        let content = std::fs::read_to_string(&p).unwrap();
        assert!(content.lines().next().unwrap().contains("\"loss\":0.5"));
        assert!(!content.lines().nth(1).unwrap().contains("loss"));
        assert_eq!(load_augmented(&p).unwrap(), items);
    }

    #[test]
    fn augmented_empty_list() {
        let dir = TempDir::new().unwrap();
        let p = dir.path().join("a.jsonl");
        save_augmented(&p, &[]).unwrap();
        assert_eq!(std::fs::metadata(&p).unwrap().len(), 0);
        assert!(load_augmented(&p).unwrap().is_empty());
    }

    #[test]
    fn method_parse_display() {
        for m in Method::AUGMENTERS.iter().chain([Method::Real].iter()) {
            assert_eq!(m.to_string().parse::<Method>().unwrap(), *m);
        }
        assert!("eda".parse::<Method>().is_err());
    }

    proptest! {
        #[test]
        fn subset_deterministic_and_proportional(
            labels in prop::collection::vec(0u8..4, 2..60),
            frac in 0.05f64..1.0,
            seed in any::<u64>(),
        ) {
            let mut labels = labels;
            labels[0] = 0;
            labels[1] = 1;
            let names: Vec<String> = labels.iter().map(|l| format!("l{l}")).collect();
            let refs: Vec<&str> = names.iter().map(String::as_str).collect();
            let d = ds(&refs);
            let n = ((d.len() as f64 * frac).ceil() as usize).clamp(1, d.len());
            let a = sample_subset(&d, n, seed).unwrap();
            let b = sample_subset(&d, n, seed).unwrap();
            prop_assert_eq!(&a, &b);
            prop_assert_eq!(a.len(), n);

            let mut full: HashMap<&str, usize> = HashMap::new();
            for e in d.examples() { *full.entry(e.label.as_str()).or_default() += 1; }
            let mut got: HashMap<&str, usize> = HashMap::new();
            for e in a.examples() { *got.entry(e.label.as_str()).or_default() += 1; }
            for (label, &count) in &full {
                let exact = n as f64 * count as f64 / d.len() as f64;
                let g = *got.get(label).unwrap_or(&0) as f64;
                prop_assert!((g - exact).abs() < 1.0, "label {} got {} exact {}", label, g, exact);
            }
            // relative order preserved
            let ids: Vec<u64> = a.examples().iter().map(|e| e.id).collect();
            prop_assert!(ids.windows(2).all(|w| w[0] < w[1]));
        }
    }
}
