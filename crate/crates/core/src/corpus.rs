//! Corpus loading and unigram tokenization.
//!
//! A corpus is read from JSONL (one object per line) or CSV (header row
//! first). Each record's configured text fields are joined with a single
//! space into the scoring text; the label, when configured, is carried along
//! untouched and never read by scoring.

use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InputFormat {
    Jsonl,
    Csv,
}

impl FromStr for InputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "jsonl" => Ok(InputFormat::Jsonl),
            "csv" => Ok(InputFormat::Csv),
            other => Err(Error::Config(format!("unknown input format `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Document {
    /// 0-based position in input order.
    pub id: usize,
    /// Configured fields as `(name, value)`, in configured order.
    pub fields: Vec<(String, String)>,
    pub text: String,
    pub label: Option<String>,
}

impl Document {
    pub fn new(id: usize, fields: Vec<(String, String)>, label: Option<String>) -> Self {
        let text = join_fields(fields.iter().map(|(_, v)| v.as_str()));
        Document {
            id,
            fields,
            text,
            label,
        }
    }
}

fn join_fields<'a>(values: impl Iterator<Item = &'a str>) -> String {
    values.collect::<Vec<_>>().join(" ")
}

#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    documents: Vec<Document>,
}

impl Corpus {
    /// Builds a corpus from documents whose ids must equal their positions.
    pub fn new(documents: Vec<Document>) -> Result<Self> {
        if documents.is_empty() {
            return Err(Error::Config("a corpus needs at least one document".into()));
        }
        if let Some(bad) = documents.iter().enumerate().find(|(i, d)| d.id != *i) {
            return Err(Error::Config(format!(
                "document at position {} has id {}",
                bad.0, bad.1.id
            )));
        }
        Ok(Corpus { documents })
    }

    /// Single-field corpus, one document per text. Handy for tests and tools.
    pub fn from_texts<I, S>(texts: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let documents = texts
            .into_iter()
            .enumerate()
            .map(|(id, t)| Document::new(id, vec![("text".to_string(), t.into())], None))
            .collect();
        Corpus::new(documents)
    }

    pub fn documents(&self) -> &[Document] {
        &self.documents
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    /// Tokenizes every document, in document-id order.
    pub fn tokenize(&self, tokenizer: &Tokenizer) -> Vec<TokenStream> {
        self.documents
            .par_iter()
            .map(|d| tokenizer.tokenize(d))
            .collect()
    }
}

/// Which record fields make up the scoring text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldSpec {
    pub fields: Vec<String>,
    #[serde(default)]
    pub label_field: Option<String>,
}

pub fn load_corpus(path: &Path, format: InputFormat, spec: &FieldSpec) -> Result<Corpus> {
    if spec.fields.is_empty() {
        return Err(Error::Config("field list is empty".into()));
    }
    let file = File::open(path)?;
    let documents = match format {
        InputFormat::Jsonl => read_jsonl(BufReader::new(file), path, spec)?,
        InputFormat::Csv => read_csv(file, path, spec)?,
    };
    if documents.is_empty() {
        return Err(Error::EmptyInput {
            path: path.to_path_buf(),
        });
    }
    Corpus::new(documents)
}

fn read_jsonl<R: BufRead>(reader: R, path: &Path, spec: &FieldSpec) -> Result<Vec<Document>> {
    let mut documents = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = lineno + 1;
        if line.trim().is_empty() {
            continue;
        }
        let malformed = |reason: String| Error::MalformedRecord {
            path: path.to_path_buf(),
            line: lineno,
            reason,
        };
        let value: serde_json::Value =
            serde_json::from_str(&line).map_err(|e| malformed(e.to_string()))?;
        let object = value
            .as_object()
            .ok_or_else(|| malformed("expected a JSON object".into()))?;

        let mut fields = Vec::with_capacity(spec.fields.len());
        for name in &spec.fields {
            let v = object.get(name).ok_or_else(|| Error::MissingField {
                path: path.to_path_buf(),
                line: lineno,
                field: name.clone(),
            })?;
            let text = json_scalar_text(v)
                .ok_or_else(|| malformed(format!("field `{name}` is not a string or scalar")))?;
            fields.push((name.clone(), text));
        }
        let label = spec
            .label_field
            .as_ref()
            .and_then(|name| object.get(name))
            .and_then(|v| match v {
                serde_json::Value::Null => None,
                serde_json::Value::String(s) => Some(s.clone()),
                other => Some(other.to_string()),
            });
        documents.push(Document::new(documents.len(), fields, label));
    }
    Ok(documents)
}

fn json_scalar_text(v: &serde_json::Value) -> Option<String> {
    match v {
        serde_json::Value::String(s) => Some(s.clone()),
        serde_json::Value::Number(n) => Some(n.to_string()),
        serde_json::Value::Bool(b) => Some(b.to_string()),
        _ => None,
    }
}

fn read_csv<R: Read>(reader: R, path: &Path, spec: &FieldSpec) -> Result<Vec<Document>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(reader);
    let csv_err = |e: csv::Error| -> Error {
        let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
        Error::MalformedRecord {
            path: path.to_path_buf(),
            line,
            reason: e.to_string(),
        }
    };

    let headers = rdr.headers().map_err(csv_err)?.clone();
    if headers.is_empty() {
        return Err(Error::EmptyInput {
            path: path.to_path_buf(),
        });
    }
    let column = |name: &str| headers.iter().position(|h| h == name);
    let mut columns = Vec::with_capacity(spec.fields.len());
    for name in &spec.fields {
        let idx = column(name).ok_or_else(|| Error::MissingField {
            path: path.to_path_buf(),
            line: 1,
            field: name.clone(),
        })?;
        columns.push((name.clone(), idx));
    }
    let label_col = spec.label_field.as_deref().and_then(column);

    let mut documents = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(csv_err)?;
        let fields = columns
            .iter()
            .map(|(name, idx)| (name.clone(), record[*idx].to_string()))
            .collect();
        let label = label_col.map(|i| record[i].to_string());
        documents.push(Document::new(documents.len(), fields, label));
    }
    Ok(documents)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenStream {
    pub doc_id: usize,
    pub tokens: Vec<String>,
}

/// Unigram tokenizer: maximal runs of Unicode alphanumerics, lowercased.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Tokenizer {
    /// Tokens with fewer characters than this are dropped.
    pub min_token_len: usize,
}

impl Default for Tokenizer {
    fn default() -> Self {
        Tokenizer { min_token_len: 1 }
    }
}

impl Tokenizer {
    pub fn new(min_token_len: usize) -> Self {
        Tokenizer {
            min_token_len: min_token_len.max(1),
        }
    }

    pub fn tokenize(&self, doc: &Document) -> TokenStream {
        TokenStream {
            doc_id: doc.id,
            tokens: self.tokens(&doc.text),
        }
    }

    pub fn tokens(&self, text: &str) -> Vec<String> {
        let mut out = Vec::new();
        let mut current = String::new();
        let mut flush = |current: &mut String| {
            if !current.is_empty() {
                if current.chars().count() >= self.min_token_len {
                    out.push(std::mem::take(current));
                } else {
                    current.clear();
                }
            }
        };
        for c in text.chars() {
            if c.is_alphanumeric() {
                // Lowercasing can expand to combining marks; keep only the
                // alphanumeric part so tokens stay stable under re-tokenization.
                current.extend(c.to_lowercase().filter(|l| l.is_alphanumeric()));
            } else {
                flush(&mut current);
            }
        }
        flush(&mut current);
        out
    }
}
