//! Corpus readers and writers.
//!
//! Two ingestion formats:
//! - JSON-Lines, one object per line:
//!   `{"id": str, "text": str, "label": "vishing"|"benign", "tokens": [str]?}`
//! - CSV with a header row and columns `id,text,label`.

use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::Deserialize;

use super::{Corpus, CorpusError, Label, Source, Transcript};

#[derive(Deserialize)]
struct JsonlRow {
    id: String,
    text: String,
    label: Label,
    #[serde(default)]
    tokens: Option<Vec<String>>,
}

#[derive(Deserialize)]
struct CsvRow {
    id: String,
    text: String,
    label: Label,
}

fn io_err(path: &Path, source: std::io::Error) -> CorpusError {
    CorpusError::Io { path: path.display().to_string(), source }
}

/// Reads a JSON-Lines corpus. Blank lines are skipped.
pub fn read_jsonl(path: &Path) -> Result<Corpus, CorpusError> {
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    let reader = BufReader::new(file);
    let mut transcripts = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| io_err(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let row: JsonlRow = serde_json::from_str(&line).map_err(|e| CorpusError::Parse {
            path: path.display().to_string(),
            line: idx + 1,
            message: e.to_string(),
        })?;
        transcripts.push(Transcript {
            id: row.id,
            text: row.text,
            label: row.label,
            tokens: row.tokens,
            source: Source::Original,
        });
    }
    Corpus::new(transcripts)
}

/// Reads a CSV corpus with header columns `id,text,label`.
pub fn read_csv(path: &Path) -> Result<Corpus, CorpusError> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| CorpusError::Parse {
        path: path.display().to_string(),
        line: 0,
        message: e.to_string(),
    })?;
    let mut transcripts = Vec::new();
    for (idx, result) in reader.deserialize::<CsvRow>().enumerate() {
        let row = result.map_err(|e| CorpusError::Parse {
            path: path.display().to_string(),
            line: idx + 2,
            message: e.to_string(),
        })?;
        transcripts.push(Transcript {
            id: row.id,
            text: row.text,
            label: row.label,
            tokens: None,
            source: Source::Original,
        });
    }
    Corpus::new(transcripts)
}

/// Dispatches on file extension: `.csv` goes to [`read_csv`], everything
/// else is treated as JSON-Lines.
pub fn read_corpus(path: &Path) -> Result<Corpus, CorpusError> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("csv") => read_csv(path),
        _ => read_jsonl(path),
    }
}

/// Writes a corpus as JSON-Lines, one transcript per line.
pub fn write_jsonl(corpus: &Corpus, path: &Path) -> Result<(), CorpusError> {
    let mut file = File::create(path).map_err(|e| io_err(path, e))?;
    for t in corpus.transcripts() {
        let line = serde_json::to_string(t).expect("transcript serializes");
        writeln!(file, "{line}").map_err(|e| io_err(path, e))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jsonl_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.jsonl");
        std::fs::write(
            &path,
            concat!(
                r#"{"id":"a","text":"hello","label":"vishing"}"#,
                "\n",
                r#"{"id":"b","text":"world","label":"benign","tokens":["world"]}"#,
                "\n",
            ),
        )
        .unwrap();
        let corpus = read_jsonl(&path).unwrap();
        assert_eq!(corpus.len(), 2);
        assert_eq!(corpus.get("b").unwrap().tokens.as_deref().unwrap(), ["world"]);

        let out = dir.path().join("out.jsonl");
        write_jsonl(&corpus, &out).unwrap();
        let reread = read_jsonl(&out).unwrap();
        assert_eq!(corpus, reread);
    }

    #[test]
    fn csv_reader_parses_quoted_text() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.csv");
        std::fs::write(&path, "id,text,label\n1,\"hello, world\",vishing\n2,bye,benign\n")
            .unwrap();
        let corpus = read_csv(&path).unwrap();
        assert_eq!(corpus.len(), 2);
        assert_eq!(corpus.get("1").unwrap().text, "hello, world");
        assert_eq!(corpus.get("2").unwrap().label, Label::Benign);
    }

    #[test]
    fn bad_label_is_a_parse_error_with_line_number() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.jsonl");
        std::fs::write(&path, "{\"id\":\"a\",\"text\":\"x\",\"label\":\"spam\"}\n").unwrap();
        match read_jsonl(&path) {
            Err(CorpusError::Parse { line, .. }) => assert_eq!(line, 1),
            other => panic!("expected parse error, got {other:?}"),
        }
    }
}
