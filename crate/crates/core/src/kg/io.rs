//! Tab-separated triple files: `head<TAB>relation<TAB>tail`, one per line.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use super::graph::{KnowledgeGraph, Triple};
use super::vocab::Vocab;
use crate::error::{Error, Result};

pub const SPLIT_FILES: [&str; 3] = ["train.txt", "valid.txt", "test.txt"];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Split {
    Train,
    Valid,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Valid, Split::Test];

    pub fn file_name(self) -> &'static str {
        match self {
            Split::Train => SPLIT_FILES[0],
            Split::Valid => SPLIT_FILES[1],
            Split::Test => SPLIT_FILES[2],
        }
    }
}

/// Splits one line into its three fields. Trailing `\r` is tolerated.
pub fn parse_triple_line(line: &str) -> Result<(&str, &str, &str), String> {
    let line = line.strip_suffix('\r').unwrap_or(line);
    let mut fields = line.split('\t');
    let (Some(h), Some(r), Some(t)) = (fields.next(), fields.next(), fields.next()) else {
        return Err(format!(
            "expected 3 tab-separated fields, found {}",
            line.split('\t').count()
        ));
    };
    if fields.next().is_some() {
        return Err(format!(
            "expected 3 tab-separated fields, found {}",
            line.split('\t').count()
        ));
    }
    for (name, value) in [("head", h), ("relation", r), ("tail", t)] {
        if value.trim().is_empty() {
            return Err(format!("empty {name} field"));
        }
    }
    Ok((h, r, t))
}

/// Parses triple text. With `fixed` set every name must already be in that
/// vocabulary; otherwise a fresh vocabulary is grown in order of appearance.
pub fn parse_triples(
    text: &str,
    source: &Path,
    fixed: Option<&Vocab>,
) -> Result<(Vec<Triple>, Vocab)> {
    let mut grown = Vocab::new();
    let mut triples = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let (h, r, t) = parse_triple_line(line).map_err(|message| Error::Parse {
            path: source.to_path_buf(),
            line: line_no,
            message,
        })?;
        let triple = match fixed {
            Some(vocab) => {
                let unknown = |kind, token: &str| Error::Vocabulary {
                    path: source.to_path_buf(),
                    line: line_no,
                    kind,
                    token: token.to_owned(),
                };
                Triple::new(
                    vocab.entity_id(h).ok_or_else(|| unknown("entity", h))?,
                    vocab.relation_id(r).ok_or_else(|| unknown("relation", r))?,
                    vocab.entity_id(t).ok_or_else(|| unknown("entity", t))?,
                )
            }
            None => {
                let head = grown.intern_entity(h);
                let relation = grown.intern_relation(r);
                let tail = grown.intern_entity(t);
                Triple::new(head, relation, tail)
            }
        };
        triples.push(triple);
    }
    let vocab = match fixed {
        Some(v) => v.clone(),
        None => grown,
    };
    Ok((triples, vocab))
}

pub fn load_triples(path: &Path, vocab: Option<&Vocab>) -> Result<(Vec<Triple>, Vocab)> {
    let text = fs::read_to_string(path)?;
    parse_triples(&text, path, vocab)
}

pub fn write_triples(path: &Path, triples: &[Triple], vocab: &Vocab) -> Result<()> {
    let mut out = BufWriter::new(fs::File::create(path)?);
    for t in triples {
        let name = |id: Option<&str>| {
            id.map(str::to_owned)
                .ok_or_else(|| Error::Bounds(format!("triple {t:?} outside vocabulary")))
        };
        writeln!(
            out,
            "{}\t{}\t{}",
            name(vocab.entity_name(t.head))?,
            name(vocab.relation_name(t.relation))?,
            name(vocab.entity_name(t.tail))?
        )?;
    }
    out.flush()?;
    Ok(())
}

/// The three standard splits over one shared vocabulary.
#[derive(Clone, Debug)]
pub struct Dataset {
    pub vocab: Vocab,
    pub train: Vec<Triple>,
    pub valid: Vec<Triple>,
    pub test: Vec<Triple>,
}

impl Dataset {
    pub fn split(&self, split: Split) -> &[Triple] {
        match split {
            Split::Train => &self.train,
            Split::Valid => &self.valid,
            Split::Test => &self.test,
        }
    }

    /// Message-passing graph over the training triples.
    pub fn train_graph(&self) -> Result<KnowledgeGraph> {
        KnowledgeGraph::build(&self.train, self.vocab.clone(), true)
    }

    pub fn all_triples(&self) -> impl Iterator<Item = &Triple> {
        self.train.iter().chain(&self.valid).chain(&self.test)
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        for split in Split::ALL {
            write_triples(&dir.join(split.file_name()), self.split(split), &self.vocab)?;
        }
        Ok(())
    }
}

/// Loads `train.txt`, `valid.txt` and `test.txt` from `dir`.
///
/// The vocabulary is the union of names over all three splits (train first,
/// in order of appearance), after which every split resolves against it.
pub fn load_dataset(dir: &Path) -> Result<Dataset> {
    let paths: Vec<PathBuf> = Split::ALL.iter().map(|s| dir.join(s.file_name())).collect();
    let mut texts = Vec::with_capacity(3);
    let mut vocab = Vocab::new();
    for path in &paths {
        let text = fs::read_to_string(path)?;
        let (_, grown) = parse_triples(&text, path, None)?;
        for name in grown.entity_names() {
            vocab.intern_entity(name);
        }
        for name in grown.relation_names() {
            vocab.intern_relation(name);
        }
        texts.push(text);
    }
    let mut splits = texts
        .iter()
        .zip(&paths)
        .map(|(text, path)| parse_triples(text, path, Some(&vocab)).map(|(t, _)| t));
    let train = splits.next().unwrap()?;
    let valid = splits.next().unwrap()?;
    let test = splits.next().unwrap()?;
    Ok(Dataset {
        vocab,
        train,
        valid,
        test,
    })
}
