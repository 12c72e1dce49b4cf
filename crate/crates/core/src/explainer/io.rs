use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::extract::Explanation;
use crate::error::{Error, Result};
use crate::kg::{KnowledgeGraph, Triple};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QueryRecord {
    pub head: String,
    pub relation: String,
    pub tail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeRecord {
    pub head: String,
    pub relation: String,
    pub tail: String,
    pub omega: f64,
    pub rank: usize,
}

/// One line of an explanation file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExplanationRecord {
    pub query: QueryRecord,
    pub budget: usize,
    pub edges: Vec<EdgeRecord>,
    pub converged: bool,
}

fn names(g: &KnowledgeGraph, t: Triple) -> Result<(String, String, String)> {
    let v = g.vocab();
    let ent = |e| {
        v.entity_name(e)
            .map(str::to_owned)
            .ok_or_else(|| Error::Bounds(format!("entity {e} has no name")))
    };
    let rel = v
        .relation_label(t.relation)
        .ok_or_else(|| Error::Bounds(format!("relation {} has no name", t.relation)))?;
    Ok((ent(t.head)?, rel, ent(t.tail)?))
}

impl ExplanationRecord {
    pub fn from_explanation(ex: &Explanation, g: &KnowledgeGraph) -> Result<Self> {
        let (head, relation, tail) = names(g, ex.query.triple())?;
        let edges = ex
            .edges
            .iter()
            .zip(&ex.omega)
            .enumerate()
            .map(|(i, (&e, &omega))| {
                let (head, relation, tail) = names(g, g.edge(e))?;
                Ok(EdgeRecord {
                    head,
                    relation,
                    tail,
                    omega,
                    rank: i + 1,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            query: QueryRecord { head, relation, tail },
            budget: ex.budget,
            edges,
            converged: ex.converged,
        })
    }

    /// Structural checks that do not need a vocabulary.
    pub fn validate(&self) -> Result<()> {
        if self.edges.len() > self.budget {
            return Err(Error::contract(format!(
                "explanation holds {} edges for budget {}",
                self.edges.len(),
                self.budget
            )));
        }
        for (i, e) in self.edges.iter().enumerate() {
            if e.rank != i + 1 {
                return Err(Error::contract(format!("edge ranks must run 1..n, found {} at {}", e.rank, i + 1)));
            }
            if !(0.0..=1.0).contains(&e.omega) {
                return Err(Error::contract(format!("edge weight {} outside [0, 1]", e.omega)));
            }
        }
        Ok(())
    }

    /// Resolves every name against `g`, returning the query and edge triples.
    pub fn resolve(&self, g: &KnowledgeGraph) -> Result<(Triple, Vec<Triple>)> {
        let v = g.vocab();
        let triple = |h: &str, r: &str, t: &str| -> Result<Triple> {
            let head = v.entity_id(h).ok_or_else(|| Error::contract(format!("unknown entity `{h}`")))?;
            let tail = v.entity_id(t).ok_or_else(|| Error::contract(format!("unknown entity `{t}`")))?;
            let relation = v
                .resolve_relation_label(r)
                .ok_or_else(|| Error::contract(format!("unknown relation `{r}`")))?;
            Ok(Triple::new(head, relation, tail))
        };
        let q = triple(&self.query.head, &self.query.relation, &self.query.tail)?;
        let edges = self
            .edges
            .iter()
            .map(|e| triple(&e.head, &e.relation, &e.tail))
            .collect::<Result<Vec<_>>>()?;
        Ok((q, edges))
    }
}

/// Parses JSON-lines explanation records; blank lines are skipped.
pub fn parse_explanations(text: &str) -> Result<Vec<ExplanationRecord>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let rec: ExplanationRecord = serde_json::from_str(line).map_err(|e| Error::Parse {
            path: "<explanations>".into(),
            line: i + 1,
            message: e.to_string(),
        })?;
        rec.validate()?;
        out.push(rec);
    }
    Ok(out)
}

pub fn read_explanations(path: &Path) -> Result<Vec<ExplanationRecord>> {
    let text = fs::read_to_string(path)?;
    parse_explanations(&text).map_err(|e| match e {
        Error::Parse { line, message, .. } => Error::Parse {
            path: path.to_path_buf(),
            line,
            message,
        },
        other => other,
    })
}

pub fn write_explanations(path: &Path, explanations: &[Explanation], g: &KnowledgeGraph) -> Result<()> {
    let mut out = std::io::BufWriter::new(fs::File::create(path)?);
    for ex in explanations {
        let rec = ExplanationRecord::from_explanation(ex, g)?;
        serde_json::to_writer(&mut out, &rec)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}
