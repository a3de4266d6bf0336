//! Canonical in-memory data model: paragraphs, heading-path queries and
//! relevance judgments.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Separator used when a heading path is rendered as a single line.
pub const HEADING_SEPARATOR: &str = " \u{bb} ";

pub const MIN_GRADE: i32 = -2;
pub const MAX_GRADE: i32 = 3;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntityLink {
    pub target: String,
    pub anchor: String,
}

/// An answer candidate.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Paragraph {
    pub id: String,
    pub text: String,
    #[serde(default)]
    pub links: Vec<EntityLink>,
}

impl Paragraph {
    pub fn new(id: impl Into<String>, text: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            text: text.into(),
            links: Vec::new(),
        }
    }

    pub fn with_link(mut self, target: impl Into<String>, anchor: impl Into<String>) -> Self {
        self.links.push(EntityLink {
            target: target.into(),
            anchor: anchor.into(),
        });
        self
    }

    /// Hard invariants: non-empty id, non-empty link targets.
    pub fn validate(&self) -> Result<()> {
        if self.id.is_empty() {
            return Err(invalid("paragraph id is empty"));
        }
        if let Some(l) = self.links.iter().find(|l| l.target.is_empty()) {
            return Err(invalid(alloc::format!(
                "paragraph `{}` has a link with an empty target (anchor `{}`)",
                self.id,
                l.anchor
            )));
        }
        Ok(())
    }

    /// Anchors that do not occur (case-insensitively) in the text. These are
    /// soft violations: callers report them but keep the paragraph.
    pub fn missing_anchors(&self) -> Vec<&str> {
        let text = self.text.to_lowercase();
        self.links
            .iter()
            .filter(|l| !text.contains(&l.anchor.to_lowercase()))
            .map(|l| l.anchor.as_str())
            .collect()
    }
}

/// Check id uniqueness across a collection, in order.
pub fn check_unique_ids<'a>(ids: impl IntoIterator<Item = &'a str>) -> Result<()> {
    let mut seen = BTreeSet::new();
    for id in ids {
        if !seen.insert(id) {
            return Err(Error::Duplicate(id.to_string()));
        }
    }
    Ok(())
}

/// Role of a heading within a query path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum HeadingRole {
    Title,
    Intermediate,
    Main,
}

impl HeadingRole {
    pub const ALL: [HeadingRole; 3] = [HeadingRole::Title, HeadingRole::Intermediate, HeadingRole::Main];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            HeadingRole::Title => "title",
            HeadingRole::Intermediate => "inter",
            HeadingRole::Main => "main",
        }
    }
}

/// A heading path: title (topic entity), optional intermediate headings and
/// the main heading.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Query {
    pub qid: String,
    pub headings: Vec<String>,
}

impl Query {
    pub fn new<S: Into<String>>(qid: impl Into<String>, headings: impl IntoIterator<Item = S>) -> Result<Self> {
        let q = Self {
            qid: qid.into(),
            headings: headings.into_iter().map(Into::into).collect(),
        };
        q.validate()?;
        Ok(q)
    }

    pub fn validate(&self) -> Result<()> {
        if self.qid.is_empty() {
            return Err(invalid("query id is empty"));
        }
        if self.headings.is_empty() {
            return Err(invalid(alloc::format!("query `{}` has no headings", self.qid)));
        }
        if self.headings.iter().any(|h| h.trim().is_empty()) {
            return Err(invalid(alloc::format!("query `{}` has a blank heading", self.qid)));
        }
        Ok(())
    }

    pub fn title(&self) -> &str {
        &self.headings[0]
    }

    pub fn main(&self) -> &str {
        &self.headings[self.headings.len() - 1]
    }

    /// Headings strictly between the title and the main heading.
    pub fn intermediates(&self) -> &[String] {
        if self.headings.len() <= 2 {
            &[]
        } else {
            &self.headings[1..self.headings.len() - 1]
        }
    }

    /// Role of heading `i`. A single-heading query is all title.
    pub fn role(&self, i: usize) -> HeadingRole {
        if i == 0 {
            HeadingRole::Title
        } else if i + 1 == self.headings.len() {
            HeadingRole::Main
        } else {
            HeadingRole::Intermediate
        }
    }

    pub fn display(&self) -> String {
        query_display(self)
    }
}

pub fn query_display(q: &Query) -> String {
    q.headings.join(HEADING_SEPARATOR)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Judgment {
    pub qid: String,
    pub paragraph_id: String,
    pub grade: i32,
}

pub fn check_grade(grade: i32) -> Result<i32> {
    if (MIN_GRADE..=MAX_GRADE).contains(&grade) {
        Ok(grade)
    } else {
        Err(Error::GradeOutOfRange(grade))
    }
}

/// Relevance judgments: qid → paragraph id → grade.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Qrels {
    map: BTreeMap<String, BTreeMap<String, i32>>,
}

impl Qrels {
    pub fn new() -> Self {
        Self::default()
    }

    /// Insert a judgment, returning the grade it replaced, if any.
    pub fn insert(&mut self, qid: &str, paragraph_id: &str, grade: i32) -> Result<Option<i32>> {
        check_grade(grade)?;
        Ok(self
            .map
            .entry(qid.to_string())
            .or_default()
            .insert(paragraph_id.to_string(), grade))
    }

    pub fn get(&self, qid: &str) -> Option<&BTreeMap<String, i32>> {
        self.map.get(qid)
    }

    pub fn grade(&self, qid: &str, paragraph_id: &str) -> Option<i32> {
        self.map.get(qid).and_then(|m| m.get(paragraph_id)).copied()
    }

    pub fn qids(&self) -> impl Iterator<Item = &str> {
        self.map.keys().map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &BTreeMap<String, i32>)> {
        self.map.iter().map(|(k, v)| (k.as_str(), v))
    }

    /// All judgments in (qid, paragraph id) order.
    pub fn judgments(&self) -> impl Iterator<Item = Judgment> + '_ {
        self.map.iter().flat_map(|(q, m)| {
            m.iter().map(move |(p, g)| Judgment {
                qid: q.clone(),
                paragraph_id: p.clone(),
                grade: *g,
            })
        })
    }

    pub fn len(&self) -> usize {
        self.map.values().map(BTreeMap::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Paragraph ids with grade ≥ 1 for `qid`, in id order.
    pub fn relevant(&self, qid: &str) -> Vec<&str> {
        self.map
            .get(qid)
            .map(|m| m.iter().filter(|(_, g)| **g >= 1).map(|(p, _)| p.as_str()).collect())
            .unwrap_or_default()
    }
}
