use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::corpus::{Paragraph, Qrels, Query};
use crate::error::{invalid, Result};
use crate::text::tokenize;

/// Catch-all relation for heads outside the frequent-head vocabulary.
pub const OTHER_LABEL: &str = "OTHER";
pub const DEFAULT_MAX_LABELS: usize = 1000;

const HEAD_STOPWORDS: [&str; 11] = ["of", "the", "a", "an", "and", "or", "in", "on", "for", "to", "with"];

/// Naive suffix stripping: `sses → ss`, `ies → y`, trailing `s` dropped on
/// words longer than three characters (`ss` endings are kept).
pub fn lemmatize(word: &str) -> String {
    if let Some(stem) = word.strip_suffix("sses") {
        return alloc::format!("{stem}ss");
    }
    if let Some(stem) = word.strip_suffix("ies") {
        return alloc::format!("{stem}y");
    }
    if word.chars().count() > 3 && word.ends_with('s') && !word.ends_with("ss") {
        return word[..word.len() - 1].to_string();
    }
    word.to_string()
}

/// Head of a heading: the last token that is not a function word (the last
/// token when all are), lemmatized. `None` for headings without tokens.
pub fn heading_head(heading: &str) -> Option<String> {
    let tokens = tokenize(heading);
    let head = tokens
        .iter()
        .rev()
        .find(|t| !HEAD_STOPWORDS.contains(&t.as_str()))
        .or_else(|| tokens.last())?;
    Some(lemmatize(head))
}

/// Head of the highest-level non-title heading, if the query has one.
pub fn query_head(q: &Query) -> Option<String> {
    q.headings.get(1).and_then(|h| heading_head(h))
}

/// The `max_labels` most frequent heads plus `OTHER`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelationVocab {
    labels: BTreeSet<String>,
}

impl RelationVocab {
    pub fn from_outlines(outlines: &[Query], max_labels: usize) -> Self {
        let mut counts: BTreeMap<String, usize> = BTreeMap::new();
        for head in outlines.iter().filter_map(query_head) {
            *counts.entry(head).or_insert(0) += 1;
        }
        let mut ranked: Vec<(String, usize)> = counts.into_iter().collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        Self::from_labels(ranked.into_iter().take(max_labels).map(|(l, _)| l))
    }

    pub fn from_labels(labels: impl IntoIterator<Item = String>) -> Self {
        let mut labels: BTreeSet<String> = labels.into_iter().collect();
        labels.insert(OTHER_LABEL.to_string());
        Self { labels }
    }

    pub fn contains(&self, label: &str) -> bool {
        self.labels.contains(label)
    }

    /// Labels in sorted order, `OTHER` included.
    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.labels.iter().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn label(&self, q: &Query) -> String {
        match query_head(q) {
            Some(h) if self.labels.contains(&h) => h,
            _ => OTHER_LABEL.to_string(),
        }
    }
}

pub fn edge_label(q: &Query, vocab: &RelationVocab) -> String {
    vocab.label(q)
}

/// Supplies the entity mentions of a paragraph.
pub trait MentionSource {
    fn mentions(&self, paragraph: &Paragraph) -> Vec<String>;
}

/// Mentions are the paragraph's link targets, first occurrence order.
#[derive(Debug, Clone, Copy, Default)]
pub struct LinkMentions;

impl MentionSource for LinkMentions {
    fn mentions(&self, paragraph: &Paragraph) -> Vec<String> {
        let mut seen = BTreeSet::new();
        paragraph
            .links
            .iter()
            .filter(|l| seen.insert(l.target.as_str()))
            .map(|l| l.target.clone())
            .collect()
    }
}

/// Precomputed mentions keyed by paragraph id, e.g. the output of an
/// external entity extractor run offline.
#[derive(Debug, Clone, Default)]
pub struct AnnotatedMentions {
    pub by_paragraph: BTreeMap<String, Vec<String>>,
}

impl MentionSource for AnnotatedMentions {
    fn mentions(&self, paragraph: &Paragraph) -> Vec<String> {
        self.by_paragraph.get(&paragraph.id).cloned().unwrap_or_default()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Triple {
    pub subject: String,
    pub relation: String,
    pub object: String,
}

impl Triple {
    pub fn new(subject: impl Into<String>, relation: impl Into<String>, object: impl Into<String>) -> Self {
        Self {
            subject: subject.into(),
            relation: relation.into(),
            object: object.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct KnowledgeGraph {
    entities: BTreeSet<String>,
    relations: BTreeSet<String>,
    triples: BTreeSet<Triple>,
}

impl KnowledgeGraph {
    /// One edge per (query, relevant paragraph, mention). Every query title
    /// is an entity even when it has no edges.
    pub fn build(
        outlines: &[Query],
        qrels: &Qrels,
        paragraphs: &[Paragraph],
        source: &dyn MentionSource,
        vocab: &RelationVocab,
    ) -> Self {
        let by_id: BTreeMap<&str, &Paragraph> = paragraphs.iter().map(|p| (p.id.as_str(), p)).collect();
        let mut g = Self {
            relations: vocab.labels.clone(),
            ..Self::default()
        };
        for q in outlines {
            g.entities.insert(q.title().to_string());
            let label = vocab.label(q);
            for pid in qrels.relevant(&q.qid) {
                let Some(p) = by_id.get(pid) else { continue };
                for m in source.mentions(p) {
                    g.entities.insert(m.clone());
                    g.triples.insert(Triple::new(q.title(), label.clone(), m));
                }
            }
        }
        g
    }

    /// Graph from explicit triples; entities and relations are those used.
    pub fn from_triples(triples: impl IntoIterator<Item = Triple>) -> Result<Self> {
        let mut g = Self::default();
        for t in triples {
            if t.subject.is_empty() || t.relation.is_empty() || t.object.is_empty() {
                return Err(invalid("triple with an empty field"));
            }
            g.entities.insert(t.subject.clone());
            g.entities.insert(t.object.clone());
            g.relations.insert(t.relation.clone());
            g.triples.insert(t);
        }
        Ok(g)
    }

    /// Triples plus entities and relations that no triple mentions.
    pub fn from_parts(
        entities: impl IntoIterator<Item = String>,
        relations: impl IntoIterator<Item = String>,
        triples: impl IntoIterator<Item = Triple>,
    ) -> Result<Self> {
        let mut g = Self::from_triples(triples)?;
        for e in entities {
            if e.is_empty() {
                return Err(invalid("empty entity name"));
            }
            g.entities.insert(e);
        }
        for r in relations {
            if r.is_empty() {
                return Err(invalid("empty relation name"));
            }
            g.relations.insert(r);
        }
        Ok(g)
    }

    pub fn entities(&self) -> impl Iterator<Item = &str> {
        self.entities.iter().map(String::as_str)
    }

    pub fn relations(&self) -> impl Iterator<Item = &str> {
        self.relations.iter().map(String::as_str)
    }

    pub fn triples(&self) -> impl Iterator<Item = &Triple> {
        self.triples.iter()
    }

    pub fn n_entities(&self) -> usize {
        self.entities.len()
    }

    pub fn n_relations(&self) -> usize {
        self.relations.len()
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    pub fn contains(&self, t: &Triple) -> bool {
        self.triples.contains(t)
    }
}

pub fn build_graph(
    outlines: &[Query],
    qrels: &Qrels,
    paragraphs: &[Paragraph],
    source: &dyn MentionSource,
    vocab: &RelationVocab,
) -> KnowledgeGraph {
    KnowledgeGraph::build(outlines, qrels, paragraphs, source, vocab)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn heads_and_lemmas() {
        assert_eq!(heading_head("Nutrition and health").as_deref(), Some("health"));
        assert_eq!(heading_head("Destinations").as_deref(), Some("destination"));
        assert_eq!(heading_head("History of the"), Some("history".into()));
        assert_eq!(heading_head("Of the"), Some("the".into()));
        assert_eq!(heading_head("!!"), None);
        assert_eq!(lemmatize("species"), "specy");
        assert_eq!(lemmatize("classes"), "class");
        assert_eq!(lemmatize("bus"), "bus");
        assert_eq!(lemmatize("grass"), "grass");
    }

    #[test]
    fn labels_fall_back_to_other() {
        let outlines = vec![
            Query::new("a", ["Cheese", "Nutrition and health"]).unwrap(),
            Query::new("b", ["Beef", "Nutrition and health"]).unwrap(),
            Query::new("c", ["Finland", "Destinations", "Europe"]).unwrap(),
        ];
        let vocab = RelationVocab::from_outlines(&outlines, 1);
        assert_eq!(vocab.len(), 2);
        assert_eq!(edge_label(&outlines[0], &vocab), "health");
        assert_eq!(edge_label(&outlines[2], &vocab), OTHER_LABEL);
        assert_eq!(edge_label(&Query::new("t", ["Cheese"]).unwrap(), &vocab), OTHER_LABEL);

        let wide = RelationVocab::from_outlines(&outlines, 1000);
        assert_eq!(edge_label(&outlines[2], &wide), "destination");
    }

    fn fixture() -> (Vec<Query>, Qrels, Vec<Paragraph>) {
        let outlines = vec![Query::new("q", ["Cheese", "Nutrition and health"]).unwrap()];
        let mut qrels = Qrels::new();
        for p in ["p1", "p2", "p3"] {
            qrels.insert("q", p, 1).unwrap();
        }
        let paragraphs = vec![
            Paragraph::new("p1", "Cheese is made from milk.").with_link("Milk", "milk"),
            Paragraph::new("p2", "Milk again.").with_link("Milk", "Milk"),
            Paragraph::new("p3", "Nothing linked here."),
        ];
        (outlines, qrels, paragraphs)
    }

    #[test]
    fn graph_construction() {
        let (outlines, qrels, paragraphs) = fixture();
        let vocab = RelationVocab::from_outlines(&outlines, DEFAULT_MAX_LABELS);
        let g = build_graph(&outlines, &qrels, &paragraphs, &LinkMentions, &vocab);
        assert_eq!(
            g.triples().collect::<Vec<_>>(),
            vec![&Triple::new("Cheese", "health", "Milk")]
        );
        assert_eq!(g.entities().collect::<Vec<_>>(), vec!["Cheese", "Milk"]);

        let mut reversed = paragraphs.clone();
        reversed.reverse();
        assert_eq!(build_graph(&outlines, &qrels, &reversed, &LinkMentions, &vocab), g);
    }

    #[test]
    fn link_mentions_dedupe() {
        let p = Paragraph::new("p", "a b a")
            .with_link("A", "a")
            .with_link("B", "b")
            .with_link("A", "a");
        assert_eq!(LinkMentions.mentions(&p), vec!["A".to_string(), "B".to_string()]);
    }
}
