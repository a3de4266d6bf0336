//! First-stage BM25 retrieval over the paragraph collection.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::corpus::{check_unique_ids, Paragraph, Query};
use crate::error::{invalid, Error, Result};
use crate::text::{idf_value, tokenize};

pub const K1: f64 = 1.2;
pub const B: f64 = 0.75;
pub const DEFAULT_DEPTH: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct ScoredDoc {
    pub paragraph_id: String,
    pub score: f64,
}

impl ScoredDoc {
    pub fn new(paragraph_id: impl Into<String>, score: f64) -> Self {
        Self {
            paragraph_id: paragraph_id.into(),
            score,
        }
    }
}

/// Score descending, then paragraph id ascending.
pub fn rank_order(a: &ScoredDoc, b: &ScoredDoc) -> Ordering {
    b.score
        .partial_cmp(&a.score)
        .unwrap_or(Ordering::Equal)
        .then_with(|| a.paragraph_id.cmp(&b.paragraph_id))
}

/// A posting: paragraph ordinal and term frequency.
pub type Posting = (u32, u32);

#[derive(Debug, Clone, PartialEq)]
pub struct InvertedIndex {
    postings: BTreeMap<String, Vec<Posting>>,
    doc_lengths: Vec<u32>,
    ids: Vec<String>,
    avg_dl: f64,
}

impl InvertedIndex {
    pub fn build(paragraphs: &[Paragraph]) -> Result<Self> {
        if paragraphs.is_empty() {
            return Err(Error::Empty("paragraph collection"));
        }
        check_unique_ids(paragraphs.iter().map(|p| p.id.as_str()))?;
        let mut postings: BTreeMap<String, Vec<Posting>> = BTreeMap::new();
        let mut doc_lengths = Vec::with_capacity(paragraphs.len());
        for (ord, p) in paragraphs.iter().enumerate() {
            let tokens = tokenize(&p.text);
            doc_lengths.push(tokens.len() as u32);
            let mut tf: BTreeMap<String, u32> = BTreeMap::new();
            for t in tokens {
                *tf.entry(t).or_insert(0) += 1;
            }
            for (t, c) in tf {
                postings.entry(t).or_default().push((ord as u32, c));
            }
        }
        let ids = paragraphs.iter().map(|p| p.id.clone()).collect();
        Self::from_parts(ids, doc_lengths, postings)
    }

    /// Reassemble an index from stored parts, validating every invariant.
    pub fn from_parts(
        ids: Vec<String>,
        doc_lengths: Vec<u32>,
        postings: BTreeMap<String, Vec<Posting>>,
    ) -> Result<Self> {
        if ids.is_empty() {
            return Err(Error::Empty("paragraph collection"));
        }
        if ids.len() != doc_lengths.len() {
            return Err(Error::LengthMismatch {
                expected: ids.len(),
                got: doc_lengths.len(),
            });
        }
        check_unique_ids(ids.iter().map(String::as_str))?;
        let n = ids.len() as u32;
        let mut occurrences = 0u64;
        for (t, list) in &postings {
            if list.is_empty() {
                return Err(invalid(alloc::format!("token `{t}` has no postings")));
            }
            if list.windows(2).any(|w| w[0].0 >= w[1].0) || list.iter().any(|&(o, c)| o >= n || c == 0) {
                return Err(invalid(alloc::format!(
                    "postings for `{t}` are not strictly sorted and in range"
                )));
            }
            occurrences += list.iter().map(|&(_, c)| u64::from(c)).sum::<u64>();
        }
        let total: u64 = doc_lengths.iter().map(|&l| u64::from(l)).sum();
        if occurrences != total {
            return Err(invalid("posting counts do not add up to document lengths"));
        }
        let avg_dl = total as f64 / f64::from(n);
        Ok(Self {
            postings,
            doc_lengths,
            ids,
            avg_dl,
        })
    }

    pub fn n_docs(&self) -> u32 {
        self.ids.len() as u32
    }

    pub fn avg_dl(&self) -> f64 {
        self.avg_dl
    }

    pub fn doc_lengths(&self) -> &[u32] {
        &self.doc_lengths
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn postings(&self, token: &str) -> &[Posting] {
        self.postings.get(token).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn terms(&self) -> impl Iterator<Item = (&str, &[Posting])> {
        self.postings.iter().map(|(t, p)| (t.as_str(), p.as_slice()))
    }

    pub fn df(&self, token: &str) -> u32 {
        self.postings(token).len() as u32
    }

    pub fn idf(&self, token: &str) -> f64 {
        idf_value(self.n_docs(), self.df(token))
    }

    /// BM25 term weight for one posting.
    pub fn term_weight(&self, idf: f64, tf: u32, doc_len: u32) -> f64 {
        bm25_term(idf, f64::from(tf), f64::from(doc_len), self.avg_dl)
    }

    /// Top-`k` paragraphs for the concatenation of all the query's headings.
    pub fn search(&self, query: &Query, k: usize) -> Result<Vec<ScoredDoc>> {
        self.search_tokens(&query_tokens(query), k)
    }

    pub fn search_tokens(&self, tokens: &[String], k: usize) -> Result<Vec<ScoredDoc>> {
        if k == 0 {
            return Err(invalid("k must be positive"));
        }
        let mut acc: BTreeMap<u32, f64> = BTreeMap::new();
        // Repeated query tokens contribute once per occurrence.
        for t in tokens {
            let list = self.postings(t);
            if list.is_empty() {
                continue;
            }
            let idf = self.idf(t);
            for &(ord, tf) in list {
                *acc.entry(ord).or_insert(0.0) += self.term_weight(idf, tf, self.doc_lengths[ord as usize]);
            }
        }
        let mut hits: Vec<ScoredDoc> = acc
            .into_iter()
            .map(|(ord, score)| ScoredDoc::new(self.ids[ord as usize].clone(), score))
            .collect();
        hits.sort_by(rank_order);
        hits.truncate(k);
        Ok(hits)
    }
}

pub fn bm25_search(index: &InvertedIndex, query: &Query, k: usize) -> Result<Vec<ScoredDoc>> {
    index.search(query, k)
}

pub fn query_tokens(query: &Query) -> Vec<String> {
    query.headings.iter().flat_map(|h| tokenize(h)).collect()
}

pub fn bm25_term(idf: f64, tf: f64, doc_len: f64, avg_dl: f64) -> f64 {
    idf * tf * (K1 + 1.0) / (tf + K1 * (1.0 - B + B * doc_len / avg_dl))
}

/// Lookup from paragraph id to position in a slice.
pub fn id_positions(paragraphs: &[Paragraph]) -> BTreeMap<&str, usize> {
    paragraphs.iter().enumerate().map(|(i, p)| (p.id.as_str(), i)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use alloc::vec;
    use proptest::prelude::*;

    fn corpus(texts: &[&str]) -> Vec<Paragraph> {
        texts
            .iter()
            .enumerate()
            .map(|(i, t)| Paragraph::new(alloc::format!("p{i}"), *t))
            .collect()
    }

    /// Scores every document independently of the postings lists.
    fn exhaustive(paragraphs: &[Paragraph], tokens: &[String], k: usize) -> Vec<ScoredDoc> {
        let docs: Vec<Vec<String>> = paragraphs.iter().map(|p| tokenize(&p.text)).collect();
        let n = docs.len() as f64;
        let avg = docs.iter().map(Vec::len).sum::<usize>() as f64 / n;
        let mut out = Vec::new();
        for (p, doc) in paragraphs.iter().zip(&docs) {
            let mut score = 0.0;
            let mut matched = false;
            for t in tokens {
                let tf = doc.iter().filter(|d| *d == t).count() as f64;
                if tf == 0.0 {
                    continue;
                }
                matched = true;
                let df = docs.iter().filter(|d| d.contains(t)).count() as f64;
                let idf = libm::log((n - df + 0.5) / (df + 0.5) + 1.0);
                score += idf * tf * 2.2 / (tf + 1.2 * (0.25 + 0.75 * doc.len() as f64 / avg));
            }
            if matched {
                out.push(ScoredDoc::new(p.id.clone(), score));
            }
        }
        out.sort_by(|a, b| {
            b.score
                .partial_cmp(&a.score)
                .unwrap()
                .then(a.paragraph_id.cmp(&b.paragraph_id))
        });
        out.truncate(k);
        out
    }

    #[test]
    fn build_counts() {
        let idx = InvertedIndex::build(&corpus(&["a a b"])).unwrap();
        assert_eq!(idx.postings("a"), &[(0, 2)]);
        assert_eq!(idx.postings("b"), &[(0, 1)]);
        assert_eq!(idx.avg_dl(), 3.0);

        let idx = InvertedIndex::build(&corpus(&["a", "b"])).unwrap();
        assert_eq!(idx.avg_dl(), 1.0);
        assert_eq!(idx.n_docs(), 2);

        let dup = vec![Paragraph::new("x", "a"), Paragraph::new("x", "b")];
        assert_eq!(InvertedIndex::build(&dup), Err(Error::Duplicate("x".into())));
        assert!(InvertedIndex::build(&[]).is_err());
    }

    #[test]
    fn search_examples() {
        let idx = InvertedIndex::build(&corpus(&["cheese"])).unwrap();
        let q = Query::new("q", ["Cheese"]).unwrap();
        let hits = idx.search(&q, 100).unwrap();
        assert_eq!(hits.len(), 1);
        assert!((hits[0].score - idx.idf("cheese")).abs() < 1e-12);

        let none = Query::new("q", ["Milk"]).unwrap();
        assert!(idx.search(&none, 10).unwrap().is_empty());
        assert!(idx.search(&q, 0).is_err());
    }

    #[test]
    fn ties_broken_by_id() {
        let idx = InvertedIndex::build(&[Paragraph::new("b", "x y"), Paragraph::new("a", "x y")]).unwrap();
        let hits = idx.search_tokens(&["x".into()], 10).unwrap();
        assert_eq!(hits[0].paragraph_id, "a");
        assert_eq!(hits[1].paragraph_id, "b");
        assert_eq!(hits[0].score, hits[1].score);
    }

    #[test]
    fn from_parts_rejects_broken_invariants() {
        let mut postings = BTreeMap::new();
        postings.insert("a".to_string(), vec![(0u32, 2u32)]);
        assert!(InvertedIndex::from_parts(vec!["p".into()], vec![2], postings.clone()).is_ok());
        assert!(InvertedIndex::from_parts(vec!["p".into()], vec![3], postings.clone()).is_err());
        postings.insert("b".to_string(), vec![(1, 1)]);
        assert!(InvertedIndex::from_parts(vec!["p".into()], vec![3], postings).is_err());
    }

    fn word() -> impl Strategy<Value = String> {
        proptest::sample::select(vec!["a", "b", "c", "d", "e", "f", "g", "h"]).prop_map(String::from)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn matches_exhaustive_scorer(
            docs in proptest::collection::vec(proptest::collection::vec(word(), 0..12), 1..40),
            query in proptest::collection::vec(word(), 1..6),
            k in 1usize..50,
        ) {
            let texts: Vec<String> = docs.iter().map(|d| d.join(" ")).collect();
            let paragraphs: Vec<Paragraph> = texts.iter().enumerate()
                .map(|(i, t)| Paragraph::new(alloc::format!("d{i:03}"), t.clone())).collect();
            let idx = InvertedIndex::build(&paragraphs).unwrap();
            let fast = idx.search_tokens(&query, k).unwrap();
            let slow = exhaustive(&paragraphs, &query, k);
            prop_assert_eq!(fast.len(), slow.len());
            for (f, s) in fast.iter().zip(&slow) {
                prop_assert_eq!(&f.paragraph_id, &s.paragraph_id);
                prop_assert!((f.score - s.score).abs() < 1e-9);
            }
        }

        #[test]
        fn adding_a_query_term_occurrence_never_hurts(tf in 1u32..20, len in 20u32..60, idf in 0.01f64..5.0, avg in 1.0f64..50.0) {
            // One more occurrence replacing a non-query token keeps length fixed.
            prop_assert!(bm25_term(idf, f64::from(tf + 1), f64::from(len), avg) >= bm25_term(idf, f64::from(tf), f64::from(len), avg));
        }
    }
}
