use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use super::config::RankerConfig;
use crate::corpus::{HeadingRole, Paragraph, Query};
use crate::error::{invalid, Result};
use crate::facets::{annotated_tokens, HeadingFrequencyTable, QueryToken};
use crate::kg::{entity_scores, HoleEmbeddings, MentionSource, RelationVocab};
use crate::math;
use crate::text::{tokenize, EmbeddingTable, IdfTable};

/// Knowledge-graph inputs for the `kg` variants.
#[derive(Clone, Copy)]
pub struct KgContext<'a> {
    pub embeddings: &'a HoleEmbeddings,
    pub vocab: &'a RelationVocab,
    pub source: &'a dyn MentionSource,
}

/// Everything besides parameters that scoring needs.
#[derive(Clone, Copy)]
pub struct RankContext<'a> {
    pub embeddings: &'a EmbeddingTable,
    pub idf: &'a IdfTable,
    pub headings: Option<&'a HeadingFrequencyTable>,
    pub kg: Option<KgContext<'a>>,
}

impl RankContext<'_> {
    pub fn check(&self, cfg: &RankerConfig) -> Result<()> {
        if cfg.variant.use_frequency_vector && self.headings.is_none() {
            return Err(invalid(
                "variant uses heading frequency but no frequency table was given",
            ));
        }
        if cfg.variant.use_kg_scores && self.kg.is_none() {
            return Err(invalid(
                "variant uses entity scores but no knowledge-graph embeddings were given",
            ));
        }
        Ok(())
    }
}

/// Drop trailing tokens from the longest group until `budget` is met. Ties
/// go to non-title groups first, then to later groups, so the title is
/// shortened last.
pub fn truncate_longest_first(groups: &mut [Vec<QueryToken>], budget: usize) {
    let mut total: usize = groups.iter().map(Vec::len).sum();
    while total > budget {
        let victim = (0..groups.len())
            .max_by_key(|&i| {
                let is_title = groups[i].first().is_some_and(|t| t.role == HeadingRole::Title);
                (groups[i].len(), !is_title, i)
            })
            .expect("non-empty groups when over budget");
        groups[victim].pop();
        total -= 1;
    }
}

fn group_by_heading(tokens: Vec<QueryToken>) -> Vec<Vec<QueryToken>> {
    let mut groups: Vec<Vec<QueryToken>> = Vec::new();
    for t in tokens {
        match groups.last_mut() {
            Some(g) if g[0].heading == t.heading => g.push(t),
            _ => groups.push(vec![t]),
        }
    }
    groups
}

/// Query tokens per matching segment, truncated to capacity. Without heading
/// independence there is a single segment holding the whole query.
pub fn query_layout(q: &Query, cfg: &RankerConfig) -> Vec<Vec<QueryToken>> {
    let tokens = annotated_tokens(q);
    if !cfg.variant.heading_independence {
        let mut groups = group_by_heading(tokens);
        truncate_longest_first(&mut groups, cfg.max_query_len);
        return vec![groups.into_iter().flatten().collect()];
    }
    HeadingRole::ALL
        .iter()
        .zip(cfg.segment_lens)
        .map(|(&role, cap)| {
            let mut groups = group_by_heading(tokens.iter().filter(|t| t.role == role).cloned().collect());
            truncate_longest_first(&mut groups, cap);
            groups.into_iter().flatten().collect()
        })
        .collect()
}

/// Row-major query × document similarity matrix; padding is zero.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl SimilarityMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }
}

/// Unit-normalised embedding of a token, if it has a non-zero one.
fn unit_vector(emb: &EmbeddingTable, token: &str) -> Option<Vec<f64>> {
    let v = emb.get(token)?;
    let n = math::norm(v);
    (n > 0.0).then(|| v.iter().map(|x| x / n).collect())
}

/// Cosine similarities between query and document tokens, with exact string
/// matches forced to 1. Extra tokens beyond `rows` × `cols` are dropped.
pub fn similarity_matrix<Q: AsRef<str>, D: AsRef<str>>(
    query: &[Q],
    doc: &[D],
    emb: &EmbeddingTable,
    rows: usize,
    cols: usize,
) -> SimilarityMatrix {
    let mut m = SimilarityMatrix::zeros(rows, cols);
    let doc = &doc[..doc.len().min(cols)];
    let doc_vecs: Vec<Option<Vec<f64>>> = doc.iter().map(|t| unit_vector(emb, t.as_ref())).collect();
    for (i, q) in query.iter().take(rows).enumerate() {
        let q = q.as_ref();
        let qv = unit_vector(emb, q);
        for (j, (d, dv)) in doc.iter().zip(&doc_vecs).enumerate() {
            m.data[i * cols + j] = if q == d.as_ref() {
                1.0
            } else {
                match (&qv, dv) {
                    (Some(a), Some(b)) => math::dot(a, b).clamp(-1.0, 1.0),
                    _ => 0.0,
                }
            };
        }
    }
    m
}

/// Similarity matrix of the (truncated) whole query against a paragraph.
pub fn build_sim_matrix(q: &Query, p: &Paragraph, emb: &EmbeddingTable, cfg: &RankerConfig) -> SimilarityMatrix {
    let layout = query_layout(
        q,
        &RankerConfig {
            variant: super::Variant::BASE,
            ..cfg.clone()
        },
    );
    let tokens: Vec<&str> = layout[0].iter().map(|t| t.text.as_str()).collect();
    similarity_matrix(&tokens, &tokenize(&p.text), emb, cfg.max_query_len, cfg.max_doc_len)
}

/// Per-segment query-side inputs that do not depend on the document.
#[derive(Debug, Clone, PartialEq)]
pub struct QuerySegment {
    pub tokens: Vec<String>,
    pub rows: usize,
    /// `rows × (1 + contextual width)`: IDF then contextual values.
    pub extras: Vec<f64>,
}

/// Query-side preparation, reused across candidate paragraphs.
#[derive(Debug, Clone, PartialEq)]
pub struct PreparedQuery {
    pub segments: Vec<QuerySegment>,
    pub topic: String,
    pub label: Option<String>,
}

impl PreparedQuery {
    pub fn new(q: &Query, ctx: &RankContext<'_>, cfg: &RankerConfig) -> Result<Self> {
        cfg.validate()?;
        ctx.check(cfg)?;
        let width = 1 + cfg.variant.contextual_width();
        let segments = query_layout(q, cfg)
            .into_iter()
            .zip(cfg.segment_rows())
            .map(|(tokens, rows)| {
                let mut extras = vec![0.0; rows * width];
                for (i, t) in tokens.iter().enumerate() {
                    let row = &mut extras[i * width..(i + 1) * width];
                    row[0] = ctx.idf.idf(&t.text);
                    let mut c = 1;
                    if cfg.variant.use_position_vectors {
                        row[c + t.role.index()] = 1.0;
                        c += 3;
                    }
                    if cfg.variant.use_frequency_vector {
                        let table = ctx.headings.expect("checked above");
                        row[c] = f64::from(table.stratify(&q.headings[t.heading]));
                    }
                }
                QuerySegment {
                    tokens: tokens.into_iter().map(|t| t.text).collect(),
                    rows,
                    extras,
                }
            })
            .collect();
        let label = ctx.kg.map(|kg| kg.vocab.label(q));
        Ok(Self {
            segments,
            topic: q.title().into(),
            label,
        })
    }

    pub fn with_document(&self, p: &Paragraph, ctx: &RankContext<'_>, cfg: &RankerConfig) -> Prepared {
        let doc = tokenize(&p.text);
        let segments = self
            .segments
            .iter()
            .map(|s| SegmentInput {
                sim: similarity_matrix(&s.tokens, &doc, ctx.embeddings, s.rows, cfg.max_doc_len),
                extras: s.extras.clone(),
            })
            .collect();
        let kg = match (cfg.variant.use_kg_scores, ctx.kg, &self.label) {
            (true, Some(kg), Some(label)) => {
                entity_scores(kg.embeddings, &self.topic, label, p, kg.source, cfg.n_entscores)
            }
            _ => Vec::new(),
        };
        Prepared { segments, kg }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SegmentInput {
    pub sim: SimilarityMatrix,
    pub extras: Vec<f64>,
}

/// Model input for one query–paragraph pair.
#[derive(Debug, Clone, PartialEq)]
pub struct Prepared {
    pub segments: Vec<SegmentInput>,
    pub kg: Vec<f64>,
}

pub fn prepare(q: &Query, p: &Paragraph, ctx: &RankContext<'_>, cfg: &RankerConfig) -> Result<Prepared> {
    Ok(PreparedQuery::new(q, ctx, cfg)?.with_document(p, ctx, cfg))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ranker::Variant;

    fn tokens_of(layout: &[QueryToken]) -> Vec<&str> {
        layout.iter().map(|t| t.text.as_str()).collect()
    }

    #[test]
    fn truncation_keeps_earliest_tokens_and_title_last() {
        let q = Query::new("q", ["a b c", "d e f g h", "i j"]).unwrap();
        let cfg = RankerConfig::default().with_query_len(6);
        let layout = query_layout(&q, &cfg);
        assert_eq!(tokens_of(&layout[0]), ["a", "b", "d", "e", "i", "j"]);

        let cfg = RankerConfig::default().with_query_len(4);
        assert_eq!(tokens_of(&query_layout(&q, &cfg)[0]), ["a", "b", "d", "i"]);

        let short = RankerConfig::default();
        assert_eq!(query_layout(&q, &short)[0].len(), 10);
    }

    #[test]
    fn heading_independent_segments() {
        let q = Query::new("q", ["Medical tourism", "Destinations", "Europe", "Finland"]).unwrap();
        let cfg = RankerConfig::default().with_variant("hi".parse::<Variant>().unwrap());
        let layout = query_layout(&q, &cfg);
        assert_eq!(tokens_of(&layout[0]), ["medical", "tourism"]);
        assert_eq!(tokens_of(&layout[1]), ["destinations", "europe"]);
        assert_eq!(tokens_of(&layout[2]), ["finland"]);

        let single = Query::new("q", ["X"]).unwrap();
        let layout = query_layout(&single, &cfg);
        assert_eq!(layout[0].len(), 1);
        assert!(layout[1].is_empty() && layout[2].is_empty());
    }

    #[test]
    fn similarity_matrix_rules() {
        let mut emb = EmbeddingTable::new(2).unwrap();
        emb.insert("a", vec![1.0, 0.0]).unwrap();
        emb.insert("b", vec![0.0, 1.0]).unwrap();
        emb.insert("c", vec![2.0, 2.0]).unwrap();
        let m = similarity_matrix(&["oov", "a"], &["oov", "b", "c", "a"], &emb, 3, 3);
        assert_eq!(m.row(0), &[1.0, 0.0, 0.0]);
        assert_eq!(m.get(1, 1), 0.0);
        assert!((m.get(1, 2) - core::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
        assert_eq!(m.row(2), &[0.0; 3]);

        let empty = similarity_matrix(&["a"], &[] as &[&str], &emb, 2, 4);
        assert!(empty.data.iter().all(|&v| v == 0.0));
    }
}
