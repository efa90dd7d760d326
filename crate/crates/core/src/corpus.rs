//! Corpus ingestion: vocabulary construction, frequency subsampling and
//! windowed co-occurrence counting.
//!
//! A corpus is one document per line, whitespace tokenized. Documents are
//! encoded into dense word ids; tokens outside the vocabulary are removed
//! before any windowing happens, so windows close over the gaps.

use std::collections::HashMap;
use std::io::{BufRead, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::io::is_header_line;

/// A document as a sequence of vocabulary ids.
pub type Document = Vec<u32>;

/// Reads whitespace-tokenized documents, one per line.
pub fn read_documents<R: BufRead>(reader: R, lowercase: bool) -> Result<Vec<Vec<String>>> {
    let mut docs = Vec::new();
    for line in reader.lines() {
        let line = line?;
        let doc = line
            .split_whitespace()
            .map(|t| if lowercase { t.to_lowercase() } else { t.to_owned() })
            .collect();
        docs.push(doc);
    }
    Ok(docs)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VocabEntry {
    pub word: String,
    pub count: u64,
}

/// Word to dense id mapping with corpus frequencies.
///
/// Ids follow descending frequency, ties broken lexicographically.
#[derive(Clone, Debug, Default)]
pub struct Vocabulary {
    entries: Vec<VocabEntry>,
    index: HashMap<String, u32>,
    total_tokens: u64,
}

impl PartialEq for Vocabulary {
    fn eq(&self, other: &Self) -> bool {
        self.entries == other.entries && self.total_tokens == other.total_tokens
    }
}

impl Vocabulary {
    /// Keeps every type occurring at least `min_count` times.
    pub fn build<S: AsRef<str>>(docs: &[Vec<S>], min_count: u64) -> Result<Self> {
        if min_count == 0 {
            return Err(Error::Config("min_count must be at least 1".into()));
        }
        let mut freq: HashMap<&str, u64> = HashMap::new();
        for doc in docs {
            for tok in doc {
                *freq.entry(tok.as_ref()).or_default() += 1;
            }
        }
        let entries = freq
            .into_iter()
            .filter(|&(_, c)| c >= min_count)
            .map(|(w, count)| VocabEntry {
                word: w.to_owned(),
                count,
            })
            .collect();
        Ok(Self::from_entries(entries))
    }

    fn from_entries(mut entries: Vec<VocabEntry>) -> Self {
        entries.sort_by(|a, b| b.count.cmp(&a.count).then_with(|| a.word.cmp(&b.word)));
        let index = entries
            .iter()
            .enumerate()
            .map(|(i, e)| (e.word.clone(), i as u32))
            .collect();
        let total_tokens = entries.iter().map(|e| e.count).sum();
        Vocabulary {
            entries,
            index,
            total_tokens,
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn id(&self, word: &str) -> Option<u32> {
        self.index.get(word).copied()
    }

    pub fn word(&self, id: u32) -> &str {
        &self.entries[id as usize].word
    }

    pub fn count(&self, id: u32) -> u64 {
        self.entries[id as usize].count
    }

    pub fn entries(&self) -> &[VocabEntry] {
        &self.entries
    }

    pub fn total_tokens(&self) -> u64 {
        self.total_tokens
    }

    /// Relative corpus frequency of `id` among retained tokens.
    pub fn frequency(&self, id: u32) -> f64 {
        self.count(id) as f64 / self.total_tokens as f64
    }

    /// Maps documents onto ids, dropping out-of-vocabulary tokens.
    pub fn encode<S: AsRef<str>>(&self, docs: &[Vec<S>]) -> Vec<Document> {
        docs.iter()
            .map(|doc| doc.iter().filter_map(|t| self.id(t.as_ref())).collect())
            .collect()
    }

    /// TSV `word<TAB>id<TAB>count`, sorted by id.
    pub fn write_tsv<W: Write>(&self, mut w: W) -> Result<()> {
        for (id, e) in self.entries.iter().enumerate() {
            writeln!(w, "{}\t{}\t{}", e.word, id, e.count)?;
        }
        Ok(())
    }

    pub fn read_tsv<R: BufRead>(reader: R) -> Result<Self> {
        let mut entries = Vec::new();
        for (n, line) in reader.lines().enumerate() {
            let line = line?;
            let lineno = n + 1;
            if is_header_line(&line) || line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 3 {
                return Err(Error::parse(lineno, "expected word<TAB>id<TAB>count"));
            }
            let id: usize = fields[1]
                .parse()
                .map_err(|_| Error::parse(lineno, format!("bad id {:?}", fields[1])))?;
            let count: u64 = fields[2]
                .parse()
                .map_err(|_| Error::parse(lineno, format!("bad count {:?}", fields[2])))?;
            if id != entries.len() {
                return Err(Error::parse(lineno, format!("ids must be dense and sorted, got {id}")));
            }
            entries.push(VocabEntry {
                word: fields[0].to_owned(),
                count,
            });
        }
        let vocab = Self::from_entries(entries.clone());
        if vocab.entries != entries {
            return Err(Error::parse(0, "vocabulary not ordered by descending count"));
        }
        if vocab.index.len() != vocab.entries.len() {
            return Err(Error::parse(0, "duplicate surface form"));
        }
        Ok(vocab)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SubsampleConfig {
    /// Relative-frequency threshold; `f64::INFINITY` disables subsampling.
    pub threshold: f64,
    pub seed: u64,
}

impl Default for SubsampleConfig {
    fn default() -> Self {
        SubsampleConfig {
            threshold: 1e-5,
            seed: 1,
        }
    }
}

/// Probability of discarding one occurrence of a word with relative
/// frequency `freq`.
pub fn discard_probability(freq: f64, threshold: f64) -> f64 {
    if freq <= 0.0 {
        return 0.0;
    }
    (1.0 - (threshold / freq).sqrt()).clamp(0.0, 1.0)
}

/// Precomputed per-word discard probabilities.
#[derive(Clone, Debug)]
pub struct Subsampler {
    discard: Vec<f64>,
}

impl Subsampler {
    pub fn new(vocab: &Vocabulary, threshold: f64) -> Result<Self> {
        if !(threshold > 0.0) {
            return Err(Error::Config("subsample threshold must be positive".into()));
        }
        let discard = (0..vocab.len() as u32)
            .map(|id| discard_probability(vocab.frequency(id), threshold))
            .collect();
        Ok(Subsampler { discard })
    }

    pub fn discard_probability(&self, id: u32) -> f64 {
        self.discard[id as usize]
    }

    /// Words whose discard probability is zero never draw from `rng`.
    pub fn keep<R: Rng>(&self, id: u32, rng: &mut R) -> bool {
        let p = self.discard[id as usize];
        p <= 0.0 || rng.random::<f64>() >= p
    }

    pub fn apply<R: Rng>(&self, doc: &[u32], rng: &mut R) -> Document {
        doc.iter().copied().filter(|&id| self.keep(id, rng)).collect()
    }
}

/// Discards frequent tokens independently with probability
/// `max(0, 1 - sqrt(t / f(w)))`. Deterministic for a given seed.
pub fn subsample(docs: &[Document], vocab: &Vocabulary, cfg: &SubsampleConfig) -> Result<Vec<Document>> {
    let sampler = Subsampler::new(vocab, cfg.threshold)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    Ok(docs.iter().map(|d| sampler.apply(d, &mut rng)).collect())
}

/// Sparse symmetric-window co-occurrence counts, sorted by (target, feature).
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CooccurrenceCounts {
    triples: Vec<(u32, u32, u64)>,
    window: usize,
}

impl CooccurrenceCounts {
    pub fn from_map(map: HashMap<(u32, u32), u64>, window: usize) -> Self {
        let mut triples: Vec<_> = map
            .into_iter()
            .filter(|&(_, c)| c > 0)
            .map(|((w, f), c)| (w, f, c))
            .collect();
        triples.sort_unstable();
        CooccurrenceCounts { triples, window }
    }

    /// Sums partial counts; the result does not depend on part order.
    pub fn merge(parts: impl IntoIterator<Item = CooccurrenceCounts>) -> Self {
        let mut map = HashMap::new();
        let mut window = 0;
        for part in parts {
            window = window.max(part.window);
            for (w, f, c) in part.triples {
                *map.entry((w, f)).or_insert(0) += c;
            }
        }
        Self::from_map(map, window)
    }

    pub fn triples(&self) -> &[(u32, u32, u64)] {
        &self.triples
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    pub fn get(&self, target: u32, feature: u32) -> u64 {
        self.triples
            .binary_search_by(|&(w, f, _)| (w, f).cmp(&(target, feature)))
            .map(|i| self.triples[i].2)
            .unwrap_or(0)
    }

    pub fn total(&self) -> u64 {
        self.triples.iter().map(|t| t.2).sum()
    }

    pub fn write_tsv<W: Write>(&self, mut w: W) -> Result<()> {
        for &(t, f, c) in &self.triples {
            writeln!(w, "{t}\t{f}\t{c}")?;
        }
        Ok(())
    }

    pub fn read_tsv<R: BufRead>(reader: R, window: usize) -> Result<Self> {
        let mut map = HashMap::new();
        for (n, line) in reader.lines().enumerate() {
            let line = line?;
            if line.starts_with('#') || line.is_empty() {
                continue;
            }
            let mut it = line.split('\t');
            let mut field = |name: &str| -> Result<u64> {
                it.next()
                    .and_then(|s| s.parse().ok())
                    .ok_or_else(|| Error::parse(n + 1, format!("bad or missing {name}")))
            };
            let t = field("target_id")? as u32;
            let f = field("feature_id")? as u32;
            let c = field("count")?;
            if c == 0 {
                return Err(Error::parse(n + 1, "counts must be positive"));
            }
            *map.entry((t, f)).or_insert(0) += c;
        }
        Ok(Self::from_map(map, window))
    }

    /// Fails when an id is not covered by `vocab`.
    pub fn check_vocabulary(&self, vocab: &Vocabulary) -> Result<()> {
        let n = vocab.len() as u32;
        match self.triples.iter().find(|&&(w, f, _)| w >= n || f >= n) {
            Some(&(w, f, _)) => Err(Error::VocabularyMismatch(format!(
                "pair ({w}, {f}) outside vocabulary of size {n}"
            ))),
            None => Ok(()),
        }
    }
}

fn count_into(doc: &[u32], window: usize, map: &mut HashMap<(u32, u32), u64>) {
    for (i, &w) in doc.iter().enumerate() {
        let hi = (i + window).min(doc.len() - 1);
        for &f in &doc[i + 1..=hi] {
            *map.entry((w, f)).or_insert(0) += 1;
            *map.entry((f, w)).or_insert(0) += 1;
        }
    }
}

/// Counts `(w_i, w_j)` for `0 < |i - j| <= window` within each document.
pub fn count_cooccurrences(docs: &[Document], vocab: &Vocabulary, window: usize) -> Result<CooccurrenceCounts> {
    count_cooccurrences_sharded(docs, vocab, window, 1)
}

/// Same result as [`count_cooccurrences`], counted over `shards` workers.
pub fn count_cooccurrences_sharded(
    docs: &[Document],
    vocab: &Vocabulary,
    window: usize,
    shards: usize,
) -> Result<CooccurrenceCounts> {
    if window == 0 {
        return Err(Error::Config("window must be at least 1".into()));
    }
    let n = vocab.len() as u32;
    if let Some(bad) = docs.iter().flatten().find(|&&id| id >= n) {
        return Err(Error::VocabularyMismatch(format!("token id {bad} outside vocabulary")));
    }
    let shards = shards.max(1);
    let chunk = docs.len().div_ceil(shards).max(1);
    let parts: Vec<CooccurrenceCounts> = docs
        .par_chunks(chunk)
        .map(|part| {
            let mut map = HashMap::new();
            for doc in part.iter().filter(|d| !d.is_empty()) {
                count_into(doc, window, &mut map);
            }
            CooccurrenceCounts::from_map(map, window)
        })
        .collect();
    let mut merged = CooccurrenceCounts::merge(parts);
    merged.window = window;
    Ok(merged)
}
