//! Pair datasets and the metrics used to score antonym/synonym separation:
//! average precision, ROC-AUC, Spearman's ρ and per-label median cosines.
//!
//! Rankings are total orders: descending score, ties broken by `word1`
//! then `word2` ascending. Pairs with an unrepresented word are excluded
//! from every metric but counted in the coverage figures.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::corpus::Vocabulary;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::vectors::DenseEmbeddings;
use crate::weighting::{sparse_cosine_checked, WeightedMatrix};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Label {
    #[serde(rename = "ANT")]
    Ant,
    #[serde(rename = "SYN")]
    Syn,
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Label::Ant => "ANT",
            Label::Syn => "SYN",
        })
    }
}

impl FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ANT" => Ok(Label::Ant),
            "SYN" => Ok(Label::Syn),
            other => Err(Error::Config(format!("unknown label {other:?} (expected ANT or SYN)"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum WordClass {
    #[serde(rename = "ADJ")]
    Adj,
    #[serde(rename = "NOUN")]
    Noun,
    #[serde(rename = "VERB")]
    Verb,
}

impl fmt::Display for WordClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            WordClass::Adj => "ADJ",
            WordClass::Noun => "NOUN",
            WordClass::Verb => "VERB",
        })
    }
}

impl FromStr for WordClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ADJ" => Ok(WordClass::Adj),
            "NOUN" => Ok(WordClass::Noun),
            "VERB" => Ok(WordClass::Verb),
            other => Err(Error::Config(format!("unknown word class {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RelationPair {
    pub word1: String,
    pub word2: String,
    pub label: Label,
    pub class: WordClass,
}

fn unordered(a: &str, b: &str) -> (String, String) {
    if a <= b {
        (a.to_owned(), b.to_owned())
    } else {
        (b.to_owned(), a.to_owned())
    }
}

fn data_lines<R: BufRead>(reader: R) -> impl Iterator<Item = Result<(usize, String)>> {
    reader.lines().enumerate().filter_map(|(i, line)| match line {
        Err(e) => Some(Err(e.into())),
        Ok(l) if l.trim().is_empty() || l.starts_with('#') => None,
        Ok(l) => Some(Ok((i + 1, l))),
    })
}

/// Labelled word pairs, `word1<TAB>word2<TAB>ANT|SYN<TAB>ADJ|NOUN|VERB`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RelationPairSet {
    pairs: Vec<RelationPair>,
}

impl RelationPairSet {
    /// Rejects a repeated unordered pair within one word class.
    pub fn new(pairs: Vec<RelationPair>) -> Result<Self> {
        let mut seen = HashSet::new();
        for p in &pairs {
            let (a, b) = unordered(&p.word1, &p.word2);
            if !seen.insert((p.class, a, b)) {
                return Err(Error::Config(format!(
                    "duplicate pair {} {} in class {}",
                    p.word1, p.word2, p.class
                )));
            }
        }
        Ok(RelationPairSet { pairs })
    }

    pub fn read<R: BufRead>(reader: R) -> Result<Self> {
        let mut pairs = Vec::new();
        let mut seen = HashSet::new();
        for item in data_lines(reader) {
            let (n, line) = item?;
            let f: Vec<&str> = line.split('\t').map(str::trim).collect();
            if f.len() != 4 {
                return Err(Error::parse(n, "expected word1<TAB>word2<TAB>ANT|SYN<TAB>ADJ|NOUN|VERB"));
            }
            let label = f[2].parse().map_err(|e: Error| Error::parse(n, e.to_string()))?;
            let class = f[3].parse().map_err(|e: Error| Error::parse(n, e.to_string()))?;
            let (a, b) = unordered(f[0], f[1]);
            if !seen.insert((class, a, b)) {
                return Err(Error::parse(n, format!("duplicate pair {} {}", f[0], f[1])));
            }
            pairs.push(RelationPair {
                word1: f[0].to_owned(),
                word2: f[1].to_owned(),
                label,
                class,
            });
        }
        Ok(RelationPairSet { pairs })
    }

    pub fn write_tsv<W: Write>(&self, mut w: W) -> Result<()> {
        for p in &self.pairs {
            writeln!(w, "{}\t{}\t{}\t{}", p.word1, p.word2, p.label, p.class)?;
        }
        Ok(())
    }

    pub fn pairs(&self) -> &[RelationPair] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn classes(&self) -> BTreeSet<WordClass> {
        self.pairs.iter().map(|p| p.class).collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimilarityPair {
    pub word1: String,
    pub word2: String,
    pub rating: f64,
}

/// Graded pairs, `word1<TAB>word2<TAB>rating`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SimilarityPairSet {
    pairs: Vec<SimilarityPair>,
}

impl SimilarityPairSet {
    pub fn new(pairs: Vec<SimilarityPair>) -> Result<Self> {
        let mut seen = HashSet::new();
        for p in &pairs {
            if !p.rating.is_finite() {
                return Err(Error::Config(format!("non-finite rating for {} {}", p.word1, p.word2)));
            }
            if !seen.insert(unordered(&p.word1, &p.word2)) {
                return Err(Error::Config(format!("duplicate pair {} {}", p.word1, p.word2)));
            }
        }
        Ok(SimilarityPairSet { pairs })
    }

    pub fn read<R: BufRead>(reader: R) -> Result<Self> {
        let mut pairs = Vec::new();
        for item in data_lines(reader) {
            let (n, line) = item?;
            let f: Vec<&str> = line.split('\t').map(str::trim).collect();
            if f.len() != 3 {
                return Err(Error::parse(n, "expected word1<TAB>word2<TAB>rating"));
            }
            let rating: f64 = f[2]
                .parse()
                .map_err(|_| Error::parse(n, format!("bad rating {:?}", f[2])))?;
            pairs.push(SimilarityPair {
                word1: f[0].to_owned(),
                word2: f[1].to_owned(),
                rating,
            });
        }
        Self::new(pairs)
    }

    pub fn write_tsv<W: Write>(&self, mut w: W) -> Result<()> {
        for p in &self.pairs {
            writeln!(w, "{}\t{}\t{}", p.word1, p.word2, p.rating)?;
        }
        Ok(())
    }

    pub fn pairs(&self) -> &[SimilarityPair] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

/// Anything that can produce a cosine for two words.
pub trait WordVectors {
    /// A word is represented when it has a non-zero vector.
    fn represented(&self, word: &str) -> bool;

    fn cosine(&self, a: &str, b: &str) -> Option<f64>;
}

impl<T: Scalar> WordVectors for DenseEmbeddings<T> {
    fn represented(&self, word: &str) -> bool {
        self.vector(word).is_some_and(|v| v.iter().any(|x| *x != T::zero()))
    }

    fn cosine(&self, a: &str, b: &str) -> Option<f64> {
        self.similarity(a, b).map(Scalar::as_f64)
    }
}

/// Rows of a sparse weighted matrix addressed by word.
pub struct SparseVectors<'a, T> {
    pub vocab: &'a Vocabulary,
    pub matrix: &'a WeightedMatrix<T>,
}

impl<T: Scalar> SparseVectors<'_, T> {
    fn row_id(&self, word: &str) -> Option<u32> {
        self.vocab.id(word).filter(|&id| (id as usize) < self.matrix.n_rows())
    }
}

impl<T: Scalar> WordVectors for SparseVectors<'_, T> {
    fn represented(&self, word: &str) -> bool {
        self.row_id(word).is_some_and(|id| !self.matrix.row(id).is_empty())
    }

    fn cosine(&self, a: &str, b: &str) -> Option<f64> {
        let (ra, rb) = (self.row_id(a)?, self.row_id(b)?);
        sparse_cosine_checked(self.matrix.row(ra), self.matrix.row(rb)).map(Scalar::as_f64)
    }
}

/// Cosine per pair, `None` (MISSING) when a word is unrepresented.
pub fn score_pairs<'p, V: WordVectors + ?Sized>(vectors: &V, pairs: &'p [RelationPair]) -> Vec<(&'p RelationPair, Option<f64>)> {
    pairs.iter().map(|p| (p, vectors.cosine(&p.word1, &p.word2))).collect()
}

/// Orders `(score, word1, word2, label)` items by descending score, then
/// `word1`, then `word2`, and returns the labels in rank order.
pub fn rank_labels<'a>(items: impl IntoIterator<Item = (f64, &'a str, &'a str, Label)>) -> Vec<Label> {
    let mut items: Vec<_> = items.into_iter().collect();
    items.sort_by(|a, b| {
        b.0.partial_cmp(&a.0)
            .expect("finite scores")
            .then_with(|| a.1.cmp(b.1))
            .then_with(|| a.2.cmp(b.2))
    });
    items.into_iter().map(|i| i.3).collect()
}

/// `(1/R) Σ_k precision@k · rel(k)` over a ranked label list.
pub fn average_precision(ranked: &[Label], relevant: Label) -> Result<f64> {
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (k, &l) in ranked.iter().enumerate() {
        if l == relevant {
            hits += 1;
            sum += hits as f64 / (k + 1) as f64;
        }
    }
    if hits == 0 {
        return Err(Error::UndefinedMetric(format!("no {relevant} items to rank")));
    }
    Ok(sum / hits as f64)
}

/// Mann–Whitney AUC: `P(pos > neg) + 0.5 P(tie)`.
pub fn auc(scores: &[f64], positive: &[bool]) -> Result<f64> {
    if scores.len() != positive.len() {
        return Err(Error::Dimension(format!("{} scores for {} labels", scores.len(), positive.len())));
    }
    let n_pos = positive.iter().filter(|&&p| p).count();
    let n_neg = positive.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::UndefinedMetric("AUC needs both classes".into()));
    }
    let ranks = average_ranks(scores);
    let rank_sum: f64 = ranks.iter().zip(positive).filter(|(_, &p)| p).map(|(r, _)| r).sum();
    let u = rank_sum - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Ok(u / (n_pos as f64 * n_neg as f64))
}

/// 1-based ranks in ascending order, ties share their average rank.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).expect("finite values"));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let avg = (i + j + 2) as f64 / 2.0;
        for &o in &order[i..=j] {
            ranks[o] = avg;
        }
        i = j + 1;
    }
    ranks
}

/// Pearson correlation of average-tied ranks.
pub fn spearman(pred: &[f64], gold: &[f64]) -> Result<f64> {
    if pred.len() != gold.len() {
        return Err(Error::Dimension(format!("{} predictions for {} gold values", pred.len(), gold.len())));
    }
    if pred.len() < 2 {
        return Err(Error::UndefinedMetric("Spearman needs at least two pairs".into()));
    }
    let (rp, rg) = (average_ranks(pred), average_ranks(gold));
    let n = rp.len() as f64;
    let (mp, mg) = (rp.iter().sum::<f64>() / n, rg.iter().sum::<f64>() / n);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in rp.iter().zip(&rg) {
        sxy += (x - mp) * (y - mg);
        sxx += (x - mp) * (x - mp);
        syy += (y - mg) * (y - mg);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::UndefinedMetric("zero variance in a ranking".into()));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Median with the even-count average convention.
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
    let mid = v.len() / 2;
    Some(if v.len() % 2 == 1 { v[mid] } else { (v[mid - 1] + v[mid]) / 2.0 })
}

/// Pearson χ² test of independence on a 2×2 contingency table, e.g. pairs
/// placed in the expected half of the ranking by two models.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ChiSquareTest {
    pub statistic: f64,
    pub p_value: f64,
}

pub fn chi_square_2x2(table: [[u64; 2]; 2]) -> Result<ChiSquareTest> {
    let total: u64 = table.iter().flatten().sum();
    let rows = [table[0][0] + table[0][1], table[1][0] + table[1][1]];
    let cols = [table[0][0] + table[1][0], table[0][1] + table[1][1]];
    if total == 0 || rows.contains(&0) || cols.contains(&0) {
        return Err(Error::UndefinedMetric("chi-square needs non-empty margins".into()));
    }
    let mut statistic = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            let expected = rows[i] as f64 * cols[j] as f64 / total as f64;
            statistic += (table[i][j] as f64 - expected).powi(2) / expected;
        }
    }
    let dist = ChiSquared::new(1.0).expect("one degree of freedom");
    Ok(ChiSquareTest {
        statistic,
        p_value: 1.0 - dist.cdf(statistic),
    })
}

/// Number of `relevant` items in the first half of a ranking and elsewhere.
pub fn half_split(ranked: &[Label], relevant: Label) -> (u64, u64) {
    let half = ranked.len() / 2;
    let top = ranked[..half].iter().filter(|&&l| l == relevant).count() as u64;
    let rest = ranked[half..].iter().filter(|&&l| l == relevant).count() as u64;
    (top, rest)
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Coverage {
    pub scored: usize,
    pub total: usize,
    pub oov: Vec<String>,
}

impl Coverage {
    pub fn ratio(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.scored as f64 / self.total as f64
        }
    }
}

fn coverage<'a, V: WordVectors + ?Sized>(vectors: &V, words: impl IntoIterator<Item = &'a str>, scored: usize, total: usize) -> Coverage {
    let oov: BTreeSet<&str> = words.into_iter().filter(|w| !vectors.represented(w)).collect();
    Coverage {
        scored,
        total,
        oov: oov.into_iter().map(str::to_owned).collect(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClassReport {
    pub class: WordClass,
    pub ap_syn: Option<f64>,
    pub ap_ant: Option<f64>,
    /// Antonyms as the positive class, detected by low cosine.
    pub auc: Option<f64>,
    pub median_syn: Option<f64>,
    pub median_ant: Option<f64>,
    pub coverage: Coverage,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct MetricReport {
    pub classes: Vec<ClassReport>,
    pub spearman: Option<f64>,
    pub similarity_coverage: Option<Coverage>,
    pub warnings: Vec<String>,
}

impl MetricReport {
    pub fn class(&self, class: WordClass) -> Option<&ClassReport> {
        self.classes.iter().find(|c| c.class == class)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// `class<TAB>AP_SYN<TAB>AP_ANT<TAB>scored<TAB>total`
    pub fn write_ap_tsv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "class\tAP_SYN\tAP_ANT\tscored\ttotal")?;
        for c in &self.classes {
            writeln!(
                w,
                "{}\t{}\t{}\t{}\t{}",
                c.class,
                fmt_metric(c.ap_syn),
                fmt_metric(c.ap_ant),
                c.coverage.scored,
                c.coverage.total
            )?;
        }
        Ok(())
    }

    /// `class<TAB>AUC<TAB>scored<TAB>total`; antonyms are the positive class
    /// with negated cosines.
    pub fn write_auc_tsv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "# orientation=ANT positive, scores negated")?;
        writeln!(w, "class\tAUC\tscored\ttotal")?;
        for c in &self.classes {
            writeln!(
                w,
                "{}\t{}\t{}\t{}",
                c.class,
                fmt_metric(c.auc),
                c.coverage.scored,
                c.coverage.total
            )?;
        }
        Ok(())
    }

    /// `class<TAB>label<TAB>median<TAB>n`; empty cells are left blank.
    pub fn write_median_tsv<W: Write>(&self, mut w: W, counts: &BTreeMap<(WordClass, Label), usize>) -> Result<()> {
        writeln!(w, "class\tlabel\tmedian\tn")?;
        for c in &self.classes {
            for (label, m) in [(Label::Syn, c.median_syn), (Label::Ant, c.median_ant)] {
                let n = counts.get(&(c.class, label)).copied().unwrap_or(0);
                writeln!(w, "{}\t{}\t{}\t{}", c.class, label, fmt_metric(m), n)?;
            }
        }
        Ok(())
    }

    pub fn write_spearman_tsv<W: Write>(&self, mut w: W) -> Result<()> {
        let cov = self.similarity_coverage.clone().unwrap_or_default();
        writeln!(w, "rho\tscored\ttotal")?;
        writeln!(w, "{}\t{}\t{}", fmt_metric(self.spearman), cov.scored, cov.total)?;
        Ok(())
    }
}

fn fmt_metric(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.6}")).unwrap_or_default()
}

/// Scored pairs of one class, split by label.
struct ClassScores<'a> {
    scored: Vec<(f64, &'a str, &'a str, Label)>,
    total: usize,
    words: Vec<&'a str>,
}

fn scores_by_class<'a, V: WordVectors + ?Sized>(vectors: &V, pairs: &'a RelationPairSet) -> BTreeMap<WordClass, ClassScores<'a>> {
    let mut out: BTreeMap<WordClass, ClassScores<'a>> = BTreeMap::new();
    for (p, score) in score_pairs(vectors, pairs.pairs()) {
        let entry = out.entry(p.class).or_insert_with(|| ClassScores {
            scored: Vec::new(),
            total: 0,
            words: Vec::new(),
        });
        entry.total += 1;
        entry.words.push(&p.word1);
        entry.words.push(&p.word2);
        if let Some(s) = score {
            entry.scored.push((s, &p.word1, &p.word2, p.label));
        }
    }
    out
}

/// AP, AUC, medians and coverage for every word class present.
pub fn eval_ap<V: WordVectors + ?Sized>(vectors: &V, pairs: &RelationPairSet) -> MetricReport {
    let mut report = MetricReport::default();
    for (class, cs) in scores_by_class(vectors, pairs) {
        let cov = coverage(vectors, cs.words.iter().copied(), cs.scored.len(), cs.total);
        if cs.scored.is_empty() {
            report.warnings.push(format!("{class}: no scored pairs, class omitted"));
            continue;
        }
        let ranked = rank_labels(cs.scored.iter().copied());
        let values = |l: Label| -> Vec<f64> { cs.scored.iter().filter(|s| s.3 == l).map(|s| s.0).collect() };
        let (syn, ant) = (values(Label::Syn), values(Label::Ant));
        let mut note = |what: &str, r: Result<f64>| match r {
            Ok(v) => Some(v),
            Err(e) => {
                report.warnings.push(format!("{class}: {what} undefined ({e})"));
                None
            }
        };
        let ap_syn = note("AP_SYN", average_precision(&ranked, Label::Syn));
        let ap_ant = note("AP_ANT", average_precision(&ranked, Label::Ant));
        let neg: Vec<f64> = cs.scored.iter().map(|s| -s.0).collect();
        let is_ant: Vec<bool> = cs.scored.iter().map(|s| s.3 == Label::Ant).collect();
        let auc_v = note("AUC", auc(&neg, &is_ant));
        let median_syn = median(&syn);
        let median_ant = median(&ant);
        for (l, m) in [(Label::Syn, median_syn), (Label::Ant, median_ant)] {
            if m.is_none() {
                report.warnings.push(format!("{class}: no scored {l} pairs, median blank"));
            }
        }
        report.classes.push(ClassReport {
            class,
            ap_syn,
            ap_ant,
            auc: auc_v,
            median_syn,
            median_ant,
            coverage: cov,
        });
    }
    report
}

/// Scored-pair counts per `(class, label)` cell.
pub fn cell_counts<V: WordVectors + ?Sized>(vectors: &V, pairs: &RelationPairSet) -> BTreeMap<(WordClass, Label), usize> {
    let mut out = BTreeMap::new();
    for (p, s) in score_pairs(vectors, pairs.pairs()) {
        if s.is_some() {
            *out.entry((p.class, p.label)).or_default() += 1;
        }
    }
    out
}

/// Spearman's ρ between cosines and gold ratings over covered pairs.
pub fn eval_spearman<V: WordVectors + ?Sized>(vectors: &V, pairs: &SimilarityPairSet) -> Result<MetricReport> {
    let mut pred = Vec::new();
    let mut gold = Vec::new();
    for p in pairs.pairs() {
        if let Some(s) = vectors.cosine(&p.word1, &p.word2) {
            pred.push(s);
            gold.push(p.rating);
        }
    }
    let words = pairs.pairs().iter().flat_map(|p| [p.word1.as_str(), p.word2.as_str()]);
    let cov = coverage(vectors, words, pred.len(), pairs.len());
    Ok(MetricReport {
        spearman: Some(spearman(&pred, &gold)?),
        similarity_coverage: Some(cov),
        ..MetricReport::default()
    })
}
