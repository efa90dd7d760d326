//! Sparse weighted word-by-feature matrices: LMI association weights and
//! the lexical-contrast re-weighting built on top of them.

use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use dashmap::DashMap;
use rayon::prelude::*;

use crate::corpus::CooccurrenceCounts;
use crate::error::{Error, Result};
use crate::lexicon::IndexedLexicon;
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Scheme {
    Lmi,
    Sa,
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::Lmi => "LMI",
            Scheme::Sa => "SA",
        })
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "LMI" => Ok(Scheme::Lmi),
            "SA" => Ok(Scheme::Sa),
            other => Err(Error::Config(format!("unknown weighting scheme {other:?}"))),
        }
    }
}

/// One sparse row, indices strictly increasing.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SparseRow<T> {
    pub indices: Vec<u32>,
    pub values: Vec<T>,
}

impl<T: Scalar> SparseRow<T> {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn get(&self, index: u32) -> Option<T> {
        self.indices.binary_search(&index).ok().map(|i| self.values[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, T)> + '_ {
        self.indices.iter().copied().zip(self.values.iter().copied())
    }

    pub fn norm(&self) -> T {
        self.values.iter().map(|&v| v * v).sum::<T>().sqrt()
    }

    pub fn to_dense(&self, len: usize) -> Vec<T> {
        let mut out = vec![T::zero(); len];
        for (i, v) in self.iter() {
            out[i as usize] = v;
        }
        out
    }
}

/// Dot product over the index intersection of two sparse rows.
pub fn sparse_dot<T: Scalar>(a: &SparseRow<T>, b: &SparseRow<T>) -> T {
    let (mut i, mut j) = (0, 0);
    let mut acc = T::zero();
    while i < a.indices.len() && j < b.indices.len() {
        match a.indices[i].cmp(&b.indices[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                acc += a.values[i] * b.values[j];
                i += 1;
                j += 1;
            }
        }
    }
    acc
}

fn cosine_from_parts<T: Scalar>(dot: T, norm_a: T, norm_b: T) -> Option<T> {
    let denom = norm_a * norm_b;
    if denom > T::zero() {
        Some((dot / denom).max(-T::one()).min(T::one()))
    } else {
        None
    }
}

/// Cosine of two sparse rows; `None` when either row has zero norm.
pub fn sparse_cosine_checked<T: Scalar>(a: &SparseRow<T>, b: &SparseRow<T>) -> Option<T> {
    cosine_from_parts(sparse_dot(a, b), a.norm(), b.norm())
}

/// Cosine of two sparse rows, defined as 0 when a row is zero.
pub fn sparse_cosine<T: Scalar>(a: &SparseRow<T>, b: &SparseRow<T>) -> T {
    sparse_cosine_checked(a, b).unwrap_or_else(T::zero)
}

pub fn dense_cosine_checked<T: Scalar>(a: &[T], b: &[T]) -> Option<T> {
    use crate::scalar::{dot, norm};
    cosine_from_parts(dot(a, b), norm(a), norm(b))
}

/// Cosine of two dense vectors, defined as 0 when a vector is zero.
pub fn dense_cosine<T: Scalar>(a: &[T], b: &[T]) -> T {
    dense_cosine_checked(a, b).unwrap_or_else(T::zero)
}

/// Sparse word-by-feature matrix tagged with its weighting scheme.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightedMatrix<T> {
    scheme: Scheme,
    n_cols: usize,
    rows: Vec<SparseRow<T>>,
}

impl<T: Scalar> WeightedMatrix<T> {
    pub fn new(scheme: Scheme, n_rows: usize, n_cols: usize) -> Self {
        WeightedMatrix {
            scheme,
            n_cols,
            rows: vec![SparseRow::default(); n_rows],
        }
    }

    /// Builds from `(row, col, value)` triples; zero values are skipped.
    pub fn from_triples(
        scheme: Scheme,
        n_rows: usize,
        n_cols: usize,
        triples: impl IntoIterator<Item = (u32, u32, T)>,
    ) -> Result<Self> {
        let mut all: Vec<(u32, u32, T)> = triples.into_iter().filter(|t| t.2 != T::zero()).collect();
        all.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut m = Self::new(scheme, n_rows, n_cols);
        for (r, c, v) in all {
            if r as usize >= n_rows || c as usize >= n_cols {
                return Err(Error::Dimension(format!("entry ({r}, {c}) outside {n_rows}x{n_cols}")));
            }
            let row = &mut m.rows[r as usize];
            if row.indices.last() == Some(&c) {
                return Err(Error::Dimension(format!("duplicate entry ({r}, {c})")));
            }
            row.indices.push(c);
            row.values.push(v);
        }
        Ok(m)
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn row(&self, r: u32) -> &SparseRow<T> {
        &self.rows[r as usize]
    }

    pub fn rows(&self) -> &[SparseRow<T>] {
        &self.rows
    }

    pub fn get(&self, r: u32, c: u32) -> Option<T> {
        self.rows.get(r as usize).and_then(|row| row.get(c))
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(SparseRow::len).sum()
    }

    pub fn triples(&self) -> impl Iterator<Item = (u32, u32, T)> + '_ {
        self.rows
            .iter()
            .enumerate()
            .flat_map(|(r, row)| row.iter().map(move |(c, v)| (r as u32, c, v)))
    }

    pub fn write_tsv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "#scheme={}", self.scheme)?;
        writeln!(w, "#shape={}\t{}", self.n_rows(), self.n_cols)?;
        for (r, c, v) in self.triples() {
            writeln!(w, "{r}\t{c}\t{v:e}")?;
        }
        Ok(())
    }

    /// Reads the `#scheme=` TSV format. Without a `#shape=` line the shape
    /// falls back to `default_shape`.
    pub fn read_tsv<R: BufRead>(reader: R, default_shape: (usize, usize)) -> Result<Self> {
        let mut scheme = None;
        let mut shape = None;
        let mut triples = Vec::new();
        for (n, line) in reader.lines().enumerate() {
            let line = line?;
            let lineno = n + 1;
            if let Some(s) = line.strip_prefix("#scheme=") {
                scheme = Some(s.trim().parse::<Scheme>().map_err(|e| Error::parse(lineno, e.to_string()))?);
                continue;
            }
            if let Some(s) = line.strip_prefix("#shape=") {
                let dims: Vec<usize> = s.split('\t').filter_map(|x| x.trim().parse().ok()).collect();
                if dims.len() != 2 {
                    return Err(Error::parse(lineno, "bad #shape line"));
                }
                shape = Some((dims[0], dims[1]));
                continue;
            }
            if line.starts_with('#') || line.is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split('\t').collect();
            if f.len() != 3 {
                return Err(Error::parse(lineno, "expected target_id<TAB>feature_id<TAB>weight"));
            }
            let parse_id = |s: &str| s.parse::<u32>().map_err(|_| Error::parse(lineno, format!("bad id {s:?}")));
            let v: T = f[2]
                .parse()
                .map_err(|_| Error::parse(lineno, format!("bad weight {:?}", f[2])))?;
            triples.push((parse_id(f[0])?, parse_id(f[1])?, v));
        }
        let scheme = scheme.ok_or_else(|| Error::parse(0, "missing #scheme= header"))?;
        let (r, c) = shape.unwrap_or(default_shape);
        Self::from_triples(scheme, r, c, triples)
    }
}

/// Local mutual information over the pair table:
/// `#(w,f) * log2(#(w,f) * N / (marg(w) * marg(f)))`, positive cells only.
pub fn compute_lmi<T: Scalar>(counts: &CooccurrenceCounts, n_words: usize) -> Result<WeightedMatrix<T>> {
    counts.triples().iter().try_for_each(|&(w, f, _)| {
        if w as usize >= n_words || f as usize >= n_words {
            Err(Error::VocabularyMismatch(format!("pair ({w}, {f}) outside vocabulary")))
        } else {
            Ok(())
        }
    })?;
    let mut row_marg = vec![0u64; n_words];
    let mut col_marg = vec![0u64; n_words];
    for &(w, f, c) in counts.triples() {
        row_marg[w as usize] += c;
        col_marg[f as usize] += c;
    }
    let total = counts.total();
    let n = T::from_count(total);
    let triples = counts.triples().iter().filter_map(|&(w, f, c)| {
        let (mw, mf) = (row_marg[w as usize], col_marg[f as usize]);
        // exact positivity test keeps zero-association cells out
        if (c as u128) * (total as u128) <= (mw as u128) * (mf as u128) {
            return None;
        }
        let c_t = T::from_count(c);
        let ratio = c_t * n / (T::from_count(mw) * T::from_count(mf));
        Some((w, f, c_t * ratio.log2()))
    });
    WeightedMatrix::from_triples(Scheme::Lmi, n_words, n_words, triples)
}

/// Inverted index `f -> W(f)`: words holding a positive LMI weight for `f`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct FeatureIndex {
    words: Vec<Vec<u32>>,
}

impl FeatureIndex {
    pub fn build<T: Scalar>(lmi: &WeightedMatrix<T>) -> Self {
        let mut words = vec![Vec::new(); lmi.n_cols()];
        for (w, f, v) in lmi.triples() {
            if v > T::zero() {
                words[f as usize].push(w);
            }
        }
        FeatureIndex { words }
    }

    pub fn words(&self, feature: u32) -> &[u32] {
        self.words.get(feature as usize).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn contains(&self, feature: u32, word: u32) -> bool {
        self.words(feature).binary_search(&word).is_ok()
    }

    pub fn n_features(&self) -> usize {
        self.words.len()
    }
}

/// Visits the sorted intersection of two sorted id lists.
pub(crate) fn for_each_common(a: &[u32], b: &[u32], mut f: impl FnMut(u32)) {
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                f(a[i]);
                i += 1;
                j += 1;
            }
        }
    }
}

/// How the antonym-side similarities are averaged.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum AntonymMean {
    /// One mean over every `(w', v)` pair.
    #[default]
    Pooled,
    /// Mean over antonyms of each antonym's own mean.
    PerAntonym,
}

impl FromStr for AntonymMean {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pooled" => Ok(AntonymMean::Pooled),
            "per-antonym" => Ok(AntonymMean::PerAntonym),
            other => Err(Error::Config(format!("unknown antonym mean {other:?}"))),
        }
    }
}

impl fmt::Display for AntonymMean {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AntonymMean::Pooled => "pooled",
            AntonymMean::PerAntonym => "per-antonym",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SaOptions {
    pub ant_mean: AntonymMean,
    /// Keep the LMI row for words without lexicon relations.
    pub fallback_lmi: bool,
    /// Memoize word-word cosines across features.
    pub cache: bool,
}

impl Default for SaOptions {
    fn default() -> Self {
        SaOptions {
            ant_mean: AntonymMean::Pooled,
            fallback_lmi: false,
            cache: true,
        }
    }
}

struct RowCosines<'a, T: Scalar> {
    lmi: &'a WeightedMatrix<T>,
    norms: Vec<T>,
    cache: Option<DashMap<(u32, u32), T>>,
}

impl<T: Scalar> RowCosines<'_, T> {
    fn get(&self, a: u32, b: u32) -> T {
        let compute = || {
            let dot = sparse_dot(self.lmi.row(a), self.lmi.row(b));
            cosine_from_parts(dot, self.norms[a as usize], self.norms[b as usize]).unwrap_or_else(T::zero)
        };
        match &self.cache {
            Some(cache) => *cache.entry((a.min(b), a.max(b))).or_insert_with(compute),
            None => compute(),
        }
    }
}

/// Lexical-contrast weights: for every stored LMI cell `(w, f)`, the mean
/// cosine between `w` and its synonyms in `W(f)` minus the mean cosine
/// between each enriched antonym `w'` and the synonyms of `w'` in `W(f)`.
///
/// All similarities are taken on the original LMI rows. Rows of words
/// without synonyms or antonyms are omitted unless `fallback_lmi` is set.
pub fn compute_weight_sa<T: Scalar>(
    lmi: &WeightedMatrix<T>,
    index: &FeatureIndex,
    lex: &IndexedLexicon,
    opts: SaOptions,
) -> Result<WeightedMatrix<T>> {
    if lmi.scheme() != Scheme::Lmi {
        return Err(Error::Config("weight-sa expects an LMI matrix".into()));
    }
    if lex.len() != lmi.n_rows() {
        return Err(Error::VocabularyMismatch(format!(
            "lexicon indexed over {} words, matrix has {} rows",
            lex.len(),
            lmi.n_rows()
        )));
    }
    let cos = RowCosines {
        lmi,
        norms: lmi.rows().par_iter().map(SparseRow::norm).collect(),
        cache: opts.cache.then(DashMap::new),
    };
    let rows: Vec<SparseRow<T>> = (0..lmi.n_rows() as u32)
        .into_par_iter()
        .map(|w| {
            let syn = lex.synonyms(w);
            let ants = lex.enriched_antonyms(w);
            if syn.is_empty() && ants.is_empty() {
                return if opts.fallback_lmi {
                    lmi.row(w).clone()
                } else {
                    SparseRow::default()
                };
            }
            let mut out = SparseRow::default();
            for (f, _) in lmi.row(w).iter() {
                let occurring = index.words(f);

                let (mut syn_sum, mut syn_n) = (T::zero(), 0u64);
                for_each_common(syn, occurring, |u| {
                    syn_sum += cos.get(w, u);
                    syn_n += 1;
                });
                let syn_term = if syn_n > 0 { syn_sum / T::from_count(syn_n) } else { T::zero() };

                let (mut pooled_sum, mut pooled_n) = (T::zero(), 0u64);
                let (mut means_sum, mut means_n) = (T::zero(), 0u64);
                for &a in ants {
                    let (mut s, mut k) = (T::zero(), 0u64);
                    for_each_common(lex.synonyms(a), occurring, |v| {
                        s += cos.get(a, v);
                        k += 1;
                    });
                    if k > 0 {
                        pooled_sum += s;
                        pooled_n += k;
                        means_sum += s / T::from_count(k);
                        means_n += 1;
                    }
                }
                let ant_term = match opts.ant_mean {
                    AntonymMean::Pooled if pooled_n > 0 => pooled_sum / T::from_count(pooled_n),
                    AntonymMean::PerAntonym if means_n > 0 => means_sum / T::from_count(means_n),
                    _ => T::zero(),
                };

                let weight = syn_term - ant_term;
                if weight != T::zero() {
                    out.indices.push(f);
                    out.values.push(weight);
                }
            }
            out
        })
        .collect();
    Ok(WeightedMatrix {
        scheme: Scheme::Sa,
        n_cols: lmi.n_cols(),
        rows,
    })
}
