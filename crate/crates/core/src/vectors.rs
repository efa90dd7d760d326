//! Dense word vectors and the word2vec text format.

use std::collections::HashMap;
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::weighting::dense_cosine_checked;

/// Row-major dense matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> DenseMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{} values for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(DenseMatrix { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [T] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.cols + j]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// Where a set of dense vectors came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Source {
    LmiSvd,
    SaSvd,
    Sgns,
    Dlce,
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Source::LmiSvd => "LMI+SVD",
            Source::SaSvd => "SA+SVD",
            Source::Sgns => "SGNS",
            Source::Dlce => "dLCE",
        })
    }
}

impl FromStr for Source {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "LMI+SVD" => Ok(Source::LmiSvd),
            "SA+SVD" => Ok(Source::SaSvd),
            "SGNS" => Ok(Source::Sgns),
            "dLCE" => Ok(Source::Dlce),
            other => Err(Error::Config(format!("unknown vector source {other:?}"))),
        }
    }
}

/// Named dense vectors, one row per word.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseEmbeddings<T> {
    words: Vec<String>,
    index: HashMap<String, usize>,
    matrix: DenseMatrix<T>,
    source: Option<Source>,
}

impl<T: Scalar> DenseEmbeddings<T> {
    pub fn new(words: Vec<String>, matrix: DenseMatrix<T>, source: Option<Source>) -> Result<Self> {
        if words.len() != matrix.rows() {
            return Err(Error::Dimension(format!(
                "{} words for {} rows",
                words.len(),
                matrix.rows()
            )));
        }
        if matrix.cols() == 0 {
            return Err(Error::Dimension("embedding dimension must be at least 1".into()));
        }
        if !matrix.is_finite() {
            return Err(Error::Dimension("embedding matrix contains NaN or Inf".into()));
        }
        let index: HashMap<String, usize> = words.iter().enumerate().map(|(i, w)| (w.clone(), i)).collect();
        if index.len() != words.len() {
            return Err(Error::Dimension("duplicate word in embeddings".into()));
        }
        Ok(DenseEmbeddings {
            words,
            index,
            matrix,
            source,
        })
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.matrix.cols()
    }

    pub fn source(&self) -> Option<Source> {
        self.source
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn matrix(&self) -> &DenseMatrix<T> {
        &self.matrix
    }

    pub fn vector(&self, word: &str) -> Option<&[T]> {
        self.index.get(word).map(|&i| self.matrix.row(i))
    }

    /// Cosine of two words; `None` when a word is missing or has a zero vector.
    pub fn similarity(&self, a: &str, b: &str) -> Option<T> {
        dense_cosine_checked(self.vector(a)?, self.vector(b)?)
    }

    /// word2vec text format: `n d` header, then `word v1 ... vd` per line.
    pub fn write_word2vec_text<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{} {}", self.len(), self.dim())?;
        for (i, word) in self.words.iter().enumerate() {
            write!(w, "{word}")?;
            for v in self.matrix.row(i) {
                write!(w, " {v}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    /// Reads the word2vec text format, skipping any `#` comment lines that
    /// precede the `n d` header.
    pub fn read_word2vec_text<R: BufRead>(reader: R, source: Option<Source>) -> Result<Self> {
        let mut lines = reader.lines().enumerate();
        let (n, d, header_line) = loop {
            let Some((i, line)) = lines.next() else {
                return Err(Error::parse(0, "missing `n d` header"));
            };
            let line = line?;
            if line.starts_with('#') || line.trim().is_empty() {
                continue;
            }
            let parts: Vec<&str> = line.split_whitespace().collect();
            let parsed = match parts.as_slice() {
                [a, b] => a.parse::<usize>().ok().zip(b.parse::<usize>().ok()),
                _ => None,
            };
            match parsed {
                Some((n, d)) => break (n, d, i + 1),
                None => return Err(Error::parse(i + 1, "expected `n d` header")),
            }
        };
        let mut words = Vec::with_capacity(n);
        let mut data = Vec::with_capacity(n * d);
        for (i, line) in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let mut parts = line.split_whitespace();
            let word = parts.next().unwrap().to_owned();
            let before = data.len();
            for p in parts {
                data.push(
                    p.parse::<T>()
                        .map_err(|_| Error::parse(i + 1, format!("bad component {p:?}")))?,
                );
            }
            if data.len() - before != d {
                return Err(Error::parse(i + 1, format!("expected {d} components")));
            }
            words.push(word);
        }
        if words.len() != n {
            return Err(Error::parse(
                header_line,
                format!("header announces {n} vectors, found {}", words.len()),
            ));
        }
        Self::new(words, DenseMatrix::from_vec(n, d, data)?, source)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn similarity_and_missing_words() {
        let m = DenseMatrix::from_vec(3, 2, vec![1.0, 0.0, 0.0, 1.0, 0.0, 0.0]).unwrap();
        let e = DenseEmbeddings::new(vec!["a".into(), "b".into(), "z".into()], m, None).unwrap();
        assert_eq!(e.similarity("a", "a"), Some(1.0));
        assert_eq!(e.similarity("a", "b"), Some(0.0));
        assert_eq!(e.similarity("a", "q"), None);
        assert_eq!(e.similarity("a", "z"), None);
    }

    #[test]
    fn rejects_bad_inputs() {
        let m = DenseMatrix::from_vec(1, 1, vec![f64::NAN]).unwrap();
        assert!(DenseEmbeddings::new(vec!["a".into()], m, None).is_err());
        assert!(DenseMatrix::<f64>::from_vec(2, 2, vec![1.0]).is_err());
        let text = "2 2\na 1 2\n";
        assert!(DenseEmbeddings::<f64>::read_word2vec_text(text.as_bytes(), None).is_err());
        let text = "1 2\na 1\n";
        assert!(DenseEmbeddings::<f64>::read_word2vec_text(text.as_bytes(), None).is_err());
    }

    #[test]
    fn reads_past_comment_header() {
        let text = "# tool=test\n# seed=1\n1 3\nword 0.5 -1 2e-3\n";
        let e = DenseEmbeddings::<f32>::read_word2vec_text(text.as_bytes(), Some(Source::Sgns)).unwrap();
        assert_eq!(e.vector("word").unwrap(), &[0.5, -1.0, 0.002]);
        assert_eq!(e.source(), Some(Source::Sgns));
    }

    proptest! {
        #[test]
        fn word2vec_text_round_trip(values in prop::collection::vec(-1e3f64..1e3, 1..40), dim in 1usize..5) {
            let n = values.len() / dim;
            prop_assume!(n > 0);
            let data = values[..n * dim].to_vec();
            let words = (0..n).map(|i| format!("w{i}")).collect();
            let e = DenseEmbeddings::new(words, DenseMatrix::from_vec(n, dim, data).unwrap(), None).unwrap();
            let mut buf = Vec::new();
            e.write_word2vec_text(&mut buf).unwrap();
            let back = DenseEmbeddings::read_word2vec_text(&buf[..], None).unwrap();
            prop_assert_eq!(back, e);
        }
    }
}
