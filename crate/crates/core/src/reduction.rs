//! Truncated SVD of sparse weighted matrices.
//!
//! Small matrices (both active dimensions within `dense_limit`) are
//! factorized exactly; larger ones go through randomized subspace
//! iteration. All-zero rows and columns are dropped before factorizing and
//! come back as zero rows in the output.

use nalgebra::{DMatrix, RealField};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::corpus::Vocabulary;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::vectors::{DenseEmbeddings, DenseMatrix, Source};
use crate::weighting::WeightedMatrix;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SvdConfig {
    pub dim: usize,
    pub oversample: usize,
    pub power_iterations: usize,
    /// Largest active dimension still factorized densely.
    pub dense_limit: usize,
    /// Row vectors are `U * S^exponent`.
    pub exponent: f64,
    pub seed: u64,
}

impl Default for SvdConfig {
    fn default() -> Self {
        SvdConfig {
            dim: 100,
            oversample: 10,
            power_iterations: 4,
            dense_limit: 2000,
            exponent: 1.0,
            seed: 1,
        }
    }
}

/// Leading singular triplets; `left` and `right` hold `effective_rank`
/// columns over the full row and column ranges.
#[derive(Clone, Debug)]
pub struct SvdFactors<T> {
    pub left: DenseMatrix<T>,
    pub singular_values: Vec<T>,
    pub right: DenseMatrix<T>,
    pub effective_rank: usize,
    pub exact: bool,
}

impl<T: Scalar> SvdFactors<T> {
    /// `U_k * S_k^exponent`, one row per matrix row.
    pub fn row_vectors(&self, exponent: f64) -> DenseMatrix<T> {
        let k = self.effective_rank;
        let mut out = DenseMatrix::zeros(self.left.rows(), k);
        let scale: Vec<T> = self.singular_values[..k]
            .iter()
            .map(|&s| if exponent == 1.0 { s } else { s.powf(T::lit(exponent)) })
            .collect();
        for i in 0..self.left.rows() {
            let src = self.left.row(i);
            for (j, o) in out.row_mut(i).iter_mut().enumerate() {
                *o = src[j] * scale[j];
            }
        }
        out
    }

    /// Entry `(i, j)` of the rank-`effective_rank` reconstruction.
    pub fn reconstruct(&self, i: usize, j: usize) -> T {
        (0..self.effective_rank)
            .map(|c| self.left.get(i, c) * self.singular_values[c] * self.right.get(j, c))
            .sum()
    }

    pub fn into_embeddings(self, vocab: &Vocabulary, exponent: f64, source: Source) -> Result<DenseEmbeddings<T>> {
        let rows = self.row_vectors(exponent);
        if rows.rows() != vocab.len() {
            return Err(Error::VocabularyMismatch(format!(
                "{} factor rows for {} words",
                rows.rows(),
                vocab.len()
            )));
        }
        let words = vocab.entries().iter().map(|e| e.word.clone()).collect();
        DenseEmbeddings::new(words, rows, Some(source))
    }
}

fn standard_normal<T: Scalar>(rng: &mut ChaCha8Rng) -> T {
    let x: f64 = StandardNormal.sample(rng);
    T::lit(x)
}

/// Compacted sparse view over the active rows and columns.
struct Active<'a, T> {
    m: &'a WeightedMatrix<T>,
    rows: Vec<u32>,
    cols: Vec<u32>,
    col_pos: Vec<usize>,
}

impl<'a, T: Scalar + RealField> Active<'a, T> {
    fn new(m: &'a WeightedMatrix<T>) -> Self {
        let rows: Vec<u32> = (0..m.n_rows() as u32).filter(|&r| !m.row(r).is_empty()).collect();
        let mut used = vec![false; m.n_cols()];
        for (_, c, _) in m.triples() {
            used[c as usize] = true;
        }
        let cols: Vec<u32> = (0..m.n_cols() as u32).filter(|&c| used[c as usize]).collect();
        let mut col_pos = vec![usize::MAX; m.n_cols()];
        for (p, &c) in cols.iter().enumerate() {
            col_pos[c as usize] = p;
        }
        Active { m, rows, cols, col_pos }
    }

    fn dense(&self) -> DMatrix<T> {
        let mut a = DMatrix::zeros(self.rows.len(), self.cols.len());
        for (i, &r) in self.rows.iter().enumerate() {
            for (c, v) in self.m.row(r).iter() {
                a[(i, self.col_pos[c as usize])] = v;
            }
        }
        a
    }

    /// `A * X` for `X` with `cols.len()` rows.
    fn mul(&self, x: &DMatrix<T>) -> DMatrix<T> {
        let mut y = DMatrix::zeros(self.rows.len(), x.ncols());
        for (i, &r) in self.rows.iter().enumerate() {
            for (c, v) in self.m.row(r).iter() {
                let p = self.col_pos[c as usize];
                for j in 0..x.ncols() {
                    y[(i, j)] += v * x[(p, j)];
                }
            }
        }
        y
    }

    /// `A^T * X` for `X` with `rows.len()` rows.
    fn mul_t(&self, x: &DMatrix<T>) -> DMatrix<T> {
        let mut y = DMatrix::zeros(self.cols.len(), x.ncols());
        for (i, &r) in self.rows.iter().enumerate() {
            for (c, v) in self.m.row(r).iter() {
                let p = self.col_pos[c as usize];
                for j in 0..x.ncols() {
                    y[(p, j)] += v * x[(i, j)];
                }
            }
        }
        y
    }
}

fn orthonormal_basis<T: Scalar + RealField>(y: DMatrix<T>) -> DMatrix<T> {
    y.qr().q()
}

/// Top-`dim` singular triplets of `m`.
///
/// When the matrix rank is below `dim`, only the numerically nonzero
/// components are returned in the factors; `singular_values` still lists
/// every computed value.
pub fn truncated_svd<T: Scalar + RealField>(m: &WeightedMatrix<T>, cfg: &SvdConfig) -> Result<SvdFactors<T>> {
    let max_dim = m.n_rows().min(m.n_cols());
    if cfg.dim == 0 || cfg.dim > max_dim {
        return Err(Error::Dimension(format!(
            "requested {} components from a {}x{} matrix",
            cfg.dim,
            m.n_rows(),
            m.n_cols()
        )));
    }
    let active = Active::new(m);
    let (ar, ac) = (active.rows.len(), active.cols.len());
    if ar == 0 {
        return Err(Error::Dimension("matrix has no nonzero entries".into()));
    }

    let exact = ar <= cfg.dense_limit && ac <= cfg.dense_limit;
    let (u, sigma, v) = if exact {
        let svd = active.dense().svd(true, true);
        let vt = svd.v_t.expect("requested V^T");
        (svd.u.expect("requested U"), svd.singular_values, vt.transpose())
    } else {
        let width = (cfg.dim + cfg.oversample).min(ar.min(ac));
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let omega = DMatrix::from_fn(ac, width, |_, _| standard_normal::<T>(&mut rng));
        let mut q = orthonormal_basis(active.mul(&omega));
        for _ in 0..cfg.power_iterations {
            let z = orthonormal_basis(active.mul_t(&q));
            q = orthonormal_basis(active.mul(&z));
        }
        // B = Q^T A, formed as (A^T Q)^T
        let b = active.mul_t(&q).transpose();
        let svd = b.svd(true, true);
        let vt = svd.v_t.expect("requested V^T");
        (q * svd.u.expect("requested U"), svd.singular_values, vt.transpose())
    };

    let mut order: Vec<usize> = (0..sigma.len()).collect();
    order.sort_by(|&a, &b| sigma[b].partial_cmp(&sigma[a]).unwrap_or(std::cmp::Ordering::Equal));
    let take = cfg.dim.min(order.len());
    let singular_values: Vec<T> = order[..take].iter().map(|&i| sigma[i]).collect();

    let largest = singular_values.first().copied().unwrap_or_else(T::zero);
    let tol = largest * T::lit(ar.max(ac) as f64) * <T as num_traits::Float>::epsilon();
    let effective_rank = singular_values.iter().filter(|&&s| s > tol).count();

    let mut left = DenseMatrix::zeros(m.n_rows(), effective_rank);
    let mut right = DenseMatrix::zeros(m.n_cols(), effective_rank);
    for (k, &src) in order[..effective_rank].iter().enumerate() {
        // fix signs: largest-magnitude entry of each left vector is positive
        let col = u.column(src);
        let pivot = col.iter().copied().fold(T::zero(), |best, x| {
            if num_traits::Float::abs(x) > num_traits::Float::abs(best) {
                x
            } else {
                best
            }
        });
        let sign = if pivot < T::zero() { -T::one() } else { T::one() };
        for (i, &r) in active.rows.iter().enumerate() {
            left.row_mut(r as usize)[k] = sign * u[(i, src)];
        }
        for (j, &c) in active.cols.iter().enumerate() {
            right.row_mut(c as usize)[k] = sign * v[(j, src)];
        }
    }

    Ok(SvdFactors {
        left,
        singular_values,
        right,
        effective_rank,
        exact,
    })
}
