//! Skip-gram with negative sampling, optionally extended with a
//! distributional lexical-contrast term.
//!
//! For every positive pair `(w, c)` from the windowed stream the trainer
//! takes one SGNS step on `log σ(w·c) + Σ_neg log σ(-w·n)` and then, when a
//! lexicon is supplied, ascends
//!
//! ```text
//! β · ( mean_{u ∈ W(c) ∩ S(w)} cos(w, u) − mean_{v ∈ W(c) ∩ A(w)} cos(w, v) )
//! ```
//!
//! on the target vectors of `w`, `u` and `v`. `W(c)` is the set of words
//! with a positive LMI weight for `c`. The contrast step never touches
//! context vectors and never consumes randomness unless a neighbour cap is
//! hit, so training with an empty lexicon is bit-identical to plain SGNS.

use std::collections::HashMap;
use std::sync::Arc;
use std::sync::atomic::{AtomicU64, Ordering};

use rand::seq::index::sample as sample_indices;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{CooccurrenceCounts, Document, Subsampler, Vocabulary};
use crate::error::{Error, Result};
use crate::lexicon::IndexedLexicon;
use crate::scalar::{axpy, dot, norm, Scalar};
use crate::seeding::{stage_seed, stream_seed};
use crate::vectors::{DenseEmbeddings, DenseMatrix, Source};
use crate::weighting::{for_each_common, FeatureIndex};

#[derive(Clone, Debug, PartialEq)]
pub struct TrainingConfig {
    pub dim: usize,
    pub negatives: usize,
    pub window: usize,
    /// Sample the effective window uniformly from `1..=window` per target.
    pub dynamic_window: bool,
    pub learning_rate: f64,
    pub epochs: usize,
    pub subsample: f64,
    pub min_count: u64,
    pub contrast_coefficient: f64,
    pub max_contrast_neighbors: Option<usize>,
    pub noise_exponent: f64,
    /// Export `(W + C) / 2` instead of `W`.
    pub average_context: bool,
    pub threads: usize,
    pub seed: u64,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        TrainingConfig {
            dim: 500,
            negatives: 15,
            window: 5,
            dynamic_window: false,
            learning_rate: 0.025,
            epochs: 5,
            subsample: 1e-5,
            min_count: 100,
            contrast_coefficient: 1.0,
            max_contrast_neighbors: None,
            noise_exponent: 0.75,
            average_context: false,
            threads: 1,
            seed: 1,
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_owned()));
        if self.dim == 0 {
            return bad("dim must be at least 1");
        }
        if self.negatives == 0 {
            return bad("negatives must be at least 1");
        }
        if self.window == 0 {
            return bad("window must be at least 1");
        }
        if self.epochs == 0 {
            return bad("epochs must be at least 1");
        }
        if self.threads == 0 {
            return bad("threads must be at least 1");
        }
        if !(self.learning_rate > 0.0) {
            return bad("learning rate must be positive");
        }
        if !(self.contrast_coefficient >= 0.0) {
            return bad("contrast coefficient must be non-negative");
        }
        if !(self.subsample > 0.0) {
            return bad("subsample threshold must be positive");
        }
        if self.max_contrast_neighbors == Some(0) {
            return bad("max contrast neighbours must be at least 1");
        }
        Ok(())
    }
}

/// Numerically stable logistic function.
pub fn sigmoid<T: Scalar>(x: T) -> T {
    if x >= T::zero() {
        T::one() / (T::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (T::one() + e)
    }
}

/// `log σ(x)` without overflow for large `|x|`.
pub fn log_sigmoid<T: Scalar>(x: T) -> T {
    -((-x).max(T::zero()) + (-x.abs()).exp().ln_1p())
}

/// Noise distribution `P(w) ∝ count(w)^exponent` with an alias table for
/// constant-time sampling.
#[derive(Clone, Debug)]
pub struct NoiseDistribution {
    probs: Vec<f64>,
    accept: Vec<f64>,
    alias: Vec<u32>,
}

impl NoiseDistribution {
    pub fn new(vocab: &Vocabulary, exponent: f64) -> Result<Self> {
        let counts: Vec<u64> = vocab.entries().iter().map(|e| e.count).collect();
        Self::from_counts(&counts, exponent)
    }

    pub fn from_counts(counts: &[u64], exponent: f64) -> Result<Self> {
        if counts.is_empty() {
            return Err(Error::Config("noise distribution over an empty vocabulary".into()));
        }
        if counts.contains(&0) {
            return Err(Error::Config("noise distribution needs positive counts".into()));
        }
        let weights: Vec<f64> = counts.iter().map(|&c| (c as f64).powf(exponent)).collect();
        let total: f64 = weights.iter().sum();
        let probs: Vec<f64> = weights.iter().map(|w| w / total).collect();

        // Vose's alias method
        let n = probs.len();
        let mut scaled: Vec<f64> = probs.iter().map(|p| p * n as f64).collect();
        let mut accept = vec![1.0; n];
        let mut alias: Vec<u32> = (0..n as u32).collect();
        let (mut small, mut large): (Vec<usize>, Vec<usize>) = (0..n).partition(|&i| scaled[i] < 1.0);
        while let (Some(s), Some(&l)) = (small.pop(), large.last()) {
            accept[s] = scaled[s];
            alias[s] = l as u32;
            scaled[l] -= 1.0 - scaled[s];
            if scaled[l] < 1.0 {
                large.pop();
                small.push(l);
            }
        }
        Ok(NoiseDistribution { probs, accept, alias })
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn prob(&self, id: u32) -> f64 {
        self.probs[id as usize]
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> u32 {
        let i = rng.random_range(0..self.probs.len());
        if rng.random::<f64>() < self.accept[i] {
            i as u32
        } else {
            self.alias[i]
        }
    }
}

/// Linearly decaying learning rate with a floor at `1e-4` of the start.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LearningRate {
    pub initial: f64,
    pub total_updates: u64,
}

impl LearningRate {
    pub fn at(&self, update: u64) -> f64 {
        let progress = update as f64 / self.total_updates.max(1) as f64;
        self.initial * (1.0 - progress).max(1e-4)
    }
}

/// Target and context matrices plus the configuration that produced them.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingModel<T> {
    pub target: DenseMatrix<T>,
    pub context: DenseMatrix<T>,
    pub config: TrainingConfig,
}

impl<T: Scalar> EmbeddingModel<T> {
    /// Target rows uniform in `[-0.5/dim, 0.5/dim)`, context rows zero.
    pub fn initialize(n_words: usize, config: &TrainingConfig) -> Self {
        let dim = config.dim;
        let mut rng = ChaCha8Rng::seed_from_u64(stage_seed(config.seed, "init"));
        let data = (0..n_words * dim)
            .map(|_| T::lit((rng.random::<f64>() - 0.5) / dim as f64))
            .collect();
        EmbeddingModel {
            target: DenseMatrix::from_vec(n_words, dim, data).expect("sized"),
            context: DenseMatrix::zeros(n_words, dim),
            config: config.clone(),
        }
    }

    /// Exported vectors: `W`, or `(W + C) / 2` when `average_context` is set.
    pub fn vectors(&self) -> DenseMatrix<T> {
        if !self.config.average_context {
            return self.target.clone();
        }
        let half = T::lit(0.5);
        let data = self
            .target
            .as_slice()
            .iter()
            .zip(self.context.as_slice())
            .map(|(&w, &c)| (w + c) * half)
            .collect();
        DenseMatrix::from_vec(self.target.rows(), self.target.cols(), data).expect("sized")
    }

    pub fn embeddings(&self, vocab: &Vocabulary, source: Source) -> Result<DenseEmbeddings<T>> {
        let words = vocab.entries().iter().map(|e| e.word.clone()).collect();
        DenseEmbeddings::new(words, self.vectors(), Some(source))
    }

    pub fn context_embeddings(&self, vocab: &Vocabulary, source: Source) -> Result<DenseEmbeddings<T>> {
        let words = vocab.entries().iter().map(|e| e.word.clone()).collect();
        DenseEmbeddings::new(words, self.context.clone(), Some(source))
    }

    pub fn is_finite(&self) -> bool {
        self.target.is_finite() && self.context.is_finite()
    }
}

/// Exact SGNS objective with the negative expectation summed over the
/// whole vocabulary:
/// `Σ #(w,c) log σ(w·c) + k #(w) Σ_c P0(c) log σ(-w·c)`, where
/// `#(w) = Σ_c #(w,c)`.
pub fn sgns_objective<T: Scalar>(
    model: &EmbeddingModel<T>,
    pairs: &[(u32, u32, u64)],
    noise: &NoiseDistribution,
    negatives: usize,
) -> T {
    let w_mat = &model.target;
    let c_mat = &model.context;
    let mut positive = T::zero();
    let mut target_counts: HashMap<u32, u64> = HashMap::new();
    for &(w, c, n) in pairs {
        let s = dot(w_mat.row(w as usize), c_mat.row(c as usize));
        positive += T::from_count(n) * log_sigmoid(s);
        *target_counts.entry(w).or_default() += n;
    }
    let mut targets: Vec<_> = target_counts.into_iter().collect();
    targets.sort_unstable();
    let k = T::from_count(negatives as u64);
    let mut negative = T::zero();
    for (w, n) in targets {
        let wv = w_mat.row(w as usize);
        let expect: T = (0..noise.len())
            .map(|c| T::lit(noise.prob(c as u32)) * log_sigmoid(-dot(wv, c_mat.row(c))))
            .sum();
        negative += k * T::from_count(n) * expect;
    }
    positive + negative
}

/// Gradients of the per-pair SGNS objective
/// `log σ(w·c) + Σ_i log σ(-w·n_i)`.
pub mod gradients {
    use super::*;

    pub fn pair_objective<T: Scalar>(w: &[T], c: &[T], negatives: &[&[T]]) -> T {
        log_sigmoid(dot(w, c)) + negatives.iter().map(|n| log_sigmoid(-dot(w, n))).sum::<T>()
    }

    #[derive(Clone, Debug, PartialEq)]
    pub struct PairGradient<T> {
        pub target: Vec<T>,
        pub context: Vec<T>,
        pub negatives: Vec<Vec<T>>,
    }

    pub fn pair_gradient<T: Scalar>(w: &[T], c: &[T], negatives: &[&[T]]) -> PairGradient<T> {
        let g_pos = T::one() - sigmoid(dot(w, c));
        let mut target: Vec<T> = c.iter().map(|&x| g_pos * x).collect();
        let mut neg_grads = Vec::with_capacity(negatives.len());
        for n in negatives {
            let g = -sigmoid(dot(w, n));
            axpy(g, n, &mut target);
            neg_grads.push(w.iter().map(|&x| g * x).collect());
        }
        PairGradient {
            target,
            context: w.iter().map(|&x| g_pos * x).collect(),
            negatives: neg_grads,
        }
    }

    /// `∂cos(a, b)/∂a = b/(‖a‖‖b‖) − cos(a, b)·a/‖a‖²`; zero if either norm is zero.
    pub fn cosine_gradient<T: Scalar>(a: &[T], b: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); a.len()];
        add_cosine_gradient(T::one(), a, norm(a), b, norm(b), &mut out);
        out
    }

    /// `out += scale * ∂cos(a, b)/∂a` given precomputed norms.
    pub(crate) fn add_cosine_gradient<T: Scalar>(scale: T, a: &[T], na: T, b: &[T], nb: T, out: &mut [T]) {
        if na <= T::zero() || nb <= T::zero() {
            return;
        }
        let cos = dot(a, b) / (na * nb);
        let cb = scale / (na * nb);
        let ca = scale * cos / (na * na);
        for ((o, &x), &y) in out.iter_mut().zip(a).zip(b) {
            *o += cb * y - ca * x;
        }
    }

    fn mean_cos<T: Scalar>(w: &[T], others: &[&[T]]) -> T {
        if others.is_empty() {
            return T::zero();
        }
        let nw = norm(w);
        let sum: T = others
            .iter()
            .map(|o| {
                let d = nw * norm(o);
                if d > T::zero() {
                    dot(w, o) / d
                } else {
                    T::zero()
                }
            })
            .sum();
        sum / T::from_count(others.len() as u64)
    }

    /// `β (mean_u cos(w,u) − mean_v cos(w,v))`; empty sides contribute 0.
    pub fn contrast_objective<T: Scalar>(beta: T, w: &[T], synonyms: &[&[T]], antonyms: &[&[T]]) -> T {
        beta * (mean_cos(w, synonyms) - mean_cos(w, antonyms))
    }

    #[derive(Clone, Debug, PartialEq)]
    pub struct ContrastGradient<T> {
        pub target: Vec<T>,
        pub synonyms: Vec<Vec<T>>,
        pub antonyms: Vec<Vec<T>>,
    }

    pub fn contrast_gradient<T: Scalar>(beta: T, w: &[T], synonyms: &[&[T]], antonyms: &[&[T]]) -> ContrastGradient<T> {
        let nw = norm(w);
        let mut target = vec![T::zero(); w.len()];
        let mut side = |others: &[&[T]], sign: T| -> Vec<Vec<T>> {
            if others.is_empty() {
                return Vec::new();
            }
            let scale = sign * beta / T::from_count(others.len() as u64);
            others
                .iter()
                .map(|o| {
                    let no = norm(o);
                    add_cosine_gradient(scale, w, nw, o, no, &mut target);
                    let mut g = vec![T::zero(); w.len()];
                    add_cosine_gradient(scale, o, no, w, nw, &mut g);
                    g
                })
                .collect()
        };
        let synonyms = side(synonyms, T::one());
        let antonyms = side(antonyms, -T::one());
        ContrastGradient {
            target,
            synonyms,
            antonyms,
        }
    }
}

/// Lexicon and feature index consumed by the contrast term.
#[derive(Clone, Copy)]
pub struct ContrastInputs<'a> {
    pub lexicon: &'a IndexedLexicon,
    pub index: &'a FeatureIndex,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    pub pairs: u64,
    pub alpha: f64,
    pub objective: Option<f64>,
}

impl EpochStats {
    /// `epoch<TAB>pairs<TAB>alpha<TAB>oracle_objective`
    pub fn tsv(&self) -> String {
        let obj = self.objective.map(|o| o.to_string()).unwrap_or_default();
        format!("{}\t{}\t{}\t{}", self.epoch, self.pairs, self.alpha, obj)
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrainingReport {
    pub epochs: Vec<EpochStats>,
    pub total_updates: u64,
}

/// Optional hooks for a training run.
#[derive(Default)]
pub struct TrainObserver<'a> {
    /// Pair table on which the exact objective is evaluated after each epoch.
    pub objective_pairs: Option<&'a CooccurrenceCounts>,
    pub on_epoch: Option<&'a mut dyn FnMut(&EpochStats)>,
}

#[derive(Clone, Copy)]
struct SharedMatrix<T> {
    ptr: *mut T,
    rows: usize,
    cols: usize,
}

// Worker threads write rows without synchronization (Hogwild). In the
// single-threaded mode the matrix is owned by exactly one worker.
unsafe impl<T: Send> Send for SharedMatrix<T> {}
unsafe impl<T: Sync> Sync for SharedMatrix<T> {}

impl<T: Scalar> SharedMatrix<T> {
    fn new(m: &mut DenseMatrix<T>) -> Self {
        SharedMatrix {
            rows: m.rows(),
            cols: m.cols(),
            ptr: m.as_mut_slice().as_mut_ptr(),
        }
    }

    /// Callers never hold two borrows of the same row at once.
    #[allow(clippy::mut_from_ref)]
    unsafe fn row(&self, i: u32) -> &mut [T] {
        debug_assert!((i as usize) < self.rows);
        std::slice::from_raw_parts_mut(self.ptr.add(i as usize * self.cols), self.cols)
    }
}

struct Neighbours {
    synonyms: Vec<u32>,
    antonyms: Vec<u32>,
}

struct Worker<'a, T> {
    target: SharedMatrix<T>,
    context: SharedMatrix<T>,
    noise: &'a NoiseDistribution,
    contrast: Option<ContrastInputs<'a>>,
    cache: HashMap<(u32, u32), Option<Arc<Neighbours>>>,
    cfg: &'a TrainingConfig,
    beta: T,
    rng: ChaCha8Rng,
    grad: Vec<T>,
    wbuf: Vec<T>,
    pairs: u64,
}

impl<'a, T: Scalar> Worker<'a, T> {
    fn train_document(&mut self, doc: &[u32], schedule: &LearningRate, progress: &AtomicU64) {
        let window = self.cfg.window;
        for i in 0..doc.len() {
            let update = progress.fetch_add(1, Ordering::Relaxed);
            let alpha = T::lit(schedule.at(update));
            let span = if self.cfg.dynamic_window {
                window - self.rng.random_range(0..window)
            } else {
                window
            };
            let lo = i.saturating_sub(span);
            let hi = (i + span).min(doc.len() - 1);
            let w = doc[i];
            for (j, &c) in doc.iter().enumerate().take(hi + 1).skip(lo) {
                if j == i {
                    continue;
                }
                self.sgns_step(w, c, alpha);
                if self.contrast.is_some() {
                    self.contrast_step(w, c, alpha);
                }
                self.pairs += 1;
            }
        }
    }

    fn sgns_step(&mut self, w: u32, c: u32, alpha: T) {
        // SAFETY: target and context are distinct matrices; one row of each
        // is borrowed at a time.
        let wv = unsafe { self.target.row(w) };
        self.grad.iter_mut().for_each(|g| *g = T::zero());
        for d in 0..=self.cfg.negatives {
            let (x, label) = if d == 0 {
                (c, T::one())
            } else {
                let x = self.noise.sample(&mut self.rng);
                if x == c {
                    continue;
                }
                (x, T::zero())
            };
            let cv = unsafe { self.context.row(x) };
            let g = (label - sigmoid(dot(wv, cv))) * alpha;
            axpy(g, cv, &mut self.grad);
            axpy(g, wv, cv);
        }
        for (x, &g) in wv.iter_mut().zip(&self.grad) {
            *x += g;
        }
    }

    fn neighbours(&mut self, w: u32, c: u32) -> Option<Arc<Neighbours>> {
        let inputs = self.contrast?;
        let lex = inputs.lexicon;
        if lex.synonyms(w).is_empty() && lex.antonyms(w).is_empty() {
            return None;
        }
        self.cache
            .entry((w, c))
            .or_insert_with(|| {
                let occurring = inputs.index.words(c);
                let mut synonyms = Vec::new();
                for_each_common(lex.synonyms(w), occurring, |u| synonyms.push(u));
                let mut antonyms = Vec::new();
                for_each_common(lex.antonyms(w), occurring, |v| antonyms.push(v));
                antonyms.retain(|&v| v != w);
                synonyms.retain(|&u| u != w);
                (!synonyms.is_empty() || !antonyms.is_empty()).then(|| Arc::new(Neighbours { synonyms, antonyms }))
            })
            .clone()
    }

    fn capped(&mut self, ids: &[u32]) -> Vec<u32> {
        match self.cfg.max_contrast_neighbors {
            Some(m) if ids.len() > m => {
                let mut picked: Vec<u32> = sample_indices(&mut self.rng, ids.len(), m)
                    .into_iter()
                    .map(|i| ids[i])
                    .collect();
                picked.sort_unstable();
                picked
            }
            _ => ids.to_vec(),
        }
    }

    fn contrast_step(&mut self, w: u32, c: u32, alpha: T) {
        if self.beta == T::zero() {
            return;
        }
        let Some(nb) = self.neighbours(w, c) else {
            return;
        };
        let synonyms = self.capped(&nb.synonyms);
        let antonyms = self.capped(&nb.antonyms);
        // SAFETY: `w` is copied out before any other target row is borrowed,
        // and u, v are distinct from w.
        self.wbuf.copy_from_slice(unsafe { self.target.row(w) });
        let nw = norm(&self.wbuf);
        if nw <= T::zero() {
            return;
        }
        self.grad.iter_mut().for_each(|g| *g = T::zero());
        for (ids, sign) in [(&synonyms, T::one()), (&antonyms, -T::one())] {
            if ids.is_empty() {
                continue;
            }
            let scale = sign * self.beta / T::from_count(ids.len() as u64);
            for &o in ids {
                let ov = unsafe { self.target.row(o) };
                let no = norm(ov);
                gradients::add_cosine_gradient(scale, &self.wbuf, nw, ov, no, &mut self.grad);
                // ov += alpha * scale * ∂cos(o, w)/∂o
                gradients::add_cosine_gradient(alpha * scale, &ov.to_vec(), no, &self.wbuf, nw, ov);
            }
        }
        let wv = unsafe { self.target.row(w) };
        axpy(alpha, &self.grad, wv);
    }
}

fn check_inputs(docs: &[Document], vocab: &Vocabulary, cfg: &TrainingConfig) -> Result<()> {
    cfg.validate()?;
    if vocab.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    if let Some(e) = vocab.entries().iter().find(|e| e.count < cfg.min_count) {
        return Err(Error::VocabularyMismatch(format!(
            "word {:?} has count {} below min_count {}",
            e.word, e.count, cfg.min_count
        )));
    }
    let n = vocab.len() as u32;
    if let Some(id) = docs.iter().flatten().find(|&&id| id >= n) {
        return Err(Error::VocabularyMismatch(format!("token id {id} outside vocabulary")));
    }
    Ok(())
}

fn epoch_stream(docs: &[Document], sampler: &Subsampler, seed: u64, epoch: usize) -> Vec<Document> {
    let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(seed, "subsample", epoch as u64));
    docs.iter().map(|d| sampler.apply(d, &mut rng)).collect()
}

fn train<T: Scalar>(
    docs: &[Document],
    vocab: &Vocabulary,
    cfg: &TrainingConfig,
    contrast: Option<ContrastInputs<'_>>,
    mut observer: TrainObserver<'_>,
) -> Result<(EmbeddingModel<T>, TrainingReport)> {
    check_inputs(docs, vocab, cfg)?;
    if let Some(c) = contrast {
        if c.lexicon.len() != vocab.len() {
            return Err(Error::VocabularyMismatch("lexicon not indexed over this vocabulary".into()));
        }
    }
    let sampler = Subsampler::new(vocab, cfg.subsample)?;
    let noise = NoiseDistribution::new(vocab, cfg.noise_exponent)?;

    let total_updates: u64 = (0..cfg.epochs)
        .map(|e| epoch_stream(docs, &sampler, cfg.seed, e).iter().map(|d| d.len() as u64).sum::<u64>())
        .sum();
    if total_updates == 0 {
        return Err(Error::EmptyCorpus);
    }
    let schedule = LearningRate {
        initial: cfg.learning_rate,
        total_updates,
    };

    let mut model = EmbeddingModel::<T>::initialize(vocab.len(), cfg);
    let target = SharedMatrix::new(&mut model.target);
    let context = SharedMatrix::new(&mut model.context);
    let progress = AtomicU64::new(0);
    let make_worker = |rng| Worker {
        target,
        context,
        noise: &noise,
        contrast,
        cache: HashMap::new(),
        cfg,
        beta: T::lit(cfg.contrast_coefficient),
        rng,
        grad: vec![T::zero(); cfg.dim],
        wbuf: vec![T::zero(); cfg.dim],
        pairs: 0,
    };

    let mut report = TrainingReport {
        epochs: Vec::with_capacity(cfg.epochs),
        total_updates,
    };
    let mut single = (cfg.threads == 1).then(|| make_worker(ChaCha8Rng::seed_from_u64(stage_seed(cfg.seed, "train"))));
    for epoch in 0..cfg.epochs {
        let stream = epoch_stream(docs, &sampler, cfg.seed, epoch);
        let pairs = match single.as_mut() {
            Some(worker) => {
                let before = worker.pairs;
                for doc in &stream {
                    worker.train_document(doc, &schedule, &progress);
                }
                worker.pairs - before
            }
            None => {
                let chunk = stream.len().div_ceil(cfg.threads).max(1);
                std::thread::scope(|scope| {
                    let handles: Vec<_> = stream
                        .chunks(chunk)
                        .enumerate()
                        .map(|(t, shard)| {
                            let seed = stream_seed(cfg.seed, "train-worker", (epoch * cfg.threads + t) as u64);
                            let mut worker = make_worker(ChaCha8Rng::seed_from_u64(seed));
                            let (schedule, progress) = (&schedule, &progress);
                            scope.spawn(move || {
                                for doc in shard {
                                    worker.train_document(doc, schedule, progress);
                                }
                                worker.pairs
                            })
                        })
                        .collect();
                    handles.into_iter().map(|h| h.join().expect("worker panicked")).sum()
                })
            }
        };
        let done = progress.load(Ordering::Relaxed);
        let objective = observer
            .objective_pairs
            .map(|counts| sgns_objective(&model, counts.triples(), &noise, cfg.negatives).as_f64());
        let stats = EpochStats {
            epoch: epoch + 1,
            pairs,
            alpha: schedule.at(done.saturating_sub(1)),
            objective,
        };
        if let Some(cb) = observer.on_epoch.as_mut() {
            cb(&stats);
        }
        report.epochs.push(stats);
    }
    drop(single);
    if !model.is_finite() {
        return Err(Error::Config("training diverged (non-finite weights)".into()));
    }
    Ok((model, report))
}

/// Plain SGNS training.
pub fn train_sgns<T: Scalar>(docs: &[Document], vocab: &Vocabulary, cfg: &TrainingConfig) -> Result<EmbeddingModel<T>> {
    train(docs, vocab, cfg, None, TrainObserver::default()).map(|r| r.0)
}

/// SGNS plus the lexical-contrast term over plain (non-enriched) antonyms.
pub fn train_dlce<T: Scalar>(
    docs: &[Document],
    vocab: &Vocabulary,
    cfg: &TrainingConfig,
    lexicon: &IndexedLexicon,
    index: &FeatureIndex,
) -> Result<EmbeddingModel<T>> {
    train(docs, vocab, cfg, Some(ContrastInputs { lexicon, index }), TrainObserver::default()).map(|r| r.0)
}

/// Training entry point with a report and observer hooks; `contrast: None`
/// is SGNS.
pub fn train_observed<T: Scalar>(
    docs: &[Document],
    vocab: &Vocabulary,
    cfg: &TrainingConfig,
    contrast: Option<ContrastInputs<'_>>,
    observer: TrainObserver<'_>,
) -> Result<(EmbeddingModel<T>, TrainingReport)> {
    train(docs, vocab, cfg, contrast, observer)
}
