//! End-to-end acceptance checks. Every criterion prints one PASS/FAIL line;
//! the test fails if any of them fails.
//!
//! Run with `cargo test -p lexcontrast --test acceptance -- --nocapture`.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use lexcontrast::corpus::{count_cooccurrences, CooccurrenceCounts, Document, Vocabulary};
use lexcontrast::embeddings::gradients::{contrast_gradient, contrast_objective, pair_gradient, pair_objective};
use lexcontrast::embeddings::{train_dlce, train_sgns, EmbeddingModel, TrainingConfig};
use lexcontrast::eval::{auc, average_precision, eval_ap, eval_spearman, rank_labels, spearman, Label, MetricReport, SparseVectors, WordClass};
use lexcontrast::lexicon::{ContrastLexicon, IndexedLexicon, Relation};
use lexcontrast::reduction::{truncated_svd, SvdConfig};
use lexcontrast::synthetic::{generate, SyntheticConfig, SyntheticData};
use lexcontrast::vectors::Source;
use lexcontrast::weighting::{compute_lmi, compute_weight_sa, AntonymMean, FeatureIndex, SaOptions, Scheme, WeightedMatrix};

const SEEDS: [u64; 3] = [11, 22, 33];
const CLASSES: [WordClass; 3] = [WordClass::Adj, WordClass::Noun, WordClass::Verb];

type Outcome = Result<String, String>;

fn check(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn within(elapsed: Duration, limit_secs: u64) -> Result<(), String> {
    check(
        elapsed.as_secs_f64() < limit_secs as f64,
        format!("took {:.1}s, limit {limit_secs}s", elapsed.as_secs_f64()),
    )
}

// ---------------------------------------------------------------------------
// 1. metric oracles

fn oracle_ap(items: &[(f64, String, String, Label)], relevant: Label) -> f64 {
    let precedes = |a: &(f64, String, String, Label), b: &(f64, String, String, Label)| {
        a.0 > b.0 || (a.0 == b.0 && (&a.1, &a.2) < (&b.1, &b.2))
    };
    let ranks: Vec<usize> = items
        .iter()
        .map(|i| 1 + items.iter().filter(|j| precedes(j, i)).count())
        .collect();
    let mut total = 0.0;
    let mut r = 0;
    for (i, item) in items.iter().enumerate() {
        if item.3 != relevant {
            continue;
        }
        r += 1;
        let above = items
            .iter()
            .zip(&ranks)
            .filter(|(j, &rank)| j.3 == relevant && rank <= ranks[i])
            .count();
        total += above as f64 / ranks[i] as f64;
    }
    total / r as f64
}

fn oracle_auc(scores: &[f64], positive: &[bool]) -> f64 {
    let (mut wins, mut pairs) = (0.0, 0.0);
    for (i, &si) in scores.iter().enumerate() {
        for (j, &sj) in scores.iter().enumerate() {
            if positive[i] && !positive[j] {
                pairs += 1.0;
                if si > sj {
                    wins += 1.0;
                } else if si == sj {
                    wins += 0.5;
                }
            }
        }
    }
    wins / pairs
}

fn oracle_ranks(v: &[f64]) -> Vec<f64> {
    v.iter()
        .map(|&x| {
            let less = v.iter().filter(|&&y| y < x).count() as f64;
            let equal = v.iter().filter(|&&y| y == x).count() as f64;
            less + (equal + 1.0) / 2.0
        })
        .collect()
}

fn oracle_spearman(a: &[f64], b: &[f64]) -> Option<f64> {
    let (ra, rb) = (oracle_ranks(a), oracle_ranks(b));
    let n = ra.len() as f64;
    let sum_a: f64 = ra.iter().sum();
    let sum_b: f64 = rb.iter().sum();
    let sab: f64 = ra.iter().zip(&rb).map(|(x, y)| x * y).sum::<f64>() - sum_a * sum_b / n;
    let saa: f64 = ra.iter().map(|x| x * x).sum::<f64>() - sum_a * sum_a / n;
    let sbb: f64 = rb.iter().map(|x| x * x).sum::<f64>() - sum_b * sum_b / n;
    if saa.abs() < 1e-9 || sbb.abs() < 1e-9 {
        return None;
    }
    Some(sab / (saa * sbb).sqrt())
}

fn criterion_metric_oracles() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for instance in 0..1000 {
        let n = rng.random_range(2..=200);
        // a third of the instances draw from a handful of score levels
        let levels = if instance % 3 == 0 { Some(rng.random_range(1..5)) } else { None };
        let score = |rng: &mut ChaCha8Rng| match levels {
            Some(k) => rng.random_range(0..k) as f64 / 4.0,
            None => rng.random_range(-1.0..1.0),
        };
        let items: Vec<(f64, String, String, Label)> = (0..n)
            .map(|i| {
                let label = if rng.random_bool(0.4) { Label::Syn } else { Label::Ant };
                (score(&mut rng), format!("a{}", rng.random_range(0..20)), format!("b{i}"), label)
            })
            .collect();
        let ranked = rank_labels(items.iter().map(|i| (i.0, i.1.as_str(), i.2.as_str(), i.3)));
        for relevant in [Label::Syn, Label::Ant] {
            let has = items.iter().any(|i| i.3 == relevant);
            match average_precision(&ranked, relevant) {
                Ok(ap) => {
                    check(has, "AP defined without relevant items")?;
                    worst = worst.max((ap - oracle_ap(&items, relevant)).abs());
                }
                Err(_) => check(!has, "AP undefined despite relevant items")?,
            }
        }
        let scores: Vec<f64> = items.iter().map(|i| i.0).collect();
        let positive: Vec<bool> = items.iter().map(|i| i.3 == Label::Syn).collect();
        if positive.iter().any(|&p| p) && positive.iter().any(|&p| !p) {
            worst = worst.max((auc(&scores, &positive).unwrap() - oracle_auc(&scores, &positive)).abs());
        }
        let gold: Vec<f64> = (0..n).map(|_| score(&mut rng)).collect();
        match (spearman(&scores, &gold), oracle_spearman(&scores, &gold)) {
            (Ok(a), Some(b)) => worst = worst.max((a - b).abs()),
            (Err(_), None) => {}
            (a, b) => return Err(format!("Spearman definedness differs: {a:?} vs {b:?}")),
        }
    }
    check(worst <= 1e-12, format!("max deviation {worst:e}"))?;
    within(start.elapsed(), 10)?;
    Ok(format!("1000 instances, max deviation {worst:.1e}, {:.2}s", start.elapsed().as_secs_f64()))
}

// ---------------------------------------------------------------------------
// 2. LMI oracle

fn criterion_lmi_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    let mut instances = 0;
    for _ in 0..40 {
        let n = rng.random_range(2..=100);
        let density = rng.random_range(0.05..0.6);
        let mut dense = vec![vec![0u64; n]; n];
        let mut map = HashMap::new();
        for (w, row) in dense.iter_mut().enumerate() {
            for (f, cell) in row.iter_mut().enumerate() {
                if rng.random_bool(density) {
                    *cell = rng.random_range(1..50);
                    map.insert((w as u32, f as u32), *cell);
                }
            }
        }
        if map.is_empty() {
            continue;
        }
        instances += 1;
        let counts = CooccurrenceCounts::from_map(map, 5);
        let lmi = compute_lmi::<f64>(&counts, n).map_err(|e| e.to_string())?;

        let total: u64 = dense.iter().flatten().sum();
        let row_m: Vec<u64> = dense.iter().map(|r| r.iter().sum()).collect();
        let col_m: Vec<u64> = (0..n).map(|f| dense.iter().map(|r| r[f]).sum()).collect();
        for w in 0..n {
            for f in 0..n {
                let c = dense[w][f];
                let expected = if c == 0 {
                    None
                } else {
                    let pmi = (c as f64 * total as f64 / (row_m[w] as f64 * col_m[f] as f64)).log2();
                    (pmi > 0.0).then(|| c as f64 * pmi)
                };
                match (lmi.get(w as u32, f as u32), expected) {
                    (Some(a), Some(b)) => worst = worst.max((a - b).abs()),
                    (None, None) => {}
                    (a, b) => return Err(format!("cell ({w},{f}): kept {a:?}, oracle {b:?}")),
                }
            }
        }
    }
    check(worst <= 1e-12, format!("max deviation {worst:e}"))?;
    within(start.elapsed(), 5)?;
    Ok(format!(
        "{instances} tables up to 100x100, identical kept cells, max deviation {worst:.1e}, {:.2}s",
        start.elapsed().as_secs_f64()
    ))
}

// ---------------------------------------------------------------------------
// 3. weight^SA oracle

type Sets = Vec<BTreeSet<usize>>;

/// Symmetric synonym sets, antonym sets and enriched antonym sets built
/// straight from the raw relation list.
fn oracle_lexicon(n: usize, relations: &[(usize, Relation, usize)]) -> (Sets, Sets) {
    let mut syn = vec![BTreeSet::new(); n];
    let mut ant = vec![BTreeSet::new(); n];
    for &(a, r, b) in relations {
        if a == b {
            continue;
        }
        match r {
            Relation::Syn => {
                syn[a].insert(b);
                syn[b].insert(a);
            }
            Relation::Ant => {
                ant[a].insert(b);
                ant[b].insert(a);
            }
        }
    }
    for w in 0..n {
        let conflicts: Vec<usize> = syn[w].intersection(&ant[w]).copied().collect();
        for c in conflicts {
            syn[w].remove(&c);
        }
    }
    let enriched = (0..n)
        .map(|w| {
            let mut set = BTreeSet::new();
            for &a in &ant[w] {
                set.insert(a);
                set.extend(syn[a].iter().copied());
            }
            set.remove(&w);
            set.retain(|v| !syn[w].contains(v));
            set
        })
        .collect();
    (syn, enriched)
}

fn dense_cos(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

fn oracle_weight_sa(dense: &[Vec<f64>], syn: &Sets, enriched: &Sets, mode: AntonymMean) -> Vec<Vec<f64>> {
    let n_feat = dense[0].len();
    let occurs = |u: usize, f: usize| dense[u][f] > 0.0;
    let cos = |a: usize, b: usize| dense_cos(&dense[a], &dense[b]);
    let mut out = vec![vec![0.0; n_feat]; dense.len()];
    for w in 0..dense.len() {
        if syn[w].is_empty() && enriched[w].is_empty() {
            continue;
        }
        for f in 0..n_feat {
            if dense[w][f] == 0.0 {
                continue;
            }
            let s: Vec<f64> = syn[w].iter().filter(|&&u| occurs(u, f)).map(|&u| cos(w, u)).collect();
            let syn_term = if s.is_empty() { 0.0 } else { s.iter().sum::<f64>() / s.len() as f64 };
            let per_ant: Vec<Vec<f64>> = enriched[w]
                .iter()
                .map(|&a| syn[a].iter().filter(|&&v| occurs(v, f)).map(|&v| cos(a, v)).collect::<Vec<f64>>())
                .filter(|v| !v.is_empty())
                .collect();
            let ant_term = if per_ant.is_empty() {
                0.0
            } else {
                match mode {
                    AntonymMean::Pooled => {
                        let all: Vec<f64> = per_ant.iter().flatten().copied().collect();
                        all.iter().sum::<f64>() / all.len() as f64
                    }
                    AntonymMean::PerAntonym => {
                        per_ant.iter().map(|v| v.iter().sum::<f64>() / v.len() as f64).sum::<f64>() / per_ant.len() as f64
                    }
                }
            };
            out[w][f] = syn_term - ant_term;
        }
    }
    out
}

fn criterion_weight_sa_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst: f64 = 0.0;
    let mut cells = 0;
    for _ in 0..50 {
        let n = rng.random_range(3..=20);
        let n_feat = rng.random_range(2..=15);
        let density = rng.random_range(0.2..0.8);
        let dense: Vec<Vec<f64>> = (0..n)
            .map(|_| {
                (0..n_feat)
                    .map(|_| if rng.random_bool(density) { rng.random_range(0.01..10.0) } else { 0.0 })
                    .collect()
            })
            .collect();
        let triples = dense
            .iter()
            .enumerate()
            .flat_map(|(w, row)| row.iter().enumerate().map(move |(f, &v)| (w as u32, f as u32, v)));
        let lmi = WeightedMatrix::from_triples(Scheme::Lmi, n, n_feat, triples).unwrap();
        let relations: Vec<(usize, Relation, usize)> = (0..rng.random_range(0..3 * n))
            .map(|_| {
                let r = if rng.random_bool(0.6) { Relation::Syn } else { Relation::Ant };
                (rng.random_range(0..n), r, rng.random_range(0..n))
            })
            .collect();

        let names: Vec<String> = (0..n).map(|i| format!("w{i:02}")).collect();
        let vocab = Vocabulary::build(&[names.clone()], 1).unwrap();
        let lexicon = ContrastLexicon::from_relations(relations.iter().map(|&(a, r, b)| (names[a].as_str(), r, names[b].as_str())));
        let indexed = lexicon.index(&vocab);
        let index = FeatureIndex::build(&lmi);
        let (syn, enriched) = oracle_lexicon(n, &relations);

        for mode in [AntonymMean::Pooled, AntonymMean::PerAntonym] {
            let opts = SaOptions {
                ant_mean: mode,
                ..SaOptions::default()
            };
            let sa = compute_weight_sa(&lmi, &index, &indexed, opts).map_err(|e| e.to_string())?;
            let expected = oracle_weight_sa(&dense, &syn, &enriched, mode);
            for w in 0..n {
                for f in 0..n_feat {
                    let got = sa.get(w as u32, f as u32).unwrap_or(0.0);
                    worst = worst.max((got - expected[w][f]).abs());
                    cells += 1;
                }
            }
        }
    }
    check(worst <= 1e-12, format!("max deviation {worst:e}"))?;
    Ok(format!("50 instances x 2 antonym-mean modes ({cells} cells), max deviation {worst:.1e}"))
}

// ---------------------------------------------------------------------------
// 4. gradient checks

fn rel_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    let diff = analytic.iter().zip(numeric).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let scale = analytic.iter().chain(numeric).map(|x| x.abs()).fold(0.0, f64::max);
    if scale < 1e-10 {
        diff
    } else {
        diff / scale
    }
}

fn central_difference(f: &dyn Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    (0..x.len())
        .map(|i| {
            let (mut p, mut m) = (x.to_vec(), x.to_vec());
            p[i] += h;
            m[i] -= h;
            (f(&p) - f(&m)) / (2.0 * h)
        })
        .collect()
}

fn criterion_gradients() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let (n, d) = (10, 8);
        let target: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        let context: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        let w = rng.random_range(0..n);
        let c = rng.random_range(0..n);
        let negs: Vec<usize> = (0..rng.random_range(1..6)).map(|_| rng.random_range(0..n)).filter(|&x| x != c).collect();

        let neg_refs: Vec<&[f64]> = negs.iter().map(|&i| context[i].as_slice()).collect();
        let g = pair_gradient(&target[w], &context[c], &neg_refs);
        let fd_w = central_difference(&|x| pair_objective(x, &context[c], &neg_refs), &target[w], h);
        worst = worst.max(rel_error(&g.target, &fd_w));
        let fd_c = central_difference(&|x| pair_objective(&target[w], x, &neg_refs), &context[c], h);
        worst = worst.max(rel_error(&g.context, &fd_c));
        for (k, &ni) in negs.iter().enumerate() {
            let f = |x: &[f64]| {
                let refs: Vec<&[f64]> = negs.iter().enumerate().map(|(j, &i)| if j == k { x } else { context[i].as_slice() }).collect();
                pair_objective(&target[w], &context[c], &refs)
            };
            // repeated negatives share one vector; differentiate one slot
            worst = worst.max(rel_error(&g.negatives[k], &central_difference(&f, &context[ni], h)));
        }

        let others: Vec<usize> = (0..n).filter(|&i| i != w).collect();
        let k_syn = rng.random_range(0..4);
        let k_ant = rng.random_range(0..4);
        let syn: Vec<usize> = others[..k_syn].to_vec();
        let ant: Vec<usize> = others[k_syn..k_syn + k_ant].to_vec();
        let beta = rng.random_range(0.1..2.0);
        let syn_refs: Vec<&[f64]> = syn.iter().map(|&i| target[i].as_slice()).collect();
        let ant_refs: Vec<&[f64]> = ant.iter().map(|&i| target[i].as_slice()).collect();
        let cg = contrast_gradient(beta, &target[w], &syn_refs, &ant_refs);
        let fd = central_difference(&|x| contrast_objective(beta, x, &syn_refs, &ant_refs), &target[w], h);
        worst = worst.max(rel_error(&cg.target, &fd));
        for (k, &u) in syn.iter().enumerate() {
            let f = |x: &[f64]| {
                let refs: Vec<&[f64]> = syn.iter().map(|&i| if i == u { x } else { target[i].as_slice() }).collect();
                contrast_objective(beta, &target[w], &refs, &ant_refs)
            };
            worst = worst.max(rel_error(&cg.synonyms[k], &central_difference(&f, &target[u], h)));
        }
        for (k, &v) in ant.iter().enumerate() {
            let f = |x: &[f64]| {
                let refs: Vec<&[f64]> = ant.iter().map(|&i| if i == v { x } else { target[i].as_slice() }).collect();
                contrast_objective(beta, &target[w], &syn_refs, &refs)
            };
            worst = worst.max(rel_error(&cg.antonyms[k], &central_difference(&f, &target[v], h)));
        }
    }
    check(worst < 1e-4, format!("max relative error {worst:e}"))?;
    Ok(format!("100 random 10-word 8-dim models, max relative error {worst:.1e}"))
}

// ---------------------------------------------------------------------------
// 5. empty-lexicon regression anchor

fn small_corpus(seed: u64, tokens: usize) -> (SyntheticData, Vocabulary, Vec<Document>) {
    let data = generate(&SyntheticConfig {
        groups_per_class: 2,
        min_tokens: tokens,
        seed,
        ..SyntheticConfig::default()
    });
    let vocab = Vocabulary::build(&data.sentences, 1).unwrap();
    let docs = vocab.encode(&data.sentences);
    (data, vocab, docs)
}

fn criterion_empty_lexicon() -> Outcome {
    let (_, vocab, docs) = small_corpus(5, 60_000);
    let counts = count_cooccurrences(&docs, &vocab, 5).unwrap();
    let lmi = compute_lmi::<f64>(&counts, vocab.len()).unwrap();
    let index = FeatureIndex::build(&lmi);
    let empty = IndexedLexicon::empty(vocab.len());
    let cfg = TrainingConfig {
        dim: 16,
        negatives: 5,
        epochs: 2,
        subsample: 1e-3,
        min_count: 1,
        seed: 5,
        ..TrainingConfig::default()
    };
    let sgns = train_sgns::<f64>(&docs, &vocab, &cfg).map_err(|e| e.to_string())?;
    let dlce = train_dlce::<f64>(&docs, &vocab, &cfg, &empty, &index).map_err(|e| e.to_string())?;
    let bits = |m: &EmbeddingModel<f64>| -> Vec<u64> {
        m.target.as_slice().iter().chain(m.context.as_slice()).map(|x| x.to_bits()).collect()
    };
    check(bits(&sgns) == bits(&dlce), "dLCE with empty lexicon differs from SGNS")?;
    Ok(format!("{} target and context coordinates bit-identical", bits(&sgns).len()))
}

// ---------------------------------------------------------------------------
// 6-8, 10. directional checks on planted corpora

struct SeedRun {
    seed: u64,
    data: SyntheticData,
    vocab: Vocabulary,
    docs: Vec<Document>,
    lmi: WeightedMatrix<f64>,
    sa: WeightedMatrix<f64>,
    index: FeatureIndex,
    lexicon: IndexedLexicon,
    sparse_time: Duration,
}

fn acceptance_corpus(seed: u64) -> SyntheticConfig {
    SyntheticConfig {
        seed,
        ..SyntheticConfig::default()
    }
}

fn training_config(seed: u64) -> TrainingConfig {
    TrainingConfig {
        dim: 50,
        subsample: 1e-3,
        seed,
        ..TrainingConfig::default()
    }
}

fn prepare(seed: u64) -> SeedRun {
    let start = Instant::now();
    let data = generate(&acceptance_corpus(seed));
    let vocab = Vocabulary::build(&data.sentences, training_config(seed).min_count).unwrap();
    let docs = vocab.encode(&data.sentences);
    let counts = count_cooccurrences(&docs, &vocab, 5).unwrap();
    let lmi = compute_lmi::<f64>(&counts, vocab.len()).unwrap();
    let index = FeatureIndex::build(&lmi);
    let lexicon = data.lexicon().index(&vocab);
    let sa = compute_weight_sa(&lmi, &index, &lexicon, SaOptions::default()).unwrap();
    SeedRun {
        seed,
        data,
        vocab,
        docs,
        lmi,
        sa,
        index,
        lexicon,
        sparse_time: start.elapsed(),
    }
}

fn class_metric(r: &MetricReport, class: WordClass, f: impl Fn(&lexcontrast::eval::ClassReport) -> Option<f64>) -> Result<f64, String> {
    r.class(class).and_then(f).ok_or_else(|| format!("{class}: metric missing"))
}

fn criterion_sa_ap_margins(runs: &[SeedRun]) -> Outcome {
    let mut lines = Vec::new();
    let mut failures = Vec::new();
    let mut slowest = Duration::ZERO;
    for run in runs {
        let start = Instant::now();
        let lmi = eval_ap(&SparseVectors { vocab: &run.vocab, matrix: &run.lmi }, &run.data.relation_pairs);
        let sa = eval_ap(&SparseVectors { vocab: &run.vocab, matrix: &run.sa }, &run.data.relation_pairs);
        slowest = slowest.max(run.sparse_time + start.elapsed());
        for class in CLASSES {
            let (ls, la) = (class_metric(&lmi, class, |c| c.ap_syn)?, class_metric(&lmi, class, |c| c.ap_ant)?);
            let (ss, sa_) = (class_metric(&sa, class, |c| c.ap_syn)?, class_metric(&sa, class, |c| c.ap_ant)?);
            let line = format!("seed {} {class}: LMI {ls:.3}/{la:.3} SA {ss:.3}/{sa_:.3}", run.seed);
            if ss - ls < 0.05 || la - sa_ < 0.05 {
                failures.push(line.clone());
            }
            lines.push(line);
        }
    }
    for l in &lines {
        println!("      {l}");
    }
    check(failures.is_empty(), format!("margins below 0.05: {}", failures.join("; ")))?;
    within(slowest, 300)?;
    Ok(format!("AP_SYN/AP_ANT margins >= 0.05 for 3/3 seeds and all classes, slowest seed {:.1}s", slowest.as_secs_f64()))
}

struct Trained {
    sgns: lexcontrast::vectors::DenseEmbeddings<f64>,
    dlce: lexcontrast::vectors::DenseEmbeddings<f64>,
    time: Duration,
}

fn train_pair(run: &SeedRun) -> Result<Trained, String> {
    let start = Instant::now();
    let cfg = training_config(run.seed);
    let sgns = train_sgns::<f64>(&run.docs, &run.vocab, &cfg).map_err(|e| e.to_string())?;
    let dlce = train_dlce::<f64>(&run.docs, &run.vocab, &cfg, &run.lexicon, &run.index).map_err(|e| e.to_string())?;
    Ok(Trained {
        sgns: sgns.embeddings(&run.vocab, Source::Sgns).map_err(|e| e.to_string())?,
        dlce: dlce.embeddings(&run.vocab, Source::Dlce).map_err(|e| e.to_string())?,
        time: start.elapsed(),
    })
}

fn criterion_dlce_auc(runs: &[SeedRun], trained: &[Trained]) -> Outcome {
    let mut failures = Vec::new();
    for (run, t) in runs.iter().zip(trained) {
        let s = eval_ap(&t.sgns, &run.data.relation_pairs);
        let d = eval_ap(&t.dlce, &run.data.relation_pairs);
        for class in CLASSES {
            let (a, b) = (class_metric(&s, class, |c| c.auc)?, class_metric(&d, class, |c| c.auc)?);
            let line = format!("seed {} {class}: SGNS AUC {a:.3} dLCE AUC {b:.3}", run.seed);
            println!("      {line}");
            if b - a < 0.10 || b < 0.85 {
                failures.push(line);
            }
        }
    }
    check(failures.is_empty(), failures.join("; "))?;
    let slowest = trained.iter().map(|t| t.time).max().unwrap_or_default();
    within(slowest, 600)?;
    Ok(format!(
        "dLCE AUC >= 0.85 and >= SGNS + 0.10 for 3/3 seeds and all classes, dim 50, slowest seed {:.1}s",
        slowest.as_secs_f64()
    ))
}

fn criterion_dlce_spearman(runs: &[SeedRun], trained: &[Trained]) -> Outcome {
    let mut failures = Vec::new();
    for (run, t) in runs.iter().zip(trained) {
        let s = eval_spearman(&t.sgns, &run.data.similarity).map_err(|e| e.to_string())?.spearman.unwrap();
        let d = eval_spearman(&t.dlce, &run.data.similarity).map_err(|e| e.to_string())?.spearman.unwrap();
        let line = format!("seed {}: SGNS rho {s:.3} dLCE rho {d:.3}", run.seed);
        println!("      {line}");
        if d - s < 0.05 {
            failures.push(line);
        }
    }
    check(failures.is_empty(), failures.join("; "))?;
    Ok("dLCE rho >= SGNS rho + 0.05 for 3/3 seeds".into())
}

fn criterion_median_gap(runs: &[SeedRun]) -> Outcome {
    let mut failures = Vec::new();
    for run in runs {
        let cfg = SvdConfig {
            seed: run.seed,
            ..SvdConfig::default()
        };
        let mut gaps = BTreeMap::new();
        for (name, m, source) in [("LMI", &run.lmi, Source::LmiSvd), ("SA", &run.sa, Source::SaSvd)] {
            let emb = truncated_svd(m, &cfg)
                .and_then(|f| f.into_embeddings(&run.vocab, cfg.exponent, source))
                .map_err(|e| e.to_string())?;
            let r = eval_ap(&emb, &run.data.relation_pairs);
            for class in CLASSES {
                let syn = class_metric(&r, class, |c| c.median_syn)?;
                let ant = class_metric(&r, class, |c| c.median_ant)?;
                gaps.insert((name, class), syn - ant);
            }
        }
        for class in CLASSES {
            let (l, s) = (gaps[&("LMI", class)], gaps[&("SA", class)]);
            let line = format!("seed {} {class}: median gap LMI+SVD {l:.3} SA+SVD {s:.3}", run.seed);
            println!("      {line}");
            if s <= l {
                failures.push(line);
            }
        }
    }
    check(failures.is_empty(), failures.join("; "))?;
    Ok("median(SYN) - median(ANT) larger under SA+SVD for every seed and class".into())
}

// ---------------------------------------------------------------------------
// 9. SVD against a Jacobi oracle

/// Singular values by one-sided Jacobi rotations on the columns.
fn jacobi_singular_values(a: &[Vec<f64>]) -> Vec<f64> {
    let m = a.len();
    let n = a[0].len();
    let mut cols: Vec<Vec<f64>> = (0..n).map(|j| (0..m).map(|i| a[i][j]).collect()).collect();
    for _sweep in 0..100 {
        let mut off: f64 = 0.0;
        for p in 0..n {
            for q in p + 1..n {
                let alpha: f64 = cols[p].iter().map(|x| x * x).sum();
                let beta: f64 = cols[q].iter().map(|x| x * x).sum();
                let gamma: f64 = cols[p].iter().zip(&cols[q]).map(|(x, y)| x * y).sum();
                if gamma == 0.0 || gamma.abs() <= 1e-15 * (alpha * beta).sqrt() {
                    continue;
                }
                off = off.max(gamma.abs() / (alpha * beta).sqrt());
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let t = if zeta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for i in 0..m {
                    let (x, y) = (cols[p][i], cols[q][i]);
                    cols[p][i] = c * x - s * y;
                    cols[q][i] = s * x + c * y;
                }
            }
        }
        if off < 1e-15 {
            break;
        }
    }
    let mut sv: Vec<f64> = cols.iter().map(|c| c.iter().map(|x| x * x).sum::<f64>().sqrt()).collect();
    sv.sort_by(|a, b| b.partial_cmp(a).unwrap());
    sv
}

fn criterion_svd() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let (m, n) = (rng.random_range(5..=200), rng.random_range(5..=200));
        let density = rng.random_range(0.02..0.3);
        let dense: Vec<Vec<f64>> = (0..m)
            .map(|_| (0..n).map(|_| if rng.random_bool(density) { rng.random_range(-5.0..5.0) } else { 0.0 }).collect())
            .collect();
        if dense.iter().flatten().all(|&x| x == 0.0) {
            continue;
        }
        let triples = dense
            .iter()
            .enumerate()
            .flat_map(|(i, row)| row.iter().enumerate().map(move |(j, &v)| (i as u32, j as u32, v)));
        let matrix = WeightedMatrix::from_triples(Scheme::Lmi, m, n, triples).unwrap();
        let d = rng.random_range(1..=m.min(n).min(60));
        let f = truncated_svd(
            &matrix,
            &SvdConfig {
                dim: d,
                ..SvdConfig::default()
            },
        )
        .map_err(|e| e.to_string())?;
        let err2: f64 = (0..m)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .map(|(i, j)| (dense[i][j] - f.reconstruct(i, j)).powi(2))
            .sum();
        let sv = jacobi_singular_values(&dense);
        let optimum2: f64 = sv.iter().skip(d).map(|s| s * s).sum();
        worst = worst.max((err2.max(0.0).sqrt() - optimum2.sqrt()).abs());
    }
    check(worst <= 1e-6, format!("reconstruction error off optimum by {worst:e}"))?;
    Ok(format!("20 random sparse matrices up to 200x200, max gap to optimum {worst:.1e}"))
}

// ---------------------------------------------------------------------------
// 11. pipeline determinism

fn criterion_pipeline_determinism() -> Outcome {
    let conf = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/toy/pipeline.conf");
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut outputs = Vec::new();
    for run in ["first", "second"] {
        let out = dir.path().join(run);
        let status = Command::new(env!("CARGO_BIN_EXE_lexcontrast"))
            .args(["pipeline", "--config", conf.to_str().unwrap(), "--out-dir", out.to_str().unwrap(), "--threads", "1"])
            .output()
            .map_err(|e| e.to_string())?;
        check(status.status.success(), String::from_utf8_lossy(&status.stderr).to_string())?;
        let mut files = BTreeMap::new();
        for entry in std::fs::read_dir(&out).map_err(|e| e.to_string())? {
            let entry = entry.map_err(|e| e.to_string())?;
            files.insert(entry.file_name(), std::fs::read(entry.path()).map_err(|e| e.to_string())?);
        }
        outputs.push(files);
    }
    check(outputs[0] == outputs[1], "artifacts differ between runs")?;
    for bytes in outputs[0].values() {
        check(bytes.starts_with(b"# tool=lexcontrast"), "artifact without provenance header")?;
    }
    Ok(format!("{} artifacts byte-identical across two runs", outputs[0].len()))
}

// ---------------------------------------------------------------------------

fn guarded(f: impl FnOnce() -> Outcome) -> Outcome {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(r) => r,
        Err(p) => Err(p
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_else(|| "panicked".into())),
    }
}

#[test]
fn acceptance() {
    let mut results: Vec<(usize, &str, Outcome)> = Vec::new();
    let mut report = |id: usize, name: &'static str, outcome: Outcome| {
        match &outcome {
            Ok(msg) => println!("PASS [{id:>2}] {name}: {msg}"),
            Err(msg) => println!("FAIL [{id:>2}] {name}: {msg}"),
        }
        results.push((id, name, outcome));
    };

    report(1, "metric oracles", guarded(criterion_metric_oracles));
    report(2, "LMI oracle", guarded(criterion_lmi_oracle));
    report(3, "weight-SA oracle", guarded(criterion_weight_sa_oracle));
    report(4, "gradient checks", guarded(criterion_gradients));
    report(5, "dLCE/SGNS empty-lexicon anchor", guarded(criterion_empty_lexicon));

    let runs: Vec<SeedRun> = SEEDS.iter().map(|&s| prepare(s)).collect();
    report(6, "AP direction, SA vs LMI", guarded(|| criterion_sa_ap_margins(&runs)));
    let trained: Result<Vec<Trained>, String> = catch_unwind(AssertUnwindSafe(|| runs.iter().map(train_pair).collect()))
        .unwrap_or_else(|_| Err("training panicked".into()));
    match &trained {
        Ok(t) => {
            report(7, "AUC direction, dLCE vs SGNS", guarded(|| criterion_dlce_auc(&runs, t)));
            report(8, "Spearman direction, dLCE vs SGNS", guarded(|| criterion_dlce_spearman(&runs, t)));
        }
        Err(e) => {
            report(7, "AUC direction, dLCE vs SGNS", Err(e.clone()));
            report(8, "Spearman direction, dLCE vs SGNS", Err(e.clone()));
        }
    }
    report(9, "SVD vs dense oracle", guarded(criterion_svd));
    report(10, "median gap, SA+SVD vs LMI+SVD", guarded(|| criterion_median_gap(&runs)));
    report(11, "pipeline determinism", guarded(criterion_pipeline_determinism));

    let failed: Vec<String> = results
        .iter()
        .filter(|r| r.2.is_err())
        .map(|r| format!("[{}] {}", r.0, r.1))
        .collect();
    assert!(failed.is_empty(), "failed criteria: {}", failed.join(", "));
}
