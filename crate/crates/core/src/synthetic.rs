//! Planted-structure corpora for end-to-end checks.
//!
//! Every word class holds a number of groups. A group has two poles of
//! interchangeable target words (synonyms); words of opposite poles are
//! antonyms. Both poles share the group's topic contexts, so antonyms look
//! alike distributionally, and each pole adds a weaker set of its own
//! contexts. Topic strength varies between groups, which keeps raw
//! cosines from ranking pairs cleanly across groups.

use std::io::Write;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Zipf};

use crate::error::Result;
use crate::eval::{Label, RelationPair, RelationPairSet, SimilarityPair, SimilarityPairSet, WordClass};
use crate::lexicon::{ContrastLexicon, Relation};

#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticConfig {
    pub groups_per_class: usize,
    pub pole_size: usize,
    pub topic_contexts: usize,
    pub pole_contexts: usize,
    pub idiosyncratic_contexts: usize,
    pub filler_words: usize,
    pub line_length: usize,
    pub min_tokens: usize,
    /// Range of per-group probabilities that a context slot holds a topic word.
    pub topic_strength: (f64, f64),
    pub pole_strength: f64,
    pub idiosyncratic_strength: f64,
    pub antonyms_per_word: usize,
    /// Fraction of planted relations that make it into the lexicon.
    pub lexicon_coverage: f64,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            groups_per_class: 8,
            pole_size: 4,
            topic_contexts: 6,
            pole_contexts: 4,
            idiosyncratic_contexts: 2,
            filler_words: 300,
            line_length: 11,
            min_tokens: 550_000,
            topic_strength: (0.25, 0.65),
            pole_strength: 0.03,
            idiosyncratic_strength: 0.1,
            antonyms_per_word: 2,
            lexicon_coverage: 0.8,
            seed: 1,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SyntheticData {
    pub sentences: Vec<Vec<String>>,
    pub relations: Vec<(String, Relation, String)>,
    pub relation_pairs: RelationPairSet,
    pub similarity: SimilarityPairSet,
}

impl SyntheticData {
    pub fn lexicon(&self) -> ContrastLexicon {
        ContrastLexicon::from_relations(self.relations.iter().map(|(a, r, b)| (a.as_str(), *r, b.as_str())))
    }

    pub fn token_count(&self) -> usize {
        self.sentences.iter().map(Vec::len).sum()
    }

    pub fn write_corpus<W: Write>(&self, mut w: W) -> Result<()> {
        for s in &self.sentences {
            writeln!(w, "{}", s.join(" "))?;
        }
        Ok(())
    }

    pub fn write_lexicon<W: Write>(&self, mut w: W) -> Result<()> {
        for (a, r, b) in &self.relations {
            let r = match r {
                Relation::Syn => "SYN",
                Relation::Ant => "ANT",
            };
            writeln!(w, "{a}\t{r}\t{b}")?;
        }
        Ok(())
    }
}

struct Group {
    class: WordClass,
    poles: [Vec<String>; 2],
    topic: Vec<String>,
    pole_contexts: [Vec<String>; 2],
    strength: f64,
}

fn class_prefix(c: WordClass) -> &'static str {
    match c {
        WordClass::Adj => "adj",
        WordClass::Noun => "noun",
        WordClass::Verb => "verb",
    }
}

pub fn generate(cfg: &SyntheticConfig) -> SyntheticData {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut groups = Vec::new();
    for class in [WordClass::Adj, WordClass::Noun, WordClass::Verb] {
        let prefix = class_prefix(class);
        for g in 0..cfg.groups_per_class {
            let pole = |p: char| (0..cfg.pole_size).map(|i| format!("{prefix}{g:02}{p}{i}")).collect();
            let ctx = |p: char| (0..cfg.pole_contexts).map(|i| format!("p{prefix}{g:02}{p}{i}")).collect();
            groups.push(Group {
                class,
                poles: [pole('a'), pole('b')],
                topic: (0..cfg.topic_contexts).map(|i| format!("t{prefix}{g:02}x{i}")).collect(),
                pole_contexts: [ctx('a'), ctx('b')],
                strength: rng.random_range(cfg.topic_strength.0..=cfg.topic_strength.1),
            });
        }
    }
    let filler: Vec<String> = (0..cfg.filler_words).map(|i| format!("f{i}")).collect();
    let zipf = Zipf::new(cfg.filler_words as f64, 1.0).expect("valid zipf");

    let targets: Vec<(usize, usize, usize)> = groups
        .iter()
        .enumerate()
        .flat_map(|(g, grp)| (0..2).flat_map(move |p| (0..grp.poles[p].len()).map(move |i| (g, p, i))))
        .collect();
    let center = cfg.line_length / 2;
    let mut sentences = Vec::new();
    let mut tokens = 0;
    while tokens < cfg.min_tokens {
        let &(g, p, i) = targets.choose(&mut rng).expect("targets");
        let grp = &groups[g];
        let word = &grp.poles[p][i];
        let line: Vec<String> = (0..cfg.line_length)
            .map(|slot| {
                if slot == center {
                    return word.clone();
                }
                let r: f64 = rng.random();
                if r < grp.strength {
                    grp.topic.choose(&mut rng).unwrap().clone()
                } else if r < grp.strength + cfg.pole_strength {
                    grp.pole_contexts[p].choose(&mut rng).unwrap().clone()
                } else if r < grp.strength + cfg.pole_strength + cfg.idiosyncratic_strength {
                    format!("i{word}x{}", rng.random_range(0..cfg.idiosyncratic_contexts))
                } else {
                    filler[zipf.sample(&mut rng) as usize - 1].clone()
                }
            })
            .collect();
        tokens += line.len();
        sentences.push(line);
    }

    let mut relations = Vec::new();
    let mut eval_pairs = Vec::new();
    let mut sim_pairs = Vec::new();
    let keep = |rng: &mut ChaCha8Rng| rng.random::<f64>() < cfg.lexicon_coverage;
    for grp in &groups {
        for pole in &grp.poles {
            for (i, a) in pole.iter().enumerate() {
                for b in &pole[i + 1..] {
                    if keep(&mut rng) {
                        relations.push((a.clone(), Relation::Syn, b.clone()));
                    }
                    eval_pairs.push(RelationPair {
                        word1: a.clone(),
                        word2: b.clone(),
                        label: Label::Syn,
                        class: grp.class,
                    });
                    sim_pairs.push(SimilarityPair {
                        word1: a.clone(),
                        word2: b.clone(),
                        rating: rng.random_range(7.0..10.0),
                    });
                }
            }
        }
        let mut ant = std::collections::BTreeSet::new();
        for (i, a) in grp.poles[0].iter().enumerate() {
            for k in 0..cfg.antonyms_per_word.min(cfg.pole_size) {
                ant.insert((a.clone(), grp.poles[1][(i + k) % cfg.pole_size].clone()));
            }
        }
        for (a, b) in ant {
            if keep(&mut rng) {
                relations.push((a.clone(), Relation::Ant, b.clone()));
            }
            sim_pairs.push(SimilarityPair {
                word1: a.clone(),
                word2: b.clone(),
                rating: rng.random_range(0.0..3.0),
            });
            eval_pairs.push(RelationPair {
                word1: a,
                word2: b,
                label: Label::Ant,
                class: grp.class,
            });
        }
    }

    // unrelated pairs across groups of the same class, rated in between
    let n_random = eval_pairs.iter().filter(|p| p.label == Label::Ant).count();
    let mut seen = std::collections::HashSet::new();
    while seen.len() < n_random {
        let &(g1, p1, i1) = targets.choose(&mut rng).unwrap();
        let &(g2, p2, i2) = targets.choose(&mut rng).unwrap();
        if g1 == g2 || groups[g1].class != groups[g2].class {
            continue;
        }
        let (a, b) = (&groups[g1].poles[p1][i1], &groups[g2].poles[p2][i2]);
        let key = if a < b { (a.clone(), b.clone()) } else { (b.clone(), a.clone()) };
        if seen.insert(key) {
            sim_pairs.push(SimilarityPair {
                word1: a.clone(),
                word2: b.clone(),
                rating: rng.random_range(3.5..6.5),
            });
        }
    }
    sim_pairs.shuffle(&mut rng);

    SyntheticData {
        sentences,
        relations,
        relation_pairs: RelationPairSet::new(eval_pairs).expect("unique pairs"),
        similarity: SimilarityPairSet::new(sim_pairs).expect("unique pairs"),
    }
}
