//! Synonym/antonym resources and antonym enrichment.
//!
//! The relation file is TSV `word1<TAB>REL<TAB>word2` with `REL` one of
//! `SYN` or `ANT`; `#` starts a comment. Relations are stored symmetrically.
//! A pair listed as both synonym and antonym is kept as an antonym only.

use std::collections::{BTreeMap, BTreeSet};
use std::io::BufRead;

use crate::corpus::Vocabulary;
use crate::error::{Error, Result};

pub type WordSet = BTreeSet<String>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Relation {
    Syn,
    Ant,
}

impl std::str::FromStr for Relation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "SYN" => Ok(Relation::Syn),
            "ANT" => Ok(Relation::Ant),
            other => Err(format!("unknown relation tag {other:?}")),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ContrastLexicon {
    syn: BTreeMap<String, WordSet>,
    ant: BTreeMap<String, WordSet>,
    ant_enriched: BTreeMap<String, WordSet>,
}

fn insert_symmetric(map: &mut BTreeMap<String, WordSet>, a: &str, b: &str) {
    map.entry(a.to_owned()).or_default().insert(b.to_owned());
    map.entry(b.to_owned()).or_default().insert(a.to_owned());
}

fn remove_symmetric(map: &mut BTreeMap<String, WordSet>, a: &str, b: &str) {
    for (x, y) in [(a, b), (b, a)] {
        if let Some(set) = map.get_mut(x) {
            set.remove(y);
            if set.is_empty() {
                map.remove(x);
            }
        }
    }
}

impl ContrastLexicon {
    /// Builds a lexicon from relation triples, then enriches antonyms.
    pub fn from_relations<'a>(relations: impl IntoIterator<Item = (&'a str, Relation, &'a str)>) -> Self {
        let mut syn = BTreeMap::new();
        let mut ant = BTreeMap::new();
        for (a, rel, b) in relations {
            if a == b {
                continue;
            }
            match rel {
                Relation::Syn => insert_symmetric(&mut syn, a, b),
                Relation::Ant => insert_symmetric(&mut ant, a, b),
            }
        }
        let conflicts: Vec<(String, String)> = ant
            .iter()
            .flat_map(|(w, set)| set.iter().map(move |v| (w.clone(), v.clone())))
            .collect();
        for (w, v) in conflicts {
            remove_symmetric(&mut syn, &w, &v);
        }
        let mut lex = ContrastLexicon {
            syn,
            ant,
            ant_enriched: BTreeMap::new(),
        };
        lex.enrich();
        lex
    }

    pub fn read<R: BufRead>(reader: R) -> Result<Self> {
        let mut triples: Vec<(String, Relation, String)> = Vec::new();
        for (n, line) in reader.lines().enumerate() {
            let line = line?;
            let body = line.trim_end_matches(['\r', '\n']);
            if body.trim().is_empty() || body.trim_start().starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = body.split('\t').collect();
            if fields.len() != 3 || fields.iter().any(|f| f.trim().is_empty()) {
                return Err(Error::parse(n + 1, "expected word1<TAB>REL<TAB>word2"));
            }
            let rel = fields[1].trim().parse().map_err(|e| Error::parse(n + 1, e))?;
            triples.push((fields[0].trim().to_owned(), rel, fields[2].trim().to_owned()));
        }
        Ok(Self::from_relations(
            triples.iter().map(|(a, r, b)| (a.as_str(), *r, b.as_str())),
        ))
    }

    /// Recomputes `A*(w) = U_{w' in A(w)} ({w'} u S(w'))` minus `{w}` and `S(w)`.
    fn enrich(&mut self) {
        let empty = WordSet::new();
        let mut enriched = BTreeMap::new();
        for (w, antonyms) in &self.ant {
            let own_syn = self.syn.get(w).unwrap_or(&empty);
            let mut set = WordSet::new();
            for a in antonyms {
                set.insert(a.clone());
                set.extend(self.syn.get(a).unwrap_or(&empty).iter().cloned());
            }
            set.remove(w);
            set.retain(|v| !own_syn.contains(v));
            if !set.is_empty() {
                enriched.insert(w.clone(), set);
            }
        }
        self.ant_enriched = enriched;
    }

    /// Runs enrichment again with the current enriched sets as the antonym
    /// input (synonym sets unchanged).
    pub fn re_enriched(&self) -> Self {
        let mut next = ContrastLexicon {
            syn: self.syn.clone(),
            ant: self.ant_enriched.clone(),
            ant_enriched: BTreeMap::new(),
        };
        next.enrich();
        next
    }

    pub fn synonyms(&self, w: &str) -> Option<&WordSet> {
        self.syn.get(w)
    }

    pub fn antonyms(&self, w: &str) -> Option<&WordSet> {
        self.ant.get(w)
    }

    pub fn enriched_antonyms(&self, w: &str) -> Option<&WordSet> {
        self.ant_enriched.get(w)
    }

    pub fn is_empty(&self) -> bool {
        self.syn.is_empty() && self.ant.is_empty()
    }

    /// Number of unordered (synonym, antonym) pairs.
    pub fn pair_counts(&self) -> (usize, usize) {
        let half = |m: &BTreeMap<String, WordSet>| m.values().map(BTreeSet::len).sum::<usize>() / 2;
        (half(&self.syn), half(&self.ant))
    }

    /// Restricts the lexicon to words in `vocab`, as sorted id lists.
    pub fn index(&self, vocab: &Vocabulary) -> IndexedLexicon {
        let n = vocab.len();
        let project = |m: &BTreeMap<String, WordSet>| {
            let mut out = vec![Vec::new(); n];
            for (w, set) in m {
                if let Some(id) = vocab.id(w) {
                    let mut ids: Vec<u32> = set.iter().filter_map(|v| vocab.id(v)).collect();
                    ids.sort_unstable();
                    out[id as usize] = ids;
                }
            }
            out
        };
        IndexedLexicon {
            syn: project(&self.syn),
            ant: project(&self.ant),
            ant_enriched: project(&self.ant_enriched),
        }
    }
}

/// Lexicon relations over vocabulary ids. Every list is sorted ascending.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct IndexedLexicon {
    pub syn: Vec<Vec<u32>>,
    pub ant: Vec<Vec<u32>>,
    pub ant_enriched: Vec<Vec<u32>>,
}

impl IndexedLexicon {
    pub fn empty(n: usize) -> Self {
        IndexedLexicon {
            syn: vec![Vec::new(); n],
            ant: vec![Vec::new(); n],
            ant_enriched: vec![Vec::new(); n],
        }
    }

    pub fn len(&self) -> usize {
        self.syn.len()
    }

    pub fn is_empty(&self) -> bool {
        self.syn.is_empty()
    }

    pub fn synonyms(&self, id: u32) -> &[u32] {
        &self.syn[id as usize]
    }

    pub fn antonyms(&self, id: u32) -> &[u32] {
        &self.ant[id as usize]
    }

    pub fn enriched_antonyms(&self, id: u32) -> &[u32] {
        &self.ant_enriched[id as usize]
    }

    pub fn has_relations(&self, id: u32) -> bool {
        !self.syn[id as usize].is_empty() || !self.ant[id as usize].is_empty()
    }
}
