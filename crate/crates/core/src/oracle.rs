//! Brute-force language edit distance: enumerate the language up to a
//! length bound and take the closest word under unit-cost Levenshtein
//! distance. Independent of the covering grammar and the parsers.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grammar::WeightedGrammar;

/// Unit-cost insert/delete/substitute distance.
pub fn levenshtein(s: &str, t: &str) -> usize {
    let t: Vec<char> = t.chars().collect();
    let mut row: Vec<usize> = (0..=t.len()).collect();
    for (i, a) in s.chars().enumerate() {
        let mut diag = row[0];
        row[0] = i + 1;
        for (j, &b) in t.iter().enumerate() {
            let next = (diag + usize::from(a != b)).min(row[j] + 1).min(row[j + 1] + 1);
            diag = row[j + 1];
            row[j + 1] = next;
        }
    }
    row[t.len()]
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleResult {
    pub distance: u32,
    /// Every nearest word.
    pub witnesses: BTreeSet<String>,
}

#[derive(Default)]
struct TrieNode {
    children: Vec<(char, usize)>,
    word: bool,
}

/// The language up to a fixed length, stored as a trie for repeated
/// queries.
pub struct LanguageOracle {
    nodes: Vec<TrieNode>,
    max_len: usize,
    shortest: usize,
    words: usize,
}

impl LanguageOracle {
    /// Enumerates every word of `g` with length at most `max_len`.
    pub fn new(g: &WeightedGrammar, max_len: usize) -> Result<LanguageOracle> {
        let cnf = if g.is_cnf() { g.clone() } else { g.to_cnf()? };
        let shortest = cnf.shortest_word_length()?;
        let mut oracle = LanguageOracle { nodes: vec![TrieNode::default()], max_len, shortest, words: 0 };
        for w in cnf.words_by_length(max_len).into_iter().flatten() {
            oracle.insert(&w);
        }
        Ok(oracle)
    }

    /// Oracle able to answer every query of length at most `max_query`.
    pub fn for_queries(g: &WeightedGrammar, max_query: usize) -> Result<LanguageOracle> {
        let cnf = if g.is_cnf() { g.clone() } else { g.to_cnf()? };
        let shortest = cnf.shortest_word_length()?;
        LanguageOracle::new(&cnf, max_query + max_query.max(shortest))
    }

    fn insert(&mut self, w: &str) {
        let mut at = 0;
        for c in w.chars() {
            at = match self.nodes[at].children.iter().find(|(d, _)| *d == c) {
                Some(&(_, next)) => next,
                None => {
                    self.nodes.push(TrieNode::default());
                    let next = self.nodes.len() - 1;
                    self.nodes[at].children.push((c, next));
                    next
                }
            };
        }
        if !self.nodes[at].word {
            self.nodes[at].word = true;
            self.words += 1;
        }
    }

    /// Number of enumerated words.
    pub fn len(&self) -> usize {
        self.words
    }

    pub fn is_empty(&self) -> bool {
        self.words == 0
    }

    pub fn max_len(&self) -> usize {
        self.max_len
    }

    pub fn shortest_word_length(&self) -> usize {
        self.shortest
    }

    /// Nearest words to `s`. Any word is within `max(|s|, shortest)` edits
    /// of `s` and a word at distance `r` has length at most `|s| + r`, so
    /// the enumeration must reach `|s| + max(|s|, shortest)`.
    pub fn query(&self, s: &str) -> Result<OracleResult> {
        let q: Vec<char> = s.chars().collect();
        let radius = q.len().max(self.shortest);
        let needed = q.len() + radius;
        if needed > self.max_len {
            return Err(Error::OracleBound { needed, have: self.max_len });
        }
        let mut search = Search { oracle: self, q: &q, best: radius, witnesses: BTreeSet::new(), prefix: String::new() };
        let row: Vec<usize> = (0..=q.len()).collect();
        search.visit(0, &row);
        if search.witnesses.is_empty() {
            return Err(Error::Inconsistent(format!("no word within {radius} edits of {s:?}")));
        }
        Ok(OracleResult { distance: search.best as u32, witnesses: search.witnesses })
    }
}

struct Search<'a> {
    oracle: &'a LanguageOracle,
    q: &'a [char],
    best: usize,
    witnesses: BTreeSet<String>,
    prefix: String,
}

impl Search<'_> {
    // `row[j]` is the distance between the current prefix and `q[..j]`.
    fn visit(&mut self, at: usize, row: &[usize]) {
        let node = &self.oracle.nodes[at];
        let d = row[self.q.len()];
        if node.word && d <= self.best {
            if d < self.best {
                self.best = d;
                self.witnesses.clear();
            }
            self.witnesses.insert(self.prefix.clone());
        }
        let mut next = vec![0; row.len()];
        for &(c, child) in &node.children {
            next[0] = row[0] + 1;
            for j in 1..row.len() {
                next[j] = (row[j - 1] + usize::from(self.q[j - 1] != c)).min(row[j] + 1).min(next[j - 1] + 1);
            }
            // row minima never decrease along a trie path
            if next.iter().min().is_some_and(|&m| m <= self.best) {
                self.prefix.push(c);
                self.visit(child, &next);
                self.prefix.pop();
            }
        }
    }
}

/// Enumerates `L(g)` up to length `|s| + radius` and returns the nearest
/// words. `radius` must be at least the true distance;
/// `max(|s|, shortest word length)` always is.
pub fn brute_force_distance(g: &WeightedGrammar, s: &str, radius: usize) -> Result<OracleResult> {
    let n = s.chars().count();
    let oracle = LanguageOracle::new(g, n + radius)?;
    let mut search = Search {
        oracle: &oracle,
        q: &s.chars().collect::<Vec<_>>(),
        best: radius,
        witnesses: BTreeSet::new(),
        prefix: String::new(),
    };
    let row: Vec<usize> = (0..=n).collect();
    search.visit(0, &row);
    if search.witnesses.is_empty() {
        return Err(Error::OracleBound { needed: n + n.max(oracle.shortest), have: n + radius });
    }
    Ok(OracleResult { distance: search.best as u32, witnesses: search.witnesses })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grammar::parse_grammar;

    const ANBN: &str = "start: S\nS -> A A1 | A B\nA1 -> S B\nA -> 'a'\nB -> 'b'\n";

    fn set(words: &[&str]) -> BTreeSet<String> {
        words.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn levenshtein_examples() {
        assert_eq!(levenshtein("ab", "ab"), 0);
        assert_eq!(levenshtein("aab", "aabb"), 1);
        assert_eq!(levenshtein("ba", "ab"), 2);
        assert_eq!(levenshtein("", "abc"), 3);
        assert_eq!(levenshtein("kitten", "sitting"), 3);
    }

    #[test]
    fn brute_force_examples() {
        let g = parse_grammar(ANBN).unwrap();
        let r = brute_force_distance(&g, "aab", 3).unwrap();
        assert_eq!((r.distance, r.witnesses), (1, set(&["ab", "aabb"])));
        let r = brute_force_distance(&g, "ab", 2).unwrap();
        assert_eq!((r.distance, r.witnesses), (0, set(&["ab"])));
        let r = brute_force_distance(&g, "", 2).unwrap();
        assert_eq!((r.distance, r.witnesses), (2, set(&["ab"])));
        let r = brute_force_distance(&g, "bbbb", 4).unwrap();
        assert_eq!((r.distance, r.witnesses), (2, set(&["aabb"])));
    }

    #[test]
    fn radius_too_small() {
        let g = parse_grammar(ANBN).unwrap();
        assert!(matches!(brute_force_distance(&g, "ba", 1), Err(Error::OracleBound { .. })));
    }

    #[test]
    fn shared_oracle_matches_one_shot() {
        let g = parse_grammar("S -> '(' S ')' | S S | '(' ')'").unwrap();
        let oracle = LanguageOracle::for_queries(&g, 5).unwrap();
        for s in ["", "(", ")(", "(()", "))((("] {
            let n = s.chars().count();
            assert_eq!(oracle.query(s).unwrap(), brute_force_distance(&g, s, n.max(2)).unwrap(), "{s}");
        }
        assert!(matches!(oracle.query("((((((("), Err(Error::OracleBound { .. })));
    }

    #[test]
    fn empty_language() {
        let g = parse_grammar("S -> S 'a'").unwrap();
        assert!(brute_force_distance(&g, "a", 1).is_err());
    }
}
