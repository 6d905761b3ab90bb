//! Error-correcting CYK over a covering grammar.
//!
//! Chart cells are indexed by 0-based fenceposts: cell `(i, j)` covers
//! `input[i..j]`, so the whole input is `(0, n)`.

use serde::{Deserialize, Serialize};

use crate::covering::CoveringGrammar;
use crate::error::{Error, Result};
use crate::semiring::{Cost, PairSetMatrix, INF};

/// Upper-triangular chart of minimum error counts per (nonterminal, span).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PairSetChart {
    n: usize,
    nts: usize,
    input: Vec<char>,
    data: Vec<Cost>,
    /// Tuple-combination attempts made while filling the chart.
    pub combination_attempts: u64,
}

impl PairSetChart {
    fn new(input: &[char], nts: usize) -> PairSetChart {
        let n = input.len();
        PairSetChart { n, nts, input: input.to_vec(), data: vec![INF; (n + 1) * (n + 1) * nts], combination_attempts: 0 }
    }

    /// Input length.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn num_nonterminals(&self) -> usize {
        self.nts
    }

    pub fn input(&self) -> &[char] {
        &self.input
    }

    #[inline]
    fn offset(&self, i: usize, j: usize) -> usize {
        (i * (self.n + 1) + j) * self.nts
    }

    /// Costs of cell `(i, j)` indexed by nonterminal; [`INF`] marks absence.
    pub fn cell(&self, i: usize, j: usize) -> &[Cost] {
        assert!(i < j && j <= self.n, "cell ({i}, {j}) outside chart of length {}", self.n);
        let o = self.offset(i, j);
        &self.data[o..o + self.nts]
    }

    pub fn get(&self, i: usize, j: usize, nt: usize) -> Option<Cost> {
        Some(self.cell(i, j)[nt]).filter(|&c| c != INF)
    }

    fn insert_min(&mut self, i: usize, j: usize, nt: usize, cost: Cost) -> bool {
        let o = self.offset(i, j) + nt;
        if cost < self.data[o] {
            self.data[o] = cost;
            true
        } else {
            false
        }
    }

    /// All `(i, j, nt, cost)` entries, ordered by `i`, then `j`, then `nt`.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, usize, Cost)> + '_ {
        (0..self.n).flat_map(move |i| {
            (i + 1..=self.n).flat_map(move |j| {
                self.cell(i, j).iter().enumerate().filter(|(_, &c)| c != INF).map(move |(a, &c)| (i, j, a, c))
            })
        })
    }

    /// Reads the chart for `input` out of its closed `(n + 1) × (n + 1)`
    /// pair-set matrix.
    pub fn from_matrix(m: &PairSetMatrix, input: &[char]) -> Result<PairSetChart> {
        if m.rows() != m.cols() || m.rows() != input.len() + 1 {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} is not a closure matrix for input of length {}",
                m.rows(),
                m.cols(),
                input.len()
            )));
        }
        let n = input.len();
        let mut chart = PairSetChart::new(input, m.num_nonterminals());
        for i in 0..n {
            for j in i + 1..=n {
                let o = chart.offset(i, j);
                chart.data[o..o + chart.nts].copy_from_slice(m.cell(i, j));
            }
        }
        Ok(chart)
    }

    /// Same `(nonterminal, span, cost)` content, ignoring counters.
    pub fn same_entries(&self, other: &PairSetChart) -> bool {
        self.n == other.n && self.nts == other.nts && self.data == other.data
    }

    pub fn to_document(&self, cg: &CoveringGrammar) -> ChartDocument {
        let mut cells: Vec<ChartCell> = Vec::new();
        for (i, j, nt, cost) in self.entries() {
            if cells.last().is_none_or(|c| (c.i, c.j) != (i, j)) {
                cells.push(ChartCell { i, j, entries: Vec::new() });
            }
            cells.last_mut().unwrap().entries.push(ChartEntry { nt: cg.name(nt).to_string(), cost });
        }
        ChartDocument { n: self.n, cells }
    }
}

/// JSON form of a chart; `i` and `j` are 0-based fenceposts.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChartDocument {
    pub n: usize,
    pub cells: Vec<ChartCell>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChartCell {
    pub i: usize,
    pub j: usize,
    pub entries: Vec<ChartEntry>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChartEntry {
    pub nt: String,
    pub cost: Cost,
}

/// Fills the chart stage by stage (span length 1, 2, ..., n).
///
/// Each nonterminal keeps, per start position, the list of `(end, cost)`
/// tuples found so far in increasing span order. At stage `s`, a rule
/// `A ->(q) B C` pairs every tuple `(i, k, q1)` of `B` with `k - i < s` against
/// the chart entry for `C` at `(k, i + s)`.
pub fn ec_parse(cg: &CoveringGrammar, input: &[char]) -> Result<PairSetChart> {
    cg.check_input(input)?;
    let n = input.len();
    let nts = cg.num_nonterminals();
    let mut chart = PairSetChart::new(input, nts);
    if n == 0 {
        return Ok(chart);
    }

    // rules grouped by left child
    let mut by_left: Vec<Vec<usize>> = vec![Vec::new(); nts];
    for (r, rule) in cg.binary_rules().iter().enumerate() {
        by_left[rule.left].push(r);
    }
    // lists[nt][start] = [(end, cost)], span-ordered
    let mut lists: Vec<Vec<Vec<(usize, Cost)>>> = vec![vec![Vec::new(); n]; nts];

    for (i, &c) in input.iter().enumerate() {
        for r in cg.terminal_rules_for(c)? {
            chart.insert_min(i, i + 1, r.lhs, r.cost);
        }
        for (nt, &cost) in chart.cell(i, i + 1).to_vec().iter().enumerate() {
            if cost != INF {
                lists[nt][i].push((i + 1, cost));
            }
        }
    }

    let rules = cg.binary_rules();
    let mut attempts = 0u64;
    for s in 2..=n {
        for i in 0..=n - s {
            let j = i + s;
            for b in 0..nts {
                if by_left[b].is_empty() {
                    continue;
                }
                for &(k, q2) in &lists[b][i] {
                    if k >= j {
                        break;
                    }
                    for &r in &by_left[b] {
                        attempts += 1;
                        let rule = &rules[r];
                        let o = chart.offset(k, j) + rule.right;
                        let q3 = chart.data[o];
                        if q3 == INF {
                            continue;
                        }
                        let total = q2.saturating_add(q3).saturating_add(rule.cost);
                        let o = chart.offset(i, j) + rule.lhs;
                        if total < chart.data[o] {
                            chart.data[o] = total;
                        }
                    }
                }
            }
            let o = chart.offset(i, j);
            for nt in 0..nts {
                let cost = chart.data[o + nt];
                if cost != INF {
                    lists[nt][i].push((j, cost));
                }
            }
        }
    }
    chart.combination_attempts = attempts;
    Ok(chart)
}

/// Cost of the start symbol over the whole input. For empty input this is
/// the minimum cost of deriving epsilon from the start symbol.
pub fn distance_from_chart(chart: &PairSetChart, cg: &CoveringGrammar) -> Result<Cost> {
    if chart.n == 0 {
        return cg.mnullcount(cg.start_id()).ok_or(Error::Unreachable);
    }
    chart.get(0, chart.n, cg.start_id()).ok_or(Error::Unreachable)
}

/// `ec_parse` followed by [`distance_from_chart`].
pub fn cyk_distance(cg: &CoveringGrammar, input: &[char]) -> Result<Cost> {
    distance_from_chart(&ec_parse(cg, input)?, cg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::covering::build_covering;
    use crate::grammar::parse_grammar;

    const ANBN: &str = "start: S\nS -> A A1 | A B\nA1 -> S B\nA -> 'a'\nB -> 'b'\n";

    fn g3() -> CoveringGrammar {
        build_covering(&parse_grammar(ANBN).unwrap()).unwrap()
    }

    fn chars(s: &str) -> Vec<char> {
        s.chars().collect()
    }

    #[test]
    fn top_cells() {
        let cg = g3();
        let s = cg.start_id();
        assert_eq!(ec_parse(&cg, &chars("ab")).unwrap().get(0, 2, s), Some(0));
        assert_eq!(ec_parse(&cg, &chars("aab")).unwrap().get(0, 3, s), Some(1));
        assert_eq!(ec_parse(&cg, &chars("ba")).unwrap().get(0, 2, s), Some(2));
    }

    #[test]
    fn distances() {
        let cg = g3();
        for (input, d) in [("ab", 0), ("aab", 1), ("", 2), ("aabb", 0), ("ba", 2)] {
            assert_eq!(cyk_distance(&cg, &chars(input)).unwrap(), d, "{input:?}");
        }
    }

    #[test]
    fn unknown_character() {
        let cg = g3();
        assert_eq!(ec_parse(&cg, &chars("axb")), Err(Error::UnknownTerminal('x')));
    }

    #[test]
    fn single_terminal_grammar() {
        let cg = build_covering(&parse_grammar("S -> 'a'").unwrap()).unwrap();
        assert_eq!(cyk_distance(&cg, &chars("aa")).unwrap(), 1);
        assert_eq!(cyk_distance(&cg, &chars("a")).unwrap(), 0);
        assert_eq!(cyk_distance(&cg, &chars("")).unwrap(), 1);
    }

    #[test]
    fn chart_document_lists_nonterminal_names() {
        let cg = g3();
        let doc = ec_parse(&cg, &chars("ab")).unwrap().to_document(&cg);
        let top = doc.cells.iter().find(|c| (c.i, c.j) == (0, 2)).unwrap();
        assert!(top.entries.contains(&ChartEntry { nt: "S".into(), cost: 0 }));
        assert!(doc.cells.iter().all(|c| c.i < c.j && !c.entries.is_empty()));
    }
}
