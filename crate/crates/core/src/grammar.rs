//! Grammar data model, the text grammar format, CNF conversion and a few
//! plain (error-free) language utilities used as test oracles.
//!
//! Grammar files look like this:
//!
//! ```text
//! # a^n b^n, n >= 1
//! start: S
//! S -> 'a' S 'b' | 'a' 'b'
//! ```
//!
//! Nonterminals are identifiers, terminals are single characters in single
//! quotes, `eps` stands for the empty alternative and `#` starts a comment.
//! A nonterminal is declared by appearing on the left of some production
//! line. When the `start:` header is absent the first left-hand side is the
//! start symbol.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A grammar symbol. Terminals are single characters, so the two namespaces
/// cannot collide.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Symbol {
    Terminal(char),
    Nonterminal(String),
}

impl Symbol {
    pub fn nt(name: &str) -> Symbol {
        Symbol::Nonterminal(name.to_string())
    }

    pub fn as_nonterminal(&self) -> Option<&str> {
        match self {
            Symbol::Nonterminal(n) => Some(n),
            Symbol::Terminal(_) => None,
        }
    }

    pub fn as_terminal(&self) -> Option<char> {
        match self {
            Symbol::Terminal(c) => Some(*c),
            Symbol::Nonterminal(_) => None,
        }
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Symbol::Terminal(c) => write!(f, "'{}'", c),
            Symbol::Nonterminal(n) => f.write_str(n),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Production {
    pub lhs: String,
    pub rhs: Vec<Symbol>,
    /// Error count carried by the production; 0 for ordinary grammar rules.
    pub cost: u32,
}

impl Production {
    pub fn new(lhs: &str, rhs: Vec<Symbol>, cost: u32) -> Production {
        Production { lhs: lhs.to_string(), rhs, cost }
    }

    pub fn is_unit(&self) -> bool {
        self.rhs.len() == 1 && matches!(self.rhs[0], Symbol::Nonterminal(_))
    }

    pub fn is_epsilon(&self) -> bool {
        self.rhs.is_empty()
    }
}

impl fmt::Display for Production {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ->", self.lhs)?;
        if self.cost > 0 {
            write!(f, "({})", self.cost)?;
        }
        if self.rhs.is_empty() {
            f.write_str(" eps")?;
        }
        for s in &self.rhs {
            write!(f, " {}", s)?;
        }
        Ok(())
    }
}

/// A context-free grammar whose productions carry nonnegative error counts.
///
/// Productions are kept sorted by `(lhs, rhs)` and unique; inserting the same
/// `(lhs, rhs)` twice keeps the smaller cost.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WeightedGrammar {
    start: String,
    nonterminals: BTreeSet<String>,
    terminals: BTreeSet<char>,
    productions: Vec<Production>,
}

impl WeightedGrammar {
    pub fn new(
        start: &str,
        nonterminals: impl IntoIterator<Item = String>,
        terminals: impl IntoIterator<Item = char>,
        productions: impl IntoIterator<Item = Production>,
    ) -> Result<WeightedGrammar> {
        let nonterminals: BTreeSet<String> = nonterminals.into_iter().collect();
        let terminals: BTreeSet<char> = terminals.into_iter().collect();
        if let Some(empty) = nonterminals.iter().find(|n| n.is_empty()) {
            return Err(Error::UndeclaredSymbol(empty.clone()));
        }
        if !nonterminals.contains(start) {
            return Err(Error::UndeclaredStart(start.to_string()));
        }
        let mut table: BTreeMap<(String, Vec<Symbol>), u32> = BTreeMap::new();
        for p in productions {
            if !nonterminals.contains(&p.lhs) {
                return Err(Error::UndeclaredSymbol(p.lhs));
            }
            for s in &p.rhs {
                let declared = match s {
                    Symbol::Terminal(c) => terminals.contains(c),
                    Symbol::Nonterminal(n) => nonterminals.contains(n),
                };
                if !declared {
                    return Err(Error::UndeclaredSymbol(s.to_string()));
                }
            }
            let slot = table.entry((p.lhs, p.rhs)).or_insert(p.cost);
            *slot = (*slot).min(p.cost);
        }
        let productions = table
            .into_iter()
            .map(|((lhs, rhs), cost)| Production { lhs, rhs, cost })
            .collect();
        Ok(WeightedGrammar { start: start.to_string(), nonterminals, terminals, productions })
    }

    /// Parses the text grammar format. All costs are 0. Grammars whose
    /// language contains the empty string are rejected.
    pub fn parse(text: &str) -> Result<WeightedGrammar> {
        parse_grammar(text)
    }

    pub fn start(&self) -> &str {
        &self.start
    }

    pub fn nonterminals(&self) -> &BTreeSet<String> {
        &self.nonterminals
    }

    pub fn terminals(&self) -> &BTreeSet<char> {
        &self.terminals
    }

    pub fn productions(&self) -> &[Production] {
        &self.productions
    }

    pub fn productions_of<'a>(&'a self, lhs: &'a str) -> impl Iterator<Item = &'a Production> + 'a {
        self.productions.iter().filter(move |p| p.lhs == lhs)
    }

    /// Cost of the production `lhs -> rhs`, if present.
    pub fn cost_of(&self, lhs: &str, rhs: &[Symbol]) -> Option<u32> {
        self.productions
            .binary_search_by(|p| (p.lhs.as_str(), p.rhs.as_slice()).cmp(&(lhs, rhs)))
            .ok()
            .map(|i| self.productions[i].cost)
    }

    /// True when every production is `A -> a` or `A -> B C`.
    pub fn is_cnf(&self) -> bool {
        self.productions
            .iter()
            .all(|p| matches!(p.rhs.as_slice(), [Symbol::Terminal(_)] | [Symbol::Nonterminal(_), Symbol::Nonterminal(_)]))
    }

    /// Nonterminals that derive the empty string.
    pub fn nullable(&self) -> BTreeSet<String> {
        let mut nullable = BTreeSet::new();
        loop {
            let before = nullable.len();
            for p in &self.productions {
                if !nullable.contains(&p.lhs)
                    && p.rhs.iter().all(|s| matches!(s, Symbol::Nonterminal(n) if nullable.contains(n)))
                {
                    nullable.insert(p.lhs.clone());
                }
            }
            if nullable.len() == before {
                return nullable;
            }
        }
    }

    /// Converts to Chomsky normal form: long rules are split with fresh
    /// nonterminals `X1, X2, ...`, terminals inside binary rules are promoted
    /// to fresh nonterminals, then epsilon and unit productions are removed,
    /// and finally useless symbols are dropped.
    pub fn to_cnf(&self) -> Result<WeightedGrammar> {
        if self.nullable().contains(&self.start) {
            return Err(Error::EpsilonInLanguage);
        }
        let mut names = FreshNames::new(&self.nonterminals, "X");
        let mut nonterminals = self.nonterminals.clone();
        let mut rules = RuleTable::default();

        // Split long right-hand sides into right-nested pairs.
        for p in &self.productions {
            if p.rhs.len() <= 2 {
                rules.insert(&p.lhs, p.rhs.clone(), p.cost);
                continue;
            }
            let mut lhs = p.lhs.clone();
            let mut cost = p.cost;
            for (idx, sym) in p.rhs.iter().enumerate() {
                if idx + 2 == p.rhs.len() {
                    rules.insert(&lhs, vec![sym.clone(), p.rhs[idx + 1].clone()], cost);
                    break;
                }
                let fresh = names.next();
                nonterminals.insert(fresh.clone());
                rules.insert(&lhs, vec![sym.clone(), Symbol::Nonterminal(fresh.clone())], cost);
                cost = 0;
                lhs = fresh;
            }
        }

        // Promote terminals appearing in binary rules.
        let mut promoted: BTreeMap<char, String> = BTreeMap::new();
        let binary: Vec<_> = rules.iter().filter(|(_, rhs, _)| rhs.len() == 2).cloned_rules();
        for (lhs, rhs, cost) in binary {
            if rhs.iter().all(|s| s.as_nonterminal().is_some()) {
                continue;
            }
            let rhs2: Vec<Symbol> = rhs
                .iter()
                .map(|s| match s {
                    Symbol::Terminal(c) => {
                        let name = promoted.entry(*c).or_insert_with(|| names.next()).clone();
                        Symbol::Nonterminal(name)
                    }
                    other => other.clone(),
                })
                .collect();
            rules.remove(&lhs, &rhs);
            rules.insert(&lhs, rhs2, cost);
        }
        for (c, name) in &promoted {
            nonterminals.insert(name.clone());
            rules.insert(name, vec![Symbol::Terminal(*c)], 0);
        }

        // Epsilon elimination on the (now at most binary) rules.
        let null_cost = rules.min_null_costs();
        let binary: Vec<_> = rules.iter().filter(|(_, rhs, _)| rhs.len() == 2).cloned_rules();
        for (lhs, rhs, cost) in binary {
            if let (Symbol::Nonterminal(b), Symbol::Nonterminal(c)) = (&rhs[0], &rhs[1]) {
                if let Some(&k) = null_cost.get(c) {
                    rules.insert(&lhs, vec![rhs[0].clone()], cost + k);
                }
                if let Some(&k) = null_cost.get(b) {
                    rules.insert(&lhs, vec![rhs[1].clone()], cost + k);
                }
            }
        }
        rules.retain(|lhs, rhs| !rhs.is_empty() && !(rhs.len() == 1 && rhs[0].as_nonterminal() == Some(lhs)));

        // Unit elimination through min-cost unit closure.
        let closure = rules.unit_closure(&nonterminals);
        let non_unit: Vec<_> = rules
            .iter()
            .filter(|(_, rhs, _)| !(rhs.len() == 1 && rhs[0].as_nonterminal().is_some()))
            .cloned_rules();
        let mut out = RuleTable::default();
        for (lhs, rhs, cost) in &non_unit {
            out.insert(lhs, rhs.clone(), *cost);
        }
        for (src, targets) in &closure {
            for (dst, d) in targets {
                for (lhs, rhs, cost) in &non_unit {
                    if lhs == dst {
                        out.insert(src, rhs.clone(), d + cost);
                    }
                }
            }
        }

        let productions: Vec<Production> = out.into_productions();
        let pruned = remove_useless(&self.start, productions);
        let used: BTreeSet<String> = std::iter::once(self.start.clone())
            .chain(pruned.iter().map(|p| p.lhs.clone()))
            .collect();
        WeightedGrammar::new(&self.start, used, self.terminals.clone(), pruned)
    }

    /// Plain CYK membership. Requires CNF; the empty string is never a member.
    pub fn recognizes(&self, s: &str) -> bool {
        debug_assert!(self.is_cnf(), "recognizes requires a CNF grammar");
        let idx = CnfIndex::new(self);
        let w: Vec<char> = s.chars().collect();
        let n = w.len();
        if n == 0 {
            return false;
        }
        let nts = idx.names.len();
        // table[i][len - 1] is a membership vector over nonterminals
        let mut table = vec![vec![vec![false; nts]; n]; n];
        for (i, c) in w.iter().enumerate() {
            let Some(rules) = idx.terminal.get(c) else { return false };
            for &a in rules {
                table[i][0][a] = true;
            }
        }
        for len in 2..=n {
            for i in 0..=n - len {
                for split in 1..len {
                    for &(a, b, c) in &idx.binary {
                        if !table[i][len - 1][a]
                            && table[i][split - 1][b]
                            && table[i + split][len - split - 1][c]
                        {
                            table[i][len - 1][a] = true;
                        }
                    }
                }
            }
        }
        table[0][n - 1][idx.start]
    }

    /// All words of the language, bucketed by length (`result[len]`), for
    /// lengths up to `maxlen`. Requires CNF.
    pub fn words_by_length(&self, maxlen: usize) -> Vec<HashSet<String>> {
        debug_assert!(self.is_cnf(), "words_by_length requires a CNF grammar");
        let idx = CnfIndex::new(self);
        let nts = idx.names.len();
        // words[a][len]
        let mut words: Vec<Vec<HashSet<String>>> = vec![vec![HashSet::new(); maxlen + 1]; nts];
        if maxlen >= 1 {
            for (c, rules) in &idx.terminal {
                for &a in rules {
                    words[a][1].insert(c.to_string());
                }
            }
        }
        for len in 2..=maxlen {
            for &(a, b, c) in &idx.binary {
                let mut fresh = Vec::new();
                for left in 1..len {
                    for x in &words[b][left] {
                        for y in &words[c][len - left] {
                            let mut s = String::with_capacity(x.len() + y.len());
                            s.push_str(x);
                            s.push_str(y);
                            fresh.push(s);
                        }
                    }
                }
                words[a][len].extend(fresh);
            }
        }
        std::mem::take(&mut words[idx.start])
    }

    /// Exactly the words of the language with length at most `maxlen`.
    pub fn enumerate_language(&self, maxlen: usize) -> BTreeSet<String> {
        self.words_by_length(maxlen).into_iter().flatten().collect()
    }

    /// Length of a shortest word. Requires CNF.
    pub fn shortest_word_length(&self) -> Result<usize> {
        let mut best: BTreeMap<&str, usize> = BTreeMap::new();
        loop {
            let mut changed = false;
            for p in &self.productions {
                let cand = p.rhs.iter().try_fold(0usize, |acc, s| match s {
                    Symbol::Terminal(_) => Some(acc + 1),
                    Symbol::Nonterminal(n) => best.get(n.as_str()).map(|l| acc + l),
                });
                if let Some(c) = cand {
                    let slot = best.entry(p.lhs.as_str()).or_insert(usize::MAX);
                    if c < *slot {
                        *slot = c;
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
        match best.get(self.start.as_str()) {
            Some(&0) => Err(Error::EpsilonInLanguage),
            Some(&l) => Ok(l),
            None => Err(Error::EmptyLanguage),
        }
    }
}

impl fmt::Display for WeightedGrammar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "start: {}", self.start)?;
        for p in &self.productions {
            writeln!(f, "{}", p)?;
        }
        Ok(())
    }
}

/// Parses a grammar file. See the module docs for the format.
pub fn parse_grammar(text: &str) -> Result<WeightedGrammar> {
    let mut start: Option<(String, usize)> = None;
    let mut productions: Vec<(Production, usize)> = Vec::new();
    let mut declared: BTreeSet<String> = BTreeSet::new();
    let mut terminals: BTreeSet<char> = BTreeSet::new();
    let mut first_lhs: Option<String> = None;

    for (lineno, line) in text.lines().enumerate() {
        let lineno = lineno + 1;
        let tokens = tokenize(line, lineno)?;
        if tokens.is_empty() {
            continue;
        }
        let syntax = |message: &str| Error::Syntax { line: lineno, message: message.to_string() };
        match tokens.as_slice() {
            [Token::Ident(kw), Token::Colon, rest @ ..] if kw == "start" => {
                if start.is_some() {
                    return Err(syntax("duplicate start header"));
                }
                match rest {
                    [Token::Ident(name)] if name != "eps" => start = Some((name.clone(), lineno)),
                    _ => return Err(syntax("expected `start: <nonterminal>`")),
                }
            }
            [Token::Ident(lhs), Token::Arrow, rest @ ..] => {
                if lhs == "eps" {
                    return Err(syntax("`eps` cannot be a nonterminal"));
                }
                declared.insert(lhs.clone());
                first_lhs.get_or_insert_with(|| lhs.clone());
                for alt in rest.split(|t| *t == Token::Bar) {
                    let rhs = match alt {
                        [] => return Err(syntax("empty alternative (write `eps`)")),
                        [Token::Ident(e)] if e == "eps" => Vec::new(),
                        _ => alt
                            .iter()
                            .map(|t| match t {
                                Token::Ident(e) if e == "eps" => {
                                    Err(syntax("`eps` must stand alone in an alternative"))
                                }
                                Token::Ident(n) => Ok(Symbol::Nonterminal(n.clone())),
                                Token::Term(c) => {
                                    terminals.insert(*c);
                                    Ok(Symbol::Terminal(*c))
                                }
                                _ => Err(syntax("unexpected token in alternative")),
                            })
                            .collect::<Result<Vec<_>>>()?,
                    };
                    productions.push((Production { lhs: lhs.clone(), rhs, cost: 0 }, lineno));
                }
            }
            _ => return Err(syntax("expected `start: NT` or `NT -> alternatives`")),
        }
    }

    for (p, line) in &productions {
        for s in &p.rhs {
            if let Symbol::Nonterminal(n) = s {
                if !declared.contains(n) {
                    return Err(Error::UndeclaredNonterminal { name: n.clone(), line: *line });
                }
            }
        }
    }
    let start = match (start, first_lhs) {
        (Some((s, _)), _) => s,
        (None, Some(s)) => s,
        (None, None) => return Err(Error::NoProductions),
    };
    if !declared.contains(&start) {
        return Err(Error::UndeclaredStart(start));
    }
    let g = WeightedGrammar::new(&start, declared, terminals, productions.into_iter().map(|(p, _)| p))?;
    if g.nullable().contains(g.start()) {
        return Err(Error::EpsilonInLanguage);
    }
    Ok(g)
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Token {
    Ident(String),
    Term(char),
    Arrow,
    Bar,
    Colon,
}

fn tokenize(line: &str, lineno: usize) -> Result<Vec<Token>> {
    let err = |message: String| Error::Syntax { line: lineno, message };
    let mut out = Vec::new();
    let mut chars = line.chars().peekable();
    while let Some(c) = chars.next() {
        match c {
            '#' => break,
            c if c.is_whitespace() => {}
            '|' => out.push(Token::Bar),
            ':' => out.push(Token::Colon),
            '-' => match chars.next() {
                Some('>') => out.push(Token::Arrow),
                _ => return Err(err("expected `->`".into())),
            },
            '\'' => {
                let t = chars.next().ok_or_else(|| err("unterminated terminal".into()))?;
                match chars.next() {
                    Some('\'') => out.push(Token::Term(t)),
                    _ => return Err(err("terminals are single characters in single quotes".into())),
                }
            }
            c if c.is_alphabetic() || c == '_' => {
                let mut name = c.to_string();
                while let Some(&d) = chars.peek() {
                    if d.is_alphanumeric() || d == '_' {
                        name.push(d);
                        chars.next();
                    } else {
                        break;
                    }
                }
                out.push(Token::Ident(name));
            }
            other => return Err(err(format!("unexpected character {:?}", other))),
        }
    }
    Ok(out)
}

/// Generator of nonterminal names not already in use: `X1`, `X2`, ...
pub(crate) struct FreshNames {
    taken: BTreeSet<String>,
    prefix: &'static str,
    counter: usize,
}

impl FreshNames {
    pub(crate) fn new(taken: &BTreeSet<String>, prefix: &'static str) -> FreshNames {
        FreshNames { taken: taken.clone(), prefix, counter: 0 }
    }

    pub(crate) fn next(&mut self) -> String {
        loop {
            self.counter += 1;
            let name = format!("{}{}", self.prefix, self.counter);
            if self.taken.insert(name.clone()) {
                return name;
            }
        }
    }
}

/// `(lhs, rhs) -> min cost` working table used by the CNF pipeline.
#[derive(Default)]
struct RuleTable {
    rules: BTreeMap<(String, Vec<Symbol>), u32>,
}

trait ClonedRules<'a> {
    fn cloned_rules(self) -> Vec<(String, Vec<Symbol>, u32)>;
}

impl<'a, I: Iterator<Item = (&'a String, &'a Vec<Symbol>, u32)>> ClonedRules<'a> for I {
    fn cloned_rules(self) -> Vec<(String, Vec<Symbol>, u32)> {
        self.map(|(l, r, c)| (l.clone(), r.clone(), c)).collect()
    }
}

impl RuleTable {
    fn insert(&mut self, lhs: &str, rhs: Vec<Symbol>, cost: u32) {
        let slot = self.rules.entry((lhs.to_string(), rhs)).or_insert(cost);
        *slot = (*slot).min(cost);
    }

    fn remove(&mut self, lhs: &str, rhs: &[Symbol]) {
        self.rules.remove(&(lhs.to_string(), rhs.to_vec()));
    }

    fn iter(&self) -> impl Iterator<Item = (&String, &Vec<Symbol>, u32)> {
        self.rules.iter().map(|((l, r), c)| (l, r, *c))
    }

    fn retain(&mut self, mut keep: impl FnMut(&str, &[Symbol]) -> bool) {
        self.rules.retain(|(l, r), _| keep(l, r));
    }

    /// Minimum cost of deriving the empty string, for every nullable nonterminal.
    fn min_null_costs(&self) -> BTreeMap<String, u32> {
        let mut best: BTreeMap<String, u32> = BTreeMap::new();
        loop {
            let mut changed = false;
            for (lhs, rhs, cost) in self.iter() {
                let cand = rhs.iter().try_fold(cost, |acc, s| match s {
                    Symbol::Nonterminal(n) => best.get(n).map(|k| acc + k),
                    Symbol::Terminal(_) => None,
                });
                if let Some(c) = cand {
                    if best.get(lhs).is_none_or(|&old| c < old) {
                        best.insert(lhs.clone(), c);
                        changed = true;
                    }
                }
            }
            if !changed {
                return best;
            }
        }
    }

    /// For each nonterminal, the min-cost reachable set through unit rules
    /// (excluding itself).
    fn unit_closure(&self, nonterminals: &BTreeSet<String>) -> BTreeMap<String, BTreeMap<String, u32>> {
        let mut edges: BTreeMap<&str, Vec<(&str, u32)>> = BTreeMap::new();
        for (lhs, rhs, cost) in self.iter() {
            if let [Symbol::Nonterminal(b)] = rhs.as_slice() {
                edges.entry(lhs.as_str()).or_default().push((b.as_str(), cost));
            }
        }
        let mut out = BTreeMap::new();
        for src in nonterminals {
            let dist = dijkstra(src.as_str(), |n| edges.get(n).cloned().unwrap_or_default());
            let reach: BTreeMap<String, u32> = dist
                .into_iter()
                .filter(|(n, _)| *n != src.as_str())
                .map(|(n, d)| (n.to_string(), d))
                .collect();
            if !reach.is_empty() {
                out.insert(src.clone(), reach);
            }
        }
        out
    }

    fn into_productions(self) -> Vec<Production> {
        self.rules.into_iter().map(|((lhs, rhs), cost)| Production { lhs, rhs, cost }).collect()
    }
}

/// Shortest distances from `src` over nonnegative edge weights.
pub(crate) fn dijkstra<'a, F>(src: &'a str, mut edges: F) -> BTreeMap<&'a str, u32>
where
    F: FnMut(&'a str) -> Vec<(&'a str, u32)>,
{
    use std::cmp::Reverse;
    use std::collections::BinaryHeap;
    let mut dist: BTreeMap<&str, u32> = BTreeMap::new();
    let mut heap = BinaryHeap::new();
    dist.insert(src, 0);
    heap.push(Reverse((0u32, src)));
    while let Some(Reverse((d, n))) = heap.pop() {
        if dist.get(n).is_some_and(|&best| d > best) {
            continue;
        }
        for (m, w) in edges(n) {
            let nd = d + w;
            if dist.get(m).is_none_or(|&old| nd < old) {
                dist.insert(m, nd);
                heap.push(Reverse((nd, m)));
            }
        }
    }
    dist
}

fn remove_useless(start: &str, productions: Vec<Production>) -> Vec<Production> {
    let mut generating: HashSet<&str> = HashSet::new();
    loop {
        let before = generating.len();
        for p in &productions {
            if p.rhs.iter().all(|s| match s {
                Symbol::Terminal(_) => true,
                Symbol::Nonterminal(n) => generating.contains(n.as_str()),
            }) {
                generating.insert(p.lhs.as_str());
            }
        }
        if generating.len() == before {
            break;
        }
    }
    let useful = |p: &Production| {
        generating.contains(p.lhs.as_str())
            && p.rhs.iter().all(|s| s.as_nonterminal().is_none_or(|n| generating.contains(n)))
    };
    let mut reachable: HashSet<&str> = HashSet::new();
    let mut stack = vec![start];
    reachable.insert(start);
    while let Some(n) = stack.pop() {
        for p in productions.iter().filter(|p| p.lhs == n && useful(p)) {
            for s in &p.rhs {
                if let Symbol::Nonterminal(m) = s {
                    if reachable.insert(m.as_str()) {
                        stack.push(m.as_str());
                    }
                }
            }
        }
    }
    productions
        .iter()
        .filter(|p| useful(p) && reachable.contains(p.lhs.as_str()))
        .cloned()
        .collect()
}

/// Integer-indexed view of a CNF grammar.
pub(crate) struct CnfIndex {
    pub names: Vec<String>,
    pub start: usize,
    pub terminal: HashMap<char, Vec<usize>>,
    pub binary: Vec<(usize, usize, usize)>,
}

impl CnfIndex {
    pub fn new(g: &WeightedGrammar) -> CnfIndex {
        let names: Vec<String> = g.nonterminals.iter().cloned().collect();
        let id: HashMap<&str, usize> = names.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect();
        let mut terminal: HashMap<char, Vec<usize>> = HashMap::new();
        let mut binary = Vec::new();
        for p in &g.productions {
            let a = id[p.lhs.as_str()];
            match p.rhs.as_slice() {
                [Symbol::Terminal(c)] => terminal.entry(*c).or_default().push(a),
                [Symbol::Nonterminal(b), Symbol::Nonterminal(c)] => {
                    binary.push((a, id[b.as_str()], id[c.as_str()]))
                }
                _ => {}
            }
        }
        CnfIndex { start: id[g.start.as_str()], names, terminal, binary }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const ANBN_CNF: &str = "start: S\nS -> A A1 | A B\nA1 -> S B\nA -> 'a'\nB -> 'b'\n";

    #[test]
    fn parses_paper_style_cnf_grammar() {
        let g = parse_grammar(ANBN_CNF).unwrap();
        assert_eq!(g.nonterminals().len(), 4);
        assert_eq!(g.productions().len(), 5);
        assert_eq!(g.start(), "S");
        assert!(g.is_cnf());
        assert_eq!(g.terminals().iter().collect::<String>(), "ab");
    }

    #[test]
    fn rejects_undeclared_nonterminal() {
        let err = parse_grammar("S -> 'a' Z\n").unwrap_err();
        assert_eq!(err, Error::UndeclaredNonterminal { name: "Z".into(), line: 1 });
    }

    #[test]
    fn rejects_epsilon_language() {
        let err = parse_grammar("S -> 'a' S | eps\n").unwrap_err();
        assert_eq!(err, Error::EpsilonInLanguage);
    }

    #[test]
    fn accepts_eps_when_start_not_nullable() {
        let g = parse_grammar("S -> 'a' X\nX -> 'b' | eps\n").unwrap();
        let cnf = g.to_cnf().unwrap();
        assert!(cnf.is_cnf());
        assert_eq!(cnf.enumerate_language(3), ["a", "ab"].iter().map(|s| s.to_string()).collect());
    }

    #[test]
    fn syntax_errors_carry_line_numbers() {
        let err = parse_grammar("# hi\nstart: S\nS -> 'ab'\n").unwrap_err();
        assert!(matches!(err, Error::Syntax { line: 3, .. }));
        let err = parse_grammar("S -> 'a' |\n").unwrap_err();
        assert!(matches!(err, Error::Syntax { line: 1, .. }));
        let err = parse_grammar("start: T\nS -> 'a'\n").unwrap_err();
        assert_eq!(err, Error::UndeclaredStart("T".into()));
    }

    #[test]
    fn comments_and_quoted_specials() {
        let g = parse_grammar("start: S # header\nS -> '#' | '|' | ''' # tail\n").unwrap();
        assert_eq!(g.terminals().iter().collect::<String>(), "#'|");
    }

    #[test]
    fn to_cnf_of_anbn_matches_paper_shape() {
        let g = parse_grammar("S -> 'a' S 'b' | 'a' 'b'\n").unwrap();
        let cnf = g.to_cnf().unwrap();
        let text = cnf.to_string();
        assert_eq!(text, "start: S\nS -> X2 X1\nS -> X2 X3\nX1 -> S X3\nX2 -> 'a'\nX3 -> 'b'\n");
    }

    #[test]
    fn to_cnf_is_identity_on_cnf() {
        let g = parse_grammar(ANBN_CNF).unwrap();
        assert_eq!(g.to_cnf().unwrap(), g);
        let single = parse_grammar("S -> 'a'\n").unwrap();
        assert_eq!(single.to_cnf().unwrap(), single);
    }

    #[test]
    fn to_cnf_removes_units() {
        let g = parse_grammar("E -> E '+' T | T\nT -> 'a' | '(' E ')'\n").unwrap();
        let cnf = g.to_cnf().unwrap();
        assert!(cnf.is_cnf());
        for w in ["a", "a+a", "(a)", "(a+a)+a"] {
            assert!(cnf.recognizes(w), "{w}");
        }
        for w in ["", "+", "a+", "(a", "aa"] {
            assert!(!cnf.recognizes(w), "{w}");
        }
    }

    #[test]
    fn recognizes_anbn() {
        let g = parse_grammar(ANBN_CNF).unwrap();
        assert!(g.recognizes("aabb"));
        assert!(!g.recognizes("aab"));
        assert!(!g.recognizes(""));
        assert!(!g.recognizes("abc"));
    }

    #[test]
    fn enumerate_small_languages() {
        let g = parse_grammar(ANBN_CNF).unwrap();
        let set = |xs: &[&str]| xs.iter().map(|s| s.to_string()).collect::<BTreeSet<_>>();
        assert_eq!(g.enumerate_language(4), set(&["ab", "aabb"]));
        assert!(g.enumerate_language(1).is_empty());
        let dyck = parse_grammar("S -> '(' S ')' | S S | '(' ')'\n").unwrap().to_cnf().unwrap();
        assert_eq!(dyck.enumerate_language(4), set(&["()", "()()", "(())"]));
    }

    #[test]
    fn shortest_words() {
        assert_eq!(parse_grammar(ANBN_CNF).unwrap().shortest_word_length(), Ok(2));
        assert_eq!(parse_grammar("S -> 'a'\n").unwrap().shortest_word_length(), Ok(1));
        let dyck = parse_grammar("S -> '(' S ')' | S S | '(' ')'\n").unwrap().to_cnf().unwrap();
        assert_eq!(dyck.shortest_word_length(), Ok(2));
        let empty = parse_grammar("S -> 'a' S\n").unwrap().to_cnf().unwrap();
        assert_eq!(empty.shortest_word_length(), Err(Error::EmptyLanguage));
    }

    #[test]
    fn duplicate_productions_collapse_to_min_cost() {
        let g = WeightedGrammar::new(
            "S",
            ["S".to_string()],
            ['a'],
            [
                Production::new("S", vec![Symbol::Terminal('a')], 3),
                Production::new("S", vec![Symbol::Terminal('a')], 1),
            ],
        )
        .unwrap();
        assert_eq!(g.productions().len(), 1);
        assert_eq!(g.cost_of("S", &[Symbol::Terminal('a')]), Some(1));
    }
}
