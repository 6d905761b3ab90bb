//! Covering grammar construction.
//!
//! Starting from a CNF grammar `G`, error productions are injected
//! (`H -> H I | I`, `I ->(1) a`, and for every `A -> a` the rules
//! `A ->(1) b`, `A ->(1) eps`, `A -> A H`, `A -> H A`), then epsilon and unit
//! productions are eliminated while keeping the minimum error count for each
//! `(lhs, rhs)` pair. The result is again CNF, with costs.
//!
//! Every production carries a [`RepairAnnotation`] describing what the
//! production contributes to the corrected string. Annotations compose
//! through both elimination passes, so the final grammar alone is enough to
//! rebuild a correction from a parse tree.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grammar::{FreshNames, Production, Symbol, WeightedGrammar};

/// One step of a repair template.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RepairItem {
    /// A character of the corrected string with no input counterpart.
    Emit { ch: char },
    /// Splice in the fragment produced by the `slot`-th rhs nonterminal.
    Child { slot: usize },
    /// The covered input character survives unchanged.
    MatchInput,
    /// The covered input character is dropped.
    ConsumeInput,
    /// The covered input character is replaced by `ch`.
    Substitute { ch: char },
}

impl RepairItem {
    fn is_edit(&self) -> bool {
        matches!(self, RepairItem::Emit { .. } | RepairItem::ConsumeInput | RepairItem::Substitute { .. })
    }

    fn touches_input(&self) -> bool {
        matches!(self, RepairItem::MatchInput | RepairItem::ConsumeInput | RepairItem::Substitute { .. })
    }
}

/// Template of [`RepairItem`]s attached to a production.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RepairAnnotation(pub Vec<RepairItem>);

impl RepairAnnotation {
    pub fn items(&self) -> &[RepairItem] {
        &self.0
    }

    fn children(n: usize) -> RepairAnnotation {
        RepairAnnotation((0..n).map(|slot| RepairItem::Child { slot }).collect())
    }

    fn single(item: RepairItem) -> RepairAnnotation {
        RepairAnnotation(vec![item])
    }

    fn emits(witness: &str) -> RepairAnnotation {
        RepairAnnotation(witness.chars().map(|ch| RepairItem::Emit { ch }).collect())
    }

    /// Number of edit operations the template performs by itself.
    pub fn edit_count(&self) -> u32 {
        self.0.iter().filter(|i| i.is_edit()).count() as u32
    }

    pub fn child_count(&self) -> usize {
        self.0.iter().filter(|i| matches!(i, RepairItem::Child { .. })).count()
    }

    /// Number of items that account for an input character.
    pub fn input_items(&self) -> usize {
        self.0.iter().filter(|i| i.touches_input()).count()
    }

    /// Replaces `Child { slot }` with `with`. Children of `with` are renumbered
    /// to start at `slot`; later children shift accordingly.
    pub fn substitute(&self, slot: usize, with: &RepairAnnotation) -> RepairAnnotation {
        let inner = with.child_count();
        let mut out = Vec::with_capacity(self.0.len() + with.0.len());
        for item in &self.0 {
            match *item {
                RepairItem::Child { slot: s } if s == slot => {
                    out.extend(with.0.iter().map(|w| match *w {
                        RepairItem::Child { slot: t } => RepairItem::Child { slot: slot + t },
                        ref other => other.clone(),
                    }))
                }
                RepairItem::Child { slot: s } if s > slot => {
                    out.push(RepairItem::Child { slot: s - 1 + inner })
                }
                ref other => out.push(other.clone()),
            }
        }
        RepairAnnotation(out)
    }
}

/// Minimum cost of an epsilon derivation together with the characters that
/// derivation restores.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NullInfo {
    pub mnullcount: u32,
    pub witness: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AnnotatedRule {
    pub cost: u32,
    pub annotation: RepairAnnotation,
}

/// Intermediate grammar of the covering pipeline: productions with costs and
/// repair annotations, unrestricted in shape.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AnnotatedGrammar {
    start: String,
    nonterminals: BTreeSet<String>,
    terminals: BTreeSet<char>,
    rules: BTreeMap<(String, Vec<Symbol>), AnnotatedRule>,
    insertion: String,
    junk: String,
}

impl AnnotatedGrammar {
    /// Inserts a rule; an existing `(lhs, rhs)` is replaced only by a
    /// strictly cheaper one.
    fn insert_min(&mut self, lhs: &str, rhs: Vec<Symbol>, cost: u32, annotation: RepairAnnotation) {
        debug_assert_eq!(
            annotation.child_count(),
            rhs.iter().filter(|s| s.as_nonterminal().is_some()).count()
        );
        match self.rules.entry((lhs.to_string(), rhs)) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(AnnotatedRule { cost, annotation });
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                if cost < o.get().cost {
                    o.insert(AnnotatedRule { cost, annotation });
                }
            }
        }
    }

    pub fn start(&self) -> &str {
        &self.start
    }

    pub fn rules(&self) -> impl Iterator<Item = (&str, &[Symbol], &AnnotatedRule)> {
        self.rules.iter().map(|((l, r), a)| (l.as_str(), r.as_slice(), a))
    }

    pub fn rule(&self, lhs: &str, rhs: &[Symbol]) -> Option<&AnnotatedRule> {
        self.rules.get(&(lhs.to_string(), rhs.to_vec()))
    }

    pub fn cost_of(&self, lhs: &str, rhs: &[Symbol]) -> Option<u32> {
        self.rule(lhs, rhs).map(|r| r.cost)
    }

    /// Name of the insertion nonterminal (`H`).
    pub fn insertion_nt(&self) -> &str {
        &self.insertion
    }

    /// Name of the single-junk-character nonterminal (`I`).
    pub fn junk_nt(&self) -> &str {
        &self.junk
    }

    /// The same productions viewed as a plain weighted grammar.
    pub fn grammar(&self) -> WeightedGrammar {
        WeightedGrammar::new(
            &self.start,
            self.nonterminals.iter().cloned(),
            self.terminals.iter().copied(),
            self.rules.iter().map(|((l, r), a)| Production::new(l, r.clone(), a.cost)),
        )
        .expect("annotated grammar symbols are declared")
    }
}

fn fresh_named(taken: &BTreeSet<String>, preferred: &'static str) -> String {
    if taken.contains(preferred) {
        FreshNames::new(taken, preferred).next()
    } else {
        preferred.to_string()
    }
}

/// Adds the error productions to a cost-0 CNF grammar.
pub fn add_error_productions(g: &WeightedGrammar) -> Result<AnnotatedGrammar> {
    if !g.is_cnf() {
        return Err(Error::Inconsistent("error productions require a CNF grammar".into()));
    }
    let mut taken = g.nonterminals().clone();
    let insertion = fresh_named(&taken, "H");
    taken.insert(insertion.clone());
    let junk = fresh_named(&taken, "I");
    taken.insert(junk.clone());

    let mut out = AnnotatedGrammar {
        start: g.start().to_string(),
        nonterminals: taken,
        terminals: g.terminals().clone(),
        rules: BTreeMap::new(),
        insertion: insertion.clone(),
        junk: junk.clone(),
    };
    for p in g.productions() {
        let ann = match p.rhs.as_slice() {
            [Symbol::Terminal(_)] => RepairAnnotation::single(RepairItem::MatchInput),
            _ => RepairAnnotation::children(2),
        };
        out.insert_min(&p.lhs, p.rhs.clone(), p.cost, ann);
    }

    let h = Symbol::nt(&insertion);
    let i = Symbol::nt(&junk);
    out.insert_min(&insertion, vec![h.clone(), i.clone()], 0, RepairAnnotation::children(2));
    out.insert_min(&insertion, vec![i.clone()], 0, RepairAnnotation::children(1));
    for &a in g.terminals() {
        out.insert_min(&junk, vec![Symbol::Terminal(a)], 1, RepairAnnotation::single(RepairItem::ConsumeInput));
    }
    for p in g.productions() {
        let [Symbol::Terminal(a)] = p.rhs.as_slice() else { continue };
        let a = *a;
        for &b in g.terminals().iter().filter(|&&b| b != a) {
            out.insert_min(
                &p.lhs,
                vec![Symbol::Terminal(b)],
                1,
                RepairAnnotation::single(RepairItem::Substitute { ch: a }),
            );
        }
        out.insert_min(&p.lhs, vec![], 1, RepairAnnotation::single(RepairItem::Emit { ch: a }));
        let lhs = Symbol::nt(&p.lhs);
        out.insert_min(&p.lhs, vec![lhs.clone(), h.clone()], 0, RepairAnnotation::children(2));
        out.insert_min(&p.lhs, vec![h.clone(), lhs], 0, RepairAnnotation::children(2));
    }
    Ok(out)
}

/// Minimum null counts and witnesses, by least-fixpoint relaxation. Among
/// equal-cost epsilon derivations the lexicographically least witness wins.
pub fn compute_nullables(g: &AnnotatedGrammar) -> BTreeMap<String, NullInfo> {
    let mut info: BTreeMap<String, NullInfo> = BTreeMap::new();
    loop {
        let mut changed = false;
        for (lhs, rhs, rule) in g.rules() {
            if rhs.iter().any(|s| s.as_nonterminal().is_none()) {
                continue;
            }
            let kids: Option<Vec<&NullInfo>> =
                rhs.iter().map(|s| info.get(s.as_nonterminal().unwrap())).collect();
            let Some(kids) = kids else { continue };
            let mut cost = rule.cost;
            let mut witness = String::new();
            for item in rule.annotation.items() {
                match item {
                    RepairItem::Emit { ch } => witness.push(*ch),
                    RepairItem::Child { slot } => {
                        cost += kids[*slot].mnullcount;
                        witness.push_str(&kids[*slot].witness);
                    }
                    _ => unreachable!("epsilon derivations never touch input"),
                }
            }
            let better = match info.get(lhs) {
                None => true,
                Some(old) => (cost, &witness) < (old.mnullcount, &old.witness),
            };
            if better {
                info.insert(lhs.to_string(), NullInfo { mnullcount: cost, witness });
                changed = true;
            }
        }
        if !changed {
            return info;
        }
    }
}

/// Removes epsilon productions. For `A ->(k) B C` with `C` nullable the unit
/// `A ->(k + Mnullcount(C)) B` is added (and symmetrically for `B`), with the
/// null witness spliced into the annotation.
pub fn eliminate_epsilon(g: &AnnotatedGrammar, nulls: &BTreeMap<String, NullInfo>) -> AnnotatedGrammar {
    let mut out = g.clone();
    for (lhs, rhs, rule) in g.rules() {
        let [Symbol::Nonterminal(b), Symbol::Nonterminal(c)] = rhs else { continue };
        if let Some(null) = nulls.get(c) {
            if b != lhs {
                let ann = rule.annotation.substitute(1, &RepairAnnotation::emits(&null.witness));
                out.insert_min(lhs, vec![rhs[0].clone()], rule.cost + null.mnullcount, ann);
            }
        }
        if let Some(null) = nulls.get(b) {
            if c != lhs {
                let ann = rule.annotation.substitute(0, &RepairAnnotation::emits(&null.witness));
                out.insert_min(lhs, vec![rhs[1].clone()], rule.cost + null.mnullcount, ann);
            }
        }
    }
    out.rules.retain(|(_, rhs), _| !rhs.is_empty());
    out
}

/// Removes unit productions. Each nonterminal is composed with every non-unit
/// production reachable through a min-cost chain of unit productions.
pub fn eliminate_units(g: &AnnotatedGrammar) -> AnnotatedGrammar {
    let is_unit = |rhs: &[Symbol]| rhs.len() == 1 && rhs[0].as_nonterminal().is_some();
    let mut edges: BTreeMap<&str, Vec<(&str, u32, &RepairAnnotation)>> = BTreeMap::new();
    let mut non_unit: BTreeMap<&str, Vec<(&[Symbol], &AnnotatedRule)>> = BTreeMap::new();
    for (lhs, rhs, rule) in g.rules() {
        if is_unit(rhs) {
            let target = rhs[0].as_nonterminal().unwrap();
            if target != lhs {
                edges.entry(lhs).or_default().push((target, rule.cost, &rule.annotation));
            }
        } else {
            non_unit.entry(lhs).or_default().push((rhs, rule));
        }
    }

    let mut out = AnnotatedGrammar { rules: BTreeMap::new(), ..g.clone() };
    for (lhs, rules) in &non_unit {
        for (rhs, rule) in rules {
            out.insert_min(lhs, rhs.to_vec(), rule.cost, rule.annotation.clone());
        }
    }
    for src in g.nonterminals.iter() {
        for (dst, (dist, chain)) in unit_paths(src, &edges) {
            if dst == src.as_str() {
                continue;
            }
            for (rhs, rule) in non_unit.get(dst).into_iter().flatten() {
                out.insert_min(src, rhs.to_vec(), dist + rule.cost, chain.substitute(0, &rule.annotation));
            }
        }
    }
    out
}

/// Dijkstra over unit productions, carrying the composed annotation of the
/// chosen path (one open `Child { slot: 0 }` for the endpoint).
fn unit_paths<'a>(
    src: &'a str,
    edges: &BTreeMap<&'a str, Vec<(&'a str, u32, &'a RepairAnnotation)>>,
) -> BTreeMap<&'a str, (u32, RepairAnnotation)> {
    let mut best: BTreeMap<&str, (u32, RepairAnnotation)> = BTreeMap::new();
    let mut heap = BinaryHeap::new();
    best.insert(src, (0, RepairAnnotation::children(1)));
    heap.push(Reverse((0u32, src)));
    while let Some(Reverse((d, n))) = heap.pop() {
        if best[n].0 < d {
            continue;
        }
        let chain = best[n].1.clone();
        for &(m, w, ann) in edges.get(n).into_iter().flatten() {
            let nd = d + w;
            if best.get(m).is_none_or(|(old, _)| nd < *old) {
                best.insert(m, (nd, chain.substitute(0, ann)));
                heap.push(Reverse((nd, m)));
            }
        }
    }
    best
}

/// A compiled binary production `lhs ->(cost) left right`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BinaryRule {
    pub lhs: usize,
    pub left: usize,
    pub right: usize,
    pub cost: u32,
    pub annotation: RepairAnnotation,
    /// Index into [`CoveringGrammar::rhs_pairs`].
    pub pair: usize,
}

/// A compiled terminal production `lhs ->(cost) terminal`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TerminalRule {
    pub lhs: usize,
    pub terminal: char,
    pub cost: u32,
    pub annotation: RepairAnnotation,
}

/// The covering grammar `G'`: CNF with costs (every rhs is one terminal or two
/// nonterminals), repair annotations, null information and the base grammar.
///
/// Nonterminals are numbered in name order; compiled rule lists are in
/// `(lhs, rhs)` order, which is also the deterministic order used when
/// retrieving parse trees.
#[derive(Clone, Debug)]
pub struct CoveringGrammar {
    grammar: WeightedGrammar,
    annotated: AnnotatedGrammar,
    nullinfo: BTreeMap<String, NullInfo>,
    base: WeightedGrammar,

    names: Vec<String>,
    ids: HashMap<String, usize>,
    start: usize,
    terminals: Vec<char>,
    binary: Vec<BinaryRule>,
    binary_by_lhs: Vec<Vec<usize>>,
    rhs_pairs: Vec<(usize, usize)>,
    terminal_rules: Vec<TerminalRule>,
    // terminal_table[terminal index][nonterminal] -> terminal rule index
    terminal_table: Vec<Vec<Option<usize>>>,
    null_costs: Vec<Option<u32>>,
}

impl CoveringGrammar {
    /// Runs the full pipeline: CNF conversion, error productions, null
    /// counts, epsilon elimination and unit elimination.
    pub fn build(g: &WeightedGrammar) -> Result<CoveringGrammar> {
        build_covering(g)
    }

    fn assemble(
        annotated: AnnotatedGrammar,
        nullinfo: BTreeMap<String, NullInfo>,
        base: WeightedGrammar,
    ) -> Result<CoveringGrammar> {
        let grammar = annotated.grammar();
        if !grammar.is_cnf() {
            return Err(Error::Inconsistent("covering grammar is not in CNF".into()));
        }
        let names: Vec<String> = annotated.nonterminals.iter().cloned().collect();
        let ids: HashMap<String, usize> = names.iter().enumerate().map(|(i, n)| (n.clone(), i)).collect();
        let terminals: Vec<char> = annotated.terminals.iter().copied().collect();
        let mut binary = Vec::new();
        let mut binary_by_lhs = vec![Vec::new(); names.len()];
        let mut pair_ids: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        let mut rhs_pairs = Vec::new();
        let mut terminal_rules = Vec::new();
        let mut terminal_table = vec![vec![None; names.len()]; terminals.len()];
        for (lhs, rhs, rule) in annotated.rules() {
            let a = ids[lhs];
            match rhs {
                [Symbol::Terminal(t)] => {
                    let tid = terminals.binary_search(t).expect("declared terminal");
                    terminal_table[tid][a] = Some(terminal_rules.len());
                    terminal_rules.push(TerminalRule {
                        lhs: a,
                        terminal: *t,
                        cost: rule.cost,
                        annotation: rule.annotation.clone(),
                    });
                }
                [Symbol::Nonterminal(b), Symbol::Nonterminal(c)] => {
                    let key = (ids[b.as_str()], ids[c.as_str()]);
                    let pair = *pair_ids.entry(key).or_insert_with(|| {
                        rhs_pairs.push(key);
                        rhs_pairs.len() - 1
                    });
                    binary_by_lhs[a].push(binary.len());
                    binary.push(BinaryRule {
                        lhs: a,
                        left: key.0,
                        right: key.1,
                        cost: rule.cost,
                        annotation: rule.annotation.clone(),
                        pair,
                    });
                }
                _ => unreachable!("checked CNF above"),
            }
        }
        let null_costs = names.iter().map(|n| nullinfo.get(n).map(|i| i.mnullcount)).collect();
        let start = ids[annotated.start()];
        Ok(CoveringGrammar {
            grammar,
            annotated,
            nullinfo,
            base,
            names,
            ids,
            start,
            terminals,
            binary,
            binary_by_lhs,
            rhs_pairs,
            terminal_rules,
            terminal_table,
            null_costs,
        })
    }

    /// The covering productions as a weighted grammar.
    pub fn grammar(&self) -> &WeightedGrammar {
        &self.grammar
    }

    /// The CNF form of the user grammar the covering grammar was built from.
    pub fn base(&self) -> &WeightedGrammar {
        &self.base
    }

    pub fn nullinfo(&self) -> &BTreeMap<String, NullInfo> {
        &self.nullinfo
    }

    pub fn annotation(&self, lhs: &str, rhs: &[Symbol]) -> Option<&RepairAnnotation> {
        self.annotated.rule(lhs, rhs).map(|r| &r.annotation)
    }

    pub fn insertion_nt(&self) -> &str {
        self.annotated.insertion_nt()
    }

    pub fn junk_nt(&self) -> &str {
        self.annotated.junk_nt()
    }

    pub fn num_nonterminals(&self) -> usize {
        self.names.len()
    }

    pub fn name(&self, nt: usize) -> &str {
        &self.names[nt]
    }

    pub fn id(&self, name: &str) -> Option<usize> {
        self.ids.get(name).copied()
    }

    pub fn start_id(&self) -> usize {
        self.start
    }

    pub fn terminals(&self) -> &[char] {
        &self.terminals
    }

    pub fn binary_rules(&self) -> &[BinaryRule] {
        &self.binary
    }

    /// Indices into [`binary_rules`](Self::binary_rules) with the given lhs.
    pub fn binary_rules_of(&self, lhs: usize) -> &[usize] {
        &self.binary_by_lhs[lhs]
    }

    /// Distinct `(left, right)` nonterminal pairs occurring on binary rhs.
    pub fn rhs_pairs(&self) -> &[(usize, usize)] {
        &self.rhs_pairs
    }

    pub fn terminal_rules(&self) -> &[TerminalRule] {
        &self.terminal_rules
    }

    /// Terminal rules whose rhs is `c`.
    pub fn terminal_rules_for(&self, c: char) -> Result<impl Iterator<Item = &TerminalRule>> {
        let tid = self.terminal_index(c)?;
        Ok(self.terminal_table[tid].iter().flatten().map(move |&r| &self.terminal_rules[r]))
    }

    /// The terminal rule `nt -> c`, if any.
    pub fn terminal_rule(&self, nt: usize, c: char) -> Option<&TerminalRule> {
        let tid = self.terminals.binary_search(&c).ok()?;
        self.terminal_table[tid][nt].map(|r| &self.terminal_rules[r])
    }

    pub fn terminal_index(&self, c: char) -> Result<usize> {
        self.terminals.binary_search(&c).map_err(|_| Error::UnknownTerminal(c))
    }

    /// Checks that every character of `input` is a declared terminal.
    pub fn check_input(&self, input: &[char]) -> Result<()> {
        input.iter().try_for_each(|&c| self.terminal_index(c).map(|_| ()))
    }

    pub fn mnullcount(&self, nt: usize) -> Option<u32> {
        self.null_costs[nt]
    }

    pub fn start_nullinfo(&self) -> Result<&NullInfo> {
        self.nullinfo
            .get(&self.names[self.start])
            .ok_or_else(|| Error::Inconsistent("start symbol has no epsilon repair".into()))
    }

    pub fn max_cost(&self) -> u32 {
        self.grammar.productions().iter().map(|p| p.cost).max().unwrap_or(0)
    }

    /// Serializable view of the covering grammar.
    pub fn to_document(&self) -> CoveringDocument {
        CoveringDocument {
            nonterminals: self.names.clone(),
            terminals: self.terminals.clone(),
            start: self.names[self.start].clone(),
            productions: self
                .annotated
                .rules()
                .map(|(lhs, rhs, rule)| ProductionDocument {
                    lhs: lhs.to_string(),
                    rhs: rhs.iter().map(|s| s.to_string()).collect(),
                    cost: rule.cost,
                    annotation: rule.annotation.clone(),
                })
                .collect(),
            nullinfo: self.nullinfo.clone(),
        }
    }
}

/// JSON schema of `led compile`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoveringDocument {
    pub nonterminals: Vec<String>,
    pub terminals: Vec<char>,
    pub start: String,
    pub productions: Vec<ProductionDocument>,
    pub nullinfo: BTreeMap<String, NullInfo>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProductionDocument {
    pub lhs: String,
    /// Nonterminal names, and terminals written `'c'`.
    pub rhs: Vec<String>,
    pub cost: u32,
    pub annotation: RepairAnnotation,
}

/// `to_cnf -> add_error_productions -> compute_nullables -> eliminate_epsilon
/// -> eliminate_units`.
pub fn build_covering(g: &WeightedGrammar) -> Result<CoveringGrammar> {
    let base = g.to_cnf()?;
    let with_errors = add_error_productions(&base)?;
    let nulls = compute_nullables(&with_errors);
    let no_eps = eliminate_epsilon(&with_errors, &nulls);
    let covering = eliminate_units(&no_eps);
    CoveringGrammar::assemble(covering, nulls, base)
}
