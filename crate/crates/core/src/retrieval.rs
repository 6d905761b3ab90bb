//! Parse-tree retrieval from a filled chart, and expansion of repair
//! annotations into a corrected string plus edit script.

use serde::{Deserialize, Serialize};

use crate::covering::{CoveringGrammar, RepairItem};
use crate::ec_cyk::{distance_from_chart, ec_parse, PairSetChart};
use crate::error::{Error, Result};
use crate::semiring::{Cost, INF};

/// The covering production applied at a [`ParseNode`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RuleRef {
    /// Index into [`CoveringGrammar::terminal_rules`].
    Terminal(usize),
    /// Index into [`CoveringGrammar::binary_rules`].
    Binary(usize),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParseNode {
    pub nt: usize,
    pub i: usize,
    pub j: usize,
    pub cost: Cost,
    pub rule: RuleRef,
    /// Empty for terminal rules, two nodes for binary rules.
    pub children: Vec<ParseNode>,
}

impl ParseNode {
    /// Sum of the costs of every production in the tree.
    pub fn production_cost(&self, cg: &CoveringGrammar) -> Cost {
        let own = match self.rule {
            RuleRef::Terminal(r) => cg.terminal_rules()[r].cost,
            RuleRef::Binary(r) => cg.binary_rules()[r].cost,
        };
        own + self.children.iter().map(|c| c.production_cost(cg)).sum::<Cost>()
    }

    pub fn nodes(&self) -> usize {
        1 + self.children.iter().map(ParseNode::nodes).sum::<usize>()
    }
}

/// Result of [`parse_tree`], with the number of split checks it made.
#[derive(Clone, Debug)]
pub struct TreeSearch {
    pub tree: ParseNode,
    pub split_checks: u64,
}

/// Rebuilds a tree for `(start, 0, n)` with cost `cost`. At each node the
/// productions of the nonterminal are scanned in order and, for each, split
/// points in increasing order; the first split whose child costs add up is
/// taken.
pub fn parse_tree(chart: &PairSetChart, cg: &CoveringGrammar, cost: Cost) -> Result<TreeSearch> {
    let n = chart.n();
    if n == 0 {
        return Err(Error::Inconsistent("no parse tree for empty input".into()));
    }
    if chart.get(0, n, cg.start_id()) != Some(cost) {
        return Err(Error::Inconsistent(format!("start symbol does not have cost {cost} over the input")));
    }
    let mut checks = 0;
    let tree = build_node(chart, cg, cg.start_id(), 0, n, cost, &mut checks)?;
    Ok(TreeSearch { tree, split_checks: checks })
}

fn build_node(
    chart: &PairSetChart,
    cg: &CoveringGrammar,
    nt: usize,
    i: usize,
    j: usize,
    cost: Cost,
    checks: &mut u64,
) -> Result<ParseNode> {
    if j - i == 1 {
        let c = chart.input()[i];
        let found = cg.terminal_rules().iter().position(|r| r.lhs == nt && r.terminal == c && r.cost == cost);
        if let Some(r) = found {
            return Ok(ParseNode { nt, i, j, cost, rule: RuleRef::Terminal(r), children: Vec::new() });
        }
        return Err(Error::Inconsistent(format!("no terminal production for {} at {i}", cg.name(nt))));
    }
    let rules = cg.binary_rules();
    for &r in cg.binary_rules_of(nt) {
        let rule = &rules[r];
        if rule.cost > cost {
            continue;
        }
        for k in i + 1..j {
            *checks += 1;
            let (q2, q3) = (chart.cell(i, k)[rule.left], chart.cell(k, j)[rule.right]);
            if q2 == INF || q3 == INF {
                continue;
            }
            if q2.saturating_add(q3).saturating_add(rule.cost) == cost {
                let left = build_node(chart, cg, rule.left, i, k, q2, checks)?;
                let right = build_node(chart, cg, rule.right, k, j, q3, checks)?;
                return Ok(ParseNode { nt, i, j, cost, rule: RuleRef::Binary(r), children: vec![left, right] });
            }
        }
    }
    Err(Error::Inconsistent(format!("no decomposition for {} over ({i}, {j}) at cost {cost}", cg.name(nt))))
}

/// One edit against the original input. Positions are 0-based indices into
/// the original input; an insert goes before position `pos`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Edit {
    Insert {
        pos: usize,
        #[serde(rename = "char")]
        ch: char,
    },
    Delete {
        pos: usize,
    },
    Substitute {
        pos: usize,
        #[serde(rename = "char")]
        ch: char,
    },
}

impl Edit {
    pub fn pos(&self) -> usize {
        match *self {
            Edit::Insert { pos, .. } | Edit::Delete { pos } | Edit::Substitute { pos, .. } => pos,
        }
    }
}

/// Ordered edits, sorted by position; inserts at a position come before the
/// edit of the character at that position.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EditScript(pub Vec<Edit>);

impl EditScript {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn edits(&self) -> &[Edit] {
        &self.0
    }

    /// Replays the script on `input`.
    pub fn apply(&self, input: &[char]) -> Result<String> {
        let mut out = String::with_capacity(input.len() + self.0.len());
        let mut cursor = 0;
        for e in &self.0 {
            let pos = e.pos();
            if pos < cursor || pos > input.len() {
                return Err(Error::Inconsistent(format!("edit at {pos} is out of order or out of range")));
            }
            out.extend(&input[cursor..pos]);
            cursor = pos;
            match *e {
                Edit::Insert { ch, .. } => out.push(ch),
                Edit::Delete { .. } => {
                    if pos == input.len() {
                        return Err(Error::Inconsistent("delete past end of input".into()));
                    }
                    cursor += 1;
                }
                Edit::Substitute { ch, .. } => {
                    if pos == input.len() {
                        return Err(Error::Inconsistent("substitute past end of input".into()));
                    }
                    out.push(ch);
                    cursor += 1;
                }
            }
        }
        out.extend(&input[cursor..]);
        Ok(out)
    }
}

/// A minimum-distance correction.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Correction {
    pub distance: Cost,
    pub corrected: String,
    pub edits: EditScript,
}

/// Expands the repair annotations of `tree` over `input`.
pub fn extract_correction(tree: &ParseNode, cg: &CoveringGrammar, input: &[char]) -> Result<(String, EditScript)> {
    let mut walk = Walk { cg, input, cursor: tree.i, out: String::new(), edits: Vec::new() };
    walk.node(tree)?;
    if walk.cursor != tree.j {
        return Err(Error::Inconsistent(format!("annotations covered {} of {} input characters", walk.cursor - tree.i, tree.j - tree.i)));
    }
    Ok((walk.out, EditScript(walk.edits)))
}

struct Walk<'a> {
    cg: &'a CoveringGrammar,
    input: &'a [char],
    cursor: usize,
    out: String,
    edits: Vec<Edit>,
}

impl Walk<'_> {
    fn node(&mut self, node: &ParseNode) -> Result<()> {
        let (annotation, arity) = match node.rule {
            RuleRef::Terminal(r) => {
                let rule = &self.cg.terminal_rules()[r];
                if self.input.get(node.i) != Some(&rule.terminal) {
                    return Err(Error::Inconsistent(format!("terminal rule does not match input at {}", node.i)));
                }
                (&rule.annotation, 0)
            }
            RuleRef::Binary(r) => (&self.cg.binary_rules()[r].annotation, 2),
        };
        if annotation.child_count() != arity || node.children.len() != arity || annotation.input_items() != 1 - arity.min(1) {
            return Err(Error::Inconsistent(format!("annotation arity mismatch at {}", self.cg.name(node.nt))));
        }
        for item in annotation.items() {
            match *item {
                RepairItem::Child { slot } => self.node(&node.children[slot])?,
                RepairItem::Emit { ch } => {
                    self.out.push(ch);
                    self.edits.push(Edit::Insert { pos: self.cursor, ch });
                }
                RepairItem::MatchInput => {
                    self.out.push(self.input[self.cursor]);
                    self.cursor += 1;
                }
                RepairItem::ConsumeInput => {
                    self.edits.push(Edit::Delete { pos: self.cursor });
                    self.cursor += 1;
                }
                RepairItem::Substitute { ch } => {
                    self.out.push(ch);
                    self.edits.push(Edit::Substitute { pos: self.cursor, ch });
                    self.cursor += 1;
                }
            }
        }
        Ok(())
    }
}

/// Parses `input`, retrieves a minimum-cost tree and returns the correction
/// it encodes. Empty input is repaired with the start symbol's null witness.
pub fn correct(cg: &CoveringGrammar, input: &[char]) -> Result<Correction> {
    Ok(correct_counted(cg, input)?.0)
}

/// [`correct`], also returning the number of split checks spent retrieving
/// the tree.
pub fn correct_counted(cg: &CoveringGrammar, input: &[char]) -> Result<(Correction, u64)> {
    let chart = ec_parse(cg, input)?;
    let distance = distance_from_chart(&chart, cg)?;
    if input.is_empty() {
        let witness = &cg.start_nullinfo()?.witness;
        let edits = witness.chars().map(|ch| Edit::Insert { pos: 0, ch }).collect();
        let c = Correction { distance, corrected: witness.clone(), edits: EditScript(edits) };
        return Ok((c, 0));
    }
    let search = parse_tree(&chart, cg, distance)?;
    let (corrected, edits) = extract_correction(&search.tree, cg, input)?;
    if edits.len() as Cost != distance {
        return Err(Error::Inconsistent(format!("{} edits for distance {distance}", edits.len())));
    }
    Ok((Correction { distance, corrected, edits }, search.split_checks))
}
