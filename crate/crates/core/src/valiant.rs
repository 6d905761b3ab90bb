//! Transitive closure of the initial pair-set matrix.
//!
//! The closure `a+` of a strictly upper-triangular matrix satisfies
//! `a+[i][j] = a[i][j] ∪ ⋃_{i<k<j} a+[i][k] ⊙ a+[k][j]`. [`iterative_closure`]
//! evaluates that recurrence span by span; [`valiant_closure`] computes the
//! same matrix by divide and conquer so that all heavy work happens in
//! pair-set matrix products.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::covering::CoveringGrammar;
use crate::error::{Error, Result};
use crate::semiring::{clamp, pairset_mul, pairset_union, Cost, MulStats, Multiplier, PairSetMatrix, Strategy};

/// A distance, or the marker that it exceeds the cap.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Distance {
    Exact(Cost),
    /// The distance is greater than the contained cap.
    Exceeds(Cost),
}

impl Distance {
    pub fn exact(self) -> Option<Cost> {
        match self {
            Distance::Exact(d) => Some(d),
            Distance::Exceeds(_) => None,
        }
    }

    fn from_cost(d: Cost, cap: Option<u32>) -> Distance {
        match cap {
            Some(m) if d > m => Distance::Exceeds(m),
            _ => Distance::Exact(d),
        }
    }
}

impl fmt::Display for Distance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Distance::Exact(d) => write!(f, "{d}"),
            Distance::Exceeds(m) => write!(f, ">{m}"),
        }
    }
}

/// The `(n + 1) × (n + 1)` matrix with terminal-production entries for
/// `input[i]` at `(i, i + 1)` and nothing else.
pub fn init_matrix(cg: &CoveringGrammar, input: &[char]) -> Result<PairSetMatrix> {
    cg.check_input(input)?;
    let n = input.len();
    let mut a = PairSetMatrix::square(n + 1, cg.num_nonterminals());
    for (i, &c) in input.iter().enumerate() {
        for r in cg.terminal_rules_for(c)? {
            a.insert_min(i, i + 1, r.lhs, r.cost);
        }
    }
    Ok(a)
}

fn check_square_upper(a: &PairSetMatrix, cg: &CoveringGrammar) -> Result<()> {
    if a.rows() != a.cols() || a.num_nonterminals() != cg.num_nonterminals() {
        return Err(Error::DimensionMismatch("closure needs a square matrix over the grammar".into()));
    }
    if !a.is_strictly_upper_triangular() {
        return Err(Error::DimensionMismatch("closure needs a strictly upper-triangular matrix".into()));
    }
    Ok(())
}

/// Reference closure: cells in order of increasing `j - i`, each the union
/// of `a[i][j]` and all `a+[i][k] ⊙ a+[k][j]`.
pub fn iterative_closure(a: &PairSetMatrix, cg: &CoveringGrammar) -> Result<PairSetMatrix> {
    check_square_upper(a, cg)?;
    let dim = a.rows();
    let mut t = a.clone();
    for span in 2..dim {
        for i in 0..dim - span {
            let j = i + span;
            let mut acc = t.pairset(i, j);
            for k in i + 1..j {
                acc = pairset_union(&acc, &pairset_mul(&t.pairset(i, k), &t.pairset(k, j), cg));
            }
            t.set_pairset(i, j, &acc);
        }
    }
    Ok(t)
}

/// `a^(1) = a`, `a^(k) = ⋃_{j<k} a^(j) · a^(k-j)`, for `k = 1..=kmax`.
pub fn powers(a: &PairSetMatrix, cg: &CoveringGrammar, kmax: usize) -> Result<Vec<PairSetMatrix>> {
    let mut mul = Multiplier::new(cg, Strategy::Direct);
    let mut out: Vec<PairSetMatrix> = Vec::with_capacity(kmax);
    for k in 1..=kmax {
        if k == 1 {
            out.push(a.clone());
            continue;
        }
        let mut acc = PairSetMatrix::new(a.rows(), a.cols(), a.num_nonterminals());
        for j in 1..k {
            acc = acc.union(&mul.mul(&out[j - 1], &out[k - j - 1])?)?;
        }
        out.push(acc);
    }
    Ok(out)
}

/// Output of [`valiant_closure`].
#[derive(Clone, Debug)]
pub struct ClosureResult {
    pub aplus: PairSetMatrix,
    /// Start symbol over the whole span, or `None` when absent.
    pub distance: Option<Distance>,
    pub multiplications: u64,
    pub stats: MulStats,
}

/// Divide-and-conquer closure with the given product strategy (uncapped).
pub fn valiant_closure(a: &PairSetMatrix, cg: &CoveringGrammar, strategy: Strategy) -> Result<ClosureResult> {
    valiant_closure_with(a, &mut Multiplier::new(cg, strategy))
}

/// [`valiant_closure`] driven by a configured [`Multiplier`]; its cap, if
/// any, applies to every intermediate matrix.
pub fn valiant_closure_with(a: &PairSetMatrix, mul: &mut Multiplier<'_>) -> Result<ClosureResult> {
    let cg = mul.grammar();
    check_square_upper(a, cg)?;
    let dim = a.rows();
    let size = dim.next_power_of_two().max(1);
    let mut t = PairSetMatrix::square(size, a.num_nonterminals());
    t.union_block(0, 0, a);
    if let Some(m) = mul.cap() {
        for i in 0..dim {
            for j in i + 1..dim {
                for c in t.cell_mut(i, j) {
                    *c = clamp(*c, Some(m));
                }
            }
        }
    }
    let before = mul.stats;
    Closure { t: &mut t, mul }.compute(0, size)?;
    let aplus = t.block(0, 0, dim, dim);
    let distance =
        if dim >= 2 { aplus.get(0, dim - 1, cg.start_id()).map(|d| Distance::from_cost(d, mul.cap())) } else { None };
    let mut stats = mul.stats;
    stats.multiplications -= before.multiplications;
    stats.tropical_products -= before.tropical_products;
    stats.min_plus_ops -= before.min_plus_ops;
    stats.bookkeeping_ops -= before.bookkeeping_ops;
    stats.direct_cell_products -= before.direct_cell_products;
    Ok(ClosureResult { aplus, distance, multiplications: stats.multiplications, stats })
}

struct Closure<'a, 'g> {
    t: &'a mut PairSetMatrix,
    mul: &'a mut Multiplier<'g>,
}

impl Closure<'_, '_> {
    fn product(&mut self, (r0, r1): (usize, usize), (k0, k1): (usize, usize), (c0, c1): (usize, usize)) -> Result<PairSetMatrix> {
        let x = self.t.block(r0, k0, r1 - r0, k1 - k0);
        let y = self.t.block(k0, c0, k1 - k0, c1 - c0);
        self.mul.mul(&x, &y)
    }

    /// Closes the diagonal range `[l, m)`.
    fn compute(&mut self, l: usize, m: usize) -> Result<()> {
        if m - l <= 2 {
            return Ok(());
        }
        let mid = (l + m) / 2;
        self.compute(l, mid)?;
        self.compute(mid, m)?;
        self.complete(l, mid, mid, m)
    }

    /// Finishes block `[l, m) × [l2, m2)`. Both diagonal ranges are closed and
    /// the block already holds every contribution routed through `[m, l2)`.
    fn complete(&mut self, l: usize, m: usize, l2: usize, m2: usize) -> Result<()> {
        if m - l == 1 {
            return Ok(());
        }
        let a = (l + m) / 2;
        let b = (l2 + m2) / 2;
        self.complete(a, m, l2, b)?;

        let p = self.product((l, a), (a, m), (l2, b))?;
        self.t.union_block(l, l2, &p);
        self.complete(l, a, l2, b)?;

        let p = self.product((a, m), (l2, b), (b, m2))?;
        self.t.union_block(a, b, &p);
        self.complete(a, m, b, m2)?;

        let p = self.product((l, a), (a, m), (b, m2))?;
        self.t.union_block(l, b, &p);
        let p = self.product((l, a), (l2, b), (b, m2))?;
        self.t.union_block(l, b, &p);
        self.complete(l, a, b, m2)
    }
}

/// Closure-based distance with cap `m`: exact when the distance is at most
/// `m`, `Exceeds(m)` otherwise.
pub fn bounded_distance(cg: &CoveringGrammar, input: &[char], m: u32, strategy: Strategy) -> Result<Distance> {
    bounded_distance_with(&mut Multiplier::new(cg, strategy).with_cap(Some(m)), input)
}

/// Closure-based distance using a configured multiplier (cap and threads).
pub fn bounded_distance_with(mul: &mut Multiplier<'_>, input: &[char]) -> Result<Distance> {
    let cg = mul.grammar();
    let a = init_matrix(cg, input)?;
    if input.is_empty() {
        let d = cg.mnullcount(cg.start_id()).ok_or(Error::Unreachable)?;
        return Ok(Distance::from_cost(d, mul.cap()));
    }
    valiant_closure_with(&a, mul)?.distance.ok_or(Error::Unreachable)
}

/// Closure-based distance without a cap.
pub fn valiant_distance(cg: &CoveringGrammar, input: &[char], strategy: Strategy) -> Result<Cost> {
    let d = bounded_distance_with(&mut Multiplier::new(cg, strategy), input)?;
    d.exact().ok_or_else(|| Error::Inconsistent("uncapped closure reported an exceeded cap".into()))
}

/// The exact distance when it is at most `m`, otherwise `|input|`. Any
/// distance is at most `max(|input|, shortest word)`, so for inputs no
/// shorter than the shortest word this is an `n/m`-approximation.
pub fn approx_distance(cg: &CoveringGrammar, input: &[char], m: u32, strategy: Strategy) -> Result<Cost> {
    approx_from(bounded_distance(cg, input, m, strategy)?, input)
}

/// Maps a bounded result to the approximation output.
pub fn approx_from(d: Distance, input: &[char]) -> Result<Cost> {
    match d {
        Distance::Exact(d) => Ok(d),
        Distance::Exceeds(_) => Ok(input.len() as Cost),
    }
}
