//! Pair-set algebra, tropical (min-plus) matrices, and the reduction of the
//! pair-set matrix product to one tropical product per rhs nonterminal pair.
//!
//! A pair set maps nonterminals to the least error count with which they
//! derive some span. Union keeps per-nonterminal minima; `⊙` combines
//! `(B, k)` and `(C, l)` into `(A, k + l + m)` for each rule `A ->(m) B C`.
//!
//! Capped arithmetic: with cap `m`, every finite value above `m` is stored as
//! `m + 1` ("more than m"). Absent entries stay [`INF`].

use std::collections::BTreeMap;

use crate::covering::{BinaryRule, CoveringGrammar};
use crate::error::{Error, Result};

pub type Cost = u32;

/// Absent / unreachable. Absorbing for addition.
pub const INF: Cost = Cost::MAX;

#[inline]
pub fn clamp(v: Cost, cap: Option<u32>) -> Cost {
    match cap {
        Some(m) if v != INF && v > m => m + 1,
        _ => v,
    }
}

#[inline]
fn add(a: Cost, b: Cost) -> Cost {
    // INF == MAX, so saturation keeps INF absorbing.
    a.saturating_add(b)
}

#[inline]
fn union_into(dst: &mut [Cost], src: &[Cost]) {
    for (d, &s) in dst.iter_mut().zip(src) {
        if s < *d {
            *d = s;
        }
    }
}

#[inline]
fn mul_into(dst: &mut [Cost], x: &[Cost], y: &[Cost], rules: &[BinaryRule], cap: Option<u32>) {
    for r in rules {
        let (l, rr) = (x[r.left], y[r.right]);
        if l == INF || rr == INF {
            continue;
        }
        let v = clamp(add(add(l, rr), r.cost), cap);
        if v < dst[r.lhs] {
            dst[r.lhs] = v;
        }
    }
}

/// A set of `(nonterminal, cost)` pairs with at most one cost per
/// nonterminal, stored densely by nonterminal id.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PairSet {
    costs: Vec<Cost>,
}

impl PairSet {
    pub fn empty(num_nonterminals: usize) -> PairSet {
        PairSet { costs: vec![INF; num_nonterminals] }
    }

    pub fn from_pairs(num_nonterminals: usize, pairs: impl IntoIterator<Item = (usize, Cost)>) -> PairSet {
        let mut s = PairSet::empty(num_nonterminals);
        for (nt, c) in pairs {
            s.insert_min(nt, c);
        }
        s
    }

    pub fn from_slice(costs: &[Cost]) -> PairSet {
        PairSet { costs: costs.to_vec() }
    }

    pub fn get(&self, nt: usize) -> Option<Cost> {
        Some(self.costs[nt]).filter(|&c| c != INF)
    }

    pub fn insert_min(&mut self, nt: usize, cost: Cost) {
        if cost < self.costs[nt] {
            self.costs[nt] = cost;
        }
    }

    pub fn is_empty(&self) -> bool {
        self.costs.iter().all(|&c| c == INF)
    }

    pub fn len(&self) -> usize {
        self.costs.iter().filter(|&&c| c != INF).count()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, Cost)> + '_ {
        self.costs.iter().enumerate().filter(|(_, &c)| c != INF).map(|(i, &c)| (i, c))
    }

    pub fn as_slice(&self) -> &[Cost] {
        &self.costs
    }

    pub fn union(&self, other: &PairSet) -> PairSet {
        pairset_union(self, other)
    }

    pub fn mul(&self, other: &PairSet, cg: &CoveringGrammar) -> PairSet {
        pairset_mul(self, other, cg)
    }
}

/// Per-nonterminal minimum of two pair sets.
pub fn pairset_union(a: &PairSet, b: &PairSet) -> PairSet {
    let mut out = a.clone();
    union_into(&mut out.costs, &b.costs);
    out
}

/// `a ⊙ b`: for every `(B, k) ∈ a`, `(C, l) ∈ b` and rule `A ->(m) B C`,
/// `(A, k + l + m)`, keeping the minimum per `A`.
pub fn pairset_mul(a: &PairSet, b: &PairSet, cg: &CoveringGrammar) -> PairSet {
    let mut out = PairSet::empty(a.costs.len());
    mul_into(&mut out.costs, &a.costs, &b.costs, cg.binary_rules(), None);
    out
}

/// Dense `rows × cols` matrix of pair sets.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PairSetMatrix {
    rows: usize,
    cols: usize,
    nts: usize,
    data: Vec<Cost>,
}

impl PairSetMatrix {
    pub fn new(rows: usize, cols: usize, num_nonterminals: usize) -> PairSetMatrix {
        PairSetMatrix { rows, cols, nts: num_nonterminals, data: vec![INF; rows * cols * num_nonterminals] }
    }

    pub fn square(n: usize, num_nonterminals: usize) -> PairSetMatrix {
        PairSetMatrix::new(n, n, num_nonterminals)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn num_nonterminals(&self) -> usize {
        self.nts
    }

    #[inline]
    fn offset(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < self.rows && j < self.cols);
        (i * self.cols + j) * self.nts
    }

    #[inline]
    pub fn cell(&self, i: usize, j: usize) -> &[Cost] {
        let o = self.offset(i, j);
        &self.data[o..o + self.nts]
    }

    #[inline]
    pub fn cell_mut(&mut self, i: usize, j: usize) -> &mut [Cost] {
        let o = self.offset(i, j);
        &mut self.data[o..o + self.nts]
    }

    pub fn pairset(&self, i: usize, j: usize) -> PairSet {
        PairSet::from_slice(self.cell(i, j))
    }

    pub fn set_pairset(&mut self, i: usize, j: usize, s: &PairSet) {
        self.cell_mut(i, j).copy_from_slice(s.as_slice());
    }

    pub fn get(&self, i: usize, j: usize, nt: usize) -> Option<Cost> {
        Some(self.cell(i, j)[nt]).filter(|&c| c != INF)
    }

    pub fn insert_min(&mut self, i: usize, j: usize, nt: usize, cost: Cost) {
        let c = &mut self.cell_mut(i, j)[nt];
        if cost < *c {
            *c = cost;
        }
    }

    pub fn is_cell_empty(&self, i: usize, j: usize) -> bool {
        self.cell(i, j).iter().all(|&c| c == INF)
    }

    pub fn is_empty(&self) -> bool {
        self.data.iter().all(|&c| c == INF)
    }

    /// Cells on or below the diagonal are empty.
    pub fn is_strictly_upper_triangular(&self) -> bool {
        (0..self.rows).all(|i| (0..=i.min(self.cols.saturating_sub(1))).all(|j| self.is_cell_empty(i, j)))
    }

    /// All `(i, j, nt, cost)` entries in row-major, nonterminal order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, usize, Cost)> + '_ {
        (0..self.rows).flat_map(move |i| {
            (0..self.cols).flat_map(move |j| {
                self.cell(i, j).iter().enumerate().filter(|(_, &c)| c != INF).map(move |(a, &c)| (i, j, a, c))
            })
        })
    }

    /// Copy of the `rows × cols` block whose top-left cell is `(r0, c0)`.
    pub fn block(&self, r0: usize, c0: usize, rows: usize, cols: usize) -> PairSetMatrix {
        let mut out = PairSetMatrix::new(rows, cols, self.nts);
        for i in 0..rows {
            let src = self.offset(r0 + i, c0);
            let dst = out.offset(i, 0);
            out.data[dst..dst + cols * self.nts].copy_from_slice(&self.data[src..src + cols * self.nts]);
        }
        out
    }

    /// Unions `m` into the block starting at `(r0, c0)`.
    pub fn union_block(&mut self, r0: usize, c0: usize, m: &PairSetMatrix) {
        for i in 0..m.rows {
            let dst = self.offset(r0 + i, c0);
            let src = m.offset(i, 0);
            let n = m.cols * self.nts;
            union_into(&mut self.data[dst..dst + n], &m.data[src..src + n]);
        }
    }

    pub fn union(&self, other: &PairSetMatrix) -> Result<PairSetMatrix> {
        if (self.rows, self.cols, self.nts) != (other.rows, other.cols, other.nts) {
            return Err(Error::DimensionMismatch("union of differently shaped matrices".into()));
        }
        let mut out = self.clone();
        union_into(&mut out.data, &other.data);
        Ok(out)
    }

    fn clamp_all(&mut self, cap: Option<u32>) {
        if cap.is_some() {
            for c in &mut self.data {
                *c = clamp(*c, cap);
            }
        }
    }
}

/// Integer matrix under `(min, +)`, with [`INF`] as the absorbing element.
/// With a cap `m`, finite entries are kept in `[0, m + 1]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TropicalMatrix {
    rows: usize,
    cols: usize,
    cap: Option<u32>,
    data: Vec<Cost>,
}

impl TropicalMatrix {
    pub fn infinite(rows: usize, cols: usize) -> TropicalMatrix {
        TropicalMatrix { rows, cols, cap: None, data: vec![INF; rows * cols] }
    }

    /// Builds from rows; `None` is infinity.
    pub fn from_rows(rows: &[Vec<Option<Cost>>]) -> Result<TropicalMatrix> {
        let cols = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::DimensionMismatch("ragged rows".into()));
        }
        let data = rows.iter().flatten().map(|v| v.unwrap_or(INF)).collect();
        Ok(TropicalMatrix { rows: rows.len(), cols, cap: None, data })
    }

    /// Applies cap `m`: finite entries above `m` become `m + 1`.
    pub fn with_cap(mut self, cap: Option<u32>) -> TropicalMatrix {
        self.cap = cap;
        for v in &mut self.data {
            *v = clamp(*v, cap);
        }
        self
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn cap(&self) -> Option<u32> {
        self.cap
    }

    #[inline]
    pub fn raw(&self, i: usize, j: usize) -> Cost {
        self.data[i * self.cols + j]
    }

    pub fn get(&self, i: usize, j: usize) -> Option<Cost> {
        Some(self.raw(i, j)).filter(|&c| c != INF)
    }

    pub fn set(&mut self, i: usize, j: usize, v: Option<Cost>) {
        self.data[i * self.cols + j] = clamp(v.unwrap_or(INF), self.cap);
    }

    pub fn to_rows(&self) -> Vec<Vec<Option<Cost>>> {
        (0..self.rows).map(|i| (0..self.cols).map(|j| self.get(i, j)).collect()).collect()
    }
}

/// `Z[i][j] = min_k X[i][k] + Y[k][j]`, clamped to the tighter cap of the
/// two operands.
pub fn tropical_mul(x: &TropicalMatrix, y: &TropicalMatrix) -> Result<TropicalMatrix> {
    let mut ops = 0;
    tropical_mul_counted(x, y, 1, &mut ops)
}

const TILE_K: usize = 64;
const TILE_J: usize = 256;

/// [`tropical_mul`] with output rows split over `threads` workers; adds the
/// number of scalar min-plus steps performed to `ops`. The result does not
/// depend on the worker count.
pub fn tropical_mul_counted(
    x: &TropicalMatrix,
    y: &TropicalMatrix,
    threads: usize,
    ops: &mut u64,
) -> Result<TropicalMatrix> {
    if x.cols != y.rows {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} times {}x{}",
            x.rows, x.cols, y.rows, y.cols
        )));
    }
    let cap = match (x.cap, y.cap) {
        (Some(a), Some(b)) => Some(a.min(b)),
        (a, b) => a.or(b),
    };
    let mut z = TropicalMatrix { rows: x.rows, cols: y.cols, cap, data: vec![INF; x.rows * y.cols] };
    if z.data.is_empty() {
        return Ok(z);
    }
    let (n, cols) = (x.cols, y.cols);
    let kernel = |row0: usize, out: &mut [Cost]| -> u64 {
        let mut count = 0u64;
        let nrows = out.len() / cols;
        for k0 in (0..n).step_by(TILE_K) {
            let k1 = (k0 + TILE_K).min(n);
            for j0 in (0..cols).step_by(TILE_J) {
                let j1 = (j0 + TILE_J).min(cols);
                for r in 0..nrows {
                    let i = row0 + r;
                    let zrow = &mut out[r * cols + j0..r * cols + j1];
                    for k in k0..k1 {
                        let xik = x.data[i * n + k];
                        if xik == INF {
                            continue;
                        }
                        count += (j1 - j0) as u64;
                        let yrow = &y.data[k * cols + j0..k * cols + j1];
                        for (zv, &yv) in zrow.iter_mut().zip(yrow) {
                            let s = add(xik, yv);
                            if s < *zv {
                                *zv = s;
                            }
                        }
                    }
                }
            }
        }
        count
    };
    let threads = threads.max(1).min(z.rows);
    if threads == 1 {
        *ops += kernel(0, &mut z.data);
    } else {
        let rows_per = z.rows.div_ceil(threads);
        let counts: Vec<u64> = std::thread::scope(|scope| {
            let handles: Vec<_> = z
                .data
                .chunks_mut(rows_per * cols)
                .enumerate()
                .map(|(t, chunk)| {
                    let kernel = &kernel;
                    scope.spawn(move || kernel(t * rows_per, chunk))
                })
                .collect();
            handles.into_iter().map(|h| h.join().expect("tropical worker panicked")).collect()
        });
        *ops += counts.iter().sum::<u64>();
    }
    if cap.is_some() {
        for v in &mut z.data {
            *v = clamp(*v, cap);
        }
    }
    Ok(z)
}

/// One tropical matrix per nonterminal: `a_B[i][j] = l` iff `(B, l) ∈ a[i][j]`,
/// infinity otherwise. With a cap, finite values above `m` become `m + 1`.
pub fn split_by_nonterminal(a: &PairSetMatrix, cap: Option<u32>) -> Vec<TropicalMatrix> {
    (0..a.nts).map(|nt| split_one(a, nt, cap)).collect()
}

fn split_one(a: &PairSetMatrix, nt: usize, cap: Option<u32>) -> TropicalMatrix {
    let data = (0..a.rows * a.cols).map(|c| clamp(a.data[c * a.nts + nt], cap)).collect();
    TropicalMatrix { rows: a.rows, cols: a.cols, cap, data }
}

/// Rebuilds the pair-set product from per-pair tropical products: for each
/// rule `A ->(k) B C` and finite `c_BC[i][j] = l`, `(A, k + l)` goes into
/// `c[i][j]`, keeping the minimum. Missing pairs count as all-infinite.
pub fn recombine(
    products: &BTreeMap<(usize, usize), TropicalMatrix>,
    rows: usize,
    cols: usize,
    cg: &CoveringGrammar,
    cap: Option<u32>,
) -> Result<PairSetMatrix> {
    let mut out = PairSetMatrix::new(rows, cols, cg.num_nonterminals());
    for r in cg.binary_rules() {
        let pair = cg.rhs_pairs()[r.pair];
        let Some(c) = products.get(&pair) else { continue };
        if (c.rows, c.cols) != (rows, cols) {
            return Err(Error::DimensionMismatch("product block has the wrong shape".into()));
        }
        recombine_rule(&mut out, r, c, cap);
    }
    Ok(out)
}

fn recombine_rule(out: &mut PairSetMatrix, r: &BinaryRule, c: &TropicalMatrix, cap: Option<u32>) {
    let nts = out.nts;
    for (cell, &l) in c.data.iter().enumerate() {
        if l == INF {
            continue;
        }
        let v = clamp(add(l, r.cost), cap);
        let slot = &mut out.data[cell * nts + r.lhs];
        if v < *slot {
            *slot = v;
        }
    }
}

/// How a pair-set matrix product is evaluated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Strategy {
    /// Cell-by-cell `⊙` and union.
    #[default]
    Direct,
    /// Split by nonterminal, one tropical product per rhs pair, recombine.
    /// A subcubic min-plus routine would replace [`tropical_mul_counted`]
    /// here.
    Tropical,
}

/// Operation counters accumulated by a [`Multiplier`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct MulStats {
    /// Pair-set matrix products performed.
    pub multiplications: u64,
    /// Tropical products performed.
    pub tropical_products: u64,
    /// Scalar min-plus steps inside tropical products.
    pub min_plus_ops: u64,
    /// Split and recombine cell operations (tropical strategy only).
    pub bookkeeping_ops: u64,
    /// Cell-level `⊙` applications (direct strategy only).
    pub direct_cell_products: u64,
}

/// Pair-set matrix multiplication with a fixed grammar, strategy and cap.
pub struct Multiplier<'g> {
    cg: &'g CoveringGrammar,
    strategy: Strategy,
    cap: Option<u32>,
    threads: usize,
    pub stats: MulStats,
}

impl<'g> Multiplier<'g> {
    pub fn new(cg: &'g CoveringGrammar, strategy: Strategy) -> Multiplier<'g> {
        Multiplier { cg, strategy, cap: None, threads: 1, stats: MulStats::default() }
    }

    pub fn with_cap(mut self, cap: Option<u32>) -> Self {
        self.cap = cap;
        self
    }

    pub fn with_threads(mut self, threads: usize) -> Self {
        self.threads = threads.max(1);
        self
    }

    pub fn cap(&self) -> Option<u32> {
        self.cap
    }

    pub fn grammar(&self) -> &'g CoveringGrammar {
        self.cg
    }

    /// `c[i][j] = ∪_k a[i][k] ⊙ b[k][j]`.
    pub fn mul(&mut self, a: &PairSetMatrix, b: &PairSetMatrix) -> Result<PairSetMatrix> {
        let nts = self.cg.num_nonterminals();
        if a.cols != b.rows || a.nts != nts || b.nts != nts {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} times {}x{} over {}/{} nonterminals",
                a.rows, a.cols, b.rows, b.cols, a.nts, b.nts
            )));
        }
        self.stats.multiplications += 1;
        let mut c = match self.strategy {
            Strategy::Direct => self.mul_direct(a, b),
            Strategy::Tropical => self.mul_tropical(a, b)?,
        };
        c.clamp_all(self.cap);
        Ok(c)
    }

    fn mul_direct(&mut self, a: &PairSetMatrix, b: &PairSetMatrix) -> PairSetMatrix {
        let rules = self.cg.binary_rules();
        let mut c = PairSetMatrix::new(a.rows, b.cols, a.nts);
        let b_live: Vec<bool> = (0..b.rows * b.cols).map(|x| !b.is_cell_empty(x / b.cols, x % b.cols)).collect();
        let mut count = 0;
        for i in 0..a.rows {
            for k in 0..a.cols {
                if a.is_cell_empty(i, k) {
                    continue;
                }
                let x = a.cell(i, k).to_vec();
                for j in 0..b.cols {
                    if !b_live[k * b.cols + j] {
                        continue;
                    }
                    count += 1;
                    let o = c.offset(i, j);
                    mul_into(&mut c.data[o..o + c.nts], &x, b.cell(k, j), rules, self.cap);
                }
            }
        }
        self.stats.direct_cell_products += count;
        c
    }

    fn mul_tropical(&mut self, a: &PairSetMatrix, b: &PairSetMatrix) -> Result<PairSetMatrix> {
        let cg = self.cg;
        let mut left: BTreeMap<usize, TropicalMatrix> = BTreeMap::new();
        let mut right: BTreeMap<usize, TropicalMatrix> = BTreeMap::new();
        for &(l, r) in cg.rhs_pairs() {
            left.entry(l).or_insert_with(|| split_one(a, l, self.cap));
            right.entry(r).or_insert_with(|| split_one(b, r, self.cap));
        }
        self.stats.bookkeeping_ops +=
            (left.len() * a.rows * a.cols + right.len() * b.rows * b.cols) as u64;

        let mut products = BTreeMap::new();
        for &(l, r) in cg.rhs_pairs() {
            let p = tropical_mul_counted(&left[&l], &right[&r], self.threads, &mut self.stats.min_plus_ops)?;
            self.stats.tropical_products += 1;
            products.insert((l, r), p);
        }
        self.stats.bookkeeping_ops += (cg.binary_rules().len() * a.rows * b.cols) as u64;
        recombine(&products, a.rows, b.cols, cg, self.cap)
    }
}

/// Pair-set matrix product with the given strategy (uncapped, one thread).
pub fn pairset_matrix_mul(
    a: &PairSetMatrix,
    b: &PairSetMatrix,
    cg: &CoveringGrammar,
    strategy: Strategy,
) -> Result<PairSetMatrix> {
    Multiplier::new(cg, strategy).mul(a, b)
}
