//! Gröbner bases modulo a word-size prime: a Buchberger loop whose batches
//! of s-polynomials are reduced together with F4-style linear algebra.
//!
//! One iteration of [`gbasis_modp`]:
//!
//! 1. [`GBState::select_batch`] removes every critical pair of minimal degree.
//! 2. The s-polynomials of the batch are formed explicitly.
//! 3. [`symbolic_preprocess`] collects every monomial that reduction can
//!    reach and picks one reductor (basis element times a shift) for each
//!    reducible one.
//! 4. [`build_matrix`] turns the reductors into sparse rows that share the
//!    coefficient list of their basis element.
//! 5. [`reduce_batch`] reduces each s-polynomial, as a dense vector with
//!    delayed modular reduction, against those rows.
//! 6. [`echelonize`] inter-reduces the results; non-zero rows become new
//!    basis elements through [`GBState::update`].
//!
//! A run in [`Mode::Record`] stores, per iteration, the monomial layout and
//! the s-polynomials that reduced to zero. [`Mode::Replay`] reuses that
//! information for another prime: zero-reducing pairs are skipped and the
//! layout is taken as is after a consistency check.

use std::collections::{BTreeSet, BinaryHeap};
use std::sync::Arc;

use rustc_hash::{FxHashMap, FxHashSet};
use thiserror::Error;

use crate::arith::{
    AccumulatorWidth, DenseAccumulator, PrimeField, Signed63Accumulator, Wide128Accumulator,
};
use crate::monomial::Monomial;
use crate::poly::{self, Polynomial};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GbError {
    #[error("critical pair queue is empty")]
    EmptyQueue,
    #[error("learning trace does not match this prime at iteration {iteration}: {reason}")]
    ReplayMismatch { iteration: usize, reason: String },
}

fn mismatch(iteration: usize, reason: impl Into<String>) -> GbError {
    GbError::ReplayMismatch {
        iteration,
        reason: reason.into(),
    }
}

/// A pair of basis indices `i < j`. Ordered by degree, then lcm, then indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CriticalPair {
    pub degree: u32,
    pub lcm: Monomial,
    pub i: u32,
    pub j: u32,
}

/// Working state of the Buchberger loop.
#[derive(Debug, Clone)]
pub struct GBState {
    field: PrimeField,
    basis: Vec<Polynomial<u32>>,
    leads: Vec<(Monomial, u16)>,
    alive: Vec<bool>,
    pairs: BTreeSet<CriticalPair>,
    iteration: usize,
}

impl GBState {
    pub fn new(field: PrimeField) -> Self {
        GBState {
            field,
            basis: Vec::new(),
            leads: Vec::new(),
            alive: Vec::new(),
            pairs: BTreeSet::new(),
            iteration: 0,
        }
    }

    pub fn field(&self) -> PrimeField {
        self.field
    }

    pub fn basis(&self) -> &[Polynomial<u32>] {
        &self.basis
    }

    pub fn is_alive(&self, k: usize) -> bool {
        self.alive[k]
    }

    pub fn pairs(&self) -> impl Iterator<Item = &CriticalPair> {
        self.pairs.iter()
    }

    pub fn iteration(&self) -> usize {
        self.iteration
    }

    fn lead(&self, k: usize) -> &Monomial {
        &self.leads[k].0
    }

    /// First alive basis element whose leading monomial divides `m`.
    fn find_reductor(&self, m: &Monomial) -> Option<usize> {
        let mask = m.support_mask();
        (0..self.basis.len()).find(|&k| {
            self.alive[k] && self.leads[k].1 & !mask == 0 && self.leads[k].0.divides(m)
        })
    }

    /// Adds a monic element and updates the pair queue with the
    /// Gebauer–Möller criteria.
    ///
    /// New pairs are formed with alive elements only. A new pair is dropped
    /// when its leads are coprime or when another new pair has an lcm
    /// dividing its lcm. An old pair `(i, j)` is dropped when the new lead
    /// divides its lcm strictly, i.e. the lcm differs from both `lcm(i, new)`
    /// and `lcm(j, new)`. Alive elements whose lead is a multiple of the new
    /// lead are marked dead.
    pub fn update(&mut self, candidate: Polynomial<u32>) {
        let lead_h = *candidate
            .leading_monomial()
            .expect("update with zero polynomial");
        debug_assert_eq!(candidate.leading_coeff(), Some(&1));
        let h = self.basis.len() as u32;

        // (g, lcm, coprime) for every alive g
        let cands: Vec<(u32, Monomial, bool)> = (0..self.basis.len())
            .filter(|&g| self.alive[g])
            .map(|g| {
                let lg = self.lead(g);
                (g as u32, lg.lcm(&lead_h), lg.is_coprime(&lead_h))
            })
            .collect();

        let mut kept: Vec<(u32, Monomial, bool)> = Vec::with_capacity(cands.len());
        for (idx, &(g1, l1, coprime)) in cands.iter().enumerate() {
            if coprime {
                kept.push((g1, l1, coprime));
                continue;
            }
            let dominated = cands[idx + 1..]
                .iter()
                .chain(kept.iter())
                .any(|(_, l2, _)| l2.divides(&l1));
            if !dominated {
                kept.push((g1, l1, coprime));
            }
        }

        self.pairs.retain(|pair| {
            !(lead_h.divides(&pair.lcm)
                && self.leads[pair.i as usize].0.lcm(&lead_h) != pair.lcm
                && self.leads[pair.j as usize].0.lcm(&lead_h) != pair.lcm)
        });

        for (g, lcm, coprime) in kept {
            if !coprime {
                self.pairs.insert(CriticalPair {
                    degree: lcm.degree(),
                    lcm,
                    i: g,
                    j: h,
                });
            }
        }

        for g in 0..self.basis.len() {
            if self.alive[g] && lead_h.divides(&self.leads[g].0) {
                self.alive[g] = false;
            }
        }
        self.leads.push((lead_h, lead_h.support_mask()));
        self.basis.push(candidate);
        self.alive.push(true);
    }

    /// Removes and returns every pair of minimal degree.
    pub fn select_batch(&mut self) -> Result<Vec<CriticalPair>, GbError> {
        let degree = self.pairs.first().ok_or(GbError::EmptyQueue)?.degree;
        let mut batch = Vec::new();
        while self.pairs.first().is_some_and(|p| p.degree == degree) {
            batch.push(self.pairs.pop_first().unwrap());
        }
        Ok(batch)
    }

    /// The s-polynomial of a pair of monic basis elements.
    pub fn spoly(&self, pair: &CriticalPair) -> Polynomial<u32> {
        let (gi, gj) = (&self.basis[pair.i as usize], &self.basis[pair.j as usize]);
        let si = pair.lcm.try_divide(self.lead(pair.i as usize)).unwrap();
        let sj = pair.lcm.try_divide(self.lead(pair.j as usize)).unwrap();
        gi.mul_term(&self.field, &si, &1)
            .sub(&self.field, &gj.mul_term(&self.field, &sj, &1))
    }
}

/// One reductor row: basis element `basis` multiplied by `shift`, whose
/// leading monomial sits in column `column`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReductorDescriptor {
    pub basis: u32,
    pub shift: Monomial,
    pub column: u32,
}

/// Result of symbolic preprocessing for one batch.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolicLayout {
    /// Every monomial reduction can produce, strictly decreasing; the
    /// position in this list is the column index.
    pub monomials: Vec<Monomial>,
    /// Columns that no basis lead divides.
    pub remainder_columns: Vec<u32>,
    pub reductors: Vec<ReductorDescriptor>,
    index: FxHashMap<Monomial, u32>,
}

impl SymbolicLayout {
    pub fn empty() -> Self {
        SymbolicLayout {
            monomials: Vec::new(),
            remainder_columns: Vec::new(),
            reductors: Vec::new(),
            index: FxHashMap::default(),
        }
    }

    pub fn column_of(&self, m: &Monomial) -> Option<u32> {
        self.index.get(m).copied()
    }

    pub fn remainder_monomials(&self) -> impl Iterator<Item = &Monomial> {
        self.remainder_columns
            .iter()
            .map(|&c| &self.monomials[c as usize])
    }

    /// The quotient monomials, one per reductor row.
    pub fn quotient_monomials(&self) -> impl Iterator<Item = &Monomial> {
        self.reductors.iter().map(|r| &r.shift)
    }

    pub fn ncols(&self) -> usize {
        self.monomials.len()
    }
}

/// Per-iteration data recorded during a learning run.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub pairs: Vec<(u32, u32)>,
    /// Positions in `pairs` whose s-polynomial reduced to zero.
    pub zero_pairs: Vec<u32>,
    pub layout: Arc<SymbolicLayout>,
    pub new_elements: u32,
}

/// Everything a learning run records; immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct LearningTrace {
    prime: u32,
    generator_leads: Vec<Monomial>,
    iterations: Vec<IterationRecord>,
}

impl LearningTrace {
    pub fn prime(&self) -> u32 {
        self.prime
    }

    pub fn iterations(&self) -> &[IterationRecord] {
        &self.iterations
    }

    pub fn zero_pair_count(&self) -> usize {
        self.iterations.iter().map(|it| it.zero_pairs.len()).sum()
    }
}

#[derive(Debug, Clone, Copy)]
pub enum Mode<'a> {
    Plain,
    Record,
    Replay(&'a LearningTrace),
}

/// Where [`symbolic_preprocess`] gets its layout from.
#[derive(Debug, Clone, Copy)]
pub enum LayoutSource<'a> {
    Compute,
    Replay { layout: &'a Arc<SymbolicLayout>, iteration: usize },
}

/// Collects all reachable monomials, largest first, choosing a reductor for
/// each reducible one. In replay mode the stored layout is checked against
/// the current basis and returned unchanged.
pub fn symbolic_preprocess(
    spolys: &[Polynomial<u32>],
    state: &GBState,
    source: LayoutSource<'_>,
) -> Result<Arc<SymbolicLayout>, GbError> {
    match source {
        LayoutSource::Compute => Ok(Arc::new(compute_layout(spolys, state))),
        LayoutSource::Replay { layout, iteration } => {
            validate_layout(layout, spolys, state, iteration)?;
            Ok(Arc::clone(layout))
        }
    }
}

fn compute_layout(spolys: &[Polynomial<u32>], state: &GBState) -> SymbolicLayout {
    let mut seen: FxHashSet<Monomial> = FxHashSet::default();
    let mut heap: BinaryHeap<Monomial> = BinaryHeap::new();
    for s in spolys {
        for m in s.monomials() {
            if seen.insert(*m) {
                heap.push(*m);
            }
        }
    }
    let mut layout = SymbolicLayout::empty();
    while let Some(m) = heap.pop() {
        let col = layout.monomials.len() as u32;
        layout.monomials.push(m);
        layout.index.insert(m, col);
        match state.find_reductor(&m) {
            Some(b) => {
                let shift = m.try_divide(state.lead(b)).unwrap();
                for t in &state.basis[b].monomials()[1..] {
                    let prod = t.mul(&shift).expect("degree overflow");
                    if seen.insert(prod) {
                        heap.push(prod);
                    }
                }
                layout.reductors.push(ReductorDescriptor {
                    basis: b as u32,
                    shift,
                    column: col,
                });
            }
            None => layout.remainder_columns.push(col),
        }
    }
    layout
}

fn validate_layout(
    layout: &SymbolicLayout,
    spolys: &[Polynomial<u32>],
    state: &GBState,
    iteration: usize,
) -> Result<(), GbError> {
    for s in spolys {
        if s.monomials().iter().any(|m| layout.column_of(m).is_none()) {
            return Err(mismatch(iteration, "s-polynomial monomial outside recorded layout"));
        }
    }
    for r in &layout.reductors {
        let b = r.basis as usize;
        if b >= state.basis.len() || !state.alive[b] {
            return Err(mismatch(iteration, "recorded reductor is not an alive basis element"));
        }
        if state.lead(b).mul(&r.shift).ok() != Some(layout.monomials[r.column as usize]) {
            return Err(mismatch(iteration, "recorded reductor lead moved"));
        }
    }
    for m in layout.remainder_monomials() {
        if state.find_reductor(m).is_some() {
            return Err(mismatch(iteration, "recorded remainder monomial is reducible"));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatrixRow {
    /// Index into [`ReductorMatrix::coeff_lists`].
    pub coeffs: u32,
    /// Column of each coefficient; strictly increasing, first entry is the lead.
    pub cols: Vec<u32>,
}

impl MatrixRow {
    pub fn lead_column(&self) -> u32 {
        self.cols[0]
    }
}

/// Reductor rows sorted by decreasing leading monomial (increasing column).
/// Rows coming from the same basis element share its coefficient list.
#[derive(Debug)]
pub struct ReductorMatrix<'a> {
    pub rows: Vec<MatrixRow>,
    pub coeff_lists: Vec<&'a [u32]>,
    pivot_of_column: Vec<u32>,
}

const NO_PIVOT: u32 = u32::MAX;

impl ReductorMatrix<'_> {
    /// Row index whose lead is in `col`.
    pub fn pivot(&self, col: usize) -> Option<usize> {
        match self.pivot_of_column.get(col) {
            Some(&r) if r != NO_PIVOT => Some(r as usize),
            _ => None,
        }
    }

    pub fn row_coeffs(&self, row: &MatrixRow) -> &[u32] {
        self.coeff_lists[row.coeffs as usize]
    }
}

/// Builds one sparse row per reductor descriptor.
///
/// Fails only when a replayed layout lacks one of the product monomials.
pub fn build_matrix<'a>(
    layout: &SymbolicLayout,
    state: &'a GBState,
) -> Result<ReductorMatrix<'a>, GbError> {
    let mut list_of_basis: FxHashMap<u32, u32> = FxHashMap::default();
    let mut coeff_lists: Vec<&'a [u32]> = Vec::new();
    let mut rows = Vec::with_capacity(layout.reductors.len());
    for r in &layout.reductors {
        let g = &state.basis[r.basis as usize];
        let list = *list_of_basis.entry(r.basis).or_insert_with(|| {
            coeff_lists.push(g.coeffs());
            coeff_lists.len() as u32 - 1
        });
        let mut cols = Vec::with_capacity(g.len());
        cols.push(r.column);
        for t in &g.monomials()[1..] {
            let prod = t.mul(&r.shift).expect("degree overflow");
            let col = layout
                .column_of(&prod)
                .ok_or_else(|| mismatch(state.iteration, "reductor monomial outside layout"))?;
            cols.push(col);
        }
        rows.push(MatrixRow { coeffs: list, cols });
    }
    rows.sort_by_key(|r| r.lead_column());
    let mut pivot_of_column = vec![NO_PIVOT; layout.ncols()];
    for (k, r) in rows.iter().enumerate() {
        pivot_of_column[r.lead_column() as usize] = k as u32;
    }
    Ok(ReductorMatrix {
        rows,
        coeff_lists,
        pivot_of_column,
    })
}

/// A reduced s-polynomial restricted to its non-zero columns.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ReducedRow {
    pub cols: Vec<u32>,
    pub vals: Vec<u32>,
}

impl ReducedRow {
    pub fn is_zero(&self) -> bool {
        self.cols.is_empty()
    }
}

/// Reduces every s-polynomial against the matrix rows, column by column
/// from the largest monomial down.
pub fn reduce_batch(
    spolys: &[Polynomial<u32>],
    matrix: &ReductorMatrix<'_>,
    layout: &SymbolicLayout,
    field: PrimeField,
) -> Vec<ReducedRow> {
    match field.accumulator_width() {
        AccumulatorWidth::Wide128 => reduce_with::<Wide128Accumulator>(spolys, matrix, layout, field),
        AccumulatorWidth::Signed63 => {
            reduce_with::<Signed63Accumulator>(spolys, matrix, layout, field)
        }
    }
}

fn reduce_with<A: DenseAccumulator>(
    spolys: &[Polynomial<u32>],
    matrix: &ReductorMatrix<'_>,
    layout: &SymbolicLayout,
    field: PrimeField,
) -> Vec<ReducedRow> {
    let ncols = layout.ncols();
    let mut acc = A::with_len(field, ncols);
    let mut out = Vec::with_capacity(spolys.len());
    for s in spolys {
        if s.is_zero() {
            out.push(ReducedRow::default());
            continue;
        }
        acc.clear();
        let mut first = ncols;
        for (m, &c) in s.terms() {
            let col = layout.column_of(m).expect("s-polynomial monomial in layout") as usize;
            acc.set(col, c);
            first = first.min(col);
        }
        let mut row = ReducedRow::default();
        for col in first..ncols {
            let v = acc.take(col);
            if v == 0 {
                continue;
            }
            match matrix.pivot(col) {
                Some(r) => {
                    let mrow = &matrix.rows[r];
                    let coeffs = matrix.row_coeffs(mrow);
                    // lead coefficient is one: zero the pivot cell, eliminate the rest
                    acc.set(col, 0);
                    acc.sub_scaled(v, &mrow.cols[1..], &coeffs[1..]);
                }
                None => {
                    row.cols.push(col as u32);
                    row.vals.push(v);
                }
            }
        }
        out.push(row);
    }
    out
}

/// Output of [`echelonize`].
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Echelon {
    /// Reduced row echelon form, monic, by increasing pivot column. Columns
    /// refer to the caller's numbering.
    pub rows: Vec<ReducedRow>,
    /// Input positions that became zero.
    pub zero_rows: Vec<usize>,
}

/// Reduced row echelon form over `Z/pZ`.
///
/// Columns without any non-zero entry are dropped first. Rows are processed
/// in input order when `learning_active`, so zero rows are identified
/// reproducibly; otherwise they are first sorted by leading column.
pub fn echelonize(rows: &[ReducedRow], field: PrimeField, learning_active: bool) -> Echelon {
    match field.accumulator_width() {
        AccumulatorWidth::Wide128 => echelonize_with::<Wide128Accumulator>(rows, field, learning_active),
        AccumulatorWidth::Signed63 => {
            echelonize_with::<Signed63Accumulator>(rows, field, learning_active)
        }
    }
}

fn echelonize_with<A: DenseAccumulator>(
    rows: &[ReducedRow],
    field: PrimeField,
    learning_active: bool,
) -> Echelon {
    // column compaction
    let mut used: Vec<u32> = rows.iter().flat_map(|r| r.cols.iter().copied()).collect();
    used.sort_unstable();
    used.dedup();
    let width = used.len();
    let compact: FxHashMap<u32, u32> = used
        .iter()
        .enumerate()
        .map(|(k, &c)| (c, k as u32))
        .collect();

    let mut order: Vec<usize> = (0..rows.len()).collect();
    if !learning_active {
        order.sort_by_key(|&k| rows[k].cols.first().copied().unwrap_or(u32::MAX));
    }

    // pivot rows stored densely from their pivot column on
    let mut pivots: Vec<Option<Vec<u32>>> = vec![None; width];
    let mut zero_rows = Vec::new();
    let mut acc = A::with_len(field, width);
    for &k in &order {
        let row = &rows[k];
        if row.is_zero() {
            zero_rows.push(k);
            continue;
        }
        acc.clear();
        let mut first = width;
        for (&c, &v) in row.cols.iter().zip(&row.vals) {
            let cc = compact[&c] as usize;
            acc.set(cc, v);
            first = first.min(cc);
        }
        let mut lead = None;
        for col in first..width {
            let v = acc.take(col);
            if v == 0 {
                continue;
            }
            match &pivots[col] {
                Some(prow) => {
                    acc.set(col, 0);
                    acc.sub_scaled_contiguous(v, col + 1, &prow[1..]);
                }
                None => {
                    if lead.is_none() {
                        lead = Some(col);
                    }
                }
            }
        }
        match lead {
            None => zero_rows.push(k),
            Some(col) => {
                let inv = field.inv(acc.take(col)).unwrap();
                let dense: Vec<u32> = (col..width)
                    .map(|c| field.mul(acc.take(c), inv))
                    .collect();
                pivots[col] = Some(dense);
            }
        }
    }

    // back substitution, last pivot first
    let pivot_cols: Vec<usize> = (0..width).filter(|&c| pivots[c].is_some()).collect();
    for (pk, &pc) in pivot_cols.iter().enumerate().rev() {
        let later = &pivot_cols[pk + 1..];
        let prow = pivots[pc].as_ref().unwrap();
        if later.iter().all(|&lc| prow[lc - pc] == 0) {
            continue;
        }
        acc.clear();
        for (off, &v) in prow.iter().enumerate() {
            acc.set(pc + off, v);
        }
        for &lc in later {
            let v = acc.take(lc);
            if v != 0 {
                let lrow = pivots[lc].as_ref().unwrap();
                acc.set(lc, 0);
                acc.sub_scaled_contiguous(v, lc + 1, &lrow[1..]);
            }
        }
        let reduced: Vec<u32> = (pc..width).map(|c| acc.take(c)).collect();
        pivots[pc] = Some(reduced);
    }

    let mut out = Vec::with_capacity(pivot_cols.len());
    for &pc in &pivot_cols {
        let prow = pivots[pc].as_ref().unwrap();
        let mut r = ReducedRow::default();
        for (off, &v) in prow.iter().enumerate() {
            if v != 0 {
                r.cols.push(used[pc + off]);
                r.vals.push(v);
            }
        }
        out.push(r);
    }
    zero_rows.sort_unstable();
    Echelon {
        rows: out,
        zero_rows,
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IterationStats {
    pub degree: u32,
    pub pairs: usize,
    /// Pairs whose s-polynomial was actually formed and reduced.
    pub pairs_reduced: usize,
    pub zero_reductions: usize,
    pub matrix_rows: usize,
    pub columns: usize,
    pub new_elements: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GbStats {
    pub iterations: Vec<IterationStats>,
}

impl GbStats {
    pub fn pairs_reduced(&self) -> usize {
        self.iterations.iter().map(|s| s.pairs_reduced).sum()
    }

    pub fn zero_reductions(&self) -> usize {
        self.iterations.iter().map(|s| s.zero_reductions).sum()
    }

    pub fn max_matrix(&self) -> (usize, usize) {
        self.iterations
            .iter()
            .map(|s| (s.matrix_rows, s.columns))
            .max()
            .unwrap_or((0, 0))
    }
}

#[derive(Debug, Clone)]
pub struct GbOutput {
    /// Reduced monic Gröbner basis sorted by decreasing leading monomial.
    pub basis: Vec<Polynomial<u32>>,
    /// Present after a [`Mode::Record`] run.
    pub trace: Option<LearningTrace>,
    pub stats: GbStats,
}

/// Reduced Gröbner basis of the ideal generated by `generators` modulo `p`.
pub fn gbasis_modp(
    generators: &[Polynomial<u32>],
    field: PrimeField,
    mode: Mode<'_>,
) -> Result<GbOutput, GbError> {
    let mut state = GBState::new(field);
    let gens: Vec<Polynomial<u32>> = generators
        .iter()
        .filter(|g| !g.is_zero())
        .map(|g| g.make_monic(&field))
        .collect();
    let generator_leads: Vec<Monomial> = gens.iter().map(|g| g.monomials()[0]).collect();
    if let Mode::Replay(trace) = mode {
        if trace.generator_leads != generator_leads {
            return Err(mismatch(0, "generator leading monomials differ"));
        }
    }
    for g in gens {
        state.update(g);
    }

    let learning = !matches!(mode, Mode::Plain);
    let mut records = Vec::new();
    let mut stats = GbStats::default();

    loop {
        let batch = match state.select_batch() {
            Ok(b) => b,
            Err(GbError::EmptyQueue) => break,
            Err(e) => return Err(e),
        };
        let it = state.iteration;
        let pair_ids: Vec<(u32, u32)> = batch.iter().map(|p| (p.i, p.j)).collect();

        let recorded = match mode {
            Mode::Replay(trace) => {
                let rec = trace
                    .iterations
                    .get(it)
                    .ok_or_else(|| mismatch(it, "more iterations than recorded"))?;
                if rec.pairs != pair_ids {
                    return Err(mismatch(it, "critical pairs differ"));
                }
                Some(rec)
            }
            _ => None,
        };

        // positions of the pairs actually reduced
        let active: Vec<usize> = match recorded {
            Some(rec) => {
                let skip: FxHashSet<u32> = rec.zero_pairs.iter().copied().collect();
                (0..batch.len()).filter(|k| !skip.contains(&(*k as u32))).collect()
            }
            None => (0..batch.len()).collect(),
        };
        let spolys: Vec<Polynomial<u32>> = active.iter().map(|&k| state.spoly(&batch[k])).collect();

        let source = match recorded {
            Some(rec) => LayoutSource::Replay {
                layout: &rec.layout,
                iteration: it,
            },
            None => LayoutSource::Compute,
        };
        let layout = symbolic_preprocess(&spolys, &state, source)?;
        let matrix = build_matrix(&layout, &state)?;
        let reduced = reduce_batch(&spolys, &matrix, &layout, field);
        let matrix_rows = matrix.rows.len();
        drop(matrix);
        let echelon = echelonize(&reduced, field, learning);

        if let Some(rec) = recorded {
            if !echelon.zero_rows.is_empty() {
                return Err(mismatch(it, "a pair not recorded as zero reduced to zero"));
            }
            if echelon.rows.len() != rec.new_elements as usize {
                return Err(mismatch(it, "number of new elements differs"));
            }
        }

        stats.iterations.push(IterationStats {
            degree: batch[0].degree,
            pairs: batch.len(),
            pairs_reduced: spolys.len(),
            zero_reductions: echelon.zero_rows.len(),
            matrix_rows,
            columns: layout.ncols(),
            new_elements: echelon.rows.len(),
        });

        if matches!(mode, Mode::Record) {
            records.push(IterationRecord {
                pairs: pair_ids,
                zero_pairs: echelon.zero_rows.iter().map(|&k| active[k] as u32).collect(),
                layout: Arc::clone(&layout),
                new_elements: echelon.rows.len() as u32,
            });
        }

        // rows come by increasing pivot column, i.e. decreasing lead
        for row in &echelon.rows {
            let monos = row.cols.iter().map(|&c| layout.monomials[c as usize]).collect();
            state.update(Polynomial::from_sorted(monos, row.vals.clone()));
        }
        state.iteration += 1;
    }

    if let Mode::Replay(trace) = mode {
        if state.iteration != trace.iterations.len() {
            return Err(mismatch(state.iteration, "fewer iterations than recorded"));
        }
    }

    let basis = interreduce(&state);
    let trace = matches!(mode, Mode::Record).then(|| LearningTrace {
        prime: field.modulus(),
        generator_leads,
        iterations: records,
    });
    Ok(GbOutput {
        basis,
        trace,
        stats,
    })
}

/// Drops alive elements whose lead is a multiple of another alive lead
/// (possible for input generators), then tail-reduces the rest.
fn interreduce(state: &GBState) -> Vec<Polynomial<u32>> {
    let field = state.field;
    let idx: Vec<usize> = (0..state.basis.len()).filter(|&k| state.alive[k]).collect();
    let alive: Vec<Polynomial<u32>> = idx
        .iter()
        .filter(|&&k| {
            !idx.iter()
                .any(|&o| o != k && state.lead(o).divides(state.lead(k)))
        })
        .map(|&k| state.basis[k].clone())
        .collect();
    let mut out: Vec<Polynomial<u32>> = alive
        .iter()
        .map(|g| {
            // tail monomials are below the own lead, so dividing by the
            // whole set never uses g itself
            let (monos, coeffs) = g.clone().into_parts();
            let tail = Polynomial::from_sorted(monos[1..].to_vec(), coeffs[1..].to_vec());
            let r = poly::reduce(&field, &tail, &alive);
            let lead = Polynomial::from_sorted(vec![monos[0]], vec![1]);
            lead.add(&field, &r)
        })
        .collect();
    out.sort_by(|a, b| b.monomials()[0].cmp(&a.monomials()[0]));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mono(e: &[u32]) -> Monomial {
        Monomial::pack(e, e.len()).unwrap()
    }

    fn fpoly(f: &PrimeField, terms: &[(i64, &[u32])]) -> Polynomial<u32> {
        Polynomial::normalize(
            f,
            terms.iter().map(|(c, e)| (mono(e), f.from_i64(*c))).collect(),
        )
    }

    fn f7() -> PrimeField {
        PrimeField::new(7).unwrap()
    }

    #[test]
    fn update_coprime_pair_discarded() {
        let f = f7();
        let mut st = GBState::new(f);
        st.update(fpoly(&f, &[(1, &[1, 0]), (1, &[0, 0])]));
        st.update(fpoly(&f, &[(1, &[0, 1]), (3, &[0, 0])]));
        assert_eq!(st.pairs().count(), 0);
        assert!(st.is_alive(0) && st.is_alive(1));
    }

    #[test]
    fn update_chain_criterion() {
        let f = f7();
        let mut st = GBState::new(f);
        st.update(fpoly(&f, &[(1, &[2, 0]), (1, &[0, 0])]));
        st.update(fpoly(&f, &[(1, &[1, 1]), (2, &[0, 0])]));
        st.update(fpoly(&f, &[(1, &[0, 2]), (3, &[0, 0])]));
        let pairs: Vec<(u32, u32)> = st.pairs().map(|p| (p.i, p.j)).collect();
        assert!(pairs.contains(&(0, 1)));
        assert!(pairs.contains(&(1, 2)));
        assert!(!pairs.contains(&(0, 2)));
    }

    #[test]
    fn update_old_pair_chain() {
        // leads x*z, y*z; adding z removes the pair (x*z, y*z) with lcm x*y*z
        let f = f7();
        let mut st = GBState::new(f);
        st.update(fpoly(&f, &[(1, &[1, 0, 1]), (1, &[0, 0, 0])]));
        st.update(fpoly(&f, &[(1, &[0, 1, 1]), (1, &[0, 0, 0])]));
        assert_eq!(st.pairs().count(), 1);
        st.update(fpoly(&f, &[(1, &[0, 0, 1]), (1, &[0, 0, 0])]));
        let pairs: Vec<(u32, u32)> = st.pairs().map(|p| (p.i, p.j)).collect();
        assert!(!pairs.contains(&(0, 1)));
        assert!(!st.is_alive(0) && !st.is_alive(1));
    }

    #[test]
    fn update_marks_dead() {
        let f = f7();
        let mut st = GBState::new(f);
        st.update(fpoly(&f, &[(1, &[2]), (1, &[0])]));
        st.update(fpoly(&f, &[(1, &[1]), (2, &[0])]));
        assert!(!st.is_alive(0));
        assert!(st.is_alive(1));
    }

    #[test]
    fn select_batch_minimal_degree() {
        let f = f7();
        let mut st = GBState::new(f);
        assert_eq!(st.select_batch(), Err(GbError::EmptyQueue));
        let one = Monomial::one(2);
        for (d, i, j) in [(3u32, 0u32, 1u32), (4, 0, 2), (3, 1, 2)] {
            let lcm = mono(&[d - 1, 1]);
            st.pairs.insert(CriticalPair { degree: d, lcm, i, j });
        }
        let batch = st.select_batch().unwrap();
        assert_eq!(batch.len(), 2);
        assert!(batch.iter().all(|p| p.degree == 3));
        let batch = st.select_batch().unwrap();
        assert_eq!(batch.len(), 1);
        assert_eq!(st.select_batch(), Err(GbError::EmptyQueue));
        let _ = one;
    }

    #[test]
    fn preprocess_irreducible_spoly() {
        let f = f7();
        let mut st = GBState::new(f);
        let g1 = fpoly(&f, &[(1, &[2, 0]), (1, &[0, 1])]);
        let g2 = fpoly(&f, &[(1, &[1, 1]), (1, &[0, 0])]);
        st.update(g1);
        st.update(g2);
        let pair = *st.pairs().next().unwrap();
        let s = st.spoly(&pair);
        assert_eq!(s, fpoly(&f, &[(1, &[0, 2]), (-1, &[1, 0])]));
        let layout = symbolic_preprocess(std::slice::from_ref(&s), &st, LayoutSource::Compute).unwrap();
        assert_eq!(layout.monomials, vec![mono(&[0, 2]), mono(&[1, 0])]);
        assert_eq!(layout.remainder_columns, vec![0, 1]);
        assert!(layout.reductors.is_empty());

        let empty = symbolic_preprocess(&[], &st, LayoutSource::Compute).unwrap();
        assert_eq!(*empty, SymbolicLayout::empty());

        let replayed = symbolic_preprocess(
            std::slice::from_ref(&s),
            &st,
            LayoutSource::Replay { layout: &layout, iteration: 0 },
        )
        .unwrap();
        assert_eq!(replayed, layout);
    }

    #[test]
    fn layout_invariant_union() {
        let f = f7();
        let mut st = GBState::new(f);
        st.update(fpoly(&f, &[(1, &[1, 1]), (1, &[0, 0])]));
        st.update(fpoly(&f, &[(1, &[0, 2]), (3, &[1, 0])]));
        let s = fpoly(&f, &[(1, &[2, 1]), (1, &[1, 2]), (2, &[0, 1])]);
        let layout = symbolic_preprocess(std::slice::from_ref(&s), &st, LayoutSource::Compute).unwrap();
        let mut union: BTreeSet<Monomial> = layout.remainder_monomials().copied().collect();
        for r in &layout.reductors {
            for t in st.basis()[r.basis as usize].monomials() {
                union.insert(t.mul(&r.shift).unwrap());
            }
        }
        let all: BTreeSet<Monomial> = layout.monomials.iter().copied().collect();
        assert_eq!(union, all);
        assert!(layout.monomials.windows(2).all(|w| w[0] > w[1]));
    }

    #[test]
    fn matrix_shares_coefficients_and_sorts() {
        let f = f7();
        let mut st = GBState::new(f);
        st.update(fpoly(&f, &[(1, &[1, 1]), (1, &[0, 0])]));
        // reductor g shifted by x and by y
        let s = fpoly(&f, &[(1, &[1, 2]), (1, &[2, 1])]);
        let layout = symbolic_preprocess(std::slice::from_ref(&s), &st, LayoutSource::Compute).unwrap();
        let m = build_matrix(&layout, &st).unwrap();
        assert_eq!(m.rows.len(), 2);
        assert_eq!(m.rows[0].coeffs, m.rows[1].coeffs);
        assert_eq!(m.row_coeffs(&m.rows[0]), &[1, 1]);
        assert_eq!(layout.monomials[m.rows[0].lead_column() as usize], mono(&[2, 1]));
        assert_eq!(layout.monomials[m.rows[1].lead_column() as usize], mono(&[1, 2]));

        let empty = build_matrix(&SymbolicLayout::empty(), &st).unwrap();
        assert!(empty.rows.is_empty());
    }

    #[test]
    fn reduce_batch_trivial_cases() {
        let f = f7();
        let mut st = GBState::new(f);
        let g = fpoly(&f, &[(1, &[1, 1]), (1, &[0, 0])]);
        st.update(g.clone());
        let irreducible = fpoly(&f, &[(1, &[0, 2]), (2, &[1, 0])]);
        let spolys = vec![irreducible.clone(), g.clone()];
        let layout = symbolic_preprocess(&spolys, &st, LayoutSource::Compute).unwrap();
        let m = build_matrix(&layout, &st).unwrap();
        let rows = reduce_batch(&spolys, &m, &layout, f);
        let expanded: Vec<(Monomial, u32)> = rows[0]
            .cols
            .iter()
            .zip(&rows[0].vals)
            .map(|(&c, &v)| (layout.monomials[c as usize], v))
            .collect();
        assert_eq!(
            expanded,
            irreducible.terms().map(|(m, c)| (*m, *c)).collect::<Vec<_>>()
        );
        assert!(rows[1].is_zero());
    }

    #[test]
    fn echelonize_examples() {
        let f = f7();
        let rows = vec![
            ReducedRow { cols: vec![0, 1], vals: vec![1, 2] },
            ReducedRow { cols: vec![0, 1], vals: vec![2, 4] },
        ];
        let e = echelonize(&rows, f, true);
        assert_eq!(e.rows, vec![ReducedRow { cols: vec![0, 1], vals: vec![1, 2] }]);
        assert_eq!(e.zero_rows, vec![1]);

        let zeros = vec![ReducedRow::default(), ReducedRow::default()];
        let e = echelonize(&zeros, f, true);
        assert!(e.rows.is_empty());
        assert_eq!(e.zero_rows, vec![0, 1]);
    }

    #[test]
    fn echelonize_full_rank_mod7() {
        // [[1 2 3] [0 1 4] [5 6 0]] is invertible mod 7 (det = 1 mod 7)
        let f = f7();
        let dense = [[1u32, 2, 3], [0, 1, 4], [5, 6, 0]];
        let rows: Vec<ReducedRow> = dense
            .iter()
            .map(|r| {
                let mut rr = ReducedRow::default();
                for (c, &v) in r.iter().enumerate() {
                    if v != 0 {
                        rr.cols.push(c as u32 * 3 + 1);
                        rr.vals.push(v);
                    }
                }
                rr
            })
            .collect();
        for learning in [true, false] {
            let e = echelonize(&rows, f, learning);
            assert_eq!(e.rows.len(), 3);
            for (k, r) in e.rows.iter().enumerate() {
                assert_eq!(r.cols, vec![k as u32 * 3 + 1]);
                assert_eq!(r.vals, vec![1]);
            }
        }
    }

    #[test]
    fn basis_with_unit() {
        let f = f7();
        let gens = vec![
            fpoly(&f, &[(1, &[1, 1]), (1, &[0, 0])]),
            fpoly(&f, &[(3, &[0, 0])]),
        ];
        let out = gbasis_modp(&gens, f, Mode::Plain).unwrap();
        assert_eq!(out.basis, vec![fpoly(&f, &[(1, &[0, 0])])]);
    }

    #[test]
    fn cyclic3_mod7() {
        let f = f7();
        let gens = vec![
            fpoly(&f, &[(1, &[1, 0, 0]), (1, &[0, 1, 0]), (1, &[0, 0, 1])]),
            fpoly(&f, &[(1, &[1, 1, 0]), (1, &[0, 1, 1]), (1, &[1, 0, 1])]),
            fpoly(&f, &[(1, &[1, 1, 1]), (-1, &[0, 0, 0])]),
        ];
        let out = gbasis_modp(&gens, f, Mode::Plain).unwrap();
        let expected = vec![
            fpoly(&f, &[(1, &[0, 0, 3]), (-1, &[0, 0, 0])]),
            fpoly(&f, &[(1, &[0, 2, 0]), (1, &[0, 1, 1]), (1, &[0, 0, 2])]),
            fpoly(&f, &[(1, &[1, 0, 0]), (1, &[0, 1, 0]), (1, &[0, 0, 1])]),
        ];
        assert_eq!(out.basis, expected);

        let rec = gbasis_modp(&gens, f, Mode::Record).unwrap();
        assert_eq!(rec.basis, expected);
        let trace = rec.trace.unwrap();
        let f11 = PrimeField::new(11).unwrap();
        let gens11: Vec<_> = gens
            .iter()
            .map(|g| g.map_coeffs(|&c| f11.from_i64(f.symmetric(c))))
            .collect();
        let plain = gbasis_modp(&gens11, f11, Mode::Plain).unwrap();
        let replay = gbasis_modp(&gens11, f11, Mode::Replay(&trace)).unwrap();
        assert_eq!(plain.basis, replay.basis);
    }

    #[test]
    fn replay_rejects_foreign_trace() {
        let f = f7();
        let a = vec![fpoly(&f, &[(1, &[1, 1]), (1, &[0, 0])])];
        let b = vec![fpoly(&f, &[(1, &[2, 0]), (1, &[0, 0])])];
        let trace = gbasis_modp(&a, f, Mode::Record).unwrap().trace.unwrap();
        assert!(matches!(
            gbasis_modp(&b, f, Mode::Replay(&trace)),
            Err(GbError::ReplayMismatch { .. })
        ));
    }
}
