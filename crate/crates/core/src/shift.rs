//! Transition matrices, stationary vectors, the inverse Markov measure and
//! cylinder probabilities on the one-sided shift over `{1..k}`.
//!
//! Symbols are stored 0-based. [`Word`] prints and parses 1-based,
//! comma-separated symbols, which is the form used in configs and reports.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{self, Field};

/// A finite word over `{0..k}` (printed and serialized 1-based, as `"1,2,1"`).
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub struct Word(pub Vec<usize>);

impl From<Word> for String {
    fn from(w: Word) -> String {
        w.to_string()
    }
}

impl TryFrom<String> for Word {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl Word {
    pub fn new(symbols: Vec<usize>) -> Self {
        Word(symbols)
    }

    /// Build from 1-based symbols, as written in configs.
    pub fn from_one_based(symbols: &[usize]) -> Result<Self> {
        symbols
            .iter()
            .map(|&s| s.checked_sub(1).ok_or_else(|| Error::Parse("symbols are 1-based; found 0".into())))
            .collect::<Result<Vec<_>>>()
            .map(Word)
    }

    pub fn to_one_based(&self) -> Vec<usize> {
        self.0.iter().map(|s| s + 1).collect()
    }

    pub fn symbols(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn first(&self) -> Option<usize> {
        self.0.first().copied()
    }

    pub fn last(&self) -> Option<usize> {
        self.0.last().copied()
    }

    pub fn reversed(&self) -> Word {
        Word(self.0.iter().rev().copied().collect())
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut symbols = self.0.clone();
        symbols.extend_from_slice(&other.0);
        Word(symbols)
    }

    /// The shifted word `σω` (drops the first symbol).
    pub fn shifted(&self) -> Word {
        Word(self.0.iter().skip(1).copied().collect())
    }

    pub fn check_alphabet(&self, k: usize) -> Result<()> {
        match self.0.iter().find(|&&s| s >= k) {
            Some(&symbol) => Err(Error::SymbolOutOfRange { symbol: symbol + 1, k }),
            None => Ok(()),
        }
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for s in &self.0 {
            if !first {
                f.write_str(",")?;
            }
            write!(f, "{}", s + 1)?;
            first = false;
        }
        Ok(())
    }
}

impl FromStr for Word {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() {
            return Ok(Word::default());
        }
        let symbols = s
            .split(',')
            .map(|t| t.trim().parse::<usize>().map_err(|e| Error::Parse(format!("{t:?}: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        Word::from_one_based(&symbols)
    }
}

/// Which Markov measure a cylinder or a sampled word refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    /// `ℙ`, built from `(P, p̄)`.
    Forward,
    /// `ℙ⁻`, built from the inverse matrix `(Q, p̄)`.
    Inverse,
}

/// Initial symbol of a sampled word.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Start {
    Stationary,
    State(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Classification {
    Primitive,
    IrreducibleNotPrimitive,
    Reducible,
}

impl Classification {
    pub fn is_irreducible(self) -> bool {
        !matches!(self, Classification::Reducible)
    }

    pub fn is_primitive(self) -> bool {
        matches!(self, Classification::Primitive)
    }
}

/// Row-stochastic `k × k` matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct TransitionMatrix<T = f64> {
    rows: Vec<Vec<T>>,
}

impl<T: Field> TransitionMatrix<T> {
    /// Validates squareness, nonnegative entries and row sums within
    /// [`Field::tolerance`] of one (exactly one for rationals). Entries may
    /// exceed one by the same tolerance.
    pub fn new(rows: Vec<Vec<T>>) -> Result<Self> {
        let k = rows.len();
        if k == 0 {
            return Err(Error::InvalidMatrix("matrix has no rows".into()));
        }
        let tol = T::tolerance();
        for (i, row) in rows.iter().enumerate() {
            if row.len() != k {
                return Err(Error::InvalidMatrix(format!("row {} has {} entries, expected {k}", i + 1, row.len())));
            }
            let ceiling = field::one::<T>() + tol.clone();
            if let Some(j) = row.iter().position(|p| *p < T::zero() || *p > ceiling) {
                return Err(Error::InvalidMatrix(format!(
                    "entry ({}, {}) = {:?} is outside [0, 1]",
                    i + 1,
                    j + 1,
                    row[j]
                )));
            }
            let total = field::sum(row.iter().cloned());
            if (total.clone() - field::one::<T>()).abs() > tol {
                return Err(Error::InvalidMatrix(format!("row {} sums to {} instead of 1", i + 1, total.to_f64())));
            }
        }
        Ok(TransitionMatrix { rows })
    }

    pub(crate) fn from_rows_unchecked(rows: Vec<Vec<T>>) -> Self {
        TransitionMatrix { rows }
    }

    pub fn k(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[Vec<T>] {
        &self.rows
    }

    pub fn entry(&self, i: usize, j: usize) -> &T {
        &self.rows[i][j]
    }

    pub fn to_f64(&self) -> TransitionMatrix<f64> {
        TransitionMatrix { rows: self.rows.iter().map(|r| r.iter().map(Field::to_f64).collect()).collect() }
    }

    fn positive_graph(&self) -> Vec<Vec<bool>> {
        self.rows.iter().map(|r| r.iter().map(|p| *p > T::zero()).collect()).collect()
    }

    /// Row vector times matrix.
    pub fn left_multiply(&self, v: &[T]) -> Vec<T> {
        let k = self.k();
        (0..k).map(|j| field::sum((0..k).map(|i| v[i].clone() * self.rows[i][j].clone()))).collect()
    }
}

/// `p̄` with `p̄P = p̄` and entries summing to one.
#[derive(Clone, Debug, PartialEq)]
pub struct StationaryVector<T = f64>(pub Vec<T>);

impl<T: Field> StationaryVector<T> {
    pub fn as_slice(&self) -> &[T] {
        &self.0
    }

    /// `‖p̄P − p̄‖∞` against `matrix`.
    pub fn residual(&self, matrix: &TransitionMatrix<T>) -> T {
        matrix
            .left_multiply(&self.0)
            .into_iter()
            .zip(&self.0)
            .map(|(a, b)| (a - b.clone()).abs())
            .fold(T::zero(), T::max_of)
    }
}

/// Primitive / irreducible / reducible, by graph connectivity and Boolean
/// squaring past Wielandt's bound.
pub fn classify_matrix<T: Field>(matrix: &TransitionMatrix<T>) -> Classification {
    let graph = matrix.positive_graph();
    if !strongly_connected(&graph) {
        return Classification::Reducible;
    }
    let k = graph.len();
    let bound = (k - 1) * (k - 1) + 1;
    let mut power = graph;
    let mut exponent = 1usize;
    while exponent < bound {
        power = boolean_product(&power, &power);
        exponent *= 2;
    }
    if power.iter().all(|row| row.iter().all(|&b| b)) {
        Classification::Primitive
    } else {
        Classification::IrreducibleNotPrimitive
    }
}

fn boolean_product(a: &[Vec<bool>], b: &[Vec<bool>]) -> Vec<Vec<bool>> {
    let k = a.len();
    (0..k).map(|i| (0..k).map(|j| (0..k).any(|l| a[i][l] && b[l][j])).collect()).collect()
}

fn reachable(graph: &[Vec<bool>], from: usize, transpose: bool) -> Vec<bool> {
    let k = graph.len();
    let mut seen = vec![false; k];
    let mut stack = vec![from];
    seen[from] = true;
    while let Some(i) = stack.pop() {
        for j in 0..k {
            let edge = if transpose { graph[j][i] } else { graph[i][j] };
            if edge && !seen[j] {
                seen[j] = true;
                stack.push(j);
            }
        }
    }
    seen
}

fn strongly_connected(graph: &[Vec<bool>]) -> bool {
    reachable(graph, 0, false).into_iter().all(|b| b) && reachable(graph, 0, true).into_iter().all(|b| b)
}

/// Stationary vector by a direct linear solve: the balance equations with the
/// last one replaced by `Σ p_i = 1`.
pub fn stationary_vector<T: Field>(matrix: &TransitionMatrix<T>) -> Result<StationaryVector<T>> {
    if !classify_matrix(matrix).is_irreducible() {
        return Err(Error::NotIrreducible);
    }
    let k = matrix.k();
    // a[j][i] = P_ij - δ_ij for the balance equation of column j.
    let mut a: Vec<Vec<T>> = (0..k)
        .map(|j| {
            (0..k)
                .map(|i| {
                    let delta = if i == j { field::one::<T>() } else { T::zero() };
                    matrix.entry(i, j).clone() - delta
                })
                .collect()
        })
        .collect();
    let mut rhs = vec![T::zero(); k];
    a[k - 1] = vec![field::one::<T>(); k];
    rhs[k - 1] = field::one::<T>();
    let solution = solve_linear(a, rhs).ok_or(Error::NotIrreducible)?;
    Ok(StationaryVector(solution))
}

/// Gaussian elimination with partial pivoting; `None` for a singular system.
#[allow(clippy::needless_range_loop)]
fn solve_linear<T: Field>(mut a: Vec<Vec<T>>, mut b: Vec<T>) -> Option<Vec<T>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n)
            .filter(|&r| !a[r][col].is_zero())
            .max_by(|&r, &s| a[r][col].abs().partial_cmp(&a[s][col].abs()).unwrap())?;
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            if a[row][col].is_zero() {
                continue;
            }
            let factor = a[row][col].clone() / a[col][col].clone();
            for c in col..n {
                let delta = factor.clone() * a[col][c].clone();
                a[row][c] = a[row][c].clone() - delta;
            }
            let delta = factor * b[col].clone();
            b[row] = b[row].clone() - delta;
        }
    }
    let mut x = vec![T::zero(); n];
    for row in (0..n).rev() {
        let tail = field::sum((row + 1..n).map(|c| a[row][c].clone() * x[c].clone()));
        x[row] = (b[row].clone() - tail) / a[row][row].clone();
    }
    Some(x)
}

/// Power iteration `p̂ ↦ p̂P` from the uniform vector, averaged over a
/// window to damp periodic chains. Kept as an independent cross-check of
/// [`stationary_vector`].
pub fn stationary_by_power_iteration(matrix: &TransitionMatrix<f64>, iterations: usize) -> Vec<f64> {
    let k = matrix.k();
    // Lazy chain (P + I)/2 has the same stationary vector and is aperiodic.
    let lazy = TransitionMatrix::from_rows_unchecked(
        (0..k).map(|i| (0..k).map(|j| 0.5 * matrix.entry(i, j) + if i == j { 0.5 } else { 0.0 }).collect()).collect(),
    );
    let mut v = vec![1.0 / k as f64; k];
    for _ in 0..iterations {
        v = lazy.left_multiply(&v);
        let total: f64 = v.iter().sum();
        v.iter_mut().for_each(|x| *x /= total);
    }
    v
}

/// The inverse matrix `q_ij = (p_j / p_i) p_ji`.
pub fn inverse_transition<T: Field>(
    matrix: &TransitionMatrix<T>,
    stationary: &StationaryVector<T>,
) -> Result<TransitionMatrix<T>> {
    let p = stationary.as_slice();
    if let Some(i) = p.iter().position(|x| x.is_zero()) {
        return Err(Error::ZeroStationaryEntry(i + 1));
    }
    let k = matrix.k();
    let rows =
        (0..k).map(|i| (0..k).map(|j| p[j].clone() / p[i].clone() * matrix.entry(j, i).clone()).collect()).collect();
    Ok(TransitionMatrix::from_rows_unchecked(rows))
}

/// An irreducible Markov shift: `P`, its stationary vector and the inverse matrix `Q`.
#[derive(Clone, Debug)]
pub struct MarkovShift<T = f64> {
    forward: TransitionMatrix<T>,
    inverse: TransitionMatrix<T>,
    stationary: StationaryVector<T>,
    classification: Classification,
}

impl<T: Field> MarkovShift<T> {
    pub fn new(matrix: TransitionMatrix<T>) -> Result<Self> {
        let classification = classify_matrix(&matrix);
        let stationary = stationary_vector(&matrix)?;
        let inverse = inverse_transition(&matrix, &stationary)?;
        Ok(MarkovShift { forward: matrix, inverse, stationary, classification })
    }

    pub fn k(&self) -> usize {
        self.forward.k()
    }

    pub fn matrix(&self, direction: Direction) -> &TransitionMatrix<T> {
        match direction {
            Direction::Forward => &self.forward,
            Direction::Inverse => &self.inverse,
        }
    }

    pub fn forward(&self) -> &TransitionMatrix<T> {
        &self.forward
    }

    pub fn inverse(&self) -> &TransitionMatrix<T> {
        &self.inverse
    }

    pub fn stationary(&self) -> &StationaryVector<T> {
        &self.stationary
    }

    pub fn classification(&self) -> Classification {
        self.classification
    }

    /// `p_{a₀} Π p_{aᵢ aᵢ₊₁}` under `ℙ` or `ℙ⁻`; the empty word has measure one.
    pub fn cylinder_measure(&self, word: &Word, direction: Direction) -> T {
        let Some(first) = word.first() else {
            return field::one::<T>();
        };
        let m = self.matrix(direction);
        word.symbols().windows(2).fold(self.stationary.0[first].clone(), |acc, w| acc * m.entry(w[0], w[1]).clone())
    }

    /// Product of the transition entries along `word` (no initial weight).
    pub fn transition_product(&self, word: &Word, direction: Direction) -> T {
        let m = self.matrix(direction);
        word.symbols().windows(2).fold(field::one::<T>(), |acc, w| acc * m.entry(w[0], w[1]).clone())
    }

    pub fn is_admissible(&self, word: &Word, direction: Direction) -> bool {
        let m = self.matrix(direction);
        word.symbols().windows(2).all(|w| *m.entry(w[0], w[1]) > T::zero())
    }

    /// A state `u` with `p_uj > 0` for every `j`.
    pub fn row_positive_state(&self) -> Option<usize> {
        (0..self.k()).find(|&u| self.forward.rows[u].iter().all(|p| *p > T::zero()))
    }
}

impl MarkovShift<f64> {
    /// Draw a word of the given length under `ℙ` or `ℙ⁻`.
    pub fn sample_word<R: Rng + ?Sized>(&self, length: usize, start: Start, direction: Direction, rng: &mut R) -> Word {
        let mut symbols = Vec::with_capacity(length);
        if length == 0 {
            return Word(symbols);
        }
        let mut state = match start {
            Start::Stationary => draw(self.stationary.as_slice(), rng),
            Start::State(s) => s,
        };
        symbols.push(state);
        let m = self.matrix(direction);
        for _ in 1..length {
            state = draw(&m.rows[state], rng);
            symbols.push(state);
        }
        Word(symbols)
    }

    /// Seeded convenience wrapper around [`MarkovShift::sample_word`].
    pub fn sample_word_seeded(&self, length: usize, start: Start, direction: Direction, seed: u64) -> Word {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.sample_word(length, start, direction, &mut rng)
    }
}

/// Categorical draw by inverse CDF; falls back to the last positive entry
/// when rounding leaves the cumulative sum just under `u`.
pub(crate) fn draw<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (i, &w) in weights.iter().enumerate() {
        acc += w;
        if u < acc {
            return i;
        }
    }
    weights.iter().rposition(|&w| w > 0.0).unwrap_or(0)
}
