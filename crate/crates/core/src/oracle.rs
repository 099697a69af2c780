//! Exact enumeration over all words of bounded length.
//!
//! Computes `ℙ⁻(Sₙˣ(s))`, the measure of the words whose reverse composition
//! image projects onto a set containing `x`, and `ℙ⁻(Σ_ℓ^W)`, the measure of
//! the words with no `N`-block equal to `W`, and checks the inequalities that
//! tie them together: the block-avoidance bound, injectivity and
//! measure-monotonicity of the block substitution `F_ℓ`, and the geometric
//! decay `ℙ⁻(Σ_ℓ^W) ≤ (1 − ρ₀)^ℓ`.
//!
//! Everything is generic over [`Field`]: `f64` for speed, `BigRational`
//! when the verdicts must not depend on rounding.

use std::collections::HashSet;

use num_rational::BigRational;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::{self, Field};
use crate::maps::{MapKind, MapSystem};
use crate::shift::{Direction, MarkovShift, TransitionMatrix, Word};
use crate::splitting::NormalizedPair;

/// Largest number of words a single enumeration may visit.
pub const ENUMERATION_BUDGET: u128 = 1 << 24;

/// Default number of equally spaced grid points (endpoints included).
pub const DEFAULT_GRID_POINTS: usize = 33;

fn check_budget(k: usize, n: usize) -> Result<u128> {
    let words = (k as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
    if words > ENUMERATION_BUDGET {
        Err(Error::BudgetExceeded { words, budget: ENUMERATION_BUDGET })
    } else {
        Ok(words)
    }
}

/// The maps, ambient box and inverse shift of a system, in one field.
#[derive(Clone, Debug)]
pub struct OracleSystem<T> {
    maps: Vec<MapKind<T>>,
    lo: Vec<T>,
    hi: Vec<T>,
    shift: MarkovShift<T>,
    exact_enclosures: bool,
}

impl<T: Field> OracleSystem<T> {
    /// Converts the exact description of `sys` into `T`. Fails when the
    /// transition matrix is not irreducible, or in exact mode when its
    /// rational rows do not sum to one.
    pub fn new(sys: &MapSystem) -> Result<Self> {
        let rows = sys.exact_matrix_rows().iter().map(|r| r.iter().map(T::from_exact).collect()).collect();
        let shift = MarkovShift::new(TransitionMatrix::new(rows)?)?;
        let (lo, hi) = sys.exact_ambient();
        Ok(OracleSystem {
            maps: sys.maps().iter().map(|f| f.exact.map_field(T::from_exact)).collect(),
            lo: lo.iter().map(T::from_exact).collect(),
            hi: hi.iter().map(T::from_exact).collect(),
            shift,
            // Chained interval images are exact projections only in one dimension.
            exact_enclosures: sys.dim() == 1,
        })
    }

    pub fn shift(&self) -> &MarkovShift<T> {
        &self.shift
    }

    pub fn k(&self) -> usize {
        self.maps.len()
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    /// Whether `π_s` of the chained enclosures equals `π_s` of the true images.
    pub fn enclosures_are_exact(&self) -> bool {
        self.exact_enclosures
    }

    /// Enclosure of `f_{w₀}∘⋯∘f_{w_{n−1}}(M)`.
    pub fn reverse_bounds(&self, w: &Word) -> Result<(Vec<T>, Vec<T>)> {
        w.symbols()
            .iter()
            .rev()
            .try_fold((self.lo.clone(), self.hi.clone()), |(l, h), &s| self.maps[s].image_bounds(&l, &h))
    }

    /// `n_points` equally spaced points of `π_s(M)`, endpoints included.
    pub fn grid(&self, s: usize, n_points: usize) -> Vec<T> {
        let (lo, hi) = (self.lo[s].clone(), self.hi[s].clone());
        if n_points <= 1 {
            return vec![lo];
        }
        let steps = T::from_f64((n_points - 1) as f64);
        (0..n_points).map(|i| lo.clone() + (hi.clone() - lo.clone()) * T::from_f64(i as f64) / steps.clone()).collect()
    }

    /// Right-to-left depth-first enumeration of every inverse-admissible word
    /// of length `n`, calling `visit(word, measure, lo_s, hi_s)` at each leaf.
    /// Partitioned by the innermost symbol; partitions are returned in order.
    fn enumerate<A, V>(&self, n: usize, s: usize, init: impl Fn() -> A + Sync, visit: V) -> Result<Vec<A>>
    where
        A: Send,
        V: Fn(&mut A, &[usize], &T, &T, &T) + Sync,
    {
        check_budget(self.k(), n)?;
        if n == 0 {
            let mut acc = init();
            visit(&mut acc, &[], &field::one::<T>(), &self.lo[s], &self.hi[s]);
            return Ok(vec![acc]);
        }
        (0..self.k())
            .into_par_iter()
            .map(|last| -> Result<A> {
                let mut acc = init();
                let mut word = vec![0usize; n];
                word[n - 1] = last;
                let (l, h) = self.maps[last].image_bounds(&self.lo, &self.hi)?;
                self.descend(n - 1, &mut word, field::one::<T>(), l, h, s, &mut acc, &visit)?;
                Ok(acc)
            })
            .collect()
    }

    #[allow(clippy::too_many_arguments)]
    fn descend<A, V>(
        &self,
        pos: usize,
        word: &mut [usize],
        inner: T,
        lo: Vec<T>,
        hi: Vec<T>,
        s: usize,
        acc: &mut A,
        visit: &V,
    ) -> Result<()>
    where
        V: Fn(&mut A, &[usize], &T, &T, &T),
    {
        if pos == 0 {
            let measure = self.shift.stationary().0[word[0]].clone() * inner;
            visit(acc, word, &measure, &lo[s], &hi[s]);
            return Ok(());
        }
        let next = word[pos];
        let q = self.shift.inverse();
        for a in 0..self.k() {
            let step = q.entry(a, next);
            if step.is_zero() {
                continue;
            }
            word[pos - 1] = a;
            let (l, h) = self.maps[a].image_bounds(&lo, &hi)?;
            self.descend(pos - 1, word, step.clone() * inner.clone(), l, h, s, acc, visit)?;
        }
        Ok(())
    }

    /// `ℙ⁻(Sₙˣ(s))`: total inverse measure of the length-`n` words whose
    /// enclosure projection `π_s` contains `x` (closed intervals).
    pub fn measure_s(&self, x: &T, s: usize, n: usize) -> Result<T> {
        if s >= self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: s + 1 });
        }
        if *x < self.lo[s] || *x > self.hi[s] {
            return Err(Error::OutsideDomain);
        }
        let parts = self.enumerate(n, s, T::zero, |acc, _, m, lo, hi| {
            if lo <= x && x <= hi {
                *acc = acc.clone() + m.clone();
            }
        })?;
        Ok(field::sum(parts))
    }
}

/// Encode a word as a base-`k` integer (first symbol most significant).
fn encode(word: &[usize], k: usize) -> u64 {
    word.iter().fold(0u64, |acc, &s| acc * k as u64 + s as u64)
}

/// `F_ℓ`: replace every `N`-block of `c` equal to `w` by `w2`.
pub fn substitute_f(c: &Word, w: &Word, w2: &Word) -> Result<Word> {
    let n = w.len();
    if n == 0 || w2.len() != n || c.len() % n != 0 {
        return Err(Error::LengthMismatch(format!(
            "|C| = {}, |W| = {}, |W'| = {}; need |W| = |W'| > 0 dividing |C|",
            c.len(),
            w.len(),
            w2.len()
        )));
    }
    Ok(Word(substituted(c.symbols(), w.symbols(), w2.symbols())))
}

fn substituted(c: &[usize], w: &[usize], w2: &[usize]) -> Vec<usize> {
    c.chunks(w.len()).flat_map(|block| if block == w { w2 } else { block }).copied().collect()
}

/// `ℙ⁻(Σ_ℓ^W)`: inverse measure of the length-`ℓN` words none of whose
/// blocks at offsets `0, N, …, (ℓ−1)N` equals `W`. Depth-first, pruning at
/// every completed `W` block.
pub fn measure_sigma<T: Field>(shift: &MarkovShift<T>, w: &Word, ell: usize) -> Result<T> {
    if w.is_empty() {
        return Err(Error::EmptyWord);
    }
    w.check_alphabet(shift.k())?;
    let total = w.len() * ell;
    check_budget(shift.k(), total)?;
    if ell == 0 {
        return Ok(field::one::<T>());
    }
    let parts: Vec<T> = (0..shift.k())
        .into_par_iter()
        .map(|first| {
            let mut word = vec![first; total];
            let start = shift.stationary().0[first].clone();
            if start.is_zero() {
                return T::zero();
            }
            sigma_descend(shift, w.symbols(), &mut word, 1, start)
        })
        .collect();
    Ok(field::sum(parts))
}

fn sigma_descend<T: Field>(shift: &MarkovShift<T>, w: &[usize], word: &mut [usize], pos: usize, measure: T) -> T {
    let n = w.len();
    if pos % n == 0 && word[pos - n..pos] == *w {
        return T::zero();
    }
    if pos == word.len() {
        return measure;
    }
    let q = shift.inverse();
    let prev = word[pos - 1];
    let mut total = T::zero();
    for a in 0..shift.k() {
        let step = q.entry(prev, a);
        if step.is_zero() {
            continue;
        }
        word[pos] = a;
        total = total + sigma_descend(shift, w, word, pos + 1, measure.clone() * step.clone());
    }
    total
}

/// `ρ = min_j q_{jW₀} q_{W₀W₁}⋯q_{W_{N−2}W_{N−1}}`.
pub fn rho<T: Field>(shift: &MarkovShift<T>, w: &Word) -> T {
    let inner = shift.transition_product(w, Direction::Inverse);
    let first = w.first().expect("nonempty word");
    let q = shift.inverse();
    (0..shift.k()).map(|j| q.entry(j, first).clone() * inner.clone()).reduce(T::min_of).unwrap_or_else(T::zero)
}

/// `ρ₀ = min(ρ, ℙ⁻(W))`.
pub fn rho0<T: Field>(shift: &MarkovShift<T>, w: &Word) -> T {
    T::min_of(rho(shift, w), shift.cylinder_measure(w, Direction::Inverse))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Holds,
    /// Holds for the chained-enclosure relaxation (inexact enclosures).
    HoldsForRelaxation,
    Fails,
}

impl Verdict {
    pub fn is_failure(self) -> bool {
        self == Verdict::Fails
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Holds => "holds",
            Verdict::HoldsForRelaxation => "holds-for-relaxation",
            Verdict::Fails => "fails",
        }
    }
}

/// One `(ℓ, x)` check of `ℙ⁻(S_{ℓN}ˣ(s)) ≤ ℙ⁻(Σ_ℓ^W)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OracleReport {
    pub ell: usize,
    pub x: f64,
    pub s: usize,
    pub lhs: f64,
    pub rhs: f64,
    /// `p/q` strings in exact mode.
    pub lhs_exact: Option<String>,
    pub rhs_exact: Option<String>,
    pub verdict: Verdict,
    /// `F_ℓ` is injective on the admissible words of `Σₓ^ℓ(s)`.
    pub injective: bool,
    /// `ℙ⁻(C) ≤ ℙ⁻(F_ℓ(C))` for every such word.
    pub measure_nondecreasing: bool,
    /// Admissible words whose enclosure contains `x`.
    pub words_containing_x: u64,
}

/// `ℙ⁻(Σ_ℓ^W)` against `(1 − ρ₀)^ℓ`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GeometricReport {
    pub ell: usize,
    pub sigma: f64,
    pub bound: f64,
    pub sigma_exact: Option<String>,
    pub verdict: Verdict,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OracleRun {
    pub arithmetic: &'static str,
    pub s: usize,
    pub block_length: usize,
    pub w: Word,
    pub w_prime: Word,
    pub measure_w: f64,
    pub rho: f64,
    pub rho0: f64,
    /// `k^(ℓN)` for each `ℓ = 1..=ℓ_max`.
    pub enumerated_words: Vec<u128>,
    pub reports: Vec<OracleReport>,
    pub geometric: Vec<GeometricReport>,
}

impl OracleRun {
    pub fn all_hold(&self) -> bool {
        self.reports.iter().all(|r| !r.verdict.is_failure() && r.injective && r.measure_nondecreasing)
            && self.geometric.iter().all(|g| !g.verdict.is_failure())
    }
}

fn exact_string<T: Field>(x: &T) -> Option<String> {
    T::is_exact().then(|| x.to_string())
}

/// Parameters for [`verify_bounds`].
#[derive(Clone, Debug)]
pub struct OracleParams {
    pub s: usize,
    pub ell_max: usize,
    /// `ℓ` range of the geometric check (it needs no `x` grid, so it can go further).
    pub geometric_ell_max: usize,
    pub grid_points: usize,
}

impl Default for OracleParams {
    fn default() -> Self {
        OracleParams { s: 0, ell_max: 6, geometric_ell_max: 10, grid_points: DEFAULT_GRID_POINTS }
    }
}

/// Run every check for one projection `s`.
///
/// `W` is the lower-measure word of the pair (ties keep `ξ`). Fails with
/// [`Error::HypothesisViolated`] if the pair has unequal lengths, different
/// first symbols, `ℙ⁻(W) = 0`, or enclosures of the two reverse compositions
/// that are not disjoint in every projection.
pub fn verify_bounds<T: Field>(
    sys: &OracleSystem<T>,
    pair: &NormalizedPair,
    params: &OracleParams,
) -> Result<OracleRun> {
    let shift = sys.shift();
    let (xi, eta) = (&pair.xi, &pair.eta);
    if xi.is_empty() || xi.len() != eta.len() {
        return Err(Error::HypothesisViolated("the pair must have equal nonzero length".into()));
    }
    if xi.first() != eta.first() {
        return Err(Error::HypothesisViolated("the pair must share its first symbol".into()));
    }
    xi.check_alphabet(sys.k())?;
    eta.check_alphabet(sys.k())?;
    let (w, w2) = pair.ordered(shift);
    let measure_w = shift.cylinder_measure(&w, Direction::Inverse);
    if measure_w.is_zero() {
        return Err(Error::HypothesisViolated(format!("P⁻([{w}]) = 0")));
    }
    let (l1, h1) = sys.reverse_bounds(&w)?;
    let (l2, h2) = sys.reverse_bounds(&w2)?;
    if let Some(s) = (0..sys.dim()).find(|&s| !(h1[s] < l2[s] || h2[s] < l1[s])) {
        return Err(Error::HypothesisViolated(format!("images of [{w}] and [{w2}] overlap in coordinate {}", s + 1)));
    }
    let s = params.s;
    if s >= sys.dim() {
        return Err(Error::DimensionMismatch { expected: sys.dim(), got: s + 1 });
    }
    let block = w.len();
    let k = sys.k();
    let slack = T::tolerance();
    let grid = sys.grid(s, params.grid_points);
    let rho_t = rho(shift, &w);
    let rho0_t = rho0(shift, &w);
    let holds = if sys.enclosures_are_exact() { Verdict::Holds } else { Verdict::HoldsForRelaxation };

    let mut reports = Vec::new();
    let mut enumerated_words = Vec::new();
    for ell in 1..=params.ell_max {
        let n = ell * block;
        enumerated_words.push(check_budget(k, n)?);
        let rhs = measure_sigma(shift, &w, ell)?;
        let init = || XAcc::<T>::new(grid.len());
        let parts = sys.enumerate(n, s, init, |acc, word, measure, lo, hi| {
            let first = grid.partition_point(|x| x < lo);
            let last = grid.partition_point(|x| x <= hi);
            if first >= last {
                return;
            }
            let image = substituted(word, w.symbols(), w2.symbols());
            let image_measure = shift.cylinder_measure(&Word(image.clone()), Direction::Inverse);
            let nondecreasing = *measure <= image_measure + slack.clone();
            let code = encode(&image, k);
            for i in first..last {
                acc.lhs[i] = acc.lhs[i].clone() + measure.clone();
                acc.count[i] += 1;
                acc.nondecreasing[i] &= nondecreasing;
                if !acc.images[i].insert(code) {
                    acc.injective[i] = false;
                }
            }
        })?;
        let merged = parts.into_iter().reduce(XAcc::merge).expect("at least one partition");
        for (i, x) in grid.iter().enumerate() {
            let lhs = &merged.lhs[i];
            let verdict = if *lhs <= rhs.clone() + slack.clone() { holds } else { Verdict::Fails };
            reports.push(OracleReport {
                ell,
                x: x.to_f64(),
                s,
                lhs: lhs.to_f64(),
                rhs: rhs.to_f64(),
                lhs_exact: exact_string(lhs),
                rhs_exact: exact_string(&rhs),
                verdict,
                injective: merged.injective[i],
                measure_nondecreasing: merged.nondecreasing[i],
                words_containing_x: merged.count[i],
            });
        }
    }

    let geometric = geometric_bounds(shift, &w, &rho0_t, params.geometric_ell_max)?;
    Ok(OracleRun {
        arithmetic: if T::is_exact() { "exact-rational" } else { "float" },
        s,
        block_length: block,
        w: w.clone(),
        w_prime: w2.clone(),
        measure_w: measure_w.to_f64(),
        rho: rho_t.to_f64(),
        rho0: rho0_t.to_f64(),
        enumerated_words,
        reports,
        geometric,
    })
}

/// `ℙ⁻(Σ_ℓ^W) ≤ (1 − ρ₀)^ℓ` for `ℓ = 1..=ell_max`.
pub fn geometric_bounds<T: Field>(
    shift: &MarkovShift<T>,
    w: &Word,
    rho0: &T,
    ell_max: usize,
) -> Result<Vec<GeometricReport>> {
    let slack = T::tolerance();
    let base = field::one::<T>() - rho0.clone();
    (1..=ell_max)
        .map(|ell| {
            let sigma = measure_sigma(shift, w, ell)?;
            let bound = field::powi(&base, ell as u32);
            let verdict = if sigma <= bound.clone() + slack.clone() { Verdict::Holds } else { Verdict::Fails };
            Ok(GeometricReport {
                ell,
                sigma: sigma.to_f64(),
                bound: bound.to_f64(),
                sigma_exact: exact_string(&sigma),
                verdict,
            })
        })
        .collect()
}

struct XAcc<T> {
    lhs: Vec<T>,
    count: Vec<u64>,
    nondecreasing: Vec<bool>,
    injective: Vec<bool>,
    images: Vec<HashSet<u64>>,
}

impl<T: Field> XAcc<T> {
    fn new(n: usize) -> Self {
        XAcc {
            lhs: vec![T::zero(); n],
            count: vec![0; n],
            nondecreasing: vec![true; n],
            injective: vec![true; n],
            images: vec![HashSet::new(); n],
        }
    }

    fn merge(mut self, other: XAcc<T>) -> Self {
        for i in 0..self.lhs.len() {
            self.lhs[i] = self.lhs[i].clone() + other.lhs[i].clone();
            self.count[i] += other.count[i];
            self.nondecreasing[i] &= other.nondecreasing[i];
            self.injective[i] &= other.injective[i];
            for code in &other.images[i] {
                if !self.images[i].insert(*code) {
                    self.injective[i] = false;
                }
            }
        }
        self
    }
}

/// [`verify_bounds`] in floating point.
pub fn verify_bounds_f64(sys: &MapSystem, pair: &NormalizedPair, params: &OracleParams) -> Result<OracleRun> {
    verify_bounds(&OracleSystem::<f64>::new(sys)?, pair, params)
}

/// [`verify_bounds`] in exact rational arithmetic.
pub fn verify_bounds_exact(sys: &MapSystem, pair: &NormalizedPair, params: &OracleParams) -> Result<OracleRun> {
    verify_bounds(&OracleSystem::<BigRational>::new(sys)?, pair, params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::parse_exact;
    use crate::maps::MapKind;
    use crate::splitting::{normalize_witness, NormalizeMode};
    use crate::systems;
    use proptest::prelude::*;

    fn w(s: &str) -> Word {
        s.parse().unwrap()
    }

    fn r(s: &str) -> BigRational {
        parse_exact(s).unwrap()
    }

    fn pair_for(sys: &MapSystem) -> NormalizedPair {
        let (a, b) = systems::reference_witness();
        normalize_witness(sys, &a, &b, NormalizeMode::Primitive).unwrap()
    }

    /// Left-to-right brute force through the public map-system API.
    fn brute_measure_s(sys: &MapSystem, x: f64, s: usize, n: usize) -> f64 {
        let shift = sys.shift().unwrap();
        let k = sys.k();
        (0..k.pow(n as u32))
            .map(|mut code| {
                let mut word = vec![0; n];
                for slot in word.iter_mut().rev() {
                    *slot = code % k;
                    code /= k;
                }
                Word(word)
            })
            .filter(|word| {
                let (lo, hi) = sys.reverse_enclosure(word).unwrap().projection(s);
                lo <= x && x <= hi
            })
            .map(|word| shift.cylinder_measure(&word, Direction::Inverse))
            .sum()
    }

    /// Transfer-matrix evaluation of the block-avoidance measure.
    fn sigma_by_blocks(shift: &MarkovShift<f64>, w: &Word, ell: usize) -> f64 {
        let k = shift.k();
        let n = w.len();
        let q = shift.inverse();
        // block[i][j]: total Q-weight of N-blocks (≠ W) entered from i and ending in j.
        let blocks: Vec<Word> = (0..k.pow(n as u32))
            .map(|mut code| {
                let mut b = vec![0; n];
                for slot in b.iter_mut().rev() {
                    *slot = code % k;
                    code /= k;
                }
                Word(b)
            })
            .filter(|b| b != w)
            .collect();
        let mut v: Vec<f64> = vec![0.0; k];
        for b in &blocks {
            v[b.last().unwrap()] += shift.cylinder_measure(b, Direction::Inverse);
        }
        for _ in 1..ell {
            let mut next = vec![0.0; k];
            for (i, &vi) in v.iter().enumerate() {
                for b in &blocks {
                    next[b.last().unwrap()] +=
                        vi * q.entry(i, b.first().unwrap()) * shift.transition_product(b, Direction::Inverse);
                }
            }
            v = next;
        }
        if ell == 0 {
            1.0
        } else {
            v.iter().sum()
        }
    }

    #[test]
    fn measure_s_examples() {
        let sys = OracleSystem::<BigRational>::new(&systems::cantor_iid()).unwrap();
        assert_eq!(sys.measure_s(&r("1/2"), 0, 0).unwrap(), r("1"));
        assert_eq!(sys.measure_s(&r("1/2"), 0, 1).unwrap(), r("0"));
        assert_eq!(sys.measure_s(&r("0"), 0, 5).unwrap(), r("1/32"));
        assert_eq!(sys.measure_s(&r("3/2"), 0, 1), Err(Error::OutsideDomain));
        assert!(matches!(sys.measure_s(&r("0"), 0, 25), Err(Error::BudgetExceeded { .. })));
    }

    #[test]
    fn measure_s_matches_brute_force() {
        for sys in [systems::cantor_markov(), systems::moebius_pair(), systems::diagonal_2d()] {
            let oracle = OracleSystem::<f64>::new(&sys).unwrap();
            for s in 0..sys.dim() {
                for x in oracle.grid(s, 9) {
                    for n in 0..7 {
                        let fast = oracle.measure_s(&x, s, n).unwrap();
                        let slow = brute_measure_s(&sys, x, s, n);
                        assert!((fast - slow).abs() < 1e-14, "x={x} n={n}: {fast} vs {slow}");
                    }
                }
            }
        }
    }

    #[test]
    fn measure_sigma_examples() {
        let shift = OracleSystem::<BigRational>::new(&systems::cantor_iid()).unwrap().shift().clone();
        assert_eq!(measure_sigma(&shift, &w("1"), 3).unwrap(), r("1/8"));
        assert_eq!(measure_sigma(&shift, &w("1,1"), 0).unwrap(), r("1"));
        // q₂₂ = 0 makes (2,2) inverse-inadmissible: nothing to avoid.
        let blocked = MapSystem::from_f64(
            &[0.0],
            &[1.0],
            vec![
                MapKind::Affine { matrix: vec![vec![0.5]], offset: vec![0.0] },
                MapKind::Affine { matrix: vec![vec![0.5]], offset: vec![0.5] },
            ],
            vec![vec![0.5, 0.5], vec![1.0, 0.0]],
        )
        .unwrap();
        let shift = OracleSystem::<BigRational>::new(&blocked).unwrap().shift().clone();
        for ell in 0..5 {
            assert_eq!(measure_sigma(&shift, &w("2,2"), ell).unwrap(), r("1"));
        }
    }

    #[test]
    fn measure_sigma_matches_block_transfer() {
        for sys in [systems::cantor_markov(), systems::moebius_pair(), systems::diagonal_2d()] {
            let shift = sys.shift().unwrap();
            for word in ["1", "2", "1,1", "1,2", "2,1,2"] {
                for ell in 0..5 {
                    let a = measure_sigma(shift, &w(word), ell).unwrap();
                    let b = sigma_by_blocks(shift, &w(word), ell);
                    assert!((a - b).abs() < 1e-14, "{word} ell={ell}: {a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn substitution_examples() {
        assert_eq!(substitute_f(&w("1,1,2,1"), &w("1,1"), &w("1,2")).unwrap(), w("1,2,2,1"));
        assert_eq!(substitute_f(&w("2,2,2,1"), &w("1,1"), &w("1,2")).unwrap(), w("2,2,2,1"));
        assert_eq!(substitute_f(&w("1,1,1,1"), &w("1,1"), &w("1,2")).unwrap(), w("1,2,1,2"));
        // The block boundary matters: (2,1,1,2) has no aligned (1,1) block.
        assert_eq!(substitute_f(&w("2,1,1,2"), &w("1,1"), &w("1,2")).unwrap(), w("2,1,1,2"));
        assert!(matches!(substitute_f(&w("1,1,1"), &w("1,1"), &w("1,2")), Err(Error::LengthMismatch(_))));
        assert!(matches!(substitute_f(&w("1,1"), &w("1,1"), &w("1")), Err(Error::LengthMismatch(_))));
    }

    #[test]
    fn iid_cantor_geometric_bound_is_attained() {
        let sys = systems::cantor_iid();
        let oracle = OracleSystem::<BigRational>::new(&sys).unwrap();
        let pair = pair_for(&sys);
        let (wlow, _) = pair.ordered(oracle.shift());
        assert_eq!(wlow, w("1,1"));
        assert_eq!(rho0(oracle.shift(), &wlow), r("1/4"));
        let rows = geometric_bounds(oracle.shift(), &wlow, &r("1/4"), 6).unwrap();
        for row in rows {
            assert_eq!(row.sigma_exact.as_deref(), Some(r("3/4").pow(row.ell as i32).to_string().as_str()));
            assert_eq!(row.verdict, Verdict::Holds);
        }
    }

    #[test]
    fn verify_bounds_holds_on_reference_systems() {
        let params = OracleParams { ell_max: 4, geometric_ell_max: 5, ..Default::default() };
        for sys in [systems::cantor_iid(), systems::cantor_markov(), systems::moebius_pair(), systems::diagonal_2d()] {
            let pair = pair_for(&sys);
            let float = verify_bounds_f64(&sys, &pair, &params).unwrap();
            let exact = verify_bounds_exact(&sys, &pair, &params).unwrap();
            assert!(float.all_hold());
            assert!(exact.all_hold());
            let verdicts = |run: &OracleRun| run.reports.iter().map(|r| r.verdict).collect::<Vec<_>>();
            assert_eq!(verdicts(&float), verdicts(&exact));
            let n = pair.len() as u32;
            assert_eq!(exact.enumerated_words, (1..=4u32).map(|l| 2u128.pow(l * n)).collect::<Vec<_>>());
            if sys.dim() == 2 {
                assert_eq!(exact.reports[0].verdict, Verdict::HoldsForRelaxation);
            }
        }
    }

    #[test]
    fn hypothesis_violations() {
        let sys = systems::cantor_iid();
        let oracle = OracleSystem::<f64>::new(&sys).unwrap();
        let params = OracleParams::default();
        let bad = |xi: &str, eta: &str| NormalizedPair {
            xi: w(xi),
            eta: w(eta),
            mode: NormalizeMode::Primitive,
            construction: crate::splitting::Construction::Reversed,
        };
        for (xi, eta) in [("1,1", "1"), ("1,1", "2,1"), ("1,1", "1,1")] {
            assert!(matches!(verify_bounds(&oracle, &bad(xi, eta), &params), Err(Error::HypothesisViolated(_))));
        }
        let blocked = MapSystem::from_f64(
            &[0.0],
            &[1.0],
            vec![
                MapKind::Affine { matrix: vec![vec![1.0 / 3.0]], offset: vec![0.0] },
                MapKind::Affine { matrix: vec![vec![1.0 / 3.0]], offset: vec![2.0 / 3.0] },
            ],
            vec![vec![0.5, 0.5], vec![1.0, 0.0]],
        )
        .unwrap();
        let oracle = OracleSystem::<f64>::new(&blocked).unwrap();
        let err = verify_bounds(&oracle, &bad("2,2", "2,1"), &params).unwrap_err();
        assert!(matches!(err, Error::HypothesisViolated(ref m) if m.contains("= 0")), "{err}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn measure_s_is_nonincreasing_in_n(i in 0usize..33, which in 0usize..3) {
            let sys = [systems::cantor_iid(), systems::cantor_markov(), systems::moebius_pair()][which].clone();
            let oracle = OracleSystem::<BigRational>::new(&sys).unwrap();
            let x = oracle.grid(0, 33)[i].clone();
            let mut prev = oracle.measure_s(&x, 0, 0).unwrap();
            for n in 1..9 {
                let next = oracle.measure_s(&x, 0, n).unwrap();
                prop_assert!(next <= prev);
                prev = next;
            }
        }

        #[test]
        fn measure_sigma_is_nonincreasing_in_ell(word in proptest::collection::vec(0usize..2, 1..4), which in 0usize..3) {
            let sys = [systems::cantor_iid(), systems::cantor_markov(), systems::moebius_pair()][which].clone();
            let shift = OracleSystem::<BigRational>::new(&sys).unwrap().shift().clone();
            let word = Word(word);
            let mut prev = measure_sigma(&shift, &word, 0).unwrap();
            for ell in 1..5 {
                let next = measure_sigma(&shift, &word, ell).unwrap();
                prop_assert!(next <= prev);
                prev = next;
            }
        }
    }
}
