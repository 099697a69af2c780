//! The splitting condition: certification by order separation of monotone
//! maps, finite-horizon verification, witness search and normalization of a
//! witness to an equal-length pair of inverse-admissible words.

use std::collections::VecDeque;

use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::Field;
use crate::maps::{IntervalBox, MapSystem, Sign};
use crate::shift::{Direction, MarkovShift, TransitionMatrix, Word};

/// How a witness was certified.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Certificate {
    /// Strict order separation for a monotone class `S(t)`; valid for all `n`.
    MonotoneClass { t: Vec<Sign> },
    /// One-dimensional injective maps with disjoint images; valid for all `n`.
    InjectiveInterval,
    /// Disjoint chained enclosures for every prefix up to `n_max`.
    FiniteHorizon { n_max: usize },
}

/// Words `a`, `b` with a common last symbol and the enclosures of
/// `M₁ = f_{a_ℓ}∘⋯∘f_{a₁}(M)` and `M₂ = f_{b_r}∘⋯∘f_{b₁}(M)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SplitWitness {
    pub word_a: Word,
    pub word_b: Word,
    pub m1: IntervalBox,
    pub m2: IntervalBox,
    pub certified_by: Certificate,
}

type ExactBounds = (Vec<BigRational>, Vec<BigRational>);

fn exact_forward_bounds(sys: &MapSystem, w: &Word) -> Result<ExactBounds> {
    let (lo, hi) = sys.exact_ambient();
    w.symbols().iter().try_fold((lo.to_vec(), hi.to_vec()), |(l, h), &s| sys.maps()[s].exact.image_bounds(&l, &h))
}

fn is_forward_admissible(matrix: &TransitionMatrix<f64>, w: &Word) -> bool {
    w.symbols().windows(2).all(|p| *matrix.entry(p[0], p[1]) > 0.0)
}

fn validate_pair(sys: &MapSystem, a: &Word, b: &Word) -> Result<()> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyWord);
    }
    a.check_alphabet(sys.k())?;
    b.check_alphabet(sys.k())?;
    if a.last() != b.last() {
        return Err(Error::LastSymbolMismatch);
    }
    for w in [a, b] {
        if !is_forward_admissible(sys.matrix(), w) {
            return Err(Error::InadmissibleWord(w.to_string()));
        }
    }
    Ok(())
}

/// `π_s(first) < π_s(second)` when `t_s = +` and `>` when `t_s = −`, for every `s`.
fn separated(first: &ExactBounds, second: &ExactBounds, t: &[Sign]) -> bool {
    t.iter().enumerate().all(|(s, sign)| match sign {
        Sign::Minus => second.1[s] < first.0[s],
        _ => first.1[s] < second.0[s],
    })
}

fn separating_class(classes: &[Vec<Sign>], m1: &ExactBounds, m2: &ExactBounds) -> Option<Vec<Sign>> {
    classes.iter().find(|t| separated(m1, m2, t) || separated(m2, m1, t)).cloned()
}

fn witness(sys: &MapSystem, a: &Word, b: &Word, certified_by: Certificate) -> Result<SplitWitness> {
    Ok(SplitWitness {
        word_a: a.clone(),
        word_b: b.clone(),
        m1: sys.forward_enclosure(a)?,
        m2: sys.forward_enclosure(b)?,
        certified_by,
    })
}

/// Order-separation test for monotone systems, decided in exact arithmetic.
///
/// Every class `S(t)` containing the system is tried, with both roles of
/// `M₁` and `M₂`. Returns `Ok(None)` when no class separates the images
/// (ties `sup = inf` do not separate).
pub fn check_monotone_split(sys: &MapSystem, a: &Word, b: &Word) -> Result<Option<SplitWitness>> {
    validate_pair(sys, a, b)?;
    let classes: Vec<Vec<Sign>> = sys.monotone_classes().into_iter().map(|c| c.t).collect();
    if classes.is_empty() {
        return Err(Error::NotMonotoneSystem);
    }
    let m1 = exact_forward_bounds(sys, a)?;
    let m2 = exact_forward_bounds(sys, b)?;
    match separating_class(&classes, &m1, &m2) {
        Some(t) => witness(sys, a, b, Certificate::MonotoneClass { t }).map(Some),
        None => Ok(None),
    }
}

/// One-dimensional shortcut: injective maps on an interval whose two images
/// are disjoint split, with no monotone-class requirement.
pub fn check_injective_interval(sys: &MapSystem, a: &Word, b: &Word) -> Result<Option<SplitWitness>> {
    validate_pair(sys, a, b)?;
    if sys.dim() != 1 {
        return Err(Error::InvalidArgument("the injective shortcut needs a one-dimensional system".into()));
    }
    if !sys.all_maps_injective() {
        return Ok(None);
    }
    let m1 = exact_forward_bounds(sys, a)?;
    let m2 = exact_forward_bounds(sys, b)?;
    if m1.1[0] < m2.0[0] || m2.1[0] < m1.0[0] {
        witness(sys, a, b, Certificate::InjectiveInterval).map(Some)
    } else {
        Ok(None)
    }
}

/// The monotone-class separation check when the system is monotone, else the one-dimensional
/// injective shortcut when it applies.
pub fn certify(sys: &MapSystem, a: &Word, b: &Word) -> Result<Option<SplitWitness>> {
    match check_monotone_split(sys, a, b) {
        Ok(Some(w)) => return Ok(Some(w)),
        Ok(None) | Err(Error::NotMonotoneSystem) => {}
        Err(e) => return Err(e),
    }
    if sys.dim() == 1 {
        check_injective_interval(sys, a, b)
    } else {
        Ok(None)
    }
}

/// All forward-admissible words of length `1..=max_len`, shortest first,
/// lexicographic within a length.
fn admissible_words(matrix: &TransitionMatrix<f64>, max_len: usize) -> Vec<Word> {
    let k = matrix.k();
    let mut out = Vec::new();
    let mut layer: Vec<Word> = (0..k).map(|s| Word(vec![s])).collect();
    for len in 1..=max_len {
        out.extend(layer.iter().cloned());
        if len == max_len {
            break;
        }
        layer = layer
            .iter()
            .flat_map(|w| {
                let last = w.last().unwrap();
                (0..k).filter(move |&j| *matrix.entry(last, j) > 0.0).map(move |j| {
                    let mut next = w.0.clone();
                    next.push(j);
                    Word(next)
                })
            })
            .collect();
    }
    out
}

/// First monotone-class witness in the order (total length, `a`, `b`) with
/// `a < b`, both of length at most `max_len`.
pub fn search_witness(sys: &MapSystem, max_len: usize) -> Result<Option<SplitWitness>> {
    let classes: Vec<Vec<Sign>> = sys.monotone_classes().into_iter().map(|c| c.t).collect();
    if classes.is_empty() {
        return Err(Error::NotMonotoneSystem);
    }
    let words = admissible_words(sys.matrix(), max_len);
    let bounds = words.iter().map(|w| exact_forward_bounds(sys, w)).collect::<Result<Vec<_>>>()?;
    for total in 2..=2 * max_len {
        let mut pairs: Vec<(usize, usize)> = Vec::new();
        for (i, a) in words.iter().enumerate() {
            if a.len() >= total {
                continue;
            }
            for (j, b) in words.iter().enumerate() {
                if a.len() + b.len() == total && a < b && a.last() == b.last() {
                    pairs.push((i, j));
                }
            }
        }
        pairs.sort_by(|x, y| (&words[x.0], &words[x.1]).cmp(&(&words[y.0], &words[y.1])));
        for (i, j) in pairs {
            if let Some(t) = separating_class(&classes, &bounds[i], &bounds[j]) {
                return witness(sys, &words[i], &words[j], Certificate::MonotoneClass { t }).map(Some);
            }
        }
    }
    Ok(None)
}

/// Which `ω` prefixes a horizon check visits.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HorizonSampling {
    /// Every word of length `≤ n_max` over the full alphabet.
    Exhaustive,
    /// `count` uniformly random words of length `n_max` and all their
    /// prefixes; sample `i` uses seed `seed + i`.
    Random { count: usize, seed: u64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum HorizonStatus {
    /// Chained enclosures disjoint in every projection at every checked prefix.
    Certified,
    /// No sampled overlap, but some enclosures overlap.
    NotFalsified,
    /// Sampled images overlap in some projection: splitting fails for this pair.
    Violated,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct HorizonLevel {
    pub n: usize,
    pub prefixes: u64,
    pub enclosures_disjoint: u64,
    pub violations: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HorizonViolation {
    pub n: usize,
    pub omega: Word,
    /// 0-based coordinate whose projections overlap.
    pub coordinate: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HorizonReport {
    pub n_max: usize,
    pub status: HorizonStatus,
    pub levels: Vec<HorizonLevel>,
    pub first_violation: Option<HorizonViolation>,
}

impl HorizonReport {
    pub fn prefixes_checked(&self) -> u64 {
        self.levels.iter().map(|l| l.prefixes).sum()
    }
}

const HORIZON_BUDGET: u128 = 1 << 24;

#[derive(Clone)]
struct PairState {
    enc: [IntervalBox; 2],
    cloud: [Vec<Vec<f64>>; 2],
}

impl PairState {
    fn step(&self, sys: &MapSystem, s: usize) -> Result<PairState> {
        let f = &sys.maps()[s];
        Ok(PairState {
            enc: [f.box_image(&self.enc[0])?, f.box_image(&self.enc[1])?],
            cloud: [
                self.cloud[0].iter().map(|x| f.evaluate(x)).collect(),
                self.cloud[1].iter().map(|x| f.evaluate(x)).collect(),
            ],
        })
    }

    /// First coordinate where the hulls of the two clouds meet.
    fn overlap(&self, m: usize) -> Option<usize> {
        (0..m).find(|&s| {
            let hull = |c: &Vec<Vec<f64>>| {
                c.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), x| (l.min(x[s]), h.max(x[s])))
            };
            let (l1, h1) = hull(&self.cloud[0]);
            let (l2, h2) = hull(&self.cloud[1]);
            l1 <= h2 && l2 <= h1
        })
    }
}

#[derive(Default)]
struct Tally {
    levels: Vec<HorizonLevel>,
    first: Option<HorizonViolation>,
}

impl Tally {
    fn new(n_max: usize) -> Self {
        Tally { levels: (0..=n_max).map(|n| HorizonLevel { n, ..Default::default() }).collect(), first: None }
    }

    fn record(&mut self, m: usize, omega: &[usize], state: &PairState) {
        let level = &mut self.levels[omega.len()];
        level.prefixes += 1;
        if state.enc[0].disjoint_in_every_projection(&state.enc[1]) {
            level.enclosures_disjoint += 1;
        }
        if let Some(coordinate) = state.overlap(m) {
            level.violations += 1;
            let candidate = HorizonViolation { n: omega.len(), omega: Word(omega.to_vec()), coordinate };
            self.offer(candidate);
        }
    }

    fn offer(&mut self, candidate: HorizonViolation) {
        let better = match &self.first {
            None => true,
            Some(v) => (candidate.n, &candidate.omega) < (v.n, &v.omega),
        };
        if better {
            self.first = Some(candidate);
        }
    }

    fn merge(mut self, other: Tally) -> Tally {
        for (a, b) in self.levels.iter_mut().zip(other.levels) {
            a.prefixes += b.prefixes;
            a.enclosures_disjoint += b.enclosures_disjoint;
            a.violations += b.violations;
        }
        if let Some(v) = other.first {
            self.offer(v);
        }
        self
    }
}

fn explore(sys: &MapSystem, state: &PairState, omega: &mut Vec<usize>, n_max: usize, tally: &mut Tally) -> Result<()> {
    tally.record(sys.dim(), omega, state);
    if omega.len() == n_max {
        return Ok(());
    }
    for s in 0..sys.k() {
        let next = state.step(sys, s)?;
        omega.push(s);
        explore(sys, &next, omega, n_max, tally)?;
        omega.pop();
    }
    Ok(())
}

/// Direct check of the splitting condition for `ω` prefixes up to `n_max`.
///
/// Both `M₁` and `M₂` are tracked as chained enclosures (upper bounds) and as
/// images of a point cloud (lower bounds). Since the true images are
/// connected, overlapping cloud hulls in some projection falsify splitting
/// for this pair; disjoint enclosures everywhere certify it up to `n_max`.
pub fn verify_split_horizon(
    sys: &MapSystem,
    a: &Word,
    b: &Word,
    n_max: usize,
    sampling: HorizonSampling,
    cloud_size: usize,
) -> Result<HorizonReport> {
    validate_pair(sys, a, b)?;
    let base = sys.ambient().point_cloud(cloud_size);
    let push =
        |w: &Word| -> Vec<Vec<f64>> { base.iter().map(|x| sys.forward_orbit_unchecked(w.symbols(), x)).collect() };
    let root = PairState { enc: [sys.forward_enclosure(a)?, sys.forward_enclosure(b)?], cloud: [push(a), push(b)] };
    let m = sys.dim();
    let tally = match sampling {
        HorizonSampling::Exhaustive => {
            let words = (sys.k() as u128).checked_pow(n_max as u32).unwrap_or(u128::MAX);
            if words > HORIZON_BUDGET {
                return Err(Error::BudgetExceeded { words, budget: HORIZON_BUDGET });
            }
            let mut tally = Tally::new(n_max);
            tally.record(m, &[], &root);
            if n_max > 0 {
                let parts = (0..sys.k())
                    .into_par_iter()
                    .map(|s| -> Result<Tally> {
                        let mut part = Tally::new(n_max);
                        let mut omega = vec![s];
                        explore(sys, &root.step(sys, s)?, &mut omega, n_max, &mut part)?;
                        Ok(part)
                    })
                    .collect::<Result<Vec<_>>>()?;
                tally = parts.into_iter().fold(tally, Tally::merge);
            }
            tally
        }
        HorizonSampling::Random { count, seed } => {
            let parts = (0..count)
                .into_par_iter()
                .map(|i| -> Result<Tally> {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(i as u64));
                    let mut part = Tally::new(n_max);
                    let mut state = root.clone();
                    let mut omega = Vec::with_capacity(n_max);
                    part.record(m, &omega, &state);
                    for _ in 0..n_max {
                        let s = rng.gen_range(0..sys.k());
                        state = state.step(sys, s)?;
                        omega.push(s);
                        part.record(m, &omega, &state);
                    }
                    Ok(part)
                })
                .collect::<Result<Vec<_>>>()?;
            parts.into_iter().fold(Tally::new(n_max), Tally::merge)
        }
    };
    let status = if tally.first.is_some() {
        HorizonStatus::Violated
    } else if tally.levels.iter().all(|l| l.enclosures_disjoint == l.prefixes) {
        HorizonStatus::Certified
    } else {
        HorizonStatus::NotFalsified
    };
    Ok(HorizonReport { n_max, status, levels: tally.levels, first_violation: tally.first })
}

/// Which equal-length construction [`normalize_witness`] uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum NormalizeMode {
    /// Pad through a common final symbol; needs a primitive matrix.
    Primitive,
    /// Start both words at a state `u` with `p_uj > 0` for all `j`.
    RowPositive,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Construction {
    /// The reversed witness words themselves.
    Reversed,
    /// Reversed witness words extended by connector words.
    Padded,
}

/// Equal-length inverse-admissible words `ξ`, `η` with `ξ₀ = η₀`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NormalizedPair {
    pub xi: Word,
    pub eta: Word,
    pub mode: NormalizeMode,
    pub construction: Construction,
}

impl NormalizedPair {
    pub fn len(&self) -> usize {
        self.xi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xi.is_empty()
    }

    /// `(W, W′)` with `ℙ⁻(W) ≤ ℙ⁻(W′)`; ties keep `ξ` as `W`.
    pub fn ordered<T: Field>(&self, shift: &MarkovShift<T>) -> (Word, Word) {
        let mx = shift.cylinder_measure(&self.xi, Direction::Inverse);
        let me = shift.cylinder_measure(&self.eta, Direction::Inverse);
        if me < mx {
            (self.eta.clone(), self.xi.clone())
        } else {
            (self.xi.clone(), self.eta.clone())
        }
    }
}

/// Whether substituting `w2` for `w` inside any inverse cylinder cannot lower
/// its measure: equal first symbols, and for every continuation `j`
/// `inner(w)·q_{w_last j} ≤ inner(w2)·q_{w2_last j}` (this holds trivially
/// when the words end in the same symbol and `inner(w) ≤ inner(w2)`).
pub fn substitution_dominates<T: Field>(shift: &MarkovShift<T>, w: &Word, w2: &Word) -> bool {
    if w.len() != w2.len() || w.is_empty() || w.first() != w2.first() {
        return false;
    }
    let q = shift.inverse();
    let inner = shift.transition_product(w, Direction::Inverse);
    let inner2 = shift.transition_product(w2, Direction::Inverse);
    let slack = T::tolerance();
    let (l, l2) = (w.last().unwrap(), w2.last().unwrap());
    (0..shift.k())
        .all(|j| inner.clone() * q.entry(l, j).clone() <= inner2.clone() * q.entry(l2, j).clone() + slack.clone())
        && inner <= inner2 + slack
}

fn dominates_in_order<T: Field>(shift: &MarkovShift<T>, xi: &Word, eta: &Word) -> bool {
    let mx = shift.cylinder_measure(xi, Direction::Inverse);
    let me = shift.cylinder_measure(eta, Direction::Inverse);
    if me < mx {
        substitution_dominates(shift, eta, xi)
    } else {
        substitution_dominates(shift, xi, eta)
    }
}

/// Decided exactly when the transition rows are exact, else in floats.
fn dominance_for_pair(sys: &MapSystem, xi: &Word, eta: &Word) -> Result<bool> {
    match sys.exact_shift() {
        Ok(exact) => Ok(dominates_in_order(&exact, xi, eta)),
        Err(_) => Ok(dominates_in_order(sys.shift()?, xi, eta)),
    }
}

fn q_graph(shift: &MarkovShift<f64>) -> Vec<Vec<bool>> {
    let q = shift.inverse();
    (0..shift.k()).map(|i| (0..shift.k()).map(|j| *q.entry(i, j) > 0.0).collect()).collect()
}

/// Shortest walk `from → … → to` with at least one edge, as the list of
/// visited states including both ends.
fn shortest_walk(graph: &[Vec<bool>], from: usize, to: usize, cap: usize) -> Option<Vec<usize>> {
    let k = graph.len();
    let mut parent: Vec<Option<usize>> = vec![None; k];
    let mut depth = vec![usize::MAX; k];
    let mut queue = VecDeque::new();
    for j in 0..k {
        if graph[from][j] {
            depth[j] = 1;
            parent[j] = Some(from);
            queue.push_back(j);
        }
    }
    while let Some(v) = queue.pop_front() {
        if v == to {
            break;
        }
        if depth[v] >= cap {
            continue;
        }
        for j in 0..k {
            if graph[v][j] && depth[j] == usize::MAX {
                depth[j] = depth[v] + 1;
                parent[j] = Some(v);
                queue.push_back(j);
            }
        }
    }
    if depth[to] == usize::MAX || depth[to] > cap {
        return None;
    }
    let mut walk = vec![to];
    let mut cur = to;
    for _ in 0..depth[to] {
        let p = parent[cur].unwrap();
        walk.push(p);
        cur = p;
    }
    // The last pushed entry is `from` (or, when `to == from`, the loop closed on itself).
    walk.reverse();
    walk[0] = from;
    Some(walk)
}

/// Walk of exactly `steps` edges from `from` to `to`, smallest states first.
fn walk_of_length(graph: &[Vec<bool>], from: usize, to: usize, steps: usize) -> Option<Vec<usize>> {
    let k = graph.len();
    let mut layers = vec![vec![false; k]];
    layers[0][from] = true;
    for n in 0..steps {
        let next = (0..k).map(|j| (0..k).any(|i| layers[n][i] && graph[i][j])).collect();
        layers.push(next);
    }
    if !layers[steps][to] {
        return None;
    }
    let mut walk = vec![to];
    let mut cur = to;
    for n in (0..steps).rev() {
        let prev = (0..k).find(|&i| layers[n][i] && graph[i][cur])?;
        walk.push(prev);
        cur = prev;
    }
    walk.reverse();
    Some(walk)
}

fn check_normalized(shift: &MarkovShift<f64>, xi: &Word, eta: &Word) -> Result<()> {
    for w in [xi, eta] {
        if !shift.is_admissible(w, Direction::Inverse) {
            return Err(Error::InadmissibleWord(w.to_string()));
        }
    }
    Ok(())
}

/// Turn a witness `(a, b)` into equal-length inverse-admissible words
/// `ξ`, `η` with `ξ₀ = η₀`.
///
/// The reversed witness words are used directly when they have equal
/// length, satisfy the mode's requirement on `ξ₀`, and either end in the
/// same symbol or pass [`substitution_dominates`]. Otherwise:
///
/// * `Primitive`: `ξ = a_ℓ…a₁ c₁…c_n t`, `η = b_r…b₁ d₁…d_m t` with connector
///   walks in the graph of `Q` of minimal total length `N`.
/// * `RowPositive`: pad both words in front with `u` to a common length,
///   then `ξ = u c₁…c_n a_ℓ…a₁`, `η = u c₁…c_n b_r…b₁`.
///
/// Connectors longer than `k²` are reported as [`Error::ConnectorNotFound`].
pub fn normalize_witness(sys: &MapSystem, a: &Word, b: &Word, mode: NormalizeMode) -> Result<NormalizedPair> {
    validate_pair(sys, a, b)?;
    let shift = sys.shift().map_err(|_| match mode {
        NormalizeMode::Primitive => Error::NotPrimitive,
        NormalizeMode::RowPositive => Error::NotIrreducible,
    })?;
    let k = sys.k();
    let cap = k * k;
    let u = match mode {
        NormalizeMode::Primitive => {
            if !shift.classification().is_primitive() {
                return Err(Error::NotPrimitive);
            }
            None
        }
        NormalizeMode::RowPositive => Some(shift.row_positive_state().ok_or(Error::NoRowPositiveState)?),
    };

    let (ra, rb) = (a.reversed(), b.reversed());
    let start_ok = u.map_or(true, |u| ra.first() == Some(u));
    if a.len() == b.len() && start_ok && (ra.last() == rb.last() || dominance_for_pair(sys, &ra, &rb)?) {
        check_normalized(shift, &ra, &rb)?;
        return Ok(NormalizedPair { xi: ra, eta: rb, mode, construction: Construction::Reversed });
    }

    let graph = q_graph(shift);
    let (xi, eta) = match u {
        None => {
            let (la, lb) = (a.len(), b.len());
            let a1 = a.first().unwrap();
            let b1 = b.first().unwrap();
            let base = la.max(lb) + 1;
            let found = (base..=base + cap).find_map(|n| {
                (0..k).find_map(|t| {
                    let wa = walk_of_length(&graph, a1, t, n - la)?;
                    let wb = walk_of_length(&graph, b1, t, n - lb)?;
                    Some((wa, wb))
                })
            });
            let (wa, wb) = found.ok_or(Error::ConnectorNotFound(cap))?;
            let mut xi = ra.0.clone();
            xi.extend_from_slice(&wa[1..]);
            let mut eta = rb.0.clone();
            eta.extend_from_slice(&wb[1..]);
            (Word(xi), Word(eta))
        }
        Some(u) => {
            let len = a.len().max(b.len()) + 1;
            let pad = |w: &Word| {
                let mut padded = vec![u; len - w.len()];
                padded.extend_from_slice(w.symbols());
                Word(padded).reversed()
            };
            let (pa, pb) = (pad(a), pad(b));
            let head = a.last().unwrap();
            let walk = shortest_walk(&graph, u, head, cap).ok_or(Error::ConnectorNotFound(cap))?;
            let prefix = &walk[..walk.len() - 1];
            let join = |tail: &Word| {
                let mut w = prefix.to_vec();
                w.extend_from_slice(tail.symbols());
                Word(w)
            };
            (join(&pa), join(&pb))
        }
    };
    check_normalized(shift, &xi, &eta)?;
    Ok(NormalizedPair { xi, eta, mode, construction: Construction::Padded })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::MapKind;
    use crate::systems;

    fn affine1(a: f64, b: f64) -> MapKind<f64> {
        MapKind::Affine { matrix: vec![vec![a]], offset: vec![b] }
    }

    fn iid(maps: Vec<MapKind<f64>>) -> MapSystem {
        MapSystem::from_f64(&[0.0], &[1.0], maps, vec![vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap()
    }

    fn w(s: &str) -> Word {
        s.parse().unwrap()
    }

    #[test]
    fn monotone_split_examples() {
        let sys = systems::cantor_iid();
        let wit = check_monotone_split(&sys, &w("1,1"), &w("2,1")).unwrap().unwrap();
        assert!((wit.m1.hi()[0] - 1.0 / 9.0).abs() < 1e-15);
        assert!((wit.m2.lo()[0] - 2.0 / 9.0).abs() < 1e-15);
        assert!((wit.m2.hi()[0] - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(wit.certified_by, Certificate::MonotoneClass { t: vec![Sign::Plus] });
        assert_eq!(check_monotone_split(&sys, &w("1"), &w("2")), Err(Error::LastSymbolMismatch));

        let halves = iid(vec![affine1(0.5, 0.0), affine1(0.5, 0.5)]);
        assert_eq!(check_monotone_split(&halves, &w("1,1"), &w("2,1")).unwrap(), None);

        let mixed = iid(vec![affine1(0.5, 0.0), affine1(-0.5, 1.0)]);
        assert_eq!(check_monotone_split(&mixed, &w("1,1"), &w("2,1")), Err(Error::NotMonotoneSystem));
        // ...but the injective interval shortcut still applies.
        let wit = certify(&mixed, &w("1,1,1"), &w("2,2,1")).unwrap().unwrap();
        assert_eq!(wit.certified_by, Certificate::InjectiveInterval);
        assert_eq!(certify(&mixed, &w("1,1"), &w("2,1")).unwrap(), None);

        let one_way = MapSystem::from_f64(
            &[0.0],
            &[1.0],
            vec![affine1(1.0 / 3.0, 0.0), affine1(1.0 / 3.0, 2.0 / 3.0)],
            vec![vec![0.5, 0.5], vec![1.0, 0.0]],
        )
        .unwrap();
        assert!(matches!(check_monotone_split(&one_way, &w("1,2,2"), &w("2,2")), Err(Error::InadmissibleWord(_))));
    }

    #[test]
    fn horizon_examples() {
        let sys = systems::cantor_iid();
        let rep = verify_split_horizon(&sys, &w("1,1"), &w("2,1"), 5, HorizonSampling::Exhaustive, 64).unwrap();
        assert_eq!(rep.status, HorizonStatus::Certified);
        assert_eq!(rep.prefixes_checked(), 63);
        assert_eq!(rep.levels[5].prefixes, 32);

        let rep = verify_split_horizon(&sys, &w("1,1"), &w("1,1"), 5, HorizonSampling::Exhaustive, 64).unwrap();
        assert_eq!(rep.status, HorizonStatus::Violated);
        assert_eq!(rep.first_violation.unwrap().n, 0);

        // f₁ = x/2, f₂ = 1 − x/2: M₁ = [0, 1/4], M₂ = f₁([1/2, 1]) = [1/4, 1/2] touch.
        let flip = iid(vec![affine1(0.5, 0.0), affine1(-0.5, 1.0)]);
        let rep = verify_split_horizon(&flip, &w("1,1"), &w("2,1"), 6, HorizonSampling::Exhaustive, 64).unwrap();
        assert_eq!(rep.status, HorizonStatus::Violated);
        let rep = verify_split_horizon(&flip, &w("1,1,1"), &w("2,2,1"), 6, HorizonSampling::Exhaustive, 64).unwrap();
        // M₁ = [0, 1/8], M₂ = f₁f₂([1/2,1]) = f₁([1/2,3/4]) = [1/4, 3/8].
        assert_eq!(rep.status, HorizonStatus::Certified);

        let sampled =
            verify_split_horizon(&sys, &w("1,1"), &w("2,1"), 12, HorizonSampling::Random { count: 50, seed: 3 }, 32)
                .unwrap();
        assert_eq!(sampled.status, HorizonStatus::Certified);
        assert_eq!(sampled.levels[12].prefixes, 50);
    }

    #[test]
    fn search_examples() {
        let sys = systems::cantor_iid();
        let wit = search_witness(&sys, 2).unwrap().unwrap();
        assert_eq!((wit.word_a.to_string(), wit.word_b.to_string()), ("1,1".into(), "2,1".into()));
        assert_eq!(search_witness(&sys, 1).unwrap(), None);
        let same = iid(vec![affine1(0.5, 0.25), affine1(0.5, 0.25)]);
        assert_eq!(search_witness(&same, 3).unwrap(), None);
    }

    #[test]
    fn search_is_minimal_in_total_length() {
        for sys in [systems::cantor_iid(), systems::cantor_markov(), systems::diagonal_2d(), systems::moebius_pair()] {
            let found = search_witness(&sys, 3).unwrap().expect("witness");
            let total = found.word_a.len() + found.word_b.len();
            let words = admissible_words(sys.matrix(), 3);
            for a in &words {
                for b in &words {
                    if a.len() + b.len() < total && a.last() == b.last() {
                        assert_eq!(check_monotone_split(&sys, a, b).unwrap(), None, "{a} / {b}");
                    }
                }
            }
        }
    }

    #[test]
    fn monotone_witnesses_pass_the_horizon_check() {
        for sys in [systems::cantor_iid(), systems::cantor_markov(), systems::moebius_pair()] {
            let wit = search_witness(&sys, 3).unwrap().unwrap();
            let rep =
                verify_split_horizon(&sys, &wit.word_a, &wit.word_b, 10, HorizonSampling::Exhaustive, 16).unwrap();
            assert_eq!(rep.status, HorizonStatus::Certified);
            assert_eq!(rep.levels[10].prefixes, 1024);
        }
    }

    #[test]
    fn normalize_examples() {
        let sys = systems::cantor_iid();
        let pair = normalize_witness(&sys, &w("1,1"), &w("2,1"), NormalizeMode::Primitive).unwrap();
        assert_eq!((pair.xi.to_string(), pair.eta.to_string()), ("1,1".into(), "1,2".into()));
        assert_eq!(pair.construction, Construction::Reversed);

        let reducible = MapSystem::from_f64(
            &[0.0],
            &[1.0],
            vec![affine1(1.0 / 3.0, 0.0), affine1(1.0 / 3.0, 2.0 / 3.0)],
            vec![vec![1.0, 0.0], vec![0.0, 1.0]],
        )
        .unwrap();
        assert_eq!(
            normalize_witness(&reducible, &w("1,1"), &w("1"), NormalizeMode::Primitive),
            Err(Error::NotPrimitive)
        );

        let cycle = MapSystem::from_f64(
            &[0.0],
            &[1.0],
            vec![affine1(1.0 / 3.0, 0.0), affine1(1.0 / 3.0, 2.0 / 3.0)],
            vec![vec![0.0, 1.0], vec![1.0, 0.0]],
        )
        .unwrap();
        assert_eq!(
            normalize_witness(&cycle, &w("2,1"), &w("1,2,1"), NormalizeMode::RowPositive),
            Err(Error::NoRowPositiveState)
        );
    }

    #[test]
    fn normalized_words_have_the_required_shape() {
        let witnesses = [("1,1", "2,1"), ("1", "2,1"), ("2,2,1", "1"), ("1,2", "2,2,2")];
        let markov = MapSystem::from_f64(
            &[0.0],
            &[1.0],
            vec![affine1(1.0 / 3.0, 0.0), affine1(1.0 / 3.0, 2.0 / 3.0), affine1(0.1, 0.4)],
            vec![vec![0.0, 0.7, 0.3], vec![0.5, 0.0, 0.5], vec![0.6, 0.4, 0.0]],
        )
        .unwrap();
        for sys in [systems::cantor_iid(), systems::cantor_markov(), markov] {
            let shift = sys.shift().unwrap();
            for (a, b) in witnesses {
                let (a, b) = (w(a), w(b));
                if validate_pair(&sys, &a, &b).is_err() {
                    continue;
                }
                for mode in [NormalizeMode::Primitive, NormalizeMode::RowPositive] {
                    let pair = match normalize_witness(&sys, &a, &b, mode) {
                        Ok(p) => p,
                        Err(Error::NoRowPositiveState) => continue,
                        Err(e) => panic!("{e}"),
                    };
                    assert_eq!(pair.xi.len(), pair.eta.len());
                    assert_eq!(pair.xi.first(), pair.eta.first());
                    assert!(shift.cylinder_measure(&pair.xi, Direction::Inverse) > 0.0);
                    assert!(shift.cylinder_measure(&pair.eta, Direction::Inverse) > 0.0);
                    if pair.construction == Construction::Padded {
                        assert_eq!(pair.xi.last(), pair.eta.last());
                    }
                    if mode == NormalizeMode::RowPositive {
                        let u = pair.xi.first().unwrap();
                        assert!((0..sys.k()).all(|j| *shift.forward().entry(u, j) > 0.0));
                    }
                    // Enclosures of the reverse compositions stay disjoint.
                    let e1 = sys.reverse_enclosure(&pair.xi).unwrap();
                    let e2 = sys.reverse_enclosure(&pair.eta).unwrap();
                    let m1 = sys.forward_enclosure(&a).unwrap();
                    let m2 = sys.forward_enclosure(&b).unwrap();
                    if m1.disjoint_in_every_projection(&m2) {
                        assert!(e1.disjoint_in_every_projection(&e2));
                    }
                }
            }
        }
    }
}
