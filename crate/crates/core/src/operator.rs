//! The Markov operator `(Tμ̂)_j = Σ_i p_ij f_{j*} μ_i` on state-tagged
//! particle measures, its stationary target `π̂*ℙ⁻`, and an empirical
//! weak-* distance used to watch `Tⁿμ̂` converge.
//!
//! The operator is applied deterministically: every particle spawns one
//! child per positive transition, so the per-state masses follow `p̂Pⁿ`
//! up to rounding. Randomness only enters through [`resample`], which caps
//! the particle count without moving mass between states.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::maps::{IntervalBox, MapSystem};
use crate::shift::{Direction, Start, Word};
use crate::splitting::{search_witness, SplitWitness};

/// Tolerance on the total weight of a measure.
pub const MASS_TOLERANCE: f64 = 1e-12;

/// Default cap on the depth of target samples.
pub const DEFAULT_TARGET_DEPTH: usize = 64;

/// Target samples stop deepening once their enclosure is this small.
pub const TARGET_DIAMETER: f64 = 1e-9;

/// Longest witness words tried when a splitting certificate is required.
pub const SPLIT_SEARCH_LEN: usize = 3;

/// Neumaier-compensated sum.
pub fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let (mut sum, mut c) = (0.0f64, 0.0f64);
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            c += (sum - t) + v;
        } else {
            c += (v - t) + sum;
        }
        sum = t;
    }
    sum + c
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Particle {
    pub state: usize,
    pub point: Vec<f64>,
    pub weight: f64,
}

/// A probability measure on `{1..k} × M` given by weighted particles.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StateTaggedMeasure {
    k: usize,
    dim: usize,
    particles: Vec<Particle>,
}

impl StateTaggedMeasure {
    /// Checks states, dimensions, positive weights and total mass one.
    pub fn new(k: usize, dim: usize, particles: Vec<Particle>) -> Result<Self> {
        for p in &particles {
            if p.state >= k {
                return Err(Error::SymbolOutOfRange { symbol: p.state + 1, k });
            }
            if p.point.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: p.point.len() });
            }
            if !(p.weight > 0.0 && p.weight.is_finite()) || p.point.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "particle {p:?} has a nonpositive weight or a non-finite coordinate"
                )));
            }
        }
        let total = compensated_sum(particles.iter().map(|p| p.weight));
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::InvalidArgument(format!("total weight {total} differs from 1")));
        }
        Ok(StateTaggedMeasure { k, dim, particles })
    }

    /// A unit point mass at `(state, point)`.
    pub fn dirac(k: usize, state: usize, point: Vec<f64>) -> Result<Self> {
        let dim = point.len();
        Self::new(k, dim, vec![Particle { state, point, weight: 1.0 }])
    }

    /// State `i` gets mass `masses[i]`, spread evenly over a
    /// `per_state`-point cloud of `bx`.
    pub fn from_cloud(masses: &[f64], bx: &IntervalBox, per_state: usize) -> Result<Self> {
        if per_state == 0 {
            return Err(Error::InvalidArgument("per_state must be positive".into()));
        }
        let cloud = bx.point_cloud(per_state);
        let particles = masses
            .iter()
            .enumerate()
            .filter(|(_, &m)| m > 0.0)
            .flat_map(|(i, &m)| {
                let w = m / cloud.len() as f64;
                cloud.iter().map(move |x| Particle { state: i, point: x.clone(), weight: w })
            })
            .collect();
        Self::new(masses.len(), bx.dim(), particles)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn particles(&self) -> &[Particle] {
        &self.particles
    }

    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    /// `μ_i(M)` for every state.
    pub fn masses(&self) -> Vec<f64> {
        (0..self.k).map(|i| compensated_sum(self.particles.iter().filter(|p| p.state == i).map(|p| p.weight))).collect()
    }

    pub fn total_mass(&self) -> f64 {
        compensated_sum(self.particles.iter().map(|p| p.weight))
    }

    /// Whether every point lies in `bx` (up to `tol`).
    pub fn inside(&self, bx: &IntervalBox, tol: f64) -> bool {
        self.particles.iter().all(|p| bx.contains_point(&p.point, tol))
    }

    /// `∫ g dμ̂` for a function of state and point.
    pub fn integrate(&self, g: impl Fn(usize, &[f64]) -> f64) -> f64 {
        compensated_sum(self.particles.iter().map(|p| p.weight * g(p.state, &p.point)))
    }

    /// Particles ordered by state, then point, then weight, so that output
    /// does not depend on the order in which they were produced.
    pub fn sorted(&self) -> Self {
        let mut particles = self.particles.clone();
        particles.sort_by(|a, b| {
            a.state
                .cmp(&b.state)
                .then_with(|| {
                    a.point
                        .iter()
                        .zip(&b.point)
                        .map(|(x, y)| x.total_cmp(y))
                        .find(|o| o.is_ne())
                        .unwrap_or(std::cmp::Ordering::Equal)
                })
                .then_with(|| a.weight.total_cmp(&b.weight))
        });
        StateTaggedMeasure { k: self.k, dim: self.dim, particles }
    }

    /// Normalized coordinate-`s` marginal of section `j`, sorted by value.
    fn section_marginal(&self, j: usize, s: usize) -> Vec<(f64, f64)> {
        let mut pts: Vec<(f64, f64)> =
            self.particles.iter().filter(|p| p.state == j).map(|p| (p.point[s], p.weight)).collect();
        let mass = compensated_sum(pts.iter().map(|p| p.1));
        for p in &mut pts {
            p.1 /= mass;
        }
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        pts
    }
}

/// One application of `T`: each particle `(i, x, w)` becomes
/// `(j, f_j(x), w·p_ij)` for every `j` with `p_ij > 0`.
pub fn apply_operator(mu: &StateTaggedMeasure, sys: &MapSystem) -> Result<StateTaggedMeasure> {
    if mu.k != sys.k() || mu.dim != sys.dim() {
        return Err(Error::DimensionMismatch { expected: sys.k(), got: mu.k });
    }
    let p = sys.matrix();
    let particles = mu
        .particles
        .par_iter()
        .flat_map_iter(|q| {
            (0..sys.k()).filter(move |&j| *p.entry(q.state, j) > 0.0).map(move |j| Particle {
                state: j,
                point: sys.maps()[j].evaluate(&q.point),
                weight: q.weight * p.entry(q.state, j),
            })
        })
        .collect();
    Ok(StateTaggedMeasure { k: mu.k, dim: mu.dim, particles })
}

/// Largest-remainder split of `total` slots proportional to `masses`, with
/// at least one slot for every positive mass.
fn allocate(masses: &[f64], total: usize) -> Vec<usize> {
    let positive: Vec<usize> = (0..masses.len()).filter(|&i| masses[i] > 0.0).collect();
    let mut counts = vec![0usize; masses.len()];
    let sum = compensated_sum(masses.iter().copied());
    let free = total - positive.len();
    let mut rema = Vec::with_capacity(positive.len());
    let mut used = 0;
    for &i in &positive {
        let exact = masses[i] / sum * free as f64;
        let base = exact.floor() as usize;
        counts[i] = 1 + base;
        used += base;
        rema.push((exact - base as f64, i));
    }
    rema.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    for &(_, i) in rema.iter().take(free.saturating_sub(used)) {
        counts[i] += 1;
    }
    counts
}

/// Stratified systematic resampling to `target_count` particles. Slots are
/// shared among states by largest remainder (at least one per state with
/// mass); within a state, particles are chosen by systematic resampling
/// and reweighted to `μ_i(M)/count_i`, so every section keeps its mass.
pub fn resample(mu: &StateTaggedMeasure, target_count: usize, seed: u64) -> Result<StateTaggedMeasure> {
    if target_count < mu.k {
        return Err(Error::InvalidArgument(format!("target_count {target_count} is below k = {}", mu.k)));
    }
    let masses = mu.masses();
    let counts = allocate(&masses, target_count);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut particles = Vec::with_capacity(target_count);
    for (j, &count) in counts.iter().enumerate() {
        if count == 0 {
            continue;
        }
        let stratum: Vec<&Particle> = mu.particles.iter().filter(|p| p.state == j).collect();
        let step = masses[j] / count as f64;
        let mut u = rng.gen::<f64>() * step;
        let mut cumulative = 0.0;
        let mut idx = 0;
        for _ in 0..count {
            while idx + 1 < stratum.len() && cumulative + stratum[idx].weight <= u {
                cumulative += stratum[idx].weight;
                idx += 1;
            }
            particles.push(Particle { state: j, point: stratum[idx].point.clone(), weight: step });
            u += step;
        }
    }
    Ok(StateTaggedMeasure { k: mu.k, dim: mu.dim, particles })
}

/// A sample of `π̂*ℙ⁻` with the convergence certificate of every particle.
#[derive(Clone, Debug, Serialize)]
pub struct TargetEstimate {
    pub measure: StateTaggedMeasure,
    /// ℓ1 diameter of the chained enclosure of each sample's fibre.
    pub diameters: Vec<f64>,
    /// Depth actually used by each sample.
    pub depths: Vec<usize>,
    pub anchor: Vec<f64>,
}

impl TargetEstimate {
    pub fn max_diameter(&self) -> f64 {
        self.diameters.iter().copied().fold(0.0, f64::max)
    }
}

/// [`estimate_target_from`] with the anchor at the centre of the box.
pub fn estimate_target(sys: &MapSystem, n_samples: usize, depth: usize, seed: u64) -> Result<TargetEstimate> {
    estimate_target_from(sys, n_samples, depth, seed, &sys.ambient().center())
}

/// Draws `n_samples` words `ω ~ ℙ⁻` and emits `(ω₀, f_{ω₀}∘⋯∘f_{ω_{d−1}}(anchor))`
/// with weight `1/n_samples`. The depth `d` doubles from 8 until the
/// chained enclosure is narrower than [`TARGET_DIAMETER`], capped at
/// `depth`. Sample `i` uses seed `seed + i`.
pub fn estimate_target_from(
    sys: &MapSystem,
    n_samples: usize,
    depth: usize,
    seed: u64,
    anchor: &[f64],
) -> Result<TargetEstimate> {
    let shift = sys.shift()?;
    if !shift.classification().is_primitive() {
        return Err(Error::NotPrimitive);
    }
    if n_samples == 0 {
        return Err(Error::InvalidArgument("n_samples must be positive".into()));
    }
    if anchor.len() != sys.dim() {
        return Err(Error::DimensionMismatch { expected: sys.dim(), got: anchor.len() });
    }
    if !sys.ambient().contains_point(anchor, 0.0) {
        return Err(Error::OutsideDomain);
    }
    let weight = 1.0 / n_samples as f64;
    let samples: Vec<(Particle, f64, usize)> = (0..n_samples)
        .into_par_iter()
        .map(|i| -> Result<(Particle, f64, usize)> {
            let word = shift.sample_word_seeded(
                depth.max(1),
                Start::Stationary,
                Direction::Inverse,
                seed.wrapping_add(i as u64),
            );
            let mut d = depth.min(8);
            let (used, diameter) = loop {
                let prefix = Word(word.symbols()[..d].to_vec());
                let diameter = sys.reverse_enclosure(&prefix)?.l1_diameter();
                if diameter < TARGET_DIAMETER || d == depth {
                    break (prefix, diameter);
                }
                d = (2 * d).min(depth);
            };
            let point = sys.reverse_composition_unchecked(used.symbols(), anchor);
            Ok((Particle { state: word.symbols()[0], point, weight }, diameter, used.len()))
        })
        .collect::<Result<_>>()?;
    let mut particles = Vec::with_capacity(n_samples);
    let mut diameters = Vec::with_capacity(n_samples);
    let mut depths = Vec::with_capacity(n_samples);
    for (p, d, n) in samples {
        particles.push(p);
        diameters.push(d);
        depths.push(n);
    }
    Ok(TargetEstimate {
        measure: StateTaggedMeasure { k: sys.k(), dim: sys.dim(), particles },
        diameters,
        depths,
        anchor: anchor.to_vec(),
    })
}

/// Exact `W₁` between two weighted empirical measures on the line, given
/// as `(value, weight)` sorted by value with weights summing to one:
/// `∫ |F(x) − G(x)| dx`.
pub fn wasserstein_1d(a: &[(f64, f64)], b: &[(f64, f64)]) -> f64 {
    let (mut i, mut j) = (0, 0);
    let (mut fa, mut fb) = (0.0f64, 0.0f64);
    let mut prev: Option<f64> = None;
    let mut pieces = Vec::with_capacity(a.len() + b.len());
    while i < a.len() || j < b.len() {
        let x = match (a.get(i), b.get(j)) {
            (Some(p), Some(q)) => p.0.min(q.0),
            (Some(p), None) => p.0,
            (None, Some(q)) => q.0,
            (None, None) => unreachable!(),
        };
        if let Some(px) = prev {
            pieces.push((fa - fb).abs() * (x - px));
        }
        while i < a.len() && a[i].0 == x {
            fa += a[i].1;
            i += 1;
        }
        while j < b.len() && b[j].0 == x {
            fb += b[j].1;
            j += 1;
        }
        prev = Some(x);
    }
    compensated_sum(pieces)
}

/// `Σ_j [ |μ_j(M) − ν_j(M)| + min(μ_j(M), ν_j(M)) · Σ_s W₁(μ̄_j^s, ν̄_j^s) ]`
/// where `μ̄_j^s` is the coordinate-`s` marginal of the normalized section.
pub fn weak_star_distance(mu: &StateTaggedMeasure, nu: &StateTaggedMeasure) -> Result<f64> {
    if mu.k != nu.k {
        return Err(Error::DimensionMismatch { expected: mu.k, got: nu.k });
    }
    if mu.dim != nu.dim {
        return Err(Error::DimensionMismatch { expected: mu.dim, got: nu.dim });
    }
    let (ma, mb) = (mu.masses(), nu.masses());
    let terms = (0..mu.k).map(|j| {
        let shared = ma[j].min(mb[j]);
        let transport = if shared > 0.0 {
            compensated_sum((0..mu.dim).map(|s| wasserstein_1d(&mu.section_marginal(j, s), &nu.section_marginal(j, s))))
        } else {
            0.0
        };
        (ma[j] - mb[j]).abs() + shared * transport
    });
    Ok(compensated_sum(terms))
}

/// A certified splitting witness, or [`Error::HypothesisViolated`].
pub fn require_split(sys: &MapSystem) -> Result<SplitWitness> {
    match search_witness(sys, SPLIT_SEARCH_LEN) {
        Ok(Some(w)) => Ok(w),
        Ok(None) | Err(Error::NotMonotoneSystem) => Err(Error::HypothesisViolated(format!(
            "no certified splitting witness with words of length <= {SPLIT_SEARCH_LEN}"
        ))),
        Err(e) => Err(e),
    }
}

#[derive(Clone, Debug)]
pub struct StabilityParams {
    pub n_steps: usize,
    pub particles: usize,
    pub target_samples: usize,
    pub target_depth: usize,
    pub seed: u64,
}

impl Default for StabilityParams {
    fn default() -> Self {
        StabilityParams {
            n_steps: 30,
            particles: 100_000,
            target_samples: 100_000,
            target_depth: DEFAULT_TARGET_DEPTH,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StabilityRow {
    pub step: usize,
    pub initial_id: usize,
    pub distance: f64,
    /// `max_i |μ_i(M) − p_i|`.
    pub mass_gap: f64,
    /// `max_i |μ_i(M) − (p̂Pⁿ)_i|`.
    pub mass_error: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct StabilityReport {
    pub witness: SplitWitness,
    pub rows: Vec<StabilityRow>,
    /// `3 · diam_ℓ1(M) / √particles`.
    pub monte_carlo_floor: f64,
    pub target_max_diameter: f64,
    #[serde(skip)]
    pub target: StateTaggedMeasure,
}

impl StabilityReport {
    pub fn final_distances(&self) -> Vec<f64> {
        let last = self.rows.iter().map(|r| r.step).max().unwrap_or(0);
        self.rows.iter().filter(|r| r.step == last).map(|r| r.distance).collect()
    }

    pub fn max_mass_error(&self) -> f64 {
        self.rows.iter().map(|r| r.mass_error).fold(0.0, f64::max)
    }

    /// Whether `d_{n+5} ≤ d_n + floor` for every recorded `n` of every initial measure.
    pub fn trend_holds(&self) -> bool {
        self.rows.iter().all(|r| {
            self.rows
                .iter()
                .find(|s| s.initial_id == r.initial_id && s.step == r.step + 5)
                .map_or(true, |s| s.distance <= r.distance + self.monte_carlo_floor)
        })
    }
}

/// Iterates `T` followed by resampling from each initial measure, and
/// records the distance to a target estimate and the mass dynamics at
/// every step `0..=n_steps`. Initial measure `id` resamples step `n` with
/// seed `seed + 1 + id·(n_steps + 1) + n`; the target uses `seed`.
pub fn stability_experiment(
    sys: &MapSystem,
    initials: &[StateTaggedMeasure],
    params: &StabilityParams,
) -> Result<StabilityReport> {
    let shift = sys.shift()?;
    if !shift.classification().is_primitive() {
        return Err(Error::NotPrimitive);
    }
    let witness = require_split(sys)?;
    let target = estimate_target(sys, params.target_samples, params.target_depth, params.seed)?;
    let p = shift.stationary().as_slice();
    let per_initial = initials
        .par_iter()
        .enumerate()
        .map(|(id, mu0)| -> Result<Vec<StabilityRow>> {
            let mut expected = mu0.masses();
            let mut mu = mu0.clone();
            let mut rows = Vec::with_capacity(params.n_steps + 1);
            for step in 0..=params.n_steps {
                if step > 0 {
                    mu = apply_operator(&mu, sys)?;
                    if mu.len() > params.particles {
                        let s = params.seed.wrapping_add(1 + (id * (params.n_steps + 1) + step) as u64);
                        mu = resample(&mu, params.particles, s)?;
                    }
                    expected = sys.matrix().left_multiply(&expected);
                }
                let masses = mu.masses();
                let gap = |v: &[f64]| masses.iter().zip(v).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                rows.push(StabilityRow {
                    step,
                    initial_id: id,
                    distance: weak_star_distance(&mu, &target.measure)?,
                    mass_gap: gap(p),
                    mass_error: gap(&expected),
                });
            }
            Ok(rows)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(StabilityReport {
        witness,
        rows: per_initial.into_iter().flatten().collect(),
        monte_carlo_floor: 3.0 * sys.ambient().l1_diameter() / (params.particles as f64).sqrt(),
        target_max_diameter: target.max_diameter(),
        target: target.measure,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::MapKind;
    use crate::systems;
    use proptest::prelude::*;

    fn particle(state: usize, x: f64, weight: f64) -> Particle {
        Particle { state, point: vec![x], weight }
    }

    #[test]
    fn operator_examples() {
        let single = MapSystem::from_f64(
            &[0.0],
            &[1.0],
            vec![MapKind::Affine { matrix: vec![vec![0.5]], offset: vec![0.25] }],
            vec![vec![1.0]],
        )
        .unwrap();
        let mu = StateTaggedMeasure::dirac(1, 0, vec![0.0]).unwrap();
        let next = apply_operator(&mu, &single).unwrap();
        assert_eq!(next.particles(), &[particle(0, 0.25, 1.0)]);

        let markov = systems::cantor_markov();
        let mu = StateTaggedMeasure::dirac(2, 0, vec![0.3]).unwrap();
        let m = apply_operator(&mu, &markov).unwrap().masses();
        assert!((m[0] - 0.9).abs() < 1e-15 && (m[1] - 0.1).abs() < 1e-15);

        let iid = systems::cantor_iid();
        let mu = StateTaggedMeasure::from_cloud(&[0.5, 0.5], iid.ambient(), 7).unwrap();
        let m = apply_operator(&mu, &iid).unwrap().masses();
        assert_eq!(m, vec![0.5, 0.5]);
    }

    #[test]
    fn validation() {
        assert!(StateTaggedMeasure::new(2, 1, vec![particle(0, 0.0, 0.5)]).is_err());
        assert!(StateTaggedMeasure::new(2, 1, vec![particle(2, 0.0, 1.0)]).is_err());
        assert!(StateTaggedMeasure::new(2, 1, vec![particle(0, 0.0, 1.5), particle(1, 0.0, -0.5)]).is_err());
        assert!(StateTaggedMeasure::new(2, 1, vec![particle(0, 0.0, 0.5), particle(1, 1.0, 0.5)]).is_ok());
    }

    #[test]
    fn resample_examples() {
        let mu = StateTaggedMeasure::new(1, 1, vec![particle(0, 0.0, 0.75), particle(0, 1.0, 0.25)]).unwrap();
        for seed in 0..20 {
            let r = resample(&mu, 4, seed).unwrap();
            let at0 = r.particles().iter().filter(|p| p.point[0] == 0.0).count();
            assert_eq!((at0, r.len() - at0), (3, 1));
        }
        let even =
            StateTaggedMeasure::new(2, 1, (0..10).map(|i| particle(i % 2, i as f64 / 10.0, 0.1)).collect()).unwrap();
        let r = resample(&even, 10, 3).unwrap();
        assert_eq!(r.sorted(), even.sorted());
        assert!(resample(&even, 1, 0).is_err());
    }

    #[test]
    fn distance_examples() {
        let a = StateTaggedMeasure::dirac(2, 0, vec![0.2]).unwrap();
        let b = StateTaggedMeasure::dirac(2, 0, vec![0.7]).unwrap();
        let c = StateTaggedMeasure::dirac(2, 1, vec![0.2]).unwrap();
        assert_eq!(weak_star_distance(&a, &a).unwrap(), 0.0);
        assert!((weak_star_distance(&a, &b).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(weak_star_distance(&a, &c).unwrap(), 2.0);
    }

    #[test]
    fn wasserstein_matches_quantile_formula() {
        // Equal-weight samples of equal size: W₁ is the mean gap of order statistics.
        let xs = [0.1, 0.4, 0.35, 0.9, 0.0];
        let ys = [0.5, 0.2, 0.8, 0.85, 0.3];
        let mut sx = xs.to_vec();
        let mut sy = ys.to_vec();
        sx.sort_by(f64::total_cmp);
        sy.sort_by(f64::total_cmp);
        let expected: f64 = sx.iter().zip(&sy).map(|(a, b)| (a - b).abs()).sum::<f64>() / 5.0;
        let wa: Vec<(f64, f64)> = sx.iter().map(|&x| (x, 0.2)).collect();
        let wb: Vec<(f64, f64)> = sy.iter().map(|&x| (x, 0.2)).collect();
        assert!((wasserstein_1d(&wa, &wb) - expected).abs() < 1e-15);
    }

    #[test]
    fn target_examples() {
        let sys = systems::cantor_iid();
        let t = estimate_target(&sys, 200, 0, 1).unwrap();
        assert!(t.measure.particles().iter().all(|p| p.point == vec![0.5]));

        let n = 20_000;
        let t = estimate_target(&sys, n, DEFAULT_TARGET_DEPTH, 7).unwrap();
        // Second moment of the Cantor measure: E[X²] = E[X²]/9 + 2/9·E[X] + 2/9 with E[X] = 1/2.
        let second = (2.0 / 9.0 * 0.5 + 2.0 / 9.0) / (1.0 - 1.0 / 9.0);
        let sd = (second - 0.25f64).sqrt();
        let mean = t.measure.integrate(|_, x| x[0]);
        assert!((mean - 0.5).abs() < 3.0 * sd / (n as f64).sqrt(), "mean {mean}");
        assert!(t.max_diameter() < TARGET_DIAMETER);
        assert!(t.depths.iter().all(|&d| d == 32));

        let contraction = MapSystem::from_f64(
            &[0.0],
            &[1.0],
            vec![MapKind::Affine { matrix: vec![vec![0.5]], offset: vec![0.4] }],
            vec![vec![1.0]],
        )
        .unwrap();
        let t = estimate_target(&contraction, 10, 64, 0).unwrap();
        assert!(t.measure.particles().iter().all(|p| (p.point[0] - 0.8).abs() < 1e-9));

        assert_eq!(estimate_target(&systems::cantor_iid(), 10, 8, 0).unwrap().depths, vec![8; 10]);
        let periodic = MapSystem::from_f64(
            &[0.0],
            &[1.0],
            vec![
                MapKind::Affine { matrix: vec![vec![0.5]], offset: vec![0.0] },
                MapKind::Affine { matrix: vec![vec![0.5]], offset: vec![0.5] },
            ],
            vec![vec![0.0, 1.0], vec![1.0, 0.0]],
        )
        .unwrap();
        assert_eq!(estimate_target(&periodic, 10, 8, 0).unwrap_err(), Error::NotPrimitive);
    }

    #[test]
    fn target_is_anchor_independent() {
        let sys = systems::cantor_markov();
        let a = estimate_target_from(&sys, 2000, 64, 3, &[0.0]).unwrap();
        let b = estimate_target_from(&sys, 2000, 64, 3, &[1.0]).unwrap();
        let d = weak_star_distance(&a.measure, &b.measure).unwrap();
        assert!(d <= a.max_diameter().max(b.max_diameter()), "{d}");
    }

    #[test]
    fn stability_mass_column_follows_matrix_powers() {
        let sys = systems::cantor_markov();
        let mu = StateTaggedMeasure::dirac(2, 0, vec![0.5]).unwrap();
        let params = StabilityParams { n_steps: 12, particles: 500, target_samples: 500, ..Default::default() };
        let report = stability_experiment(&sys, &[mu], &params).unwrap();
        assert!(report.max_mass_error() < 1e-12);
        // p̂P² for p̂ = (1, 0): first row of P² = (0.81 + 0.02, 0.09 + 0.08).
        let masses_at_2 = report.rows[2].mass_gap;
        let p = sys.shift().unwrap().stationary().as_slice().to_vec();
        assert!((masses_at_2 - (0.83f64 - p[0]).abs()).abs() < 1e-12);
        assert!(matches!(
            stability_experiment(&systems::identity_control(), &[], &params),
            Err(Error::HypothesisViolated(_))
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn resampling_preserves_section_masses(
            raw in proptest::collection::vec((0usize..3, 0.0f64..1.0, 0.01f64..1.0), 3..60),
            target in 3usize..200,
            seed in any::<u64>(),
        ) {
            let total: f64 = raw.iter().map(|r| r.2).sum();
            let particles: Vec<Particle> = raw.iter().map(|&(s, x, w)| particle(s, x, w / total)).collect();
            let mu = StateTaggedMeasure::new(3, 1, particles).unwrap();
            let r = resample(&mu, target, seed).unwrap();
            prop_assert_eq!(r.len(), target.max(mu.masses().iter().filter(|&&m| m > 0.0).count()));
            for (a, b) in mu.masses().iter().zip(r.masses()) {
                prop_assert!((a - b).abs() <= 1e-12);
            }
            prop_assert!((r.total_mass() - 1.0).abs() <= 1e-12);
            prop_assert_eq!(resample(&mu, target, seed).unwrap(), r);
        }

        #[test]
        fn distance_is_symmetric(
            a in proptest::collection::vec((0usize..2, 0.0f64..1.0), 1..20),
            b in proptest::collection::vec((0usize..2, 0.0f64..1.0), 1..20),
        ) {
            let build = |v: &[(usize, f64)]| {
                let w = 1.0 / v.len() as f64;
                StateTaggedMeasure::new(2, 1, v.iter().map(|&(s, x)| particle(s, x, w)).collect()).unwrap()
            };
            let (ma, mb) = (build(&a), build(&b));
            let d1 = weak_star_distance(&ma, &mb).unwrap();
            let d2 = weak_star_distance(&mb, &ma).unwrap();
            prop_assert!((d1 - d2).abs() < 1e-12);
            prop_assert!(d1 >= 0.0);
        }
    }
}
