//! Synchronization experiments: decay of `diam fⁿ_ω(M)` along sampled
//! words, contraction of Lebesgue measure on coordinate projections,
//! weak hyperbolicity of `ℙ⁻`-typical sequences, the coding map and
//! Birkhoff averages.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::maps::MapSystem;
use crate::operator::{compensated_sum, estimate_target, require_split, DEFAULT_TARGET_DEPTH};
use crate::shift::{Direction, MarkovShift, Start, Word};

/// Default number of points pushed forward for the lower curve.
pub const DEFAULT_CLOUD_SIZE: usize = 256;

/// Curve entries at or below this are left out of rate fits.
pub const FIT_FLOOR: f64 = 1e-14;

/// Number of batches behind a batch-means standard error.
pub const BATCHES: usize = 100;

/// Slack for comparisons between separately rounded float quantities.
pub const FLOAT_SLACK: f64 = 1e-12;

/// Upper and lower estimates of `diam_ℓ1 fⁿ_ω(M)` for `n = 0..=n_max`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DecayCurve {
    pub n: Vec<usize>,
    /// `Σ_s` width of the chained enclosure.
    pub upper: Vec<f64>,
    /// ℓ1 diameter of the pushed-forward point cloud.
    pub lower: Vec<f64>,
}

/// ℓ1 diameter of a finite point set: the largest spread of `σ·x` over
/// sign vectors `σ` with `σ₀ = +1`.
pub fn l1_diameter(points: &[Vec<f64>]) -> f64 {
    let Some(m) = points.first().map(Vec::len) else {
        return 0.0;
    };
    let mut best = 0.0f64;
    for mask in 0..1usize << m.saturating_sub(1) {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for x in points {
            let v: f64 =
                x.iter().enumerate().map(|(s, &xs)| if s > 0 && mask >> (s - 1) & 1 == 1 { -xs } else { xs }).sum();
            lo = lo.min(v);
            hi = hi.max(v);
        }
        best = best.max(hi - lo);
    }
    best
}

fn prefix(omega: &Word, n: usize) -> Result<Word> {
    if omega.len() < n {
        return Err(Error::LengthMismatch(format!("|ω| = {} is shorter than n_max = {n}", omega.len())));
    }
    Ok(Word(omega.symbols()[..n].to_vec()))
}

pub fn image_diameter_curve(sys: &MapSystem, omega: &Word, n_max: usize, cloud_size: usize) -> Result<DecayCurve> {
    let w = prefix(omega, n_max)?;
    let chain = sys.forward_enclosure_chain(&w)?;
    let mut cloud = sys.ambient().point_cloud(cloud_size);
    let mut lower = Vec::with_capacity(n_max + 1);
    lower.push(l1_diameter(&cloud));
    for &s in w.symbols() {
        for x in cloud.iter_mut() {
            *x = sys.maps()[s].evaluate(x);
        }
        lower.push(l1_diameter(&cloud));
    }
    Ok(DecayCurve { n: (0..=n_max).collect(), upper: chain.iter().map(|b| b.l1_diameter()).collect(), lower })
}

/// `(C, q)` with `value_n ≈ C qⁿ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DecayFit {
    pub c: f64,
    pub q: f64,
    /// Number of leading points used.
    pub points: usize,
}

/// Least squares of `ln value_n` against `n` over the leading entries that
/// are finite and above [`FIT_FLOOR`].
pub fn fit_decay(values: &[f64]) -> Result<DecayFit> {
    let usable = values.iter().take_while(|v| v.is_finite() && **v > FIT_FLOOR).count();
    if usable < 3 {
        return Err(Error::DegenerateCurve);
    }
    let xs: Vec<f64> = (0..usable).map(|n| n as f64).collect();
    let ys: Vec<f64> = values[..usable].iter().map(|v| v.ln()).collect();
    let len = usable as f64;
    let mx = xs.iter().sum::<f64>() / len;
    let my = compensated_sum(ys.iter().copied()) / len;
    let sxy = compensated_sum(xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)));
    let sxx = compensated_sum(xs.iter().map(|x| (x - mx) * (x - mx)));
    let slope = sxy / sxx;
    Ok(DecayFit { c: (my - slope * mx).exp(), q: slope.exp(), points: usable })
}

/// Rate of the upper (rigorous) curve.
pub fn fit_decay_rate(curve: &DecayCurve) -> Result<DecayFit> {
    fit_decay(&curve.upper)
}

#[derive(Clone, Debug, Serialize)]
pub struct SyncTrial {
    pub trial: usize,
    pub seed: u64,
    pub word: Word,
    pub curve: DecayCurve,
    pub fit: DecayFit,
}

#[derive(Clone, Debug, Serialize)]
pub struct SyncReport {
    pub row_positive_state: usize,
    pub trials: Vec<SyncTrial>,
    pub max_q: f64,
    pub fraction_contracting: f64,
}

fn row_positive(shift: &MarkovShift<f64>) -> Result<usize> {
    shift.row_positive_state().ok_or(Error::NoRowPositiveState)
}

/// Samples `trials` words from `ℙ` (trial `i` uses seed `seed + i`),
/// builds their decay curves and fits rates.
pub fn sync_experiment(
    sys: &MapSystem,
    trials: usize,
    n_max: usize,
    cloud_size: usize,
    seed: u64,
) -> Result<SyncReport> {
    let shift = sys.shift()?;
    let u = row_positive(shift)?;
    let rows = (0..trials)
        .into_par_iter()
        .map(|i| -> Result<SyncTrial> {
            let s = seed.wrapping_add(i as u64);
            let word = shift.sample_word_seeded(n_max, Start::Stationary, Direction::Forward, s);
            let curve = image_diameter_curve(sys, &word, n_max, cloud_size)?;
            let fit = fit_decay_rate(&curve)?;
            Ok(SyncTrial { trial: i, seed: s, word, curve, fit })
        })
        .collect::<Result<Vec<_>>>()?;
    let max_q = rows.iter().map(|t| t.fit.q).fold(f64::NEG_INFINITY, f64::max);
    let contracting = rows.iter().filter(|t| t.fit.q < 1.0).count();
    Ok(SyncReport {
        row_positive_state: u,
        fraction_contracting: if trials == 0 { 0.0 } else { contracting as f64 / trials as f64 },
        max_q,
        trials: rows,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ContractionTrial {
    pub trial: usize,
    pub coordinate: usize,
    /// Lebesgue length of `π_s` of the chained enclosure, `n = 0..=n_max`.
    pub lengths: Vec<f64>,
    pub fit: DecayFit,
}

/// Per trial and coordinate, the Lebesgue length of `π_s(fⁿ_ω(M))` as
/// bounded by the chained enclosure, with fitted rates.
pub fn measure_contraction_experiment(
    sys: &MapSystem,
    trials: usize,
    n_max: usize,
    seed: u64,
) -> Result<Vec<ContractionTrial>> {
    let shift = sys.shift()?;
    row_positive(shift)?;
    let per_trial = (0..trials)
        .into_par_iter()
        .map(|i| -> Result<Vec<ContractionTrial>> {
            let word =
                shift.sample_word_seeded(n_max, Start::Stationary, Direction::Forward, seed.wrapping_add(i as u64));
            let chain = sys.forward_enclosure_chain(&word)?;
            (0..sys.dim())
                .map(|s| {
                    let lengths: Vec<f64> = chain.iter().map(|b| b.width(s)).collect();
                    Ok(ContractionTrial { trial: i, coordinate: s, fit: fit_decay(&lengths)?, lengths })
                })
                .collect()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(per_trial.into_iter().flatten().collect())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WeakHyperbolicityReport {
    pub trials: usize,
    pub depth: usize,
    pub tol: f64,
    pub below_tol: usize,
    pub fraction: f64,
    pub max_diameter: f64,
}

/// Fraction of `ξ ~ ℙ⁻` whose chained enclosure of
/// `f_{ξ₀}∘⋯∘f_{ξ_depth}(M)` has ℓ1 diameter below `tol`. Sample `i`
/// uses seed `seed + i`.
pub fn weak_hyperbolicity_experiment(
    sys: &MapSystem,
    trials: usize,
    depth: usize,
    tol: f64,
    seed: u64,
) -> Result<WeakHyperbolicityReport> {
    let shift = sys.shift()?;
    let diameters = (0..trials)
        .into_par_iter()
        .map(|i| {
            let xi =
                shift.sample_word_seeded(depth + 1, Start::Stationary, Direction::Inverse, seed.wrapping_add(i as u64));
            sys.reverse_enclosure(&xi).map(|b| b.l1_diameter())
        })
        .collect::<Result<Vec<f64>>>()?;
    let below = diameters.iter().filter(|&&d| d < tol).count();
    Ok(WeakHyperbolicityReport {
        trials,
        depth,
        tol,
        below_tol: below,
        fraction: if trials == 0 { 0.0 } else { below as f64 / trials as f64 },
        max_diameter: diameters.iter().copied().fold(0.0, f64::max),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CodingPoint {
    pub point: Vec<f64>,
    /// ℓ1 diameter of the chained enclosure; bounds the distance from
    /// `point` to the coding point of any extension of the word.
    pub bound: f64,
}

/// `f_{ω₀}∘⋯∘f_{ω_{n−1}}(anchor)` with the box centre as default anchor.
pub fn coding_point(sys: &MapSystem, omega: &Word, anchor: Option<&[f64]>) -> Result<CodingPoint> {
    if omega.is_empty() {
        return Err(Error::EmptyWord);
    }
    let center = sys.ambient().center();
    let anchor = anchor.unwrap_or(&center);
    Ok(CodingPoint {
        point: sys.reverse_composition(omega, anchor)?,
        bound: sys.reverse_enclosure(omega)?.l1_diameter(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InvarianceCheck {
    /// `|f_{ω₀}(π(σω)) − π(ω)|₁`.
    pub residual: f64,
    pub bound_omega: f64,
    pub bound_shifted: f64,
    pub holds: bool,
}

/// Compares `f_{ω₀}(π(σω))` with `π(ω)`, both coding points taken at the
/// full length of their words, so `ω` must have at least two symbols.
pub fn invariance_residual(sys: &MapSystem, omega: &Word) -> Result<InvarianceCheck> {
    if omega.len() < 2 {
        return Err(Error::LengthMismatch("the invariance check needs |ω| >= 2".into()));
    }
    let head = Word(omega.symbols()[..omega.len() - 1].to_vec());
    let here = coding_point(sys, &head, None)?;
    let there = coding_point(sys, &omega.shifted(), None)?;
    let pushed = sys.evaluate_map(omega.symbols()[0], &there.point)?;
    let residual: f64 = pushed.iter().zip(&here.point).map(|(a, b)| (a - b).abs()).sum();
    let scale = sys.ambient().l1_diameter().max(1.0);
    Ok(InvarianceCheck {
        residual,
        bound_omega: here.bound,
        bound_shifted: there.bound,
        holds: residual <= here.bound + there.bound + FLOAT_SLACK * scale,
    })
}

/// Built-in observables for ergodic averages (0-based coordinates).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum TestFunction {
    Coordinate { s: usize },
    CoordinateSquared { s: usize },
    Product { s: usize, t: usize },
    Constant { c: f64 },
}

impl TestFunction {
    pub fn eval(&self, x: &[f64]) -> f64 {
        match *self {
            TestFunction::Coordinate { s } => x[s],
            TestFunction::CoordinateSquared { s } => x[s] * x[s],
            TestFunction::Product { s, t } => x[s] * x[t],
            TestFunction::Constant { c } => c,
        }
    }

    fn max_coordinate(&self) -> Option<usize> {
        match *self {
            TestFunction::Coordinate { s } | TestFunction::CoordinateSquared { s } => Some(s),
            TestFunction::Product { s, t } => Some(s.max(t)),
            TestFunction::Constant { .. } => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ErgodicReport {
    pub n: usize,
    pub time_average: f64,
    /// Batch-means standard error over [`BATCHES`] batches.
    pub std_error: f64,
    pub reference: f64,
    pub reference_std_error: f64,
}

/// Mean and batch-means standard error of a dependent sequence.
pub fn batch_means(values: &[f64], batches: usize) -> (f64, f64) {
    let mean = compensated_sum(values.iter().copied()) / values.len() as f64;
    let size = values.len() / batches;
    if batches < 2 || size == 0 {
        return (mean, f64::NAN);
    }
    let means: Vec<f64> =
        values.chunks_exact(size).take(batches).map(|c| compensated_sum(c.iter().copied()) / size as f64).collect();
    let centre = compensated_sum(means.iter().copied()) / batches as f64;
    let var = compensated_sum(means.iter().map(|m| (m - centre) * (m - centre))) / (batches - 1) as f64;
    (mean, (var / batches as f64).sqrt())
}

/// Birkhoff average `(1/n) Σ_{i<n} φ(fⁱ_ω(x))` along one `ω ~ ℙ` drawn
/// with `seed`, against `∫φ d(π*ℙ⁻)` estimated from `reference_samples`
/// target samples.
pub fn ergodic_average(
    sys: &MapSystem,
    x: &[f64],
    phi: TestFunction,
    n: usize,
    seed: u64,
    reference_samples: usize,
) -> Result<ErgodicReport> {
    let shift = sys.shift()?;
    if !shift.classification().is_primitive() {
        return Err(Error::NotPrimitive);
    }
    require_split(sys)?;
    if let Some(s) = phi.max_coordinate() {
        if s >= sys.dim() {
            return Err(Error::DimensionMismatch { expected: sys.dim(), got: s + 1 });
        }
    }
    if n == 0 {
        return Err(Error::InvalidArgument("n must be positive".into()));
    }
    sys.evaluate_map(0, x)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let omega = shift.sample_word(n, Start::Stationary, Direction::Forward, &mut rng);
    let mut values = Vec::with_capacity(n);
    let mut point = x.to_vec();
    for &s in omega.symbols() {
        values.push(phi.eval(&point));
        point = sys.maps()[s].evaluate(&point);
    }
    let (time_average, std_error) = batch_means(&values, BATCHES);
    let target = estimate_target(sys, reference_samples, DEFAULT_TARGET_DEPTH, seed ^ 0x5eed_7a26_e700_0000)?;
    let samples: Vec<f64> = target.measure.particles().iter().map(|p| phi.eval(&p.point)).collect();
    let m = samples.len() as f64;
    let reference = compensated_sum(samples.iter().copied()) / m;
    let var = compensated_sum(samples.iter().map(|v| (v - reference) * (v - reference))) / (m - 1.0).max(1.0);
    Ok(ErgodicReport { n, time_average, std_error, reference, reference_std_error: (var / m).sqrt() })
}
