//! Maps on a compact box, their compositions in both orders, image
//! enclosures and monotone-type classification.
//!
//! A [`MapSystem`] keeps two copies of its data: `f64` for simulation and
//! exact rationals for the self-map check and the exact oracle mode.

use std::fmt;

use num_rational::BigRational;
use num_traits::Signed;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::Field;
use crate::shift::{MarkovShift, TransitionMatrix, Word};

/// Product of closed intervals `[lo_s, hi_s]`.
///
/// Widths are tracked separately from the endpoints: for a contraction the
/// width of an image is computed from the width of the preimage, so long
/// chains keep full relative accuracy even when `hi - lo` would cancel.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntervalBox {
    lo: Vec<f64>,
    hi: Vec<f64>,
    width: Vec<f64>,
}

impl IntervalBox {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.is_empty() {
            return Err(Error::InvalidBox("box has dimension 0".into()));
        }
        if lo.len() != hi.len() {
            return Err(Error::DimensionMismatch { expected: lo.len(), got: hi.len() });
        }
        for (s, (l, h)) in lo.iter().zip(&hi).enumerate() {
            if !l.is_finite() || !h.is_finite() || l > h {
                return Err(Error::InvalidBox(format!("coordinate {}: [{l}, {h}]", s + 1)));
            }
        }
        let width = lo.iter().zip(&hi).map(|(l, h)| h - l).collect();
        Ok(IntervalBox { lo, hi, width })
    }

    pub fn unit(m: usize) -> Self {
        IntervalBox { lo: vec![0.0; m], hi: vec![1.0; m], width: vec![1.0; m] }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    /// Length of the projection `π_s`.
    pub fn width(&self, s: usize) -> f64 {
        self.width[s]
    }

    pub fn widths(&self) -> &[f64] {
        &self.width
    }

    /// ℓ1 diameter `Σ_s (hi_s − lo_s)`.
    pub fn l1_diameter(&self) -> f64 {
        self.width.iter().sum()
    }

    pub fn center(&self) -> Vec<f64> {
        self.lo.iter().zip(&self.width).map(|(l, w)| l + 0.5 * w).collect()
    }

    pub fn projection(&self, s: usize) -> (f64, f64) {
        (self.lo[s], self.hi[s])
    }

    /// Membership with an absolute slack `tol` on every coordinate.
    pub fn contains_point(&self, x: &[f64], tol: f64) -> bool {
        x.len() == self.dim()
            && x.iter().zip(self.lo.iter().zip(&self.hi)).all(|(v, (l, h))| *v >= l - tol && *v <= h + tol)
    }

    pub fn contains_box(&self, other: &IntervalBox) -> bool {
        other.dim() == self.dim() && (0..self.dim()).all(|s| other.lo[s] >= self.lo[s] && other.hi[s] <= self.hi[s])
    }

    /// Closed projections `π_s` of the two boxes are disjoint.
    pub fn disjoint_in(&self, other: &IntervalBox, s: usize) -> bool {
        self.hi[s] < other.lo[s] || other.hi[s] < self.lo[s]
    }

    pub fn disjoint_in_every_projection(&self, other: &IntervalBox) -> bool {
        (0..self.dim()).all(|s| self.disjoint_in(other, s))
    }

    /// Corners first, then a Halton fill of the interior, `size` points in
    /// total (never fewer than the `2^m` corners).
    pub fn point_cloud(&self, size: usize) -> Vec<Vec<f64>> {
        let mut cloud = self.corners();
        let m = self.dim();
        let mut index = 1u64;
        while cloud.len() < size {
            let u = halton(index, m);
            cloud.push((0..m).map(|s| self.lo[s] + u[s] * self.width[s]).collect());
            index += 1;
        }
        cloud
    }

    /// All `2^m` corners, in binary order of the coordinate choices.
    pub fn corners(&self) -> Vec<Vec<f64>> {
        let m = self.dim();
        (0..1usize << m)
            .map(|mask| (0..m).map(|s| if mask >> s & 1 == 1 { self.hi[s] } else { self.lo[s] }).collect())
            .collect()
    }
}

const HALTON_BASES: [u64; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

/// Point `index` of the Halton sequence in `[0, 1)^m` (m ≤ 16; higher
/// coordinates reuse the bases cyclically).
pub fn halton(index: u64, m: usize) -> Vec<f64> {
    (0..m)
        .map(|s| {
            let base = HALTON_BASES[s % HALTON_BASES.len()];
            let mut i = index;
            let mut f = 1.0;
            let mut r = 0.0;
            while i > 0 {
                f /= base as f64;
                r += f * (i % base) as f64;
                i /= base;
            }
            r
        })
        .collect()
}

/// Sign of the dependence of a coordinate function on one variable.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sign {
    #[serde(rename = "+")]
    Plus,
    #[serde(rename = "-")]
    Minus,
    #[serde(rename = "0")]
    Zero,
}

impl Sign {
    pub fn of<T: Field>(x: &T) -> Sign {
        if x.is_positive() {
            Sign::Plus
        } else if x.is_negative() {
            Sign::Minus
        } else {
            Sign::Zero
        }
    }

    pub fn flipped(self) -> Sign {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
            Sign::Zero => Sign::Zero,
        }
    }

    pub fn parse(text: &str) -> Result<Sign> {
        match text.trim() {
            "+" => Ok(Sign::Plus),
            "-" => Ok(Sign::Minus),
            "0" => Ok(Sign::Zero),
            other => Err(Error::Parse(format!("sign must be +, - or 0, found {other:?}"))),
        }
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sign::Plus => "+",
            Sign::Minus => "-",
            Sign::Zero => "0",
        })
    }
}

/// `table[i][j]`: sign of `∂f^i/∂x_j`.
pub type SignTable = Vec<Vec<Sign>>;

/// A map kind over any field. Möbius maps are one-dimensional.
#[derive(Clone, Debug, PartialEq)]
pub enum MapKind<T> {
    Affine { matrix: Vec<Vec<T>>, offset: Vec<T> },
    Moebius { a: T, b: T, c: T, d: T },
}

impl<T: Field> MapKind<T> {
    pub fn dim(&self) -> usize {
        match self {
            MapKind::Affine { offset, .. } => offset.len(),
            MapKind::Moebius { .. } => 1,
        }
    }

    fn validate_shape(&self) -> Result<()> {
        if let MapKind::Affine { matrix, offset } = self {
            let m = offset.len();
            if m == 0 {
                return Err(Error::InvalidMap("affine map has dimension 0".into()));
            }
            if matrix.len() != m || matrix.iter().any(|r| r.len() != m) {
                return Err(Error::InvalidMap(format!("affine matrix must be {m}x{m}")));
            }
        }
        Ok(())
    }

    /// `Ax + b` or `(ax + b)/(cx + d)`, without domain checks.
    pub fn apply(&self, x: &[T]) -> Vec<T> {
        match self {
            MapKind::Affine { matrix, offset } => matrix
                .iter()
                .zip(offset)
                .map(|(row, b)| row.iter().zip(x).fold(b.clone(), |acc, (a, v)| acc + a.clone() * v.clone()))
                .collect(),
            MapKind::Moebius { a, b, c, d } => {
                let v = x[0].clone();
                vec![(a.clone() * v.clone() + b.clone()) / (c.clone() * v + d.clone())]
            }
        }
    }

    /// Exact coordinate ranges of the image of the box `[lo, hi]`.
    pub fn image_bounds(&self, lo: &[T], hi: &[T]) -> Result<(Vec<T>, Vec<T>)> {
        match self {
            MapKind::Affine { matrix, offset } => {
                let mut out_lo = Vec::with_capacity(offset.len());
                let mut out_hi = Vec::with_capacity(offset.len());
                for (row, b) in matrix.iter().zip(offset) {
                    let mut l = b.clone();
                    let mut h = b.clone();
                    for (a, (x0, x1)) in row.iter().zip(lo.iter().zip(hi)) {
                        let u = a.clone() * x0.clone();
                        let v = a.clone() * x1.clone();
                        if u <= v {
                            l = l + u;
                            h = h + v;
                        } else {
                            l = l + v;
                            h = h + u;
                        }
                    }
                    out_lo.push(l);
                    out_hi.push(h);
                }
                Ok((out_lo, out_hi))
            }
            MapKind::Moebius { a, b, c, d } => {
                let den_lo = c.clone() * lo[0].clone() + d.clone();
                let den_hi = c.clone() * hi[0].clone() + d.clone();
                if den_lo.is_zero() || den_hi.is_zero() || den_lo.signum() != den_hi.signum() {
                    return Err(Error::DenominatorVanishes);
                }
                let y0 = (a.clone() * lo[0].clone() + b.clone()) / den_lo;
                let y1 = (a.clone() * hi[0].clone() + b.clone()) / den_hi;
                Ok(if y0 <= y1 { (vec![y0], vec![y1]) } else { (vec![y1], vec![y0]) })
            }
        }
    }

    /// Variable-sign table; `None` for a degenerate coordinate function
    /// (all-zero affine row or a constant Möbius map).
    pub fn sign_table(&self) -> Option<SignTable> {
        match self {
            MapKind::Affine { matrix, .. } => {
                let table: SignTable = matrix.iter().map(|row| row.iter().map(Sign::of).collect()).collect();
                table.iter().all(|row| row.iter().any(|s| *s != Sign::Zero)).then_some(table)
            }
            MapKind::Moebius { a, b, c, d } => {
                let det = a.clone() * d.clone() - b.clone() * c.clone();
                match Sign::of(&det) {
                    Sign::Zero => None,
                    s => Some(vec![vec![s]]),
                }
            }
        }
    }

    pub fn map_field<U: Field>(&self, f: impl Fn(&T) -> U) -> MapKind<U> {
        match self {
            MapKind::Affine { matrix, offset } => MapKind::Affine {
                matrix: matrix.iter().map(|r| r.iter().map(&f).collect()).collect(),
                offset: offset.iter().map(&f).collect(),
            },
            MapKind::Moebius { a, b, c, d } => MapKind::Moebius { a: f(a), b: f(b), c: f(c), d: f(d) },
        }
    }
}

impl MapKind<f64> {
    /// Image box with accurately propagated widths.
    pub fn box_image(&self, bx: &IntervalBox) -> Result<IntervalBox> {
        let (lo, hi) = self.image_bounds(&bx.lo, &bx.hi)?;
        let width = match self {
            MapKind::Affine { matrix, .. } => {
                matrix.iter().map(|row| row.iter().zip(&bx.width).map(|(a, w)| a.abs() * w).sum()).collect()
            }
            MapKind::Moebius { a, b, c, d } => {
                let det = (a * d - b * c).abs();
                let den = ((c * bx.lo[0] + d) * (c * bx.hi[0] + d)).abs();
                vec![det * bx.width[0] / den]
            }
        };
        Ok(IntervalBox { lo, hi, width })
    }

    /// Nonsingular linear part, or nonvanishing Möbius determinant.
    pub fn is_injective(&self) -> bool {
        match self {
            MapKind::Affine { matrix, .. } => determinant(matrix) != 0.0,
            MapKind::Moebius { a, b, c, d } => a * d - b * c != 0.0,
        }
    }
}

#[allow(clippy::needless_range_loop)]
fn determinant(matrix: &[Vec<f64>]) -> f64 {
    let n = matrix.len();
    let mut a = matrix.to_vec();
    let mut det = 1.0;
    for col in 0..n {
        let Some(pivot) = (col..n).max_by(|&r, &s| a[r][col].abs().total_cmp(&a[s][col].abs())) else {
            return 0.0;
        };
        if a[pivot][col] == 0.0 {
            return 0.0;
        }
        if pivot != col {
            a.swap(pivot, col);
            det = -det;
        }
        det *= a[col][col];
        for row in col + 1..n {
            let factor = a[row][col] / a[col][col];
            for c in col..n {
                a[row][c] -= factor * a[col][c];
            }
        }
    }
    det
}

/// One map of a system: float and exact coefficients plus its sign table.
#[derive(Clone, Debug)]
pub struct MapSpec {
    pub kind: MapKind<f64>,
    pub exact: MapKind<BigRational>,
    pub declared_types: Option<SignTable>,
}

impl MapSpec {
    pub fn evaluate(&self, x: &[f64]) -> Vec<f64> {
        self.kind.apply(x)
    }

    pub fn box_image(&self, bx: &IntervalBox) -> Result<IntervalBox> {
        self.kind.box_image(bx)
    }
}

/// Input description of one map, in exact arithmetic.
#[derive(Clone, Debug)]
pub struct MapDefinition {
    pub kind: MapKind<BigRational>,
    pub declared_types: Option<SignTable>,
}

impl MapDefinition {
    pub fn new(kind: MapKind<BigRational>) -> Self {
        MapDefinition { kind, declared_types: None }
    }

    /// Lift float coefficients through their shortest decimal form.
    pub fn from_f64(kind: MapKind<f64>) -> Self {
        MapDefinition::new(kind.map_field(|x| <BigRational as Field>::from_f64(*x)))
    }

    pub fn with_declared_types(mut self, table: SignTable) -> Self {
        self.declared_types = Some(table);
        self
    }
}

/// A monotone class `S(t_1..t_m)` together with every map's sign table.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MonotoneType {
    pub t: Vec<Sign>,
    pub tables: Vec<SignTable>,
}

impl MonotoneType {
    pub fn t_string(&self) -> String {
        let parts: Vec<String> = self.t.iter().map(Sign::to_string).collect();
        format!("({})", parts.join(","))
    }
}

/// Whether `table` belongs to `S(t)`: rows `i` with `t_i = t_1` have type
/// `t`, the others type `−t`; a zero entry is compatible with either sign.
pub fn table_in_class(table: &SignTable, t: &[Sign]) -> bool {
    table.iter().enumerate().all(|(i, row)| {
        let flip = t[i] != t[0];
        row.iter().zip(t).all(|(sign, tj)| {
            let expected = if flip { tj.flipped() } else { *tj };
            *sign == Sign::Zero || *sign == expected
        })
    })
}

/// Ambient box, `k` maps and the driving Markov chain.
#[derive(Clone, Debug)]
pub struct MapSystem {
    ambient: IntervalBox,
    exact_lo: Vec<BigRational>,
    exact_hi: Vec<BigRational>,
    maps: Vec<MapSpec>,
    matrix: TransitionMatrix<f64>,
    exact_matrix: Vec<Vec<BigRational>>,
    shift: Option<MarkovShift<f64>>,
}

impl MapSystem {
    /// Validates dimensions, Möbius denominators and the exact self-map
    /// property `f_i(M) ⊆ M` for every map.
    pub fn new(
        lo: Vec<BigRational>,
        hi: Vec<BigRational>,
        maps: Vec<MapDefinition>,
        transition: Vec<Vec<BigRational>>,
    ) -> Result<Self> {
        let ambient = IntervalBox::new(lo.iter().map(Field::to_f64).collect(), hi.iter().map(Field::to_f64).collect())?;
        if lo.iter().zip(&hi).any(|(l, h)| l > h) {
            return Err(Error::InvalidBox("lo exceeds hi".into()));
        }
        let m = lo.len();
        let matrix = TransitionMatrix::new(transition.iter().map(|r| r.iter().map(Field::to_f64).collect()).collect())?;
        if matrix.k() != maps.len() {
            return Err(Error::DimensionMismatch { expected: matrix.k(), got: maps.len() });
        }
        let mut specs = Vec::with_capacity(maps.len());
        for (i, def) in maps.into_iter().enumerate() {
            def.kind.validate_shape()?;
            if def.kind.dim() != m {
                return Err(Error::DimensionMismatch { expected: m, got: def.kind.dim() });
            }
            let (img_lo, img_hi) = def.kind.image_bounds(&lo, &hi)?;
            let inside = (0..m).all(|s| img_lo[s] >= lo[s] && img_hi[s] <= hi[s]);
            if !inside {
                return Err(Error::NotSelfMap(i + 1));
            }
            if let Some(declared) = &def.declared_types {
                let computed = def.kind.sign_table();
                if computed.as_ref() != Some(declared) {
                    return Err(Error::InvalidMap(format!(
                        "map {} declares types {:?} but its coefficients give {:?}",
                        i + 1,
                        declared,
                        computed
                    )));
                }
            }
            specs.push(MapSpec {
                kind: def.kind.map_field(Field::to_f64),
                exact: def.kind,
                declared_types: def.declared_types,
            });
        }
        let shift = MarkovShift::new(matrix.clone()).ok();
        Ok(MapSystem { ambient, exact_lo: lo, exact_hi: hi, maps: specs, matrix, exact_matrix: transition, shift })
    }

    /// Float convenience constructor; coefficients are lifted to rationals
    /// through their shortest decimal representation.
    pub fn from_f64(lo: &[f64], hi: &[f64], maps: Vec<MapKind<f64>>, transition: Vec<Vec<f64>>) -> Result<Self> {
        let lift = |x: &f64| <BigRational as Field>::from_f64(*x);
        MapSystem::new(
            lo.iter().map(lift).collect(),
            hi.iter().map(lift).collect(),
            maps.into_iter().map(MapDefinition::from_f64).collect(),
            transition.iter().map(|r| r.iter().map(lift).collect()).collect(),
        )
    }

    pub fn k(&self) -> usize {
        self.maps.len()
    }

    pub fn dim(&self) -> usize {
        self.ambient.dim()
    }

    pub fn ambient(&self) -> &IntervalBox {
        &self.ambient
    }

    pub fn exact_ambient(&self) -> (&[BigRational], &[BigRational]) {
        (&self.exact_lo, &self.exact_hi)
    }

    pub fn maps(&self) -> &[MapSpec] {
        &self.maps
    }

    pub fn matrix(&self) -> &TransitionMatrix<f64> {
        &self.matrix
    }

    pub fn exact_matrix_rows(&self) -> &[Vec<BigRational>] {
        &self.exact_matrix
    }

    /// The driving shift; fails for reducible matrices.
    pub fn shift(&self) -> Result<&MarkovShift<f64>> {
        self.shift.as_ref().ok_or(Error::NotIrreducible)
    }

    /// The shift rebuilt in exact arithmetic. Fails if the rational
    /// transition rows do not sum to exactly one.
    pub fn exact_shift(&self) -> Result<MarkovShift<BigRational>> {
        MarkovShift::new(TransitionMatrix::new(self.exact_matrix.clone())?)
    }

    fn check_word(&self, w: &Word) -> Result<()> {
        w.check_alphabet(self.k())
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: x.len() });
        }
        let scale = self.ambient.lo.iter().chain(&self.ambient.hi).fold(1.0f64, |a, v| a.max(v.abs()));
        if self.ambient.contains_point(x, 1e-9 * scale) {
            Ok(())
        } else {
            Err(Error::OutsideDomain)
        }
    }

    /// `f_i(x)` for a 0-based map index.
    pub fn evaluate_map(&self, i: usize, x: &[f64]) -> Result<Vec<f64>> {
        if i >= self.k() {
            return Err(Error::SymbolOutOfRange { symbol: i + 1, k: self.k() });
        }
        self.check_point(x)?;
        Ok(self.maps[i].evaluate(x))
    }

    /// `f_{w_{n−1}} ∘ ⋯ ∘ f_{w_0}(x)`: the first symbol acts first.
    pub fn forward_orbit(&self, w: &Word, x: &[f64]) -> Result<Vec<f64>> {
        self.check_word(w)?;
        self.check_point(x)?;
        Ok(self.forward_orbit_unchecked(w.symbols(), x))
    }

    pub(crate) fn forward_orbit_unchecked(&self, w: &[usize], x: &[f64]) -> Vec<f64> {
        w.iter().fold(x.to_vec(), |p, &s| self.maps[s].evaluate(&p))
    }

    /// `f_{w_0} ∘ ⋯ ∘ f_{w_{n−1}}(x)`: the last symbol acts first.
    pub fn reverse_composition(&self, w: &Word, x: &[f64]) -> Result<Vec<f64>> {
        self.check_word(w)?;
        self.check_point(x)?;
        Ok(self.reverse_composition_unchecked(w.symbols(), x))
    }

    pub(crate) fn reverse_composition_unchecked(&self, w: &[usize], x: &[f64]) -> Vec<f64> {
        w.iter().rev().fold(x.to_vec(), |p, &s| self.maps[s].evaluate(&p))
    }

    pub fn box_image(&self, i: usize, bx: &IntervalBox) -> Result<IntervalBox> {
        if i >= self.k() {
            return Err(Error::SymbolOutOfRange { symbol: i + 1, k: self.k() });
        }
        self.maps[i].box_image(bx)
    }

    /// Chained enclosure of `f_{w_{n−1}} ∘ ⋯ ∘ f_{w_0}(M)`.
    pub fn forward_enclosure(&self, w: &Word) -> Result<IntervalBox> {
        self.check_word(w)?;
        w.symbols().iter().try_fold(self.ambient.clone(), |b, &s| self.maps[s].box_image(&b))
    }

    /// Enclosures of `fⁿ_w(M)` for every prefix length `n = 0..=|w|`.
    pub fn forward_enclosure_chain(&self, w: &Word) -> Result<Vec<IntervalBox>> {
        self.check_word(w)?;
        let mut chain = Vec::with_capacity(w.len() + 1);
        chain.push(self.ambient.clone());
        for &s in w.symbols() {
            let next = self.maps[s].box_image(chain.last().unwrap())?;
            chain.push(next);
        }
        Ok(chain)
    }

    /// Chained enclosure of `f_{w_0} ∘ ⋯ ∘ f_{w_{n−1}}(M)`.
    pub fn reverse_enclosure(&self, w: &Word) -> Result<IntervalBox> {
        self.check_word(w)?;
        w.symbols().iter().rev().try_fold(self.ambient.clone(), |b, &s| self.maps[s].box_image(&b))
    }

    /// Chained enclosure of `f_{w_0} ∘ ⋯ ∘ f_{w_{n−1}}(B)` for an arbitrary box.
    pub fn reverse_enclosure_of(&self, w: &Word, bx: &IntervalBox) -> Result<IntervalBox> {
        self.check_word(w)?;
        w.symbols().iter().rev().try_fold(bx.clone(), |b, &s| self.maps[s].box_image(&b))
    }

    /// Every class `S(t)` (in `{+,−}^m`, `+` before `−`, first coordinate
    /// varying slowest) that contains all the maps.
    pub fn monotone_classes(&self) -> Vec<MonotoneType> {
        let Some(tables) = self.maps.iter().map(|f| f.exact.sign_table()).collect::<Option<Vec<_>>>() else {
            return Vec::new();
        };
        let m = self.dim();
        (0..1usize << m)
            .map(|mask| {
                (0..m).map(|s| if mask >> (m - 1 - s) & 1 == 1 { Sign::Minus } else { Sign::Plus }).collect::<Vec<_>>()
            })
            .filter(|t| tables.iter().all(|table| table_in_class(table, t)))
            .map(|t| MonotoneType { t, tables: tables.clone() })
            .collect()
    }

    /// The first class from [`MapSystem::monotone_classes`], or `None`.
    pub fn classify_monotone_type(&self) -> Option<MonotoneType> {
        self.monotone_classes().into_iter().next()
    }

    pub fn all_maps_injective(&self) -> bool {
        self.maps.iter().all(|f| f.kind.is_injective())
    }

    pub fn all_maps_affine(&self) -> bool {
        self.maps.iter().all(|f| matches!(f.kind, MapKind::Affine { .. }))
    }

    /// Largest induced ℓ1 operator norm (max column sum) among affine maps;
    /// `None` if some map is not affine.
    pub fn max_affine_l1_norm(&self) -> Option<f64> {
        self.maps
            .iter()
            .map(|f| match &f.kind {
                MapKind::Affine { matrix, .. } => {
                    let m = matrix.len();
                    Some((0..m).map(|j| matrix.iter().map(|r| r[j].abs()).sum::<f64>()).fold(0.0, f64::max))
                }
                MapKind::Moebius { .. } => None,
            })
            .try_fold(0.0f64, |acc, n| n.map(|n| acc.max(n)))
    }
}

/// Convenience: exact rational `n/d`.
pub fn ratio(n: i64, d: i64) -> BigRational {
    BigRational::new(n.into(), d.into())
}
