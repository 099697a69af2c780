//! Reference systems used by the tests, benchmarks and shipped configs.
//!
//! All four splitting systems admit the witness `((1,1), (2,1))`.

use num_rational::BigRational;

use crate::field::parse_exact;
use crate::maps::{MapDefinition, MapKind, MapSystem};
use crate::shift::Word;

fn q(text: &str) -> BigRational {
    parse_exact(text).expect("constant parses")
}

fn rows(m: &[&[&str]]) -> Vec<Vec<BigRational>> {
    m.iter().map(|r| r.iter().map(|x| q(x)).collect()).collect()
}

fn affine(matrix: &[&[&str]], offset: &[&str]) -> MapDefinition {
    MapDefinition::new(MapKind::Affine { matrix: rows(matrix), offset: offset.iter().map(|x| q(x)).collect() })
}

fn moebius(a: &str, b: &str, c: &str, d: &str) -> MapDefinition {
    MapDefinition::new(MapKind::Moebius { a: q(a), b: q(b), c: q(c), d: q(d) })
}

fn unit_interval(maps: Vec<MapDefinition>, transition: &[&[&str]]) -> MapSystem {
    MapSystem::new(vec![q("0")], vec![q("1")], maps, rows(transition)).expect("reference system is valid")
}

fn cantor_maps() -> Vec<MapDefinition> {
    vec![affine(&[&["1/3"]], &["0"]), affine(&[&["1/3"]], &["2/3"])]
}

/// `x/3` and `x/3 + 2/3` chosen independently with probability 1/2.
pub fn cantor_iid() -> MapSystem {
    unit_interval(cantor_maps(), &[&["1/2", "1/2"], &["1/2", "1/2"]])
}

/// The Cantor maps driven by `[[0.9, 0.1], [0.2, 0.8]]`.
pub fn cantor_markov() -> MapSystem {
    unit_interval(cantor_maps(), &[&["0.9", "0.1"], &["0.2", "0.8"]])
}

/// `diag(1/3, 1/3)` with offsets `(0, 0)` and `(2/3, 2/3)` on the unit
/// square, driven by `[[0.6, 0.4], [0.3, 0.7]]`. Class `(+,+)`.
pub fn diagonal_2d() -> MapSystem {
    let d = &[&["1/3", "0"][..], &["0", "1/3"][..]][..];
    MapSystem::new(
        vec![q("0"), q("0")],
        vec![q("1"), q("1")],
        vec![affine(d, &["0", "0"]), affine(d, &["2/3", "2/3"])],
        rows(&[&["0.6", "0.4"], &["0.3", "0.7"]]),
    )
    .expect("reference system is valid")
}

/// `x/(10 − 8x)` (derivative from 1/10 up to 5/2) and `(x + 2)/(x + 3)`
/// on `[0, 1]`, driven by `[[0.3, 0.7], [0.6, 0.4]]`.
pub fn moebius_pair() -> MapSystem {
    unit_interval(vec![moebius("1", "0", "-8", "10"), moebius("1", "2", "1", "3")], &[&["0.3", "0.7"], &["0.6", "0.4"]])
}

/// One identity map on `[0, 1]`: never contracts.
pub fn identity_control() -> MapSystem {
    unit_interval(vec![affine(&[&["1"]], &["0"])], &[&["1"]])
}

/// The witness `((1,1), (2,1))` shared by the four splitting systems.
pub fn reference_witness() -> (Word, Word) {
    (Word(vec![0, 0]), Word(vec![1, 0]))
}
