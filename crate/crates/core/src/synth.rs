//! Seeded random instances: exact mean-index problems, block-engine orbit
//! systems and rational ellipsoid weights.

use rand::Rng;

use crate::contact::{MeanIndex, ReebOrbitSystem};
use crate::exactnum::{rat, ExactScalar, Rational, Symbol, SymbolTable};
use crate::models::{engine_orbit, Block, LinearizedReturnMap};
use crate::resonance::{ChernNumber, MeanIndexProblem};

/// Iterates screened for degeneracy when sampling elliptic blocks.
pub const DEGENERACY_SCREEN: u64 = 20_000;

/// `m ≤ m_max` mean indices mixing rational parts and up to three symbols.
pub fn random_exact_problem<R: Rng>(rng: &mut R, m_max: usize) -> MeanIndexProblem {
    let m = rng.gen_range(1..=m_max);
    let big_n = rng.gen_range(1..=6u64);
    let n = rng.gen_range(1..=big_n.max(1)) as u32;
    let symbols: Vec<Symbol> = (0..rng.gen_range(0..=3)).map(|i| Symbol::new(format!("b{i}")).unwrap()).collect();
    let deltas = (0..m)
        .map(|_| {
            let mut d = if rng.gen_bool(0.8) {
                ExactScalar::from_ratio(rng.gen_range(-12..=12), rng.gen_range(1..=6))
            } else {
                ExactScalar::zero()
            };
            for s in &symbols {
                if rng.gen_bool(0.5) {
                    d = d + ExactScalar::term(rat(rng.gen_range(-2..=2), rng.gen_range(1..=2)), s.clone());
                }
            }
            d
        })
        .collect();
    MeanIndexProblem::new(n, ChernNumber::Finite(big_n), deltas, None, SymbolTable::new())
        .expect("generated problem is well formed")
}

fn random_block<R: Rng>(rng: &mut R) -> Block {
    match rng.gen_range(0..4) {
        0 | 1 => loop {
            let theta = rng.gen_range(0.1..2.5);
            let clean = (1..=DEGENERACY_SCREEN).all(|k| {
                let x = k as f64 * theta;
                (x - x.round()).abs() >= crate::models::DEGENERACY_TOL
            });
            if clean {
                break Block::Elliptic { theta };
            }
        },
        2 => Block::PositiveHyperbolic { eigenvalue: rng.gen_range(1.5..10.0) },
        _ => Block::NegativeHyperbolic { eigenvalue: -rng.gen_range(1.5..10.0), winding: rng.gen_range(0..=2) },
    }
}

/// A return map on a `(2n − 1)`-manifold with `|Δ| ≥ 1`, negative with probability `p_negative`.
pub fn random_return_map<R: Rng>(rng: &mut R, n: u32, p_negative: f64) -> LinearizedReturnMap {
    let blocks: Vec<Block> = (1..n).map(|_| random_block(rng)).collect();
    let mut map = LinearizedReturnMap { blocks, twist: 0 };
    let base = map.mean_index().to_f64();
    if rng.gen_bool(p_negative) {
        // smallest twist with Δ ≤ −1, plus a random extra turn
        map.twist = -(((base + 1.0) / 2.0).ceil() as i64) - rng.gen_range(0..=1);
    } else if base < 1.0 {
        map.twist = 1;
    } else {
        map.twist = rng.gen_range(0..=1);
    }
    map
}

/// A system with `2 ≤ n ≤ 4` with one to four engine-generated orbits.
pub fn random_engine_system<R: Rng>(rng: &mut R, p_negative: f64) -> ReebOrbitSystem {
    let n = rng.gen_range(2..=4u32);
    let count = rng.gen_range(1..=4);
    let orbits = (0..count)
        .map(|i| engine_orbit(format!("o{i}"), random_return_map(rng, n, p_negative), n).expect("valid orbit"))
        .collect();
    ReebOrbitSystem::new(n, orbits, Some("contractible".into()), false).expect("valid system")
}

/// Positive rational weights `p/q` with `p < 60`, `q < 12`.
pub fn random_rational_weights<R: Rng>(rng: &mut R, n: usize) -> Vec<Rational> {
    (0..n).map(|_| rat(rng.gen_range(1..60), rng.gen_range(1..12))).collect()
}

/// Whether every mean index of the system is exact.
pub fn all_rational(system: &ReebOrbitSystem) -> bool {
    system.orbits.iter().all(|o| matches!(o.mean_index, MeanIndex::Exact(_)))
}
