use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use meanindex::contact::{chi_all_degrees, chi_mean_closed_form, grade, Direction, OrbitClass, ReebOrbitSystem};
use meanindex::models::{engine_orbit, Block, LinearizedReturnMap};
use meanindex::resonance::{gamma_structure, resonance_lattice_numeric};
use meanindex::synth;

fn sigma_from_degree(sys: &ReebOrbitSystem) {
    for o in &sys.orbits {
        let d = grade(o, 1, sys.n).unwrap();
        assert_eq!(i64::from(o.sigma), if d.rem_euclid(2) == 0 { 1 } else { -1 }, "{}", o.name);
    }
}

#[test]
fn sigma_matches_degree_with_hyperbolic_blocks() {
    // one elliptic and one positive hyperbolic block: μ is odd and so is |x| = μ
    let map = LinearizedReturnMap::new(
        vec![Block::Elliptic { theta: 0.3 }, Block::PositiveHyperbolic { eigenvalue: 3.0 }],
        1,
    )
    .unwrap();
    let o = engine_orbit("h", map, 3).unwrap();
    assert_eq!(o.class, OrbitClass::Good);
    assert_eq!(o.sigma, -1);

    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..40 {
        sigma_from_degree(&synth::random_engine_system(&mut rng, 0.4));
    }
}

#[test]
fn numeric_candidates_lie_in_exact_lattice() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut checked = 0;
    while checked < 40 {
        let p = synth::random_exact_problem(&mut rng, 4);
        if p.used_symbols().is_empty() {
            continue;
        }
        let table = p.used_symbols().iter().enumerate().fold(p.symbols().clone(), |t, (i, s)| {
            if t.witness(s).is_some() {
                t
            } else {
                // algebraically independent enough for tolerance 1e-9 and bound 6
                t.with(s.name(), [2f64.sqrt(), 3f64.cbrt(), std::f64::consts::PI][i])
            }
        });
        let p = meanindex::resonance::MeanIndexProblem::new(
            p.n(),
            p.chern(),
            p.deltas().to_vec(),
            None,
            table,
        )
        .unwrap();
        let exact = gamma_structure(&p).unwrap().resonance_lattice;
        let x = p.float_deltas().unwrap();
        let modulus = meanindex::exactnum::rational_to_f64(&p.modulus().unwrap());
        for c in resonance_lattice_numeric(&x, modulus, 6, 1e-9).unwrap() {
            let v = meanindex::lattice::to_int_vec(&c.vector);
            assert!(exact.contains(&v), "{:?} found numerically but not exactly", c.vector);
        }
        checked += 1;
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn all_degree_average_matches_mean(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sys = synth::random_engine_system(&mut rng, 0.5);
        let mean = chi_mean_closed_form(&sys).unwrap().to_f64();
        let big_n = 4000;
        let c = meanindex::contact::boundary_constant(&sys, Direction::Positive)
            + meanindex::contact::boundary_constant(&sys, Direction::Negative);
        let avg = chi_all_degrees(&sys, big_n).unwrap();
        prop_assert!((avg - mean).abs() * big_n as f64 <= c + 1.0, "avg {} mean {}", avg, mean);
    }

    #[test]
    fn engine_systems_round_trip_through_json(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sys = synth::random_engine_system(&mut rng, 0.5);
        let text = serde_json::to_string(&sys).unwrap();
        let back: ReebOrbitSystem = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(back, sys);
    }
}
