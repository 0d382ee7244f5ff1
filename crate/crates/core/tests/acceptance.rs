//! Acceptance suite. One line per criterion; exits nonzero if any fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use meanindex::cli::parse_lambdas;
use meanindex::contact::{
    asymptotic_morse, chi_closed_form, chi_limit_compare, validate_index_bounds, CzLaw, Direction, IndexBound,
    MeanIndex, OrbitClass, ReebOrbit, ReebOrbitSystem,
};
use meanindex::exactnum::{rat, ExactScalar, Int, Rational, Symbol, SymbolTable};
use meanindex::lattice::{integer_relation, lattice_index, saturation, to_int_vec};
use meanindex::models::{
    admissible_p, cpn_mean_indices, ellipsoid_system, ustilovsky_chi, EllipsoidSpec, UstilovskySpec,
};
use meanindex::resonance::{
    gamma_structure, prohibited_region_scan, resonance_lattice_exact, theorem_one_report,
    torsion_from_elementary_divisors, ChernNumber, IndexFilter, MeanIndexProblem,
};
use meanindex::synth;

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit: Duration) -> Result<(), String> {
    ensure(elapsed < limit, || format!("runtime {elapsed:.2?} exceeds {limit:?}"))
}

fn symbolic_cpn(n: usize) -> MeanIndexProblem {
    let lambdas: Vec<ExactScalar> =
        (0..=n).map(|i| ExactScalar::symbol(Symbol::new(format!("lambda{i}")).unwrap())).collect();
    cpn_mean_indices(&lambdas, SymbolTable::new()).unwrap()
}

fn ac1() -> Check {
    let start = Instant::now();
    for n in 2..=4usize {
        let p = symbolic_cpn(n);
        let r = resonance_lattice_exact(&p).map_err(|e| e.to_string())?;
        let diagonal = vec![Int::one(); n + 1];
        ensure(r.basis() == [diagonal], || format!("n = {n}: basis {:?}", r.basis()))?;
        let total: ExactScalar = p.deltas().iter().cloned().sum();
        ensure(total.is_zero(), || format!("n = {n}: ΣΔ = {total}"))?;
    }
    within(start.elapsed(), Duration::from_secs(1))?;
    Ok(format!("n = 2..4 give span{{(1,…,1)}}, ΣΔ = 0 ({:.0?})", start.elapsed()))
}

fn ac2() -> Check {
    for n in 2..=4u32 {
        let rep = theorem_one_report(&symbolic_cpn(n as usize), IndexFilter::None).map_err(|e| e.to_string())?;
        ensure(rep.generator_nonnegative == Some(true), || format!("n = {n}: generator not nonnegative"))?;
        let expect = rat(i64::from(n) + 1, 1);
        ensure(rep.sum_value == Some(Int::from(n + 1)), || format!("n = {n}: Σa = {:?}", rep.sum_value))?;
        ensure(rep.bound_value.as_ref() == Some(&expect), || format!("n = {n}: bound = {:?}", rep.bound_value))?;
        ensure(rep.sum_bound_satisfied == Some(true), || format!("n = {n}: bound verdict"))?;
    }
    // Δ = (2, −1, 0)·s + (0, 1, −2)·t with n = 2, N = 3: ℛ = span{(1, 2, 1)}, Σa = 4 > 3
    let (s, t) = (Symbol::new("s").unwrap(), Symbol::new("t").unwrap());
    let deltas = [(2i64, 0i64), (-1, 1), (0, -2)]
        .iter()
        .map(|&(a, b)| ExactScalar::term(rat(a, 1), s.clone()) + ExactScalar::term(rat(b, 1), t.clone()))
        .collect();
    let table = SymbolTable::new().with("s", 2f64.sqrt()).with("t", 3f64.sqrt());
    let p = MeanIndexProblem::new(2, ChernNumber::Finite(3), deltas, None, table).map_err(|e| e.to_string())?;
    let rep = theorem_one_report(&p, IndexFilter::None).map_err(|e| e.to_string())?;
    let planted: Vec<Int> = to_int_vec(&[1, 2, 1]);
    ensure(rep.generator.as_deref() == Some(&planted[..]), || format!("planted generator {:?}", rep.generator))?;
    ensure(rep.sum_bound_satisfied == Some(false), || "planted (1,2,1) passes the bound".into())?;
    Ok("ℂPⁿ generators meet Σa = N/(N−n); planted (1,2,1) rejected".into())
}

fn ac3() -> Check {
    let start = Instant::now();
    let (lambdas, table) = parse_lambdas(&["0".into(), "sqrt2".into(), "sqrt3".into()], &[]).map_err(|e| e.to_string())?;
    let p = cpn_mean_indices(&lambdas, table).map_err(|e| e.to_string())?;
    let scan = prohibited_region_scan(&p, 100_000, None).map_err(|e| e.to_string())?;
    ensure(scan.clean(), || format!("violation at {:?}", scan.first_violation))?;
    within(start.elapsed(), Duration::from_secs(5))?;
    Ok(format!("no violation for k ≤ 10⁵, min margin {:.3e} ({:.0?})", scan.min_margin, start.elapsed()))
}

/// Rank over ℚ by fraction-free elimination.
fn rational_rank(mut rows: Vec<Vec<Rational>>) -> usize {
    let cols = rows.first().map_or(0, Vec::len);
    let mut rank = 0;
    for c in 0..cols {
        let Some(pivot) = (rank..rows.len()).find(|&r| !rows[r][c].is_zero()) else { continue };
        rows.swap(rank, pivot);
        let head = rows[rank].clone();
        for row in rows.iter_mut().skip(rank + 1) {
            let f = &row[c] / &head[c];
            for (x, h) in row.iter_mut().zip(&head) {
                *x -= &f * h;
            }
        }
        rank += 1;
    }
    rank
}

fn ac4() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(0x4ac4);
    for i in 0..500 {
        let p = synth::random_exact_problem(&mut rng, 6);
        let g = gamma_structure(&p).map_err(|e| format!("problem {i}: {e}"))?;
        // dim Γ = rank_ℚ(1, Δ₁/2N, …, Δₘ/2N) − 1
        let syms = p.used_symbols();
        let mut rows = vec![{
            let mut r = vec![Rational::one()];
            r.extend(syms.iter().map(|_| Rational::zero()));
            r
        }];
        for d in p.deltas() {
            let mut r = vec![d.rational_part().clone()];
            r.extend(syms.iter().map(|s| d.coeff(s)));
            rows.push(r);
        }
        let dim_gamma = rational_rank(rows) - 1;
        ensure(p.m() - dim_gamma == g.rank_r && g.codim_gamma == g.rank_r, || {
            format!("problem {i}: codim Γ = {} vs rk ℛ = {}", p.m() - dim_gamma, g.rank_r)
        })?;
        let modulus = p.modulus().map_err(|e| e.to_string())?;
        for a in g.resonance_lattice.basis() {
            let dot: ExactScalar =
                a.iter().zip(p.deltas()).map(|(c, d)| d.scale(&Rational::from_integer(c.clone()))).sum();
            let q = dot.as_rational().map(|q| q / &modulus);
            ensure(q.is_some_and(|q| q.is_integer()), || format!("problem {i}: {a:?} is not a resonance"))?;
        }
        let idx = lattice_index(&g.resonance_lattice, &saturation(&g.resonance_lattice)).map_err(|e| e.to_string())?;
        ensure(idx.finite() == Some(&g.torsion_order), || format!("problem {i}: torsion {} vs index", g.torsion_order))?;
        ensure(torsion_from_elementary_divisors(&g.resonance_lattice) == g.torsion_order, || {
            format!("problem {i}: elementary divisors disagree")
        })?;
        ensure(idx.is_cyclic(), || format!("problem {i}: quotient is not cyclic"))?;
    }
    Ok("500 problems: codim Γ = rk ℛ, torsion = [ℛ₀ : ℛ], cyclic".into())
}

fn ac5() -> Check {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x4ac5);
    for i in 0..200 {
        let n = rng.gen_range(2..=6);
        let w = synth::random_rational_weights(&mut rng, n);
        let sys = ellipsoid_system(&EllipsoidSpec::rational(w.clone()).map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?;
        let plus = chi_closed_form(&sys, Direction::Positive).map_err(|e| e.to_string())?;
        let minus = chi_closed_form(&sys, Direction::Negative).map_err(|e| e.to_string())?;
        ensure(plus.exact() == Some(&rat(1, 2)), || format!("#{i} {w:?}: χ⁺ = {plus}"))?;
        ensure(minus.exact() == Some(&rat(0, 1)), || format!("#{i} {w:?}: χ⁻ = {minus}"))?;
    }
    within(start.elapsed(), Duration::from_secs(2))?;
    Ok(format!("200 rational ellipsoids give 1/2 and 0 exactly ({:.0?})", start.elapsed()))
}

fn golden_ellipsoid() -> ReebOrbitSystem {
    ellipsoid_system(&EllipsoidSpec::numeric(vec![1.0, (1.0 + 5f64.sqrt()) / 2.0]).unwrap()).unwrap()
}

fn generated_systems() -> Vec<ReebOrbitSystem> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x4ac6);
    let mut v = vec![golden_ellipsoid()];
    v.extend((0..50).map(|_| synth::random_engine_system(&mut rng, 0.3)));
    v
}

const N_LIST: [u64; 3] = [100, 1_000, 10_000];

fn directions(sys: &ReebOrbitSystem) -> Vec<Direction> {
    [Direction::Positive, Direction::Negative]
        .into_iter()
        .filter(|d| sys.orbits.iter().any(|o| d.includes(o.mean_index.to_f64())))
        .collect()
}

fn ac6(systems: &[ReebOrbitSystem]) -> Check {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    let mut comparisons = 0;
    for (i, sys) in systems.iter().enumerate() {
        for dir in directions(sys) {
            let cmp = chi_limit_compare(sys, dir, &N_LIST).map_err(|e| format!("system {i}: {e}"))?;
            comparisons += 1;
            ensure(cmp.within_envelope, || format!("system {i} {dir}: {}", cmp.diagnostics.join("; ")))?;
            for row in &cmp.rows {
                ensure(row.scaled_difference <= cmp.c_theory + 1e-9 * row.big_n as f64, || {
                    format!("system {i} {dir} N = {}: C = {} > {}", row.big_n, row.scaled_difference, cmp.c_theory)
                })?;
            }
            let last = cmp.rows.last().unwrap();
            ensure(last.difference <= 0.005, || format!("system {i} {dir}: |diff| = {} at N = 10⁴", last.difference))?;
            worst = worst.max(last.difference);
        }
    }
    within(start.elapsed(), Duration::from_secs(30))?;
    Ok(format!(
        "{} systems, {comparisons} comparisons, worst |diff| at 10⁴ = {worst:.2e} ({:.1?})",
        systems.len(),
        start.elapsed()
    ))
}

fn ac7(systems: &[ReebOrbitSystem]) -> Check {
    for (i, sys) in systems.iter().enumerate() {
        let rep = validate_index_bounds(sys, 10_000).map_err(|e| e.to_string())?;
        ensure(rep.clean(), || format!("system {i}: {:?}", rep.violations.first()))?;
        ensure(rep.truncated.is_empty(), || format!("system {i}: law undefined below 10⁴"))?;
    }
    // μ(xᵏ) = 2k + 2 on a Δ = 2 orbit with n = 2
    let planted = ReebOrbit::new(
        "planted".into(),
        OrbitClass::Good,
        MeanIndex::Exact(rat(2, 1)),
        CzLaw::Table { values: vec![4, 6, 8], extrapolate: false },
        None,
        2,
    )
    .map_err(|e| e.to_string())?;
    let sys = ReebOrbitSystem::new(2, vec![planted], None, false).map_err(|e| e.to_string())?;
    let rep = validate_index_bounds(&sys, 3).map_err(|e| e.to_string())?;
    let first = rep.violations.first().ok_or("planted fixture not flagged")?;
    ensure(first.k == 1 && first.bound == IndexBound::ConleyZehnder, || format!("flagged {first:?}"))?;
    Ok(format!("{} systems clean for k ≤ 10⁴; planted fixture flagged at k = 1", systems.len()))
}

fn ac8() -> Check {
    let (plus, minus) = ustilovsky_chi(UstilovskySpec { n: 3, p: 1 }).map_err(|e| e.to_string())?;
    ensure(plus == rat(1, 2) && minus.is_zero(), || format!("(3, 1): {plus}, {minus}"))?;
    let half = rat(1, 2);
    for n in [3u32, 5, 7] {
        let ps = admissible_p(10);
        let values: Vec<Rational> =
            ps.iter().map(|&p| ustilovsky_chi(UstilovskySpec { n, p }).map(|v| v.0)).collect::<Result<_, _>>().map_err(|e| e.to_string())?;
        for (&p, v) in ps.iter().zip(&values) {
            let n = i64::from(n);
            let p = p as i64;
            let oracle = Rational::new((p * (n - 1) + 1).into(), (2 * (p * (n - 2) + 2)).into());
            ensure(*v == oracle, || format!("n = {n}, p = {p}: {v} ≠ {oracle}"))?;
            if p > 1 {
                ensure(*v > half, || format!("n = {n}, p = {p}: {v} ≤ 1/2"))?;
            }
        }
        ensure(values.windows(2).all(|w| w[0] < w[1]), || format!("n = {n}: not strictly increasing"))?;
    }
    Ok("χ⁺(3,1) = 1/2; strictly increasing in p and > 1/2 for p > 1".into())
}

fn ac9() -> Check {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x4ac9);
    let trials = 1000;
    let mut recovered = 0;
    for _ in 0..trials {
        let m = rng.gen_range(2..=6usize);
        let modulus = 2.0 * rng.gen_range(1..=6) as f64;
        let a: Vec<i64> = loop {
            let a: Vec<i64> = (0..m).map(|_| rng.gen_range(-10..=10)).collect();
            if a.iter().any(|&c| c != 0) {
                break a;
            }
        };
        let j = a.iter().position(|&c| c != 0).unwrap();
        let mut x: Vec<f64> = (0..m).map(|_| rng.gen_range(0.0..modulus)).collect();
        let rest: f64 = (0..m).filter(|&i| i != j).map(|i| a[i] as f64 * x[i]).sum();
        let wrap = rng.gen_range(-3..=3) as f64;
        x[j] = ((wrap * modulus - rest) / a[j] as f64).rem_euclid(modulus);
        let found = integer_relation(&x, modulus, 10, 1e-10).map_err(|e| e.to_string())?;
        let neg: Vec<i64> = a.iter().map(|c| -c).collect();
        if found.iter().any(|c| c.vector == a || c.vector == neg) {
            recovered += 1;
        }
    }
    let rate = f64::from(recovered) / f64::from(trials);
    ensure(rate >= 0.99, || format!("recovered {recovered}/{trials}"))?;
    within(start.elapsed(), Duration::from_secs(10))?;
    Ok(format!("recovered {recovered}/{trials} ({:.1?})", start.elapsed()))
}

fn ac10(systems: &[ReebOrbitSystem]) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(0x4ac10);
    let ellipsoids: Vec<ReebOrbitSystem> = (0..10)
        .map(|_| {
            let n = rng.gen_range(2..=4);
            let w: Vec<f64> = (0..n).map(|_| rng.gen_range(1.0..3.0)).collect();
            ellipsoid_system(&EllipsoidSpec::numeric(w).unwrap()).unwrap()
        })
        .chain(std::iter::once(golden_ellipsoid()))
        .collect();
    for (i, sys) in systems.iter().enumerate() {
        for dir in directions(sys) {
            let m = asymptotic_morse(sys, dir, &N_LIST).map_err(|e| e.to_string())?;
            ensure(m.satisfied, || format!("system {i} {dir}: lhs {} < density {:?}", m.lhs, m.empirical_rhs))?;
        }
    }
    for (i, sys) in ellipsoids.iter().enumerate() {
        let m = asymptotic_morse(sys, Direction::Positive, &N_LIST).map_err(|e| e.to_string())?;
        let density = m.empirical_rhs.last().unwrap().1;
        ensure((m.lhs.to_f64() - density).abs() <= 0.005, || {
            format!("ellipsoid {i}: lhs {} vs density {density}", m.lhs)
        })?;
    }
    Ok(format!("{} systems satisfy the bound; equality on {} ellipsoids", systems.len(), ellipsoids.len()))
}

fn main() -> ExitCode {
    let systems = generated_systems();
    let results: Vec<(&str, Check)> = vec![
        ("AC1 cpn resonance lattice", ac1()),
        ("AC2 generator bound", ac2()),
        ("AC3 prohibited-region scan", ac3()),
        ("AC4 duality invariants", ac4()),
        ("AC5 standard sphere identity", ac5()),
        ("AC6 two-route convergence", ac6(&systems)),
        ("AC7 index bounds", ac7(&systems)),
        ("AC8 brieskorn values", ac8()),
        ("AC9 planted relation recovery", ac9()),
        ("AC10 asymptotic morse inequality", ac10(&systems)),
    ];
    let mut failed = 0;
    for (name, r) in &results {
        match r {
            Ok(msg) => println!("[PASS] {name}: {msg}"),
            Err(msg) => {
                failed += 1;
                println!("[FAIL] {name}: {msg}");
            }
        }
    }
    println!("{} passed, {failed} failed", results.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
