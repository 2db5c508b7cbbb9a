//! Acceptance run: one PASS/FAIL line per criterion, each under its time budget.
//! Exits non-zero when any criterion fails.

#[path = "../../core/tests/support/mod.rs"]
mod support;

use std::collections::BTreeMap;
use std::process::Command;
use std::time::{Duration, Instant};

use mfkit_core::cantor::{
    self, branching_count, enumerate_generation, generation_census, node_mass, sample_node,
    validate_schedule, verify_mass_bounds, ApproxSet, BoundStatus, CantorNode, CantorSchedule,
};
use mfkit_core::constructions::{cascade, lebesgue, CascadeSpec, GridWeights, MuN};
use mfkit_core::spectra::{
    coarse_spectrum, cube_exponent, legendre, tau_curve, tau_hat, Grid, TauMethod,
};
use mfkit_core::transport::{check_mu_nu_distance, distance, distance_1d, DistanceOptions};
use mfkit_core::{AtomicMeasure, Error, MassMode, MassTree, Point, Rational};
use num_bigint::{BigInt, BigUint};
use num_traits::{One, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use support::{
    ball_mass, children_by_enumeration, cube_masses, floor_holds, q, random_measure,
    random_weights, transport_by_vertices, two_pow, Level,
};

type Check = Result<String, String>;
/// Name, tree, and `(J_n, n)` for approximants.
type CorpusEntry = (String, MassTree, Option<(u32, u32)>);
/// Name, time budget in seconds, check.
type Criterion = (&'static str, u64, fn() -> Check);

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn pow2_neg(e: u64) -> Rational {
    Rational::new(BigInt::one(), BigInt::from(two_pow(e)))
}

fn random_mun(rng: &mut ChaCha8Rng, dim: usize, jn: u32, n: u32) -> MuN {
    let w = random_weights(rng, 1 << (dim as u32 * jn));
    MuN::new(GridWeights::new(dim, jn, w).unwrap(), n).unwrap()
}

fn floor_inequality() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut cases = 0;
    let mut brute_cases = 0;
    for dim in 1..=3usize {
        for jn in 1..=2u32 {
            for n in 1..=3u32 {
                for _ in 0..5 {
                    let mun = random_mun(&mut rng, dim, jn, n);
                    let big_j = 2 * n * jn * jn;
                    let report = mun.check_floor();
                    // Oracle: cubes holding a corner k 2^{-j} get (1 - w) r_k on top of the
                    // π floor w 2^{-dJ}; every other cube carries the floor alone.
                    let w = pow2_neg(2 * (jn * jn) as u64);
                    let base = &w * pow2_neg(dim as u64 * big_j as u64);
                    let mut charged: BTreeMap<Vec<u64>, Rational> = BTreeMap::new();
                    for (key, r) in mun.grid().weights().iter().enumerate() {
                        let k: Vec<u64> = (0..dim)
                            .map(|a| {
                                ((key as u64 >> (a as u32 * jn)) & ((1 << jn) - 1)) << (big_j - jn)
                            })
                            .collect();
                        *charged.entry(k).or_insert_with(|| base.clone()) +=
                            r * (Rational::one() - &w);
                    }
                    let mut min = base.clone();
                    for m in charged.values() {
                        ensure(floor_holds(m, dim, n, big_j), || {
                            format!("charged cube below floor d={dim} jn={jn} n={n}")
                        })?;
                        min = min.min(m.clone());
                    }
                    ensure(floor_holds(&base, dim, n, big_j), || {
                        "uncharged cube below floor".into()
                    })?;
                    ensure(report.holds() && report.violations.is_zero(), || {
                        format!("report violation d={dim} jn={jn} n={n}")
                    })?;
                    ensure(report.min_mass.as_ref() == Some(&min), || {
                        "minimum mass disagrees with oracle".into()
                    })?;
                    if dim as u32 * big_j <= 12 {
                        let atoms = mun.to_atomic().unwrap();
                        let direct = cube_masses(&atoms, big_j);
                        ensure(direct.len() as u64 == 1u64 << (dim as u32 * big_j), || {
                            "empty cube".into()
                        })?;
                        for m in direct.values() {
                            ensure(floor_holds(m, dim, n, big_j), || {
                                "brute-force cube below floor".into()
                            })?;
                        }
                        brute_cases += 1;
                    }
                    cases += 1;
                }
            }
        }
    }
    Ok(format!(
        "{cases} weight vectors, {brute_cases} also by full cube enumeration"
    ))
}

fn distance_identity() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut grids = vec![
        GridWeights::new(1, 1, vec![q(1, 3), q(2, 3)]).unwrap(),
        GridWeights::uniform(1, 1).unwrap(),
    ];
    for _ in 0..3 {
        grids.push(GridWeights::new(1, 1, random_weights(&mut rng, 2)).unwrap());
    }
    let opts = DistanceOptions { exact_cap: 300 };
    let mut checked = 0;
    for grid in &grids {
        for n in 1..=2u32 {
            let mun = MuN::new(grid.clone(), n).unwrap();
            let r = check_mu_nu_distance(&mun, &opts).unwrap();
            let (Some(a), Some(b)) = (r.rho_mu_nu.exact(), r.rho_nu_pi.exact()) else {
                return Err("transport fell back to floating point".into());
            };
            let w = mun.blend_weight();
            ensure(*a == &w * b, || format!("identity fails: {a} vs {w} * {b}"))?;
            ensure(*a <= &w * Rational::from_integer(2.into()), || {
                format!("bound fails: {a}")
            })?;
            ensure(r.holds(), || "report disagrees".into())?;
            // Independent 1-D closed form for both distances.
            let mu = mun.to_atomic().unwrap();
            let nu = mun.nu();
            let pi = mfkit_core::constructions::pi_j(1, mun.level()).unwrap();
            ensure(support::cdf_gap(&mu, &nu) == *a, || {
                "simplex disagrees with CDF oracle".into()
            })?;
            ensure(support::cdf_gap(&nu, &pi) == *b, || {
                "simplex disagrees with CDF oracle".into()
            })?;
            checked += 1;
        }
    }
    Ok(format!("{checked} approximants, exact"))
}

fn tree_corpus() -> Vec<CorpusEntry> {
    let mut out = Vec::new();
    for (dim, depth) in [(1, 10), (2, 6), (3, 4)] {
        out.push((
            format!("lebesgue d={dim}"),
            lebesgue(dim, depth, MassMode::Exact).unwrap(),
            None,
        ));
    }
    for (a, b) in [(1, 4), (1, 3), (1, 5)] {
        let spec = CascadeSpec::new(q(a, b), 12).unwrap();
        out.push((
            format!("cascade {a}/{b}"),
            cascade(&spec, MassMode::Log2).unwrap(),
            None,
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for (dim, jn, n) in [
        (1, 1, 1),
        (1, 1, 2),
        (1, 1, 3),
        (2, 1, 1),
        (2, 1, 2),
        (1, 2, 1),
        (3, 1, 1),
    ] {
        let mun = random_mun(&mut rng, dim, jn, n);
        let t = MassTree::from_atoms(&mun.to_atomic().unwrap(), mun.level()).unwrap();
        out.push((
            format!("mu_n d={dim} jn={jn} n={n}"),
            t,
            Some((mun.level(), n)),
        ));
    }
    for dim in 1..=2 {
        let m = random_measure(&mut rng, dim, 20, 8);
        out.push((
            format!("atomic d={dim}"),
            MassTree::from_atoms(&m, 8).unwrap(),
            None,
        ));
    }
    out
}

fn corollary_bounds() -> Check {
    let qs: Vec<f64> = (1..20).map(|k| k as f64 * 0.05).collect();
    let corpus = tree_corpus();
    let mut checks = 0;
    for (name, t, mun) in &corpus {
        let d = t.dim() as f64;
        for j in 1..=t.depth() {
            for &qv in &qs {
                let tau = tau_hat(t, j, qv).unwrap();
                ensure(tau >= d * (qv - 1.0) - 1e-9, || {
                    format!("{name}: lower bound fails at j={j} q={qv}")
                })?;
                checks += 1;
            }
        }
        if let Some((big_j, n)) = mun {
            for &qv in &qs {
                let tau = tau_hat(t, *big_j, qv).unwrap();
                let cap = d * (qv - 1.0) + qv / *n as f64 + 1e-9;
                ensure(tau <= cap, || {
                    format!("{name}: upper bound fails at q={qv}: {tau} > {cap}")
                })?;
                checks += 1;
            }
        }
    }
    Ok(format!("{} trees, {checks} comparisons", corpus.len()))
}

fn cascade_oracle() -> Check {
    let qgrid: Vec<f64> = (-60..=60).map(|k| k as f64 * 0.05).collect();
    let step = 0.01;
    let mut worst = 0f64;
    for (a, b) in [(1i64, 4i64), (1, 3)] {
        let m0 = a as f64 / b as f64;
        let spec = CascadeSpec::new(q(a, b), 14).unwrap();
        let t = cascade(&spec, MassMode::Exact).unwrap();
        for j in 1..=14 {
            for &qv in &qgrid {
                let want = -(m0.powf(qv) + (1.0 - m0).powf(qv)).log2();
                let err = (tau_hat(&t, j, qv).unwrap() - want).abs();
                worst = worst.max(err);
                ensure(err <= 1e-9, || {
                    format!("m0={a}/{b} j={j} q={qv}: error {err}")
                })?;
            }
        }
        let h = -(m0 * m0.log2() + (1.0 - m0) * (1.0 - m0).log2());
        let curve = tau_curve(
            &t,
            &Grid::new(-3.0, 3.0, step).unwrap(),
            14,
            14,
            TauMethod::Min,
        )
        .unwrap();
        let lp = legendre(&curve, h).unwrap();
        ensure((lp.value - h).abs() <= 1e-6, || {
            format!("tau*(h) = {} vs h = {h}", lp.value)
        })?;
        ensure((lp.attained_q - 1.0).abs() <= step + 1e-12, || {
            format!("attained at q = {}", lp.attained_q)
        })?;
    }
    Ok(format!("max tau error {worst:.1e}"))
}

fn lebesgue_identities() -> Check {
    let qs: Vec<f64> = (-20..=20).map(|k| k as f64 * 0.25).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for (dim, mode) in [(1usize, MassMode::Exact), (2, MassMode::Log2)] {
        let t = lebesgue(dim, 10, mode).unwrap();
        let d = dim as f64;
        for j in 1..=10 {
            for &qv in &qs {
                let err = (tau_hat(&t, j, qv).unwrap() - d * (qv - 1.0)).abs();
                ensure(err <= 1e-12, || {
                    format!("d={dim} j={j} q={qv}: error {err}")
                })?;
            }
            let c = coarse_spectrum(&t, j, 0.05).unwrap();
            let s = c.samples();
            ensure(
                s.len() == 1 && (s[0].0 - d).abs() <= 1e-12 && (s[0].1 - d).abs() <= 1e-12,
                || format!("d={dim} j={j}: coarse spectrum {s:?}"),
            )?;
            for _ in 0..20 {
                let x: Vec<Rational> = (0..dim)
                    .map(|_| q(rng.gen_range(0..=1 << 20), 1 << 20))
                    .collect();
                let a = cube_exponent(&t, &Point::new(x).unwrap(), j).unwrap();
                ensure((a - d).abs() <= 1e-12, || {
                    format!("cube exponent {a} at j={j}")
                })?;
            }
        }
    }
    Ok("d=1 exact, d=2 log2, j <= 10".into())
}

fn branching_oracle() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut compared = 0;
    let mut windows = 0;
    for theta in [q(3, 2), q(2, 1)] {
        let den = theta.denom().to_u64().unwrap();
        let pairs: Vec<(u64, u64)> = (1..=12u64)
            .flat_map(|a| (a + 1..=12).map(move |b| (a, b)))
            .filter(|(a, b)| a % den == 0 && b % den == 0)
            .collect();
        for dim in 1..=2usize {
            let mut draws: Vec<(u64, u64)> = (0..50)
                .map(|_| pairs[rng.gen_range(0..pairs.len())])
                .collect();
            // Every desk-relaxed pair is exercised at least once.
            draws.extend(pairs.iter().filter(|(a, b)| {
                Rational::from_integer((*b).into())
                    >= &theta * Rational::from_integer((4 * a).into())
            }));
            for (j1, j2) in draws {
                let s = CantorSchedule::new(dim, theta.clone(), vec![j1, j2]).unwrap();
                let k: Vec<u64> = (0..dim).map(|_| rng.gen_range(0..1u64 << j1)).collect();
                let addr = vec![k.iter().map(|&x| BigInt::from(x)).collect::<Vec<_>>()];
                let parent = CantorNode::from_address(&s, &addr).unwrap();
                let lv = |p: usize| Level {
                    j: s.level(p) as u32,
                    t: s.theta_level(p) as u32,
                };
                let brute = children_by_enumeration(dim, lv(1), &k, lv(2));
                match branching_count(&s, &parent) {
                    Ok(delta) => ensure(delta == BigUint::from(brute), || {
                        format!("{dim} {theta} {j1} {j2}: {delta} vs {brute}")
                    })?,
                    Err(Error::DegenerateSchedule { .. }) => {
                        ensure(brute == 0, || "spurious degenerate schedule".into())?
                    }
                    Err(e) => return Err(e.to_string()),
                }
                compared += 1;
                let report = validate_schedule(&s).unwrap();
                if report.transitions[0].desk.holds {
                    // ½|I|^d 2^{dJ} <= Δ <= 2|I|^d 2^{dJ}, with |I|^d 2^{dJ} = 2^{d(J_2 - θJ_1)}.
                    let e = dim as u64 * (j2 - s.theta_level(1));
                    let b = BigUint::from(brute);
                    ensure(&b * 2u32 >= two_pow(e) && b <= two_pow(e + 1), || {
                        format!("window fails {dim} {theta} {j1} {j2}")
                    })?;
                    ensure(report.transitions[0].branching_bounds, || {
                        "report misses the window".into()
                    })?;
                    windows += 1;
                }
            }
        }
    }
    Ok(format!(
        "{compared} parent balls, {windows} under the desk margin"
    ))
}

fn all_paths(s: &CantorSchedule, p: usize) -> Vec<CantorNode> {
    enumerate_generation(s, p, 1 << 18).unwrap()
}

fn cantor_mass_identities() -> Check {
    let mut schedules = vec![
        CantorSchedule::new(1, q(2, 1), vec![2, 6]).unwrap(),
        CantorSchedule::new(1, q(2, 1), vec![1, 3, 7]).unwrap(),
        CantorSchedule::new(2, q(2, 1), vec![1, 3, 7]).unwrap(),
        CantorSchedule::new(1, q(3, 2), vec![2, 4, 8]).unwrap(),
        CantorSchedule::new(1, q(2, 1), vec![2, 10, 64]).unwrap(),
        CantorSchedule::new(2, q(2, 1), vec![2, 10, 64]).unwrap(),
        CantorSchedule::new(1, q(2, 1), vec![1, 5, 40, 256]).unwrap(),
    ];
    schedules.push(CantorSchedule::strict(1, q(2, 1), 4, 2).unwrap());
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut enumerated = 0usize;
    let mut gated = 0usize;
    for s in &schedules {
        let report = validate_schedule(s).unwrap();
        for p in 1..=s.generations() {
            let census = generation_census(s, p).unwrap();
            ensure(census.total.is_one(), || {
                format!("census total {} at p={p}", census.total)
            })?;
            let small = census.count <= BigUint::from(1u32 << 12) && s.level(p) <= 12;
            let nodes = if small {
                all_paths(s, p)
            } else {
                let mut next = || rng.gen::<u64>();
                (0..8)
                    .map(|_| sample_node(s, p, &mut next).unwrap())
                    .collect()
            };
            if small {
                let mut total = Rational::zero();
                for node in &nodes {
                    // Oracle: product of brute-force child counts along the address.
                    let mut den = BigUint::one();
                    let addr: Vec<Vec<u64>> = node
                        .address()
                        .iter()
                        .map(|k| k.iter().map(|x| x.to_u64().unwrap()).collect())
                        .collect();
                    for g in 1..=p {
                        let lv = |p: usize| Level {
                            j: s.level(p) as u32,
                            t: s.theta_level(p) as u32,
                        };
                        den *= if g == 1 {
                            BigUint::from(1u64 << (s.dim() as u32 * s.level(1) as u32))
                        } else {
                            BigUint::from(children_by_enumeration(
                                s.dim(),
                                lv(g - 1),
                                &addr[g - 2],
                                lv(g),
                            ))
                        };
                    }
                    let m = node_mass(s, node).unwrap();
                    ensure(m.denominator() == den, || {
                        format!("node mass 1/{} vs oracle 1/{den}", m.denominator())
                    })?;
                    total += m.exact();
                }
                ensure(total.is_one(), || {
                    format!("enumerated masses sum to {total}")
                })?;
                enumerated += nodes.len();
            }
            if report.mass_bounds_guaranteed(p) {
                let r = verify_mass_bounds(s, &report, p, &nodes).unwrap();
                ensure(
                    r.window_lower.status == BoundStatus::Holds
                        && r.window_upper.status == BoundStatus::Holds
                        && !r.failed(),
                    || format!("gated window fails at p={p}"),
                )?;
                // Oracle: d/θ(1-2/p) <= log2 D/(θJ) <= d/θ(1+1/p)  <=>  2^{dJ(p-2)} <= D^p <= 2^{dJ(p+1)}.
                let dj = s.dim() as u64 * s.level(p);
                let pu = p as u64;
                for node in &nodes {
                    let dp = num_traits::pow(node_mass(s, node).unwrap().denominator(), p);
                    ensure(
                        dp >= two_pow(dj * (pu - 2)) && dp <= two_pow(dj * (pu + 1)),
                        || "ratio outside window".into(),
                    )?;
                }
                gated += 1;
            }
        }
    }
    ensure(gated >= 2, || format!("only {gated} gated generations"))?;
    Ok(format!(
        "{} schedules, {enumerated} nodes enumerated, {gated} gated windows",
        schedules.len()
    ))
}

fn ball_mass_lemma() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut centers_checked = 0;
    for n in 1..=2u32 {
        for theta in [q(3, 2), q(2, 1)] {
            let mut grids = vec![
                GridWeights::new(1, 1, vec![q(1, 3), q(2, 3)]).unwrap(),
                GridWeights::uniform(1, 1).unwrap(),
            ];
            for _ in 0..3 {
                grids.push(GridWeights::new(1, 1, random_weights(&mut rng, 2)).unwrap());
            }
            for grid in grids {
                let mun = MuN::new(grid, n).unwrap();
                let big_j = mun.level() as u64;
                let set = ApproxSet::new(1, &theta, big_j).unwrap();
                let centers = set.centers(1 << 16).unwrap();
                let r =
                    cantor::ball_mass_lower_bound_check(&mun, &theta, &Rational::one(), &centers)
                        .unwrap();
                let want = pow2_neg(big_j / n as u64 + big_j);
                ensure(r.floor == want && r.floor_holds, || {
                    "library floor check".into()
                })?;
                let atoms = mun.to_atomic().unwrap();
                let radius = pow2_neg(s_theta(&theta, big_j)) * Rational::from_integer(2.into());
                for x in &centers {
                    let m = ball_mass(&atoms, x, &radius);
                    ensure(m >= want, || format!("ball at {x:?}: {m} < {want}"))?;
                    centers_checked += 1;
                }
            }
        }
    }
    Ok(format!("{centers_checked} centers"))
}

fn s_theta(theta: &Rational, j: u64) -> u64 {
    (theta * Rational::from_integer(j.into()))
        .to_integer()
        .to_u64()
        .unwrap()
}

fn exact(mu: &AtomicMeasure, nu: &AtomicMeasure) -> Result<Rational, String> {
    distance(mu, nu)
        .map_err(|e| e.to_string())?
        .exact()
        .cloned()
        .ok_or_else(|| "small instance left exact arithmetic".into())
}

fn transport_oracle() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for i in 0..200 {
        let dim = 1 + i % 2;
        let a = random_measure(&mut rng, dim, 8, 6);
        let b = random_measure(&mut rng, dim, 8, 6);
        let c = random_measure(&mut rng, dim, 8, 6);
        let ab = exact(&a, &b)?;
        ensure(ab == exact(&b, &a)?, || "asymmetric".into())?;
        ensure(exact(&a, &a)?.is_zero(), || "d(a, a) != 0".into())?;
        ensure(ab.is_zero() == (a == b), || {
            "identity of indiscernibles".into()
        })?;
        ensure(ab <= exact(&a, &c)? + exact(&c, &b)?, || "triangle".into())?;
    }
    for i in 0..100 {
        let dim = 1 + i % 2;
        let a = random_measure(&mut rng, dim, 4, 4);
        let b = random_measure(&mut rng, dim, 4, 4);
        ensure(exact(&a, &b)? == transport_by_vertices(&a, &b), || {
            "simplex differs from vertex enumeration".into()
        })?;
    }
    for _ in 0..100 {
        let a = random_measure(&mut rng, 1, 8, 8);
        let b = random_measure(&mut rng, 1, 8, 8);
        ensure(distance_1d(&a, &b).unwrap() == exact(&a, &b)?, || {
            "1-D closed form differs".into()
        })?;
    }
    Ok("200 axiom triples, 100 vertex oracles, 100 1-D pairs".into())
}

fn determinism() -> Check {
    let script: Vec<Vec<&str>> = vec![
        vec![
            "generate",
            "--spec",
            "cascade m0=1/4 J=10",
            "--mode",
            "log2",
            "-o",
            "c.mfm",
        ],
        vec![
            "generate",
            "--spec",
            "mun n=2 grid=j=1;d=1;weights=1/3,2/3",
            "-o",
            "m.mfm",
        ],
        vec!["generate", "--spec", "pi j=3 d=1", "-o", "p.mfm"],
        vec![
            "tau", "-i", "c.mfm", "--j", "2:10", "--method", "slope", "-o", "t.csv",
        ],
        vec![
            "legendre",
            "-i",
            "c.mfm",
            "--j",
            "4:10",
            "--h",
            "0.2:2:0.05",
            "-o",
            "l.csv",
        ],
        vec![
            "coarse", "-i", "c.mfm", "--j", "10", "--eps", "0.05", "-o", "h.csv",
        ],
        vec![
            "exponent", "-i", "c.mfm", "--j", "1:10", "--point", "random", "--seed", "4",
        ],
        vec![
            "distance",
            "-a",
            "m.mfm",
            "-b",
            "p.mfm",
            "--plan",
            "--witness",
        ],
        vec![
            "verify-mun",
            "--d",
            "1",
            "--jn",
            "1",
            "--n",
            "2",
            "--weights",
            "random",
            "--seed",
            "9",
            "--theta",
            "2",
        ],
        vec![
            "cantor", "validate", "--theta", "2", "--levels", "2,10,64", "-o", "v.csv",
        ],
        vec![
            "cantor",
            "verify-bounds",
            "--theta",
            "2",
            "--levels",
            "2,10,64",
            "--samples",
            "5",
            "--seed",
            "2",
            "-o",
            "b.csv",
        ],
        vec![
            "cantor",
            "verify-borel",
            "--theta",
            "2",
            "--levels",
            "2,10,64",
            "--random",
            "25",
            "--seed",
            "2",
            "-o",
            "r.csv",
        ],
    ];
    let files = [
        "c.mfm", "m.mfm", "p.mfm", "t.csv", "l.csv", "h.csv", "v.csv", "b.csv", "r.csv",
    ];
    let mut outputs = Vec::new();
    for _ in 0..3 {
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let mut bytes = Vec::new();
        for args in &script {
            let o = Command::new(env!("CARGO_BIN_EXE_mfkit"))
                .current_dir(dir.path())
                .env_remove(mfkit::cli::OUT_DIR_ENV)
                .args(args)
                .output()
                .map_err(|e| e.to_string())?;
            ensure(o.status.code() == Some(0), || {
                format!("{args:?} exited {:?}", o.status.code())
            })?;
            bytes.extend(o.stdout);
        }
        for f in files {
            bytes.extend(std::fs::read(dir.path().join(f)).map_err(|e| e.to_string())?);
        }
        outputs.push(bytes);
    }
    ensure(outputs.windows(2).all(|w| w[0] == w[1]), || {
        "outputs differ between runs".into()
    })?;
    Ok(format!(
        "{} commands x 3 runs, {} bytes each",
        script.len(),
        outputs[0].len()
    ))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("exact floor inequality", 10, floor_inequality),
        ("distance identity and bound", 60, distance_identity),
        ("corollary bounds on tau", 30, corollary_bounds),
        (
            "cascade oracle and Legendre fixed point",
            30,
            cascade_oracle,
        ),
        ("Lebesgue identities", 10, lebesgue_identities),
        ("branching-count oracle", 60, branching_oracle),
        ("Cantor mass identities", 60, cantor_mass_identities),
        ("ball-mass lemma", 10, ball_mass_lemma),
        ("transport metric axioms and oracles", 120, transport_oracle),
        ("CLI determinism", 60, determinism),
    ];
    let mut failures = 0;
    for (i, (name, budget, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        let elapsed = start.elapsed();
        let outcome = match outcome {
            Ok(_) if elapsed > Duration::from_secs(*budget) => {
                Err(format!("over the {budget} s budget"))
            }
            other => other,
        };
        match outcome {
            Ok(detail) => println!(
                "PASS {:>2} {name}: {detail} ({:.2} s)",
                i + 1,
                elapsed.as_secs_f64()
            ),
            Err(detail) => {
                failures += 1;
                println!(
                    "FAIL {:>2} {name}: {detail} ({:.2} s)",
                    i + 1,
                    elapsed.as_secs_f64()
                );
            }
        }
    }
    println!(
        "acceptance: {} passed, {failures} failed",
        criteria.len() - failures
    );
    if failures > 0 {
        std::process::exit(1);
    }
}
