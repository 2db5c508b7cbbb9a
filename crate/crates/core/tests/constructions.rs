mod support;

use mfkit_core::constructions::{cascade, lebesgue, pi_j, CascadeSpec, GridWeights, MuN};
use mfkit_core::dyadic::{cube_center, CubeIndex, SupBall};
use mfkit_core::spectra::{coarse_spectrum, cube_exponent, tau_hat};
use mfkit_core::{MassMode, MassTree, Point, Rational};
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use support::{ball_mass, cube_masses, floor_holds, q, random_weights};

fn random_mun(rng: &mut ChaCha8Rng, dim: usize, jn: u32, n: u32) -> MuN {
    let w = random_weights(rng, 1 << (dim as u32 * jn));
    MuN::new(GridWeights::new(dim, jn, w).unwrap(), n).unwrap()
}

#[test]
fn cube_masses_match_direct_summation() {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    for (dim, jn, n) in [
        (1, 1, 1),
        (1, 1, 2),
        (2, 1, 1),
        (1, 2, 1),
        (2, 1, 2),
        (3, 1, 1),
    ] {
        let mun = random_mun(&mut rng, dim, jn, n);
        let atoms = mun.to_atomic().unwrap();
        let total: Rational = atoms.atoms().iter().map(|(_, w)| w.clone()).sum();
        assert!(total.is_one());
        let level = mun.level();
        let direct = cube_masses(&atoms, level);
        assert_eq!(direct.len() as u64, 1 << (dim as u32 * level));
        for (k, m) in &direct {
            let c = CubeIndex::new(level, k.clone()).unwrap();
            assert_eq!(&mun.cube_mass(&c).unwrap(), m);
            assert!(floor_holds(m, dim, n, level));
        }
        // Coarser cubes too.
        for (k, m) in cube_masses(&atoms, 1) {
            assert_eq!(mun.cube_mass(&CubeIndex::new(1, k).unwrap()).unwrap(), m);
        }
    }
}

#[test]
fn floor_report_matches_closed_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for dim in 1..=3usize {
        for jn in 1..=2u32 {
            for n in 1..=3u32 {
                let mun = random_mun(&mut rng, dim, jn, n);
                let r = mun.check_floor();
                assert!(r.holds());
                // Cubes without a grid corner carry exactly 2^{-2 j_n^2 - d J_n} = |I|^{d + 1/n}.
                let floor = q(1, 1)
                    / Rational::from_integer(num_bigint::BigInt::one() << (2 * jn * jn) as usize)
                    / Rational::from_integer(
                        num_bigint::BigInt::one() << (dim * mun.level() as usize),
                    );
                assert_eq!(r.min_mass.as_ref(), Some(&floor));
                assert!(floor_holds(&floor, dim, n, mun.level()));
                let corners = 1u64 << (dim as u32 * jn);
                let cubes = num_bigint::BigUint::one() << (dim * mun.level() as usize);
                assert_eq!(r.equalities, cubes - corners);
            }
        }
    }
}

#[test]
fn ball_masses_match_direct_summation() {
    let mut rng = ChaCha8Rng::seed_from_u64(43);
    for (dim, n) in [(1, 1), (1, 2), (2, 1)] {
        let mun = random_mun(&mut rng, dim, 1, n);
        let atoms = mun.to_atomic().unwrap();
        for _ in 0..200 {
            let x: Vec<Rational> = (0..dim).map(|_| q(rng.gen_range(0..=256), 256)).collect();
            let x = Point::new(x).unwrap();
            let r = q(rng.gen_range(1..=64), 256);
            let closed = rng.gen_bool(0.5);
            let b = SupBall::new(x.clone(), r.clone(), closed).unwrap();
            let direct: Rational = atoms
                .atoms()
                .iter()
                .filter(|(y, _)| {
                    let d = support::sup_dist(&x, y);
                    if closed {
                        d <= r
                    } else {
                        d < r
                    }
                })
                .map(|(_, w)| w.clone())
                .sum();
            assert_eq!(mun.ball_mass(&b).unwrap(), direct);
            if closed {
                assert_eq!(ball_mass(&atoms, &x, &r), direct);
            }
        }
    }
}

#[test]
fn pi_atoms_are_cube_centers() {
    let pi = pi_j(2, 3).unwrap();
    assert_eq!(pi.len(), 64);
    for (x, w) in pi.atoms() {
        assert_eq!(*w, q(1, 64));
        let c = mfkit_core::dyadic::containing_cube(x, 3).unwrap();
        assert_eq!(&cube_center(&c), x);
    }
}

fn cascade_tau(m0: f64, qv: f64) -> f64 {
    -(m0.powf(qv) + (1.0 - m0).powf(qv)).log2()
}

#[test]
fn cascade_partition_sums_follow_the_closed_form() {
    for (num, den) in [(1, 4), (1, 3)] {
        let spec = CascadeSpec::new(q(num, den), 10).unwrap();
        for mode in [MassMode::Exact, MassMode::Log2] {
            let t = cascade(&spec, mode).unwrap();
            for j in 1..=10 {
                for k in -30..=30 {
                    let qv = k as f64 / 10.0;
                    let want = cascade_tau(num as f64 / den as f64, qv);
                    assert!((tau_hat(&t, j, qv).unwrap() - want).abs() < 1e-9);
                }
            }
        }
    }
}

#[test]
fn lebesgue_has_exponent_d_everywhere() {
    for dim in 1..=2usize {
        let t = lebesgue(dim, 6, MassMode::Exact).unwrap();
        for j in 1..=6 {
            for k in -20..=20 {
                let qv = k as f64 / 4.0;
                assert!((tau_hat(&t, j, qv).unwrap() - dim as f64 * (qv - 1.0)).abs() < 1e-12);
            }
            let c = coarse_spectrum(&t, j, 0.1).unwrap();
            assert_eq!(c.samples().len(), 1);
        }
        let x = Point::splat(dim, q(1, 3)).unwrap();
        assert!((cube_exponent(&t, &x, 5).unwrap() - dim as f64).abs() < 1e-12);
    }
}

#[test]
fn trees_from_atoms_conserve_mass() {
    let mut rng = ChaCha8Rng::seed_from_u64(44);
    let m = support::random_measure(&mut rng, 2, 8, 5);
    let t = MassTree::from_atoms(&m, 5).unwrap();
    for j in 0..=5 {
        let total: Rational = t.level_exact(j).unwrap().into_iter().map(|(_, w)| w).sum();
        assert!(total.is_one());
        let direct = cube_masses(&m, j);
        for (c, w) in t.level_exact(j).unwrap() {
            assert_eq!(
                direct
                    .get(c.coords())
                    .cloned()
                    .unwrap_or_else(Rational::zero),
                w
            );
        }
    }
}
