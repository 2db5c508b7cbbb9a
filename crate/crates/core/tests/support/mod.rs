//! Brute-force oracles. They share only data types with the library: every
//! count, mass and cost here is recomputed from first principles on small
//! instances.

#![allow(dead_code)]

use mfkit_core::{AtomicMeasure, Point, Rational};
use num_bigint::{BigInt, BigUint};
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::Rng;

pub fn q(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

pub fn point(coords: &[Rational]) -> Point {
    Point::new(coords.to_vec()).expect("coordinates in the unit cube")
}

/// `max_i |x_i - y_i|`.
pub fn sup_dist(x: &Point, y: &Point) -> Rational {
    x.coords()
        .iter()
        .zip(y.coords())
        .map(|(a, b)| (a - b).abs())
        .max()
        .unwrap_or_else(Rational::zero)
}

/// Random probability measure with 1..=`max_atoms` atoms on a `2^-bits` lattice
/// and small integer weights.
pub fn random_measure(
    rng: &mut impl Rng,
    dim: usize,
    max_atoms: usize,
    bits: u32,
) -> AtomicMeasure {
    let n = rng.gen_range(1..=max_atoms);
    let den = 1i64 << bits;
    let raw: Vec<i64> = (0..n).map(|_| rng.gen_range(1..=9)).collect();
    let total: i64 = raw.iter().sum();
    let atoms = raw
        .iter()
        .map(|&w| {
            let x: Vec<Rational> = (0..dim).map(|_| q(rng.gen_range(0..=den), den)).collect();
            (point(&x), q(w, total))
        })
        .collect();
    AtomicMeasure::new(dim, atoms).expect("valid random measure")
}

/// Random strictly positive weights summing to one.
pub fn random_weights(rng: &mut impl Rng, n: usize) -> Vec<Rational> {
    let raw: Vec<i64> = (0..n).map(|_| rng.gen_range(1..=12)).collect();
    let total: i64 = raw.iter().sum();
    raw.into_iter().map(|w| q(w, total)).collect()
}

/// Minimum transport cost over every basic feasible solution of the
/// transportation polytope. Sizes up to 4 x 4.
pub fn transport_by_vertices(mu: &AtomicMeasure, nu: &AtomicMeasure) -> Rational {
    let a: Vec<&Rational> = mu.atoms().iter().map(|(_, w)| w).collect();
    let b: Vec<&Rational> = nu.atoms().iter().map(|(_, w)| w).collect();
    let (m, n) = (a.len(), b.len());
    assert!(m * n <= 16, "oracle is exponential in the cell count");
    let cost = |i: usize, j: usize| sup_dist(&mu.atoms()[i].0, &nu.atoms()[j].0);
    let cells = m * n;
    let need = m + n - 1;
    let mut best: Option<Rational> = None;
    for mask in 0u32..(1 << cells) {
        if mask.count_ones() as usize != need {
            continue;
        }
        let edges: Vec<(usize, usize)> = (0..cells)
            .filter(|c| mask >> c & 1 == 1)
            .map(|c| (c / n, c % n))
            .collect();
        if let Some(flows) = tree_flows(&a, &b, &edges) {
            if flows.iter().all(|f| !f.is_negative()) {
                let total: Rational = edges
                    .iter()
                    .zip(&flows)
                    .map(|(&(i, j), f)| cost(i, j) * f)
                    .sum();
                if best.as_ref().is_none_or(|x| total < *x) {
                    best = Some(total);
                }
            }
        }
    }
    best.expect("the polytope has a vertex")
}

/// Flows on a spanning tree of the bipartite graph, by peeling leaves.
/// `None` when the edges do not form a spanning tree.
fn tree_flows(a: &[&Rational], b: &[&Rational], edges: &[(usize, usize)]) -> Option<Vec<Rational>> {
    let m = a.len();
    let mut supply: Vec<Rational> = a
        .iter()
        .map(|x| (*x).clone())
        .chain(b.iter().map(|x| (*x).clone()))
        .collect();
    let mut alive = vec![true; edges.len()];
    let mut flows = vec![Rational::zero(); edges.len()];
    for _ in 0..edges.len() {
        let mut degree = vec![0usize; supply.len()];
        for (e, &(i, j)) in edges.iter().enumerate() {
            if alive[e] {
                degree[i] += 1;
                degree[m + j] += 1;
            }
        }
        let (e, leaf) = edges
            .iter()
            .enumerate()
            .filter(|(e, _)| alive[*e])
            .find_map(|(e, &(i, j))| {
                if degree[i] == 1 {
                    Some((e, i))
                } else if degree[m + j] == 1 {
                    Some((e, m + j))
                } else {
                    None
                }
            })?;
        let (i, j) = edges[e];
        let other = if leaf == i { m + j } else { i };
        let f = supply[leaf].clone();
        supply[other] -= &f;
        supply[leaf] = Rational::zero();
        flows[e] = f;
        alive[e] = false;
    }
    // A spanning tree leaves every node balanced; a forest with a cycle does not peel fully.
    if supply.iter().all(Zero::is_zero) {
        Some(flows)
    } else {
        None
    }
}

/// `int |F - G|` for 1-D measures by sweeping the merged breakpoints.
pub fn cdf_gap(mu: &AtomicMeasure, nu: &AtomicMeasure) -> Rational {
    let mut pts: Vec<(Rational, Rational)> = mu
        .atoms()
        .iter()
        .map(|(x, w)| (x.coords()[0].clone(), w.clone()))
        .chain(
            nu.atoms()
                .iter()
                .map(|(x, w)| (x.coords()[0].clone(), -w.clone())),
        )
        .collect();
    pts.sort_by(|x, y| x.0.cmp(&y.0));
    let mut total = Rational::zero();
    let mut running = Rational::zero();
    for pair in pts.windows(2) {
        running += &pair[0].1;
        total += running.abs() * (&pair[1].0 - &pair[0].0);
    }
    total
}

/// Integer geometry of one ball family: index `k` at level `J` has center
/// `(2k + 1) 2^{-J-1}`; radius `2^{-t-1}` with `t = θJ`.
#[derive(Clone, Copy, Debug)]
pub struct Level {
    pub j: u32,
    pub t: u32,
}

/// Children (level `child`) whose closed balls lie in the closed parent ball
/// at index `parent_k` of level `parent`, counted by visiting every child index.
pub fn children_by_enumeration(dim: usize, parent: Level, parent_k: &[u64], child: Level) -> u64 {
    let unit = child.t + 1;
    let centre = |j: u32, k: u64| -> i128 { (2 * k as i128 + 1) << (unit - j - 1) };
    let r_parent = 1i128 << (unit - parent.t - 1);
    let r_child = 1i128;
    let n = 1u64 << child.j;
    let inside: Vec<Vec<bool>> = parent_k
        .iter()
        .map(|&pk| {
            let c = centre(parent.j, pk);
            (0..n)
                .map(|k| {
                    let x = centre(child.j, k);
                    x - r_child >= c - r_parent && x + r_child <= c + r_parent
                })
                .collect()
        })
        .collect();
    let mut count = 0u64;
    let mut idx = vec![0u64; dim];
    'outer: loop {
        if (0..dim).all(|a| inside[a][idx[a] as usize]) {
            count += 1;
        }
        for i in idx.iter_mut() {
            *i += 1;
            if *i < n {
                continue 'outer;
            }
            *i = 0;
        }
        break;
    }
    count
}

/// Mass of every level-`level` cube charged by `m`, by direct summation.
/// Coordinate 1 belongs to the last cube.
pub fn cube_masses(
    m: &AtomicMeasure,
    level: u32,
) -> std::collections::BTreeMap<Vec<u64>, Rational> {
    let scale = BigInt::one() << level as usize;
    let last = &scale - BigInt::one();
    let mut out = std::collections::BTreeMap::new();
    for (x, w) in m.atoms() {
        let key: Vec<u64> = x
            .coords()
            .iter()
            .map(|c| {
                let k = (c * Rational::from_integer(scale.clone()))
                    .floor()
                    .to_integer()
                    .min(last.clone());
                k.to_u64().expect("small level")
            })
            .collect();
        *out.entry(key).or_insert_with(Rational::zero) += w;
    }
    out
}

/// `m >= 2^{-level (d + 1/n)}` decided as `num^n 2^{level (d n + 1)} >= den^n`.
pub fn floor_holds(m: &Rational, dim: usize, n: u32, level: u32) -> bool {
    let num = m.numer().to_biguint().expect("nonnegative mass");
    let den = m.denom().to_biguint().expect("positive denominator");
    let shift = level as usize * (dim * n as usize + 1);
    num_traits::pow(num, n as usize) << shift >= num_traits::pow(den, n as usize)
}

/// `μ(B̄(x, r))` by summing atoms within sup distance `r`.
pub fn ball_mass(m: &AtomicMeasure, x: &Point, r: &Rational) -> Rational {
    m.atoms()
        .iter()
        .filter(|(y, _)| sup_dist(x, y) <= *r)
        .map(|(_, w)| w.clone())
        .sum()
}

/// `2^e` for a nonnegative integer exponent.
pub fn two_pow(e: u64) -> BigUint {
    BigUint::one() << e as usize
}
