//! Measure generators: Lebesgue, the center measures `pi_j`, grid measures
//! `nu`, the blended approximants `mu_n`, and binomial cascades. Also the
//! exact floor-inequality check on cube masses at level `J_n`.
//!
//! `mu_n = 2^{-J_n/n} pi_{J_n} + (1 - 2^{-J_n/n}) nu_n` with `J_n = 2 n j_n^2`.
//! Since `pi_{J_n}` has `2^{d J_n}` atoms, [`MuN`] keeps the blend symbolic and
//! answers cube and ball queries in closed form; [`MuN::to_atomic`]
//! materializes it only when small.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec::Vec;

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::dyadic::{
    center_index_range, containing_cube, cube_center, range_product, CubeIndex, Point, SupBall,
    MAX_LEVEL,
};
use crate::error::{Error, Result};
use crate::measure::{AtomicMeasure, MassMode, MassTree};
use crate::num::{log2_biguint, log2_rational, pow2, pow2_int, Rational};

/// Upper bound on the number of atoms a generator will materialize.
pub const MAX_MATERIALIZED_ATOMS: u64 = 1 << 22;

fn atom_count(dim: usize, level: u32) -> Result<u64> {
    let bits = dim as u64 * level as u64;
    if bits > 22 {
        return Err(Error::TooLarge(format!(
            "2^{bits} atoms exceed the materialization cap 2^22"
        )));
    }
    Ok(1u64 << bits)
}

/// Uniform measure: every level-`j` cube has mass `2^{-d j}`.
pub fn lebesgue(dim: usize, depth: u32, mode: MassMode) -> Result<MassTree> {
    MassTree::uniform(dim, depth, mode)
}

/// `pi_j`: weight `2^{-d j}` at each center `(k + e) 2^{-j}`.
pub fn pi_j(dim: usize, j: u32) -> Result<AtomicMeasure> {
    if dim == 0 {
        return Err(Error::ZeroDimension);
    }
    if j == 0 {
        return Err(Error::InvalidParameter("pi_j needs j >= 1".into()));
    }
    if j > MAX_LEVEL {
        return Err(Error::LevelTooDeep {
            level: j as u64,
            max: MAX_LEVEL as u64,
        });
    }
    let n = atom_count(dim, j)?;
    let w = pow2(-((dim as u64 * j as u64) as i64));
    let atoms = (0..n)
        .map(|key| (cube_center(&CubeIndex::from_key(j, dim, key)), w.clone()))
        .collect();
    AtomicMeasure::new(dim, atoms)
}

/// Strictly positive weights `r_{j,k}` on the grid corners `k 2^{-j}`,
/// indexed by the row-major key `sum_i k_i 2^{j i}` (axis 0 fastest).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GridWeights {
    dim: usize,
    level: u32,
    weights: Vec<Rational>,
}

impl GridWeights {
    pub fn new(dim: usize, level: u32, weights: Vec<Rational>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::ZeroDimension);
        }
        if level == 0 {
            return Err(Error::InvalidParameter("grid level must be >= 1".into()));
        }
        let expected = atom_count(dim, level)?;
        if weights.len() as u64 != expected {
            return Err(Error::InvalidParameter(format!(
                "grid of level {level} in dimension {dim} needs {expected} weights, got {}",
                weights.len()
            )));
        }
        let mut total = Rational::zero();
        for (index, w) in weights.iter().enumerate() {
            if !w.is_positive() {
                return Err(Error::NonPositiveWeight { index });
            }
            total += w;
        }
        if !total.is_one() {
            return Err(Error::NotNormalized {
                sum: format!("{total}"),
            });
        }
        Ok(GridWeights {
            dim,
            level,
            weights,
        })
    }

    pub fn uniform(dim: usize, level: u32) -> Result<Self> {
        let n = atom_count(dim, level)?;
        let w = Rational::new(BigInt::one(), BigInt::from(n));
        GridWeights::new(dim, level, alloc::vec![w; n as usize])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn weights(&self) -> &[Rational] {
        &self.weights
    }

    /// Corner `k 2^{-j}` of the weight with the given key.
    pub fn corner(&self, key: u64) -> Point {
        let c = CubeIndex::from_key(self.level, self.dim, key);
        let side = c.side();
        Point::new(
            c.coords()
                .iter()
                .map(|&k| Rational::from_integer(BigInt::from(k)) * &side)
                .collect(),
        )
        .expect("grid corners lie in the unit cube")
    }
}

/// `nu = sum_k r_{j,k} delta_{k 2^{-j}}`.
pub fn nu_from_grid(w: &GridWeights) -> AtomicMeasure {
    let atoms = w
        .weights
        .iter()
        .enumerate()
        .map(|(key, r)| (w.corner(key as u64), r.clone()))
        .collect();
    AtomicMeasure::new(w.dim, atoms).expect("grid weights are validated")
}

/// `J_n = 2 n j_n^2`.
pub fn blend_level(n: u32, j_n: u32) -> Result<u64> {
    if n == 0 || j_n == 0 {
        return Err(Error::InvalidParameter("n and j_n must be >= 1".into()));
    }
    Ok(2 * n as u64 * (j_n as u64) * (j_n as u64))
}

/// Log2 of the genericity-ball radius around `mu_n`: `-(d + 4) J_n^2`.
pub fn genericity_radius_log2(big_j: u64, dim: usize) -> BigInt {
    -(BigInt::from(dim as u64 + 4) * BigInt::from(big_j) * BigInt::from(big_j))
}

/// The approximant `mu_n` built from grid weights, held in closed form.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MuN {
    grid: GridWeights,
    n: u32,
    level: u32,
}

impl MuN {
    pub fn new(grid: GridWeights, n: u32) -> Result<Self> {
        let big_j = blend_level(n, grid.level)?;
        if big_j > MAX_LEVEL as u64 {
            return Err(Error::LevelTooDeep {
                level: big_j,
                max: MAX_LEVEL as u64,
            });
        }
        Ok(MuN {
            grid,
            n,
            level: big_j as u32,
        })
    }

    pub fn grid(&self) -> &GridWeights {
        &self.grid
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.grid.dim
    }

    /// `J_n`.
    pub fn level(&self) -> u32 {
        self.level
    }

    /// `2^{-J_n/n} = 2^{-2 j_n^2}`, an exact dyadic rational.
    pub fn blend_weight(&self) -> Rational {
        let j = self.grid.level as i64;
        pow2(-2 * j * j)
    }

    /// Mass each `pi_{J_n}` atom contributes: `2^{-J_n/n - d J_n}`.
    pub fn floor_mass(&self) -> Rational {
        self.blend_weight() * pow2(-((self.dim() as u64 * self.level as u64) as i64))
    }

    pub fn nu(&self) -> AtomicMeasure {
        nu_from_grid(&self.grid)
    }

    /// All atoms of `mu_n`, merged; fails above [`MAX_MATERIALIZED_ATOMS`].
    pub fn to_atomic(&self) -> Result<AtomicMeasure> {
        let d = self.dim();
        let n_pi = atom_count(d, self.level)?;
        let floor = self.floor_mass();
        let keep = Rational::one() - self.blend_weight();
        let mut atoms: Vec<(Point, Rational)> = (0..n_pi)
            .map(|key| {
                (
                    cube_center(&CubeIndex::from_key(self.level, d, key)),
                    floor.clone(),
                )
            })
            .collect();
        atoms.extend(
            self.grid
                .weights
                .iter()
                .enumerate()
                .map(|(key, r)| (self.grid.corner(key as u64), r * &keep)),
        );
        AtomicMeasure::new(d, atoms)
    }

    fn nu_mass_where(&self, mut inside: impl FnMut(&Point) -> bool) -> Rational {
        let keep = Rational::one() - self.blend_weight();
        let mut total = Rational::zero();
        for (key, r) in self.grid.weights.iter().enumerate() {
            if inside(&self.grid.corner(key as u64)) {
                total += r;
            }
        }
        total * keep
    }

    /// Exact `mu_n(I)` for a cube of any level.
    pub fn cube_mass(&self, c: &CubeIndex) -> Result<Rational> {
        if c.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: c.dim(),
            });
        }
        let side = c.side();
        let ranges: Vec<_> = c
            .lower_corner()
            .iter()
            .map(|lo| {
                let hi = lo + &side;
                center_index_range(lo, false, &hi, true, self.level as u64, &Rational::zero())
            })
            .collect();
        let pi_count = range_product(&ranges);
        let level = c.level();
        let nu_part =
            self.nu_mass_where(|x| containing_cube(x, level).map(|k| &k == c).unwrap_or(false));
        Ok(Rational::from_integer(BigInt::from(pi_count)) * self.floor_mass() + nu_part)
    }

    /// Exact `mu_n(B)` via closed-form center counting.
    pub fn ball_mass(&self, b: &SupBall) -> Result<Rational> {
        if b.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: b.dim(),
            });
        }
        let strict = !b.is_closed();
        let ranges: Vec<_> = (0..self.dim())
            .map(|axis| {
                let (lo, hi) = b.interval(axis);
                center_index_range(
                    &lo,
                    strict,
                    &hi,
                    strict,
                    self.level as u64,
                    &Rational::zero(),
                )
            })
            .collect();
        let pi_count = range_product(&ranges);
        let nu_part = self.nu_mass_where(|x| b.contains_point(x));
        Ok(Rational::from_integer(BigInt::from(pi_count)) * self.floor_mass() + nu_part)
    }

    /// Level-`J_n` cube masses grouped into classes `(mass, multiplicity)`:
    /// one class per cube charged by `nu`, plus the class of cubes that carry
    /// only the `pi` floor. Multiplicities add up to `2^{d J_n}`.
    pub fn level_classes(&self) -> Vec<(Rational, BigUint)> {
        let d = self.dim();
        let floor = self.floor_mass();
        let keep = Rational::one() - self.blend_weight();
        let mut charged: BTreeMap<CubeIndex, Rational> = BTreeMap::new();
        for (key, r) in self.grid.weights.iter().enumerate() {
            let c = containing_cube(&self.grid.corner(key as u64), self.level)
                .expect("level checked on construction");
            *charged.entry(c).or_insert_with(|| floor.clone()) += r * &keep;
        }
        let total = BigUint::one() << (d * self.level as usize);
        let rest = total - BigUint::from(charged.len());
        let mut out: Vec<(Rational, BigUint)> =
            charged.into_values().map(|m| (m, BigUint::one())).collect();
        if !rest.is_zero() {
            out.push((floor, rest));
        }
        out
    }

    /// `log2 s_{J_n}(q)` from the class decomposition (no materialization).
    pub fn partition_sum_log2(&self, q: f64) -> f64 {
        let terms: Vec<f64> = self
            .level_classes()
            .iter()
            .map(|(m, mult)| q * log2_rational(m) + log2_biguint(mult))
            .collect();
        crate::spectra::log2_sum_exp2(&terms)
    }

    /// Floor inequality at level `J_n` over every cube, by classes.
    pub fn check_floor(&self) -> FloorReport {
        let mut report = FloorReport::new(self.dim(), self.n, self.level);
        for (m, mult) in self.level_classes() {
            report.record(None, &m, &mult);
        }
        report
    }
}

/// Materialized `mu_n`.
pub fn mu_n(grid: &GridWeights, n: u32) -> Result<AtomicMeasure> {
    MuN::new(grid.clone(), n)?.to_atomic()
}

/// Outcome of comparing every level-`J` cube mass with `2^{-J(d + 1/n)}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FloorReport {
    pub dim: usize,
    pub n: u32,
    pub level: u32,
    /// Number of cubes compared (always `2^{d J}`).
    pub cubes_checked: BigUint,
    /// Number of cubes where the inequality fails.
    pub violations: BigUint,
    /// Number of cubes where it holds with equality.
    pub equalities: BigUint,
    pub min_mass: Option<Rational>,
    /// Up to [`FloorReport::MAX_LISTED`] failing cubes (absent for class-based checks).
    pub listed: Vec<(Option<CubeIndex>, Rational)>,
}

impl FloorReport {
    pub const MAX_LISTED: usize = 16;

    fn new(dim: usize, n: u32, level: u32) -> Self {
        FloorReport {
            dim,
            n,
            level,
            cubes_checked: BigUint::zero(),
            violations: BigUint::zero(),
            equalities: BigUint::zero(),
            min_mass: None,
            listed: Vec::new(),
        }
    }

    /// `m^n` against `2^{-J(d n + 1)}`, in integers.
    fn compare(&self, m: &Rational) -> core::cmp::Ordering {
        if m.is_zero() {
            return core::cmp::Ordering::Less;
        }
        let e = self.level as u64 * (self.dim as u64 * self.n as u64 + 1);
        let lhs = num_traits::pow(m.numer().magnitude().clone(), self.n as usize)
            * (BigUint::one() << (e as usize));
        let rhs = num_traits::pow(m.denom().magnitude().clone(), self.n as usize);
        lhs.cmp(&rhs)
    }

    fn record(&mut self, cube: Option<CubeIndex>, m: &Rational, mult: &BigUint) {
        self.cubes_checked += mult;
        match self.compare(m) {
            core::cmp::Ordering::Less => {
                self.violations += mult;
                if self.listed.len() < Self::MAX_LISTED {
                    self.listed.push((cube, m.clone()));
                }
            }
            core::cmp::Ordering::Equal => self.equalities += mult,
            core::cmp::Ordering::Greater => {}
        }
        if self.min_mass.as_ref().is_none_or(|cur| m < cur) {
            self.min_mass = Some(m.clone());
        }
    }

    pub fn holds(&self) -> bool {
        self.violations.is_zero()
    }

    /// `-J (d + 1/n)` as an exact rational exponent of 2.
    pub fn bound_log2(&self) -> Rational {
        let d = Rational::from_integer(BigInt::from(self.dim as u64));
        let inv_n = Rational::new(BigInt::one(), BigInt::from(self.n));
        -(Rational::from_integer(BigInt::from(self.level)) * (d + inv_n))
    }
}

/// Checks `mu(I) >= |I|^{d + 1/n} = 2^{-J(d + 1/n)}` for every level-`J` cube
/// of an arbitrary atomic measure. Uncharged cubes count as violations.
pub fn check_floor_inequality(mu: &AtomicMeasure, n: u32, level: u32) -> Result<FloorReport> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be >= 1".into()));
    }
    let d = mu.dim();
    if d as u64 * level as u64 > 4096 {
        return Err(Error::TooLarge("cube count exponent above 4096".into()));
    }
    let mut report = FloorReport::new(d, n, level);
    let masses = mu.cube_masses(level)?;
    let total = BigUint::one() << (d * level as usize);
    let empty = total - BigUint::from(masses.len());
    for (c, m) in masses {
        report.record(Some(c), &m, &BigUint::one());
    }
    if !empty.is_zero() {
        report.record(None, &Rational::zero(), &empty);
    }
    Ok(report)
}

/// Binary cascade on `[0,1]`: child weights `(m0, 1 - m0)`, depth `J`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CascadeSpec {
    m0: Rational,
    depth: u32,
}

impl CascadeSpec {
    pub fn new(m0: Rational, depth: u32) -> Result<Self> {
        if !m0.is_positive() || m0 >= Rational::one() {
            return Err(Error::InvalidParameter(format!(
                "cascade weight m0 must lie in (0,1), got {m0}"
            )));
        }
        Ok(CascadeSpec { m0, depth })
    }

    pub fn m0(&self) -> &Rational {
        &self.m0
    }

    pub fn m1(&self) -> Rational {
        Rational::one() - &self.m0
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    /// Closed form `-log2(m0^q + m1^q)`.
    pub fn tau(&self, q: f64) -> f64 {
        let a = crate::num::to_f64(&self.m0);
        let b = crate::num::to_f64(&self.m1());
        -libm::log2(libm::pow(a, q) + libm::pow(b, q))
    }
}

/// Cascade tree: the cube with binary address `b_1..b_j` has mass `prod m_{b_i}`.
pub fn cascade(spec: &CascadeSpec, mode: MassMode) -> Result<MassTree> {
    let depth = spec.depth;
    if depth > 30 {
        return Err(Error::TooLarge(format!("cascade depth {depth} above 30")));
    }
    let n = 1u64 << depth;
    match mode {
        MassMode::Exact => {
            let m1 = spec.m1();
            let p0: Vec<Rational> = (0..=depth)
                .map(|e| num_traits::pow(spec.m0.clone(), e as usize))
                .collect();
            let p1: Vec<Rational> = (0..=depth)
                .map(|e| num_traits::pow(m1.clone(), e as usize))
                .collect();
            let leaves = (0..n)
                .map(|k| {
                    let ones = k.count_ones();
                    (k, &p0[(depth - ones) as usize] * &p1[ones as usize])
                })
                .collect();
            MassTree::from_leaves_exact(1, depth, leaves)
        }
        MassMode::Log2 => {
            let l0 = log2_rational(&spec.m0);
            let l1 = log2_rational(&spec.m1());
            let leaves = (0..n)
                .map(|k| {
                    let ones = k.count_ones() as f64;
                    (k, (depth as f64 - ones) * l0 + ones * l1)
                })
                .collect();
            MassTree::from_leaves_log2(1, depth, leaves)
        }
    }
}

/// Number of atoms `pi_j` would have, as a big integer.
pub fn pi_atom_count(dim: usize, j: u64) -> BigInt {
    pow2_int(dim as u64 * j)
}

/// Convenience for tests and the CLI: `k` as `u64` when it fits.
pub fn small_index(k: &BigInt) -> Option<u64> {
    k.to_u64()
}
