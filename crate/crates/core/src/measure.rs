//! Probability measures on `[0,1]^d`: finite atomic measures and dyadic mass
//! trees holding `mu(Q)` for every cube `Q` up to a fixed depth.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::ToString;
use alloc::vec::Vec;

use num_traits::{One, Signed, Zero};

use crate::dyadic::{containing_cube, CubeIndex, Point, SupBall, MAX_LEVEL};
use crate::error::{Error, Result};
use crate::num::{log2_rational, Rational};

/// A finite sum of weighted Dirac masses with exact positive weights summing to 1.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AtomicMeasure {
    dim: usize,
    atoms: Vec<(Point, Rational)>,
}

impl AtomicMeasure {
    /// Builds the measure, merging atoms at identical locations.
    pub fn new(dim: usize, atoms: Vec<(Point, Rational)>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::ZeroDimension);
        }
        if atoms.is_empty() {
            return Err(Error::EmptyMeasure);
        }
        let mut merged: BTreeMap<Point, Rational> = BTreeMap::new();
        let mut total = Rational::zero();
        for (index, (x, w)) in atoms.into_iter().enumerate() {
            if x.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: x.dim(),
                });
            }
            if !w.is_positive() {
                return Err(Error::NonPositiveWeight { index });
            }
            total += &w;
            *merged.entry(x).or_insert_with(Rational::zero) += w;
        }
        if !total.is_one() {
            return Err(Error::NotNormalized {
                sum: total.to_string(),
            });
        }
        Ok(AtomicMeasure {
            dim,
            atoms: merged.into_iter().collect(),
        })
    }

    pub fn dirac(x: Point) -> Self {
        AtomicMeasure {
            dim: x.dim(),
            atoms: alloc::vec![(x, Rational::one())],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Atoms sorted by location, locations distinct.
    pub fn atoms(&self) -> &[(Point, Rational)] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// Exact mass of a ball (boundary included iff the ball is closed).
    pub fn ball_mass(&self, b: &SupBall) -> Result<Rational> {
        if b.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: b.dim(),
            });
        }
        Ok(self
            .atoms
            .iter()
            .filter(|(x, _)| b.contains_point(x))
            .fold(Rational::zero(), |acc, (_, w)| acc + w))
    }

    /// Exact masses of the charged level-`j` cubes, keyed by cube.
    pub fn cube_masses(&self, j: u32) -> Result<BTreeMap<CubeIndex, Rational>> {
        let mut out: BTreeMap<CubeIndex, Rational> = BTreeMap::new();
        for (x, w) in &self.atoms {
            let c = containing_cube(x, j)?;
            *out.entry(c).or_insert_with(Rational::zero) += w;
        }
        Ok(out)
    }
}

/// How a [`MassTree`] stores its masses.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MassMode {
    Exact,
    Log2,
}

/// A single cube mass, either exact or as a base-2 logarithm (`-inf` for 0).
#[derive(Clone, Debug, PartialEq)]
pub enum Mass {
    Exact(Rational),
    Log2(f64),
}

impl Mass {
    pub fn log2(&self) -> f64 {
        match self {
            Mass::Exact(r) => log2_rational(r),
            Mass::Log2(l) => *l,
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Mass::Exact(r) => r.is_zero(),
            Mass::Log2(l) => *l == f64::NEG_INFINITY,
        }
    }

    pub fn exact(&self) -> Result<&Rational> {
        match self {
            Mass::Exact(r) => Ok(r),
            Mass::Log2(_) => Err(Error::ModeMismatch),
        }
    }

    /// Sum of two masses of the same mode.
    pub fn checked_add(&self, other: &Mass) -> Result<Mass> {
        match (self, other) {
            (Mass::Exact(a), Mass::Exact(b)) => Ok(Mass::Exact(a + b)),
            (Mass::Log2(a), Mass::Log2(b)) => Ok(Mass::Log2(log2_add(*a, *b))),
            _ => Err(Error::ModeMismatch),
        }
    }
}

/// `log2(2^a + 2^b)` without overflow.
pub(crate) fn log2_add(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if lo == f64::NEG_INFINITY {
        return hi;
    }
    hi + libm::log2(1.0 + libm::exp2(lo - hi))
}

#[derive(Clone, Debug, PartialEq)]
enum Levels {
    Exact(Vec<Vec<(u64, Rational)>>),
    Log2(Vec<Vec<(u64, f64)>>),
}

/// Masses of all dyadic cubes of levels `0..=depth`, sparse (absent = 0).
///
/// Each level is kept sorted by the cube's linear key; parents equal the sum
/// of their `2^d` children. Requires `dim * depth <= 62` so keys fit in `u64`.
#[derive(Clone, Debug, PartialEq)]
pub struct MassTree {
    dim: usize,
    depth: u32,
    levels: Levels,
}

/// Relative tolerance on parent/children sums in log2 mode.
pub const LOG2_SUM_TOLERANCE: f64 = 1e-9;
/// Absolute tolerance on the root's log2 mass in log2 mode.
pub const LOG2_ROOT_TOLERANCE: f64 = 1e-12;

fn check_shape(dim: usize, depth: u32) -> Result<()> {
    if dim == 0 {
        return Err(Error::ZeroDimension);
    }
    let max = MAX_LEVEL as u64;
    if depth > MAX_LEVEL || dim as u64 * depth as u64 > max {
        return Err(Error::LevelTooDeep {
            level: depth as u64,
            max: max / dim as u64,
        });
    }
    Ok(())
}

fn parent_key(key: u64, level: u32, dim: usize) -> u64 {
    let c = CubeIndex::from_key(level, dim, key);
    c.parent().map(|p| p.key()).unwrap_or(0)
}

impl MassTree {
    /// Discretizes an atomic measure onto the dyadic cubes up to level `depth`.
    pub fn from_atoms(m: &AtomicMeasure, depth: u32) -> Result<Self> {
        check_shape(m.dim(), depth)?;
        let mut leaves: BTreeMap<u64, Rational> = BTreeMap::new();
        for (x, w) in m.atoms() {
            let key = containing_cube(x, depth)?.key();
            *leaves.entry(key).or_insert_with(Rational::zero) += w;
        }
        MassTree::from_leaves_exact(m.dim(), depth, leaves)
    }

    /// Builds a tree from exact leaf masses at level `depth`, aggregating upward.
    pub fn from_leaves_exact(
        dim: usize,
        depth: u32,
        leaves: BTreeMap<u64, Rational>,
    ) -> Result<Self> {
        check_shape(dim, depth)?;
        let mut levels: Vec<Vec<(u64, Rational)>> = Vec::with_capacity(depth as usize + 1);
        let mut current: Vec<(u64, Rational)> =
            leaves.into_iter().filter(|(_, m)| !m.is_zero()).collect();
        for level in (0..=depth).rev() {
            let mut up: BTreeMap<u64, Rational> = BTreeMap::new();
            if level > 0 {
                for (k, m) in &current {
                    *up.entry(parent_key(*k, level, dim))
                        .or_insert_with(Rational::zero) += m;
                }
            }
            levels.push(current);
            current = up.into_iter().collect();
        }
        levels.reverse();
        let tree = MassTree {
            dim,
            depth,
            levels: Levels::Exact(levels),
        };
        tree.validate()?;
        Ok(tree)
    }

    /// Builds a tree from log2 leaf masses at level `depth`, aggregating upward.
    pub fn from_leaves_log2(dim: usize, depth: u32, leaves: BTreeMap<u64, f64>) -> Result<Self> {
        check_shape(dim, depth)?;
        let mut levels: Vec<Vec<(u64, f64)>> = Vec::with_capacity(depth as usize + 1);
        let mut current: Vec<(u64, f64)> = leaves
            .into_iter()
            .filter(|(_, l)| *l != f64::NEG_INFINITY)
            .collect();
        for level in (0..=depth).rev() {
            let mut groups: BTreeMap<u64, Vec<f64>> = BTreeMap::new();
            if level > 0 {
                for (k, l) in &current {
                    groups
                        .entry(parent_key(*k, level, dim))
                        .or_default()
                        .push(*l);
                }
            }
            levels.push(current);
            current = groups
                .into_iter()
                .map(|(k, ls)| (k, crate::spectra::log2_sum_exp2(&ls)))
                .collect();
        }
        levels.reverse();
        let tree = MassTree {
            dim,
            depth,
            levels: Levels::Log2(levels),
        };
        tree.validate()?;
        Ok(tree)
    }

    /// Builds a tree from explicitly listed cubes at every level (as read from
    /// a file) and checks all invariants.
    pub fn from_cubes(dim: usize, depth: u32, cubes: Vec<(CubeIndex, Mass)>) -> Result<Self> {
        check_shape(dim, depth)?;
        let mode = match cubes.first() {
            Some((_, Mass::Log2(_))) => MassMode::Log2,
            _ => MassMode::Exact,
        };
        let mut exact: Vec<BTreeMap<u64, Rational>> =
            alloc::vec![BTreeMap::new(); depth as usize + 1];
        let mut logs: Vec<BTreeMap<u64, f64>> = alloc::vec![BTreeMap::new(); depth as usize + 1];
        for (c, m) in cubes {
            if c.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: c.dim(),
                });
            }
            if c.level() > depth {
                return Err(Error::BeyondDepth {
                    level: c.level(),
                    depth,
                });
            }
            let lvl = c.level() as usize;
            let key = c.key();
            let dup = match (&m, mode) {
                (Mass::Exact(r), MassMode::Exact) => {
                    if r.is_negative() {
                        return Err(Error::InvalidTree(format!("negative mass at {c}")));
                    }
                    exact[lvl].insert(key, r.clone()).is_some()
                }
                (Mass::Log2(l), MassMode::Log2) => {
                    if l.is_nan() {
                        return Err(Error::InvalidTree(format!("NaN mass at {c}")));
                    }
                    logs[lvl].insert(key, *l).is_some()
                }
                _ => return Err(Error::ModeMismatch),
            };
            if dup {
                return Err(Error::InvalidTree(format!("cube {c} listed twice")));
            }
        }
        let levels = match mode {
            MassMode::Exact => Levels::Exact(
                exact
                    .into_iter()
                    .map(|l| l.into_iter().filter(|(_, m)| !m.is_zero()).collect())
                    .collect(),
            ),
            MassMode::Log2 => Levels::Log2(
                logs.into_iter()
                    .map(|l| {
                        l.into_iter()
                            .filter(|(_, m)| *m != f64::NEG_INFINITY)
                            .collect()
                    })
                    .collect(),
            ),
        };
        let tree = MassTree { dim, depth, levels };
        tree.validate()?;
        Ok(tree)
    }

    /// Uniform masses `2^{-d j}` on every cube, built level by level.
    pub(crate) fn uniform(dim: usize, depth: u32, mode: MassMode) -> Result<Self> {
        check_shape(dim, depth)?;
        let count = |j: u32| 1u64 << (dim as u32 * j);
        let levels = match mode {
            MassMode::Exact => Levels::Exact(
                (0..=depth)
                    .map(|j| {
                        let m = crate::num::pow2(-((dim as u32 * j) as i64));
                        (0..count(j)).map(|k| (k, m.clone())).collect()
                    })
                    .collect(),
            ),
            MassMode::Log2 => Levels::Log2(
                (0..=depth)
                    .map(|j| {
                        let l = -((dim as u32 * j) as f64);
                        (0..count(j)).map(|k| (k, l)).collect()
                    })
                    .collect(),
            ),
        };
        Ok(MassTree { dim, depth, levels })
    }

    /// Checks normalization, nonnegativity and parent = sum of children.
    pub fn validate(&self) -> Result<()> {
        match &self.levels {
            Levels::Exact(levels) => {
                let root: Rational = levels[0].iter().map(|(_, m)| m.clone()).sum();
                if !root.is_one() {
                    return Err(Error::InvalidTree(format!(
                        "root mass is {root}, expected 1"
                    )));
                }
                for (j, lvl) in levels.iter().enumerate() {
                    if lvl.iter().any(|(_, m)| m.is_negative()) {
                        return Err(Error::InvalidTree(format!("negative mass at level {j}")));
                    }
                }
                for j in 1..levels.len() {
                    let mut sums: BTreeMap<u64, Rational> = BTreeMap::new();
                    for (k, m) in &levels[j] {
                        *sums
                            .entry(parent_key(*k, j as u32, self.dim))
                            .or_insert_with(Rational::zero) += m;
                    }
                    let parents: BTreeMap<u64, Rational> = levels[j - 1].iter().cloned().collect();
                    if sums != parents {
                        return Err(Error::InvalidTree(format!(
                            "level {} masses do not equal the sums of their children",
                            j - 1
                        )));
                    }
                }
            }
            Levels::Log2(levels) => {
                let root = crate::spectra::log2_sum_exp2(
                    &levels[0].iter().map(|(_, l)| *l).collect::<Vec<_>>(),
                );
                if root.is_nan() || root.abs() > LOG2_ROOT_TOLERANCE {
                    return Err(Error::InvalidTree(format!(
                        "root log2 mass is {root}, expected 0"
                    )));
                }
                for j in 1..levels.len() {
                    let mut groups: BTreeMap<u64, Vec<f64>> = BTreeMap::new();
                    for (k, l) in &levels[j] {
                        groups
                            .entry(parent_key(*k, j as u32, self.dim))
                            .or_default()
                            .push(*l);
                    }
                    if groups.len() != levels[j - 1].len() {
                        return Err(Error::InvalidTree(format!(
                            "level {} charged cubes do not match their children",
                            j - 1
                        )));
                    }
                    for ((k, l), (gk, gl)) in levels[j - 1].iter().zip(groups.iter()) {
                        let s = crate::spectra::log2_sum_exp2(gl);
                        // relative error of the masses themselves
                        let rel = libm::exp2((s - l).abs()) - 1.0;
                        if k != gk || rel.is_nan() || rel > LOG2_SUM_TOLERANCE {
                            return Err(Error::InvalidTree(format!(
                                "level {} masses do not equal the sums of their children",
                                j - 1
                            )));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn mode(&self) -> MassMode {
        match self.levels {
            Levels::Exact(_) => MassMode::Exact,
            Levels::Log2(_) => MassMode::Log2,
        }
    }

    fn check_level(&self, j: u32) -> Result<()> {
        if j > self.depth {
            return Err(Error::BeyondDepth {
                level: j,
                depth: self.depth,
            });
        }
        Ok(())
    }

    /// Stored mass of `c`; zero for absent cubes.
    pub fn cube_mass(&self, c: &CubeIndex) -> Result<Mass> {
        if c.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: c.dim(),
            });
        }
        self.check_level(c.level())?;
        let key = c.key();
        let j = c.level() as usize;
        Ok(match &self.levels {
            Levels::Exact(levels) => Mass::Exact(
                levels[j]
                    .binary_search_by_key(&key, |(k, _)| *k)
                    .map(|i| levels[j][i].1.clone())
                    .unwrap_or_else(|_| Rational::zero()),
            ),
            Levels::Log2(levels) => Mass::Log2(
                levels[j]
                    .binary_search_by_key(&key, |(k, _)| *k)
                    .map(|i| levels[j][i].1)
                    .unwrap_or(f64::NEG_INFINITY),
            ),
        })
    }

    /// Number of cubes of positive mass at level `j`.
    pub fn charged_count(&self, j: u32) -> Result<usize> {
        self.check_level(j)?;
        Ok(match &self.levels {
            Levels::Exact(l) => l[j as usize].len(),
            Levels::Log2(l) => l[j as usize].len(),
        })
    }

    /// Log2 masses of the charged level-`j` cubes, in key order.
    pub fn level_log2(&self, j: u32) -> Result<Vec<f64>> {
        self.check_level(j)?;
        Ok(match &self.levels {
            Levels::Exact(l) => l[j as usize]
                .iter()
                .map(|(_, m)| log2_rational(m))
                .collect(),
            Levels::Log2(l) => l[j as usize].iter().map(|(_, m)| *m).collect(),
        })
    }

    /// Charged cubes of level `j` with their masses, in key order.
    pub fn level_cubes(&self, j: u32) -> Result<Vec<(CubeIndex, Mass)>> {
        self.check_level(j)?;
        let dim = self.dim;
        Ok(match &self.levels {
            Levels::Exact(l) => l[j as usize]
                .iter()
                .map(|(k, m)| (CubeIndex::from_key(j, dim, *k), Mass::Exact(m.clone())))
                .collect(),
            Levels::Log2(l) => l[j as usize]
                .iter()
                .map(|(k, m)| (CubeIndex::from_key(j, dim, *k), Mass::Log2(*m)))
                .collect(),
        })
    }

    /// Exact masses of the charged level-`j` cubes; errors in log2 mode.
    pub fn level_exact(&self, j: u32) -> Result<Vec<(CubeIndex, Rational)>> {
        self.check_level(j)?;
        match &self.levels {
            Levels::Exact(l) => Ok(l[j as usize]
                .iter()
                .map(|(k, m)| (CubeIndex::from_key(j, self.dim, *k), m.clone()))
                .collect()),
            Levels::Log2(_) => Err(Error::ModeMismatch),
        }
    }

    /// Explicit conversion to log2 mode.
    pub fn to_log2(&self) -> MassTree {
        let levels = match &self.levels {
            Levels::Exact(l) => Levels::Log2(
                l.iter()
                    .map(|lvl| lvl.iter().map(|(k, m)| (*k, log2_rational(m))).collect())
                    .collect(),
            ),
            Levels::Log2(l) => Levels::Log2(l.clone()),
        };
        MassTree {
            dim: self.dim,
            depth: self.depth,
            levels,
        }
    }

    /// The same measure truncated to levels `0..=depth`.
    pub fn coarsened(&self, depth: u32) -> Result<MassTree> {
        self.check_level(depth)?;
        let keep = depth as usize + 1;
        let levels = match &self.levels {
            Levels::Exact(l) => Levels::Exact(l[..keep].to_vec()),
            Levels::Log2(l) => Levels::Log2(l[..keep].to_vec()),
        };
        Ok(MassTree {
            dim: self.dim,
            depth,
            levels,
        })
    }
}
