//! Dyadic cubes, points and balls in `[0,1]^d` under the supremum metric.
//!
//! The generation-`j` partition consists of the half-open cubes
//! `prod_i [k_i 2^-j, (k_i + 1) 2^-j)`. Points with a coordinate equal to 1
//! are assigned to the last cube on that axis so that the closed unit cube is
//! fully covered. Everything here is exact rational arithmetic.

use alloc::vec::Vec;
use core::fmt;

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::num::{ceil_int, floor_int, pow2, pow2_int, Rational};

/// Deepest level addressable by a [`CubeIndex`] (coordinates are `u64`).
pub const MAX_LEVEL: u32 = 62;

/// A point of `[0,1]^d` with exact rational coordinates.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Point(Vec<Rational>);

impl Point {
    pub fn new(coords: Vec<Rational>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::ZeroDimension);
        }
        for (axis, c) in coords.iter().enumerate() {
            if c.is_negative() || *c > Rational::one() {
                return Err(Error::OutsideUnitCube {
                    axis,
                    value: alloc::format!("{c}"),
                });
            }
        }
        Ok(Point(coords))
    }

    /// The point with every coordinate equal to `value`.
    pub fn splat(dim: usize, value: Rational) -> Result<Self> {
        Point::new(alloc::vec![value; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[Rational] {
        &self.0
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.0.iter().map(crate::num::to_f64).collect()
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{c}")?;
        }
        f.write_str(")")
    }
}

/// The dyadic cube `I_{j,k}`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CubeIndex {
    level: u32,
    coords: Vec<u64>,
}

impl CubeIndex {
    pub fn new(level: u32, coords: Vec<u64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::ZeroDimension);
        }
        if level > MAX_LEVEL {
            return Err(Error::LevelTooDeep {
                level: level as u64,
                max: MAX_LEVEL as u64,
            });
        }
        let side = 1u64 << level;
        for (axis, &k) in coords.iter().enumerate() {
            if k >= side {
                return Err(Error::InvalidCube {
                    level,
                    axis,
                    coord: k,
                });
            }
        }
        Ok(CubeIndex { level, coords })
    }

    pub fn root(dim: usize) -> Self {
        CubeIndex {
            level: 0,
            coords: alloc::vec![0; dim],
        }
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn coords(&self) -> &[u64] {
        &self.coords
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    /// Side length, equal to the sup-metric diameter: `2^-j`.
    pub fn side(&self) -> Rational {
        pow2(-(self.level as i64))
    }

    pub fn lower_corner(&self) -> Vec<Rational> {
        let side = self.side();
        self.coords
            .iter()
            .map(|&k| Rational::from_integer(BigInt::from(k)) * &side)
            .collect()
    }

    pub fn parent(&self) -> Option<CubeIndex> {
        if self.level == 0 {
            return None;
        }
        Some(CubeIndex {
            level: self.level - 1,
            coords: self.coords.iter().map(|k| k >> 1).collect(),
        })
    }

    /// The `2^d` children, axis 0 varying fastest.
    pub fn children(&self) -> Result<Vec<CubeIndex>> {
        if self.level >= MAX_LEVEL {
            return Err(Error::LevelTooDeep {
                level: self.level as u64 + 1,
                max: MAX_LEVEL as u64,
            });
        }
        let d = self.dim();
        Ok((0..1u64 << d)
            .map(|mask| CubeIndex {
                level: self.level + 1,
                coords: self
                    .coords
                    .iter()
                    .enumerate()
                    .map(|(i, k)| (k << 1) | ((mask >> i) & 1))
                    .collect(),
            })
            .collect())
    }

    /// Whether `x` lies in the closed cube.
    pub fn closure_contains(&self, x: &Point) -> bool {
        let side = self.side();
        self.lower_corner()
            .iter()
            .zip(x.coords())
            .all(|(lo, xi)| xi >= lo && *xi <= lo + &side)
    }

    /// Row-major linear key `sum_i k_i 2^{j i}`; requires `d * j <= 64`.
    pub fn key(&self) -> u64 {
        self.coords
            .iter()
            .enumerate()
            .fold(0u64, |acc, (i, &k)| acc | (k << (self.level as usize * i)))
    }

    pub fn from_key(level: u32, dim: usize, key: u64) -> CubeIndex {
        let mask = if level == 0 { 0 } else { (1u64 << level) - 1 };
        CubeIndex {
            level,
            coords: (0..dim)
                .map(|i| (key >> (level as usize * i)) & mask)
                .collect(),
        }
    }
}

impl fmt::Display for CubeIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "I[{};", self.level)?;
        for k in &self.coords {
            write!(f, " {k}")?;
        }
        f.write_str("]")
    }
}

/// A ball of the sup metric: the axis-aligned cube of side `2 * radius`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SupBall {
    center: Point,
    radius: Rational,
    closed: bool,
}

impl SupBall {
    pub fn new(center: Point, radius: Rational, closed: bool) -> Result<Self> {
        if !radius.is_positive() {
            return Err(Error::InvalidParameter(alloc::format!(
                "ball radius must be positive, got {radius}"
            )));
        }
        Ok(SupBall {
            center,
            radius,
            closed,
        })
    }

    pub fn closed(center: Point, radius: Rational) -> Result<Self> {
        SupBall::new(center, radius, true)
    }

    pub fn open(center: Point, radius: Rational) -> Result<Self> {
        SupBall::new(center, radius, false)
    }

    pub fn center(&self) -> &Point {
        &self.center
    }

    pub fn radius(&self) -> &Rational {
        &self.radius
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    pub fn dim(&self) -> usize {
        self.center.dim()
    }

    /// Sup-metric diameter `2 * radius`.
    pub fn diameter(&self) -> Rational {
        &self.radius * Rational::from_integer(BigInt::from(2))
    }

    /// `(lo, hi)` extent on one axis; endpoints belong to the ball iff it is closed.
    pub fn interval(&self, axis: usize) -> (Rational, Rational) {
        let c = &self.center.coords()[axis];
        (c - &self.radius, c + &self.radius)
    }

    pub fn contains_point(&self, x: &Point) -> bool {
        let d = sup_distance(&self.center, x);
        if self.closed {
            d <= self.radius
        } else {
            d < self.radius
        }
    }

    /// Whether the closed ball `other` lies inside `self`.
    pub fn contains_closed_ball(&self, other: &SupBall) -> bool {
        (0..self.dim()).all(|axis| {
            let (lo, hi) = self.interval(axis);
            let c = &other.center.coords()[axis];
            let (olo, ohi) = (c - &other.radius, c + &other.radius);
            if self.closed {
                olo >= lo && ohi <= hi
            } else {
                olo > lo && ohi < hi
            }
        })
    }
}

/// The cube `I_j(x)` of generation `j` containing `x`.
pub fn containing_cube(x: &Point, j: u32) -> Result<CubeIndex> {
    if j > MAX_LEVEL {
        return Err(Error::LevelTooDeep {
            level: j as u64,
            max: MAX_LEVEL as u64,
        });
    }
    let scale = Rational::from_integer(pow2_int(j as u64));
    let last = (1u64 << j) - 1;
    let coords = x
        .coords()
        .iter()
        .map(|c| {
            let k = floor_int(&(c * &scale)).to_u64().unwrap_or(u64::MAX);
            k.min(last)
        })
        .collect();
    Ok(CubeIndex { level: j, coords })
}

/// `(k + e) 2^-j` with `e = (1/2, ..., 1/2)`.
pub fn cube_center(c: &CubeIndex) -> Point {
    let den = pow2_int(c.level as u64 + 1);
    Point(
        c.coords
            .iter()
            .map(|&k| Rational::new(BigInt::from(2 * k + 1), den.clone()))
            .collect(),
    )
}

/// `max_i |x_i - y_i|`.
pub fn sup_distance(x: &Point, y: &Point) -> Rational {
    debug_assert_eq!(x.dim(), y.dim());
    x.coords()
        .iter()
        .zip(y.coords())
        .map(|(a, b)| (a - b).abs())
        .max()
        .unwrap_or_else(Rational::zero)
}

/// Whether the closed cube `c` lies inside the ball `b`.
pub fn ball_contains_cube(b: &SupBall, c: &CubeIndex) -> bool {
    let side = c.side();
    c.lower_corner().iter().enumerate().all(|(axis, lo_c)| {
        let hi_c = lo_c + &side;
        let (lo, hi) = b.interval(axis);
        if b.closed {
            *lo_c >= lo && hi_c <= hi
        } else {
            *lo_c > lo && hi_c < hi
        }
    })
}

/// Inclusive range of center indices `k` on one axis at level `j` whose
/// interval `[c - r, c + r]`, `c = (k + 1/2) 2^-j`, satisfies `c - r >= lo` and
/// `c + r <= hi` (strict when the flags say so). A negative `r` turns the
/// test into "the closed interval meets `[lo, hi]`".
pub fn center_index_range(
    lo: &Rational,
    lo_strict: bool,
    hi: &Rational,
    hi_strict: bool,
    j: u64,
    r: &Rational,
) -> Option<(BigInt, BigInt)> {
    // (2k + 1) / 2^{j+1} - r >= lo  <=>  k >= ((lo + r) 2^{j+1} - 1) / 2
    let two = Rational::from_integer(BigInt::from(2));
    let scale = Rational::from_integer(pow2_int(j + 1));
    let one = Rational::one();
    let lower_bound = ((lo + r) * &scale - &one) / &two;
    let upper_bound = ((hi - r) * &scale - &one) / &two;
    let mut k_lo = if lo_strict {
        floor_int(&lower_bound) + BigInt::one()
    } else {
        ceil_int(&lower_bound)
    };
    let mut k_hi = if hi_strict {
        ceil_int(&upper_bound) - BigInt::one()
    } else {
        floor_int(&upper_bound)
    };
    let last = pow2_int(j) - BigInt::one();
    if k_lo.is_negative() {
        k_lo = BigInt::zero();
    }
    if k_hi > last {
        k_hi = last;
    }
    if k_lo > k_hi {
        None
    } else {
        Some((k_lo, k_hi))
    }
}

/// Per-axis index ranges of level-`j` centers whose closed ball of radius
/// `child_radius` lies inside `parent`. `None` on an axis means no center fits.
pub fn centers_in_ball(
    parent: &SupBall,
    j: u64,
    child_radius: &Rational,
) -> Vec<Option<(BigInt, BigInt)>> {
    let strict = !parent.closed;
    (0..parent.dim())
        .map(|axis| {
            let (lo, hi) = parent.interval(axis);
            center_index_range(&lo, strict, &hi, strict, j, child_radius)
        })
        .collect()
}

/// Number of level-`j` centers whose closed ball of radius `child_radius`
/// lies inside `parent`, computed per axis in closed form. Zero signals that
/// no center fits.
pub fn cube_in_ball_count(parent: &SupBall, j: u64, child_radius: &Rational) -> BigUint {
    range_product(&centers_in_ball(parent, j, child_radius))
}

/// Product of the lengths of per-axis inclusive ranges.
pub fn range_product(ranges: &[Option<(BigInt, BigInt)>]) -> BigUint {
    let mut total = BigUint::one();
    for r in ranges {
        match r {
            None => return BigUint::zero(),
            Some((a, b)) => {
                let len = (b - a + BigInt::one()).to_biguint().unwrap_or_default();
                total *= len;
            }
        }
    }
    total
}
