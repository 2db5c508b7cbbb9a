//! Finite-depth Cantor construction inside the approximation sets.
//!
//! Generation `p` consists of the closed balls of radius `2^{-θJ_p-1}`
//! centered at `(k + e) 2^{-J_p}` that fit inside a generation `p-1` ball;
//! generation 1 keeps every ball. Mass is split equally among children, so a
//! generation-`p` node has mass `(Δ_1 ⋯ Δ_p)^{-1}`.
//!
//! Balls are products of intervals and containment is decided per axis, so
//! the whole construction factors into `d` copies of a one-dimensional one.
//! Parents of one generation are translates of each other by multiples of
//! the child grid step, hence every parent has the same number of children.
//! Counts are big integers throughout; nothing is materialized unless asked.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::constructions::MuN;
use crate::dyadic::{
    center_index_range, cube_in_ball_count, range_product, sup_distance, Point, SupBall,
};
use crate::error::{Error, Result};
use crate::num::{cmp_pow, cmp_pow2, int, log2_biguint, pow2, pow2_int, Rational};

/// Rational enclosure of Euler's number used by the natural-log bounds.
pub fn e_lower() -> Rational {
    Rational::new(
        BigInt::from(2_718_281_828u64),
        BigInt::from(1_000_000_000u64),
    )
}

pub fn e_upper() -> Rational {
    Rational::new(
        BigInt::from(2_718_281_829u64),
        BigInt::from(1_000_000_000u64),
    )
}

/// Dimension, `θ > 1` and levels `J_1 < … < J_P` with every `θ J_p` integral.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CantorSchedule {
    dim: usize,
    theta: Rational,
    levels: Vec<u64>,
}

impl CantorSchedule {
    pub fn new(dim: usize, theta: Rational, levels: Vec<u64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::ZeroDimension);
        }
        if theta <= Rational::one() {
            return Err(Error::InvalidParameter(format!(
                "theta must exceed 1, got {theta}"
            )));
        }
        if levels.is_empty() {
            return Err(Error::EmptySchedule);
        }
        for (i, w) in levels.windows(2).enumerate() {
            if w[1] <= w[0] {
                return Err(Error::InvalidParameter(format!(
                    "levels must increase strictly (J_{} = {} then {})",
                    i + 1,
                    w[0],
                    w[1]
                )));
            }
        }
        if levels[0] == 0 {
            return Err(Error::InvalidParameter("levels must be positive".into()));
        }
        let q = theta.denom();
        for (i, &j) in levels.iter().enumerate() {
            if !(BigInt::from(j) % q).is_zero() {
                return Err(Error::InvalidParameter(format!(
                    "theta * J_{} = {} * {j} is not an integer",
                    i + 1,
                    theta
                )));
            }
        }
        Ok(CantorSchedule { dim, theta, levels })
    }

    /// Rounds each level up to the next multiple of θ's denominator, bumping
    /// where needed to keep the sequence strictly increasing.
    pub fn rounded(dim: usize, theta: Rational, raw: &[u64]) -> Result<Self> {
        let q = theta
            .denom()
            .to_u64()
            .ok_or_else(|| Error::InvalidParameter("theta denominator too large".into()))?;
        let mut levels: Vec<u64> = Vec::with_capacity(raw.len());
        for &j in raw {
            let mut r = j.div_ceil(q) * q;
            if let Some(&prev) = levels.last() {
                if r <= prev {
                    r = prev + q;
                }
            }
            levels.push(r.max(q));
        }
        CantorSchedule::new(dim, theta, levels)
    }

    /// Smallest levels (multiples of θ's denominator) that satisfy the
    /// growth conditions `J_{p+1} > max(100 θ J_p, p^2)` and
    /// `d J_{p+1}/(p+1) ≥ d θ J_p + 2`, starting from `j1`.
    pub fn strict(dim: usize, theta: Rational, j1: u64, generations: usize) -> Result<Self> {
        if generations == 0 {
            return Err(Error::EmptySchedule);
        }
        let q = theta
            .denom()
            .to_u64()
            .ok_or_else(|| Error::InvalidParameter("theta denominator too large".into()))?;
        let mut levels = vec![j1.div_ceil(q).max(1) * q];
        let d = Rational::from_integer(BigInt::from(dim as u64));
        for p in 1..generations {
            let jp = Rational::from_integer(BigInt::from(levels[p - 1]));
            let p_r = Rational::from_integer(BigInt::from(p as u64));
            let strict = (Rational::from_integer(BigInt::from(100)) * &theta * &jp)
                .max(&p_r * &p_r)
                .floor()
                + Rational::one();
            let coupled = ((&p_r + Rational::one()) * (&theta * &jp + int(2) / &d)).ceil();
            let need = strict
                .max(coupled)
                .to_integer()
                .to_u64()
                .ok_or_else(|| Error::TooLarge("level exceeds 64 bits".into()))?;
            levels.push(need.div_ceil(q) * q);
        }
        CantorSchedule::new(dim, theta, levels)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn theta(&self) -> &Rational {
        &self.theta
    }

    pub fn levels(&self) -> &[u64] {
        &self.levels
    }

    /// Number of generations `P`.
    pub fn generations(&self) -> usize {
        self.levels.len()
    }

    fn check_generation(&self, p: usize) -> Result<()> {
        if p == 0 || p > self.levels.len() {
            return Err(Error::InvalidParameter(format!(
                "generation {p} outside 1..={}",
                self.levels.len()
            )));
        }
        Ok(())
    }

    /// `J_p`, 1-based.
    pub fn level(&self, p: usize) -> u64 {
        self.levels[p - 1]
    }

    /// `θ J_p` as an integer.
    pub fn theta_level(&self, p: usize) -> u64 {
        (&self.theta * Rational::from_integer(BigInt::from(self.level(p))))
            .to_integer()
            .to_u64()
            .expect("theta * J fits in 64 bits")
    }

    /// Radius `2^{-θJ_p-1}` of generation-`p` balls.
    pub fn radius(&self, p: usize) -> Rational {
        pow2(-(self.theta_level(p) as i64) - 1)
    }

    /// Diameter `|I| = 2^{-θJ_p}` of generation-`p` balls.
    pub fn diameter(&self, p: usize) -> Rational {
        pow2(-(self.theta_level(p) as i64))
    }

    fn center(&self, p: usize, k: &BigInt) -> Rational {
        (Rational::from_integer(k.clone()) + Rational::new(BigInt::one(), BigInt::from(2)))
            / Rational::from_integer(pow2_int(self.level(p)))
    }
}

/// Exact slack of one constraint and whether it is satisfied.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Margin {
    pub value: Rational,
    pub holds: bool,
}

impl Margin {
    fn positive(value: Rational) -> Self {
        let holds = value.is_positive();
        Margin { value, holds }
    }

    fn nonnegative(value: Rational) -> Self {
        let holds = !value.is_negative();
        Margin { value, holds }
    }
}

/// Conditions linking generation `p` to `p + 1`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TransitionReport {
    pub p: usize,
    /// `J_{p+1} - max(100 θ J_p, p^2)`, must be positive.
    pub growth: Margin,
    /// `d J_{p+1}/(p+1) - d θ J_p - 2`, must be nonnegative.
    pub coupling: Margin,
    /// Relaxed growth `J_{p+1} - 4 θ J_p`, must be nonnegative.
    pub desk: Margin,
    /// `½ |I|^d 2^{d J_{p+1}} ≤ Δ_{p+1} ≤ 2 |I|^d 2^{d J_{p+1}}`, checked exactly.
    pub branching_bounds: bool,
}

/// Per-generation quantities.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GenerationReport {
    pub p: usize,
    pub level: u64,
    /// Children per parent along one axis.
    pub delta_axis: BigUint,
    /// `Δ_p = delta_axis^d`.
    pub delta: BigUint,
    /// `2^{d J_p (1 - 1/p)} ≤ Δ_p ≤ 2^{d J_p}`.
    pub delta_window: bool,
    /// `d J_p (1 + 1/p) - d Σ_{k≤p} J_k`.
    pub product_lower: Margin,
    /// `Σ_{k≤p} d J_k (1 - 1/k) - d J_p (1 - 2/p)`.
    pub product_upper: Margin,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StrictnessReport {
    pub transitions: Vec<TransitionReport>,
    pub generations: Vec<GenerationReport>,
}

impl StrictnessReport {
    /// Every generation is nonempty.
    pub fn construction_valid(&self) -> bool {
        self.generations.iter().all(|g| !g.delta.is_zero())
    }

    /// All growth and coupling conditions hold, plus the product conditions from `p = 3` on.
    pub fn strict(&self) -> bool {
        self.transitions
            .iter()
            .all(|t| t.growth.holds && t.coupling.holds)
            && self
                .generations
                .iter()
                .filter(|g| g.p >= 3)
                .all(|g| g.product_lower.holds && g.product_upper.holds)
    }

    pub fn desk_valid(&self) -> bool {
        self.transitions.iter().all(|t| t.desk.holds)
    }

    /// Whether the generation-`p` mass window is implied by what was checked:
    /// `p ≥ 3`, the product conditions at `p` and the `Δ` window at every `k ≤ p`.
    pub fn mass_bounds_guaranteed(&self, p: usize) -> bool {
        p >= 3
            && p <= self.generations.len()
            && self.generations[..p].iter().all(|g| g.delta_window)
            && self.generations[p - 1].product_lower.holds
            && self.generations[p - 1].product_upper.holds
    }
}

/// Children along one axis of a generation-`p - 1` ball (of the unit interval for `p = 1`).
pub fn axis_branching(s: &CantorSchedule, p: usize) -> Result<BigUint> {
    s.check_generation(p)?;
    let j = s.level(p);
    let r = s.radius(p);
    let range = if p == 1 {
        center_index_range(&Rational::zero(), false, &Rational::one(), false, j, &r)
    } else {
        let c = s.center(p - 1, &BigInt::zero());
        let rp = s.radius(p - 1);
        center_index_range(&(&c - &rp), false, &(&c + &rp), false, j, &r)
    };
    Ok(range_product(&[range]))
}

/// Exact constraint report; never rejects a schedule.
pub fn validate_schedule(s: &CantorSchedule) -> Result<StrictnessReport> {
    let d = Rational::from_integer(BigInt::from(s.dim as u64));
    let theta = &s.theta;
    let big = |x: u64| Rational::from_integer(BigInt::from(x));
    let mut generations = Vec::with_capacity(s.generations());
    let mut sum_j = Rational::zero();
    let mut sum_weighted = Rational::zero();
    for p in 1..=s.generations() {
        let jp = big(s.level(p));
        let pr = big(p as u64);
        let delta_axis = axis_branching(s, p)?;
        let delta = num_traits::pow(delta_axis.clone(), s.dim);
        let total_exp = s.dim as u64 * s.level(p);
        let upper = delta <= BigUint::one() << (total_exp as usize);
        let lower = num_traits::pow(delta.clone(), p)
            >= BigUint::one() << ((total_exp * (p as u64 - 1)) as usize);
        sum_j += &jp;
        sum_weighted += &d * &jp * (Rational::one() - Rational::one() / &pr);
        generations.push(GenerationReport {
            p,
            level: s.level(p),
            delta_axis,
            delta,
            delta_window: upper && lower,
            product_lower: Margin::nonnegative(
                &d * &jp * (Rational::one() + Rational::one() / &pr) - &d * &sum_j,
            ),
            product_upper: Margin::nonnegative(
                &sum_weighted - &d * &jp * (Rational::one() - int(2) / &pr),
            ),
        });
    }
    let mut transitions = Vec::new();
    #[allow(clippy::needless_range_loop)]
    for p in 1..s.generations() {
        let jp = big(s.level(p));
        let jn = big(s.level(p + 1));
        let pr = big(p as u64);
        let growth = &jn - (int(100) * theta * &jp).max(&pr * &pr);
        let coupling = &d * &jn / (&pr + Rational::one()) - &d * theta * &jp - int(2);
        let desk = &jn - int(4) * theta * &jp;
        let child = &generations[p].delta;
        let scale = num_traits::pow(s.diameter(p), s.dim)
            * Rational::from_integer(pow2_int(s.dim as u64 * s.level(p + 1)));
        let child_r = Rational::from_integer(BigInt::from(child.clone()));
        let branching_bounds = &child_r * int(2) >= scale && child_r <= scale * int(2);
        transitions.push(TransitionReport {
            p,
            growth: Margin::positive(growth),
            coupling: Margin::nonnegative(coupling),
            desk: Margin::nonnegative(desk),
            branching_bounds,
        });
    }
    Ok(StrictnessReport {
        transitions,
        generations,
    })
}

/// The finite stage `A_{θ,p}`: closed balls of radius `2^{-θJ}` around the
/// level-`J` centers.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ApproxSet {
    dim: usize,
    level: u64,
    theta_level: u64,
}

impl ApproxSet {
    pub fn new(dim: usize, theta: &Rational, level: u64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::ZeroDimension);
        }
        let tj = theta * Rational::from_integer(BigInt::from(level));
        if !tj.is_integer() || theta <= &Rational::one() {
            return Err(Error::InvalidParameter(format!(
                "theta * J = {tj} must be an integer and theta > 1"
            )));
        }
        Ok(ApproxSet {
            dim,
            level,
            theta_level: tj.to_integer().to_u64().expect("theta * J fits in 64 bits"),
        })
    }

    pub fn for_generation(s: &CantorSchedule, p: usize) -> Result<Self> {
        s.check_generation(p)?;
        ApproxSet::new(s.dim, &s.theta, s.level(p))
    }

    pub fn level(&self) -> u64 {
        self.level
    }

    pub fn radius(&self) -> Rational {
        pow2(-(self.theta_level as i64))
    }

    /// Nearest level-`J` center in the sup metric, found by rounding.
    pub fn nearest_center(&self, x: &Point) -> Result<Point> {
        if x.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: x.dim(),
            });
        }
        let scale = Rational::from_integer(pow2_int(self.level));
        let last = pow2_int(self.level) - BigInt::one();
        let half = Rational::new(BigInt::one(), BigInt::from(2));
        Point::new(
            x.coords()
                .iter()
                .map(|c| {
                    let k = (c * &scale).floor().to_integer().min(last.clone());
                    (Rational::from_integer(k) + &half) / &scale
                })
                .collect(),
        )
    }

    pub fn contains(&self, x: &Point) -> Result<bool> {
        let c = self.nearest_center(x)?;
        Ok(sup_distance(x, &c) <= self.radius())
    }

    /// Every center, axis 0 fastest; fails above `limit` points.
    pub fn centers(&self, limit: usize) -> Result<Vec<Point>> {
        let n_axis = pow2_int(self.level);
        let total = num_traits::pow(n_axis.clone(), self.dim);
        if total > BigInt::from(limit) {
            return Err(Error::TooLarge(format!("{total} centers exceed {limit}")));
        }
        let n = n_axis.to_u64().expect("bounded by limit");
        let scale = Rational::from_integer(n_axis);
        let half = Rational::new(BigInt::one(), BigInt::from(2));
        let count = total.to_usize().expect("bounded by limit");
        let mut out = Vec::with_capacity(count);
        for idx in 0..count as u64 {
            let mut rest = idx;
            let coords = (0..self.dim)
                .map(|_| {
                    let k = rest % n;
                    rest /= n;
                    (Rational::from_integer(BigInt::from(k)) + &half) / &scale
                })
                .collect();
            out.push(Point::new(coords)?);
        }
        Ok(out)
    }
}

/// One ball of the construction; generation 0 is the unit cube.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CantorNode {
    generation: usize,
    address: Vec<Vec<BigInt>>,
    ball: SupBall,
}

impl CantorNode {
    pub fn root(dim: usize) -> Self {
        let half = Rational::new(BigInt::one(), BigInt::from(2));
        let center = Point::splat(dim, half.clone()).expect("1/2 lies in the unit cube");
        CantorNode {
            generation: 0,
            address: Vec::new(),
            ball: SupBall::closed(center, half).expect("radius is positive"),
        }
    }

    pub fn generation(&self) -> usize {
        self.generation
    }

    /// Center indices `k`, one vector per generation.
    pub fn address(&self) -> &[Vec<BigInt>] {
        &self.address
    }

    pub fn ball(&self) -> &SupBall {
        &self.ball
    }

    /// The child with center index `k`; fails unless its ball fits inside this one.
    pub fn child(&self, s: &CantorSchedule, k: Vec<BigInt>) -> Result<CantorNode> {
        let p = self.generation + 1;
        s.check_generation(p)?;
        if k.len() != s.dim {
            return Err(Error::DimensionMismatch {
                expected: s.dim,
                found: k.len(),
            });
        }
        let top = pow2_int(s.level(p));
        if k.iter().any(|ki| ki.is_negative() || *ki >= top) {
            return Err(Error::InvalidParameter(format!(
                "center index outside 0..2^{} at generation {p}",
                s.level(p)
            )));
        }
        let center = Point::new(k.iter().map(|ki| s.center(p, ki)).collect())?;
        let ball = SupBall::closed(center, s.radius(p))?;
        if !self.ball.contains_closed_ball(&ball) {
            return Err(Error::InvalidParameter(format!(
                "ball {k:?} of generation {p} is not inside its parent"
            )));
        }
        let mut address = self.address.clone();
        address.push(k);
        Ok(CantorNode {
            generation: p,
            address,
            ball,
        })
    }

    /// Rebuilds the node at `address` from the root.
    pub fn from_address(s: &CantorSchedule, address: &[Vec<BigInt>]) -> Result<CantorNode> {
        let mut node = CantorNode::root(s.dim);
        for k in address {
            node = node.child(s, k.clone())?;
        }
        Ok(node)
    }

    /// Per-axis inclusive index ranges of the children.
    pub fn child_ranges(&self, s: &CantorSchedule) -> Result<Vec<Option<(BigInt, BigInt)>>> {
        let p = self.generation + 1;
        s.check_generation(p)?;
        Ok(crate::dyadic::centers_in_ball(
            &self.ball,
            s.level(p),
            &s.radius(p),
        ))
    }

    /// All children, axis 0 fastest; fails above `limit`.
    pub fn children(&self, s: &CantorSchedule, limit: usize) -> Result<Vec<CantorNode>> {
        let ranges = self.child_ranges(s)?;
        let total = range_product(&ranges);
        if total > BigUint::from(limit) {
            return Err(Error::TooLarge(format!("{total} children exceed {limit}")));
        }
        let mut out = Vec::new();
        if total.is_zero() {
            return Ok(out);
        }
        let spans: Vec<(BigInt, u64)> = ranges
            .into_iter()
            .map(|r| {
                let (a, b) = r.expect("nonzero product");
                let len = (&b - &a + BigInt::one())
                    .to_u64()
                    .expect("bounded by limit");
                (a, len)
            })
            .collect();
        let count = total.to_u64().expect("bounded by limit");
        for idx in 0..count {
            let mut rest = idx;
            let k = spans
                .iter()
                .map(|(a, len)| {
                    let off = rest % len;
                    rest /= len;
                    a + BigInt::from(off)
                })
                .collect();
            out.push(self.child(s, k)?);
        }
        Ok(out)
    }
}

/// Number of generation-`p+1` balls inside `parent` (`Δ`), in closed form.
pub fn branching_count(s: &CantorSchedule, parent: &CantorNode) -> Result<BigUint> {
    let p = parent.generation + 1;
    s.check_generation(p)?;
    let delta = cube_in_ball_count(&parent.ball, s.level(p), &s.radius(p));
    if delta.is_zero() {
        return Err(Error::DegenerateSchedule { generation: p });
    }
    Ok(delta)
}

/// Mass `(Δ_1 ⋯ Δ_p)^{-1}` kept as its factors.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NodeMass {
    pub factors: Vec<BigUint>,
}

impl NodeMass {
    pub fn denominator(&self) -> BigUint {
        self.factors.iter().product()
    }

    pub fn exact(&self) -> Rational {
        Rational::new(BigInt::one(), BigInt::from(self.denominator()))
    }

    pub fn log2(&self) -> f64 {
        -self.factors.iter().map(log2_biguint).sum::<f64>()
    }
}

/// Mass of a node from the branching counts of its ancestors.
pub fn node_mass(s: &CantorSchedule, node: &CantorNode) -> Result<NodeMass> {
    let mut factors = Vec::with_capacity(node.generation);
    let mut ancestor = CantorNode::root(s.dim);
    for k in &node.address {
        factors.push(branching_count(s, &ancestor)?);
        ancestor = ancestor.child(s, k.clone())?;
    }
    Ok(NodeMass { factors })
}

fn random_below(n: &BigUint, next: &mut impl FnMut() -> u64) -> BigUint {
    let words = n.bits() / 64 + 2;
    let mut acc = BigUint::zero();
    for _ in 0..words {
        acc = (acc << 64usize) + BigUint::from(next());
    }
    acc % n
}

/// A generation-`p` node drawn by picking a child uniformly at every step.
pub fn sample_node(
    s: &CantorSchedule,
    p: usize,
    next: &mut impl FnMut() -> u64,
) -> Result<CantorNode> {
    s.check_generation(p)?;
    let mut node = CantorNode::root(s.dim);
    for gen in 1..=p {
        let ranges = node.child_ranges(s)?;
        let mut k = Vec::with_capacity(s.dim);
        for r in ranges {
            let (a, b) = r.ok_or(Error::DegenerateSchedule { generation: gen })?;
            let len = (&b - &a + BigInt::one())
                .to_biguint()
                .expect("nonempty range");
            k.push(a + BigInt::from(random_below(&len, next)));
        }
        node = node.child(s, k)?;
    }
    Ok(node)
}

/// Every generation-`p` node; fails when there are more than `limit`.
pub fn enumerate_generation(s: &CantorSchedule, p: usize, limit: usize) -> Result<Vec<CantorNode>> {
    s.check_generation(p)?;
    let mut current = vec![CantorNode::root(s.dim)];
    for _ in 0..p {
        let mut next = Vec::new();
        for node in &current {
            let kids = node.children(s, limit)?;
            if next.len() + kids.len() > limit {
                return Err(Error::TooLarge(format!("generation exceeds {limit} nodes")));
            }
            next.extend(kids);
        }
        current = next;
    }
    Ok(current)
}

/// Node count, common node mass and their product at generation `p`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Census {
    pub count: BigUint,
    pub mass: NodeMass,
    pub total: Rational,
}

pub fn generation_census(s: &CantorSchedule, p: usize) -> Result<Census> {
    s.check_generation(p)?;
    let mut count = BigUint::one();
    let mut factors = Vec::with_capacity(p);
    for k in 1..=p {
        let delta = num_traits::pow(axis_branching(s, k)?, s.dim);
        if delta.is_zero() {
            return Err(Error::DegenerateSchedule { generation: k });
        }
        count *= &delta;
        factors.push(delta);
    }
    let mass = NodeMass { factors };
    let total = Rational::from_integer(BigInt::from(count.clone())) * mass.exact();
    Ok(Census { count, mass, total })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoundStatus {
    Holds,
    Violated,
    /// The rational enclosure of `e` was too coarse to decide.
    Undecided,
}

impl BoundStatus {
    fn worst(self, other: BoundStatus) -> BoundStatus {
        use BoundStatus::*;
        match (self, other) {
            (Violated, _) | (_, Violated) => Violated,
            (Undecided, _) | (_, Undecided) => Undecided,
            _ => Holds,
        }
    }

    fn from_bool(ok: bool) -> BoundStatus {
        if ok {
            BoundStatus::Holds
        } else {
            BoundStatus::Violated
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            BoundStatus::Holds => "holds",
            BoundStatus::Violated => "violated",
            BoundStatus::Undecided => "undecided",
        }
    }
}

/// Outcome of one inequality plus whether the checked hypotheses imply it.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BoundCheck {
    pub status: BoundStatus,
    pub guaranteed: bool,
}

impl BoundCheck {
    /// A guaranteed bound that does not hold.
    pub fn failed(&self) -> bool {
        self.guaranteed && self.status != BoundStatus::Holds
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MassBoundsReport {
    pub p: usize,
    pub nodes_checked: usize,
    /// Mass of the first node checked.
    pub mass: NodeMass,
    pub masses_equal: bool,
    /// `2^{-dJ_p(1+1/p)} ≤ m(I)`, equivalently `|I|^{(d/θ)(1+1/p)} ≤ m(I)`.
    pub window_lower: BoundCheck,
    /// `m(I) ≤ 2^{-dJ_p(1-2/p)}`, equivalently `m(I) ≤ |I|^{(d/θ)(1-2/p)}`.
    pub window_upper: BoundCheck,
    /// `|I|^{d/θ + 1/|ln|I||} ≤ m(I)`.
    pub log_lower: BoundCheck,
    /// `m(I) ≤ |I|^{d/θ - 1/|ln|I||}`.
    pub log_upper: BoundCheck,
    /// `log2 m(I) / log2 |I|`.
    pub ratio: f64,
    /// `d/θ`.
    pub target: Rational,
}

impl MassBoundsReport {
    pub fn failed(&self) -> bool {
        [
            self.window_lower,
            self.window_upper,
            self.log_lower,
            self.log_upper,
        ]
        .iter()
        .any(BoundCheck::failed)
            || !self.masses_equal
    }

    pub fn ratio_window(&self) -> (Rational, Rational) {
        let pr = Rational::from_integer(BigInt::from(self.p as u64));
        (
            &self.target * (Rational::one() - int(2) / &pr),
            &self.target * (Rational::one() + Rational::one() / &pr),
        )
    }
}

/// Compares node masses at generation `p` with the uniform mass window and
/// its natural-log form. The window is marked guaranteed only when
/// [`StrictnessReport::mass_bounds_guaranteed`] says so; the log form is an
/// asymptotic statement and never guaranteed at finite depth.
pub fn verify_mass_bounds(
    s: &CantorSchedule,
    report: &StrictnessReport,
    p: usize,
    nodes: &[CantorNode],
) -> Result<MassBoundsReport> {
    s.check_generation(p)?;
    let first = nodes
        .first()
        .ok_or_else(|| Error::InvalidParameter("no nodes to check".into()))?;
    let guaranteed = report.mass_bounds_guaranteed(p);
    let exp = s.dim as u64 * s.level(p);
    let two_exp = BigUint::one() << (exp as usize);
    let two_exp_r = Rational::from_integer(BigInt::from(two_exp.clone()));
    let mut lower = BoundStatus::Holds;
    let mut upper = BoundStatus::Holds;
    let mut log_lower = BoundStatus::Holds;
    let mut log_upper = BoundStatus::Holds;
    let mass = node_mass(s, first)?;
    let mut masses_equal = true;
    for node in nodes {
        if node.generation != p {
            return Err(Error::InvalidParameter(format!(
                "node of generation {} in a generation-{p} check",
                node.generation
            )));
        }
        let m = node_mass(s, node)?;
        let den = m.denominator();
        masses_equal &= den == mass.denominator();
        let den_p = num_traits::pow(den.clone(), p);
        lower = lower.worst(BoundStatus::from_bool(
            den_p <= BigUint::one() << ((exp * (p as u64 + 1)) as usize),
        ));
        let upper_ok = if p >= 2 {
            den_p >= BigUint::one() << ((exp * (p as u64 - 2)) as usize)
        } else {
            true
        };
        upper = upper.worst(BoundStatus::from_bool(upper_ok));
        let den_r = Rational::from_integer(BigInt::from(den));
        let ll = if den_r <= e_lower() * &two_exp_r {
            BoundStatus::Holds
        } else if den_r > e_upper() * &two_exp_r {
            BoundStatus::Violated
        } else {
            BoundStatus::Undecided
        };
        let lu = if &den_r * e_lower() >= two_exp_r {
            BoundStatus::Holds
        } else if &den_r * e_upper() < two_exp_r {
            BoundStatus::Violated
        } else {
            BoundStatus::Undecided
        };
        log_lower = log_lower.worst(ll);
        log_upper = log_upper.worst(lu);
    }
    let ratio = -mass.log2() / s.theta_level(p) as f64;
    Ok(MassBoundsReport {
        p,
        nodes_checked: nodes.len(),
        mass,
        masses_equal,
        window_lower: BoundCheck {
            status: lower,
            guaranteed,
        },
        window_upper: BoundCheck {
            status: upper,
            guaranteed,
        },
        log_lower: BoundCheck {
            status: log_lower,
            guaranteed: false,
        },
        log_upper: BoundCheck {
            status: log_upper,
            guaranteed: false,
        },
        ratio,
        target: Rational::from_integer(BigInt::from(s.dim as u64)) / &s.theta,
    })
}

/// Closed axis-aligned box inside the unit cube.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProbeBox {
    lo: Vec<Rational>,
    hi: Vec<Rational>,
}

impl ProbeBox {
    pub fn new(lo: Vec<Rational>, hi: Vec<Rational>) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(Error::DimensionMismatch {
                expected: lo.len(),
                found: hi.len(),
            });
        }
        if lo.is_empty() {
            return Err(Error::ZeroDimension);
        }
        for (axis, (a, b)) in lo.iter().zip(&hi).enumerate() {
            for v in [a, b] {
                if v.is_negative() || *v > Rational::one() {
                    return Err(Error::OutsideUnitCube {
                        axis,
                        value: format!("{v}"),
                    });
                }
            }
            if a > b {
                return Err(Error::InvalidParameter(format!(
                    "probe box has lo > hi on axis {axis}"
                )));
            }
        }
        Ok(ProbeBox { lo, hi })
    }

    /// The closed ball as a box.
    pub fn from_ball(b: &SupBall) -> Result<Self> {
        let (lo, hi) = (0..b.dim()).map(|a| b.interval(a)).unzip();
        ProbeBox::new(lo, hi)
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn lo(&self) -> &[Rational] {
        &self.lo
    }

    pub fn hi(&self) -> &[Rational] {
        &self.hi
    }

    /// Sup-metric diameter: the longest side.
    pub fn diameter(&self) -> Rational {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(a, b)| b - a)
            .max()
            .expect("nonzero dimension")
    }

    pub fn contains_box(&self, other: &ProbeBox) -> bool {
        self.lo.iter().zip(&other.lo).all(|(a, b)| a <= b)
            && self.hi.iter().zip(&other.hi).all(|(a, b)| b <= a)
    }
}

fn intersect(a: Option<(BigInt, BigInt)>, b: Option<(BigInt, BigInt)>) -> Option<(BigInt, BigInt)> {
    let (a0, a1) = a?;
    let (b0, b1) = b?;
    let lo = a0.max(b0);
    let hi = a1.min(b1);
    (lo <= hi).then_some((lo, hi))
}

fn span(r: &Option<(BigInt, BigInt)>) -> BigUint {
    range_product(core::slice::from_ref(r))
}

/// One-dimensional count of generation-`g` nodes meeting `[a, b]`, descending
/// only into the (at most two) nodes that straddle an endpoint.
fn meet_count_1d(
    s: &CantorSchedule,
    k: usize,
    parent: Option<(Rational, Rational)>,
    a: &Rational,
    b: &Rational,
    g: usize,
    below: &[BigUint],
) -> BigUint {
    let j = s.level(k);
    let r = s.radius(k);
    let kids = match &parent {
        None => Some((BigInt::zero(), pow2_int(j) - BigInt::one())),
        Some((lo, hi)) => center_index_range(lo, false, hi, false, j, &r),
    };
    let meet = intersect(kids, center_index_range(a, false, b, false, j, &-r.clone()));
    if k == g {
        return span(&meet);
    }
    let Some((m0, m1)) = meet.clone() else {
        return BigUint::zero();
    };
    let inside = intersect(meet, center_index_range(a, false, b, false, j, &r));
    let mut total = span(&inside) * &below[k];
    let partial: Vec<BigInt> = match &inside {
        None => num_iter(&m0, &m1),
        Some((i0, i1)) => {
            let mut v = num_iter(&m0, &(i0 - BigInt::one()));
            v.extend(num_iter(&(i1 + BigInt::one()), &m1));
            v
        }
    };
    debug_assert!(partial.len() <= 2, "only endpoint nodes are partial");
    for idx in partial {
        let c = s.center(k, &idx);
        total += meet_count_1d(s, k + 1, Some((&c - &r, &c + &r)), a, b, g, below);
    }
    total
}

fn num_iter(lo: &BigInt, hi: &BigInt) -> Vec<BigInt> {
    let mut out = Vec::new();
    let mut k = lo.clone();
    while &k <= hi {
        out.push(k.clone());
        k += 1;
    }
    out
}

/// Number of generation-`g` nodes whose ball meets the box, exactly.
pub fn nodes_meeting(s: &CantorSchedule, g: usize, b: &ProbeBox) -> Result<BigUint> {
    s.check_generation(g)?;
    if b.dim() != s.dim {
        return Err(Error::DimensionMismatch {
            expected: s.dim,
            found: b.dim(),
        });
    }
    // below[k] = per-axis descendants at generation g of one generation-k node.
    let mut below = vec![BigUint::one(); g + 1];
    for k in (1..g).rev() {
        below[k] = &below[k + 1] * axis_branching(s, k + 1)?;
    }
    let mut total = BigUint::one();
    for axis in 0..s.dim {
        total *= meet_count_1d(s, 1, None, &b.lo[axis], &b.hi[axis], g, &below);
    }
    Ok(total)
}

/// Which scale regime a probe box falls into.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BorelCase {
    /// `|B| ≥ 2^{-J_1}`.
    Coarse,
    /// `2^{-θJ_{p-1}} ≤ |B| < 2^{-J_{p-1}}`.
    NearParent { p: usize },
    /// `2^{-J_p} ≤ |B| < 2^{-θJ_{p-1}}`.
    InsideParent { p: usize },
    /// `|B| < 2^{-J_P}`: finer than the deepest generation.
    Fine,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BorelReport {
    pub diameter: Rational,
    pub case: BorelCase,
    /// Generation whose nodes cover the box in `mass`.
    pub generation: usize,
    pub count: BigUint,
    /// `count · m_generation`: the mass of the generation-level cover of `B`.
    pub mass: Rational,
    /// Generation `p-1` nodes meeting the box (both middle cases).
    pub parents_met: Option<BigUint>,
    /// The case's counting bound: `parents_met ≤ 2^d`, or
    /// `count ≤ 4^d |B|^d 2^{d J_p}`.
    pub counting_bound: Option<bool>,
    /// `mass ≤ |B|^{d/θ - 1/2}`; asymptotic, never guaranteed.
    pub final_bound: Option<BoundCheck>,
}

impl BorelReport {
    pub fn failed(&self) -> bool {
        self.counting_bound == Some(false) || self.final_bound.is_some_and(|b| b.failed())
    }
}

pub fn verify_borel_bound(s: &CantorSchedule, b: &ProbeBox) -> Result<BorelReport> {
    if b.dim() != s.dim {
        return Err(Error::DimensionMismatch {
            expected: s.dim,
            found: b.dim(),
        });
    }
    let diam = b.diameter();
    let big_p = s.generations();
    let scale = |p: usize| pow2(-(s.level(p) as i64));
    let case = if diam >= scale(1) {
        BorelCase::Coarse
    } else if let Some(p) = (2..=big_p).find(|&p| scale(p) <= diam) {
        if s.diameter(p - 1) <= diam {
            BorelCase::NearParent { p }
        } else {
            BorelCase::InsideParent { p }
        }
    } else {
        BorelCase::Fine
    };
    let generation = match case {
        BorelCase::Coarse => 1,
        BorelCase::NearParent { p } | BorelCase::InsideParent { p } => p,
        BorelCase::Fine => big_p,
    };
    let count = nodes_meeting(s, generation, b)?;
    let census = generation_census(s, generation)?;
    let mass = Rational::from_integer(BigInt::from(count.clone())) * census.mass.exact();
    let d = s.dim;
    let (parents_met, counting_bound) = match case {
        BorelCase::NearParent { p } => {
            let pc = nodes_meeting(s, p - 1, b)?;
            let ok = pc <= BigUint::one() << d;
            (Some(pc), Some(ok))
        }
        BorelCase::InsideParent { p } => {
            let pc = nodes_meeting(s, p - 1, b)?;
            let cap = num_traits::pow(int(4) * &diam, d)
                * Rational::from_integer(pow2_int(d as u64 * s.level(p)));
            let ok = Rational::from_integer(BigInt::from(count.clone())) <= cap;
            (Some(pc), Some(ok))
        }
        _ => (None, None),
    };
    let final_bound = match case {
        BorelCase::NearParent { .. } | BorelCase::InsideParent { .. } if diam.is_positive() => {
            let e = Rational::from_integer(BigInt::from(d as u64)) / &s.theta
                - Rational::new(BigInt::one(), BigInt::from(2));
            let ok = mass.is_zero() || cmp_pow(&mass, &diam, &e) != Ordering::Greater;
            Some(BoundCheck {
                status: BoundStatus::from_bool(ok),
                guaranteed: false,
            })
        }
        _ => None,
    };
    Ok(BorelReport {
        diameter: diam,
        case,
        generation,
        count,
        mass,
        parents_met,
        counting_bound,
        final_bound,
    })
}

/// Terms `2^{d J_p - s θ J_p}` of the covering sum for `p ≤ P`.
#[derive(Clone, Debug, PartialEq)]
pub struct CoveringSum {
    pub exponents: Vec<Rational>,
    pub log2_total: f64,
    /// `s θ > d`, so the terms eventually decrease.
    pub decreasing_tail: bool,
}

pub fn covering_sum(
    s: &CantorSchedule,
    s_exp: &Rational,
    generations: usize,
) -> Result<CoveringSum> {
    s.check_generation(generations)?;
    let d = Rational::from_integer(BigInt::from(s.dim as u64));
    let exponents: Vec<Rational> = (1..=generations)
        .map(|p| {
            let j = Rational::from_integer(BigInt::from(s.level(p)));
            &d * &j - s_exp * &s.theta * &j
        })
        .collect();
    let logs: Vec<f64> = exponents.iter().map(crate::num::to_f64).collect();
    Ok(CoveringSum {
        log2_total: crate::spectra::log2_sum_exp2(&logs),
        decreasing_tail: s_exp * &s.theta > d,
        exponents,
    })
}

/// One probe of the ball-mass lemma.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BallMassEntry {
    pub point: Point,
    pub member: bool,
    /// `μ_n(B̄(x, 2·2^{-θJ_n}))` for members.
    pub mass: Option<Rational>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BallMassReport {
    pub entries: Vec<BallMassEntry>,
    /// `2^{-J_n/n - d J_n}`: the mass one `π_{J_n}` atom carries in `μ_n`.
    pub floor: Rational,
    pub floor_holds: bool,
    /// `-d(1 + 2ε) J_n`.
    pub lemma_exponent: Rational,
    pub lemma: BoundCheck,
}

impl BallMassReport {
    pub fn checked(&self) -> usize {
        self.entries.iter().filter(|e| e.member).count()
    }

    pub fn skipped(&self) -> usize {
        self.entries.len() - self.checked()
    }

    pub fn failed(&self) -> bool {
        !self.floor_holds || self.lemma.failed()
    }
}

/// For sample points of `A_{θ}` at level `J_n`, checks that the closed ball
/// of radius `2·2^{-θJ_n}` has `μ_n` mass at least one `π` atom's share, and
/// compares with `2^{-d(1+2ε)J_n}` (implied once `ε > 1/(d n)`).
pub fn ball_mass_lower_bound_check(
    mun: &MuN,
    theta: &Rational,
    eps: &Rational,
    samples: &[Point],
) -> Result<BallMassReport> {
    let set = ApproxSet::new(mun.dim(), theta, mun.level() as u64)?;
    let radius = set.radius() * int(2);
    let floor = mun.floor_mass();
    let d = Rational::from_integer(BigInt::from(mun.dim() as u64));
    let jn = Rational::from_integer(BigInt::from(mun.level()));
    let lemma_exponent = -(&d * (Rational::one() + int(2) * eps) * &jn);
    let mut floor_holds = true;
    let mut lemma_ok = true;
    let mut entries = Vec::with_capacity(samples.len());
    for x in samples {
        let member = set.contains(x)?;
        let mass = if member {
            let m = mun.ball_mass(&SupBall::closed(x.clone(), radius.clone())?)?;
            floor_holds &= m >= floor;
            lemma_ok &= cmp_pow2(&m, &lemma_exponent) != Ordering::Less;
            Some(m)
        } else {
            None
        };
        entries.push(BallMassEntry {
            point: x.clone(),
            member,
            mass,
        });
    }
    let inv = Rational::new(
        BigInt::one(),
        BigInt::from(mun.dim() as u64 * mun.n() as u64),
    );
    Ok(BallMassReport {
        entries,
        floor,
        floor_holds,
        lemma_exponent,
        lemma: BoundCheck {
            status: BoundStatus::from_bool(lemma_ok),
            guaranteed: *eps > inv,
        },
    })
}

/// `gcd` of the levels; handy for reporting schedule granularity.
pub fn level_gcd(s: &CantorSchedule) -> u64 {
    s.levels.iter().fold(0u64, |g, &j| g.gcd(&j))
}
