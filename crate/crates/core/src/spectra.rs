//! Finite-scale L^q spectrum, its Legendre transform, local cube exponents and
//! the coarse-grained (histogram) spectrum.
//!
//! Partition sums only run over charged cubes, for every `q` including
//! `q <= 0`. All sums are evaluated in the log2 domain with a max shift and
//! compensated summation in a fixed (key) order, so results do not depend on
//! how the cubes were produced.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec::Vec;

use crate::dyadic::{containing_cube, Point};
use crate::error::{Error, Result};
use crate::measure::MassTree;

/// `log2(sum_i 2^{x_i})`, stable for very negative exponents; `-inf` if empty.
pub fn log2_sum_exp2(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if max == f64::INFINITY {
        return f64::INFINITY;
    }
    // Neumaier summation of 2^{x - max}
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for &x in xs {
        let v = libm::exp2(x - max);
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    max + libm::log2(sum + comp)
}

/// `log2 s_j(q)` with `s_j(q) = sum over charged level-j cubes of mu(Q)^q`.
pub fn partition_sum_log2(tree: &MassTree, j: u32, q: f64) -> Result<f64> {
    let logs = tree.level_log2(j)?;
    if logs.is_empty() {
        return Err(Error::UndefinedPartitionSum { level: j });
    }
    let scaled: Vec<f64> = logs.iter().map(|l| q * l).collect();
    Ok(log2_sum_exp2(&scaled))
}

fn require_positive_level(j: u32) -> Result<()> {
    if j == 0 {
        return Err(Error::InvalidParameter(
            "level must be at least 1 for scaling exponents".into(),
        ));
    }
    Ok(())
}

/// `tau_j(q) = -(1/j) log2 s_j(q)`.
pub fn tau_hat(tree: &MassTree, j: u32, q: f64) -> Result<f64> {
    require_positive_level(j)?;
    Ok(-partition_sum_log2(tree, j, q)? / j as f64)
}

/// How the liminf over scales is approximated on a finite range of levels.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TauMethod {
    /// Minimum of `tau_j(q)` over the range.
    Min,
    /// Least-squares slope of `log2 s_j(q)` against `-j`.
    Slope,
}

impl TauMethod {
    pub fn name(self) -> &'static str {
        match self {
            TauMethod::Min => "min",
            TauMethod::Slope => "slope",
        }
    }
}

fn check_range(tree: &MassTree, j_min: u32, j_max: u32) -> Result<()> {
    if j_min == 0 || j_min > j_max {
        return Err(Error::InvalidRange(format!(
            "level range {j_min}..={j_max} must satisfy 1 <= j_min <= j_max"
        )));
    }
    if j_max > tree.depth() {
        return Err(Error::InvalidRange(format!(
            "j_max {j_max} exceeds tree depth {}",
            tree.depth()
        )));
    }
    Ok(())
}

/// Finite-scale estimate of `tau(q)` over levels `j_min..=j_max`.
pub fn tau_estimate(
    tree: &MassTree,
    q: f64,
    j_min: u32,
    j_max: u32,
    method: TauMethod,
) -> Result<f64> {
    check_range(tree, j_min, j_max)?;
    match method {
        TauMethod::Min => {
            let mut best = f64::INFINITY;
            for j in j_min..=j_max {
                best = best.min(tau_hat(tree, j, q)?);
            }
            Ok(best)
        }
        TauMethod::Slope => {
            if j_min == j_max {
                return Err(Error::InvalidRange(
                    "slope estimate needs at least two levels".into(),
                ));
            }
            let pts: Vec<(f64, f64)> = (j_min..=j_max)
                .map(|j| Ok((-(j as f64), partition_sum_log2(tree, j, q)?)))
                .collect::<Result<_>>()?;
            let n = pts.len() as f64;
            let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
            let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
            let sxy: f64 = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
            let sxx: f64 = pts.iter().map(|(x, _)| (x - mx) * (x - mx)).sum();
            Ok(sxy / sxx)
        }
    }
}

/// What a [`SpectrumCurve`] samples.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CurveKind {
    TauOfQ,
    LegendreOfH,
    CoarseOfH,
}

impl CurveKind {
    pub fn name(self) -> &'static str {
        match self {
            CurveKind::TauOfQ => "tau-of-q",
            CurveKind::LegendreOfH => "legendre-of-h",
            CurveKind::CoarseOfH => "coarse-of-h",
        }
    }
}

/// Dyadic levels a curve was computed from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScaleRange {
    Level(u32),
    Range {
        j_min: u32,
        j_max: u32,
    },
    /// Analytic curve, no finite scale.
    Exact,
}

/// A sampled real function with strictly increasing abscissas.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectrumCurve {
    kind: CurveKind,
    samples: Vec<(f64, f64)>,
    scale: ScaleRange,
}

impl SpectrumCurve {
    pub fn new(kind: CurveKind, samples: Vec<(f64, f64)>, scale: ScaleRange) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptyCurve);
        }
        for i in 1..samples.len() {
            if samples[i].0.partial_cmp(&samples[i - 1].0) != Some(core::cmp::Ordering::Greater) {
                return Err(Error::UnsortedCurve { index: i });
            }
        }
        Ok(SpectrumCurve {
            kind,
            samples,
            scale,
        })
    }

    pub fn kind(&self) -> CurveKind {
        self.kind
    }

    pub fn samples(&self) -> &[(f64, f64)] {
        &self.samples
    }

    pub fn scale(&self) -> ScaleRange {
        self.scale
    }

    /// Largest violation of concavity over consecutive sample triples
    /// (0 for a concave curve).
    pub fn concavity_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for w in self.samples.windows(3) {
            let ((x0, y0), (x1, y1), (x2, y2)) = (w[0], w[1], w[2]);
            let t = (x1 - x0) / (x2 - x0);
            let chord = y0 + t * (y2 - y0);
            worst = worst.max(chord - y1);
        }
        worst
    }

    /// Value at an abscissa that is one of the samples.
    pub fn value_at(&self, x: f64) -> Option<f64> {
        self.samples
            .iter()
            .find(|(a, _)| (a - x).abs() <= 1e-12 * (1.0 + x.abs()))
            .map(|(_, v)| *v)
    }
}

/// An evenly spaced grid `lo, lo + step, ..., hi`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
}

impl Default for Grid {
    /// The default q-grid `[-5, 5]` with step `0.01`.
    fn default() -> Self {
        Grid {
            lo: -5.0,
            hi: 5.0,
            step: 0.01,
        }
    }
}

impl Grid {
    pub fn new(lo: f64, hi: f64, step: f64) -> Result<Self> {
        let g = Grid { lo, hi, step };
        g.len()?;
        Ok(g)
    }

    fn len(&self) -> Result<usize> {
        if !(self.lo.is_finite() && self.hi.is_finite() && self.step.is_finite()) {
            return Err(Error::InvalidRange("grid bounds must be finite".into()));
        }
        if self.hi < self.lo || self.step <= 0.0 {
            return Err(Error::InvalidRange(format!(
                "grid {}:{}:{} needs lo <= hi and step > 0",
                self.lo, self.hi, self.step
            )));
        }
        let span = self.hi - self.lo;
        let n = libm::round(span / self.step);
        if (n * self.step - span).abs() > 1e-9 * span.max(1.0) {
            return Err(Error::InvalidRange(format!(
                "step {} does not divide [{}, {}]",
                self.step, self.lo, self.hi
            )));
        }
        if n > 1e7 {
            return Err(Error::InvalidRange("grid has too many points".into()));
        }
        Ok(n as usize + 1)
    }

    /// Grid points computed as `lo + (hi - lo) i / n`, so integers on the
    /// grid are hit exactly.
    pub fn points(&self) -> Vec<f64> {
        let n = self.len().unwrap_or(1);
        if n == 1 {
            return alloc::vec![self.lo];
        }
        let segs = (n - 1) as f64;
        (0..n)
            .map(|i| self.lo + (self.hi - self.lo) * i as f64 / segs)
            .collect()
    }
}

/// Samples `tau` over a q-grid with the given estimator and level range.
pub fn tau_curve(
    tree: &MassTree,
    grid: &Grid,
    j_min: u32,
    j_max: u32,
    method: TauMethod,
) -> Result<SpectrumCurve> {
    let samples = grid
        .points()
        .into_iter()
        .map(|q| Ok((q, tau_estimate(tree, q, j_min, j_max, method)?)))
        .collect::<Result<Vec<_>>>()?;
    let scale = if j_min == j_max {
        ScaleRange::Level(j_min)
    } else {
        ScaleRange::Range { j_min, j_max }
    };
    SpectrumCurve::new(CurveKind::TauOfQ, samples, scale)
}

/// Result of a grid Legendre transform at one `h`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LegendrePoint {
    pub h: f64,
    pub value: f64,
    pub attained_q: f64,
    /// The minimizer is a grid endpoint where the objective is still
    /// decreasing, so the infimum over all of R may be smaller.
    pub boundary: bool,
}

/// Relative tolerance under which two objective values count as tied.
pub const LEGENDRE_TIE_TOLERANCE: f64 = 1e-12;

fn ties(a: f64, b: f64) -> bool {
    (a - b).abs() <= LEGENDRE_TIE_TOLERANCE * (1.0 + a.abs().max(b.abs()))
}

/// `inf_q (q h - tau(q))` over the sampled q's; ties go to the smallest q.
pub fn legendre(curve: &SpectrumCurve, h: f64) -> Result<LegendrePoint> {
    if curve.kind() != CurveKind::TauOfQ {
        return Err(Error::InvalidParameter(format!(
            "Legendre transform needs a tau-of-q curve, got {}",
            curve.kind().name()
        )));
    }
    let s = curve.samples();
    if s.is_empty() {
        return Err(Error::EmptyCurve);
    }
    let objective: Vec<f64> = s.iter().map(|(q, t)| q * h - t).collect();
    let mut best = 0usize;
    for i in 1..objective.len() {
        if objective[i] < objective[best] && !ties(objective[i], objective[best]) {
            best = i;
        }
    }
    let last = objective.len() - 1;
    let boundary = if objective.len() == 1 {
        true
    } else if best == 0 {
        objective[0] < objective[1] && !ties(objective[0], objective[1])
    } else if best == last {
        objective[last] < objective[last - 1] && !ties(objective[last], objective[last - 1])
    } else {
        false
    };
    Ok(LegendrePoint {
        h,
        value: objective[best],
        attained_q: s[best].0,
        boundary,
    })
}

/// Legendre transform sampled at each `h`.
pub fn legendre_curve(
    curve: &SpectrumCurve,
    hs: &[f64],
) -> Result<(SpectrumCurve, Vec<LegendrePoint>)> {
    let points = hs
        .iter()
        .map(|&h| legendre(curve, h))
        .collect::<Result<Vec<_>>>()?;
    let out = SpectrumCurve::new(
        CurveKind::LegendreOfH,
        points.iter().map(|p| (p.h, p.value)).collect(),
        curve.scale(),
    )?;
    Ok((out, points))
}

/// `alpha_j(x) = log2 mu(I_j(x)) / (-j)`; `+inf` on an empty cube.
pub fn cube_exponent(tree: &MassTree, x: &Point, j: u32) -> Result<f64> {
    require_positive_level(j)?;
    if x.dim() != tree.dim() {
        return Err(Error::DimensionMismatch {
            expected: tree.dim(),
            found: x.dim(),
        });
    }
    let c = containing_cube(x, j)?;
    let m = tree.cube_mass(&c)?;
    if m.is_zero() {
        return Ok(f64::INFINITY);
    }
    Ok(m.log2() / -(j as f64))
}

/// Histogram spectrum at level `j`: bins of width `eps` centered at multiples
/// of `eps`, value `log2 N_j(h) / j`; empty bins are omitted.
pub fn coarse_spectrum(tree: &MassTree, j: u32, eps: f64) -> Result<SpectrumCurve> {
    require_positive_level(j)?;
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "bin width must be positive, got {eps}"
        )));
    }
    let mut bins: BTreeMap<i64, u64> = BTreeMap::new();
    for l in tree.level_log2(j)? {
        let alpha = l / -(j as f64);
        let b = libm::floor(alpha / eps + 0.5) as i64;
        *bins.entry(b).or_insert(0) += 1;
    }
    let samples = bins
        .into_iter()
        .map(|(b, n)| (b as f64 * eps, libm::log2(n as f64) / j as f64))
        .collect();
    SpectrumCurve::new(CurveKind::CoarseOfH, samples, ScaleRange::Level(j))
}
