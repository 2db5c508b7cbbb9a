//! The `mfm v1` text format.
//!
//! ```text
//! mfm v1
//! dim <d>
//! kind atomic|masstree
//! atom <x1> ... <xd> <weight>                  (atomic)
//! depth <J>                                    (masstree)
//! cube <j> <k1> ... <kd> <mass | log2:<float>> (masstree, every level)
//! ```
//!
//! Rationals are written as `num/den`. The reader rejects the first line that
//! breaks an invariant and names it in the error.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use mfkit_core::measure::{LOG2_ROOT_TOLERANCE, LOG2_SUM_TOLERANCE};
use mfkit_core::num::{format_rational, parse_rational};
use mfkit_core::spectra::log2_sum_exp2;
use mfkit_core::{AtomicMeasure, CubeIndex, Mass, MassMode, MassTree, Point, Rational};
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};

const MAX_TREE_BITS: u64 = 62;

#[derive(Clone, Debug, PartialEq)]
pub enum MeasureFile {
    Atomic(AtomicMeasure),
    Tree(MassTree),
}

impl MeasureFile {
    pub fn dim(&self) -> usize {
        match self {
            MeasureFile::Atomic(m) => m.dim(),
            MeasureFile::Tree(t) => t.dim(),
        }
    }

    /// A tree view: trees as stored, atomic measures discretized to `depth`.
    pub fn to_tree(&self, depth: u32) -> Result<MassTree> {
        match self {
            MeasureFile::Atomic(m) => Ok(MassTree::from_atoms(m, depth)?),
            MeasureFile::Tree(t) if t.depth() >= depth => Ok(t.clone()),
            MeasureFile::Tree(t) => Err(Error::Usage(format!(
                "tree has depth {}, level {depth} requested",
                t.depth()
            ))),
        }
    }
}

pub fn format_atomic(m: &AtomicMeasure) -> String {
    let mut out = format!("mfm v1\ndim {}\nkind atomic\n", m.dim());
    for (x, w) in m.atoms() {
        out.push_str("atom");
        for c in x.coords() {
            let _ = write!(out, " {}", format_rational(c));
        }
        let _ = writeln!(out, " {}", format_rational(w));
    }
    out
}

pub fn format_tree(t: &MassTree) -> String {
    let mut out = format!(
        "mfm v1\ndim {}\nkind masstree\ndepth {}\n",
        t.dim(),
        t.depth()
    );
    for j in 0..=t.depth() {
        for (c, m) in t.level_cubes(j).expect("level within depth") {
            let _ = write!(out, "cube {j}");
            for k in c.coords() {
                let _ = write!(out, " {k}");
            }
            match m {
                Mass::Exact(r) => {
                    let _ = writeln!(out, " {}", format_rational(&r));
                }
                Mass::Log2(l) => {
                    let _ = writeln!(out, " log2:{l}");
                }
            }
        }
    }
    out
}

pub fn format(m: &MeasureFile) -> String {
    match m {
        MeasureFile::Atomic(a) => format_atomic(a),
        MeasureFile::Tree(t) => format_tree(t),
    }
}

pub fn read(path: &Path) -> Result<MeasureFile> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse(&text)
}

pub fn write(path: &Path, m: &MeasureFile) -> Result<()> {
    std::fs::write(path, format(m)).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn keyword<'a>(line: usize, text: Option<&'a str>, word: &str) -> Result<Vec<&'a str>> {
    let text = text.ok_or_else(|| Error::at(line, format!("missing `{word}` line")))?;
    let toks: Vec<&str> = text.split_whitespace().collect();
    if toks.first() != Some(&word) {
        return Err(Error::at(
            line,
            format!("expected `{word} ...`, found {text:?}"),
        ));
    }
    Ok(toks)
}

fn single<T: std::str::FromStr>(line: usize, toks: &[&str], what: &str) -> Result<T> {
    if toks.len() != 2 {
        return Err(Error::at(line, format!("expected `{} <{what}>`", toks[0])));
    }
    toks[1]
        .parse()
        .map_err(|_| Error::at(line, format!("invalid {what} {:?}", toks[1])))
}

fn rational(line: usize, s: &str) -> Result<Rational> {
    parse_rational(s).map_err(|e| Error::at(line, e.to_string()))
}

pub fn parse(text: &str) -> Result<MeasureFile> {
    let mut lines = text.lines().map(str::trim);
    if lines.next() != Some("mfm v1") {
        return Err(Error::at(1, "expected header `mfm v1`"));
    }
    let dim: usize = single(2, &keyword(2, lines.next(), "dim")?, "dimension")?;
    if dim == 0 {
        return Err(Error::at(2, "dimension must be at least 1"));
    }
    let kind = keyword(3, lines.next(), "kind")?;
    match kind.get(1..) {
        Some(["atomic"]) => parse_atomic(dim, lines),
        Some(["masstree"]) => parse_tree(dim, lines),
        _ => Err(Error::at(3, "kind must be `atomic` or `masstree`")),
    }
}

fn parse_atomic<'a>(dim: usize, lines: impl Iterator<Item = &'a str>) -> Result<MeasureFile> {
    let mut seen: BTreeMap<Point, usize> = BTreeMap::new();
    let mut atoms = Vec::new();
    let mut total = Rational::zero();
    let mut last = 3;
    for (i, text) in lines.enumerate() {
        let line = i + 4;
        if text.is_empty() {
            continue;
        }
        last = line;
        let toks: Vec<&str> = text.split_whitespace().collect();
        if toks[0] != "atom" || toks.len() != dim + 2 {
            return Err(Error::at(
                line,
                format!("expected `atom` followed by {dim} coordinates and a weight"),
            ));
        }
        let coords = toks[1..=dim]
            .iter()
            .map(|s| rational(line, s))
            .collect::<Result<Vec<_>>>()?;
        let x = Point::new(coords).map_err(|e| Error::at(line, e.to_string()))?;
        let w = rational(line, toks[dim + 1])?;
        if !w.is_positive() {
            return Err(Error::at(line, format!("weight {w} is not positive")));
        }
        if let Some(first) = seen.insert(x.clone(), line) {
            return Err(Error::at(
                line,
                format!("atom repeats the location of line {first}"),
            ));
        }
        total += &w;
        atoms.push((x, w));
    }
    if atoms.is_empty() {
        return Err(Error::at(last + 1, "no atoms"));
    }
    if !total.is_one() {
        return Err(Error::at(
            last,
            format!("weights sum to {}, expected 1", format_rational(&total)),
        ));
    }
    let m = AtomicMeasure::new(dim, atoms).map_err(|e| Error::at(last, e.to_string()))?;
    Ok(MeasureFile::Atomic(m))
}

struct Entry {
    line: usize,
    cube: CubeIndex,
    mass: Mass,
}

fn parse_tree<'a>(dim: usize, mut lines: impl Iterator<Item = &'a str>) -> Result<MeasureFile> {
    let depth: u32 = single(4, &keyword(4, lines.next(), "depth")?, "depth")?;
    if dim as u64 * depth as u64 > MAX_TREE_BITS {
        return Err(Error::at(
            4,
            format!(
                "dim * depth = {} exceeds {MAX_TREE_BITS}",
                dim as u64 * depth as u64
            ),
        ));
    }
    let mut mode: Option<MassMode> = None;
    let mut levels: Vec<BTreeMap<u64, Entry>> = (0..=depth).map(|_| BTreeMap::new()).collect();
    let mut last = 4;
    for (i, text) in lines.enumerate() {
        let line = i + 5;
        if text.is_empty() {
            continue;
        }
        last = line;
        let toks: Vec<&str> = text.split_whitespace().collect();
        if toks[0] != "cube" || toks.len() != dim + 3 {
            return Err(Error::at(
                line,
                format!("expected `cube <j>` followed by {dim} indices and a mass"),
            ));
        }
        let j: u32 = toks[1]
            .parse()
            .map_err(|_| Error::at(line, format!("invalid level {:?}", toks[1])))?;
        if j > depth {
            return Err(Error::at(
                line,
                format!("level {j} is deeper than depth {depth}"),
            ));
        }
        let ks = toks[2..dim + 2]
            .iter()
            .map(|s| {
                s.parse::<u64>()
                    .map_err(|_| Error::at(line, format!("invalid index {s:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        let cube = CubeIndex::new(j, ks).map_err(|e| Error::at(line, e.to_string()))?;
        let raw = toks[dim + 2];
        let mass = if let Some(l) = raw.strip_prefix("log2:") {
            let l: f64 = l
                .parse()
                .map_err(|_| Error::at(line, format!("invalid log2 mass {raw:?}")))?;
            if !l.is_finite() {
                return Err(Error::at(line, format!("log2 mass {l} is not finite")));
            }
            Mass::Log2(l)
        } else {
            let r = rational(line, raw)?;
            if !r.is_positive() {
                return Err(Error::at(line, format!("mass {r} is not positive")));
            }
            Mass::Exact(r)
        };
        let this_mode = match mass {
            Mass::Exact(_) => MassMode::Exact,
            Mass::Log2(_) => MassMode::Log2,
        };
        if *mode.get_or_insert(this_mode) != this_mode {
            return Err(Error::at(line, "exact and log2 masses are mixed"));
        }
        let key = cube.key();
        if let Some(prev) = levels[j as usize].get(&key) {
            return Err(Error::at(line, format!("cube repeats line {}", prev.line)));
        }
        levels[j as usize].insert(key, Entry { line, cube, mass });
    }
    check_consistency(&levels, last)?;
    let cubes = levels
        .into_iter()
        .flat_map(|l| l.into_values().map(|e| (e.cube, e.mass)))
        .collect();
    let tree =
        MassTree::from_cubes(dim, depth, cubes).map_err(|e| Error::at(last, e.to_string()))?;
    Ok(MeasureFile::Tree(tree))
}

/// Root mass 1, every child under a listed parent, every parent the sum of
/// its children. Reports the earliest offending line.
fn check_consistency(levels: &[BTreeMap<u64, Entry>], last: usize) -> Result<()> {
    let mut problems: Vec<(usize, String)> = Vec::new();
    match levels[0].values().next() {
        None => problems.push((last + 1, "no level-0 cube".into())),
        Some(root) => {
            let ok = match &root.mass {
                Mass::Exact(r) => r.is_one(),
                Mass::Log2(l) => l.abs() <= LOG2_ROOT_TOLERANCE,
            };
            if !ok {
                problems.push((root.line, "root mass is not 1".into()));
            }
        }
    }
    for j in 1..levels.len() {
        let mut groups: BTreeMap<u64, Vec<&Entry>> = BTreeMap::new();
        for e in levels[j].values() {
            let parent = e.cube.parent().expect("level >= 1").key();
            if !levels[j - 1].contains_key(&parent) {
                problems.push((e.line, format!("cube {} has no listed parent", e.cube)));
            }
            groups.entry(parent).or_default().push(e);
        }
        for (key, parent) in &levels[j - 1] {
            let kids = groups.get(key).map(Vec::as_slice).unwrap_or(&[]);
            let ok = match &parent.mass {
                Mass::Exact(m) => {
                    let s: Rational = kids
                        .iter()
                        .map(|e| e.mass.exact().cloned().unwrap_or_else(|_| Rational::zero()))
                        .sum();
                    &s == m
                }
                Mass::Log2(l) => {
                    let s = log2_sum_exp2(&kids.iter().map(|e| e.mass.log2()).collect::<Vec<_>>());
                    (s - l).abs().exp2() - 1.0 <= LOG2_SUM_TOLERANCE
                }
            };
            if !ok {
                problems.push((
                    parent.line,
                    format!(
                        "mass of cube {} differs from the sum of its children",
                        parent.cube
                    ),
                ));
            }
        }
    }
    match problems.into_iter().min_by_key(|p| p.0) {
        Some((line, message)) => Err(Error::Format { line, message }),
        None => Ok(()),
    }
}
