//! Generator specs such as `lebesgue d=1 J=10` or
//! `mun n=2 grid=j=1;d=1;weights=1/3,2/3`.
//!
//! Families: `pi j= d=`, `grid j= d= weights=`, `mun n= grid=...` (the grid
//! keys may also be given inline), `cascade m0= J=`, `lebesgue d= J=`.
//! `weights` is a comma list of rationals (axis 0 fastest) or `uniform`.

use std::collections::BTreeMap;

use mfkit_core::constructions::{
    cascade, lebesgue, nu_from_grid, pi_j, CascadeSpec, GridWeights, MuN,
};
use mfkit_core::num::parse_rational;
use mfkit_core::MassMode;

use crate::error::{Error, Result};
use crate::measure_file::MeasureFile;

struct Params<'a> {
    family: &'a str,
    values: BTreeMap<&'a str, &'a str>,
}

impl<'a> Params<'a> {
    fn parse(spec: &'a str) -> Result<Self> {
        let mut toks = spec.split_whitespace();
        let family = toks
            .next()
            .ok_or_else(|| Error::Spec("empty spec".into()))?;
        let mut values = BTreeMap::new();
        for t in toks {
            let (k, v) = t
                .split_once('=')
                .ok_or_else(|| Error::Spec(format!("expected key=value, found {t:?}")))?;
            if k == "grid" {
                for part in v.split(';').filter(|p| !p.is_empty()) {
                    let (gk, gv) = part.split_once('=').ok_or_else(|| {
                        Error::Spec(format!("expected key=value in grid, found {part:?}"))
                    })?;
                    insert(&mut values, gk, gv)?;
                }
            } else {
                insert(&mut values, k, v)?;
            }
        }
        Ok(Params { family, values })
    }

    fn allow(&self, keys: &[&str]) -> Result<()> {
        match self.values.keys().find(|k| !keys.contains(k)) {
            Some(k) => Err(Error::Spec(format!(
                "unknown key {k:?} for `{}`",
                self.family
            ))),
            None => Ok(()),
        }
    }

    fn get(&self, key: &str) -> Result<&'a str> {
        self.values
            .get(key)
            .copied()
            .ok_or_else(|| Error::Spec(format!("`{}` needs {key}=", self.family)))
    }

    fn num<T: std::str::FromStr>(&self, key: &str) -> Result<T> {
        let v = self.get(key)?;
        v.parse()
            .map_err(|_| Error::Spec(format!("invalid value {v:?} for {key}")))
    }
}

fn insert<'a>(values: &mut BTreeMap<&'a str, &'a str>, k: &'a str, v: &'a str) -> Result<()> {
    if values.insert(k, v).is_some() {
        return Err(Error::Spec(format!("key {k:?} given twice")));
    }
    Ok(())
}

/// Grid weights from a `weights=` value.
pub fn grid_weights(dim: usize, level: u32, weights: &str) -> Result<GridWeights> {
    if weights == "uniform" {
        return Ok(GridWeights::uniform(dim, level)?);
    }
    let ws = weights
        .split(',')
        .map(|w| parse_rational(w).map_err(|e| Error::Spec(e.to_string())))
        .collect::<Result<Vec<_>>>()?;
    Ok(GridWeights::new(dim, level, ws)?)
}

fn grid_of(p: &Params) -> Result<GridWeights> {
    grid_weights(p.num("d")?, p.num("j")?, p.get("weights")?)
}

/// Builds the measure a spec describes. Trees use `mode`; point measures are exact.
pub fn generate(spec: &str, mode: MassMode) -> Result<MeasureFile> {
    let p = Params::parse(spec)?;
    match p.family {
        "pi" => {
            p.allow(&["j", "d"])?;
            Ok(MeasureFile::Atomic(pi_j(p.num("d")?, p.num("j")?)?))
        }
        "grid" => {
            p.allow(&["j", "d", "weights"])?;
            Ok(MeasureFile::Atomic(nu_from_grid(&grid_of(&p)?)))
        }
        "mun" => {
            p.allow(&["n", "j", "d", "weights"])?;
            let mun = MuN::new(grid_of(&p)?, p.num("n")?)?;
            Ok(MeasureFile::Atomic(mun.to_atomic()?))
        }
        "cascade" => {
            p.allow(&["m0", "J", "d"])?;
            if p.values.contains_key("d") && p.get("d")? != "1" {
                return Err(Error::Spec("cascades are one-dimensional".into()));
            }
            let m0 = parse_rational(p.get("m0")?).map_err(|e| Error::Spec(e.to_string()))?;
            let spec = CascadeSpec::new(m0, p.num("J")?)?;
            Ok(MeasureFile::Tree(cascade(&spec, mode)?))
        }
        "lebesgue" => {
            p.allow(&["d", "J"])?;
            Ok(MeasureFile::Tree(lebesgue(p.num("d")?, p.num("J")?, mode)?))
        }
        other => Err(Error::Spec(format!("unknown family {other:?}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use mfkit_core::num::rat;

    #[test]
    fn families() {
        let MeasureFile::Tree(t) = generate("lebesgue d=1 J=4", MassMode::Exact).unwrap() else {
            panic!()
        };
        assert_eq!(t.depth(), 4);
        let MeasureFile::Atomic(a) = generate("pi j=2 d=1", MassMode::Exact).unwrap() else {
            panic!()
        };
        assert_eq!(a.len(), 4);
        let nested = generate("mun n=1 grid=j=1;d=1;weights=1/3,2/3", MassMode::Exact).unwrap();
        let inline = generate("mun n=1 j=1 d=1 weights=1/3,2/3", MassMode::Exact).unwrap();
        assert_eq!(nested, inline);
        let MeasureFile::Atomic(g) =
            generate("grid j=1 d=2 weights=uniform", MassMode::Exact).unwrap()
        else {
            panic!()
        };
        assert!(g.atoms().iter().all(|(_, w)| *w == rat(1, 4)));
        assert!(generate("cascade m0=1/4 J=3", MassMode::Log2).is_ok());
    }

    #[test]
    fn rejects_bad_specs() {
        for bad in [
            "",
            "sphere d=1",
            "pi j=2",
            "pi j=2 d=1 q=3",
            "lebesgue d=1 J=x",
            "grid j=1 d=1 weights=1/2,1/4",
            "cascade m0=1/4 J=3 d=2",
            "pi j=2 j=3 d=1",
        ] {
            assert!(generate(bad, MassMode::Exact).is_err(), "{bad}");
        }
    }
}
