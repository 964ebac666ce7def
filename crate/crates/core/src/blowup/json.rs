use serde::{Deserialize, Serialize};

use super::{BlowupRecord, Bound, Chart, ChartKind, Family, ResolutionAtlas};
use crate::error::{usage, Error, Result};
use crate::io::SCHEMA_VERSION;
use crate::poisson::{jacobi_check, PoissonSurface, XYZ};
use crate::poly::{Poly, Rat};

/// On-disk form of a [`ResolutionAtlas`]. Polynomials are written in the
/// same syntax accepted by [`Poly::parse`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AtlasFile {
    pub schema_version: u32,
    pub family: String,
    pub k: u32,
    pub half_space: Option<String>,
    pub variables: Vec<String>,
    pub blowups: usize,
    pub history: Vec<HistoryEntry>,
    pub leaves: Vec<String>,
    pub charts: Vec<ChartEntry>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub chart: String,
    pub center: [String; 3],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Triple {
    pub x: String,
    pub y: String,
    pub z: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BracketEntry {
    pub xy: String,
    pub yz: String,
    pub zx: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChartEntry {
    pub id: String,
    pub parent: Option<String>,
    pub kind: String,
    pub center: [String; 3],
    pub substitution: Triple,
    pub strict_transform: String,
    pub exceptional_multiplicity: u32,
    pub bracket_multiplier: String,
    pub bracket: BracketEntry,
    pub domain: Vec<String>,
}

fn rats(c: &[Rat; 3]) -> [String; 3] {
    [c[0].to_string(), c[1].to_string(), c[2].to_string()]
}

fn parse_rat(s: &str) -> Result<Rat> {
    s.trim()
        .parse::<Rat>()
        .map_err(|_| Error::Usage(format!("bad rational `{s}`")))
}

fn parse_rats(c: &[String; 3]) -> Result<[Rat; 3]> {
    Ok([parse_rat(&c[0])?, parse_rat(&c[1])?, parse_rat(&c[2])?])
}

fn poly(s: &str) -> Result<Poly> {
    Poly::parse(s, &XYZ)
}

impl ResolutionAtlas {
    pub fn to_file(&self) -> AtlasFile {
        AtlasFile {
            schema_version: SCHEMA_VERSION,
            family: self.family.to_string(),
            k: self.k,
            half_space: self.half_space.then(|| "z >= 0".to_string()),
            variables: XYZ.iter().map(|s| s.to_string()).collect(),
            blowups: self.history.len(),
            history: self
                .history
                .iter()
                .map(|h| HistoryEntry {
                    chart: h.chart.clone(),
                    center: rats(&h.center),
                })
                .collect(),
            leaves: self.leaves.clone(),
            charts: self
                .charts
                .iter()
                .map(|c| ChartEntry {
                    id: c.id.clone(),
                    parent: c.parent.clone(),
                    kind: c.kind.letter().to_string(),
                    center: rats(&c.center),
                    substitution: Triple {
                        x: c.substitution[0].to_string(),
                        y: c.substitution[1].to_string(),
                        z: c.substitution[2].to_string(),
                    },
                    strict_transform: c.strict().to_string(),
                    exceptional_multiplicity: c.exceptional_mult,
                    bracket_multiplier: c.multiplier.to_string(),
                    bracket: BracketEntry {
                        xy: c.surface.b_xy.to_string(),
                        yz: c.surface.b_yz.to_string(),
                        zx: c.surface.b_zx.to_string(),
                    },
                    domain: c.domain.iter().map(Bound::to_string).collect(),
                })
                .collect(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        crate::io::to_json_string(&self.to_file())
    }

    /// Rebuilds an atlas, checking the schema version, the parent links and
    /// the Jacobi identity of every stored bracket.
    pub fn from_file(f: &AtlasFile) -> Result<ResolutionAtlas> {
        if f.schema_version != SCHEMA_VERSION {
            return usage(format!(
                "atlas schema_version {} is not supported (expected {SCHEMA_VERSION})",
                f.schema_version
            ));
        }
        if f.variables != XYZ {
            return usage("atlas variables must be [x, y, z]");
        }
        let family: Family = f.family.parse()?;
        let mut charts = Vec::with_capacity(f.charts.len());
        for c in &f.charts {
            let surface = PoissonSurface::new(
                poly(&c.strict_transform)?,
                poly(&c.bracket.xy)?,
                poly(&c.bracket.yz)?,
                poly(&c.bracket.zx)?,
            )?;
            if !jacobi_check(&surface).is_zero {
                return Err(Error::Structural(format!("chart {}: bracket fails Jacobi", c.id)));
            }
            charts.push(Chart {
                id: c.id.clone(),
                parent: c.parent.clone(),
                kind: ChartKind::parse(&c.kind)?,
                center: parse_rats(&c.center)?,
                substitution: [
                    poly(&c.substitution.x)?,
                    poly(&c.substitution.y)?,
                    poly(&c.substitution.z)?,
                ],
                exceptional_mult: c.exceptional_multiplicity,
                multiplier: poly(&c.bracket_multiplier)?,
                surface,
                domain: c.domain.iter().map(|d| d.parse()).collect::<Result<_>>()?,
            });
        }
        let mut it = charts.into_iter();
        let root = it
            .next()
            .ok_or_else(|| Error::Usage("atlas has no charts".into()))?;
        if root.parent.is_some() {
            return usage("first chart must be the root");
        }
        let mut atlas = ResolutionAtlas::new(family, f.k, root, f.half_space.is_some());
        for c in it {
            match &c.parent {
                Some(p) if atlas.chart(p).is_ok() => atlas.push(c),
                _ => return usage(format!("chart {} has no earlier parent", c.id)),
            }
        }
        for h in &f.history {
            atlas.chart(&h.chart)?;
            atlas.history.push(BlowupRecord {
                chart: h.chart.clone(),
                center: parse_rats(&h.center)?,
            });
        }
        for l in &f.leaves {
            atlas.chart(l)?;
        }
        atlas.leaves = f.leaves.clone();
        Ok(atlas)
    }

    pub fn from_json(s: &str) -> Result<ResolutionAtlas> {
        let f: AtlasFile = serde_json::from_str(s)?;
        Self::from_file(&f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blowup::{resolve_a, resolve_d};

    #[test]
    fn json_roundtrip() {
        for a in [resolve_a(2).unwrap(), resolve_d(2).unwrap()] {
            let s = a.to_json().unwrap();
            let b = ResolutionAtlas::from_json(&s).unwrap();
            assert_eq!(a, b);
            assert_eq!(b.to_json().unwrap(), s);
        }
    }

    #[test]
    fn wrong_schema_rejected() {
        let mut f = resolve_a(2).unwrap().to_file();
        f.schema_version = 99;
        assert!(matches!(ResolutionAtlas::from_file(&f), Err(Error::Usage(_))));
    }
}
