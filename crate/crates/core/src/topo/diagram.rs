use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

/// A `(birth, death)` pair. `death` may be `f64::INFINITY`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PersistencePoint {
    pub birth: f64,
    pub death: f64,
}

impl PersistencePoint {
    pub fn new(birth: f64, death: f64) -> Self {
        Self { birth, death }
    }

    pub fn is_essential(&self) -> bool {
        self.death == f64::INFINITY
    }

    pub fn persistence(&self) -> f64 {
        self.death - self.birth
    }
}

/// Multiset of persistence points, plus the largest value seen by the
/// filtration that produced it (used to cap essential points).
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PersistenceDiagram {
    pub points: Vec<PersistencePoint>,
    pub filtration_max: Option<f64>,
}

/// What to do with points whose death is infinite before matching.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum InfiniteDeathPolicy {
    /// Replace `+inf` by the filtration maximum.
    #[default]
    CapAtGlobalMax,
    Drop,
    Reject,
}

impl std::str::FromStr for InfiniteDeathPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cap" => Ok(Self::CapAtGlobalMax),
            "drop" => Ok(Self::Drop),
            "reject" => Ok(Self::Reject),
            other => Err(Error::Config(format!("unknown infinite-death policy {other:?}"))),
        }
    }
}

impl PersistenceDiagram {
    pub fn new(points: Vec<PersistencePoint>) -> Result<Self> {
        for p in &points {
            if p.birth.is_nan() || p.death.is_nan() || !p.birth.is_finite() {
                return Err(Error::Domain(format!("invalid point {p:?}")));
            }
            if p.death < p.birth {
                return Err(Error::Domain(format!(
                    "death {} precedes birth {}",
                    p.death, p.birth
                )));
            }
        }
        Ok(Self {
            points,
            filtration_max: None,
        })
    }

    pub fn from_pairs(pairs: &[(f64, f64)]) -> Result<Self> {
        Self::new(pairs.iter().map(|&(b, d)| PersistencePoint::new(b, d)).collect())
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn essential_count(&self) -> usize {
        self.points.iter().filter(|p| p.is_essential()).count()
    }

    /// Points sorted by `(birth, death)`, for multiset comparison.
    pub fn sorted_pairs(&self) -> Vec<(f64, f64)> {
        let mut pairs: Vec<_> = self.points.iter().map(|p| (p.birth, p.death)).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
        pairs
    }

    /// Largest value to cap essential points at: the recorded filtration
    /// maximum, or else the largest finite coordinate in the diagram.
    pub fn cap_value(&self) -> f64 {
        self.filtration_max.unwrap_or_else(|| {
            self.points
                .iter()
                .flat_map(|p| [p.birth, p.death])
                .filter(|v| v.is_finite())
                .fold(f64::NEG_INFINITY, f64::max)
        })
    }

    /// Finite diagram according to `policy`.
    pub fn resolve_infinite(&self, policy: InfiniteDeathPolicy) -> Result<Vec<PersistencePoint>> {
        let cap = self.cap_value();
        let mut out = Vec::with_capacity(self.points.len());
        for p in &self.points {
            if !p.is_essential() {
                out.push(*p);
                continue;
            }
            match policy {
                InfiniteDeathPolicy::CapAtGlobalMax => {
                    out.push(PersistencePoint::new(p.birth, cap.max(p.birth)))
                }
                InfiniteDeathPolicy::Drop => {}
                InfiniteDeathPolicy::Reject => return Err(Error::InfiniteDeath),
            }
        }
        Ok(out)
    }

    /// One `birth,death` line per point, 17 significant digits, `inf` for
    /// infinite death.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for p in &self.points {
            let _ = writeln!(out, "{},{}", format_value(p.birth), format_value(p.death));
        }
        out
    }

    pub fn parse_text(text: &str) -> Result<Self> {
        let mut points = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let bad = |reason: &str| Error::DiagramParse {
                line: i + 1,
                reason: reason.to_string(),
            };
            let (b, d) = line.split_once(',').ok_or_else(|| bad("expected birth,death"))?;
            let birth = parse_value(b).ok_or_else(|| bad("bad birth"))?;
            let death = parse_value(d).ok_or_else(|| bad("bad death"))?;
            points.push(PersistencePoint::new(birth, death));
        }
        Self::new(points)
    }

    pub fn write_text(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn read_text(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse_text(&fs::read_to_string(path)?)
    }
}

fn format_value(v: f64) -> String {
    if v == f64::INFINITY {
        "inf".to_string()
    } else {
        format!("{v:.16e}")
    }
}

fn parse_value(s: &str) -> Option<f64> {
    match s.trim() {
        "inf" | "+inf" => Some(f64::INFINITY),
        other => other.parse().ok().filter(|v: &f64| v.is_finite()),
    }
}
