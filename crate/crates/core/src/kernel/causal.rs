//! Causality conditions for kernels on sections over a finite spacetime
//! lattice.
//!
//! Sites are integer pairs `(t, x)` in 1+1 dimensions. A section is a finite
//! map from sites to complex amplitudes; two sections are independent when
//! every pair of sites from their supports is.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{CohError, Result};
use crate::linalg::{c, cr, C64, I};

pub type Site = (i64, i64);

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CausalSection {
    values: BTreeMap<Site, C64>,
}

/// One nonzero amplitude of a section in JSON form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SiteValue {
    pub site: [i64; 2],
    pub value: [f64; 2],
}

impl Serialize for CausalSection {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let v: Vec<SiteValue> = self
            .values
            .iter()
            .map(|(&(t, x), v)| SiteValue {
                site: [t, x],
                value: [v.re, v.im],
            })
            .collect();
        v.serialize(s)
    }
}

impl<'de> Deserialize<'de> for CausalSection {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = Vec::<SiteValue>::deserialize(d)?;
        Ok(CausalSection::new(
            v.into_iter()
                .map(|e| ((e.site[0], e.site[1]), c(e.value[0], e.value[1]))),
        ))
    }
}

impl CausalSection {
    /// Builds a section; repeated sites are summed and zeros dropped.
    pub fn new(entries: impl IntoIterator<Item = (Site, C64)>) -> Self {
        let mut s = CausalSection::default();
        for (site, v) in entries {
            *s.values.entry(site).or_insert(cr(0.0)) += v;
        }
        s.values.retain(|_, v| v.norm() != 0.0);
        s
    }

    pub fn point(site: Site, value: f64) -> Self {
        CausalSection::new([(site, cr(value))])
    }

    pub fn support(&self) -> impl Iterator<Item = Site> + '_ {
        self.values.keys().copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Site, C64)> + '_ {
        self.values.iter().map(|(&s, &v)| (s, v))
    }

    pub fn is_zero(&self) -> bool {
        self.values.is_empty()
    }

    pub fn add(&self, other: &CausalSection) -> CausalSection {
        CausalSection::new(self.iter().chain(other.iter()))
    }
}

/// Independence relations on lattice sites.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Independence {
    /// Spacelike separation in 1+1 dimensions: `|x - y| > |t - s|`.
    LightCone,
    /// Euclidean convention: distinct sites are independent.
    Distinct,
}

impl Independence {
    pub fn independent(self, a: Site, b: Site) -> bool {
        match self {
            Independence::LightCone => (a.1 - b.1).abs() > (a.0 - b.0).abs(),
            Independence::Distinct => a != b,
        }
    }
}

/// First pair of sites, one from each support, that is not independent.
pub fn dependent_pair(
    j: &CausalSection,
    k: &CausalSection,
    independent: &dyn Fn(Site, Site) -> bool,
) -> Option<(Site, Site)> {
    j.support()
        .flat_map(|a| k.support().map(move |b| (a, b)))
        .find(|&(a, b)| !independent(a, b))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CausalVerdict {
    /// max |K(j, j') - 1| over independent pairs.
    pub normal_max: f64,
    /// max |K(j + k, j' + k) - K(j, j')| over triples.
    pub causal_max: f64,
    pub normal_passed: bool,
    pub causal_passed: bool,
    pub passed: bool,
}

/// Checks the normalization condition on `normal` pairs (`j` independent of
/// `j'`) and the causal condition on `causal` triples (`j` independent of
/// `k`, `k` independent of `j'`).
pub fn check_causal_conditions(
    kernel: &dyn Fn(&CausalSection, &CausalSection) -> C64,
    independent: &dyn Fn(Site, Site) -> bool,
    normal: &[(CausalSection, CausalSection)],
    causal: &[(CausalSection, CausalSection, CausalSection)],
    tol: f64,
) -> Result<CausalVerdict> {
    for (i, (j, jp)) in normal.iter().enumerate() {
        if let Some((a, b)) = dependent_pair(j, jp, independent) {
            return Err(CohError::Precondition(format!(
                "normal case {i}: sites {a:?} and {b:?} are not independent"
            )));
        }
    }
    for (i, (j, k, jp)) in causal.iter().enumerate() {
        for (name, x, y) in [("j, k", j, k), ("k, j'", k, jp)] {
            if let Some((a, b)) = dependent_pair(x, y, independent) {
                return Err(CohError::Precondition(format!(
                    "causal case {i} ({name}): sites {a:?} and {b:?} are not independent"
                )));
            }
        }
    }
    let normal_max = normal
        .iter()
        .map(|(j, jp)| (kernel(j, jp) - 1.0).norm())
        .fold(0.0, nan_max);
    let causal_max = causal
        .iter()
        .map(|(j, k, jp)| (kernel(&j.add(k), &jp.add(k)) - kernel(j, jp)).norm())
        .fold(0.0, nan_max);
    let normal_passed = normal_max <= tol;
    let causal_passed = causal_max <= tol;
    Ok(CausalVerdict {
        normal_max,
        causal_max,
        normal_passed,
        causal_passed,
        passed: normal_passed && causal_passed,
    })
}

fn nan_max(a: f64, b: f64) -> f64 {
    if b.is_nan() {
        f64::INFINITY
    } else {
        a.max(b)
    }
}

/// Commutator function of the Klein-Gordon field on the 1+1 lattice with
/// unit spacing and time step,
/// `phi(t+1, x) = phi(t, x+1) + phi(t, x-1) - phi(t-1, x) - m2 phi(t, x)`,
/// with `D(0, .) = 0`, `D(1, .) = delta_0` and `D(-t, x) = -D(t, x)`.
/// Its support lies strictly inside the light cone.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeCommutator {
    rows: Vec<Vec<f64>>,
    tmax: usize,
}

impl LatticeCommutator {
    pub fn new(m2: f64, tmax: usize) -> Self {
        let width = 2 * tmax + 3;
        let mid = tmax as i64 + 1;
        let mut rows = vec![vec![0.0; width]; tmax + 1];
        if tmax >= 1 {
            rows[1][mid as usize] = 1.0;
        }
        for t in 1..tmax {
            let mut next = vec![0.0; width];
            for x in 1..width - 1 {
                next[x] = rows[t][x + 1] + rows[t][x - 1] - rows[t - 1][x] - m2 * rows[t][x];
            }
            rows[t + 1] = next;
        }
        LatticeCommutator { rows, tmax }
    }

    pub fn value(&self, dt: i64, dx: i64) -> f64 {
        let sign = if dt < 0 { -1.0 } else { 1.0 };
        let t = dt.unsigned_abs() as usize;
        assert!(t <= self.tmax, "time separation {t} beyond table range {}", self.tmax);
        let x = dx + self.tmax as i64 + 1;
        if x < 0 || x as usize >= self.rows[t].len() {
            return 0.0;
        }
        sign * self.rows[t][x as usize]
    }

    /// `sum_ab j(a) D(a - b) k(b)`.
    pub fn pair(&self, j: &CausalSection, k: &CausalSection) -> C64 {
        j.iter()
            .flat_map(|(a, va)| {
                k.iter()
                    .map(move |(b, vb)| va * vb * self.value(a.0 - b.0, a.1 - b.1))
            })
            .sum()
    }
}

/// Catalog kernels on lattice sections.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LatticeKernel {
    /// `K = 1`.
    Constant,
    /// `K = exp(sum j(a) W(a, b) k(b))` with `W(a, b) = coupling` on
    /// dependent pairs and zero on independent ones.
    CausalExponent { coupling: f64 },
    /// Weyl-relation kernel `K = exp((i/2) sum j(a) D(a - b) k(b))` built
    /// from the lattice commutator function.
    Weyl {
        #[serde(default)]
        m2: f64,
        tmax: usize,
    },
}

impl LatticeKernel {
    pub fn evaluator(&self, independence: Independence) -> Box<dyn Fn(&CausalSection, &CausalSection) -> C64> {
        match self {
            LatticeKernel::Constant => Box::new(|_, _| cr(1.0)),
            LatticeKernel::CausalExponent { coupling } => {
                let w = *coupling;
                Box::new(move |j, k| {
                    let s: C64 = j
                        .iter()
                        .flat_map(|(a, va)| {
                            k.iter().map(move |(b, vb)| {
                                if independence.independent(a, b) {
                                    cr(0.0)
                                } else {
                                    va * vb * w
                                }
                            })
                        })
                        .sum();
                    s.exp()
                })
            }
            LatticeKernel::Weyl { m2, tmax } => {
                let d = LatticeCommutator::new(*m2, *tmax);
                Box::new(move |j, k| (I * 0.5 * d.pair(j, k)).exp())
            }
        }
    }
}
