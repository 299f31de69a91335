//! Implicit spectral problems `I(E) psi = 0` with `I(E) = m(E) X(E) - k(E)`.
//!
//! When `X(E)` has known spectrum `xi_n(E)` the energies are the roots of
//! `lambda_n(E) = m(E) xi_n(E) - k(E)`. [`assemble_from_algebra`] solves the
//! same problem directly from a matrix representation of `I(E)`.

mod catalog;

pub use catalog::{coulomb_levels, ModelSpec};

use serde::Serialize;

use crate::error::{CohError, Result};
use crate::linalg::{CMat, C64};

pub const DEFAULT_SCAN_POINTS: usize = 10_000;

type RealFn = Box<dyn Fn(f64) -> f64 + Send + Sync>;
type FamilyFn = Box<dyn Fn(usize, f64) -> f64 + Send + Sync>;

/// Spectrum of `X(E)`.
pub enum XiFamily {
    /// Eigenvalues `xi_n(E)` for `n` in `n_min..=n_max`, defined for `E`
    /// inside `domain`.
    Discrete {
        xi: FamilyFn,
        n_min: usize,
        n_max: usize,
        domain: (f64, f64),
    },
    /// A band `[xi_min(E), xi_max(E)]` (infinite ends allowed) on `domain`.
    Continuous {
        xi_min: RealFn,
        xi_max: RealFn,
        domain: (f64, f64),
    },
}

pub struct ImplicitSpectralModel {
    pub m: RealFn,
    pub k: RealFn,
    pub families: Vec<XiFamily>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Root {
    pub n: usize,
    pub energy: f64,
    pub residual: f64,
    /// Set for touching zeros of `lambda_n` found without a sign change.
    pub multiplicity_uncertain: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumResult {
    pub discrete: Vec<Root>,
    pub continuous: Vec<(f64, f64)>,
    pub search_interval: (f64, f64),
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanOptions {
    pub points: usize,
    pub tol: f64,
}

impl ScanOptions {
    pub fn new(tol: f64) -> Self {
        ScanOptions {
            points: DEFAULT_SCAN_POINTS,
            tol,
        }
    }
}

fn grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let n = n.max(2);
    (0..n)
        .map(|i| if i == n - 1 { hi } else { lo + (hi - lo) * i as f64 / (n - 1) as f64 })
        .collect()
}

/// Root of `f` in `[a, b]` with `f(a) f(b) < 0` by secant steps safeguarded
/// with bisection. Returns the point with the smallest `|f|` seen.
pub(crate) fn polish_root(f: &dyn Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let (mut fa, mut fb) = (f(a), f(b));
    let mut best = if fa.abs() < fb.abs() { (a, fa) } else { (b, fb) };
    for it in 0..200 {
        if best.1.abs() <= tol && it > 0 {
            break;
        }
        let width = (b - a).abs();
        if width <= 4.0 * f64::EPSILON * a.abs().max(b.abs()).max(f64::MIN_POSITIVE) {
            break;
        }
        let secant = b - fb * (b - a) / (fb - fa);
        let mid = 0.5 * (a + b);
        // bisect every third step so slow secant convergence cannot stall
        let x = if it % 3 != 2 && secant.is_finite() && secant > a.min(b) && secant < a.max(b) {
            secant
        } else {
            mid
        };
        let fx = f(x);
        if fx.abs() < best.1.abs() {
            best = (x, fx);
        }
        if fx == 0.0 {
            break;
        }
        if (fx < 0.0) == (fa < 0.0) {
            a = x;
            fa = fx;
        } else {
            b = x;
            fb = fx;
        }
    }
    (best.0, best.1.abs())
}

/// Minimizer of a unimodal `f` on `[a, b]` by golden-section search.
pub(crate) fn golden_min(f: &dyn Fn(f64) -> f64, mut a: f64, mut b: f64, rel: f64) -> (f64, f64) {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = b - r * (b - a);
    let mut x2 = a + r * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while (b - a).abs() > rel * (1.0 + a.abs().max(b.abs())) {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - r * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + r * (b - a);
            f2 = f(x2);
        }
    }
    if f1 <= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

fn clip(domain: (f64, f64), lo: f64, hi: f64) -> Option<(f64, f64)> {
    let a = lo.max(domain.0);
    let b = hi.min(domain.1);
    (a < b).then_some((a, b))
}

/// Roots of every `lambda_n` on `interval` plus the continuous bands.
pub fn solve_implicit_spectrum(model: &ImplicitSpectralModel, interval: (f64, f64), opts: ScanOptions) -> Result<SpectrumResult> {
    let (lo, hi) = interval;
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(CohError::Domain(format!("invalid search interval ({lo}, {hi})")));
    }
    let es = grid(lo, hi, opts.points);
    for &e in &es {
        if (model.m)(e).abs() < 1e-300 && (model.k)(e).abs() < 1e-300 {
            return Err(CohError::ModelDegeneracy { energy: e });
        }
    }
    let mut roots = Vec::new();
    let mut bands = Vec::new();
    let mut warnings = Vec::new();
    for fam in &model.families {
        match fam {
            XiFamily::Discrete { xi, n_min, n_max, domain } => {
                let Some((a, b)) = clip(*domain, lo, hi) else { continue };
                let sub: Vec<f64> = es.iter().cloned().filter(|&e| e > a && e < b).collect();
                let mut pts = vec![a];
                pts.extend(sub);
                pts.push(b);
                // open domain ends are approached but not evaluated
                if a == domain.0 {
                    pts[0] = a + (pts[1] - a) * 1e-9;
                }
                if b == domain.1 {
                    let l = pts.len();
                    pts[l - 1] = b - (b - pts[l - 2]) * 1e-9;
                }
                for n in *n_min..=*n_max {
                    let f = |e: f64| (model.m)(e) * xi(n, e) - (model.k)(e);
                    scan_family(&f, n, &pts, opts.tol, &mut roots, &mut warnings);
                }
            }
            XiFamily::Continuous { xi_min, xi_max, domain } => {
                let Some((a, b)) = clip(*domain, lo, hi) else { continue };
                let inside = |e: f64| {
                    let m = (model.m)(e);
                    let k = (model.k)(e);
                    let (u, v) = (m * xi_min(e) - k, m * xi_max(e) - k);
                    let (u, v) = if u.is_nan() || v.is_nan() {
                        return false;
                    } else {
                        (u.min(v), u.max(v))
                    };
                    u <= 0.0 && 0.0 <= v
                };
                let pts: Vec<f64> = std::iter::once(a)
                    .chain(es.iter().cloned().filter(|&e| e > a && e < b))
                    .chain(std::iter::once(b))
                    .collect();
                let edge = |mut x: f64, mut y: f64| {
                    // x inside, y outside
                    for _ in 0..100 {
                        let m = 0.5 * (x + y);
                        if m == x || m == y {
                            break;
                        }
                        if inside(m) {
                            x = m
                        } else {
                            y = m
                        }
                    }
                    x
                };
                let mut start: Option<f64> = None;
                for i in 0..pts.len() {
                    let e = pts[i];
                    let ins = inside(e);
                    match (start, ins) {
                        (None, true) => start = Some(if i == 0 { e } else { edge(e, pts[i - 1]) }),
                        (Some(s), false) => {
                            bands.push((s, edge(pts[i - 1], e)));
                            start = None;
                        }
                        _ => {}
                    }
                }
                if let Some(s) = start {
                    bands.push((s, b));
                }
            }
        }
    }
    roots.sort_by(|x: &Root, y: &Root| x.energy.total_cmp(&y.energy).then(x.n.cmp(&y.n)));
    roots.dedup_by(|x, y| x.n == y.n && (x.energy - y.energy).abs() <= 1e-10 * x.energy.abs().max(1e-300));
    bands.sort_by(|x, y| x.0.total_cmp(&y.0));
    Ok(SpectrumResult {
        discrete: roots,
        continuous: bands,
        search_interval: interval,
        warnings,
    })
}

fn scan_family(f: &dyn Fn(f64) -> f64, n: usize, pts: &[f64], tol: f64, roots: &mut Vec<Root>, warnings: &mut Vec<String>) {
    let vals: Vec<f64> = pts.iter().map(|&e| f(e)).collect();
    let mut i = 0;
    while i + 1 < pts.len() {
        let (a, b) = (pts[i], pts[i + 1]);
        let (fa, fb) = (vals[i], vals[i + 1]);
        if fa == 0.0 {
            roots.push(Root {
                n,
                energy: a,
                residual: 0.0,
                multiplicity_uncertain: false,
            });
        } else if fa.is_finite() && fb.is_finite() && (fa < 0.0) != (fb < 0.0) && fb != 0.0 {
            let (e, r) = polish_root(f, a, b, tol);
            if r <= tol {
                roots.push(Root {
                    n,
                    energy: e,
                    residual: r,
                    multiplicity_uncertain: false,
                });
            } else {
                warnings.push(format!(
                    "n = {n}: sign change in [{a}, {b}] does not converge to a root (|lambda| = {r:e}); possible pole"
                ));
            }
        } else if i > 0 && fa.abs() < vals[i - 1].abs() && fa.abs() < fb.abs() && (vals[i - 1] < 0.0) == (fa < 0.0) && (fb < 0.0) == (fa < 0.0) {
            // interior minimum of |lambda| without a sign change
            let (e, r) = golden_min(&|x| f(x).abs(), pts[i - 1], b, 1e-13);
            if r <= tol {
                roots.push(Root {
                    n,
                    energy: e,
                    residual: r,
                    multiplicity_uncertain: true,
                });
            } else if r < 1e3 * tol.max(1e-12) {
                warnings.push(format!(
                    "n = {n}: |lambda| dips to {r:e} near E = {e} without a sign change; refine the scan grid"
                ));
            }
        }
        i += 1;
    }
    if let (Some(&e), Some(&v)) = (pts.last(), vals.last()) {
        if v == 0.0 {
            roots.push(Root {
                n,
                energy: e,
                residual: 0.0,
                multiplicity_uncertain: false,
            });
        }
    }
}

/// `E = c sqrt(p^2 + (m c)^2)`, the positive root of `(E/c)^2 - p^2 - (m c)^2`.
pub fn free_dispersion(p: f64, mass: f64, c: f64) -> Result<f64> {
    if !(p >= 0.0 && mass >= 0.0 && c > 0.0) {
        return Err(CohError::Domain("need p >= 0, mass >= 0 and c > 0".into()));
    }
    Ok(c * p.hypot(mass * c))
}

/// A matrix representation of the basis of a Lie algebra, possibly
/// truncated from an infinite-dimensional one.
pub struct MatrixRep {
    pub matrices: Vec<CMat>,
    /// Declared bound on the error the truncation introduces into `I(E)`.
    pub tail_bound: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlgebraScanOptions {
    pub points: usize,
    pub tol: f64,
}

/// Energies where `I(E) = sum_a c_a(E) rep(X_a)` is singular: local minima
/// of the smallest singular value on a scan grid, polished by golden
/// section and accepted when `sigma_min <= tol ||I(E)||`.
pub fn assemble_from_algebra(
    algebra_dim: usize,
    rep: &MatrixRep,
    coeffs: &dyn Fn(f64) -> Vec<C64>,
    interval: (f64, f64),
    opts: AlgebraScanOptions,
) -> Result<SpectrumResult> {
    let (lo, hi) = interval;
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(CohError::Domain(format!("invalid search interval ({lo}, {hi})")));
    }
    if rep.matrices.len() != algebra_dim {
        return Err(CohError::Dimension(format!(
            "representation has {} matrices for an algebra of dimension {algebra_dim}",
            rep.matrices.len()
        )));
    }
    if rep.tail_bound > opts.tol {
        return Err(CohError::Truncation(format!(
            "declared truncation tail {:e} exceeds tolerance {:e}",
            rep.tail_bound, opts.tol
        )));
    }
    let Some(first) = rep.matrices.first() else {
        return Err(CohError::Dimension("empty representation".into()));
    };
    let shape = first.shape();
    if shape.0 != shape.1 || rep.matrices.iter().any(|m| m.shape() != shape) {
        return Err(CohError::Dimension("representation matrices must be square and equal-sized".into()));
    }
    let assemble = |e: f64| -> Result<CMat> {
        let c = coeffs(e);
        if c.len() != algebra_dim {
            return Err(CohError::Dimension(format!("coefficient vector has length {}", c.len())));
        }
        let mut m = CMat::zeros(shape.0, shape.1);
        for (ca, x) in c.iter().zip(&rep.matrices) {
            m += x * *ca;
        }
        Ok(m)
    };
    let sv = |e: f64| -> Result<(f64, f64)> {
        let s = assemble(e)?.singular_values();
        let max = s.iter().cloned().fold(0.0, f64::max);
        let min = s.iter().cloned().fold(f64::INFINITY, f64::min);
        Ok((min, max))
    };
    let es = grid(lo, hi, opts.points);
    let mut vals = Vec::with_capacity(es.len());
    for &e in &es {
        vals.push(sv(e)?.0);
    }
    let mut roots = Vec::new();
    let mut warnings = Vec::new();
    for i in 0..es.len() {
        let left = if i > 0 { vals[i - 1] } else { f64::INFINITY };
        let right = if i + 1 < es.len() { vals[i + 1] } else { f64::INFINITY };
        if !(vals[i] <= left && vals[i] < right) {
            continue;
        }
        let a = if i > 0 { es[i - 1] } else { es[i] };
        let b = if i + 1 < es.len() { es[i + 1] } else { es[i] };
        let (e, _) = golden_min(&|x| sv(x).map_or(f64::INFINITY, |v| v.0), a, b, 1e-14);
        let (smin, smax) = sv(e)?;
        if smin <= opts.tol * smax.max(f64::MIN_POSITIVE) {
            roots.push(Root {
                n: roots.len(),
                energy: e,
                residual: smin,
                multiplicity_uncertain: false,
            });
        } else if smin <= 1e3 * opts.tol * smax {
            warnings.push(format!("near-singular I(E) at E = {e} (sigma_min = {smin:e}); refine the scan grid"));
        }
    }
    Ok(SpectrumResult {
        discrete: roots,
        continuous: vec![],
        search_interval: interval,
        warnings,
    })
}

/// CSV payload `n,energy,residual`.
pub fn spectrum_csv(r: &SpectrumResult) -> String {
    use crate::io::fmt_f64;
    let mut out = String::from("n,energy,residual\n");
    for x in &r.discrete {
        out.push_str(&format!("{},{},{}\n", x.n, fmt_f64(x.energy), fmt_f64(x.residual)));
    }
    out
}
