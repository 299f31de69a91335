//! Holomorphic charts and the Kaehler metric of `log K`.
//!
//! A state `|z>` is written `e^c phi(w)` with chart coordinates `w` and a
//! complex log-scale `c`, so that `<z|z'> = exp(conj c + c') P(w, w')` with
//! the chart potential `P(w, w') = <lift w | lift w'>`. Every chart here
//! selects a subset of the label coordinates, which keeps the chain rule
//! from labels to charts a plain index map.

use crate::error::{CohError, Result};
use crate::kernel::{Kernel, KernelSpace, Point};
use crate::linalg::{c, cr, hermitian_eigen, hermitize, CMat, C64, I};

/// Component size beyond which a projective chart is abandoned.
pub const CHART_SWITCH_RADIUS: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum ChartKind {
    /// Klauder family: label 0 carries `z0 = c / degree`.
    Additive { degree: f64 },
    /// Homogeneous labels `z = lambda lift_q(w)`, `c = degree ln lambda`.
    Projective { degree: f64 },
    /// Line bundle: the multiplier is `lambda`, `c = degree ln lambda`.
    Multiplier { degree: f64 },
    /// Labels are the chart coordinates; no scale.
    Plain,
}

#[derive(Debug, Clone)]
pub struct Chart {
    space: KernelSpace,
    kind: ChartKind,
    /// Label component fixed to one in a projective chart.
    index: usize,
}

fn kind_of(space: &KernelSpace) -> Result<ChartKind> {
    Ok(match &space.kernel {
        Kernel::Klauder { .. } => ChartKind::Additive { degree: 1.0 },
        Kernel::Spin { exponent, .. } => ChartKind::Projective { degree: *exponent },
        Kernel::Trivial { dim } if *dim >= 2 => ChartKind::Projective { degree: 1.0 },
        Kernel::Moebius => ChartKind::Projective { degree: -1.0 },
        Kernel::Heisenberg { .. } => ChartKind::Multiplier { degree: 1.0 },
        Kernel::DeBranges(_) => ChartKind::Plain,
        Kernel::Power { base, n } => match kind_of(base)? {
            ChartKind::Additive { degree } => ChartKind::Additive { degree: degree * *n as f64 },
            ChartKind::Projective { degree } => ChartKind::Projective { degree: degree * *n as f64 },
            ChartKind::Multiplier { degree } => ChartKind::Multiplier { degree: degree * *n as f64 },
            ChartKind::Plain => ChartKind::Plain,
        },
        _ => {
            return Err(CohError::Domain(
                "space has no holomorphic chart (finite, constrained or one-dimensional projective labels)".into(),
            ))
        }
    })
}

impl Chart {
    /// Chart around `z`; projective charts pin the largest component.
    pub fn at(space: &KernelSpace, z: &Point) -> Result<Chart> {
        space.validate(z)?;
        let kind = kind_of(space)?;
        let index = match kind {
            ChartKind::Projective { .. } if matches!(space.kernel, Kernel::Moebius)
                || matches!(&space.kernel, Kernel::Power { base, .. } if matches!(base.kernel, Kernel::Moebius)) => 0,
            ChartKind::Projective { .. } => argmax(&z.coords),
            _ => 0,
        };
        Ok(Chart {
            space: space.clone(),
            kind,
            index,
        })
    }

    pub fn space(&self) -> &KernelSpace {
        &self.space
    }

    pub fn index(&self) -> usize {
        self.index
    }

    /// Whether the log-scale `c` carries the norm and phase of the state.
    pub fn has_scale(&self) -> bool {
        !matches!(self.kind, ChartKind::Plain)
    }

    pub fn dim(&self) -> usize {
        let d = self.space.label_dim();
        match self.kind {
            ChartKind::Additive { .. } | ChartKind::Projective { .. } => d - 1,
            ChartKind::Multiplier { .. } | ChartKind::Plain => d,
        }
    }

    /// Label coordinate behind chart coordinate `k`.
    pub fn label_index(&self, k: usize) -> usize {
        match self.kind {
            ChartKind::Additive { .. } => k + 1,
            ChartKind::Projective { .. } => {
                if k < self.index {
                    k
                } else {
                    k + 1
                }
            }
            ChartKind::Multiplier { .. } | ChartKind::Plain => k,
        }
    }

    /// Label coordinates of `lift(w)` (scale `c = 0`).
    pub fn lift_coords(&self, w: &[C64]) -> Vec<C64> {
        let d = self.space.label_dim();
        let mut z = vec![cr(0.0); d];
        if let ChartKind::Projective { .. } = self.kind {
            z[self.index] = cr(1.0);
        }
        for (k, &v) in w.iter().enumerate() {
            z[self.label_index(k)] = v;
        }
        z
    }

    pub fn lift(&self, w: &[C64]) -> Point {
        let z = self.lift_coords(w);
        match self.kind {
            ChartKind::Multiplier { .. } => Point::with_multiplier(z, cr(1.0)),
            _ => Point::new(z),
        }
    }

    /// Label of `e^c phi(w)`. Projective labels are not rescaled onto any
    /// constraint surface.
    pub fn to_label(&self, c0: C64, w: &[C64]) -> Point {
        let mut z = self.lift_coords(w);
        match self.kind {
            ChartKind::Additive { degree } => {
                z[0] = c0 / degree;
                Point::new(z)
            }
            ChartKind::Projective { degree } => {
                let lambda = (c0 / degree).exp();
                Point::new(z.into_iter().map(|v| v * lambda).collect())
            }
            ChartKind::Multiplier { degree } => Point::with_multiplier(z, (c0 / degree).exp()),
            ChartKind::Plain => Point::new(z),
        }
    }

    /// Inverse of [`Chart::to_label`].
    pub fn split(&self, z: &Point) -> Result<(C64, Vec<C64>)> {
        let m = self.dim();
        let w: Vec<C64> = match self.kind {
            ChartKind::Projective { .. } => {
                let p = z.coords[self.index];
                if p.norm() == 0.0 {
                    return Err(CohError::Domain("label lies outside the chart".into()));
                }
                (0..m).map(|k| z.coords[self.label_index(k)] / p).collect()
            }
            _ => (0..m).map(|k| z.coords[self.label_index(k)]).collect(),
        };
        let c0 = match self.kind {
            ChartKind::Additive { degree } => z.coords[0] * degree,
            ChartKind::Projective { degree } => z.coords[self.index].ln() * degree,
            ChartKind::Multiplier { degree } => z.multiplier.unwrap_or(cr(1.0)).ln() * degree,
            ChartKind::Plain => cr(0.0),
        };
        Ok((c0, w))
    }

    pub fn potential(&self, w: &[C64], w2: &[C64]) -> C64 {
        self.space.product_unchecked(&self.lift(w), &self.lift(w2))
    }

    /// `ln <z|z>` of the state `e^c phi(w)`.
    pub fn log_norm(&self, c0: C64, w: &[C64]) -> f64 {
        2.0 * c0.re + self.potential(w, w).re.ln()
    }

    /// New chart index if a projective coordinate grew past the switch
    /// radius.
    pub fn should_switch(&self, w: &[C64]) -> Option<usize> {
        if !matches!(self.kind, ChartKind::Projective { .. }) || self.index_locked() {
            return None;
        }
        if w.iter().all(|v| v.norm() <= CHART_SWITCH_RADIUS) {
            return None;
        }
        Some(argmax(&self.lift_coords(w)))
    }

    fn index_locked(&self) -> bool {
        let base = match &self.space.kernel {
            Kernel::Power { base, .. } => &base.kernel,
            k => k,
        };
        matches!(base, Kernel::Moebius)
    }

    /// Re-expresses `(c, w)` and a set of complex tangent vectors `dw` in
    /// the projective chart pinning component `q`.
    pub fn switch(&mut self, q: usize, c0: C64, w: &[C64], tangents: &mut [Vec<C64>]) -> (C64, Vec<C64>) {
        let ChartKind::Projective { degree } = self.kind else {
            return (c0, w.to_vec());
        };
        let zh = self.lift_coords(w);
        let pivot = zh[q];
        let old = self.clone();
        self.index = q;
        let m = self.dim();
        let w_new: Vec<C64> = (0..m).map(|k| zh[self.label_index(k)] / pivot).collect();
        for dw in tangents.iter_mut() {
            let mut dz = vec![cr(0.0); zh.len()];
            for (k, v) in dw.iter().enumerate() {
                dz[old.label_index(k)] = *v;
            }
            *dw = (0..m)
                .map(|k| {
                    let i = self.label_index(k);
                    (dz[i] * pivot - zh[i] * dz[q]) / (pivot * pivot)
                })
                .collect();
        }
        (c0 + pivot.ln() * degree, w_new)
    }

    /// Metric `g_jk = d^2 ln P / d conj(w_j) dw'_k` and connection
    /// `a_k = d ln P / dw'_k` on the diagonal. Analytic where the space has
    /// product partials, central differences with step `h` otherwise.
    pub fn metric_and_connection(&self, w: &[C64], h: f64) -> Result<(CMat, Vec<C64>)> {
        let m = self.dim();
        let z = self.lift(w);
        if let Some(p) = self.space.product_partials(&z, &z) {
            let pv = p.value;
            let g = CMat::from_fn(m, m, |j, k| {
                let (a, b) = (self.label_index(j), self.label_index(k));
                p.d12[(a, b)] / pv - p.d1bar[a] * p.d2[b] / (pv * pv)
            });
            let conn = (0..m).map(|k| p.d2[self.label_index(k)] / pv).collect();
            return Ok((hermitize(&g), conn));
        }
        if !(h > 0.0 && h.is_finite()) {
            return Err(CohError::StepSize(format!("metric step must be positive, got {h}")));
        }
        let p0 = self.potential(w, w);
        let shifted = |j: Option<usize>, s: f64| -> Vec<C64> {
            let mut v = w.to_vec();
            if let Some(j) = j {
                v[j] += cr(s);
            }
            v
        };
        let logp = |a: &[C64], b: &[C64]| (self.potential(a, b) / p0).ln();
        let mixed = |j: usize, k: usize, s: f64| {
            let f = |x: f64, y: f64| logp(&shifted(Some(j), x), &shifted(Some(k), y));
            (f(s, s) - f(s, -s) - f(-s, s) + f(-s, -s)) / (4.0 * s * s)
        };
        let first = |k: usize, s: f64| (logp(w, &shifted(Some(k), s)) - logp(w, &shifted(Some(k), -s))) / (2.0 * s);
        let g = CMat::from_fn(m, m, |j, k| (mixed(j, k, h / 2.0) * 4.0 - mixed(j, k, h)) / 3.0);
        let conn = (0..m).map(|k| (first(k, h / 2.0) * 4.0 - first(k, h)) / 3.0).collect();
        if g.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(CohError::Numerical("non-finite metric".into()));
        }
        Ok((hermitize(&g), conn))
    }
}

fn argmax(z: &[C64]) -> usize {
    let mut best = 0;
    for (i, v) in z.iter().enumerate() {
        if v.norm() > z[best].norm() {
            best = i;
        }
    }
    best
}

/// Rejects metrics with eigenvalues below `1e-12 trace`, listing the null
/// directions.
pub(crate) fn check_nondegenerate(g: &CMat) -> Result<()> {
    let (eig, vecs) = hermitian_eigen(g)?;
    let tr: f64 = eig.iter().sum();
    let floor = 1e-12 * tr.abs();
    let null: Vec<Vec<[f64; 2]>> = eig
        .iter()
        .enumerate()
        .filter(|(_, &e)| e < floor || tr <= 0.0)
        .map(|(i, _)| vecs.column(i).iter().map(|v| [v.re, v.im]).collect())
        .collect();
    if null.is_empty() {
        Ok(())
    } else {
        Err(CohError::DegenerateMetric { null_directions: null })
    }
}

/// Kaehler metric at `z` in the coordinates of the chart [`Chart::at`]
/// picks: `zeta` for Klauder spaces, stereographic (affine) coordinates
/// for projective labels, `s` for the line bundle.
pub fn kahler_metric(space: &KernelSpace, z: &Point, h: f64) -> Result<CMat> {
    if space.product(z, z)?.re <= 0.0 {
        return Err(CohError::Domain("K(z, z) must be positive".into()));
    }
    let chart = Chart::at(space, z)?;
    let (_, w) = chart.split(z)?;
    let (g, _) = chart.metric_and_connection(&w, h)?;
    check_nondegenerate(&g)?;
    Ok(g)
}

/// `dh/d conj(w)` from label-space gradients, or by central differences of
/// `value` in the chart.
pub(crate) fn chart_gradient(
    chart: &Chart,
    w: &[C64],
    value: &dyn Fn(&[C64]) -> f64,
    grad: Option<Vec<C64>>,
    h: f64,
) -> Vec<C64> {
    if let Some(g) = grad {
        return (0..chart.dim()).map(|k| g[chart.label_index(k)]).collect();
    }
    let f = |k: usize, d: C64| {
        let mut v = w.to_vec();
        v[k] += d;
        value(&chart.lift_coords(&v))
    };
    (0..chart.dim())
        .map(|k| {
            let diff = |s: f64| {
                let dx = (f(k, cr(s)) - f(k, cr(-s))) / (2.0 * s);
                let dy = (f(k, c(0.0, s)) - f(k, c(0.0, -s))) / (2.0 * s);
                (cr(dx) + I * dy) * 0.5
            };
            (diff(h / 2.0) * 4.0 - diff(h)) / 3.0
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{sphere_point, SpaceDescriptor};
    use crate::linalg::max_abs_diff;

    #[test]
    fn klauder_metric_is_identity() {
        let s = SpaceDescriptor::Klauder { modes: 2 }.build().unwrap();
        let z = Point::new(vec![c(0.3, 0.1), c(1.0, -0.5), c(0.2, 0.7)]);
        let g = kahler_metric(&s, &z, 1e-4).unwrap();
        assert!(max_abs_diff(&g, &CMat::identity(2, 2)) < 1e-13);
    }

    #[test]
    fn spin_metric_stereographic() {
        let s = SpaceDescriptor::Spin { exponent: 4.0 }.build().unwrap();
        let g = kahler_metric(&s, &Point::real(&[1.0, 0.0]), 1e-4).unwrap();
        assert!((g[(0, 0)] - 4.0).norm() < 1e-13);
        let z = sphere_point(1.1, 0.4);
        let g = kahler_metric(&s, &z, 1e-4).unwrap();
        let w = z.coords[1] / z.coords[0];
        let expect = 4.0 / (1.0 + w.norm_sqr()).powi(2);
        assert!((g[(0, 0)] - expect).norm() < 1e-12);
    }

    #[test]
    fn power_scales_metric() {
        let base = SpaceDescriptor::Moebius;
        let z = Point::new(vec![c(1.0, 0.2), c(0.3, -0.4)]);
        let g1 = kahler_metric(&base.build().unwrap(), &z, 1e-4).unwrap();
        let p = SpaceDescriptor::Power { base: Box::new(base), n: 3 }.build().unwrap();
        let g3 = kahler_metric(&p, &z, 1e-4).unwrap();
        assert!(max_abs_diff(&(g1 * cr(3.0)), &g3) < 1e-12);
    }

    #[test]
    fn finite_difference_metric_matches_analytic() {
        // the Paley-Wiener kernel has no analytic partials; compare with the
        // closed form ln(sin(a(zb - z'))/(zb - z'))
        let s = SpaceDescriptor::DeBranges { poly: vec![[1.0, 0.0]], exp_type: 1.0 }.build().unwrap();
        let z = Point::new(vec![c(0.2, 0.5)]);
        let g = kahler_metric(&s, &z, 1e-3).unwrap()[(0, 0)];
        // d^2/du dv ln(sin(u - v)/(u - v)) at u - v = 2iy = -i... with u = conj z, v = z'
        let x = c(0.0, -1.0); // conj(z) - z = -2 i Im z = -1i
        let expect = 1.0 / (x.sin() * x.sin()) - 1.0 / (x * x);
        assert!((g - expect).norm() < 1e-7, "{g} vs {expect}");
    }

    #[test]
    fn chart_switch_preserves_state() {
        let s = SpaceDescriptor::Spin { exponent: 3.0 }.build().unwrap();
        let z = sphere_point(2.9, 0.7);
        let mut chart = Chart::at(&s, &sphere_point(0.1, 0.0)).unwrap();
        assert_eq!(chart.index(), 0);
        let (c0, w) = chart.split(&z).unwrap();
        assert_eq!(chart.should_switch(&w), Some(1));
        let dw = vec![c(0.3, -0.2)];
        let mut tangents = vec![dw.clone()];
        let (c1, w1) = chart.switch(1, c0, &w, &mut tangents);
        assert!(chart.to_label(c1, &w1).max_abs_diff(&z) < 1e-12);
        // tangent maps like the derivative of w -> 1/w
        let expect = -dw[0] / (w[0] * w[0]);
        assert!((tangents[0][0] - expect).norm() < 1e-12);
    }

    #[test]
    fn unsupported_spaces() {
        let s = SpaceDescriptor::Icosahedron.build().unwrap();
        let z = s.discrete_points().unwrap()[0].clone();
        assert!(matches!(kahler_metric(&s, &z, 1e-4), Err(CohError::Domain(_))));
    }
}
