//! Named spectral models and their JSON form.

use serde::{Deserialize, Serialize};

use super::{ImplicitSpectralModel, XiFamily};
use crate::error::{CohError, Result};

fn default_one() -> f64 {
    1.0
}

fn default_levels() -> usize {
    50
}

/// JSON model descriptor, tagged by `"model"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    /// `I(E) = H - E` with `H = hbar omega (a* a + 1/2)`.
    Oscillator {
        #[serde(default = "default_one")]
        hbar_omega: f64,
        #[serde(default = "default_levels")]
        n_max: usize,
    },
    /// `I(E) = r (H - E)` for `H = p^2 / 2 mu - alpha / r` in the partial
    /// wave `l`; bound states come from the discrete series of su(1,1).
    Coulomb {
        #[serde(default = "default_one")]
        mu: f64,
        #[serde(default = "default_one")]
        alpha: f64,
        #[serde(default = "default_one")]
        hbar: f64,
        #[serde(default)]
        l: usize,
        #[serde(default = "default_levels")]
        n_max: usize,
    },
    /// `I(E) = (E/c)^2 - p^2 - (m c)^2`; a fixed `p` gives the two
    /// dispersion roots, otherwise the band of all momenta.
    Free {
        mass: f64,
        #[serde(default = "default_one")]
        c: f64,
        #[serde(default)]
        p: Option<f64>,
    },
    /// Polynomial coefficient tables in `E` (lowest order first).
    Polynomial {
        m: Vec<f64>,
        k: Vec<f64>,
        #[serde(default)]
        discrete: Vec<Vec<f64>>,
        #[serde(default)]
        continuous: Option<[Vec<f64>; 2]>,
    },
}

fn horner(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &a| acc * x + a)
}

/// Bound-state energies `-mu alpha^2 / (2 hbar^2 n^2)`.
pub fn coulomb_levels(mu: f64, alpha: f64, hbar: f64, n: usize) -> f64 {
    -mu * alpha * alpha / (2.0 * hbar * hbar * (n * n) as f64)
}

impl ModelSpec {
    pub fn build(&self) -> Result<ImplicitSpectralModel> {
        let all = (f64::NEG_INFINITY, f64::INFINITY);
        match self.clone() {
            ModelSpec::Oscillator { hbar_omega, n_max } => {
                if !(hbar_omega > 0.0) {
                    return Err(CohError::Config("oscillator needs hbar_omega > 0".into()));
                }
                Ok(ImplicitSpectralModel {
                    m: Box::new(|_| 1.0),
                    k: Box::new(|e| e),
                    families: vec![XiFamily::Discrete {
                        xi: Box::new(move |n, _| hbar_omega * (n as f64 + 0.5)),
                        n_min: 0,
                        n_max,
                        domain: all,
                    }],
                })
            }
            ModelSpec::Coulomb { mu, alpha, hbar, l, n_max } => {
                if !(mu > 0.0 && alpha > 0.0 && hbar > 0.0) {
                    return Err(CohError::Config("coulomb needs mu, alpha, hbar > 0".into()));
                }
                // r (p^2/2mu - E) = (hbar kappa / mu) K with K the tilted
                // compact generator (E < 0, spectrum n >= l + 1) or the
                // noncompact one (E > 0, spectrum R)
                Ok(ImplicitSpectralModel {
                    m: Box::new(move |e: f64| hbar * (2.0 * e.abs() / mu).sqrt()),
                    k: Box::new(move |_| alpha),
                    families: vec![
                        XiFamily::Discrete {
                            xi: Box::new(|n, _| n as f64),
                            n_min: l + 1,
                            n_max: n_max.max(l + 1),
                            domain: (f64::NEG_INFINITY, 0.0),
                        },
                        XiFamily::Continuous {
                            xi_min: Box::new(|_| f64::NEG_INFINITY),
                            xi_max: Box::new(|_| f64::INFINITY),
                            domain: (0.0, f64::INFINITY),
                        },
                    ],
                })
            }
            ModelSpec::Free { mass, c, p } => {
                if !(mass >= 0.0 && c > 0.0 && p.is_none_or(|p| p >= 0.0)) {
                    return Err(CohError::Config("free particle needs mass >= 0, c > 0, p >= 0".into()));
                }
                let fam = match p {
                    Some(p) => XiFamily::Discrete {
                        xi: Box::new(move |_, _| p * p),
                        n_min: 0,
                        n_max: 0,
                        domain: all,
                    },
                    None => XiFamily::Continuous {
                        xi_min: Box::new(|_| 0.0),
                        xi_max: Box::new(|_| f64::INFINITY),
                        domain: all,
                    },
                };
                Ok(ImplicitSpectralModel {
                    m: Box::new(|_| 1.0),
                    k: Box::new(move |e| (e / c) * (e / c) - (mass * c) * (mass * c)),
                    families: vec![fam],
                })
            }
            ModelSpec::Polynomial { m, k, discrete, continuous } => {
                if m.is_empty() || k.is_empty() {
                    return Err(CohError::Config("polynomial model needs m and k coefficients".into()));
                }
                let mut families: Vec<XiFamily> = Vec::new();
                if !discrete.is_empty() {
                    let n_max = discrete.len() - 1;
                    families.push(XiFamily::Discrete {
                        xi: Box::new(move |n, e| horner(&discrete[n], e)),
                        n_min: 0,
                        n_max,
                        domain: all,
                    });
                }
                if let Some([lo, hi]) = continuous {
                    families.push(XiFamily::Continuous {
                        xi_min: Box::new(move |e| horner(&lo, e)),
                        xi_max: Box::new(move |e| horner(&hi, e)),
                        domain: all,
                    });
                }
                Ok(ImplicitSpectralModel {
                    m: Box::new(move |e| horner(&m, e)),
                    k: Box::new(move |e| horner(&k, e)),
                    families,
                })
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectra::{solve_implicit_spectrum, ScanOptions};

    #[test]
    fn oscillator_levels() {
        let m = ModelSpec::Oscillator { hbar_omega: 1.0, n_max: 50 }.build().unwrap();
        let r = solve_implicit_spectrum(&m, (0.0, 10.0), ScanOptions::new(1e-12)).unwrap();
        assert_eq!(r.discrete.len(), 10);
        for (n, root) in r.discrete.iter().enumerate() {
            assert_eq!(root.n, n);
            assert!((root.energy - (n as f64 + 0.5)).abs() < 1e-12);
        }
    }

    #[test]
    fn coulomb_bound_and_scattering() {
        let m = ModelSpec::Coulomb { mu: 1.0, alpha: 1.0, hbar: 1.0, l: 1, n_max: 6 }.build().unwrap();
        let r = solve_implicit_spectrum(&m, (-1.0, 1.0), ScanOptions::new(1e-12)).unwrap();
        let ns: Vec<usize> = r.discrete.iter().map(|x| x.n).collect();
        assert_eq!(ns, vec![2, 3, 4, 5, 6]);
        for x in &r.discrete {
            assert!((x.energy - coulomb_levels(1.0, 1.0, 1.0, x.n)).abs() < 1e-12);
        }
        assert_eq!(r.continuous.len(), 1);
        assert!(r.continuous[0].0 < 1e-3 && r.continuous[0].1 == 1.0);
    }

    #[test]
    fn free_band_and_roots() {
        let band = ModelSpec::Free { mass: 1.0, c: 1.0, p: None }.build().unwrap();
        let r = solve_implicit_spectrum(&band, (-3.0, 3.0), ScanOptions::new(1e-12)).unwrap();
        assert_eq!(r.continuous.len(), 2);
        assert!((r.continuous[0].1 + 1.0).abs() < 1e-12 && (r.continuous[1].0 - 1.0).abs() < 1e-12);
        let roots = ModelSpec::Free { mass: 4.0, c: 1.0, p: Some(3.0) }.build().unwrap();
        let r = solve_implicit_spectrum(&roots, (-10.0, 10.0), ScanOptions::new(1e-10)).unwrap();
        let e: Vec<f64> = r.discrete.iter().map(|x| x.energy).collect();
        assert!((e[0] + 5.0).abs() < 1e-10 && (e[1] - 5.0).abs() < 1e-10);
    }

    #[test]
    fn json_round_trip() {
        let s = r#"{"model":"coulomb","l":2}"#;
        let m: ModelSpec = serde_json::from_str(s).unwrap();
        let back: ModelSpec = serde_json::from_str(&serde_json::to_string(&m).unwrap()).unwrap();
        assert_eq!(m, back);
        assert!(serde_json::from_str::<ModelSpec>(r#"{"model":"coulomb","z":2}"#).is_err());
    }
}
