//! Run configuration: one JSON object per run, tagged by `"command"`.

use serde::{Deserialize, Serialize};

use crate::dynamics::{EnergySpec, KickedTop};
use crate::io::JsonMatrix;
use crate::kernel::causal::{CausalSection, Independence, LatticeKernel};
use crate::kernel::{Point, SpaceDescriptor};
use crate::lie::AlgebraSpec;
use crate::quantum_space::QuantumBasisJson;
use crate::spectra::ModelSpec;

fn d_samples_check() -> usize {
    50
}
fn d_samples_basis() -> usize {
    20
}
fn d_samples_traj() -> usize {
    101
}
fn d_psd_tol() -> f64 {
    1e-8
}
fn d_trunc_tol() -> f64 {
    1e-10
}
fn d_quant_tol() -> f64 {
    1e-8
}
fn d_step() -> f64 {
    1e-3
}
fn d_one() -> f64 {
    1.0
}
fn d_rtol() -> f64 {
    1e-9
}
fn d_rtol_lyap() -> f64 {
    1e-8
}
fn d_rtol_lie() -> f64 {
    1e-10
}
fn d_spec_tol() -> f64 {
    1e-10
}
fn d_scan() -> usize {
    crate::spectra::DEFAULT_SCAN_POINTS
}
fn d_causal_tol() -> f64 {
    1e-10
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum QuantizeMode {
    /// `Gamma(A)` of a linear coherent map.
    #[default]
    Map,
    /// `dGamma(X)` of the group `exp(i s X)`.
    Generator,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LyapunovSystem {
    KickedTop {
        two_j: u32,
        k: f64,
        p: f64,
        z0: Point,
        kicks: usize,
    },
    Autonomous {
        space: SpaceDescriptor,
        energy: EnergySpec,
        z0: Point,
        t_total: f64,
        #[serde(default = "d_one")]
        renorm_dt: f64,
        #[serde(default = "d_one")]
        hbar: f64,
    },
}

impl LyapunovSystem {
    pub fn kicked_top(&self) -> Option<KickedTop> {
        match self {
            LyapunovSystem::KickedTop { two_j, k, p, .. } => Some(KickedTop { two_j: *two_j, k: *k, p: *p }),
            _ => None,
        }
    }
}

/// Initial state of a Lie-state evolution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum StateSpec {
    Rho(JsonMatrix),
    Vector(Vec<[f64; 2]>),
    Probabilities(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ObservableSpec {
    /// A basis element by name.
    Basis(String),
    Combination { name: String, coeffs: Vec<[f64; 2]> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Command {
    KernelEval {
        space: SpaceDescriptor,
        z: Point,
        z2: Point,
    },
    KernelGram {
        space: SpaceDescriptor,
        points: Vec<Point>,
    },
    KernelCheck {
        space: SpaceDescriptor,
        #[serde(default)]
        points: Option<Vec<Point>>,
        #[serde(default = "d_samples_check")]
        samples: usize,
        #[serde(default = "d_psd_tol")]
        tol: f64,
    },
    QspaceBuild {
        space: SpaceDescriptor,
        #[serde(default)]
        points: Option<Vec<Point>>,
        #[serde(default = "d_samples_basis")]
        samples: usize,
        #[serde(default = "d_trunc_tol")]
        tol: f64,
    },
    Quantize {
        basis: QuantumBasisJson,
        matrix: JsonMatrix,
        #[serde(default)]
        mode: QuantizeMode,
        #[serde(default = "d_step")]
        step: f64,
        #[serde(default = "d_quant_tol")]
        tol: f64,
    },
    DynCoherent {
        space: SpaceDescriptor,
        z0: Point,
        hamiltonian: JsonMatrix,
        #[serde(default = "d_one")]
        hbar: f64,
        tspan: [f64; 2],
        #[serde(default = "d_samples_traj")]
        samples: usize,
        #[serde(default = "d_rtol")]
        rtol: f64,
    },
    DynTdvp {
        space: SpaceDescriptor,
        energy: EnergySpec,
        z0: Point,
        #[serde(default = "d_one")]
        hbar: f64,
        tspan: [f64; 2],
        #[serde(default = "d_samples_traj")]
        samples: usize,
        #[serde(default = "d_rtol")]
        rtol: f64,
    },
    DynLyapunov {
        system: LyapunovSystem,
        #[serde(default = "d_rtol_lyap")]
        rtol: f64,
    },
    SpecSolve {
        model: ModelSpec,
        interval: [f64; 2],
        #[serde(default = "d_spec_tol")]
        tol: f64,
        #[serde(default = "d_scan")]
        points: usize,
    },
    LieEvolve {
        algebra: AlgebraSpec,
        hamiltonian: Vec<[f64; 2]>,
        state: StateSpec,
        observables: Vec<ObservableSpec>,
        tspan: [f64; 2],
        #[serde(default = "d_samples_traj")]
        samples: usize,
        #[serde(default = "d_rtol_lie")]
        rtol: f64,
    },
    CausalCheck {
        kernel: LatticeKernel,
        independence: Independence,
        #[serde(default)]
        normal: Vec<(CausalSection, CausalSection)>,
        #[serde(default)]
        causal: Vec<(CausalSection, CausalSection, CausalSection)>,
        #[serde(default = "d_causal_tol")]
        tol: f64,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::KernelEval { .. } => "kernel-eval",
            Command::KernelGram { .. } => "kernel-gram",
            Command::KernelCheck { .. } => "kernel-check",
            Command::QspaceBuild { .. } => "qspace-build",
            Command::Quantize { .. } => "quantize",
            Command::DynCoherent { .. } => "dyn-coherent",
            Command::DynTdvp { .. } => "dyn-tdvp",
            Command::DynLyapunov { .. } => "dyn-lyapunov",
            Command::SpecSolve { .. } => "spec-solve",
            Command::LieEvolve { .. } => "lie-evolve",
            Command::CausalCheck { .. } => "causal-check",
        }
    }

    pub fn default_format(&self) -> Format {
        match self {
            Command::KernelGram { .. }
            | Command::DynCoherent { .. }
            | Command::DynTdvp { .. }
            | Command::DynLyapunov { .. }
            | Command::SpecSolve { .. }
            | Command::LieEvolve { .. } => Format::Csv,
            _ => Format::Json,
        }
    }

    pub fn supports_csv(&self) -> bool {
        self.default_format() == Format::Csv
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default)]
    pub path: Option<String>,
    #[serde(default)]
    pub format: Option<Format>,
    #[serde(default)]
    pub report: Option<String>,
}

/// A full run: the command plus output, seed and thread settings.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub output: OutputSpec,
    pub seed: u64,
    pub threads: usize,
}


impl RunConfig {
    /// Parses a config object; common keys are split off before the
    /// command itself is decoded.
    pub fn from_value(mut v: serde_json::Value) -> Result<Self, String> {
        let obj = v.as_object_mut().ok_or("config must be a JSON object")?;
        let output = match obj.remove("output") {
            Some(o) => serde_json::from_value(o).map_err(|e| format!("output: {e}"))?,
            None => OutputSpec {
                path: None,
                format: None,
                report: None,
            },
        };
        let seed = match obj.remove("seed") {
            Some(s) => serde_json::from_value(s).map_err(|e| format!("seed: {e}"))?,
            None => 0,
        };
        let threads: usize = match obj.remove("threads") {
            Some(s) => serde_json::from_value(s).map_err(|e| format!("threads: {e}"))?,
            None => 1,
        };
        if threads == 0 {
            return Err("threads must be at least 1".into());
        }
        let command: Command = serde_json::from_value(v).map_err(|e| e.to_string())?;
        if output.format == Some(Format::Csv) && !command.supports_csv() {
            return Err(format!("{} has no CSV payload", command.name()));
        }
        Ok(RunConfig {
            command,
            output,
            seed,
            threads,
        })
    }

    /// Full config with every default filled in.
    pub fn to_value(&self) -> serde_json::Value {
        let mut v = serde_json::to_value(&self.command).expect("config serializes");
        let obj = v.as_object_mut().expect("command is an object");
        obj.insert("output".into(), serde_json::to_value(&self.output).expect("output serializes"));
        obj.insert("seed".into(), self.seed.into());
        obj.insert("threads".into(), self.threads.into());
        v
    }

    pub fn format(&self) -> Format {
        self.output.format.unwrap_or(self.command.default_format())
    }
}

