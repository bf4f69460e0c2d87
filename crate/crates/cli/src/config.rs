use std::path::PathBuf;

use maserbat::loss::{BatchSlot, LossConfig, MULTI_BATCH_ETA, SINGLE_BATCH_ETA};
use maserbat::{coupling_value, BatchSpec, Coupling, OptOptions, ProtocolSpec, QubitParams};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const DEFAULT_STRIDE: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Simulate,
    Optimize,
    Sweep,
    Wigner,
    Chambers,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectiveKind {
    #[default]
    Charging,
    /// `(c − 0.3)² + (q − 0.3)²`, for checking the optimizer end to end.
    ConvexSelfTest,
}

/// A schedule entry. Simulation needs `{b, c, q}`. Optimization takes
/// `{b, count}` for `count` free batches of `b` qubits, or `{b, c, q}` for a
/// batch pinned to fixed parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BatchEntry {
    pub b: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub count: Option<usize>,
}

impl BatchEntry {
    pub fn fixed(b: usize, c: f64, q: f64) -> Self {
        Self { b, c: Some(c), q: Some(q), count: None }
    }

    pub fn free(b: usize, count: usize) -> Self {
        Self { b, c: None, q: None, count: Some(count) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LossSection {
    /// Ignored by sweeps, which take `lambdas`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    pub eta_fraction: f64,
    /// Defaults to the schedule length.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_qubits: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WignerSource {
    /// Final state of the configured schedule.
    Protocol,
    /// Fock state `|level⟩`.
    Fock,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WignerSection {
    pub source: WignerSource,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub level: Option<usize>,
    pub x: Axis,
    pub p: Axis,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub mode: Mode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coupling: Option<Coupling<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_c: Option<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub batches: Vec<BatchEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub loss: Option<LossSection>,
    #[serde(default)]
    pub objective: ObjectiveKind,
    #[serde(default)]
    pub optimizer: OptOptions,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub lambdas: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wigner: Option<WignerSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default = "default_stride")]
    pub stride: usize,
}

fn default_stride() -> usize {
    DEFAULT_STRIDE
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

impl RunConfig {
    /// Parse a config document, or the `config` member of an emitted `summary.json`.
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let value: serde_json::Value = serde_json::from_str(text).map_err(|e| invalid(format!("malformed JSON: {e}")))?;
        let doc = match value.get("config") {
            Some(inner) if value.get("mode").is_none() => inner.clone(),
            _ => value,
        };
        serde_json::from_value(doc).map_err(|e| invalid(e.to_string()))
    }

    pub fn coupling(&self) -> Result<Coupling<f64>, CliError> {
        let c = self.coupling.ok_or_else(|| invalid("`coupling` is required"))?;
        Ok(c.validated()?)
    }

    pub fn n_c(&self) -> Result<usize, CliError> {
        self.n_c.ok_or_else(|| invalid("`n_c` is required"))
    }

    /// The schedule as fixed batches; every entry needs `c` and `q`.
    pub fn protocol(&self) -> Result<ProtocolSpec<f64>, CliError> {
        if self.batches.is_empty() {
            return Err(invalid("`batches` must not be empty"));
        }
        let batches = self
            .batches
            .iter()
            .map(|e| match (e.c, e.q, e.count) {
                (Some(c), Some(q), None) => Ok(BatchSpec::new(e.b, c, q)),
                _ => Err(invalid("simulation batches take exactly {b, c, q}")),
            })
            .collect::<Result<Vec<_>, _>>()?;
        let spec = ProtocolSpec::new(self.coupling()?, self.n_c()?, batches).with_stride(self.stride);
        spec.validate()?;
        Ok(spec)
    }

    /// The optimized schedule: a slot per free batch and per pinned batch.
    pub fn layout(&self) -> Result<Vec<BatchSlot<f64>>, CliError> {
        if self.batches.is_empty() {
            return Err(invalid("`batches` must not be empty"));
        }
        let mut slots = Vec::new();
        for e in &self.batches {
            if e.b == 0 {
                return Err(invalid("batch size must be positive"));
            }
            match (e.c, e.q, e.count) {
                (None, None, Some(count)) if count > 0 => slots.extend(std::iter::repeat_n(BatchSlot { b: e.b, fixed: None }, count)),
                (Some(c), Some(q), None) => slots.push(BatchSlot {
                    b: e.b,
                    fixed: Some(QubitParams::new(c, q)?),
                }),
                _ => return Err(invalid("optimization batches take {b, count} with count >= 1, or {b, c, q}")),
            }
        }
        Ok(slots)
    }

    /// Loss settings with `lambda` substituted and `n_qubits` resolved.
    pub fn loss_config(&self, lambda: Option<f64>) -> Result<LossConfig<f64>, CliError> {
        let section = self.loss.ok_or_else(|| invalid("`loss` is required"))?;
        let lambda = lambda.or(section.lambda).ok_or_else(|| invalid("`loss.lambda` is required"))?;
        let total: usize = self.layout()?.iter().map(|s| s.b).sum();
        let n_qubits = section.n_qubits.unwrap_or(total);
        if n_qubits != total {
            return Err(invalid(format!("`loss.n_qubits` = {n_qubits} but the batches hold {total} qubits")));
        }
        let config = LossConfig {
            lambda,
            eta_fraction: section.eta_fraction,
            n_qubits,
        };
        config.validate()?;
        Ok(config)
    }

    /// Mode-dependent checks, run before any computation.
    pub fn validate(&self) -> Result<(), CliError> {
        if self.stride == 0 {
            return Err(invalid("`stride` must be positive"));
        }
        self.optimizer.validate()?;
        match self.mode {
            Mode::Simulate | Mode::Chambers => {
                self.protocol()?;
            }
            Mode::Optimize => match self.objective {
                ObjectiveKind::ConvexSelfTest => {}
                ObjectiveKind::Charging => {
                    self.charging_env()?;
                    self.loss_config(None)?;
                }
            },
            Mode::Sweep => {
                if self.objective != ObjectiveKind::Charging {
                    return Err(invalid("sweeps optimize the charging objective"));
                }
                if self.lambdas.is_empty() {
                    return Err(invalid("`lambdas` must not be empty"));
                }
                self.charging_env()?;
                for &l in &self.lambdas {
                    self.loss_config(Some(l))?;
                }
            }
            Mode::Wigner => {
                let w = self.wigner.ok_or_else(|| invalid("`wigner` is required"))?;
                for axis in [w.x, w.p] {
                    if axis.points == 0 || !(axis.min.is_finite() && axis.max.is_finite()) || (axis.points > 1 && axis.max <= axis.min) {
                        return Err(invalid("wigner axes need points >= 1 and min < max"));
                    }
                }
                match w.source {
                    WignerSource::Protocol => {
                        self.protocol()?;
                    }
                    WignerSource::Fock => {
                        let level = w.level.ok_or_else(|| invalid("`wigner.level` is required for a Fock source"))?;
                        if let Some(n_c) = self.n_c {
                            if level >= n_c {
                                return Err(invalid(format!("Fock level {level} is outside n_c = {n_c}")));
                            }
                        }
                    }
                }
            }
        }
        Ok(())
    }

    fn charging_env(&self) -> Result<(), CliError> {
        let coupling = self.coupling()?;
        let n_c = self.n_c()?;
        // A probe schedule checks the environment without the batch parameters.
        ProtocolSpec::new(coupling, n_c, vec![BatchSpec::new(1, 0.0, 0.0)]).with_stride(self.stride).validate()?;
        Ok(())
    }
}

pub const PRESETS: &[&str] = &[
    "fine-tuned-incoherent",
    "single-batch-lambda-1",
    "single-batch-lambda-10",
    "single-batch-lambda-100",
    "single-batch-lambda-1000",
    "single-batch-sweep",
    "single-batch-reference-lambda-1",
    "single-batch-reference-lambda-10",
    "single-batch-reference-lambda-100",
    "single-batch-reference-lambda-1000",
    "two-batch-lambda-1",
    "two-batch-lambda-10",
    "two-batch-lambda-100",
    "improved-strategy",
    "improved-strategy-optimize",
    "chambers-fine-tuned",
    "chambers-detuned",
    "wigner-vacuum",
    "wigner-plateau",
    "convex-self-test",
];

/// Reference optima `(λ, c, q)` for one batch of 1000 qubits.
const SINGLE_BATCH_OPTIMA: [(f64, f64, f64); 4] = [(1.0, 0.310, 0.145), (10.0, 0.390, 0.168), (100.0, 0.470, 0.183), (1000.0, 0.553, 0.190)];

fn fine_tuned() -> Coupling<f64> {
    coupling_value(1, 16, 0.0).expect("valid coupling")
}

fn detuned() -> Coupling<f64> {
    coupling_value(1, 16, -0.4).expect("valid coupling")
}

fn base(mode: Mode, coupling: Coupling<f64>, n_c: usize) -> RunConfig {
    RunConfig {
        mode,
        coupling: Some(coupling),
        n_c: Some(n_c),
        batches: Vec::new(),
        loss: None,
        objective: ObjectiveKind::Charging,
        optimizer: OptOptions::default(),
        lambdas: Vec::new(),
        wigner: None,
        output_dir: None,
        stride: DEFAULT_STRIDE,
    }
}

fn single_batch(mode: Mode, lambda: Option<f64>) -> RunConfig {
    RunConfig {
        batches: vec![BatchEntry::free(1000, 1)],
        loss: Some(LossSection {
            lambda,
            eta_fraction: SINGLE_BATCH_ETA,
            n_qubits: Some(1000),
        }),
        ..base(mode, detuned(), 150)
    }
}

fn grid(half: f64, points: usize) -> Axis {
    Axis { min: -half, max: half, points }
}

pub fn preset(name: &str) -> Option<RunConfig> {
    let lambda_suffix = |prefix: &str| name.strip_prefix(prefix).and_then(|s| s.parse::<f64>().ok());
    let cfg = match name {
        "fine-tuned-incoherent" => RunConfig {
            batches: vec![BatchEntry::fixed(100_000, 0.0, 0.0)],
            ..base(Mode::Simulate, fine_tuned(), 120)
        },
        "single-batch-sweep" => RunConfig {
            lambdas: SINGLE_BATCH_OPTIMA.iter().map(|o| o.0).collect(),
            ..single_batch(Mode::Sweep, None)
        },
        "improved-strategy" => RunConfig {
            batches: vec![BatchEntry::fixed(500, 0.0, 0.0), BatchEntry::fixed(99_500, 0.449, 0.208)],
            ..base(Mode::Simulate, detuned(), 150)
        },
        "improved-strategy-optimize" => RunConfig {
            batches: vec![BatchEntry::fixed(500, 0.0, 0.0), BatchEntry::free(1000, 1)],
            loss: Some(LossSection {
                lambda: Some(10.0),
                eta_fraction: MULTI_BATCH_ETA,
                n_qubits: Some(1500),
            }),
            ..base(Mode::Optimize, detuned(), 150)
        },
        "chambers-fine-tuned" => RunConfig {
            batches: vec![BatchEntry::fixed(10_000, 1.0, 0.5)],
            ..base(Mode::Chambers, fine_tuned(), 120)
        },
        "chambers-detuned" => RunConfig {
            batches: vec![BatchEntry::fixed(1000, 0.0, 0.0)],
            ..base(Mode::Chambers, detuned(), 150)
        },
        "wigner-vacuum" => RunConfig {
            wigner: Some(WignerSection {
                source: WignerSource::Fock,
                level: Some(0),
                x: grid(5.0, 101),
                p: grid(5.0, 101),
            }),
            ..base(Mode::Wigner, fine_tuned(), 120)
        },
        "wigner-plateau" => RunConfig {
            batches: vec![BatchEntry::fixed(100_000, 0.553, 0.190)],
            stride: 100_000,
            wigner: Some(WignerSection {
                source: WignerSource::Protocol,
                level: None,
                x: grid(8.0, 81),
                p: grid(8.0, 81),
            }),
            ..base(Mode::Wigner, detuned(), 120)
        },
        "convex-self-test" => RunConfig {
            objective: ObjectiveKind::ConvexSelfTest,
            coupling: None,
            n_c: None,
            ..base(Mode::Optimize, detuned(), 0)
        },
        _ => {
            if let Some(lambda) = lambda_suffix("single-batch-reference-lambda-") {
                let &(_, c, q) = SINGLE_BATCH_OPTIMA.iter().find(|o| o.0 == lambda)?;
                RunConfig {
                    batches: vec![BatchEntry::fixed(100_000, c, q)],
                    ..base(Mode::Simulate, detuned(), 150)
                }
            } else if let Some(lambda) = lambda_suffix("single-batch-lambda-") {
                if !SINGLE_BATCH_OPTIMA.iter().any(|o| o.0 == lambda) {
                    return None;
                }
                single_batch(Mode::Optimize, Some(lambda))
            } else {
                let lambda = lambda_suffix("two-batch-lambda-")?;
                if ![1.0, 10.0, 100.0].contains(&lambda) {
                    return None;
                }
                RunConfig {
                    batches: vec![BatchEntry::free(500, 2)],
                    loss: Some(LossSection {
                        lambda: Some(lambda),
                        eta_fraction: MULTI_BATCH_ETA,
                        n_qubits: Some(1000),
                    }),
                    ..base(Mode::Optimize, detuned(), 150)
                }
            }
        }
    };
    Some(cfg)
}
