use std::fmt::Write as _;

use maserbat::loss::{ChargingObjective, LossBreakdown, LossContext};
use maserbat::optimizer::{FnObjective, Objective};
use maserbat::protocol::io::{fmt_float, write_populations_csv, write_state_json, write_trajectory_csv};
use maserbat::{
    apply_collision, build_qubit_state, chamber_boundaries, linspace, multi_restart, populations, run_protocol, wigner, CollisionUnitary,
    DensityMatrix, MaserError, OptOptions, OptResult, Trajectory,
};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{Mode, ObjectiveKind, RunConfig, WignerSource};
use crate::error::CliError;

/// Files produced by a run, held in memory until the run has succeeded.
#[derive(Debug, Default)]
pub struct Artifacts {
    pub files: Vec<(String, Vec<u8>)>,
    pub report: String,
}

impl Artifacts {
    fn add(&mut self, name: &str, bytes: Vec<u8>) {
        self.files.push((name.to_string(), bytes));
    }

    fn add_json(&mut self, name: &str, value: &Value) {
        let mut bytes = serde_json::to_vec_pretty(value).expect("JSON values serialize");
        bytes.push(b'\n');
        self.add(name, bytes);
    }

    fn add_summary(&mut self, config: &RunConfig, results: Value) {
        self.add_json("summary.json", &json!({ "config": config, "results": results }));
    }
}

pub fn run(config: &RunConfig) -> Result<Artifacts, CliError> {
    config.validate()?;
    match config.mode {
        Mode::Simulate => simulate(config),
        Mode::Optimize => optimize(config),
        Mode::Sweep => sweep(config),
        Mode::Wigner => wigner_mode(config),
        Mode::Chambers => chambers(config),
    }
}

fn trajectory_csv(t: &Trajectory<f64>) -> Vec<u8> {
    let mut buf = Vec::new();
    write_trajectory_csv(t, &mut buf).expect("writing to memory");
    buf
}

fn trajectory_figures(t: &Trajectory<f64>) -> Value {
    json!({
        "collisions": t.collisions(),
        "final_energy": t.final_energy(),
        "final_ergotropy": t.final_ergotropy(),
        "final_purity": t.final_purity(),
        "edge_population_max": t.edge_peak,
    })
}

fn simulate(config: &RunConfig) -> Result<Artifacts, CliError> {
    let t = run_protocol(&config.protocol()?)?;
    let mut out = Artifacts::default();
    out.add("trajectory.csv", trajectory_csv(&t));
    let mut pops = Vec::new();
    write_populations_csv(&populations(&t.final_state), &mut pops)?;
    out.add("populations.csv", pops);
    let mut state = Vec::new();
    write_state_json(&t.final_state, &mut state)?;
    out.add("final_state.json", state);
    out.report = format!(
        "simulated {} collisions: energy {:.6}, ergotropy {:.6}, purity {:.6}",
        t.collisions(),
        t.final_energy(),
        t.final_ergotropy(),
        t.final_purity()
    );
    out.add_summary(config, trajectory_figures(&t));
    Ok(out)
}

struct ChargingOptimum {
    lambda: f64,
    result: OptResult<f64>,
    breakdown: LossBreakdown<f64>,
    trajectory: Trajectory<f64>,
    objective: ChargingObjective<f64>,
}

impl ChargingOptimum {
    fn to_json(&self) -> Value {
        let params = self.objective.params(&self.result.best_params).expect("optimizer returns full-length points");
        let batches: Vec<Value> = params
            .pairs
            .iter()
            .zip(&params.batch_sizes)
            .map(|(p, b)| json!({ "b": b, "c": p.c, "q": p.q }))
            .collect();
        json!({
            "lambda": self.lambda,
            "free_params": self.result.best_params,
            "batches": batches,
            "loss": self.result.best_loss,
            "charging_term": self.breakdown.charging_term,
            "penalty": self.breakdown.penalty,
            "ergotropy": self.breakdown.ergotropy,
            "c_bar": self.breakdown.c_bar,
            "q_bar": self.breakdown.q_bar,
            "reason": self.result.reason,
            "evaluations": self.result.evaluations,
            "loss_history": self.result.loss_history,
            "restart_losses": self.result.restart_losses,
            "restart_starts": self.result.restart_starts,
        })
    }
}

fn optimize_charging(config: &RunConfig, lambda: Option<f64>, opts: &OptOptions) -> Result<ChargingOptimum, CliError> {
    let loss = config.loss_config(lambda)?;
    let ctx = LossContext {
        coupling: config.coupling()?,
        n_c: config.n_c()?,
        config: loss,
    };
    let objective = ChargingObjective::new(ctx, config.layout()?)?;
    let result = multi_restart(&objective, opts)?;
    let (breakdown, trajectory) = objective.breakdown(&result.best_params)?;
    Ok(ChargingOptimum {
        lambda: loss.lambda,
        result,
        breakdown,
        trajectory,
        objective,
    })
}

fn optimize(config: &RunConfig) -> Result<Artifacts, CliError> {
    let mut out = Artifacts::default();
    match config.objective {
        ObjectiveKind::ConvexSelfTest => {
            let bowl = FnObjective::new(2, |p: &[f64]| -> maserbat::Result<f64> { Ok((p[0] - 0.3).powi(2) + (p[1] - 0.3).powi(2)) });
            let r = multi_restart(&bowl, &config.optimizer)?;
            let value = json!({
                "free_params": r.best_params,
                "loss": r.best_loss,
                "reason": r.reason,
                "evaluations": r.evaluations,
                "loss_history": r.loss_history,
                "restart_losses": r.restart_losses,
                "restart_starts": r.restart_starts,
            });
            out.report = format!("convex self-test optimum ({:.6}, {:.6})", r.best_params[0], r.best_params[1]);
            out.add_json("optimum.json", &value);
            out.add_summary(config, json!({ "free_params": r.best_params, "loss": r.best_loss, "dim": bowl.dim() }));
        }
        ObjectiveKind::Charging => {
            let opt = optimize_charging(config, None, &config.optimizer)?;
            out.report = format!(
                "optimum {:?}, loss {:.9}, ergotropy {:.6}",
                opt.result.best_params,
                opt.result.best_loss,
                opt.breakdown.ergotropy
            );
            let value = opt.to_json();
            out.add_json("optimum.json", &value);
            out.add("trajectory.csv", trajectory_csv(&opt.trajectory));
            let mut results = trajectory_figures(&opt.trajectory);
            results["loss"] = json!(opt.result.best_loss);
            results["free_params"] = json!(opt.result.best_params);
            out.add_summary(config, results);
        }
    }
    Ok(out)
}

fn sweep(config: &RunConfig) -> Result<Artifacts, CliError> {
    let optima = config
        .lambdas
        .par_iter()
        .map(|&l| optimize_charging(config, Some(l), &config.optimizer))
        .collect::<Result<Vec<_>, _>>()?;
    let dim = optima[0].result.best_params.len();
    let mut csv = String::from("lambda");
    for i in 1..=dim / 2 {
        write!(csv, ",c_{i},q_{i}").unwrap();
    }
    csv.push_str(",loss,final_ergotropy,penalty\n");
    for o in &optima {
        csv.push_str(&fmt_float(o.lambda));
        for p in &o.result.best_params {
            write!(csv, ",{}", fmt_float(*p)).unwrap();
        }
        writeln!(
            csv,
            ",{},{},{}",
            fmt_float(o.result.best_loss),
            fmt_float(o.trajectory.final_ergotropy()),
            fmt_float(o.breakdown.penalty)
        )
        .unwrap();
    }
    let mut out = Artifacts::default();
    out.report = format!("swept {} values of lambda", optima.len());
    out.add("sweep.csv", csv.into_bytes());
    out.add_summary(config, json!({ "optima": optima.iter().map(ChargingOptimum::to_json).collect::<Vec<_>>() }));
    Ok(out)
}

fn wigner_mode(config: &RunConfig) -> Result<Artifacts, CliError> {
    let section = config.wigner.expect("validated");
    let rho = match section.source {
        WignerSource::Protocol => run_protocol(&config.protocol()?)?.final_state,
        WignerSource::Fock => {
            let level = section.level.expect("validated");
            DensityMatrix::fock(config.n_c.unwrap_or(level + 1), level)
        }
    };
    let xs = linspace(section.x.min, section.x.max, section.x.points);
    let ps = linspace(section.p.min, section.p.max, section.p.points);
    let grid = wigner(&rho, &xs, &ps)?;
    let mut csv = String::new();
    for p in &ps {
        write!(csv, ",{}", fmt_float(*p)).unwrap();
    }
    csv.push('\n');
    for (x, row) in xs.iter().zip(&grid.values) {
        csv.push_str(&fmt_float(*x));
        for w in row {
            write!(csv, ",{}", fmt_float(*w)).unwrap();
        }
        csv.push('\n');
    }
    let norm = grid.riemann_sum();
    let (ex, ep, ew) = grid.extremum();
    let meta = json!({
        "x": section.x,
        "p": section.p,
        "state_dim": rho.dim(),
        "normalization": norm,
        "normalization_ok": (norm - 1.0).abs() <= 1e-3,
        "max_abs": grid.max_abs(),
        "extremum": { "x": ex, "p": ep, "w": ew },
    });
    let mut out = Artifacts::default();
    out.report = format!("Wigner grid {}x{}: normalization {norm:.6}, extremum {ew:.6} at ({ex}, {ep})", xs.len(), ps.len());
    out.add("wigner.csv", csv.into_bytes());
    out.add_json("wigner_meta.json", &meta);
    out.add_summary(config, meta);
    Ok(out)
}

/// Population above which a fine-tuned run counts as having left its chamber.
pub const TRAPPING_TOLERANCE: f64 = 1e-10;

#[derive(Serialize)]
struct ChamberLeak {
    chamber: usize,
    lower: usize,
    upper: usize,
    max_population_above: f64,
}

fn chambers(config: &RunConfig) -> Result<Artifacts, CliError> {
    let spec = config.protocol()?;
    let unitary = CollisionUnitary::from_coupling(&spec.coupling, spec.n_c)?;
    // The last range is clipped by the truncation, so nothing lies above it.
    let mut bounds = chamber_boundaries(spec.coupling.m, spec.n_c);
    bounds.pop();
    let mut worst = vec![0.0f64; bounds.len()];
    let mut series = String::from("k");
    for (_, hi) in &bounds {
        write!(series, ",above_{hi}").unwrap();
    }
    series.push('\n');
    let mut rho = DensityMatrix::vacuum(spec.n_c);
    let mut k = 0usize;
    let record = |k: usize, rho: &DensityMatrix<f64>, worst: &mut [f64], series: &mut String| {
        let pops = populations(rho);
        let above: Vec<f64> = bounds.iter().map(|&(_, hi)| pops.tail(hi + 1)).collect();
        for (w, a) in worst.iter_mut().zip(&above) {
            *w = w.max(*a);
        }
        if k.is_multiple_of(spec.metric_stride) || k == spec.total_collisions() {
            series.push_str(&k.to_string());
            for a in &above {
                write!(series, ",{}", fmt_float(*a)).unwrap();
            }
            series.push('\n');
        }
    };
    record(0, &rho, &mut worst, &mut series);
    for batch in &spec.batches {
        let qubit = build_qubit_state(batch.params)?;
        for _ in 0..batch.b {
            k += 1;
            rho = apply_collision(&rho, &qubit, &unitary).map_err(|e| match e {
                MaserError::TruncationOverflow { population, .. } => MaserError::TruncationOverflow {
                    collision: Some(k),
                    population,
                },
                other => other,
            })?;
            record(k, &rho, &mut worst, &mut series);
        }
    }
    let leaks: Vec<ChamberLeak> = bounds
        .iter()
        .zip(&worst)
        .enumerate()
        .map(|(i, (&(lower, upper), &w))| ChamberLeak {
            chamber: i,
            lower,
            upper,
            max_population_above: w,
        })
        .collect();
    let first = leaks.first().map(|l| l.max_population_above).unwrap_or(0.0);
    let trapped = first <= TRAPPING_TOLERANCE;
    let mut csv = String::from("chamber,lower,upper,max_population_above\n");
    for l in &leaks {
        writeln!(csv, "{},{},{},{}", l.chamber, l.lower, l.upper, fmt_float(l.max_population_above)).unwrap();
    }
    let fine_tuned = spec.coupling.is_fine_tuned();
    if fine_tuned && !trapped {
        return Err(CliError::Trapping(first));
    }
    let mut out = Artifacts::default();
    out.report = format!(
        "max population above the first chamber: {first:.3e} ({})",
        if trapped { "trapped" } else { "leaked" }
    );
    out.add("chambers.csv", csv.into_bytes());
    out.add("leakage.csv", series.into_bytes());
    out.add_summary(
        config,
        json!({
            "fine_tuned": fine_tuned,
            "trapped": trapped,
            "trapping_tolerance": TRAPPING_TOLERANCE,
            "chambers": leaks,
            "final_energy": maserbat::energy(&rho),
        }),
    );
    Ok(out)
}
