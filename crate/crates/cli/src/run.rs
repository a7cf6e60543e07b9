//! One pipeline per subcommand. Each returns a serializable result; rendering and
//! exit codes are the caller's business.

use rayon::prelude::*;
use serde::Serialize;
use symtest_core::group::{group_projector, projector_rank};
use symtest_core::symcore::{
    acceptance_probability_choi, acceptance_probability_series, acceptance_probability_trace,
    gentle_measurement_check, normalized_commutator_norm, verdict, GentleCheck,
};
use symtest_core::{
    close_generators_with_tol, derive_seed, optimize_with_restarts, sample_shots, simulate_exact,
    trotter_error, variational_lower_bounds, BoundSet, CircuitInstance, Error, GroupRep,
    Hamiltonian, Input, Mode, OptimizerConfig, RestartSummary, ShotRecord, SymmetryReport,
    ReportOptions, TrotterPlan, Verdict,
};

use crate::config::{Method, RunConfig};
use crate::output::{format_opt, format_sci, to_csv};

/// Tolerance for agreement between the trace, Choi and circuit routes.
pub const CONSISTENCY_TOL: f64 = 1e-9;

pub const SWEEP_HEADER: [&str; 11] = [
    "t",
    "p_trace",
    "p_choi",
    "p_series",
    "series_remainder",
    "p_circuit",
    "shot_estimate",
    "shot_stderr",
    "commutator_norm_C",
    "tau",
    "verdict",
];

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Core(#[from] Error),
    #[error("{0}")]
    Usage(String),
    #[error("cannot build worker pool: {0}")]
    Pool(String),
}

pub struct Prepared {
    pub hamiltonian: Hamiltonian,
    pub rep: GroupRep,
}

pub fn prepare(config: &RunConfig) -> Result<Prepared, RunError> {
    let hamiltonian = config.hamiltonian.realize()?;
    let rep = close_generators_with_tol(
        &config.generators,
        hamiltonian.dim(),
        config.max_order,
        config.closure_tol,
    )?;
    Ok(Prepared { hamiltonian, rep })
}

#[derive(Clone, Debug, Serialize)]
pub struct GroupSummary {
    pub dim: usize,
    pub generators: usize,
    pub order: usize,
    pub closed: bool,
    pub inverses: bool,
    pub unitary: bool,
    pub phase_exact: bool,
    pub projector_rank: usize,
}

pub fn run_group(config: &RunConfig) -> Result<GroupSummary, RunError> {
    let p = prepare(config)?;
    let rep = &p.rep;
    Ok(GroupSummary {
        dim: rep.dim(),
        generators: config.generators.len(),
        order: rep.order(),
        closed: rep.verify_closure(),
        inverses: rep.verify_inverses(),
        unitary: rep.verify_unitarity(),
        phase_exact: rep.phase_exact(),
        projector_rank: projector_rank(&group_projector(rep)),
    })
}

impl GroupSummary {
    pub fn csv(&self) -> String {
        let header = [
            "dim", "generators", "order", "closed", "inverses", "unitary", "phase_exact", "projector_rank",
        ];
        let row = vec![
            self.dim.to_string(),
            self.generators.to_string(),
            self.order.to_string(),
            self.closed.to_string(),
            self.inverses.to_string(),
            self.unitary.to_string(),
            self.phase_exact.to_string(),
            self.projector_rank.to_string(),
        ];
        to_csv(&header, &[row])
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct VariationalPoint {
    pub best: f64,
    pub oracle: f64,
    pub gap: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepRow {
    pub t: f64,
    pub p_trace: Option<f64>,
    pub p_choi: Option<f64>,
    pub p_series: Option<f64>,
    pub series_remainder: Option<f64>,
    pub p_circuit: Option<f64>,
    pub shot_estimate: Option<f64>,
    pub shot_stderr: Option<f64>,
    pub commutator_norm_c: f64,
    pub tau: f64,
    pub verdict: Verdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub variational: Option<VariationalPoint>,
}

impl SweepRow {
    pub fn fields(&self) -> Vec<String> {
        vec![
            format_sci(self.t),
            format_opt(self.p_trace),
            format_opt(self.p_choi),
            format_opt(self.p_series),
            format_opt(self.series_remainder),
            format_opt(self.p_circuit),
            format_opt(self.shot_estimate),
            format_opt(self.shot_stderr),
            format_sci(self.commutator_norm_c),
            format_sci(self.tau),
            self.verdict.as_str().to_string(),
        ]
    }

    /// Pairwise disagreements among the trace, Choi and circuit values.
    fn inconsistencies(&self) -> Vec<String> {
        let named = [("p_trace", self.p_trace), ("p_choi", self.p_choi), ("p_circuit", self.p_circuit)];
        let present: Vec<(&str, f64)> = named.iter().filter_map(|&(n, v)| v.map(|v| (n, v))).collect();
        let mut out = Vec::new();
        for i in 0..present.len() {
            for j in i + 1..present.len() {
                let diff = (present[i].1 - present[j].1).abs();
                if diff.is_nan() || diff > CONSISTENCY_TOL {
                    out.push(format!(
                        "t={}: {} and {} differ by {}",
                        format_sci(self.t),
                        present[i].0,
                        present[j].0,
                        format_sci(diff)
                    ));
                }
            }
        }
        out
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepResult {
    pub group_order: usize,
    pub seed: u64,
    pub rows: Vec<SweepRow>,
    pub diagnostics: Vec<String>,
}

impl SweepResult {
    pub fn consistent(&self) -> bool {
        self.diagnostics.is_empty()
    }

    pub fn csv(&self) -> String {
        let rows: Vec<Vec<String>> = self.rows.iter().map(SweepRow::fields).collect();
        to_csv(&SWEEP_HEADER, &rows)
    }
}

fn optimizer_config(config: &RunConfig) -> OptimizerConfig {
    OptimizerConfig { max_iters: config.variational.max_iters, ..OptimizerConfig::default() }
}

/// Shots at time index `k` use `derive_seed(seed, 2k)`; variational restarts use `derive_seed(seed, 2k + 1)`.
fn evaluate_row(config: &RunConfig, p: &Prepared, index: usize, t: f64) -> Result<SweepRow, RunError> {
    let (h, rep) = (&p.hamiltonian, &p.rep);
    let c = normalized_commutator_norm(h, rep)?;
    let p_trace = config
        .has(Method::Trace)
        .then(|| acceptance_probability_trace(h, rep, t).map(|p| p.raw()))
        .transpose()?;
    let p_choi = config
        .has(Method::Choi)
        .then(|| acceptance_probability_choi(h, rep, t).map(|p| p.raw()))
        .transpose()?;
    let series = config
        .has(Method::Series)
        .then(|| acceptance_probability_series(h, rep, t, config.series_order))
        .transpose()?;
    let instance = CircuitInstance::new(Mode::Mixed, h, rep, t, Input::MaximallyMixed);
    let p_circuit = config
        .has(Method::Circuit)
        .then(|| simulate_exact(&instance))
        .transpose()?;
    let shots: Option<ShotRecord> = config
        .has(Method::Shots)
        .then(|| sample_shots(&instance, config.shots, derive_seed(config.seed, 2 * index as u64)))
        .transpose()?;
    let variational = if config.has(Method::Variational) {
        let s = optimize_with_restarts(
            h,
            rep,
            t,
            config.hamiltonian.qubits,
            config.variational.layers,
            config.variational.restarts,
            derive_seed(config.seed, 2 * index as u64 + 1),
            &optimizer_config(config),
        )?;
        Some(VariationalPoint {
            best: s.best.final_value,
            oracle: s.best.oracle_optimum,
            gap: s.best.gap,
        })
    } else {
        None
    };
    let reference = match p_trace.or(p_choi).or(p_circuit) {
        Some(v) => v,
        None => acceptance_probability_trace(h, rep, t)?.raw(),
    };
    Ok(SweepRow {
        t,
        p_trace,
        p_choi,
        p_series: series.map(|s| s.value),
        series_remainder: series.map(|s| s.remainder),
        p_circuit,
        shot_estimate: shots.map(|s| s.estimate),
        shot_stderr: shots.map(|s| s.std_error),
        commutator_norm_c: c,
        tau: h.spectral_norm()? * t.abs(),
        verdict: verdict(c, reference),
        variational,
    })
}

fn pool(jobs: Option<usize>) -> Result<rayon::ThreadPool, RunError> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(n) = jobs {
        b = b.num_threads(n);
    }
    b.build().map_err(|e| RunError::Pool(e.to_string()))
}

/// Evaluates every requested method at every time. Rows come back in time order
/// whatever the worker count.
pub fn run_sweep(config: &RunConfig, jobs: Option<usize>) -> Result<SweepResult, RunError> {
    if config.times.is_empty() {
        return Err(RunError::Usage("sweep needs a non-empty `times` entry".into()));
    }
    let p = prepare(config)?;
    let rows = pool(jobs)?.install(|| {
        config
            .times
            .par_iter()
            .enumerate()
            .map(|(i, &t)| evaluate_row(config, &p, i, t))
            .collect::<Result<Vec<_>, _>>()
    })?;
    let diagnostics = rows.iter().flat_map(SweepRow::inconsistencies).collect();
    Ok(SweepResult { group_order: p.rep.order(), seed: config.seed, rows, diagnostics })
}

#[derive(Clone, Debug, Serialize)]
pub struct TestReport {
    pub group_order: usize,
    pub report: SymmetryReport,
    pub p_circuit_mixed: f64,
    pub p_circuit_choi: f64,
    pub gentle: GentleCheck,
    pub bounds: BoundSet,
    pub row: SweepRow,
    pub diagnostics: Vec<String>,
}

/// Full report at a single time, with every route evaluated.
pub fn run_test(config: &RunConfig, t: f64, jobs: Option<usize>) -> Result<TestReport, RunError> {
    let p = prepare(config)?;
    let (h, rep) = (&p.hamiltonian, &p.rep);
    pool(jobs)?.install(|| {
        let opts = ReportOptions { series_order: Some(config.series_order), ..Default::default() };
        let report = SymmetryReport::evaluate(h, rep, t, &opts)?;
        let mixed = simulate_exact(&CircuitInstance::new(Mode::Mixed, h, rep, t, Input::MaximallyMixed))?;
        let choi = simulate_exact(&CircuitInstance::new(Mode::Choi, h, rep, t, Input::MaximallyMixed))?;
        let row = evaluate_row(config, &p, 0, t)?;
        let mut diagnostics = row.inconsistencies();
        let reference = report.p_trace.map(|p| p.raw()).unwrap_or(mixed);
        for (name, value) in [("p_circuit_mixed", mixed), ("p_circuit_choi", choi)] {
            let diff = (value - reference).abs();
            if diff.is_nan() || diff > CONSISTENCY_TOL {
                diagnostics.push(format!("t={}: p_trace and {name} differ by {}", format_sci(t), format_sci(diff)));
            }
        }
        Ok(TestReport {
            group_order: rep.order(),
            gentle: gentle_measurement_check(h, rep, t)?,
            bounds: variational_lower_bounds(h, rep, t, config.series_order)?,
            report,
            p_circuit_mixed: mixed,
            p_circuit_choi: choi,
            row,
            diagnostics,
        })
    })
}

impl TestReport {
    pub fn row_fields(&self) -> Vec<String> {
        self.row.fields()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct VariationalReport {
    pub t: f64,
    pub qubits: usize,
    pub layers: usize,
    pub summary: RestartSummary,
    pub bounds: BoundSet,
}

impl VariationalReport {
    pub fn csv(&self) -> String {
        let header = ["restart", "final_value", "oracle_optimum", "gap"];
        let oracle = self.summary.best.oracle_optimum;
        let rows: Vec<Vec<String>> = self
            .summary
            .finals
            .iter()
            .enumerate()
            .map(|(i, &f)| vec![i.to_string(), format_sci(f), format_sci(oracle), format_sci(oracle - f)])
            .collect();
        to_csv(&header, &rows)
    }
}

pub fn run_variational(config: &RunConfig, t: f64, jobs: Option<usize>) -> Result<VariationalReport, RunError> {
    let p = prepare(config)?;
    let (h, rep) = (&p.hamiltonian, &p.rep);
    pool(jobs)?.install(|| {
        let summary = optimize_with_restarts(
            h,
            rep,
            t,
            config.hamiltonian.qubits,
            config.variational.layers,
            config.variational.restarts,
            config.seed,
            &optimizer_config(config),
        )?;
        Ok(VariationalReport {
            t,
            qubits: config.hamiltonian.qubits,
            layers: config.variational.layers,
            bounds: variational_lower_bounds(h, rep, t, config.series_order)?,
            summary,
        })
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct TrotterRow {
    pub r: usize,
    pub trotter_error: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct TrotterTable {
    pub t: f64,
    pub rows: Vec<TrotterRow>,
}

impl TrotterTable {
    pub fn csv(&self) -> String {
        let rows: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|r| vec![r.r.to_string(), format_sci(r.trotter_error)])
            .collect();
        to_csv(&["r", "trotter_error"], &rows)
    }
}

pub fn run_trotter(config: &RunConfig, t: f64) -> Result<TrotterTable, RunError> {
    let rows = config
        .trotter_steps
        .iter()
        .map(|&r| {
            Ok(TrotterRow { r, trotter_error: trotter_error(&config.hamiltonian, t, TrotterPlan::new(r)?)? })
        })
        .collect::<Result<Vec<_>, Error>>()?;
    Ok(TrotterTable { t, rows })
}
