use std::time::Instant;

use rayon::prelude::*;

use twosphere::dynamics::noslip_lower_bound_fit;
use twosphere::validation::{check_names, run_selected, Fault};
use twosphere::{
    simulate, BoundaryCondition, DragModel, Mode, Provenance, SwimmerScenario, Termination,
};

use crate::config::{ConfigError, ModeKind, RunConfig, Spacing, SweepKind};
use crate::error::CliError;
use crate::output::{csv_writer, num, opt_num, output_path, write_text};
use crate::report::RunReport;

pub const DRAG_HEADER: [&str; 4] = ["h", "kappa_pass", "kappa_prop", "provenance"];
pub const TRAJECTORY_HEADER: [&str; 5] = ["t", "h", "hdot", "kappa_pass", "kappa_prop"];
pub const SWEEP_HEADER: [&str; 15] = [
    "index",
    "lambda",
    "beta",
    "h0",
    "s0",
    "f_p",
    "m",
    "kappa_pass",
    "kappa_prop",
    "provenance",
    "termination",
    "t_coll",
    "min_h",
    "status",
    "error",
];

pub const THREADS_ENV: &str = "TWOSPHERE_THREADS";

fn model(config: &RunConfig) -> DragModel {
    DragModel::new(config.series_truncation())
}

pub fn gap_samples(h_min: f64, h_max: f64, points: usize, spacing: Spacing) -> Vec<f64> {
    let last = (points - 1) as f64;
    (0..points)
        .map(|i| match i {
            0 => h_min,
            i if i == points - 1 => h_max,
            i => {
                let u = i as f64 / last;
                match spacing {
                    Spacing::Log => h_min * (h_max / h_min).powf(u),
                    Spacing::Linear => h_min + (h_max - h_min) * u,
                }
            }
        })
        .collect()
}

pub fn drag(config: &RunConfig) -> Result<String, CliError> {
    let model = model(config);
    let bc = config.boundary();
    let d = &config.drag;
    let rows = gap_samples(d.h_min, d.h_max, d.points as usize, d.spacing)
        .into_iter()
        .map(|h| model.coefficients(h, d.lambda, bc))
        .collect::<Result<Vec<_>, _>>()?;

    let path = output_path(&config.output_dir, "drag.csv")?;
    let mut w = csv_writer(&path, &DRAG_HEADER)?;
    for c in &rows {
        w.write_record([
            num(c.h),
            num(c.kappa_pass),
            num(c.kappa_prop),
            c.provenance.as_str().into(),
        ])
        .map_err(|e| CliError::io(&path, e))?;
    }
    w.flush().map_err(|e| CliError::io(&path, e))?;
    Ok(format!(
        "wrote {} rows ({bc}, lambda = {}) to {}",
        rows.len(),
        d.lambda,
        path.display()
    ))
}

fn provenance_at(model: &DragModel, sc: &SwimmerScenario, h: f64) -> twosphere::Result<Provenance> {
    // coefficients only lose exactness as the gap shrinks, so the smallest gap decides
    match sc.mode {
        Mode::ActiveSwimmers => model
            .coefficients(h, sc.lambda, sc.bc)
            .map(|c| c.provenance),
        Mode::PassiveForced { .. } => model.kappa_pass_with_provenance(h, sc.bc).map(|(_, p)| p),
    }
}

pub fn simulate_run(config: &RunConfig) -> Result<RunReport, CliError> {
    let start = Instant::now();
    let model = model(config);
    let sc = config.swimmer_scenario();
    let traj = simulate(
        &model,
        &sc,
        config.integrator.t_max,
        config.h_floor(),
        &config.integrator_options(),
    )?;

    let mut report = RunReport::new(config, traj.termination);
    report.min_h = traj.min_h();
    report.provenance = provenance_at(&model, &sc, report.min_h)?;
    report.steps = traj.stats.accepted;
    if sc.bc == BoundaryCondition::NoSlip && traj.termination == Termination::HorizonReached {
        // a trajectory that turns back has no exponential tail to fit
        report.fit = noslip_lower_bound_fit(&traj).ok().map(|f| (f.c1, f.c2));
    }

    let path = output_path(&config.output_dir, "trajectory.csv")?;
    let mut w = csv_writer(&path, &TRAJECTORY_HEADER)?;
    for p in &traj.points {
        w.write_record([
            num(p.t),
            num(p.h),
            num(p.hdot),
            num(p.kappa_pass),
            num(p.kappa_prop),
        ])
        .map_err(|e| CliError::io(&path, e))?;
    }
    w.flush().map_err(|e| CliError::io(&path, e))?;

    report.wall_time = start.elapsed();
    write_text(
        &output_path(&config.output_dir, "report.toml")?,
        &report.to_string(),
    )?;
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPoint {
    pub lambda: f64,
    pub beta: f64,
    pub h0: f64,
    pub s0: f64,
    /// Propulsion force, or the external force in passive mode.
    pub f_p: f64,
    pub m: f64,
}

#[derive(Debug, Clone, Default)]
struct SweepRow {
    kappa_pass: Option<f64>,
    kappa_prop: Option<f64>,
    provenance: Option<Provenance>,
    termination: Option<Termination>,
    min_h: Option<f64>,
    error: Option<String>,
}

/// Cartesian product of the sweep axes, last axis varying fastest.
pub fn sweep_grid(config: &RunConfig) -> Result<Vec<GridPoint>, ConfigError> {
    let missing = || ConfigError {
        key: Some("sweep".into()),
        line: None,
        message: "sweep needs at least one axis (lambda, beta, h0, s0, f_p, m)".into(),
    };
    let sw = config.sweep.as_ref().ok_or_else(missing)?;
    let s = &config.scenario;
    let force = match s.mode {
        ModeKind::Active => s.f_p,
        ModeKind::Passive => s.f_ext,
    };
    let axes = [
        (&sw.lambda, s.lambda),
        (&sw.beta, s.beta),
        (&sw.h0, s.h0),
        (&sw.s0, s.s0),
        (&sw.f_p, force),
        (&sw.m, s.m),
    ];
    if axes.iter().all(|(a, _)| a.is_none()) {
        return Err(missing());
    }
    let values: Vec<Vec<f64>> = axes
        .iter()
        .map(|(a, base)| a.as_ref().cloned().unwrap_or_else(|| vec![*base]))
        .collect();
    let mut grid = vec![Vec::new()];
    for axis in &values {
        grid = grid
            .into_iter()
            .flat_map(|prefix: Vec<f64>| {
                axis.iter().map(move |&v| {
                    let mut p = prefix.clone();
                    p.push(v);
                    p
                })
            })
            .collect();
    }
    Ok(grid
        .into_iter()
        .map(|p| GridPoint {
            lambda: p[0],
            beta: p[1],
            h0: p[2],
            s0: p[3],
            f_p: p[4],
            m: p[5],
        })
        .collect())
}

fn sweep_point(config: &RunConfig, model: &DragModel, kind: SweepKind, g: &GridPoint) -> SweepRow {
    let mut row = SweepRow::default();
    let result = (|| -> twosphere::Result<()> {
        let bc = BoundaryCondition::navier(g.beta)?;
        let mut s = config.scenario.clone();
        (s.lambda, s.h0, s.s0, s.m) = (g.lambda, g.h0, g.s0, g.m);
        match s.mode {
            ModeKind::Active => s.f_p = g.f_p,
            ModeKind::Passive => s.f_ext = g.f_p,
        }
        s.beta = g.beta;
        let sc = s.build();
        sc.validate()?;
        let c = model.coefficients(g.h0, g.lambda, bc)?;
        row.kappa_pass = Some(c.kappa_pass);
        row.kappa_prop = Some(c.kappa_prop);
        row.provenance = Some(provenance_at(model, &sc, g.h0)?);
        if kind == SweepKind::Dynamics {
            let floor = config
                .integrator
                .h_floor
                .unwrap_or_else(|| sc.default_h_floor());
            let traj = simulate(
                model,
                &sc,
                config.integrator.t_max,
                floor,
                &config.integrator_options(),
            )?;
            row.termination = Some(traj.termination);
            row.min_h = Some(traj.min_h());
            row.provenance = Some(provenance_at(model, &sc, traj.min_h())?);
        }
        Ok(())
    })();
    if let Err(e) = result {
        row.error = Some(e.to_string());
    }
    row
}

fn thread_count() -> Result<Option<usize>, ConfigError> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(ConfigError {
                key: Some(THREADS_ENV.into()),
                line: None,
                message: format!("must be a positive integer, got \"{v}\""),
            }),
        },
    }
}

pub struct SweepSummary {
    pub rows: usize,
    pub failed: usize,
    pub path: std::path::PathBuf,
}

pub fn sweep(config: &RunConfig, allow_partial: bool) -> Result<SweepSummary, CliError> {
    let grid = sweep_grid(config)?;
    let kind = config
        .sweep
        .as_ref()
        .map(|s| s.kind)
        .unwrap_or(SweepKind::Dynamics);
    let model = model(config);
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = thread_count()? {
        pool = pool.num_threads(n);
    }
    let pool = pool
        .build()
        .map_err(|e| CliError::Io(format!("thread pool: {e}")))?;
    // indexed collect: the merge order is the grid order whatever the schedule
    let rows: Vec<SweepRow> = pool.install(|| {
        grid.par_iter()
            .map(|g| sweep_point(config, &model, kind, g))
            .collect()
    });

    let path = output_path(&config.output_dir, "sweep.csv")?;
    let mut w = csv_writer(&path, &SWEEP_HEADER)?;
    for (i, (g, r)) in grid.iter().zip(&rows).enumerate() {
        w.write_record([
            i.to_string(),
            num(g.lambda),
            num(g.beta),
            num(g.h0),
            num(g.s0),
            num(g.f_p),
            num(g.m),
            opt_num(r.kappa_pass),
            opt_num(r.kappa_prop),
            r.provenance
                .map(|p| p.as_str().to_string())
                .unwrap_or_default(),
            r.termination
                .map(|t| t.label().to_string())
                .unwrap_or_default(),
            opt_num(r.termination.and_then(|t| t.collision_time())),
            opt_num(r.min_h),
            if r.error.is_some() { "failed" } else { "ok" }.to_string(),
            r.error.clone().unwrap_or_default(),
        ])
        .map_err(|e| CliError::io(&path, e))?;
    }
    w.flush().map_err(|e| CliError::io(&path, e))?;

    let failed = rows.iter().filter(|r| r.error.is_some()).count();
    let summary = SweepSummary {
        rows: rows.len(),
        failed,
        path,
    };
    if failed > 0 && !(allow_partial && failed < rows.len()) {
        return Err(CliError::Numerical(format!(
            "{failed} of {} sweep rows failed (see {})",
            summary.rows,
            summary.path.display()
        )));
    }
    Ok(summary)
}

/// Runs the suite and writes its report; returns the report text and the failure count.
pub fn validate(
    config: &RunConfig,
    fault: Fault,
    only: &[String],
) -> Result<(String, usize), CliError> {
    let known: Vec<&str> = check_names().collect();
    if let Some(bad) = only.iter().find(|n| !known.contains(&n.as_str())) {
        return Err(ConfigError {
            key: Some("--check".into()),
            line: None,
            message: format!("unknown check \"{bad}\"; known: {}", known.join(", ")),
        }
        .into());
    }
    let model = model(config);
    let report = run_selected(&model, fault, |name| {
        only.is_empty() || only.iter().any(|o| o == name)
    });
    let text = report.to_string();
    write_text(&output_path(&config.output_dir, "validation.txt")?, &text)?;
    Ok((text, report.failures().count()))
}
