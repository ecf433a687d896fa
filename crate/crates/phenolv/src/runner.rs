//! Command execution and output directories.

use std::path::Path;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use phenolv_core::model::validate_assumptions;
use phenolv_core::ode_sim::{self, OdeOutcome, OdeSimConfig};
use phenolv_core::pde_sim::{self, LambdaSeries, PdeOutcome, PdeSimConfig, SteadyStateSolution};
use phenolv_core::phase_plane::{self, Basin, LvCase, LvParams, SeparatrixCurve, CASE_TOLERANCE};
use phenolv_core::{Error, ResourceFunction, TraitGrid};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::{json, Map, Value};

use crate::config::{Command, ConfigError, ProfileSpec, RunConfig};
use crate::output::{self, Comparison, CsvFile, FailureRecord, FileEntry, Manifest, Software};
use crate::RunError;

/// Window `|Y - Y*|` for the local quadratic comparison.
pub const QUADRATIC_WINDOW: f64 = 0.1;

/// Full and reduced masses are compared from this time on.
pub const REDUCED_COMPARISON_START: f64 = 10.0;

/// Results of one command, held in memory until written.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub files: Vec<CsvFile>,
    pub prediction: Value,
    pub observed: Vec<Comparison>,
    pub checks: Map<String, Value>,
}

/// Runs a non-sweep command without touching the filesystem.
pub fn execute(cfg: &RunConfig) -> Result<RunOutput, RunError> {
    match cfg.command {
        Command::PhasePlane => phase_plane_run(cfg),
        Command::Separatrix => separatrix_run(cfg),
        Command::OdeSim => ode_run(cfg),
        Command::PdeSim => pde_run(cfg),
        Command::SteadyState => steady_run(cfg),
        Command::Sweep => Err(ConfigError {
            path: "command".into(),
            message: "sweeps write child directories; use run_to_dir".into(),
        }
        .into()),
    }
}

/// Executes `cfg` into `dir`. On success every CSV is written and then the
/// manifest; on failure only `failure.json` is written.
pub fn run_to_dir(cfg: &RunConfig, dir: &Path) -> Result<Manifest, RunError> {
    output::prepare_dir(dir)?;
    let started = Instant::now();
    let started_unix = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_secs());
    let result = match cfg.command {
        Command::Sweep => run_sweep(cfg, dir),
        _ => execute(cfg),
    };
    let out = match result {
        Ok(out) => out,
        Err(e) => {
            record_failure(dir, cfg.command, &e, Some(cfg.to_toml()), started.elapsed().as_secs_f64());
            return Err(e);
        }
    };
    let written = out
        .files
        .iter()
        .try_for_each(|f| output::write_text(&dir.join(f.name), &f.body));
    if let Err(e) = written {
        record_failure(dir, cfg.command, &e, Some(cfg.to_toml()), started.elapsed().as_secs_f64());
        return Err(e);
    }
    let manifest = Manifest {
        status: "ok".into(),
        command: cfg.command.name().into(),
        software: Software::current(),
        config: cfg.to_toml(),
        started_unix,
        duration_seconds: started.elapsed().as_secs_f64(),
        files: out
            .files
            .iter()
            .map(|f| FileEntry {
                name: f.name.into(),
                rows: f.rows,
            })
            .collect(),
        prediction: out.prediction,
        observed: out.observed,
        checks: out.checks,
    };
    output::write_json(&dir.join(output::MANIFEST_FILE), &manifest)?;
    Ok(manifest)
}

/// Best-effort failure record; an I/O error here is not reported further.
pub fn record_failure(dir: &Path, command: Command, err: &RunError, config: Option<String>, seconds: f64) {
    let record = FailureRecord {
        status: "failed".into(),
        command: command.name().into(),
        software: Software::current(),
        kind: err.kind().into(),
        error_chain: err.chain(),
        config,
        duration_seconds: seconds,
    };
    if output::prepare_dir(dir).is_ok() {
        let _ = output::write_json(&dir.join(output::FAILURE_FILE), &record);
    }
}

fn checks(entries: Vec<(&str, Value)>) -> Map<String, Value> {
    entries.into_iter().map(|(k, v)| (k.to_owned(), v)).collect()
}

/// JSON number, or null for NaN and infinities.
fn num(x: f64) -> Value {
    serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number)
}

fn opt(x: Option<f64>) -> Value {
    x.map_or(Value::Null, num)
}

fn pair(p: [f64; 2]) -> Value {
    json!([num(p[0]), num(p[1])])
}

pub fn build_grid(cfg: &RunConfig) -> Result<TraitGrid, RunError> {
    cfg.grid
        .expect("trait-structured commands carry a grid")
        .build()
        .map_err(RunError::input("grid"))
}

fn shifted(f: ResourceFunction, delta: f64) -> ResourceFunction {
    use ResourceFunction::*;
    match f {
        Constant { .. } => f,
        GaussianBump {
            base,
            amplitude,
            center,
            width,
        } => GaussianBump {
            base,
            amplitude,
            center: center + delta,
            width,
        },
        CosineBump {
            base,
            amplitude,
            center,
            halfwidth,
        } => CosineBump {
            base,
            amplitude,
            center: center + delta,
            halfwidth,
        },
        TwoPeaks {
            base,
            amp1,
            center1,
            width1,
            amp2,
            center2,
            width2,
        } => TwoPeaks {
            base,
            amp1,
            center1: center1 + delta,
            width1,
            amp2,
            center2: center2 + delta,
            width2,
        },
    }
}

/// Samples an initial profile. `steady` supplies the profile for the
/// `steady` family.
fn build_profile(
    name: &str,
    spec: &ProfileSpec,
    grid: &TraitGrid,
    rng: &mut ChaCha8Rng,
    steady: Option<&[f64]>,
) -> Result<Vec<f64>, RunError> {
    match *spec {
        ProfileSpec::Steady { scale } => {
            let profile = steady.ok_or_else(|| RunError::Input {
                context: name.into(),
                source: Error::Invalid("the steady family needs an admissible steady state".into()),
            })?;
            Ok(profile.iter().map(|x| scale * x).collect())
        }
        ProfileSpec::Shape {
            shape,
            mass,
            support,
            jitter,
        } => {
            let delta = if jitter > 0.0 {
                rng.random_range(-jitter..=jitter)
            } else {
                0.0
            };
            let f = shifted(shape, delta);
            let mut values = grid.sample(|x| match support {
                Some((lo, hi)) if x < lo || x > hi => 0.0,
                _ => f.eval(x),
            });
            if let Some(target) = mass {
                let m = grid.quadrature(&values).map_err(RunError::input(name))?;
                if !(m > 0.0) {
                    return Err(RunError::Input {
                        context: name.into(),
                        source: Error::Invalid(format!("cannot rescale a profile of mass {m} to {target}")),
                    });
                }
                values.iter_mut().for_each(|v| *v *= target / m);
            }
            Ok(values)
        }
    }
}

/// Initial densities `(u0, v0)`; jitter draws come from `cfg.seed`.
pub fn initial_data(
    cfg: &RunConfig,
    grid: &TraitGrid,
    steady: Option<&SteadyStateSolution>,
) -> Result<(Vec<f64>, Vec<f64>), RunError> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let u0 = build_profile(
        "initial_u",
        cfg.initial_u.as_ref().expect("trait-structured commands carry initial data"),
        grid,
        &mut rng,
        steady.map(|s| s.u_bar.as_slice()),
    )?;
    let v0 = build_profile(
        "initial_v",
        cfg.initial_v.as_ref().expect("trait-structured commands carry initial data"),
        grid,
        &mut rng,
        steady.map(|s| s.v_bar.as_slice()),
    )?;
    Ok((u0, v0))
}

/// Explicit starts followed by random ones in `(0, 2 d̄] x (0, 2 m̄]`.
pub fn start_points(cfg: &RunConfig, p: &LvParams) -> Vec<[f64; 2]> {
    let spec = cfg.starts.as_ref().expect("phase-plane carries starts");
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut pts = spec.points.clone();
    for _ in 0..spec.random {
        let y = 2.0 * p.d_bar * (1.0 - rng.random::<f64>());
        let x = 2.0 * p.m_bar * (1.0 - rng.random::<f64>());
        pts.push([y, x]);
    }
    pts
}

/// Predicted limit of the mass system from `(y0, x0)`: a label and the
/// equilibrium, when one is determined.
pub fn lv_prediction(
    report: &phase_plane::EquilibriumReport,
    curve: Option<&SeparatrixCurve>,
    y0: f64,
    x0: f64,
) -> Result<(&'static str, Option<[f64; 2]>), RunError> {
    Ok(match (y0 > 0.0, x0 > 0.0) {
        (false, false) => ("origin", Some(report.origin)),
        (false, true) => ("P3", Some(report.p3)),
        (true, false) => ("P2", Some(report.p2)),
        (true, true) => match report.case {
            LvCase::Coexistence => ("P1", report.p1),
            LvCase::ExclusionU => ("P2", Some(report.p2)),
            LvCase::ExclusionV => ("P3", Some(report.p3)),
            LvCase::Degenerate => ("line", None),
            LvCase::NonGeneric => ("unresolved", None),
            LvCase::Bistable => {
                let curve = curve.ok_or(RunError::Runtime {
                    context: "basin query".into(),
                    source: Error::MissingSeparatrix,
                })?;
                match phase_plane::basin_query(curve, y0, x0).map_err(RunError::input("start point"))? {
                    Basin::ToP2 => ("P2", Some(report.p2)),
                    Basin::ToP3 => ("P3", Some(report.p3)),
                    Basin::OnSeparatrix => ("P1", report.p1),
                }
            }
        },
    })
}

fn phase_plane_run(cfg: &RunConfig) -> Result<RunOutput, RunError> {
    let p = cfg.lv_params().expect("phase-plane carries Lotka-Volterra parameters");
    let report = phase_plane::equilibria(&p);

    let mut eq = CsvFile::new("equilibria.csv");
    eq.row(vec!["origin".into(), report.origin[0].into(), report.origin[1].into()]);
    if let Some(p1) = report.p1 {
        eq.row(vec!["P1".into(), p1[0].into(), p1[1].into()]);
    }
    eq.row(vec!["P2".into(), report.p2[0].into(), report.p2[1].into()]);
    eq.row(vec!["P3".into(), report.p3[0].into(), report.p3[1].into()]);

    let curve = if report.case == LvCase::Bistable {
        Some(phase_plane::global_separatrix(&p, &cfg.separatrix).map_err(RunError::runtime("separatrix"))?)
    } else {
        None
    };

    let mut traj_csv = CsvFile::new("trajectories.csv");
    let mut limits = CsvFile::new("limits.csv");
    let mut observed = Vec::new();
    let mut max_error = 0.0f64;
    for (k, [y0, x0]) in start_points(cfg, &p).into_iter().enumerate() {
        let traj = phase_plane::integrate_lv(&p, y0, x0, cfg.sim.t_end, cfg.sim.tol)
            .map_err(RunError::runtime(format!("trajectory from start {k}")))?;
        for (t, y) in traj.t.iter().zip(&traj.y) {
            traj_csv.row(vec![k.into(), (*t).into(), y[0].into(), y[1].into()]);
        }
        let (_, end) = traj.last().expect("trajectories include the start");
        let (ye, xe) = (end[0], end[1]);
        let (label, target) = lv_prediction(&report, curve.as_ref(), y0, x0)?;
        let error = match target {
            Some([yp, xp]) => (ye - yp).abs().max((xe - xp).abs()),
            None if label == "line" => (ye + p.b * xe - p.d_bar).abs(),
            None => f64::NAN,
        };
        if error.is_finite() {
            max_error = max_error.max(error);
        }
        let [yp, xp] = target.unwrap_or([f64::NAN; 2]);
        limits.row(vec![
            k.into(),
            y0.into(),
            x0.into(),
            label.into(),
            yp.into(),
            xp.into(),
            ye.into(),
            xe.into(),
            error.into(),
        ]);
        if label == "line" {
            observed.push(Comparison::new(format!("start_{k}.Y+bX"), Some(p.d_bar), ye + p.b * xe));
        } else {
            observed.push(Comparison::new(format!("start_{k}.Y"), target.map(|t| t[0]), ye));
            observed.push(Comparison::new(format!("start_{k}.X"), target.map(|t| t[1]), xe));
        }
    }

    let saddle = report.saddle.map_or(Value::Null, |s| {
        json!({"lambda1": num(s.lambda1), "lambda2": num(s.lambda2), "k": num(s.k), "a2": num(s.a2)})
    });
    Ok(RunOutput {
        files: vec![eq, traj_csv, limits],
        prediction: json!({
            "case": report.case.label(),
            "p1": report.p1.map_or(Value::Null, pair),
            "p2": pair(report.p2),
            "p3": pair(report.p3),
            "saddle": saddle,
        }),
        observed,
        checks: checks(vec![("max_limit_error", num(max_error))]),
    })
}

/// Curvature sign of the separatrix: that of `m̄ - d̄`, zero when equal.
pub fn expected_curvature_sign(p: &LvParams) -> f64 {
    let gap = p.m_bar - p.d_bar;
    if gap.abs() <= CASE_TOLERANCE * p.m_bar.max(p.d_bar) {
        0.0
    } else {
        gap.signum()
    }
}

/// Magnitude below which a finite-difference curvature counts as zero.
pub const FLAT_CURVATURE: f64 = 1e-6;

/// Step of the centred second difference of `h`.
pub const CURVATURE_STEP: f64 = 0.05;

fn separatrix_run(cfg: &RunConfig) -> Result<RunOutput, RunError> {
    let p = cfg.lv_params().expect("separatrix carries Lotka-Volterra parameters");
    let case = phase_plane::classify(&p);
    if case != LvCase::Bistable {
        return Err(RunError::Input {
            context: "params".into(),
            source: Error::NotBistable(case),
        });
    }
    let curve = phase_plane::global_separatrix(&p, &cfg.separatrix).map_err(RunError::runtime("separatrix"))?;
    let mut csv = CsvFile::new("separatrix.csv");
    for &[y, x] in curve.points() {
        csv.row(vec![y.into(), x.into()]);
    }

    let [ys, xs] = curve.saddle();
    let (k, a2) = (curve.local_k(), curve.local_a2());
    let (y_lo, y_hi) = curve.y_range();
    let mut quad = CsvFile::new("local_quadratic.csv");
    for i in 0..=200 {
        let y = ys - QUADRATIC_WINDOW + QUADRATIC_WINDOW * i as f64 / 100.0;
        if let Ok(h) = curve.eval(y) {
            let s = y - ys;
            let q = xs + k * s + a2 * s * s;
            quad.row(vec![y.into(), h.into(), q.into(), (h - q).abs().into()]);
        }
    }

    let residual = curve.functional_residual(&p, y_lo, y_hi);
    let order = curve.quadratic_deviation_order(QUADRATIC_WINDOW);
    let min_increment = curve.min_increment();
    let expected = expected_curvature_sign(&p);
    let delta = CURVATURE_STEP;
    let mut samples = vec![ys];
    samples.extend((1..10).map(|j| y_lo + (y_hi - y_lo) * j as f64 / 10.0));
    let mut sign_ok = true;
    let mut curv_min = f64::INFINITY;
    let mut curv_max = f64::NEG_INFINITY;
    for (j, y) in samples.into_iter().enumerate() {
        let Ok(c) = curve.curvature_at(y, delta) else {
            continue;
        };
        curv_min = curv_min.min(c);
        curv_max = curv_max.max(c);
        let ok = if expected == 0.0 {
            c.abs() <= FLAT_CURVATURE
        } else if j == 0 {
            c * expected > 0.0
        } else {
            c * expected > 0.0 || c.abs() <= FLAT_CURVATURE
        };
        sign_ok &= ok;
    }
    let saddle_curvature = curve.curvature_at(ys, delta).unwrap_or(f64::NAN);

    Ok(RunOutput {
        files: vec![csv, quad],
        prediction: json!({
            "case": case.label(),
            "saddle": pair([ys, xs]),
            "k": num(k),
            "a2": num(a2),
            "curvature_sign": num(expected),
        }),
        observed: vec![
            Comparison::new("h''(Y*)", Some(2.0 * a2), saddle_curvature),
            Comparison::new("functional_residual", Some(0.0), residual),
        ],
        checks: checks(vec![
            ("points", json!(curve.points().len())),
            ("y_max", num(y_hi)),
            ("x_max", num(curve.points().last().map_or(f64::NAN, |q| q[1]))),
            ("max_residual", num(residual)),
            ("min_increment", num(min_increment)),
            ("monotone", json!(min_increment > 0.0)),
            ("quadratic_order", opt(order)),
            ("curvature_min", num(curv_min)),
            ("curvature_max", num(curv_max)),
            ("curvature_sign_ok", json!(sign_ok)),
        ]),
    })
}

fn ode_run(cfg: &RunConfig) -> Result<RunOutput, RunError> {
    let params = cfg.model_params().expect("ode-sim carries model parameters");
    let grid = build_grid(cfg)?;
    let (u0, v0) = initial_data(cfg, &grid, None)?;
    let (lv, _) = ode_sim::mass_system(&params, &grid, &u0, &v0).map_err(RunError::input("initial data"))?;
    let curve = if phase_plane::classify(&lv) == LvCase::Bistable {
        Some(phase_plane::global_separatrix(&lv, &cfg.separatrix).map_err(RunError::runtime("separatrix"))?)
    } else {
        None
    };
    let pred = ode_sim::predict_ode_outcome(&params, &grid, &u0, &v0, curve.as_ref())
        .map_err(RunError::input("outcome prediction"))?;
    let sim = OdeSimConfig {
        dt: cfg.sim.dt,
        t_end: cfg.sim.t_end,
        record_every: cfg.sim.record_every,
        eps_conc: cfg.sim.eps_conc,
    };
    let run = ode_sim::run_ode_sim(&params, &grid, &u0, &v0, &sim)
        .map_err(RunError::runtime("integro-differential run"))?;
    let diag = &run.diagnostics;

    let mut dcsv = CsvFile::new("diagnostics.csv");
    for i in 0..diag.len() {
        dcsv.row(vec![
            diag.t[i].into(),
            diag.r1[i].into(),
            diag.r2[i].into(),
            diag.lyapunov[i].into(),
            diag.i1[i].into(),
            diag.i2[i].into(),
            diag.conc_frac[i].into(),
            diag.argmax_u[i].into(),
        ]);
    }
    let d_values = params.d.sample(&grid);
    let state = &run.final_state;
    let mut pcsv = CsvFile::new("ode_profiles.csv");
    for i in 0..grid.len() {
        pcsv.row(vec![
            grid.node(i).into(),
            d_values[i].into(),
            u0[i].into(),
            v0[i].into(),
            state.u()[i].into(),
            state.v()[i].into(),
        ]);
    }

    let (r1, r2) = (state.r1(), state.r2());
    let mut observed = Vec::new();
    match pred.outcome {
        OdeOutcome::Continuum { d_max, b } => {
            observed.push(Comparison::new("r1+b*r2", Some(d_max), r1 + b * r2));
            observed.push(Comparison::new("r1", None, r1));
            observed.push(Comparison::new("r2", None, r2));
        }
        outcome => {
            let lim = outcome.limit_masses();
            observed.push(Comparison::new("r1", lim.map(|l| l.0), r1));
            observed.push(Comparison::new("r2", lim.map(|l| l.1), r2));
        }
    }
    let x_bar = match pred.outcome {
        OdeOutcome::Coexist { x_bar, .. } | OdeOutcome::UWins { x_bar, .. } => Some(x_bar),
        _ => None,
    };
    observed.push(Comparison::new("argmax_u", x_bar, run.metrics.peak_location));

    let v_scale = r2 / pred.initial_masses.1;
    let v_max = state.v().iter().fold(0.0f64, |a, x| a.max(x.abs()));
    let v_shape_error = if v_max > 0.0 {
        state
            .v()
            .iter()
            .zip(&v0)
            .map(|(v, v0)| (v - v_scale * v0).abs())
            .fold(0.0, f64::max)
            / v_max
    } else {
        0.0
    };
    let entropy = |i: usize| diag.i1[i] + diag.i2[i];
    let last = diag.len() - 1;
    let assumptions = validate_assumptions(&params, &grid, &u0, &v0).map_err(RunError::input("initial data"))?;

    let (r1_star, r2_star) = match pred.outcome {
        OdeOutcome::Coexist { r1_star, r2_star, .. } => (Some(r1_star), Some(r2_star)),
        _ => (None, None),
    };
    let h_at_start = curve.as_ref().and_then(|c| c.eval(pred.initial_masses.0).ok());
    Ok(RunOutput {
        files: vec![dcsv, pcsv],
        prediction: json!({
            "outcome": pred.outcome.label(),
            "case": pred.case.label(),
            "d_max": num(pred.d_max),
            "x_bar": num(pred.x_bar),
            "r1_star": opt(r1_star),
            "r2_star": opt(r2_star),
            "r1_initial": num(pred.initial_masses.0),
            "r2_initial": num(pred.initial_masses.1),
            "h_at_r1_initial": opt(h_at_start),
            "single_maximizer": assumptions.single_maximizer,
            "tail_negative": assumptions.tail_negative,
        }),
        observed,
        checks: checks(vec![
            ("lyapunov_max_drop", num(diag.lyapunov_max_drop())),
            ("bound_excess", num(diag.bound_excess(pred.d_max, params.m_bar))),
            ("entropy_initial", num(entropy(0))),
            ("entropy_final", num(entropy(last))),
            ("entropy_ratio", num(entropy(last) / entropy(0))),
            ("v_shape_error", num(v_shape_error)),
            ("conc_frac", num(run.metrics.mass_fraction_near_peak)),
            ("half_mass_width", num(run.metrics.half_mass_width)),
        ]),
    })
}

/// Largest `|full - reduced| / full` over samples with `t >= start`.
fn max_rel_gap(t: &[f64], full: &[f64], reduced: &[f64], start: f64) -> f64 {
    t.iter()
        .zip(full.iter().zip(reduced))
        .filter(|(t, _)| **t >= start - 1e-9)
        .map(|(_, (f, r))| (f - r).abs() / f.abs())
        .fold(f64::NAN, f64::max)
}

fn pde_run(cfg: &RunConfig) -> Result<RunOutput, RunError> {
    let params = cfg.model_params().expect("pde-sim carries model parameters");
    let grid = build_grid(cfg)?;
    let ss = match pde_sim::steady_state(&params, &grid) {
        Ok(ss) => Some(ss),
        Err(Error::Inadmissible { .. }) => None,
        Err(e) => return Err(RunError::runtime("steady state")(e)),
    };
    let (u0, v0) = initial_data(cfg, &grid, ss.as_ref())?;
    let pred = ss
        .as_ref()
        .map(|ss| pde_sim::predict_pde_outcome(&params, &grid, &u0, &v0, ss, &cfg.separatrix))
        .transpose()
        .map_err(RunError::runtime("outcome prediction"))?;
    let targets = match (&pred, &ss) {
        (Some(p), Some(ss)) => p.outcome.limit_profiles(ss),
        _ => None,
    };
    let sim = PdeSimConfig {
        dt: cfg.sim.dt,
        t_end: cfg.sim.t_end,
        record_every: cfg.sim.record_every,
    };
    let run = pde_sim::run_pde_sim(
        &params,
        &grid,
        &u0,
        &v0,
        &sim,
        targets.as_ref().map(|(a, b)| (a.as_slice(), b.as_slice())),
    )
    .map_err(RunError::runtime("reaction-diffusion run"))?;
    let diag = &run.diagnostics;

    let mut dyn_csv = CsvFile::new("dynamics.csv");
    for i in 0..diag.len() {
        dyn_csv.row(vec![
            diag.t[i].into(),
            diag.r1[i].into(),
            diag.r2[i].into(),
            diag.dist_u[i].into(),
            diag.dist_v[i].into(),
        ]);
    }
    let d_values = params.d.sample(&grid);
    let m_values = params.m.sample(&grid);
    let state = &run.final_state;
    let mut prof = CsvFile::new("pde_profiles.csv");
    for i in 0..grid.len() {
        let (ub, vb) = ss.as_ref().map_or((f64::NAN, f64::NAN), |s| (s.u_bar[i], s.v_bar[i]));
        prof.row(vec![
            grid.node(i).into(),
            d_values[i].into(),
            m_values[i].into(),
            u0[i].into(),
            v0[i].into(),
            state.u()[i].into(),
            state.v()[i].into(),
            ub.into(),
            vb.into(),
        ]);
    }
    let mut files = vec![dyn_csv, prof];

    let mut check_list = vec![
        ("r1_final", num(state.r1())),
        ("r2_final", num(state.r2())),
        ("dist_u_final", num(*diag.dist_u.last().unwrap_or(&f64::NAN))),
        ("dist_v_final", num(*diag.dist_v.last().unwrap_or(&f64::NAN))),
    ];
    if let Some(ss) = &ss {
        let lin = pde_sim::run_linear_companion(&params, &grid, ss, &u0, &v0, &sim)
            .map_err(RunError::runtime("linear companion"))?;
        let series = LambdaSeries::Sampled {
            t: lin.t.clone(),
            lambda1: lin.lambda1.clone(),
            lambda2: lin.lambda2.clone(),
        };
        let wz = pde_sim::reduced_wz_at(&series, &params, ss, 1.0, 1.0, &lin.t, cfg.sim.tol)
            .map_err(RunError::runtime("reduced w-z system"))?;
        if lin.t.len() != diag.len() {
            return Err(RunError::Runtime {
                context: "reduced comparison".into(),
                source: Error::LengthMismatch {
                    expected: diag.len(),
                    got: lin.t.len(),
                },
            });
        }
        let r1_red: Vec<f64> = wz.iter().zip(&lin.lambda1).map(|(y, l)| y[0] * l).collect();
        let r2_red: Vec<f64> = wz.iter().zip(&lin.lambda2).map(|(y, l)| y[1] * l).collect();
        let mut red = CsvFile::new("reduced.csv");
        for i in 0..lin.t.len() {
            red.row(vec![
                lin.t[i].into(),
                lin.lambda1[i].into(),
                lin.lambda2[i].into(),
                lin.pairing_u[i].into(),
                lin.pairing_v[i].into(),
                wz[i][0].into(),
                wz[i][1].into(),
                diag.r1[i].into(),
                r1_red[i].into(),
                diag.r2[i].into(),
                r2_red[i].into(),
            ]);
        }
        files.push(red);
        check_list.extend([
            ("pairing_drift_rate", num(lin.pairing_drift_rate())),
            (
                "reduced_max_rel_error_r1",
                num(max_rel_gap(&lin.t, &diag.r1, &r1_red, REDUCED_COMPARISON_START)),
            ),
            (
                "reduced_max_rel_error_r2",
                num(max_rel_gap(&lin.t, &diag.r2, &r2_red, REDUCED_COMPARISON_START)),
            ),
        ]);
    }

    let mut observed = Vec::new();
    let lim = match (&pred, &ss) {
        (Some(p), Some(ss)) => p.outcome.limit_masses(ss),
        _ => None,
    };
    observed.push(Comparison::new("r1", lim.map(|l| l.0), state.r1()));
    observed.push(Comparison::new("r2", lim.map(|l| l.1), state.r2()));
    if targets.is_some() {
        observed.push(Comparison::new("dist_u", Some(0.0), *diag.dist_u.last().unwrap_or(&f64::NAN)));
        observed.push(Comparison::new("dist_v", Some(0.0), *diag.dist_v.last().unwrap_or(&f64::NAN)));
    }

    let prediction = match (&pred, &ss) {
        (Some(p), Some(ss)) => {
            let scale = match p.outcome {
                PdeOutcome::UWins { scale } | PdeOutcome::VWins { scale } => Some(scale),
                _ => None,
            };
            json!({
                "outcome": p.outcome.label(),
                "scale": opt(scale),
                "k1": num(p.projections.k1),
                "k2": num(p.projections.k2),
                "point": pair([p.point.0, p.point.1]),
                "h_at_point": opt(p.h_at_point),
                "s1": num(ss.s1),
                "s2": num(ss.s2),
                "r1_bar": num(ss.r1_bar),
                "r2_bar": num(ss.r2_bar),
            })
        }
        _ => json!({"outcome": "inadmissible"}),
    };
    Ok(RunOutput {
        files,
        prediction,
        observed,
        checks: checks(check_list),
    })
}

fn steady_run(cfg: &RunConfig) -> Result<RunOutput, RunError> {
    let params = cfg.model_params().expect("steady-state carries model parameters");
    let grid = build_grid(cfg)?;
    let ss = pde_sim::steady_state(&params, &grid).map_err(RunError::runtime("steady state"))?;
    let d_values = params.d.sample(&grid);
    let m_values = params.m.sample(&grid);
    let mut csv = CsvFile::new("steady.csv");
    for i in 0..grid.len() {
        csv.row(vec![
            grid.node(i).into(),
            d_values[i].into(),
            m_values[i].into(),
            ss.u_bar[i].into(),
            ss.v_bar[i].into(),
        ]);
    }
    let case = ss
        .effective_lv(&params)
        .map(|lv| phase_plane::classify(&lv).label())
        .map_err(RunError::runtime("effective mass system"))?;
    Ok(RunOutput {
        files: vec![csv],
        prediction: json!({
            "s1": num(ss.s1),
            "s2": num(ss.s2),
            "r1_bar": num(ss.r1_bar),
            "r2_bar": num(ss.r2_bar),
            "mass_case": case,
        }),
        observed: vec![
            Comparison::new("residual_u", Some(0.0), ss.residual_u),
            Comparison::new("residual_v", Some(0.0), ss.residual_v),
        ],
        checks: checks(vec![
            ("residual_u", num(ss.residual_u)),
            ("residual_v", num(ss.residual_v)),
        ]),
    })
}

/// One sweep child as summarized in `sweep_summary.csv`.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub index: usize,
    pub value: f64,
    pub result: Result<Manifest, String>,
}

impl SweepRow {
    pub fn predicted(&self) -> Option<String> {
        let m = self.result.as_ref().ok()?;
        let p = &m.prediction;
        p.get("outcome")
            .or_else(|| p.get("case"))
            .and_then(Value::as_str)
            .map(str::to_owned)
    }
}

fn run_sweep(cfg: &RunConfig, dir: &Path) -> Result<RunOutput, RunError> {
    let sw = cfg.sweep.as_ref().expect("sweep commands carry a sweep section");
    let rows: Vec<SweepRow> = sw
        .values
        .par_iter()
        .enumerate()
        .map(|(index, &value)| {
            let child_dir = dir.join(format!("run_{index:03}"));
            let table = sw.patched(value, index);
            let result = match RunConfig::from_table(&table) {
                Ok(child) => run_to_dir(&child, &child_dir),
                Err(e) => {
                    let e = RunError::from(e);
                    record_failure(&child_dir, sw.command, &e, toml::to_string(&table).ok(), 0.0);
                    Err(e)
                }
            };
            SweepRow {
                index,
                value,
                result: result.map_err(|e| e.chain().join(": ")),
            }
        })
        .collect();

    let mut csv = CsvFile::new("sweep_summary.csv");
    let mut failed = 0;
    for row in &rows {
        let predicted = row.predicted().unwrap_or_default();
        let (status, err) = match &row.result {
            Ok(_) => ("ok", String::new()),
            Err(e) => {
                failed += 1;
                ("failed", e.replace([',', '\n'], ";"))
            }
        };
        let get = |q: &str| -> (f64, f64, f64) {
            let c = row.result.as_ref().ok().and_then(|m| m.comparison(q));
            (
                c.and_then(|c| c.predicted).unwrap_or(f64::NAN),
                c.and_then(|c| c.observed).unwrap_or(f64::NAN),
                c.and_then(|c| c.rel_error).unwrap_or(f64::NAN),
            )
        };
        let (p1, o1, e1) = get("r1");
        let (p2, o2, e2) = get("r2");
        csv.row(vec![
            row.index.into(),
            row.value.into(),
            status.into(),
            predicted.into(),
            p1.into(),
            p2.into(),
            o1.into(),
            o2.into(),
            e1.into(),
            e2.into(),
            err.into(),
        ]);
    }
    let outcomes: Vec<Value> = rows.iter().map(|r| r.predicted().map_or(Value::Null, Value::from)).collect();
    Ok(RunOutput {
        files: vec![csv],
        prediction: json!({
            "command": sw.command.name(),
            "axis": sw.axis,
            "values": sw.values,
            "outcomes": outcomes,
        }),
        observed: Vec::new(),
        checks: checks(vec![("runs", json!(rows.len())), ("failed", json!(failed))]),
    })
}
