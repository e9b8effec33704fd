use std::path::Path;

use pdpstar_core::analytic::{
    closed_form_coherence, v3_finite, v3_inf, vpm_finite, vpm_inf, BlochVector, SpinStarParams,
};
use pdpstar_core::engine::{
    simulate_form1, simulate_form2, simulate_observables, spinstar_interaction, EngineChoice, Form2Config,
    InitialMixture, PureMixture,
};
use pdpstar_core::ensemble::TimeGrid;
use pdpstar_core::model_file::{EngineForm, ModelFile};
use pdpstar_core::oracle::{build_spinstar, density_from_bloch, spinstar_initial_state, MAX_ORACLE_BATH};
use pdpstar_core::pdp1::{self, ObservableKind};
use pdpstar_core::pdp2;
use pdpstar_core::selftest::run_selftest;
use pdpstar_core::stats::{sigma_distance, BlochCurve};
use pdpstar_core::{CMatrix, CVector, Complex};

use crate::args::{
    AnalyticArgs, EngineKind, GenericArgs, GridArgs, McArgs, ModelKind, Observable, OracleArgs, SelftestArgs,
};
use crate::output::{emit, fmt, RunConfig, Summary, Table};
use crate::{CliError, Outcome};

fn grid(g: &GridArgs) -> Result<Vec<f64>, CliError> {
    Ok(TimeGrid::new(g.t_max, g.steps)?.points())
}

/// Runs `f` on a pool of `workers` threads (all cores if `None`) and returns
/// its value with the pool size.
pub fn with_workers<T: Send>(
    workers: Option<usize>,
    f: impl FnOnce() -> Result<T, CliError> + Send,
) -> Result<(T, usize), CliError> {
    if workers == Some(0) {
        return Err(CliError::Config("--workers must be >= 1".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    let n = pool.current_num_threads();
    Ok((pool.install(f)?, n))
}

fn finish(table: Table, out: Option<&Path>, workers: usize) -> Result<Outcome, CliError> {
    emit(&table, out, workers)?;
    Ok(match table.summary {
        Some(s) if !s.passed => Outcome::StatisticalFailure,
        _ => Outcome::Ok,
    })
}

const BLOCH_HEADER: [&str; 4] = ["t", "v3", "re_vm", "im_vm"];

pub fn analytic_table(a: &AnalyticArgs) -> Result<Table, CliError> {
    let times = grid(&a.grid)?;
    let mut cfg = RunConfig::new("analytic", a.grid.t_max, a.grid.steps);
    cfg.model = Some(a.star.model);
    cfg.coupling = Some(a.star.coupling);
    let one = Complex::new(1.0, 0.0);
    let mut rows = Vec::with_capacity(times.len());
    match a.star.model {
        ModelKind::Finite => {
            cfg.n_bath = Some(a.star.n_bath);
            let p = SpinStarParams::new(a.star.n_bath, a.star.coupling)?;
            for &t in &times {
                rows.push((t, v3_finite(&p, t, 1.0), vpm_finite(&p, t, one)));
            }
        }
        ModelKind::Infinite => {
            SpinStarParams::new(1, a.star.coupling)?;
            for &t in &times {
                rows.push((t, v3_inf(a.star.coupling, t, 1.0)?, vpm_inf(a.star.coupling, t, one)?));
            }
        }
    }
    let mut table = Table::new(cfg, &BLOCH_HEADER);
    for (t, v3, vm) in rows {
        table.push(vec![fmt(t), fmt(v3), fmt(vm.re), fmt(vm.im)]);
    }
    Ok(table)
}

pub fn analytic(a: &AnalyticArgs) -> Result<Outcome, CliError> {
    finish(analytic_table(a)?, a.out.as_deref(), 1)
}

/// Spin star with `rho_S = |+><+|` for `v3` and `|x+><x+|` for `v_-`,
/// bath maximally mixed.
fn spinstar_initial(n_bath: u32, obs: Observable) -> Result<InitialMixture, CliError> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let system = match obs {
        Observable::V3 => CVector::basis(2, 0),
        Observable::Vminus => CVector::new(vec![Complex::new(s, 0.0), Complex::new(s, 0.0)])?,
    };
    let d_e = 1usize << n_bath;
    let w = 1.0 / d_e as f64;
    let bath = PureMixture::new(vec![w; d_e], (0..d_e).map(|i| CVector::basis(d_e, i)).collect())?;
    Ok(InitialMixture::new(PureMixture::pure(system)?, bath))
}

/// `sigma_z` for `v3`; `2 |-><+|` for `v_- / v_-(0)` with `v_-(0) = 1/2`.
fn spinstar_observable(obs: Observable) -> CMatrix {
    let mut o = CMatrix::zeros(2, 2);
    match obs {
        Observable::V3 => {
            o[(0, 0)] = Complex::new(1.0, 0.0);
            o[(1, 1)] = Complex::new(-1.0, 0.0);
        }
        Observable::Vminus => o[(1, 0)] = Complex::new(2.0, 0.0),
    }
    o
}

fn generic_spinstar_curve(a: &McArgs, times: &[f64], n_traj: u64) -> Result<BlochCurve, CliError> {
    if a.star.n_bath > MAX_ORACLE_BATH {
        return Err(CliError::Config(format!(
            "generic engines run the spin star for n_bath <= {MAX_ORACLE_BATH}, got {}",
            a.star.n_bath
        )));
    }
    let p = SpinStarParams::new(a.star.n_bath, a.star.coupling)?;
    let h = spinstar_interaction(&p)?;
    let init = spinstar_initial(p.n_bath, a.observable)?;
    let cfg2 = Form2Config::uniform(h.terms().len(), pdp2::member_rate(p.coupling))?;
    let engine = if a.engine == EngineKind::Generic1 { EngineChoice::Form1 } else { EngineChoice::Form2(&cfg2) };
    let obs = [spinstar_observable(a.observable)];
    let est = simulate_observables(engine, &h, &init, times, n_traj, a.sampling.seed, &obs)?;
    let exact = times
        .iter()
        .map(|&t| match a.observable {
            Observable::V3 => v3_finite(&p, t, 1.0),
            Observable::Vminus => closed_form_coherence(&p, t),
        })
        .map(|x| Complex::new(x, 0.0))
        .collect();
    Ok(BlochCurve::new(
        times.to_vec(),
        est.iter().map(|e| Complex::new(e.mean[0].re, 0.0)).collect(),
        est.iter().map(|e| e.stderr_re[0]).collect(),
        Some(exact),
    )?)
}

fn mc_curve(a: &McArgs, times: &[f64], n_traj: u64) -> Result<BlochCurve, CliError> {
    let need = |kind: ModelKind| {
        if a.star.model == kind {
            Ok(())
        } else {
            Err(CliError::Config(format!("engine {:?} needs --model {kind:?}", a.engine).to_lowercase()))
        }
    };
    let seed = a.sampling.seed;
    match a.engine {
        EngineKind::Pdp1 => {
            need(ModelKind::Finite)?;
            let p = SpinStarParams::new(a.star.n_bath, a.star.coupling)?;
            Ok(match a.observable {
                Observable::V3 => pdp1::estimate_v3_curve(&p, n_traj, times, seed)?,
                Observable::Vminus => pdp1::estimate_curve(&p, ObservableKind::Coherence, n_traj, times, seed)?,
            })
        }
        EngineKind::Pdp2 => {
            need(ModelKind::Infinite)?;
            Ok(match a.observable {
                Observable::V3 => pdp2::estimate_v3_inf_mc(a.star.coupling, n_traj, times, seed)?,
                Observable::Vminus => pdp2::estimate_vpm_inf_mc(a.star.coupling, n_traj, times, seed)?,
            })
        }
        EngineKind::Generic1 | EngineKind::Generic2 => {
            need(ModelKind::Finite)?;
            generic_spinstar_curve(a, times, n_traj)
        }
        EngineKind::Analytic | EngineKind::Oracle => Err(CliError::Config(
            format!("mc does not sample with engine {:?}; use the {0:?} subcommand", a.engine).to_lowercase(),
        )),
    }
}

pub fn mc_table(a: &McArgs) -> Result<(Table, usize), CliError> {
    let times = grid(&a.grid)?;
    let n_traj = a.sampling.trajectories();
    if n_traj < 2 {
        return Err(CliError::Config(format!("--traj must be >= 2, got {n_traj}")));
    }
    let mut cfg = RunConfig::new("mc", a.grid.t_max, a.grid.steps);
    cfg.engine = Some(a.engine);
    cfg.observable = Some(a.observable);
    cfg.model = Some(a.star.model);
    if a.star.model == ModelKind::Finite {
        cfg.n_bath = Some(a.star.n_bath);
    }
    cfg.coupling = Some(a.star.coupling);
    cfg.n_traj = Some(n_traj);
    cfg.seed = Some(a.sampling.seed);
    let (curve, workers) = with_workers(a.sampling.workers, || mc_curve(a, &times, n_traj))?;
    let exact = curve.exact.clone().expect("mc curves carry a reference");
    let errors = curve.abs_errors().expect("reference present");
    let dist = curve.sigma_distances().expect("reference present");
    let mut table = Table::new(cfg, &["t", "estimate", "stderr", "exact", "abs_error", "sigma_distance"]);
    for i in 0..curve.len() {
        table.push(vec![
            fmt(curve.times[i]),
            fmt(curve.estimate[i].re),
            fmt(curve.stderr[i]),
            fmt(exact[i].re),
            fmt(errors[i]),
            fmt(dist[i]),
        ]);
    }
    table.summary = Some(Summary::from_distances(&dist));
    Ok((table, workers))
}

pub fn mc(a: &McArgs) -> Result<Outcome, CliError> {
    let (table, workers) = mc_table(a)?;
    finish(table, a.out.as_deref(), workers)
}

pub fn generic_table(a: &GenericArgs) -> Result<(Table, usize), CliError> {
    let times = grid(&a.grid)?;
    let n_traj = a.sampling.trajectories();
    if n_traj < 2 {
        return Err(CliError::Config(format!("--traj must be >= 2, got {n_traj}")));
    }
    let model = ModelFile::load(&a.model_file)?;
    let form = match a.engine {
        None => model.engine(),
        Some(EngineKind::Generic1) => EngineForm::Form1,
        Some(EngineKind::Generic2) => EngineForm::Form2,
        Some(other) => {
            return Err(CliError::Config(format!("generic runs generic1 or generic2, not {other:?}").to_lowercase()))
        }
    };
    let mut cfg = RunConfig::new("generic", a.grid.t_max, a.grid.steps);
    cfg.engine = Some(match form {
        EngineForm::Form1 => EngineKind::Generic1,
        EngineForm::Form2 => EngineKind::Generic2,
    });
    cfg.model_file = Some(a.model_file.display().to_string());
    cfg.n_traj = Some(n_traj);
    cfg.seed = Some(a.sampling.seed);
    let seed = a.sampling.seed;
    let (est, workers) = with_workers(a.sampling.workers, || {
        Ok(match form {
            EngineForm::Form1 => simulate_form1(&model.hamiltonian, &model.initial, &times, n_traj, seed, false)?,
            EngineForm::Form2 => {
                simulate_form2(&model.hamiltonian, model.form2_config()?, &model.initial, &times, n_traj, seed, false)?
            }
        })
    })?;
    let exact = model.exact_reduced(&times)?;
    let d = model.spec.d_s;
    let mut table = Table::new(
        cfg,
        &["t", "row", "col", "re", "im", "stderr_re", "stderr_im", "exact_re", "exact_im", "sigma_distance"],
    );
    let mut dist = Vec::with_capacity(times.len() * d * d);
    for (i, &t) in times.iter().enumerate() {
        let r = &est[i].reduced;
        for row in 0..d {
            for col in 0..d {
                let k = row * d + col;
                let (m, x) = (r.mean[(row, col)], exact[i][(row, col)]);
                let sd = sigma_distance((m.re - x.re).abs(), r.stderr_re[k])
                    .max(sigma_distance((m.im - x.im).abs(), r.stderr_im[k]));
                dist.push(sd);
                table.push(vec![
                    fmt(t),
                    row.to_string(),
                    col.to_string(),
                    fmt(m.re),
                    fmt(m.im),
                    fmt(r.stderr_re[k]),
                    fmt(r.stderr_im[k]),
                    fmt(x.re),
                    fmt(x.im),
                    fmt(sd),
                ]);
            }
        }
    }
    table.summary = Some(Summary::from_distances(&dist));
    Ok((table, workers))
}

pub fn generic(a: &GenericArgs) -> Result<Outcome, CliError> {
    let (table, workers) = generic_table(a)?;
    finish(table, a.out.as_deref(), workers)
}

pub fn oracle_table(a: &OracleArgs) -> Result<Table, CliError> {
    let times = grid(&a.grid)?;
    let mut cfg = RunConfig::new("oracle", a.grid.t_max, a.grid.steps);
    if let Some(path) = &a.model_file {
        let model = ModelFile::load(path)?;
        cfg.model_file = Some(path.display().to_string());
        let exact = model.exact_reduced(&times)?;
        let d = model.spec.d_s;
        let mut table = Table::new(cfg, &["t", "row", "col", "re", "im"]);
        for (i, &t) in times.iter().enumerate() {
            for row in 0..d {
                for col in 0..d {
                    let z = exact[i][(row, col)];
                    table.push(vec![fmt(t), row.to_string(), col.to_string(), fmt(z.re), fmt(z.im)]);
                }
            }
        }
        return Ok(table);
    }
    cfg.model = Some(ModelKind::Finite);
    cfg.n_bath = Some(a.n_bath);
    cfg.coupling = Some(a.coupling);
    let p = SpinStarParams::new(a.n_bath, a.coupling)?;
    let model = build_spinstar(&p)?;
    let up = density_from_bloch(&BlochVector { v1: 0.0, v2: 0.0, v3: 1.0 });
    let x = density_from_bloch(&BlochVector { v1: 1.0, v2: 0.0, v3: 0.0 });
    let pop = model.reduced_bloch(&spinstar_initial_state(&up, p.n_bath), &times)?;
    let coh = model.reduced_bloch(&spinstar_initial_state(&x, p.n_bath), &times)?;
    let mut table = Table::new(cfg, &BLOCH_HEADER);
    for (i, &t) in times.iter().enumerate() {
        let vm = coh[i].v_minus() / 0.5;
        table.push(vec![fmt(t), fmt(pop[i].v3), fmt(vm.re), fmt(vm.im)]);
    }
    Ok(table)
}

pub fn oracle(a: &OracleArgs) -> Result<Outcome, CliError> {
    finish(oracle_table(a)?, a.out.as_deref(), 1)
}

pub fn selftest(a: &SelftestArgs) -> Result<Outcome, CliError> {
    let report = run_selftest(a.mutate);
    for c in &report {
        println!(
            "{} {:<48} observed={:e} tolerance={:e}",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.observed,
            c.tolerance
        );
    }
    let failed = report.iter().filter(|c| !c.passed).count();
    println!("{} checks, {failed} failed", report.len());
    Ok(if failed == 0 { Outcome::Ok } else { Outcome::SelftestFailure })
}
