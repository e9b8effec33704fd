//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any criterion fails.

use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use pdpstar_cli::args::{
    AnalyticArgs, EngineKind, GenericArgs, GridArgs, McArgs, ModelKind, Observable, OracleArgs, SamplingArgs,
    SpinStarArgs,
};
use pdpstar_cli::commands::{analytic_table, generic_table, mc_table, oracle_table};
use pdpstar_cli::{main_with, Table, DEFAULT_SEED};
use pdpstar_core::analytic::SpinStarParams;
use pdpstar_core::pdp1::{simulate_counts, SectorSampler};
use pdpstar_core::selftest::{erfi_vs_series, g_paths_agree, pdp1_resummation, pdp2_resummation};
use pdpstar_core::RngStream;

const MC_TRAJ: u64 = 1_000_000;

type Criterion = (&'static str, fn() -> Verdict);

struct Verdict {
    passed: bool,
    detail: String,
}

fn verdict(passed: bool, detail: String) -> Verdict {
    Verdict { passed, detail }
}

fn grid(t_max: f64, steps: usize) -> GridArgs {
    GridArgs { t_max, steps }
}

fn sampling(n_traj: u64, workers: Option<usize>) -> SamplingArgs {
    SamplingArgs { n_traj, full_scale: false, seed: DEFAULT_SEED, workers }
}

fn column(table: &Table, name: &str) -> Vec<f64> {
    let k = table.header.iter().position(|h| *h == name).expect("column exists");
    table.rows.iter().map(|r| r[k].parse().expect("numeric cell")).collect()
}

fn models_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("models")
}

fn analytic_vs_oracle() -> Verdict {
    let start = Instant::now();
    let mut worst = 0.0f64;
    for n in 1..=6 {
        let star = SpinStarArgs { model: ModelKind::Finite, n_bath: n, coupling: 1.0 };
        let a = analytic_table(&AnalyticArgs { star, grid: grid(3.0, 60), out: None }).unwrap();
        let o =
            oracle_table(&OracleArgs { n_bath: n, coupling: 1.0, model_file: None, grid: grid(3.0, 60), out: None })
                .unwrap();
        assert_eq!(a.rows.len(), 61);
        for c in ["v3", "re_vm", "im_vm"] {
            for (x, y) in column(&a, c).iter().zip(column(&o, c)) {
                worst = worst.max((x - y).abs());
            }
        }
    }
    let took = start.elapsed();
    verdict(
        worst <= 1e-8 && took < Duration::from_secs(10),
        format!("max deviation {worst:.3e} (tol 1e-8), {took:.2?}"),
    )
}

fn spinstar_mc(engine: EngineKind, model: ModelKind, obs: Observable, t_max: f64, steps: usize) -> Table {
    let a = McArgs {
        engine,
        observable: obs,
        star: SpinStarArgs { model, n_bath: 100, coupling: 1.0 },
        grid: grid(t_max, steps),
        sampling: sampling(MC_TRAJ, Some(1)),
        out: None,
    };
    mc_table(&a).unwrap().0
}

fn pdp1_curves() -> Verdict {
    let start = Instant::now();
    let v3 = spinstar_mc(EngineKind::Pdp1, ModelKind::Finite, Observable::V3, 1.5, 15);
    let vm = spinstar_mc(EngineKind::Pdp1, ModelKind::Finite, Observable::Vminus, 1.5, 15);
    let took = start.elapsed();
    let (s3, sm) = (v3.summary.unwrap(), vm.summary.unwrap());
    let se = column(&v3, "stderr");
    let growth = se[15] > se[3];
    verdict(
        s3.fraction_within_4se >= 0.95 && sm.fraction_within_4se >= 0.95 && growth && took < Duration::from_secs(120),
        format!(
            "v3 {:.0}% / v- {:.0}% within 4 SE, SE(1.5)={:.3e} > SE(0.3)={:.3e}: {growth}, {took:.2?} on 1 worker",
            100.0 * s3.fraction_within_4se,
            100.0 * sm.fraction_within_4se,
            se[15],
            se[3]
        ),
    )
}

fn pdp2_curve() -> Verdict {
    let start = Instant::now();
    let v3 = spinstar_mc(EngineKind::Pdp2, ModelKind::Infinite, Observable::V3, 1.2, 12);
    let took = start.elapsed();
    let s = v3.summary.unwrap();
    verdict(
        s.fraction_within_4se >= 0.95 && took < Duration::from_secs(60),
        format!("{:.0}% of 13 points within 4 SE of 1+2g, {took:.2?} on 1 worker", 100.0 * s.fraction_within_4se),
    )
}

fn resummations() -> Verdict {
    let t1: Vec<f64> = (0..=15).map(|i| 0.1 * f64::from(i)).collect();
    let t2: Vec<f64> = (0..=20).map(|i| 0.05 * f64::from(i)).collect();
    let e1 = pdp1_resummation(100, &t1, 1.0).unwrap();
    let e2 = pdp2_resummation(&t2, 1.0).unwrap();
    verdict(
        e1 <= 1e-10 && e2 <= 1e-8,
        format!("pdp1 per-sector {e1:.3e} (tol 1e-10), pdp2 double sum {e2:.3e} (tol 1e-8)"),
    )
}

fn generic_engines() -> Verdict {
    let start = Instant::now();
    let mut worst = 0.0f64;
    let mut parts = Vec::new();
    for name in ["spinstar_n1.model", "spinstar_n2_form2.model", "random_2x3.model"] {
        for engine in [EngineKind::Generic1, EngineKind::Generic2] {
            let a = GenericArgs {
                model_file: models_dir().join(name),
                engine: Some(engine),
                grid: grid(1.5, 15),
                sampling: sampling(MC_TRAJ, None),
                out: None,
            };
            let d = generic_table(&a).unwrap().0.summary.unwrap().max_sigma_distance;
            parts.push(format!("{name}/{engine:?}={d:.2}").to_lowercase());
            worst = worst.max(d);
        }
    }
    verdict(
        worst <= 4.0,
        format!("max entrywise sigma distance {worst:.2} (tol 4): {}, {:.2?}", parts.join(" "), start.elapsed()),
    )
}

fn special_functions() -> Verdict {
    let g = g_paths_agree().unwrap();
    let e = erfi_vs_series().unwrap();
    verdict(g <= 1e-10 && e <= 1e-12, format!("g paths {g:.3e} (tol 1e-10), erfi relative {e:.3e} (tol 1e-12)"))
}

/// Chi-square of the sector frequencies, merging sectors (in order) until
/// each bin expects at least 5 draws. Passes below `df + 3 sqrt(2 df)`.
fn sector_chi_square(n_bath: u32, draws: u64, seed: u64) -> (f64, f64) {
    let sampler = SectorSampler::new(&SpinStarParams::new(n_bath, 1.0).unwrap()).unwrap();
    let mut counts = vec![0u64; sampler.len()];
    for k in 0..draws {
        counts[sampler.sample(&mut RngStream::new(seed, k))] += 1;
    }
    let mut bins: Vec<(f64, f64)> = Vec::new();
    let (mut e, mut o) = (0.0, 0.0);
    for (p, c) in sampler.probabilities().iter().zip(&counts) {
        e += p * draws as f64;
        o += *c as f64;
        if e >= 5.0 {
            bins.push((e, o));
            (e, o) = (0.0, 0.0);
        }
    }
    if let Some(last) = bins.last_mut() {
        last.0 += e;
        last.1 += o;
    }
    let chi2: f64 = bins.iter().map(|(e, o)| (o - e).powi(2) / e).sum();
    let df = (bins.len() - 1) as f64;
    (chi2, df + 3.0 * (2.0 * df).sqrt())
}

/// Sample mean and variance of event-loop counts against the Poisson law,
/// each within 3 standard errors.
fn poisson_moments(rate: f64, t: f64, draws: u64, seed: u64) -> (f64, f64) {
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for k in 0..draws {
        let (n1, _) = simulate_counts(rate, rate, t, &RngStream::new(seed, k)).unwrap();
        sum += n1 as f64;
        sum_sq += (n1 as f64).powi(2);
    }
    let n = draws as f64;
    let lambda = rate * t;
    let mean = sum / n;
    let var = (sum_sq - n * mean * mean) / (n - 1.0);
    let z_mean = (mean - lambda) / (lambda / n).sqrt();
    let z_var = (var - lambda) / ((lambda + 2.0 * lambda * lambda) / n).sqrt();
    (z_mean, z_var)
}

fn distributions() -> Verdict {
    let mut ok = true;
    let mut parts = Vec::new();
    for n in [4, 7, 100] {
        let (chi2, limit) = sector_chi_square(n, 200_000, DEFAULT_SEED);
        ok &= chi2 <= limit;
        parts.push(format!("N={n} chi2 {chi2:.1} <= {limit:.1}"));
    }
    for (rate, t) in [(0.7, 1.0), (3.0, 1.5)] {
        let (zm, zv) = poisson_moments(rate, t, 200_000, DEFAULT_SEED);
        ok &= zm.abs() <= 3.0 && zv.abs() <= 3.0;
        parts.push(format!("Poisson({:.2}) z_mean {zm:.2} z_var {zv:.2}", rate * t));
    }
    verdict(ok, parts.join(", "))
}

fn determinism() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let model = models_dir().join("random_2x3.model");
    let runs: [(&str, Vec<String>); 2] = [
        (
            "pdp1",
            "mc --engine pdp1 --observable vminus --n-bath 20 --traj 50000".split(' ').map(String::from).collect(),
        ),
        ("generic", ["generic", "--model-file", model.to_str().unwrap(), "--traj", "20000"].map(String::from).to_vec()),
    ];
    let mut ok = true;
    let mut parts = Vec::new();
    for (label, base) in &runs {
        let mut outputs = Vec::new();
        for w in [1, 4, 16] {
            let out = dir.path().join(format!("{label}_{w}.csv"));
            let mut argv = vec!["pdpstar".to_string()];
            argv.extend(base.iter().cloned());
            argv.extend(["--workers".into(), w.to_string(), "--out".into(), out.display().to_string()]);
            let code = main_with(argv);
            ok &= code == 0;
            outputs.push(std::fs::read(&out).unwrap());
        }
        let same = outputs.windows(2).all(|p| p[0] == p[1]);
        ok &= same;
        parts.push(format!("{label}: {} bytes, identical={same}", outputs[0].len()));
    }
    verdict(ok, format!("workers 1/4/16, {}", parts.join("; ")))
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("analytic vs oracle, N=1..6, 61 points", analytic_vs_oracle),
        ("pdp1 finite bath, N=100, 10^6 trajectories", pdp1_curves),
        ("pdp2 infinite bath, 10^6 trajectories", pdp2_curve),
        ("Poisson resummation identities", resummations),
        ("generic form-1/form-2 engines vs oracle, 10^6 trajectories", generic_engines),
        ("special functions", special_functions),
        ("sector and jump-count distributions", distributions),
        ("worker-count determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let v = check();
        if !v.passed {
            failed += 1;
        }
        println!("{} {}. {name}: {}", if v.passed { "PASS" } else { "FAIL" }, i + 1, v.detail);
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
