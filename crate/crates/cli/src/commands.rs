use crate::{
    AnalyticArgs, Cli, Command, ContrastSweepArgs, GradcheckArgs, ImportArgs, MetricsArgs, ReconstructArgs,
    SimulateArgs, SubsampleSweepArgs, SweepCommand,
};
use anyhow::{bail, Context, Result};
use msinv::adjoint::{central_difference_gradient, gradient_data_fidelity};
use msinv::analytic::{cylinder_field_on_grid, AnalyticScene};
use msinv::config::ExperimentConfig;
use msinv::forward::{estimate_lipschitz, forward_solve, ForwardConfig, StepMode};
use msinv::fresnel::{load_fresnel_ascii, FresnelConfig};
use msinv::greens::{build_domain_operator, build_sensor_operator, green, GreensOperator};
use msinv::grid::{DomainGrid, SensorSet};
use msinv::io::{emit_csv, emit_pgm, grid_comment, image_table, load_csv, CsvTable};
use msinv::measurement::MeasurementSet;
use msinv::metrics::{normalized_error, normalized_recon_error, snr_db, MetricName, MetricValue};
use msinv::phantom::PhantomSpec;
use msinv::recon::{fista_reconstruct, InverseProblem, ModelKind, ReconReport};
use msinv::simulate::simulate;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::path::{Path, PathBuf};

/// Relative tolerances of the gradient check.
const FIXED_STEP_TOL: f64 = 1e-6;
const ADAPTIVE_STEP_TOL: f64 = 1e-3;

/// Marker for failures that should map to the numerical exit code.
#[derive(Debug)]
struct NumericalFailure(String);

impl std::fmt::Display for NumericalFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for NumericalFailure {}

pub fn exit_code(e: &anyhow::Error) -> u8 {
    for cause in e.chain() {
        if cause.downcast_ref::<NumericalFailure>().is_some() {
            return 2;
        }
        if cause.downcast_ref::<std::io::Error>().is_some() {
            return 3;
        }
        if let Some(err) = cause.downcast_ref::<msinv::Error>() {
            use msinv::Error::*;
            return match err {
                Io(_) | Json(_) | Parse { .. } | EmptySet(_) => 3,
                Config(_) | Parameter(_) | Dimension { .. } => 1,
                _ => 2,
            };
        }
    }
    1
}

pub fn run(cli: &Cli) -> Result<()> {
    configure_threads(cli.threads)?;
    match &cli.command {
        Command::Simulate(a) => cmd_simulate(cli, a),
        Command::Reconstruct(a) => cmd_reconstruct(cli, a),
        Command::Analytic(a) => cmd_analytic(cli, a),
        Command::Gradcheck(a) => cmd_gradcheck(cli, a),
        Command::Metrics(a) => cmd_metrics(a),
        Command::Sweep(SweepCommand::Contrast(a)) => cmd_sweep_contrast(cli, a),
        Command::Sweep(SweepCommand::Subsample(a)) => cmd_sweep_subsample(cli, a),
        Command::ImportFresnel(a) => cmd_import(cli, a),
    }
}

#[cfg(feature = "parallel")]
fn configure_threads(threads: usize) -> Result<()> {
    if threads > 0 {
        rayon::ThreadPoolBuilder::new().num_threads(threads).build_global().context("configuring worker threads")?;
    }
    Ok(())
}

#[cfg(not(feature = "parallel"))]
fn configure_threads(threads: usize) -> Result<()> {
    if threads > 1 {
        log::warn!("built without the parallel feature; ignoring --threads {threads}");
    }
    Ok(())
}

fn output_dir(cli: &Cli, config: Option<&ExperimentConfig>) -> Result<PathBuf> {
    let dir = cli
        .output_dir
        .clone()
        .or_else(|| config.and_then(|c| c.output_dir.clone()))
        .unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(dir)
}

fn load_config(path: &Path) -> Result<ExperimentConfig> {
    ExperimentConfig::load(path).with_context(|| format!("reading config {}", path.display()))
}

fn load_image(path: &Path, len: usize) -> Result<Vec<f64>> {
    let f = load_csv(path).with_context(|| format!("reading {}", path.display()))?.column("f")?;
    if f.len() != len {
        bail!(msinv::Error::Dimension { expected: len, got: f.len() });
    }
    Ok(f)
}

fn cmd_simulate(cli: &Cli, a: &SimulateArgs) -> Result<()> {
    let cfg = load_config(&a.config)?;
    let dir = output_dir(cli, Some(&cfg))?;
    let grid = cfg.grid.build()?;
    let template = cfg.acquisition.layout(grid.center(), grid.wavelength, grid.background_permittivity)?;
    let sim = simulate(&grid, &cfg.phantom, &template, &cfg.simulation_config())?;
    let data_path = dir.join(format!("{}.dat", a.name));
    sim.measurements.save(&data_path)?;
    let truth = image_table(&sim.f_true, &grid, "f", "1/m^2")?;
    emit_csv(&truth, &dir.join(format!("{}_truth.csv", a.name)))?;
    if grid.ndim() == 2 {
        emit_pgm(&sim.f_true, &grid, &dir.join(format!("{}_truth.pgm", a.name)))?;
    }
    println!(
        "wrote {} ({} measurements, ||y||^2 = {:.6e})",
        data_path.display(),
        sim.measurements.measurement_count(),
        sim.measurements.norm_sqr()
    );
    Ok(())
}

fn parse_model(s: &str) -> ModelKind {
    match s {
        "born" => ModelKind::Born,
        "rytov" => ModelKind::Rytov,
        _ => ModelKind::Multiple,
    }
}

fn reconstruct(
    cfg: &ExperimentConfig,
    grid: &DomainGrid,
    meas: &MeasurementSet,
    model: ModelKind,
    truth: Option<&[f64]>,
) -> Result<ReconReport> {
    let problem = InverseProblem::new(grid, meas, model)?;
    let recon = msinv::recon::ReconConfig { model, ..cfg.recon.clone() };
    Ok(fista_reconstruct(&problem, &recon, truth)?)
}

fn cmd_reconstruct(cli: &Cli, a: &ReconstructArgs) -> Result<()> {
    let cfg = load_config(&a.config)?;
    let dir = output_dir(cli, Some(&cfg))?;
    let grid = cfg.grid.build()?;
    let mut meas =
        MeasurementSet::load(&a.data).with_context(|| format!("reading measurements {}", a.data.display()))?;
    let factor = a.subsample.unwrap_or(cfg.acquisition.subsample_factor);
    if factor > 1 {
        meas = meas.subsample(factor)?;
    }
    let truth = a.truth.as_deref().map(|p| load_image(p, grid.len())).transpose()?;
    let model = a.model.as_deref().map(parse_model).unwrap_or(cfg.recon.model);
    let report = reconstruct(&cfg, &grid, &meas, model, truth.as_deref())?;
    emit_csv(&image_table(&report.f_hat, &grid, "f", "1/m^2")?, &dir.join(format!("{}.csv", a.name)))?;
    if grid.ndim() == 2 {
        emit_pgm(&report.f_hat, &grid, &dir.join(format!("{}.pgm", a.name)))?;
    }
    std::fs::write(dir.join(format!("{}_report.json", a.name)), serde_json::to_string_pretty(&report)?)?;
    let err = truth.as_deref().map(|t| normalized_recon_error(&report.f_hat, t)).transpose()?;
    println!(
        "{} iterations, data fit {:.4e}{}",
        report.iterations,
        report.final_data_fit,
        err.map(|e| format!(", reconstruction error {e:.4e}")).unwrap_or_default()
    );
    Ok(())
}

fn cmd_analytic(cli: &Cli, a: &AnalyticArgs) -> Result<()> {
    let dir = output_dir(cli, None)?;
    let spacing = a.spacing_m.unwrap_or(a.wavelength_m / 24.0);
    let grid = DomainGrid::centered(vec![a.dims, a.dims], spacing, a.wavelength_m, 1.0)?;
    let k_b = grid.background_wavenumber();
    let mut scene =
        AnalyticScene::new(a.radius_m, AnalyticScene::index_for_contrast(a.contrast), a.source_distance_m, k_b)?;
    if let Some(t) = a.truncation {
        scene.truncation = t;
    }
    let (field, converged) = cylinder_field_on_grid(&scene, &grid, grid.center())?;
    if !converged {
        log::warn!("series not converged at some pixels; raise --truncation");
    }
    let mut table = CsvTable::new(&["x_m", "y_m", "re", "im"]).comment(grid_comment(&grid)).comment(format!(
        "total field of a unit line source at x = {} m; cylinder radius_m={} index={} truncation={}",
        a.source_distance_m, a.radius_m, scene.index, scene.truncation
    ));
    for (i, v) in field.iter().enumerate() {
        let p = grid.position(i);
        table.push(vec![p[0], p[1], v.re, v.im])?;
    }
    let path = dir.join(format!("{}.csv", a.name));
    emit_csv(&table, &path)?;
    println!("wrote {} ({} samples, converged {converged})", path.display(), field.len());
    Ok(())
}

fn cmd_gradcheck(cli: &Cli, a: &GradcheckArgs) -> Result<()> {
    let dir = output_dir(cli, None)?;
    let lambda = 0.0749;
    let grid = DomainGrid::centered(vec![a.size, a.size], lambda / 16.0, lambda, 1.0)?;
    let g = build_domain_operator(&grid)?;
    let sensors = SensorSet::ring(grid.center(), 3.0 * lambda, 16, 0.2)?;
    let h = build_sensor_operator(&grid, &sensors)?;
    let rows = h.all_rows();
    let k_b = grid.background_wavenumber();
    let k2 = k_b * k_b;
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let u_in: Vec<Complex64> = grid.positions().iter().map(|p| Complex64::from_polar(1.0, k_b * p[0])).collect();
    let f: Vec<f64> = (0..grid.len()).map(|_| a.contrast * k2 * rng.gen::<f64>()).collect();
    let f_data: Vec<f64> = (0..grid.len()).map(|_| a.contrast * k2 * rng.gen::<f64>()).collect();
    let y = forward_solve(&f_data, &u_in, &g, &h, &rows, &ForwardConfig { max_iters: 30, ..Default::default() })?.z;
    let l = estimate_lipschitz(&f, &g, 50, 1e-6, 0)?;
    let eps = 1e-5 * f.iter().cloned().fold(0.0, f64::max);

    let mut table = CsvTable::new(&["iterations", "fixed_step", "rel_error"])
        .comment(grid_comment(&grid))
        .comment("rel_error = ||backprop - central differences|| / ||central differences||");
    let mut failures = Vec::new();
    for &k in &a.iterations {
        for fixed in [true, false] {
            let step_mode = if fixed { StepMode::Fixed(0.9 / l) } else { StepMode::Adaptive };
            let cfg = ForwardConfig { max_iters: k, step_mode, ..Default::default() };
            let bp = gradient_data_fidelity(&f, &y, &u_in, &g, &h, &rows, &cfg)?.gradient;
            let fd = central_difference_gradient(&f, &y, &u_in, &g, &h, &rows, &cfg, eps)?;
            let num: f64 = bp.iter().zip(&fd).map(|(x, z)| (x - z).powi(2)).sum();
            let den: f64 = fd.iter().map(|z| z * z).sum();
            let rel = (num / den).sqrt();
            let tol = if fixed { FIXED_STEP_TOL } else { ADAPTIVE_STEP_TOL };
            let mode = if fixed { "fixed" } else { "adaptive" };
            println!("K={k:<4} {mode:<8} rel error {rel:.3e} (tolerance {tol:.0e})");
            if rel > tol {
                failures.push(format!("K={k} {mode}: {rel:.3e}"));
            }
            table.push(vec![k as f64, f64::from(u8::from(fixed)), rel])?;
        }
    }
    emit_csv(&table, &dir.join("gradcheck.csv"))?;
    if !failures.is_empty() {
        bail!(NumericalFailure(format!("gradient check above tolerance: {}", failures.join("; "))));
    }
    Ok(())
}

fn cmd_metrics(a: &MetricsArgs) -> Result<()> {
    let est = load_csv(&a.estimate).with_context(|| format!("reading {}", a.estimate.display()))?;
    let reference = load_csv(&a.reference).with_context(|| format!("reading {}", a.reference.display()))?;
    let has = |t: &CsvTable, c: &str| t.columns.iter().any(|n| n == c);
    let values = if has(&est, "re") && has(&est, "im") && has(&reference, "re") && has(&reference, "im") {
        let complex = |t: &CsvTable| -> Result<Vec<Complex64>> {
            Ok(t.column("re")?.into_iter().zip(t.column("im")?).map(|(r, i)| Complex64::new(r, i)).collect())
        };
        vec![MetricValue::new(MetricName::NormalizedError, normalized_error(&complex(&est)?, &complex(&reference)?)?)]
    } else {
        let (fe, fr) = (est.column("f")?, reference.column("f")?);
        vec![
            MetricValue::new(MetricName::NormalizedReconError, normalized_recon_error(&fe, &fr)?),
            MetricValue::new(MetricName::SnrDb, snr_db(&fe, &fr)?),
        ]
    };
    println!("{}", serde_json::to_string_pretty(&values)?);
    Ok(())
}

/// `start:step:stop`, inclusive of `stop` up to rounding.
pub fn parse_range(s: &str) -> Result<Vec<f64>> {
    let parts: Vec<f64> = s.split(':').map(|p| p.trim().parse::<f64>()).collect::<std::result::Result<_, _>>()?;
    let [start, step, stop] = parts[..] else {
        bail!(msinv::Error::Config(format!("range {s:?} is not start:step:stop")));
    };
    if !(step > 0.0) || stop < start {
        bail!(msinv::Error::Config(format!("range {s:?} needs a positive step and stop >= start")));
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|i| start + i as f64 * step).collect())
}

fn cmd_sweep_contrast(cli: &Cli, a: &ContrastSweepArgs) -> Result<()> {
    let dir = output_dir(cli, None)?;
    let lambda = 0.0749;
    let radius = 0.5 * a.diameter_wavelengths * lambda;
    let grid = DomainGrid::centered(vec![a.dims, a.dims], lambda / a.pixels_per_wavelength, lambda, 1.0)?;
    let k_b = grid.background_wavenumber();
    let g = build_domain_operator(&grid)?;
    let h = build_sensor_operator(&grid, &SensorSet::new(vec![[0.0, 1.5, 0.0]])?)?;
    let src = [1.0, 0.0, 0.0];
    let u_in: Vec<Complex64> = grid
        .positions()
        .iter()
        .map(|p| green(2, &[p[0] - src[0], p[1] - src[1], 0.0], k_b))
        .collect::<msinv::Result<_>>()?;
    let mut table = CsvTable::new(&["contrast", "iterations", "forward_error", "born_error"])
        .comment(grid_comment(&grid))
        .comment(format!("cylinder radius_m={radius}, line source 1 m from center; errors are normalized"));
    for c in parse_range(&a.contrast)? {
        let f = PhantomSpec::single_cylinder(radius, c).render(&grid)?;
        let scene = AnalyticScene::new(radius, AnalyticScene::index_for_contrast(c), 1.0, k_b)?;
        let (exact, _) = cylinder_field_on_grid(&scene, &grid, grid.center())?;
        let fu: Vec<Complex64> = f.iter().zip(&u_in).map(|(a, b)| b * *a).collect();
        let born: Vec<Complex64> = g.apply(&fu)?.iter().zip(&u_in).map(|(a, b)| a + b).collect();
        let born_err = normalized_error(&born, &exact)?;
        for &k in &a.iterations {
            let t = forward_solve(&f, &u_in, &g, &h, &[0], &ForwardConfig { max_iters: k, ..Default::default() })?;
            let e = normalized_error(&t.u_hat, &exact)?;
            table.push(vec![c, k as f64, e, born_err])?;
        }
        log::info!("contrast {c}: done");
    }
    let path = dir.join(format!("{}.csv", a.name));
    emit_csv(&table, &path)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn cmd_sweep_subsample(cli: &Cli, a: &SubsampleSweepArgs) -> Result<()> {
    let cfg = load_config(&a.config)?;
    let dir = output_dir(cli, Some(&cfg))?;
    let grid = cfg.grid.build()?;
    let meas = MeasurementSet::load(&a.data).with_context(|| format!("reading measurements {}", a.data.display()))?;
    let truth = a.truth.as_deref().map(|p| load_image(p, grid.len())).transpose()?;
    let mut table = CsvTable::new(&["factor", "measurements", "data_fit", "recon_error", "snr_db"])
        .comment(grid_comment(&grid))
        .comment("recon_error and snr_db are NaN without ground truth");
    for &factor in &a.factors {
        let sub = meas.subsample(factor)?;
        let report = reconstruct(&cfg, &grid, &sub, cfg.recon.model, truth.as_deref())?;
        let (err, snr) = match &truth {
            Some(t) => (normalized_recon_error(&report.f_hat, t)?, snr_db(&report.f_hat, t)?),
            None => (f64::NAN, f64::NAN),
        };
        table.push(vec![factor as f64, sub.measurement_count() as f64, report.final_data_fit, err, snr])?;
        log::info!("factor {factor}: data fit {:.3e}", report.final_data_fit);
    }
    let path = dir.join(format!("{}.csv", a.name));
    emit_csv(&table, &path)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn cmd_import(cli: &Cli, a: &ImportArgs) -> Result<()> {
    let dir = output_dir(cli, None)?;
    let cfg = FresnelConfig { frequency_hz: a.frequency_hz, ..FresnelConfig::default() };
    let data = load_fresnel_ascii(&a.input, &cfg).with_context(|| format!("reading {}", a.input.display()))?;
    let path = dir.join(format!("{}.dat", a.name));
    data.measurements.save(&path)?;
    let worst = data.calibration_residual.iter().cloned().fold(0.0, f64::max);
    println!(
        "wrote {} ({} transmitters, {} measurements, worst incident-fit residual {worst:.3e})",
        path.display(),
        data.measurements.transmitters.len(),
        data.measurements.measurement_count()
    );
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges_include_the_end_point() {
        let r = parse_range("0.05:0.05:0.4").unwrap();
        assert_eq!(r.len(), 8);
        assert!((r[7] - 0.4).abs() < 1e-12);
        assert!(parse_range("1:0:2").is_err());
        assert!(parse_range("1:2").is_err());
    }

    #[test]
    fn error_kinds_map_to_exit_codes() {
        let io: anyhow::Error = std::io::Error::new(std::io::ErrorKind::NotFound, "x").into();
        assert_eq!(exit_code(&io), 3);
        assert_eq!(exit_code(&anyhow::Error::new(msinv::Error::Singularity)), 2);
        assert_eq!(exit_code(&anyhow::Error::new(msinv::Error::Config("x".into()))), 1);
        assert_eq!(exit_code(&anyhow::Error::new(NumericalFailure("x".into()))), 2);
        let wrapped = anyhow::Error::new(msinv::Error::Parse { line: 3, message: "x".into() }).context("reading");
        assert_eq!(exit_code(&wrapped), 3);
    }
}
