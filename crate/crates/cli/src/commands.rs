use std::fs;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use log::{info, warn};
use serde::Serialize;
use serde_json::json;

use maxpot_core::analysis::{
    probe_operator_norm, refinement_study, verify_boundary_constants,
    verify_distributional_gradient_with, verify_domination_with, verify_gradient_bound_with,
    verify_representation_with, verify_spherical_consistency_with, verify_zero_mean, write_csv,
    CheckReport, ConsistencySettings, DistributionalSettings, FunctionFamily, GaussianBump,
    GradientBoundSettings, ProbeResult, ProbeSettings, RepresentationSettings, StudyTable,
};
use maxpot_core::grid::NormSettings;
use maxpot_core::io::{read_field, write_field, write_field_csv};
use maxpot_core::operators::{
    grad_majorant, grad_truncated_potential, maximal_potential, maximal_singular, riesz_potential,
    spherical_average, spherical_maximal, spherical_via_gradient, surface_convolution,
    truncated_potential, truncated_singular,
};
use maxpot_core::{
    sample_catalog, Error, Field, Grid, KernelSpec, RadiusLadder, SphereQuadrature, SphereSymbol,
};

use crate::config::{CatalogRef, RunConfig};
use crate::error::CliError;

/// Runs the configured command; `Ok(false)` is a verification failure.
pub fn dispatch(cfg: &RunConfig) -> Result<bool, CliError> {
    let started = SystemTime::now();
    let clock = Instant::now();
    fs::create_dir_all(&cfg.out_dir)?;
    let (pass, files) = match cfg.command.as_str() {
        "gen" => (true, gen(cfg)?),
        "apply" => (true, apply(cfg)?),
        "verify" => verify(cfg)?,
        "probe" => (true, probe(cfg)?),
        "study" => (true, study(cfg)?),
        other => return Err(CliError::Usage(format!("unknown command `{other}`"))),
    };
    write_meta(cfg, started, clock, &files)?;
    Ok(pass)
}

fn unix_seconds(t: SystemTime) -> f64 {
    t.duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}

/// Timestamps and run environment go to meta.json so the result files stay
/// reproducible.
fn write_meta(
    cfg: &RunConfig,
    started: SystemTime,
    clock: Instant,
    files: &[String],
) -> Result<(), CliError> {
    let meta = json!({
        "command": cfg.command,
        "version": env!("CARGO_PKG_VERSION"),
        "threads": rayon::current_num_threads(),
        "started_unix": unix_seconds(started),
        "finished_unix": unix_seconds(SystemTime::now()),
        "elapsed_seconds": clock.elapsed().as_secs_f64(),
        "out_dir": cfg.out_dir.display().to_string(),
        "input": cfg.input.as_ref().map(|p| p.display().to_string()),
        "files": files,
    });
    write_text(
        &cfg.out_dir,
        "meta.json",
        &serde_json::to_string_pretty(&meta).expect("json"),
    )?;
    Ok(())
}

fn path(dir: &Path, name: &str) -> PathBuf {
    dir.join(name)
}

fn write_text(dir: &Path, name: &str, text: &str) -> Result<String, CliError> {
    let mut f = BufWriter::new(fs::File::create(path(dir, name))?);
    f.write_all(text.as_bytes())?;
    if !text.ends_with('\n') {
        f.write_all(b"\n")?;
    }
    f.flush()?;
    Ok(name.to_string())
}

fn write_with<F>(dir: &Path, name: &str, body: F) -> Result<String, CliError>
where
    F: FnOnce(&mut BufWriter<fs::File>) -> maxpot_core::Result<()>,
{
    let mut f = BufWriter::new(fs::File::create(path(dir, name))?);
    body(&mut f)?;
    f.flush()?;
    Ok(name.to_string())
}

fn symbol_of(r: &CatalogRef, n: usize) -> Result<SphereSymbol, CliError> {
    SphereSymbol::from_catalog(&r.id, &r.params, n)
        .map_err(|e| CliError::Usage(format!("symbol: {e}")))
}

/// The configured symbol, or `default` when none was given.
fn symbol_or(
    cfg: &RunConfig,
    n: usize,
    default: fn(usize) -> SphereSymbol,
) -> Result<SphereSymbol, CliError> {
    match &cfg.symbol {
        Some(r) => symbol_of(r, n),
        None => Ok(default(n)),
    }
}

/// The configured function on `grid`, or catalog entry `default`.
fn function_or(cfg: &RunConfig, grid: &Grid, default: &str) -> Result<Field, CliError> {
    let f = match &cfg.function {
        Some(r) => sample_catalog(&r.id, &r.params, grid)?,
        None => sample_catalog(default, &Default::default(), grid)?,
    };
    f.check_finite()?;
    Ok(f)
}

fn ladder(cfg: &RunConfig, grid: &Grid) -> Result<RadiusLadder, CliError> {
    let l = cfg.ladder_for(grid)?;
    Ok(RadiusLadder::new(l.t_min, l.t_max, l.ratio)?)
}

fn gen(cfg: &RunConfig) -> Result<Vec<String>, CliError> {
    let f = function_or(cfg, &cfg.grid(), "")?;
    Ok(vec![write_with(&cfg.out_dir, "field.mpf", |w| {
        write_field(w, &f)
    })?])
}

fn apply(cfg: &RunConfig) -> Result<Vec<String>, CliError> {
    let a = cfg.apply.as_ref().expect("apply config");
    let f = match &cfg.input {
        Some(p) => {
            let file = fs::File::open(p)
                .map_err(|e| CliError::Usage(format!("input {}: {e}", p.display())))?;
            read_field(BufReader::new(file)).map_err(|e| match e {
                Error::NonFinite(what) => {
                    Error::NonFinite(format!("{what} of {}", p.display())).into()
                }
                e => CliError::Usage(format!("input {}: {e}", p.display())),
            })?
        }
        None => function_or(cfg, &cfg.grid(), "")?,
    };
    f.check_finite()?;
    let g = *f.grid();
    let n = g.n();
    let need_t = || {
        a.t.ok_or_else(|| CliError::Usage(format!("apply.t: required for {}", a.op)))
    };
    let quad = || SphereQuadrature::new(n, cfg.quad_order).map_err(CliError::from);
    let potential = || -> Result<KernelSpec, CliError> {
        Ok(KernelSpec::potential(symbol_or(cfg, n, SphereSymbol::one)?))
    };
    let policy = &cfg.truncation;
    info!("apply {} on {:?}", a.op, g.dims());
    let out = match a.op.as_str() {
        "truncated_potential" => truncated_potential(&f, &potential()?, need_t()?, policy)?,
        "maximal_potential" => maximal_potential(&f, &potential()?, &ladder(cfg, &g)?, policy)?,
        "riesz_potential" => riesz_potential(&f, policy)?,
        "truncated_singular" | "maximal_singular" => {
            let symbol = symbol_or(cfg, n, |n| SphereSymbol::coordinate(n, 0).expect("axis 0"))?;
            let spec = KernelSpec::singular(symbol, &quad()?)?;
            if a.op == "truncated_singular" {
                truncated_singular(&f, &spec, need_t()?, policy)?
            } else {
                maximal_singular(&f, &spec, &ladder(cfg, &g)?, policy)?
            }
        }
        "grad_truncated_potential" => {
            grad_truncated_potential(&f, &potential()?, need_t()?, policy, &quad()?)?
        }
        "grad_majorant" => grad_majorant(&f, &potential()?, &ladder(cfg, &g)?, policy, &quad()?)?,
        "surface_convolution" => surface_convolution(
            &f,
            &symbol_or(cfg, n, SphereSymbol::one)?,
            need_t()?,
            &quad()?,
        )?,
        "spherical_average" => spherical_average(&f, need_t()?, &quad()?)?,
        "spherical_maximal" => spherical_maximal(&f, &ladder(cfg, &g)?, &quad()?, !a.signed)?,
        "spherical_via_gradient" => spherical_via_gradient(&f, &ladder(cfg, &g)?, policy)?,
        other => {
            return Err(CliError::Usage(format!(
                "apply.op: `{other}` is not an operator"
            )))
        }
    };
    out.check_finite()?;
    Ok(vec![
        write_with(&cfg.out_dir, "apply.mpf", |w| write_field(w, &out))?,
        write_with(&cfg.out_dir, "apply.csv", |w| write_field_csv(w, &out))?,
    ])
}

fn check_reports(reports: &[CheckReport]) -> Result<(), CliError> {
    for r in reports {
        let nan = r.max_residual.is_nan()
            || r.mean_residual.is_nan()
            || r.violation_fraction.is_nan()
            || r.samples.iter().any(|s| s.value.is_nan());
        if nan {
            return Err(Error::NonFinite(format!("report `{}`", r.check)).into());
        }
    }
    Ok(())
}

fn run_check(name: &str, cfg: &RunConfig) -> Result<Vec<CheckReport>, CliError> {
    let v = cfg.verify.as_ref().expect("verify config");
    let grid = cfg.grid();
    let n = cfg.n;
    let policy = cfg.truncation;
    let report = match name {
        "representation" => {
            let f = function_or(cfg, &grid, "gaussian")?;
            let s = RepresentationSettings {
                quad_order: cfg.explicit_quad_order(),
                policy,
                ..RepresentationSettings::default()
            };
            verify_representation_with(&f, &v.radii, &s)?
        }
        "zero_mean" => verify_zero_mean(n, cfg.quad_order)?,
        "boundary_constants" => verify_boundary_constants(n, cfg.quad_order)?,
        "distributional" => {
            let spec = KernelSpec::potential(symbol_or(cfg, n, SphereSymbol::one)?);
            let phi = GaussianBump::default().sample(&grid)?;
            let eps: Vec<f64> = v.eps_steps.iter().map(|k| k * grid.h()).collect();
            let s = DistributionalSettings {
                policy,
                ..DistributionalSettings::default()
            };
            verify_distributional_gradient_with(&spec, &phi, &eps, &s)?
        }
        "domination" => {
            let f = function_or(cfg, &grid, "ball_indicator")?;
            let spec = KernelSpec::potential(symbol_or(cfg, n, SphereSymbol::one)?);
            verify_domination_with(&f, &spec, &ladder(cfg, &grid)?, &policy)?
        }
        "gradient_bound" => return gradient_bound(cfg, &grid),
        "spherical_consistency" => {
            let f = function_or(cfg, &grid, "gaussian")?;
            let s = ConsistencySettings {
                quad_order: cfg.explicit_quad_order(),
                policy,
                ..ConsistencySettings::default()
            };
            verify_spherical_consistency_with(&f, &ladder(cfg, &grid)?, &s)?
        }
        other => {
            return Err(CliError::Usage(format!(
                "verify.checks: unknown check `{other}`"
            )))
        }
    };
    Ok(vec![report])
}

/// The bound on the configured grid and, with `refine_res`, on the refined
/// one, where the violation fraction must not grow.
fn gradient_bound(cfg: &RunConfig, grid: &Grid) -> Result<Vec<CheckReport>, CliError> {
    let v = cfg.verify.as_ref().expect("verify config");
    let spec = KernelSpec::potential(symbol_or(cfg, cfg.n, SphereSymbol::one)?);
    let s = GradientBoundSettings {
        quad_order: cfg.explicit_quad_order(),
        policy: cfg.truncation,
        ..GradientBoundSettings::default()
    };
    let run = |g: &Grid| -> Result<CheckReport, CliError> {
        let f = function_or(cfg, g, "gaussian")?;
        Ok(verify_gradient_bound_with(&f, &spec, &ladder(cfg, g)?, &s)?)
    };
    let coarse = run(grid)?;
    let Some(res) = v.refine_res else {
        return Ok(vec![coarse]);
    };
    let fine_grid = Grid::centered(cfg.n, res, cfg.half_width)?;
    let mut fine = run(&fine_grid)?;
    fine.check = "gradient_bound_refined".into();
    fine.push("coarse_violation_fraction", coarse.violation_fraction);
    fine.pass = fine.pass && fine.violation_fraction <= coarse.violation_fraction;
    Ok(vec![coarse, fine])
}

#[derive(Serialize)]
struct VerifyOutput<'a> {
    config: &'a RunConfig,
    pass: bool,
    reports: &'a [CheckReport],
}

fn verify(cfg: &RunConfig) -> Result<(bool, Vec<String>), CliError> {
    let v = cfg.verify.as_ref().expect("verify config");
    let mut reports = Vec::new();
    for name in &v.checks {
        info!("verify {name}");
        let rs = run_check(name, cfg)?;
        for r in &rs {
            info!(
                "{}: pass={} max_residual={:e}",
                r.check, r.pass, r.max_residual
            );
        }
        reports.extend(rs);
    }
    check_reports(&reports)?;
    let pass = reports.iter().all(|r| r.pass);
    let out = VerifyOutput {
        config: cfg,
        pass,
        reports: &reports,
    };
    let json = serde_json::to_string_pretty(&out).expect("reports serialize");
    let files = vec![
        write_text(&cfg.out_dir, "verify.json", &json)?,
        write_with(&cfg.out_dir, "verify.csv", |w| write_csv(w, &reports))?,
    ];
    Ok((pass, files))
}

#[derive(Serialize)]
struct ProbeOutput<'a> {
    config: &'a RunConfig,
    result: &'a ProbeResult,
}

fn probe(cfg: &RunConfig) -> Result<Vec<String>, CliError> {
    let p = cfg.probe.as_ref().expect("probe config");
    let n = cfg.n;
    let norms = NormSettings::new(p.p, n).map_err(|e| CliError::Usage(format!("probe.p: {e}")))?;
    let family = FunctionFamily::by_name(&p.family, n, p.p, cfg.seed)?;
    let mut settings = ProbeSettings::new(n)?;
    settings.op = p.op;
    settings.policy = cfg.truncation;
    settings.batch = p.batch;
    if let Some(r) = &cfg.symbol {
        settings.symbol = symbol_of(r, n)?;
    }
    let grid = cfg.grid();
    let coarse = probe_operator_norm(&family, &norms, &grid, &ladder(cfg, &grid)?, &settings)?;
    let result = match p.refine_res {
        Some(res) => {
            let fine = Grid::centered(n, res, cfg.half_width)?;
            info!("probe refinement on {:?}", fine.dims());
            let refined =
                probe_operator_norm(&family, &norms, &fine, &ladder(cfg, &fine)?, &settings)?;
            coarse.with_refinement(&refined)
        }
        None => coarse,
    };
    if result.exploratory {
        warn!(
            "p = {} is at or below n/(n-1): exploratory range, no bound is claimed",
            p.p
        );
    }
    let json = serde_json::to_string_pretty(&ProbeOutput {
        config: cfg,
        result: &result,
    })
    .expect("probe results serialize");
    Ok(vec![
        write_with(&cfg.out_dir, "probe.csv", |w| result.write_csv(w))?,
        write_text(&cfg.out_dir, "probe.json", &json)?,
    ])
}

#[derive(Serialize)]
struct StudyOutput<'a> {
    config: &'a RunConfig,
    table: &'a StudyTable,
}

fn study(cfg: &RunConfig) -> Result<Vec<String>, CliError> {
    let s = cfg.study.as_ref().expect("study config");
    let table = refinement_study(&s.op, &s.function, &s.resolutions)?;
    if table
        .rows
        .iter()
        .any(|r| r.value.iter().any(|v| v.is_nan()) || r.error.is_nan())
    {
        return Err(Error::NonFinite(format!("study {} on {}", s.op, s.function)).into());
    }
    let json = serde_json::to_string_pretty(&StudyOutput {
        config: cfg,
        table: &table,
    })
    .expect("study serializes");
    Ok(vec![
        write_with(&cfg.out_dir, "study.csv", |w| table.write_csv(w))?,
        write_text(&cfg.out_dir, "study.json", &json)?,
    ])
}
