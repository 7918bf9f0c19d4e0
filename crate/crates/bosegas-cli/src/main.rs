//! Command-line front end: configuration-driven runs of the scattering,
//! condensate, Bogoliubov-evolution, and covariance pipelines, plus the
//! exact-oracle verdicts. All artifacts are deterministic functions of the
//! configuration and seed.

mod config;
mod error;
mod pipeline;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use bosegas::bogoliubov::{propagate, ConstantGenerator, PropagationOptions, QuadraticGenerator};
use bosegas::fock::{second_quantize, verify_bogoliubov_conjugation, ExactEvolution, FockBasis};
use config::RunConfig;
use error::{CliError, ExitKind};
use report::{fmt_f64, CsvWriter, Manifest};

#[derive(Parser)]
#[command(
    name = "bosegas",
    about = "Gaussian fluctuation statistics of a dilute Bose gas: scattering, condensate, Bogoliubov evolution, covariance, and exact-oracle verdicts",
    version
)]
struct Cli {
    /// Path to the TOML configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Repeatable dotted-path override, e.g. --set lattice.points_per_axis=64
    #[arg(long = "set", global = true)]
    overrides: Vec<String>,
    /// Output directory (default: ./out).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed override for randomized draws.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Emit an annotated example configuration to stdout.
    ExampleConfig,
    /// Neumann scattering sweep: eigenvalues, scattering length, deficit
    /// convergence.
    Scattering,
    /// Condensate evolution report (and finite-N sweep distances).
    Condensate,
    /// Bogoliubov pair evolution under the assembled generator.
    Evolve,
    /// Covariance matrix time series of the configured observables.
    Covariance,
    /// Exact-oracle verdict for the pair-evolution conventions.
    OracleVerify,
    /// Chain scattering -> condensate -> evolve -> covariance and write a
    /// manifest.
    FullPipeline,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.kind.code() as u8)
        }
    }
}

fn load_config(cli: &Cli) -> Result<RunConfig, CliError> {
    match &cli.config {
        Some(path) => RunConfig::load(path, &cli.overrides),
        None => RunConfig::parse(config::example_config(), &cli.overrides),
    }
}

fn out_dir(cli: &Cli) -> Result<PathBuf, CliError> {
    let dir = cli.out.clone().unwrap_or_else(|| PathBuf::from("out"));
    std::fs::create_dir_all(&dir).map_err(CliError::io)?;
    Ok(dir)
}

fn run(cli: Cli) -> Result<(), CliError> {
    if matches!(cli.command, Command::ExampleConfig) {
        print!("{}", config::example_config());
        return Ok(());
    }
    let mut cfg = load_config(&cli)?;
    if let Some(seed) = cli.seed {
        cfg.run.seed = seed;
    }
    let dir = out_dir(&cli)?;
    match cli.command {
        Command::ExampleConfig => unreachable!(),
        Command::Scattering => cmd_scattering(&cfg, &dir),
        Command::Condensate => cmd_condensate(&cfg, &dir),
        Command::Evolve => cmd_evolve(&cfg, &dir),
        Command::Covariance => cmd_covariance(&cfg, &dir),
        Command::OracleVerify => cmd_oracle_verify(&cfg, &dir),
        Command::FullPipeline => cmd_full_pipeline(&cfg, &dir),
    }
}

fn cmd_scattering(cfg: &RunConfig, dir: &std::path::Path) -> Result<(), CliError> {
    let rows = pipeline::scattering_sweep(cfg)?;
    let path = dir.join("scattering.csv");
    let mut csv = CsvWriter::create(
        &path,
        &[
            "N",
            "beta",
            "ell",
            "lambda_N",
            "N_lambda_N",
            "a0",
            "sup_err_Nomega_vs_omegainf",
            "jump_printed_at_ell",
            "identity_residual",
        ],
    )?;
    for r in &rows {
        csv.row(&[
            fmt_f64(r.n),
            fmt_f64(r.beta),
            fmt_f64(r.ell),
            fmt_f64(r.lambda),
            fmt_f64(r.n_lambda),
            fmt_f64(r.a0),
            fmt_f64(r.sup_err),
            fmt_f64(r.jump_printed_at_ell),
            fmt_f64(r.identity_residual),
        ])?;
    }
    csv.finish()?;
    println!("wrote {}", path.display());
    Ok(())
}

fn cmd_condensate(cfg: &RunConfig, dir: &std::path::Path) -> Result<(), CliError> {
    let (series, distances) = pipeline::condensate_run(cfg)?;
    let path = dir.join("condensate.csv");
    let mut csv = CsvWriter::create(&path, &["t", "mass", "energy", "linf_norm"])?;
    for i in 0..series.times.len() {
        csv.row(&[
            fmt_f64(series.times[i]),
            fmt_f64(series.mass[i]),
            fmt_f64(series.energy[i]),
            fmt_f64(series.linf[i]),
        ])?;
    }
    csv.finish()?;
    println!("wrote {}", path.display());
    if !distances.is_empty() {
        let spath = dir.join("condensate_sweep.csv");
        let mut csv = CsvWriter::create(&spath, &["N", "beta", "distance_to_limit"])?;
        for d in &distances {
            csv.row(&[fmt_f64(d.n), fmt_f64(d.beta), fmt_f64(d.distance)])?;
        }
        csv.finish()?;
        println!("wrote {}", spath.display());
    }
    Ok(())
}

fn write_evolve_csv(
    out: &pipeline::EvolveOutput,
    dir: &std::path::Path,
) -> Result<PathBuf, CliError> {
    let path = dir.join("evolve.csv");
    let mut csv = CsvWriter::create(&path, &["t", "V_hs_sq", "sympl_defect", "U_opnorm"])?;
    for r in &out.rows {
        csv.row(&[
            fmt_f64(r.time),
            fmt_f64(r.vacuum_number),
            fmt_f64(r.symplectic_defect),
            fmt_f64(r.u_op_norm),
        ])?;
    }
    csv.finish()?;
    Ok(path)
}

fn cmd_evolve(cfg: &RunConfig, dir: &std::path::Path) -> Result<(), CliError> {
    let out = pipeline::evolve_run(cfg, &[], Some(dir))?;
    let path = write_evolve_csv(&out, dir)?;
    println!("wrote {}", path.display());
    println!(
        "max symplectic defect {:.3e}, max conjugation defect {:.3e}",
        out.max_symplectic_defect, out.max_conjugation_defect
    );
    Ok(())
}

fn write_covariance_csv(
    out: &pipeline::EvolveOutput,
    dir: &std::path::Path,
) -> Result<(PathBuf, PathBuf), CliError> {
    let path = dir.join("covariance.csv");
    let mut csv = CsvWriter::create(
        &path,
        &["t", "i", "j", "re_sigma_ij", "im_sigma_ij", "det_sigma", "var_sigma_t"],
    )?;
    for tap in &out.taps {
        let k = tap.report.sigma.nrows();
        for i in 0..k {
            for j in 0..k {
                csv.row(&[
                    fmt_f64(tap.time),
                    i.to_string(),
                    j.to_string(),
                    fmt_f64(tap.report.sigma[(i, j)].re),
                    fmt_f64(tap.report.sigma[(i, j)].im),
                    fmt_f64(tap.report.determinant.re),
                    fmt_f64(tap.report.variance()),
                ])?;
            }
        }
    }
    csv.finish()?;
    let plot = dir.join("covariance_plot.csv");
    let mut pcsv = CsvWriter::create(&plot, &["t", "sigma_sq"])?;
    for tap in &out.taps {
        pcsv.row(&[fmt_f64(tap.time), fmt_f64(tap.report.variance())])?;
    }
    pcsv.finish()?;
    Ok((path, plot))
}

fn cmd_covariance(cfg: &RunConfig, dir: &std::path::Path) -> Result<(), CliError> {
    let observables = pipeline::build_observables(cfg)?;
    if observables.is_empty() {
        return Err(CliError::new(
            ExitKind::Config,
            "covariance requires at least one [[observables]] entry",
        ));
    }
    let out = pipeline::evolve_run(cfg, &observables, None)?;
    let (path, plot) = write_covariance_csv(&out, dir)?;
    println!("wrote {}", path.display());
    println!("wrote {}", plot.display());
    Ok(())
}

struct OracleVerdict {
    defect: f64,
    leakage: f64,
    pass: bool,
}

fn oracle_verdict(cfg: &RunConfig) -> Result<OracleVerdict, CliError> {
    use rand_chacha::rand_core::SeedableRng;
    let oc = &cfg.oracle;
    let (h1, h2) = pipeline::matched_oracle_instance(oc.modes, cfg.run.seed);
    let basis = FockBasis::<f64>::new(oc.modes, oc.n_max, FockBasis::<f64>::DEFAULT_DIMENSION_LIMIT)?;
    let gen = second_quantize(&basis, &h1, &h2, num_complex::Complex64::new(0.0, 0.0))?;
    let exact = ExactEvolution::new(&gen)?;
    let fock_u = exact.unitary(oc.t_final);
    let mut g0 = QuadraticGenerator::zero(oc.modes, 1.0, 0.0);
    g0.h1 = h1;
    g0.h2 = h2;
    let mut src = ConstantGenerator { gen: g0 };
    let (pair, _) = propagate(
        &mut src,
        oc.modes,
        1.0,
        0.0,
        oc.t_final,
        oc.dt,
        PropagationOptions {
            defect_limit: oc.tolerance.max(1e-6),
            record_stride: usize::MAX / 2,
        },
    )?;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(cfg.run.seed);
    let mut worst: f64 = 0.0;
    let mut leakage: f64 = 0.0;
    for _ in 0..oc.samples {
        let f = pipeline::random_mode_vector(&mut rng, oc.modes);
        let g = pipeline::random_mode_vector(&mut rng, oc.modes);
        let (tf, tg) = pair.map_pair(&f, &g);
        let check = verify_bogoliubov_conjugation(
            &basis,
            &fock_u,
            &f,
            &g,
            &tf,
            &tg,
            oc.leakage_limit,
            oc.probe_sector,
        )?;
        worst = worst.max(check.defect);
        leakage = leakage.max(check.leakage);
    }
    Ok(OracleVerdict {
        defect: worst,
        leakage,
        pass: worst <= cfg.oracle.tolerance,
    })
}

fn cmd_oracle_verify(cfg: &RunConfig, dir: &std::path::Path) -> Result<(), CliError> {
    let v = oracle_verdict(cfg)?;
    let json = serde_json::json!({
        "test": "bogoliubov-conjugation",
        "M": cfg.oracle.modes,
        "n_max": cfg.oracle.n_max,
        "dt": fmt_f64(cfg.oracle.dt),
        "defect": fmt_f64(v.defect),
        "leakage": fmt_f64(v.leakage),
        "pass": v.pass,
    });
    let text = serde_json::to_string_pretty(&json).expect("json");
    println!("{text}");
    std::fs::write(dir.join("oracle_verdict.json"), text + "\n").map_err(CliError::io)?;
    if !v.pass {
        return Err(CliError::new(
            ExitKind::Solver,
            format!("oracle defect {:.3e} above tolerance {:.3e}", v.defect, cfg.oracle.tolerance),
        ));
    }
    Ok(())
}

fn cmd_full_pipeline(cfg: &RunConfig, dir: &std::path::Path) -> Result<(), CliError> {
    let mut manifest = Manifest::new("full-pipeline", cfg.config_hash(), cfg.run.seed);
    std::fs::write(dir.join("config.toml"), cfg.canonical_toml()).map_err(CliError::io)?;
    manifest.artifacts.push("config.toml".into());

    // 1. scattering
    cmd_scattering(cfg, dir)?;
    manifest.artifacts.push("scattering.csv".into());
    let rows = pipeline::scattering_sweep(cfg)?;
    if let Some(last) = rows.last() {
        manifest.metric("scattering_identity_residual", last.identity_residual);
        manifest.metric("scattering_sup_err", last.sup_err);
    }

    // 2. condensate
    cmd_condensate(cfg, dir)?;
    manifest.artifacts.push("condensate.csv".into());
    let (series, distances) = pipeline::condensate_run(cfg)?;
    if let (Some(first), Some(last)) = (series.mass.first(), series.mass.last()) {
        manifest.metric("condensate_mass_drift", ((last - first) / first).abs());
    }
    if !distances.is_empty() {
        manifest.artifacts.push("condensate_sweep.csv".into());
    }

    // 3 + 4. evolve with covariance taps
    let observables = pipeline::build_observables(cfg)?;
    let out = pipeline::evolve_run(cfg, &observables, Some(dir))?;
    let epath = write_evolve_csv(&out, dir)?;
    manifest.artifacts.push(epath.file_name().unwrap().to_string_lossy().into_owned());
    manifest.metric("max_symplectic_defect", out.max_symplectic_defect);
    manifest.metric("max_conjugation_defect", out.max_conjugation_defect);
    manifest.note(
        "resolution_warning",
        if out.resolution_warning { "true" } else { "false" },
    );
    if !observables.is_empty() {
        let (cpath, ppath) = write_covariance_csv(&out, dir)?;
        manifest.artifacts.push(cpath.file_name().unwrap().to_string_lossy().into_owned());
        manifest.artifacts.push(ppath.file_name().unwrap().to_string_lossy().into_owned());
        if let Some(last) = out.taps.last() {
            manifest.metric("final_variance", last.report.variance());
            manifest.metric("final_hermiticity_defect", last.report.hermiticity_defect);
        }
    }
    if cfg.evolve.save_snapshots {
        for f in ["pair_u.kern", "pair_v.kern", "pairing.kern"] {
            manifest.artifacts.push(f.into());
        }
    }

    // 5. oracle verdict
    let v = oracle_verdict(cfg)?;
    let verdict_json = serde_json::json!({
        "test": "bogoliubov-conjugation",
        "M": cfg.oracle.modes,
        "n_max": cfg.oracle.n_max,
        "dt": fmt_f64(cfg.oracle.dt),
        "defect": fmt_f64(v.defect),
        "leakage": fmt_f64(v.leakage),
        "pass": v.pass,
    });
    std::fs::write(
        dir.join("oracle_verdict.json"),
        serde_json::to_string_pretty(&verdict_json).expect("json") + "\n",
    )
    .map_err(CliError::io)?;
    manifest.artifacts.push("oracle_verdict.json".into());
    manifest.metric("oracle_defect", v.defect);
    manifest.metric("oracle_leakage", v.leakage);
    manifest.note("oracle_pass", if v.pass { "true" } else { "false" });

    manifest.write(&dir.join("manifest.json"))?;
    println!("wrote {}", dir.join("manifest.json").display());
    if !v.pass {
        return Err(CliError::new(ExitKind::Solver, "oracle verdict failed"));
    }
    Ok(())
}
