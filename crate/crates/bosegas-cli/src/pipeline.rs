//! Shared drivers behind the subcommands: scattering sweeps, condensate
//! runs, and the assembled Bogoliubov evolution with covariance taps.

use std::path::Path;

use ndarray::Array1;
use num_complex::Complex64 as C64;

use bosegas::bogoliubov::{
    bdg_step, AssembledGenerator, BogoliubovPair, GeneratorContext, PropagationRow,
};
use bosegas::clt::{covariance_matrix, fluctuation_vector, CovarianceReport, Observable};
use bosegas::condensate::{
    energy, evolve_modified_hartree, evolve_nls, periodized_gaussian, CondensateTrajectory,
    SigmaMode,
};
use bosegas::grid::{GridFunction, Lattice};
use bosegas::kernels::{BogoliubovKernels, DisplacementField, FamilyBuilder, KernelProvenance};
use bosegas::scattering::{
    lambda_infinity, solve_neumann_scattering, scattering_length, OmegaProfile, OmegaVariant,
    Potential, PotentialShape,
};
use bosegas::snapshot::write_kernel;

use crate::config::RunConfig;
use crate::error::{CliError, ExitKind};

pub fn build_potential(cfg: &RunConfig, particle_number: f64) -> Potential<f64> {
    match cfg.potential.shape.as_str() {
        "zero" => Potential::zero().with_particle_number(particle_number),
        _ => Potential::new(
            PotentialShape::CompactBump,
            cfg.potential.amplitude,
            cfg.potential.support_radius,
            cfg.potential.beta,
            particle_number,
        ),
    }
}

pub fn lattice_of(cfg: &RunConfig) -> Result<Lattice<f64>, CliError> {
    Ok(Lattice::new(
        cfg.lattice.dim,
        cfg.lattice.points_per_axis,
        cfg.lattice.box_length,
    )?)
}

pub fn omega_variant(cfg: &RunConfig) -> OmegaVariant {
    match cfg.evolve.omega_variant.as_str() {
        "as-printed" => OmegaVariant::AsPrinted,
        _ => OmegaVariant::NeumannLimit,
    }
}

pub fn sigma_mode(cfg: &RunConfig) -> SigmaMode {
    match cfg.condensate.sigma_mode.as_str() {
        "linear-as-printed" => SigmaMode::LinearAsPrinted,
        _ => SigmaMode::Cubic,
    }
}

pub struct ScatteringRow {
    pub n: f64,
    pub beta: f64,
    pub ell: f64,
    pub lambda: f64,
    pub n_lambda: f64,
    pub a0: f64,
    pub sup_err: f64,
    pub jump_printed_at_ell: f64,
    pub identity_residual: f64,
}

/// Solve the Neumann problem across the configured N values and compare the
/// scaled deficit against the limiting profile.
pub fn scattering_sweep(cfg: &RunConfig) -> Result<Vec<ScatteringRow>, CliError> {
    let ell = cfg.ell();
    let sweep: Vec<f64> = if cfg.potential.particle_sweep.is_empty() {
        vec![cfg.potential.particle_number]
    } else {
        cfg.potential.particle_sweep.clone()
    };
    let mut rows = Vec::new();
    for &n in &sweep {
        let pot = build_potential(cfg, n);
        let sol = solve_neumann_scattering(&pot, ell, cfg.scattering.radial_points)?;
        let a0 = scattering_length(&pot, cfg.scattering.radial_points);
        let limit = OmegaProfile::new(3, OmegaVariant::NeumannLimit, ell, pot.b0());
        let printed = OmegaProfile::new(3, OmegaVariant::AsPrinted, ell, pot.b0());
        let delta = 0.05 * ell;
        let mut sup = 0.0f64;
        for (&r, &w) in sol.scaled_deficit.r.iter().zip(&sol.scaled_deficit.v) {
            if r >= delta && r <= ell {
                sup = sup.max((w - limit.eval(r)).abs());
            }
        }
        let jump = (sol.n_deficit(ell) - printed.eval(ell)).abs();
        rows.push(ScatteringRow {
            n,
            beta: pot.beta,
            ell,
            lambda: sol.eigenvalue,
            n_lambda: n * sol.eigenvalue,
            a0,
            sup_err: sup,
            jump_printed_at_ell: jump,
            identity_residual: sol.identity_residual,
        });
    }
    Ok(rows)
}

pub struct CondensateSeries {
    pub times: Vec<f64>,
    pub mass: Vec<f64>,
    pub energy: Vec<f64>,
    pub linf: Vec<f64>,
}

pub struct SweepDistance {
    pub n: f64,
    pub beta: f64,
    pub distance: f64,
}

/// Limiting condensate run plus (optionally) the finite-N sweep distances at
/// the final time.
pub fn condensate_run(
    cfg: &RunConfig,
) -> Result<(CondensateSeries, Vec<SweepDistance>), CliError> {
    let lattice = lattice_of(cfg)?;
    let phi0 = periodized_gaussian(&lattice, cfg.condensate.initial_width);
    let pot0 = build_potential(cfg, cfg.potential.particle_number);
    let sigma = pot0.b0();
    let dt = cfg.condensate_dt();
    let traj = evolve_nls(&phi0, sigma, sigma_mode(cfg), cfg.condensate.t_final, dt)?;
    let mut series = CondensateSeries {
        times: Vec::new(),
        mass: Vec::new(),
        energy: Vec::new(),
        linf: Vec::new(),
    };
    for (k, snap) in traj.snapshots.iter().enumerate() {
        series.times.push(k as f64 * dt);
        series.mass.push(snap.norm_l2());
        series.energy.push(energy(&traj, snap));
        series.linf.push(snap.norm_linf());
    }
    let mut distances = Vec::new();
    if !cfg.potential.particle_sweep.is_empty() && !pot0.is_zero() {
        let phi_limit = traj.snapshots.last().unwrap();
        for &n in &cfg.potential.particle_sweep {
            let pot = build_potential(cfg, n);
            let sol = solve_neumann_scattering(&pot, cfg.ell(), cfg.scattering.radial_points)?;
            let htraj =
                evolve_modified_hartree(&phi0, &pot, &sol, cfg.condensate.t_final, dt)?;
            let dist = htraj.snapshots.last().unwrap().sub(phi_limit).norm_l2();
            distances.push(SweepDistance {
                n,
                beta: pot.beta,
                distance: dist,
            });
        }
    }
    Ok((series, distances))
}

pub struct CovarianceTap {
    pub time: f64,
    pub report: CovarianceReport<f64>,
}

pub struct EvolveOutput {
    pub rows: Vec<PropagationRow<f64>>,
    pub taps: Vec<CovarianceTap>,
    pub max_symplectic_defect: f64,
    pub max_conjugation_defect: f64,
    pub resolution_warning: bool,
}

/// Assembled-generator Bogoliubov evolution with optional covariance taps
/// and final-state kernel snapshots.
pub fn evolve_run(
    cfg: &RunConfig,
    observables: &[Observable<f64>],
    snapshot_dir: Option<&Path>,
) -> Result<EvolveOutput, CliError> {
    let lattice = lattice_of(cfg)?;
    let pot = build_potential(cfg, cfg.potential.particle_number);
    let b0 = pot.b0();
    let ell = cfg.ell();
    let dt = cfg.evolve.dt;
    let t_final = cfg.evolve.t_final;
    if dt <= 0.0 || t_final <= 0.0 {
        return Err(CliError::new(
            ExitKind::Config,
            "evolve.dt and evolve.t_final must be positive",
        ));
    }
    let phi0 = periodized_gaussian(&lattice, cfg.condensate.initial_width);
    // Half-step trajectory so the generator exists at midpoint times.
    let traj: CondensateTrajectory<f64> =
        evolve_nls(&phi0, b0, sigma_mode(cfg), t_final, dt / 2.0)?;
    let prof = OmegaProfile::new(lattice.dim(), omega_variant(cfg), ell, b0);
    let omega = DisplacementField::build(&lattice, &prof);
    let fb = FamilyBuilder::new(&traj, omega, KernelProvenance::Limiting);
    let ctx = GeneratorContext {
        b0,
        ell,
        lambda_inf: lambda_infinity(lattice.dim(), b0, ell),
    };
    let mut source = AssembledGenerator { builder: &fb, ctx };

    let n = lattice.total_points();
    let steps = (t_final / dt).round() as usize;
    let mut pair = BogoliubovPair::identity(n, lattice.cell_volume(), 0.0);
    let mut out = EvolveOutput {
        rows: Vec::new(),
        taps: Vec::new(),
        max_symplectic_defect: 0.0,
        max_conjugation_defect: 0.0,
        resolution_warning: traj.resolution_warning,
    };
    let record = |pair: &BogoliubovPair<f64>,
                      out: &mut EvolveOutput,
                      fb: &FamilyBuilder<f64>|
     -> Result<(), CliError> {
        let row = PropagationRow {
            time: pair.time,
            vacuum_number: pair.vacuum_number(),
            symplectic_defect: pair.symplectic_defect(),
            conjugation_defect: pair.conjugation_defect(),
            u_op_norm: pair.u_op_norm(),
        };
        out.max_symplectic_defect = out.max_symplectic_defect.max(row.symplectic_defect);
        out.max_conjugation_defect = out.max_conjugation_defect.max(row.conjugation_defect);
        if row.symplectic_defect > cfg.evolve.defect_limit {
            return Err(CliError::new(
                ExitKind::Solver,
                format!(
                    "symplectic defect {:.3e} exceeds {:.3e}; reduce evolve.dt",
                    row.symplectic_defect, cfg.evolve.defect_limit
                ),
            ));
        }
        out.rows.push(row);
        if !observables.is_empty() {
            let traj_step = (pair.time / fb.trajectory.dt).round() as usize;
            let family: BogoliubovKernels<f64> = fb.family_at_step(traj_step)?;
            let phi_t = fb.trajectory.at_step(traj_step).normalized()?;
            let mut nus: Vec<GridFunction<f64>> = Vec::with_capacity(observables.len());
            for obs in observables {
                nus.push(fluctuation_vector(obs, &phi_t, &family, pair)?);
            }
            let report = covariance_matrix(pair.time, &nus)?;
            out.taps.push(CovarianceTap {
                time: pair.time,
                report,
            });
        }
        Ok(())
    };
    record(&pair, &mut out, &fb)?;
    for k in 0..steps {
        bdg_step(&mut pair, &mut source, dt);
        if (k + 1) % cfg.evolve.output_stride == 0 || k + 1 == steps {
            record(&pair, &mut out, &fb)?;
        }
    }

    if let Some(dir) = snapshot_dir {
        if cfg.evolve.save_snapshots {
            std::fs::create_dir_all(dir).map_err(CliError::io)?;
            let t = pair.time;
            let u_kernel = bosegas::grid::Kernel::new(lattice.clone(), pair.u.clone());
            let v_kernel = bosegas::grid::Kernel::new(lattice.clone(), pair.v.clone());
            write_kernel(&dir.join("pair_u.kern"), &u_kernel, t)?;
            write_kernel(&dir.join("pair_v.kern"), &v_kernel, t)?;
            let final_step = (t / traj.dt).round() as usize;
            let family = fb.family_at_step(final_step)?;
            write_kernel(&dir.join("pairing.kern"), &family.pairing, t)?;
        }
    }
    Ok(out)
}

/// Build the configured observables on the lattice.
pub fn build_observables(cfg: &RunConfig) -> Result<Vec<Observable<f64>>, CliError> {
    let lattice = lattice_of(cfg)?;
    let mut out = Vec::new();
    for oc in &cfg.observables {
        let obs = match oc.kind.as_str() {
            "position-window" => {
                let mut center = oc.center.clone();
                center.resize(lattice.dim(), cfg.lattice.box_length / 2.0);
                let mut o = Observable::position_window(&lattice, &center, oc.width, oc.smoothing);
                o.name = oc.name.clone();
                o
            }
            _ => {
                let mut o = Observable::momentum_window(&lattice, oc.k_cut, oc.smoothing);
                o.name = oc.name.clone();
                o
            }
        };
        out.push(obs);
    }
    Ok(out)
}

/// Deterministic weak-pairing matched instance for the oracle verdicts.
pub fn matched_oracle_instance(
    modes: usize,
    seed: u64,
) -> (ndarray::Array2<C64>, ndarray::Array2<C64>) {
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed ^ 0x0b0e);
    let mut h1 = ndarray::Array2::from_elem((modes, modes), C64::new(0.0, 0.0));
    let mut h2 = ndarray::Array2::from_elem((modes, modes), C64::new(0.0, 0.0));
    for i in 0..modes {
        h1[(i, i)] = C64::new(0.8 + 0.4 * rng.gen::<f64>(), 0.0);
        for j in (i + 1)..modes {
            let z = C64::new(0.2 * (rng.gen::<f64>() - 0.5), 0.2 * (rng.gen::<f64>() - 0.5));
            h1[(i, j)] = z;
            h1[(j, i)] = z.conj();
        }
    }
    for i in 0..modes {
        for j in i..modes {
            let z = C64::new(0.03 * (rng.gen::<f64>() - 0.5) + 0.025, 0.015 * (rng.gen::<f64>() - 0.5));
            h2[(i, j)] = z;
            h2[(j, i)] = z;
        }
    }
    (h1, h2)
}

pub fn random_mode_vector(rng: &mut rand_chacha::ChaCha8Rng, modes: usize) -> Array1<C64> {
    use rand::Rng;
    Array1::from_shape_fn(modes, |_| {
        C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
    })
}
