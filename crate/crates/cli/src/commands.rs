use std::collections::BTreeSet;

use num_complex::Complex64;
use rayon::prelude::*;
use serde_json::{json, Value};
use triwell::algebra::hamiltonian_direct;
use triwell::distributions::{
    circular_variance, count_local_maxima, husimi_population, phase_distribution, population_axes, Axis,
    ScalarField2D,
};
use triwell::purity::{critical_chi_q, power_law_fit, purity_scan, CriticalSearch};
use triwell::semiclassical::{
    branch_energies, find_fixed_points, integrate_trajectory, level_crossing, theta_min_analysis, ClassicalPoint,
    Stability, ThetaMinOptions,
};
use triwell::spectral::{eigensolve_lowest, ground_state};
use triwell::{CoherentPoint, FockBasis, ModelParams};

use crate::config::{
    parse_tuple, resolve_mu, resolve_n_list, resolve_omega, FileConfig, FieldsArgs, FixedPointsArgs, GridSpec,
    PurityScanArgs, ScalingArgs, SpectrumArgs, ThetaMinArgs, TrajectoryArgs,
};
use crate::output::{fmt_f64, fmt_opt, Dataset, RunOutput, Table};

use crate::CliError;

fn stability_name(s: Stability) -> &'static str {
    match s {
        Stability::StableCenter => "stable-center",
        Stability::Unstable => "unstable",
    }
}

fn distinct(ns: &[usize]) -> Result<(), CliError> {
    let set: BTreeSet<_> = ns.iter().collect();
    if set.len() != ns.len() {
        return Err(CliError::Usage(format!("particle numbers {ns:?} contain duplicates")));
    }
    if ns.contains(&0) {
        return Err(CliError::Usage("particle numbers must be positive".into()));
    }
    Ok(())
}

pub fn spectrum(args: &SpectrumArgs, file: &FileConfig) -> Result<RunOutput, CliError> {
    let model = args.model.resolve(file)?;
    let k = args.k.or(file.k).unwrap_or(4);
    let basis = FockBasis::new(model.params.n_particles);
    if k == 0 || k > basis.dimension() {
        return Err(CliError::Usage(format!(
            "k = {k} outside 1..={} (Hilbert-space dimension)",
            basis.dimension()
        )));
    }
    let h = hamiltonian_direct(&basis, &model.params);
    let spec = eigensolve_lowest(&h, k)?;
    let mut table = Table::new(&["index", "energy", "residual"]);
    for (i, (e, r)) in spec.eigenvalues.iter().zip(&spec.residuals).enumerate() {
        table.push(vec![i.to_string(), fmt_f64(*e), fmt_f64(*r)]);
    }
    let max_residual = spec.residuals.iter().cloned().fold(0.0, f64::max);
    let metadata = json!({
        "dimension": basis.dimension(),
        "method": if spec.iterations == 0 { "dense" } else { "lanczos" },
        "lanczos_steps": spec.iterations,
        "spectral_scale": spec.scale,
        "max_residual": max_residual,
    });
    Ok(RunOutput {
        command: "spectrum",
        config: json!({ "model": model.to_json(), "k": k }),
        datasets: vec![Dataset::new("spectrum", table, metadata)],
    })
}

pub fn purity_scan_cmd(args: &PurityScanArgs, file: &FileConfig) -> Result<RunOutput, CliError> {
    let omega = resolve_omega(args.omega, file)?;
    let mu = resolve_mu(args.mu, file)?;
    let ns = resolve_n_list(&args.n, file, &[30]);
    distinct(&ns)?;
    let grid = args.grid.resolve(file, (0.0, 4.0, 0.05))?;
    let chis = grid.values();
    let mut datasets = Vec::new();
    for &n in &ns {
        let scan = purity_scan(omega, mu, n, &chis)?;
        let mut table = Table::new(&["chi", "purity", "dP_dchi"]);
        for i in 0..chis.len() {
            table.push(vec![fmt_f64(chis[i]), fmt_f64(scan.purity[i]), fmt_opt(scan.derivative[i])]);
        }
        let steepest = scan
            .derivative
            .iter()
            .enumerate()
            .filter_map(|(i, d)| d.map(|d| (chis[i], d)))
            .min_by(|a, b| a.1.total_cmp(&b.1));
        let metadata = json!({
            "n": n,
            "steepest_descent": steepest.map(|(chi, d)| json!({ "chi": chi, "dP_dchi": d })),
        });
        datasets.push(Dataset::new(format!("purity_n{n}"), table, metadata));
    }
    Ok(RunOutput {
        command: "purity-scan",
        config: json!({ "omega": omega, "mu": mu, "n": ns, "chi_grid": grid.to_json() }),
        datasets,
    })
}

pub const DEFAULT_SCALING_N: [usize; 8] = [10, 15, 20, 25, 30, 40, 50, 60];

pub fn scaling(args: &ScalingArgs, file: &FileConfig) -> Result<RunOutput, CliError> {
    let omega = resolve_omega(args.omega, file)?;
    let mu = resolve_mu(args.mu, file)?;
    let ns = resolve_n_list(&args.n, file, &DEFAULT_SCALING_N);
    distinct(&ns)?;
    if ns.len() < 3 {
        return Err(CliError::Usage(format!(
            "scaling needs at least three particle numbers, got {ns:?}"
        )));
    }
    let window = args.grid.resolve(file, (1.95, 2.6, 0.005))?;
    let search = CriticalSearch {
        window: (window.min, window.max),
        coarse_step: window.step,
        fd_step: args.fd_step.or(file.fd_step).unwrap_or(0.005),
        tolerance: args.tolerance.or(file.tolerance).unwrap_or(1e-4),
    };
    if !(search.fd_step > 0.0 && search.tolerance > 0.0) {
        return Err(CliError::Usage("fd-step and tolerance must be positive".into()));
    }
    let (chi_c, chi_c_source) = match args.chi_c.or(file.chi_c) {
        Some(c) => (c, "given"),
        None => (level_crossing(mu)?, "level crossing"),
    };
    let points = ns
        .iter()
        .map(|&n| critical_chi_q(omega, mu, n, &search))
        .collect::<Result<Vec<_>, _>>()?;
    let chi_q: Vec<f64> = points.iter().map(|p| p.chi).collect();
    let fit = power_law_fit(&ns, &chi_q, chi_c)?;
    let mut table = Table::new(&["n", "chi_q", "min_dP_dchi", "evaluations", "chi_q_fit", "ln_residual"]);
    for (i, (&n, p)) in ns.iter().zip(&points).enumerate() {
        table.push(vec![
            n.to_string(),
            fmt_f64(p.chi),
            fmt_f64(p.min_derivative),
            p.evaluations.to_string(),
            fmt_f64(fit.predict(n as f64)),
            fmt_f64(fit.residuals[i]),
        ]);
    }
    let metadata = json!({
        "chi_c": chi_c,
        "chi_c_source": chi_c_source,
        "exponent": fit.exponent,
        "exponent_stderr": fit.exponent_stderr,
        "ln_prefactor": fit.ln_prefactor,
        "ln_prefactor_stderr": fit.ln_prefactor_stderr,
    });
    Ok(RunOutput {
        command: "scaling",
        config: json!({
            "omega": omega,
            "mu": mu,
            "n": ns,
            "window": [search.window.0, search.window.1],
            "coarse_step": search.coarse_step,
            "fd_step": search.fd_step,
            "tolerance": search.tolerance,
        }),
        datasets: vec![Dataset::new("scaling", table, metadata)],
    })
}

fn field_table(field: &ScalarField2D, value_label: &str) -> Table {
    let mut table = Table::new(&[&field.axis1.label, &field.axis2.label, value_label]);
    for (i, &x) in field.axis1.values.iter().enumerate() {
        for (j, &y) in field.axis2.values.iter().enumerate() {
            let v = field.is_valid(i, j).then(|| field.values[(i, j)]);
            table.push(vec![fmt_f64(x), fmt_f64(y), fmt_opt(v)]);
        }
    }
    table
}

fn field_summary(field: &ScalarField2D, threshold: f64) -> Result<Value, CliError> {
    Ok(json!({
        "shape": [field.axis1.len(), field.axis2.len()],
        "max": field.max(),
        "argmax": field.argmax().map(|(x, y)| [x, y]),
        "threshold": threshold,
        "local_maxima": count_local_maxima(field, threshold)?,
    }))
}

pub fn fields(args: &FieldsArgs, file: &FileConfig) -> Result<RunOutput, CliError> {
    let model = args.model.resolve(file)?;
    let m = args.grid.or(file.grid).unwrap_or(101);
    let mp = args.phase_grid.or(file.phase_grid).unwrap_or(256);
    let threshold = args.threshold.or(file.threshold).unwrap_or(0.2);
    if m < 2 || mp < 3 {
        return Err(CliError::Usage(format!(
            "grids too small: occupation {m} (needs >= 2), phase {mp} (needs >= 3)"
        )));
    }
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(CliError::Usage(format!("threshold must lie in (0, 1), got {threshold}")));
    }
    let n = model.params.n_particles;
    let basis = FockBasis::new(n);
    let (energy, state) = ground_state(&model.params)?;
    let (a1, a2) = population_axes(n, m);
    let husimi = husimi_population(&state, &basis, a1, a2)?;
    let phase = phase_distribution(&state, &basis, Axis::phases("phi1", mp), Axis::phases("phi2", mp))?;

    let husimi_meta = field_summary(&husimi, threshold)?;
    let mut phase_meta = field_summary(&phase, threshold)?;
    phase_meta["circular_variance_phi1"] = json!(circular_variance(&phase, 1)?);
    phase_meta["circular_variance_phi2"] = json!(circular_variance(&phase, 2)?);
    Ok(RunOutput {
        command: "fields",
        config: json!({
            "model": model.to_json(),
            "occupation_grid": m,
            "phase_grid": mp,
            "threshold": threshold,
            "ground_state_energy": energy,
        }),
        datasets: vec![
            Dataset::new("husimi", field_table(&husimi, "Q"), husimi_meta),
            Dataset::new("phase", field_table(&phase, "Phi"), phase_meta),
        ],
    })
}

pub fn fixed_points(args: &FixedPointsArgs, file: &FileConfig) -> Result<RunOutput, CliError> {
    let model = args.model.resolve(file)?;
    let records = find_fixed_points(&model.params)?;
    let mut table = Table::new(&[
        "label",
        "sector",
        "w1_re",
        "w1_im",
        "w2_re",
        "w2_im",
        "theta",
        "phi",
        "I_z",
        "energy_per_particle",
        "stability",
        "max_re_eigenvalue",
        "residual",
    ]);
    for r in &records {
        let w = r.location.coherent_point();
        let (theta, phi) = r.twin_coordinates();
        let max_re = r.eigenvalues.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
        table.push(vec![
            r.label.to_string(),
            r.sector.map_or_else(|| "all".to_string(), |s| s.to_string()),
            fmt_opt(w.map(|w| w.w1.re)),
            fmt_opt(w.map(|w| w.w1.im)),
            fmt_opt(w.map(|w| w.w2.re)),
            fmt_opt(w.map(|w| w.w2.im)),
            fmt_f64(theta),
            fmt_f64(phi),
            fmt_f64(-theta.cos()),
            fmt_f64(r.energy_per_particle),
            stability_name(r.stability).to_string(),
            fmt_f64(max_re),
            fmt_f64(r.residual),
        ]);
    }
    let max_residual = records.iter().map(|r| r.residual).fold(0.0, f64::max);
    let mut datasets = vec![Dataset::new(
        "fixed_points",
        table,
        json!({ "count": records.len(), "max_residual": max_residual }),
    )];
    let mut config = json!({ "model": model.to_json() });

    if let Some(scan_max) = args.scan_max.or(file.scan_max) {
        let grid = GridSpec::new(
            "scan",
            args.scan_min.or(file.scan_min).unwrap_or(0.0),
            scan_max,
            args.scan_step.or(file.scan_step).unwrap_or(0.01),
        )?;
        let mu = model
            .mu
            .ok_or_else(|| CliError::Usage("a chi scan needs reduced parameters (N >= 2)".into()))?;
        let omega = model.params.omega;
        let n = model.params.n_particles;
        let chis = grid.values();
        let rows = chis
            .par_iter()
            .map(|&chi| ModelParams::from_reduced(omega, chi, mu, n).map(|p| (p, branch_energies(&p))))
            .collect::<Result<Vec<_>, _>>()?;
        let mut scan = Table::new(&[
            "chi",
            "kappa",
            "one_plus",
            "two_plus",
            "three_plus",
            "four_plus",
            "one_plus_minus_four_plus",
        ]);
        let mut gap = Vec::with_capacity(rows.len());
        for (chi, (p, b)) in chis.iter().zip(&rows) {
            let g = b.four_plus.map(|f| b.one_plus - f);
            gap.push(g);
            scan.push(vec![
                fmt_f64(*chi),
                fmt_f64(p.kappa),
                fmt_f64(b.one_plus),
                fmt_opt(b.two_plus),
                fmt_opt(b.three_plus),
                fmt_opt(b.four_plus),
                fmt_opt(g),
            ]);
        }
        let sign_changes: Vec<[f64; 2]> = (1..chis.len())
            .filter(|&i| matches!((gap[i - 1], gap[i]), (Some(a), Some(b)) if (a > 0.0) != (b > 0.0)))
            .map(|i| [chis[i - 1], chis[i]])
            .collect();
        datasets.push(Dataset::new(
            "branch_energies",
            scan,
            json!({ "energies": "per particle", "gap_sign_changes": sign_changes }),
        ));
        config["scan"] = grid.to_json();
    }
    Ok(RunOutput {
        command: "fixed-points",
        config,
        datasets,
    })
}

pub fn trajectory(args: &TrajectoryArgs, file: &FileConfig) -> Result<RunOutput, CliError> {
    let model = args.model.resolve(file)?;
    let t_max = args.t_max.or(file.t_max).unwrap_or(100.0);
    let dt = args.dt.or(file.dt).unwrap_or(0.01);
    let mut starts: Vec<(Value, ClassicalPoint)> = Vec::new();
    if args.init.is_empty() && args.init_w.is_empty() {
        for &[theta, phi] in file.init.iter().flatten() {
            starts.push((json!({ "theta": theta, "phi": phi }), ClassicalPoint::twin(theta, phi)));
        }
        for w in file.init_w.iter().flatten() {
            let p = CoherentPoint::new(Complex64::new(w[0], w[1]), Complex64::new(w[2], w[3]));
            starts.push((json!({ "w": w }), ClassicalPoint::from_coherent(&p)));
        }
    } else {
        for s in &args.init {
            let v = parse_tuple("init", s, 2)?;
            starts.push((json!({ "theta": v[0], "phi": v[1] }), ClassicalPoint::twin(v[0], v[1])));
        }
        for s in &args.init_w {
            let v = parse_tuple("init-w", s, 4)?;
            let p = CoherentPoint::new(Complex64::new(v[0], v[1]), Complex64::new(v[2], v[3]));
            starts.push((json!({ "w": v }), ClassicalPoint::from_coherent(&p)));
        }
    }
    if starts.is_empty() {
        return Err(CliError::Usage("no initial condition: pass --init THETA,PHI or --init-w".into()));
    }
    let params = model.params;
    let runs = starts
        .par_iter()
        .map(|(_, p)| integrate_trajectory(p, &params, t_max, dt))
        .collect::<Result<Vec<_>, _>>()?;
    let n = params.n();
    let width = runs.len().to_string().len().max(3);
    let mut datasets = Vec::new();
    for (k, ((init, _), traj)) in starts.iter().zip(&runs).enumerate() {
        let mut table = Table::new(&["t", "I1", "I2", "phi1", "phi2", "I_z", "E"]);
        let iz = traj.population_balance();
        for i in 0..traj.times.len() {
            let c = traj.points[i].canonical(n);
            table.push(vec![
                fmt_f64(traj.times[i]),
                fmt_f64(c.i1),
                fmt_f64(c.i2),
                fmt_f64(c.phi1),
                fmt_f64(c.phi2),
                fmt_f64(iz[i]),
                fmt_f64(traj.energies[i]),
            ]);
        }
        let metadata = json!({
            "initial_condition": init,
            "relative_energy_drift": traj.relative_drift,
            "norm_error": traj.norm_error,
            "twin_deviation": traj.twin_deviation,
            "mean_I_z": traj.mean_population_balance(),
            "min_I_z": iz.iter().cloned().fold(f64::INFINITY, f64::min),
            "max_I_z": iz.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
            "accepted_steps": traj.accepted_steps,
            "rejected_steps": traj.rejected_steps,
        });
        datasets.push(Dataset::new(format!("trajectory_{k:0width$}"), table, metadata));
    }
    Ok(RunOutput {
        command: "trajectory",
        config: json!({ "model": model.to_json(), "t_max": t_max, "dt": dt, "initial_conditions": runs.len() }),
        datasets,
    })
}

pub fn theta_min(args: &ThetaMinArgs, file: &FileConfig) -> Result<RunOutput, CliError> {
    let omega = resolve_omega(args.omega, file)?;
    let mu = resolve_mu(args.mu, file)?;
    let grid = args.grid.resolve(file, (0.0, 4.0, 0.01))?;
    let options = ThetaMinOptions::default();
    let result = theta_min_analysis(omega, mu, &grid.values(), &options)?;
    let mut table = Table::new(&[
        "chi",
        "theta_min",
        "phi_min",
        "branch",
        "energy_min",
        "dH_dchi",
        "dH_dchi_fd",
        "identity_residual",
        "d2H_dchi2",
        "d2H_dchi2_fd",
        "degenerate",
        "jump",
        "stencil_crosses_branch",
    ]);
    let mut max_residual: f64 = 0.0;
    for r in &result.rows {
        let residual = (r.d_energy_fd - r.d_energy).abs();
        if !r.degenerate && !r.stencil_crosses_branch {
            max_residual = max_residual.max(residual);
        }
        table.push(vec![
            fmt_f64(r.chi),
            fmt_f64(r.theta_min),
            fmt_f64(r.phi_min),
            r.branch.to_string(),
            fmt_f64(r.energy_min),
            fmt_f64(r.d_energy),
            fmt_f64(r.d_energy_fd),
            fmt_f64(residual),
            fmt_f64(r.d2_energy),
            fmt_f64(r.d2_energy_fd),
            r.degenerate.to_string(),
            r.jump.to_string(),
            r.stencil_crosses_branch.to_string(),
        ]);
    }
    let jumps: Vec<[f64; 2]> = result.discontinuities().into_iter().map(|(a, b)| [a, b]).collect();
    let metadata = json!({
        "energies": "per particle",
        "max_identity_residual_off_critical": max_residual,
        "discontinuities": jumps,
    });
    Ok(RunOutput {
        command: "theta-min",
        config: json!({
            "omega": omega,
            "mu": mu,
            "chi_grid": grid.to_json(),
            "fd_step": options.fd_step,
            "fd_step_second": options.fd_step_second,
            "degeneracy_tolerance": options.degeneracy_tolerance,
        }),
        datasets: vec![Dataset::new("theta_min", table, metadata)],
    })
}
