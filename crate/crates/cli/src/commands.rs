//! Implementations of the CLI subcommands.

use std::fmt::Write as _;

use rayon::prelude::*;

use doublon_core::cascade::{
    build_liouvillian, driven_steady_state, evolve_master, max_abs_difference, CascadeConfig,
    CascadeDensityMatrix, EEGG,
};
use doublon_core::effective::{channel_decomposition, decay_and_chirality};
use doublon_core::lattice::{
    fit_decay_rate, pair_correlation, propagate, EmitterDrive, FieldSnapshot, LatticeHamiltonian,
    PropagateOptions, Schedule, TwoExcitationState,
};
use doublon_core::protocols::{
    mirror_absorber_for, run_mirror, run_transfer, MirrorOptions, ShapingConvention,
    TimeOriginConvention, TransferOptions,
};
use doublon_core::spectrum::{
    doublon_decay_length, doublon_energy, group_velocity, resonant_wavevector, DoublonMode,
};

use crate::config::{apply_axis, build_pairs, RunConfig};
use crate::manifest::{csv_table, fmt_float, ManifestWriter};

/// Failure modes mapped onto the documented exit codes.
#[derive(Debug)]
pub enum CliError {
    /// Exit code 2.
    Config(Vec<String>),
    /// Exit code 3.
    Runtime(String),
    /// Exit code 4.
    PartialSweep { failed: usize, total: usize },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Runtime(_) => 3,
            CliError::PartialSweep { .. } => 4,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(errors) => {
                writeln!(f, "configuration invalid ({} errors):", errors.len())?;
                for e in errors {
                    writeln!(f, "  - {e}")?;
                }
                Ok(())
            }
            CliError::Runtime(msg) => write!(f, "run failed: {msg}"),
            CliError::PartialSweep { failed, total } => {
                write!(f, "sweep finished with {failed}/{total} failed jobs")
            }
        }
    }
}

impl From<doublon_core::Error> for CliError {
    fn from(e: doublon_core::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(format!("io: {e}"))
    }
}

/// Resolved convention set, echoed in every manifest.
#[derive(Debug, Clone, Copy)]
pub struct Conventions {
    pub shaping: ShapingConvention,
    pub time_origin: TimeOriginConvention,
}

pub fn run_spectrum(config: &RunConfig, manifest: &mut ManifestWriter) -> Result<(), CliError> {
    let params = &config.waveguide;
    let samples = config.spectrum.samples;
    let rows = (0..samples).map(|j| {
        let k = -std::f64::consts::PI
            + 2.0 * std::f64::consts::PI * (j as f64 + 1.0) / samples as f64;
        let mode = DoublonMode::new(k, params);
        vec![
            mode.wavevector,
            mode.energy,
            mode.decay_length,
            mode.group_velocity,
        ]
    });
    let csv = csv_table("wavevector,energy,decay_length,group_velocity", rows);
    manifest.write_artifact("spectrum.csv", csv.as_bytes())?;

    // Channel decomposition of the first configured pair at its resonant
    // wavevectors, when one exists.
    if let Some(pair) = build_pairs(config).first() {
        let k_r = resonant_wavevector(pair.mean_detuning(), params)?;
        let mut csv = String::from(
            "direction,tau,sigma,amplitude,local_phase,propagation_phase,re,im\n",
        );
        for (dir, k) in [(1.0, k_r), (-1.0, -k_r)] {
            for c in channel_decomposition(k, pair, params)? {
                writeln!(
                    csv,
                    "{},{},{},{},{},{},{},{}",
                    fmt_float(dir),
                    c.tau.label(),
                    c.sigma.label(),
                    fmt_float(c.amplitude),
                    fmt_float(c.local_phase),
                    fmt_float(c.propagation_phase),
                    fmt_float(c.complex_value.re),
                    fmt_float(c.complex_value.im)
                )
                .expect("string write");
            }
        }
        manifest.write_artifact("channels.csv", csv.as_bytes())?;
    }
    Ok(())
}

fn field_csv(snapshot: &FieldSnapshot, r_max: usize) -> String {
    let n = snapshot.n_sites;
    let mut out = String::with_capacity(1 << 20);
    out.push_str("x_c,r_d,density\n");
    for xi in 0..(2 * n - 1) {
        let x_c = xi as f64 / 2.0;
        for r in -(r_max as i64)..=(r_max as i64) {
            // Site pair (m, n) with m + n = 2 x_c, n - m = |r|.
            let two_xc = xi as i64;
            let m2 = two_xc - r.abs();
            if m2 < 0 || m2 % 2 != 0 {
                continue;
            }
            let m = (m2 / 2) as usize;
            let nn = m + r.unsigned_abs() as usize;
            if nn >= n {
                continue;
            }
            let d = snapshot.density(m, nn);
            let _ = writeln!(
                out,
                "{},{},{}",
                fmt_float(x_c),
                r,
                fmt_float(if r == 0 { d } else { 0.5 * d })
            );
        }
    }
    out
}

fn field_binary(snapshots: &[FieldSnapshot], n: usize, r_max: usize) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(b"DBLN");
    out.extend_from_slice(&1u32.to_le_bytes());
    out.extend_from_slice(&(n as u32).to_le_bytes());
    out.extend_from_slice(&(snapshots.len() as u32).to_le_bytes());
    for s in snapshots {
        out.extend_from_slice(&s.t.to_le_bytes());
        for xi in 0..(2 * n - 1) {
            for r in 0..=r_max {
                let m2 = xi as i64 - r as i64;
                let v = if m2 >= 0 && m2 % 2 == 0 && (m2 / 2) as usize + r < n {
                    s.density((m2 / 2) as usize, (m2 / 2) as usize + r)
                } else {
                    0.0
                };
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
    }
    out
}

pub fn run_emit(config: &RunConfig, manifest: &mut ManifestWriter) -> Result<(), CliError> {
    let section = config.emit.as_ref().expect("validated");
    let params = &config.waveguide;
    let pairs = build_pairs(config);
    let ham = LatticeHamiltonian::new(params.clone(), &pairs)?;
    let basis = ham.basis().clone();

    let analytic = decay_and_chirality(&pairs[0], params)?;
    let mut drives = Vec::new();
    for pair in &pairs {
        let (d1, d2) = pair.detunings_with_mismatch();
        let stark = if section.stark_compensation {
            doublon_core::effective::stark_shift(&pair.emitter_1, params, 1.0)
        } else {
            0.0
        };
        for detuning in [d1, d2] {
            drives.push(EmitterDrive::Ramped {
                coupling: pair.emitter_1.coupling,
                detuning,
                ramp_time: section.ramp_time,
                stark_per_g2: stark,
            });
        }
    }
    let schedule = Schedule {
        drives,
        frame_shift: 2.0 * pairs[0].mean_detuning(),
        flip: None,
        bond_cut: None,
    };
    let split_center = section.split_center.unwrap_or_else(|| pairs[0].center());
    let mut state = TwoExcitationState::excited_pair(&basis, 0);
    let options = PropagateOptions {
        dt: section.dt,
        sample_interval: section.sample_interval,
        snapshot_times: section.snapshot_times.clone(),
        split_center: Some(split_center),
        ..Default::default()
    };
    let trace = propagate(&ham, &mut state, &schedule, section.t_span, &options)?;
    manifest.add_warnings(&trace.warnings);
    manifest.set_step_count((section.t_span / section.dt).round() as u64);

    // Time-series artifact.
    let mut header = String::from("t");
    for q in 0..pairs.len() {
        let _ = write!(header, ",pair_{q}_population");
    }
    header.push_str(",single_photon,two_photon,p_left,p_right,norm");
    let rows = (0..trace.times.len()).map(|i| {
        let mut row = vec![trace.times[i]];
        for q in 0..pairs.len() {
            row.push(trace.pair_populations[q][i]);
        }
        row.extend([
            trace.single_photon[i],
            trace.two_photon[i],
            trace.p_left[i],
            trace.p_right[i],
            trace.norm[i],
        ]);
        row
    });
    manifest.write_artifact("trace.csv", csv_table(&header, rows).as_bytes())?;

    for (i, snapshot) in trace.snapshots.iter().enumerate() {
        manifest.write_artifact(
            &format!("field_{i:04}.csv"),
            field_csv(snapshot, section.r_max).as_bytes(),
        )?;
    }
    if section.binary_fields {
        manifest.write_artifact(
            "fields.bin",
            &field_binary(&trace.snapshots, basis.n_sites(), section.r_max),
        )?;
    }

    // Decay fit and summary.
    let v_g = group_velocity(analytic.resonant_k, params).abs();
    let center = pairs[0].center();
    let reach = center.min(params.num_sites as f64 - 1.0 - center);
    let t_boundary = reach / v_g;
    let (w0, w1) = section
        .fit_window
        .unwrap_or((0.1 * t_boundary, (0.8 * t_boundary).min(section.t_span)));
    let fit = fit_decay_rate(&trace.times, &trace.pair_populations[0], w0, w1);
    let (l, r, c_num) = doublon_core::lattice::directional_split(&state, &basis, split_center);
    let g2 = pair_correlation(&state, &basis, 8).ok();
    let summary = serde_json::json!({
        "analytic": {
            "resonant_k": analytic.resonant_k,
            "gamma_plus": analytic.gamma_plus,
            "gamma_minus": analytic.gamma_minus,
            "chiral_factor": analytic.chiral_factor,
            "group_velocity": v_g,
        },
        "fit_window": [w0, w1],
        "fitted_rate": fit.as_ref().ok().map(|f| f.rate),
        "fit_residual": fit.as_ref().ok().map(|f| f.residual),
        "fit_error": fit.as_ref().err().map(|e| e.to_string()),
        "p_left": l,
        "p_right": r,
        "numerical_chirality": c_num,
        "g2_ratio_0_over_5": g2.map(|g| g[0] / g[5]),
        "max_single_photon": trace.single_photon.iter().cloned().fold(0.0, f64::max),
        "final_norm": trace.norm.last(),
    });
    manifest.write_artifact(
        "summary.json",
        serde_json::to_string_pretty(&summary).unwrap().as_bytes(),
    )?;
    Ok(())
}

pub fn run_sweep(
    config: &RunConfig,
    manifest: &mut ManifestWriter,
    jobs: Option<usize>,
) -> Result<(), CliError> {
    let section = config.sweep.as_ref().expect("validated");
    let params = config.waveguide.clone();
    let base = build_pairs(config)[0];
    let axis_values: Vec<Vec<f64>> = section.axes.iter().map(|a| a.values()).collect();
    let total: usize = axis_values.iter().map(|v| v.len()).product();

    // Enumerate grid coordinates in row-major order; each job is pure and
    // keyed by its index, so the aggregation is order-independent.
    let coords: Vec<Vec<usize>> = (0..total)
        .map(|mut flat| {
            let mut c = vec![0usize; axis_values.len()];
            for (slot, values) in axis_values.iter().enumerate().rev() {
                c[slot] = flat % values.len();
                flat /= values.len();
            }
            c
        })
        .collect();

    let worker = |coord: &Vec<usize>| -> Result<Vec<f64>, String> {
        let mut pair = base;
        let mut values = Vec::with_capacity(coord.len());
        for (slot, &idx) in coord.iter().enumerate() {
            let value = axis_values[slot][idx];
            apply_axis(&mut pair, &section.axes[slot].name, value);
            values.push(value);
        }
        pair.validate(&params).map_err(|e| e.join("; "))?;
        let res = decay_and_chirality(&pair, &params).map_err(|e| e.to_string())?;
        values.extend([
            res.gamma_plus,
            res.gamma_minus,
            res.chiral_factor,
            res.resonant_k,
        ]);
        Ok(values)
    };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    let results: Vec<Result<Vec<f64>, String>> =
        pool.install(|| coords.par_iter().map(worker).collect());

    let mut header = section
        .axes
        .iter()
        .map(|a| a.name.clone())
        .collect::<Vec<_>>()
        .join(",");
    header.push_str(",gamma_plus,gamma_minus,chiral_factor,resonant_k");
    let ok_rows = results.iter().filter_map(|r| r.as_ref().ok().cloned());
    manifest.write_artifact("aggregated.csv", csv_table(&header, ok_rows).as_bytes())?;

    let mut status = String::from("job,status\n");
    let mut failures = String::new();
    let mut failed = 0usize;
    for (i, r) in results.iter().enumerate() {
        let ok = r.is_ok();
        let _ = writeln!(status, "{i},{}", if ok { "ok" } else { "failed" });
        if let Err(e) = r {
            failed += 1;
            let _ = writeln!(failures, "job {i}: {e}");
        }
    }
    manifest.write_artifact("status.csv", status.as_bytes())?;
    if failed > 0 {
        manifest.write_artifact("failures.txt", failures.as_bytes())?;
        return Err(CliError::PartialSweep { failed, total });
    }
    Ok(())
}

pub fn run_cascade(config: &RunConfig, manifest: &mut ManifestWriter) -> Result<(), CliError> {
    let section = config.cascade.as_ref().expect("validated");
    let params = &config.waveguide;
    let pairs = build_pairs(config);
    let chiral = decay_and_chirality(&pairs[0], params)?;
    if let Some(w) = &chiral.markov_warning {
        manifest.add_warnings(std::slice::from_ref(w));
    }
    let v_g = group_velocity(chiral.resonant_k, params).abs();
    let separation = (pairs[1].center() - pairs[0].center()).abs();
    let cascade_config = CascadeConfig {
        gamma_plus: chiral.gamma_plus,
        gamma_minus: if section.chiral_limit {
            0.0
        } else {
            chiral.gamma_minus
        },
        drive_amplitude: section.drive_amplitude,
        drive_phase: section.drive_phase,
        gep_order: Default::default(),
        pair_separation: separation,
        group_velocity: v_g,
        bound_state_length: doublon_decay_length(chiral.resonant_k, params),
    };
    let generator = build_liouvillian(&cascade_config)?;
    let gamma_total = cascade_config.gamma_plus + cascade_config.gamma_minus;
    let horizon = section.decay_times / gamma_total.max(1e-12);
    let t_grid: Vec<f64> = (0..=section.samples)
        .map(|i| horizon * i as f64 / section.samples as f64)
        .collect();
    let rho0 = CascadeDensityMatrix::pure(EEGG);
    let trace = evolve_master(&rho0, &cascade_config, &t_grid)?;
    let rows = (0..trace.times.len()).map(|i| {
        vec![
            trace.times[i],
            trace.upstream[i],
            trace.downstream[i],
            trace.ground[i],
            trace.fidelity[i],
            trace.trace_error[i],
            trace.min_eigenvalue[i],
        ]
    });
    manifest.write_artifact(
        "master_trace.csv",
        csv_table(
            "t,upstream,downstream,ground,fidelity,trace_error,min_eigenvalue",
            rows,
        )
        .as_bytes(),
    )?;

    let mut summary = serde_json::json!({
        "gamma_plus": cascade_config.gamma_plus,
        "gamma_minus": cascade_config.gamma_minus,
        "delay": cascade_config.delay(),
        "trace_defect": generator.trace_defect(),
    });

    if section.steady_state {
        let (rho, fidelity) = driven_steady_state(&cascade_config)?;
        let mut re = String::new();
        let mut im = String::new();
        for i in 0..doublon_core::cascade::DIM {
            let row_re: Vec<String> = (0..doublon_core::cascade::DIM)
                .map(|j| fmt_float(rho.elements[i * doublon_core::cascade::DIM + j].re))
                .collect();
            let row_im: Vec<String> = (0..doublon_core::cascade::DIM)
                .map(|j| fmt_float(rho.elements[i * doublon_core::cascade::DIM + j].im))
                .collect();
            let _ = writeln!(re, "{}", row_re.join(","));
            let _ = writeln!(im, "{}", row_im.join(","));
        }
        manifest.write_artifact("steady_state_re.csv", re.as_bytes())?;
        manifest.write_artifact("steady_state_im.csv", im.as_bytes())?;
        summary["steady_state_fidelity"] = serde_json::json!(fidelity);
    }

    if section.include_lattice {
        let ham = LatticeHamiltonian::new(params.clone(), &pairs)?;
        let basis = ham.basis().clone();
        let mut drives = Vec::new();
        for pair in &pairs {
            let (d1, d2) = pair.detunings_with_mismatch();
            drives.push(EmitterDrive::Static {
                coupling: pair.emitter_1.coupling,
                detuning: d1,
            });
            drives.push(EmitterDrive::Static {
                coupling: pair.emitter_2.coupling,
                detuning: d2,
            });
        }
        let schedule = Schedule {
            drives,
            frame_shift: 2.0 * pairs[0].mean_detuning(),
            flip: None,
            bond_cut: None,
        };
        let mut state = TwoExcitationState::excited_pair(&basis, 0);
        let options = PropagateOptions {
            dt: section.lattice_dt,
            sample_interval: horizon / section.samples as f64,
            ..Default::default()
        };
        let lattice = propagate(&ham, &mut state, &schedule, horizon, &options)?;
        manifest.add_warnings(&lattice.warnings);
        let rows = (0..lattice.times.len()).map(|i| {
            vec![
                lattice.times[i],
                lattice.pair_populations[0][i],
                lattice.pair_populations[1][i],
                lattice.single_photon[i],
                lattice.two_photon[i],
                lattice.norm[i],
            ]
        });
        manifest.write_artifact(
            "lattice_trace.csv",
            csv_table("t,pair_a,pair_b,single_photon,two_photon,norm", rows).as_bytes(),
        )?;
        let delay = cascade_config.delay();
        let err_a = max_abs_difference(
            &lattice.times,
            &lattice.pair_populations[0],
            &trace.times,
            &trace.upstream,
            0.0,
        );
        let err_b_shifted = max_abs_difference(
            &lattice.times,
            &lattice.pair_populations[1],
            &trace.times,
            &trace.downstream,
            delay,
        );
        let err_b_unshifted = max_abs_difference(
            &lattice.times,
            &lattice.pair_populations[1],
            &trace.times,
            &trace.downstream,
            0.0,
        );
        summary["lattice_agreement"] = serde_json::json!({
            "upstream_max_error": err_a,
            "downstream_max_error_delay_shifted": err_b_shifted,
            "downstream_max_error_unshifted": err_b_unshifted,
        });
    }
    manifest.write_artifact(
        "summary.json",
        serde_json::to_string_pretty(&summary).unwrap().as_bytes(),
    )?;
    Ok(())
}

pub fn run_transfer_cmd(
    config: &RunConfig,
    manifest: &mut ManifestWriter,
    conventions: Conventions,
) -> Result<(), CliError> {
    let section = config.transfer.as_ref().expect("validated");
    let pairs = build_pairs(config);
    let options = TransferOptions {
        g0: section.g0,
        shaping: section.shaping.unwrap_or(conventions.shaping),
        time_origin: section.time_origin.unwrap_or(conventions.time_origin),
        window_sigmas: section.window_sigmas,
        dt: section.dt,
        sample_interval: section.sample_interval,
        stark_compensation: section.stark_compensation,
        ..Default::default()
    };
    let report = run_transfer(&config.waveguide, &pairs[0], &pairs[1], &options)?;
    manifest.add_warnings(&report.warnings);
    manifest.set_step_count(((report.t_f - report.t_i) / section.dt).round() as u64);

    let rows = (0..report.times.len()).map(|i| {
        vec![
            report.times[i],
            report.sender_population[i],
            report.receiver_population[i],
            report.gamma_sender[i],
            report.gamma_receiver[i],
            report.retarded_residual[i],
            report.leaked[i],
        ]
    });
    manifest.write_artifact(
        "transfer_trace.csv",
        csv_table(
            "t,sender,receiver,gamma_sender,gamma_receiver,dark_residual,leaked",
            rows,
        )
        .as_bytes(),
    )?;
    let summary = serde_json::json!({
        "efficiency": report.efficiency,
        "sender_final": report.sender_final,
        "photon_final": report.photon_final,
        "leaked_final": report.leaked_final,
        "max_dark_residual": report.max_retarded_residual,
        "max_instant_residual": report.max_instant_residual,
        "gamma0": report.gamma0,
        "shaping_constant": report.shaping_c,
        "shaping_convention": report.shaping_label,
        "tau_d": report.tau_d,
        "window": [report.t_i, report.t_f],
    });
    manifest.write_artifact(
        "report.json",
        serde_json::to_string_pretty(&summary).unwrap().as_bytes(),
    )?;
    Ok(())
}

pub fn run_mirror_cmd(config: &RunConfig, manifest: &mut ManifestWriter) -> Result<(), CliError> {
    let section = config.mirror.as_ref().expect("validated");
    let pairs = build_pairs(config);
    let pair_a = pairs[0];
    let pair_b = match pairs.get(1) {
        Some(p) => *p,
        None => mirror_absorber_for(&pair_a, section.receiver_left.expect("validated")),
    };
    let options = MirrorOptions {
        coupling: section.coupling,
        dt: section.dt,
        sample_interval: section.sample_interval,
        enable_flip: section.enable_flip,
        snapshot_interval: section.snapshot_interval,
        ..Default::default()
    };
    let report = run_mirror(&config.waveguide, &pair_a, &pair_b, &options)?;
    manifest.add_warnings(&report.warnings);

    let rows = (0..report.times.len()).map(|i| {
        vec![
            report.times[i],
            report.sender_population[i],
            report.receiver_population[i],
        ]
    });
    manifest.write_artifact(
        "mirror_trace.csv",
        csv_table("t,sender,receiver", rows).as_bytes(),
    )?;
    for (i, snapshot) in report.snapshots.iter().enumerate() {
        manifest.write_artifact(
            &format!("field_{i:04}.csv"),
            field_csv(snapshot, 24).as_bytes(),
        )?;
    }
    let summary = serde_json::json!({
        "efficiency": report.efficiency,
        "efficiency_time": report.efficiency_time,
        "sequence": report.sequence,
        "spectral_identity_error": report.spectral_identity_error,
        "shape_correlation": report.shape_correlation,
        "sender_stranded": report.sender_stranded,
    });
    manifest.write_artifact(
        "report.json",
        serde_json::to_string_pretty(&summary).unwrap().as_bytes(),
    )?;
    Ok(())
}

/// Quick closed-form sanity rows used by `validate` to echo the resolved
/// physics of a config (band edges, resonance) without running anything.
pub fn describe(config: &RunConfig) -> String {
    let params = &config.waveguide;
    let mut out = String::new();
    let e0 = doublon_energy(0.0, params);
    let epi = doublon_energy(std::f64::consts::PI, params);
    let _ = writeln!(
        out,
        "doublon band: [{:.6}, {:.6}] (J = {}, U = {}, branch {:?})",
        e0.min(epi),
        e0.max(epi),
        params.hopping,
        params.nonlinearity,
        params.branch
    );
    for (i, pc) in config.pairs.iter().enumerate() {
        let pair = pc.build();
        match resonant_wavevector(pair.mean_detuning(), params) {
            Ok(k_r) => {
                let _ = writeln!(
                    out,
                    "pair {i}: resonant K = {:.6}, L_u = {:.4}, v_g = {:.4}",
                    k_r,
                    doublon_decay_length(k_r, params),
                    group_velocity(k_r, params).abs()
                );
            }
            Err(e) => {
                let _ = writeln!(out, "pair {i}: {e}");
            }
        }
    }
    out
}
