//! The three subcommands. Each writes a human-readable report to `out` and
//! its files into the scenario's output directory.

use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use beamdelay_core::robustness::{certificate_io, delay_upper_bound_small_gain, max_certified_delay};
use beamdelay_core::simulation::{
    default_nodes, iss_diagnostics, project_initial, reconstruct_field, simulate, uniform_grid,
    write_field_csv, write_trajectory_csv, Control, FieldComponent, IssOptions, SimulationOptions,
};
use beamdelay_core::synthesis::{self, real_poles, FeedbackGain};
use beamdelay_core::{linalg, reduction, spectral, Error};
use nalgebra::DMatrix;

use crate::config::Scenario;
use crate::{exit, CliError};

fn output_dir(s: &Scenario) -> Result<PathBuf, CliError> {
    let dir = PathBuf::from(&s.config.output.dir);
    fs::create_dir_all(&dir)?;
    Ok(dir)
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>, CliError> {
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

fn matrix_rows(m: &DMatrix<f64>) -> String {
    let rows: Vec<String> = (0..m.nrows())
        .map(|i| {
            let r: Vec<String> = m.row(i).iter().map(|v| format!("{v:.10e}")).collect();
            format!("[{}]", r.join(", "))
        })
        .collect();
    format!("[{}]", rows.join(", "))
}

pub fn spectrum(s: &Scenario, out: &mut dyn Write) -> Result<(), CliError> {
    let p = &s.params;
    let n_max = s.config.simulation.n_sim;
    let r = spectral::riesz_constants(p);
    let dir = output_dir(s)?;

    let mut csv = create(&dir, "spectrum.csv")?;
    writeln!(csv, "n,branch,lambda,k,C")?;
    for n in 1..=n_max {
        for mode in spectral::mode_pair(p, n) {
            let branch = if mode.index.branch().sign() < 0.0 { "-1" } else { "+1" };
            writeln!(csv, "{n},{branch},{:.11e},{:.11e},{:.11e}", mode.lambda, mode.k, mode.c)?;
        }
    }
    csv.flush()?;

    let mut report = String::new();
    writeln!(report, "alpha = {}, beta0 = {}, gamma = {}, beta = {}", p.alpha(), p.beta0(), p.gamma(), p.beta()).unwrap();
    writeln!(report, "unstable count: {}", spectral::unstable_count(p)).unwrap();
    writeln!(report, "Riesz constants: C_R = {:.6}, m_R = {:.6}, M_R = {:.6}", r.c_r, r.m_r, r.big_m_r).unwrap();
    for n in 1..=n_max.min(3) {
        for mode in spectral::mode_pair(p, n) {
            writeln!(
                report,
                "lambda_({n},{:+}) = {:.6e}  k = {:.6e}  C = {:.6e}",
                mode.index.branch().sign() as i32,
                mode.lambda,
                mode.k,
                mode.c
            )
            .unwrap();
        }
    }
    writeln!(report, "{} modes written to {}", 2 * n_max, dir.join("spectrum.csv").display()).unwrap();
    out.write_all(report.as_bytes())?;
    Ok(())
}

pub fn synthesize(s: &Scenario, out: &mut dyn Write) -> Result<(), CliError> {
    let c = &s.config.control;
    let check = reduction::small_gain_mode_count(&s.params, c.n0).map_err(|e| match e {
        Error::BelowUnstableCount { .. } => CliError::new(exit::MODE_COUNT, format!("mode-count condition: {e}")),
        other => other.into(),
    })?;
    if !check.satisfied {
        return Err(CliError::new(
            exit::MODE_COUNT,
            format!("mode-count condition fails at N0 = {}: LHS = {:.6e} >= 1", c.n0, check.lhs),
        ));
    }
    let model = reduction::assemble(&s.params, c.n0)?;
    let gain = synthesis::place_poles(&model, s.actuation, &real_poles(&c.poles))
        .map_err(|e| CliError::new(exit::SYNTHESIS, e.to_string()))?;
    let a_cl = synthesis::closed_loop(&model, &gain)?;
    let mut eig = linalg::eigenvalues(&a_cl);
    eig.sort_by(|a, b| b.re.total_cmp(&a.re).then(b.im.total_cmp(&a.im)));

    let dir = output_dir(s)?;
    let certified = max_certified_delay(&a_cl, model.m(), 0.0, c.resolution);
    let bound = delay_upper_bound_small_gain(&a_cl, model.m())?;

    let mut report = String::new();
    writeln!(report, "mode-count condition at N0 = {}: LHS = {:.6e} (satisfied)", c.n0, check.lhs).unwrap();
    writeln!(report, "actuation: {:?}", s.actuation).unwrap();
    writeln!(report, "gain = {}", matrix_rows(gain.k())).unwrap();
    let eig_text: Vec<String> = eig
        .iter()
        .map(|e| if e.im == 0.0 { format!("{:.8e}", e.re) } else { format!("{:.8e}{:+.8e}i", e.re, e.im) })
        .collect();
    writeln!(report, "closed-loop eigenvalues: {}", eig_text.join(", ")).unwrap();
    match &certified {
        Ok(d) => {
            let cert_path = dir.join("certificate.txt");
            fs::write(&cert_path, certificate_io::to_text(&d.certificate))?;
            writeln!(
                report,
                "certified h_M (kappa = 0, resolution {}): {:.6}{}",
                c.resolution,
                d.h_max,
                if d.capped { " (bracket cap)" } else { "" }
            )
            .unwrap();
            writeln!(report, "certificate: {}", cert_path.display()).unwrap();
        }
        Err(Error::NoneCertified { h_min }) => {
            writeln!(report, "certified h_M: none certified (smallest grid point {h_min})").unwrap();
        }
        Err(e) => return Err(e.clone().into()),
    }
    writeln!(report, "small-gain upper bound on h_M: {bound:.6e}").unwrap();
    fs::write(dir.join("synthesis.txt"), &report)?;
    out.write_all(report.as_bytes())?;
    Ok(())
}

pub fn run_simulation(s: &Scenario, out: &mut dyn Write) -> Result<(), CliError> {
    let c = &s.config.control;
    let sim = &s.config.simulation;
    let gain = if c.open_loop {
        None
    } else {
        Some(match &s.gain {
            Some(k) => FeedbackGain::from_matrix(k.clone(), s.actuation, Vec::new())
                .map_err(|e| CliError::config(e.to_string()))?,
            None => {
                let model = reduction::assemble(&s.params, c.n0)?;
                synthesis::place_poles(&model, s.actuation, &real_poles(&c.poles))
                    .map_err(|e| CliError::new(exit::SYNTHESIS, e.to_string()))?
            }
        })
    };
    let control = gain.as_ref().map_or(Control::OpenLoop, Control::Feedback);

    let history = project_initial(&s.initial, &s.params, sim.n_sim, s.delay.h_max(), default_nodes(sim.n_sim))?;
    let mut opts = SimulationOptions::new(sim.n_sim, sim.dt, sim.t_final);
    opts.record_every = s.record_every;
    let traj = simulate(&s.params, control, &s.delay, &s.disturbances, &history, &opts)?;

    let dir = output_dir(s)?;
    let grid = uniform_grid(sim.x_points);
    let mut w = create(&dir, "trajectory.csv")?;
    write_trajectory_csv(&traj, &grid, &mut w)?;
    w.flush()?;
    let fields = reconstruct_field(&traj, &grid);
    for (name, comp) in [("displacement.csv", FieldComponent::Displacement), ("velocity.csv", FieldComponent::Velocity)] {
        let mut w = create(&dir, name)?;
        write_field_csv(&fields, comp, &mut w)?;
        w.flush()?;
    }

    let window = sim.disturbance_window.map(|[a, b]| (a, b));
    let tail_start = sim.tail_start.unwrap_or(match window {
        Some((_, end)) if end < sim.t_final => end + 0.5 * (sim.t_final - end),
        _ => 0.5 * sim.t_final,
    });
    let iss = iss_diagnostics(&traj, &s.initial, &IssOptions { tail_start, disturbance_window: window, h_max: s.delay.h_max() });

    let norms = traj.state_norms();
    let mut report = String::new();
    writeln!(
        report,
        "{} with N_sim = {}, dt = {}, T = {}",
        if gain.is_some() { "closed loop" } else { "open loop" },
        sim.n_sim,
        sim.dt,
        sim.t_final
    )
    .unwrap();
    writeln!(report, "state norm: X(0) = {:.6e}, X(T) = {:.6e}, max = {:.6e}", norms[0], norms[norms.len() - 1], norms.iter().copied().fold(0.0, f64::max)).unwrap();
    writeln!(report, "initial norm |Phi|_(1,h_M) = {:.6e}", iss.initial_norm).unwrap();
    match iss.fitted_rate {
        Some(k) => writeln!(report, "fitted decay rate on t >= {tail_start}: {k:.6e}").unwrap(),
        None => writeln!(report, "fitted decay rate: inconclusive (fewer than 10 tail samples)").unwrap(),
    }
    match iss.fading_memory {
        Some(v) => writeln!(report, "fading memory of the disturbance window: {}", if v { "yes" } else { "no" }).unwrap(),
        None => writeln!(report, "fading memory: not evaluated").unwrap(),
    }
    if let Some(m) = iss.control_margin {
        writeln!(report, "control bound margin (must be >= 0): {m:.6e}").unwrap();
    }
    for w in traj.warnings() {
        writeln!(report, "warning: {w}").unwrap();
    }
    writeln!(report, "outputs: trajectory.csv, displacement.csv, velocity.csv in {}", dir.display()).unwrap();
    fs::write(dir.join("iss_report.txt"), &report)?;
    out.write_all(report.as_bytes())?;
    Ok(())
}
