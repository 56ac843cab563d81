//! One function per subcommand.

use std::io::Write;

use risprop::experiments::{
    analytic_point, laplace_validation, outage_sweep, r0_sweep, sample_trials, sis_panels, validate_power, LaplaceRow, R0Row, SisPanel,
};
use risprop::geometry::NetworkTopology;
use risprop::interference::Stage;
use risprop::outage::{sis_ode_solve, PropagationIntensity, SisParams};

use crate::config::{Axis, ExperimentConfig};
use crate::output::{num, write_manifest, OutputDir};
use crate::{CliError, Command};

pub fn dispatch(command: &Command, config: &ExperimentConfig, stdout: &mut dyn Write) -> Result<(), CliError> {
    let name = command.name();
    let out = OutputDir::create(config, name)?;
    if config.run.manifest {
        write_manifest(&out, config, name)?;
    }
    match command {
        Command::Topology => topology(config, &out, stdout),
        Command::ValidatePower => validate_power_cmd(config, &out, stdout),
        Command::OutageSweep => outage_sweep_cmd(config, &out, stdout),
        Command::SisSim => sis_sim(config, &out, stdout),
        Command::R0Sweep { .. } => r0_sweep_cmd(config, &out, stdout),
        Command::ValidateLaplace => validate_laplace(config, &out, stdout),
    }
}

pub fn topology(config: &ExperimentConfig, out: &OutputDir, stdout: &mut dyn Write) -> Result<(), CliError> {
    config.require_no_sweep("topology")?;
    let topo_config = &config.scenario.topology;
    let topo = NetworkTopology::sample(topo_config)?;
    let spacing = topo.min_bs_spacing();
    let summary = vec![
        format!("base_stations={}", topo.bs.len()),
        format!("ris={}", topo.ris.len()),
        format!("ues={}", topo.ue.len()),
        format!("min_bs_spacing={}", spacing.map_or("none".to_string(), num)),
        format!("r_b={}", num(topo_config.r_b)),
    ];
    let mut file = out.raw("topology.csv", &summary)?;
    topo.write_csv(&mut file)?;
    file.flush()?;
    for line in &summary {
        writeln!(stdout, "{line}")?;
    }
    Ok(())
}

pub fn validate_power_cmd(config: &ExperimentConfig, out: &OutputDir, stdout: &mut dyn Write) -> Result<(), CliError> {
    config.require_no_sweep("validate-power")?;
    let v = validate_power(&config.scenario, config.run.trials, config.run.seed, config.power.grid_points)?;
    let extra = vec![
        format!("gamma_shape={} gamma_scale={}", num(v.fit.shape), num(v.fit.scale)),
        format!("ks_distance={}", num(v.ks)),
    ];
    let mut w = out.csv("power_cdf.csv", &extra, &["x", "empirical_cdf", "analytic_cdf"])?;
    for ((x, e), a) in v.x.iter().zip(&v.empirical).zip(&v.analytic) {
        w.write_record([num(*x), num(*e), num(*a)])?;
    }
    w.flush()?;
    writeln!(stdout, "ks_distance={} (limit {})", num(v.ks), num(config.power.ks_max))?;
    if !(v.ks < config.power.ks_max) {
        return Err(CliError::Validation(format!("KS distance {} is not below {}", v.ks, config.power.ks_max)));
    }
    Ok(())
}

pub fn outage_sweep_cmd(config: &ExperimentConfig, out: &OutputDir, stdout: &mut dyn Write) -> Result<(), CliError> {
    let sweep = config.sweep_for("outage-sweep", &[Axis::Power], Axis::Power)?;
    let powers = sweep.resolved_values();
    let samples = sample_trials(&config.scenario, config.run.trials, config.run.seed)?;
    let rows = outage_sweep(&config.scenario, &powers, &samples)?;
    let mut w = out.csv(
        "outage.csv",
        &[],
        &["P_dBm", "P_o_analytic", "P_o_empirical", "stderr", "P_o_prime_analytic", "P_o_prime_empirical", "stderr"],
    )?;
    let mut worst: f64 = 0.0;
    for r in &rows {
        w.write_record([
            num(r.p_dbm),
            num(r.p_o),
            num(r.empirical.value),
            num(r.empirical.stderr),
            num(r.p_o_prime),
            num(r.empirical_prime.value),
            num(r.empirical_prime.stderr),
        ])?;
        worst = worst.max((r.p_o - r.empirical.value).abs()).max((r.p_o_prime - r.empirical_prime.value).abs());
    }
    w.flush()?;
    writeln!(stdout, "points={} max_abs_gap={}", rows.len(), num(worst))?;
    Ok(())
}

fn r0_text(r: PropagationIntensity) -> String {
    match r {
        PropagationIntensity::Finite(v) => num(v),
        PropagationIntensity::Infinite => "inf".into(),
        PropagationIntensity::Undefined => "undefined".into(),
    }
}

fn panel_header(p: &SisPanel) -> Vec<String> {
    vec![format!(
        "panel={} lambda_u={} x0={} beta={} mu={} R0={}",
        p.label,
        num(p.lambda_u),
        p.x0,
        num(p.rates.beta),
        num(p.rates.mu),
        r0_text(p.rates.r0)
    )]
}

/// Mean-field trajectory reported at whole time units.
const ODE_DT: f64 = 1e-2;

pub fn sis_sim(config: &ExperimentConfig, out: &OutputDir, stdout: &mut dyn Write) -> Result<(), CliError> {
    config.require_no_sweep("sis-sim")?;
    let panels = sis_panels(&config.scenario, &config.sis)?;
    for p in &panels {
        let header = panel_header(p);
        let mut w = out.csv(&format!("sis_{}.csv", p.label), &header, &["t", "mean_S", "mean_X", "stderr_X"])?;
        let s = &p.series;
        for i in 0..s.t.len() {
            w.write_record([s.t[i].to_string(), num(s.mean_s[i]), num(s.mean_x[i]), num(s.stderr_x[i])])?;
        }
        w.flush()?;

        let ode = SisParams {
            beta: p.rates.beta,
            mu: p.rates.mu,
            n_total: config.sis.n_agents as f64,
            x0: p.x0 as f64,
        };
        let trajectory = sis_ode_solve(&ode, config.sis.steps as f64, ODE_DT)?;
        let stride = (1.0 / ODE_DT).round() as usize;
        let mut w = out.csv(&format!("sis_ode_{}.csv", p.label), &header, &["t", "S", "X"])?;
        for point in trajectory.iter().step_by(stride) {
            w.write_record([num(point.t), num(point.s), num(point.x)])?;
        }
        w.flush()?;
        writeln!(
            stdout,
            "panel {} lambda_u={} x0={} X: {} -> {}",
            p.label,
            num(p.lambda_u),
            p.x0,
            num(s.initial_x()),
            num(s.final_x())
        )?;
    }
    Ok(())
}

pub fn r0_sweep_cmd(config: &ExperimentConfig, out: &OutputDir, stdout: &mut dyn Write) -> Result<(), CliError> {
    let allowed = [Axis::UeDensity, Axis::BsDensity, Axis::Frequency, Axis::RisElements];
    let sweep = config.sweep_for("r0-sweep", &allowed, Axis::UeDensity)?;
    let axis = sweep.axis.parameter().expect("allowed axes are scenario parameters");
    let values = sweep.resolved_values();
    let groups = sweep.resolved_groups();
    let trials = if sweep.empirical { config.run.trials } else { 0 };
    let rows: Vec<R0Row> = r0_sweep(
        &config.scenario,
        sweep.p_dbm,
        axis,
        &values,
        groups.as_ref().map(|(g, v)| (*g, v.as_slice())),
        trials,
        config.run.seed,
    )?;

    let mut columns = vec![axis.name()];
    if let Some((g, _)) = &groups {
        columns.push(g.name());
    }
    columns.extend(["P_o", "P_o_prime", "beta", "mu", "R0"]);
    if sweep.empirical {
        columns.extend(["beta_hat", "beta_stderr", "mu_hat", "mu_stderr", "R0_hat"]);
    }
    let mut w = out.csv("r0.csv", &[format!("p_dbm={}", num(sweep.p_dbm))], &columns)?;
    for r in &rows {
        let mut record = vec![num(r.value)];
        if let Some(g) = r.group {
            record.push(num(g));
        }
        let a = &r.analytic;
        record.extend([num(a.p_o), num(a.p_o_prime), num(a.beta), num(a.mu), r0_text(a.r0)]);
        if let Some(e) = &r.empirical {
            record.extend([num(e.beta.value), num(e.beta.stderr), num(e.mu.value), num(e.mu.stderr), r0_text(e.r0)]);
        }
        w.write_record(&record)?;
    }
    w.flush()?;
    writeln!(stdout, "axis={} points={}", axis.name(), rows.len())?;
    Ok(())
}

fn write_laplace(out: &OutputDir, name: &str, stage: &str, rows: &[LaplaceRow]) -> Result<(), CliError> {
    let mut w = out.csv(name, &[format!("stage={stage}")], &["s", "closed_form", "quadrature", "monte_carlo", "stderr"])?;
    for r in rows {
        w.write_record([num(r.s), num(r.closed_form), num(r.quadrature), num(r.monte_carlo.value), num(r.monte_carlo.stderr)])?;
    }
    w.flush()?;
    Ok(())
}

pub fn validate_laplace(config: &ExperimentConfig, out: &OutputDir, stdout: &mut dyn Write) -> Result<(), CliError> {
    let sweep = config.sweep_for("validate-laplace", &[Axis::LaplaceS], Axis::LaplaceS)?;
    let grid = sweep.resolved_values();
    if grid.iter().any(|&s| s < 0.0) {
        return Err(CliError::Config("laplace_s grid must be nonnegative".into()));
    }
    let samples = sample_trials(&config.scenario, config.run.trials, config.run.seed)?;
    let mut worst: f64 = 0.0;
    for (stage, name, label) in [(Stage::Before, "laplace_before.csv", "before"), (Stage::After, "laplace_after.csv", "after")] {
        let rows = laplace_validation(&config.scenario, stage, &grid, &samples)?;
        write_laplace(out, name, label, &rows)?;
        let gap = rows.iter().map(LaplaceRow::relative_gap).fold(0.0, f64::max);
        let bracketed = rows.iter().filter(|r| r.monte_carlo.brackets(r.quadrature, 3.0)).count();
        writeln!(
            stdout,
            "{label}: max_rel_gap={} mc_within_3se={}/{}",
            num(gap),
            bracketed,
            rows.len()
        )?;
        worst = worst.max(gap);
    }
    // the operating point's analytic outage makes the report self-contained
    let point = analytic_point(&config.scenario, -5.0)?;
    writeln!(stdout, "P_o(-5 dBm)={} P_o'={}", num(point.p_o), num(point.p_o_prime))?;
    if !(worst <= config.laplace.rel_tol) {
        return Err(CliError::Validation(format!(
            "closed form departs from quadrature by {} (tolerance {})",
            worst, config.laplace.rel_tol
        )));
    }
    Ok(())
}
