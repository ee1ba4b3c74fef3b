//! The five subcommands: compute with demon-core, emit deterministic files.

use crate::config::{EtaMethod, RunConfig};
use crate::output::{fmt, write_file, Csv};
use crate::CliError;
use demon_core::demon::{build_block, steady_state, DemonMap};
use demon_core::fluctuation::{
    decompose_steady_state, efficacy_asymptotic, solve_eta_star_cubic, solve_ness_condition,
    sut_check,
};
use demon_core::linops::hs_inner;
use demon_core::qutrit::{
    build_hamiltonian, eigensystem, thermal_state, EigenSystem, ThermalState,
};
use demon_core::statistics::{conditional_probabilities, sse_characteristic_function, tpm_statistics};
use demon_core::trajectories::{bounds_report, extraction_phase_diagram, PhaseClass};
use serde::Serialize;

fn invariant(e: demon_core::Error) -> CliError {
    CliError::Invariant(e.to_string())
}

/// Worker count: DEMON_SIM_THREADS when set (≥ 1), otherwise the hardware
/// default, never more than there are jobs.
fn thread_count(jobs: usize) -> usize {
    let capped = std::env::var("DEMON_SIM_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&t| t >= 1);
    let hardware = std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1);
    capped.unwrap_or(hardware).min(jobs.max(1))
}

/// Runs `f(0..jobs)` across scoped threads in contiguous chunks and returns
/// the results in index order, so output is identical for any thread count.
fn parallel_map<T, F>(jobs: usize, f: F) -> Result<Vec<T>, CliError>
where
    T: Send,
    F: Fn(usize) -> Result<T, CliError> + Sync,
{
    if jobs == 0 {
        return Ok(Vec::new());
    }
    let mut slots: Vec<Option<Result<T, CliError>>> =
        std::iter::repeat_with(|| None).take(jobs).collect();
    let chunk = jobs.div_ceil(thread_count(jobs));
    std::thread::scope(|scope| {
        for (c, slice) in slots.chunks_mut(chunk).enumerate() {
            let f = &f;
            scope.spawn(move || {
                for (k, slot) in slice.iter_mut().enumerate() {
                    *slot = Some(f(c * chunk + k));
                }
            });
        }
    });
    slots
        .into_iter()
        .map(|slot| slot.expect("every slot is filled by its worker"))
        .collect()
}

fn model_pieces(cfg: &RunConfig) -> Result<(DemonMap, EigenSystem, ThermalState), CliError> {
    let map = build_block(&cfg.demon).map_err(invariant)?;
    let es = eigensystem(&build_hamiltonian(&cfg.demon.hamiltonian)).map_err(invariant)?;
    let ts = thermal_state(&es, cfg.beta).map_err(invariant)?;
    Ok((map, es, ts))
}

pub fn cmd_dynamics(cfg: &RunConfig) -> Result<(), CliError> {
    let (map, es, _) = model_pieces(cfg)?;
    let rows = parallel_map(cfg.n_pulses_max as usize + 1, |n| {
        conditional_probabilities(&map, &es, n as u32).map_err(invariant)
    })?;
    let mut csv = Csv::new("n_pulses,i,j,p");
    for (n, cond) in rows.iter().enumerate() {
        for i in 0..3 {
            for j in 0..3 {
                csv.row([
                    n.to_string(),
                    (i + 1).to_string(),
                    (j + 1).to_string(),
                    fmt(cond[i][j]),
                ]);
            }
        }
    }
    write_file(&cfg.output_dir, "dynamics.csv", &csv.finish())?;
    if cfg.emit_plots {
        write_file(&cfg.output_dir, "dynamics.gnuplot", DYNAMICS_PLOT)?;
    }
    Ok(())
}

pub fn cmd_fluctuation(cfg: &RunConfig) -> Result<(), CliError> {
    let (map, es, ts) = model_pieces(cfg)?;
    // A non-unique fixed point leaves the asymptotic column undefined.
    let gamma_inf = match steady_state(&map) {
        Ok(rho_inf) => Some(efficacy_asymptotic(&rho_inf, &ts).map_err(invariant)?),
        Err(demon_core::Error::NonUniqueFixedPoint { .. }) => None,
        Err(e) => return Err(invariant(e)),
    };
    let rows = parallel_map(cfg.n_pulses_max as usize + 1, |n| {
        let stats = tpm_statistics(&map, &es, &ts, n as u32).map_err(invariant)?;
        sut_check(&stats, &map).map_err(invariant)
    })?;
    let gamma_inf_field = gamma_inf.map_or_else(|| "NA".to_string(), fmt);
    let mut csv = Csv::new("n_pulses,g_beta,gamma,gamma_asymptotic");
    let mut worst: f64 = 0.0;
    for (n, report) in rows.iter().enumerate() {
        worst = worst.max(report.deviation);
        csv.row([
            n.to_string(),
            fmt(report.characteristic_at_beta),
            fmt(report.gamma),
            gamma_inf_field.clone(),
        ]);
    }
    write_file(&cfg.output_dir, "fluctuation.csv", &csv.finish())?;
    if cfg.emit_plots {
        write_file(&cfg.output_dir, "fluctuation.gnuplot", FLUCTUATION_PLOT)?;
    }
    if worst > 1e-8 {
        return Err(CliError::Invariant(format!(
            "fluctuation identity violated: max |G(beta) - gamma| = {worst:e}"
        )));
    }
    Ok(())
}

pub fn cmd_bounds(cfg: &RunConfig) -> Result<(), CliError> {
    let demon = cfg.demon;
    let beta = cfg.beta;
    let rows = parallel_map(cfg.n_pulses_max as usize + 1, |n| {
        bounds_report(&demon, beta, n as u32).map_err(invariant)
    })?;
    let mut csv = Csv::new("n_pulses,beta_delta_e,neg_ln_gamma,neg_entropy");
    for report in &rows {
        csv.row([
            report.n_pulses.to_string(),
            fmt(report.beta_delta_e),
            fmt(report.neg_ln_gamma),
            report.neg_entropy.map_or_else(|| "NA".to_string(), fmt),
        ]);
    }
    write_file(&cfg.output_dir, "bounds.csv", &csv.finish())?;
    if cfg.emit_plots {
        write_file(&cfg.output_dir, "bounds.gnuplot", BOUNDS_PLOT)?;
    }
    Ok(())
}

fn class_label(class: PhaseClass) -> &'static str {
    match class {
        PhaseClass::Extraction => "extraction",
        PhaseClass::ZeroLine => "zero_line",
        PhaseClass::Injection => "injection",
    }
}

pub fn cmd_phase_diagram(cfg: &RunConfig) -> Result<(), CliError> {
    let es = eigensystem(&build_hamiltonian(&cfg.demon.hamiltonian)).map_err(invariant)?;
    let diagram = extraction_phase_diagram(&es, cfg.beta, cfg.grid).map_err(invariant)?;

    let mut grid_csv = Csv::new("p_low,p_mid,beta_delta_e,class");
    for p in &diagram.points {
        grid_csv.row([
            fmt(p.p_low),
            fmt(p.p_mid),
            fmt(p.beta_delta_e),
            class_label(p.class).to_string(),
        ]);
    }
    let mut unital_csv = Csv::new("p_low,p_mid,beta_delta_e,class");
    unital_csv.row([
        fmt(diagram.unital.p_low),
        fmt(diagram.unital.p_mid),
        fmt(diagram.unital.beta_delta_e),
        class_label(diagram.unital.class).to_string(),
    ]);
    let mut thermal_csv = Csv::new("beta_inf,p_low,p_mid");
    for t in &diagram.thermal_line {
        thermal_csv.row([fmt(t.beta_inf), fmt(t.p_low), fmt(t.p_mid)]);
    }

    // The zero line is where the asymptotic mean energy equals the initial
    // thermal one: a straight line on the population simplex.
    let ts = thermal_state(&es, cfg.beta).map_err(invariant)?;
    let mean_0: f64 = (0..3).map(|j| ts.probs[j] * es.energies[j]).sum();
    let e = &es.energies;
    let excess = |p_low: f64, p_mid: f64| {
        p_low * e[0] + p_mid * e[1] + (1.0 - p_low - p_mid) * e[2] - mean_0
    };
    let corners = [(1.0, 0.0), (0.0, 1.0), (0.0, 0.0)];
    let mut endpoints: Vec<(f64, f64)> = Vec::new();
    for a in 0..3 {
        let b = (a + 1) % 3;
        let (fa, fb) = (
            excess(corners[a].0, corners[a].1),
            excess(corners[b].0, corners[b].1),
        );
        if fa == 0.0 {
            endpoints.push(corners[a]);
        } else if fa * fb < 0.0 {
            let t = fa / (fa - fb);
            endpoints.push((
                corners[a].0 + t * (corners[b].0 - corners[a].0),
                corners[a].1 + t * (corners[b].1 - corners[a].1),
            ));
        }
    }
    endpoints.dedup_by(|p, q| (p.0 - q.0).abs() < 1e-12 && (p.1 - q.1).abs() < 1e-12);
    let mut zero_csv = Csv::new("p_low,p_mid");
    if endpoints.len() >= 2 {
        let (a, b) = (endpoints[0], endpoints[1]);
        for k in 0..=100 {
            let t = k as f64 / 100.0;
            zero_csv.row([fmt(a.0 + t * (b.0 - a.0)), fmt(a.1 + t * (b.1 - a.1))]);
        }
    } else if let Some(&(x, y)) = endpoints.first() {
        zero_csv.row([fmt(x), fmt(y)]);
    }

    write_file(&cfg.output_dir, "phase_grid.csv", &grid_csv.finish())?;
    write_file(&cfg.output_dir, "unital_point.csv", &unital_csv.finish())?;
    write_file(&cfg.output_dir, "thermal_line.csv", &thermal_csv.finish())?;
    write_file(&cfg.output_dir, "zero_line.csv", &zero_csv.finish())?;
    if cfg.emit_plots {
        write_file(&cfg.output_dir, "phase_diagram.gnuplot", PHASE_PLOT)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct NessCheck {
    beta_fin: f64,
    lambda: f64,
    decomposition_residual: f64,
    eta_star_ness: f64,
    difference: f64,
}

#[derive(Serialize)]
struct EtaStarOutput {
    method: &'static str,
    /// "nontrivial" when a nonzero crossing was found, "trivial_only" when
    /// the characteristic function is monotone through zero.
    crossing: &'static str,
    energies: [f64; 3],
    e_bar: Option<f64>,
    initial_populations: [f64; 3],
    steady_populations: [f64; 3],
    eta_star: f64,
    eta_star_times_e_bar: Option<f64>,
    g_at_eta_star: f64,
    root: Option<f64>,
    degree: Option<usize>,
    sign_pattern: Option<[i8; 4]>,
    all_roots: Option<Vec<[f64; 2]>>,
    ness: Option<NessCheck>,
    ness_skipped: Option<String>,
}

/// Finds the nonzero solution of G(eta) = 1 for an arbitrary spectrum by
/// slope-directed bracketing and bisection. `None` means G is monotone
/// through eta = 0 and only the trivial solution exists.
fn bisection_crossing(energies: &[f64; 3], p: &[f64; 3], q: &[f64; 3]) -> Option<f64> {
    let scale = energies[2] - energies[0];
    let mean = |w: &[f64; 3]| (0..3).map(|k| w[k] * energies[k]).sum::<f64>();
    let slope0 = mean(p) - mean(q);
    if slope0.abs() <= 1e-12 * scale.abs() || scale <= 0.0 {
        return None;
    }
    let g = |eta: f64| sse_characteristic_function(energies, p, q, eta);
    let direction = if slope0 < 0.0 { 1.0 } else { -1.0 };
    let mut inner = direction * 0.25 / scale;
    let mut tries = 0;
    while g(inner) >= 1.0 {
        inner *= 0.5;
        tries += 1;
        if tries > 200 {
            return None;
        }
    }
    let mut outer = 2.0 * inner;
    tries = 0;
    while g(outer) <= 1.0 {
        outer *= 2.0;
        tries += 1;
        if tries > 300 {
            return None;
        }
    }
    let (mut lo, mut hi) = (inner, outer);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) <= 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

pub fn cmd_eta_star(cfg: &RunConfig) -> Result<(), CliError> {
    let (map, es, ts) = model_pieces(cfg)?;
    let e = &es.energies;
    let symmetric = (e[0] + e[2] - 2.0 * e[1]).abs() <= 1e-9 * (e[2] - e[0]);
    let method = match cfg.eta_star_method {
        Some(m) => m,
        None => EtaMethod::Cubic,
    };
    if method == EtaMethod::Cubic && !symmetric {
        return Err(CliError::Config(
            "the spectrum is not a symmetric ladder, so the cubic reduction does \
             not apply; set \"eta_star_method\": \"bisection\""
                .into(),
        ));
    }

    let rho_inf = steady_state(&map).map_err(invariant)?;
    // Populations below the eigensolver noise floor are true zeros. Keeping
    // the dust (~1e-30 for a pump that empties two levels) would blow up
    // under e^{-eta*dE} during bracketing and fabricate a crossing.
    let mut pops = [0.0f64; 3];
    for k in 0..3 {
        let p = hs_inner(&es.projectors[k], &rho_inf).map_err(invariant)?.re;
        pops[k] = if p > 1e-13 { p } else { 0.0 };
    }
    let norm: f64 = pops.iter().sum();
    if !(norm > 0.0) {
        return Err(CliError::Invariant(
            "steady-state populations vanished after noise clamping".into(),
        ));
    }
    for p in &mut pops {
        *p /= norm;
    }

    let mut out = match method {
        EtaMethod::Cubic => {
            let e_bar = e[2] - e[1];
            let solution = solve_eta_star_cubic(&ts.probs, &pops, e_bar).map_err(invariant)?;
            EtaStarOutput {
                method: "cubic",
                crossing: "nontrivial",
                energies: *e,
                e_bar: Some(e_bar),
                initial_populations: ts.probs,
                steady_populations: pops,
                eta_star: solution.eta_star,
                eta_star_times_e_bar: Some(solution.eta_star * e_bar),
                g_at_eta_star: solution.g_at_eta_star,
                root: Some(solution.root),
                degree: Some(solution.degree),
                sign_pattern: Some(solution.sign_pattern),
                all_roots: Some(solution.all_roots.iter().map(|z| [z.re, z.im]).collect()),
                ness: None,
                ness_skipped: None,
            }
        }
        EtaMethod::Bisection => {
            let (crossing, eta_star) = match bisection_crossing(e, &ts.probs, &pops) {
                Some(eta) => ("nontrivial", eta),
                None => ("trivial_only", 0.0),
            };
            EtaStarOutput {
                method: "bisection",
                crossing,
                energies: *e,
                e_bar: None,
                initial_populations: ts.probs,
                steady_populations: pops,
                eta_star,
                eta_star_times_e_bar: None,
                g_at_eta_star: sse_characteristic_function(e, &ts.probs, &pops, eta_star),
                root: None,
                degree: None,
                sign_pattern: None,
                all_roots: None,
                ness: None,
                ness_skipped: None,
            }
        }
    };

    // Cross-check through the steady-state decomposition when it applies:
    // recover (beta_fin, lambda) from the populations and re-solve for the
    // crossing on the parametrized form.
    if symmetric && out.crossing == "nontrivial" {
        match decompose_steady_state(&pops, e) {
            Ok(dec) => {
                let e_bar = e[2] - e[1];
                match solve_ness_condition(cfg.beta, dec.beta_fin, dec.lambda, e_bar) {
                    Ok(eta_ness) => {
                        out.ness = Some(NessCheck {
                            beta_fin: dec.beta_fin,
                            lambda: dec.lambda,
                            decomposition_residual: dec.residual,
                            eta_star_ness: eta_ness,
                            difference: eta_ness - out.eta_star,
                        });
                    }
                    Err(e) => out.ness_skipped = Some(format!("steady-condition solve: {e}")),
                }
            }
            Err(e) => out.ness_skipped = Some(format!("population decomposition: {e}")),
        }
    } else if out.ness.is_none() {
        out.ness_skipped = Some(if !symmetric {
            "spectrum is not a symmetric ladder".to_string()
        } else {
            "no nontrivial crossing".to_string()
        });
    }

    let json = serde_json::to_string_pretty(&out)
        .map_err(|e| CliError::Io(format!("cannot serialize result: {e}")))?;
    write_file(&cfg.output_dir, "eta_star.json", &format!("{json}\n"))?;
    Ok(())
}

const DYNAMICS_PLOT: &str = "set datafile separator ','
set key autotitle columnhead
set term pngcairo size 900,600
set output 'dynamics.png'
set xlabel 'feedback blocks'
set ylabel 'P(j|i)'
set key outside
plot for [i=1:3] for [j=1:3] 'dynamics.csv' \\
  using 1:(($2==i && $3==j) ? $4 : 1/0) with linespoints \\
  title sprintf('P(%d|%d)', j, i)
";

const FLUCTUATION_PLOT: &str = "set datafile separator ','
set key autotitle columnhead
set datafile missing 'NA'
set term pngcairo size 900,600
set output 'fluctuation.png'
set xlabel 'feedback blocks'
set ylabel 'value'
plot 'fluctuation.csv' using 1:2 with linespoints title 'G at beta', \\
     'fluctuation.csv' using 1:3 with points pt 6 title 'efficacy', \\
     'fluctuation.csv' using 1:4 with lines dt 2 title 'asymptote'
";

const BOUNDS_PLOT: &str = "set datafile separator ','
set key autotitle columnhead
set datafile missing 'NA'
set term pngcairo size 900,600
set output 'bounds.png'
set xlabel 'feedback blocks'
set ylabel 'dimensionless'
plot 'bounds.csv' using 1:2 with linespoints title 'beta <dE>', \\
     'bounds.csv' using 1:3 with linespoints title '-ln gamma', \\
     'bounds.csv' using 1:4 with linespoints title '-<S>'
";

const PHASE_PLOT: &str = "set datafile separator ','
set key autotitle columnhead
set term pngcairo size 800,700
set output 'phase_diagram.png'
set xlabel 'lowest-level population'
set ylabel 'middle-level population'
set palette defined (-1 'blue', 0 'white', 1 'red')
plot 'phase_grid.csv' using 1:2:3 with points pt 7 ps 1 palette title 'beta <dE>', \\
     'zero_line.csv' using 1:2 with lines lw 2 lc 'black' title 'zero line', \\
     'thermal_line.csv' using 2:3 with lines lw 2 dt 2 lc 'dark-green' title 'thermal states', \\
     'unital_point.csv' using 1:2 with points pt 5 ps 2 lc 'black' title 'unital point'
";
