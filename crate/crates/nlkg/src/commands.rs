//! Subcommands and the pipelines behind them.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};

use nlkg_core::decomposition::{initial_data_from, Direction};
use nlkg_core::field::{evolve_single_soliton, evolve_two_soliton, shoot_unstable, Monitor, Series, SolverConfig, Stop};
use nlkg_core::groundstate::solve_ground_state;
use nlkg_core::interaction::compute_constants;
use nlkg_core::lattice::{LatticeSoliton, Template};
use nlkg_core::math::linear_fit;
use nlkg_core::reduced::{exceptional_shoot, model_flow, terminal_data, ProfileAttraction, ShootingWindow};
use nlkg_core::spectrum::{coercivity_constant, kernel_check, spectral_data, RadialOperator};
use nlkg_core::{GroundStateProfile, InteractionConstants, ModulationState, ProblemParams};

use crate::config::{pick, FileConfig};
use crate::error::{CliError, CliResult};
use crate::plot::{emit_plot, PlotSpec};
use crate::run::{Constants, Outcome};
use crate::table::Table;

#[derive(Debug, Parser)]
#[command(name = "nlkg", version, about = "Two-solitary-wave dynamics of the focusing nonlinear Klein-Gordon equation")]
pub struct Cli {
    /// Output root (default: $NLKG_OUT, else ./runs).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// TOML file with keys d, p, L, h, dt, t_end, zbar, ell, a_bracket, seed, snapshot_every.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ProfileArgs {
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long, default_value_t = 40.0)]
    pub r_max: f64,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct FieldArgs {
    #[arg(long)]
    pub p: Option<f64>,
    /// Half length of the domain.
    #[arg(long = "L")]
    pub half_length: Option<f64>,
    #[arg(long)]
    pub h: Option<f64>,
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long)]
    pub t_end: Option<f64>,
    #[arg(long)]
    pub snapshot_every: Option<f64>,
}

#[derive(Debug, Clone, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Radial ground state q and tail amplitude κ.
    Groundstate(ProfileArgs),
    /// Negative eigenpair, kernel check and coercivity of the linearized operator.
    Spectrum {
        #[command(flatten)]
        profile: ProfileArgs,
        #[arg(long, default_value_t = 0.005)]
        h: f64,
        #[arg(long, default_value_t = 30.0)]
        box_radius: f64,
        #[arg(long, default_value_t = 200)]
        samples: usize,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Interaction constants c1, g0, κ and ν0.
    Constants(ProfileArgs),
    /// The model equation z'' = -2 exp(-z).
    ModelOde {
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        z0: f64,
        #[arg(long, default_value_t = 2.0, allow_hyphen_values = true)]
        v0: f64,
        #[arg(long, default_value_t = 1.0)]
        t0: f64,
        #[arg(long, default_value_t = 1e4)]
        t1: f64,
        #[arg(long, default_value_t = 1e-14)]
        tol: f64,
    },
    /// Backward shooting onto the log-distance orbit of the reduced dynamics.
    ReducedShoot {
        #[command(flatten)]
        profile: ProfileArgs,
        #[arg(long, default_value_t = 1e2)]
        t0: f64,
        #[arg(long, default_value_t = 1e4)]
        tn: f64,
        #[arg(long, default_value_t = 1e-12)]
        zeta_tol: f64,
    },
    /// One boosted soliton, optionally seeded along the unstable direction.
    Evolve {
        #[command(flatten)]
        field: FieldArgs,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        beta: f64,
        /// Amplitude of the (Y, ν0 Y) seed.
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        seed_amplitude: f64,
        /// |a+| window of the growth-rate fit.
        #[arg(long, num_args = 2, default_values_t = [1e-6, 1e-2])]
        growth_window: Vec<f64>,
    },
    /// Symmetric two-soliton run decomposed at snapshots.
    TwoSoliton {
        #[command(flatten)]
        field: FieldArgs,
        #[arg(long)]
        zbar: Option<f64>,
        /// Relative velocity ℓ1 - ℓ2 (default: the log-distance orbit).
        #[arg(long, allow_hyphen_values = true)]
        ell: Option<f64>,
        /// Unstable coordinate a1+ = a2+ of the initial data.
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        a: f64,
        #[arg(long)]
        norm_ceiling: Option<f64>,
        #[arg(long)]
        unstable_ceiling: Option<f64>,
    },
    /// Forward shooting over the symmetric unstable coordinate.
    ShootUnstable {
        #[command(flatten)]
        field: FieldArgs,
        #[arg(long)]
        zbar: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        ell: Option<f64>,
        #[arg(long, num_args = 2, allow_hyphen_values = true)]
        a_bracket: Option<Vec<f64>>,
        #[arg(long, default_value_t = 1e-2)]
        unstable_ceiling: f64,
        #[arg(long, default_value_t = 60)]
        max_iterations: usize,
    },
    /// Summary of a time series with the fit of |z| against 2 log t.
    Report {
        csv: PathBuf,
        #[arg(long)]
        d: Option<usize>,
        /// Added to t before fitting; a field run started on the log orbit at
        /// separation zbar sits at t ≈ e^{zbar/2}/√(κg0) of the reduced clock.
        #[arg(long, default_value_t = 0.0)]
        t_offset: f64,
    },
    /// SVG line plot of CSV columns.
    Plot {
        csv: PathBuf,
        #[arg(long, default_value = "t")]
        x: String,
        #[arg(long, required = true, num_args = 1..)]
        y: Vec<String>,
        #[arg(long)]
        log_y: bool,
        /// `2logt` draws the reference curve.
        #[arg(long)]
        overlay: Option<String>,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Groundstate(_) => "groundstate",
            Command::Spectrum { .. } => "spectrum",
            Command::Constants(_) => "constants",
            Command::ModelOde { .. } => "model-ode",
            Command::ReducedShoot { .. } => "reduced-shoot",
            Command::Evolve { .. } => "evolve",
            Command::TwoSoliton { .. } => "two-soliton",
            Command::ShootUnstable { .. } => "shoot-unstable",
            Command::Report { .. } => "report",
            Command::Plot { .. } => "plot",
        }
    }
}

fn params(args: &ProfileArgs, file: &FileConfig) -> CliResult<ProblemParams> {
    Ok(ProblemParams::new(pick(args.d, file.d, 1), pick(args.p, file.p, 3.0))?)
}

fn profile(args: &ProfileArgs, file: &FileConfig) -> CliResult<GroundStateProfile> {
    Ok(solve_ground_state(params(args, file)?, args.r_max, args.tol)?)
}

fn nu0_of(g: &GroundStateProfile) -> CliResult<f64> {
    Ok(spectral_data(g, 0.005, 30.0)?.nu0)
}

fn constants_of(k: &InteractionConstants, nu0: f64) -> Constants {
    Constants { kappa: k.kappa, c1: k.c1, g0: k.g0, nu0 }
}

/// Resolved settings of a field run.
struct Field {
    cfg: SolverConfig,
    snapshot_every: f64,
}

fn field(args: &FieldArgs, file: &FileConfig, t_end: f64) -> CliResult<Field> {
    if file.d.is_some_and(|d| d != 1) {
        return Err(CliError::Config("field runs are one-dimensional (d = 1)".into()));
    }
    let h = pick(args.h, file.h, 0.05);
    let cfg = SolverConfig {
        half_length: pick(args.half_length, file.half_length, 30.0),
        h,
        dt: pick(args.dt, file.dt, 0.5 * h),
        p: pick(args.p, file.p, 3.0),
        t_end: pick(args.t_end, file.t_end, t_end),
    };
    cfg.validate()?;
    Ok(Field { cfg, snapshot_every: pick(args.snapshot_every, file.snapshot_every, 0.5) })
}

/// Continuum profile, constants and the lattice template on the field grid.
fn field_setup(cfg: &SolverConfig) -> CliResult<(GroundStateProfile, InteractionConstants, LatticeSoliton)> {
    let g = solve_ground_state(ProblemParams::new(1, cfg.p)?, 40.0, 1e-10)?;
    let k = compute_constants(&g)?;
    let lattice = LatticeSoliton::solve(&g, cfg.h, (2.0 * cfg.half_length).max(40.0))?;
    Ok((g, k, lattice))
}

fn series_table(series: &Series) -> Table {
    let two = series.rows.first().is_some_and(|r| r.z.len() == 2);
    if two {
        let mut t = Table::new(&[
            "t", "z1", "z2", "l1", "l2", "energy_norm", "a1_minus", "a1_plus", "a2_minus", "a2_plus", "E", "J", "S", "W",
            "H", "P",
        ]);
        for r in &series.rows {
            let f = r.functionals.map_or([f64::NAN; 4], |f| [f.e, f.j, f.s, f.w]);
            t.push(vec![
                r.t,
                r.z[0],
                r.z[1],
                r.l[0],
                r.l[1],
                r.energy_norm,
                r.a_minus[0],
                r.a_plus[0],
                r.a_minus[1],
                r.a_plus[1],
                f[0],
                f[1],
                f[2],
                f[3],
                r.conserved.energy,
                r.conserved.momentum,
            ]);
        }
        t
    } else {
        let mut t = Table::new(&["t", "z", "l", "energy_norm", "a_minus", "a_plus", "H", "P"]);
        for r in &series.rows {
            t.push(vec![r.t, r.z[0], r.l[0], r.energy_norm, r.a_minus[0], r.a_plus[0], r.conserved.energy, r.conserved.momentum]);
        }
        t
    }
}

fn stop_json(stop: &Option<Stop>) -> Value {
    match stop {
        None => Value::Null,
        Some(Stop::Unstable { t, sign }) => json!({ "kind": "UnstableCeiling", "t": t, "sign": sign }),
        Some(Stop::Error(e)) => json!({ "kind": CliError::from(e.clone()).kind(), "message": e.to_string() }),
    }
}

fn two_soliton_params(zbar: f64, ell: Option<f64>, k: &InteractionConstants) -> ModulationState {
    match ell {
        Some(l) => ModulationState::symmetric(0.0, &[zbar], &[l]),
        None => terminal_data(0.0, zbar, 1, k),
    }
}

pub fn run(command: &Command, file: &FileConfig) -> CliResult<Outcome> {
    match command {
        Command::Groundstate(args) => {
            let g = profile(args, file)?;
            let mut t = Table::new(&["r", "q", "dq"]);
            for i in 0..g.r.len() {
                t.push(vec![g.r[i], g.q[i], g.dq[i]]);
            }
            let summary = json!({
                "d": g.params.d, "p": g.params.p, "q0": g.q0(), "kappa": g.kappa,
                "r_match": g.r_match, "residual_max": g.residual_max,
            });
            Ok(Outcome { summary, files: vec![("profile.csv".into(), t.to_csv()?)], constants: None })
        }
        Command::Spectrum { profile: args, h, box_radius, samples, seed } => {
            let g = profile(args, file)?;
            let s = spectral_data(&g, *h, *box_radius)?;
            let k = kernel_check(&g, *h, *box_radius)?;
            let sturm = RadialOperator::assemble(&g, 0, *h, *box_radius)?.matrix.sturm_count(0.0);
            let seed = pick(*seed, file.seed, 11);
            let c = coercivity_constant(&g, &s, *samples, seed)?;
            let mut t = Table::new(&["r", "y"]);
            for (r, y) in s.r.iter().zip(&s.y) {
                t.push(vec![*r, *y]);
            }
            let summary = json!({
                "d": g.params.d, "p": g.params.p, "nu0": s.nu0, "nu0_squared": s.nu0 * s.nu0, "beta": s.beta,
                "second_eigenvalue": s.second_eigenvalue, "negative_count": sturm,
                "kernel_eigenvalue": k.eigenvalue, "kernel_residual": k.residual, "decay_constant": s.decay_constant,
                "coercivity": { "c_est": c.c_est, "radial_min": c.radial_min, "angular_min": c.angular_min,
                                "samples": c.samples, "seed": seed },
            });
            Ok(Outcome { summary, files: vec![("eigenfunction.csv".into(), t.to_csv()?)], constants: None })
        }
        Command::Constants(args) => {
            let g = profile(args, file)?;
            let k = compute_constants(&g)?;
            let nu0 = nu0_of(&g)?;
            let summary = json!({
                "d": g.params.d, "p": g.params.p, "c1": k.c1, "g0": k.g0, "kappa": k.kappa, "nu0": nu0,
                "kappa_g0": k.kappa * k.g0, "identity_ratio": k.c1 * k.g0 / (2.0 * k.kappa),
            });
            Ok(Outcome { summary, files: vec![], constants: Some(constants_of(&k, nu0)) })
        }
        Command::ModelOde { z0, v0, t0, t1, tol } => {
            let m = model_flow(*z0, *v0, *t0, *t1, *tol)?;
            let e = m.first_integral();
            let mut t = Table::new(&["t", "z", "v", "first_integral"]);
            for i in 0..m.t.len() {
                t.push(vec![m.t[i], m.z[i], m.v[i], e[i]]);
            }
            let (tf, zf) = (*m.t.last().unwrap(), *m.z.last().unwrap());
            let drift = e.iter().map(|x| (x - e[0]).abs()).fold(0.0, f64::max);
            let summary = json!({
                "final_t": tf, "final_z": zf, "final_v": m.v.last(), "two_log_t": 2.0 * tf.ln(),
                "first_integral_drift": drift,
                "stop": m.stop.as_ref().map(|e| e.to_string()),
            });
            Ok(Outcome { summary, files: vec![("model.csv".into(), t.to_csv()?)], constants: None })
        }
        Command::ReducedShoot { profile: args, t0, tn, zeta_tol } => {
            let g = profile(args, file)?;
            let k = compute_constants(&g)?;
            let attraction = ProfileAttraction::new(&g, &k);
            let window = ShootingWindow { t0: *t0, tn: *tn, d: g.params.d, constants: k, attraction: &attraction, tol: 1e-12 };
            let shot = exceptional_shoot(&window, *zeta_tol)?;
            let mut t = Table::new(&["t", "z1", "z2", "l1", "l2", "separation", "relative_speed"]);
            for s in shot.run.trajectory.states.iter().rev() {
                t.push(vec![s.t, s.z1[0], s.z2[0], s.l1[0], s.l2[0], s.separation(), s.relative_speed()]);
            }
            let summary = json!({
                "d": g.params.d, "p": g.params.p, "t0": t0, "tn": tn,
                "zeta_hat": shot.zeta_hat, "zbar": shot.zbar, "iterations": shot.iterations,
                "exit_time": shot.run.exit.time,
                "lower_exit_side": shot.lower_exit.side, "upper_exit_side": shot.upper_exit.side,
            });
            let nu0 = nu0_of(&g)?;
            Ok(Outcome { summary, files: vec![("reduced.csv".into(), t.to_csv()?)], constants: Some(constants_of(&k, nu0)) })
        }
        Command::Evolve { field: fa, beta, seed_amplitude, growth_window } => {
            let f = field(fa, file, 20.0)?;
            let (_, k, lattice) = field_setup(&f.cfg)?;
            let window = (growth_window[0], growth_window[1]);
            let r = evolve_single_soliton(*beta, *seed_amplitude, f.cfg, &lattice, f.snapshot_every, window)?;
            let summary = json!({
                "beta": beta, "seed_amplitude": seed_amplitude, "velocity": r.velocity, "fit_until": r.fit_until,
                "growth_rate": r.growth_rate, "nu0": lattice.nu0(), "lifetime": r.series.lifetime(),
                "stop": stop_json(&r.series.stop),
            });
            let files = vec![("series.csv".into(), series_table(&r.series).to_csv()?)];
            Ok(Outcome { summary, files, constants: Some(constants_of(&k, lattice.nu0())) })
        }
        Command::TwoSoliton { field: fa, zbar, ell, a, norm_ceiling, unstable_ceiling } => {
            let f = field(fa, file, 40.0)?;
            let (_, k, lattice) = field_setup(&f.cfg)?;
            let zbar = pick(*zbar, file.zbar, 12.0);
            let params = two_soliton_params(zbar, ell.or(file.ell), &k);
            let initial = initial_data_from(f.cfg.grid()?, &params, &[*a, *a], Direction::Unstable, &lattice)?;
            let monitor = Monitor {
                snapshot_every: f.snapshot_every,
                norm_ceiling: norm_ceiling.unwrap_or(f64::INFINITY),
                unstable_ceiling: unstable_ceiling.unwrap_or(f64::INFINITY),
                functionals: true,
                ..Monitor::default()
            };
            let series = evolve_two_soliton(&initial, &params, f.cfg, &lattice, monitor)?;
            let summary = json!({
                "zbar": zbar, "ell": params.l1[0] - params.l2[0], "a": a, "lifetime": series.lifetime(),
                "rows": series.rows.len(), "stop": stop_json(&series.stop),
                "boundary_ratio": initial.boundary_ratio(),
            });
            let files = vec![("series.csv".into(), series_table(&series).to_csv()?)];
            Ok(Outcome { summary, files, constants: Some(constants_of(&k, lattice.nu0())) })
        }
        Command::ShootUnstable { field: fa, zbar, ell, a_bracket, unstable_ceiling, max_iterations } => {
            let f = field(fa, file, 80.0)?;
            let (_, k, lattice) = field_setup(&f.cfg)?;
            let zbar = pick(*zbar, file.zbar, 12.0);
            let params = two_soliton_params(zbar, ell.or(file.ell), &k);
            let bracket = match a_bracket {
                Some(v) => [v[0], v[1]],
                None => file.a_bracket.unwrap_or([-1e-3, 1e-3]),
            };
            let monitor = Monitor {
                snapshot_every: f.snapshot_every,
                unstable_ceiling: *unstable_ceiling,
                functionals: true,
                ..Monitor::default()
            };
            let r = shoot_unstable(&params, f.cfg, &lattice, (bracket[0], bracket[1]), monitor, *max_iterations)?;
            let summary = json!({
                "zbar": zbar, "ell": params.l1[0] - params.l2[0], "a_bracket": bracket,
                "a_star": r.a_star, "iterations": r.iterations,
                "lifetime": r.best.lifetime, "unshot_lifetime": r.unshot.lifetime,
                "lifetime_ratio": r.best.lifetime / r.unshot.lifetime,
                "lower": { "a": r.lower.a, "side": r.lower.side, "lifetime": r.lower.lifetime },
                "upper": { "a": r.upper.a, "side": r.upper.side, "lifetime": r.upper.lifetime },
                "stop": stop_json(&r.best.series.stop),
            });
            let files = vec![
                ("series.csv".into(), series_table(&r.best.series).to_csv()?),
                ("unshot.csv".into(), series_table(&r.unshot.series).to_csv()?),
            ];
            Ok(Outcome { summary, files, constants: Some(constants_of(&k, lattice.nu0())) })
        }
        Command::Report { csv, d, t_offset } => {
            let table = Table::read(csv)?;
            let d = pick(*d, file.d, 1);
            Ok(Outcome { summary: report(&table, d, *t_offset)?, files: vec![], constants: None })
        }
        Command::Plot { csv, x, y, log_y, overlay } => {
            let table = Table::read(csv)?;
            let spec = PlotSpec {
                x: x.clone(),
                y: y.clone(),
                log_y: *log_y,
                overlay: overlay.clone(),
                title: csv.file_name().map(|n| n.to_string_lossy().into_owned()),
            };
            let svg = emit_plot(&table, &spec)?;
            let summary = json!({ "csv": csv, "rows": table.rows.len(), "columns": y });
            Ok(Outcome { summary, files: vec![("plot.svg".into(), svg.into_bytes())], constants: None })
        }
    }
}

/// `|z|` per row: `|z1 - z2|`, else `separation`, else `z`.
fn separations(table: &Table) -> CliResult<Vec<f64>> {
    if let (Ok(a), Ok(b)) = (table.column("z1"), table.column("z2")) {
        return Ok(a.iter().zip(&b).map(|(x, y)| (x - y).abs()).collect());
    }
    if let Ok(s) = table.column("separation") {
        return Ok(s);
    }
    Ok(table.column("z")?.iter().map(|v| v.abs()).collect())
}

/// Fit of `|z(t)|` against `2 log t - ((d-1)/2) log log t - C` over the rows
/// with `log log t` defined.
pub fn report(table: &Table, d: usize, t_offset: f64) -> CliResult<Value> {
    let t: Vec<f64> = table.column("t")?.iter().map(|t| t + t_offset).collect();
    let z = separations(table)?;
    let k = (d as f64 - 1.0) / 2.0;
    let (mut ts, mut zs, mut shift) = (vec![], vec![], vec![]);
    for (&ti, &zi) in t.iter().zip(&z) {
        if ti > std::f64::consts::E && zi.is_finite() {
            ts.push(ti);
            zs.push(zi);
            shift.push(2.0 * ti.ln() - k * ti.ln().ln() - zi);
        }
    }
    let n = shift.len();
    let fit = if n >= 2 {
        let c = shift.iter().sum::<f64>() / n as f64;
        let rms = (shift.iter().map(|s| (s - c) * (s - c)).sum::<f64>() / n as f64).sqrt();
        let logs: Vec<f64> = ts.iter().map(|t| t.ln()).collect();
        let (_, slope) = linear_fit(&logs, &zs);
        let last = n - 1;
        json!({
            "rows": n, "t_min": ts[0], "t_max": ts[last], "c": c, "rms_residual": rms,
            "max_residual": shift.iter().map(|s| (s - c).abs()).fold(0.0, f64::max),
            "slope_vs_log_t": slope, "final_ratio_to_2logt": zs[last] / (2.0 * ts[last].ln()),
        })
    } else {
        Value::Null
    };
    let mut summary = json!({
        "rows": t.len(), "t_first": t.first(), "t_last": t.last(),
        "separation_first": z.first(), "separation_last": z.last(), "d": d, "t_offset": t_offset, "log_fit": fit,
    });
    if let Ok(norm) = table.column("energy_norm") {
        summary["energy_norm_max"] = json!(norm.iter().copied().fold(0.0, f64::max));
    }
    if let Ok(h) = table.column("H") {
        let drift = h.iter().map(|x| (x - h[0]).abs()).fold(0.0, f64::max);
        summary["energy_drift"] = json!(drift);
    }
    Ok(summary)
}
