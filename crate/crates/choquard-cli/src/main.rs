//! Command-line laboratory for the Choquard problem: ground states of the
//! limit problem, equivariant minimization below the compactness threshold,
//! explicit test-function diagnostics, and property verification suites.

mod config;
mod report;

use anyhow::{anyhow, bail, Context, Result};
use choquard::energy::ProblemParams;
use choquard::grid::Field;
use choquard::groundstate::{self, fit_decay, GroundState, Seed, SolveLimitOptions};
use choquard::io::{read_chqf, write_chqf};
use choquard::solver::{self, SolveConfig};
use choquard::suites;
use choquard::testfn;
use clap::{Parser, Subcommand};
use config::ExperimentConfig;
use report::{g17, print_table, write_csv, write_report};
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};
use std::sync::Arc;

#[derive(Parser)]
#[command(
    name = "choquard",
    about = "Numerical laboratory for the nonlinear Choquard equation on exterior \
             domains with finite symmetries",
    long_about = None,
    after_help = "CSV artifacts (see FORMATS.md for full schemas):\n\
      groundstate: profile.csv (r,omega,spread,count), convergence.csv (iter,j,grad_rel)\n\
      solve:       convergence.csv (iter,j,grad_rel)\n\
      testfn:      diagnostics.csv (per subcommand; R plus energies, bounds, margins)\n\
      sweep:       sweep.csv (target-dependent columns)\n\
    Field files use the CHQF format; reports are plain 'key: value' text."
)]
struct Cli {
    /// experiment configuration file (sectioned key = value text)
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// output root (default: $CHOQUARD_OUT or ./runs)
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// rayon worker threads
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// RNG seed override
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    alpha: Option<f64>,
    #[arg(long, global = true)]
    p: Option<f64>,
    /// space dimension override
    #[arg(long, global = true)]
    n: Option<usize>,
    /// box half-width override
    #[arg(long, global = true)]
    l: Option<f64>,
    /// points per axis override
    #[arg(long, global = true)]
    m: Option<usize>,
    /// translate scale R override
    #[arg(long, global = true)]
    r: Option<f64>,
    /// orbit base point override, e.g. "1,0,0"
    #[arg(long, global = true)]
    z: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the limit problem and emit omega, its profile and decay fits
    Groundstate,
    /// Equivariant Nehari minimization with certificates
    Solve,
    /// Explicit test-function constructions and bound tables
    Testfn {
        #[command(subcommand)]
        which: TestFnCmd,
    },
    /// Property suites
    Verify {
        /// lemmas | asymptotics | energy
        #[arg(long)]
        suite: String,
    },
    /// Parameter sweeps with CSV aggregation
    Sweep,
}

#[derive(Subcommand, Clone, Copy)]
enum TestFnCmd {
    Theta,
    Sigma,
    Escape,
    Ratio,
}

fn main() {
    let cli = Cli::parse();
    std::process::exit(match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            // configuration problems exit 2, runtime problems exit 1
            let text = format!("{e:#}");
            if text.contains("line ") || text.contains("unknown key") || text.contains("outside") {
                2
            } else {
                1
            }
        }
    });
}

fn load_config(cli: &Cli) -> Result<(ExperimentConfig, PathBuf)> {
    let (mut cfg, base) = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?;
            let cfg = ExperimentConfig::parse(&text)?;
            let base = path.parent().unwrap_or(Path::new(".")).to_path_buf();
            (cfg, base)
        }
        None => (ExperimentConfig::default(), PathBuf::from(".")),
    };
    if let Some(v) = cli.seed {
        cfg.seed = v;
    }
    if let Some(v) = cli.alpha {
        cfg.alpha = v;
    }
    if let Some(v) = cli.p {
        cfg.p = v;
    }
    if let Some(v) = cli.n {
        cfg.n_dim = v;
        if cfg.z.len() != v {
            cfg.z = (0..v).map(|i| if i == 0 { 1.0 } else { 0.0 }).collect();
        }
    }
    if let Some(v) = cli.l {
        cfg.half_width = v;
    }
    if let Some(v) = cli.m {
        cfg.points = v;
    }
    if let Some(v) = cli.r {
        cfg.r_scale = v;
    }
    if let Some(zs) = &cli.z {
        cfg.z = zs
            .split(',')
            .map(|s| s.trim().parse::<f64>().map_err(|e| anyhow!("--z: {e}")))
            .collect::<Result<_>>()?;
    }
    cfg.validate()?;
    Ok((cfg, base))
}

fn make_run_dir(cli: &Cli, cfg: &ExperimentConfig, command: &str) -> Result<PathBuf> {
    let root = cli
        .out
        .clone()
        .or_else(|| std::env::var_os("CHOQUARD_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("runs"));
    let stamp = chrono::Utc::now().format("%Y%m%dT%H%M%SZ");
    let hash = {
        let mut h = Sha256::new();
        h.update(cfg.emit().as_bytes());
        hex_prefix(&h.finalize(), 8)
    };
    let dir = root.join(format!("{command}-{stamp}-{hash}"));
    std::fs::create_dir_all(&dir)?;
    std::fs::write(dir.join("config.txt"), cfg.emit())?;
    Ok(dir)
}

fn hex_prefix(bytes: &[u8], n: usize) -> String {
    bytes
        .iter()
        .flat_map(|b| [b >> 4, b & 15])
        .take(n)
        .map(|d| char::from_digit(d as u32, 16).unwrap())
        .collect()
}

fn build_params(cfg: &ExperimentConfig, base: &Path) -> Result<Arc<ProblemParams>> {
    let grid = cfg.grid()?;
    let potential = cfg.build_potential(base)?;
    let mask = cfg.build_mask(grid)?;
    let group = Arc::new(cfg.build_group()?);
    Ok(Arc::new(ProblemParams::new(
        grid,
        cfg.alpha,
        cfg.p,
        potential,
        mask,
        group,
    )?))
}

/// Limit-problem ground state on the configured grid: loaded from a CHQF
/// file when `omega` is set, computed by the coarse-to-fine cascade
/// otherwise. Returns the final state and (when computed) the coarser stage
/// for refinement checks.
fn obtain_ground_state(
    cfg: &ExperimentConfig,
    base: &Path,
) -> Result<(GroundState, Option<GroundState>)> {
    if let Some(path) = &cfg.omega_file {
        let field = read_chqf(&base.join(path))?;
        if field.grid() != cfg.grid()? {
            bail!("omega file grid does not match the configured grid");
        }
        return Ok((GroundState::from_field(cfg.alpha, cfg.p, field)?, None));
    }
    let opts = SolveLimitOptions {
        seed: Seed::Gaussian {
            width: cfg.seed_width,
        },
        tol_rel: cfg.tol.min(1e-8),
        max_iter: cfg.max_iter,
        record_trace: true,
    };
    let grid = cfg.grid()?;
    if cfg.cascade {
        let result = groundstate::solve_limit_cascade(grid, cfg.alpha, cfg.p, &opts)?;
        let coarse = result.stages.into_iter().last();
        Ok((result.ground_state, coarse))
    } else {
        Ok((groundstate::solve_limit(grid, cfg.alpha, cfg.p, &opts)?, None))
    }
}

fn run(cli: Cli) -> Result<i32> {
    if let Some(t) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .ok();
    }
    let (cfg, base) = load_config(&cli)?;
    match &cli.command {
        Command::Groundstate => cmd_groundstate(&cli, &cfg, &base),
        Command::Solve => cmd_solve(&cli, &cfg, &base),
        Command::Testfn { which } => cmd_testfn(&cli, &cfg, &base, *which),
        Command::Verify { suite } => cmd_verify(&cli, &cfg, &base, suite),
        Command::Sweep => cmd_sweep(&cli, &cfg, &base),
    }
}

fn convergence_rows(trace: &[choquard::solver::TracePoint]) -> Vec<Vec<String>> {
    trace
        .iter()
        .map(|t| vec![t.iteration.to_string(), g17(t.j_value), g17(t.grad_rel)])
        .collect()
}

fn cmd_groundstate(cli: &Cli, cfg: &ExperimentConfig, base: &Path) -> Result<i32> {
    let dir = make_run_dir(cli, cfg, "groundstate")?;
    let (gs, _) = obtain_ground_state(cfg, base)?;
    write_chqf(&gs.field, &dir.join("omega.chqf"))?;

    let rows: Vec<Vec<String>> = gs
        .profile
        .iter()
        .map(|p| {
            vec![
                g17(p.r),
                g17(p.mean),
                g17(if p.mean != 0.0 {
                    (p.max - p.min) / p.mean
                } else {
                    0.0
                }),
                p.count.to_string(),
            ]
        })
        .collect();
    write_csv(&dir.join("profile.csv"), &["r", "omega", "spread", "count"], &rows)?;
    write_csv(
        &dir.join("convergence.csv"),
        &["iter", "j", "grad_rel"],
        &convergence_rows(&gs.trace),
    )?;

    let mut pairs = vec![
        ("c_inf".to_string(), g17(gs.c_inf)),
        ("nehari_defect_rel".to_string(), g17(gs.nehari_defect_rel)),
        ("residual_l2_rel".to_string(), g17(gs.residual_l2_rel)),
        ("iterations".to_string(), gs.iterations.to_string()),
        ("radial_spread_1e-4".to_string(), g17(gs.radial_spread(1e-4))),
    ];
    match fit_decay(&gs, cfg.window) {
        Ok(fit) => {
            pairs.push((
                "decay_model".to_string(),
                if fit.delta.is_some() {
                    "-Q(r)".into()
                } else {
                    "-r".into()
                },
            ));
            pairs.push(("decay_slope".to_string(), g17(fit.slope)));
            pairs.push(("decay_misfit".to_string(), g17(fit.misfit)));
            if let Some(d) = fit.delta {
                pairs.push(("decay_delta".to_string(), g17(d)));
            }
        }
        Err(e) => pairs.push(("decay_fit_error".to_string(), e.to_string())),
    }
    write_report(&dir.join("report.txt"), &pairs)?;
    println!("c_inf: {}", g17(gs.c_inf));
    println!("artifacts: {}", dir.display());
    Ok(0)
}

fn initial_field(
    cfg: &ExperimentConfig,
    params: &ProblemParams,
    gs: &GroundState,
) -> Result<Field> {
    let kind = if cfg.init == "auto" {
        if params.group().order() > 1 {
            "theta"
        } else {
            "gaussian"
        }
    } else {
        cfg.init.as_str()
    };
    Ok(match kind {
        "theta" => {
            testfn::theta(params, gs, &unit(&cfg.z), cfg.r_scale, cfg.lambda, None, None)?.field
        }
        "sigma" => {
            testfn::chi_sigma_ratio(params, gs, &unit(&cfg.z), cfg.r_scale)?
                .construction
                .field
        }
        "gaussian" => {
            let w = cfg.seed_width;
            Field::from_radial(params.grid(), move |r| (-(r / w) * (r / w)).exp())
        }
        other => bail!("unknown init '{other}' (use auto | theta | sigma | gaussian)"),
    })
}

fn unit(z: &[f64]) -> Vec<f64> {
    let n = z.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-300);
    z.iter().map(|v| v / n).collect()
}

fn l2_rel_distance(a: &Field, b: &Field) -> f64 {
    let scale = a.norm_l2_sq().sqrt().max(1e-300);
    let direct = a.sub(b).norm_l2_sq().sqrt() / scale;
    let flipped = a.add(b).norm_l2_sq().sqrt() / scale;
    direct.min(flipped)
}

fn cmd_solve(cli: &Cli, cfg: &ExperimentConfig, base: &Path) -> Result<i32> {
    let dir = make_run_dir(cli, cfg, "solve")?;
    let params = build_params(cfg, base)?;
    let (gs, _) = obtain_ground_state(cfg, base)?;

    // informative hypothesis report
    let zs: Vec<Vec<f64>> = vec![unit(&cfg.z)];
    let hyp = params
        .potential()
        .check_hypotheses(params.grid(), params.group(), &zs)?;

    let init = initial_field(cfg, &params, &gs)?;
    let config = SolveConfig {
        tol_rel: cfg.tol,
        max_iter: cfg.max_iter,
        ..SolveConfig::default()
    };
    let rep = solver::minimize(&params, &init, &config)?;
    let certs = solver::certify(&params, &rep, &gs);

    write_chqf(&rep.field, &dir.join("solution.chqf"))?;
    write_csv(
        &dir.join("convergence.csv"),
        &["iter", "j", "grad_rel"],
        &convergence_rows(&rep.trace),
    )?;
    let ell = params.group().ell();
    let pairs = vec![
        ("converged".to_string(), rep.converged.to_string()),
        ("iterations".to_string(), rep.iterations.to_string()),
        ("j_value".to_string(), g17(rep.j_value)),
        ("norm_v_sq".to_string(), g17(rep.breakdown.norm_v_sq)),
        ("d_value".to_string(), g17(rep.breakdown.d_value)),
        ("nehari_defect".to_string(), g17(rep.breakdown.nehari_defect)),
        ("tangent_grad_rel".to_string(), g17(rep.tangent_grad_rel)),
        ("residual_l2_rel".to_string(), g17(rep.residual_l2_rel)),
        ("equivariance_error".to_string(), g17(rep.equivariance_error)),
        ("min_value".to_string(), g17(rep.min_value)),
        ("max_value".to_string(), g17(rep.max_value)),
        ("d_small_energy".to_string(), g17(rep.d_small_energy)),
        ("ell".to_string(), ell.value.to_string()),
        ("ell_certified".to_string(), ell.certified.to_string()),
        ("c_inf".to_string(), g17(gs.c_inf)),
        ("threshold".to_string(), g17(ell.value as f64 * gs.c_inf)),
        ("cert_equivariant".to_string(), certs.equivariant.to_string()),
        ("cert_sign_changing".to_string(), certs.sign_changing.to_string()),
        ("cert_positive".to_string(), certs.positive.to_string()),
        (
            "cert_below_threshold".to_string(),
            certs.below_threshold.to_string(),
        ),
        ("threshold_margin".to_string(), g17(certs.threshold_margin)),
        (
            "cert_small_residual".to_string(),
            certs.small_residual.to_string(),
        ),
        ("hyp_v0".to_string(), hyp.v0.satisfied.to_string()),
        (
            "hyp_v1".to_string(),
            format!("{} (bound {})", hyp.v1.satisfied, hyp.v1.bound),
        ),
        (
            "hyp_v2".to_string(),
            format!("{} (bound {})", hyp.v2.satisfied, hyp.v2.bound),
        ),
        (
            "hyp_v3".to_string(),
            format!("{} (bound {})", hyp.v3.satisfied, hyp.v3.bound),
        ),
        (
            "hyp_v4".to_string(),
            format!("{} (bound {})", hyp.v4.satisfied, hyp.v4.bound),
        ),
    ];
    write_report(&dir.join("report.txt"), &pairs)?;
    for (k, v) in pairs.iter().take(12) {
        println!("{k}: {v}");
    }
    println!("artifacts: {}", dir.display());
    Ok(if rep.converged { 0 } else { 1 })
}

fn cmd_testfn(cli: &Cli, cfg: &ExperimentConfig, base: &Path, which: TestFnCmd) -> Result<i32> {
    let name = match which {
        TestFnCmd::Theta => "testfn-theta",
        TestFnCmd::Sigma => "testfn-sigma",
        TestFnCmd::Escape => "testfn-escape",
        TestFnCmd::Ratio => "testfn-ratio",
    };
    let dir = make_run_dir(cli, cfg, name)?;
    let params = build_params(cfg, base)?;
    let (gs, _) = obtain_ground_state(cfg, base)?;
    let z = unit(&cfg.z);
    let ell = params.group().ell().value as f64;

    let mut rows = Vec::new();
    let mut last_field: Option<Field> = None;
    let header: Vec<&str> = match which {
        TestFnCmd::Theta => {
            for &r in &cfg.r_values {
                let c = testfn::theta(&params, &gs, &z, r, cfg.lambda, None, None)?;
                let bound = ell * gs.c_inf;
                rows.push(vec![
                    g17(r),
                    g17(c.j_pi),
                    g17(bound),
                    g17(bound - c.j_pi),
                    c.support_disjoint.unwrap_or(false).to_string(),
                    g17(c.equivariance_error),
                ]);
                last_field = Some(c.field);
            }
            vec!["r", "j_pi", "bound_ell_c_inf", "margin", "disjoint", "equivariance"]
        }
        TestFnCmd::Sigma => {
            for &r in &cfg.r_values {
                let c = testfn::sigma(&params, &gs, &z, r)?;
                let e = c.eps_rz.unwrap_or(0.0);
                let eh = c.eps_hat_rz.unwrap_or(0.0);
                rows.push(vec![
                    g17(r),
                    g17(e),
                    g17(eh),
                    g17(if e > 0.0 { eh / e } else { f64::NAN }),
                    g17(c.j_pi),
                    g17(c.equivariance_error),
                ]);
                last_field = Some(c.field);
            }
            vec!["r", "eps", "eps_hat", "eps_hat_over_eps", "j_pi", "equivariance"]
        }
        TestFnCmd::Escape => {
            let obstacle = params.mask().obstacle_radius();
            for &d in &cfg.r_values {
                let mut xn = vec![0.0; cfg.n_dim];
                for (i, zi) in z.iter().enumerate() {
                    xn[i] = zi * d;
                }
                let c = testfn::escape_sequence(&params, &gs, &xn, obstacle)?;
                rows.push(vec![g17(d), g17(c.j_pi), g17(gs.c_inf), g17(c.j_pi - gs.c_inf)]);
                last_field = Some(c.field);
            }
            vec!["dist", "j_pi", "c_inf", "gap"]
        }
        TestFnCmd::Ratio => {
            for &r in &cfg.r_values {
                let rep = testfn::chi_sigma_ratio(&params, &gs, &z, r)?;
                rows.push(vec![
                    g17(r),
                    g17(rep.ratio),
                    g17(rep.bound),
                    g17(rep.margin),
                    g17(rep.j_pi),
                    g17(rep.ell_c_inf),
                ]);
                last_field = Some(rep.construction.field);
            }
            vec!["r", "ratio", "bound", "margin", "j_pi", "ell_c_inf"]
        }
    };
    write_csv(&dir.join("diagnostics.csv"), &header, &rows)?;
    if let Some(f) = last_field {
        write_chqf(&f, &dir.join("field.chqf"))?;
    }
    write_report(
        &dir.join("report.txt"),
        &[
            ("rows".to_string(), rows.len().to_string()),
            ("ell".to_string(), format!("{ell}")),
            ("c_inf".to_string(), g17(gs.c_inf)),
        ],
    )?;
    for row in &rows {
        println!("{}", row.join("  "));
    }
    println!("artifacts: {}", dir.display());
    Ok(0)
}

fn cmd_verify(cli: &Cli, cfg: &ExperimentConfig, base: &Path, suite: &str) -> Result<i32> {
    let dir = make_run_dir(cli, cfg, &format!("verify-{suite}"))?;
    let results = match suite {
        "lemmas" => suites::lemma_suite(cfg.trials, cfg.seed)?,
        "asymptotics" => {
            let (gs, coarse) = obtain_ground_state(cfg, base)?;
            suites::asymptotics_suite(&gs, coarse.as_ref(), cfg.window)?
        }
        "energy" => {
            let params = build_params(cfg, base)?;
            suites::energy_suite(&params, cfg.trials.min(200), cfg.seed)?
        }
        other => bail!("unknown suite '{other}' (use lemmas | asymptotics | energy)"),
    };
    print_table(&results);
    let pairs: Vec<(String, String)> = results
        .iter()
        .map(|r| {
            (
                r.name.clone(),
                format!("{} ({})", if r.passed { "PASS" } else { "FAIL" }, r.detail),
            )
        })
        .collect();
    write_report(&dir.join("report.txt"), &pairs)?;
    Ok(if suites::all_passed(&results) { 0 } else { 1 })
}

fn cmd_sweep(cli: &Cli, cfg: &ExperimentConfig, base: &Path) -> Result<i32> {
    let dir = make_run_dir(cli, cfg, "sweep")?;
    let params = build_params(cfg, base)?;
    let (gs, _) = obtain_ground_state(cfg, base)?;
    let z = unit(&cfg.z);

    match cfg.sweep_target.as_str() {
        "theta" | "sigma" | "ratio" | "escape" => {
            let mut rows = Vec::new();
            for &r in &cfg.r_values {
                match cfg.sweep_target.as_str() {
                    "theta" => {
                        let c = testfn::theta(&params, &gs, &z, r, cfg.lambda, None, None)?;
                        let bound = params.group().ell().value as f64 * gs.c_inf;
                        rows.push(vec![g17(r), g17(c.j_pi), g17(bound), g17(bound - c.j_pi)]);
                    }
                    "sigma" => {
                        let c = testfn::sigma(&params, &gs, &z, r)?;
                        rows.push(vec![
                            g17(r),
                            g17(c.eps_rz.unwrap_or(0.0)),
                            g17(c.eps_hat_rz.unwrap_or(0.0)),
                            g17(c.j_pi),
                        ]);
                    }
                    "ratio" => {
                        let rep = testfn::chi_sigma_ratio(&params, &gs, &z, r)?;
                        rows.push(vec![g17(r), g17(rep.ratio), g17(rep.bound), g17(rep.margin)]);
                    }
                    _ => {
                        let mut xn = vec![0.0; cfg.n_dim];
                        for (i, zi) in z.iter().enumerate() {
                            xn[i] = zi * r;
                        }
                        let c = testfn::escape_sequence(
                            &params,
                            &gs,
                            &xn,
                            params.mask().obstacle_radius(),
                        )?;
                        rows.push(vec![g17(r), g17(c.j_pi), g17(gs.c_inf), g17(c.j_pi - gs.c_inf)]);
                    }
                }
            }
            let header = match cfg.sweep_target.as_str() {
                "theta" => vec!["r", "j_pi", "bound", "margin"],
                "sigma" => vec!["r", "eps", "eps_hat", "j_pi"],
                "ratio" => vec!["r", "ratio", "bound", "margin"],
                _ => vec!["dist", "j_pi", "c_inf", "gap"],
            };
            write_csv(&dir.join("sweep.csv"), &header, &rows)?;
        }
        "solve" => {
            // sweep over orbit representatives, deduplicating minimizers by
            // relative L2 distance (modulo the sign pair u, -u)
            let mut reps: Vec<Vec<f64>> = vec![z.clone()];
            for axis in 0..cfg.n_dim {
                let mut e = vec![0.0; cfg.n_dim];
                e[axis] = 1.0;
                let d: f64 = reps
                    .iter()
                    .map(|r| {
                        r.iter()
                            .zip(&e)
                            .map(|(a, b)| (a - b) * (a - b))
                            .sum::<f64>()
                            .sqrt()
                    })
                    .fold(f64::INFINITY, f64::min);
                if d > 1e-9 {
                    reps.push(e);
                }
            }
            let config = SolveConfig {
                tol_rel: cfg.tol,
                max_iter: cfg.max_iter,
                ..SolveConfig::default()
            };
            let mut distinct: Vec<Field> = Vec::new();
            let mut rows = Vec::new();
            for zr in &reps {
                let init =
                    match testfn::theta(&params, &gs, zr, cfg.r_scale, cfg.lambda, None, None) {
                        Ok(c) => c.field,
                        Err(_) => continue,
                    };
                let rep = solver::minimize(&params, &init, &config)?;
                let is_new = distinct
                    .iter()
                    .all(|known| l2_rel_distance(known, &rep.field) >= 1e-3);
                rows.push(vec![
                    zr.iter()
                        .map(|v| format!("{v}"))
                        .collect::<Vec<_>>()
                        .join(";"),
                    g17(rep.j_value),
                    rep.converged.to_string(),
                    is_new.to_string(),
                ]);
                if is_new {
                    write_chqf(
                        &rep.field,
                        &dir.join(format!("solution-{}.chqf", distinct.len())),
                    )?;
                    distinct.push(rep.field);
                }
            }
            write_csv(&dir.join("sweep.csv"), &["z", "j", "converged", "distinct"], &rows)?;
        }
        other => bail!("unknown sweep target '{other}'"),
    }
    println!("artifacts: {}", dir.display());
    Ok(0)
}
