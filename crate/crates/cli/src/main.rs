//! Command-line front end: ingest game specs, run exact and asymptotic
//! solves, sweep accuracy metrics over ε grids, compare control-weight
//! regimes, and reproduce the embedded supply-chain experiment. All
//! outputs are deterministic files; plotting is out of scope.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::DVector;

use stackelberg_cheap_control::asymptotics::Expansion1;
use stackelberg_cheap_control::evaluate::{
    cheap_control_comparison, metrics_for_eps, sim_mesh, MetricsRow,
};
use stackelberg_cheap_control::exact::{assemble_bvp, solve_linear_bvp, SolveOptions};
use stackelberg_cheap_control::games::supply_chain;
use stackelberg_cheap_control::model::{map_state_back, parse_game_spec, prepare, GameSpec, TransformedGame};
use stackelberg_cheap_control::Error as CoreError;

#[derive(Parser)]
#[command(
    name = "stackelberg",
    version,
    about = "Open-loop Stackelberg games with a cheap-control follower: \
             exact solves, asymptotic approximations, and accuracy sweeps"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the exact game at a single ε; write the trajectory and costs.
    Solve(SolveArgs),
    /// Build the first-order expansion; emit suboptimal controls per ε.
    Asymptotic(AsymptoticArgs),
    /// Compare the three control-weight regimes over an ε grid.
    Compare(GridArgs),
    /// Accuracy metrics (control and cost errors) over an ε grid.
    Sweep(GridArgs),
    /// Re-run an embedded experiment end to end.
    Reproduce(ReproduceArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Game spec JSON path, or the built-in name "supply-chain".
    #[arg(long)]
    game: String,
    /// ODE defect tolerance for the solvers.
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    /// Minimum number of mesh intervals.
    #[arg(long)]
    mesh: Option<usize>,
    /// Output directory (created if missing).
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Output format for summary documents.
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Singular perturbation parameter, in (0, 1].
    #[arg(long)]
    epsilon: f64,
}

#[derive(Args)]
struct AsymptoticArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// ε values to compose the expansion at (repeatable).
    #[arg(long, required = true)]
    epsilon: Vec<f64>,
    /// Expansion order for the composed controls.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(0..=1))]
    order: u8,
}

#[derive(Args)]
struct GridArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// ε grid (repeatable).
    #[arg(long, required = true)]
    epsilon: Vec<f64>,
}

#[derive(Args)]
struct ReproduceArgs {
    #[command(subcommand)]
    target: ReproduceTarget,
}

#[derive(Subcommand)]
enum ReproduceTarget {
    /// The two-echelon supply chain advertising game (embedded data).
    SupplyChain {
        /// Output directory (created if missing).
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
}

#[derive(Copy, Clone, ValueEnum)]
enum Format {
    /// Comma-separated values with a header row.
    Csv,
    /// Flat `key = value` text.
    Text,
}

/// CLI-level error carrying the exit code policy: 2 for usage/input
/// problems, 1 for numerical failures.
enum CliError {
    Input(String),
    Numerical(String),
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::Assumption { .. }
            | CoreError::Dimension(_)
            | CoreError::InvalidComplement { .. }
            | CoreError::Parse(_)
            | CoreError::Unsupported(_) => CliError::Input(e.to_string()),
            other => CliError::Numerical(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Input(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Solve(args) => cmd_solve(args),
        Command::Asymptotic(args) => cmd_asymptotic(args),
        Command::Compare(args) => cmd_compare(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Reproduce(args) => match args.target {
            ReproduceTarget::SupplyChain { out } => cmd_reproduce_supply_chain(&out),
        },
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Numerical(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn load_game(name_or_path: &str) -> Result<GameSpec, CliError> {
    if name_or_path == "supply-chain" || name_or_path == "supply_chain" {
        return Ok(supply_chain());
    }
    let text = std::fs::read_to_string(name_or_path)?;
    Ok(parse_game_spec(&text)?)
}

fn check_epsilons(eps: &[f64]) -> Result<(), CliError> {
    for &e in eps {
        if !(e > 0.0 && e <= 1.0) {
            return Err(CliError::Input(format!("epsilon {e} outside (0, 1]")));
        }
    }
    Ok(())
}

fn solve_options(common: &CommonArgs) -> SolveOptions {
    SolveOptions { tol: common.tol, mesh_hint: common.mesh, ..SolveOptions::default() }
}

/// Deterministic float rendering for all emitted files.
fn fmt(x: f64) -> String {
    format!("{x:.12e}")
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<(), CliError> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join(name);
    std::fs::write(&path, contents)?;
    println!("wrote {}", path.display());
    Ok(())
}

/// A flat key/value summary in the requested format; returns the file
/// name actually used.
fn write_summary(
    dir: &Path,
    stem: &str,
    format: Format,
    pairs: &[(&str, String)],
) -> Result<(), CliError> {
    match format {
        Format::Csv => {
            let mut doc = String::from("key,value\n");
            for (k, v) in pairs {
                let _ = writeln!(doc, "{k},{v}");
            }
            write_file(dir, &format!("{stem}.csv"), &doc)
        }
        Format::Text => {
            let mut doc = String::new();
            for (k, v) in pairs {
                let _ = writeln!(doc, "{k} = {v}");
            }
            write_file(dir, &format!("{stem}.txt"), &doc)
        }
    }
}

/// A rectangular table in the requested format (CSV, or aligned
/// `key = value` blocks separated by blank lines).
fn write_table(
    dir: &Path,
    stem: &str,
    format: Format,
    header: &[&str],
    rows: &[Vec<String>],
) -> Result<(), CliError> {
    match format {
        Format::Csv => {
            let mut doc = header.join(",");
            doc.push('\n');
            for row in rows {
                doc.push_str(&row.join(","));
                doc.push('\n');
            }
            write_file(dir, &format!("{stem}.csv"), &doc)
        }
        Format::Text => {
            let mut doc = String::new();
            for row in rows {
                for (k, v) in header.iter().zip(row) {
                    let _ = writeln!(doc, "{k} = {v}");
                }
                doc.push('\n');
            }
            write_file(dir, &format!("{stem}.txt"), &doc)
        }
    }
}

fn vector_headers(prefix: &str, len: usize) -> Vec<String> {
    (1..=len).map(|i| format!("{prefix}_{i}")).collect()
}

fn cmd_solve(args: SolveArgs) -> Result<(), CliError> {
    check_epsilons(&[args.epsilon])?;
    let g = load_game(&args.common.game)?;
    let tg = prepare(&g, None)?;
    let bvp = assemble_bvp(&tg, args.epsilon)?;
    let sol = solve_linear_bvp(&bvp, &solve_options(&args.common))?;

    // Trajectory at the mesh nodes: scaled state blocks regrouped as
    // z, λ_u, λ_v, μ (n entries each), then the controls.
    let n = tg.n;
    let mut header: Vec<String> = vec!["t".into()];
    header.extend(vector_headers("z", n));
    header.extend(vector_headers("lambda_u", n));
    header.extend(vector_headers("lambda_v", n));
    header.extend(vector_headers("mu", n));
    header.extend(vector_headers("u", tg.r));
    header.extend(vector_headers("v", tg.s));
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut rows = Vec::with_capacity(sol.mesh_size());
    for (i, (&t, y)) in sol.shooting.mesh.iter().zip(&sol.shooting.values).enumerate() {
        let mut row = vec![fmt(t)];
        row.extend(y.iter().map(|&x| fmt(x)));
        row.extend(sol.u_star[i].iter().map(|&x| fmt(x)));
        row.extend(sol.v_star[i].iter().map(|&x| fmt(x)));
        rows.push(row);
    }
    write_table(&args.common.out, "trajectory", Format::Csv, &header_refs, &rows)?;

    write_summary(
        &args.common.out,
        "costs",
        args.common.format,
        &[
            ("epsilon", fmt(args.epsilon)),
            ("j_u", fmt(sol.j_u)),
            ("j_v", fmt(sol.j_v)),
            ("max_ode_residual", fmt(sol.max_ode_residual)),
            ("max_defect", fmt(sol.max_defect)),
            ("max_boundary_residual", fmt(sol.max_boundary_residual)),
        ],
    )
}

fn eps_tag(eps: f64) -> String {
    format!("{eps:.4}").replace('.', "p")
}

fn cmd_asymptotic(args: AsymptoticArgs) -> Result<(), CliError> {
    check_epsilons(&args.epsilon)?;
    let g = load_game(&args.common.game)?;
    let tg = prepare(&g, None)?;
    let exp = Expansion1::build(&tg)?;

    // ε-free dump: the zero-order costs.
    let (jbar_u, jbar_v) = exp.eps_free_costs();
    write_summary(
        &args.common.out,
        "expansion_costs",
        args.common.format,
        &[("jbar_u0", fmt(jbar_u)), ("jbar_v0", fmt(jbar_v))],
    )?;

    let mut header: Vec<String> = vec!["t".into()];
    header.extend(vector_headers("u", tg.r));
    header.extend(vector_headers("v", tg.s));
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();

    for &eps in &args.epsilon {
        let mesh = sim_mesh(&tg, eps);
        let mut hat_rows = Vec::with_capacity(mesh.len());
        let mut tilde_rows = Vec::with_capacity(mesh.len());
        for &t in &mesh {
            let (uh, vh) = exp.hat_controls(t, eps, args.order)?;
            let (ut, vt): (DVector<f64>, DVector<f64>) = if args.order == 0 {
                // At order zero the simplified follower control coincides
                // with the composed one.
                (exp.tilde_u(t), vh.clone())
            } else {
                (exp.tilde_u(t), exp.tilde_v(t, eps))
            };
            let mut row = vec![fmt(t)];
            row.extend(uh.iter().map(|&x| fmt(x)));
            row.extend(vh.iter().map(|&x| fmt(x)));
            hat_rows.push(row);
            let mut row = vec![fmt(t)];
            row.extend(ut.iter().map(|&x| fmt(x)));
            row.extend(vt.iter().map(|&x| fmt(x)));
            tilde_rows.push(row);
        }
        let tag = eps_tag(eps);
        write_table(
            &args.common.out,
            &format!("controls_hat_eps{tag}"),
            Format::Csv,
            &header_refs,
            &hat_rows,
        )?;
        write_table(
            &args.common.out,
            &format!("controls_tilde_eps{tag}"),
            Format::Csv,
            &header_refs,
            &tilde_rows,
        )?;
    }
    Ok(())
}

fn comparison_rows(
    g: &GameSpec,
    tg: &TransformedGame,
    eps: &[f64],
    opts: &SolveOptions,
) -> Result<Vec<Vec<String>>, CliError> {
    let rows = cheap_control_comparison(g, tg, eps, opts)?;
    Ok(rows
        .iter()
        .map(|r| {
            vec![
                fmt(r.eps),
                fmt(r.both_regular.0),
                fmt(r.both_regular.1),
                fmt(r.leader_cheap.0),
                fmt(r.leader_cheap.1),
                fmt(r.follower_cheap.0),
                fmt(r.follower_cheap.1),
                fmt(r.improvement_u),
                fmt(r.improvement_v),
                fmt(r.deterioration_u),
                fmt(r.deterioration_v),
            ]
        })
        .collect())
}

const COMPARISON_HEADER: [&str; 11] = [
    "epsilon",
    "j_u_both_regular",
    "j_v_both_regular",
    "j_u_leader_cheap",
    "j_v_leader_cheap",
    "j_u_follower_cheap",
    "j_v_follower_cheap",
    "improvement_u_pct",
    "improvement_v_pct",
    "deterioration_u_pct",
    "deterioration_v_pct",
];

fn cmd_compare(args: GridArgs) -> Result<(), CliError> {
    check_epsilons(&args.epsilon)?;
    let g = load_game(&args.common.game)?;
    let tg = prepare(&g, None)?;
    let rows = comparison_rows(&g, &tg, &args.epsilon, &solve_options(&args.common))?;
    write_table(&args.common.out, "comparison", args.common.format, &COMPARISON_HEADER, &rows)
}

const METRICS_HEADER: [&str; 13] = [
    "epsilon",
    "j_u_star",
    "j_v_star",
    "delta_u_hat",
    "delta_v_hat",
    "abs_cost_err_hat_u",
    "abs_cost_err_hat_v",
    "abs_cost_err_tilde_u",
    "abs_cost_err_tilde_v",
    "rel_cost_err_hat_u_pct",
    "rel_cost_err_hat_v_pct",
    "rel_cost_err_tilde_u_pct",
    "rel_cost_err_tilde_v_pct",
];

fn metrics_row_strings(r: &MetricsRow) -> Vec<String> {
    vec![
        fmt(r.eps),
        fmt(r.j_u_star),
        fmt(r.j_v_star),
        fmt(r.delta_u_hat),
        fmt(r.delta_v_hat),
        fmt(r.dj_hat_u),
        fmt(r.dj_hat_v),
        fmt(r.dj_tilde_u),
        fmt(r.dj_tilde_v),
        fmt(r.rel_hat_u),
        fmt(r.rel_hat_v),
        fmt(r.rel_tilde_u),
        fmt(r.rel_tilde_v),
    ]
}

fn cmd_sweep(args: GridArgs) -> Result<(), CliError> {
    check_epsilons(&args.epsilon)?;
    let g = load_game(&args.common.game)?;
    let tg = prepare(&g, None)?;
    let exp = Expansion1::build(&tg)?;
    let opts = solve_options(&args.common);
    let mut rows = Vec::with_capacity(args.epsilon.len());
    for &eps in &args.epsilon {
        rows.push(metrics_row_strings(&metrics_for_eps(&tg, &exp, eps, &opts)?));
    }
    write_table(&args.common.out, "metrics", args.common.format, &METRICS_HEADER, &rows)
}

fn cmd_reproduce_supply_chain(out: &Path) -> Result<(), CliError> {
    println!(
        "note: the source experiment does not report the initial state; \
         using Z0 = (1, 1)^T. The error table is sensitive to this choice."
    );
    let g = supply_chain();
    let tg = prepare(&g, None)?;
    let exp = Expansion1::build(&tg)?;
    let opts = SolveOptions::default();

    // Accuracy metrics at the published ε grid feed the error table and
    // the first two figure files.
    let table_eps = [0.2, 0.1, 0.05, 0.01];
    let mut metrics = Vec::with_capacity(table_eps.len());
    for &eps in &table_eps {
        metrics.push(metrics_for_eps(&tg, &exp, eps, &opts)?);
    }

    // Relative cost errors, percent: leader = manufacturer (M),
    // follower = retailer (R).
    let table1: Vec<Vec<String>> = metrics
        .iter()
        .map(|r| {
            vec![fmt(r.eps), fmt(r.rel_hat_u), fmt(r.rel_hat_v), fmt(r.rel_tilde_u), fmt(r.rel_tilde_v)]
        })
        .collect();
    write_table(
        out,
        "table1",
        Format::Csv,
        &["epsilon", "delta_j_hat_M_pct", "delta_j_hat_R_pct", "delta_j_tilde_M_pct", "delta_j_tilde_R_pct"],
        &table1,
    )?;

    let fig1: Vec<Vec<String>> =
        metrics.iter().map(|r| vec![fmt(r.eps), fmt(r.delta_u_hat), fmt(r.delta_v_hat)]).collect();
    write_table(out, "fig1", Format::Csv, &["epsilon", "delta_u_hat", "delta_v_hat"], &fig1)?;

    let fig2: Vec<Vec<String>> = metrics
        .iter()
        .map(|r| vec![fmt(r.eps), fmt(r.dj_hat_u), fmt(r.dj_hat_v), fmt(r.dj_tilde_u), fmt(r.dj_tilde_v)])
        .collect();
    write_table(
        out,
        "fig2",
        Format::Csv,
        &["epsilon", "abs_cost_err_hat_u", "abs_cost_err_hat_v", "abs_cost_err_tilde_u", "abs_cost_err_tilde_v"],
        &fig2,
    )?;

    // Optimal store-brand badwill in the original coordinates for three
    // ε values (long format: one row per (ε, t) sample).
    let mut fig3 = Vec::new();
    for &eps in &[0.2, 0.1, 0.05] {
        let bvp = assemble_bvp(&tg, eps)?;
        let sol = solve_linear_bvp(&bvp, &opts)?;
        let mapped = map_state_back(&sol.z_trajectory(), &tg.r_v);
        for (t, zz) in &mapped {
            fig3.push(vec![fmt(eps), fmt(*t), fmt(zz[1])]);
        }
    }
    write_table(out, "fig3", Format::Csv, &["epsilon", "t", "badwill_sb"], &fig3)?;

    // Weight-regime comparison curves over a denser ε grid.
    let grid = [0.01, 0.02, 0.04, 0.06, 0.08, 0.1, 0.12, 0.14, 0.16, 0.18, 0.2];
    let comparison = cheap_control_comparison(&g, &tg, &grid, &opts)?;
    let fig4: Vec<Vec<String>> = comparison
        .iter()
        .map(|r| {
            vec![
                fmt(r.eps),
                fmt(r.both_regular.0),
                fmt(r.leader_cheap.0),
                fmt(r.both_regular.1),
                fmt(r.follower_cheap.1),
            ]
        })
        .collect();
    write_table(
        out,
        "fig4",
        Format::Csv,
        &["epsilon", "j_M_both_regular", "j_M_own_cheap", "j_R_both_regular", "j_R_own_cheap"],
        &fig4,
    )?;

    let fig5: Vec<Vec<String>> = comparison
        .iter()
        .map(|r| vec![fmt(r.eps), fmt(r.improvement_u), fmt(r.improvement_v)])
        .collect();
    write_table(out, "fig5", Format::Csv, &["epsilon", "improvement_M_pct", "improvement_R_pct"], &fig5)?;

    let fig6: Vec<Vec<String>> = comparison
        .iter()
        .map(|r| vec![fmt(r.eps), fmt(r.deterioration_u), fmt(r.deterioration_v)])
        .collect();
    write_table(out, "fig6", Format::Csv, &["epsilon", "deterioration_M_pct", "deterioration_R_pct"], &fig6)
}
