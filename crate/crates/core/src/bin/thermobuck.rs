//! Command-line driver: optimization runs, single analyses, sensitivity
//! cross-checks and direct-vs-adjoint timing.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};

use thermobuck::buckling::{solve_buckling, BucklingSolution};
use thermobuck::fem::Analysis;
use thermobuck::io::{
    export_history, export_vtk, load_problem, resolve_output_dir, split_components,
    stress_component_names, OutputFormat, ProblemSpec, VtkField,
};
use thermobuck::model::{DesignField, Model};
use thermobuck::optimizer::{Evaluation, Optimizer};
use thermobuck::sensitivity::{
    compliance_sensitivity, finite_difference, lambda_sensitivity_adjoint,
    lambda_sensitivity_direct, max_relative_discrepancy, FdQuantity,
};
use thermobuck::{Error, Result};

#[derive(Debug, Parser)]
#[command(name = "thermobuck", version, about = "Topology optimization with thermo-elastic buckling constraints")]
struct Cli {
    /// Directory for result files (overrides THERMOBUCK_OUTPUT_DIR and the problem file).
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,
    /// Seed of the eigensolver start vector.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Only print warnings and errors to stderr.
    #[arg(long, short, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the full optimization.
    Run { config: String },
    /// Static and buckling analysis of the full domain.
    Analyze {
        config: String,
        /// Override the temperature rise.
        #[arg(long, allow_hyphen_values = true)]
        delta_t: Option<f64>,
    },
    /// Compare adjoint, direct and finite-difference sensitivities.
    Verify {
        config: String,
        /// Coarsen larger problems to at most this many elements.
        #[arg(long, default_value_t = 2000)]
        max_elements: usize,
        /// Elements checked against finite differences.
        #[arg(long, default_value_t = 8)]
        samples: usize,
    },
    /// Time direct against adjoint sensitivities on a sweep of coarsened grids.
    Bench {
        config: String,
        #[arg(long, value_delimiter = ',', default_values_t = vec![250, 500, 1000, 2000])]
        sizes: Vec<usize>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let level = if cli.quiet { "warn" } else { "info" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .format_target(false)
        .init();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            log::warn!("could not configure the thread pool: {e}");
        }
    }
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: kind={} message={:?}", e.kind(), e.to_string());
            ExitCode::from(1)
        }
    }
}

fn dispatch(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Run { config } => run(cli, config),
        Command::Analyze { config, delta_t } => analyze(cli, config, *delta_t),
        Command::Verify {
            config,
            max_elements,
            samples,
        } => verify(cli, config, *max_elements, *samples),
        Command::Bench { config, sizes } => bench(cli, config, sizes),
    }
}

fn output_dir(cli: &Cli, spec: &ProblemSpec) -> Result<PathBuf> {
    let dir = resolve_output_dir(cli.output_dir.as_deref(), spec);
    std::fs::create_dir_all(&dir).map_err(|e| Error::Io {
        path: dir.clone(),
        source: e,
    })?;
    Ok(dir)
}

fn export_state(
    model: &Model,
    design: &DesignField,
    eval: &Evaluation,
    path: &Path,
) -> Result<()> {
    let mesh = model.mesh();
    let names = stress_component_names(mesh.dimension());
    let stress = split_components(&eval.stress, names.len());
    let combined: Vec<f64> = eval.g_sensitivity[0]
        .iter()
        .zip(&eval.g_sensitivity[1])
        .map(|(a, b)| a + b)
        .collect();
    let mut fields = vec![
        VtkField::cell("level_set", &design.values),
        VtkField::cell("compliance_sensitivity", &eval.compliance_sensitivity),
        VtkField::cell("buckling_sensitivity", &eval.lambda_sensitivity),
        VtkField::cell("combined_sensitivity", &combined),
        VtkField::point_vector("displacement", mesh.ndim(), &eval.displacement),
        VtkField::point_vector("buckling_mode", mesh.ndim(), &eval.mode),
    ];
    for (name, data) in names.iter().zip(&stress) {
        fields.push(VtkField::cell(name, data));
    }
    export_vtk(mesh, design, &fields, path)
}

fn run(cli: &Cli, config: &str) -> Result<()> {
    let spec = load_problem(config)?;
    let model = spec.build_model()?;
    let dir = output_dir(cli, &spec)?;
    let vtk = spec.output.formats.contains(&OutputFormat::Vtk);
    let every = spec.output.export_every;
    let opt = Optimizer::new(&model, spec.optimizer_settings(cli.seed))?;
    let (j0, p0) = opt.references();
    println!(
        "{} elements, {} dofs; J0 = {j0:.6e}, lambda0 = {p0:.6e}",
        model.n_elements(),
        model.n_dofs()
    );
    println!("iter        v   J/J0   P/P0  inner   wall_s");
    let result = opt.run(|row, design, eval| {
        println!(
            "{:4} {:8.4} {:6.3} {:6.3} {:6} {:8.1}",
            row.iter, row.v, row.j_over_j0, row.p_over_p0, row.inner_steps, row.wall_s
        );
        if vtk && every > 0 && row.iter % every == 0 {
            export_state(&model, design, eval, &dir.join(format!("topology_{:04}.vtk", row.iter)))?;
        }
        Ok(())
    })?;
    if spec.output.formats.contains(&OutputFormat::Csv) {
        export_history(&result.history, &dir.join("history.csv"))?;
    }
    if vtk {
        export_state(&model, &result.design, &result.evaluation, &dir.join("topology_final.vtk"))?;
    }
    let last = result.history.last().expect("history holds the reference row");
    println!(
        "final: v = {:.4}, J/J0 = {:.4}, P/P0 = {:.4}, termination = {:?}, output = {}",
        last.v,
        last.j_over_j0,
        last.p_over_p0,
        result.termination,
        dir.display()
    );
    Ok(())
}

/// Magnitude of the resultant applied structural force.
fn resultant(model: &Model) -> f64 {
    let nd = model.mesh().ndim();
    let mut r = [0.0; 3];
    for (i, f) in model.structural_load().iter().enumerate() {
        r[i % nd] += f;
    }
    r.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn analyze(cli: &Cli, config: &str, delta_t: Option<f64>) -> Result<()> {
    let mut spec = load_problem(config)?;
    if let Some(dt) = delta_t {
        spec.loads.delta_t = dt;
    }
    let model = spec.build_model()?;
    let solver = spec.solver_config();
    let t = Instant::now();
    let analysis = Analysis::new(&model, vec![1.0; model.n_elements()], &solver)?;
    let sol = solve_buckling(&analysis, &spec.eigen_config(cli.seed), None)?;
    let f = resultant(&model);
    println!("elements        {}", model.n_elements());
    println!("dofs            {}", model.n_dofs());
    println!("delta_t         {}", spec.loads.delta_t);
    println!("compliance      {:.6e}", analysis.state.compliance);
    println!("load_factor     {:.6e}", sol.lambda);
    println!("applied_force   {f:.6e}");
    println!("critical_load   {:.6e}", sol.lambda * f);
    println!("eig_residual    {:.3e}", sol.residual);
    println!("wall_s          {:.3}", t.elapsed().as_secs_f64());
    if spec.output.formats.contains(&OutputFormat::Vtk) {
        let dir = output_dir(cli, &spec)?;
        let design = model.full_design();
        let eval = evaluation_for_export(&analysis, &sol);
        export_state(&model, &design, &eval, &dir.join("analysis.vtk"))?;
    }
    Ok(())
}

fn evaluation_for_export(analysis: &Analysis, sol: &BucklingSolution) -> Evaluation {
    let n = analysis.occupancy.len();
    Evaluation {
        compliance: analysis.state.compliance,
        lambda: sol.lambda,
        displacement: analysis.state.d.clone(),
        stress: analysis.state.sigma.clone(),
        mode: sol.v.clone(),
        compliance_sensitivity: vec![0.0; n],
        lambda_sensitivity: vec![0.0; n],
        g_sensitivity: [vec![0.0; n], vec![0.0; n]],
        ..Evaluation::default()
    }
}

fn prepared(config: &str, max_elements: usize) -> Result<ProblemSpec> {
    let spec = load_problem(config)?;
    let n = spec.n_elements();
    if n > max_elements {
        let c = spec.coarsened(max_elements);
        println!(
            "coarsened {:?} ({n} elements) to {:?} ({} elements)",
            spec.mesh.dims,
            c.mesh.dims,
            c.n_elements()
        );
        Ok(c)
    } else {
        Ok(spec)
    }
}

/// Present elements spread evenly over the ranking by |λ′|, skipping values
/// below 1e-6 of the maximum.
fn sample_elements(field: &[f64], count: usize) -> Vec<usize> {
    let max = field.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut idx: Vec<usize> = (0..field.len())
        .filter(|&e| field[e].abs() >= 1e-6 * max)
        .collect();
    idx.sort_by(|&a, &b| field[b].abs().total_cmp(&field[a].abs()).then(a.cmp(&b)));
    if idx.len() <= count {
        return idx;
    }
    (0..count)
        .map(|i| idx[i * (idx.len() - 1) / (count - 1).max(1)])
        .collect()
}

fn rel(a: f64, b: f64) -> f64 {
    let s = a.abs().max(b.abs());
    if s == 0.0 {
        0.0
    } else {
        (a - b).abs() / s
    }
}

fn verify(cli: &Cli, config: &str, max_elements: usize, samples: usize) -> Result<()> {
    let spec = prepared(config, max_elements)?;
    let model = spec.build_model()?;
    let solver = spec.solver_config();
    let eigen = spec.eigen_config(cli.seed);
    let occupancy = vec![1.0; model.n_elements()];
    let analysis = Analysis::new(&model, occupancy.clone(), &solver)?;
    let sol = solve_buckling(&analysis, &eigen, None)?;
    let (adjoint, _) = lambda_sensitivity_adjoint(&analysis, &sol)?;
    let direct = lambda_sensitivity_direct(&analysis, &sol)?;
    let dj = compliance_sensitivity(&analysis);
    let discrepancy = max_relative_discrepancy(&adjoint.values, &direct.values);
    println!(
        "{} elements, lambda = {:.6e}, J = {:.6e}",
        model.n_elements(),
        sol.lambda,
        analysis.state.compliance
    );
    println!(
        "{:>7} {:>14} {:>14} {:>14} {:>9} {:>14} {:>14} {:>9}",
        "element", "dlam_adjoint", "dlam_direct", "dlam_fd", "rel_fd", "dJ", "dJ_fd", "rel_fd"
    );
    let mut worst_l = 0.0f64;
    let mut worst_j = 0.0f64;
    for e in sample_elements(&adjoint.values, samples) {
        let fl = finite_difference(&model, &occupancy, FdQuantity::Lambda, e, 1e-4, &solver, &eigen, Some(&sol.v))?;
        let fj = finite_difference(&model, &occupancy, FdQuantity::Compliance, e, 1e-4, &solver, &eigen, None)?;
        let rl = rel(adjoint.values[e], fl);
        let rj = rel(dj.values[e], fj);
        worst_l = worst_l.max(rl);
        worst_j = worst_j.max(rj);
        println!(
            "{e:>7} {:>14.6e} {:>14.6e} {fl:>14.6e} {rl:>9.2e} {:>14.6e} {fj:>14.6e} {rj:>9.2e}",
            adjoint.values[e], direct.values[e], dj.values[e]
        );
    }
    println!("max relative direct-vs-adjoint discrepancy: {discrepancy:.3e}");
    println!("max relative finite-difference error (lambda): {worst_l:.3e}");
    println!("max relative finite-difference error (compliance): {worst_j:.3e}");
    Ok(())
}

fn bench(cli: &Cli, config: &str, sizes: &[usize]) -> Result<()> {
    let base = load_problem(config)?;
    println!(
        "{:>8} {:>8} {:>8} {:>11} {:>11} {:>9}",
        "elements", "adj_slv", "dir_slv", "adjoint_s", "direct_s", "ratio"
    );
    for &n in sizes {
        let spec = base.coarsened(n);
        let model = spec.build_model()?;
        let analysis = Analysis::new(&model, vec![1.0; model.n_elements()], &spec.solver_config())?;
        let sol = solve_buckling(&analysis, &spec.eigen_config(cli.seed), None)?;
        let s0 = analysis.system.solve_count();
        let t = Instant::now();
        lambda_sensitivity_adjoint(&analysis, &sol)?;
        let ta = t.elapsed().as_secs_f64();
        let s1 = analysis.system.solve_count();
        let t = Instant::now();
        lambda_sensitivity_direct(&analysis, &sol)?;
        let td = t.elapsed().as_secs_f64();
        let s2 = analysis.system.solve_count();
        println!(
            "{:>8} {:>8} {:>8} {ta:>11.4} {td:>11.4} {:>9.1}",
            model.n_elements(),
            s1 - s0,
            s2 - s1,
            td / ta.max(1e-12)
        );
    }
    Ok(())
}
