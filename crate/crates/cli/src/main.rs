use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use kondratiev::diagnostics::bg_report;
use kondratiev::fem::{assemble_poisson, solve_with};
use kondratiev::geometry::construct_rounded_domain;
use kondratiev::harness::{convergence_study, emit_plots, family_mesh, run_sweep, ExperimentConfig};
use kondratiev::svg::domain_overlay;
use kondratiev::WeightFunction;

#[derive(Parser)]
#[command(name = "kondratiev", version, about = "Rounded polygon families and uniform weighted-Sobolev estimates")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Experiment configuration (JSON).
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    h_max: Option<f64>,
    #[arg(long)]
    h_min: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    /// Comma-separated list, e.g. `1,2,4,8`.
    #[arg(long, value_delimiter = ',')]
    n_list: Option<Vec<u32>>,
    /// Comma-separated list of weight exponents `a`.
    #[arg(long, value_delimiter = ',')]
    a_list: Option<Vec<f64>>,
    /// Curvature samples per boundary piece for `diagnose`.
    #[arg(long)]
    samples: Option<usize>,
    /// Output directory; overrides the configuration.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Build each family member and write its boundary and an outline overlay.
    Construct(Common),
    /// Mesh each family member.
    Mesh(Common),
    /// Solve the Dirichlet problem on each family member.
    Solve(Common),
    /// Norm report per `(n, a)` without eigenvalues or diagnostics.
    Norms(Common),
    /// Bounded-geometry diagnostics per `n`.
    Diagnose(Common),
    /// Full sweep with CSV, metadata and plots.
    Sweep(Common),
    /// Compare `u_n` with the solution on the straight polygon.
    Converge(Common),
}

impl Common {
    fn load(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::from_path(path).with_context(|| format!("reading {}", path.display()))?,
            None => ExperimentConfig::default(),
        };
        if let Some(v) = self.h_max {
            cfg.h_max = v;
        }
        if let Some(v) = self.h_min {
            cfg.h_min = v;
        }
        if let Some(v) = self.beta {
            cfg.beta = v;
        }
        if let Some(v) = &self.n_list {
            cfg.n_list = v.clone();
        }
        if let Some(v) = &self.a_list {
            cfg.a_list = v.clone();
        }
        if let Some(v) = &self.output {
            cfg.output_dir = v.clone();
        }
        cfg.validate()?;
        fs::create_dir_all(&cfg.output_dir).with_context(|| format!("creating {}", cfg.output_dir.display()))?;
        Ok(cfg)
    }
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    println!("wrote {}", path.display());
    Ok(())
}

fn run(command: Command) -> Result<bool> {
    match command {
        Command::Construct(c) => {
            let cfg = c.load()?;
            let polygon = cfg.polygon.build()?;
            let params = cfg.rounding_params(&polygon)?;
            println!("rho = {}, rho' = {}", params.rho, params.rho_prime);
            let mut domains = Vec::new();
            for &n in &cfg.n_list {
                let d = construct_rounded_domain(&polygon, &params.at(n))?;
                println!("n = {n}: area {:.6}, length {:.6}", d.area(), kondratiev::curve::ClosedCurve::length(&d));
                write(&cfg.output_dir.join(format!("domain_n{n}.txt")), &d.polyline_text(32))?;
                domains.push(d);
            }
            let refs: Vec<_> = domains.iter().collect();
            write(&cfg.output_dir.join("domains.svg"), &domain_overlay(&refs))?;
            Ok(true)
        }
        Command::Mesh(c) => {
            let cfg = c.load()?;
            let polygon = cfg.polygon.build()?;
            let params = cfg.rounding_params(&polygon)?;
            for &n in &cfg.n_list {
                let d = construct_rounded_domain(&polygon, &params.at(n))?;
                let mesh = family_mesh(&cfg, &d, &WeightFunction::for_domain(&d))?;
                let q = mesh.quality();
                println!("n = {n}: {} nodes, {} elements, min angle {:.2} deg", q.nodes, q.elements, q.min_angle_deg);
                write(&cfg.output_dir.join(format!("mesh_n{n}.txt")), &mesh.to_text())?;
            }
            Ok(true)
        }
        Command::Solve(c) => {
            let cfg = c.load()?;
            let polygon = cfg.polygon.build()?;
            let params = cfg.rounding_params(&polygon)?;
            let source = cfg.source(&polygon);
            for &n in &cfg.n_list {
                let d = construct_rounded_domain(&polygon, &params.at(n))?;
                let w = WeightFunction::for_domain(&d);
                let mesh = Arc::new(family_mesh(&cfg, &d, &w)?);
                let stiffness = assemble_poisson(&mesh, None)?.stiffness;
                let (u, rep) = solve_with(mesh, &stiffness, &|x| source.eval(x), Some(&w))?;
                println!("n = {n}: {} unknowns, {} CG iterations, residual {:.2e}", rep.dofs, rep.iterations, rep.relative_residual);
                write(&cfg.output_dir.join(format!("solution_n{n}.txt")), &u.to_text())?;
            }
            Ok(true)
        }
        Command::Norms(c) => {
            let mut cfg = c.load()?;
            cfg.eigen = false;
            cfg.diagnostics = false;
            let table = run_sweep(&cfg)?;
            for r in &table.rows {
                match (&r.error, r.ratio) {
                    (Some(e), _) => println!("n = {}, a = {}: error {e}", r.n, r.a),
                    (None, Some(ratio)) => println!("n = {}, a = {}: K21a {:.6e}, ratio {ratio:.6}", r.n, r.a, r.k21a.unwrap_or(f64::NAN)),
                    (None, None) => println!("n = {}, a = {}: ratio undefined (f = 0)", r.n, r.a),
                }
            }
            table.write_outputs(&cfg.output_dir)?;
            Ok(!table.any_error())
        }
        Command::Diagnose(c) => {
            let cfg = c.load()?;
            let polygon = cfg.polygon.build()?;
            let params = cfg.rounding_params(&polygon)?;
            let mut opts = cfg.bg_options();
            if let Some(s) = c.samples {
                opts.curvature_samples_per_piece = s;
            }
            let report = bg_report(&polygon, &params, &cfg.n_list, &opts)?;
            for r in &report.rows {
                println!("n = {}: sup|d^k kappa| {:?}, width {:.4}, reach {:.4}, flags {:?}", r.n, r.sup_kappa, r.width_sup, r.reach_min, r.flags);
            }
            for k in 0..opts.max_k.min(3) {
                println!("k = {k}: max/min {:.4}", report.kappa_ratio(k));
            }
            let path = cfg.output_dir.join("diagnostics.csv");
            report.write_csv(fs::File::create(&path)?)?;
            println!("wrote {}", path.display());
            Ok(report.rows.iter().all(|r| r.flags.is_empty()))
        }
        Command::Sweep(c) => {
            let cfg = c.load()?;
            let table = run_sweep(&cfg)?;
            for &a in &cfg.a_list {
                match table.ratio_spread(a) {
                    Some(s) => println!("a = {a}: ratio max/min {s:.4}"),
                    None => println!("a = {a}: ratio spread unavailable"),
                }
            }
            for p in table.write_outputs(&cfg.output_dir)?.into_iter().chain(emit_plots(&table, &cfg, &cfg.output_dir)?) {
                println!("wrote {}", p.display());
            }
            for r in table.rows.iter().filter(|r| r.error.is_some()) {
                eprintln!("n = {}, a = {}: {}", r.n, r.a, r.error.as_deref().unwrap_or_default());
            }
            Ok(!table.any_error())
        }
        Command::Converge(c) => {
            let cfg = c.load()?;
            let table = convergence_study(&cfg)?;
            for r in &table.rows {
                println!("n = {}: {:?} floor {}", r.n, r.l2_difference, r.floor);
            }
            let path = cfg.output_dir.join("convergence.csv");
            table.write_csv(fs::File::create(&path)?)?;
            println!("wrote {}", path.display());
            Ok(table.rows.iter().all(|r| r.error.is_none()))
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse().command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
