use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Result};
use clap::{Args, Parser, Subcommand};
use trussfd::{Material, WsConfig};
use trussfd_cli::config::{GaSettings, Method, ProblemSource, RunConfig};
use trussfd_cli::run;
use trussfd_cli::svg::Window;

/// Shape and topology optimization of plane trusses over the aspect ratio.
#[derive(Parser)]
#[command(name = "trussfd", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Two-objective NSGA-III run; realizes front points at each --r
    Moo(RunArgs),
    /// Weighted-sum optimum with weights (r², 1) for each --r
    Wsum(RunArgs),
    /// Equal-weight optimum of the structure scaled by (r, 1) for each --r
    Scaling(RunArgs),
    /// Scaling, weighted-sum and NSGA-III compliances side by side
    Compare(RunArgs),
    /// Redraw the designs stored in a designs.json
    Render(RenderArgs),
    /// Re-export a stored front as CSV and scatter plot
    Front(FrontArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Grid divisions along x
    #[arg(long, default_value_t = 3)]
    nx: usize,
    /// Grid divisions along y
    #[arg(long, default_value_t = 2)]
    ny: usize,
    #[arg(long, default_value_t = 3.0)]
    width: f64,
    #[arg(long, default_value_t = 2.0)]
    height: f64,
    /// Problem file (TOML); replaces the grid generator
    #[arg(long)]
    problem: Option<PathBuf>,
    /// Aspect ratios, comma separated [default: 0.5,1.5,2.5; none for moo]
    #[arg(long, value_delimiter = ',', num_args = 0..)]
    r: Option<Vec<f64>>,
    /// Target structural volume
    #[arg(long, default_value_t = 100.0)]
    volume: f64,
    /// Young's modulus
    #[arg(long, default_value_t = 1.0)]
    e: f64,
    /// Reference stress
    #[arg(long, default_value_t = 1.0)]
    sigma_bar: f64,
    /// GA population size
    #[arg(long, default_value_t = 40)]
    pop: usize,
    /// GA generations
    #[arg(long, default_value_t = 500)]
    gens: usize,
    /// Crossover probability
    #[arg(long, default_value_t = 0.9)]
    pcx: f64,
    /// Per-gene mutation probability [default: 1 / members]
    #[arg(long)]
    pmut: Option<f64>,
    /// Base RNG seed
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Independent GA repetitions; the largest-hypervolume front is kept
    #[arg(long, default_value_t = 10)]
    reps: usize,
    /// Ratios whose weighted-sum optima seed the GA, comma separated
    #[arg(long, value_delimiter = ',', num_args = 0.., default_value = "1,2,3")]
    seed_ratios: Vec<f64>,
    /// Weighted-sum optimizer starts
    #[arg(long, default_value_t = 3)]
    ws_starts: usize,
    /// Weighted-sum optimizer iteration limit
    #[arg(long, default_value_t = 500)]
    ws_iters: usize,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Run everything on the calling thread
    #[arg(long)]
    single_thread: bool,
}

#[derive(Args)]
struct RenderArgs {
    /// designs.json written by a previous run
    #[arg(long)]
    design: PathBuf,
    /// Drawing window xmin,xmax,ymin,ymax [default: fit the structure]
    #[arg(long, value_delimiter = ',', num_args = 4)]
    window: Option<Vec<f64>>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct FrontArgs {
    /// front.json written by moo or compare
    #[arg(long)]
    front: PathBuf,
    /// designs.json whose objective values are overlaid as dots
    #[arg(long)]
    dots: Option<PathBuf>,
    /// Plot window Fx_min,Fx_max,Fy_min,Fy_max [default: all points]
    #[arg(long, value_delimiter = ',', num_args = 4)]
    window: Option<Vec<f64>>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

fn window(v: Option<Vec<f64>>) -> Result<Option<Window>> {
    let Some(v) = v else { return Ok(None) };
    let w = Window {
        xmin: v[0],
        xmax: v[1],
        ymin: v[2],
        ymax: v[3],
    };
    if !(w.width() > 0.0 && w.height() > 0.0) {
        bail!("window must have positive width and height");
    }
    Ok(Some(w))
}

impl RunArgs {
    fn into_config(self, method: Method) -> RunConfig {
        let problem = match self.problem {
            Some(path) => ProblemSource::File { path },
            None => ProblemSource::Grid {
                nx: self.nx,
                ny: self.ny,
                width: self.width,
                height: self.height,
            },
        };
        let r_list = self.r.unwrap_or_else(|| match method {
            Method::Moo => Vec::new(),
            _ => vec![0.5, 1.5, 2.5],
        });
        RunConfig {
            problem,
            method,
            r_list,
            volume: self.volume,
            material: Material {
                e: self.e,
                sigma_bar: self.sigma_bar,
            },
            ga: GaSettings {
                population: self.pop,
                generations: self.gens,
                p_crossover: self.pcx,
                p_mutation: self.pmut,
                repetitions: self.reps,
                seed_ratios: self.seed_ratios,
            },
            ws: WsConfig {
                starts: self.ws_starts,
                max_iters: self.ws_iters,
                ..WsConfig::default()
            },
            rng_seed: self.seed,
            output_dir: self.out,
            single_thread: self.single_thread,
        }
    }
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Moo(a) => run::run_moo(&a.into_config(Method::Moo)).map(drop),
        Command::Wsum(a) => run::run_wsum(&a.into_config(Method::Wsum)).map(drop),
        Command::Scaling(a) => run::run_scaling(&a.into_config(Method::Scaling)).map(drop),
        Command::Compare(a) => {
            let m = run::run_compare(&a.into_config(Method::Compare))?;
            if !m.flags.is_empty() {
                eprintln!("{} comparison(s) flagged; see manifest.json", m.flags.len());
            }
            Ok(())
        }
        Command::Render(a) => {
            for p in run::render(&a.design, &a.out, window(a.window)?)? {
                println!("wrote {}", p.display());
            }
            Ok(())
        }
        Command::Front(a) => {
            let n = run::front(&a.front, a.dots.as_deref(), &a.out, window(a.window)?)?;
            println!("wrote {n} front points to {}", a.out.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse().command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
