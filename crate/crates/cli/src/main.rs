//! `mh`: command line front end for the toolkit.
//!
//! Exit codes: 0 success, 2 identity/band failure, 3 hypothesis or rank
//! refusal, 4 configuration error.

use clap::{Args, Parser, Subcommand};
use mh_core::atoms::{make_atom, validate_atom, AtomSpec};
use mh_core::expr::Expr;
use mh_core::field::{read_field, write_field, write_field_csv, PeriodicGrid, ScalarField};
use mh_core::halfspace::{poisson_extend, TimeLevels};
use mh_core::harness::{
    emit_report, run_experiment, ExperimentConfig, PhiSpec,
};
use mh_core::maximal::{
    grand_maximal, hardy_littlewood, nontangential_maximal, poisson_maximal, q_order_maximal,
    radial_maximal, TestDictionary,
};
use mh_core::multipliers::{compose_riesz, RieszIndexWord};
use mh_core::musielak::{estimate_type_indices, MusielakFunction, SampleSpec};
use mh_core::weights::{diagnose, BallFamily, WeightField};
use mh_core::{MhError, Result};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "mh", about = "Harmonic-analysis toolkit on periodic grids")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct GridArgs {
    /// Spatial dimension.
    #[arg(long, default_value_t = 1)]
    dim: usize,
    /// Points per axis.
    #[arg(long = "points", short = 'N', default_value_t = 128)]
    points: usize,
    /// Half-width of the periodic cell.
    #[arg(long, default_value_t = 4.0)]
    half_width: f64,
}

impl GridArgs {
    fn build(&self) -> Result<PeriodicGrid> {
        PeriodicGrid::new(self.dim, self.half_width, self.points)
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the experiment described by a JSON config file.
    Run {
        config: PathBuf,
        #[arg(long, default_value = "json")]
        format: String,
        /// Write the report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the identity suite with the default configuration.
    Check {
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Muckenhoupt weight diagnostics.
    Weights {
        #[command(subcommand)]
        cmd: WeightsCmd,
    },
    /// Riesz transforms on stored fields.
    Riesz {
        #[command(subcommand)]
        cmd: RieszCmd,
    },
    /// Maximal operators on stored fields.
    Maximal {
        /// One of hl, radial, nt, poisson, grand, qorder.
        #[arg(long)]
        op: String,
        #[arg(long)]
        field: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Averaging exponent for qorder.
        #[arg(long, default_value_t = 1.0)]
        q: f64,
        /// Cone aperture for nt and grand.
        #[arg(long, default_value_t = 1.0)]
        aperture: f64,
        /// Dictionary order for grand.
        #[arg(long, default_value_t = 2)]
        order: usize,
        /// Largest dyadic radius exponent for ball families.
        #[arg(long, default_value_t = 3)]
        jmax: usize,
        /// Also write a CSV copy next to the field file.
        #[arg(long)]
        csv: bool,
    },
    /// Atom construction and validation.
    Atoms {
        #[command(subcommand)]
        cmd: AtomsCmd,
    },
    /// Growth-function diagnostics.
    Musielak {
        #[command(subcommand)]
        cmd: MusielakCmd,
    },
}

#[derive(Subcommand)]
enum WeightsCmd {
    /// Emit a WeightDiagnostics JSON document for a weight expression.
    Diag {
        #[arg(long)]
        weight: String,
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long, default_value_t = 1.0)]
        q_min: f64,
        #[arg(long, default_value_t = 4.0)]
        q_max: f64,
        #[arg(long, default_value_t = 0.1)]
        q_step: f64,
        #[arg(long, default_value_t = 3)]
        jmax: usize,
        /// A_q acceptance threshold for the critical index.
        #[arg(long, default_value_t = 100.0)]
        threshold: f64,
        /// Sample the weight half a cell off-node (for singular weights).
        #[arg(long)]
        half_cell_offset: bool,
    },
}

#[derive(Subcommand)]
enum RieszCmd {
    /// Apply a composed Riesz word to a stored field.
    Apply {
        #[arg(long)]
        field: PathBuf,
        /// Comma-separated entries in 0..=dim; 0 is the identity factor.
        #[arg(long)]
        word: String,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Subcommand)]
enum AtomsCmd {
    /// Construct an atom and write the field plus a validation JSON.
    Make {
        /// Center coordinates then radius, comma separated (e.g. 0,0,0.5).
        #[arg(long)]
        ball: String,
        /// Size exponent (a number or `inf`).
        #[arg(long, default_value = "inf")]
        q: String,
        /// Vanishing-moment order.
        #[arg(long, default_value_t = 1)]
        s: usize,
        /// Growth function (JSON PhiSpec or a bare expression in t / x,t).
        #[arg(long, default_value = "t")]
        phi: String,
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long, default_value = "atom.fld")]
        out: PathBuf,
        #[arg(long, default_value = "atom.json")]
        report: PathBuf,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
    },
}

#[derive(Subcommand)]
enum MusielakCmd {
    /// Print estimated CriticalIndices JSON for a growth function.
    Indices {
        #[arg(long)]
        phi: String,
        #[command(flatten)]
        grid: GridArgs,
    },
}

/// Accepts a JSON `PhiSpec` or a bare expression; an expression that only
/// uses `t` becomes a separable Orlicz part with unit weight.
fn parse_phi(src: &str) -> Result<MusielakFunction> {
    if let Ok(spec) = serde_json::from_str::<PhiSpec>(src) {
        return spec.build();
    }
    let expr = Expr::parse(src)?;
    if expr.check_vars(0, true).is_ok() {
        MusielakFunction::separable(Expr::parse("1")?, expr)
    } else {
        Ok(MusielakFunction::custom(expr))
    }
}

fn load_field(path: &Path) -> Result<ScalarField> {
    let mut file = std::fs::File::open(path)?;
    read_field(&mut file)
}

fn store_field(path: &Path, f: &ScalarField) -> Result<()> {
    let mut file = std::fs::File::create(path)?;
    write_field(&mut file, f)
}

fn parse_floats(src: &str) -> Result<Vec<f64>> {
    src.split(',')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| MhError::Config(format!("bad number '{p}'")))
        })
        .collect()
}

fn run(cli: Cli) -> Result<i32> {
    match cli.cmd {
        Cmd::Run { config, format, out } => {
            let cfg = ExperimentConfig::load(&config)?;
            let report = run_experiment(&cfg)?;
            let doc = emit_report(&report, &format)?;
            match out {
                Some(path) => std::fs::write(path, &doc)?,
                None => println!("{doc}"),
            }
            Ok(if report.all_pass() { 0 } else { 2 })
        }
        Cmd::Check { grid } => {
            let mut cfg = ExperimentConfig::check_default();
            cfg.grid.dim = grid.dim;
            cfg.grid.n = grid.points;
            cfg.grid.l = grid.half_width;
            let report = run_experiment(&cfg)?;
            println!("{}", emit_report(&report, "markdown")?);
            Ok(if report.all_pass() { 0 } else { 2 })
        }
        Cmd::Weights { cmd } => {
            let WeightsCmd::Diag {
                weight,
                grid,
                q_min,
                q_max,
                q_step,
                jmax,
                threshold,
                half_cell_offset,
            } = cmd;
            let g = grid.build()?;
            let expr = Expr::parse(&weight)?;
            let w = WeightField::from_expr(&g, &expr, half_cell_offset)?;
            let mut q_grid = Vec::new();
            let mut q = q_min;
            while q <= q_max + 1e-12 {
                q_grid.push(q);
                q += q_step;
            }
            let balls = BallFamily::dyadic_strided(&g, jmax, (g.points_per_axis() / 32).max(1))?;
            let diag = diagnose(&w, &q_grid, &[1.5, 2.0], threshold, &balls)?;
            println!(
                "{}",
                serde_json::to_string(&diag).map_err(|e| MhError::Config(e.to_string()))?
            );
            Ok(0)
        }
        Cmd::Riesz { cmd } => {
            let RieszCmd::Apply { field, word, out } = cmd;
            let f = load_field(&field)?;
            let entries: Vec<usize> = word
                .split(',')
                .map(|p| {
                    p.trim()
                        .parse::<usize>()
                        .map_err(|_| MhError::Config(format!("bad word entry '{p}'")))
                })
                .collect::<Result<_>>()?;
            let w = RieszIndexWord::new(entries, f.grid().dim())?;
            let g = compose_riesz(&f, &w)?;
            store_field(&out, &g)?;
            Ok(0)
        }
        Cmd::Maximal { op, field, out, q, aperture, order, jmax, csv } => {
            let f = load_field(&field)?;
            let grid = f.grid().clone();
            let levels = TimeLevels::default_for(&grid);
            let result = match op.as_str() {
                "hl" => {
                    let balls = BallFamily::dyadic_all_centers(&grid, jmax)?;
                    hardy_littlewood(&f, &balls)?
                }
                "qorder" => {
                    let balls = BallFamily::dyadic_all_centers(&grid, jmax)?;
                    q_order_maximal(&f, q, &balls)?
                }
                "radial" => radial_maximal(&f, &Expr::parse("exp(-pi*|x|^2)")?, &levels)?,
                "nt" => {
                    let u = poisson_extend(&f, &levels);
                    nontangential_maximal(&u, aperture)?
                }
                "poisson" => poisson_maximal(&f, &levels)?,
                "grand" => {
                    let dict = TestDictionary::default_for(grid.dim(), order)?;
                    grand_maximal(&f, &dict, &levels, aperture)?
                }
                other => return Err(MhError::Config(format!("unknown maximal op '{other}'"))),
            };
            store_field(&out, &result)?;
            if csv {
                let mut file = std::fs::File::create(out.with_extension("csv"))?;
                write_field_csv(&mut file, &result)?;
            }
            Ok(0)
        }
        Cmd::Atoms { cmd } => {
            let AtomsCmd::Make { ball, q, s, phi, grid, out, report, tol } = cmd;
            let coords = parse_floats(&ball)?;
            if coords.len() < 2 {
                return Err(MhError::Config(
                    "--ball needs center coordinates plus a radius".into(),
                ));
            }
            let (center, radius) = (coords[..coords.len() - 1].to_vec(), coords[coords.len() - 1]);
            let mut grid = grid;
            grid.dim = center.len();
            let g = grid.build()?;
            let q = if q == "inf" {
                f64::INFINITY
            } else {
                q.parse::<f64>().map_err(|_| MhError::Config(format!("bad exponent '{q}'")))?
            };
            let phi = parse_phi(&phi)?;
            let spec = AtomSpec { center, radius, q, s };
            let atom = make_atom(&g, &spec, &phi)?;
            store_field(&out, &atom)?;
            let rep = validate_atom(&atom, &spec, &phi, tol)?;
            let doc =
                serde_json::to_string(&rep).map_err(|e| MhError::Config(e.to_string()))?;
            std::fs::write(&report, &doc)?;
            Ok(if rep.all_ok() { 0 } else { 2 })
        }
        Cmd::Musielak { cmd } => {
            let MusielakCmd::Indices { phi, grid } = cmd;
            let g = grid.build()?;
            let phi = parse_phi(&phi)?;
            let indices = estimate_type_indices(&phi, &g, &SampleSpec::default())?;
            println!(
                "{}",
                serde_json::to_string(&indices).map_err(|e| MhError::Config(e.to_string()))?
            );
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            let code = match e {
                MhError::Rank(_) => 3,
                _ => 4,
            };
            ExitCode::from(code)
        }
    }
}
