//! Command-line driver.
//!
//! Exit codes: 0 on success, 1 on usage or validation errors, 2 on I/O
//! errors.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::classify::build_classifier;
use crate::error::{NmfError, Result};
use crate::io::{
    export_channel_images, make_phantom, read_classifier, read_labels, read_matrix, read_vector, write_classifier,
    write_matrix, write_trace, write_vector, PhantomSpec,
};
use crate::model::{init_factors, validate_problem, FactorState, HyperParams, Labels};
use crate::objective::{penalty_values, CostBreakdown, Discrepancy};
use crate::solver::{fit, KlXRule, SolverConfig};
use crate::tv::{build_grid, PixelGrid};

#[derive(Debug, Parser)]
#[command(
    name = "nmf-mm",
    version,
    about = "Majorize-minimize non-negative matrix factorization"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic hyperspectral dataset with known factors.
    Phantom(PhantomArgs),
    /// Factorize a data matrix.
    Fit(FitArgs),
    /// Train a threshold classifier from supervised factors.
    ClassifyTrain(ClassifyTrainArgs),
    /// Score data rows with a trained classifier.
    ClassifyPredict(ClassifyPredictArgs),
    /// Write the columns of K as grayscale PGM images.
    ExportImages(ExportImagesArgs),
    /// Print every term of the objective for saved factors.
    EvalCost(EvalCostArgs),
}

#[derive(Debug, Clone, Copy)]
struct GridSize {
    width: usize,
    height: usize,
}

fn parse_grid(s: &str) -> std::result::Result<GridSize, String> {
    let (w, h) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected WxH, got '{s}'"))?;
    let width = w.trim().parse().map_err(|_| format!("bad grid width '{w}'"))?;
    let height = h.trim().parse().map_err(|_| format!("bad grid height '{h}'"))?;
    Ok(GridSize { width, height })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum DivergenceArg {
    Kl,
    Fro,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum KlXRuleArg {
    Jensen,
    Lqbp,
}

#[derive(Debug, Args)]
struct PhantomArgs {
    #[arg(long, value_parser = parse_grid)]
    grid: GridSize,
    #[arg(long)]
    rank: usize,
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Number of spectral channels.
    #[arg(long, default_value_t = 64)]
    channels: usize,
    /// Let neighboring spatial blocks overlap.
    #[arg(long)]
    overlap: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct Weights {
    #[arg(long, default_value_t = 0.0)]
    lambda: f64,
    #[arg(long, default_value_t = 0.0)]
    mu: f64,
    #[arg(long, default_value_t = 0.0)]
    nu: f64,
    #[arg(long, default_value_t = 0.0)]
    omega: f64,
    #[arg(long, default_value_t = 0.0)]
    tau: f64,
    #[arg(long = "sigma-k1", default_value_t = 0.0)]
    sigma_k1: f64,
    #[arg(long = "sigma-k2", default_value_t = 0.0)]
    sigma_k2: f64,
    #[arg(long = "sigma-x1", default_value_t = 0.0)]
    sigma_x1: f64,
    #[arg(long = "sigma-x2", default_value_t = 0.0)]
    sigma_x2: f64,
    #[arg(long, default_value_t = 0.0)]
    rho: f64,
    #[arg(long = "eps-tv", default_value_t = 1e-7)]
    eps_tv: f64,
    #[arg(long = "eps-div", default_value_t = 1e-12)]
    eps_div: f64,
    /// Single-column CSV of per-factor TV weights.
    #[arg(long)]
    psi: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = DivergenceArg::Kl)]
    divergence: DivergenceArg,
}

impl Weights {
    fn discrepancy(&self) -> Discrepancy {
        match self.divergence {
            DivergenceArg::Kl => Discrepancy::Kl,
            DivergenceArg::Fro => Discrepancy::Frobenius,
        }
    }

    fn to_params(&self) -> Result<HyperParams> {
        let psi = match &self.psi {
            Some(path) => Some(read_vector(path, false)?),
            None => None,
        };
        Ok(HyperParams {
            lambda: self.lambda,
            mu: self.mu,
            nu: self.nu,
            omega: self.omega,
            tau: self.tau,
            sigma_k1: self.sigma_k1,
            sigma_k2: self.sigma_k2,
            sigma_x1: self.sigma_x1,
            sigma_x2: self.sigma_x2,
            rho: self.rho,
            eps_tv: self.eps_tv,
            eps_div: self.eps_div,
            psi,
            beta_divergence_index: self.discrepancy().beta_index(),
        })
    }
}

#[derive(Debug, Args)]
struct FitArgs {
    #[arg(long)]
    data: PathBuf,
    /// Skip one header line in the data file.
    #[arg(long)]
    header: bool,
    #[arg(long)]
    rank: usize,
    /// Image layout of the data rows; defaults to an n x 1 chain.
    #[arg(long, value_parser = parse_grid)]
    grid: Option<GridSize>,
    #[arg(long)]
    labels: Option<PathBuf>,
    #[command(flatten)]
    weights: Weights,
    #[arg(long = "max-iter", default_value_t = 500)]
    max_iter: usize,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long = "kl-x-rule", value_enum, default_value_t = KlXRuleArg::Jensen)]
    kl_x_rule: KlXRuleArg,
    /// Record the cost every this many sweeps.
    #[arg(long = "trace-every", default_value_t = 1)]
    trace_every: usize,
    /// Upper end of the uniform initialization range.
    #[arg(long = "init-scale", default_value_t = 1.0)]
    init_scale: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct ClassifyTrainArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    labels: PathBuf,
    /// Directory holding X.csv and beta.csv from a supervised fit.
    #[arg(long)]
    factors: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct ClassifyPredictArgs {
    #[arg(long)]
    clf: PathBuf,
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct ExportImagesArgs {
    #[arg(long)]
    k: PathBuf,
    #[arg(long, value_parser = parse_grid)]
    grid: GridSize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct EvalCostArgs {
    #[arg(long)]
    data: PathBuf,
    /// Directory holding K.csv, X.csv, V.csv, W.csv and beta.csv.
    #[arg(long)]
    factors: PathBuf,
    #[arg(long, value_parser = parse_grid)]
    grid: Option<GridSize>,
    #[arg(long)]
    labels: Option<PathBuf>,
    #[command(flatten)]
    weights: Weights,
}

/// Runs the CLI against the process's stdout and stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with_output(args, &mut stdout.lock(), &mut stderr.lock())
}

/// Runs the CLI, writing normal output to `out` and diagnostics to `err`.
/// Returns the process exit code.
pub fn run_with_output<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let rendered = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(err, "{rendered}");
                1
            } else {
                let _ = write!(out, "{rendered}");
                0
            };
        }
    };
    match dispatch(cli.command, out, err) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            match e {
                NmfError::Io(_) => 2,
                _ => 1,
            }
        }
    }
}

fn dispatch(command: Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    match command {
        Command::Phantom(a) => phantom(a, out),
        Command::Fit(a) => fit_command(a, out, err),
        Command::ClassifyTrain(a) => classify_train(a, out),
        Command::ClassifyPredict(a) => classify_predict(a, out),
        Command::ExportImages(a) => export_images(a, out),
        Command::EvalCost(a) => eval_cost(a, out),
    }
}

fn grid_for(size: Option<GridSize>, rows: usize) -> Result<PixelGrid> {
    let grid = match size {
        Some(g) => build_grid(g.width, g.height)?,
        None => PixelGrid::chain(rows)?,
    };
    if grid.len() != rows {
        return Err(NmfError::Invalid(format!(
            "grid has {} pixels but the data has {rows} rows",
            grid.len()
        )));
    }
    Ok(grid)
}

fn phantom(a: PhantomArgs, out: &mut dyn Write) -> Result<()> {
    let spec = PhantomSpec {
        width: a.grid.width,
        height: a.grid.height,
        rank: a.rank,
        channels: a.channels,
        noise_level: a.noise,
        seed: a.seed,
        overlap: a.overlap,
    };
    let ph = make_phantom(&spec)?;
    fs::create_dir_all(&a.out)?;
    write_matrix(ph.y.as_array(), a.out.join("Y.csv"))?;
    write_matrix(&ph.k_true, a.out.join("K_true.csv"))?;
    write_matrix(&ph.x_true, a.out.join("X_true.csv"))?;
    write_vector(ph.labels.as_array(), a.out.join("labels.csv"))?;
    writeln!(
        out,
        "wrote {}x{} phantom to {}",
        ph.y.nrows(),
        ph.y.ncols(),
        a.out.display()
    )?;
    Ok(())
}

fn fit_command(a: FitArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    let discrepancy = a.weights.discrepancy();
    let kl_x_rule = match a.kl_x_rule {
        KlXRuleArg::Jensen => KlXRule::Jensen,
        KlXRuleArg::Lqbp => KlXRule::Lqbp,
    };
    if kl_x_rule == KlXRule::Lqbp && discrepancy != Discrepancy::Kl {
        return Err(NmfError::Unsupported(
            "--kl-x-rule lqbp requires --divergence kl".into(),
        ));
    }
    let params = a.weights.to_params()?;
    let labels = a.labels.as_ref().map(read_labels).transpose()?;
    if params.rho > 0.0 && labels.is_none() {
        return Err(NmfError::LabelsRequired);
    }
    let y = read_matrix(&a.data, a.header)?.into_inner();
    let grid = grid_for(a.grid, y.nrows())?;
    let init = init_factors(y.nrows(), y.ncols(), a.rank, a.seed, a.init_scale)?;
    let report = validate_problem(&y, &init, &params, labels.as_ref());
    for w in &report.warnings {
        writeln!(err, "warning: {w}")?;
    }
    report.into_result()?;

    let config = SolverConfig {
        discrepancy,
        kl_x_rule,
        max_iter: a.max_iter,
        rel_tol: a.tol,
        seed: a.seed,
        trace_every: a.trace_every,
    };
    let (state, trace) = fit(&y, &config, &params, &grid, labels.as_ref(), init)?;

    fs::create_dir_all(&a.out)?;
    write_matrix(&state.k, a.out.join("K.csv"))?;
    write_matrix(&state.x, a.out.join("X.csv"))?;
    write_matrix(&state.v, a.out.join("V.csv"))?;
    write_matrix(&state.w, a.out.join("W.csv"))?;
    write_vector(&state.beta, a.out.join("beta.csv"))?;
    write_trace(&trace, a.out.join("trace.csv"))?;
    let last = trace.last().expect("a trace always holds the initial record");
    writeln!(
        out,
        "stopped after {} iterations ({}), total cost {}",
        last.iter,
        trace.termination.tag(),
        last.cost.total
    )?;
    Ok(())
}

fn classify_train(a: ClassifyTrainArgs, out: &mut dyn Write) -> Result<()> {
    let y = read_matrix(&a.data, false)?.into_inner();
    let labels = read_labels(&a.labels)?;
    let x = read_matrix(a.factors.join("X.csv"), false)?.into_inner();
    let beta = read_vector(a.factors.join("beta.csv"), false)?;
    if labels.len() != y.nrows() {
        return Err(NmfError::Invalid(format!(
            "labels have length {}, data has {} rows",
            labels.len(),
            y.nrows()
        )));
    }
    let (clf, acc) = build_classifier(&x, &beta, &y, &labels)?;
    write_classifier(&clf, &a.out)?;
    writeln!(out, "threshold {}, training accuracy {acc}", clf.threshold)?;
    Ok(())
}

fn classify_predict(a: ClassifyPredictArgs, out: &mut dyn Write) -> Result<()> {
    let clf = read_classifier(&a.clf)?;
    let y = read_matrix(&a.data, false)?.into_inner();
    let preds = clf.predict_all(&y)?;
    let mut body = String::from("score,label\n");
    for (score, label) in &preds {
        body.push_str(&format!("{score},{label}\n"));
    }
    fs::write(&a.out, body)?;
    let ones = preds.iter().filter(|p| p.1 == 1).count();
    writeln!(out, "scored {} rows, {ones} assigned to class 1", preds.len())?;
    Ok(())
}

fn export_images(a: ExportImagesArgs, out: &mut dyn Write) -> Result<()> {
    let k = read_matrix(&a.k, false)?.into_inner();
    let grid = build_grid(a.grid.width, a.grid.height)?;
    let paths = export_channel_images(&k, &grid, &a.out)?;
    writeln!(out, "wrote {} images to {}", paths.len(), a.out.display())?;
    Ok(())
}

fn read_state(dir: &Path) -> Result<FactorState> {
    let m = |name: &str| read_matrix(dir.join(name), false).map(|d| d.into_inner());
    Ok(FactorState {
        k: m("K.csv")?,
        x: m("X.csv")?,
        v: m("V.csv")?,
        w: m("W.csv")?,
        beta: read_vector(dir.join("beta.csv"), false)?,
    })
}

fn eval_cost(a: EvalCostArgs, out: &mut dyn Write) -> Result<()> {
    let params = a.weights.to_params()?;
    let labels: Option<Labels> = a.labels.as_ref().map(read_labels).transpose()?;
    let y = read_matrix(&a.data, false)?.into_inner();
    let grid = grid_for(a.grid, y.nrows())?;
    let state = read_state(&a.factors)?;
    validate_problem(&y, &state, &params, labels.as_ref()).into_result()?;
    let cost = penalty_values(&y, &state, &params, &grid, labels.as_ref())?;
    writeln!(out, "{}", CostBreakdown::FIELDS.join(","))?;
    let row: Vec<String> = cost.values().iter().map(f64::to_string).collect();
    writeln!(out, "{}", row.join(","))?;
    Ok(())
}
