//! `phasemix`: evaluate conditional exit-time laws of Markov mixtures,
//! compare them with simulation and write the built-in examples.

mod error;
mod example;
mod grid;

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use phasemix::distributions::ExitLaw;
use phasemix::inference::{state_limit, switching_limit, PathFile, ScenarioFile};
use phasemix::model::{validate, ModelFile};
use phasemix::simulator::{
    estimate_cross_moment, estimate_diag_mass, estimate_moment, estimate_surv, estimate_surv_uni,
    sample_paths, Estimate, SimConfig,
};
use phasemix::{ClosedSetFamily, InformationScenario, MixtureModel};
use serde::Serialize;
use serde_json::json;

use crate::error::{CliError, Result};
use crate::example::{ExampleName, Overrides};
use crate::grid::{axis, fmt17, grid_csv, grid_rows, invalid, parse_range, table_csv};

#[derive(Debug, Parser)]
#[command(
    name = "phasemix",
    version,
    about = "Exit-time laws of Markov mixture processes"
)]
struct Cli {
    /// Model JSON (required except for `example`).
    #[arg(long, global = true)]
    model: Option<PathBuf>,
    /// Output file; a directory for `example`. Defaults to stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed for `simulate`.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Output format; `validate` always writes JSON.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check the model and closed-set family; exits non-zero if inadmissible.
    Validate,
    /// Survival and density of the absorption time; at `s = t` the density
    /// column holds the atom.
    Univariate {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Evaluation range `a:b` (default `t:t+8`).
        #[arg(long)]
        range: Option<String>,
        #[arg(long, default_value_t = 0.1)]
        step: f64,
        /// Highest moment reported in JSON output.
        #[arg(long, default_value_t = 2)]
        moments: u32,
    },
    /// Bivariate law on a grid: continuous part, diagonal, atom.
    BivariateGrid {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Joint survival and density at given time vectors.
    Multivariate {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Comma-separated times, one per closed set; repeatable.
        #[arg(long, required = true)]
        times: Vec<String>,
    },
    /// Long-run filter and regime probabilities.
    Limits,
    /// Monte Carlo estimate of one statistic.
    Simulate {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long, value_enum, default_value_t = Stat::Surv)]
        stat: Stat,
        /// Times for `surv`, comma-separated.
        #[arg(long)]
        times: Option<String>,
        /// Time for `surv-uni`.
        #[arg(long)]
        s: Option<f64>,
        /// Order for `moment`.
        #[arg(long, default_value_t = 1)]
        order: u32,
        #[arg(long, default_value_t = 100_000)]
        paths: u64,
        /// Censoring horizon (default 50 slowest mean holding times).
        #[arg(long)]
        horizon: Option<f64>,
        #[arg(long)]
        antithetic: bool,
        /// Write the first N sampled paths to `--paths-out`.
        #[arg(long, requires = "paths_out")]
        dump_paths: Option<u64>,
        #[arg(long)]
        paths_out: Option<PathBuf>,
    },
    /// Write a built-in example model with its grids and marginals.
    Example {
        #[arg(value_enum)]
        name: ExampleName,
        #[command(flatten)]
        overrides: Overrides,
        #[command(flatten)]
        grid: GridArgs,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Stat {
    /// `P(τ_1 > s_1, …, τ_p > s_p)`.
    Surv,
    /// `P(τ > s)` for the absorption time.
    SurvUni,
    /// `E[((τ − t)^+)^order]`.
    Moment,
    /// `E[(τ_1 − t)(τ_2 − t)]`.
    CrossMoment,
    /// `P(τ_1 = τ_2)` from time 0.
    DiagMass,
}

/// Conditioning information, given as a scenario file or by flags.
/// States are 1-based.
#[derive(Debug, Clone, Args)]
struct ScenarioArgs {
    /// Scenario JSON.
    #[arg(long, conflicts_with_all = ["t", "state", "initial", "alive"])]
    scenario: Option<PathBuf>,
    /// Conditioning time.
    #[arg(long)]
    t: Option<f64>,
    /// State observed at `t`.
    #[arg(long, conflicts_with = "alive")]
    state: Option<usize>,
    /// State observed at time 0.
    #[arg(long)]
    initial: Option<usize>,
    /// Only survival to `t` is known.
    #[arg(long)]
    alive: bool,
}

impl ScenarioArgs {
    fn given(&self) -> bool {
        self.scenario.is_some()
            || self.t.is_some()
            || self.state.is_some()
            || self.initial.is_some()
            || self.alive
    }

    fn build(&self) -> Result<InformationScenario> {
        if let Some(path) = &self.scenario {
            return Ok(ScenarioFile::from_json(&read(path)?)?.build()?);
        }
        let t = self.t.unwrap_or(0.0);
        let state = |s: usize| {
            s.checked_sub(1)
                .ok_or_else(|| invalid("states are numbered from 1".into()))
        };
        let scenario = match (self.initial, self.state, self.alive) {
            (None, None, false) => InformationScenario::no_information(t),
            (None, None, true) => InformationScenario::alive_current_only(t),
            (None, Some(j), _) => InformationScenario::current_only(state(j)?, t),
            (Some(i), Some(j), _) => {
                InformationScenario::initial_and_current(state(i)?, state(j)?, t)
            }
            (Some(i), None, true) => InformationScenario::alive_initial(state(i)?, t),
            (Some(i), None, false) => InformationScenario::initial_only(state(i)?, t),
        };
        Ok(scenario?)
    }
}

/// Grid ranges default to `[t, t + 8]` on both axes.
#[derive(Debug, Clone, Args)]
pub struct GridArgs {
    /// Range `a:b` of the first exit time.
    #[arg(long)]
    t1: Option<String>,
    /// Range `a:b` of the second exit time.
    #[arg(long)]
    t2: Option<String>,
    #[arg(long, default_value_t = 0.1)]
    step: f64,
}

impl GridArgs {
    pub fn ranges(&self, t: f64) -> Result<((f64, f64), (f64, f64))> {
        let pick = |r: &Option<String>| r.as_deref().map_or(Ok((t, t + 8.0)), parse_range);
        Ok((pick(&self.t1)?, pick(&self.t2)?))
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| CliError::io(path, e)),
        None => std::io::stdout()
            .lock()
            .write_all(text.as_bytes())
            .map_err(|e| CliError::io(Path::new("<stdout>"), e)),
    }
}

fn pretty<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("output serializes") + "\n"
}

fn load(path: Option<&Path>) -> Result<(MixtureModel, ClosedSetFamily)> {
    let path = path.ok_or_else(|| CliError::Usage("--model is required".into()))?;
    Ok(ModelFile::from_json(&read(path)?)?.build()?)
}

/// Loads a model and refuses inadmissible ones.
fn load_admissible(path: Option<&Path>) -> Result<(MixtureModel, ClosedSetFamily)> {
    let (model, family) = load(path)?;
    let report = validate(&model, &family);
    if !report.is_admissible() {
        return Err(CliError::Inadmissible(report));
    }
    Ok((model, family))
}

fn parse_times(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|x| {
            x.trim()
                .parse::<f64>()
                .map_err(|_| invalid(format!("bad time `{x}` in `{text}`")))
        })
        .collect()
}

fn configure_threads() -> Result<()> {
    let Ok(value) = std::env::var("PHASEMIX_THREADS") else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| {
            CliError::Usage(format!(
                "PHASEMIX_THREADS={value} is not a positive integer"
            ))
        })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Usage(format!("thread pool: {e}")))
}

fn run(cli: Cli) -> Result<()> {
    configure_threads()?;
    let out = cli.out.as_deref();
    let model_path = cli.model.as_deref();
    match cli.command {
        Command::Validate => {
            let (model, family) = load(model_path)?;
            let report = validate(&model, &family);
            emit(out, &pretty(&report))?;
            if !report.is_admissible() {
                return Err(CliError::Inadmissible(report));
            }
            Ok(())
        }
        Command::Univariate {
            scenario,
            range,
            step,
            moments,
        } => {
            let (model, family) = load_admissible(model_path)?;
            let scenario = scenario.build()?;
            let law = ExitLaw::new(&model, &family, &scenario)?;
            let range = range
                .as_deref()
                .map_or(Ok((law.t(), law.t() + 8.0)), parse_range)?;
            let points = axis(range, step)?;
            let rows = points
                .iter()
                .map(|&s| Ok(vec![s, law.surv_uni(s)?, law.dens_uni(s)?]))
                .collect::<Result<Vec<_>>>()?;
            let text = match cli.format.unwrap_or(Format::Csv) {
                Format::Csv => table_csv(&["s", "survival", "density"], &rows),
                Format::Json => {
                    let moments = (1..=moments)
                        .map(|k| law.moment_uni(k))
                        .collect::<phasemix::Result<Vec<_>>>()?;
                    let points: Vec<_> = rows
                        .iter()
                        .map(|r| json!({ "s": r[0], "survival": r[1], "density": r[2] }))
                        .collect();
                    pretty(&json!({
                        "t": law.t(),
                        "atom": law.atom_uni(),
                        "moments": moments,
                        "points": points,
                    }))
                }
            };
            emit(out, &text)
        }
        Command::BivariateGrid { scenario, grid } => {
            let (model, family) = load_admissible(model_path)?;
            let law = ExitLaw::new(&model, &family, &scenario.build()?)?;
            let (r1, r2) = grid.ranges(law.t())?;
            let (x, y) = (axis(r1, grid.step)?, axis(r2, grid.step)?);
            log::info!("evaluating {} x {} grid", x.len(), y.len());
            let rows = grid_rows(&law, &x, &y)?;
            let text = match cli.format.unwrap_or(Format::Csv) {
                Format::Csv => grid_csv(&rows),
                Format::Json => pretty(&json!({ "t": law.t(), "rows": rows })),
            };
            emit(out, &text)
        }
        Command::Multivariate { scenario, times } => {
            let (model, family) = load_admissible(model_path)?;
            let law = ExitLaw::new(&model, &family, &scenario.build()?)?;
            let mut rows = Vec::with_capacity(times.len());
            for text in &times {
                let s = parse_times(text)?;
                let survival = law.surv_multi(&s)?;
                // undefined at ties and at the conditioning time
                let density = law.dens_multi(&s).ok();
                rows.push((s, survival, density));
            }
            let text = match cli.format.unwrap_or(Format::Csv) {
                Format::Csv => {
                    let mut header: Vec<String> =
                        (1..=family.p()).map(|k| format!("s{k}")).collect();
                    header.extend(["survival".into(), "density".into()]);
                    let mut text = header.join(",") + "\n";
                    for (s, survival, density) in &rows {
                        let mut cells: Vec<String> = s.iter().map(|&x| fmt17(x)).collect();
                        cells.push(fmt17(*survival));
                        cells.push(density.map(fmt17).unwrap_or_default());
                        text += &(cells.join(",") + "\n");
                    }
                    text
                }
                Format::Json => {
                    let rows: Vec<_> = rows
                        .iter()
                        .map(|(s, survival, density)| {
                            json!({ "times": s, "survival": survival, "density": density })
                        })
                        .collect();
                    pretty(&json!({ "t": law.t(), "rows": rows }))
                }
            };
            emit(out, &text)
        }
        Command::Limits => {
            let (model, _) = load_admissible(model_path)?;
            let state = state_limit(&model)?;
            // states the process never occupies have no limit
            let switching = (0..model.n())
                .map(|j| match switching_limit(&model, j) {
                    Ok(v) => Ok(Some(v)),
                    Err(phasemix::Error::NoConvergence) => Ok(None),
                    Err(e) => Err(e),
                })
                .collect::<phasemix::Result<Vec<_>>>()?;
            let text = match cli.format.unwrap_or(Format::Json) {
                Format::Json => {
                    pretty(&json!({ "state_limit": state, "switching_limit": switching }))
                }
                Format::Csv => {
                    let mut text = String::from("quantity,state,index,value\n");
                    for (j, x) in state.iter().enumerate() {
                        text += &format!("state,,{},{}\n", j + 1, fmt17(*x));
                    }
                    for (j, row) in switching.iter().enumerate() {
                        for (k, x) in row.iter().flatten().enumerate() {
                            text += &format!("switching,{},{},{}\n", j + 1, k + 1, fmt17(*x));
                        }
                    }
                    text
                }
            };
            emit(out, &text)
        }
        Command::Simulate {
            scenario,
            stat,
            times,
            s,
            order,
            paths,
            horizon,
            antithetic,
            dump_paths,
            paths_out,
        } => {
            let (model, family) = load_admissible(model_path)?;
            let config = SimConfig {
                horizon,
                antithetic,
                ..SimConfig::new(paths, cli.seed)
            };
            if stat == Stat::DiagMass && scenario.given() {
                return Err(CliError::Usage("diag-mass is unconditional".into()));
            }
            let info = scenario.build()?;
            log::info!("simulating {paths} paths with seed {}", cli.seed);
            let estimate: Estimate = match stat {
                Stat::Surv => {
                    let times = times
                        .as_deref()
                        .ok_or_else(|| CliError::Usage("--stat surv needs --times".into()))?;
                    estimate_surv(&model, &family, &info, &parse_times(times)?, &config)?
                }
                Stat::SurvUni => {
                    let s = s.ok_or_else(|| CliError::Usage("--stat surv-uni needs --s".into()))?;
                    estimate_surv_uni(&model, &info, s, &config)?
                }
                Stat::Moment => estimate_moment(&model, &info, order, &config)?,
                Stat::CrossMoment => estimate_cross_moment(&model, &family, &info, &config)?,
                Stat::DiagMass => estimate_diag_mass(&model, &family, &config)?,
            };
            if let (Some(n), Some(path)) = (dump_paths, paths_out.as_deref()) {
                let records = sample_paths(&model, &config, n)
                    .iter()
                    .map(|p| Ok(PathFile::from_record(&p.record()?)))
                    .collect::<phasemix::Result<Vec<_>>>()?;
                emit(Some(path), &pretty(&records))?;
            }
            let text = match cli.format.unwrap_or(Format::Json) {
                Format::Json => pretty(&estimate),
                Format::Csv => format!(
                    "estimate,stderr,n_paths,seed\n{},{},{},{}\n",
                    fmt17(estimate.estimate),
                    fmt17(estimate.stderr),
                    estimate.n_paths,
                    estimate.seed
                ),
            };
            emit(out, &text)
        }
        Command::Example {
            name,
            overrides,
            grid,
        } => {
            let default_dir = PathBuf::from(name.to_possible_value().expect("named").get_name());
            example::run(name, &overrides, &grid, out.unwrap_or(&default_dir))
        }
    }
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // help and version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let message = e.kind().to_string();
            let detail = e.render().to_string();
            let body =
                json!({ "error": { "kind": "usage", "message": message, "detail": detail } });
            eprintln!("{body}");
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::FAILURE
        }
    }
}
