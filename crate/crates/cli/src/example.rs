//! Built-in examples written out as model JSON, density grids and
//! marginal densities.

use std::fs;
use std::path::Path;

use crate::error::{CliError, Result};
use clap::{Args, ValueEnum};
use phasemix::distributions::ExitLaw;
use phasemix::inference::state_update_alive;
use phasemix::model::{block_partition, structured_blocks, ModelFile};
use phasemix::presets::{
    birth_death, exponential, marshall_olkin, BirthDeathParams, ExponentialParams,
    MarshallOlkinParams,
};
use phasemix::{ClosedSetFamily, InformationScenario, MixtureModel};
use serde_json::json;

use crate::grid::{axis, diagonal_rows, fmt17, grid_csv, grid_rows, invalid, table_csv, GridRow};
use crate::GridArgs;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ExampleName {
    Exponential,
    MarshallOlkin,
    BirthDeath,
}

/// Parameter overrides. Rates `a·`/`b·` drive regimes 1 and 2, `p1` is the
/// regime-2 probability at state 1.
#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    #[arg(long)]
    a1: Option<f64>,
    #[arg(long)]
    a2: Option<f64>,
    #[arg(long)]
    a3: Option<f64>,
    #[arg(long)]
    b1: Option<f64>,
    #[arg(long)]
    b2: Option<f64>,
    #[arg(long)]
    b3: Option<f64>,
    #[arg(long)]
    p1: Option<f64>,
    /// Speed of regime 2 relative to regime 1 (default: both 0.5 and 2).
    #[arg(long)]
    psi: Option<f64>,
    /// Exit rate of terminal state 5.
    #[arg(long)]
    delta2: Option<f64>,
    /// Conditioning time (default: both 0 and 10).
    #[arg(long)]
    t: Option<f64>,
    /// Current state of the state-conditioned density, 1-based (default 2).
    #[arg(long)]
    i: Option<usize>,
}

impl Overrides {
    fn reject(&self, allowed: &[&str]) -> Result<()> {
        let given = [
            ("a1", self.a1.is_some()),
            ("a2", self.a2.is_some()),
            ("a3", self.a3.is_some()),
            ("b1", self.b1.is_some()),
            ("b2", self.b2.is_some()),
            ("b3", self.b3.is_some()),
            ("p1", self.p1.is_some()),
            ("psi", self.psi.is_some()),
            ("delta2", self.delta2.is_some()),
            ("t", self.t.is_some()),
            ("i", self.i.is_some()),
        ];
        for (name, set) in given {
            if set && !allowed.contains(&name) {
                return Err(invalid(format!(
                    "override --{name} does not apply to this example"
                )));
            }
        }
        Ok(())
    }
}

pub fn run(name: ExampleName, o: &Overrides, grid: &GridArgs, out: &Path) -> Result<()> {
    fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
    match name {
        ExampleName::Exponential => {
            o.reject(&["a1", "a2", "b1", "b2", "p1"])?;
            let mut p = ExponentialParams::default();
            p.a1 = o.a1.unwrap_or(p.a1);
            p.a2 = o.a2.unwrap_or(p.a2);
            p.b1 = o.b1.unwrap_or(p.b1);
            p.b2 = o.b2.unwrap_or(p.b2);
            p.p[0] = o.p1.unwrap_or(p.p[0]);
            let (model, family) = exponential(&p)?;
            two_regime(&model, &family, grid, out)
        }
        ExampleName::MarshallOlkin => {
            o.reject(&["a1", "a2", "a3", "b1", "b2", "b3", "p1"])?;
            let mut p = MarshallOlkinParams::default();
            for (slot, v) in p.a.iter_mut().zip([o.a1, o.a2, o.a3]) {
                *slot = v.unwrap_or(*slot);
            }
            for (slot, v) in p.b.iter_mut().zip([o.b1, o.b2, o.b3]) {
                *slot = v.unwrap_or(*slot);
            }
            p.p[0] = o.p1.unwrap_or(p.p[0]);
            let (model, family) = marshall_olkin(&p)?;
            two_regime(&model, &family, grid, out)
        }
        ExampleName::BirthDeath => {
            o.reject(&["psi", "delta2", "t", "i"])?;
            let psis = o.psi.map_or(vec![0.5, 2.0], |x| vec![x]);
            let times = o.t.map_or(vec![0.0, 10.0], |x| vec![x]);
            let mut summary = serde_json::Map::new();
            for &psi in &psis {
                let mut p = BirthDeathParams {
                    psi,
                    ..Default::default()
                };
                p.delta[1] = o.delta2.unwrap_or(p.delta[1]);
                let (model, family) = birth_death(&p)?;
                write(
                    out,
                    &format!("model_psi{psi}.json"),
                    &model_json(&model, &family),
                )?;
                for &t in &times {
                    let tag = format!("psi{psi}_t{t}");
                    let case = Case {
                        psi,
                        t,
                        i: o.i.unwrap_or(2),
                        tag: &tag,
                    };
                    let alpha = birth_death_case(&model, &family, &case, grid, out)?;
                    summary.insert(tag, json!({ "psi": psi, "t": t, "alpha": alpha }));
                }
            }
            let text = serde_json::to_string_pretty(&summary).expect("summary serializes") + "\n";
            write(out, "summary.json", &text)
        }
    }
}

fn model_json(model: &MixtureModel, family: &ClosedSetFamily) -> String {
    ModelFile::from_model(model, family).to_json() + "\n"
}

fn write(dir: &Path, name: &str, text: &str) -> Result<()> {
    let path = dir.join(name);
    fs::write(&path, text).map_err(|e| CliError::io(&path, e))
}

fn axes(grid: &GridArgs, t: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let (r1, r2) = grid.ranges(t)?;
    Ok((axis(r1, grid.step)?, axis(r2, grid.step)?))
}

/// Marginal densities of both exit times at every axis point after `t`.
fn marginal_columns(
    model: &MixtureModel,
    family: &ClosedSetFamily,
    law: &ExitLaw,
    points: &[f64],
) -> Result<Vec<Vec<f64>>> {
    let sb = structured_blocks(&block_partition(model)?, family)?;
    points
        .iter()
        .map(|&s| {
            Ok(vec![
                law.structured_marginal(&sb, 1, s)?,
                law.structured_marginal(&sb, 2, s)?,
            ])
        })
        .collect()
}

fn diagonal_csv(rows: &[GridRow]) -> String {
    let values: Vec<Vec<f64>> = rows.iter().map(|r| vec![r.t1, r.value]).collect();
    table_csv(&["u", "value"], &values)
}

fn two_regime(
    model: &MixtureModel,
    family: &ClosedSetFamily,
    grid: &GridArgs,
    out: &Path,
) -> Result<()> {
    let law = ExitLaw::new(model, family, &InformationScenario::no_information(0.0)?)?;
    let (x, y) = axes(grid, 0.0)?;
    write(out, "model.json", &model_json(model, family))?;
    write(out, "density.csv", &grid_csv(&grid_rows(&law, &x, &y)?))?;
    let after: Vec<f64> = x.iter().copied().filter(|&s| s > 0.0).collect();
    write(
        out,
        "diagonal.csv",
        &diagonal_csv(&diagonal_rows(&law, &after)?),
    )?;
    let cols = marginal_columns(model, family, &law, &after)?;
    let rows: Vec<Vec<f64>> = after
        .iter()
        .zip(cols)
        .map(|(&s, c)| [vec![s], c].concat())
        .collect();
    write(
        out,
        "marginals.csv",
        &table_csv(&["s", "tau1", "tau2"], &rows),
    )
}

#[derive(Clone, Copy)]
struct Case<'a> {
    psi: f64,
    t: f64,
    i: usize,
    tag: &'a str,
}

/// Writes the state-conditioned and the alive-conditioned laws at `t`;
/// returns `α(t)`, the alive filter on the states outside both sets.
fn birth_death_case(
    model: &MixtureModel,
    family: &ClosedSetFamily,
    case: &Case,
    grid: &GridArgs,
    out: &Path,
) -> Result<Vec<f64>> {
    let Case { psi, t, i, tag } = *case;
    if i == 0 || i > model.n() {
        return Err(invalid(format!(
            "state {i} is not a transient state 1..{}",
            model.n()
        )));
    }
    let by_state = ExitLaw::new(model, family, &InformationScenario::current_only(i - 1, t)?)?;
    let alive_scenario = InformationScenario::alive_current_only(t)?;
    let alive = ExitLaw::new(model, family, &alive_scenario)?;
    let core = family.core_states();
    let filter = state_update_alive(model, &alive_scenario)?;
    let alpha: Vec<f64> = core.iter().map(|&j| filter[j]).collect();

    let (x, y) = axes(grid, t)?;
    write(
        out,
        &format!("{tag}_state{i}.csv"),
        &grid_csv(&grid_rows(&by_state, &x, &y)?),
    )?;
    let cells: Vec<String> = alpha.iter().map(|&a| fmt17(a)).collect();
    let header = format!("# psi t alpha(t)\n# {} {} {}\n", psi, t, cells.join(" "));
    write(
        out,
        &format!("{tag}_alive.csv"),
        &(header + &grid_csv(&grid_rows(&alive, &x, &y)?)),
    )?;

    let after: Vec<f64> = x.iter().copied().filter(|&s| s > t).collect();
    let a = marginal_columns(model, family, &by_state, &after)?;
    let b = marginal_columns(model, family, &alive, &after)?;
    let rows: Vec<Vec<f64>> = after
        .iter()
        .zip(a.into_iter().zip(b))
        .map(|(&s, (a, b))| [vec![s], a, b].concat())
        .collect();
    let header = ["s", "state_tau1", "state_tau2", "alive_tau1", "alive_tau2"];
    write(
        out,
        &format!("{tag}_marginals.csv"),
        &table_csv(&header, &rows),
    )?;
    Ok(alpha)
}
