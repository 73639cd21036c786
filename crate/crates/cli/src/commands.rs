use std::fs::{self, File};
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use qverify_core::bounds::bound_report;
use qverify_core::experiments::{
    exact_certification_pass_probability, exact_pass_probability, figure_dataset, mc_pass_estimate, write_figure,
    FigureId, FigureSpec, McEstimate,
};
use qverify_core::games::{optimal_strategy, standard_game, target_state, GameDefinition, StandardGame};
use qverify_core::protocols::{plan_allpass, plan_certification, plan_verification};
use qverify_core::sources::{make_source, BranchSpec, SourceKindSpec};
use qverify_core::{NonlocalGame, Plan, QuantumStrategy, RobustnessModel, SourceModel, SourceSpec, StateVector};
use serde::Serialize;

use crate::config::{Format, Params};
use crate::Failure;

pub const EXIT_OK: u8 = 0;
pub const EXIT_INCONCLUSIVE: u8 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum ProtocolArg {
    #[default]
    Verification,
    Certification,
}

struct GameSetup {
    game: NonlocalGame,
    model: RobustnessModel,
    strategy: Option<QuantumStrategy>,
    target: Option<StateVector>,
}

fn setup_game(p: &Params) -> Result<GameSetup, Failure> {
    let name = p.game_name();
    let mut setup = match name.parse::<StandardGame>() {
        Ok(std) => {
            let (game, model) = standard_game(std);
            GameSetup {
                game,
                model,
                strategy: Some(optimal_strategy(std)?),
                target: Some(target_state(std)?),
            }
        }
        Err(_) if Path::new(name).is_file() => {
            let def: GameDefinition = read_json(Path::new(name))?;
            GameSetup {
                game: def.game,
                model: def.robustness,
                strategy: None,
                target: None,
            }
        }
        Err(e) => return Err(e.into()),
    };
    match (p.c, p.c_tilde) {
        (Some(_), Some(_)) => return Err(Failure::new("usage", "give --c or --c-tilde, not both")),
        (Some(c), None) => setup.model = setup.model.with_c(c)?,
        (None, Some(ct)) => setup.model = setup.model.with_c_tilde(ct)?,
        (None, None) => {}
    }
    Ok(setup)
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::new("io", format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::new("serialization", format!("{}: {e}", path.display())))
}

fn to_json<T: Serialize>(value: &T) -> Result<String, Failure> {
    serde_json::to_string_pretty(value)
        .map(|s| s + "\n")
        .map_err(|e| Failure::new("serialization", e.to_string()))
}

fn to_csv_row<T: Serialize>(value: &T) -> Result<String, Failure> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.serialize(value)
        .map_err(|e| Failure::new("serialization", e.to_string()))?;
    let bytes = w.into_inner().map_err(|e| Failure::new("io", e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Failure::new("serialization", e.to_string()))
}

/// Writes to `--out` if given, else stdout.
fn emit(p: &Params, text: &str) -> Result<(), Failure> {
    match &p.out {
        Some(path) => fs::write(path, text).map_err(|e| Failure::new("io", format!("{}: {e}", path.display()))),
        None => io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| Failure::new("io", e.to_string())),
    }
}

fn emit_structured<T: Serialize>(p: &Params, value: &T) -> Result<(), Failure> {
    let text = match p.format() {
        Format::Json => to_json(value)?,
        Format::Csv => to_csv_row(value)?,
    };
    emit(p, &text)
}

fn json_only(p: &Params, what: &str) -> Result<(), Failure> {
    if p.format() == Format::Csv {
        return Err(Failure::new(
            "usage",
            format!("{what} has no CSV form; use --format json"),
        ));
    }
    Ok(())
}

fn verification_plan(p: &Params, model: &RobustnessModel) -> Result<Plan, Failure> {
    let plan = if p.allpass() {
        plan_allpass(model, p.eta(), p.delta())?
    } else {
        plan_verification(model, p.eta(), p.eps1(), p.delta())?
    };
    Ok(Plan::Verification(match p.n {
        Some(n) => plan.with_copies(n),
        None => plan,
    }))
}

fn certification_plan(p: &Params, model: &RobustnessModel) -> Result<Plan, Failure> {
    let plan = plan_certification(model, p.eta_c(), p.mu(), p.eps1(), p.delta())?;
    Ok(Plan::Certification(match p.n {
        Some(n) => plan.with_copies(n),
        None => plan,
    }))
}

fn load_source(p: &Params, setup: &GameSetup, copies: u64) -> Result<SourceModel, Failure> {
    let text = p
        .source
        .as_deref()
        .ok_or_else(|| Failure::new("usage", "--source is required"))?;
    let spec = if Path::new(text).is_file() {
        let mut spec: SourceSpec = read_json(Path::new(text))?;
        let repeats_only = match &spec.kind {
            SourceKindSpec::Iid { .. } => true,
            SourceKindSpec::Mixture { branches, .. } => branches.iter().all(|b| matches!(b, BranchSpec::Repeat(_))),
            _ => false,
        };
        if spec.n.is_none() && repeats_only {
            spec.n = Some(copies as usize);
        }
        spec
    } else {
        SourceSpec::parse_shorthand(text, Some(copies as usize))?
    };
    Ok(make_source(&spec, setup.target.as_ref())?)
}

pub fn bound(p: &Params) -> Result<u8, Failure> {
    let setup = setup_game(p)?;
    let eps2 = match p.eps2 {
        Some(e) => e,
        None => {
            let c = setup.model.c()?;
            match p.mu {
                Some(mu) => c * p.eta_c() * (1.0 - mu),
                None => c * p.eta(),
            }
        }
    };
    let report = bound_report(setup.model.p_qm, p.eps1(), eps2, p.delta(), p.mu)?;
    emit_structured(p, &report)?;
    Ok(EXIT_OK)
}

pub fn plan(p: &Params, protocol: ProtocolArg) -> Result<u8, Failure> {
    json_only(p, "a plan")?;
    let setup = setup_game(p)?;
    let plan = match protocol {
        ProtocolArg::Verification => verification_plan(p, &setup.model)?,
        ProtocolArg::Certification => certification_plan(p, &setup.model)?,
    };
    emit(p, &to_json(&plan)?)?;
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct RunReport<'a> {
    seed: u64,
    plan: &'a Plan,
    verdict: &'a qverify_core::Verdict,
    realized_branch: Option<usize>,
}

#[derive(Serialize)]
struct McReport<'a> {
    seed: u64,
    plan: &'a Plan,
    tail_bound: f64,
    estimate: McEstimate,
}

pub fn run(p: &Params, protocol: ProtocolArg) -> Result<u8, Failure> {
    let setup = setup_game(p)?;
    let plan = match protocol {
        ProtocolArg::Verification => verification_plan(p, &setup.model)?,
        ProtocolArg::Certification => certification_plan(p, &setup.model)?,
    };
    let source = load_source(p, &setup, plan.copies())?;
    let bound = source.bind(&setup.game, setup.strategy.as_ref())?;

    if p.trials() > 1 {
        let estimate = mc_pass_estimate(&plan, &bound, p.trials(), p.seed(), p.workers())?;
        match p.format() {
            Format::Json => emit(
                p,
                &to_json(&McReport {
                    seed: p.seed(),
                    plan: &plan,
                    tail_bound: plan.tail_bound()?,
                    estimate,
                })?,
            )?,
            Format::Csv => emit(p, &to_csv_row(&estimate)?)?,
        }
        return Ok(EXIT_OK);
    }

    let (transcript, verdict) = plan.run(&bound, p.seed())?;
    let parties = setup.game.parties();
    if let Some(path) = &p.transcript {
        transcript.write_csv(parties, create(path)?)?;
    }
    match p.format() {
        Format::Json => emit(
            p,
            &to_json(&RunReport {
                seed: p.seed(),
                plan: &plan,
                verdict: &verdict,
                realized_branch: transcript.realized_branch,
            })?,
        )?,
        Format::Csv => {
            let mut buf = Vec::new();
            transcript.write_csv(parties, &mut buf)?;
            emit(p, &String::from_utf8_lossy(&buf))?;
        }
    }
    Ok(if verdict.success() { EXIT_OK } else { EXIT_INCONCLUSIVE })
}

fn create(path: &PathBuf) -> Result<File, Failure> {
    File::create(path).map_err(|e| Failure::new("io", format!("{}: {e}", path.display())))
}

#[derive(Serialize)]
struct OracleReport {
    protocol: &'static str,
    n: u64,
    p1: f64,
    p2: f64,
    mu: Option<f64>,
    /// Prior-weighted mean round success of the source.
    mean_success: f64,
    exact_probability: f64,
    tail_bound: f64,
    /// Every branch averages at most p2, so the bound must hold.
    bound_applies: bool,
    slack: f64,
}

pub fn oracle(p: &Params, protocol: ProtocolArg) -> Result<u8, Failure> {
    let setup = setup_game(p)?;
    let plan = match protocol {
        ProtocolArg::Verification => verification_plan(p, &setup.model)?,
        ProtocolArg::Certification => certification_plan(p, &setup.model)?,
    };
    let n = plan.copies();
    let source = load_source(p, &setup, n)?;
    let bound = source.bind(&setup.game, setup.strategy.as_ref())?;
    let (p1, p2, mu) = match &plan {
        Plan::Verification(v) => (v.p1, v.p2, None),
        Plan::Certification(c) => (c.p1, c.p2, Some(c.mu)),
    };

    let mut exact = 0.0;
    let mut mean = 0.0;
    let mut worst_branch_mean = f64::NEG_INFINITY;
    for (b, &w) in source.weights().iter().enumerate() {
        let probs = (0..n as usize)
            .map(|j| bound.branch_round_success(b, j))
            .collect::<qverify_core::Result<Vec<f64>>>()?;
        let branch_mean = probs.iter().sum::<f64>() / probs.len() as f64;
        let pass = match mu {
            None => exact_pass_probability(&probs, p1)?,
            Some(mu) => exact_certification_pass_probability(&probs, mu, p1)?,
        };
        exact += w * pass;
        mean += w * branch_mean;
        worst_branch_mean = worst_branch_mean.max(branch_mean);
    }
    let tail_bound = plan.tail_bound()?;
    let report = OracleReport {
        protocol: match protocol {
            ProtocolArg::Verification => "verification",
            ProtocolArg::Certification => "certification",
        },
        n,
        p1,
        p2,
        mu,
        mean_success: mean,
        exact_probability: exact,
        tail_bound,
        bound_applies: worst_branch_mean <= p2 + 1e-12,
        slack: tail_bound - exact,
    };
    emit_structured(p, &report)?;
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct FigureReport {
    figure: String,
    rows: usize,
    csv: PathBuf,
    sidecar: PathBuf,
}

pub fn figure(p: &Params, id: &str) -> Result<u8, Failure> {
    let figure_id: FigureId = id.parse()?;
    let mut spec = FigureSpec::default_for(figure_id);
    if p.c_tilde.is_some() {
        return Err(Failure::new("usage", "figures take --c, not --c-tilde"));
    }
    spec.c = p.c.unwrap_or(spec.c);
    spec.nu = p.nu.unwrap_or(spec.nu);
    spec.delta = p.delta.unwrap_or(spec.delta);
    spec.mu = p.mu.unwrap_or(spec.mu);
    spec.p1 = p.p1.unwrap_or(spec.p1);
    spec.n_min = p.n_min.unwrap_or(spec.n_min);
    spec.n_max = p.n_max.unwrap_or(spec.n_max);
    spec.n_step = p.n_step.unwrap_or(spec.n_step);
    if let Some(etas) = &p.etas {
        spec.etas = etas.clone();
    }
    let dir = p.out.clone().unwrap_or_else(|| PathBuf::from("."));
    let rows = figure_dataset(&spec)?.rows.len();
    let csv = write_figure(&spec, &dir)?;
    let report = FigureReport {
        figure: figure_id.to_string(),
        rows,
        sidecar: csv.with_extension("json"),
        csv,
    };
    io::stdout()
        .write_all(to_json(&report)?.as_bytes())
        .map_err(|e| Failure::new("io", e.to_string()))?;
    Ok(EXIT_OK)
}
