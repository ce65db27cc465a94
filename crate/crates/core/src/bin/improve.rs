use std::fs;
use std::io::{self, Write as _};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::Serialize;

use improve_core::adversary::ExhaustiveAdversary;
use improve_core::dimensions::{DimensionKind, Dimensions};
use improve_core::engine::{
    check_transcript, play, run_game, AdversaryKind, GameConfig, Setting, Transcript,
};
use improve_core::gen::{generate, GenParams};
use improve_core::io::{instance_to_json, read_instance, transcript_to_json, tree_to_json};
use improve_core::learners::{AnyLearner, LearnerKind};
use improve_core::oracle::{certify_dimension, minimax_value};
use improve_core::response::TiePolicy;
use improve_core::Error;

/// Online learning with improving agents.
#[derive(Parser)]
#[command(name = "improve", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the dimensions of an instance.
    Dim {
        file: PathBuf,
        /// Only this kind (littlestone, il-binary, il-multiclass, bil, wil).
        #[arg(long)]
        kind: Option<DimensionKind>,
        /// Write a shattered tree of full depth for --kind to this file.
        #[arg(long, requires = "kind")]
        witness: Option<PathBuf>,
    },
    /// Play one game and report the learner's mistakes.
    Run(RunArgs),
    /// Compute the exact game value.
    Solve {
        file: PathBuf,
        #[arg(long, default_value = "binary-full")]
        setting: Setting,
    },
    /// Check that the game value equals the setting's dimension.
    Certify {
        file: PathBuf,
        #[arg(long, default_value = "binary-full")]
        setting: Setting,
    },
    /// Generate a random instance.
    Gen(GenArgs),
    /// Run every applicable setting on every instance in a directory.
    Verify {
        dir: PathBuf,
        /// Write the report as CSV here instead of stdout.
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Also write the report as JSON.
        #[arg(long)]
        json: Option<PathBuf>,
    },
}

#[derive(Args)]
struct RunArgs {
    file: PathBuf,
    /// JSON game config; flags given on the command line override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    setting: Option<Setting>,
    #[arg(long)]
    learner: Option<LearnerKind>,
    #[arg(long)]
    adversary: Option<AdversaryKind>,
    #[arg(long)]
    seed: Option<u64>,
    /// adversarial, lexicographic-min or seeded-random:SEED
    #[arg(long, value_parser = parse_tie_policy)]
    tie_policy: Option<TiePolicy>,
    #[arg(long)]
    horizon: Option<usize>,
    /// Write the transcript as JSON.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, default_value_t = 4)]
    nodes: usize,
    /// Most neighbors per node, not counting the node itself.
    #[arg(long, default_value_t = 2)]
    degree: usize,
    #[arg(long, default_value_t = 2)]
    labels: usize,
    #[arg(long, default_value_t = 8)]
    hyps: usize,
    #[arg(long)]
    weighted: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_tie_policy(s: &str) -> Result<TiePolicy, String> {
    match s {
        "adversarial" => Ok(TiePolicy::Adversarial),
        "lexicographic-min" | "lex-min" => Ok(TiePolicy::LexicographicMin),
        _ => s
            .strip_prefix("seeded-random:")
            .and_then(|n| n.parse().ok())
            .map(TiePolicy::SeededRandom)
            .ok_or_else(|| format!("unknown tie policy {s:?}")),
    }
}

/// Thrown when a check fails; maps to exit code 1 without an error message.
#[derive(Debug)]
struct Violation;

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("violation found")
    }
}

impl std::error::Error for Violation {}

fn load(path: &Path) -> anyhow::Result<Arc<Dimensions>> {
    let inst = read_instance(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(Arc::new(Dimensions::new(Arc::new(inst))))
}

fn emit(out: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn cmd_dim(file: &Path, kind: Option<DimensionKind>, witness: Option<&Path>) -> anyhow::Result<()> {
    let dims = load(file)?;
    let inst = dims.instance();
    let full = inst.full();
    let kinds: Vec<DimensionKind> = match kind {
        Some(k) => {
            dims.ensure_applies(k)?;
            vec![k]
        }
        None => DimensionKind::ALL
            .into_iter()
            .filter(|k| k.applies_to(inst))
            .collect(),
    };
    for k in &kinds {
        println!("{k}={}", dims.dim(*k, &full));
    }
    if let (Some(path), Some(k)) = (witness, kind) {
        let tree = dims.witness(k, &full).ok_or(Error::EmptyVersionSpace)?;
        let text = serde_json::to_string_pretty(&tree_to_json(inst, &tree))? + "\n";
        emit(Some(path), &text)?;
    }
    Ok(())
}

fn cmd_run(args: &RunArgs) -> anyhow::Result<()> {
    let mut config: GameConfig = match &args.config {
        Some(p) => serde_json::from_str(&fs::read_to_string(p)?)
            .map_err(|e| Error::Parse(format!("{}: {e}", p.display())))?,
        None => GameConfig::default(),
    };
    if let Some(s) = args.setting {
        config.setting = s;
    }
    config.learner = args.learner.or(config.learner);
    if let Some(a) = args.adversary {
        config.adversary = a;
    }
    if let Some(s) = args.seed {
        config.seed = s;
    }
    if let Some(t) = args.tie_policy {
        config.tie_policy = t;
    }
    config.horizon = args.horizon.or(config.horizon);

    let dims = load(&args.file)?;
    let inst = dims.instance();
    let t = play(&dims, &config)?;
    if let Some(out) = &args.out {
        let text = serde_json::to_string_pretty(&transcript_to_json(inst, &t))? + "\n";
        emit(Some(out), &text)?;
    }
    let dim = dims.dim(config.setting.dimension_kind(), &inst.full());
    println!(
        "learner={} adversary={} setting={} mistakes={} rounds={} dim={dim}",
        config.learner_kind().as_str(),
        config.adversary.as_str(),
        config.setting,
        t.mistakes,
        t.rounds.len()
    );
    let report = check_transcript(inst, &t);
    for v in &report.violations {
        eprintln!("transcript: {v}");
    }
    if report.is_clean() {
        Ok(())
    } else {
        Err(Violation.into())
    }
}

fn cmd_certify(file: &Path, setting: Setting) -> anyhow::Result<()> {
    let dims = load(file)?;
    let c = certify_dimension(&dims, setting)?;
    let verdict = if c.holds() { "EQUAL" } else { "DIFFERENT" };
    println!("value={} dim={} {verdict}", c.value, c.dim);
    if let Some(ce) = &c.counterexample {
        let inst = dims.instance();
        let names: Vec<&str> = ce
            .members
            .iter()
            .map(|&h| inst.hypothesis_name(h))
            .collect();
        eprintln!(
            "counterexample: version space {{{}}} has value {} but dimension {}",
            names.join(", "),
            ce.value,
            ce.dim
        );
    }
    if c.holds() {
        Ok(())
    } else {
        Err(Violation.into())
    }
}

fn cmd_gen(a: &GenArgs) -> anyhow::Result<()> {
    let inst = generate(&GenParams {
        nodes: a.nodes,
        degree: a.degree,
        labels: a.labels,
        hyps: a.hyps,
        weighted: a.weighted,
        seed: a.seed,
    })?;
    emit(a.out.as_deref(), &instance_to_json(&inst))
}

#[derive(Debug, Clone, Serialize)]
struct ReportRow {
    instance: String,
    setting: String,
    ldim: i32,
    kind: String,
    dim: i32,
    learner: String,
    adversary: String,
    mistakes: usize,
    oracle: Option<i32>,
    bound_ok: bool,
    note: String,
}

/// Mistakes of the setting's learner against the strongest adversary that
/// fits in memory: exhaustive search, falling back to the witness tree.
fn worst_case_game(
    dims: &Arc<Dimensions>,
    setting: Setting,
) -> improve_core::Result<(&'static str, Transcript)> {
    let config = GameConfig::for_setting(setting);
    let learner = AnyLearner::build(config.learner_kind(), dims.clone(), config.learner_options)?;
    let exhaustive = ExhaustiveAdversary::new(
        dims.instance().clone(),
        learner.clone(),
        TiePolicy::Adversarial,
    )
    .and_then(|mut adv| {
        let mut learner = learner;
        let opts = GameConfig {
            tie_policy: TiePolicy::Adversarial,
            ..config.clone()
        }
        .run_options();
        run_game(dims, &mut learner, &mut adv, &opts)
    });
    match exhaustive {
        Ok(t) => Ok(("exhaustive", t)),
        Err(Error::ResourceLimit(_)) => Ok((
            "tree",
            play(
                dims,
                &GameConfig {
                    adversary: AdversaryKind::Tree,
                    ..config
                },
            )?,
        )),
        Err(e) => Err(e),
    }
}

fn verify_instance(name: &str, dims: &Arc<Dimensions>) -> Vec<ReportRow> {
    let inst = dims.instance();
    let full = inst.full();
    let ldim = dims.ldim(&full);
    Setting::ALL
        .into_iter()
        .filter(|s| s.check(inst).is_ok())
        .map(|setting| {
            let kind = setting.dimension_kind();
            let dim = dims.dim(kind, &full);
            let mut row = ReportRow {
                instance: name.to_string(),
                setting: setting.to_string(),
                ldim,
                kind: kind.to_string(),
                dim,
                learner: setting.default_learner().as_str().to_string(),
                adversary: String::new(),
                mistakes: 0,
                oracle: None,
                bound_ok: false,
                note: String::new(),
            };
            let mut notes = Vec::new();
            match worst_case_game(dims, setting) {
                Ok((adversary, t)) => {
                    row.adversary = adversary.to_string();
                    row.mistakes = t.mistakes;
                    let report = check_transcript(inst, &t);
                    row.bound_ok = report.is_clean() && t.mistakes as i32 <= dim.max(0);
                    notes.extend(report.violations);
                }
                Err(e) => notes.push(e.to_string()),
            }
            match minimax_value(inst, setting) {
                Ok(v) => {
                    row.oracle = Some(v);
                    if v != dim {
                        row.bound_ok = false;
                        notes.push(format!("game value {v} differs from dimension {dim}"));
                    }
                }
                Err(Error::ResourceLimit(e)) => notes.push(format!("oracle skipped: {e}")),
                Err(e) => {
                    row.bound_ok = false;
                    notes.push(e.to_string());
                }
            }
            row.note = notes.join("; ");
            row
        })
        .collect()
}

fn cmd_verify(dir: &Path, csv_out: Option<&Path>, json_out: Option<&Path>) -> anyhow::Result<()> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("reading {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    files.sort();
    if files.is_empty() {
        bail!(Error::Parse(format!(
            "no .json instances in {}",
            dir.display()
        )));
    }
    let loaded: Vec<(String, Arc<Dimensions>)> = files
        .iter()
        .map(|p| {
            let name = p
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            load(p).map(|d| (name, d))
        })
        .collect::<anyhow::Result<_>>()?;
    let rows: Vec<ReportRow> = loaded
        .par_iter()
        .flat_map_iter(|(name, dims)| verify_instance(name, dims))
        .collect();

    let mut w = csv::Writer::from_writer(Vec::new());
    for r in &rows {
        w.serialize(r)?;
    }
    let table = String::from_utf8(w.into_inner()?)?;
    emit(csv_out, &table)?;
    if let Some(p) = json_out {
        emit(Some(p), &(serde_json::to_string_pretty(&rows)? + "\n"))?;
    }
    let bad = rows.iter().filter(|r| !r.bound_ok).count();
    eprintln!("{} rows, {bad} violations", rows.len());
    if bad == 0 {
        Ok(())
    } else {
        Err(Violation.into())
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.is::<Violation>() {
        return 1;
    }
    match err.downcast_ref::<Error>() {
        Some(Error::Parse(_) | Error::Invalid(_) | Error::Io(_) | Error::Json(_)) => 2,
        Some(_) => 1,
        None if err.is::<io::Error>() || err.is::<serde_json::Error>() => 2,
        None => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Dim {
            file,
            kind,
            witness,
        } => cmd_dim(file, *kind, witness.as_deref()),
        Command::Run(args) => cmd_run(args),
        Command::Solve { file, setting } => load(file).and_then(|dims| {
            println!("value={}", minimax_value(dims.instance(), *setting)?);
            Ok(())
        }),
        Command::Certify { file, setting } => cmd_certify(file, *setting),
        Command::Gen(args) => cmd_gen(args),
        Command::Verify { dir, csv, json } => cmd_verify(dir, csv.as_deref(), json.as_deref()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            if !e.is::<Violation>() {
                eprintln!("error: {e:#}");
            }
            ExitCode::from(exit_code(&e))
        }
    }
}
