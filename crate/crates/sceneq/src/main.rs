//! Command line for the scene question toolkit: ingest and check scene
//! annotations, inspect derived spatial relations, generate question sets,
//! and score prediction files against them.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use sceneq::complexity::DifficultyTier;
use sceneq::config::{GenConfig, Scope};
use sceneq::eval::{
    predictions_from_str, questions_from_str, score, EvalReport, StepScoring, TierReport,
};
use sceneq::generator::{Engine, GeneratedQuestion};
use sceneq::geometry::VerticalDirection;
use sceneq::scene::{scene_from_str, segment_slots, validate, SceneAnnotation};
use sceneq::stgraph::{build_graph, EdgePayload};

#[derive(Parser)]
#[command(
    name = "sceneq",
    version,
    about = "Synthesizes and scores grounded questions over annotated crowd scenes"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse scene annotations and report every violation found.
    Ingest(IngestArgs),
    /// List the spatial relations derived from a scene.
    Relate(RelateArgs),
    /// Generate questions with programs, workflows and answers.
    Generate(GenerateArgs),
    /// Score a prediction file against a generated question file.
    Evaluate(EvaluateArgs),
    /// Summarize a generated question file.
    Stats(StatsArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ListFormat {
    Table,
    Jsonl,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ReportFormat {
    Table,
    Json,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum StepMode {
    Independent,
    Conditioned,
}

#[derive(Args)]
struct IngestArgs {
    /// Scene annotation files.
    #[arg(required = true)]
    scenes: Vec<PathBuf>,
    #[arg(long, value_enum, default_value_t = ListFormat::Table)]
    format: ListFormat,
}

#[derive(Args)]
struct RelateArgs {
    /// Scene annotation file.
    #[arg(long)]
    scene: PathBuf,
    /// Generation config; controls slot segmentation and edge thresholds.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = ListFormat::Table)]
    format: ListFormat,
    /// Write here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GenerateArgs {
    /// Scene annotation file.
    #[arg(long)]
    scene: PathBuf,
    /// Generation config file; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// How many questions to attempt.
    #[arg(long, default_value_t = 20)]
    n: usize,
    /// Difficulty preset (d1, d2 or d3); overrides the configured scopes.
    #[arg(long)]
    tier: Option<DifficultyTier>,
    /// Write the questions here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the generation report here.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Draft questions across threads; output is identical either way.
    #[arg(long)]
    parallel: bool,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Generated question file (JSON array or JSON lines).
    #[arg(long)]
    questions: PathBuf,
    /// Prediction file (JSON array or JSON lines).
    #[arg(long)]
    predictions: PathBuf,
    /// How per-step boxes are credited.
    #[arg(long, value_enum, default_value_t = StepMode::Independent)]
    mode: StepMode,
    #[arg(long, value_enum, default_value_t = ReportFormat::Table)]
    format: ReportFormat,
    /// Write here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct StatsArgs {
    /// Generated question file (JSON array or JSON lines).
    #[arg(long)]
    questions: PathBuf,
    #[arg(long, value_enum, default_value_t = ReportFormat::Table)]
    format: ReportFormat,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Ingest(args) => run_ingest(args),
        Command::Relate(args) => run_relate(args),
        Command::Generate(args) => run_generate(args),
        Command::Evaluate(args) => run_evaluate(args),
        Command::Stats(args) => run_stats(args),
    };
    match result {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}

fn run_ingest(args: IngestArgs) -> Result<ExitCode> {
    let mut all_ok = true;
    for path in &args.scenes {
        let shown = path.display();
        let outcome = fs::read_to_string(path)
            .map_err(|e| e.to_string())
            .and_then(|text| {
                serde_json::from_str::<SceneAnnotation>(&text).map_err(|e| e.to_string())
            });
        match outcome {
            Err(err) => {
                all_ok = false;
                match args.format {
                    ListFormat::Table => println!("{shown}: unreadable: {err}"),
                    ListFormat::Jsonl => {
                        println!("{}", json!({"scene": shown.to_string(), "ok": false, "error": err}))
                    }
                }
            }
            Ok(scene) => {
                let report = validate(&scene);
                all_ok &= report.is_empty();
                match args.format {
                    ListFormat::Table => {
                        if report.is_empty() {
                            println!(
                                "{shown}: ok ({} entities, {} frames)",
                                scene.entities.len(),
                                scene.frames.len()
                            );
                        } else {
                            println!("{shown}: {} violation(s)", report.len());
                            for v in &report.violations {
                                println!("  {v}");
                            }
                        }
                    }
                    ListFormat::Jsonl => println!(
                        "{}",
                        json!({
                            "scene": shown.to_string(),
                            "scene_id": scene.scene_id,
                            "ok": report.is_empty(),
                            "entities": scene.entities.len(),
                            "frames": scene.frames.len(),
                            "violations": report.violations,
                        })
                    ),
                }
            }
        }
    }
    Ok(if all_ok { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}

fn run_relate(args: RelateArgs) -> Result<ExitCode> {
    let scene = read_scene(&args.scene)?;
    let cfg = load_config(args.config.as_deref())?;
    let slots = segment_slots(&scene, &cfg.slot_policy)?;
    let graph = build_graph(&scene, &slots, &cfg.relations);

    let mut lines = Vec::with_capacity(graph.spatial_edges.len());
    for e in &graph.spatial_edges {
        let line = match (&e.payload, args.format) {
            (EdgePayload::Geometric(p), ListFormat::Table) => {
                let vertical = match p.relation.vertical {
                    VerticalDirection::None => String::new(),
                    v => format!(" {}", v.name()),
                };
                format!(
                    "slot {}  {} -> {}  {}  theta {:.4}  dist {:.4}  {}{} {}",
                    e.slot,
                    e.from,
                    e.to,
                    e.kind.name(),
                    p.theta_deg,
                    p.distance_m,
                    p.relation.planar.name(),
                    vertical,
                    p.distance_cat.name(),
                )
            }
            (EdgePayload::Interaction(p), ListFormat::Table) => format!(
                "slot {}  {} -> {}  {}  {}",
                e.slot,
                e.from,
                e.to,
                e.kind.name(),
                p.verb,
            ),
            (EdgePayload::Geometric(p), ListFormat::Jsonl) => json!({
                "slot": e.slot,
                "from": e.from,
                "to": e.to,
                "kind": e.kind.name(),
                "theta_deg": round4(p.theta_deg),
                "distance_m": round4(p.distance_m),
                "planar": p.relation.planar.name(),
                "vertical": p.relation.vertical.name(),
                "distance": p.distance_cat.name(),
            })
            .to_string(),
            (EdgePayload::Interaction(p), ListFormat::Jsonl) => json!({
                "slot": e.slot,
                "from": e.from,
                "to": e.to,
                "kind": e.kind.name(),
                "verb": p.verb,
                "category": p.category,
                "difficulty": p.difficulty,
            })
            .to_string(),
        };
        lines.push(line);
    }

    let mut text = lines.join("\n");
    text.push('\n');
    write_out(args.out.as_deref(), &text)?;
    Ok(ExitCode::SUCCESS)
}

fn run_generate(args: GenerateArgs) -> Result<ExitCode> {
    let scene = read_scene(&args.scene)?;
    let mut cfg = load_config(args.config.as_deref())?;
    if let Some(tier) = args.tier {
        apply_tier(&mut cfg, tier)?;
    }

    let engine = Engine::new(&scene, cfg)?;
    let (questions, report) = if args.parallel {
        engine.generate_parallel(args.seed, args.n)
    } else {
        engine.generate(args.seed, args.n)
    };

    let mut payload = serde_json::to_string_pretty(&questions)?;
    payload.push('\n');
    write_out(args.out.as_deref(), &payload)?;
    if let Some(path) = &args.report {
        let mut text = serde_json::to_string_pretty(&report)?;
        text.push('\n');
        fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    }
    eprintln!(
        "generated {}/{} questions ({} unsatisfiable, {} deduplicated)",
        report.generated, report.requested, report.unsatisfiable, report.deduplicated
    );
    if report.generated == 0 && report.requested > 0 {
        bail!("no question was satisfiable for this scene and configuration");
    }
    Ok(ExitCode::SUCCESS)
}

fn run_evaluate(args: EvaluateArgs) -> Result<ExitCode> {
    let questions =
        questions_from_str(&read_to_string(&args.questions)?).map_err(anyhow::Error::msg)?;
    let predictions =
        predictions_from_str(&read_to_string(&args.predictions)?).map_err(anyhow::Error::msg)?;
    let mode = match args.mode {
        StepMode::Independent => StepScoring::Independent,
        StepMode::Conditioned => StepScoring::Conditioned,
    };
    let report = score(&questions, &predictions, mode)?;
    let text = match args.format {
        ReportFormat::Json => {
            let mut t = serde_json::to_string_pretty(&report)?;
            t.push('\n');
            t
        }
        ReportFormat::Table => render_eval(&report),
    };
    write_out(args.out.as_deref(), &text)?;
    Ok(ExitCode::SUCCESS)
}

fn run_stats(args: StatsArgs) -> Result<ExitCode> {
    let questions: Vec<GeneratedQuestion> =
        questions_from_str(&read_to_string(&args.questions)?).map_err(anyhow::Error::msg)?;

    let mut scenes = std::collections::BTreeSet::new();
    let mut per_task: std::collections::BTreeMap<&str, usize> = Default::default();
    let mut per_tier: std::collections::BTreeMap<&str, usize> = Default::default();
    let mut difficulty_sum = 0u64;
    let mut steps_sum = 0usize;
    let mut multi_interval = 0usize;
    for q in &questions {
        scenes.insert(q.scene_id.as_str());
        *per_task.entry(q.task.name()).or_default() += 1;
        *per_tier.entry(q.complexity.tier.name()).or_default() += 1;
        difficulty_sum += u64::from(q.complexity.d);
        steps_sum += q.workflow.len();
        multi_interval += usize::from(q.complexity.t > 1);
    }
    let n = questions.len();
    let mean = |sum: f64| if n == 0 { 0.0 } else { sum / n as f64 };

    match args.format {
        ReportFormat::Json => {
            let payload = json!({
                "questions": n,
                "scenes": scenes.len(),
                "per_task": per_task,
                "per_tier": per_tier,
                "mean_difficulty": mean(difficulty_sum as f64),
                "mean_steps": mean(steps_sum as f64),
                "multi_interval": multi_interval,
            });
            println!("{}", serde_json::to_string_pretty(&payload)?);
        }
        ReportFormat::Table => {
            println!("questions  {n}");
            println!("scenes     {}", scenes.len());
            let list = |m: &std::collections::BTreeMap<&str, usize>| {
                m.iter().map(|(k, v)| format!("{k} {v}")).collect::<Vec<_>>().join(", ")
            };
            println!("tasks      {}", list(&per_task));
            println!("tiers      {}", list(&per_tier));
            println!("difficulty {:.2} mean", mean(difficulty_sum as f64));
            println!("steps      {:.2} mean", mean(steps_sum as f64));
            println!("temporal   {multi_interval} multi-interval");
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn tier_line(label: &str, t: &TierReport) -> String {
    let mut line = format!(
        "{label}: {} questions, {} answered, {} correct, accuracy {:.3}",
        t.questions, t.answered, t.correct, t.accuracy
    );
    if let Some(iou) = t.mean_iou {
        line.push_str(&format!(", mean IoU {iou:.4}"));
    }
    line
}

fn render_eval(report: &EvalReport) -> String {
    let mut out = vec![tier_line("overall", &report.overall)];
    for (tier, t) in &report.per_tier {
        out.push(tier_line(&format!("tier {tier}"), t));
    }
    if let Some(curve) = &report.step_curve {
        let steps =
            curve.iter().map(|v| format!("{v:.3}")).collect::<Vec<_>>().join(" ");
        out.push(format!("step curve: {steps}"));
    }
    let mut text = out.join("\n");
    text.push('\n');
    text
}

fn apply_tier(cfg: &mut GenConfig, tier: DifficultyTier) -> Result<()> {
    let prefs = &mut cfg.preferences;
    prefs.temporal_scope = Scope::Single;
    match tier {
        DifficultyTier::D1 => prefs.spatial_scope = Scope::Single,
        DifficultyTier::D2 => prefs.spatial_scope = Scope::Pair,
        DifficultyTier::D3 => {
            prefs.spatial_scope = Scope::Clique;
            prefs.clique_size = 3;
        }
        DifficultyTier::Beyond => {
            bail!("`beyond` has no preset; widen the scopes in the config instead")
        }
    }
    Ok(())
}

fn round4(x: f64) -> f64 {
    (x * 10_000.0).round() / 10_000.0
}

fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn read_scene(path: &Path) -> Result<SceneAnnotation> {
    scene_from_str(&read_to_string(path)?)
        .with_context(|| format!("loading {}", path.display()))
}

fn load_config(path: Option<&Path>) -> Result<GenConfig> {
    match path {
        None => Ok(GenConfig::default()),
        Some(p) => serde_json::from_str(&read_to_string(p)?)
            .with_context(|| format!("parsing config {}", p.display())),
    }
}

fn write_out(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display()))?,
        None => print!("{text}"),
    }
    Ok(())
}
