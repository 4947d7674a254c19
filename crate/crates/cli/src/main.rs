mod report;
mod session;

use cadenza_core::evaluation::{run_scenario, EvalError, Scenario};
use cadenza_core::llm_bridge::{
    request_structure, ChatSession, HttpTransport, LlmError, ReplayTransport, Transport,
    DEFAULT_ENDPOINT, DEFAULT_MODEL,
};
use cadenza_core::pipeline::{diff_sections, render, GenerationConfig, PipelineError, RenderCache};
use cadenza_core::schema::{parse_composition, Composition, SchemaError};
use clap::{ArgGroup, Args, Parser, Subcommand};
use session::SessionFile;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use thiserror::Error;

#[derive(Parser)]
#[command(
    name = "cadenza",
    version,
    about = "Compose multi-track MIDI from a JSON song description"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Render a composition to MIDI.
    Generate(GenerateArgs),
    /// Revise a saved session and re-render only the sections that changed.
    Edit(EditArgs),
    /// Run an evaluation scenario and write a metrics report.
    Eval(EvalArgs),
}

#[derive(Args)]
struct LlmArgs {
    /// Chat model identifier.
    #[arg(long, default_value = DEFAULT_MODEL)]
    model: String,
    /// Chat-completion endpoint.
    #[arg(long, default_value = DEFAULT_ENDPOINT)]
    endpoint: String,
    /// JSON array of recorded replies to use instead of the network.
    #[arg(long, value_name = "FILE")]
    llm_replay: Option<PathBuf>,
}

#[derive(Args)]
#[command(group(ArgGroup::new("source").required(true).args(["prompt", "spec"])))]
struct GenerateArgs {
    /// Ask the language model for a composition.
    #[arg(long)]
    prompt: Option<String>,
    /// Composition JSON file.
    #[arg(long, value_name = "FILE")]
    spec: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output MIDI path; defaults to `<name>.mid`.
    #[arg(short = 'o', long = "output", value_name = "FILE")]
    output: Option<PathBuf>,
    /// Generation settings (TOML or JSON).
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Save the conversation, composition and rendered passes here.
    #[arg(long, value_name = "FILE")]
    session: Option<PathBuf>,
    #[command(flatten)]
    llm: LlmArgs,
}

#[derive(Args)]
#[command(group(ArgGroup::new("source").required(true).args(["prompt", "spec"])))]
struct EditArgs {
    /// Session file written by `generate --session` or an earlier edit.
    #[arg(long, value_name = "FILE", required = true)]
    session: PathBuf,
    /// Follow-up request for the language model.
    #[arg(long)]
    prompt: Option<String>,
    /// Replacement composition JSON file.
    #[arg(long, value_name = "FILE")]
    spec: Option<PathBuf>,
    /// Overrides the seed stored in the session.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(short = 'o', long = "output", value_name = "FILE")]
    output: Option<PathBuf>,
    /// Overrides the settings stored in the session.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    #[command(flatten)]
    llm: LlmArgs,
}

#[derive(Args)]
struct EvalArgs {
    /// prompt_driven, focused or randomized.
    #[arg(long)]
    scenario: Scenario,
    /// Number of songs.
    #[arg(long, default_value_t = 20)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Generation settings (TOML or JSON).
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Report path (JSON); a CSV with per-song rows is written next to it.
    #[arg(short = 'o', long = "output", value_name = "FILE")]
    output: Option<PathBuf>,
    /// Prompts for the prompt-driven scenario, one per line.
    #[arg(long, value_name = "FILE")]
    prompts: Option<PathBuf>,
    #[command(flatten)]
    llm: LlmArgs,
}

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("composition rejected: {0}")]
    Schema(#[from] SchemaError),
    #[error("language model: {0}")]
    Llm(LlmError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("configuration: {0}")]
    Config(String),
    #[error("{0}")]
    Internal(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Internal(_) => 1,
            CliError::Usage(_) => 2,
            CliError::Schema(_) => 3,
            CliError::Llm(_) => 4,
            CliError::Io { .. } => 5,
            CliError::Config(_) => 6,
        }
    }

    fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

impl From<LlmError> for CliError {
    fn from(e: LlmError) -> Self {
        match e {
            LlmError::MissingCredentials => CliError::Config(e.to_string()),
            e => CliError::Llm(e),
        }
    }
}

impl From<PipelineError> for CliError {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::Spec(_) | PipelineError::Drums(_) => CliError::Config(e.to_string()),
            e => CliError::Internal(e.to_string()),
        }
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::Pipeline(p) => p.into(),
            EvalError::Schema { .. } => CliError::Internal(e.to_string()),
            EvalError::Source { .. } => CliError::Llm(LlmError::Transport(e.to_string())),
            EvalError::MissingSource => CliError::Config(e.to_string()),
            e => CliError::Internal(e.to_string()),
        }
    }
}

fn read_text(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    std::fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

fn load_config(path: Option<&Path>) -> Result<GenerationConfig, CliError> {
    let Some(path) = path else {
        return Ok(GenerationConfig::default());
    };
    let text = read_text(path)?;
    let is_json = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("json"));
    let config: GenerationConfig = if is_json {
        serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?
    } else {
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?
    };
    config.validate()?;
    Ok(config)
}

fn transport(llm: &LlmArgs) -> Result<Box<dyn Transport>, CliError> {
    match &llm.llm_replay {
        Some(path) => {
            let replies: Vec<String> = serde_json::from_str(&read_text(path)?).map_err(|e| {
                CliError::Config(format!(
                    "{}: expected a JSON array of strings: {e}",
                    path.display()
                ))
            })?;
            Ok(Box::new(ReplayTransport::new(replies)))
        }
        None => Ok(Box::new(HttpTransport::from_env(&llm.endpoint)?)),
    }
}

fn slug(name: &str) -> String {
    let s: String = name
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() {
                c.to_ascii_lowercase()
            } else {
                '_'
            }
        })
        .collect();
    let s = s.trim_matches('_').to_string();
    if s.is_empty() {
        "song".into()
    } else {
        s
    }
}

fn output_path(given: Option<&PathBuf>, composition: &Composition) -> PathBuf {
    given
        .cloned()
        .unwrap_or_else(|| PathBuf::from(format!("{}.mid", slug(&composition.name))))
}

/// Writes the MIDI file, the JSON report and the fitness CSV.
fn write_outputs(
    out: &Path,
    composition: &Composition,
    seed: u64,
    config: &GenerationConfig,
    rendering: &cadenza_core::pipeline::Rendering,
) -> Result<(), CliError> {
    write_bytes(out, &rendering.midi)?;
    let report = report::GenerationReport::new(composition, seed, config, out, rendering);
    let json =
        serde_json::to_string_pretty(&report).map_err(|e| CliError::Internal(e.to_string()))?;
    write_bytes(&out.with_extension("report.json"), json.as_bytes())?;
    write_bytes(
        &out.with_extension("fitness.csv"),
        report::fitness_csv(composition, rendering).as_bytes(),
    )?;
    eprintln!(
        "wrote {} ({} bytes, {} passes, {} generated)",
        out.display(),
        rendering.midi.len(),
        rendering.passes.len(),
        rendering.regenerated.len()
    );
    Ok(())
}

fn cmd_generate(args: GenerateArgs) -> Result<(), CliError> {
    let config = load_config(args.config.as_deref())?;
    let mut chat = None;
    let text = match (&args.spec, &args.prompt) {
        (Some(path), _) => read_text(path)?,
        (None, Some(prompt)) => {
            let mut t = transport(&args.llm)?;
            let mut session = ChatSession::new(&args.llm.model);
            let text = request_structure(&mut session, t.as_mut(), prompt)?;
            chat = Some(session);
            text
        }
        (None, None) => {
            return Err(CliError::Usage(
                "either --spec or --prompt is required".into(),
            ))
        }
    };
    let composition = parse_composition(&text)?;
    let mut cache = RenderCache::default();
    let rendering = render(&composition, args.seed, &config, Some(&mut cache))?;
    let out = output_path(args.output.as_ref(), &composition);
    write_outputs(&out, &composition, args.seed, &config, &rendering)?;
    if let Some(path) = &args.session {
        let file = SessionFile::new(args.seed, config, chat, &composition, cache);
        write_bytes(path, file.to_json().as_bytes())?;
    }
    Ok(())
}

fn cmd_edit(args: EditArgs) -> Result<(), CliError> {
    let text =
        std::fs::read_to_string(&args.session).map_err(|e| CliError::io(&args.session, e))?;
    let mut file = SessionFile::from_json(&text)
        .map_err(|e| CliError::Config(format!("{}: {e}", args.session.display())))?;
    let old = parse_composition(&file.composition)?;
    if let Some(seed) = args.seed {
        file.seed = seed;
    }
    if args.config.is_some() {
        file.config = load_config(args.config.as_deref())?;
    }
    let text = match (&args.spec, &args.prompt) {
        (Some(path), _) => read_text(path)?,
        (None, Some(prompt)) => {
            let chat = file
                .chat
                .get_or_insert_with(|| ChatSession::new(&args.llm.model));
            // Earlier turns are replayed; a session started from a file gets its
            // composition as the first exchange so the model can revise it.
            if chat.turns.is_empty() {
                chat.turns.push(cadenza_core::llm_bridge::Turn {
                    user: "Here is the current song.".into(),
                    assistant: file.composition.clone(),
                });
            }
            let mut t = transport(&args.llm)?;
            request_structure(chat, t.as_mut(), prompt)?
        }
        (None, None) => {
            return Err(CliError::Usage(
                "either --spec or --prompt is required".into(),
            ))
        }
    };
    let composition = parse_composition(&text)?;
    let changed = diff_sections(&old, &composition);
    eprintln!(
        "changed sections: {}",
        if changed.is_empty() {
            "none".to_string()
        } else {
            changed.join(", ")
        }
    );
    let rendering = render(&composition, file.seed, &file.config, Some(&mut file.cache))?;
    let out = output_path(args.output.as_ref(), &composition);
    write_outputs(&out, &composition, file.seed, &file.config, &rendering)?;
    file.composition = composition.to_json();
    write_bytes(&args.session, file.to_json().as_bytes())
}

const DEFAULT_PROMPTS: [&str; 6] = [
    "a calm piano ballad about the sea",
    "an upbeat funk tune with a busy bass line",
    "a dark cinematic piece in a minor key that builds to a climax",
    "an epic 7/8 metal track",
    "a gentle waltz for strings",
    "a happy pop song with a catchy chorus",
];

fn cmd_eval(args: EvalArgs) -> Result<(), CliError> {
    let config = load_config(args.config.as_deref())?;
    let report = if args.scenario == Scenario::PromptDriven {
        let prompts: Vec<String> = match &args.prompts {
            Some(path) => read_text(path)?
                .lines()
                .map(str::trim)
                .filter(|l| !l.is_empty())
                .map(String::from)
                .collect(),
            None => DEFAULT_PROMPTS.iter().map(|s| s.to_string()).collect(),
        };
        if prompts.is_empty() {
            return Err(CliError::Usage("the prompt file is empty".into()));
        }
        let mut t = transport(&args.llm)?;
        let model = args.llm.model.clone();
        let mut source = |i: usize| {
            let mut session = ChatSession::new(&model);
            request_structure(&mut session, t.as_mut(), &prompts[i % prompts.len()])
                .map_err(|e| e.to_string())
        };
        run_scenario(args.scenario, args.n, args.seed, &config, Some(&mut source))?
    } else {
        run_scenario(args.scenario, args.n, args.seed, &config, None)?
    };
    let out = args
        .output
        .unwrap_or_else(|| PathBuf::from(format!("eval_{}.json", args.scenario)));
    let json =
        serde_json::to_string_pretty(&report).map_err(|e| CliError::Internal(e.to_string()))?;
    write_bytes(&out, json.as_bytes())?;
    write_bytes(&out.with_extension("csv"), report.to_csv().as_bytes())?;
    for (name, s) in [
        ("pitch class entropy", report.pitch_class_entropy),
        ("scale consistency (%)", report.scale_consistency),
        ("groove consistency (%)", report.groove_consistency),
    ] {
        println!("{name}: {:.3} ± {:.3} (n = {})", s.mean, s.ci95, s.n);
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Generate(a) => cmd_generate(a),
        Command::Edit(a) => cmd_edit(a),
        Command::Eval(a) => cmd_eval(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
