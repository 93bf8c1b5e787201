use std::io::{self, BufRead, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand};
use fsmforge::frontend::parse_json_in;
use fsmforge::sim::{parse_step, ScenarioRunner, StepReport};
use fsmforge::{
    emit_dsl, emit_json, generate, parse_dsl_with_sources, validate_with_sources, weave, ContractModel, Diagnostic,
    PluginConfig, Severity, SimConfig, SourceMap,
};

/// Compile FSM contract models to Solidity and simulate them.
#[derive(Parser)]
#[command(name = "fsmforge", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and validate a model.
    Check { file: PathBuf },
    /// Generate Solidity.
    Gen {
        file: PathBuf,
        /// Comma-separated plugins; overrides the file's plugins block.
        #[arg(long)]
        plugins: Option<String>,
        /// Output path, `-` for stdout.
        #[arg(short = 'o', long = "out", default_value = "-")]
        out: String,
    },
    /// Run a scenario script against a model.
    Sim {
        file: PathBuf,
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        plugins: Option<String>,
    },
    /// Read scenario lines from stdin, one at a time.
    Repl {
        file: PathBuf,
        #[arg(long)]
        plugins: Option<String>,
        #[arg(long, default_value = "deployer")]
        deployer: String,
    },
    /// Rewrite a model file in canonical form.
    Fmt { file: PathBuf },
    /// List the bundled example files.
    Examples {
        /// Write the files into this directory.
        #[arg(long)]
        extract: Option<PathBuf>,
    },
}

enum Fail {
    Diagnostics,
    Usage(String),
}

type Run = Result<(), Fail>;

struct Ui {
    color: bool,
}

impl Ui {
    fn from_env() -> Self {
        Self {
            color: std::env::var("FSMFORGE_COLOR").is_ok_and(|v| v == "1"),
        }
    }

    fn diagnostic(&self, d: &Diagnostic, file: &str) {
        let line = d.render(file);
        if !self.color {
            eprintln!("{line}");
            return;
        }
        let paint = match d.severity {
            Severity::Error => "\x1b[31m",
            Severity::Warning => "\x1b[33m",
        };
        let (word, rest) = line.split_once(' ').unwrap_or((&line, ""));
        eprintln!("{paint}{word}\x1b[0m {rest}");
    }

    fn diagnostics(&self, diags: &[Diagnostic], file: &str) {
        for d in diags {
            self.diagnostic(d, file);
        }
    }
}

#[derive(Clone, Copy)]
enum Format {
    Dsl,
    Json,
}

fn format_of(path: &Path) -> Result<Format, Fail> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("fsm") => Ok(Format::Dsl),
        Some("json") => Ok(Format::Json),
        _ => Err(Fail::Usage(format!(
            "{}: unknown extension (expected .fsm or .json)",
            path.display()
        ))),
    }
}

fn read(path: &Path) -> Result<String, Fail> {
    std::fs::read_to_string(path).map_err(|e| Fail::Usage(format!("{}: {e}", path.display())))
}

struct Loaded {
    model: ContractModel,
    sources: Option<SourceMap>,
    name: String,
}

fn parse(ui: &Ui, path: &Path) -> Result<Loaded, Fail> {
    let format = format_of(path)?;
    let text = read(path)?;
    let name = path.display().to_string();
    let parsed = match format {
        Format::Dsl => parse_dsl_with_sources(&text, &name).map(|(m, s)| (m, Some(s))),
        Format::Json => parse_json_in(&text, &name).map(|m| (m, None)),
    };
    match parsed {
        Ok((model, sources)) => Ok(Loaded { model, sources, name }),
        Err(diags) => {
            ui.diagnostics(&diags, &name);
            Err(Fail::Diagnostics)
        }
    }
}

fn plugin_override(list: Option<&str>) -> Result<Option<PluginConfig>, Fail> {
    list.map(|l| PluginConfig::from_list(l).map_err(Fail::Usage))
        .transpose()
}

/// Parse, apply a plugin override and validate; errors stop the pipeline.
fn load_checked(ui: &Ui, path: &Path, plugins: Option<&str>) -> Result<ContractModel, Fail> {
    let over = plugin_override(plugins)?;
    let mut loaded = parse(ui, path)?;
    if let Some(p) = over {
        loaded.model.plugins = p;
    }
    let diags = validate_with_sources(&loaded.model, loaded.sources.as_ref());
    ui.diagnostics(&diags, &loaded.name);
    if diags.iter().any(Diagnostic::is_error) {
        return Err(Fail::Diagnostics);
    }
    Ok(loaded.model)
}

fn check(ui: &Ui, file: &Path) -> Run {
    load_checked(ui, file, None).map(|_| ())
}

fn gen(ui: &Ui, file: &Path, plugins: Option<&str>, out: &str) -> Run {
    let model = load_checked(ui, file, plugins)?;
    let text = generate(&weave(&model));
    if out == "-" {
        io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| Fail::Usage(e.to_string()))
    } else {
        std::fs::write(out, text).map_err(|e| Fail::Usage(format!("{out}: {e}")))
    }
}

fn sim(ui: &Ui, file: &Path, scenario: &Path, plugins: Option<&str>) -> Run {
    let script = read(scenario)?;
    let model = load_checked(ui, file, plugins)?;
    let report = fsmforge::sim::run_scenario_with(Arc::new(weave(&model)), &script)
        .map_err(|e| Fail::Usage(format!("{}: {}: {e}", scenario.display(), e.code())))?;
    println!("{report}");
    for failure in report.failures() {
        eprintln!("{}: step {} failed: {}", scenario.display(), failure.index, failure);
    }
    if report.passed() {
        Ok(())
    } else {
        Err(Fail::Diagnostics)
    }
}

fn describe(report: &StepReport) -> String {
    let mut out = String::new();
    if let Some(outcome) = &report.outcome {
        let (head, tail) = outcome.split_once(' ').unwrap_or((outcome, ""));
        let kind = match head {
            "ok" => "Executed".to_string(),
            other => format!("Reverted({})", other.trim_start_matches("revert:")),
        };
        out.push_str(&kind);
        if !tail.is_empty() {
            out.push(' ');
            out.push_str(tail);
        }
    } else {
        out.push_str(if report.ok { "ok" } else { "failed" });
    }
    if let Some(m) = &report.message {
        out.push_str(": ");
        out.push_str(m);
    }
    out
}

fn repl(ui: &Ui, file: &Path, plugins: Option<&str>, deployer: &str) -> Run {
    let model = load_checked(ui, file, plugins)?;
    let config = SimConfig {
        deployer: deployer.to_string(),
        ..SimConfig::default()
    };
    let mut runner = ScenarioRunner::new(Arc::new(weave(&model)), &config)
        .map_err(|e| Fail::Usage(e.to_string()))?;
    let mut stdout = io::stdout();
    for (i, line) in io::stdin().lock().lines().enumerate() {
        let line = line.map_err(|e| Fail::Usage(e.to_string()))?;
        let text = line.trim();
        if text == "quit" || text == "exit" {
            break;
        }
        match parse_step(&line) {
            Ok(None) => continue,
            Ok(Some(step)) => {
                let report = runner.exec(i + 1, text, &step);
                let _ = writeln!(stdout, "{}", describe(&report));
                let _ = writeln!(stdout, "{}", report.snapshot);
            }
            Err(message) => eprintln!("E_SCENARIO_SYNTAX: {message}"),
        }
        let _ = stdout.flush();
    }
    Ok(())
}

fn fmt(ui: &Ui, file: &Path) -> Run {
    let format = format_of(file)?;
    let loaded = parse(ui, file)?;
    let text = match format {
        Format::Dsl => emit_dsl(&loaded.model),
        Format::Json => emit_json(&loaded.model),
    };
    std::fs::write(file, text).map_err(|e| Fail::Usage(format!("{}: {e}", file.display())))
}

fn examples(extract: Option<&Path>) -> Run {
    let Some(dir) = extract else {
        for (name, _) in fsmforge::corpus::FILES {
            println!("{name}");
        }
        return Ok(());
    };
    std::fs::create_dir_all(dir).map_err(|e| Fail::Usage(format!("{}: {e}", dir.display())))?;
    for (name, text) in fsmforge::corpus::FILES {
        let path = dir.join(name);
        std::fs::write(&path, text).map_err(|e| Fail::Usage(format!("{}: {e}", path.display())))?;
        println!("{}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let ui = Ui::from_env();
    let result = match &cli.command {
        Command::Check { file } => check(&ui, file),
        Command::Gen { file, plugins, out } => gen(&ui, file, plugins.as_deref(), out),
        Command::Sim {
            file,
            scenario,
            plugins,
        } => sim(&ui, file, scenario, plugins.as_deref()),
        Command::Repl {
            file,
            plugins,
            deployer,
        } => repl(&ui, file, plugins.as_deref(), deployer),
        Command::Fmt { file } => fmt(&ui, file),
        Command::Examples { extract } => examples(extract.as_deref()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Fail::Diagnostics) => ExitCode::from(1),
        Err(Fail::Usage(message)) => {
            eprintln!("error: {message}");
            ExitCode::from(2)
        }
    }
}

