use std::io::{self, BufRead, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use icpsdl::diagnostic::Diagnostic;
use icpsdl::lang::Session;
use icpsdl::session::DEFAULT_STATE_BUDGET;
use icpsdl::sim::{load_model, run_scenario, Outcome, Scenario};

#[derive(Parser)]
#[command(
    name = "icpsdl",
    version,
    about = "Describe, reason about and reconfigure industrial control loops"
)]
struct Cli {
    /// Directory for Mermaid diagrams.
    #[arg(long, global = true)]
    mermaid_dir: Option<PathBuf>,
    /// Configurations explored by the liveness checks.
    #[arg(long, global = true, default_value_t = DEFAULT_STATE_BUDGET)]
    state_budget: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Interactive session; reads one command per line.
    Repl,
    /// Evaluate a script.
    Run { script: PathBuf },
    /// Parse and validate a script without running the reasoning commands.
    Check { script: PathBuf },
    /// Run a supervisor scenario and print its event log.
    Simulate {
        scenario: PathBuf,
        /// Also print the step-by-step level trace.
        #[arg(long)]
        trace: bool,
    },
}

enum Failure {
    Diagnostics,
    Internal(String),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut session = Session::new();
    session.state_budget = cli.state_budget;
    session.mermaid_dir = cli.mermaid_dir.clone();
    let result = match &cli.command {
        Command::Repl => repl(&mut session),
        Command::Run { script } => run(&mut session, script),
        Command::Check { script } => check(&mut session, script),
        Command::Simulate { scenario, trace } => simulate(&cli, scenario, *trace),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Diagnostics) => ExitCode::from(1),
        Err(Failure::Internal(msg)) => {
            eprintln!("internal error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::Internal(format!("cannot read {}: {e}", path.display())))
}

fn report(file: &str, diags: &[Diagnostic]) -> Result<(), Failure> {
    for d in diags {
        eprintln!("{}", d.render(file));
    }
    if diags.iter().any(Diagnostic::is_error) {
        Err(Failure::Diagnostics)
    } else {
        Ok(())
    }
}

fn run(session: &mut Session, script: &Path) -> Result<(), Failure> {
    let src = read(script)?;
    let (out, diags) = session.run(&src);
    for line in out {
        println!("{line}");
    }
    report(&script.display().to_string(), &diags)
}

fn check(session: &mut Session, script: &Path) -> Result<(), Failure> {
    let src = read(script)?;
    let diags = session.check(&src);
    report(&script.display().to_string(), &diags)?;
    println!("{}: ok", script.display());
    Ok(())
}

fn repl(session: &mut Session) -> Result<(), Failure> {
    let stdin = io::stdin();
    let mut buffer = String::new();
    let mut errors = false;
    prompt(&buffer);
    for line in stdin.lock().lines() {
        let line = line.map_err(|e| Failure::Internal(e.to_string()))?;
        buffer.push_str(&line);
        buffer.push('\n');
        // Keep reading while braces are open so declarations can span lines.
        let depth = buffer.matches('{').count() as isize - buffer.matches('}').count() as isize;
        if depth > 0 {
            prompt(&buffer);
            continue;
        }
        let (out, diags) = session.run(&buffer);
        for l in out {
            println!("{l}");
        }
        if report("<stdin>", &diags).is_err() {
            errors = true;
        }
        buffer.clear();
        prompt(&buffer);
    }
    if errors {
        Err(Failure::Diagnostics)
    } else {
        Ok(())
    }
}

fn prompt(buffer: &str) {
    if atty_stdin() {
        print!("{}", if buffer.is_empty() { "> " } else { "| " });
        let _ = io::stdout().flush();
    }
}

fn atty_stdin() -> bool {
    use std::io::IsTerminal;
    io::stdin().is_terminal()
}

fn simulate(cli: &Cli, path: &Path, trace: bool) -> Result<(), Failure> {
    let text = read(path)?;
    let file = path.display().to_string();
    let mut scenario = match Scenario::parse(&text) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("{file}:{}:1: error: {}", e.line.max(1), e.message);
            return Err(Failure::Diagnostics);
        }
    };
    scenario.state_budget = cli.state_budget;
    let Some(model) = &scenario.model else {
        eprintln!("{file}:1:1: error: the scenario names no `model` script");
        return Err(Failure::Diagnostics);
    };
    let model_path = path.parent().unwrap_or(Path::new(".")).join(model);
    let src = read(&model_path)?;
    let (domain, repo, process) = match load_model(&scenario, &src) {
        Ok(m) => m,
        Err(e) => {
            eprintln!("{}:1:1: error: {e}", model_path.display());
            return Err(Failure::Diagnostics);
        }
    };
    let r = run_scenario(&scenario, &domain, &repo, &process);
    for e in &r.log {
        println!("{e}");
    }
    if trace {
        for t in &r.trace {
            println!(
                "{} level={:.6} estimate={:.6} pump={}",
                t.step,
                t.level,
                t.estimate,
                if t.pump_on { "ON" } else { "OFF" }
            );
        }
    }
    if let Some(dir) = &cli.mermaid_dir {
        std::fs::create_dir_all(dir).map_err(|e| Failure::Internal(e.to_string()))?;
        let out = dir.join("timeline.mmd");
        std::fs::write(&out, r.timeline()).map_err(|e| Failure::Internal(e.to_string()))?;
        println!("wrote {}", out.display());
    }
    match r.outcome {
        Outcome::Completed => {
            println!(
                "completed {} steps, {} reconfiguration(s)",
                r.trace.len(),
                r.reconfigurations()
            );
            Ok(())
        }
        Outcome::Halted => {
            let step = r.log.last().map(|e| e.step).unwrap_or(0);
            eprintln!("{file}:1:1: error: supervisor halted at step {step}");
            Err(Failure::Diagnostics)
        }
    }
}
