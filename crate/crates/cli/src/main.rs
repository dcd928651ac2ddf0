mod args;
mod providers;
mod settings;

use std::collections::BTreeSet;
use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use countqa_core::dataset::{load_dataset, load_predictions, write_predictions, write_predictions_to, LoadMode};
use countqa_core::eval::{evaluate, parse_ks};
use countqa_core::pipeline::answer_all;
use countqa_core::Error;
use countqa_server::{router, AppState, Dataset, ServerOptions};

use crate::args::{AnswerArgs, Cli, Command, EvaluateArgs, ServeArgs, ValidateArgs};
use crate::settings::{Settings, DEFAULT_HOST, DEFAULT_PORT};

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, config or environment: exit 1.
    Usage(String),
    /// Unreadable or invalid data files: exit 2.
    Data(String),
    /// Missing or failing providers: exit 3.
    Provider(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Provider(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Data(m) | CliError::Provider(m) => f.write_str(m),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::MissingProvider(_) | Error::Provider(_) => CliError::Provider(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match cli.command {
        Command::Answer(a) => answer(a),
        Command::Evaluate(a) => evaluate_cmd(a),
        Command::Serve(a) => serve(a),
        Command::ValidateDataset(a) => validate(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}

fn answer(args: AnswerArgs) -> Result<(), CliError> {
    let settings = Settings::resolve(&args.run)?;
    let providers = providers::build(&settings)?;
    providers.check(&settings.run)?;
    let dataset = load_dataset(&args.dataset, LoadMode::Strict)?;
    let jobs = args
        .jobs
        .or(settings.file.jobs)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
        .max(1);

    let outputs = answer_all(&dataset.records, &providers, &settings.run, jobs)?;
    let mut failed = Vec::new();
    let mut records = Vec::with_capacity(outputs.len());
    for out in outputs {
        if out.failed() {
            failed.push(out.record.query_id.clone());
        }
        records.push(out.record);
    }
    records.sort_by(|a, b| a.query_id.cmp(&b.query_id));

    if !args.quiet {
        for r in &records {
            let c_pred = r.c_pred.map_or_else(|| "none".to_string(), |c| c.to_string());
            eprintln!(
                "{}\tc_pred={c_pred}\tsynonyms={} subgroups={} incomparables={}\tinstances={}",
                r.query_id,
                r.synonyms.len(),
                r.subgroups.len(),
                r.incomparables.len(),
                r.instances.len()
            );
        }
    }
    match &args.output {
        Some(path) => write_predictions(path, &records)?,
        None => {
            let stdout = std::io::stdout().lock();
            write_predictions_to(stdout, &records)?;
        }
    }
    if !failed.is_empty() {
        return Err(CliError::Provider(format!(
            "providers failed on every segment for {} queries: {}",
            failed.len(),
            failed.join(", ")
        )));
    }
    Ok(())
}

fn evaluate_cmd(args: EvaluateArgs) -> Result<(), CliError> {
    let ks = parse_ks(&args.k).map_err(|e| CliError::Usage(format!("--k: {e}")))?;
    let predictions = load_predictions(&args.predictions)?;
    let dataset = load_dataset(&args.dataset, LoadMode::Strict)?;
    let report = evaluate(&predictions, &dataset.records, &ks)?;
    let json = serde_json::to_string_pretty(&report).map_err(|e| CliError::Data(e.to_string()))? + "\n";
    if let Some(path) = &args.output {
        std::fs::write(path, &json).map_err(|e| CliError::Data(format!("cannot write {}: {e}", path.display())))?;
    }
    let text = if args.json { json } else { report.to_text() };
    let _ = std::io::stdout().lock().write_all(text.as_bytes());
    for m in &report.mismatches {
        eprintln!("warning: {m}");
    }
    Ok(())
}

fn validate(args: ValidateArgs) -> Result<(), CliError> {
    let loaded = load_dataset(&args.dataset, LoadMode::Lenient)?;
    for w in &loaded.warnings {
        eprintln!("{w}");
    }
    if loaded.warnings.is_empty() {
        println!(
            "{}: {} records, no problems",
            args.dataset.display(),
            loaded.records.len()
        );
        Ok(())
    } else {
        Err(CliError::Data(format!(
            "{}: {} problems, {} valid records",
            args.dataset.display(),
            loaded.warnings.len(),
            loaded.records.len()
        )))
    }
}

fn serve(args: ServeArgs) -> Result<(), CliError> {
    let settings = Settings::resolve(&args.run)?;
    let providers = providers::build(&settings)?;
    providers.check(&settings.run)?;

    let mut datasets = Vec::new();
    let mut names = BTreeSet::new();
    for path in &args.dataset {
        let id = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| path.display().to_string());
        if !names.insert(id.clone()) {
            return Err(CliError::Usage(format!(
                "two datasets are named `{id}`; rename one file"
            )));
        }
        let loaded = load_dataset(path, LoadMode::Strict)?;
        datasets.push(Dataset {
            id,
            source: path.display().to_string(),
            records: loaded.records,
        });
    }

    let host = args
        .host
        .or(settings.file.host.clone())
        .unwrap_or_else(|| DEFAULT_HOST.to_string());
    let port = args.port.or(settings.file.port).unwrap_or(DEFAULT_PORT);
    let cors_origins = if args.cors_origins.is_empty() {
        settings.file.cors_origins.clone().unwrap_or_default()
    } else {
        args.cors_origins
    };
    let listener = std::net::TcpListener::bind((host.as_str(), port))
        .map_err(|e| CliError::Usage(format!("cannot listen on {host}:{port}: {e}")))?;
    listener
        .set_nonblocking(true)
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let addr = listener.local_addr().map_err(|e| CliError::Usage(e.to_string()))?;

    let _ = tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()))
        .with_writer(std::io::stderr)
        .try_init();

    // Remote adapters own blocking HTTP clients, which must not be dropped
    // on a runtime thread; this handle outlives the runtime.
    let keep = providers.clone();
    let state = AppState {
        datasets,
        providers,
        config: settings.run,
    };
    let runtime = tokio::runtime::Runtime::new().map_err(|e| CliError::Usage(e.to_string()))?;
    let result = runtime.block_on(async move {
        let listener = tokio::net::TcpListener::from_std(listener)?;
        eprintln!("countqa listening on http://{addr}");
        let app = router(state, &ServerOptions { cors_origins });
        countqa_server::serve(listener, app, countqa_server::shutdown_signal()).await
    });
    drop(runtime);
    drop(keep);
    result.map_err(|e| CliError::Usage(format!("server error: {e}")))
}
