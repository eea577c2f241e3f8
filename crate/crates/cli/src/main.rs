use std::io::{Read, Write};
use std::net::{IpAddr, SocketAddr};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Duration;

use clap::{Parser, Subcommand, ValueEnum};

use mldb_cli::{load_schema, open_database, read_file, schema_path, server, CliError, SCHEMA_FILE};
use mldb_core::interchange::{export_bundle, import_bundle, ExportOptions, ImportMode, InterchangeError};
use mldb_core::lexbase::{check_wellformed, HitKind};
use mldb_core::rules::{run_all_rules, Strength};
use mldb_core::{Database, Violation};

#[derive(Parser)]
#[command(name = "mldb", version, about = "Multilingual lexical database tool")]
struct Cli {
    /// Database directory.
    #[arg(long, env = "NADIA_DB", global = true)]
    db: Option<PathBuf>,
    /// Schema file; defaults to schema.dls inside the database directory.
    #[arg(long, global = true)]
    dls: Option<PathBuf>,
    /// Name recorded with logged violations.
    #[arg(long, global = true)]
    actor: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum FailOn {
    Warning,
    Delay,
    Critical,
}

impl From<FailOn> for Strength {
    fn from(f: FailOn) -> Strength {
        match f {
            FailOn::Warning => Strength::Warning,
            FailOn::Delay => Strength::Delay,
            FailOn::Critical => Strength::Critical,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Well-formedness and every rule over the database, or over a bundle file.
    Check {
        #[arg(long, value_enum, default_value = "delay")]
        fail_on: FailOn,
        #[arg(long)]
        json: bool,
        /// Bundle to check instead of the database.
        file: Option<PathBuf>,
    },
    /// Loads a bundle into an empty database (`-` reads stdin).
    Import {
        file: PathBuf,
        /// Overwrite a database that already holds data.
        #[arg(long)]
        replace: bool,
    },
    /// Writes the database as a canonical bundle to stdout.
    Export {
        #[arg(long)]
        include_delayed: bool,
    },
    Translate {
        #[arg(long)]
        from: String,
        #[arg(long)]
        to: String,
        lemma: String,
        #[arg(long)]
        json: bool,
    },
    Stats {
        #[arg(long)]
        json: bool,
    },
    /// Fills absent features from the default rules.
    Default {
        #[arg(long, required = true)]
        batch: bool,
        #[arg(long)]
        json: bool,
    },
    Serve {
        #[arg(long, default_value = "127.0.0.1")]
        bind: IpAddr,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        /// Per-request timeout in seconds.
        #[arg(long, default_value_t = server::DEFAULT_TIMEOUT.as_secs())]
        timeout: u64,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("mldb: {e}");
            if let CliError::Interchange(InterchangeError::Rejected(found)) = &e {
                for v in found {
                    eprintln!("  {v}");
                }
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn need_db(cli: &Cli) -> Result<&Path, CliError> {
    cli.db.as_deref().ok_or_else(|| CliError::Usage("no database: pass --db or set NADIA_DB".into()))
}

fn json_line<T: serde::Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("serializable")
}

fn run(cli: Cli) -> Result<u8, CliError> {
    let actor = cli.actor.as_deref();
    match &cli.command {
        Command::Check { fail_on, json, file } => {
            let found = match file {
                Some(file) => check_file(cli.db.as_deref(), cli.dls.as_deref(), file)?,
                None => open_database(need_db(&cli)?, cli.dls.as_deref())?.check_all(),
            };
            if *json {
                println!("{}", json_line(&found));
            } else {
                for v in &found {
                    println!("{v}");
                }
                println!("{} violations", found.len());
            }
            let min = Strength::from(*fail_on);
            Ok(u8::from(found.iter().any(|v| v.strength >= min)))
        }
        Command::Import { file, replace } => {
            let db = need_db(&cli)?;
            import(db, cli.dls.as_deref(), file, *replace)?;
            Ok(0)
        }
        Command::Export { include_delayed } => {
            let db = open_database(need_db(&cli)?, cli.dls.as_deref())?;
            let text = export_bundle(&db.snapshot(), db.schema(), ExportOptions { include_delayed: *include_delayed });
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|source| CliError::Io { path: "<stdout>".into(), source })?;
            Ok(0)
        }
        Command::Translate { from, to, lemma, json } => {
            let db = open_database(need_db(&cli)?, cli.dls.as_deref())?;
            let result = db.translate(lemma, from, to)?;
            if *json {
                println!("{}", json_line(&result));
                return Ok(0);
            }
            for sense in &result.senses {
                println!("{} {} {}", sense.acception, sense.name, sense.axie_name);
                if sense.untranslatable {
                    println!("  (no counterpart)");
                }
                for hit in &sense.hits {
                    let via = match hit.via {
                        HitKind::Direct => "direct".to_string(),
                        HitKind::Sub => format!("sub {}", hit.path.join("/")),
                        HitKind::Quasi => "quasi".to_string(),
                    };
                    let delayed = if hit.delayed { " (delayed)" } else { "" };
                    println!("  {via}: {} {}{delayed}", hit.lemma, hit.acception);
                }
            }
            Ok(0)
        }
        Command::Stats { json } => {
            let db = open_database(need_db(&cli)?, cli.dls.as_deref())?;
            let stats = db.stats();
            if *json {
                println!("{}", json_line(&stats));
                return Ok(0);
            }
            for d in &stats.dictionaries {
                println!("{}: {} entries, {} acceptions", d.language, d.entries, d.acceptions);
            }
            println!("axies: {}", stats.axies);
            println!("sub-acceptions: {}", stats.sub_acceptions);
            Ok(0)
        }
        Command::Default { json, .. } => {
            let db = open_database(need_db(&cli)?, cli.dls.as_deref())?;
            let (txn, count) = db.default_batch(actor)?;
            if *json {
                println!("{}", json_line(&txn));
            } else {
                for v in &txn.violations {
                    println!("{v}");
                }
                println!("{count} articles defaulted");
            }
            Ok(u8::from(!txn.committed()))
        }
        Command::Serve { bind, port, timeout } => {
            let db = open_database(need_db(&cli)?, cli.dls.as_deref())?;
            serve(db, SocketAddr::new(*bind, *port), Duration::from_secs(*timeout))?;
            Ok(0)
        }
    }
}

/// Violations of a bundle, read without admission so that every problem is reported.
fn check_file(db: Option<&Path>, dls: Option<&Path>, file: &Path) -> Result<Vec<Violation>, CliError> {
    let loaded = load_schema(&schema_path(db, dls)?)?;
    let state = import_bundle(&read_input(file)?, &loaded.schema, &loaded.rules, ImportMode::Raw)?;
    let mut found = check_wellformed(&state);
    found.extend(run_all_rules(&state, &loaded.schema, &loaded.rules.rules));
    mldb_core::violation::sort_violations(&mut found);
    Ok(found)
}

fn read_input(file: &Path) -> Result<String, CliError> {
    if file == Path::new("-") {
        let mut text = String::new();
        std::io::stdin()
            .read_to_string(&mut text)
            .map_err(|source| CliError::Io { path: "<stdin>".into(), source })?;
        Ok(text)
    } else {
        read_file(file)
    }
}

fn import(dir: &Path, dls: Option<&Path>, file: &Path, replace: bool) -> Result<(), CliError> {
    let schema_file = schema_path(Some(dir), dls)?;
    let loaded = load_schema(&schema_file)?;
    let existing = Database::open(dir, loaded.schema.clone(), loaded.rules.clone())?;
    let snap = existing.snapshot();
    if !replace && (snap.entries().next().is_some() || snap.axies().next().is_some()) {
        return Err(CliError::Refused(format!("{} already holds data; pass --replace to overwrite it", dir.display())));
    }
    drop(existing);
    let state = import_bundle(&read_input(file)?, &loaded.schema, &loaded.rules, ImportMode::Strict)?;
    let mut db = Database::from_state(loaded.schema, loaded.rules, state);
    db.persist_to(dir)?;
    let kept = dir.join(SCHEMA_FILE);
    if !kept.exists() {
        std::fs::copy(&schema_file, &kept).map_err(|source| CliError::Io { path: kept.clone(), source })?;
    }
    Ok(())
}

fn serve(db: Arc<Database>, addr: SocketAddr, limit: Duration) -> Result<(), CliError> {
    let runtime = tokio::runtime::Runtime::new().map_err(|source| CliError::Io { path: "<runtime>".into(), source })?;
    runtime
        .block_on(server::serve(db, addr, limit))
        .map_err(|source| CliError::Io { path: addr.to_string().into(), source })
}
