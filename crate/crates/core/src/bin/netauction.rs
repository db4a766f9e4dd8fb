use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use netauction::audit::{parse_axioms, AuditConfig, AuditError, Auditor};
use netauction::io::{compare_table, parse_reports, parse_scenario, CompareRow, IoError, ResultReport};
use netauction::mechanism::MECHANISM_IDS;
use netauction::{Mechanism, MechanismError, Scenario};

const EXIT_AUDIT_FAIL: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_INVALID: u8 = 3;
const EXIT_UNBOUNDED: u8 = 4;
const EXIT_SPACE: u8 = 5;

#[derive(Parser)]
#[command(name = "netauction", version, about = "Run and audit diffusion auctions on networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Table,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Run one mechanism and print the outcome with its trace.
    Run {
        #[arg(long)]
        mechanism: String,
        #[arg(long)]
        scenario: PathBuf,
        /// Reported bids and invitations; truthful when omitted.
        #[arg(long)]
        reports: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "table")]
        format: Format,
        /// Rank threshold of exploratory-2.
        #[arg(long, default_value_t = 2)]
        explore_k: usize,
    },
    /// Check axioms by enumerating deviations; prints verdicts as JSON.
    Audit {
        #[arg(long)]
        mechanism: String,
        #[arg(long)]
        scenario: PathBuf,
        /// Comma-separated: ir, sp, wbb, value-mon, inv-mon-payment,
        /// bid-indep, id-mon, ip-mon, degenerated, critical-gap,
        /// losing-alone, or the groups `payment` and `all`.
        #[arg(long, default_value = "ir,sp")]
        axioms: String,
        /// Maximum mechanism evaluations; defaults to NETAUCTION_AUDIT_BUDGET.
        #[arg(long)]
        budget: Option<u64>,
        /// Random opponent profiles checked besides the truthful one.
        #[arg(long, default_value_t = 0)]
        opponent_samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Agents with more neighbors get sampled invitation subsets.
        #[arg(long, default_value_t = 10)]
        max_degree: usize,
        #[arg(long, default_value_t = 2)]
        explore_k: usize,
    },
    /// Run several mechanisms on one scenario side by side.
    Compare {
        #[arg(long)]
        scenario: PathBuf,
        /// Comma-separated mechanism ids.
        #[arg(long, value_delimiter = ',')]
        mechanisms: Vec<String>,
        #[arg(long, value_enum, default_value = "table")]
        format: Format,
        #[arg(long, default_value_t = 2)]
        explore_k: usize,
    },
    /// List the registered mechanism ids.
    Mechanisms,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Failure {
            code,
            message: message.into(),
        }
    }
}

impl From<IoError> for Failure {
    fn from(e: IoError) -> Self {
        Failure::new(EXIT_INVALID, e.to_string())
    }
}

impl From<MechanismError> for Failure {
    fn from(e: MechanismError) -> Self {
        let code = match e {
            MechanismError::UnboundedPayment { .. } => EXIT_UNBOUNDED,
            _ => EXIT_INVALID,
        };
        Failure::new(code, e.to_string())
    }
}

impl From<AuditError> for Failure {
    fn from(e: AuditError) -> Self {
        match e {
            AuditError::SpaceTooLarge { .. } => Failure::new(EXIT_SPACE, e.to_string()),
            AuditError::Mechanism(m) => m.into(),
        }
    }
}

fn mechanism(id: &str, explore_k: usize) -> Result<Mechanism, Failure> {
    Mechanism::by_id(id, explore_k).ok_or_else(|| {
        Failure::new(
            EXIT_USAGE,
            format!("unknown mechanism `{id}` (known: {})", MECHANISM_IDS.join(", ")),
        )
    })
}

fn budget(flag: Option<u64>) -> Result<u64, Failure> {
    if let Some(b) = flag {
        return Ok(b);
    }
    match std::env::var("NETAUCTION_AUDIT_BUDGET") {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| Failure::new(EXIT_USAGE, format!("NETAUCTION_AUDIT_BUDGET is not a number: `{v}`"))),
        Err(_) => Ok(AuditConfig::default().budget),
    }
}

fn render(format: Format, table: impl FnOnce() -> String, json: impl FnOnce() -> String) {
    match format {
        Format::Table => emit(&table()),
        Format::Json => emit(&format!("{}\n", json().trim_end())),
    }
}

fn execute(command: Command) -> Result<u8, Failure> {
    match command {
        Command::Run {
            mechanism: id,
            scenario,
            reports,
            format,
            explore_k,
        } => {
            let mech = mechanism(&id, explore_k)?;
            let scenario = parse_scenario(scenario)?;
            let reports = match reports {
                Some(path) => parse_reports(&scenario, path)?,
                None => scenario.truthful(),
            };
            let outcome = mech.run(&scenario, &reports)?;
            let report = ResultReport::new(&id, &scenario, &outcome);
            render(format, || report.to_table(&scenario), || report.to_json());
            Ok(0)
        }
        Command::Audit {
            mechanism: id,
            scenario,
            axioms,
            budget: flag,
            opponent_samples,
            seed,
            max_degree,
            explore_k,
        } => {
            let mech = mechanism(&id, explore_k)?;
            let axioms = parse_axioms(&axioms).map_err(|e| Failure::new(EXIT_USAGE, e))?;
            let config = AuditConfig {
                max_invite_degree: max_degree,
                seed,
                opponent_samples,
                budget: budget(flag)?,
                ..AuditConfig::default()
            };
            let scenario: Scenario = parse_scenario(scenario)?;
            let verdicts = Auditor::new(&mech, &scenario, config)?.audit(&axioms)?;
            let pass = verdicts.iter().all(|v| v.pass);
            let doc = serde_json::json!({
                "mechanism": id,
                "pass": pass,
                "verdicts": verdicts.iter().map(|v| v.to_json(&scenario)).collect::<Vec<_>>(),
            });
            emit(&format!("{}\n", serde_json::to_string_pretty(&doc).expect("json")));
            Ok(if pass { 0 } else { EXIT_AUDIT_FAIL })
        }
        Command::Compare {
            scenario,
            mechanisms,
            format,
            explore_k,
        } => {
            if mechanisms.is_empty() {
                return Err(Failure::new(EXIT_USAGE, "no mechanisms given"));
            }
            let mechs = mechanisms
                .iter()
                .map(|id| mechanism(id, explore_k))
                .collect::<Result<Vec<_>, _>>()?;
            let scenario = parse_scenario(scenario)?;
            let truthful = scenario.truthful();
            let mut rows = Vec::with_capacity(mechs.len());
            for m in &mechs {
                let outcome = m.run(&scenario, &truthful)?;
                rows.push(CompareRow::new(m.id(), &scenario, &outcome));
            }
            render(
                format,
                || compare_table(&rows),
                || serde_json::to_string_pretty(&rows).expect("json"),
            );
            Ok(0)
        }
        Command::Mechanisms => {
            for id in MECHANISM_IDS {
                emit(&format!("{id}\n"));
            }
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    match execute(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

/// Writes to stdout, ignoring a closed pipe.
fn emit(text: &str) {
    let _ = std::io::stdout().lock().write_all(text.as_bytes());
}
