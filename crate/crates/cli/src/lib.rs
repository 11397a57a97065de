//! `sharevote`: set up elections, cast ballots, tally and verify.

pub mod client;
pub mod reference;
pub mod render;

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use futures::stream::{self, StreamExt};
use reqwest::StatusCode;
use serde_json::{json, Value};

use sharevote_core::ElectionSetup;
use sharevote_server::wire::{BallotAck, ElectionDescriptor, SetupRequest};
use sharevote_server::{CenterNode, ServiceOptions, BIND_ENV, DEFAULT_BIND};

use client::{CallError, ServiceClient};

pub const SERVER_ENV: &str = "SHAREVOTE_SERVER";

#[derive(Debug, Parser)]
#[command(name = "sharevote", version, about = "Secret-shared election tooling")]
pub struct Cli {
    /// Print machine-readable JSON instead of text.
    #[arg(long, global = true)]
    pub json: bool,

    /// Base URL of the election service.
    #[arg(long, global = true, env = SERVER_ENV, default_value = "http://127.0.0.1:8080")]
    pub server: String,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate a setup file, print the derived layout and create the election.
    Setup {
        #[arg(long)]
        config: PathBuf,
        /// Write the resolved setup (with prime and widths) to this file.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Only validate and print; do not contact the service.
        #[arg(long)]
        offline: bool,
    },
    /// Cast ballots.
    Vote(VoteArgs),
    /// Reconstruct the tally from k centers.
    Tally {
        /// Comma-separated center indices; random when omitted.
        #[arg(long, value_delimiter = ',')]
        centers: Option<Vec<u64>>,
    },
    /// Check that every k-subset of centers reconstructs the same tally.
    Verify,
    /// Replay the reference five-ballot election and check every value.
    WorkedExample,
    /// Run the election service.
    Serve(ServeArgs),
    /// Run a standalone collection center node.
    Center {
        #[arg(long, default_value = "127.0.0.1:8081")]
        bind: String,
        /// Share log path; recovered on startup when it exists.
        #[arg(long)]
        log: Option<PathBuf>,
    },
    /// Drive the service's fault-injection hooks (needs --enable-test-hooks).
    InjectFault(FaultArgs),
}

#[derive(Debug, Args)]
pub struct VoteArgs {
    /// Candidate index, 1-based.
    #[arg(conflicts_with = "script", required_unless_present = "script")]
    pub candidate: Option<usize>,
    /// File of candidate indices separated by commas or whitespace; `-` for stdin.
    #[arg(long)]
    pub script: Option<PathBuf>,
    /// Ballots in flight at once.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u16).range(1..))]
    pub parallel: u16,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, env = BIND_ENV, default_value = DEFAULT_BIND)]
    pub bind: String,
    /// Setup file used to create the election at startup if none is active.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Directory for the election document, share logs and ack log.
    #[arg(long)]
    pub data_dir: Option<PathBuf>,
    /// Base URLs of center nodes, center 1 first.
    #[arg(long, value_delimiter = ',')]
    pub remote_centers: Vec<String>,
    /// INSECURE: read fixed polynomial coefficients (one ballot per line) from this file.
    #[arg(long)]
    pub unsafe_fixed_coeffs: Option<PathBuf>,
    /// Seed for coefficients and center selection. Reproducible, not secret.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Route the /test/centers/... fault-injection endpoints.
    #[arg(long)]
    pub enable_test_hooks: bool,
}

#[derive(Debug, Args)]
#[group(skip)]
#[command(group(clap::ArgGroup::new("fault").required(true).multiple(false)))]
pub struct FaultArgs {
    #[arg(long)]
    pub center: u64,
    /// Add this offset to the center's reported partial sum.
    #[arg(long, group = "fault")]
    pub offset: Option<u64>,
    #[arg(long, group = "fault")]
    pub offline: bool,
    #[arg(long, group = "fault")]
    pub online: bool,
    /// Drop the center's memory and replay its share log.
    #[arg(long, group = "fault")]
    pub restart: bool,
}

pub fn run(cli: Cli) -> Result<()> {
    let runtime = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
    runtime.block_on(dispatch(cli))
}

async fn dispatch(cli: Cli) -> Result<()> {
    let client = ServiceClient::new(&cli.server);
    let json = cli.json;
    match cli.command {
        Command::Setup { config, out, offline } => {
            setup(&client, &config, out.as_deref(), offline, json).await
        }
        Command::Vote(args) => vote(&client, args, json).await,
        Command::Tally { centers } => {
            let result = client.tally(centers.as_deref()).await?;
            emit(json, &result, || render::tally(&result))
        }
        Command::Verify => {
            let report = client.verify().await?;
            emit(json, &report, || render::verify(&report))
        }
        Command::WorkedExample => {
            let run = reference::run_checked()?;
            if json {
                println!("{}", serde_json::to_string_pretty(&reference::to_json(&run))?);
            } else {
                print!("{}", reference::render(&run));
            }
            Ok(())
        }
        Command::Serve(args) => serve(args, json).await,
        Command::Center { bind, log } => center(&bind, log, json).await,
        Command::InjectFault(args) => inject_fault(&client, args, json).await,
    }
}

fn emit<T: serde::Serialize>(json: bool, value: &T, text: impl FnOnce() -> String) -> Result<()> {
    if json {
        println!("{}", serde_json::to_string_pretty(value)?);
    } else {
        println!("{}", text());
    }
    Ok(())
}

fn read_setup(path: &Path) -> Result<ElectionSetup> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(ElectionSetup::from_toml(&text)?)
}

async fn setup(
    client: &ServiceClient,
    path: &Path,
    out: Option<&Path>,
    offline: bool,
    json: bool,
) -> Result<()> {
    let setup = read_setup(path)?;
    let config = setup
        .resolve()
        .with_context(|| format!("invalid election setup in {}", path.display()))?;
    if let Some(out) = out {
        std::fs::write(out, config.to_toml()).with_context(|| format!("writing {}", out.display()))?;
    }
    let descriptor = if offline {
        ElectionDescriptor::from(&config)
    } else {
        client.setup(&SetupRequest::from(config.to_setup())).await?
    };
    emit(json, &descriptor, || {
        let mut text = render::layout(&descriptor);
        if !offline {
            text.push_str("\nelection created");
        }
        text
    })
}

fn parse_script(text: &str) -> Result<Vec<usize>> {
    text.lines()
        .map(|line| line.split('#').next().unwrap_or(""))
        .flat_map(|line| line.split(|c: char| c == ',' || c.is_whitespace()))
        .filter(|t| !t.is_empty())
        .map(|t| t.parse().with_context(|| format!("not a candidate index: {t:?}")))
        .collect()
}

async fn vote(client: &ServiceClient, args: VoteArgs, json: bool) -> Result<()> {
    let ballots = match (&args.candidate, &args.script) {
        (Some(c), _) => vec![*c],
        (None, Some(path)) if path.as_os_str() == "-" => {
            parse_script(&std::io::read_to_string(std::io::stdin())?)?
        }
        (None, Some(path)) => parse_script(
            &std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?,
        )?,
        (None, None) => unreachable!("clap requires a candidate or a script"),
    };

    let stop = Arc::new(AtomicBool::new(false));
    let outcomes: Vec<Option<Result<BallotAck, CallError>>> = stream::iter(ballots)
        .map(|candidate| {
            let stop = Arc::clone(&stop);
            async move {
                if stop.load(Ordering::SeqCst) {
                    return None;
                }
                let outcome = client.vote(candidate).await;
                if outcome.is_err() {
                    stop.store(true, Ordering::SeqCst);
                }
                Some(outcome)
            }
        })
        .buffered(args.parallel as usize)
        .collect()
        .await;

    let mut acks = Vec::new();
    let mut errors = Vec::new();
    for outcome in outcomes.into_iter().flatten() {
        match outcome {
            Ok(ack) => acks.push(ack),
            Err(e) => errors.push(e),
        }
    }
    acks.sort_by_key(|a| a.ballot_seq);
    let limit_reached = errors.iter().any(|e| e.status() == Some(StatusCode::CONFLICT));
    let first_error = errors.first().map(ToString::to_string);

    if json {
        let body = json!({
            "acks": acks,
            "accepted": acks.len(),
            "limit_reached": limit_reached,
            "error": first_error,
        });
        println!("{}", serde_json::to_string_pretty(&body)?);
    } else {
        for ack in &acks {
            let pending = if ack.pending { " (delivery pending)" } else { "" };
            println!(
                "ballot_seq={} centers_acked={}{pending}",
                ack.ballot_seq, ack.centers_acked
            );
        }
        println!("{} acks", acks.len());
    }
    match first_error {
        Some(_) if limit_reached => bail!("ballot limit reached after {} acks", acks.len()),
        Some(e) => bail!("{e}"),
        None => Ok(()),
    }
}

/// Reads coefficient rows: one ballot per line, integers separated by commas or spaces.
fn read_coefficients(path: &Path) -> Result<Vec<Vec<u64>>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    text.lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .filter(|l| !l.is_empty())
        .map(|l| {
            l.split(|c: char| c == ',' || c.is_whitespace())
                .filter(|t| !t.is_empty())
                .map(|t| t.parse().with_context(|| format!("bad coefficient {t:?}")))
                .collect()
        })
        .collect()
}

async fn serve(args: ServeArgs, json: bool) -> Result<()> {
    init_tracing();
    let coefficient_rows = match &args.unsafe_fixed_coeffs {
        Some(path) => {
            eprintln!("warning: fixed coefficients make every ballot recoverable; never use them in a real election");
            Some(read_coefficients(path)?)
        }
        None => None,
    };
    let options = ServiceOptions {
        data_dir: args.data_dir.clone(),
        remote_centers: args.remote_centers.clone(),
        coefficient_rows,
        rng_seed: args.seed,
        test_hooks: args.enable_test_hooks,
        ..ServiceOptions::default()
    };
    let (service, app) = sharevote_server::election_app(options)
        .await
        .map_err(|e| anyhow::anyhow!(e.message))?;
    if let Some(path) = &args.config {
        if service.config().await.is_none() {
            service
                .setup(read_setup(path)?)
                .await
                .map_err(|e| anyhow::anyhow!("{}: {}", path.display(), e.message))?;
        }
    }
    let (listener, addr) = sharevote_server::bind(&args.bind)
        .await
        .with_context(|| format!("binding {}", args.bind))?;
    announce(json, "election service", &addr.to_string());
    sharevote_server::serve(listener, app).await?;
    Ok(())
}

async fn center(bind: &str, log: Option<PathBuf>, json: bool) -> Result<()> {
    init_tracing();
    let node = Arc::new(CenterNode::new(log)?);
    let (listener, addr) = sharevote_server::bind(bind)
        .await
        .with_context(|| format!("binding {bind}"))?;
    announce(json, "center node", &addr.to_string());
    sharevote_server::serve(listener, sharevote_server::center_node::router(node)).await?;
    Ok(())
}

fn announce(json: bool, what: &str, addr: &str) {
    if json {
        println!("{}", json!({ "listening": addr, "role": what }));
    } else {
        println!("{what} listening on http://{addr}");
    }
}

fn init_tracing() {
    let _ = tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "warn".into()),
        )
        .with_writer(std::io::stderr)
        .try_init();
}

async fn inject_fault(client: &ServiceClient, args: FaultArgs, json: bool) -> Result<()> {
    let (action, body, done): (&str, Option<Value>, String) = if let Some(offset) = args.offset {
        (
            "corrupt",
            Some(json!({ "offset": offset.to_string() })),
            format!(
                "center {} now reports its partial sum shifted by {offset}",
                args.center
            ),
        )
    } else if args.offline || args.online {
        (
            "offline",
            Some(json!({ "offline": args.offline })),
            format!(
                "center {} is {}",
                args.center,
                if args.offline { "offline" } else { "online" }
            ),
        )
    } else {
        (
            "restart",
            None,
            format!("center {} restarted from its share log", args.center),
        )
    };
    client.test_hook(args.center, action, body).await?;
    emit(json, &json!({ "center": args.center, "action": action }), || done)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scripts_accept_commas_whitespace_and_comments() {
        assert_eq!(parse_script("1,3,1,2,1").unwrap(), [1, 3, 1, 2, 1]);
        assert_eq!(
            parse_script("1 2\n3, 4 # trailing\n# only comment\n").unwrap(),
            [1, 2, 3, 4]
        );
        assert!(parse_script("").unwrap().is_empty());
        assert!(parse_script("1,x").is_err());
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }

    #[test]
    fn tally_centers_parse_as_list() {
        let cli = Cli::try_parse_from(["sharevote", "tally", "--centers", "1,2,3"]).unwrap();
        match cli.command {
            Command::Tally { centers } => assert_eq!(centers, Some(vec![1, 2, 3])),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn fault_injection_needs_exactly_one_action() {
        assert!(Cli::try_parse_from(["sharevote", "inject-fault", "--center", "2"]).is_err());
        assert!(Cli::try_parse_from([
            "sharevote",
            "inject-fault",
            "--center",
            "2",
            "--offline",
            "--restart"
        ])
        .is_err());
        assert!(Cli::try_parse_from(["sharevote", "inject-fault", "--center", "2", "--offset", "5"]).is_ok());
    }
}
