use std::io::Write;
use std::path::PathBuf;
use std::sync::Arc;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use serde::Serialize;

use nelv_core::parser::{LlmConfig, Preference};
use nelv_service::{http, Layer, Planner, PlannerConfig, StageName, StageOptions, StageRequest};

/// Staged UAV mission planner.
#[derive(Parser)]
#[command(name = "nelv", version)]
struct Cli {
    /// Session store directory.
    #[arg(long, global = true, env = "NELV_DATA_DIR", default_value = "nelv-data")]
    data_dir: PathBuf,
    /// Directory holding airports.csv and the optional POI, zone and weather files.
    #[arg(long, global = true)]
    catalog: Option<PathBuf>,
    /// PSO seed for path planning.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Per-leg swarm time limit in milliseconds.
    #[arg(long, global = true)]
    pso_budget_ms: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Create a session and print its id.
    New,
    /// Send an instruction to a session.
    Say { id: String, text: Vec<String> },
    /// Plan route alternatives.
    PlanRoute {
        id: String,
        #[arg(long)]
        preference: Option<Preference>,
    },
    /// Plan the 3-D path of the selected route.
    PlanPath {
        id: String,
        /// Plan the alternative with this label instead.
        #[arg(long)]
        label: Option<Preference>,
        #[arg(long)]
        population: Option<usize>,
        #[arg(long)]
        generations: Option<usize>,
    },
    /// Add take-off and landing circuits and loiters.
    BuildTraj { id: String },
    /// Mark the mission uploaded and freeze the session.
    Upload { id: String },
    /// Write the mission file.
    Export {
        id: String,
        #[arg(long, default_value_t = 0)]
        vehicle: usize,
        /// Output file; standard output when omitted.
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Print the session record.
    Show { id: String },
    /// Print a map overlay.
    Overlay { id: String, layer: String },
    /// Serve the HTTP API.
    Serve {
        #[arg(long, env = "NELV_BIND_ADDR", default_value = "127.0.0.1:8080")]
        bind: String,
    },
}

fn print_json(v: &impl Serialize) -> Result<()> {
    let mut out = std::io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, v)?;
    writeln!(out)?;
    Ok(())
}

fn stage(planner: &Planner, id: &str, stage: StageName, options: StageOptions) -> Result<()> {
    let report = planner.run_stage(id, &StageRequest { stage, options })?;
    print_json(&report)
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let mut cfg = PlannerConfig::new(&cli.data_dir);
    cfg.catalog_dir = cli.catalog.clone();
    cfg.seed = cli.seed;
    cfg.path.near.pso.time_budget_ms = cli.pso_budget_ms;
    cfg.path.long.pso.time_budget_ms = cli.pso_budget_ms;
    cfg.llm = LlmConfig::from_env();
    let planner = Planner::new(cfg).context("starting planner")?;

    match cli.command {
        Command::New => {
            let r = planner.create_session()?;
            println!("{}", r.id);
        }
        Command::Say { id, text } => {
            let reply = planner.post_instruction(&id, &text.join(" "))?;
            print_json(&reply)?;
        }
        Command::PlanRoute { id, preference } => stage(
            &planner,
            &id,
            StageName::Route,
            StageOptions {
                preference,
                ..Default::default()
            },
        )?,
        Command::PlanPath {
            id,
            label,
            population,
            generations,
        } => stage(
            &planner,
            &id,
            StageName::Path,
            StageOptions {
                label,
                population,
                generations,
                ..Default::default()
            },
        )?,
        Command::BuildTraj { id } => stage(&planner, &id, StageName::Trajectory, StageOptions::default())?,
        Command::Upload { id } => stage(&planner, &id, StageName::Upload, StageOptions::default())?,
        Command::Export { id, vehicle, out } => {
            let bytes = planner.export(&id, vehicle)?;
            match out {
                Some(path) => nelv_core::mission_io::write_atomic(&path, &bytes)
                    .with_context(|| format!("writing {}", path.display()))?,
                None => std::io::stdout().lock().write_all(&bytes)?,
            }
        }
        Command::Show { id } => print_json(&planner.session(&id)?)?,
        Command::Overlay { id, layer } => {
            let layer: Layer = layer.parse()?;
            std::io::stdout().lock().write_all(&planner.overlay(&id, layer)?)?;
        }
        Command::Serve { bind } => {
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(async move {
                let listener = tokio::net::TcpListener::bind(&bind)
                    .await
                    .with_context(|| format!("binding {bind}"))?;
                log::info!("listening on {}", listener.local_addr()?);
                axum::serve(listener, http::router(Arc::new(planner)))
                    .with_graceful_shutdown(async {
                        let _ = tokio::signal::ctrl_c().await;
                    })
                    .await?;
                anyhow::Ok(())
            })?;
        }
    }
    Ok(())
}
