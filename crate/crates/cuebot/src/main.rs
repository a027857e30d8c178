use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use cuebot::domain::Domain;
use cuebot::script::run_script;
use cuebot::server::Server;
use cuebot::store::{episodes_to_json, kb_from_json, kb_to_json, read_file, render_episode, write_file};
use cuebot_core::planner::{parse_goal, plan, PlanDocument};
use cuebot_core::skill::KnowledgeBase;

#[derive(Parser)]
#[command(name = "cuebot", version, about = "Learn kitchen tasks from demonstration, plan and assist")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Serve the line protocol over TCP, one client at a time.
    Serve {
        #[arg(long)]
        port: u16,
        #[arg(long)]
        domain: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Knowledge base every session starts from.
        #[arg(long)]
        kb: Option<PathBuf>,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
    },
    /// Replay a script of inbound messages and print the transcript.
    Run {
        #[arg(long)]
        script: PathBuf,
        #[arg(long)]
        domain: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        kb: Option<PathBuf>,
        /// Where to save the resulting knowledge base (`.txt` for the readable form).
        #[arg(long)]
        kb_out: Option<PathBuf>,
        /// Where to save the recorded episodes (`.txt` for the readable form).
        #[arg(long)]
        episodes_out: Option<PathBuf>,
    },
    /// Plan for a spoken goal and print the plan as JSON.
    Plan {
        #[arg(long)]
        goal: String,
        #[arg(long)]
        domain: PathBuf,
        #[arg(long)]
        kb: PathBuf,
    },
}

fn load_kb(path: Option<&Path>, domain: &Domain) -> Result<Option<KnowledgeBase>> {
    path.map(|p| {
        let text = read_file(p)?;
        kb_from_json(&text, domain.tree.clone()).with_context(|| format!("loading {}", p.display()))
    })
    .transpose()
}

fn is_txt(p: &Path) -> bool {
    p.extension().is_some_and(|e| e == "txt")
}

fn main() -> Result<()> {
    match Cli::parse().cmd {
        Cmd::Serve {
            port,
            domain,
            seed,
            kb,
            host,
        } => {
            let d = Domain::load(&domain)?;
            let kb = load_kb(kb.as_deref(), &d)?;
            let server = Server::bind(&format!("{host}:{port}"), d, seed, kb)?;
            eprintln!("listening on {}", server.local_addr()?);
            server.run(None)?;
        }
        Cmd::Run {
            script,
            domain,
            seed,
            kb,
            kb_out,
            episodes_out,
        } => {
            let d = Domain::load(&domain)?;
            let kb = load_kb(kb.as_deref(), &d)?;
            let text = read_file(&script)?;
            let t = run_script(&text, &d, seed, kb).with_context(|| script.display().to_string())?;
            print!("{}", t.text());
            if let Some(p) = kb_out {
                let body = if is_txt(&p) { t.session.kb().render() } else { kb_to_json(t.session.kb()) };
                write_file(&p, &body)?;
            }
            if let Some(p) = episodes_out {
                let eps = t.session.memory().episodes();
                let body = if is_txt(&p) {
                    eps.iter().map(render_episode).collect()
                } else {
                    episodes_to_json(eps)
                };
                write_file(&p, &body)?;
            }
        }
        Cmd::Plan { goal, domain, kb } => {
            let d = Domain::load(&domain)?;
            let kb = load_kb(Some(&kb), &d)?.expect("path given");
            let g = parse_goal(&goal, &d.world, &d.templates)?;
            let p = plan(&d.world, &g, &kb, &d.planner_config())?;
            println!("{}", serde_json::to_string_pretty(&PlanDocument::from_plan(&p))?);
        }
    }
    Ok(())
}
