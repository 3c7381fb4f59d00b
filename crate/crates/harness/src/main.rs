use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use crucible_core::bots::{qc_run, Verdict};
use crucible_core::metrics::build_report;
use crucible_core::Registry;
use crucible_harness::store::RESULTS_FILE;
use crucible_harness::{
    parse_population, read_records, render_record, run_evaluation, write_report, EvaluationJob,
};
use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

/// Evaluate focal populations on gridworld scenarios.
#[derive(Parser)]
#[command(name = "crucible", version)]
struct Cli {
    /// Registry directory overriding the built-in data.
    #[arg(long, env = "CRUCIBLE_REGISTRY", global = true)]
    registry: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// List substrates with player counts.
    ListSubstrates,
    /// List scenarios, optionally for one substrate.
    ListScenarios {
        #[arg(long)]
        substrate: Option<String>,
    },
    /// Run quality control for bots (all when none given).
    Qc {
        bots: Vec<String>,
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
    /// Evaluate populations on scenarios, resuming into --out.
    Eval {
        /// `random`, `noop`, a bot id, or `name=id[:w],id[:w]`. Repeatable.
        #[arg(long = "population", required = true)]
        populations: Vec<String>,
        /// Scenario ids, or substrate ids meaning all of their scenarios.
        /// All scenarios when none given.
        #[arg(long = "scenario")]
        scenarios: Vec<String>,
        #[arg(long, default_value_t = 10)]
        episodes: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        parallelism: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Rebuild the report from a results directory.
    Report { dir: PathBuf },
    /// Replay one recorded episode to RGB frames.
    Render {
        dir: PathBuf,
        #[arg(long)]
        population: String,
        #[arg(long)]
        scenario: String,
        #[arg(long, default_value_t = 0)]
        episode: u32,
        /// Also dump the 88×88 view of these players.
        #[arg(long = "view")]
        views: Vec<usize>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    let reg = match &cli.registry {
        Some(dir) => Registry::from_dir(dir),
        None => Registry::builtin(),
    }
    .context("loading registry")?;
    match cli.command {
        Command::ListSubstrates => {
            for s in reg.substrates() {
                println!("{}\t{}\t{}", s.id(), s.players(), s.name());
            }
        }
        Command::ListScenarios { substrate } => {
            for c in reg.scenario_configs() {
                if substrate.as_deref().is_some_and(|s| s != c.substrate) {
                    continue;
                }
                let mode = serde_json::to_value(c.mode)?;
                println!("{}\t{}\t{}", c.id, c.substrate, mode.as_str().unwrap_or_default());
            }
        }
        Command::Qc { bots, seed } => {
            let ids: Vec<String> = if bots.is_empty() {
                reg.bots().map(|b| b.id.clone()).collect()
            } else {
                bots
            };
            let mut rejected = 0;
            for id in &ids {
                let bot = reg.bot(id)?;
                let Some(qc) = &bot.qc else {
                    bail!("bot `{id}` has no qc spec");
                };
                let sub = qc.substrate.as_deref().unwrap_or(&bot.substrates[0]);
                let substrate = reg.substrate(sub)?;
                let partners = qc
                    .partners
                    .iter()
                    .map(|p| reg.bot_handle(p))
                    .collect::<Result<Vec<_>, _>>()?;
                let report = qc_run(
                    &reg.bot_handle(id)?,
                    substrate,
                    &partners,
                    qc.seat,
                    qc.episodes,
                    &qc.criterion,
                    seed,
                )?;
                if report.verdict == Verdict::Accept {
                    println!("accept\t{id}");
                } else {
                    rejected += 1;
                    println!("reject\t{id}\t{}", report.failures.join("; "));
                }
            }
            if rejected > 0 {
                return Ok(ExitCode::from(3));
            }
        }
        Command::Eval {
            populations,
            scenarios,
            episodes,
            seed,
            parallelism,
            out,
        } => {
            let populations = populations
                .iter()
                .map(|p| parse_population(&reg, p))
                .collect::<Result<Vec<_>, _>>()?;
            let mut ids = Vec::new();
            if scenarios.is_empty() {
                ids.extend(reg.scenario_configs().map(|c| c.id.clone()));
            }
            for s in scenarios {
                if reg.substrate(&s).is_ok() {
                    ids.extend(
                        reg.scenario_configs()
                            .filter(|c| c.substrate == s)
                            .map(|c| c.id.clone()),
                    );
                } else {
                    ids.push(s);
                }
            }
            let job = EvaluationJob {
                populations,
                scenarios: ids,
                episodes,
                seed,
                parallelism,
                out: out.clone(),
                anchors: BTreeMap::new(),
            };
            let report = run_evaluation(&reg, &job)?;
            for w in &report.warnings {
                eprintln!("warning: {w}");
            }
            println!("wrote {}", out.display());
        }
        Command::Report { dir } => {
            let records = read_records(&dir.join(RESULTS_FILE))?;
            let results: Vec<_> = records.iter().map(|r| r.to_population_result()).collect();
            let report = build_report(&results, &BTreeMap::new());
            write_report(&dir, &report)?;
            println!("{} records", records.len());
        }
        Command::Render {
            dir,
            population,
            scenario,
            episode,
            views,
            out,
        } => {
            let records = read_records(&dir.join(RESULTS_FILE))?;
            let pop = parse_population(&reg, &population)?;
            let Some(record) = records
                .iter()
                .find(|r| r.population == pop.name && r.scenario == scenario && r.episode == episode)
            else {
                bail!("no record for {}/{scenario}/{episode}", pop.name);
            };
            let m = render_record(&reg, record, &pop, &views, &out)?;
            println!("{} frames of {}x{} to {}", m.frames, m.width, m.height, out.display());
        }
    }
    Ok(ExitCode::SUCCESS)
}
