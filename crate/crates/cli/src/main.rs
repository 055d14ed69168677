//! advish: drive the adversarial vishing harness from the command line.

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use advish_core::pipeline::{self, fixtures, AttackOptions, RunConfig, RunPaths};
use advish_core::stats::WilcoxonOutcome;

#[derive(Parser)]
#[command(
    name = "advish",
    version,
    about = "Adversarial robustness harness for voice-phishing classifiers"
)]
struct Cli {
    /// Run configuration TOML.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override the config's global seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Override the config's output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Ingest, clean, tokenize, deduplicate, and split the corpus.
    Prepare,
    /// Fit TF-IDF and train every configured classifier.
    Train,
    /// Generate adversarial transcripts through the configured backends.
    Attack {
        /// Run only this backend (by name).
        #[arg(long)]
        backend: Option<String>,
        /// Prompt template TOML overriding the config's template.
        #[arg(long)]
        template: Option<PathBuf>,
        /// Concurrent in-flight generations.
        #[arg(long)]
        concurrency: Option<usize>,
        /// Generation cache directory.
        #[arg(long)]
        cache_dir: Option<PathBuf>,
        /// Build and record prompts without calling any backend.
        #[arg(long)]
        dry_run: bool,
    },
    /// Evaluate classifiers on original and adversarial transcripts.
    Eval,
    /// Run the statistical tests over an accuracy matrix.
    Stats {
        /// Accuracy matrix CSV (defaults to the run's tables/accuracy_matrix.csv).
        #[arg(long)]
        matrix: Option<PathBuf>,
    },
    /// Assemble report.json and report.md from the run artifacts.
    Report,
    /// Replay the bundled reference accuracy fixtures through the statistics
    /// pipeline (no corpus, training, or network needed).
    ReplayFixtures,
    /// Execute every phase in order: prepare, train, attack, eval, stats,
    /// report.
    Run,
}

fn load_config(cli: &Cli) -> Result<RunConfig> {
    let path = cli
        .config
        .as_ref()
        .context("--config <run.toml> is required for this subcommand")?;
    let mut config = RunConfig::load(path)?;
    if let Some(seed) = cli.seed {
        config.global_seed = seed;
    }
    if let Some(out) = &cli.out {
        config.output_dir = out.clone();
    }
    Ok(config)
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();

    match &cli.command {
        Command::Prepare => {
            let config = load_config(&cli)?;
            let summary = pipeline::phase_prepare(&config)?;
            println!(
                "prepared {} transcript(s) -> train {} / val {} / test {}",
                summary.ingested, summary.train, summary.val, summary.test
            );
            if !summary.dropped_duplicates.is_empty() {
                println!("dropped {} duplicate transcript(s)", summary.dropped_duplicates.len());
            }
            if summary.empty_after_cleaning > 0 {
                println!(
                    "warning: {} transcript(s) have no tokens after preprocessing",
                    summary.empty_after_cleaning
                );
            }
        }
        Command::Train => {
            let config = load_config(&cli)?;
            let summary = pipeline::phase_train(&config)?;
            println!(
                "fitted TF-IDF vocabulary of {} feature(s); trained: {}",
                summary.vocabulary_size,
                summary.classifiers.join(", ")
            );
        }
        Command::Attack { backend, template, concurrency, cache_dir, dry_run } => {
            let mut config = load_config(&cli)?;
            if let Some(template) = template {
                if !template.exists() {
                    bail!("template does not exist: {}", template.display());
                }
                config.attack.template = Some(template.clone());
            }
            let options = AttackOptions {
                only_backend: backend.clone(),
                concurrency_override: *concurrency,
                cache_dir_override: cache_dir.clone(),
                dry_run: *dry_run,
            };
            let summary = pipeline::phase_attack(&config, &options)?;
            if summary.dry_run {
                println!(
                    "dry run: wrote {} prompt(s) to {}",
                    summary.targets,
                    RunPaths::new(&config.output_dir).prompts().display()
                );
            } else {
                for b in &summary.backends {
                    println!(
                        "{}: {} generation(s), {} from cache, {} refusal(s), total cost ${:.6}",
                        b.attacker, b.generations, b.cache_hits, b.refusals, b.total_cost_usd
                    );
                }
            }
        }
        Command::Eval => {
            let config = load_config(&cli)?;
            let summary = pipeline::phase_eval(&config)?;
            println!(
                "evaluated {} classifier(s) against {} attacker(s); matrix at {}",
                summary.classifiers.len(),
                summary.attackers.len(),
                RunPaths::new(&config.output_dir).accuracy_matrix().display()
            );
            for s in &summary.semantics {
                println!("semantics {}: {} pair(s), mean F1 {:.4}", s.attacker, s.pairs, s.mean_f1);
            }
        }
        Command::Stats { matrix } => {
            let config = load_config(&cli)?;
            let report = pipeline::phase_stats(&config, matrix.as_deref())?;
            print_stats(&report);
            println!(
                "full report at {}",
                RunPaths::new(&config.output_dir).stats_report().display()
            );
        }
        Command::Report => {
            let config = load_config(&cli)?;
            let report = pipeline::phase_report(&config)?;
            let paths = RunPaths::new(&config.output_dir);
            println!(
                "report written: {} and {}",
                paths.report_json().display(),
                paths.report_md().display()
            );
            for (attacker, drop) in report.attackers.iter().zip(&report.average_drops) {
                println!("{attacker}: average accuracy drop {:.2}%", drop * 100.0);
            }
        }
        Command::ReplayFixtures => {
            let out = cli.out.clone().unwrap_or_else(|| PathBuf::from("replay-out"));
            replay_fixtures(&out)?;
        }
        Command::Run => {
            let config = load_config(&cli)?;
            let report = pipeline::run(&config)?;
            let paths = RunPaths::new(&config.output_dir);
            println!("run complete: {}", paths.report_json().display());
            for (attacker, drop) in report.attackers.iter().zip(&report.average_drops) {
                println!("{attacker}: average accuracy drop {:.2}%", drop * 100.0);
            }
        }
    }
    Ok(())
}

fn print_stats(report: &advish_core::stats::TestReport) {
    for (attacker, outcome) in report.attackers.iter().zip(&report.wilcoxon) {
        match outcome {
            WilcoxonOutcome::Computed { result } => println!(
                "wilcoxon {attacker}: W- {} over {} pair(s), one-tailed p {:.6}",
                result.w_minus, result.n_effective, result.p_one_tailed
            ),
            WilcoxonOutcome::NoInformation => {
                println!("wilcoxon {attacker}: no nonzero differences")
            }
        }
    }
    if !report.average_ranks.is_empty() {
        let ranks: Vec<String> = report
            .attackers
            .iter()
            .zip(&report.average_ranks)
            .map(|(a, r)| format!("{a} {r}"))
            .collect();
        println!("average ranks: {}", ranks.join(", "));
    }
    if let Some(f) = &report.friedman {
        println!(
            "friedman: chi2 {:.4} (uncorrected {:.4}), df {}, p {:.6e}",
            f.chi2, f.chi2_uncorrected, f.df, f.p
        );
    }
    for note in &report.notes {
        println!("note: {note}");
    }
}

fn replay_fixtures(out: &PathBuf) -> Result<()> {
    let replay = fixtures::replay()?;
    std::fs::create_dir_all(out)?;

    fixtures::reference_matrix().write_csv(&out.join("accuracy_matrix.csv"))?;
    let mut json = serde_json::to_string_pretty(&replay)?;
    json.push('\n');
    pipeline::write_atomic(&out.join("replay.json"), &json)?;
    pipeline::write_atomic(&out.join("summary.md"), &replay.report.render_markdown())?;
    if let Some(csv) = replay.report.nemenyi_csv() {
        pipeline::write_atomic(&out.join("nemenyi.csv"), &csv)?;
    }

    println!(
        "replayed bundled accuracy fixtures ({} classifiers x {} attackers)",
        replay.classifiers.len(),
        replay.attackers.len()
    );
    let drops: Vec<String> = replay
        .attackers
        .iter()
        .zip(&replay.average_drops)
        .map(|(a, d)| format!("{a} {:.2}%", d * 100.0))
        .collect();
    println!("average accuracy drops: {}", drops.join(", "));
    print_stats(&replay.report);
    println!("artifacts in {}", out.display());
    Ok(())
}
