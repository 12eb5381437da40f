use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use newsvalue::pipeline::{self, PipelineConfig};
use newsvalue::Result;

#[derive(Parser)]
#[command(name = "newsvalue", version, about = "Predict global newsworthiness of local disaster reports")]
struct Cli {
    /// Pipeline config (TOML); relative paths in it resolve against its directory.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Filter candidate accounts down to curated local sources.
    Curate,
    /// Write the feature matrix for posts by curated sources.
    Extract,
    /// Label posts against wire headlines and propagate through links.
    Label,
    /// Cross-validate and train the newsworthiness classifier.
    Train,
    /// Score posts with a trained model.
    Predict,
    /// Run the feature-group ablation.
    Evaluate,
    /// Compare feed and wire timestamps per event.
    Timeliness {
        #[arg(long)]
        feed: Option<PathBuf>,
        #[arg(long)]
        wire: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<()> {
    let mut cfg = match &cli.config {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    match cli.command {
        Command::Curate => {
            let s = pipeline::cmd_curate(&cfg)?;
            println!("input                {}", s.input);
            println!("removed followers    {}", s.removed_followers);
            println!("removed no location  {}", s.removed_no_location);
            println!("removed not local    {}", s.removed_not_local);
            println!("readmitted topical   {}", s.readmitted);
            println!("skipped              {}", s.skipped);
            println!("survivors            {}", s.survivors);
        }
        Command::Extract => {
            let n = pipeline::cmd_extract(&cfg)?;
            println!("extracted {n} posts -> {}", cfg.paths.features.display());
        }
        Command::Label => {
            let c = pipeline::cmd_label(&cfg)?;
            println!("matched    {}", c.matched);
            println!("unmatched  {}", c.unmatched);
            println!("tardy      {}", c.tardy);
            println!("propagation +{} (direct {}, via link {})", c.matched - c.matched_direct, c.matched_direct, c.via_link);
        }
        Command::Train => {
            let r = pipeline::cmd_train(&cfg)?;
            print!("{}", r.table());
            println!("model -> {}", cfg.paths.model.display());
        }
        Command::Predict => {
            let p = pipeline::cmd_predict(&cfg)?;
            let pos = p.iter().filter(|x| x.newsworthy).count();
            println!("scored {} posts, {pos} newsworthy -> {}", p.len(), cfg.paths.predictions.display());
        }
        Command::Evaluate => {
            print!("{}", pipeline::format_ablation(&pipeline::cmd_evaluate(&cfg)?));
        }
        Command::Timeliness { feed, wire, out } => {
            let feed = feed.unwrap_or(cfg.paths.feed);
            let wire = wire.unwrap_or(cfg.paths.wire);
            let out = out.unwrap_or(cfg.paths.timeliness);
            print!("{}", pipeline::format_timeliness(&pipeline::cmd_timeliness(&feed, &wire, &out)?));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
