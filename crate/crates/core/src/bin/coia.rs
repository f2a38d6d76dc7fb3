use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use coia::pipeline::{Command, Pipeline, PipelineConfig};
use coia::synth::{self, SynthSpec};
use coia::{Error, Result};

#[derive(Parser)]
#[command(name = "coia", version, about = "Coordinated inauthentic activity detection")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(clap::Args)]
struct RunArgs {
    /// Pipeline config JSON.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides the config's out_dir.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Validate and normalize posts.
    Ingest(RunArgs),
    /// Build the co-URL matrix and similarity networks.
    Courl(RunArgs),
    /// Grid surfaces for every network.
    Grid(RunArgs),
    /// Dismantle every network and merge the results.
    Detect(RunArgs),
    /// Text similarity network detection.
    Tsn(RunArgs),
    /// Characterize coordinated and organic cohorts.
    Analyze(RunArgs),
    /// Run everything and write a consolidated report.
    Report(RunArgs),
    /// Generate a synthetic fixture plus a config to run it.
    Synth {
        /// Synthetic spec JSON; defaults are used when absent.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn write(dir: &Path, name: &str, text: &str) -> Result<()> {
    let path = dir.join(name);
    fs::write(&path, text).map_err(|e| Error::io(format!("writing {}", path.display()), e))
}

fn run_synth(config: Option<&Path>, out: &Path, seed: Option<u64>) -> Result<()> {
    let mut spec = match config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
            serde_json::from_str::<SynthSpec>(&text).map_err(|e| Error::Config(e.to_string()))?
        }
        None => SynthSpec::default(),
    };
    if let Some(seed) = seed {
        spec.seed = seed;
    }
    let fixture = synth::generate(&spec)?;
    fs::create_dir_all(out).map_err(|e| Error::io(format!("creating {}", out.display()), e))?;
    write(out, "posts.jsonl", &fixture.posts_jsonl())?;
    write(out, "truth.csv", &fixture.truth.to_csv())?;
    let spec_json = serde_json::to_string_pretty(&spec).expect("spec serialization is infallible");
    write(out, "synth_spec.json", &(spec_json + "\n"))?;
    let mut pipeline = PipelineConfig {
        posts: vec!["posts.jsonl".into()],
        out_dir: Some("results".into()),
        ..PipelineConfig::default()
    };
    if let Some(emb) = &fixture.embeddings {
        write(out, "embeddings.jsonl", &emb.to_jsonl())?;
        pipeline.embeddings = Some("embeddings.jsonl".into());
    }
    write(out, "config.json", &(pipeline.to_json() + "\n"))?;
    println!("{}", out.join("config.json").display());
    Ok(())
}

fn run_pipeline(command: Command, args: &RunArgs) -> Result<()> {
    let pipeline = Pipeline::from_config_file(&args.config)?;
    let out = pipeline.out_dir(args.out.as_deref())?;
    for path in pipeline.run(command, &out)? {
        println!("{}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Cmd::Ingest(a) => run_pipeline(Command::Ingest, a),
        Cmd::Courl(a) => run_pipeline(Command::Courl, a),
        Cmd::Grid(a) => run_pipeline(Command::Grid, a),
        Cmd::Detect(a) => run_pipeline(Command::Detect, a),
        Cmd::Tsn(a) => run_pipeline(Command::Tsn, a),
        Cmd::Analyze(a) => run_pipeline(Command::Analyze, a),
        Cmd::Report(a) => run_pipeline(Command::Report, a),
        Cmd::Synth { config, out, seed } => run_synth(config.as_deref(), out, *seed),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("coia: {e}");
            ExitCode::FAILURE
        }
    }
}
