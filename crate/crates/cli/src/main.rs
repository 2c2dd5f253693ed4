use std::fs::File;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgGroup, Parser, ValueEnum};
use hardy_retrieval::report::{load_zeros_csv, run, Method, RunConfig, Source};
use hardy_retrieval::Error;
use serde_json::json;

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MethodArg {
    Mqmv,
    Mqpc,
}

/// Phase retrieval in the Hardy space from modulus measurements on circles.
#[derive(Debug, Parser)]
#[command(name = "retrieve", version)]
#[command(group(ArgGroup::new("source").required(true).args(["input", "example"])))]
#[command(group(ArgGroup::new("ex2").args(["zeros", "seed"])))]
struct Cli {
    #[arg(long, value_enum)]
    method: MethodArg,
    /// Nodes per circle.
    #[arg(long)]
    n: usize,
    /// Modulus CSV with columns rho,j,modulus.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Built-in example (1 or 2).
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2))]
    example: Option<u8>,
    /// Zeros for example 2, CSV with columns re,im.
    #[arg(long, requires = "example")]
    zeros: Option<PathBuf>,
    /// Seed for the example 2 zero draw.
    #[arg(long, requires = "example")]
    seed: Option<u64>,
    /// Circle radius for mqpc.
    #[arg(long)]
    r: Option<f64>,
    /// Comma-separated interior radii.
    #[arg(long, value_delimiter = ',')]
    radii: Option<Vec<f64>>,
    /// Minimum-value threshold for mqmv.
    #[arg(long)]
    epsilon: Option<f64>,
    /// Zero budget for mqmv.
    #[arg(long)]
    max_zeros: Option<usize>,
    /// Laurent truncation order for mqpc.
    #[arg(long)]
    laurent_order: Option<usize>,
    /// Pole count bound for mqpc.
    #[arg(long)]
    kmax: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

fn config(cli: Cli) -> Result<RunConfig, Error> {
    let method = match cli.method {
        MethodArg::Mqmv => Method::Mqmv,
        MethodArg::Mqpc => Method::Mqpc,
    };
    if cli.zeros.is_some() && cli.example != Some(2) {
        return Err(Error::InvalidArgument("--zeros applies to example 2 only".into()));
    }
    let source = match (cli.input, cli.example) {
        (Some(path), _) => Source::Input(path),
        (None, Some(1)) => Source::Example1,
        _ => {
            let zeros = match cli.zeros {
                Some(path) => Some(load_zeros_csv(File::open(path)?)?),
                None => None,
            };
            Source::Example2 { zeros }
        }
    };
    let mut cfg = RunConfig::new(method, cli.n, source, cli.out);
    cfg.radii = cli.radii;
    cfg.r = cli.r;
    cfg.epsilon = cli.epsilon;
    cfg.max_zeros = cli.max_zeros;
    cfg.laurent_order = cli.laurent_order;
    cfg.k_max = cli.kmax;
    cfg.seed = cli.seed;
    Ok(cfg)
}

fn fail(kind: &str, message: String, code: u8) -> ExitCode {
    eprintln!("{}", json!({ "error": kind, "message": message }));
    ExitCode::from(code)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => return fail("usage", e.to_string().trim().trim_start_matches("error: ").to_string(), 2),
    };
    let result = config(cli).and_then(|cfg| {
        let out = cfg.output_dir.clone();
        run(&cfg).map(|report| (report, out))
    });
    match result {
        Ok((report, out)) => {
            println!(
                "{}",
                json!({
                    "status": "ok",
                    "report": out.join("report.json"),
                    "m": report.m,
                    "zeros": report.degree(),
                    "final_error": report.final_error,
                    "wall_time_s": report.wall_time_s,
                })
            );
            ExitCode::SUCCESS
        }
        Err(e) => fail(e.kind(), e.to_string(), if e.is_numerical() { 3 } else { 2 }),
    }
}
