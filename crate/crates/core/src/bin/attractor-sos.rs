use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};

use attractor_sos::pipeline::{run_converse, run_pipeline, sweep_report, verify, PipelineError, RunConfig, Stage};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "attractor-sos", version, about = "SOS outer approximations of attractors of polynomial ODEs")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Solve, certify, simulate and write the artifact directory.
    Run {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Comma-separated degrees; each runs in its own process under OUT/d<k>.
        #[arg(long, value_delimiter = ',')]
        degree_sweep: Option<Vec<u32>>,
        #[arg(long)]
        no_k1: bool,
        #[arg(long)]
        seed: Option<u64>,
        /// Override the config's degree.
        #[arg(long, hide = true)]
        degree: Option<u32>,
    },
    /// Re-check a stored certificate against a config.
    Verify {
        certificate: PathBuf,
        config: PathBuf,
        #[arg(long, default_value_t = 1e-6)]
        residual_tol: f64,
    },
    /// Converse construction for a system with a known analytic W.
    Converse {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn fail(e: &PipelineError) -> ExitCode {
    println!("{}", serde_json::json!({ "status": "failed", "stage": e.stage, "message": e.message }));
    ExitCode::from(2)
}

fn load(path: &Path, no_k1: bool, seed: Option<u64>, degree: Option<u32>) -> Result<RunConfig, PipelineError> {
    let mut cfg = RunConfig::load(path)?;
    if no_k1 {
        cfg.include_k1 = false;
    }
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(d) = degree {
        cfg.d = d;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn sweep(config: &Path, cfg: &RunConfig, out: &Path, degrees: &[u32], no_k1: bool, seed: Option<u64>) -> Result<(), PipelineError> {
    let exe = std::env::current_exe().map_err(|e| PipelineError::new(Stage::Config, e))?;
    let children: Vec<_> = degrees
        .iter()
        .map(|d| {
            let mut c = Command::new(&exe);
            c.arg("run").arg(config).arg("--out").arg(out.join(format!("d{d}"))).arg("--degree").arg(d.to_string());
            if no_k1 {
                c.arg("--no-k1");
            }
            if let Some(s) = seed {
                c.arg("--seed").arg(s.to_string());
            }
            c.spawn().map(|child| (*d, child))
        })
        .collect::<Result<_, _>>()
        .map_err(|e| PipelineError::new(Stage::Solve, e))?;
    let mut failed = Vec::new();
    for (d, mut child) in children {
        let ok = child.wait().map(|s| s.success()).unwrap_or(false);
        if !ok {
            failed.push(d);
        }
    }
    if !failed.is_empty() {
        return Err(PipelineError::new(Stage::Solve, format!("degree runs failed: {failed:?}")));
    }
    let report = sweep_report(cfg, out, degrees)?;
    println!("{}", serde_json::to_string_pretty(&report).unwrap_or_default());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.cmd {
        Cmd::Run { config, out, degree_sweep, no_k1, seed, degree } => load(&config, no_k1, seed, degree).and_then(|cfg| {
            let out = out.or_else(|| cfg.output_dir.clone()).unwrap_or_else(|| PathBuf::from("out"));
            match degree_sweep {
                Some(ds) => {
                    let mut ds = ds;
                    ds.dedup();
                    if let Some(bad) = ds.iter().find(|d| **d == 0 || **d % 2 == 1) {
                        return Err(PipelineError::new(Stage::Config, format!("sweep degree {bad} is not positive and even")));
                    }
                    sweep(&config, &cfg, &out, &ds, no_k1, seed)
                }
                None => run_pipeline(&cfg, &out).map(|o| {
                    let r = &o.report;
                    println!(
                        "{}",
                        serde_json::json!({
                            "status": "ok",
                            "out": o.out_dir,
                            "max_lyapunov_residual": r.certificate.max_lyapunov_residual,
                            "min_boundary_margin": r.certificate.min_boundary_margin,
                            "sublevel_volume": r.sublevel_volume.value,
                        })
                    );
                }),
            }
        }),
        Cmd::Verify { certificate, config, residual_tol } => load(&config, false, None, None).and_then(|cfg| {
            let v = verify(&certificate, &cfg, residual_tol)?;
            println!("{}", serde_json::to_string_pretty(&v).unwrap_or_default());
            if v.passed {
                Ok(())
            } else {
                Err(PipelineError::new(Stage::Certify, "certificate failed verification"))
            }
        }),
        Cmd::Converse { config, out } => load(&config, false, None, None).and_then(|cfg| {
            let dir = out.or_else(|| cfg.output_dir.clone()).unwrap_or_else(|| PathBuf::from("out"));
            let o = run_converse(&cfg, Some(&dir))?;
            let r = &o.result;
            println!(
                "{}",
                serde_json::json!({
                    "out": dir,
                    "max_residual": r.report.max_lyapunov_residual,
                    "fit_error": r.fit_error,
                    "fit_diagnostic": o.fit_diagnostic,
                })
            );
            match &o.fit_diagnostic {
                None if r.report.max_lyapunov_residual < 0.0 => Ok(()),
                Some(m) => Err(PipelineError::new(Stage::Certify, m)),
                None => Err(PipelineError::new(Stage::Certify, "sampled residual is not negative")),
            }
        }),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(&e),
    }
}
