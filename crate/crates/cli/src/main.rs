mod manifest;
mod plot;

use std::fs::{self, File};
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use hypfpp_core::ball::DEFAULT_VERTEX_CAP;
use hypfpp_core::experiments::{ExperimentConfig, ExperimentRecord, Harness, EXPERIMENT_NAMES, TOOL_VERSION};
use hypfpp_core::io::{read_ball, write_ball, BallFileSummary};
use hypfpp_core::{build_ball, CayleyBall, GraphModel};
use thiserror::Error;

use manifest::{file_sha256, Artifact, BallRef, HashKind, ManifestRun, RunManifest};

#[derive(Parser)]
#[command(
    name = "hypfpp",
    version,
    about = "First passage percolation on hyperbolic balls"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a ball and write it with a JSON summary.
    Build {
        /// Model spec such as "free:2", "surface:2" or "tess:8,8".
        #[arg(long)]
        model: String,
        #[arg(long)]
        radius: u32,
        /// Ball file to write; the summary goes next to it as .json.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = DEFAULT_VERTEX_CAP)]
        cap_vertices: usize,
    },
    /// Run one experiment from a config file.
    Run {
        /// One of r-tail, exceptional-fraction, wandering, coalescence,
        /// multiplicity, density-probe.
        experiment: String,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        workers: usize,
        #[arg(long)]
        seed_override: Option<u64>,
        #[arg(long, default_value_t = DEFAULT_VERTEX_CAP)]
        cap_vertices: usize,
        /// Use a ball file from `build` instead of building one.
        #[arg(long)]
        ball: Option<PathBuf>,
    },
    /// Re-check the records and hashes of an output directory.
    Verify { dir: PathBuf },
}

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] hypfpp_core::Error),
    #[error("{failed} of {total} replications failed, above the 5% limit")]
    Failures { failed: usize, total: usize },
    #[error("verification failed:\n  {}", .0.join("\n  "))]
    Verify(Vec<String>),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    fn exit_code(&self) -> u8 {
        use hypfpp_core::Error as E;
        match self {
            CliError::Usage(_) => 2,
            CliError::Core(E::ResourceLimit { .. }) => 3,
            CliError::Core(
                E::Config(_)
                | E::InvalidModel(_)
                | E::Json(_)
                | E::Format(_)
                | E::Precondition(_)
                | E::NoEligiblePair(_),
            ) => 2,
            CliError::Core(_) => 1,
            CliError::Failures { .. } => 4,
            CliError::Verify(_) => 5,
            CliError::Io { .. } => 1,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Build {
            model,
            radius,
            out,
            cap_vertices,
        } => cmd_build(&model, radius, &out, cap_vertices),
        Command::Run {
            experiment,
            config,
            out,
            workers,
            seed_override,
            cap_vertices,
            ball,
        } => cmd_run(
            &experiment,
            &config,
            &out,
            workers,
            seed_override,
            cap_vertices,
            ball.as_deref(),
        ),
        Command::Verify { dir } => cmd_verify(&dir),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn summary_path(ball_path: &Path) -> PathBuf {
    ball_path.with_extension("json")
}

fn cmd_build(model: &str, radius: u32, out: &Path, cap: usize) -> Result<(), CliError> {
    let model: GraphModel = model.parse()?;
    let ball = build_ball(model, radius, cap)?;
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    let file = File::create(out).map_err(io_err(out))?;
    let checksum = write_ball(&ball, BufWriter::new(file))?;
    let summary = BallFileSummary::new(&ball, checksum);
    let summary_file = summary_path(out);
    let text = serde_json::to_string_pretty(&summary).map_err(hypfpp_core::Error::from)?;
    fs::write(&summary_file, text + "\n").map_err(io_err(&summary_file))?;
    println!(
        "{} radius {}: {} vertices, {} edges, spheres {:?}",
        model,
        radius,
        ball.vertex_count(),
        ball.edge_count(),
        ball.sphere_sizes()
    );
    Ok(())
}

fn load_ball(path: &Path) -> Result<(CayleyBall, BallRef), CliError> {
    let file = File::open(path).map_err(io_err(path))?;
    let ball = read_ball(BufReader::new(file))?;
    let checksum = file_sha256(path).map_err(io_err(path))?;
    Ok((
        ball,
        BallRef {
            path: path.display().to_string(),
            checksum,
        },
    ))
}

fn cmd_run(
    experiment: &str,
    config_path: &Path,
    out: &Path,
    workers: usize,
    seed_override: Option<u64>,
    cap: usize,
    ball_path: Option<&Path>,
) -> Result<(), CliError> {
    if !EXPERIMENT_NAMES.contains(&experiment) {
        return Err(CliError::Usage(format!(
            "unknown experiment {experiment:?}; expected one of {}",
            EXPERIMENT_NAMES.join(", ")
        )));
    }
    let mut config = ExperimentConfig::from_file(config_path)?;
    if config.experiment() != experiment {
        return Err(CliError::Usage(format!(
            "config {} describes {}, not {experiment}",
            config_path.display(),
            config.experiment()
        )));
    }
    if let Some(seed) = seed_override {
        config.master_seed = seed;
    }
    let (ball, ball_ref) = match ball_path {
        Some(p) => {
            let (b, r) = load_ball(p)?;
            (b, Some(r))
        }
        None => (build_ball(config.model, config.radius, cap)?, None),
    };
    let record = Harness::new(&ball).with_workers(workers).run(&config)?;
    drop(ball);

    fs::create_dir_all(out).map_err(io_err(out))?;
    let mut artifacts = Vec::new();
    let mut write = |name: String, bytes: Vec<u8>, kind: HashKind, content_hash: Option<String>| {
        let path = out.join(&name);
        fs::write(&path, &bytes).map_err(io_err(&path))?;
        let sha256 = match content_hash {
            Some(h) => h,
            None => file_sha256(&path).map_err(io_err(&path))?,
        };
        artifacts.push(Artifact {
            path: name,
            sha256,
            kind,
        });
        Ok::<(), CliError>(())
    };
    let stem = experiment.to_string();
    write(
        format!("{stem}.record.json"),
        (record.to_json_pretty()? + "\n").into_bytes(),
        HashKind::RecordContent,
        Some(record.content_hash()?),
    )?;
    for table in record.tables() {
        let mut bytes = Vec::new();
        table.write_csv(&mut bytes)?;
        write(format!("{stem}.{}.csv", table.name), bytes, HashKind::File, None)?;
    }
    write(
        format!("{stem}.plot.py"),
        plot::plot_script(&record, &stem).into_bytes(),
        HashKind::File,
        None,
    )?;

    let mut manifest = RunManifest::load_or_new(out).map_err(io_err(out))?;
    manifest.runs.insert(
        stem,
        ManifestRun {
            config_path: config_path.display().to_string(),
            ball: ball_ref,
            artifacts,
        },
    );
    manifest.save(out).map_err(io_err(out))?;

    println!(
        "{}: {} replications, {} failed, content hash {}",
        record.experiment,
        record.replications.len(),
        record.failed,
        record.content_hash()?
    );
    if record.failure_limit_exceeded {
        return Err(CliError::Failures {
            failed: record.failed,
            total: record.replications.len(),
        });
    }
    Ok(())
}

fn cmd_verify(dir: &Path) -> Result<(), CliError> {
    let manifest = RunManifest::load(dir).map_err(io_err(dir))?;
    let mut problems = Vec::new();
    let mut records = 0;
    for (name, run) in &manifest.runs {
        for artifact in &run.artifacts {
            let path = dir.join(&artifact.path);
            let actual = match artifact.kind {
                HashKind::File => file_sha256(&path).map_err(|e| e.to_string()),
                HashKind::RecordContent => fs::read_to_string(&path)
                    .map_err(|e| e.to_string())
                    .and_then(|t| ExperimentRecord::from_json(&t).map_err(|e| e.to_string()))
                    .and_then(|r| {
                        records += 1;
                        if r.provenance.tool_version != TOOL_VERSION {
                            eprintln!(
                                "warning: {} was written by version {}, this is {TOOL_VERSION}",
                                artifact.path, r.provenance.tool_version
                            );
                        }
                        for v in r.check_invariants() {
                            problems.push(format!("{name}: {v}"));
                        }
                        r.content_hash().map_err(|e| e.to_string())
                    }),
            };
            match actual {
                Ok(h) if h == artifact.sha256 => {}
                Ok(_) => problems.push(format!("{}: hash mismatch", artifact.path)),
                Err(e) => problems.push(format!("{}: {e}", artifact.path)),
            }
        }
    }
    if records == 0 {
        problems.push("no records in manifest".into());
    }
    if problems.is_empty() {
        println!("ok: {records} records verified");
        Ok(())
    } else {
        Err(CliError::Verify(problems))
    }
}
