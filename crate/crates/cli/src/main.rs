//! Command-line driver for the staged pipeline.
//!
//! Each subcommand runs one stage against the artifact directory, so a full
//! reproduction is:
//!
//! ```text
//! stepwell calibrate && stepwell eigen && stepwell speeds \
//!   && stepwell pulses && stepwell export-fig3
//! ```
//!
//! Exit codes: 0 success, 2 configuration error, 3 solver failure,
//! 4 missing artifact.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use stepwell::pipeline::{self, with_worker_pool, PipelineConfig};
use stepwell::Error;

#[derive(Debug, Parser)]
#[command(
    name = "stepwell",
    about = "Coupled-waveguide bound spectra, pulse sweeps, and evanescent-speed tables",
    version
)]
struct Cli {
    /// Configuration file; omitted fields keep their reference defaults.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Artifact directory override.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Worker threads for sweeps and table building (0 = one per core).
    #[arg(long, global = true, value_name = "N")]
    workers: Option<usize>,

    /// Uniform mesh-coarsening factor for smoke runs.
    #[arg(long, global = true, value_name = "F")]
    mesh_scale: Option<f64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Tune the potential to the configured coupling rate and barrier.
    Calibrate,
    /// Solve and persist every bound state below the step's ground level.
    Eigen,
    /// Build the per-eigenstate speed table from the persisted spectrum.
    Speeds,
    /// Walk the release ladder and build the pulse speed table.
    Pulses,
    /// Merge both speed tables into one plot-ready file.
    ExportFig3,
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Config(_) | Error::Domain(_) | Error::Range(_) | Error::Io(_) => 2,
        Error::Solver(_) => 3,
        Error::MissingArtifact(_) => 4,
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    let mut cfg = PipelineConfig::load(cli.config.as_deref())?;
    cfg.apply_overrides(cli.out, cli.workers, cli.mesh_scale);
    cfg.validate()?;
    let workers = cfg.workers;
    match cli.command {
        Command::Calibrate => {
            let outcome = pipeline::cmd_calibrate(&cfg)?;
            let r = &outcome.report;
            println!(
                "calibrated: v_s = {:.6} meV, h0 = {:.6}{}",
                r.params.v_s,
                r.params.h0,
                if r.passthrough { " (already on target, passed through)" } else { "" }
            );
            println!(
                "achieved: E_well_y0 = {:.6} meV, E_step_y0 = {:.6} meV, E_step_y1 = {:.6} meV",
                r.achieved.e_well_y0, r.achieved.e_step_y0, r.achieved.e_step_y1
            );
            println!("          J0 = {:.8} 1/ps, V0 = {:.6} meV", r.achieved.j0, r.achieved.v0);
            println!(
                "wrote {} and {}",
                outcome.params_path.display(),
                outcome.report_path.display()
            );
        }
        Command::Eigen => {
            let s = with_worker_pool(workers, || pipeline::cmd_eigen(&cfg))??;
            println!(
                "{} bound states below {:.6} meV: {} with n_y = 0, {} with n_y = 1, {} unlabeled",
                s.states, s.cutoff, s.series.0, s.series.1, s.excluded
            );
            println!("wrote {}", s.dir.display());
        }
        Command::Speeds => {
            let s = with_worker_pool(workers, || pipeline::cmd_speeds(&cfg))??;
            if s.records == 0 {
                println!(
                    "0 records: the spectrum holds no n_y = {} states; wrote the empty table {}",
                    s.series_n_y,
                    s.path.display()
                );
            } else {
                println!(
                    "{} records over the n_y = {} series -> {}",
                    s.records,
                    s.series_n_y,
                    s.path.display()
                );
            }
        }
        Command::Pulses => {
            let s = with_worker_pool(workers, || pipeline::cmd_pulses(&cfg))??;
            println!(
                "{} of {} releases settled; {} table records",
                s.settled, s.attempted, s.records
            );
            let (drops, steps) = s.fidelity_trend;
            if steps > 0 {
                println!("fidelity fell as <E_x> grew in {drops} of {steps} neighbor pairs");
            }
            println!("wrote {} and {}", s.manifest_path.display(), s.table_path.display());
        }
        Command::ExportFig3 => {
            let s = pipeline::cmd_export_fig3(&cfg)?;
            println!(
                "merged {} eigenstate rows and {} pulse rows -> {}",
                s.eigen_rows,
                s.pulse_rows,
                s.path.display()
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

#[cfg(test)]
mod tests {
    use clap::CommandFactory;

    use super::*;

    #[test]
    fn command_line_surface_is_stable() {
        Cli::command().debug_assert();
        let cli = Cli::try_parse_from([
            "stepwell",
            "eigen",
            "--config",
            "run.toml",
            "--out",
            "artifacts",
            "--workers",
            "2",
            "--mesh-scale",
            "4",
        ])
        .unwrap();
        assert!(matches!(cli.command, Command::Eigen));
        assert_eq!(cli.config, Some(PathBuf::from("run.toml")));
        assert_eq!(cli.out, Some(PathBuf::from("artifacts")));
        assert_eq!(cli.workers, Some(2));
        assert_eq!(cli.mesh_scale, Some(4.0));

        for name in ["calibrate", "eigen", "speeds", "pulses", "export-fig3"] {
            assert!(Cli::try_parse_from(["stepwell", name]).is_ok(), "missing subcommand {name}");
        }
    }

    #[test]
    fn errors_map_to_the_documented_exit_codes() {
        assert_eq!(exit_code(&Error::Config("bad".into())), 2);
        assert_eq!(exit_code(&Error::Domain("bad".into())), 2);
        assert_eq!(exit_code(&Error::Solver("stuck".into())), 3);
        assert_eq!(exit_code(&Error::MissingArtifact("spectrum".into())), 4);
    }
}
