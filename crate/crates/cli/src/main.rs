use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::{error, info};

use vgradar::experiment::{
    cmd_beampattern, cmd_calibrate, cmd_image, cmd_simulate, cmd_vsd, exit_code, ExperimentConfig, Width, EXIT_OK, EXIT_PARTIAL, PRESETS,
};
use vgradar::{Error, Result};

#[derive(Parser)]
#[command(name = "vgradar", version, about = "Vision-guided SFCW MIMO radar experiments")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Fit the camera-to-radar transform and report per-axis MAE.
    Calibrate(Common),
    /// Vital-sign detection for every subject, with channel-combining comparison.
    Vsd(Common),
    /// Reconstruct a 3-D image of the static scatterers.
    Image(Common),
    /// Array gain map and beamwidth report.
    Beampattern(Common),
    /// Export the simulated radar data cube and scene truth.
    Simulate(Common),
}

#[derive(Args)]
struct Common {
    /// Experiment config (JSON).
    #[arg(long, conflicts_with = "preset", required_unless_present = "preset")]
    config: Option<PathBuf>,
    /// Built-in scene preset instead of a config file.
    #[arg(long, value_parser = PRESETS)]
    preset: Option<String>,
    /// Output directory (overrides the config).
    #[arg(long)]
    out: Option<PathBuf>,
    /// RNG seed (overrides the config; required with --preset).
    #[arg(long, required_unless_present = "config")]
    seed: Option<u64>,
}

impl Common {
    fn load(&self) -> Result<ExperimentConfig> {
        let mut cfg = match (&self.config, &self.preset) {
            (Some(p), _) => ExperimentConfig::from_file(p)?,
            (None, Some(name)) => ExperimentConfig::from_preset(name, self.seed.unwrap_or_default())?,
            (None, None) => return Err(Error::InvalidConfig("either --config or --preset is required".into())),
        };
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(o) = &self.out {
            cfg.out_dir = std::path::absolute(o)?;
        }
        Ok(cfg)
    }
}

fn width(w: &Width) -> String {
    match w {
        Width::Degrees(d) => format!("{d:.3} deg"),
        Width::Unbounded(s) => s.clone(),
    }
}

fn run(cmd: &Cmd) -> Result<i32> {
    match cmd {
        Cmd::Calibrate(c) => {
            let cfg = c.load()?;
            let out = cmd_calibrate(&cfg)?;
            if let Some(r) = &out.report {
                for row in &r.rows {
                    println!("{:<16} x {:.2}  y {:.2}  z {:.2}  average {:.2} {}", row.method, row.x, row.y, row.z, row.average, r.units);
                }
            }
            info!("wrote calibration to {}", cfg.out_dir.display());
            Ok(EXIT_OK)
        }
        Cmd::Vsd(c) => {
            let cfg = c.load()?;
            let run = cmd_vsd(&cfg)?;
            for s in &run.metrics.subjects {
                match (&s.error, s.rr_bpm, s.hr_bpm) {
                    (None, Some(rr), Some(hr)) => println!(
                        "{:<10} RR {rr:6.2} (truth {:5.1})  HR {hr:6.2} (truth {:5.1})  {}",
                        s.subject_id,
                        s.truth_rr_bpm,
                        s.truth_hr_bpm,
                        if s.within_tolerance { "ok" } else { "out of tolerance" }
                    ),
                    (e, _, _) => println!("{:<10} failed: {}", s.subject_id, e.as_deref().unwrap_or("no estimate")),
                }
            }
            for (name, m) in [
                ("coherent", &run.comparison.coherent),
                ("non-coherent", &run.comparison.non_coherent),
                ("single channel", &run.comparison.single_channel),
            ] {
                println!("{name:<15} {}/{} within tolerance", m.n_within_tolerance, m.subjects.len());
            }
            Ok(if run.n_failed() > 0 { EXIT_PARTIAL } else { EXIT_OK })
        }
        Cmd::Image(c) => {
            let cfg = c.load()?;
            let r = cmd_image(&cfg)?;
            println!("{} peaks above {:.2} of the maximum", r.peaks.len(), r.threshold);
            for p in &r.peaks {
                println!("  ({:.4}, {:.4}, {:.4}) m  relative {:.3}", p.position[0], p.position[1], p.position[2], p.magnitude);
            }
            Ok(EXIT_OK)
        }
        Cmd::Beampattern(c) => {
            let cfg = c.load()?;
            let r = cmd_beampattern(&cfg)?;
            for w in &r.checks {
                println!(
                    "steer {:5.1} deg  3 dB width {}  first null {}  predicted {}",
                    w.steer_azimuth_deg,
                    width(&w.half_power_width_deg),
                    width(&w.null_offset_deg),
                    width(&w.predicted_deg)
                );
            }
            Ok(EXIT_OK)
        }
        Cmd::Simulate(c) => {
            let cfg = c.load()?;
            cmd_simulate(&cfg)?;
            println!("wrote cube to {}", cfg.out_dir.display());
            Ok(EXIT_OK)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let code = match run(&cli.cmd) {
        Ok(c) => c,
        Err(e) => {
            error!("{e}");
            exit_code(&e)
        }
    };
    ExitCode::from(code as u8)
}
