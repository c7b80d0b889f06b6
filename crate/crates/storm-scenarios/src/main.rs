use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use storm_core::analytics::find_storm_frequencies;
use storm_scenarios::calibrate::calibrate_couplings;
use storm_scenarios::config::ScenarioConfig;
use storm_scenarios::output;
use storm_scenarios::quad::run_quadrupolar_scenario;
use storm_scenarios::sweep::{run_duration_sweep, run_frequency_sweep, SweepOutcome};

/// Simulator for singlet-to-heteronucleus polarization transfer driven by
/// rotating magnetic fields at zero and ultralow field.
#[derive(Parser)]
#[command(name = "storm", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Scenario configuration file.
    #[arg(long)]
    config: PathBuf,

    /// Output path (CSV for sweeps/quad, JSON otherwise); overrides
    /// output.path from the config.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Worker threads for sweep evaluation (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Find resonance frequencies and print them with branch labels.
    Resonance(CommonArgs),
    /// Sweep the rotation frequency at fixed pulse duration.
    SweepFreq(SweepArgs),
    /// Sweep the pulse duration at fixed rotation frequency.
    SweepTau(SweepArgs),
    /// Map transfer efficiency against a quadrupolar partner's couplings.
    Quad(CommonArgs),
    /// Fit the scalar couplings to observed resonance frequencies.
    Calibrate(CommonArgs),
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: CommonArgs,

    /// Override the sweep point count.
    #[arg(long)]
    points: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Resonance(args) => resonance(args),
        Command::SweepFreq(args) => sweep(args, true),
        Command::SweepTau(args) => sweep(args, false),
        Command::Quad(args) => quad(args),
        Command::Calibrate(args) => calibrate(args),
    }
}

fn load_config(args: &CommonArgs) -> Result<ScenarioConfig> {
    let mut config = ScenarioConfig::from_file(&args.config)
        .with_context(|| format!("loading {}", args.config.display()))?;
    if let Some(out) = &args.out {
        config.output = Some(out.clone());
    }
    if let Some(threads) = args.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .context("configuring thread pool")?;
    }
    Ok(config)
}

fn resonance(args: CommonArgs) -> Result<()> {
    let config = load_config(&args)?;
    let found = find_storm_frequencies(
        &config.system,
        config.b_bias,
        config.b_rot,
        config.search.min,
        config.search.max,
    )?;
    if found.resonances.is_empty() {
        println!(
            "no resonances in [{}, {}] Hz",
            config.search.min, config.search.max
        );
    }
    for r in &found.resonances {
        println!(
            "root {:+10.3} Hz  branch {:<22}  ideal p_s {:+.4}  d(gap)/d(nu) {:+.3e} rad/s/Hz{}",
            r.nu_hz,
            r.branch.to_string(),
            r.predicted_polarization,
            r.gap_slope,
            if r.degenerate { "  [degenerate]" } else { "" }
        );
    }
    for nu in &found.degenerate_points {
        println!("degenerate effective field near {nu:+.1} Hz (gap undefined)");
    }
    if let Some(path) = &config.output {
        let listing: Vec<serde_json::Value> = found
            .resonances
            .iter()
            .map(|r| {
                serde_json::json!({
                    "nu_hz": r.nu_hz,
                    "branch": r.branch.to_string(),
                    "predicted_polarization": r.predicted_polarization,
                    "gap_slope_rad_per_s_per_hz": r.gap_slope,
                    "degenerate": r.degenerate,
                })
            })
            .collect();
        output::write_summary_json(&listing, path)
            .with_context(|| format!("writing {}", path.display()))?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn sweep(args: SweepArgs, frequency: bool) -> Result<()> {
    let mut config = load_config(&args.common)?;
    if let Some(points) = args.points {
        match config.sweep.as_mut() {
            Some(sweep) => sweep.points = points,
            None => bail!("--points given but the config has no sweep section"),
        }
    }
    let outcome: SweepOutcome = if frequency {
        run_frequency_sweep(&config)?
    } else {
        run_duration_sweep(&config)?
    };
    if let Some(warning) = &outcome.summary.warning {
        eprintln!("warning: {warning}");
    }
    println!(
        "{} sweep, {} points: peak p_s {:+.4} at {}  (FWHM {})",
        outcome.summary.axis,
        outcome.summary.points,
        outcome.summary.exact.peak_p_s,
        outcome.summary.exact.peak_value,
        outcome
            .summary
            .exact
            .fwhm
            .map_or("n/a".to_string(), |w| format!("{w:.3}")),
    );
    let path = config
        .output
        .clone()
        .context("no output path: set output.path in the config or pass --out")?;
    output::write_sweep_csv(&outcome, &path)
        .with_context(|| format!("writing {}", path.display()))?;
    let summary = output::summary_path(&path);
    output::write_summary_json(&outcome.summary, &summary)
        .with_context(|| format!("writing {}", summary.display()))?;
    println!("wrote {} and {}", path.display(), summary.display());
    Ok(())
}

fn quad(args: CommonArgs) -> Result<()> {
    let config = load_config(&args)?;
    let outcome = run_quadrupolar_scenario(&config)?;
    println!(
        "quad partner {}: efficiency {:.3}..{:.3} (zero-coupling {:.6})",
        outcome.summary.partner,
        outcome.summary.min_efficiency,
        outcome.summary.max_efficiency,
        outcome.summary.zero_coupling_efficiency,
    );
    let path = config
        .output
        .clone()
        .context("no output path: set output.path in the config or pass --out")?;
    output::write_quad_csv(&outcome.records, &path)
        .with_context(|| format!("writing {}", path.display()))?;
    let summary = output::summary_path(&path);
    output::write_summary_json(&outcome.summary, &summary)
        .with_context(|| format!("writing {}", summary.display()))?;
    println!("wrote {} and {}", path.display(), summary.display());
    Ok(())
}

fn calibrate(args: CommonArgs) -> Result<()> {
    let config = load_config(&args)?;
    let spec = config
        .calibrate
        .as_ref()
        .context("config has no calibrate.bias_t / calibrate.roots_hz")?;
    let conditions: Vec<(f64, f64)> = spec
        .bias_fields
        .iter()
        .copied()
        .zip(spec.target_roots.iter().copied())
        .collect();
    let fit = calibrate_couplings(&config.system, config.b_rot, &conditions)?;
    println!(
        "fitted couplings: J12 = {:.6} Hz, J13 = {:.6} Hz, J23 = {:.6} Hz ({} iterations)",
        fit.j12, fit.j13, fit.j23, fit.iterations
    );
    for ((residual, sensitivity), (bias, target)) in fit
        .residuals_hz
        .iter()
        .zip(&fit.bias_sensitivity_hz)
        .zip(&conditions)
    {
        println!(
            "  condition (bias {bias:.2e} T, target {target} Hz): residual {residual:+.4} Hz, \
             +5% bias shifts root by {sensitivity:+.3} Hz"
        );
    }
    if let Some(path) = &config.output {
        output::write_summary_json(&fit, path)
            .with_context(|| format!("writing {}", path.display()))?;
        println!("wrote {}", path.display());
    }
    Ok(())
}
