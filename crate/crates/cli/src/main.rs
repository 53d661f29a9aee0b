//! `nashkit`: run scenario files and export their plot tables.
//!
//! Exit codes: 0 every check passed, 1 a check or pipeline failed (the
//! report says which), 2 the input could not be read or parsed.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nashkit::scenario::{
    emit_plot_data, write_atomic, write_outputs, IdentitySpec, RunOptions, Scenario, DEFAULT_SEED,
};

#[derive(Parser)]
#[command(
    name = "nashkit",
    version,
    about = "Exact verification runs for Nash constructions"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    flags: Flags,
}

#[derive(Args)]
struct Flags {
    /// Sampling seed [default: 42]
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Sample points per dimension [default: 32]
    #[arg(long, global = true)]
    density: Option<usize>,
    /// Derivative order of the seminorms [default: 1]
    #[arg(long, global = true)]
    mu: Option<u32>,
    /// Smallest accepted certificate margin [default: 1e-12]
    #[arg(long, global = true)]
    tolerance: Option<f64>,
    /// Output directory [default: reports]
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario file and write its report and plot tables
    Run { scenario: PathBuf },
    /// Run the exact derivative identity sweeps
    VerifyIdentities,
    /// Write the CSV tables of an existing report
    PlotData { report: PathBuf },
}

fn fail_input(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(2)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let f = &cli.flags;
    let out = f.out.clone().unwrap_or_else(|| PathBuf::from("reports"));
    match &cli.command {
        Command::Run { scenario } => {
            let sc = match Scenario::load(scenario) {
                Ok(sc) => sc,
                Err(e) => return fail_input(e),
            };
            let opts = RunOptions {
                seed: f.seed,
                density: f.density,
                mu: f.mu,
                tolerance: f.tolerance,
            };
            let outcome = sc.run(&opts);
            let written = match write_outputs(&out, &sc.name, &outcome) {
                Ok(w) => w,
                Err(e) => return fail_input(format!("cannot write to {}: {e}", out.display())),
            };
            for c in outcome.report["checks"].as_array().into_iter().flatten() {
                let mark = if c["pass"] == true { "pass" } else { "FAIL" };
                println!("{mark}  {}", c["check"].as_str().unwrap_or("?"));
            }
            if let Some(e) = outcome.report.get("error") {
                println!("FAIL  {}", e["message"].as_str().unwrap_or("error"));
            }
            println!(
                "{}: {}  ({})",
                sc.name,
                outcome.report["status"].as_str().unwrap_or("?"),
                written[0].display()
            );
            ExitCode::from(outcome.exit_code() as u8)
        }
        Command::VerifyIdentities => {
            let reports = IdentitySpec::default().run(f.seed.unwrap_or(DEFAULT_SEED));
            let mut lines = String::new();
            for r in &reports {
                lines.push_str(&r.to_json_line());
                lines.push('\n');
            }
            if let Err(e) = write_atomic(&out.join("identities.jsonl"), &lines) {
                return fail_input(format!("cannot write to {}: {e}", out.display()));
            }
            let failed = reports.iter().filter(|r| !r.passed()).count();
            println!("{} identities checked, {failed} failed", reports.len());
            ExitCode::from(u8::from(failed > 0))
        }
        Command::PlotData { report } => plot_data(report, f.out.as_deref()),
    }
}

fn plot_data(report: &Path, out: Option<&Path>) -> ExitCode {
    let text = match std::fs::read_to_string(report) {
        Ok(t) => t,
        Err(e) => return fail_input(format!("cannot read {}: {e}", report.display())),
    };
    let value: serde_json::Value = match serde_json::from_str(&text) {
        Ok(v) => v,
        Err(e) => return fail_input(format!("{} is not JSON: {e}", report.display())),
    };
    let dir = match out {
        Some(d) => d.to_path_buf(),
        None => report.with_extension(""),
    };
    for (file, csv) in emit_plot_data(&value) {
        let p = dir.join(file);
        if let Err(e) = write_atomic(&p, &csv) {
            return fail_input(format!("cannot write {}: {e}", p.display()));
        }
        println!("{}", p.display());
    }
    ExitCode::SUCCESS
}
