//! `rgbdn`: compute, smooth, evaluate, and visualize RGB-D surface
//! normals, and plan deterministic dataset mixes.
//!
//! Exit status: 0 success, 2 input/format/config error, 3 empty
//! evaluation, 1 internal failure. Errors print one machine-readable
//! `error: <category>: <detail>` line on stderr.

use clap::{Parser, Subcommand};

mod commands;
mod config;

use rgbdn_core::Error;

#[derive(Parser, Debug)]
#[command(
    name = "rgbdn",
    version,
    about = "RGB-D surface normal toolkit",
    propagate_version = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Compute normals from a 16-bit depth PNG (preprocess + estimate)
    Compute(commands::compute::ComputeArgs),
    /// Smooth a normal map with semantic region growing
    Smooth(commands::smooth::SmoothArgs),
    /// Evaluate predictions against ground truth, JSON on stdout
    Eval(commands::eval::EvalArgs),
    /// Emit a deterministic dataset-mix schedule as CSV
    MixPlan(commands::mix_plan::MixPlanArgs),
    /// Render normal or error visualizations
    Viz(commands::viz::VizArgs),
    /// Write the canonical synthetic test scenes to disk
    Fixtures(commands::fixtures::FixturesArgs),
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::EmptyEvaluation | Error::EmptyLoss => 3,
        Error::Io(_)
        | Error::Format(_)
        | Error::Shape(_)
        | Error::Config(_)
        | Error::Label(_)
        | Error::NonFiniteVector
        | Error::DegenerateVector
        | Error::InvalidDepth(_) => 2,
    }
}

fn main() {
    let cli = Cli::parse();
    let outcome = std::panic::catch_unwind(move || match &cli.command {
        Command::Compute(args) => commands::compute::run(args),
        Command::Smooth(args) => commands::smooth::run(args),
        Command::Eval(args) => commands::eval::run(args),
        Command::MixPlan(args) => commands::mix_plan::run(args),
        Command::Viz(args) => commands::viz::run(args),
        Command::Fixtures(args) => commands::fixtures::run(args),
    });
    match outcome {
        Ok(Ok(())) => {}
        Ok(Err(e)) => {
            eprintln!("error: {e}");
            std::process::exit(exit_code(&e));
        }
        Err(_) => {
            // Panic text already went to stderr via the default hook.
            eprintln!("error: internal failure");
            std::process::exit(1);
        }
    }
}
