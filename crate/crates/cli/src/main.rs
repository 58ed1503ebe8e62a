//! `senseflow`: scene-flow losses, rigidity-based refinement, KITTI metrics,
//! cost volumes, dense warps, and synthetic ground-truth scenes, operating
//! on PFM / KITTI-PNG files.
//!
//! Exit codes: 0 success, 1 usage error, 2 data/format error, 3 numerical
//! failure.

use clap::error::ErrorKind;
use clap::Parser;

mod commands;

#[derive(Parser)]
#[command(
    name = "senseflow",
    version,
    about = "Scene-flow loss evaluation, rigidity-based refinement, metrics, \
             cost volumes, warps, and synthetic scenes",
    subcommand_required = true,
    arg_required_else_help = true
)]
struct Cli {
    #[command(subcommand)]
    command: commands::Command,
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = err.print();
            std::process::exit(code);
        }
    };
    if let Err(err) = cli.command.run() {
        eprintln!("error: {err}");
        std::process::exit(err.exit_code());
    }
}
