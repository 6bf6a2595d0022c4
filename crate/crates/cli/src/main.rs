mod args;
mod commands;
mod output;
mod selftest;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;
use natmap_core::Error;

use args::{Cli, Command, NatmapCommand};
use commands::Ctx;

const EXIT_INVALID: u8 = 1;
const EXIT_NUMERICAL: u8 = 2;

fn exit_code(e: &Error) -> u8 {
    if e.is_numerical() {
        EXIT_NUMERICAL
    } else {
        EXIT_INVALID
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    if let Some(n) = cli.global.parallelism {
        if n == 0 {
            return Err(Error::Invalid("--parallelism must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Resource(e.to_string()))?;
    }
    let ctx = Ctx { global: cli.global };
    match &cli.command {
        Command::Barycenter(a) => commands::barycenter_cmd(&ctx, a),
        Command::PsCheck(a) => commands::ps_check_cmd(&ctx, a),
        Command::Natmap(NatmapCommand::Eval(a)) => commands::eval_cmd(&ctx, a),
        Command::Natmap(NatmapCommand::JacobianScan(a)) | Command::JacobianScan(a) => commands::scan_cmd(&ctx, a),
        Command::Volume(a) => commands::volume_cmd(&ctx, a),
        Command::NaturalVolume(a) => commands::natural_volume_cmd(&ctx, a),
        Command::Degree(a) => commands::degree_cmd(&ctx, a),
        Command::Selftest => {
            let checks = selftest::run(ctx.global.seed)?;
            for c in &checks {
                eprintln!("{} {} {:e}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.value);
            }
            let failed = checks.iter().filter(|c| !c.pass).count();
            ctx.write("selftest", &serde_json::json!({}), &checks)?;
            if failed > 0 {
                return Err(Error::CheckFailed(format!("{failed} selftest checks")));
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(EXIT_INVALID),
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
