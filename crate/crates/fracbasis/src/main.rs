use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(fracbasis::cli::run())
}
