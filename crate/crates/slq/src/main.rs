use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(slq::cli::run())
}
