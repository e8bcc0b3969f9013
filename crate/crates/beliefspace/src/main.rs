use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(beliefspace::cli::run(std::env::args().collect()))
}
