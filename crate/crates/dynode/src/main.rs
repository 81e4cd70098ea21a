use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(dynode::cli::run(std::env::args()) as u8)
}
