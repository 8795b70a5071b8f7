use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(pidforge::cli::run(std::env::args_os()))
}
