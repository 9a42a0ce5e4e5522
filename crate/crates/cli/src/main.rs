use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(ratmin_cli::args::run(std::env::args_os()))
}
