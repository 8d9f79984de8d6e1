use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(platerod::cli::main_entry())
}
