use std::process::ExitCode;

fn main() -> ExitCode {
    sane_cli::main_entry()
}
