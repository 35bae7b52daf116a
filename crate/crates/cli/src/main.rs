use std::process::ExitCode;

fn main() -> ExitCode {
    orthofield_cli::main_with(std::env::args_os())
}
