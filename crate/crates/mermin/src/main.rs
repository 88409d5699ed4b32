use std::process::ExitCode;

fn main() -> ExitCode {
    mermin::cli::run()
}
