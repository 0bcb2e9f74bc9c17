use std::io;
use std::process::ExitCode;

fn main() -> ExitCode {
    let code = spn_constraints::cli::run(std::env::args_os(), &mut io::stdout(), &mut io::stderr());
    ExitCode::from(code as u8)
}
