use std::io;

fn main() {
    let status = swb_cli::main_with(std::env::args_os(), &mut io::stdout(), &mut io::stderr());
    std::process::exit(status);
}
