use std::io;

fn main() {
    let code = lattice_reduce::cli::run(
        std::env::args().collect(),
        &mut io::stdout().lock(),
        &mut io::stderr().lock(),
    );
    std::process::exit(code);
}
