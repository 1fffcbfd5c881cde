use std::io::stdout;

fn main() {
    patchnmt::cli::init_logging();
    let code = patchnmt::cli::run(std::env::args_os(), &mut stdout().lock());
    std::process::exit(code);
}
