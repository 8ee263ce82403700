use std::io;

fn main() {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("QREPATH_LOG", "error")).init();
    let code = qrepath::cli::run(std::env::args_os(), &mut io::stdout(), &mut io::stderr());
    std::process::exit(code);
}
