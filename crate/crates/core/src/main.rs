fn main() {
    env_logger::init();
    std::process::exit(binholo::cli::run(std::env::args_os()));
}
