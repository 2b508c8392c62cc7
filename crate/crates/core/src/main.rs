fn main() {
    std::process::exit(gbfim::cli::run(std::env::args_os()));
}
