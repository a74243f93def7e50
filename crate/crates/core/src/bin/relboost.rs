fn main() {
    std::process::exit(relboost::cli::run(std::env::args_os()));
}
