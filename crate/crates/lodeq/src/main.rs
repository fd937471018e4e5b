fn main() {
    std::process::exit(lodeq::cli::run(std::env::args_os().skip(1)));
}
