fn main() {
    std::process::exit(overlapq::cli::run_from(std::env::args_os()));
}
