fn main() {
    std::process::exit(statelab::harness::cli::run(std::env::args_os()));
}
