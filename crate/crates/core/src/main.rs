fn main() {
    std::process::exit(momentum_lmm::cli::run(std::env::args_os()));
}
