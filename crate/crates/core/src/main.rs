fn main() {
    std::process::exit(qbernoulli::cli::run_from_args(std::env::args_os()));
}
