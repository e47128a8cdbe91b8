fn main() {
    std::process::exit(greedy_gp::cli::run(std::env::args_os()));
}
