fn main() {
    std::process::exit(bbitcs::cli::run_from_env());
}
