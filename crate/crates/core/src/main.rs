fn main() {
    std::process::exit(mvsde::cli::run_from_env());
}
