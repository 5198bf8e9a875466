fn main() {
    std::process::exit(penmeta::cli::run_cli(std::env::args_os()));
}
