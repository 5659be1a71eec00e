fn main() {
    std::process::exit(capflow_cli::run_with_args(std::env::args_os()));
}
