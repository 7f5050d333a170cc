fn main() {
    std::process::exit(meridian::cli::run_cli(std::env::args_os()));
}
