fn main() {
    std::process::exit(phasekit_cli::run_command(std::env::args_os()));
}
