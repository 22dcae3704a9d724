fn main() {
    std::process::exit(pilotwave::cli::run_command(std::env::args_os()));
}
