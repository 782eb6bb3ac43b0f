fn main() {
    std::process::exit(srgw::cli::run_command(std::env::args_os()));
}
