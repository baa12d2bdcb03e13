fn main() {
    std::process::exit(clocrc_cli::run(std::env::args_os()));
}
