fn main() {
    std::process::exit(scg_cli::run(std::env::args_os()));
}
