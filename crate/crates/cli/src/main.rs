fn main() {
    std::process::exit(cfikit_cli::run(std::env::args_os()));
}
