fn main() {
    std::process::exit(protean::cli::run(std::env::args_os()));
}
