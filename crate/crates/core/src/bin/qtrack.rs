fn main() {
    std::process::exit(qtrack::cli::run(std::env::args_os()));
}
