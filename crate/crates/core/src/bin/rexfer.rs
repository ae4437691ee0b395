fn main() {
    std::process::exit(rexfer::cli::run(std::env::args_os()));
}
