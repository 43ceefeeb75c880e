fn main() {
    std::process::exit(zetaflow::cli::run(std::env::args_os()));
}
