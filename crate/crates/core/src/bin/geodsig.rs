fn main() {
    std::process::exit(geodsig::cli::run(std::env::args_os()));
}
