fn main() {
    std::process::exit(rotcode::cli::run(std::env::args_os()));
}
