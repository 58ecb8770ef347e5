fn main() {
    std::process::exit(otima::cli::run(std::env::args_os()));
}
