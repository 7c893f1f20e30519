fn main() {
    std::process::exit(okl::cli::run(std::env::args_os()));
}
