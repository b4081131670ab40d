fn main() {
    std::process::exit(ssr::cli::run(std::env::args_os()));
}
