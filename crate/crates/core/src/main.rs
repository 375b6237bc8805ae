fn main() {
    std::process::exit(partgen::cli::run(std::env::args_os()));
}
