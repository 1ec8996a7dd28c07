fn main() {
    std::process::exit(gridflow::cli::run(std::env::args_os()));
}
