fn main() {
    std::process::exit(ideation::cli::run(std::env::args_os()));
}
