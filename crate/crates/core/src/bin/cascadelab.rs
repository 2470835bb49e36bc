fn main() {
    std::process::exit(cascadelab::cli::run(std::env::args_os()));
}
