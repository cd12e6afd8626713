fn main() {
    std::process::exit(ompn::cli::run(std::env::args_os()));
}
