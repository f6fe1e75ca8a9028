fn main() {
    std::process::exit(tablegrid::cli::run(std::env::args_os()));
}
