fn main() {
    std::process::exit(flr::cli::run(std::env::args_os()));
}
