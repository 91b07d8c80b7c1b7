fn main() {
    std::process::exit(otaemu::cli::run(std::env::args_os()));
}
