fn main() {
    std::process::exit(surveycal::cli::run(std::env::args_os()));
}
