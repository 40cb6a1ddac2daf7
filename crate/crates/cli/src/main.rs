fn main() {
    std::process::exit(warpiso_cli::run(std::env::args_os()));
}
