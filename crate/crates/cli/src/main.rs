fn main() {
    std::process::exit(tipping_cascade_cli::run(std::env::args_os()));
}
