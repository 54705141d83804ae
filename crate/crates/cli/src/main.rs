fn main() {
    std::process::exit(binquest_cli::run(std::env::args_os()));
}
