fn main() {
    std::process::exit(annocart::cli::run(std::env::args_os()));
}
