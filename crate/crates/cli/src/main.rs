fn main() {
    std::process::exit(tricolor_cli::run(std::env::args_os()));
}
