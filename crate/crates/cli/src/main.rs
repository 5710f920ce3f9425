fn main() {
    std::process::exit(lmar_cli::run(std::env::args_os()));
}
