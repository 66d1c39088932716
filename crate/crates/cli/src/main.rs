fn main() {
    std::process::exit(residua_cli::run(std::env::args_os()));
}
