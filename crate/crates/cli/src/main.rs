fn main() {
    std::process::exit(gentac_cli::run(std::env::args_os()));
}
