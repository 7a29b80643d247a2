fn main() {
    std::process::exit(schemaevo::cli::main_with(std::env::args_os()));
}
