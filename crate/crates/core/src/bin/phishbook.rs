fn main() {
    std::process::exit(phishbook::cli::main_with(std::env::args_os()));
}
