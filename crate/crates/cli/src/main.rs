fn main() {
    std::process::exit(pdpstar_cli::main_with(std::env::args_os()));
}
