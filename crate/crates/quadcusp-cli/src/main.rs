fn main() {
    std::process::exit(quadcusp_cli::cli::main_entry());
}
