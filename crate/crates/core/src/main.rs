fn main() {
    std::process::exit(cohspace::cli::main());
}
