fn main() {
    std::process::exit(memfrac::cli::main());
}
