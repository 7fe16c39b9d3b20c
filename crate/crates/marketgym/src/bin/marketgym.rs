fn main() {
    std::process::exit(marketgym::cli::main());
}
