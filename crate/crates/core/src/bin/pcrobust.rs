fn main() {
    std::process::exit(pcrobust::cli::main());
}
