fn main() {
    std::process::exit(gwp::cli::main());
}
