fn main() {
    std::process::exit(nlkg::main_with_args(std::env::args()));
}
