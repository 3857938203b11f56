fn main() {
    std::process::exit(minor_embed::cli::main());
}
