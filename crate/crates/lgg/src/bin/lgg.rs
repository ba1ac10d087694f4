fn main() { lgg::cli::main() }
