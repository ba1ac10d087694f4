fn main() { lgg::service::main() }
