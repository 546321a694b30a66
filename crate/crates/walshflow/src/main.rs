fn main() { std::process::exit(walshflow::cli::run()); }
