fn main() { std::process::exit(ccnls::cli::run()); }
