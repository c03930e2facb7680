fn main() {
    std::process::exit(qworkbench::cli::run(std::env::args_os()));
}
