fn main() {
    std::process::exit(nbfreq::cli::main_with_args(std::env::args_os()));
}
