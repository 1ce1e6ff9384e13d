fn main() {
    std::process::exit(aglerlab_cli::run(std::env::args_os()));
}
