fn main() {
    std::process::exit(priming_cli::main_with_args(std::env::args_os()));
}
