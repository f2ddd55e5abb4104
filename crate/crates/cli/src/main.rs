fn main() {
    std::process::exit(texmatch_cli::run(std::env::args_os()));
}
