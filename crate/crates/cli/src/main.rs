fn main() {
    std::process::exit(nntlab_cli::run(std::env::args_os()));
}
