fn main() {
    std::process::exit(expgeom_cli::run(std::env::args_os()));
}
