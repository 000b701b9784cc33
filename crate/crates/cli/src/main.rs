fn main() {
    std::process::exit(spatialid_cli::run(std::env::args_os()));
}
