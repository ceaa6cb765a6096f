fn main() {
    std::process::exit(netcoop::cli::run(std::env::args_os()));
}
