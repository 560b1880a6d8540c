fn main() {
    std::process::exit(sphere_grf::cli::main_with(std::env::args_os()));
}
