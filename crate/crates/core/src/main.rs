fn main() {
    std::process::exit(svie_cubature::cli::main_with_args(std::env::args_os()));
}
