fn main() {
    std::process::exit(mrcmflow::cli::main_with_args(std::env::args_os()));
}
