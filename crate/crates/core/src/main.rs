fn main() {
    std::process::exit(roadcomm::cli::main_with_args(std::env::args_os()));
}
