fn main() {
    std::process::exit(pointint::cli::main_exit_code());
}
