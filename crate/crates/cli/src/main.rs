fn main() {
    let code = infoacq_cli::run(std::env::args_os());
    std::process::exit(code);
}
