fn main() {
    let code = tracebench_cli::run(std::env::args_os());
    std::process::exit(code);
}
