fn main() {
    let mut stdout = std::io::stdout();
    let code = cst_cli::run_cli(std::env::args_os(), &mut stdout);
    std::process::exit(code);
}
