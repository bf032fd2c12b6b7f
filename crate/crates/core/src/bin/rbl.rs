fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let argv: Vec<String> = std::env::args().collect();
    let code = rbl_core::cli::run(&argv, &mut std::io::stdout().lock());
    std::process::exit(code);
}
