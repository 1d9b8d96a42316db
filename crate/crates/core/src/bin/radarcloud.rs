fn main() {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("RADARCLOUD_LOG", "warn")).init();
    std::process::exit(radarcloud::cli::main_with_args(std::env::args_os()));
}
