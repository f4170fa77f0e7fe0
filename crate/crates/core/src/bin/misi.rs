fn main() -> std::process::ExitCode {
    std::process::ExitCode::from(misi::cli::main_from(std::env::args_os()))
}
