fn main() -> std::process::ExitCode {
    exciton_control_cli::main_exit()
}
