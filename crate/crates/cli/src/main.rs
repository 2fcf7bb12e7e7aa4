fn main() {
    std::process::exit(nscascade::main_with_args(std::env::args_os()));
}
