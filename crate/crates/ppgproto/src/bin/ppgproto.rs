fn main() {
    std::process::exit(ppgproto::cli::run(std::env::args_os()));
}
