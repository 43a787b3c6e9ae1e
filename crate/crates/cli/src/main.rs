fn main() {
    if let Err(err) = beamsep_cli::run() {
        eprintln!("error={err:#}");
        std::process::exit(1);
    }
}
