fn main() {
    let args: Vec<String> = std::env::args().collect();
    std::process::exit(peerpred::run_command(&args));
}
