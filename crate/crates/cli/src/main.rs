use clap::Parser;

fn main() {
    let cli = aitv_cli::Cli::parse();
    match aitv_cli::run(cli) {
        Ok(text) => println!("{text}"),
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(e.exit_code());
        }
    }
}
