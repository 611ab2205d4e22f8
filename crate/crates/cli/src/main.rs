use clap::error::ErrorKind;
use clap::Parser;

fn main() {
    let cli = match boostal_cli::Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => e.exit(),
        Err(e) => {
            let text = e.render().to_string();
            let first = text.lines().next().unwrap_or("invalid arguments").trim_start_matches("error: ");
            eprintln!("error: usage: {first}");
            std::process::exit(2);
        }
    };
    if let Err(e) = boostal_cli::execute(cli) {
        eprintln!("{e}");
        std::process::exit(1);
    }
}
