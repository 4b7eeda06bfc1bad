use clap::Parser;

fn main() {
    let cli = posgain_cli::Cli::parse();
    std::process::exit(posgain_cli::run(&cli));
}
