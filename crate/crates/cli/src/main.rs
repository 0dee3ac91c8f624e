mod artifacts;
mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{value_parser, Arg, ArgAction, ArgMatches, Command};
use heavyflow::diagnostics::verify::FaultHooks;

use config::{flag_name, Kind, RunConfig, KEYS};

const EXIT_CONFIG: u8 = 1;

fn with_config_args(cmd: Command) -> Command {
    let cmd = cmd.arg(
        Arg::new("config")
            .short('c')
            .long("config")
            .value_name("FILE")
            .value_parser(value_parser!(PathBuf))
            .help("TOML run configuration"),
    );
    KEYS.iter().fold(cmd, |cmd, &(section, key, kind)| {
        let arg = Arg::new(key)
            .long(flag_name(key))
            .value_name("VALUE")
            .help_heading("Configuration overrides")
            .help(format!("[{section}] {key}"));
        let arg = if kind == Kind::Bool {
            arg.num_args(0..=1).default_missing_value("true")
        } else {
            arg
        };
        cmd.arg(arg)
    })
}

fn cli() -> Command {
    Command::new("heavyflow")
        .about("Steady compressible flow with density-dependent viscosity at large mass")
        .version(env!("CARGO_PKG_VERSION"))
        .subcommand_required(true)
        .arg_required_else_help(true)
        .arg(
            Arg::new("verbose")
                .short('v')
                .long("verbose")
                .action(ArgAction::Count)
                .global(true)
                .help("More log output (-v info, -vv debug)"),
        )
        .subcommand(with_config_args(
            Command::new("solve").about("Solve at one mass and write r, u, rho and a report"),
        ))
        .subcommand(with_config_args(
            Command::new("study").about("Sweep the mass, fit scaling slopes and write CSV and SVG"),
        ))
        .subcommand(
            with_config_args(Command::new("verify").about("Run the operator and solver self-tests")).arg(
                Arg::new("inject-fault")
                    .long("inject-fault")
                    .value_parser(["gradient-sign"])
                    .hide(true),
            ),
        )
        .subcommand(
            Command::new("dump")
                .about("Convert a field file to CSV")
                .arg(Arg::new("input").required(true).value_parser(value_parser!(PathBuf)))
                .arg(
                    Arg::new("output")
                        .short('o')
                        .long("output")
                        .value_parser(value_parser!(PathBuf))
                        .help("Destination (default: stdout)"),
                ),
        )
}

fn load_config(m: &ArgMatches) -> anyhow::Result<RunConfig> {
    let overrides: Vec<(&str, String)> = KEYS
        .iter()
        .filter_map(|&(_, key, _)| m.get_one::<String>(key).map(|v| (key, v.clone())))
        .collect();
    RunConfig::load(m.get_one::<PathBuf>("config").map(PathBuf::as_path), &overrides)
}

fn run(matches: &ArgMatches) -> anyhow::Result<ExitCode> {
    match matches.subcommand() {
        Some(("solve", m)) => commands::solve(&load_config(m)?),
        Some(("study", m)) => commands::study(&load_config(m)?),
        Some(("verify", m)) => {
            let hooks = FaultHooks { flip_gradient_sign: m.get_one::<String>("inject-fault").is_some() };
            commands::verify(&load_config(m)?, hooks)
        }
        Some(("dump", m)) => commands::dump(
            m.get_one::<PathBuf>("input").expect("required"),
            m.get_one::<PathBuf>("output").map(PathBuf::as_path),
        ),
        _ => unreachable!("subcommand required"),
    }
}

fn main() -> ExitCode {
    let matches = cli().get_matches();
    let level = match matches.get_count("verbose") {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(&matches) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_CONFIG)
        }
    }
}

#[cfg(test)]
mod tests {
    #[test]
    fn command_definition_is_consistent() {
        super::cli().debug_assert();
    }
}
