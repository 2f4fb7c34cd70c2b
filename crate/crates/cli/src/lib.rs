//! Command-line pipeline and HTTP prediction service for the cascade classifier.

pub mod commands;
pub mod config;
pub mod error;
pub mod service;

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::Path;

use clap::error::ErrorKind;
use clap::{Arg, ArgMatches, Command};

use crate::config::{read_config_file, KeySpec, RunConfig};
pub use crate::error::CliError;

struct Subcommand {
    name: &'static str,
    about: &'static str,
    keys: &'static [KeySpec],
    action: fn(&RunConfig) -> Result<(), CliError>,
}

const SUBCOMMANDS: &[Subcommand] = &[
    Subcommand {
        name: "extract",
        about: "Baseline features for every image in a manifest",
        keys: config::EXTRACT_KEYS,
        action: commands::extract,
    },
    Subcommand {
        name: "split",
        about: "Stratified train/holdout split of a feature file",
        keys: config::SPLIT_KEYS,
        action: commands::split,
    },
    Subcommand {
        name: "balance",
        about: "Undersample every class to the smallest class size",
        keys: config::BALANCE_KEYS,
        action: commands::balance,
    },
    Subcommand {
        name: "train",
        about: "Fit a base + refinement cascade and save it",
        keys: config::TRAIN_KEYS,
        action: commands::train,
    },
    Subcommand {
        name: "eval",
        about: "Score a model on labelled features and write a report",
        keys: config::EVAL_KEYS,
        action: commands::eval,
    },
    Subcommand {
        name: "predict",
        about: "Write routed predictions as CSV",
        keys: config::PREDICT_KEYS,
        action: commands::predict,
    },
    Subcommand {
        name: "serve",
        about: "Serve predictions over HTTP",
        keys: config::SERVE_KEYS,
        action: serve,
    },
];

fn flag(spec: &KeySpec) -> Arg {
    let help = match spec.default {
        Some(d) => format!("{} [default: {d}]", spec.help),
        None => format!("{} [required]", spec.help),
    };
    Arg::new(spec.name)
        .long(spec.name.replace('_', "-"))
        .value_name("VALUE")
        .help(help)
}

/// The full argument parser.
pub fn command() -> Command {
    let mut cmd = Command::new("guava-cascade")
        .about("Confidence-gated two-stage classifier over image feature vectors")
        .version(env!("CARGO_PKG_VERSION"))
        .subcommand_required(true)
        .arg_required_else_help(true);
    for sub in SUBCOMMANDS {
        let mut c = Command::new(sub.name).about(sub.about).arg(
            Arg::new("config")
                .long("config")
                .value_name("FILE")
                .help("flat key = value settings file; flags override it"),
        );
        for spec in config::COMMON_KEYS.iter().chain(sub.keys) {
            c = c.arg(flag(spec));
        }
        cmd = cmd.subcommand(c);
    }
    cmd
}

fn resolve(sub: &Subcommand, matches: &ArgMatches) -> Result<RunConfig, CliError> {
    let file = match matches.get_one::<String>("config") {
        Some(path) => read_config_file(Path::new(path))?,
        None => BTreeMap::new(),
    };
    let flags = config::COMMON_KEYS
        .iter()
        .chain(sub.keys)
        .filter_map(|k| {
            matches
                .get_one::<String>(k.name)
                .map(|v| (k.name.to_string(), v.clone()))
        })
        .collect();
    RunConfig::resolve(&[config::COMMON_KEYS, sub.keys], &file, &flags)
}

fn with_threads(
    cfg: &RunConfig,
    action: impl FnOnce() -> Result<(), CliError> + Send,
) -> Result<(), CliError> {
    let threads: usize = cfg.parse("threads")?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::io(format!("thread pool: {e}")))?;
    pool.install(action)
}

fn serve(cfg: &RunConfig) -> Result<(), CliError> {
    let addr = cfg.parse("addr")?;
    let model = commands::load_model(cfg.str("model"))?;
    service::run_blocking(addr, model).map_err(CliError::from)
}

/// Parse `args` (program name first), run the command and return its exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let matches = match command().try_get_matches_from(args) {
        Ok(m) => m,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
        }
    };
    let (name, sub_matches) = matches.subcommand().expect("a subcommand is required");
    let sub = SUBCOMMANDS
        .iter()
        .find(|s| s.name == name)
        .expect("parser only accepts known subcommands");
    let outcome = resolve(sub, sub_matches).and_then(|cfg| {
        if sub.name == "serve" {
            (sub.action)(&cfg)
        } else {
            with_threads(&cfg, || (sub.action)(&cfg))
        }
    });
    match outcome {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
