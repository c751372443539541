use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use tempodiff::formats::{
    aligned_table, comment_block, csv_table, loss_csv, read_text, sha256_hex, synth_from_csv,
    synth_to_csv, write_text,
};
use tempodiff::pipeline::{self, BalanceMethod};
use tempodiff::{
    Checkpoint, CliError, Dataset, Result, RunConfig, CHECKPOINT_VERSION, CONFIG_SCHEMA_VERSION,
};

#[derive(Parser, Debug)]
#[command(
    name = "tempodiff",
    about = "Temporal tabular diffusion for windowed sensor data",
    disable_version_flag = true
)]
struct Cli {
    /// Print tool, config-schema and checkpoint-format versions.
    #[arg(long)]
    version: bool,
    /// Flat `key = value` configuration file.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Master seed for every random stream.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Override one configuration key; repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Enable or disable the temporal adapters.
    #[arg(long, global = true, value_enum)]
    adapters: Option<OnOff>,
    /// Log more (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum OnOff {
    On,
    Off,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Method {
    Tempodiff,
    Smote,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Window, split and normalize a raw file or the toy generator.
    Ingest {
        #[arg(long, conflicts_with = "toy")]
        raw: Option<PathBuf>,
        /// Generate this many toy windows per class instead of reading data.
        #[arg(long, value_name = "N_PER_CLASS")]
        toy: Option<usize>,
        /// Comma-separated participant ids to keep.
        #[arg(long)]
        users: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train the denoiser and write a checkpoint and loss curve.
    Train {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Continue from an earlier checkpoint.
        #[arg(long)]
        resume: Option<PathBuf>,
        /// Loss curve path; defaults to `<out>.loss.csv`.
        #[arg(long)]
        loss_csv: Option<PathBuf>,
    },
    /// Draw synthetic sequences in original units.
    Sample {
        #[arg(long)]
        ckpt: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long, required_unless_present = "match_train_dist")]
        per_class: Option<usize>,
        /// Match the class sizes of the training split.
        #[arg(long, conflicts_with = "per_class")]
        match_train_dist: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Top up minority training classes with synthetic windows.
    Balance {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, value_enum)]
        method: Method,
        #[arg(long)]
        ckpt: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score synthetic data and a downstream classifier.
    Evaluate {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        synth: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Directory for plot-ready CSVs.
        #[arg(long)]
        plots: Option<PathBuf>,
    },
    /// Side-by-side table of evaluation reports.
    Report {
        #[arg(long, num_args = 1.., required = true)]
        reports: Vec<PathBuf>,
        /// Output stem; `.csv` and `.txt` are appended.
        #[arg(long)]
        out: PathBuf,
    },
}

impl Cli {
    /// Base settings, then the config file, then flags.
    fn resolve(&self, base: RunConfig) -> Result<RunConfig> {
        let mut c = base;
        if let Some(path) = &self.config {
            c.apply_file(path)?;
        }
        c.apply_overrides(&self.set)?;
        if let Some(seed) = self.seed {
            c.seed = seed;
        }
        if let Some(a) = self.adapters {
            c.adapters = matches!(a, OnOff::On);
        }
        Ok(c)
    }
}

fn provenance(config: &RunConfig, input_hash: &str) -> Vec<(String, String)> {
    let mut c = vec![("input_hash".to_string(), input_hash.to_string())];
    c.extend(
        config
            .to_map()
            .into_iter()
            .map(|(k, v)| (format!("config.{k}"), v)),
    );
    c
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn run(cli: &Cli, command: &Command) -> Result<()> {
    match command {
        Command::Ingest {
            raw,
            toy,
            users,
            out,
        } => {
            let mut config = cli.resolve(RunConfig::default())?;
            if let Some(u) = users {
                config.set("users", u)?;
            }
            let dataset = match (raw, toy) {
                (_, Some(n)) => pipeline::ingest_toy(&config, *n)?,
                (Some(path), None) => pipeline::ingest_raw(&config, &read_text(path)?)?,
                (None, None) => {
                    return Err(CliError::Usage("ingest needs --raw PATH or --toy N".into()))
                }
            };
            dataset.write(out)?;
            let [tr, va, te] = dataset.split.class_counts(dataset.n_classes);
            println!("train {tr:?}\nval   {va:?}\ntest  {te:?}");
        }
        Command::Train {
            data,
            out,
            resume,
            loss_csv: loss_path,
        } => {
            let dataset = Dataset::read(data)?;
            let config = cli.resolve(dataset.config.clone())?;
            let resume = resume.as_deref().map(Checkpoint::load).transpose()?;
            let (ck, report) = pipeline::train(&dataset, &config, resume, |r| {
                log::info!(
                    "epoch {} train {:.6} val {:.6}",
                    r.epoch,
                    r.train_loss,
                    r.val_loss
                );
            })?;
            ck.save(out)?;
            write_text(&with_suffix(out, ".manifest.json"), &ck.manifest_json()?)?;
            let loss_path = loss_path
                .clone()
                .unwrap_or_else(|| with_suffix(out, ".loss.csv"));
            write_text(
                &loss_path,
                &loss_csv(&report.history, &provenance(&config, &ck.dataset_hash)),
            )?;
            println!(
                "{} epochs this run, {} total, step {}{}",
                report.history.len(),
                ck.epochs_done,
                ck.optimizer.step_count(),
                if report.stopped_early {
                    ", stopped early"
                } else {
                    ""
                }
            );
        }
        Command::Sample {
            ckpt,
            data,
            per_class,
            match_train_dist,
            out,
        } => {
            let dataset = Dataset::read(data)?;
            let ck = Checkpoint::load(ckpt)?;
            let config = cli.resolve(ck.config.clone())?;
            let counts = if *match_train_dist {
                pipeline::train_counts(&dataset)
            } else {
                vec![per_class.unwrap_or(0); dataset.n_classes]
            };
            let windows = pipeline::sample(&ck, &dataset, &counts, config.seed)?;
            let hash = sha256_hex([ck.dataset_hash.as_bytes(), &ck.to_bytes()]);
            write_text(
                out,
                &synth_to_csv(&windows, &dataset.map, &provenance(&config, &hash))?,
            )?;
            println!("{} sequences", windows.len());
        }
        Command::Balance {
            data,
            method,
            ckpt,
            out,
        } => {
            let dataset = Dataset::read(data)?;
            let config = cli.resolve(dataset.config.clone())?;
            let ck = ckpt.as_deref().map(Checkpoint::load).transpose()?;
            let method = match method {
                Method::Tempodiff => BalanceMethod::Tempodiff,
                Method::Smote => BalanceMethod::Smote,
            };
            let balanced = pipeline::balance(&dataset, method, ck.as_ref(), &config)?;
            balanced.write(out)?;
            println!("added {} windows", balanced.augment.len());
        }
        Command::Evaluate {
            data,
            synth,
            out,
            plots,
        } => {
            let dataset = Dataset::read(data)?;
            let config = cli.resolve(dataset.config.clone())?;
            let text = read_text(synth)?;
            let windows = synth_from_csv(&text, &dataset.map, synth)?;
            let report =
                pipeline::evaluate(&dataset, &windows, &sha256_hex([text.as_bytes()]), &config)?;
            write_text(out, &pipeline::report_json(&report)?)?;
            if let Some(dir) = plots {
                let header = comment_block(&provenance(&config, &report.input_hash));
                for (name, body) in pipeline::plot_csvs(&dataset, &windows, &config)? {
                    write_text(&dir.join(name), &(header.clone() + &body))?;
                }
            }
            println!(
                "accuracy {:.4} macro-F1 {:.4}",
                report.accuracy, report.macro_f1
            );
        }
        Command::Report { reports, out } => {
            let config = cli.resolve(RunConfig::default())?;
            let mut loaded = Vec::with_capacity(reports.len());
            let mut texts = Vec::with_capacity(reports.len());
            for path in reports {
                texts.push(read_text(path)?);
                let r = pipeline::report_from_json(&texts[texts.len() - 1])
                    .map_err(|e| CliError::format(path, e.to_string()))?;
                let method = r
                    .config
                    .get("method")
                    .cloned()
                    .unwrap_or_else(|| "?".into());
                let stem = path
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_default();
                loaded.push((method, stem, r));
            }
            let mut methods: Vec<&String> = loaded.iter().map(|(m, _, _)| m).collect();
            methods.sort();
            methods.dedup();
            let unique = methods.len() == loaded.len();
            let named: Vec<_> = loaded
                .into_iter()
                .map(|(m, s, r)| (if unique { m } else { format!("{m} ({s})") }, r))
                .collect();
            let rows = pipeline::comparison_rows(&named);
            let header = comment_block(&provenance(
                &config,
                &sha256_hex(texts.iter().map(|t| t.as_bytes())),
            ));
            write_text(
                &with_suffix(out, ".csv"),
                &(header.clone() + &csv_table(&rows)),
            )?;
            let text = aligned_table(&rows);
            write_text(&with_suffix(out, ".txt"), &(header + &text))?;
            print!("{text}");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    if cli.version {
        println!(
            "tempodiff {} (config schema {CONFIG_SCHEMA_VERSION}, checkpoint format {CHECKPOINT_VERSION})",
            env!("CARGO_PKG_VERSION")
        );
        return ExitCode::SUCCESS;
    }
    let Some(command) = &cli.command else {
        eprintln!("error: a subcommand is required (see --help)");
        return ExitCode::from(1);
    };
    match run(&cli, command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
