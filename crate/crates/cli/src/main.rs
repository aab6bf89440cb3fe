use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use selfcomp_core::persist::{header_line, write_atomic};
use selfcomp_core::{
    build_netlist, characterize, compensate_profile, load_image, save_image, synthetic_pair,
    AdderCellKind, ArrayTopology, BlendEngine, BlendMode, BlendReport, ComparisonReport,
    CompensationModel, Error, ErrorProfile, ErrorStats, RgbImage, RunConfig,
};

#[derive(Parser)]
#[command(
    name = "selfcomp",
    version,
    about = "Approximate multiplier characterization and compensation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Exhaustively sweep the multiplier and write its ED profile.
    Characterize(CharacterizeArgs),
    /// Build the cluster table and decision tree from a profile.
    Train(TrainArgs),
    /// Compare error statistics with and without compensation.
    Evaluate(EvaluateArgs),
    /// Blend image pairs under every mode and report PSNR.
    Blend(BlendArgs),
    /// Print the multiplier netlist.
    Netlist(NetlistArgs),
    /// Print cell counts of the multiplier.
    Census(NetlistArgs),
}

#[derive(Args, Clone)]
struct MultiplierArgs {
    #[arg(long, default_value = "ama5")]
    cell: AdderCellKind,
    #[arg(long, default_value_t = 8)]
    width: u32,
    #[arg(long, default_value_t = 9)]
    approx_columns: u32,
    #[arg(long, default_value = "ripple-rows")]
    topology: ArrayTopology,
}

#[derive(Clone, Copy, ValueEnum, PartialEq, Eq)]
enum Format {
    Csv,
    Json,
}

#[derive(Args)]
struct CharacterizeArgs {
    #[command(flatten)]
    mul: MultiplierArgs,
    /// Profile output file.
    #[arg(long, default_value = "profile.csv")]
    out: PathBuf,
    /// Also write the |ED| histogram CSV here.
    #[arg(long)]
    histogram: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    profile: PathBuf,
    #[arg(long, default_value_t = 16)]
    clusters: u32,
    /// Model output file; the table CSV and tree dump go next to it.
    #[arg(long, default_value = "model.json")]
    out: PathBuf,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    profile: PathBuf,
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

#[derive(Args)]
struct BlendArgs {
    /// Image files, taken in pairs.
    inputs: Vec<PathBuf>,
    /// Generate this many seeded synthetic pairs instead of reading files.
    #[arg(long)]
    synthetic: Option<u32>,
    #[arg(long, default_value_t = 2019)]
    seed: u64,
    #[arg(long, default_value_t = 400)]
    synthetic_width: u32,
    #[arg(long, default_value_t = 250)]
    synthetic_height: u32,
    /// Compensation model; its embedded multiplier settings are used.
    #[arg(long)]
    model: Option<PathBuf>,
    /// Mode of the blended image written to `--out`.
    #[arg(long, default_value = "comp-component")]
    mode: BlendMode,
    /// Output directory for blended images and the report.
    #[arg(long, default_value = "blend-out")]
    out: PathBuf,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    #[command(flatten)]
    mul: MultiplierArgs,
}

#[derive(Args)]
struct NetlistArgs {
    #[command(flatten)]
    mul: MultiplierArgs,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Io { .. } => 3,
        Error::Parse { .. } | Error::Image { .. } | Error::Dimension(_) => 4,
        _ => 2,
    }
}

fn base_config(m: &MultiplierArgs) -> RunConfig {
    RunConfig {
        cell: m.cell,
        width: m.width,
        approx_columns: m.approx_columns,
        topology: m.topology,
        ..RunConfig::default()
    }
}

fn stats_summary(s: &ErrorStats) -> String {
    let tails: Vec<String> = s
        .tail_counts
        .iter()
        .map(|t| format!("tail(>{})={}", t.threshold, t.count))
        .collect();
    format!(
        "pairs={} erroneous={} ER={:.2}% min|ED|={} max|ED|={} mean|ED|={:.2} distinct={} error_free={} {}",
        s.total_pairs,
        s.erroneous_count,
        100.0 * s.error_rate,
        s.min_nonzero_abs_ed,
        s.max_abs_ed,
        s.mean_abs_ed,
        s.distinct_ed_count,
        s.error_free_count,
        tails.join(" ")
    )
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("model");
    path.with_file_name(format!("{stem}{suffix}"))
}

fn cmd_characterize(a: CharacterizeArgs) -> Result<(), Error> {
    let mut config = base_config(&a.mul);
    config.out = Some(a.out.clone());
    config.validate()?;
    let net = build_netlist(config.multiplier())?;
    let profile = characterize(&net)?;
    profile.save(&a.out, &config)?;
    if let Some(h) = &a.histogram {
        write_atomic(h, profile.stats().histogram.to_csv(&config).as_bytes())?;
    }
    match a.format {
        Some(Format::Json) => println!(
            "{}",
            serde_json::to_string_pretty(profile.stats()).expect("stats serialize")
        ),
        Some(Format::Csv) => {
            let s = profile.stats();
            println!("pairs,erroneous,error_rate,min_abs_ed,max_abs_ed,mean_abs_ed,distinct,error_free,tail_gt_300,tail_gt_400,tail_gt_500");
            println!(
                "{},{},{:.6},{},{},{:.4},{},{},{},{},{}",
                s.total_pairs,
                s.erroneous_count,
                s.error_rate,
                s.min_nonzero_abs_ed,
                s.max_abs_ed,
                s.mean_abs_ed,
                s.distinct_ed_count,
                s.error_free_count,
                s.tail(300).unwrap_or(0),
                s.tail(400).unwrap_or(0),
                s.tail(500).unwrap_or(0)
            );
        }
        None => println!("{}", stats_summary(profile.stats())),
    }
    Ok(())
}

fn cmd_train(a: TrainArgs) -> Result<(), Error> {
    let (profile, mut config) = ErrorProfile::load(&a.profile)?;
    config.clusters = a.clusters;
    config.profile = Some(a.profile.clone());
    config.out = Some(a.out.clone());
    config.validate()?;
    if config.width != profile.width() {
        return Err(Error::Config(format!(
            "profile header says width {}, data has width {}",
            config.width,
            profile.width()
        )));
    }
    let model = CompensationModel::train(&profile, config.quantizer()?)?;
    model.save(&a.out, &config)?;
    let table_path = sibling(&a.out, ".table.csv");
    write_atomic(&table_path, model.table().to_csv(&config).as_bytes())?;
    let tree_path = sibling(&a.out, ".tree.txt");
    let mut dump = header_line("tree", &config);
    dump.push_str(&model.tree().dump());
    write_atomic(&tree_path, dump.as_bytes())?;
    println!(
        "model {} (depth {}, {} leaves), table {}, tree {}",
        a.out.display(),
        model.tree().depth(),
        model.tree().leaf_count(),
        table_path.display(),
        tree_path.display()
    );
    Ok(())
}

fn cmd_evaluate(a: EvaluateArgs) -> Result<(), Error> {
    let (profile, _) = ErrorProfile::load(&a.profile)?;
    let (model, mut config) = CompensationModel::load(&a.model)?;
    config.profile = Some(a.profile.clone());
    config.model = Some(a.model.clone());
    config.out = a.out.clone();
    let after = compensate_profile(&profile, &model)?;
    let report = ComparisonReport::new(config, &profile, &after)?;
    print!("{}", report.to_text());
    if let Some(out) = &a.out {
        let body = match a.format {
            Format::Csv => report.to_csv(),
            Format::Json => report.to_json(),
        };
        write_atomic(out, body.as_bytes())?;
    }
    Ok(())
}

fn cmd_blend(a: BlendArgs) -> Result<(), Error> {
    let (model, mut config) = match &a.model {
        Some(p) => {
            let (m, c) = CompensationModel::load(p)?;
            (Some(m), c)
        }
        None => (None, base_config(&a.mul)),
    };
    config.mode = a.mode;
    config.seed = a.seed;
    config.model = a.model.clone();
    config.out = Some(a.out.clone());
    config.inputs = a.inputs.clone();
    config.validate()?;
    if a.mode.needs_model() && model.is_none() {
        return Err(Error::Config(format!("--mode {} needs --model", a.mode)));
    }
    let pairs: Vec<(String, RgbImage, RgbImage)> = match a.synthetic {
        Some(n) => {
            if !a.inputs.is_empty() {
                return Err(Error::Config(
                    "give either image paths or --synthetic, not both".into(),
                ));
            }
            (0..n)
                .map(|i| {
                    let (x, y) = synthetic_pair(a.seed, i, a.synthetic_width, a.synthetic_height);
                    (format!("synthetic{i}"), x, y)
                })
                .collect()
        }
        None => {
            if a.inputs.is_empty() {
                return Err(Error::Config(
                    "no images: pass image pairs or --synthetic N".into(),
                ));
            }
            if !a.inputs.len().is_multiple_of(2) {
                return Err(Error::Config(format!(
                    "images come in pairs, got {}",
                    a.inputs.len()
                )));
            }
            let mut v = Vec::new();
            for p in a.inputs.chunks(2) {
                let label = p[0]
                    .file_stem()
                    .and_then(|s| s.to_str())
                    .unwrap_or("pair")
                    .to_string();
                v.push((label, load_image(&p[0])?, load_image(&p[1])?));
            }
            v
        }
    };
    let net = build_netlist(config.multiplier())?;
    let engine = BlendEngine::new(&net, model)?;
    std::fs::create_dir_all(&a.out).map_err(|e| Error::Io {
        path: a.out.clone(),
        source: e,
    })?;
    let mut reports = Vec::new();
    for (label, x, y) in &pairs {
        let (img, report) = selfcomp_core::blend_images(x, y, &engine, a.mode, &config, label)?;
        save_image(&a.out.join(format!("{label}-{}.png", a.mode)), &img)?;
        print!("{}", report.csv_rows());
        reports.push(report);
    }
    let (name, body) = match a.format {
        Format::Csv => ("report.csv", BlendReport::to_csv(&config, &reports)),
        Format::Json => ("report.json", BlendReport::to_json(&config, &reports)),
    };
    write_atomic(&a.out.join(name), body.as_bytes())
}

fn cmd_netlist(a: NetlistArgs, census: bool) -> Result<(), Error> {
    let config = base_config(&a.mul);
    let net = build_netlist(config.multiplier())?;
    if census {
        let c = net.census();
        println!(
            "exact_cells={} approx_cells={} half_adders={} and_gates={}",
            c.exact_cells, c.approx_cells, c.half_adders, c.and_gates
        );
    } else {
        print!("{}", net.dump());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Characterize(a) => cmd_characterize(a),
        Command::Train(a) => cmd_train(a),
        Command::Evaluate(a) => cmd_evaluate(a),
        Command::Blend(a) => cmd_blend(a),
        Command::Netlist(a) => cmd_netlist(a, false),
        Command::Census(a) => cmd_netlist(a, true),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("selfcomp: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
