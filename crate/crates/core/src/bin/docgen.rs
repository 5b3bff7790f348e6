//! Command-line front end.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use docgen::annotate::{category_csv, dataset_metrics, dataset_stats, histogram_csv, Category};
use docgen::color::Rgb;
use docgen::pipeline::{
    generate_dataset, infer_template, read_annotations, read_manifest, DatasetConfig, GenerateError, Generator,
    GeneratorOptions,
};
use docgen::render::{page_file_name, PageFormat};
use docgen::templates::template_to_toml;

#[derive(Parser)]
#[command(name = "docgen", version, about = "Synthetic document layout generator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a dataset of page images, annotations and a manifest.
    Generate(GenerateArgs),
    /// Update a template's parameters from observed values.
    Infer(InferArgs),
    /// Category table and plan-variable histograms of a dataset.
    Stats(StatsArgs),
    /// Layout metric differences between two datasets.
    Metrics(MetricsArgs),
    /// Render one document, optionally with its boxes drawn.
    Preview(PreviewArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Switch {
    On,
    Off,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Png,
    Jpeg,
}

impl From<Format> for PageFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Png => PageFormat::Png,
            Format::Jpeg => PageFormat::Jpeg,
        }
    }
}

#[derive(Args)]
struct SourceArgs {
    /// Template or mixture file, or a bundled preset name.
    #[arg(long, env = "DOCGEN_TEMPLATE", default_value = "scientific")]
    template: PathBuf,
    /// Language pack merged over every template.
    #[arg(long, env = "DOCGEN_LANG")]
    lang: Option<String>,
    #[arg(long, env = "DOCGEN_SEED", default_value_t = 0)]
    seed: u64,
    /// Render resolution; defaults to the template's.
    #[arg(long, env = "DOCGEN_DPI")]
    dpi: Option<u32>,
    #[arg(long, env = "DOCGEN_DEFECTS", value_enum, default_value = "on")]
    defects: Switch,
}

impl SourceArgs {
    fn generator(&self) -> Result<Generator, GenerateError> {
        let options = GeneratorOptions { dpi: self.dpi, defects: matches!(self.defects, Switch::On) };
        Generator::load(&self.template, self.lang.as_deref(), options)
    }
}

#[derive(Args)]
struct GenerateArgs {
    #[command(flatten)]
    source: SourceArgs,
    #[arg(long, env = "DOCGEN_COUNT", default_value_t = 10)]
    count: u64,
    #[arg(long, env = "DOCGEN_OUT")]
    out: PathBuf,
    #[arg(long, env = "DOCGEN_WORKERS", default_value_t = default_workers())]
    workers: usize,
    #[arg(long, env = "DOCGEN_FORMAT", value_enum, default_value = "png")]
    format: Format,
    /// Also write every document plan as JSON.
    #[arg(long, env = "DOCGEN_EMIT_PLANS")]
    emit_plans: bool,
    /// Write plans and the manifest only, without layout or rendering.
    #[arg(long, env = "DOCGEN_PLAN_ONLY")]
    plan_only: bool,
    #[arg(long, env = "DOCGEN_QUIET")]
    quiet: bool,
}

#[derive(Args)]
struct InferArgs {
    /// A single template file or bundled preset.
    #[arg(long, env = "DOCGEN_TEMPLATE")]
    template: PathBuf,
    /// Line-delimited JSON observations.
    #[arg(long, env = "DOCGEN_OBSERVATIONS")]
    observations: PathBuf,
    /// Where to write the updated template.
    #[arg(long, env = "DOCGEN_OUT")]
    out: PathBuf,
}

#[derive(Args)]
struct StatsArgs {
    /// Dataset directory.
    #[arg(long, env = "DOCGEN_DATASET")]
    dataset: PathBuf,
    /// Directory for the CSV reports; defaults to the dataset directory.
    #[arg(long, env = "DOCGEN_OUT")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct MetricsArgs {
    #[arg(long)]
    a: PathBuf,
    #[arg(long)]
    b: PathBuf,
}

#[derive(Args)]
struct PreviewArgs {
    #[command(flatten)]
    source: SourceArgs,
    /// Document index.
    #[arg(long, default_value_t = 0)]
    doc: u64,
    #[arg(long, env = "DOCGEN_OUT")]
    out: PathBuf,
    /// Also write copies of the pages with ground-truth boxes drawn.
    #[arg(long)]
    boxes: bool,
}

fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), GenerateError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|source| GenerateError::Io { path: dir.to_path_buf(), source })?;
    }
    fs::write(path, bytes).map_err(|source| GenerateError::Io { path: path.to_path_buf(), source })
}

fn generate(args: GenerateArgs) -> Result<(), GenerateError> {
    let gen = args.source.generator()?;
    let cfg = DatasetConfig {
        out: args.out,
        count: args.count,
        seed: args.source.seed,
        workers: args.workers,
        format: args.format.into(),
        emit_plans: args.emit_plans,
        plan_only: args.plan_only,
        template: args.source.template.to_string_lossy().into_owned(),
        progress: !args.quiet,
    };
    generate_dataset(&gen, &cfg)?;
    Ok(())
}

fn infer(args: InferArgs) -> Result<(), GenerateError> {
    let path = &args.observations;
    let text = fs::read_to_string(path).map_err(|source| GenerateError::Io { path: path.clone(), source })?;
    let inference = infer_template(&args.template, &text)?;
    for set in &inference.observations {
        let before = serde_json::to_string(&inference.prior.params[&set.node_id]).expect("serializes");
        let after = serde_json::to_string(&inference.posterior.params[&set.node_id]).expect("serializes");
        println!("{}\tn={}\t{} -> {}", set.node_id, set.values.len(), before, after);
    }
    write(&args.out, template_to_toml(&inference.posterior).as_bytes())
}

fn stats(args: StatsArgs) -> Result<(), GenerateError> {
    let manifest = read_manifest(&args.dataset)?;
    let s = dataset_stats(&manifest);
    let out = args.out.unwrap_or(args.dataset);
    write(&out.join("categories.csv"), category_csv(&s).as_bytes())?;
    write(&out.join("histograms.csv"), histogram_csv(&s).as_bytes())
}

fn metrics(args: MetricsArgs) -> Result<(), GenerateError> {
    let a = dataset_metrics(&read_annotations(&args.a)?);
    let b = dataset_metrics(&read_annotations(&args.b)?);
    println!("metric,a,b,difference");
    for (name, x, y) in [
        ("overlap_index", a.overlap_index, b.overlap_index),
        ("alignment_index", a.alignment_index, b.alignment_index),
        ("average_element_count", a.mean_element_count, b.mean_element_count),
    ] {
        println!("{name},{x},{y},{}", (x - y).abs());
    }
    Ok(())
}

fn box_color(c: Category) -> Rgb {
    const COLORS: [Rgb; 10] = [
        Rgb([230, 25, 75]),
        Rgb([60, 180, 75]),
        Rgb([0, 130, 200]),
        Rgb([245, 130, 48]),
        Rgb([145, 30, 180]),
        Rgb([70, 240, 240]),
        Rgb([240, 50, 230]),
        Rgb([128, 128, 0]),
        Rgb([0, 128, 128]),
        Rgb([170, 110, 40]),
    ];
    COLORS[c.coco_id() as usize - 1]
}

fn preview(args: PreviewArgs) -> Result<(), GenerateError> {
    let gen = args.source.generator()?;
    let doc = gen.generate(args.doc, args.source.seed)?;
    let render_err = |source| GenerateError::Render { doc: args.doc, source };
    write(&args.out.join(format!("{}.json", args.doc)), doc.plan.to_json().as_bytes())?;
    for (i, page) in doc.pages.iter().enumerate() {
        let name = page_file_name(args.doc, i, PageFormat::Png);
        write(&args.out.join(&name), &page.encode(PageFormat::Png).map_err(render_err)?)?;
        if args.boxes {
            let mut marked = page.clone();
            for e in doc.composed.elements.iter().filter(|e| e.bbox.page_index == i) {
                let r = e.bbox.rect();
                let c = box_color(e.category);
                marked.fill_rect(r.x.into(), r.y.into(), r.w, 1, c);
                marked.fill_rect(r.x.into(), (r.bottom() - 1).into(), r.w, 1, c);
                marked.fill_rect(r.x.into(), r.y.into(), 1, r.h, c);
                marked.fill_rect((r.right() - 1).into(), r.y.into(), 1, r.h, c);
            }
            let name = format!("{}_{i}_boxes.png", args.doc);
            write(&args.out.join(name), &marked.encode(PageFormat::Png).map_err(render_err)?)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Generate(a) => generate(a),
        Command::Infer(a) => infer(a),
        Command::Stats(a) => stats(a),
        Command::Metrics(a) => metrics(a),
        Command::Preview(a) => preview(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let report = serde_json::json!({ "error": e.code(), "message": e.to_string() });
            eprintln!("{report}");
            ExitCode::FAILURE
        }
    }
}
