use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use bshm_core::graph::{build_forest, check_structure, CostCapacityForest};
use bshm_core::harness::{self, GeneratorSpec, Level, RatioRow, SizeDistribution, TableSpec, VerifyOptions};
use bshm_core::model::{example_table, Instance, LoadOptions, MachineTypeTable};
use bshm_core::offline::{alg_offline, check_offline, AuditRow, OfflineOptions, PackPolicy};
use bshm_core::oneshot::{
    canonicalize, charge, cn_config, cn_cost, optimal_oneshot, r_star, z_diamond, OneShot, SolverLimits,
};
use bshm_core::online::{check_online, simulate, OnlineCheckOptions, SeriesRow};
use bshm_core::oracle::{opt1_lower_bound, opt2, OracleBudget};
use bshm_core::rational::{self, to_text, Rat};
use bshm_core::schedule::Schedule;

#[derive(Parser, Debug)]
#[command(name = "bshm", version, about = "Busy-time scheduling on heterogeneous machines")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Global {
    /// Seed for generated instances
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    /// Jobs per generated instance
    #[arg(long, global = true, default_value_t = 10)]
    jobs: usize,
    /// Machine types per generated instance
    #[arg(long, global = true, default_value_t = 4)]
    types: usize,
    /// Longest over shortest job length, e.g. `2` or `7/2`
    #[arg(long, global = true, default_value = "2", value_parser = parse_rat)]
    mu: Rat,
    /// Primary output file (stdout when absent)
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Size distribution of generated jobs
    #[arg(long, global = true, value_enum, default_value_t = Dist::Clustered)]
    dist: Dist,
    /// Generated jobs start in `[0, horizon)`
    #[arg(long, global = true, default_value_t = 10)]
    horizon: u32,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum Dist {
    Uniform,
    Clustered,
    Skewed,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write random instances
    Generate {
        /// Number of instances; more than one needs `--out` to be a directory
        #[arg(long, default_value_t = 1)]
        count: usize,
    },
    /// Build the cost-per-capacity forest and check its structure
    Graph {
        #[arg(long)]
        instance: Option<PathBuf>,
        /// Use the 13-type example table
        #[arg(long, conflicts_with = "instance")]
        example: bool,
        /// Emit Graphviz instead of JSON
        #[arg(long)]
        dot: bool,
    },
    /// Solve one instant exactly and show the alternative configuration and charges
    Oneshot {
        #[arg(long)]
        instance: Option<PathBuf>,
        /// Comma-separated job sizes; otherwise the active jobs at `--at`
        #[arg(long, value_delimiter = ',', value_parser = parse_rat)]
        sizes: Option<Vec<Rat>>,
        /// Instant to read from the instance (default: the heaviest segment)
        #[arg(long, value_parser = parse_rat)]
        at: Option<Rat>,
        #[arg(long, default_value_t = bshm_core::oneshot::DEFAULT_NODE_LIMIT)]
        max_nodes: u64,
    },
    /// Run the offline algorithm
    Offline {
        #[arg(long)]
        instance: Option<PathBuf>,
        /// Per-segment audit CSV
        #[arg(long)]
        audit: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Packer::Length)]
        packer: Packer,
    },
    /// Run the online algorithm
    Online {
        #[arg(long)]
        instance: Option<PathBuf>,
        /// Per-segment open-machine CSV
        #[arg(long)]
        series: Option<PathBuf>,
        /// Also check the fill and cost bounds that use artificial jobs
        #[arg(long)]
        check_artificial: bool,
    },
    /// Exact optimum and the per-instant lower bound
    Oracle {
        #[arg(long)]
        instance: Option<PathBuf>,
        #[arg(long, default_value_t = 5_000_000)]
        max_nodes: u64,
    },
    /// Check every invariant over a batch of instances
    Verify {
        /// Instance files or directories of them; generated from the flags when empty
        #[arg(long = "instances", num_args = 1..)]
        instances: Vec<PathBuf>,
        #[arg(long, default_value_t = 20)]
        count: usize,
        #[arg(long, value_enum, default_value_t = LevelArg::Fast)]
        level: LevelArg,
        /// JSON summary file
        #[arg(long)]
        summary: Option<PathBuf>,
        /// Write a plotting script for the CSV report
        #[arg(long)]
        plot_script: Option<PathBuf>,
    },
    /// Time the algorithms on generated instances
    Bench {
        #[arg(long, default_value_t = 10)]
        count: usize,
    },
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum Packer {
    Length,
    Arrival,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum LevelArg {
    Fast,
    Full,
}

fn parse_rat(s: &str) -> Result<Rat, String> {
    rational::parse(s).map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

/// Returns whether every requested check passed.
fn run(cli: Cli) -> Result<bool> {
    let g = &cli.global;
    match &cli.command {
        Command::Generate { count } => generate(g, *count),
        Command::Graph { instance, example, dot } => graph(g, instance.as_deref(), *example, *dot),
        Command::Oneshot {
            instance,
            sizes,
            at,
            max_nodes,
        } => oneshot(g, instance.as_deref(), sizes.clone(), at.clone(), *max_nodes),
        Command::Offline {
            instance,
            audit,
            packer,
        } => offline(g, instance.as_deref(), audit.as_deref(), *packer),
        Command::Online {
            instance,
            series,
            check_artificial,
        } => online(g, instance.as_deref(), series.as_deref(), *check_artificial),
        Command::Oracle { instance, max_nodes } => oracle(g, instance.as_deref(), *max_nodes),
        Command::Verify {
            instances,
            count,
            level,
            summary,
            plot_script,
        } => verify(g, instances, *count, *level, summary.as_deref(), plot_script.as_deref()),
        Command::Bench { count } => bench(g, *count),
    }
}

fn spec(g: &Global, seed: u64) -> GeneratorSpec {
    GeneratorSpec {
        seed,
        jobs: g.jobs,
        mu: g.mu.clone(),
        horizon: g.horizon,
        sizes: match g.dist {
            Dist::Uniform => SizeDistribution::Uniform,
            Dist::Clustered => SizeDistribution::Clustered,
            Dist::Skewed => SizeDistribution::Skewed,
        },
        table: TableSpec {
            count: g.types,
            ..TableSpec::default()
        },
    }
}

fn load(path: &Path) -> Result<Instance> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Instance::from_json(&text, LoadOptions::default()).with_context(|| format!("loading {}", path.display()))
}

/// The instance from `--instance`, or one generated from the global flags.
fn instance_or_generated(g: &Global, path: Option<&Path>) -> Result<Instance> {
    match path {
        Some(p) => load(p),
        None => Ok(harness::generate(&spec(g, g.seed))?),
    }
}

fn emit(g: &Global, text: &str) -> Result<()> {
    match &g.out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn csv_text(header: &[String], rows: impl IntoIterator<Item = Vec<String>>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

fn write_csv(path: &Path, header: &[String], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    fs::write(path, csv_text(header, rows)?).with_context(|| format!("writing {}", path.display()))
}

fn pretty(v: &serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json values serialize");
    s.push('\n');
    s
}

fn report_violations<T: std::fmt::Display>(what: &str, violations: &[T]) -> bool {
    for v in violations {
        eprintln!("{what}: {v}");
    }
    violations.is_empty()
}

fn generate(g: &Global, count: usize) -> Result<bool> {
    let make = |seed| harness::generate(&spec(g, seed));
    if count == 1 {
        let mut text = make(g.seed)?.to_json();
        text.push('\n');
        emit(g, &text)?;
        return Ok(true);
    }
    let Some(dir) = &g.out else {
        bail!("--count above 1 needs --out DIR");
    };
    fs::create_dir_all(dir)?;
    for k in 0..count as u64 {
        let seed = g.seed + k;
        let mut text = make(seed)?.to_json();
        text.push('\n');
        fs::write(dir.join(format!("instance-{seed:06}.json")), text)?;
    }
    Ok(true)
}

fn forest_json(types: &MachineTypeTable, forest: &CostCapacityForest) -> Result<serde_json::Value> {
    let nodes = types
        .indices()
        .map(|i| {
            let s = forest.node_sets(i)?;
            Ok(json!({
                "type": i,
                "capacity": to_text(types.capacity(i)),
                "rate": to_text(types.rate(i)),
                "parent": s.parent,
                "children": s.children,
                "ancestors": s.ancestors,
                "subtree": s.subtree,
                "lowest": s.lowest,
                "younger_siblings": s.younger_siblings,
                "elder_siblings": s.elder_siblings,
                "t_set": s.t_set,
            }))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(json!({ "roots": forest.roots(), "nodes": nodes }))
}

fn graph(g: &Global, path: Option<&Path>, example: bool, dot: bool) -> Result<bool> {
    let types = if example {
        example_table()
    } else {
        instance_or_generated(g, path)?.types().clone()
    };
    let forest = build_forest(&types);
    let violations = check_structure(&forest, &types);
    if dot {
        emit(g, &forest.to_dot(&types))?;
    } else if g.format == Format::Csv {
        let header: Vec<String> = ["type", "capacity", "rate", "parent", "t_set"].map(String::from).into();
        let rows = types.indices().map(|i| {
            vec![
                i.to_string(),
                to_text(types.capacity(i)),
                to_text(types.rate(i)),
                forest.parent(i).map(|p| p.to_string()).unwrap_or_default(),
                forest
                    .t_set(i)
                    .iter()
                    .map(usize::to_string)
                    .collect::<Vec<_>>()
                    .join(" "),
            ]
        });
        emit(g, &csv_text(&header, rows)?)?;
    } else {
        let mut v = forest_json(&types, &forest)?;
        v["violations"] = json!(violations.iter().map(ToString::to_string).collect::<Vec<_>>());
        emit(g, &pretty(&v))?;
    }
    Ok(report_violations("graph", &violations))
}

fn oneshot(g: &Global, path: Option<&Path>, sizes: Option<Vec<Rat>>, at: Option<Rat>, max_nodes: u64) -> Result<bool> {
    let inst = instance_or_generated(g, path)?;
    let types = inst.types();
    let forest = build_forest(types);
    let (instant, sizes) = match sizes {
        Some(s) => (None, s),
        None => {
            let t = match at {
                Some(t) => t,
                None => inst
                    .timeline()
                    .segments()
                    .into_iter()
                    .max_by(|a, b| {
                        let load = |t: &Rat| bshm_core::model::total_size(inst.jobs(), t);
                        load(&a.start).cmp(&load(&b.start)).then(b.start.cmp(&a.start))
                    })
                    .map(|s| s.start)
                    .unwrap_or_else(rational::zero),
            };
            let sizes = inst
                .active_at(&t)
                .into_iter()
                .map(|j| inst.job(j).size.clone())
                .collect();
            (Some(t), sizes)
        }
    };
    let ctx = OneShot::new(types, &forest, sizes)?;
    let limits = SolverLimits { max_nodes };
    let texts = |xs: &[Rat]| xs.iter().map(to_text).collect::<Vec<_>>();
    let mut out = json!({
        "at": instant.as_ref().map(to_text),
        "sizes": texts(ctx.sizes()),
        "exact_types": ctx.exact_types(),
    });
    let passed = if ctx.is_empty() {
        true
    } else {
        let w = optimal_oneshot(&ctx, limits)?;
        let canon = canonicalize(&w, &ctx, limits)?;
        let top = z_diamond(&ctx)?;
        let cn = cn_config(&ctx, top)?;
        let charges = charge(&ctx)?;
        out["optimum"] = json!({ "counts": texts(w.counts()), "cost": to_text(&w.cost(types)) });
        out["canonical"] = json!({ "counts": texts(canon.counts()) });
        out["alternative"] = json!({
            "top": top,
            "counts": texts(cn.counts()),
            "cost": to_text(&cn_cost(&ctx, top, &cn)),
        });
        out["charges"] = json!({
            "case": charges.case,
            "values": texts(&charges.charges),
            "total": to_text(&charges.total()),
        });
        out["greedy_charges"] = json!(texts(&r_star(&ctx, &w)?));
        let violations = harness::check_oneshot(&ctx, Some(limits))?;
        out["violations"] = json!(violations.iter().map(ToString::to_string).collect::<Vec<_>>());
        report_violations("oneshot", &violations)
    };
    emit(g, &pretty(&out))?;
    Ok(passed)
}

fn schedule_output(g: &Global, inst: &Instance, schedule: &Schedule) -> Result<()> {
    match g.format {
        Format::Json => {
            let mut text = schedule.to_json(inst);
            text.push('\n');
            emit(g, &text)
        }
        Format::Csv => {
            let header: Vec<String> = ["job", "type", "machine"].map(String::from).into();
            let mut rows: Vec<Vec<String>> = schedule
                .placement
                .iter()
                .enumerate()
                .map(|(j, m)| vec![inst.job(j).id.clone(), m.type_index.to_string(), m.machine.to_string()])
                .collect();
            rows.sort();
            emit(g, &csv_text(&header, rows)?)
        }
    }
}

fn offline(g: &Global, path: Option<&Path>, audit: Option<&Path>, packer: Packer) -> Result<bool> {
    let inst = instance_or_generated(g, path)?;
    let forest = build_forest(inst.types());
    let opts = OfflineOptions {
        policy: match packer {
            Packer::Length => PackPolicy::FirstFitByLength,
            Packer::Arrival => PackPolicy::FirstFitByArrival,
        },
        ..OfflineOptions::default()
    };
    let result = alg_offline(&inst, &forest, &opts)?;
    result.schedule.validate(&inst)?;
    schedule_output(g, &inst, &result.schedule)?;
    if let Some(p) = audit {
        let header: Vec<String> = AuditRow::HEADER.map(String::from).into();
        write_csv(p, &header, result.audit.iter().map(AuditRow::record))?;
    }
    eprintln!("offline cost {}", to_text(&result.cost));
    Ok(report_violations("offline", &check_offline(&inst, &forest, &result)))
}

fn online(g: &Global, path: Option<&Path>, series: Option<&Path>, check_artificial: bool) -> Result<bool> {
    let inst = instance_or_generated(g, path)?;
    let forest = build_forest(inst.types());
    let result = simulate(&inst, &forest)?;
    result.schedule.validate(&inst)?;
    schedule_output(g, &inst, &result.schedule)?;
    if let Some(p) = series {
        write_csv(
            p,
            &SeriesRow::header(inst.types().len()),
            result.series.iter().map(SeriesRow::record),
        )?;
    }
    eprintln!("online cost {}", to_text(&result.cost));
    let mut passed = report_violations("online", &result.event_violations);
    if check_artificial {
        let audit = check_online(&inst, &forest, &result, &OnlineCheckOptions::default())?;
        passed &= report_violations("online", &audit.violations);
    }
    Ok(passed)
}

fn oracle(g: &Global, path: Option<&Path>, max_nodes: u64) -> Result<bool> {
    let inst = instance_or_generated(g, path)?;
    let forest = build_forest(inst.types());
    let best = opt2(
        &inst,
        OracleBudget {
            max_nodes,
            ..OracleBudget::default()
        },
    )?;
    let lb = opt1_lower_bound(&inst, &forest, SolverLimits::default())?;
    let witness: serde_json::Value = serde_json::from_str(&best.schedule.to_json(&inst))?;
    let out = json!({
        "opt2": to_text(&best.cost),
        "opt1_lower_bound": to_text(&lb),
        "nodes": best.nodes,
        "witness": witness,
    });
    emit(g, &pretty(&out))?;
    Ok(lb <= best.cost)
}

fn collect_instances(paths: &[PathBuf]) -> Result<Vec<(String, Instance)>> {
    let mut files = Vec::new();
    for p in paths {
        if p.is_dir() {
            for entry in fs::read_dir(p)? {
                let path = entry?.path();
                if path.extension().is_some_and(|e| e == "json") {
                    files.push(path);
                }
            }
        } else {
            files.push(p.clone());
        }
    }
    files.sort();
    files
        .iter()
        .map(|f| {
            let id = f
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            Ok((id, load(f)?))
        })
        .collect()
}

fn verify(
    g: &Global,
    paths: &[PathBuf],
    count: usize,
    level: LevelArg,
    summary: Option<&Path>,
    plot_script: Option<&Path>,
) -> Result<bool> {
    let instances = if paths.is_empty() {
        (0..count as u64)
            .map(|k| {
                let seed = g.seed + k;
                Ok((format!("seed-{seed:06}"), harness::generate(&spec(g, seed))?))
            })
            .collect::<Result<Vec<_>>>()?
    } else {
        collect_instances(paths)?
    };
    let opts = VerifyOptions {
        level: match level {
            LevelArg::Fast => Level::Fast,
            LevelArg::Full => Level::Full,
        },
        ..VerifyOptions::default()
    };
    let report = harness::verify(&instances, &opts);
    match g.format {
        Format::Csv => {
            let header: Vec<String> = RatioRow::HEADER.map(String::from).into();
            emit(g, &csv_text(&header, report.rows.iter().map(RatioRow::record))?)?;
        }
        Format::Json => emit(g, &pretty(&report.summary_json()))?,
    }
    if let Some(p) = summary {
        fs::write(p, pretty(&report.summary_json()))?;
    }
    if let Some(p) = plot_script {
        fs::write(p, PLOT_SCRIPT)?;
    }
    for f in &report.failures {
        eprintln!("{} [{}]: {}", f.instance, f.check, f.detail);
    }
    Ok(report.passed())
}

const PLOT_SCRIPT: &str = r#"#!/usr/bin/env python3
"""Plots a `bshm verify --format csv` report: python3 plot.py report.csv [out.png]"""
import csv
import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

rows = list(csv.DictReader(open(sys.argv[1])))
out = sys.argv[2] if len(sys.argv) > 2 else "report.png"


def column(name):
    pts = []
    for r in rows:
        if r[name] and r["mu"]:
            num, _, den = r["mu"].partition("/")
            pts.append((float(num) / float(den or 1), float(r[name])))
    return pts


fig, axes = plt.subplots(1, 2, figsize=(10, 4))
for ax, name in zip(axes, ["offline_ratio", "online_ratio"]):
    pts = column(name)
    ax.scatter([p[0] for p in pts], [p[1] for p in pts], s=12)
    ax.set_xlabel("mu")
    ax.set_ylabel(name)
fig.tight_layout()
fig.savefig(out)
print(out)
"#;

fn bench(g: &Global, count: usize) -> Result<bool> {
    let header: Vec<String> = ["seed", "jobs", "types", "offline_cost", "online_cost", "lower_bound"]
        .map(String::from)
        .into();
    let mut rows = Vec::new();
    for k in 0..count as u64 {
        let seed = g.seed + k;
        let inst = harness::generate(&spec(g, seed))?;
        let forest = build_forest(inst.types());
        let clock = Instant::now();
        let off = alg_offline(
            &inst,
            &forest,
            &OfflineOptions {
                opt1_limits: None,
                ..OfflineOptions::default()
            },
        )?;
        let t_off = clock.elapsed();
        let clock = Instant::now();
        let on = simulate(&inst, &forest)?;
        let t_on = clock.elapsed();
        let clock = Instant::now();
        let lb = opt1_lower_bound(&inst, &forest, SolverLimits::default()).ok();
        let t_lb = clock.elapsed();
        eprintln!(
            "seed {seed}: offline {:.3} ms, online {:.3} ms, lower bound {:.3} ms",
            t_off.as_secs_f64() * 1e3,
            t_on.as_secs_f64() * 1e3,
            t_lb.as_secs_f64() * 1e3
        );
        rows.push(vec![
            seed.to_string(),
            inst.jobs().len().to_string(),
            inst.types().len().to_string(),
            to_text(&off.cost),
            to_text(&on.cost),
            lb.as_ref().map(to_text).unwrap_or_default(),
        ]);
    }
    match g.format {
        Format::Csv => emit(g, &csv_text(&header, rows)?)?,
        Format::Json => {
            let v: Vec<serde_json::Value> = rows
                .iter()
                .map(|r| {
                    header
                        .iter()
                        .zip(r)
                        .map(|(h, c)| (h.clone(), json!(c)))
                        .collect::<serde_json::Map<_, _>>()
                        .into()
                })
                .collect();
            emit(g, &pretty(&json!(v)))?;
        }
    }
    Ok(true)
}
