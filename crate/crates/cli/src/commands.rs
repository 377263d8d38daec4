use std::fmt::Write as _;
use std::path::Path;

use crt_netcode::analysis::{compare_overhead, table1, OverheadComparison, TABLE1};
use crt_netcode::coding::{RecoveryOutcome, SessionConfig};
use crt_netcode::primes::PrimePool;
use crt_netcode::simulator::{
    experiment_table2, prime_coverage, random_messages, recover_rate, stream_rng,
    ExperimentParams, ExperimentTable, RecoverRates, RecoveryReport, Session,
};
use crt_netcode::topology::{butterfly, generate_layered, LayeredParams, Topology};
use num_bigint::BigUint;
use serde::Serialize;

use crate::args::{
    Command, DemoArgs, Format, LayeredArgs, ModeArg, OverheadArgs, SimulateArgs, Table1Args,
    Table2Args, TopologyArgs,
};
use crate::CliError;

/// Topologies for `simulate` and `topology` come from this stream of the seed.
const TOPOLOGY_STREAM: u64 = 7;

/// A named output file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Artifact {
    pub name: String,
    pub contents: String,
}

impl Artifact {
    fn new(name: impl Into<String>, contents: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            contents: contents.into(),
        }
    }
}

/// Everything a command produced: files, which one goes to stdout, and
/// diagnostics for stderr.
#[derive(Debug, Default)]
pub struct Output {
    pub artifacts: Vec<Artifact>,
    pub primary: usize,
    pub diagnostics: Vec<String>,
}

impl Output {
    fn single(artifact: Artifact) -> Self {
        Self {
            artifacts: vec![artifact],
            ..Self::default()
        }
    }
}

pub fn run(command: &Command) -> Result<Output, CliError> {
    match command {
        Command::Demo(args) => demo(args),
        Command::Table1(args) => cmd_table1(args),
        Command::Table2(args) => cmd_table2(args),
        Command::Overhead(args) => overhead(args),
        Command::Simulate(args) => simulate(args),
        Command::Topology(args) => topology(args),
        Command::Replay(_) => unreachable!("replay is resolved before dispatch"),
    }
}

fn json<T: Serialize>(value: &T) -> Result<String, CliError> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

fn csv_string(rows: Vec<Vec<String>>) -> Result<String, CliError> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    for row in rows {
        writer.write_record(row)?;
    }
    let bytes = writer.into_inner().map_err(|e| CliError::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn parse_message(text: &str) -> Result<BigUint, CliError> {
    text.parse()
        .map_err(|_| CliError::Usage(format!("`{text}` is not a non-negative integer")))
}

fn layered_params(args: &LayeredArgs) -> LayeredParams {
    LayeredParams {
        sources: args.sources,
        width: args.width,
        depth: args.depth,
        receivers: args.receivers,
        sigma: args.sigma,
    }
}

fn describe(outcome: &RecoveryOutcome) -> String {
    match outcome {
        RecoveryOutcome::Full { value } => format!("Full({value})"),
        RecoveryOutcome::PartialMod { residue, modulus } => {
            format!("PartialMod({residue} mod {modulus})")
        }
        RecoveryOutcome::Unrecovered => "None".into(),
    }
}

#[derive(Serialize)]
struct EdgeRecord {
    from: String,
    to: String,
    packet: Option<String>,
}

#[derive(Serialize)]
struct DemoReport<'a> {
    message: String,
    n: u32,
    edges: Vec<EdgeRecord>,
    report: &'a RecoveryReport,
}

fn demo(args: &DemoArgs) -> Result<Output, CliError> {
    let x = parse_message(&args.message)?;
    let topo = butterfly();
    let c = topo.node_by_label("c").expect("butterfly has node c");
    let trace = Session::new(&topo, SessionConfig::single_source(4, 1, args.n, 2, 0))
        .with_pool(PrimePool::custom(vec![3, 11, 5, 7])?)
        .with_pick(c, (7, 11))
        .run_traced(&[vec![x.clone()]])?;

    let edges: Vec<EdgeRecord> = topo
        .edges()
        .iter()
        .zip(&trace.edge_packets)
        .map(|(&(a, b), pkt)| EdgeRecord {
            from: topo.label(a).into(),
            to: topo.label(b).into(),
            packet: pkt.as_ref().map(ToString::to_string),
        })
        .collect();

    let mut text = String::new();
    writeln!(text, "butterfly multicast of X = {x} ({}-bit), primes 3, 11, 5, 7", args.n).unwrap();
    for e in &edges {
        let pkt = e.packet.as_deref().unwrap_or("-");
        writeln!(text, "{} -> {}: {pkt}", e.from, e.to).unwrap();
    }
    for r in &trace.report.receivers {
        let inputs: Vec<String> = topo
            .in_edges(r.node)
            .iter()
            .filter_map(|&e| trace.edge_packets[e].as_ref())
            .map(|p| format!("x ≡ {} (mod {}·{})", p.residues()[0], p.pair().0, p.pair().1))
            .collect();
        let sol = &r.solution[0];
        writeln!(text, "{}: solve {} => {}", r.label, inputs.join(", "), sol).unwrap();
        let bound = sol.residue() + sol.modulus();
        writeln!(
            text,
            "{}: c + N = {bound} (2^{} = {}) => {}",
            r.label,
            args.n,
            BigUint::from(1u32) << args.n,
            describe(&r.outcomes[0][0])
        )
        .unwrap();
    }

    let report = json(&DemoReport {
        message: x.to_string(),
        n: args.n,
        edges,
        report: &trace.report,
    })?;
    let primary = usize::from(args.format == Format::Json);
    Ok(Output {
        artifacts: vec![
            Artifact::new("butterfly.txt", text),
            Artifact::new("butterfly.json", report),
        ],
        primary,
        diagnostics: Vec::new(),
    })
}

#[derive(Serialize)]
struct Table1Row {
    r: f64,
    r_star: f64,
    reference: f64,
}

fn cmd_table1(args: &Table1Args) -> Result<Output, CliError> {
    let rows: Vec<Table1Row> = table1()
        .into_iter()
        .zip(TABLE1)
        .map(|((r, r_star), (_, reference))| Table1Row { r, r_star, reference })
        .collect();
    let artifact = match args.format {
        Format::Json => Artifact::new("table1.json", json(&rows)?),
        Format::Csv | Format::Text => {
            let mut out = vec![vec!["r".to_string(), "R*".to_string()]];
            out.extend(
                rows.iter()
                    .map(|row| vec![format!("{}", row.r), format!("{:.2}", row.r_star)]),
            );
            Artifact::new("table1.csv", csv_string(out)?)
        }
    };
    Ok(Output::single(artifact))
}

#[derive(Debug, Clone, Serialize)]
pub struct ToleranceCheck {
    pub width: usize,
    pub depth: usize,
    pub mean_r_prime: f64,
    pub reference: f64,
    pub difference: f64,
    pub tolerance: f64,
    pub within: bool,
}

pub fn tolerance_checks(table: &ExperimentTable, tolerance: f64) -> Vec<ToleranceCheck> {
    table
        .summaries
        .iter()
        .filter_map(|s| {
            s.reference_r_prime.map(|reference| {
                let difference = s.mean_r_prime - reference;
                ToleranceCheck {
                    width: s.width,
                    depth: s.depth,
                    mean_r_prime: s.mean_r_prime,
                    reference,
                    difference,
                    tolerance,
                    within: difference.abs() <= tolerance,
                }
            })
        })
        .collect()
}

#[derive(Serialize)]
struct Table2Json<'a> {
    table: &'a ExperimentTable,
    tolerance: Vec<ToleranceCheck>,
}

fn cmd_table2(args: &Table2Args) -> Result<Output, CliError> {
    if args.seeds == 0 {
        return Err(CliError::Usage("--seeds must be at least 1".into()));
    }
    let params = ExperimentParams {
        widths: args.widths.clone(),
        depths: args.depths.clone(),
        seeds: (args.seed..args.seed + args.seeds).collect(),
        m: args.m,
        policy: args.policy.into(),
        path: args.path.into(),
    };
    let table = experiment_table2(&params)?;
    let checks = tolerance_checks(&table, args.tolerance);
    let diagnostics = checks
        .iter()
        .map(|c| {
            format!(
                "M={} L={}: mean R' = {:.4}, reference {:.3}, difference {:+.4}, {} ±{}",
                c.width,
                c.depth,
                c.mean_r_prime,
                c.reference,
                c.difference,
                if c.within { "within" } else { "OUTSIDE" },
                c.tolerance
            )
        })
        .collect();

    let artifact = match args.format {
        Format::Json => Artifact::new(
            "table2.json",
            json(&Table2Json {
                table: &table,
                tolerance: checks,
            })?,
        ),
        Format::Csv | Format::Text => {
            let receivers = table.rows.first().map_or(0, |r| r.primes_collected.len());
            let mut header = vec!["M".to_string(), "L".to_string(), "seed".to_string()];
            header.extend((1..=receivers).map(|i| format!("t_{i}")));
            header.push("R'".to_string());
            let mut rows = vec![header];
            for r in &table.rows {
                let mut row = vec![r.width.to_string(), r.depth.to_string(), r.seed.to_string()];
                row.extend(r.primes_collected.iter().map(ToString::to_string));
                row.push(format!("{:.4}", r.r_prime));
                rows.push(row);
            }
            for s in &table.summaries {
                let mut row = vec![s.width.to_string(), s.depth.to_string(), "mean".to_string()];
                row.extend(s.mean_primes_collected.iter().map(|t| format!("{t:.1}")));
                row.push(format!("{:.4}", s.mean_r_prime));
                rows.push(row);
            }
            Artifact::new("table2.csv", csv_string(rows)?)
        }
    };
    Ok(Output {
        artifacts: vec![artifact],
        primary: 0,
        diagnostics,
    })
}

fn overhead(args: &OverheadArgs) -> Result<Output, CliError> {
    let cmp: OverheadComparison = compare_overhead(args.k, args.receivers, args.q, args.m, args.frame)?;
    let artifact = match args.format {
        Format::Json => Artifact::new("overhead.json", json(&cmp)?),
        Format::Csv | Format::Text => {
            let flag = |b: bool| if b { "infeasible" } else { "ok" }.to_string();
            let rows = vec![
                vec![
                    "scheme".into(),
                    "head_bits".into(),
                    "head_bytes".into(),
                    "frame_percent".into(),
                    "status".into(),
                ],
                vec![
                    "coding-vector".into(),
                    cmp.coding_vector_bits.to_string(),
                    cmp.coding_vector_bytes.to_string(),
                    format!("{:.1}", 100.0 * cmp.coding_vector_fraction),
                    flag(cmp.coding_vector_infeasible),
                ],
                vec![
                    "crt".into(),
                    (8 * cmp.crt_head_bytes).to_string(),
                    cmp.crt_head_bytes.to_string(),
                    format!("{:.1}", 100.0 * cmp.crt_fraction),
                    flag(cmp.crt_infeasible),
                ],
            ];
            Artifact::new("overhead.csv", csv_string(rows)?)
        }
    };
    Ok(Output::single(artifact))
}

fn load_or_generate(path: Option<&Path>, layered: &LayeredArgs, seed: u64) -> Result<Topology, CliError> {
    match path {
        Some(path) => Ok(std::fs::read_to_string(path)?.parse()?),
        None => Ok(generate_layered(
            &layered_params(layered),
            &mut stream_rng(seed, TOPOLOGY_STREAM),
        )?),
    }
}

#[derive(Serialize)]
struct SimulateJson<'a> {
    r_prime: f64,
    recover_rate: RecoverRates,
    report: &'a RecoveryReport,
}

fn simulate(args: &SimulateArgs) -> Result<Output, CliError> {
    let topo = load_or_generate(args.topology.as_deref(), &args.layered, args.seed)?;
    let (config, messages) = match args.mode {
        ModeArg::Multi => {
            let k = topo.sources().len();
            let config = SessionConfig::multi_source(args.m, args.u, k, args.seed);
            (config, random_messages(args.seed, k, args.u, 2 * args.m - 1))
        }
        ModeArg::Single => {
            let k = topo.out_degree(0);
            let messages = if args.message.is_empty() {
                random_messages(args.seed, 1, args.u, args.n)
            } else {
                vec![args
                    .message
                    .iter()
                    .map(|m| parse_message(m))
                    .collect::<Result<Vec<_>, _>>()?]
            };
            let u = messages[0].len();
            (SessionConfig::single_source(args.m, u, args.n, k, args.seed), messages)
        }
    };
    let config = config.with_policy(args.policy.into()).with_path(args.path.into());
    let report = Session::new(&topo, config).run(&messages)?;
    let rates = recover_rate(&report);

    let artifact = match args.format {
        Format::Json => Artifact::new(
            "simulate.json",
            json(&SimulateJson {
                r_prime: prime_coverage(&report),
                recover_rate: rates,
                report: &report,
            })?,
        ),
        Format::Csv | Format::Text => {
            let mut rows = vec![vec![
                "receiver".to_string(),
                "in_degree".to_string(),
                "t".to_string(),
                "R*".to_string(),
            ]];
            for (r, rate) in report.receivers.iter().zip(&rates.per_receiver) {
                rows.push(vec![
                    r.label.clone(),
                    r.in_degree.to_string(),
                    r.primes_collected().to_string(),
                    format!("{rate:.4}"),
                ]);
            }
            Artifact::new("simulate.csv", csv_string(rows)?)
        }
    };
    Ok(Output::single(artifact))
}

fn topology(args: &TopologyArgs) -> Result<Output, CliError> {
    let topo = load_or_generate(None, &args.layered, args.seed)?;
    Ok(Output::single(Artifact::new("topology.txt", topo.to_string())))
}
