use std::fs;
use std::path::PathBuf;

use rayon::prelude::*;
use serde_json::{json, Value};
use walras_miso::bargaining::{
    boundary_points, comparison_row, comparison_table, reference_points, OperatingPoint, PointLabel,
    COMPARISON_COLUMNS,
};
use walras_miso::coordination::{run_protocol, tatonnement, Agents, InProcessQueue, Mode, Transport};
use walras_miso::economy::{core_bounds, indifference_trace, sample_contract_curve, CurvePoint, DEFAULT_CURVE_SAMPLES};
use walras_miso::market::{budget_line, excess_demand_good1, excess_demand_good2, walras_equilibrium, walras_price, CLEARING_TOL};
use walras_miso::phy::{derive_gains, generate_channels, sinr_lambda, ChannelFixture};
use walras_miso::report::{Cell, Header, Table};
use walras_miso::{ChannelRealization, DerivedGains, Error, Link};

use crate::config::{Command, Format, RunConfig};

pub const EXIT_BAD_ARGS: i32 = 2;
pub const EXIT_DEGENERATE: i32 = 3;
pub const EXIT_SOLVER: i32 = 4;
pub const EXIT_IO: i32 = 5;

/// Default grid size per axis of the region scan.
const REGION_GRID: usize = 200;

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn new(code: i32, message: impl Into<String>) -> Self {
        CliError {
            code,
            message: message.into(),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::InvalidArgument(_) | Error::Parse(_) => EXIT_BAD_ARGS,
            Error::DegenerateChannel(_) => EXIT_DEGENERATE,
            Error::Transport(_) => EXIT_IO,
            _ => EXIT_SOLVER,
        };
        CliError::new(code, e.to_string())
    }
}

type CliResult<T> = Result<T, CliError>;

/// Files written by one command, in order.
struct Output {
    dir: PathBuf,
    written: Vec<PathBuf>,
}

impl Output {
    fn new(dir: &PathBuf) -> CliResult<Self> {
        fs::create_dir_all(dir)
            .map_err(|e| CliError::new(EXIT_IO, format!("cannot create {}: {e}", dir.display())))?;
        Ok(Output {
            dir: dir.clone(),
            written: Vec::new(),
        })
    }

    fn write(&mut self, name: &str, contents: &str) -> CliResult<()> {
        let path = self.dir.join(name);
        fs::write(&path, contents)
            .map_err(|e| CliError::new(EXIT_IO, format!("cannot write {}: {e}", path.display())))?;
        self.written.push(path);
        Ok(())
    }

    fn table(&mut self, stem: &str, table: &Table, header: &Header, format: Format) -> CliResult<()> {
        let text = match format {
            Format::Csv => table.to_csv(header),
            Format::Json => table.to_json(header),
        };
        self.write(&format!("{stem}.{}", format.extension()), &text)
    }
}

pub fn run(command: &Command) -> CliResult<Vec<PathBuf>> {
    let cfg = command.config();
    cfg.validate().map_err(|m| CliError::new(EXIT_BAD_ARGS, m))?;
    let header = cfg.header(command.name());
    let channels = load_channels(cfg)?;
    let mut out = Output::new(&cfg.out)?;
    match command {
        Command::Gen(_) => gen(&channels, &header, &mut out)?,
        Command::Region(_) => region(select(&channels, cfg)?, cfg, &header, &mut out)?,
        Command::Contract(_) => contract(select(&channels, cfg)?, cfg, &header, &mut out)?,
        Command::Walras(_) => walras(select(&channels, cfg)?, cfg, &header, &mut out)?,
        Command::Tatonnement(_) => tatonnement_cmd(select(&channels, cfg)?, cfg, &header, &mut out)?,
        Command::Bargain(_) => bargain(select(&channels, cfg)?, cfg, &header, &mut out)?,
        Command::Compare(_) => compare(&channels, cfg, &header, &mut out)?,
    }
    Ok(out.written)
}

/// Reads a fixture file holding either one channel or `{"channels": [...]}`, or
/// generates channels from the seed.
fn load_channels(cfg: &RunConfig) -> CliResult<Vec<ChannelRealization>> {
    let Some(path) = &cfg.input else {
        return Ok(generate_channels(cfg.antennas, cfg.snr_db, cfg.seed, cfg.count)?);
    };
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::new(EXIT_IO, format!("cannot read {}: {e}", path.display())))?;
    let doc: Value = serde_json::from_str(&text)
        .map_err(|e| CliError::new(EXIT_BAD_ARGS, format!("{}: {e}", path.display())))?;
    let items = match doc.get("channels") {
        Some(Value::Array(items)) => items.clone(),
        Some(_) => return Err(CliError::new(EXIT_BAD_ARGS, "`channels` must be an array")),
        None => vec![doc],
    };
    if items.is_empty() {
        return Err(CliError::new(EXIT_BAD_ARGS, format!("{} holds no channels", path.display())));
    }
    items
        .into_iter()
        .map(|v| {
            let fixture: ChannelFixture = serde_json::from_value(v)
                .map_err(|e| CliError::new(EXIT_BAD_ARGS, format!("{}: {e}", path.display())))?;
            Ok(ChannelRealization::try_from(fixture)?)
        })
        .collect()
}

fn select<'a>(channels: &'a [ChannelRealization], cfg: &RunConfig) -> CliResult<&'a ChannelRealization> {
    channels.get(cfg.channel).ok_or_else(|| {
        CliError::new(
            EXIT_BAD_ARGS,
            format!("--channel {} out of range ({} channels)", cfg.channel, channels.len()),
        )
    })
}

fn gen(channels: &[ChannelRealization], header: &Header, out: &mut Output) -> CliResult<()> {
    let body: Vec<String> = channels.iter().map(ChannelRealization::to_json).collect();
    let text = format!(
        "{{\"meta\":{},\"channels\":[\n{}\n]}}\n",
        header.json_meta(),
        body.join(",\n")
    );
    out.write("channels.json", &text)
}

const CURVE_COLUMNS: [&str; 7] = ["x22", "x11", "x21", "x12", "phi1", "phi2", "residual"];

fn curve_table(curve: &[CurvePoint]) -> Table {
    let mut t = Table::new(CURVE_COLUMNS);
    for p in curve {
        let a = &p.alloc;
        t.push(vec![
            a.x22.into(),
            a.x11.into(),
            a.x21.into(),
            a.x12.into(),
            p.sinr.phi1.into(),
            p.sinr.phi2.into(),
            p.residual.into(),
        ]);
    }
    t
}

/// Whether some grid point is at least as good for both links and better for one,
/// beyond a relative tolerance.
fn dominated_by_grid(p: &CurvePoint, grid: &[(f64, f64)]) -> bool {
    let (c1, c2) = (p.sinr.phi1, p.sinr.phi2);
    let t1 = 1e-9 * c1.abs().max(1.0);
    let t2 = 1e-9 * c2.abs().max(1.0);
    grid.iter()
        .any(|&(g1, g2)| g1 >= c1 - t1 && g2 >= c2 - t2 && (g1 > c1 + t1 || g2 > c2 + t2))
}

fn region(ch: &ChannelRealization, cfg: &RunConfig, header: &Header, out: &mut Output) -> CliResult<()> {
    let gains = derive_gains(ch)?;
    let s = cfg.samples_or(REGION_GRID);
    let l1 = gains.lambda_mrt(Link::One);
    let l2 = gains.lambda_mrt(Link::Two);
    let mut grid = Table::new(["lambda1", "lambda2", "phi1", "phi2"]);
    let mut sinrs = Vec::with_capacity(s * s);
    for i in 0..s {
        let a = l1 * i as f64 / (s - 1) as f64;
        for j in 0..s {
            let b = l2 * j as f64 / (s - 1) as f64;
            let p = sinr_lambda(a, b, &gains)?;
            sinrs.push((p.phi1, p.phi2));
            grid.push(vec![a.into(), b.into(), p.phi1.into(), p.phi2.into()]);
        }
    }
    let curve = sample_contract_curve(&gains, DEFAULT_CURVE_SAMPLES)?;
    if cfg.verify {
        let bad = curve.par_iter().filter(|p| dominated_by_grid(p, &sinrs)).count();
        if bad > 0 {
            return Err(CliError::new(
                EXIT_SOLVER,
                format!("verification failed: {bad} contract-curve points are dominated by grid points"),
            ));
        }
    }
    out.table("region_grid", &grid, header, cfg.format)?;
    out.table("region_curve", &curve_table(&curve), header, cfg.format)
}

const TRACE_COLUMNS: [&str; 7] = ["trace", "consumer", "phi", "own", "other", "lambda1", "lambda2"];

/// A trace row in consumer `k`'s coordinates plus the matching point of the box.
fn trace_row(trace: &str, k: Link, phi: f64, own: f64, other: f64, gains: &DerivedGains) -> Vec<Cell> {
    let (lambda1, lambda2) = match k {
        Link::One => (own, gains.lambda_mrt(Link::Two) - other),
        Link::Two => (gains.lambda_mrt(Link::One) - other, own),
    };
    vec![
        trace.into(),
        (k.index() as usize).into(),
        phi.into(),
        own.into(),
        other.into(),
        lambda1.into(),
        lambda2.into(),
    ]
}

fn push_indifference(t: &mut Table, trace: &str, k: Link, phi: f64, gains: &DerivedGains, n: usize) {
    for (own, other) in indifference_trace(k, phi, gains, n) {
        t.push(trace_row(trace, k, phi, own, other, gains));
    }
}

fn contract(ch: &ChannelRealization, cfg: &RunConfig, header: &Header, out: &mut Output) -> CliResult<()> {
    let gains = derive_gains(ch)?;
    let n = cfg.curve_samples();
    let curve = sample_contract_curve(&gains, n)?;
    let nash = sinr_lambda(gains.lambda_mrt(Link::One), gains.lambda_mrt(Link::Two), &gains)?;
    let mut traces = Table::new(TRACE_COLUMNS);
    for k in Link::BOTH {
        let levels = if cfg.levels.is_empty() { vec![nash.get(k)] } else { cfg.levels.clone() };
        for phi in levels {
            push_indifference(&mut traces, "indifference", k, phi, &gains, n);
        }
    }
    out.table("contract_curve", &curve_table(&curve), header, cfg.format)?;
    out.table("contract_indifference", &traces, header, cfg.format)
}

fn walras(ch: &ChannelRealization, cfg: &RunConfig, header: &Header, out: &mut Output) -> CliResult<()> {
    let gains = derive_gains(ch)?;
    let eq = walras_equilibrium(&gains)?;
    let z1 = excess_demand_good1(&eq.price, &gains)?;
    let z2 = excess_demand_good2(&eq.price, &gains)?;
    if !(z1.abs() <= CLEARING_TOL && z2.abs() <= CLEARING_TOL && eq.price.is_interior()) {
        return Err(CliError::new(
            EXIT_SOLVER,
            format!("market does not clear at beta = {}: z1 = {z1}, z2 = {z2}", eq.price.beta),
        ));
    }
    let n = cfg.curve_samples();
    let mut traces = Table::new(TRACE_COLUMNS);
    for k in Link::BOTH {
        push_indifference(&mut traces, "nash_level", k, eq.nash.get(k), &gains, n);
        push_indifference(&mut traces, "walras_level", k, eq.sinr.get(k), &gains, n);
        let slope = eq.price.beta;
        for (own, other) in budget_line(k, &eq.price, &gains, n) {
            traces.push(trace_row("budget", k, slope, own, other, &gains));
        }
    }

    let mut report = eq.to_json_value();
    report["meta"] = header.json_meta();
    report["excess_demand"] = json!({ "good1": z1, "good2": z2 });
    let mut text = serde_json::to_string_pretty(&report).expect("report serializes");
    text.push('\n');
    out.write("walras.json", &text)?;
    out.table("walras_traces", &traces, header, cfg.format)
}

fn tatonnement_cmd(ch: &ChannelRealization, cfg: &RunConfig, header: &Header, out: &mut Output) -> CliResult<()> {
    let gains = derive_gains(ch)?;
    let beta_star = walras_price(&gains)?.beta;
    let mut transport = InProcessQueue::new();
    let outcome = run_protocol(Agents::from_channel(ch, Mode::Iterative)?, &mut transport, Mode::Iterative, cfg.epsilon)?;
    let trace = outcome
        .trace
        .as_ref()
        .ok_or_else(|| CliError::new(EXIT_SOLVER, "iterative run produced no trace"))?;
    let direct = tatonnement(ch, cfg.epsilon)?;
    if direct.rows != trace.rows || direct.final_beta.to_bits() != outcome.final_beta.to_bits() {
        return Err(CliError::new(EXIT_SOLVER, "protocol run disagrees with the direct computation"));
    }
    if cfg.verify && (outcome.final_beta - beta_star).abs() > cfg.epsilon {
        return Err(CliError::new(
            EXIT_SOLVER,
            format!("final price {} is farther than epsilon from {beta_star}", outcome.final_beta),
        ));
    }

    let mut t = Table::new(["iteration", "beta", "beta_lo", "beta_hi", "z1", "beta_star"]);
    for r in &trace.rows {
        t.push(vec![
            r.iteration.into(),
            r.beta.into(),
            r.beta_lo.into(),
            r.beta_hi.into(),
            r.z1.into(),
            beta_star.into(),
        ]);
    }
    out.table("tatonnement_trace", &t, header, cfg.format)?;

    let mut log = json!({ "meta": header.json_meta() }).to_string();
    log.push('\n');
    log.push_str(&walras_miso::coordination::to_jsonl(transport.log()));
    out.write("tatonnement_messages.jsonl", &log)
}

/// The six reference points of one channel and its boundary samples.
fn analyze(ch: &ChannelRealization, samples: usize) -> CliResult<(Vec<OperatingPoint>, Vec<OperatingPoint>)> {
    let gains = derive_gains(ch)?;
    let curve = sample_contract_curve(&gains, samples)?;
    let bounds = core_bounds(&gains)?;
    let points = reference_points(ch, &gains, &curve, &bounds)?;
    Ok((points, boundary_points(&curve)))
}

fn bargain(ch: &ChannelRealization, cfg: &RunConfig, header: &Header, out: &mut Output) -> CliResult<()> {
    let (points, boundary) = analyze(ch, cfg.curve_samples())?;
    let nash = points[0];
    let mut b = Table::new(["lambda1", "lambda2", "phi1", "phi2"]);
    for p in &boundary {
        b.push(vec![p.lambda1.into(), p.lambda2.into(), p.sinr.phi1.into(), p.sinr.phi2.into()]);
    }
    out.table("bargain_points", &comparison_table(&points, &nash), header, cfg.format)?;
    out.table("bargain_boundary", &b, header, cfg.format)
}

fn compare(channels: &[ChannelRealization], cfg: &RunConfig, header: &Header, out: &mut Output) -> CliResult<()> {
    let samples = cfg.curve_samples();
    let results: Vec<Vec<OperatingPoint>> = channels
        .par_iter()
        .enumerate()
        .map(|(i, ch)| {
            analyze(ch, samples).map(|(points, _)| points).map_err(|mut e| {
                e.message = format!("channel {i}: {}", e.message);
                e
            })
        })
        .collect::<CliResult<_>>()?;

    let mut columns = vec!["channel"];
    columns.extend(COMPARISON_COLUMNS);
    let mut table = Table::new(columns);
    let labels: Vec<PointLabel> = results[0].iter().map(|p| p.label).collect();
    let mut in_core = vec![0usize; labels.len()];
    for (i, points) in results.iter().enumerate() {
        let nash = points[0];
        for (j, p) in points.iter().enumerate() {
            let mut row = vec![Cell::from(i)];
            row.extend(comparison_row(p, &nash));
            table.push(row);
            in_core[j] += usize::from(p.in_core(&nash));
        }
    }
    out.table("compare", &table, header, cfg.format)?;

    if channels.len() > 1 {
        let mut summary = Table::new(["label", "in_core_fraction", "in_core_count", "channels"]);
        for (label, count) in labels.iter().zip(in_core) {
            summary.push(vec![
                label.as_str().into(),
                (count as f64 / channels.len() as f64).into(),
                count.into(),
                channels.len().into(),
            ]);
        }
        out.table("compare_summary", &summary, header, cfg.format)?;
    }
    Ok(())
}
