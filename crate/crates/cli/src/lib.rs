//! Command-line front end for the qwitness toolkit.
//!
//! [`run`] parses an argument list, executes one subcommand and streams the
//! result to `out`. Every output carries the schema tag and the full effective
//! configuration so a run can be reproduced from its own output.

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use qwitness::bounds::{separable_bound_weighted, DEFAULT_TOL};
use qwitness::format::{g12, g12_opt};
use qwitness::measure::{certify_from_shots, sample_both};
use qwitness::multipartite::{cluster_stabilizers, cluster_pair_test, ghz_pair_test, ghz_stabilizers, StabilizerKind};
use qwitness::noise::{figure2_scan, noisy_state, threshold, Interval, NoiseFamily, WitnessKind};
use qwitness::qudit::{bell_state, mes};
use qwitness::state_io::{read_state, state_to_json, write_state};
use qwitness::{separable_bound_m, QuditState, QwError, SCHEMA};

#[derive(Parser, Debug)]
#[command(name = "qwitness", version, about = "Fourier-based entanglement witnesses for qudits")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(tag = "subcommand", rename_all = "kebab-case")]
enum Command {
    /// Separable bound M_d of the amplitude correlation
    Bound(BoundArgs),
    /// Evaluate both witnesses on a two-qudit state
    Witness(WitnessArgs),
    /// Noise threshold of one family/witness pair
    Threshold(ThresholdArgs),
    /// Emit the data behind the bound curve (1) or the threshold table (2)
    Figure(FigureArgs),
    /// GHZ or cluster stabilizer pair tests
    Multipartite(MultipartiteArgs),
    /// Finite-shot simulation of the two-setting protocol
    Simulate(SimulateArgs),
    /// Write a canonical state to a JSON state file
    MakeState(MakeStateArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Json,
    Csv,
}

#[derive(Args, Debug, Serialize)]
struct BoundArgs {
    #[arg(long)]
    d: usize,
    /// Weight p of the Z term in the convex-sum form
    #[arg(long)]
    weight: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    tol: f64,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

/// Where the input state comes from. Exactly one source must be given.
#[derive(Args, Debug, Serialize, Default)]
#[group(required = true, multiple = false)]
struct StateSource {
    /// JSON state file
    #[arg(long)]
    state: Option<PathBuf>,
    /// Maximally entangled state of local dimension D
    #[arg(long, value_name = "D")]
    mes: Option<usize>,
    /// Bell state X^l Z^m applied to the MES (needs --d)
    #[arg(long, value_name = "L,M", value_parser = parse_pair)]
    bell: Option<(usize, usize)>,
    /// Noisy MES family member (needs --d)
    #[arg(long, value_name = "FAMILY,P", value_parser = parse_noisy)]
    noisy: Option<(NoiseFamily, f64)>,
}

impl StateSource {
    fn load(&self, d: Option<usize>) -> qwitness::Result<QuditState> {
        let need_d = |flag: &str| {
            d.ok_or_else(|| QwError::Domain(format!("--{flag} requires --d")))
        };
        let state = if let Some(path) = &self.state {
            read_state(path)?
        } else if let Some(md) = self.mes {
            mes(md)?
        } else if let Some((l, m)) = self.bell {
            bell_state(need_d("bell")?, l, m)?
        } else if let Some((family, p)) = self.noisy {
            noisy_state(need_d("noisy")?, family, p)?
        } else {
            return Err(QwError::Domain("no state source given".into()));
        };
        if let Some(d) = d {
            if state.d() != d {
                return Err(QwError::Domain(format!("state has d={}, but --d {d} was given", state.d())));
            }
        }
        Ok(state)
    }
}

#[derive(Args, Debug, Serialize)]
struct WitnessArgs {
    #[command(flatten)]
    #[serde(flatten)]
    source: StateSource,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Args, Debug, Serialize)]
struct ThresholdArgs {
    #[arg(long)]
    d: usize,
    #[arg(long, value_parser = parse_family)]
    family: NoiseFamily,
    #[arg(long, value_parser = parse_witness)]
    witness: WitnessKind,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Args, Debug, Serialize)]
struct FigureArgs {
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2))]
    which: u8,
    #[arg(long, default_value_t = 2)]
    dmin: usize,
    #[arg(long, default_value_t = 20)]
    dmax: usize,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Args, Debug, Serialize)]
struct MultipartiteArgs {
    #[arg(long, value_parser = parse_kind)]
    kind: StabilizerKind,
    #[arg(long)]
    d: usize,
    #[arg(long)]
    n: usize,
    /// JSON state file on n qudits
    #[arg(long, required_unless_present = "canonical", conflicts_with = "canonical")]
    state: Option<PathBuf>,
    /// Use the GHZ or cluster state stabilized by the chosen set
    #[arg(long)]
    canonical: bool,
    /// 1-based partner site m in 2..=n; all sites when omitted
    #[arg(long)]
    site: Option<usize>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Args, Debug, Serialize)]
struct SimulateArgs {
    #[command(flatten)]
    #[serde(flatten)]
    source: StateSource,
    #[arg(long)]
    d: Option<usize>,
    /// Total shots, split evenly between the two settings
    #[arg(long)]
    shots: u64,
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = 5.0)]
    sigmas: f64,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Args, Debug, Serialize)]
struct MakeStateArgs {
    #[command(flatten)]
    #[serde(flatten)]
    source: StateSource,
    #[arg(long)]
    d: Option<usize>,
    /// Output path; standard output when omitted
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_pair(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s.split_once(',').ok_or("expected two comma-separated integers")?;
    let a = a.trim().parse().map_err(|e| format!("{e}"))?;
    let b = b.trim().parse().map_err(|e| format!("{e}"))?;
    Ok((a, b))
}

fn parse_noisy(s: &str) -> Result<(NoiseFamily, f64), String> {
    let (f, p) = s.split_once(',').ok_or("expected FAMILY,P")?;
    let family = parse_family(f.trim())?;
    let p: f64 = p.trim().parse().map_err(|e| format!("{e}"))?;
    Ok((family, p))
}

fn parse_family(s: &str) -> Result<NoiseFamily, String> {
    NoiseFamily::parse(s).map_err(|e| e.to_string())
}

fn parse_witness(s: &str) -> Result<WitnessKind, String> {
    WitnessKind::parse(s).map_err(|e| e.to_string())
}

fn parse_kind(s: &str) -> Result<StabilizerKind, String> {
    StabilizerKind::parse(s).map_err(|e| e.to_string())
}

/// Failure of a run, already classified by exit code.
enum Failure {
    Usage(String),
    Compute(String),
    Io(std::io::Error),
}

impl From<QwError> for Failure {
    fn from(e: QwError) -> Self {
        match e {
            QwError::Convergence { .. } | QwError::Contract(_) | QwError::NotBellDiagonal { .. } => {
                Failure::Compute(e.to_string())
            }
            _ => Failure::Usage(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e)
    }
}

type Outcome = std::result::Result<(), Failure>;

/// Runs one command line (including the program name) and returns the exit
/// code: 0 on success, 2 for usage and input errors, 1 for failed computations.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{}", e.render());
                    0
                }
                _ => {
                    let text = e.render().to_string();
                    let line = text.lines().find(|l| !l.trim().is_empty()).unwrap_or("usage error");
                    let _ = writeln!(err, "{line}");
                    2
                }
            };
        }
    };
    let config = serde_json::to_value(&cli.command).expect("config serializes");
    let result = match &cli.command {
        Command::Bound(a) => bound(a, &config, out),
        Command::Witness(a) => witness(a, &config, out),
        Command::Threshold(a) => threshold_cmd(a, &config, out),
        Command::Figure(a) => figure(a, &config, out),
        Command::Multipartite(a) => multipartite(a, &config, out),
        Command::Simulate(a) => simulate(a, &config, out),
        Command::MakeState(a) => make_state(a, out),
    };
    match result {
        Ok(()) => 0,
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            2
        }
        Err(Failure::Compute(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            1
        }
        Err(Failure::Io(e)) => {
            let _ = writeln!(err, "error: {e}");
            1
        }
    }
}

/// Emits a JSON document with the schema tag, the config and `body`'s fields.
fn emit_json(out: &mut dyn Write, config: &Value, body: Value) -> Outcome {
    let mut doc = serde_json::Map::new();
    doc.insert("schema".into(), json!(SCHEMA));
    doc.insert("config".into(), config.clone());
    match body {
        Value::Object(fields) => doc.extend(fields),
        other => {
            doc.insert("result".into(), other);
        }
    }
    let text = serde_json::to_string_pretty(&Value::Object(doc)).expect("json serializes");
    writeln!(out, "{text}")?;
    Ok(())
}

/// Emits a CSV table preceded by `#` comment lines carrying the schema and config.
fn emit_csv(out: &mut dyn Write, config: &Value, header: &str, rows: &[String]) -> Outcome {
    writeln!(out, "# schema={SCHEMA}")?;
    writeln!(out, "# config={config}")?;
    writeln!(out, "{header}")?;
    for row in rows {
        writeln!(out, "{row}")?;
    }
    Ok(())
}

fn join_g12(values: &[f64]) -> String {
    values.iter().map(|&v| g12(v)).collect::<Vec<_>>().join(";")
}

fn bound(a: &BoundArgs, config: &Value, out: &mut dyn Write) -> Outcome {
    let res = separable_bound_weighted(a.d, a.weight, a.tol)?;
    let dist = res.optimal_distributions()?;
    match a.format {
        Format::Json => emit_json(
            out,
            config,
            json!({
                "d": res.d,
                "weight": res.weight,
                "m_value": res.m_value,
                "theta_star": res.theta_star,
                "iterations": res.iterations,
                "residual": res.residual,
                "p_z": dist.p,
                "p_x": dist.p_bar,
            }),
        ),
        Format::Csv => emit_csv(
            out,
            config,
            "d,weight,m_value,theta_star,iterations,residual,p_z,p_x",
            &[format!(
                "{},{},{},{},{},{},{},{}",
                res.d,
                g12_opt(res.weight),
                g12(res.m_value),
                g12(res.theta_star),
                res.iterations,
                g12(res.residual),
                join_g12(&dist.p),
                join_g12(&dist.p_bar)
            )],
        ),
    }
}

fn witness(a: &WitnessArgs, config: &Value, out: &mut dyn Write) -> Outcome {
    let state = a.source.load(a.d)?;
    if state.parties() != 2 {
        return Err(QwError::Domain(format!("witnesses need a two-qudit state, got {} parties", state.parties())).into());
    }
    let bound = separable_bound_m(state.d(), DEFAULT_TOL)?;
    let report = qwitness::evaluate_witnesses(&state, &bound)?;
    match a.format {
        Format::Json => emit_json(out, config, serde_json::to_value(&report).expect("report serializes")),
        Format::Csv => emit_csv(
            out,
            config,
            "d,c_value,r_value,c_bound,r_bound,c_margin,r_margin,c_violated,r_violated,\
             fraction_from_c,fraction_from_r,mes_fraction_lb,mes_fraction_lb_clamped,schmidt_lb",
            &[format!(
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                report.d,
                g12(report.c_value),
                g12(report.r_value),
                g12(report.c_bound),
                g12(report.r_bound),
                g12(report.c_margin),
                g12(report.r_margin),
                report.c_violated,
                report.r_violated,
                g12(report.fraction_from_c),
                g12(report.fraction_from_r),
                g12(report.mes_fraction_lb),
                g12(report.mes_fraction_lb_clamped),
                report.schmidt_lb
            )],
        ),
    }
}

fn threshold_cmd(a: &ThresholdArgs, config: &Value, out: &mut dyn Write) -> Outcome {
    let m_value = match a.witness {
        WitnessKind::Rd => Some(separable_bound_m(a.d, DEFAULT_TOL)?.m_value),
        WitnessKind::Cd => None,
    };
    let res = threshold(a.d, a.family, a.witness, m_value)?;
    match a.format {
        Format::Json => emit_json(out, config, serde_json::to_value(&res).expect("threshold serializes")),
        Format::Csv => emit_csv(
            out,
            config,
            "d,family,witness,p_star,method,p_check",
            &[format!(
                "{},{},{},{},{},{}",
                res.d,
                res.family.name(),
                res.witness.name(),
                g12_opt(res.p_star),
                res.method.name(),
                g12_opt(res.p_check)
            )],
        ),
    }
}

fn check_range(dmin: usize, dmax: usize) -> Outcome {
    if dmin < 2 || dmax < dmin {
        return Err(Failure::Usage(format!("invalid dimension range {dmin}..{dmax}")));
    }
    Ok(())
}

fn figure(a: &FigureArgs, config: &Value, out: &mut dyn Write) -> Outcome {
    check_range(a.dmin, a.dmax)?;
    if a.which == 1 {
        figure1(a, config, out)
    } else {
        figure2(a, config, out)
    }
}

fn figure1(a: &FigureArgs, config: &Value, out: &mut dyn Write) -> Outcome {
    let mut rows = Vec::new();
    for d in a.dmin..=a.dmax {
        let res = separable_bound_m(d, DEFAULT_TOL)?;
        let dist = res.optimal_distributions()?;
        rows.push((res, dist));
    }
    match a.format {
        Format::Json => {
            let rows: Vec<Value> = rows
                .iter()
                .map(|(res, dist)| {
                    json!({
                        "d": res.d,
                        "m_value": res.m_value,
                        "theta_star": res.theta_star,
                        "p_z": dist.p,
                        "p_x": dist.p_bar,
                    })
                })
                .collect();
            emit_json(out, config, json!({ "rows": rows }))
        }
        Format::Csv => {
            let lines: Vec<String> = rows
                .iter()
                .map(|(res, dist)| {
                    format!(
                        "{},{},{},{},{}",
                        res.d,
                        g12(res.m_value),
                        g12(res.theta_star),
                        join_g12(&dist.p),
                        join_g12(&dist.p_bar)
                    )
                })
                .collect();
            emit_csv(out, config, "d,m_value,theta_star,p_z,p_x", &lines)
        }
    }
}

fn interval_fields(iv: Option<Interval>) -> (String, String) {
    match iv {
        Some(iv) => (g12(iv.lo), g12(iv.hi)),
        None => (String::new(), String::new()),
    }
}

fn figure2(a: &FigureArgs, config: &Value, out: &mut dyn Write) -> Outcome {
    let table = figure2_scan(a.dmin, a.dmax)?;
    match a.format {
        Format::Json => emit_json(out, config, json!({ "rows": table })),
        Format::Csv => {
            let mut lines = Vec::new();
            for row in &table {
                let (x_lo, x_hi) = interval_fields(row.region_x);
                let (y_lo, y_hi) = interval_fields(row.region_y);
                for t in &row.thresholds {
                    lines.push(format!(
                        "{},{},{},{},{},{x_lo},{x_hi},{y_lo},{y_hi}",
                        t.d,
                        t.family.name(),
                        t.witness.name(),
                        g12_opt(t.p_star),
                        t.method.name()
                    ));
                }
            }
            emit_csv(out, config, "d,family,witness,p_star,method,x_lo,x_hi,y_lo,y_hi", &lines)
        }
    }
}

fn multipartite(a: &MultipartiteArgs, config: &Value, out: &mut dyn Write) -> Outcome {
    let set = match a.kind {
        StabilizerKind::Ghz => ghz_stabilizers(a.d, a.n)?,
        StabilizerKind::Cluster => cluster_stabilizers(a.d, a.n)?,
    };
    let state = match &a.state {
        Some(path) => read_state(path)?,
        None => set.canonical_state()?,
    };
    if state.d() != a.d || state.parties() != a.n {
        return Err(QwError::Domain(format!(
            "state is {} qudits of dimension {}, expected {} of dimension {}",
            state.parties(),
            state.d(),
            a.n,
            a.d
        ))
        .into());
    }
    let m_value = separable_bound_m(a.d, DEFAULT_TOL)?.m_value;
    let sites: Vec<usize> = match a.site {
        Some(m) => vec![m],
        None => (2..=a.n).collect(),
    };
    let mut results = Vec::with_capacity(sites.len());
    for &m in &sites {
        let (w, violated) = match a.kind {
            StabilizerKind::Ghz => ghz_pair_test(&state, m, m_value)?,
            StabilizerKind::Cluster => cluster_pair_test(&state, m, m_value)?,
        };
        results.push((m, w, violated));
    }
    let kind = match a.kind {
        StabilizerKind::Ghz => "ghz",
        StabilizerKind::Cluster => "cluster",
    };
    match a.format {
        Format::Json => {
            let tests: Vec<Value> = results
                .iter()
                .map(|&(m, w, v)| json!({"site": m, "value": w, "violated": v}))
                .collect();
            emit_json(
                out,
                config,
                json!({
                    "kind": kind,
                    "d": a.d,
                    "n": a.n,
                    "m_value": m_value,
                    "tests": tests,
                    "entangled": results.iter().any(|r| r.2),
                }),
            )
        }
        Format::Csv => {
            let lines: Vec<String> = results
                .iter()
                .map(|&(m, w, v)| format!("{kind},{},{},{m},{},{},{v}", a.d, a.n, g12(w), g12(m_value)))
                .collect();
            emit_csv(out, config, "kind,d,n,site,value,m_value,violated", &lines)
        }
    }
}

fn simulate(a: &SimulateArgs, config: &Value, out: &mut dyn Write) -> Outcome {
    let state = a.source.load(a.d)?;
    if state.parties() != 2 {
        return Err(QwError::Domain(format!("simulation needs a two-qudit state, got {} parties", state.parties())).into());
    }
    let (z, x) = sample_both(&state, a.shots, a.seed)?;
    let bound = separable_bound_m(state.d(), DEFAULT_TOL)?;
    let cert = certify_from_shots(&z, &x, &bound, a.sigmas)?;
    match a.format {
        Format::Json => emit_json(
            out,
            config,
            json!({
                "z_record": z,
                "x_record": x,
                "report": cert,
            }),
        ),
        Format::Csv => {
            let e = &cert.estimate;
            emit_csv(
                out,
                config,
                "d,z_shots,x_shots,c_hat,c_se,r_hat,r_se,c_bound,r_bound,c_certified,r_certified,mes_fraction_lb,schmidt_lb",
                &[format!(
                    "{},{},{},{},{},{},{},{},{},{},{},{},{}",
                    cert.d,
                    z.shots,
                    x.shots,
                    g12(e.c_hat),
                    g12(e.c_se),
                    g12(e.r_hat),
                    g12(e.r_se),
                    g12(cert.c_bound),
                    g12(cert.r_bound),
                    cert.c_certified,
                    cert.r_certified,
                    g12(cert.mes_fraction_lb),
                    cert.schmidt_lb
                )],
            )
        }
    }
}

fn make_state(a: &MakeStateArgs, out: &mut dyn Write) -> Outcome {
    let state = a.source.load(a.d)?;
    match &a.out {
        Some(path) => write_state(path, &state)?,
        None => writeln!(out, "{}", state_to_json(&state))?,
    }
    Ok(())
}
