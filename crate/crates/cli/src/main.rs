//! `mmbox` command-line front end.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use mmbox::io::{parse_space, parse_space_unchecked};
use mmbox::limits::{
    domination_search, empirical_convergence_experiment, is_homogeneous, isometry_group, prokhorov_plan,
    witness_search, SearchMode, WitnessOptions,
};
use mmbox::matrix_dist::DEFAULT_TUPLE_LIMIT;
use mmbox::suite::{run_suite, PROPERTIES};
use mmbox::{
    box_distance, box_upper_from_witness, exact_mu_r, me_lambda, observable_distance, reconstruction_check,
    BoxOptions, Error, FiniteMMSpace, FunctionOnSpace, HMode, HlipOptions, SolveMode,
};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

#[derive(Parser, Debug, Serialize)]
#[command(name = "mmbox", version, about = "Box and observable distances between finite mm-spaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Mass-loss parameter.
    #[arg(long, global = true, default_value_t = 1.0)]
    lambda: f64,

    /// Solver mode: exact|heuristic (box), exact0|sampled (hlip), exact|annealing (witness).
    #[arg(long, global = true)]
    mode: Option<String>,

    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Exact box refuses more cells than this.
    #[arg(long, global = true, default_value_t = 64)]
    max_cells: usize,

    /// Largest r for matrix distributions.
    #[arg(long, global = true)]
    max_r: Option<usize>,

    /// Samples for the sampled observable distance.
    #[arg(long, global = true, default_value_t = 256)]
    samples: usize,

    /// Slack for the CLI's own checks on returned certificates.
    #[arg(long, global = true, default_value_t = 1e-9)]
    tol: f64,

    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Command {
    /// Check an mm-space file and list violations.
    Validate { space: PathBuf },
    /// Box distance between two spaces.
    Box { x: PathBuf, y: PathBuf },
    /// me_lambda between two functions; file holds {"weights", "f", "g"}.
    Me { input: PathBuf },
    /// Observable distance H_lambda Li_1.
    Hlip { x: PathBuf, y: PathBuf },
    /// Exact matrix distribution mu_r (r = --max-r, default 2).
    Matdist { space: PathBuf },
    /// Isomorphism test by matrix distributions.
    Isotest { x: PathBuf, y: PathBuf },
    /// Prokhorov distance between two measures on the same metric.
    Prokhorov { x: PathBuf, y: PathBuf },
    /// Convergence witness from `xn` to `x` and the box bound it gives.
    Witness { xn: PathBuf, x: PathBuf },
    /// CSV of mean box_1 against empirical spaces.
    ConvergeReport {
        space: PathBuf,
        #[arg(long, value_delimiter = ',', default_values_t = [10usize, 100, 1000])]
        sizes: Vec<usize>,
        /// Number of seeds, starting at --seed.
        #[arg(long, default_value_t = 5)]
        seeds: u64,
    },
    /// Search for a 1-Lipschitz map certifying x dominates y.
    Dominate {
        x: PathBuf,
        y: PathBuf,
        #[arg(long, default_value_t = 7)]
        max_points: usize,
    },
    /// Check whether the isometry group acts transitively on the support.
    Homogeneous {
        space: PathBuf,
        #[arg(long, default_value_t = 7)]
        max_points: usize,
    },
    /// Seeded property battery.
    Suite {
        /// Comma-separated subset of properties.
        #[arg(long, value_delimiter = ',')]
        properties: Vec<String>,
    },
}

enum Failure {
    Input(String),
    Size(String),
    Invariant(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::SizeLimit { .. } => Failure::Size(e.to_string()),
            Error::Invariant(_) => Failure::Invariant(e.to_string()),
            _ => Failure::Input(e.to_string()),
        }
    }
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Input(_) => 1,
            Failure::Size(_) => 2,
            Failure::Invariant(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Input(m) | Failure::Size(m) | Failure::Invariant(m) => m,
        }
    }
}

type Outcome<T> = std::result::Result<T, Failure>;

struct Inputs {
    digests: Vec<Value>,
}

impl Inputs {
    fn read(&mut self, path: &Path) -> Outcome<String> {
        let text = fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
        self.digests.push(json!({
            "path": path.display().to_string(),
            "sha256": hex::encode(Sha256::digest(text.as_bytes())),
        }));
        Ok(text)
    }

    fn space(&mut self, path: &Path) -> Outcome<FiniteMMSpace> {
        let text = self.read(path)?;
        parse_space(&text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MeInput {
    weights: Vec<f64>,
    f: Vec<f64>,
    g: Vec<f64>,
}

fn mode_or<'a>(cli: &'a Cli, default: &'a str) -> &'a str {
    cli.mode.as_deref().unwrap_or(default)
}

fn bad_mode(mode: &str, allowed: &str) -> Failure {
    Failure::Input(format!("unknown mode {mode:?}, expected {allowed}"))
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("results serialise")
}

/// Returns the result JSON, or CSV text for `converge-report`, and whether
/// the command's own check passed.
fn dispatch(cli: &Cli, inputs: &mut Inputs) -> Outcome<(Value, bool)> {
    match &cli.command {
        Command::Validate { space } => {
            let text = inputs.read(space)?;
            let s = parse_space_unchecked(&text)?;
            let report = s.validate();
            let ok = report.is_valid();
            Ok((json!({"valid": ok, "violations": to_value(&report.violations)}), ok))
        }
        Command::Box { x, y } => {
            let (x, y) = (inputs.space(x)?, inputs.space(y)?);
            let mut opts = BoxOptions {
                max_cells: cli.max_cells,
                seed: cli.seed,
                ..BoxOptions::default()
            };
            opts.mode = match mode_or(cli, "exact") {
                "exact" => SolveMode::Exact,
                "heuristic" => SolveMode::Heuristic,
                m => return Err(bad_mode(m, "exact|heuristic")),
            };
            let r = box_distance(&x, &y, cli.lambda, &opts)?;
            if let Some(pi) = &r.certificate.coupling {
                let m = x.total_mass().min(y.total_mass());
                if (pi.total_mass() - m).abs() > cli.tol * m.max(1.0) {
                    return Err(Failure::Invariant(format!(
                        "certificate coupling has mass {}, expected {m}",
                        pi.total_mass()
                    )));
                }
            }
            Ok((to_value(&r), true))
        }
        Command::Me { input } => {
            let text = inputs.read(input)?;
            let m: MeInput = serde_json::from_str(&text).map_err(|e| Failure::Input(e.to_string()))?;
            let v = me_lambda(&FunctionOnSpace(m.f), &FunctionOnSpace(m.g), &m.weights, cli.lambda)?;
            Ok((json!({"value": v}), true))
        }
        Command::Hlip { x, y } => {
            let (x, y) = (inputs.space(x)?, inputs.space(y)?);
            let mode = match mode_or(cli, "exact0") {
                "exact0" => HMode::Exact0,
                "sampled" => HMode::Sampled,
                m => return Err(bad_mode(m, "exact0|sampled")),
            };
            let opts = HlipOptions {
                mode,
                samples: cli.samples,
                seed: cli.seed,
                max_cells: cli.max_cells,
                ..HlipOptions::default()
            };
            Ok((to_value(&observable_distance(&x, &y, cli.lambda, &opts)?), true))
        }
        Command::Matdist { space } => {
            let s = inputs.space(space)?;
            let r = cli.max_r.unwrap_or(2);
            Ok((to_value(&exact_mu_r(&s, r, DEFAULT_TUPLE_LIMIT)?), true))
        }
        Command::Isotest { x, y } => {
            let (x, y) = (inputs.space(x)?, inputs.space(y)?);
            let v = reconstruction_check(&x, &y, cli.max_r, DEFAULT_TUPLE_LIMIT)?;
            if !v.consistent {
                return Err(Failure::Invariant(
                    "matrix distributions and isomorphism search disagree".into(),
                ));
            }
            Ok((to_value(&v), true))
        }
        Command::Prokhorov { x, y } => {
            let (x, y) = (inputs.space(x)?, inputs.space(y)?);
            if x.dist() != y.dist() {
                return Err(Failure::Input("both files must share the same dist matrix".into()));
            }
            let (v, plan) = prokhorov_plan(x.dist(), x.weights(), y.weights())?;
            Ok((json!({"value": v, "plan": to_value(&plan)}), true))
        }
        Command::Witness { xn, x } => {
            let (xn, x) = (inputs.space(xn)?, inputs.space(x)?);
            let mode = match mode_or(cli, "exact") {
                "exact" => SearchMode::Exact,
                "annealing" => SearchMode::Annealing,
                m => return Err(bad_mode(m, "exact|annealing")),
            };
            let opts = WitnessOptions {
                mode,
                seed: cli.seed,
                ..WitnessOptions::default()
            };
            let w = witness_search(&xn, &x, &opts)?;
            let terms = w.terms(&xn, &x)?;
            if !w.is_valid(&xn, &x)? {
                return Err(Failure::Invariant("witness fails its own bounds".into()));
            }
            let bound = box_upper_from_witness(&xn, &x, &w, cli.max_cells)?;
            Ok((json!({"witness": to_value(&w), "terms": to_value(&terms), "box_upper_bound": bound}), true))
        }
        Command::ConvergeReport { space, sizes, seeds } => {
            let s = inputs.space(space)?;
            let seeds: Vec<u64> = (0..*seeds).map(|k| cli.seed.wrapping_add(k)).collect();
            let rep = empirical_convergence_experiment(&s, sizes, &seeds, cli.max_cells)?;
            let mut csv = String::from("N,value,mode\n");
            for row in &rep.rows {
                csv.push_str(&format!("{},{},{}\n", row.n, row.value, row.mode));
            }
            Ok((Value::String(csv), true))
        }
        Command::Dominate { x, y, max_points } => {
            let (x, y) = (inputs.space(x)?, inputs.space(y)?);
            let cert = domination_search(&x, &y, *max_points)?;
            if let Some(c) = &cert {
                if !c.verify(&x, &y) {
                    return Err(Failure::Invariant("domination certificate does not verify".into()));
                }
            }
            Ok((json!({"dominates": cert.is_some(), "certificate": to_value(&cert)}), true))
        }
        Command::Homogeneous { space, max_points } => {
            let s = inputs.space(space)?;
            let group = isometry_group(&s, *max_points)?;
            let h = is_homogeneous(&s, *max_points)?;
            Ok((json!({"homogeneous": h, "isometries": group.len()}), true))
        }
        Command::Suite { properties } => {
            if let Some(p) = properties.iter().find(|p| !PROPERTIES.contains(&p.as_str())) {
                return Err(Failure::Input(format!(
                    "unknown property {p:?}; known: {}",
                    PROPERTIES.join(", ")
                )));
            }
            let rep = run_suite(cli.seed, properties);
            let ok = rep.passed;
            Ok((to_value(&rep), ok))
        }
    }
}

fn emit(cli: &Cli, text: &str) -> Outcome<()> {
    match &cli.out {
        Some(path) => fs::write(path, text).map_err(|e| Failure::Input(format!("{}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: &Cli) -> Outcome<bool> {
    let start = Instant::now();
    let mut inputs = Inputs { digests: Vec::new() };
    let (result, ok) = dispatch(cli, &mut inputs)?;
    if let (Command::ConvergeReport { .. }, Value::String(csv)) = (&cli.command, &result) {
        emit(cli, csv)?;
        return Ok(ok);
    }
    let mut config = to_value(cli);
    if let Value::Object(m) = &mut config {
        m.remove("out");
    }
    let report = json!({
        "inputs": inputs.digests,
        "config": config,
        "result": result,
        "wall_time_s": start.elapsed().as_secs_f64(),
    });
    let mut text = serde_json::to_string_pretty(&report).expect("report serialises");
    text.push('\n');
    emit(cli, &text)?;
    Ok(ok)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    if !(cli.lambda >= 0.0) {
        eprintln!("error: --lambda must be a nonnegative number");
        return ExitCode::from(1);
    }
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => match cli.command {
            Command::Validate { .. } => ExitCode::from(1),
            _ => ExitCode::from(3),
        },
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
