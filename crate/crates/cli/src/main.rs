use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use affine_trace::constants::{constant_table, derive_params};
use affine_trace::search::{optimize_quotient, FamilyKind, Objective, QuotientKind, SearchSpec};
use affine_trace::Error;
use affine_trace_cli::checks::run_check;
use affine_trace_cli::settings::{read_config, Settings};
use affine_trace_cli::{run_suite, to_json, write_suite};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "affine-trace", version, about = "Numerical checks of affine fractional trace inequalities")]
struct Cli {
    /// `key = value` file; flags given on the command line win.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Default)]
struct Common {
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    /// Points per axis (power of two).
    #[arg(long)]
    grid: Option<usize>,
    /// Half-width of the boundary box.
    #[arg(long)]
    extent: Option<f64>,
    #[arg(long)]
    tnodes: Option<usize>,
    #[arg(long)]
    tmax: Option<f64>,
    #[arg(long)]
    sphere_nodes: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

impl Common {
    fn overrides(&self) -> BTreeMap<String, String> {
        let mut m = BTreeMap::new();
        let mut put = |k: &str, v: Option<String>| {
            if let Some(v) = v {
                m.insert(k.to_string(), v);
            }
        };
        put("n", self.n.map(|v| v.to_string()));
        put("alpha", self.alpha.map(|v| v.to_string()));
        put("grid", self.grid.map(|v| v.to_string()));
        put("extent", self.extent.map(|v| v.to_string()));
        put("tnodes", self.tnodes.map(|v| v.to_string()));
        put("tmax", self.tmax.map(|v| v.to_string()));
        put("sphere-nodes", self.sphere_nodes.map(|v| v.to_string()));
        put("seed", self.seed.map(|v| v.to_string()));
        m
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Print the constant table for (n, alpha).
    Constants {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        json: bool,
    },
    /// Run one named check.
    Verify {
        name: String,
        #[command(flatten)]
        common: Common,
    },
    /// Evaluate one quotient on a family member.
    Quotient {
        /// poisson, nonpoisson or haddad
        kind: QuotientKind,
        #[arg(long, default_value = "gaussian")]
        family: FamilyKind,
        /// Comma-separated family parameters; defaults to the family's start point.
        #[arg(long)]
        params: Option<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Maximize a quotient over a family and print the search log.
    Search {
        kind: QuotientKind,
        #[arg(long, default_value = "gaussian")]
        family: FamilyKind,
        #[arg(long)]
        budget: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// Run every check and write report.json, metadata.json and summary.csv.
    Suite {
        #[arg(long, default_value = "suite-out")]
        out: PathBuf,
        #[arg(long)]
        jobs: Option<usize>,
        #[arg(long)]
        budget: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
}

fn settings(config: &Option<PathBuf>, flags: BTreeMap<String, String>) -> affine_trace::Result<Settings> {
    let mut s = Settings::default();
    if let Some(path) = config {
        s.apply(&read_config(path)?)?;
    }
    s.apply(&flags)?;
    s.validate()?;
    Ok(s)
}

fn run(cli: Cli) -> affine_trace::Result<bool> {
    match cli.cmd {
        Cmd::Constants { common, json } => {
            let s = settings(&cli.config, common.overrides())?;
            let t = constant_table(s.n, s.alpha)?;
            if json {
                println!("{}", to_json(&t)?);
            } else {
                let v = serde_json::to_value(&t).map_err(|e| Error::Io(e.to_string()))?;
                for (k, v) in v.as_object().into_iter().flatten() {
                    println!("{k:>20}  {v}");
                }
            }
            Ok(true)
        }
        Cmd::Verify { name, common } => {
            let s = settings(&cli.config, common.overrides())?;
            let out = run_check(&name, &s)?;
            for m in &out.metrics {
                println!("{} {:<60} {:<14.6e} {}", if m.passed { "ok  " } else { "FAIL" }, m.label, m.value, m.bound);
            }
            for r in &out.reports {
                println!(
                    "  report {}: quotient {:.6e}, ratio {:.6}, budget {:.2e}{}",
                    r.check,
                    r.quotient,
                    r.ratio(),
                    r.tail_budget,
                    if r.low_confidence { ", low confidence" } else { "" }
                );
                for c in &r.cross_checks {
                    println!("    {}: {:.6e} vs {:.6e} (rel {:.2e})", c.label, c.value, c.against, c.rel_error);
                }
                for n in &r.notes {
                    println!("    {n}");
                }
            }
            for n in &out.notes {
                println!("  note: {n}");
            }
            println!("{}: {}", out.name, if out.passed { "passed" } else { "FAILED" });
            Ok(out.passed)
        }
        Cmd::Quotient { kind, family, params, common } => {
            let s = settings(&cli.config, common.overrides())?;
            let prm = derive_params::<f64>(s.n, s.alpha)?;
            let x = match params {
                Some(p) => p
                    .split(',')
                    .map(|v| v.trim().parse::<f64>().map_err(|_| Error::Usage(format!("bad parameter '{v}'"))))
                    .collect::<Result<Vec<_>, _>>()?,
                None => family.default_init(kind, &prm),
            };
            if x.len() != family.dim() {
                return Err(Error::Usage(format!("family {family} takes {} parameters", family.dim())));
            }
            let rep = Objective::new(&prm, kind, family, s.seed)?.evaluate(&x, &s.res)?;
            println!("{}", to_json(&rep)?);
            Ok(true)
        }
        Cmd::Search { kind, family, budget, common } => {
            let mut flags = common.overrides();
            if let Some(b) = budget {
                flags.insert("budget".into(), b.to_string());
            }
            let s = settings(&cli.config, flags)?;
            let prm = derive_params::<f64>(s.n, s.alpha)?;
            let result = optimize_quotient(&SearchSpec::new(kind, family, &prm, s.budget, s.seed), &prm)?;
            println!("{}", to_json(&result)?);
            Ok(true)
        }
        Cmd::Suite { out, jobs, budget, common } => {
            let mut flags = common.overrides();
            if let Some(j) = jobs {
                flags.insert("jobs".into(), j.to_string());
            }
            if let Some(b) = budget {
                flags.insert("budget".into(), b.to_string());
            }
            let s = settings(&cli.config, flags)?;
            let (report, meta) = run_suite(&s, |c, secs| {
                eprintln!("{:<22} {:<7} {secs:7.1}s", c.name, if c.passed { "passed" } else { "FAILED" });
            })?;
            write_suite(&out, &report, &meta)?;
            eprintln!("wrote {} ({:.1}s)", out.display(), meta.total_seconds);
            Ok(report.passed)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e @ Error::Usage(_)) => {
            eprintln!("affine-trace: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("affine-trace: {e}");
            ExitCode::from(1)
        }
    }
}
