//! Command-line front end.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::error::{GeomError, Result};
use crate::harness::{
    export_mesh, read_text, run_suite, sample_case, verify_case, write_text, CaseSpec, MeshFormat,
    Status, Theorem, VerificationReport, SCHEMA, TOOL_VERSION,
};
use crate::profiles::BranchSigns;
use crate::surface::SurfaceFamily;

#[derive(Parser, Debug)]
#[command(name = "meridian", version, about = "Lorentz meridian surfaces in neutral 4-space")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build a surface and export it as a mesh.
    Generate {
        #[command(flatten)]
        case: CaseArgs,
        #[arg(long)]
        out: PathBuf,
        /// csv, obj or json; defaults to the extension of --out, then csv.
        #[arg(long)]
        format: Option<String>,
    },
    /// Run one case and write its JSON report.
    Verify {
        /// JSON CaseSpec; flags given alongside override its fields.
        #[arg(long)]
        spec: Option<PathBuf>,
        #[command(flatten)]
        case: CaseArgs,
        /// Report path; stdout when omitted.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Run the Cartesian product of comma-separated parameter lists.
    Sweep {
        #[arg(long)]
        spec: Option<PathBuf>,
        #[command(flatten)]
        case: CaseArgs,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Run the built-in theorem suite.
    Theorems {
        #[arg(long)]
        report: Option<PathBuf>,
    },
}

#[derive(Args, Debug, Default)]
struct CaseArgs {
    #[arg(long)]
    family: Option<String>,
    #[arg(long)]
    theorem: Option<String>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    a: Vec<f64>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    b: Vec<f64>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    c: Vec<f64>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    c0: Vec<f64>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    f0: Vec<f64>,
    #[arg(long, allow_negative_numbers = true)]
    u_min: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    u_max: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    v_min: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    v_max: Option<f64>,
    #[arg(long)]
    nu: Option<usize>,
    #[arg(long)]
    nv: Option<usize>,
    #[arg(long)]
    step: Option<f64>,
    /// Signs of φ, the slope term and the log term, e.g. "+,-,+".
    #[arg(long, allow_hyphen_values = true)]
    branch_signs: Option<String>,
    #[arg(long)]
    tol_h: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
}

/// Parameter values picked for one case out of the list-valued flags.
#[derive(Clone, Copy, Default)]
struct Picks {
    a: Option<f64>,
    b: Option<f64>,
    c: Option<f64>,
    c0: Option<f64>,
    f0: Option<f64>,
}

impl CaseArgs {
    fn base(&self, spec_path: Option<&Path>) -> Result<CaseSpec> {
        let theorem = self.theorem.as_deref().map(str::parse::<Theorem>).transpose()?;
        let family = self.family.as_deref().map(str::parse::<SurfaceFamily>).transpose()?;
        let mut spec = match (spec_path, theorem, family) {
            (Some(p), _, _) => {
                let text = read_text(p)?;
                let mut s: CaseSpec = serde_json::from_str(&text)
                    .map_err(|e| GeomError::usage(format!("{}: invalid case spec: {e}", p.display())))?;
                if let Some(t) = theorem {
                    s.theorem = t;
                }
                s
            }
            (None, Some(t), _) => CaseSpec::for_theorem(t),
            (None, None, Some(f)) => CaseSpec::for_theorem(Theorem::minimal_for(f)),
            (None, None, None) => return Err(GeomError::usage("one of --theorem, --family or --spec is required")),
        };
        if family.is_some() {
            spec.family = family;
        }
        let g = &mut spec.grid;
        g.u_span.0 = self.u_min.unwrap_or(g.u_span.0);
        g.u_span.1 = self.u_max.unwrap_or(g.u_span.1);
        g.v_span.0 = self.v_min.unwrap_or(g.v_span.0);
        g.v_span.1 = self.v_max.unwrap_or(g.v_span.1);
        g.nu = self.nu.unwrap_or(g.nu);
        g.nv = self.nv.unwrap_or(g.nv);
        spec.step = self.step.unwrap_or(spec.step);
        if let Some(s) = &self.branch_signs {
            spec.params.signs = s.parse::<BranchSigns>()?;
        }
        if let Some(t) = self.tol_h {
            spec.tolerances.tol_h = t;
        }
        spec.seed = self.seed.unwrap_or(spec.seed);
        Ok(spec)
    }

    fn with_picks(mut spec: CaseSpec, p: Picks) -> CaseSpec {
        spec.params.a = p.a.unwrap_or(spec.params.a);
        spec.params.b = p.b.unwrap_or(spec.params.b);
        spec.params.c = p.c.unwrap_or(spec.params.c);
        spec.params.c0 = p.c0.unwrap_or(spec.params.c0);
        if p.f0.is_some() {
            spec.f0 = p.f0;
        }
        spec
    }

    fn lists(&self) -> [(&'static str, &Vec<f64>); 5] {
        [("a", &self.a), ("b", &self.b), ("c", &self.c), ("c0", &self.c0), ("f0", &self.f0)]
    }

    /// A single case: every list flag holds at most one value.
    fn single(&self, spec_path: Option<&Path>) -> Result<CaseSpec> {
        for (name, xs) in self.lists() {
            if xs.len() > 1 {
                return Err(GeomError::usage(format!("--{name} takes one value here (lists are for sweep)")));
            }
        }
        let picks = Picks {
            a: self.a.first().copied(),
            b: self.b.first().copied(),
            c: self.c.first().copied(),
            c0: self.c0.first().copied(),
            f0: self.f0.first().copied(),
        };
        let spec = Self::with_picks(self.base(spec_path)?, picks);
        spec.validate()?;
        Ok(spec)
    }

    /// The Cartesian product of all list flags, `a` varying slowest.
    fn product(&self, spec_path: Option<&Path>) -> Result<Vec<CaseSpec>> {
        let base = self.base(spec_path)?;
        let mut picks = vec![Picks::default()];
        for (name, xs) in self.lists() {
            if xs.is_empty() {
                continue;
            }
            picks = picks
                .into_iter()
                .flat_map(|p| {
                    xs.iter().map(move |&x| {
                        let mut q = p;
                        match name {
                            "a" => q.a = Some(x),
                            "b" => q.b = Some(x),
                            "c" => q.c = Some(x),
                            "c0" => q.c0 = Some(x),
                            _ => q.f0 = Some(x),
                        }
                        q
                    })
                })
                .collect();
        }
        picks
            .into_iter()
            .map(|p| {
                let s = Self::with_picks(base.clone(), p);
                s.validate().map(|_| s)
            })
            .collect()
    }
}

#[derive(Serialize)]
struct SweepEntry {
    case: CaseSpec,
    #[serde(skip_serializing_if = "Option::is_none")]
    report: Option<VerificationReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

#[derive(Serialize)]
struct SweepReport {
    schema: u32,
    tool_version: &'static str,
    cases: usize,
    passed: usize,
    failed: usize,
    truncated: usize,
    errors: usize,
    entries: Vec<SweepEntry>,
}

fn emit(report: Option<&Path>, text: &str) -> Result<()> {
    match report {
        Some(p) => write_text(p, text),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn status_code(status: Status) -> i32 {
    match status {
        Status::Pass => 0,
        Status::Fail | Status::DomainTruncated => 1,
    }
}

fn run(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Generate { case, out, format } => {
            let spec = case.single(None)?;
            let format = match format {
                Some(f) => f.parse()?,
                None => MeshFormat::from_path(&out).unwrap_or(MeshFormat::Csv),
            };
            let (grid, meta) = sample_case(&spec)?;
            export_mesh(&grid, format, &meta, &out)?;
            eprintln!("wrote {} samples to {}", grid.points.len(), out.display());
            Ok(0)
        }
        Command::Verify { spec, case, report } => {
            let spec = case.single(spec.as_deref())?;
            let r = verify_case(&spec)?;
            emit(report.as_deref(), &r.to_json())?;
            eprintln!("{}: {:?}", spec.theorem, r.status);
            Ok(status_code(r.status))
        }
        Command::Sweep { spec, case, report } => {
            let specs = case.product(spec.as_deref())?;
            let entries: Vec<SweepEntry> = specs
                .into_iter()
                .map(|case| match verify_case(&case) {
                    Ok(r) => SweepEntry {
                        case,
                        report: Some(r),
                        error: None,
                    },
                    Err(e) => SweepEntry {
                        case,
                        report: None,
                        error: Some(e.to_string()),
                    },
                })
                .collect();
            let count = |s: Status| entries.iter().filter(|e| e.report.as_ref().map(|r| r.status) == Some(s)).count();
            let agg = SweepReport {
                schema: SCHEMA,
                tool_version: TOOL_VERSION,
                cases: entries.len(),
                passed: count(Status::Pass),
                failed: count(Status::Fail),
                truncated: count(Status::DomainTruncated),
                errors: entries.iter().filter(|e| e.error.is_some()).count(),
                entries,
            };
            emit(report.as_deref(), &serde_json::to_string_pretty(&agg).expect("report serialises"))?;
            eprintln!(
                "{} cases: {} pass, {} fail, {} truncated, {} errors",
                agg.cases, agg.passed, agg.failed, agg.truncated, agg.errors
            );
            Ok(if agg.errors > 0 {
                2
            } else if agg.passed == agg.cases {
                0
            } else {
                1
            })
        }
        Command::Theorems { report } => {
            let suite = run_suite()?;
            for e in &suite.entries {
                let mark = if e.as_expected { "ok  " } else { "FAIL" };
                let want = if e.expect_pass { "pass" } else { "fail" };
                eprintln!("{mark} {:32} {:?} (expected {want})", e.label, e.report.status);
            }
            for c in &suite.corollary {
                let mark = if c.passed { "ok  " } else { "FAIL" };
                eprintln!("{mark} {:32} {} {:?} {}", c.name, c.value, c.cmp, c.bound);
            }
            if let Some(p) = report {
                write_text(&p, &serde_json::to_string_pretty(&suite).expect("report serialises"))?;
            }
            Ok(if suite.all_as_expected { 0 } else { 1 })
        }
    }
}

/// Run the CLI on `args` (program name first) and return the exit code:
/// 0 all pass, 1 any failure or truncation, 2 usage or domain error.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 2,
            };
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}
