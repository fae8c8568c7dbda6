//! Command-line front end.
//!
//! Exit-code contract: 0 success or positive verdict; 1 well-formed input
//! with a negative verdict; 2 malformed input or I/O failure; 3 internal
//! assertion failure (always a bug).

use std::fmt;
use std::fs;
use std::panic;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use nmslink_core::lyagraph::to_dot;
use nmslink_core::ops::{find_torus_sets, TORUS_SET_CAP};
use nmslink_core::{
    enumerate_links, is_realizable, link::is_jsj_related, realize, verify_certificate,
    FrhCertificate, GraphManifold, IndexedLink, RealizeError,
};

mod manifest;

#[derive(Parser)]
#[command(
    name = "nmslink",
    version,
    about = "Decide and certify closed-orbit links of flows on graph manifolds"
)]
struct Cli {
    /// Reserved for library-level parallelism; accepted and currently a no-op.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check that the base link is related to the manifold's decomposition.
    Validate { manifold: PathBuf, link: PathBuf },
    /// Realize an accepted base link and emit its certificate.
    Realize {
        manifold: PathBuf,
        link: PathBuf,
        /// Certificate output path; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write the oriented graph in DOT form.
        #[arg(long)]
        dot: Option<PathBuf>,
    },
    /// Re-check a certificate from scratch against manifold and link.
    Verify { manifold: PathBuf, link: PathBuf, cert: PathBuf },
    /// Check a full presentation: base records plus operation history.
    CheckHistory { manifold: PathBuf, link: PathBuf },
    /// Enumerate incompressible torus sets related to the base link.
    TorusSets {
        manifold: PathBuf,
        link: PathBuf,
        /// Cap on emitted sets.
        #[arg(long, default_value_t = TORUS_SET_CAP)]
        limit: usize,
    },
    /// List accepted base links within a saddle budget, one JSON line each.
    Enumerate {
        manifold: PathBuf,
        #[arg(long)]
        max_saddles: u32,
    },
    /// Print a certificate's oriented graph in DOT form.
    ExportDot { cert: PathBuf },
}

#[derive(Debug)]
struct CliError(String);

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<manifest::ManifestError> for CliError {
    fn from(e: manifest::ManifestError) -> Self {
        CliError(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match panic::catch_unwind(|| run(&cli)) {
        Ok(Ok(code)) => ExitCode::from(code),
        Ok(Err(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(_) => {
            eprintln!("internal error: assertion failure, please report");
            ExitCode::from(3)
        }
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError(format!("{}: {e}", path.display())))
}

fn load_manifold(path: &Path) -> Result<GraphManifold, CliError> {
    Ok(manifest::parse_manifold(&read(path)?)?)
}

fn load_link(path: &Path) -> Result<IndexedLink, CliError> {
    Ok(manifest::parse_link(&read(path)?)?)
}

fn load_certificate(path: &Path) -> Result<FrhCertificate, CliError> {
    Ok(manifest::parse_certificate(&read(path)?)?)
}

fn run(cli: &Cli) -> Result<u8, CliError> {
    match &cli.command {
        Command::Validate { manifold, link } => {
            let w = load_manifold(manifold)?;
            let l = load_link(link)?;
            let (ok, diags) = is_jsj_related(&w, &l);
            print!("{diags}");
            if ok {
                println!("accepted");
                Ok(0)
            } else {
                println!("rejected");
                Ok(1)
            }
        }
        Command::Realize { manifold, link, out, dot } => {
            let w = load_manifold(manifold)?;
            let l = load_link(link)?;
            match realize(&w, &l) {
                Ok(cert) => {
                    let json = manifest::certificate_to_json(&cert);
                    match out {
                        Some(path) => write(path, &json)?,
                        None => print!("{json}"),
                    }
                    if let Some(path) = dot {
                        write(path, &to_dot(&cert.graph.graph))?;
                    }
                    Ok(0)
                }
                Err(RealizeError::NotAccepted(diags)) => {
                    print!("{diags}");
                    println!("rejected");
                    Ok(1)
                }
                Err(e @ RealizeError::HistoryPresent(_)) => {
                    println!("{e}");
                    Ok(1)
                }
            }
        }
        Command::Verify { manifold, link, cert } => {
            let w = load_manifold(manifold)?;
            let l = load_link(link)?;
            let c = load_certificate(cert)?;
            let (ok, diags) = verify_certificate(&w, &l, &c);
            print!("{diags}");
            if ok {
                println!("verified");
                Ok(0)
            } else {
                println!("rejected");
                Ok(1)
            }
        }
        Command::CheckHistory { manifold, link } => {
            let w = load_manifold(manifold)?;
            let l = load_link(link)?;
            let report = is_realizable(&w, &l);
            print!("{}", report.diagnostics);
            if report.realizable {
                let resolved = report.resolved.expect("positive verdicts carry a state");
                println!(
                    "realizable: {} base records, {} steps, {} final knots",
                    l.knots.len(),
                    l.history.len(),
                    resolved.knots.len()
                );
                Ok(0)
            } else {
                println!("rejected");
                Ok(1)
            }
        }
        Command::TorusSets { manifold, link, limit } => {
            let w = load_manifold(manifold)?;
            let l = load_link(link)?;
            let (ok, diags) = is_jsj_related(&w, &l);
            if !ok {
                print!("{diags}");
                println!("rejected");
                return Ok(1);
            }
            let stream = find_torus_sets(&w, &l, *limit);
            print!("{}", manifest::torus_sets_to_json(&stream));
            Ok(0)
        }
        Command::Enumerate { manifold, max_saddles } => {
            let w = load_manifold(manifold)?;
            for l in enumerate_links(&w, *max_saddles) {
                println!("{}", manifest::link_to_json_line(&l));
            }
            Ok(0)
        }
        Command::ExportDot { cert } => {
            let c = load_certificate(cert)?;
            print!("{}", to_dot(&c.graph.graph));
            Ok(0)
        }
    }
}
