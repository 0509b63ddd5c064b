use clap::{Parser, Subcommand};
use oran_core::a1::{validate_policy, A1Request};
use oran_core::harness::{self, HarnessError, RunOptions, Scenario, TransportMode};
use oran_core::mlops::{self, MlopsError};
use oran_core::transport::TcpFrameListener;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

const EXIT_SCENARIO: u8 = 2;
const EXIT_VALIDATION: u8 = 3;

#[derive(Parser)]
#[command(name = "oran", about = "Simulated O-RAN control plane")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a scenario (bundled name or TOML path) in closed loop.
    Run {
        scenario: String,
        #[arg(long)]
        seed: Option<u64>,
        /// Write the E2 wire capture here.
        #[arg(long)]
        capture: Option<PathBuf>,
        /// Put the RIC in a child process talking TCP on 127.0.0.1.
        #[arg(long)]
        tcp: bool,
        /// Directory for CSV artifacts and report.json.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Model catalog root.
        #[arg(long, default_value = "catalog")]
        catalog: PathBuf,
    },
    /// Train, validate and publish a slicing model from matching scenarios.
    Train {
        glob: String,
        #[arg(long, default_value = "catalog")]
        catalog: PathBuf,
    },
    /// Print a capture file as a decoded message log.
    Inspect { capture: PathBuf },
    /// Check an A1 request (JSON text or a file holding it).
    Policies { request: String },
    /// Serve the near-RT RIC side of the lockstep protocol over TCP.
    RicServe {
        #[arg(long, default_value = "127.0.0.1:0")]
        listen: String,
    },
    /// List bundled scenarios.
    Scenarios,
}

fn fail(code: u8, msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(code)
}

fn harness_exit(e: HarnessError) -> ExitCode {
    match e {
        HarnessError::ScenarioInvalid { .. } => fail(EXIT_SCENARIO, e),
        e => fail(1, e),
    }
}

fn main() -> ExitCode {
    match Cli::parse().cmd {
        Cmd::Run {
            scenario,
            seed,
            capture,
            tcp,
            out,
            catalog,
        } => {
            let sc = match Scenario::resolve(&scenario) {
                Ok(s) => s,
                Err(e) => return harness_exit(e),
            };
            let transport = if tcp {
                match std::env::current_exe() {
                    Ok(exe) => TransportMode::TcpProcess(exe),
                    Err(e) => return fail(1, e),
                }
            } else {
                TransportMode::Loopback
            };
            let mut opts = RunOptions::default();
            opts.seed = seed;
            opts.transport = transport;
            opts.capture = capture.is_some();
            opts.catalog = Some(catalog);
            let report = match harness::run(&sc, &opts) {
                Ok(r) => r,
                Err(e) => return harness_exit(e),
            };
            if let Some(p) = capture {
                if let Err(e) = std::fs::write(&p, &report.capture) {
                    return fail(1, format!("{}: {e}", p.display()));
                }
            }
            if let Some(dir) = out {
                if let Err(e) = report.write_files(&dir) {
                    return fail(1, e);
                }
                let json = serde_json::to_string_pretty(&report).expect("report serializes");
                if let Err(e) = std::fs::write(dir.join("report.json"), json) {
                    return fail(1, e);
                }
            }
            println!("scenario {} seed {} duration {} ms", report.scenario, report.seed, report.duration_ms);
            println!("state_hash {}", report.state_hash);
            println!(
                "windows {} violated {} rate {:.4}",
                report.windows,
                report.violated_windows,
                report.violation_rate()
            );
            for s in &report.slices {
                println!(
                    "cell {} slice {} {}: satisfaction {:.4} ({} of {} windows violated)",
                    s.cell, s.slice, s.kind, s.satisfaction, s.violations, s.windows
                );
            }
            let i = &report.inserts;
            println!(
                "inserts received {} accepted {} denied {} timed_out {} unrouted {} pending {}",
                i.received, i.accepted, i.denied, i.timed_out, i.unrouted, i.pending
            );
            let c = &report.controls;
            println!(
                "controls sent {} acked {} failed {} timed_out {} pending {} conflicts_rejected {}",
                c.sent, c.acked, c.failed, c.timed_out, c.pending, report.conflicts_rejected
            );
            for r in &report.retrain_events {
                println!(
                    "retrain_requested {}..{} ms rate {:.3}",
                    r.window_start_ms, r.window_end_ms, r.violation_rate
                );
            }
            ExitCode::SUCCESS
        }
        Cmd::Train { glob, catalog } => match mlops::train_cmd(&glob, &catalog) {
            Ok(o) => {
                for v in &o.validation.verdicts {
                    println!(
                        "validate {} violation_rate {:.4} {}",
                        v.scenario,
                        v.violation_rate,
                        if v.passed { "pass" } else { "fail" }
                    );
                }
                println!("published {} pass_rate {}", o.manifest.model_id, o.manifest.pass_rate);
                ExitCode::SUCCESS
            }
            Err(e @ MlopsError::ValidationFailed { .. }) => fail(EXIT_VALIDATION, e),
            Err(MlopsError::Harness(e)) => harness_exit(e),
            Err(e) => fail(EXIT_SCENARIO, e),
        },
        Cmd::Inspect { capture } => {
            let data = match std::fs::read(&capture) {
                Ok(d) => d,
                Err(e) => return fail(1, format!("{}: {e}", capture.display())),
            };
            match harness::inspect(&data) {
                Ok(text) => {
                    print!("{text}");
                    ExitCode::SUCCESS
                }
                Err(e) => fail(1, e),
            }
        }
        Cmd::Policies { request } => {
            let text = std::fs::read_to_string(&request).unwrap_or(request);
            let req: A1Request = match serde_json::from_str(&text) {
                Ok(r) => r,
                Err(e) => return fail(EXIT_SCENARIO, format!("not an A1 request: {e}")),
            };
            if let A1Request::Create(p) | A1Request::Update(p) = &req {
                if let Err(e) = validate_policy(p) {
                    return fail(EXIT_SCENARIO, e);
                }
            }
            println!("{}", serde_json::to_string(&req).expect("request serializes"));
            ExitCode::SUCCESS
        }
        Cmd::RicServe { listen } => {
            let listener = match TcpFrameListener::bind(&listen) {
                Ok(l) => l,
                Err(e) => return fail(1, e),
            };
            let addr = match listener.local_addr() {
                Ok(a) => a,
                Err(e) => return fail(1, e),
            };
            println!("listening {addr}");
            let _ = std::io::stdout().flush();
            match harness::serve_tcp(listener) {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) => fail(1, e),
            }
        }
        Cmd::Scenarios => {
            for (name, _) in harness::BUNDLED {
                println!("{name}");
            }
            ExitCode::SUCCESS
        }
    }
}
