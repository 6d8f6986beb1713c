//! `msr`: build, inspect and run minimum-storage-regenerating codes with
//! two parity nodes.
//!
//! Exit codes: 0 success / all checks passed, 1 verification failure,
//! 2 usage or IO errors.

mod coeffs;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use msr_core::checker::{self, SearchOptions};
use msr_core::codec::{self, Shard};
use msr_core::codes::{self, CodeId, CodeSpec};
use msr_core::gf::{factor_prime_power, FieldSpec};

#[derive(Parser)]
#[command(
    name = "msr",
    version,
    about = "Minimum-storage-regenerating codes with two parity nodes"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum CodeArg {
    C1,
    C2,
    C3,
    C4,
    Zigzag,
    Longmds,
}

impl From<CodeArg> for CodeId {
    fn from(c: CodeArg) -> CodeId {
        match c {
            CodeArg::C1 => CodeId::C1,
            CodeArg::C2 => CodeId::C2,
            CodeArg::C3 => CodeId::C3,
            CodeArg::C4 => CodeId::C4,
            CodeArg::Zigzag => CodeId::ModifiedZigzag,
            CodeArg::Longmds => CodeId::LongMds,
        }
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Build a code and write its spec file
    Build {
        #[arg(long, value_enum)]
        code: CodeArg,
        #[arg(long)]
        m: usize,
        /// Field size; the smallest valid one is picked when omitted
        #[arg(long)]
        q: Option<u32>,
        /// Coefficient file overriding the built-in tables
        #[arg(long)]
        coeffs: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Encode a file into n = k + 2 shards
    Encode {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long = "out-dir")]
        out_dir: PathBuf,
    },
    /// Rebuild the original file from any k shards
    Reconstruct {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long, num_args = 1..,  required = true)]
        shards: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Repair a failed node from the surviving shards
    Repair {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        failed: usize,
        #[arg(long, num_args = 1.., required = true)]
        shards: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Where to write the JSON repair transcript (stdout when omitted)
        #[arg(long)]
        transcript: Option<PathBuf>,
    },
    /// Run the verification suite against a spec file
    Verify {
        #[arg(long)]
        spec: PathBuf,
        /// Also reconstruct random files from every k-subset of nodes
        #[arg(long)]
        exhaustive: bool,
        /// Random files per subset in exhaustive mode
        #[arg(long, default_value_t = 10)]
        trials: usize,
        #[arg(long, default_value_t = 20150209)]
        seed: u64,
    },
    /// Brute-force coefficient search within a construction family
    Search {
        #[arg(long, value_enum)]
        code: CodeArg,
        #[arg(long)]
        m: usize,
        #[arg(long)]
        q: u32,
        /// Enumerate every valid assignment instead of the first
        #[arg(long)]
        all: bool,
        #[arg(long, default_value_t = 5_000_000)]
        budget: u64,
    },
    /// Print the property-count table for one or more spec files
    Report {
        #[arg(long, num_args = 1.., required = true)]
        specs: Vec<PathBuf>,
    },
}

fn main() -> ExitCode {
    // die quietly when a pipe closes, like other unix tools
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = Cli::parse();
    match run(cli.cmd) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cmd: Cmd) -> Result<ExitCode> {
    match cmd {
        Cmd::Build {
            code,
            m,
            q,
            coeffs,
            out,
        } => cmd_build(code.into(), m, q, coeffs.as_deref(), &out),
        Cmd::Encode {
            spec,
            input,
            out_dir,
        } => cmd_encode(&spec, &input, &out_dir),
        Cmd::Reconstruct { spec, shards, out } => cmd_reconstruct(&spec, &shards, &out),
        Cmd::Repair {
            spec,
            failed,
            shards,
            out,
            transcript,
        } => cmd_repair(&spec, failed, &shards, &out, transcript.as_deref()),
        Cmd::Verify {
            spec,
            exhaustive,
            trials,
            seed,
        } => cmd_verify(&spec, exhaustive, trials, seed),
        Cmd::Search {
            code,
            m,
            q,
            all,
            budget,
        } => cmd_search(code.into(), m, q, all, budget),
        Cmd::Report { specs } => cmd_report(&specs),
    }
}

fn load_spec(path: &Path) -> Result<CodeSpec> {
    let text =
        fs::read_to_string(path).with_context(|| format!("reading spec {}", path.display()))?;
    Ok(CodeSpec::from_text(&text)?)
}

fn load_shard(path: &Path) -> Result<Shard> {
    let bytes = fs::read(path).with_context(|| format!("reading shard {}", path.display()))?;
    Ok(Shard::from_bytes(&bytes)?)
}

/// Ascending prime powers up to the supported maximum, optionally filtered
/// by characteristic.
fn candidate_orders(char2: Option<bool>) -> impl Iterator<Item = u32> {
    (2u32..=256).filter(move |&q| match factor_prime_power(q) {
        Ok((p, _)) => match char2 {
            Some(true) => p == 2,
            Some(false) => p != 2,
            None => true,
        },
        Err(_) => false,
    })
}

fn char_constraint(code_id: CodeId) -> Option<bool> {
    match code_id {
        CodeId::C1 => Some(false),
        CodeId::C2 | CodeId::C4 => Some(true),
        _ => None,
    }
}

fn build_from_family(code_id: CodeId, m: usize, field: &Arc<FieldSpec>) -> Result<CodeSpec> {
    match code_id {
        CodeId::C1 => Ok(codes::build_c1(m, field)?),
        CodeId::C2 => Ok(codes::build_c2(m, field)?),
        CodeId::C3 => Ok(codes::build_c3(m, field)?),
        CodeId::C4 => Ok(codes::build_c4(m, field)?),
        CodeId::ModifiedZigzag | CodeId::LongMds => {
            let outcome =
                checker::search_coefficients(code_id, m, field, &SearchOptions::default())?;
            let params = outcome
                .found
                .first()
                .ok_or_else(|| anyhow!("no valid {code_id} coefficients over {field}"))?;
            Ok(codes::build_with_params(code_id, params)?)
        }
        CodeId::Custom => bail!("custom codes are built from spec files, not families"),
    }
}

fn cmd_build(
    code_id: CodeId,
    m: usize,
    q: Option<u32>,
    coeffs: Option<&Path>,
    out: &Path,
) -> Result<ExitCode> {
    let code = match (coeffs, q) {
        (Some(path), q) => {
            let q = q.ok_or_else(|| anyhow!("--coeffs requires --q to fix the field"))?;
            let field = FieldSpec::of_order(q)?;
            let text = fs::read_to_string(path)
                .with_context(|| format!("reading coefficients {}", path.display()))?;
            let params = coeffs::parse(code_id, m, &field, &text)?;
            codes::build_with_params(code_id, &params)?
        }
        (None, Some(q)) => {
            let field = FieldSpec::of_order(q)?;
            build_from_family(code_id, m, &field)?
        }
        (None, None) => {
            // smallest field the construction accepts
            let mut built = None;
            for q in candidate_orders(char_constraint(code_id)) {
                let field = FieldSpec::of_order(q)?;
                if let Ok(code) = build_from_family(code_id, m, &field) {
                    built = Some(code);
                    break;
                }
            }
            built.ok_or_else(|| anyhow!("no field up to 256 supports {code_id} with m={m}"))?
        }
    };
    fs::write(out, code.to_text()).with_context(|| format!("writing {}", out.display()))?;
    println!(
        "built {} m={} k={} n={} alpha={} over {}",
        code.code_id(),
        code.m(),
        code.k(),
        code.n(),
        code.alpha(),
        code.field()
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_encode(spec: &Path, input: &Path, out_dir: &Path) -> Result<ExitCode> {
    let code = load_spec(spec)?;
    let data = fs::read(input).with_context(|| format!("reading {}", input.display()))?;
    let shards = codec::encode(&data, &code);
    fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    let stem = input
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "data".to_string());
    for shard in &shards {
        let path = out_dir.join(format!("{stem}.{:02}.shard", shard.node_index));
        fs::write(&path, shard.to_bytes())
            .with_context(|| format!("writing {}", path.display()))?;
    }
    println!(
        "encoded {} bytes into {} shards of {} stripes",
        data.len(),
        shards.len(),
        shards[0].stripe_count
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_reconstruct(spec: &Path, shard_paths: &[PathBuf], out: &Path) -> Result<ExitCode> {
    let code = load_spec(spec)?;
    let shards: Vec<Shard> = shard_paths
        .iter()
        .map(|p| load_shard(p))
        .collect::<Result<_>>()?;
    let data = codec::reconstruct(&shards, &code)?;
    fs::write(out, &data).with_context(|| format!("writing {}", out.display()))?;
    println!(
        "reconstructed {} bytes from {} shards",
        data.len(),
        shards.len()
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_repair(
    spec: &Path,
    failed: usize,
    shard_paths: &[PathBuf],
    out: &Path,
    transcript: Option<&Path>,
) -> Result<ExitCode> {
    let code = load_spec(spec)?;
    let shards: Vec<Shard> = shard_paths
        .iter()
        .map(|p| load_shard(p))
        .collect::<Result<_>>()?;
    let result = if failed <= code.k() {
        codec::repair_systematic(failed, &shards, &code)?
    } else {
        let systematic: Vec<Shard> = shards
            .into_iter()
            .filter(|s| s.node_index <= code.k())
            .collect();
        codec::repair_parity(failed, &systematic, &code)?
    };
    fs::write(out, result.recovered.to_bytes())
        .with_context(|| format!("writing {}", out.display()))?;
    let report = result.to_report();
    match transcript {
        Some(path) => {
            fs::write(path, &report).with_context(|| format!("writing {}", path.display()))?
        }
        None => print!("{report}"),
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_verify(spec: &Path, exhaustive: bool, trials: usize, seed: u64) -> Result<ExitCode> {
    let code = load_spec(spec)?;
    let mut pass = true;

    let mds = checker::check_mds(&code);
    pass &= mds.pass;
    mds.lines().iter().for_each(|l| println!("{l}"));

    let repair = checker::check_repair(&code);
    pass &= repair.pass;
    repair.lines().iter().for_each(|l| println!("{l}"));

    for (idx, optimal) in checker::check_access(&code).iter().enumerate() {
        println!("access node={} {}", idx + 1, optimal);
    }
    for (idx, optimal) in checker::check_update(&code).iter().enumerate() {
        println!("update node={} {}", idx + 1, optimal);
    }

    let mut pairs = 0usize;
    let mut rank_ok = true;
    for i in 1..=code.k() {
        for j in 1..=code.k() {
            if i == j {
                continue;
            }
            match checker::block_rank_oracle(&code, i, j) {
                Ok(report) => {
                    pairs += 1;
                    if !report.equal {
                        rank_ok = false;
                        report.lines().iter().for_each(|l| println!("{l}"));
                    }
                }
                Err(checker::CheckerError::SameAxis { .. }) => {}
                Err(checker::CheckerError::UnsupportedRepairShape(node)) => {
                    println!("block-rank skip i={i} j={j} node={node} outside the selector family");
                }
                Err(e) => return Err(e.into()),
            }
        }
    }
    pass &= rank_ok;
    println!(
        "block-rank {} pairs={pairs}",
        if rank_ok { "pass" } else { "fail" }
    );

    if exhaustive {
        println!("seed {seed}");
        let recon = checker::verify_reconstruction_exhaustive(&code, trials, seed)?;
        pass &= recon.pass;
        recon.lines().iter().for_each(|l| println!("{l}"));
    }

    println!("verify {}", if pass { "pass" } else { "fail" });
    Ok(if pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn cmd_search(code_id: CodeId, m: usize, q: u32, all: bool, budget: u64) -> Result<ExitCode> {
    let field = FieldSpec::of_order(q)?;
    let outcome = checker::search_coefficients(
        code_id,
        m,
        &field,
        &SearchOptions {
            budget,
            find_all: all,
        },
    )?;
    println!(
        "# search code={code_id} m={m} q={q} examined={} exhausted={}",
        outcome.examined, outcome.exhausted
    );
    if outcome.found.is_empty() {
        println!("NONE");
    } else {
        for (idx, params) in outcome.found.iter().enumerate() {
            if idx > 0 {
                println!();
            }
            println!("# assignment {}", idx + 1);
            print!("{}", coeffs::render(code_id, params));
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_report(specs: &[PathBuf]) -> Result<ExitCode> {
    let codes: Vec<CodeSpec> = specs.iter().map(|p| load_spec(p)).collect::<Result<_>>()?;
    let rows = codes::table1_report(&codes);
    println!(
        "{:<8} {:>2} {:>3} {:>4} {:>4} {:>6} {:>4}",
        "code", "m", "k", "k_A", "k_U", "k_A&U", "q"
    );
    for row in rows {
        println!(
            "{:<8} {:>2} {:>3} {:>4} {:>4} {:>6} {:>4}",
            row.code_id.to_string(),
            row.m,
            row.k,
            row.k_access,
            row.k_update,
            row.k_both,
            row.q
        );
    }
    Ok(ExitCode::SUCCESS)
}
