use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use slrep::boltzmann::{default_attempt_budget, solve_saddle, BoltzmannSampler, DEFAULT_DELTA};
use slrep::census::enumerate_irreps;
use slrep::exact_count::{count_representations, Representation, UniformSampler};
use slrep::limits::compute_constants;
use slrep::quadrature::QuadSpec;
use slrep::statistics::{default_shape_grid, StatMeta, StatRequest, StatSample};
use slrep::verify::{
    ladder_window_check, compare_exact_to_limit, ensembles_report, weyl_default_thetas, weyl_lower_bound_check,
    LimitStat,
};
use slrep::{stream_rng, Error, Rank, WeightVector};

const MAX_RANK: u32 = 6;
const MAX_N_NUMERIC: u64 = 1_000_000_000;
const MAX_N_EXACT: u64 = 10_000;

#[derive(Parser, Debug)]
#[command(name = "slrep", version, about = "Random representations of sl(r+1): counting, sampling, limit laws")]
struct Cli {
    /// Lift the default bounds on rank and n.
    #[arg(long = "unsafe", global = true)]
    unsafe_bounds: bool,

    /// Relative tolerance for quadratures and the saddle solve.
    #[arg(long, global = true, default_value_t = 1e-10)]
    tol: f64,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Table of (m, rho(m), R(m)) for all irreducible dimensions m <= X.
    Census {
        #[arg(long)]
        rank: u32,
        #[arg(long = "max-dim")]
        max_dim: u64,
        /// Also list the weight vectors of each dimension.
        #[arg(long)]
        weights: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exact counts p_r(0..=n) as CSV "n,p".
    Count {
        #[arg(long)]
        rank: u32,
        #[arg(long)]
        n: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve E_q(dim) = n and print the saddle point.
    Saddle {
        #[arg(long)]
        rank: u32,
        #[arg(long)]
        n: u64,
    },
    /// Draw representations, one JSON object per line.
    Sample(SampleArgs),
    /// Raw and normalized statistics of sampled representations as CSV.
    Dist {
        #[arg(long, value_enum)]
        stat: Stat,
        #[command(flatten)]
        sample: SampleArgs,
        /// Weight vector for --stat mult, comma separated.
        #[arg(long, value_delimiter = ',', default_value = "1,1")]
        k: Vec<u64>,
        /// Number of diagonal points for --stat shape.
        #[arg(long, default_value_t = 8)]
        points: usize,
    },
    /// Limit constants and normalizers at (r, n).
    Constants {
        #[arg(long)]
        rank: u32,
        #[arg(long)]
        n: u64,
    },
    /// Executable checks with JSON reports.
    Verify {
        #[command(subcommand)]
        what: VerifyCommand,
    },
}

#[derive(Args, Debug, Clone)]
struct SampleArgs {
    #[arg(long, value_enum, default_value_t = Mode::UniformDp)]
    mode: Mode,
    #[arg(long)]
    rank: u32,
    #[arg(long)]
    n: u64,
    #[arg(long, default_value_t = 1)]
    samples: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum VerifyCommand {
    /// Window count and sin^2 lower bounds on the box Lambda_{N,r}.
    Weyl {
        #[arg(long)]
        rank: u32,
        #[arg(long = "N")]
        big_n: u64,
        #[arg(long, default_value_t = 1.0 / 32.0)]
        eps: f64,
        /// Number of log-uniform theta values.
        #[arg(long, default_value_t = 10_000)]
        thetas: usize,
        /// Include the per-theta table.
        #[arg(long)]
        detail: bool,
    },
    /// Total variation between P_n and Q_{q_n} laws of one multiplicity.
    Ensembles {
        #[arg(long)]
        rank: u32,
        #[arg(long = "n-grid", value_delimiter = ',', required = true)]
        n_grid: Vec<u64>,
        #[arg(long, value_delimiter = ',', default_value = "1,1")]
        k: Vec<u64>,
        #[arg(long)]
        threshold: Option<f64>,
    },
    /// Exact gap between a statistic under Q_{q_n} and its limit law.
    Limits {
        #[arg(long, value_enum)]
        stat: LimitKind,
        #[arg(long)]
        rank: u32,
        #[arg(long)]
        n: u64,
        #[arg(long, value_delimiter = ',', default_value = "1,1")]
        k: Vec<u64>,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum Mode {
    UniformDp,
    Boltzmann,
    UniformRejection,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum Stat {
    #[value(name = "D")]
    D,
    #[value(name = "H")]
    H,
    #[value(name = "N")]
    N,
    #[value(name = "mult")]
    Mult,
    #[value(name = "shape")]
    Shape,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum LimitKind {
    #[value(name = "D")]
    D,
    #[value(name = "H")]
    H,
    #[value(name = "mult")]
    Mult,
    #[value(name = "shape")]
    Shape,
    #[value(name = "mgf")]
    Mgf,
}

enum Failure {
    Config(String),
    Compute(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidRank(_) | Error::InvalidWeight(_) | Error::Mismatch(_) => Failure::Config(e.to_string()),
            _ => Failure::Compute(e.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Compute(format!("i/o: {e}"))
    }
}

type Run<T> = std::result::Result<T, Failure>;

struct Limits {
    unsafe_bounds: bool,
}

impl Limits {
    fn rank(&self, r: u32) -> Run<Rank> {
        if r > MAX_RANK && !self.unsafe_bounds {
            return Err(Failure::Config(format!("rank {r} above {MAX_RANK}; pass --unsafe to override")));
        }
        Rank::new(r).map_err(Failure::from)
    }

    fn n(&self, n: u64, exact: bool) -> Run<u64> {
        let max = if exact { MAX_N_EXACT } else { MAX_N_NUMERIC };
        if n == 0 {
            return Err(Failure::Config("n must be positive".into()));
        }
        if n > max && !self.unsafe_bounds {
            let kind = if exact { "exact counting" } else { "numerics" };
            return Err(Failure::Config(format!("n = {n} above {max} for {kind}; pass --unsafe to override")));
        }
        Ok(n)
    }
}

/// Destination for tabular output: a file, or standard output when absent.
fn sink(out: &Option<PathBuf>) -> Run<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn weight(rank: Rank, k: &[u64]) -> Run<WeightVector> {
    WeightVector::new(rank, k.to_vec()).map_err(Failure::from)
}

/// Draws `samples` representations; draw `i` uses stream `i` of `seed`.
fn draw(args: &SampleArgs, limits: &Limits) -> Run<(Vec<Representation>, Value)> {
    let rank = limits.rank(args.rank)?;
    let exact = matches!(args.mode, Mode::UniformDp);
    let n = limits.n(args.n, exact)?;
    let seed = args.seed;
    let ids: Vec<u64> = (0..args.samples).collect();
    match args.mode {
        Mode::UniformDp => {
            let table = count_representations(rank, n)?;
            let sampler = UniformSampler::new(&table, n)?;
            let reps = ids.par_iter().map(|&i| sampler.sample(&mut stream_rng(seed, i))).collect();
            Ok((reps, json!({ "p_n": table.p(n)?.to_string() })))
        }
        Mode::Boltzmann | Mode::UniformRejection => {
            let (params, census) = solve_saddle::<f64>(rank, n, 1e-10)?;
            let sampler = BoltzmannSampler::new(&params, &census, DEFAULT_DELTA)?;
            let meta = json!({ "q": params.q, "s": params.s, "residual": sampler.meta().residual });
            if matches!(args.mode, Mode::Boltzmann) {
                let reps = ids.par_iter().map(|&i| sampler.sample(&mut stream_rng(seed, i))).collect();
                return Ok((reps, meta));
            }
            let budget = default_attempt_budget(&params);
            let reps = ids
                .par_iter()
                .map(|&i| sampler.rejection_sample(n, &mut stream_rng(seed, i), budget).map(|x| x.0))
                .collect::<slrep::Result<Vec<_>>>()?;
            Ok((reps, meta))
        }
    }
}

fn run(cli: &Cli) -> Run<Value> {
    let limits = Limits {
        unsafe_bounds: cli.unsafe_bounds,
    };
    let spec = QuadSpec::new(1e-12, cli.tol);
    match &cli.command {
        Command::Census {
            rank,
            max_dim,
            weights,
            out,
        } => {
            let rank = limits.rank(*rank)?;
            if *max_dim > MAX_N_NUMERIC && !limits.unsafe_bounds {
                return Err(Failure::Config(format!("max-dim above {MAX_N_NUMERIC}; pass --unsafe to override")));
            }
            let census = enumerate_irreps(rank, *max_dim, *weights)?;
            let mut w = sink(out)?;
            census.write_csv(&mut w)?;
            if *weights {
                for (m, k) in census.weights() {
                    writeln!(w, "# {m}: {:?}", k.components())?;
                }
            }
            w.flush()?;
            Ok(json!({ "distinct_dims": census.entries().len(), "irreps": census.total() }))
        }
        Command::Count { rank, n, out } => {
            let rank = limits.rank(*rank)?;
            let n = limits.n(*n, true)?;
            let table = count_representations(rank, n)?;
            let mut w = sink(out)?;
            table.write_csv(&mut w)?;
            w.flush()?;
            Ok(json!({ "p_n": table.p(n)?.to_string() }))
        }
        Command::Saddle { rank, n } => {
            let rank = limits.rank(*rank)?;
            let n = limits.n(*n, false)?;
            let (p, _) = solve_saddle::<f64>(rank, n, cli.tol)?;
            Ok(json!({
                "q": p.q,
                "s": p.s,
                "sigma2": p.sigma2,
                "cutoff": p.cutoff,
                "tail_bound": p.tail_bound,
                "expected_dim": p.expected_dim,
                "sigma2_tail_bound": p.sigma2_tail,
            }))
        }
        Command::Sample(args) => {
            let (reps, meta) = draw(args, &limits)?;
            let mut w = sink(&args.out)?;
            for rep in &reps {
                serde_json::to_writer(&mut w, rep).map_err(|e| Failure::Compute(e.to_string()))?;
                writeln!(w)?;
            }
            w.flush()?;
            Ok(meta)
        }
        Command::Dist {
            stat,
            sample,
            k,
            points,
        } => {
            let rank = limits.rank(sample.rank)?;
            let (reps, meta) = draw(sample, &limits)?;
            let (params, _) = solve_saddle::<f64>(rank, sample.n, 1e-10)?;
            let constants = compute_constants(&params, &spec)?;
            let request = StatRequest {
                mult_keys: match stat {
                    Stat::Mult => vec![weight(rank, k)?],
                    _ => Vec::new(),
                },
                shape_grid: match stat {
                    Stat::Shape => default_shape_grid(rank.as_usize(), *points),
                    _ => Vec::new(),
                },
            };
            let mode = sample.mode.to_possible_value().map(|v| v.get_name().to_string()).unwrap_or_default();
            let mut w = sink(&sample.out)?;
            writeln!(w, "index,stat,arg,raw,normalized")?;
            for (i, rep) in reps.iter().enumerate() {
                let st = StatSample::compute(
                    rep,
                    &request,
                    &constants,
                    StatMeta {
                        n: sample.n,
                        r: rank.get(),
                        mode: mode.clone(),
                        seed: sample.seed,
                        index: i as u64,
                    },
                )?;
                let opt = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
                match stat {
                    Stat::D => writeln!(w, "{i},D,,{},{}", st.raw.d.map(|d| d.to_string()).unwrap_or_default(), opt(st.normalized.d))?,
                    Stat::H => writeln!(
                        w,
                        "{i},H,,{},{}",
                        st.raw.h.map(|h| (h.twice() as f64 / 2.0).to_string()).unwrap_or_default(),
                        opt(st.normalized.h)
                    )?,
                    Stat::N => writeln!(w, "{i},N,,{},{}", st.raw.n, st.normalized.n)?,
                    Stat::Mult => {
                        let label = k.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(";");
                        writeln!(w, "{i},mult,{label},{},{}", st.raw.mult[0], st.normalized.mult[0])?
                    }
                    Stat::Shape => {
                        for (t, (raw, norm)) in request.shape_grid.iter().zip(st.raw.shape.iter().zip(&st.normalized.shape)) {
                            writeln!(w, "{i},shape,{},{raw},{norm}", t[0])?;
                        }
                    }
                }
            }
            w.flush()?;
            Ok(meta)
        }
        Command::Constants { rank, n } => {
            let rank = limits.rank(*rank)?;
            let n = limits.n(*n, false)?;
            let (params, _) = solve_saddle::<f64>(rank, n, cli.tol)?;
            let c = compute_constants(&params, &spec)?;
            serde_json::to_value(&c).map_err(|e| Failure::Compute(e.to_string()))
        }
        Command::Verify { what } => verify(what, &limits, &spec),
    }
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).unwrap_or(Value::Null)
}

fn verify(what: &VerifyCommand, limits: &Limits, spec: &QuadSpec<f64>) -> Run<Value> {
    match what {
        VerifyCommand::Weyl {
            rank,
            big_n,
            eps,
            thetas,
            detail,
        } => {
            let rank = limits.rank(*rank)?;
            let th = weyl_default_thetas(rank, *big_n, *eps, *thetas)?;
            let mut rep = weyl_lower_bound_check(rank, *big_n, *eps, &th)?;
            let mut pass = rep.pass;
            let ladder = if rank.get() == 2 {
                let a = ladder_window_check(*big_n, *eps, &th)?;
                pass &= a.pass;
                Some(a)
            } else {
                None
            };
            if !detail {
                rep.per_theta.retain(|x| !x.pass);
            }
            Ok(json!({ "pass": pass, "weyl": to_value(&rep), "ladder": ladder.as_ref().map(to_value) }))
        }
        VerifyCommand::Ensembles {
            rank,
            n_grid,
            k,
            threshold,
        } => {
            let rank = limits.rank(*rank)?;
            for &n in n_grid {
                limits.n(n, true)?;
            }
            let rep = ensembles_report(rank, n_grid, &weight(rank, k)?, *threshold)?;
            let pass = rep.trend_pass && rep.threshold_pass.unwrap_or(true);
            Ok(json!({ "pass": pass, "report": to_value(&rep) }))
        }
        VerifyCommand::Limits { stat, rank, n, k } => {
            let rank = limits.rank(*rank)?;
            let n = limits.n(*n, false)?;
            let stat = match stat {
                LimitKind::D => LimitStat::MaxDim,
                LimitKind::H => LimitStat::Height,
                LimitKind::Mult => LimitStat::Multiplicity(weight(rank, k)?),
                LimitKind::Shape => LimitStat::Shape,
                LimitKind::Mgf => LimitStat::Mgf,
            };
            let gap = compare_exact_to_limit(rank, n, &stat, spec)?;
            Ok(json!({
                "report": to_value(&gap),
                "note": "finite-n tolerances are engineering choices; the limit theorems give no rates",
            }))
        }
    }
}

fn threads() -> Result<(), String> {
    if let Ok(v) = std::env::var("SLREP_THREADS") {
        let n: usize = v.parse().map_err(|_| format!("SLREP_THREADS={v} is not a number"))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| e.to_string())?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = threads() {
        eprintln!("invalid config: {e}");
        return ExitCode::from(2);
    }
    let start = Instant::now();
    let result = run(&cli);
    let wall = start.elapsed().as_secs_f64();
    let args: Vec<String> = std::env::args().skip(1).collect();
    let (status, body) = match result {
        Ok(v) => (0, json!({ "status": "ok", "result": v })),
        Err(Failure::Config(m)) => (2, json!({ "status": "invalid-config", "error": m })),
        Err(Failure::Compute(m)) => (1, json!({ "status": "failed", "error": m })),
    };
    let mut manifest = json!({
        "args": args,
        "version": env!("CARGO_PKG_VERSION"),
        "wall_time_s": wall,
    });
    if let (Value::Object(m), Value::Object(b)) = (&mut manifest, body) {
        m.extend(b);
    }
    // Tables go to stdout when no --out is given; the manifest then moves to
    // stderr so the table stays machine-readable.
    let table_on_stdout = match &cli.command {
        Command::Census { out, .. } | Command::Count { out, .. } => out.is_none(),
        Command::Sample(a) => a.out.is_none(),
        Command::Dist { sample, .. } => sample.out.is_none(),
        _ => false,
    };
    let text = manifest.to_string();
    if table_on_stdout {
        eprintln!("{text}");
    } else {
        println!("{text}");
    }
    if status != 0 {
        if let Some(e) = manifest.get("error").and_then(Value::as_str) {
            eprintln!("{e}");
        }
    }
    ExitCode::from(status)
}
