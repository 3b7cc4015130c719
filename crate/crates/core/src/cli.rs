//! Command-line front end.
//!
//! All commands are deterministic given `--seed`, including sampling runs
//! split across threads (`SR_SAMPLER_THREADS`, 0 = one per core): work is
//! cut into chunks whose count and seeds depend only on the sample count,
//! so the byte-for-byte output never depends on the thread count.

use crate::dpp::KdppModel;
use crate::error::{Error, Result};
use crate::io::{parse_graph, parse_kernel, parse_marginals, write_marginals};
use crate::isotropy::{
    build_copy_map, estimate_overestimates, subdivide_overestimates, MarginalOverestimates,
    DEFAULT_SAMPLE_CONSTANT,
};
use crate::model::{
    enumerate_distribution, Model, SubsetSample, DEFAULT_ENUMERATION_CAP,
};
use crate::spanning_tree::WeightedGraph;
use crate::sparsifier::{draw_samples, Rounds, SparsifierConfig, WalkMode};
use crate::stats::{concentration_experiment, estimate_tv, mixing_curve};
use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::fmt::Write as _;
use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

#[derive(Parser)]
#[command(
    name = "sr-sampler",
    about = "Fast repeated sampling from k-DPPs and weighted spanning trees",
    disable_help_subcommand = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw k-DPP samples; one line of ascending indices per sample.
    SampleDpp {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        sampling: SamplingArgs,
    },
    /// Draw spanning-tree samples; one line of ascending edge ids per sample.
    SampleTree {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        sampling: SamplingArgs,
    },
    /// Estimate marginal overestimates; one value per line.
    EstimateMarginals {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write output here instead of stdout.
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
    /// Compare sampler output against full enumeration; exits 2 when the
    /// estimated TV exceeds --tol.
    Verify {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        sampling: SamplingArgs,
        /// TV threshold for the pass/fail verdict.
        #[arg(long, default_value_t = 0.05)]
        tol: f64,
    },
    /// TV versus rounds from a fixed start, as `rounds,tv` CSV.
    MixCurve {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        sampling: SamplingArgs,
    },
    /// Random-deletion marginal concentration report.
    Concentration {
        #[command(flatten)]
        input: InputArgs,
        /// Ground-set size kept per trial.
        #[arg(long)]
        keep: usize,
        /// Number of trials.
        #[arg(long, default_value_t = 500)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
    /// Per-sample wall-clock over an n grid at fixed k, as CSV. Uses
    /// internally generated diagonal f32 kernels.
    Bench {
        #[arg(long, default_value_t = 16)]
        k: usize,
        /// Timed samples per grid point.
        #[arg(long, default_value_t = 100)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Time the exact baseline sampler instead of the pipeline.
        #[arg(long)]
        exact: bool,
        #[arg(long = "t-mult", default_value_t = 4.0)]
        t_mult: f64,
        #[arg(long, value_parser = parse_rounds, default_value = "auto")]
        rounds: Rounds,
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct InputArgs {
    /// Kernel matrix file (MatrixMarket or CSV).
    #[arg(long, value_name = "FILE", conflicts_with = "graph")]
    kernel: Option<PathBuf>,
    /// Graph file: a `V E` header, then `u v [weight]` lines, 0-indexed.
    #[arg(long, value_name = "FILE")]
    graph: Option<PathBuf>,
    /// Subset size for kernel models.
    #[arg(long)]
    k: Option<usize>,
}

#[derive(Args)]
struct SamplingArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1000)]
    samples: usize,
    /// Walk rounds between outputs: a count, or `auto`.
    #[arg(long, value_parser = parse_rounds, default_value = "auto")]
    rounds: Rounds,
    /// Sparsified domain size as a multiple of the overestimate mass.
    #[arg(long = "t-mult", default_value_t = 4.0)]
    t_mult: f64,
    /// Marginal overestimates, one per line; estimated when absent.
    #[arg(long, value_name = "FILE")]
    marginals: Option<PathBuf>,
    /// Exact baseline sampling instead of the sparsified pipeline.
    #[arg(long)]
    exact: bool,
    /// Write output here instead of stdout.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

fn parse_rounds(s: &str) -> std::result::Result<Rounds, String> {
    if s == "auto" {
        Ok(Rounds::Auto)
    } else {
        s.parse()
            .map(Rounds::Fixed)
            .map_err(|_| format!("expected a round count or 'auto', got {s:?}"))
    }
}

/// Runs one CLI invocation. Exit codes: 0 success, 1 input or model error,
/// 2 verification failure, 64 usage error.
pub fn run_command(args: &[String], out: &mut dyn Write) -> i32 {
    let mut argv = Vec::with_capacity(args.len() + 1);
    argv.push("sr-sampler".to_string());
    argv.extend_from_slice(args);
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = write!(out, "{e}");
            return 0;
        }
        Err(e) => {
            let _ = write!(out, "{e}");
            return 64;
        }
    };
    match dispatch(cli.command, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(out, "error: {e}");
            1
        }
    }
}

enum AnyModel {
    Dpp(KdppModel<f64>),
    Tree(WeightedGraph<f64>),
}

macro_rules! with_model {
    ($any:expr, $m:ident => $body:expr) => {
        match $any {
            AnyModel::Dpp($m) => $body,
            AnyModel::Tree($m) => $body,
        }
    };
}

fn load_any(input: &InputArgs) -> Result<AnyModel> {
    match (&input.kernel, &input.graph) {
        (Some(path), None) => {
            let text = std::fs::read_to_string(path)?;
            let kernel = parse_kernel::<f64>(&text)?;
            let k = input
                .k
                .ok_or_else(|| Error::InvalidInput("kernel models need --k".into()))?;
            let model = KdppModel::new(kernel, k)?;
            model.validate()?;
            Ok(AnyModel::Dpp(model))
        }
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path)?;
            Ok(AnyModel::Tree(parse_graph::<f64>(&text)?))
        }
        _ => Err(Error::InvalidInput(
            "provide exactly one of --kernel and --graph".into(),
        )),
    }
}

fn require_positive_cardinality(model: &AnyModel) -> Result<()> {
    if with_model!(model, m => m.cardinality()) == 0 {
        return Err(Error::InvalidInput(
            "the model draws empty subsets; nothing to estimate".into(),
        ));
    }
    Ok(())
}

fn emit(out: &mut dyn Write, path: &Option<PathBuf>, content: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, content)?,
        None => out
            .write_all(content.as_bytes())
            .map_err(|e| Error::Io(e.to_string()))?,
    }
    Ok(())
}

fn thread_count() -> Result<usize> {
    match std::env::var("SR_SAMPLER_THREADS") {
        Err(_) => Ok(1),
        Ok(raw) => match raw.trim().parse::<usize>() {
            Ok(0) => Ok(std::thread::available_parallelism()
                .map(|n| n.get())
                .unwrap_or(1)),
            Ok(n) => Ok(n),
            Err(_) => Err(Error::InvalidInput(format!(
                "SR_SAMPLER_THREADS must be a number, got {raw:?}"
            ))),
        },
    }
}

/// Near-even chunk sizes; the layout depends only on the total, never on
/// the thread count, so outputs are reproducible.
fn chunk_layout(total: usize) -> Vec<usize> {
    if total == 0 {
        return Vec::new();
    }
    let chunks = (total / 64).clamp(1, 64);
    let base = total / chunks;
    let extra = total % chunks;
    (0..chunks)
        .map(|c| base + usize::from(c < extra))
        .collect()
}

/// Runs `job(chunk_index)` for every chunk across `threads` workers and
/// concatenates the results in chunk order.
fn run_chunks<T: Send>(
    chunks: usize,
    threads: usize,
    job: impl Fn(usize) -> Result<Vec<T>> + Sync,
) -> Result<Vec<T>> {
    if threads <= 1 || chunks <= 1 {
        let mut all = Vec::new();
        for c in 0..chunks {
            all.extend(job(c)?);
        }
        return Ok(all);
    }
    let workers = threads.min(chunks);
    let mut slots: Vec<(usize, Result<Vec<T>>)> = std::thread::scope(|scope| {
        let job = &job;
        let handles: Vec<_> = (0..workers)
            .map(|w| {
                scope.spawn(move || {
                    let mut mine = Vec::new();
                    let mut c = w;
                    while c < chunks {
                        mine.push((c, job(c)));
                        c += workers;
                    }
                    mine
                })
            })
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("sampling worker panicked"))
            .collect()
    });
    slots.sort_by_key(|&(c, _)| c);
    let mut all = Vec::new();
    for (_, result) in slots {
        all.extend(result?);
    }
    Ok(all)
}

fn pipeline_samples<M: Model<f64>>(
    model: &M,
    sampling: &SamplingArgs,
) -> Result<Vec<SubsetSample>> {
    let threads = thread_count()?;
    let layout = chunk_layout(sampling.samples);

    if sampling.exact || model.cardinality() == 0 {
        return run_chunks(layout.len(), threads, |c| {
            let mut rng = ChaCha8Rng::seed_from_u64(sampling.seed.wrapping_add(c as u64));
            (0..layout[c]).map(|_| model.sample_full(&mut rng)).collect()
        });
    }

    let q = load_or_estimate_q(model, sampling)?;
    run_chunks(layout.len(), threads, |c| {
        let config = SparsifierConfig {
            t_multiplier: sampling.t_mult,
            rounds: sampling.rounds,
            seed: sampling.seed.wrapping_add(c as u64),
            mode: WalkMode::DownUp,
        };
        draw_samples(model, &q, &config, layout[c])
    })
}

fn load_or_estimate_q<M: Model<f64>>(
    model: &M,
    sampling: &SamplingArgs,
) -> Result<MarginalOverestimates<f64>> {
    match &sampling.marginals {
        Some(path) => {
            let text = std::fs::read_to_string(path)?;
            let values = parse_marginals::<f64>(&text)?;
            if values.len() != model.ground_size() {
                return Err(Error::InvalidInput(format!(
                    "marginals file has {} values, the model has {} elements",
                    values.len(),
                    model.ground_size()
                )));
            }
            MarginalOverestimates::new(values)
        }
        None => {
            let mut rng = ChaCha8Rng::seed_from_u64(sampling.seed);
            estimate_overestimates(model, DEFAULT_SAMPLE_CONSTANT, &mut rng)
        }
    }
}

fn render_samples(samples: &[SubsetSample]) -> String {
    let mut text = String::new();
    for s in samples {
        let mut first = true;
        for &i in s.indices() {
            if !first {
                text.push(' ');
            }
            let _ = write!(text, "{i}");
            first = false;
        }
        text.push('\n');
    }
    text
}

fn dispatch(command: Command, out: &mut dyn Write) -> Result<i32> {
    match command {
        Command::SampleDpp { input, sampling } => {
            let model = match load_any(&input)? {
                AnyModel::Dpp(m) => m,
                AnyModel::Tree(_) => {
                    return Err(Error::InvalidInput("sample-dpp needs --kernel".into()))
                }
            };
            let samples = pipeline_samples(&model, &sampling)?;
            emit(out, &sampling.out, &render_samples(&samples))?;
            Ok(0)
        }
        Command::SampleTree { input, sampling } => {
            let model = match load_any(&input)? {
                AnyModel::Tree(m) => m,
                AnyModel::Dpp(_) => {
                    return Err(Error::InvalidInput("sample-tree needs --graph".into()))
                }
            };
            let samples = pipeline_samples(&model, &sampling)?;
            emit(out, &sampling.out, &render_samples(&samples))?;
            Ok(0)
        }
        Command::EstimateMarginals { input, seed, out: out_path } => {
            let model = load_any(&input)?;
            require_positive_cardinality(&model)?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let q = with_model!(&model, m => estimate_overestimates(
                m,
                DEFAULT_SAMPLE_CONSTANT,
                &mut rng
            ))?;
            emit(out, &out_path, &write_marginals(q.values()))?;
            Ok(0)
        }
        Command::Verify {
            input,
            sampling,
            tol,
        } => {
            let model = load_any(&input)?;
            let oracle =
                with_model!(&model, m => enumerate_distribution(m, DEFAULT_ENUMERATION_CAP))?;
            let samples = with_model!(&model, m => pipeline_samples(m, &sampling))?;
            let mut iter = samples.into_iter();
            let estimate = estimate_tv(
                || Ok(iter.next().expect("stream has exactly --samples entries")),
                &oracle,
                sampling.samples,
            )?;
            let passed = estimate.tv <= tol;
            let mut report = estimate.render();
            let _ = writeln!(report, "tol={tol}");
            let _ = writeln!(report, "status={}", if passed { "pass" } else { "fail" });
            emit(out, &sampling.out, &report)?;
            Ok(if passed { 0 } else { 2 })
        }
        Command::MixCurve { input, sampling } => {
            let model = load_any(&input)?;
            require_positive_cardinality(&model)?;
            let q = with_model!(&model, m => load_or_estimate_q(m, &sampling))?;
            let config = SparsifierConfig {
                t_multiplier: sampling.t_mult,
                rounds: sampling.rounds,
                seed: sampling.seed,
                mode: WalkMode::DownUp,
            };
            let map = build_copy_map(&q)?;
            let mass = subdivide_overestimates(&q, &map).sum();
            let max_rounds = match sampling.rounds {
                Rounds::Fixed(r) => r,
                Rounds::Auto => config.resolve_rounds(map.u_size(), mass),
            };
            let mut grid = vec![0];
            let mut r = 1;
            while r < max_rounds {
                grid.push(r);
                r *= 2;
            }
            grid.push(max_rounds);
            grid.dedup();
            let mut rng = ChaCha8Rng::seed_from_u64(sampling.seed);
            let curve = with_model!(&model, m => mixing_curve(
                m,
                &q,
                &config,
                &grid,
                sampling.samples,
                &mut rng
            ))?;
            emit(out, &sampling.out, &curve.render())?;
            Ok(0)
        }
        Command::Concentration {
            input,
            keep,
            samples,
            seed,
            out: out_path,
        } => {
            let model = load_any(&input)?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let report = with_model!(&model, m => concentration_experiment(
                m,
                keep,
                samples,
                &mut rng
            ))?;
            emit(out, &out_path, &report.render())?;
            Ok(0)
        }
        Command::Bench {
            k,
            samples,
            seed,
            exact,
            t_mult,
            rounds,
            out: out_path,
        } => {
            let report = run_bench(k, samples, seed, exact, t_mult, rounds)?;
            emit(out, &out_path, &report)?;
            Ok(0)
        }
    }
}

/// Seeded diagonal kernel in the f32 lane with eigenvalues log-uniform in
/// [0.1, 10], plus analytic marginal overestimates (for a diagonal kernel
/// the inclusion marginals are p_i = l_i * e_{k-1}(others) / e_k(all)).
fn bench_model(n: usize, k: usize, seed: u64) -> Result<(KdppModel<f32>, MarginalOverestimates<f32>)> {
    use crate::dpp::KernelMatrix;
    use crate::scalar::Real as _;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lambda: Vec<f64> = (0..n)
        .map(|_| 10f64.powf(2.0 * f64::unit_uniform(&mut rng) - 1.0))
        .collect();

    // e_0..e_k of all eigenvalues; magnitudes stay far inside f64 range.
    let mut e_full = vec![0.0f64; k + 1];
    e_full[0] = 1.0;
    for &l in &lambda {
        for j in (1..=k).rev() {
            e_full[j] += l * e_full[j - 1];
        }
    }
    let mut q = Vec::with_capacity(n);
    let mut e_minus = vec![0.0f64; k];
    for &l in &lambda {
        // e_j with this eigenvalue removed: e_j(all) = e_j(-i) + l * e_{j-1}(-i).
        e_minus[0] = 1.0;
        for j in 1..k {
            e_minus[j] = e_full[j] - l * e_minus[j - 1];
        }
        let p = l * e_minus[k - 1] / e_full[k];
        // A touch of headroom so the f32 round-trip stays an overestimate.
        q.push((p * 1.001).min(1.0) as f32);
    }

    let diag: Vec<f32> = lambda.iter().map(|&l| l as f32).collect();
    let model = KdppModel::new(KernelMatrix::from_diagonal(&diag), k)?;
    Ok((model, MarginalOverestimates::new(q)?))
}

fn run_bench(
    k: usize,
    samples: usize,
    seed: u64,
    exact: bool,
    t_mult: f64,
    rounds: Rounds,
) -> Result<String> {
    if samples == 0 {
        return Err(Error::InvalidInput("bench needs --samples > 0".into()));
    }
    let mut report = String::from("n,seconds_per_sample\n");
    for exp in [10u32, 12, 14] {
        let n = 1usize << exp;
        let (model, q) = bench_model(n, k, seed)?;
        let seconds = if exact {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for _ in 0..2 {
                model.sample_full(&mut rng)?; // warm the decomposition
            }
            let start = Instant::now();
            for _ in 0..samples {
                model.sample_full(&mut rng)?;
            }
            start.elapsed().as_secs_f64() / samples as f64
        } else {
            let config = SparsifierConfig::<f32> {
                t_multiplier: t_mult as f32,
                rounds,
                seed,
                mode: WalkMode::DownUp,
            };
            draw_samples(&model, &q, &config, 2)?; // warm the decomposition
            let start = Instant::now();
            draw_samples(&model, &q, &config, samples)?;
            start.elapsed().as_secs_f64() / samples as f64
        };
        let _ = writeln!(report, "{n},{seconds}");
    }
    Ok(report)
}
