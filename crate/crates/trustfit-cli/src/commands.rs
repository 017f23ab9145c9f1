//! The three subcommands: fit, generate, benchmark.

use std::fs;
use std::io::Write;
use std::path::Path;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use rayon::prelude::*;
use trustfit::builtin::Gaussian2d;
use trustfit::datagen::{
    generate_image, grid_side, log_spaced_lengths, perturbed_seed, BenchmarkSpec, ParamRanges,
};
use trustfit::solver::PhaseTimings;
use trustfit::{fit, fit_instrumented, FitOptions, FitResult, FitStatus, WeightSpec};

use crate::cli::{BenchmarkArgs, FitArgs, GenerateArgs};
use crate::io::{
    load_covariance, load_csv, read_image, read_manifest, sidecar_truth, write_image,
    write_manifest, Manifest, ManifestLength, MANIFEST_SCHEMA,
};
use crate::models::AnyModel;
use crate::report::{FitReport, StdClock};

/// Prints a line to stdout, treating a closed pipe (`... | head`) as
/// success instead of a panic or an error.
fn print_stdout(text: &str) -> Result<()> {
    let mut out = std::io::stdout().lock();
    match writeln!(out, "{text}") {
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        other => Ok(other?),
    }
}

fn status_exit_code(status: FitStatus) -> ExitCode {
    match status {
        s if s.converged() => ExitCode::SUCCESS,
        FitStatus::MaxIterations => ExitCode::from(2),
        _ => ExitCode::from(3),
    }
}

pub fn cmd_fit(args: &FitArgs) -> Result<ExitCode> {
    let model = AnyModel::parse(&args.model)?;
    if args.x0.is_empty() {
        bail!("provide starting parameters with --x0 (comma separated)");
    }
    if args.sigma_col.is_some() && args.cov.is_some() {
        bail!("choose either --sigma-col or --cov, not both");
    }

    let ext = args
        .input
        .extension()
        .and_then(|e| e.to_str())
        .unwrap_or("");
    let (data, csv_sigmas) = match ext {
        "csv" => {
            let table = load_csv(&args.input, args.sigma_col.as_deref())?;
            (table.data, table.sigmas)
        }
        "bin" => {
            if args.sigma_col.is_some() {
                bail!("--sigma-col applies to CSV input only");
            }
            let (data, _sidecar) = read_image(&args.input)?;
            (data, None)
        }
        other => bail!(
            "unsupported input extension `{other}` (expected .csv or .bin)"
        ),
    };

    let weights = if let Some(sigmas) = csv_sigmas {
        WeightSpec::Diagonal(sigmas)
    } else if let Some(cov_path) = &args.cov {
        WeightSpec::Covariance(load_covariance(cov_path)?)
    } else {
        WeightSpec::Unweighted
    };

    let options = FitOptions {
        ftol: args.ftol,
        xtol: args.xtol,
        gtol: args.gtol,
        max_iterations: args.max_iter,
        fixed_size: args.fixed_size,
        ..FitOptions::default()
    };

    let clock = StdClock::new();
    let (result, timings) =
        fit_instrumented(&model, &data, &args.x0, &options, &weights, &clock)?;

    if args.verbose {
        log_trace(&result);
    }

    let report = FitReport::new(model.name(), &args.x0, &result, timings);
    let json = serde_json::to_string_pretty(&report)?;
    match &args.out {
        Some(path) => fs::write(path, format!("{json}\n"))
            .with_context(|| format!("writing {}", path.display()))?,
        None => print_stdout(&json)?,
    }
    Ok(status_exit_code(result.status))
}

fn log_trace(result: &FitResult) {
    for (i, (delta, alpha)) in result
        .delta_history
        .iter()
        .zip(&result.alpha_history)
        .enumerate()
    {
        eprintln!("iter {:>3}  delta {delta:<12.6e}  alpha {alpha:.6e}", i + 1);
    }
    eprintln!(
        "status {}  cost {:.6e}  iterations {}",
        result.status.as_str(),
        result.cost,
        result.iterations
    );
}

fn parse_length(s: &str) -> Result<usize> {
    let v: f64 = s
        .trim()
        .parse()
        .with_context(|| format!("invalid length `{s}`"))?;
    if !v.is_finite() || v < 1.0 {
        bail!("invalid length `{s}`");
    }
    Ok(v.round() as usize)
}

/// Either a comma list or a log-spaced range `<min>..<max>:<count>`.
fn parse_lengths(s: &str) -> Result<Vec<usize>> {
    if let Some((range, count)) = s.split_once(':') {
        let (lo, hi) = range
            .split_once("..")
            .context("expected <min>..<max>:<count>, e.g. 1e3..1e5:5")?;
        let count: usize = count
            .trim()
            .parse()
            .with_context(|| format!("invalid count `{count}`"))?;
        Ok(log_spaced_lengths(parse_length(lo)?, parse_length(hi)?, count)?)
    } else {
        s.split(',').map(parse_length).collect()
    }
}

pub fn cmd_generate(args: &GenerateArgs) -> Result<ExitCode> {
    let lengths = parse_lengths(&args.lengths)?;
    let spec = BenchmarkSpec {
        lengths: lengths.clone(),
        images_per_length: args.per_length,
        noise_sigma: args.noise,
        seed: args.seed,
        ranges: ParamRanges::default(),
    };
    spec.validate()?;

    for &len in &lengths {
        if len >= 1_000_000 {
            let side = grid_side(len);
            let mib = (side * side * 8) as f64 / (1024.0 * 1024.0);
            eprintln!(
                "warning: length {len} stores a {side}x{side} image \
                 (~{mib:.0} MiB each, {} per length)",
                args.per_length
            );
        }
    }

    fs::create_dir_all(&args.out)
        .with_context(|| format!("creating {}", args.out.display()))?;

    let mut manifest_lengths = Vec::with_capacity(lengths.len());
    let mut total_images = 0usize;
    for (li, &target) in lengths.iter().enumerate() {
        let side = grid_side(target);
        let dirname = format!("v{target}");
        let dir = args.out.join(&dirname);
        fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
        let mut images = Vec::with_capacity(args.per_length);
        for ii in 0..args.per_length {
            let image = generate_image(
                &spec.ranges,
                side,
                args.noise,
                args.seed,
                spec.stream(li, ii),
            )?;
            let name = format!("img_{ii:03}.bin");
            write_image(&dir.join(&name), &image, args.seed, args.noise, target)?;
            images.push(name);
            total_images += 1;
        }
        manifest_lengths.push(ManifestLength {
            target,
            side,
            dir: dirname,
            images,
        });
    }

    let manifest = Manifest {
        schema: MANIFEST_SCHEMA.to_string(),
        seed: args.seed,
        noise_sigma: args.noise,
        per_length: args.per_length,
        lengths: manifest_lengths,
    };
    let manifest_path = write_manifest(&args.out, &manifest)?;
    print_stdout(&format!(
        "wrote {total_images} images across {} lengths to {}",
        lengths.len(),
        args.out.display()
    ))?;
    print_stdout(&format!("manifest: {}", manifest_path.display()))?;
    Ok(ExitCode::SUCCESS)
}

struct ImageSample {
    converged: bool,
    iterations: usize,
    timings: Vec<PhaseTimings>,
}

/// One untimed warmup fit, then `repeats` timed fits of the same problem;
/// every repeat must reproduce the warmup result exactly.
fn bench_image(bin: &Path, repeats: usize) -> Result<ImageSample> {
    let (data, sidecar) = read_image(bin)?;
    let truth = sidecar_truth(&sidecar);
    let x0 = perturbed_seed(&truth, sidecar.seed, sidecar.stream, 0.1);
    let options = FitOptions::default();

    let warm = fit(&Gaussian2d, &data, &x0, &options, &WeightSpec::Unweighted)?;
    let mut timings = Vec::with_capacity(repeats);
    for _ in 0..repeats {
        let clock = StdClock::new();
        let (result, t) = fit_instrumented(
            &Gaussian2d,
            &data,
            &x0,
            &options,
            &WeightSpec::Unweighted,
            &clock,
        )?;
        if result != warm {
            bail!("fit of {} did not reproduce across reruns", bin.display());
        }
        timings.push(t);
    }
    Ok(ImageSample {
        converged: warm.status.converged(),
        iterations: warm.iterations,
        timings,
    })
}

fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    values.iter().sum::<f64>() / values.len() as f64
}

fn sample_std(values: &[f64], mean: f64) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    (ss / (values.len() - 1) as f64).sqrt()
}

pub fn cmd_benchmark(args: &BenchmarkArgs) -> Result<ExitCode> {
    if args.repeats == 0 {
        bail!("--repeats must be at least 1");
    }
    if args.jobs == 0 {
        bail!("--jobs must be at least 1");
    }
    let manifest = read_manifest(&args.dataset)?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.jobs)
        .build()
        .context("building worker pool")?;

    let out: Box<dyn Write> = match &args.out {
        Some(path) => Box::new(
            fs::File::create(path).with_context(|| format!("creating {}", path.display()))?,
        ),
        None => Box::new(std::io::stdout()),
    };
    let mut writer = csv::Writer::from_writer(out);
    writer.write_record([
        "target",
        "side",
        "points",
        "images",
        "repeats",
        "converged_fraction",
        "mean_iterations",
        "mean_total_s",
        "std_total_s",
        "mean_residual_s",
        "mean_jacobian_s",
        "mean_svd_s",
        "mean_subproblem_s",
    ])?;

    for length in &manifest.lengths {
        let dir = args.dataset.join(&length.dir);
        // Fit images of one length in parallel; results come back in index
        // order so the aggregates below are deterministic.
        let samples: Vec<ImageSample> = pool.install(|| {
            length
                .images
                .par_iter()
                .map(|name| bench_image(&dir.join(name), args.repeats))
                .collect::<Result<Vec<_>>>()
        })?;

        let images = samples.len();
        let converged = samples.iter().filter(|s| s.converged).count();
        let s = |ns: u64| ns as f64 * 1e-9;
        let totals: Vec<f64> = samples
            .iter()
            .flat_map(|smp| smp.timings.iter().map(|t| s(t.total_ns)))
            .collect();
        let phase = |pick: fn(&PhaseTimings) -> u64| -> f64 {
            mean(
                &samples
                    .iter()
                    .flat_map(|smp| smp.timings.iter().map(|t| s(pick(t))))
                    .collect::<Vec<f64>>(),
            )
        };
        let mean_total = mean(&totals);
        let iterations: Vec<f64> = samples.iter().map(|smp| smp.iterations as f64).collect();

        writer.serialize((
            length.target,
            length.side,
            length.side * length.side,
            images,
            args.repeats,
            converged as f64 / images.max(1) as f64,
            mean(&iterations),
            mean_total,
            sample_std(&totals, mean_total),
            phase(|t| t.residual_ns),
            phase(|t| t.jacobian_ns),
            phase(|t| t.svd_ns),
            phase(|t| t.subproblem_ns),
        ))?;
    }
    writer.flush()?;
    Ok(ExitCode::SUCCESS)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn length_specs_parse() {
        assert_eq!(parse_lengths("1000,4096").unwrap(), vec![1000, 4096]);
        assert_eq!(
            parse_lengths("1e3..1e5:5").unwrap(),
            vec![1_000, 3_162, 10_000, 31_623, 100_000]
        );
        assert_eq!(parse_lengths("2.5e2").unwrap(), vec![250]);
        assert!(parse_lengths("abc").is_err());
        assert!(parse_lengths("10..100").is_err()); // missing count
        assert!(parse_lengths("0,5").is_err());
    }

    #[test]
    fn statistics_helpers() {
        assert_eq!(mean(&[1.0, 2.0, 3.0]), 2.0);
        assert_eq!(mean(&[]), 0.0);
        let m = mean(&[1.0, 3.0]);
        assert!((sample_std(&[1.0, 3.0], m) - std::f64::consts::SQRT_2).abs() < 1e-12);
        assert_eq!(sample_std(&[1.0], 1.0), 0.0);
    }
}
