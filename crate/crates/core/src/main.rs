use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rand::Rng;
use serde::Serialize;

use pwl_janossy::cpwl::random::{grid_partition, relu_net};
use pwl_janossy::cpwl::CpwlFunction;
use pwl_janossy::grid_codec::{bilip_estimate, separated_pair, BoundingBox, GridCodec};
use pwl_janossy::io::{
    emit_histogram, load_certificate, parse_xyz, read_document, to_json,
    CertificateDocument, EncodingDocument,
};
use pwl_janossy::janossy::{
    invariance_check, janossy_pool, janossy_pool_ascending, janossy_pool_enumerated, symmetrize,
    PoolingSpec, ENUMERATION_MAX_N,
};
use pwl_janossy::multiset::domain_separation;
use pwl_janossy::numeric::linf_dist;
use pwl_janossy::rng::{seeded, substream, DEFAULT_SEED};
use pwl_janossy::witness::{find_collision, verify_collision, CollisionOptions, Segment};
use pwl_janossy::{Multiset, Point, Result};

#[derive(Parser)]
#[command(name = "pwl-janossy", version, about = "Collision certificates for piecewise-linear Janossy pooling and a grid encoder for separated multisets")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Seed for every random choice.
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Output file (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Build and verify a collision certificate.
    Witness {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 2)]
        k: usize,
        #[arg(long, default_value_t = 3)]
        n: usize,
        /// Dimension of the multiset elements.
        #[arg(long, default_value_t = 1)]
        dim: usize,
        /// JSON function file; a random one is drawn when omitted.
        #[arg(long)]
        function: Option<PathBuf>,
        /// Draw a random grid partition instead of a ReLU network.
        #[arg(long)]
        partition: bool,
        /// Solve and evaluate in exact rational arithmetic.
        #[arg(long)]
        rational: bool,
    },
    /// Re-check a certificate file.
    Verify {
        certificate: PathBuf,
    },
    /// Encode a point set with the grid codec.
    Encode {
        #[command(flatten)]
        common: Common,
        /// JSON array of points, or an XYZ file (first record).
        input: PathBuf,
        /// Separation R; defaults to the input's own minimum separation.
        #[arg(long)]
        separation: Option<f64>,
        /// Margin width; defaults to R/8.
        #[arg(long)]
        margin: Option<f64>,
    },
    /// Decode an encoding file.
    Decode {
        #[command(flatten)]
        common: Common,
        encoding: PathBuf,
        /// Fail unless exactly this many points are recovered.
        #[arg(long)]
        n: Option<usize>,
    },
    /// Separation statistics and histogram for an XYZ dataset.
    Separation {
        input: PathBuf,
        #[arg(long, default_value_t = 20)]
        bins: usize,
        /// Prefix for the `.csv` and `.svg` histogram files.
        #[arg(long, default_value = "separation")]
        out: PathBuf,
    },
    /// Empirical bi-Lipschitz ratios of the grid encoder.
    Bilip {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 0.5)]
        separation: f64,
        #[arg(long)]
        margin: Option<f64>,
        #[arg(long, default_value_t = 2)]
        dim: usize,
        #[arg(long, default_value_t = 8)]
        n: usize,
        #[arg(long, default_value_t = 10_000)]
        trials: usize,
    },
    /// Permutation invariance of k-ary pooling for a random network.
    Invariance {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 2)]
        k: usize,
        #[arg(long, default_value_t = 5)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        dim: usize,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        /// Allowed deviation, relative to max(1, |F|).
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
}

fn emit<T: Serialize>(value: &T, out: Option<&Path>) -> Result<()> {
    let text = to_json(value)?;
    match out {
        Some(p) => std::fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn report(failures: &[String]) -> ExitCode {
    if failures.is_empty() {
        eprintln!("all checks passed");
        ExitCode::SUCCESS
    } else {
        for f in failures {
            eprintln!("FAILED: {f}");
        }
        ExitCode::FAILURE
    }
}

fn read_points(path: &Path) -> Result<Multiset> {
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("xyz")) {
        let data = parse_xyz(path)?;
        let first = data.records.into_iter().next().ok_or(pwl_janossy::Error::Empty("XYZ file"))?;
        return Ok(first.points);
    }
    let rows: Vec<Vec<f64>> = serde_json::from_str(&std::fs::read_to_string(path)?)?;
    Multiset::from_rows(&rows)
}

fn witness(common: Common, k: usize, n: usize, dim: usize, function: Option<PathBuf>, partition: bool, rational: bool) -> Result<ExitCode> {
    let mut rng = seeded(common.seed);
    let f: CpwlFunction = match function {
        Some(p) => serde_json::from_str(&std::fs::read_to_string(p)?)?,
        None if partition => grid_partition(&mut rng, &vec![3; k * dim], 1, false)?.into(),
        None => relu_net(&mut rng, k * dim, &[8, 8], 2)?.into(),
    };
    let lift = if dim > 1 || f.in_dim() != k {
        let d = f.in_dim() / k.max(1);
        Some(Segment::new(Point::new(vec![0.0; d])?, Point::new(vec![1.0; d])?)?)
    } else {
        None
    };
    let opts = CollisionOptions {
        seed: common.seed,
        rational,
        lift,
        ..Default::default()
    };
    let cert = find_collision(&f, k, n, &opts)?;
    let failures = verify_collision(&f, k, &cert)?.failures;
    emit(&CertificateDocument::collision(f, cert), common.out.as_deref())?;
    Ok(report(&failures))
}

fn encode(common: Common, input: PathBuf, separation: Option<f64>, margin: Option<f64>) -> Result<ExitCode> {
    let a = read_points(&input)?;
    let r = match separation {
        Some(r) => r,
        None => domain_separation(std::slice::from_ref(&a))?.domain_separation,
    };
    let domain = BoundingBox::of_dataset(std::slice::from_ref(&a))?;
    let codec = GridCodec::build_with(r, &domain, margin.unwrap_or(r / 8.0), vec![0.0; a.dim()])?;
    let mut failures = Vec::new();
    if !codec.check_separation(&a) {
        failures.push(format!(
            "input is not separated by s + 2μ = {}; decoding is not guaranteed",
            codec.required_separation()
        ));
    }
    let e = codec.encode(&a)?;
    emit(&EncodingDocument::new(&codec, &e), common.out.as_deref())?;
    Ok(report(&failures))
}

fn decode(common: Common, path: PathBuf, n: Option<usize>) -> Result<ExitCode> {
    let doc: EncodingDocument = read_document(path)?;
    let e = doc.encoding();
    let a = match n {
        Some(n) => doc.codec.decode_expecting(&e, n)?,
        None => doc.codec.decode(&e)?,
    };
    let rows: Vec<&[f64]> = a.iter().map(Point::coords).collect();
    emit(&rows, common.out.as_deref())?;
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct SeparationSummary {
    records: usize,
    domain_separation: f64,
    min_normalized: f64,
    csv: PathBuf,
    svg: PathBuf,
}

fn separation(input: PathBuf, bins: usize, out: PathBuf) -> Result<ExitCode> {
    let data = parse_xyz(input)?.multisets();
    let rep = domain_separation(&data)?;
    let normalized = rep.normalized();
    let (hist, csv, svg) = emit_histogram(&normalized, bins, &out, "normalized minimal separation")?;
    emit(
        &SeparationSummary {
            records: data.len(),
            domain_separation: rep.domain_separation,
            min_normalized: hist.min,
            csv,
            svg,
        },
        None,
    )?;
    Ok(ExitCode::SUCCESS)
}

fn bilip(common: Common, r: f64, margin: Option<f64>, dim: usize, n: usize, trials: usize) -> Result<ExitCode> {
    // Large enough to place n points at separation r without crowding.
    let side = 2.0 * r * (n as f64).powf(1.0 / dim as f64).ceil();
    let domain = BoundingBox::new(vec![0.0; dim], vec![side; dim])?;
    let mu = margin.unwrap_or(r / 8.0);
    let codec = GridCodec::build_with(r, &domain, mu, vec![0.0; dim])?;
    let mut rng = seeded(common.seed);
    let pairs = (0..trials)
        .map(|_| separated_pair(&mut rng, &domain, n, r, mu / 2.0))
        .collect::<Result<Vec<_>>>()?;
    let est = bilip_estimate(&codec, pairs)?;
    emit(&est, common.out.as_deref())?;
    let mut failures = Vec::new();
    if !(est.lower > 0.0 && est.upper.is_finite()) {
        failures.push(format!("ratios [{}, {}] are not in (0, inf)", est.lower, est.upper));
    }
    Ok(report(&failures))
}

#[derive(Serialize)]
struct InvarianceSummary {
    trials: usize,
    max_shuffle_deviation: f64,
    enumeration_gap: Option<f64>,
    scale: f64,
}

fn invariance(common: Common, k: usize, n: usize, dim: usize, trials: usize, tol: f64) -> Result<ExitCode> {
    let mut rng = seeded(common.seed);
    let f: CpwlFunction = relu_net(&mut rng, k * dim, &[8, 8], 2)?.into();
    let spec = PoolingSpec::new(f.clone(), k, n)?;
    let mut points_rng = substream(common.seed, 1);
    let xs: Vec<Point> = (0..n)
        .map(|_| Point::new((0..dim).map(|_| points_rng.gen_range(-1.0..1.0)).collect()))
        .collect::<Result<_>>()?;
    let rep = invariance_check(&spec, &xs, trials, &mut rng)?;
    let enumeration_gap = if n <= ENUMERATION_MAX_N {
        let ascending = janossy_pool_ascending(&symmetrize(&f, k)?, k, &xs)?;
        let enumerated = janossy_pool_enumerated(&spec, &xs)?;
        Some(linf_dist(&ascending, &enumerated).max(linf_dist(&janossy_pool(&spec, &xs)?, &enumerated)))
    } else {
        None
    };
    let summary = InvarianceSummary {
        trials,
        max_shuffle_deviation: rep.max_deviation,
        enumeration_gap,
        scale: rep.scale,
    };
    emit(&summary, common.out.as_deref())?;
    let mut failures = Vec::new();
    if !rep.passes(tol) {
        failures.push(format!("shuffle deviation {:e} exceeds tolerance", rep.max_deviation));
    }
    if enumeration_gap.is_some_and(|g| g > tol * rep.scale) {
        failures.push("ascending form disagrees with S_n enumeration".into());
    }
    Ok(report(&failures))
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Witness { common, k, n, dim, function, partition, rational } => {
            witness(common, k, n, dim, function, partition, rational)
        }
        Command::Verify { certificate } => {
            let doc = load_certificate(certificate)?;
            Ok(report(&doc.verify()?))
        }
        Command::Encode { common, input, separation, margin } => encode(common, input, separation, margin),
        Command::Decode { common, encoding, n } => decode(common, encoding, n),
        Command::Separation { input, bins, out } => separation(input, bins, out),
        Command::Bilip { common, separation, margin, dim, n, trials } => {
            bilip(common, separation, margin, dim, n, trials)
        }
        Command::Invariance { common, k, n, dim, trials, tol } => invariance(common, k, n, dim, trials, tol),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
