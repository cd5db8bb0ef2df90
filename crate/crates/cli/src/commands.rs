//! Implementations of the subcommands. Each writes its files into the output
//! directory and finishes with a manifest listing their hashes.

use std::path::{Path, PathBuf};

use localcoh::coherence::{
    bound_conformance, kappa_l2, kappa_l2_envelope, kappa_map, local_coherence_exact, BoundConformance, CoherenceMap,
    KappaVariant,
};
use localcoh::image::side_exponent;
use localcoh::solvers::{add_noise, l1_haar_reconstruct, tv_min_reconstruct};
use localcoh::transforms::fourier::frequency_range;
use localcoh::transforms::partial_dft;
use localcoh::verify::{run_suite, ClaimResult};
use localcoh::{Complex64, FrequencyIndex, Image, SamplingPlan, SolverOptions, SolverReport};
use rayon::prelude::*;
use serde::Serialize;

use crate::args::{
    CoherenceArgs, Command, ImageArgs, ReconstructArgs, ReplayArgs, SampleArgs, SolverArgs, SolverKind, SweepArgs,
    VerifyArgs,
};
use crate::manifest::{sha256_file, write_json, InputRecord, RunManifest};
use crate::pgm::Pgm;
use crate::spec::{alpha_label, parse_alpha, DensitySpec, PhantomSpec};
use crate::{CliError, Status};

/// Mixed into a run seed to obtain the independent noise seed.
pub const NOISE_SEED_SALT: u64 = 0x6e6f_6973_655f_7365;

/// Imaginary parts above this trigger the complex sidecar CSV.
pub const IMAGINARY_TOLERANCE: f64 = 1e-6;

/// Largest side length accepted by `verify`; the atom scans are quadratic in `N^2`.
pub const VERIFY_MAX_N: usize = 128;

/// Runs a command on a thread pool sized by `--jobs`.
pub fn execute(command: Command) -> Result<Status, CliError> {
    let jobs = command.common().jobs;
    if jobs == Some(0) {
        return Err(CliError::Invalid("--jobs must be at least 1".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Invalid(format!("thread pool: {e}")))?;
    pool.install(|| run(command).map(|(status, _)| status))
}

fn run(command: Command) -> Result<(Status, RunManifest), CliError> {
    match &command {
        Command::Coherence(a) => coherence(a, &command),
        Command::Sample(a) => sample(a, &command),
        Command::Reconstruct(a) => reconstruct(a, &command),
        Command::Sweep(a) => sweep(a, &command),
        Command::Verify(a) => verify(a, &command),
        Command::Replay(a) => replay(a),
    }
}

fn prepare_out(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir)?;
    Ok(())
}

fn csv_writer(path: &Path) -> Result<csv::Writer<std::fs::File>, CliError> {
    Ok(csv::Writer::from_path(path)?)
}

fn write_map_csv(path: &Path, map: &CoherenceMap) -> Result<(), CliError> {
    let mut w = csv_writer(path)?;
    w.write_record(["k1", "k2", "value"])?;
    for (k, v) in map.iter() {
        w.write_record([k.k1.to_string(), k.k2.to_string(), v.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Serialize)]
struct CoherenceReport {
    n: usize,
    p: u32,
    conformance: BoundConformance,
    pointwise_passed: bool,
    kappa_l2: f64,
    kappa_prime_l2: f64,
    kappa_prime_l2_envelope: f64,
    kappa_prime_l2_within_envelope: bool,
    passed: bool,
}

fn coherence(a: &CoherenceArgs, command: &Command) -> Result<(Status, RunManifest), CliError> {
    let p = side_exponent(a.n)?;
    let dir = &a.common.out;
    prepare_out(dir)?;
    let mu = local_coherence_exact(a.n)?;
    write_map_csv(&dir.join("coherence.csv"), &mu)?;
    write_map_csv(&dir.join("kappa.csv"), &kappa_map(a.n, KappaVariant::Max)?)?;
    write_map_csv(&dir.join("kappa_prime.csv"), &kappa_map(a.n, KappaVariant::Radial)?)?;
    let conformance = bound_conformance(&mu);
    let kappa_prime_l2 = kappa_l2(a.n, KappaVariant::Radial)?;
    let envelope = kappa_l2_envelope(a.n)?;
    let report = CoherenceReport {
        n: a.n,
        p,
        conformance,
        pointwise_passed: conformance.passed(),
        kappa_l2: kappa_l2(a.n, KappaVariant::Max)?,
        kappa_prime_l2,
        kappa_prime_l2_envelope: envelope,
        kappa_prime_l2_within_envelope: kappa_prime_l2 <= envelope,
        passed: conformance.passed() && kappa_prime_l2 <= envelope,
    };
    write_json(&dir.join("report.json"), &report)?;
    let files = ["coherence.csv", "kappa.csv", "kappa_prime.csv", "report.json"].map(String::from);
    let manifest = RunManifest::new(command.clone()).finish(dir, &files)?;
    let status = if report.passed {
        Status::Success
    } else {
        Status::VerificationFailed
    };
    Ok((status, manifest))
}

/// `j,k1,k2,rho,repeat` where `repeat` counts earlier draws of the same frequency.
fn write_plan_csv(path: &Path, plan: &SamplingPlan) -> Result<(), CliError> {
    let mut seen = vec![0usize; plan.n * plan.n];
    let mut w = csv_writer(path)?;
    w.write_record(["j", "k1", "k2", "rho", "repeat"])?;
    for (j, (k, rho)) in plan.freqs.iter().zip(&plan.rho).enumerate() {
        let pos = k.position(plan.n);
        w.write_record([
            j.to_string(),
            k.k1.to_string(),
            k.k2.to_string(),
            rho.to_string(),
            seen[pos].to_string(),
        ])?;
        seen[pos] += 1;
    }
    w.flush()?;
    Ok(())
}

/// Reads the first four columns of a plan CSV.
pub fn read_plan_csv(path: &Path, n: usize) -> Result<SamplingPlan, CliError> {
    let mut reader = csv::Reader::from_path(path)?;
    let mut freqs = Vec::new();
    let mut rho = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record?;
        let field = |i: usize| {
            record
                .get(i)
                .ok_or_else(|| CliError::Invalid(format!("plan row {}: missing column {i}", row + 1)))
        };
        let bad = |e: &dyn std::fmt::Display| CliError::Invalid(format!("plan row {}: {e}", row + 1));
        let k1: i64 = field(1)?.trim().parse().map_err(|e| bad(&e))?;
        let k2: i64 = field(2)?.trim().parse().map_err(|e| bad(&e))?;
        let r: f64 = field(3)?.trim().parse().map_err(|e| bad(&e))?;
        freqs.push(FrequencyIndex::new(n, k1, k2)?);
        rho.push(r);
    }
    if freqs.is_empty() {
        return Err(CliError::Invalid(format!("{}: empty plan", path.display())));
    }
    let plan = SamplingPlan {
        n,
        freqs,
        rho,
        density_label: format!("file:{}", path.display()),
        seed: None,
        generator: None,
    };
    plan.validate()?;
    Ok(plan)
}

/// K-space mask with the origin near the center; row `r` is `k1 = r - N/2 + 1`.
pub fn mask_pgm(plan: &SamplingPlan) -> Pgm {
    let n = plan.n;
    let (lo, _) = frequency_range(n);
    let mut data = vec![0u16; n * n];
    for k in &plan.freqs {
        let r = (k.k1 - lo) as usize;
        let c = (k.k2 - lo) as usize;
        data[r * n + c] = 255;
    }
    Pgm {
        width: n,
        height: n,
        maxval: 255,
        data,
    }
}

#[derive(Debug, Serialize)]
struct PlanSummary<'a> {
    n: usize,
    m: usize,
    distinct: usize,
    duplicates: usize,
    density: &'a str,
    seed: Option<u64>,
    generator: Option<&'a str>,
}

fn plan_summary(plan: &SamplingPlan) -> PlanSummary<'_> {
    let distinct = plan.distinct_count();
    PlanSummary {
        n: plan.n,
        m: plan.m(),
        distinct,
        duplicates: plan.m() - distinct,
        density: &plan.density_label,
        seed: plan.seed,
        generator: plan.generator.as_deref(),
    }
}

fn sample(a: &SampleArgs, command: &Command) -> Result<(Status, RunManifest), CliError> {
    side_exponent(a.n)?;
    let spec: DensitySpec = a.density.parse()?;
    let plan = spec.plan(a.n, a.m, a.seed)?;
    let dir = &a.common.out;
    prepare_out(dir)?;
    write_plan_csv(&dir.join("plan.csv"), &plan)?;
    write_json(&dir.join("plan.json"), &plan_summary(&plan))?;
    mask_pgm(&plan).write(&dir.join("mask.pgm"))?;
    let files = ["plan.csv", "plan.json", "mask.pgm"].map(String::from);
    Ok((Status::Success, RunManifest::new(command.clone()).finish(dir, &files)?))
}

/// Loaded input with the quantization depth used when writing outputs.
struct Input {
    image: Image,
    maxval: u16,
    record: Option<InputRecord>,
}

fn load_input(a: &ImageArgs) -> Result<Input, CliError> {
    match (&a.image, &a.phantom) {
        (Some(path), None) => {
            let pgm = Pgm::read(path)?;
            if let Some(n) = a.n {
                if n != pgm.width {
                    return Err(CliError::Invalid(format!(
                        "--n {n} does not match the {}-pixel image",
                        pgm.width
                    )));
                }
            }
            Ok(Input {
                image: pgm.to_image()?,
                maxval: pgm.maxval,
                record: Some(InputRecord {
                    path: path.display().to_string(),
                    sha256: sha256_file(path)?,
                }),
            })
        }
        (None, Some(name)) => {
            let n =
                a.n.ok_or_else(|| CliError::Invalid("--n is required with --phantom".into()))?;
            Ok(Input {
                image: name.parse::<PhantomSpec>()?.render(n)?,
                maxval: u16::MAX,
                record: None,
            })
        }
        _ => Err(CliError::Invalid(
            "exactly one of --image or --phantom is required".into(),
        )),
    }
}

fn solver_options(s: &SolverArgs, eps: f64) -> SolverOptions {
    SolverOptions {
        max_iters: s.max_iters,
        primal_tol: s.tol,
        dual_tol: s.tol,
        noise_model: s.noise_model,
        epsilon: eps,
        ..SolverOptions::default()
    }
}

/// Measures `f` on `plan`, adds noise at level `eps`, and reconstructs.
pub fn simulate(
    f: &Image,
    plan: &SamplingPlan,
    eps: f64,
    solver: &SolverArgs,
    seed: u64,
) -> Result<(Image, SolverReport), CliError> {
    let clean = partial_dft(f, &plan.freqs)?;
    let y = add_noise(&clean, plan, eps, solver.noise_model, seed ^ NOISE_SEED_SALT)?;
    let opts = solver_options(solver, eps);
    Ok(match solver.solver {
        SolverKind::Tv => tv_min_reconstruct(&y, plan, &opts)?,
        SolverKind::Haar => l1_haar_reconstruct(&y, plan, &opts)?,
    })
}

#[derive(Debug, Serialize)]
struct ReconstructReport<'a> {
    solver: SolverKind,
    density: &'a str,
    m: usize,
    distinct: usize,
    epsilon: f64,
    noise_model: String,
    seed: u64,
    noise_seed: u64,
    relative_error: f64,
    max_imaginary: f64,
    solver_report: &'a SolverReport,
}

fn reconstruct(a: &ReconstructArgs, command: &Command) -> Result<(Status, RunManifest), CliError> {
    let input = load_input(&a.input)?;
    let n = input.image.n();
    let plan = match &a.plan {
        Some(path) => read_plan_csv(path, n)?,
        None => a.density.parse::<DensitySpec>()?.plan(n, a.m, a.seed)?,
    };
    let (g, report) = simulate(&input.image, &plan, a.eps, &a.solver, a.seed)?;
    let error = g.relative_error(&input.image);
    let dir = &a.common.out;
    prepare_out(dir)?;

    let mut files = vec!["reconstruction.pgm", "error.csv", "report.json", "plan.csv"];
    Pgm::from_image(&g, input.maxval).write(&dir.join("reconstruction.pgm"))?;
    let mut w = csv_writer(&dir.join("error.csv"))?;
    w.write_record([
        "solver",
        "density",
        "m",
        "epsilon",
        "seed",
        "relative_error",
        "converged",
        "iterations",
    ])?;
    w.write_record([
        format!("{:?}", a.solver.solver).to_lowercase(),
        plan.density_label.clone(),
        plan.m().to_string(),
        a.eps.to_string(),
        a.seed.to_string(),
        error.to_string(),
        report.converged.to_string(),
        report.iterations.to_string(),
    ])?;
    w.flush()?;
    write_plan_csv(&dir.join("plan.csv"), &plan)?;

    let max_imaginary = g.pixels().iter().map(|z| z.im.abs()).fold(0.0, f64::max);
    if max_imaginary > IMAGINARY_TOLERANCE {
        let mut w = csv_writer(&dir.join("complex.csv"))?;
        w.write_record(["t1", "t2", "re", "im"])?;
        for t1 in 0..n {
            for t2 in 0..n {
                let z: Complex64 = g.get(t1, t2);
                w.write_record([t1.to_string(), t2.to_string(), z.re.to_string(), z.im.to_string()])?;
            }
        }
        w.flush()?;
        files.push("complex.csv");
    }
    write_json(
        &dir.join("report.json"),
        &ReconstructReport {
            solver: a.solver.solver,
            density: &plan.density_label,
            m: plan.m(),
            distinct: plan.distinct_count(),
            epsilon: a.eps,
            noise_model: a.solver.noise_model.to_string(),
            seed: a.seed,
            noise_seed: a.seed ^ NOISE_SEED_SALT,
            relative_error: error,
            max_imaginary,
            solver_report: &report,
        },
    )?;

    let mut manifest = RunManifest::new(command.clone());
    manifest.input = input.record;
    let files: Vec<String> = files.into_iter().map(String::from).collect();
    let manifest = manifest.finish(dir, &files)?;
    let status = if report.converged {
        Status::Success
    } else {
        Status::NotConverged
    };
    Ok((status, manifest))
}

/// One `(alpha, epsilon, trial)` cell of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub alpha: String,
    pub epsilon: f64,
    pub trial: usize,
    pub m: usize,
    pub error: Option<f64>,
    pub seed: u64,
    pub converged: bool,
    pub iterations: usize,
    pub status: String,
}

fn sweep(a: &SweepArgs, command: &Command) -> Result<(Status, RunManifest), CliError> {
    let input = load_input(&a.input)?;
    let n = input.image.n();
    let alphas = a
        .alphas
        .iter()
        .map(|s| parse_alpha(s.trim()))
        .collect::<Result<Vec<_>, _>>()?;
    if alphas.is_empty() || a.eps.is_empty() || a.trials == 0 {
        return Err(CliError::Invalid(
            "sweep needs at least one alpha, one eps, and one trial".into(),
        ));
    }
    if let Some(e) = a.eps.iter().find(|e| !(e.is_finite() && **e >= 0.0)) {
        return Err(CliError::Invalid(format!("eps must be >= 0, got {e}")));
    }
    if a.m == 0 {
        return Err(CliError::Invalid("--m must be at least 1".into()));
    }
    let mut cells = Vec::new();
    for alpha in &alphas {
        for eps in &a.eps {
            for trial in 0..a.trials {
                cells.push((*alpha, *eps, trial));
            }
        }
    }
    let rows: Vec<SweepRow> = cells
        .par_iter()
        .enumerate()
        .map(|(i, &(alpha, eps, trial))| {
            let seed = a.seed.wrapping_add(i as u64);
            let mut row = SweepRow {
                alpha: alpha_label(alpha),
                epsilon: eps,
                trial,
                m: a.m,
                error: None,
                seed,
                converged: false,
                iterations: 0,
                status: String::new(),
            };
            let outcome = DensitySpec::from_alpha(alpha)
                .plan(n, Some(a.m), seed)
                .and_then(|plan| simulate(&input.image, &plan, eps, &a.solver, seed));
            match outcome {
                Ok((g, report)) => {
                    row.error = Some(g.relative_error(&input.image));
                    row.converged = report.converged;
                    row.iterations = report.iterations;
                    row.status = if report.converged { "ok" } else { "not_converged" }.into();
                }
                Err(e) => row.status = format!("error: {e}"),
            }
            row
        })
        .collect();

    let dir = &a.common.out;
    prepare_out(dir)?;
    let mut w = csv_writer(&dir.join("sweep.csv"))?;
    w.write_record([
        "alpha",
        "epsilon",
        "trial",
        "m",
        "error",
        "seed",
        "converged",
        "iterations",
        "status",
    ])?;
    for r in &rows {
        w.write_record([
            r.alpha.clone(),
            r.epsilon.to_string(),
            r.trial.to_string(),
            r.m.to_string(),
            r.error.map(|e| e.to_string()).unwrap_or_default(),
            r.seed.to_string(),
            r.converged.to_string(),
            r.iterations.to_string(),
            r.status.clone(),
        ])?;
    }
    w.flush()?;
    let mut manifest = RunManifest::new(command.clone());
    manifest.input = input.record;
    let manifest = manifest.finish(dir, &["sweep.csv".to_string()])?;
    Ok((Status::Success, manifest))
}

#[derive(Debug, Serialize)]
struct VerifyReport {
    claims: Vec<ClaimResult>,
    passed: bool,
}

fn verify(a: &VerifyArgs, command: &Command) -> Result<(Status, RunManifest), CliError> {
    if a.sizes.is_empty() {
        return Err(CliError::Invalid("--sizes must not be empty".into()));
    }
    if let Some(n) = a.sizes.iter().find(|n| **n > VERIFY_MAX_N) {
        return Err(CliError::Invalid(format!(
            "verify supports N <= {VERIFY_MAX_N}, got {n}"
        )));
    }
    let claims = run_suite(&a.sizes)?;
    let passed = claims.iter().all(|c| c.passed);
    let dir = &a.common.out;
    prepare_out(dir)?;
    write_json(&dir.join("verify.json"), &VerifyReport { claims, passed })?;
    let manifest = RunManifest::new(command.clone()).finish(dir, &["verify.json".to_string()])?;
    Ok((
        if passed {
            Status::Success
        } else {
            Status::VerificationFailed
        },
        manifest,
    ))
}

/// Output files whose hashes differ between a recorded run and its replay.
pub fn hash_mismatches(recorded: &RunManifest, replayed: &RunManifest) -> Vec<String> {
    let mut names: Vec<&String> = recorded.outputs.keys().chain(replayed.outputs.keys()).collect();
    names.sort();
    names.dedup();
    names
        .into_iter()
        .filter(|name| recorded.outputs.get(*name) != replayed.outputs.get(*name))
        .cloned()
        .collect()
}

fn replay(a: &ReplayArgs) -> Result<(Status, RunManifest), CliError> {
    let recorded = RunManifest::read(&a.manifest)?;
    if matches!(recorded.command, Command::Replay(_)) {
        return Err(CliError::Invalid("cannot replay a replay manifest".into()));
    }
    if let Some(input) = &recorded.input {
        let current = sha256_file(&PathBuf::from(&input.path))
            .map_err(|e| CliError::Invalid(format!("input {}: {e}", input.path)))?;
        if current != input.sha256 {
            return Err(CliError::Invalid(format!(
                "input {} changed since the recorded run",
                input.path
            )));
        }
    }
    let mut command = recorded.command.clone();
    command.common_mut().out = a.common.out.clone();
    let (status, replayed) = run(command)?;
    let mismatches = hash_mismatches(&recorded, &replayed);
    for name in &mismatches {
        eprintln!("hash mismatch: {name}");
    }
    let status = if mismatches.is_empty() {
        status
    } else {
        status.worst(Status::VerificationFailed)
    };
    Ok((status, replayed))
}
