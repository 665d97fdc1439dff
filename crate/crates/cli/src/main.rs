//! `workbench` — experiment driver for the diastolic inequality suite.
//!
//! Subcommands run verification suites against a conformal factor field,
//! write a deterministic `report.json` plus CSV tables into the output
//! directory, and exit with: 0 when every verdict holds, 1 on an inequality
//! violation, 2 on input errors, 3 when the only findings are
//! outside-regime.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use calabi_core::conformal::cone_angle_estimate;
use calabi_core::cover::sphere_area;
use calabi_core::field::ConformalFactorField;
use calabi_core::lattice::{loewner_check, LatticeBasis, PlanePoint};
use calabi_core::report::{InequalityReport, ReportBundle, Verdict};
use calabi_core::sweep::{
    default_alpha_grid, default_s_grid, stokes_residual, sweep_table, QuadratureParams,
};
use calabi_core::verify::{
    averaged_inequality_check, diastole_upper_bound, neighborhood_certificate, theorem_check,
    VerifySettings, FLAT_SPHERE_AREA,
};

#[derive(Parser)]
#[command(
    name = "workbench",
    about = "Verification workbench for the local diastolic inequality on the two-triangle sphere",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    #[command(flatten)]
    opts: CommonOpts,
}

#[derive(Args, Clone)]
struct CommonOpts {
    /// Field definition file (one directive per line)
    #[arg(long, global = true)]
    field: Option<PathBuf>,

    /// Inline field directives, separated by semicolons
    #[arg(long, global = true, conflicts_with = "field")]
    inline: Option<String>,

    /// Seeded random field with the given sup-norm estimate
    #[arg(long, global = true, conflicts_with_all = ["field", "inline"])]
    random: Option<f64>,

    /// Grid resolution for areas and sup norms
    #[arg(long, global = true, default_value_t = 128)]
    resolution: usize,

    /// Number of height samples
    #[arg(long = "s-grid", global = true, default_value_t = 64)]
    s_grid: usize,

    /// Number of contraction samples (odd counts include the midpoint)
    #[arg(long = "alpha-grid", global = true, default_value_t = 129)]
    alpha_grid: usize,

    /// Gauss–Legendre nodes per cycle edge
    #[arg(long, global = true, default_value_t = 64)]
    nodes: usize,

    /// Seed for random fields and random lattices
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Safety inflation applied to grid sup estimates
    #[arg(long, global = true, default_value_t = 1.05)]
    safety: f64,

    /// Slack for inequality comparisons
    #[arg(long, global = true, default_value_t = 1e-8)]
    tolerance: f64,

    /// Output directory
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Zero-field suite: exact constants of the unperturbed metric
    Baseline,
    /// Full suite for a perturbed metric e^{2u}·g
    Perturb,
    /// Margin of the inequality along an amplitude ramp e^{2εu}·g
    Scan {
        /// Comma-separated ε values
        #[arg(long, default_value = "-0.05,-0.02,-0.01,0,0.01,0.02,0.05")]
        epsilons: String,
    },
    /// Random flat-torus suite for the Loewner inequality
    Loewner {
        #[arg(long, default_value_t = 1000)]
        count: usize,
    },
    /// Stokes identity residual and its convergence under refinement
    Stokes {
        /// (s, α) sample pairs
        #[arg(long, default_value_t = 10)]
        pairs: usize,
        /// Quadrature nodes for the residual study
        #[arg(long = "stokes-nodes", default_value_t = 512)]
        stokes_nodes: usize,
    },
    /// Cone angle estimates at the singular and regular points
    ConeAngle {
        #[arg(long, default_value_t = 1e-3)]
        radius: f64,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: &Cli) -> Result<ExitCode> {
    let opts = &cli.opts;
    let mut bundle = match &cli.command {
        Command::Baseline => run_baseline(opts)?,
        Command::Perturb => run_perturb(opts)?,
        Command::Scan { epsilons } => run_scan(opts, epsilons)?,
        Command::Loewner { count } => run_loewner(opts, *count)?,
        Command::Stokes {
            pairs,
            stokes_nodes,
        } => run_stokes(opts, *pairs, *stokes_nodes)?,
        Command::ConeAngle { radius } => run_cone_angle(opts, *radius)?,
    };
    echo_settings(&mut bundle, opts);
    write_outputs(&opts.out, &bundle)?;
    for report in &bundle.reports {
        println!(
            "{:32} lhs={:+.12e} rhs={:+.12e} margin={:+.6e} [{}]",
            report.name,
            report.lhs,
            report.rhs,
            report.margin,
            match report.verdict {
                Verdict::Holds => "holds",
                Verdict::Fails => "FAILS",
                Verdict::OutsideRegime => "outside-regime",
            }
        );
    }
    Ok(exit_code(&bundle))
}

fn exit_code(bundle: &ReportBundle) -> ExitCode {
    if bundle.any_failed() {
        ExitCode::from(1)
    } else if bundle.any_outside_regime() {
        ExitCode::from(3)
    } else {
        ExitCode::SUCCESS
    }
}

/// The field a subcommand operates on, from file, inline text, or the
/// seeded generator. Parsed fields are always deck-symmetrized on load.
fn resolve_field(opts: &CommonOpts) -> Result<ConformalFactorField> {
    if let Some(path) = &opts.field {
        let text = fs::read_to_string(path)
            .with_context(|| format!("cannot read field file {}", path.display()))?;
        return ConformalFactorField::parse(&text)
            .map_err(|e| anyhow!("invalid field file {}: {e}", path.display()));
    }
    if let Some(inline) = &opts.inline {
        let text = inline.replace(';', "\n");
        return ConformalFactorField::parse(&text)
            .map_err(|e| anyhow!("invalid inline field: {e}"));
    }
    if let Some(amplitude) = opts.random {
        if !(amplitude.is_finite() && amplitude >= 0.0) {
            bail!("--random amplitude must be a nonnegative number");
        }
        return Ok(ConformalFactorField::random(opts.seed, amplitude, 3));
    }
    bail!("no field given: pass --field FILE, --inline DIRECTIVES or --random AMPLITUDE");
}

fn settings_from(opts: &CommonOpts) -> VerifySettings {
    VerifySettings {
        resolution: opts.resolution,
        s_count: opts.s_grid,
        alpha_count: opts.alpha_grid,
        arc_nodes: opts.nodes,
        safety: opts.safety,
        tolerance: opts.tolerance,
        ..VerifySettings::default()
    }
}

/// Equality-style report: holds iff |value − expected| ≤ tol.
fn exactness_report(name: &str, value: f64, expected: f64, tol: f64) -> InequalityReport {
    let mut report = InequalityReport::compare(name, (value - expected).abs(), 0.0, tol);
    report.push_detail("value", value);
    report.push_detail("expected", expected);
    report
}

fn run_baseline(opts: &CommonOpts) -> Result<ReportBundle> {
    let mut bundle = ReportBundle::new("baseline");
    let field = ConformalFactorField::zero();
    bundle.field_digest = Some(field.digest());
    let settings = settings_from(opts);
    let tol = 1e-9;

    let area = sphere_area(&field, settings.resolution)?;
    bundle.push(exactness_report("baseline-area", area, FLAT_SPHERE_AREA, tol));

    let table = sweep_table(
        &field,
        &default_s_grid(settings.s_count),
        &default_alpha_grid(settings.alpha_count),
        settings.arc_nodes,
    )?;
    let worst_loop = table
        .iter()
        .filter(|r| r.alpha == 0.5)
        .map(|r| (r.length_g - 1.0).abs())
        .fold(0.0, f64::max);
    bundle.push(exactness_report("baseline-loop-lengths", worst_loop, 0.0, tol));
    let worst_law = table
        .iter()
        .map(|r| (r.length_gc - (1.0 - 2.0 * (r.alpha - 0.5).abs())).abs())
        .fold(0.0, f64::max);
    bundle.push(exactness_report("baseline-length-law", worst_law, 0.0, tol));

    let bound = diastole_upper_bound(
        &field,
        &default_s_grid(settings.s_count),
        &default_alpha_grid(settings.alpha_count),
        settings.arc_nodes,
    )?;
    bundle.push(exactness_report("baseline-diastole-bound", bound.value, 1.0, tol));
    bundle.push(exactness_report(
        "baseline-systolic-ratio",
        area / (bound.value * bound.value),
        FLAT_SPHERE_AREA,
        tol,
    ));

    let verdict = theorem_check(&field, &settings)?;
    let mut report = verdict.report.clone();
    report.name = "baseline-theorem".into();
    bundle.push(report);
    write_sweep_csv(&opts.out, &table)?;
    Ok(bundle)
}

fn run_perturb(opts: &CommonOpts) -> Result<ReportBundle> {
    let field = resolve_field(opts)?;
    let settings = settings_from(opts);
    let mut bundle = ReportBundle::new("perturb");
    bundle.field_digest = Some(field.digest());

    let certificate = neighborhood_certificate(&field, settings.resolution, settings.safety)?;
    let mut cert_report = InequalityReport::new(
        "neighborhood-certificate",
        0.0,
        certificate.margin,
        if certificate.is_valid() {
            Verdict::Holds
        } else {
            Verdict::OutsideRegime
        },
        0.0,
    );
    cert_report.push_detail("sup_deviation", certificate.sup_dev);
    cert_report.push_detail("sup_slope", certificate.sup_slope);
    cert_report.push_detail("safety", certificate.safety);
    bundle.push(cert_report);

    bundle.push(averaged_inequality_check(&field, settings.resolution)?);

    let verdict = theorem_check(&field, &settings)?;
    bundle.push(verdict.report.clone());

    let table = sweep_table(
        &field,
        &default_s_grid(settings.s_count),
        &default_alpha_grid(settings.alpha_count),
        settings.arc_nodes,
    )?;
    write_sweep_csv(&opts.out, &table)?;
    Ok(bundle)
}

fn run_scan(opts: &CommonOpts, epsilons: &str) -> Result<ReportBundle> {
    let base = resolve_field(opts)?;
    let settings = settings_from(opts);
    let mut bundle = ReportBundle::new("scan");
    bundle.field_digest = Some(base.digest());

    let mut eps_values = Vec::new();
    for token in epsilons.split(',') {
        let token = token.trim();
        if token.is_empty() {
            continue;
        }
        eps_values.push(
            token
                .parse::<f64>()
                .map_err(|_| anyhow!("invalid epsilon `{token}`"))?,
        );
    }
    if eps_values.is_empty() {
        bail!("no epsilon values given");
    }

    fs::create_dir_all(&opts.out)?;
    let mut csv = csv::Writer::from_path(opts.out.join("scan.csv"))?;
    csv.write_record(["epsilon", "area", "diastole_bound", "margin", "regime"])?;

    let mut fit_num = 0.0;
    let mut fit_den = 0.0;
    let mut certified_rows = Vec::new();
    for &eps in &eps_values {
        let field = base.clone().scaled(eps);
        let verdict = theorem_check(&field, &settings)?;
        let regime = if verdict.certificate.is_valid() {
            "certified"
        } else {
            "outside"
        };
        csv.write_record([
            format!("{eps}"),
            format!("{}", verdict.area),
            format!("{}", verdict.diastole_bound.value),
            format!("{}", verdict.report.margin),
            regime.to_string(),
        ])?;
        let mut report = verdict.report.clone();
        report.name = "scan-margin".into();
        report.push_input("epsilon", format!("{eps}"));
        // ε = 0 must sit on the equality case; certified ε ≠ 0 strictly above
        if eps == 0.0 {
            report.verdict = Verdict::from_holds(report.margin.abs() <= 1e-7);
        } else if verdict.certificate.is_valid() {
            report.verdict = Verdict::from_holds(report.margin > 0.0);
            certified_rows.push((eps, report.margin));
            fit_num += report.margin * eps * eps;
            fit_den += eps.powi(4);
        } else {
            report.verdict = Verdict::OutsideRegime;
        }
        bundle.push(report);
    }
    csv.flush()?;

    if fit_den > 0.0 {
        let coeff = fit_num / fit_den;
        let rms = (certified_rows
            .iter()
            .map(|(e, m)| (m - coeff * e * e).powi(2))
            .sum::<f64>()
            / certified_rows.len() as f64)
            .sqrt();
        let mut fit = InequalityReport::new("scan-quadratic-fit", 0.0, coeff, Verdict::Holds, 0.0);
        fit.push_detail("coefficient", coeff);
        fit.push_detail("rms_residual", rms);
        bundle.push(fit);
    }
    Ok(bundle)
}

fn run_loewner(opts: &CommonOpts, count: usize) -> Result<ReportBundle> {
    use rand::{Rng, SeedableRng};
    let mut bundle = ReportBundle::new("loewner");
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(opts.seed);
    let tol = 1e-12;

    let hexagonal = loewner_check(&calabi_core::hex_basis(), tol)?;
    bundle.push(hexagonal);

    let mut min_margin = f64::INFINITY;
    let mut failures = 0usize;
    for _ in 0..count {
        let basis = loop {
            let candidate = LatticeBasis::new(
                PlanePoint::new(rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0)),
                PlanePoint::new(rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0)),
            );
            // |det| > 0.1 keeps shortest-vector coefficients within the
            // brute-force box used by the oracle tests
            if let Ok(b) = candidate {
                if b.area() > 0.1 {
                    break b;
                }
            }
        };
        let report = loewner_check(&basis, tol)?;
        min_margin = min_margin.min(report.margin);
        if !report.verdict.is_holds() {
            failures += 1;
        }
    }
    let mut suite = InequalityReport::new(
        "loewner-suite",
        0.0,
        min_margin,
        Verdict::from_holds(failures == 0),
        tol,
    );
    suite.push_input("count", format!("{count}"));
    suite.push_detail("min_margin", min_margin);
    suite.push_detail("failures", failures as f64);
    bundle.push(suite);
    Ok(bundle)
}

fn run_stokes(opts: &CommonOpts, pairs: usize, stokes_nodes: usize) -> Result<ReportBundle> {
    use rand::{Rng, SeedableRng};
    let field = if opts.field.is_some() || opts.inline.is_some() || opts.random.is_some() {
        resolve_field(opts)?
    } else {
        ConformalFactorField::random(opts.seed, 0.2, 3)
    };
    let mut bundle = ReportBundle::new("stokes");
    bundle.field_digest = Some(field.digest());

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(opts.seed.wrapping_add(1));
    let params = QuadratureParams::with_nodes(stokes_nodes);
    let refined = params.doubled();
    for index in 0..pairs {
        // keep clear of marked heights and of the empty midpoint
        let s = rng.gen_range(0.02..0.26)
            + 0.288_675_134_594_812_9 * rng.gen_range(0..3) as f64;
        let alpha = if rng.gen_bool(0.5) {
            rng.gen_range(0.05..0.45)
        } else {
            rng.gen_range(0.55..0.95)
        };
        let coarse = stokes_residual(&field, s, alpha, &params)?;
        let fine = stokes_residual(&field, s, alpha, &refined)?;
        for (c, f) in coarse.iter().zip(&fine) {
            let converged = f.residual < 1e-12;
            let shrinks = converged || f.residual * 4.0 <= c.residual;
            let mut report = InequalityReport::new(
                "stokes-residual",
                c.residual,
                1e-6,
                Verdict::from_holds(c.residual < 1e-6 && shrinks),
                0.0,
            );
            report.push_input("pair", format!("{index}"));
            report.push_input("s", format!("{s}"));
            report.push_input("alpha", format!("{alpha}"));
            report.push_input("component", format!("{}", c.component));
            report.push_detail("residual", c.residual);
            report.push_detail("residual_refined", f.residual);
            report.push_detail(
                "shrink_factor",
                if f.residual > 0.0 {
                    c.residual / f.residual
                } else {
                    f64::INFINITY
                },
            );
            bundle.push(report);
        }
    }
    Ok(bundle)
}

fn run_cone_angle(opts: &CommonOpts, radius: f64) -> Result<ReportBundle> {
    let _ = opts;
    let mut bundle = ReportBundle::new("cone-angle");
    let cone = std::f64::consts::TAU / 3.0;
    let full = std::f64::consts::TAU;
    let tol = 1e-3;
    for (label, center, target) in [
        ("cone-angle-minus-one", (-1.0, 0.0), cone),
        ("cone-angle-zero", (0.0, 0.0), cone),
        ("cone-angle-plus-one", (1.0, 0.0), cone),
        ("cone-angle-regular", (0.5, 0.0), full),
    ] {
        let angle =
            cone_angle_estimate(center, radius).map_err(|e| anyhow!("cone angle: {e}"))?;
        let mut report = exactness_report(label, angle, target, tol);
        report.push_input("radius", format!("{radius}"));
        bundle.push(report);
    }
    Ok(bundle)
}

fn echo_settings(bundle: &mut ReportBundle, opts: &CommonOpts) {
    bundle.set_setting("resolution", opts.resolution);
    bundle.set_setting("s_grid", opts.s_grid);
    bundle.set_setting("alpha_grid", opts.alpha_grid);
    bundle.set_setting("nodes", opts.nodes);
    bundle.set_setting("seed", opts.seed);
    bundle.set_setting("safety", opts.safety);
    bundle.set_setting("tolerance", opts.tolerance);
    if let Some(inline) = &opts.inline {
        bundle.set_setting("inline", inline);
    }
    if let Some(amplitude) = &opts.random {
        bundle.set_setting("random_amplitude", amplitude);
    }
}

fn write_outputs(out: &Path, bundle: &ReportBundle) -> Result<()> {
    fs::create_dir_all(out)?;
    fs::write(out.join("report.json"), bundle.to_json_pretty())
        .context("writing report.json")?;
    // timestamps live apart from the report so identical runs stay
    // byte-identical
    let meta = serde_json::json!({
        "unix_time": SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
        "command": bundle.command,
    });
    fs::write(
        out.join("run_meta.json"),
        serde_json::to_string_pretty(&meta)?,
    )?;
    Ok(())
}

fn write_sweep_csv(out: &Path, table: &[calabi_core::sweep::SweepTableRow]) -> Result<()> {
    fs::create_dir_all(out)?;
    let mut writer = csv::Writer::from_path(out.join("sweep_table.csv"))?;
    writer.write_record([
        "s", "alpha", "case", "k", "a_low", "a_high", "length_gc", "length_g",
    ])?;
    for row in table {
        writer.write_record([
            format!("{}", row.s),
            format!("{}", row.alpha),
            row.case.to_string(),
            format!("{}", row.k),
            format!("{}", row.a_low),
            format!("{}", row.a_high),
            format!("{}", row.length_gc),
            format!("{}", row.length_g),
        ])?;
    }
    writer.flush()?;
    Ok(())
}
