//! Command-line surface. Exit codes: 0 success, 1 a verification reported
//! FAIL, 2 usage or input error.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use mfkit_core::cantor::{
    self, ball_mass_lower_bound_check, enumerate_generation, generation_census, sample_node,
    validate_schedule, verify_borel_bound, verify_mass_bounds, ApproxSet, BorelCase,
    CantorSchedule, ProbeBox,
};
use mfkit_core::constructions::{check_floor_inequality, genericity_radius_log2, GridWeights, MuN};
use mfkit_core::num::{format_rational, log2_biguint, log2_rational, parse_rational, to_f64};
use mfkit_core::spectra::{
    coarse_spectrum, cube_exponent, legendre_curve, tau_curve, Grid, TauMethod,
};
use mfkit_core::transport::{
    check_mu_nu_distance, distance_with, lipschitz_witness, Distance, DistanceOptions,
};
use mfkit_core::{AtomicMeasure, MassMode, MassTree, Point, Rational};
use num_bigint::{BigInt, BigUint, RandBigInt};
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::csv::{self, g12};
use crate::error::{Error, Result};
use crate::measure_file::{self, MeasureFile};
use crate::spec;

/// Relative output paths are resolved against this directory when set.
pub const OUT_DIR_ENV: &str = "MFKIT_OUT_DIR";

#[derive(Parser, Debug)]
#[command(
    name = "mfkit",
    version,
    about = "Exact multifractal measures on dyadic grids"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a generated measure to a measure file.
    Generate(GenerateArgs),
    /// Estimate the L^q spectrum over a q-grid.
    Tau(TauArgs),
    /// Legendre transform of the estimated L^q spectrum.
    Legendre(LegendreArgs),
    /// Histogram spectrum of cube exponents at one level.
    Coarse(CoarseArgs),
    /// Cube exponents of one point across levels.
    Exponent(ExponentArgs),
    /// Lipschitz-dual distance between two atomic measures.
    Distance(DistanceArgs),
    /// Floor inequality, distance lemma and ball-mass bound for one approximant.
    VerifyMun(VerifyMunArgs),
    /// Cantor construction inside the approximation sets.
    #[command(subcommand)]
    Cantor(CantorCommand),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ModeArg {
    Exact,
    Log2,
}

impl ModeArg {
    fn mode(self) -> MassMode {
        match self {
            ModeArg::Exact => MassMode::Exact,
            ModeArg::Log2 => MassMode::Log2,
        }
    }

    fn name(self) -> &'static str {
        match self {
            ModeArg::Exact => "exact",
            ModeArg::Log2 => "log2",
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum MethodArg {
    Min,
    Slope,
}

impl MethodArg {
    fn method(self) -> TauMethod {
        match self {
            MethodArg::Min => TauMethod::Min,
            MethodArg::Slope => TauMethod::Slope,
        }
    }
}

#[derive(Clone, Debug)]
struct GridArg {
    grid: Grid,
    text: String,
}

fn parse_grid(s: &str) -> std::result::Result<GridArg, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let [lo, hi, step] = parts[..] else {
        return Err("expected lo:hi:step".into());
    };
    let num = |t: &str| {
        t.trim()
            .parse::<f64>()
            .map_err(|_| format!("invalid number {t:?}"))
    };
    let grid = Grid::new(num(lo)?, num(hi)?, num(step)?).map_err(|e| e.to_string())?;
    Ok(GridArg {
        grid,
        text: s.to_string(),
    })
}

#[derive(Clone, Copy, Debug)]
struct LevelRange {
    lo: u32,
    hi: u32,
}

impl LevelRange {
    fn text(&self) -> String {
        format!("{}:{}", self.lo, self.hi)
    }
}

fn parse_range(s: &str) -> std::result::Result<LevelRange, String> {
    let num = |t: &str| {
        t.trim()
            .parse::<u32>()
            .map_err(|_| format!("invalid level {t:?}"))
    };
    let (lo, hi) = match s.split_once(':') {
        Some((a, b)) => (num(a)?, num(b)?),
        None => {
            let j = num(s)?;
            (j, j)
        }
    };
    if lo == 0 || hi < lo {
        return Err("levels must satisfy 1 <= j_min <= j_max".into());
    }
    Ok(LevelRange { lo, hi })
}

fn parse_rat(s: &str) -> std::result::Result<Rational, String> {
    parse_rational(s).map_err(|e| e.to_string())
}

#[derive(Args, Debug)]
struct GenerateArgs {
    /// Generator spec, e.g. "lebesgue d=1 J=10" or "mun n=1 grid=j=1;d=1;weights=1/3,2/3".
    #[arg(long)]
    spec: String,
    /// Mass representation for tree generators.
    #[arg(long, value_enum, default_value = "exact")]
    mode: ModeArg,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args, Debug)]
struct CurveInput {
    /// Measure file.
    #[arg(short, long)]
    input: PathBuf,
    /// Convert masses before analysis.
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    /// CSV destination (stdout when absent).
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct TauArgs {
    #[command(flatten)]
    io: CurveInput,
    /// q-grid lo:hi:step.
    #[arg(long, value_parser = parse_grid, default_value = "-5:5:0.01", allow_hyphen_values = true)]
    q: GridArg,
    /// Level j or range j_min:j_max.
    #[arg(long, value_parser = parse_range)]
    j: LevelRange,
    #[arg(long, value_enum, default_value = "min")]
    method: MethodArg,
}

#[derive(Args, Debug)]
struct LegendreArgs {
    #[command(flatten)]
    tau: TauArgs,
    /// h-grid lo:hi:step.
    #[arg(long, value_parser = parse_grid, allow_hyphen_values = true)]
    h: GridArg,
}

#[derive(Args, Debug)]
struct CoarseArgs {
    #[command(flatten)]
    io: CurveInput,
    #[arg(long)]
    j: u32,
    /// Bin width.
    #[arg(long)]
    eps: f64,
}

#[derive(Args, Debug)]
struct ExponentArgs {
    #[command(flatten)]
    io: CurveInput,
    #[arg(long, value_parser = parse_range)]
    j: LevelRange,
    /// Comma-separated rational coordinates, or `random`.
    #[arg(long)]
    point: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Debug)]
struct DistanceArgs {
    #[arg(short = 'a', long)]
    first: PathBuf,
    #[arg(short = 'b', long)]
    second: PathBuf,
    /// Largest total atom count solved in exact arithmetic.
    #[arg(long, default_value_t = mfkit_core::transport::DEFAULT_EXACT_CAP)]
    exact_cap: usize,
    /// Print the optimal plan.
    #[arg(long)]
    plan: bool,
    /// Check the dual 1-Lipschitz witness (exact solves only).
    #[arg(long)]
    witness: bool,
}

#[derive(Args, Debug)]
struct VerifyMunArgs {
    #[arg(long)]
    d: usize,
    #[arg(long)]
    jn: u32,
    #[arg(long)]
    n: u32,
    /// Comma-separated rationals (axis 0 fastest), `uniform`, or `random`.
    #[arg(long)]
    weights: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Exact transport up to this many atoms (the distance lemma needs about 2^{d J_n} + 2^{d j_n} + 2).
    #[arg(long, default_value_t = 1024)]
    exact_cap: usize,
    /// Also check the ball-mass bound at every center of the approximation set.
    #[arg(long, value_parser = parse_rat)]
    theta: Option<Rational>,
    /// Exponent slack for the ball-mass bound.
    #[arg(long, value_parser = parse_rat, default_value = "1")]
    eps: Rational,
}

#[derive(Args, Debug)]
struct ScheduleArgs {
    #[arg(long, default_value_t = 1)]
    d: usize,
    #[arg(long, value_parser = parse_rat)]
    theta: Rational,
    /// Levels J_1,J_2,...
    #[arg(long, value_delimiter = ',', required = true)]
    levels: Vec<u64>,
}

impl ScheduleArgs {
    fn schedule(&self) -> Result<CantorSchedule> {
        Ok(CantorSchedule::new(
            self.d,
            self.theta.clone(),
            self.levels.clone(),
        )?)
    }

    fn fields(&self) -> Vec<(&'static str, String)> {
        vec![
            ("d", self.d.to_string()),
            ("theta", fr(&self.theta)),
            ("levels", join(&self.levels)),
        ]
    }
}

fn join<T: ToString>(xs: &[T]) -> String {
    xs.iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join(",")
}

#[derive(Subcommand, Debug)]
enum CantorCommand {
    /// Constraint margins of a schedule.
    Validate {
        #[command(flatten)]
        schedule: ScheduleArgs,
        /// Also report the covering sum with this exponent.
        #[arg(long, value_parser = parse_rat)]
        s_exp: Option<Rational>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Branching counts and generation sizes.
    Count {
        #[command(flatten)]
        schedule: ScheduleArgs,
    },
    /// Node masses and the total-mass census.
    Mass {
        #[command(flatten)]
        schedule: ScheduleArgs,
    },
    /// Mass window of sampled nodes.
    VerifyBounds {
        #[command(flatten)]
        schedule: ScheduleArgs,
        /// Only this generation.
        #[arg(long)]
        p: Option<usize>,
        /// Nodes sampled per generation (all nodes when there are fewer).
        #[arg(long, default_value_t = 8)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Covering-mass bounds on probe boxes.
    VerifyBorel {
        #[command(flatten)]
        schedule: ScheduleArgs,
        /// Box as lo1,..,lod:hi1,..,hid (repeatable).
        #[arg(long = "box")]
        boxes: Vec<String>,
        /// Number of additional random boxes.
        #[arg(long, default_value_t = 0)]
        random: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

/// Parses `args` (program name first) and runs; returns the exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let text = e.render().to_string();
            let _ = if code == 0 {
                stdout.write_all(text.as_bytes())
            } else {
                stderr.write_all(text.as_bytes())
            };
            return code;
        }
    };
    let mut out = String::new();
    let result = dispatch(cli.command, &mut out);
    let _ = stdout.write_all(out.as_bytes());
    match result {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            2
        }
    }
}

fn dispatch(cmd: Command, out: &mut String) -> Result<bool> {
    match cmd {
        Command::Generate(a) => generate(a, out),
        Command::Tau(a) => tau(a, out),
        Command::Legendre(a) => legendre(a, out),
        Command::Coarse(a) => coarse(a, out),
        Command::Exponent(a) => exponent(a, out),
        Command::Distance(a) => distance(a, out),
        Command::VerifyMun(a) => verify_mun(a, out),
        Command::Cantor(c) => cantor_cmd(c, out),
    }
}

fn resolve(path: &Path) -> PathBuf {
    match std::env::var_os(OUT_DIR_ENV) {
        Some(dir) if path.is_relative() => Path::new(&dir).join(path),
        _ => path.to_path_buf(),
    }
}

fn write_file(path: &Path, text: &str) -> Result<PathBuf> {
    let p = resolve(path);
    std::fs::write(&p, text).map_err(|source| Error::Io {
        path: p.clone(),
        source,
    })?;
    Ok(p)
}

fn emit_csv(output: &Option<PathBuf>, text: &str, out: &mut String) -> Result<()> {
    match output {
        Some(path) => {
            let p = write_file(path, text)?;
            let _ = writeln!(out, "wrote {}", p.display());
        }
        None => out.push_str(text),
    }
    Ok(())
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

/// PASS, FAIL for a violated guaranteed bound, NOTE for a miss the
/// preconditions do not rule out.
fn bound_verdict(b: &cantor::BoundCheck) -> &'static str {
    if b.status == cantor::BoundStatus::Holds {
        "PASS"
    } else if b.failed() {
        "FAIL"
    } else {
        "NOTE"
    }
}

/// Rational for display; integers lose the `/1`.
fn fr(r: &Rational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format_rational(r)
    }
}

/// Exact when short, otherwise a log2 summary.
fn show(r: &Rational) -> String {
    let s = fr(r);
    if s.len() <= 48 {
        s
    } else if r.is_zero() {
        "0/1".into()
    } else {
        format!("2^{}", g12(log2_rational(r)))
    }
}

fn show_int(n: &BigUint) -> String {
    let s = n.to_string();
    if s.len() <= 40 {
        s
    } else {
        format!("2^{}", g12(log2_biguint(n)))
    }
}

fn generate(a: GenerateArgs, out: &mut String) -> Result<bool> {
    let m = spec::generate(&a.spec, a.mode.mode())?;
    let p = write_file(&a.output, &measure_file::format(&m))?;
    let what = match &m {
        MeasureFile::Atomic(x) => format!("atomic, {} atoms", x.len()),
        MeasureFile::Tree(t) => format!("masstree, depth {}", t.depth()),
    };
    let _ = writeln!(out, "wrote {} ({what}, dim {})", p.display(), m.dim());
    Ok(true)
}

fn load_tree(io: &CurveInput, depth: u32) -> Result<MassTree> {
    let m = measure_file::read(&io.input)?;
    let t = m.to_tree(depth)?;
    Ok(match io.mode {
        Some(ModeArg::Log2) => t.to_log2(),
        _ => t,
    })
}

fn curve_fields(io: &CurveInput) -> Vec<(&'static str, String)> {
    vec![
        ("input", io.input.display().to_string()),
        (
            "mode",
            io.mode.map_or("as-stored", ModeArg::name).to_string(),
        ),
    ]
}

fn tau_fields(a: &TauArgs) -> Vec<(&'static str, String)> {
    let mut f = vec![
        ("j", a.j.text()),
        ("q", a.q.text.clone()),
        ("method", a.method.method().name().to_string()),
    ];
    f.extend(curve_fields(&a.io));
    f
}

fn tau(a: TauArgs, out: &mut String) -> Result<bool> {
    let tree = load_tree(&a.io, a.j.hi)?;
    let c = tau_curve(&tree, &a.q.grid, a.j.lo, a.j.hi, a.method.method())?;
    emit_csv(&a.io.output, &csv::curve(&c, &tau_fields(&a)), out)?;
    Ok(true)
}

fn legendre(a: LegendreArgs, out: &mut String) -> Result<bool> {
    let t = &a.tau;
    let tree = load_tree(&t.io, t.j.hi)?;
    let c = tau_curve(&tree, &t.q.grid, t.j.lo, t.j.hi, t.method.method())?;
    let (curve, points) = legendre_curve(&c, &a.h.grid.points())?;
    let mut fields = vec![("h", a.h.text.clone())];
    fields.extend(tau_fields(t));
    fields.push((
        "boundary",
        points.iter().filter(|p| p.boundary).count().to_string(),
    ));
    emit_csv(&t.io.output, &csv::curve(&curve, &fields), out)?;
    Ok(true)
}

fn coarse(a: CoarseArgs, out: &mut String) -> Result<bool> {
    let tree = load_tree(&a.io, a.j)?;
    let c = coarse_spectrum(&tree, a.j, a.eps)?;
    let mut fields = vec![("j", a.j.to_string()), ("eps", g12(a.eps))];
    fields.extend(curve_fields(&a.io));
    emit_csv(&a.io.output, &csv::curve(&c, &fields), out)?;
    Ok(true)
}

fn random_point(dim: usize, seed: u64) -> Point {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let den = BigInt::one() << 53usize;
    Point::new(
        (0..dim)
            .map(|_| Rational::new(BigInt::from(rng.gen_range(0u64..1 << 53)), den.clone()))
            .collect(),
    )
    .expect("coordinates lie in [0,1)")
}

fn exponent(a: ExponentArgs, out: &mut String) -> Result<bool> {
    let tree = load_tree(&a.io, a.j.hi)?;
    let x = if a.point == "random" {
        random_point(tree.dim(), a.seed)
    } else {
        let coords = a
            .point
            .split(',')
            .map(parse_rational)
            .collect::<mfkit_core::Result<Vec<_>>>()?;
        Point::new(coords)?
    };
    let samples = (a.j.lo..=a.j.hi)
        .map(|j| Ok((j as f64, cube_exponent(&tree, &x, j)?)))
        .collect::<Result<Vec<_>>>()?;
    let mut fields = vec![
        ("kind", "cube-exponent".to_string()),
        ("j", a.j.text()),
        (
            "point",
            join(&x.coords().iter().map(format_rational).collect::<Vec<_>>()),
        ),
        ("seed", a.seed.to_string()),
    ];
    fields.extend(curve_fields(&a.io));
    let text = csv::header(&fields) + &csv::rows(&samples);
    emit_csv(&a.io.output, &text, out)?;
    Ok(true)
}

fn atomic(path: &Path) -> Result<AtomicMeasure> {
    match measure_file::read(path)? {
        MeasureFile::Atomic(m) => Ok(m),
        MeasureFile::Tree(_) => Err(Error::Usage(format!(
            "{}: distance needs an atomic measure file",
            path.display()
        ))),
    }
}

fn distance(a: DistanceArgs, out: &mut String) -> Result<bool> {
    let mu = atomic(&a.first)?;
    let nu = atomic(&a.second)?;
    let opts = DistanceOptions {
        exact_cap: a.exact_cap,
    };
    let d = distance_with(&mu, &nu, &opts)?;
    let _ = writeln!(
        out,
        "# a={} b={} exact_cap={}",
        a.first.display(),
        a.second.display(),
        a.exact_cap
    );
    let mut ok = true;
    match &d {
        Distance::Exact(plan) => {
            let _ = writeln!(
                out,
                "rho = {} ({})",
                fr(&plan.cost),
                g12(to_f64(&plan.cost))
            );
            if a.plan {
                for (i, j, m) in &plan.flows {
                    let _ = writeln!(out, "flow {i} {j} {}", fr(m));
                }
            }
            if a.witness {
                let w = lipschitz_witness(&mu, &nu, plan)?;
                ok = w.certifies(&plan.cost);
                let _ = writeln!(
                    out,
                    "{} dual witness: integral gap {} equals rho, Lipschitz excess {}",
                    verdict(ok),
                    fr(&w.gap),
                    fr(&w.lipschitz_excess)
                );
            }
        }
        Distance::Approx { plan, gap } => {
            let _ = writeln!(out, "rho ~= {} (duality gap {})", g12(plan.cost), g12(*gap));
            if a.plan {
                for (i, j, m) in &plan.flows {
                    let _ = writeln!(out, "flow {i} {j} {}", g12(*m));
                }
            }
            if a.witness {
                let _ = writeln!(out, "witness skipped: numeric solve");
            }
        }
    }
    Ok(ok)
}

fn random_weights(dim: usize, level: u32, seed: u64) -> Result<GridWeights> {
    let n = 1usize
        .checked_shl(dim as u32 * level)
        .filter(|&n| n <= 1 << 22)
        .ok_or_else(|| Error::Usage("grid too large".into()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let raw: Vec<u64> = (0..n).map(|_| rng.gen_range(1..=16)).collect();
    let total: u64 = raw.iter().sum();
    let ws = raw
        .into_iter()
        .map(|r| Rational::new(BigInt::from(r), BigInt::from(total)))
        .collect();
    Ok(GridWeights::new(dim, level, ws)?)
}

fn verify_mun(a: VerifyMunArgs, out: &mut String) -> Result<bool> {
    let grid = if a.weights == "random" {
        random_weights(a.d, a.jn, a.seed)?
    } else {
        spec::grid_weights(a.d, a.jn, &a.weights)?
    };
    let mun = MuN::new(grid, a.n)?;
    let _ = writeln!(
        out,
        "# d={} jn={} n={} weights={} seed={} exact_cap={} theta={} eps={}",
        a.d,
        a.jn,
        a.n,
        join(
            &mun.grid()
                .weights()
                .iter()
                .map(format_rational)
                .collect::<Vec<_>>()
        ),
        a.seed,
        a.exact_cap,
        a.theta.as_ref().map_or("none".into(), format_rational),
        fr(&a.eps)
    );
    let _ = writeln!(
        out,
        "J_n = {}, blend weight = {}, genericity radius = 2^{}",
        mun.level(),
        fr(&mun.blend_weight()),
        genericity_radius_log2(mun.level() as u64, a.d)
    );
    let floor = mun.check_floor();
    let mut ok = floor.holds();
    let _ = writeln!(
        out,
        "{} floor inequality at level {}: {} cubes, {} violations, {} equalities, min mass {}, bound 2^{}",
        verdict(floor.holds()),
        floor.level,
        show_int(&floor.cubes_checked),
        floor.violations,
        show_int(&floor.equalities),
        floor.min_mass.as_ref().map_or("-".into(), show),
        fr(&floor.bound_log2())
    );
    if mun.level() as usize * a.d <= 22 && floor.cubes_checked <= BigUint::from(1u32 << 16) {
        let direct = check_floor_inequality(&mun.to_atomic()?, a.n, mun.level())?;
        let agree = direct.violations == floor.violations && direct.min_mass == floor.min_mass;
        ok &= agree;
        let _ = writeln!(
            out,
            "{} floor inequality recomputed from atoms",
            verdict(agree)
        );
    }
    let atoms = (1usize << (a.d * mun.level() as usize)) + 2 * (1usize << (a.d * a.jn as usize));
    if mun.level() as usize * a.d <= 22 && atoms <= 1 << 16 {
        let r = check_mu_nu_distance(
            &mun,
            &DistanceOptions {
                exact_cap: a.exact_cap,
            },
        )?;
        ok &= r.holds();
        let _ = writeln!(
            out,
            "{} distance identity: rho(mu_n, nu_n) = {}, 2^(-J_n/n) * rho(nu_n, pi) = {} * {}{}",
            verdict(r.identity_holds),
            dist_text(&r.rho_mu_nu),
            fr(&r.blend_weight),
            dist_text(&r.rho_nu_pi),
            if r.rho_mu_nu.is_exact() && r.rho_nu_pi.is_exact() {
                " (exact)"
            } else {
                " (numeric, within certified gap)"
            }
        );
        let _ = writeln!(
            out,
            "{} distance bound: rho(mu_n, nu_n) <= {}",
            verdict(r.bound_holds),
            fr(&r.bound)
        );
    } else {
        let _ = writeln!(
            out,
            "SKIP distance lemma: {atoms} atoms is too many to transport"
        );
    }
    if let Some(theta) = &a.theta {
        let set = ApproxSet::new(a.d, theta, mun.level() as u64)?;
        let centers = set.centers(1 << 16)?;
        let r = ball_mass_lower_bound_check(&mun, theta, &a.eps, &centers)?;
        ok &= !r.failed();
        let min = r.entries.iter().filter_map(|e| e.mass.as_ref()).min();
        let _ = writeln!(
            out,
            "{} ball mass >= {} at all {} centers (min {})",
            verdict(r.floor_holds),
            fr(&r.floor),
            r.checked(),
            min.map_or("-".into(), show)
        );
        let _ = writeln!(
            out,
            "{} ball mass >= 2^({}){}",
            bound_verdict(&r.lemma),
            fr(&r.lemma_exponent),
            if r.lemma.guaranteed {
                ""
            } else {
                " (not implied: eps <= 1/(d n))"
            }
        );
    }
    Ok(ok)
}

fn dist_text(d: &Distance) -> String {
    match d {
        Distance::Exact(p) => fr(&p.cost),
        Distance::Approx { plan, gap } => format!("{} (gap {})", g12(plan.cost), g12(*gap)),
    }
}

fn cantor_cmd(c: CantorCommand, out: &mut String) -> Result<bool> {
    match c {
        CantorCommand::Validate {
            schedule,
            s_exp,
            output,
        } => cantor_validate(&schedule, s_exp, &output, out),
        CantorCommand::Count { schedule } => cantor_count(&schedule, out),
        CantorCommand::Mass { schedule } => cantor_mass(&schedule, out),
        CantorCommand::VerifyBounds {
            schedule,
            p,
            samples,
            seed,
            output,
        } => cantor_bounds(&schedule, p, samples, seed, &output, out),
        CantorCommand::VerifyBorel {
            schedule,
            boxes,
            random,
            seed,
            output,
        } => cantor_borel(&schedule, &boxes, random, seed, &output, out),
    }
}

fn config_line(fields: &[(&str, String)]) -> String {
    csv::header(fields)
}

fn yes(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

fn cantor_validate(
    a: &ScheduleArgs,
    s_exp: Option<Rational>,
    output: &Option<PathBuf>,
    out: &mut String,
) -> Result<bool> {
    let s = a.schedule()?;
    let r = validate_schedule(&s)?;
    let mut fields = vec![("kind", "cantor-schedule".to_string())];
    fields.extend(a.fields());
    out.push_str(&config_line(&fields));
    let _ = writeln!(
        out,
        "construction valid: {}, strict: {}, desk-relaxed margins: {}",
        yes(r.construction_valid()),
        yes(r.strict()),
        yes(r.desk_valid())
    );
    let mut table = config_line(&fields);
    table.push_str("# p,level,delta_axis,growth_margin,coupling_margin,desk_margin,branching_bounds,product_lower,product_upper\n");
    for g in &r.generations {
        let t = r.transitions.get(g.p - 1);
        let m = |x: Option<&cantor::Margin>| x.map_or("-".to_string(), |m| fr(&m.value));
        let _ = writeln!(
            table,
            "{},{},{},{},{},{},{},{},{}",
            g.p,
            g.level,
            show_int(&g.delta_axis),
            m(t.map(|t| &t.growth)),
            m(t.map(|t| &t.coupling)),
            m(t.map(|t| &t.desk)),
            t.map_or("-", |t| yes(t.branching_bounds)),
            fr(&g.product_lower.value),
            fr(&g.product_upper.value)
        );
        let _ = writeln!(
            out,
            "p={} J={} delta_axis={} delta window {} product bounds {}/{}",
            g.p,
            g.level,
            show_int(&g.delta_axis),
            yes(g.delta_window),
            yes(g.product_lower.holds),
            yes(g.product_upper.holds)
        );
        if let Some(t) = t {
            let _ = writeln!(
                out,
                "  p={}->{}: growth {} ({}), coupling {} ({}), desk {} ({}), branching bounds {}",
                t.p,
                t.p + 1,
                yes(t.growth.holds),
                fr(&t.growth.value),
                yes(t.coupling.holds),
                fr(&t.coupling.value),
                yes(t.desk.holds),
                fr(&t.desk.value),
                yes(t.branching_bounds)
            );
        }
    }
    if let Some(se) = s_exp {
        let c = cantor::covering_sum(&s, &se, s.generations())?;
        let _ = writeln!(
            out,
            "covering sum with s={}: log2 total {}, terms 2^[{}], decreasing tail {}",
            fr(&se),
            g12(c.log2_total),
            join(&c.exponents.iter().map(format_rational).collect::<Vec<_>>()),
            yes(c.decreasing_tail)
        );
    }
    if output.is_some() {
        emit_csv(output, &table, out)?;
    }
    Ok(true)
}

fn cantor_count(a: &ScheduleArgs, out: &mut String) -> Result<bool> {
    let s = a.schedule()?;
    let mut fields = vec![("kind", "cantor-count".to_string())];
    fields.extend(a.fields());
    out.push_str(&config_line(&fields));
    for p in 1..=s.generations() {
        let c = generation_census(&s, p)?;
        let _ = writeln!(
            out,
            "p={} J={} delta_axis={} delta={} nodes={}",
            p,
            s.level(p),
            show_int(&cantor::axis_branching(&s, p)?),
            show_int(c.mass.factors.last().expect("p >= 1")),
            show_int(&c.count)
        );
    }
    Ok(true)
}

fn cantor_mass(a: &ScheduleArgs, out: &mut String) -> Result<bool> {
    let s = a.schedule()?;
    let mut fields = vec![("kind", "cantor-mass".to_string())];
    fields.extend(a.fields());
    out.push_str(&config_line(&fields));
    let mut ok = true;
    for p in 1..=s.generations() {
        let c = generation_census(&s, p)?;
        let total_ok = c.total.is_one();
        ok &= total_ok;
        let _ = writeln!(
            out,
            "{} p={} node mass={} log2={} nodes={} total={}",
            verdict(total_ok),
            p,
            show(&c.mass.exact()),
            g12(c.mass.log2()),
            show_int(&c.count),
            fr(&c.total)
        );
    }
    Ok(ok)
}

fn address_text(node: &cantor::CantorNode) -> String {
    node.address()
        .iter()
        .map(|k| {
            k.iter()
                .map(ToString::to_string)
                .collect::<Vec<_>>()
                .join(".")
        })
        .collect::<Vec<_>>()
        .join("/")
}

fn cantor_bounds(
    a: &ScheduleArgs,
    only: Option<usize>,
    samples: usize,
    seed: u64,
    output: &Option<PathBuf>,
    out: &mut String,
) -> Result<bool> {
    let s = a.schedule()?;
    let report = validate_schedule(&s)?;
    let mut fields = vec![("kind", "cantor-bounds".to_string())];
    fields.extend(a.fields());
    fields.push(("samples", samples.to_string()));
    fields.push(("seed", seed.to_string()));
    if let Some(p) = only {
        fields.push(("p", p.to_string()));
    }
    out.push_str(&config_line(&fields));
    let _ = writeln!(
        out,
        "schedule: {}, desk-relaxed margins {}",
        if report.strict() {
            "strict"
        } else {
            "desk-mode (not strict)"
        },
        yes(report.desk_valid())
    );
    let mut table = config_line(&fields);
    table.push_str("# p,address,deltas,log2_mass,lower_margin_log2,upper_margin_log2,ratio\n");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut next = || rng.gen::<u64>();
    let mut ok = true;
    let gens: Vec<usize> = match only {
        Some(p) => vec![p],
        None => (1..=s.generations()).collect(),
    };
    for p in gens {
        let census = generation_census(&s, p)?;
        let nodes = if census.count <= BigUint::from(samples) {
            enumerate_generation(&s, p, samples.max(1))?
        } else {
            (0..samples)
                .map(|_| sample_node(&s, p, &mut next))
                .collect::<mfkit_core::Result<Vec<_>>>()?
        };
        let r = verify_mass_bounds(&s, &report, p, &nodes)?;
        ok &= !r.failed();
        let (lo, hi) = r.ratio_window();
        let status = |b: &cantor::BoundCheck| {
            format!(
                "{}{}",
                b.status.name(),
                if b.guaranteed {
                    ""
                } else {
                    " (not guaranteed)"
                }
            )
        };
        let _ = writeln!(
            out,
            "{} p={} nodes={} mass={} ratio={} target d/theta={} window [{}, {}]",
            verdict(!r.failed()),
            p,
            r.nodes_checked,
            show(&r.mass.exact()),
            g12(r.ratio),
            fr(&r.target),
            fr(&lo),
            fr(&hi)
        );
        let _ = writeln!(
            out,
            "  window lower {}, window upper {}, log lower {}, log upper {}",
            status(&r.window_lower),
            status(&r.window_upper),
            status(&r.log_lower),
            status(&r.log_upper)
        );
        let dj = (s.dim() as u64 * s.level(p)) as f64;
        let pf = p as f64;
        for node in &nodes {
            let m = cantor::node_mass(&s, node)?;
            let l = m.log2();
            let _ = writeln!(
                table,
                "{},{},{},{},{},{},{}",
                p,
                address_text(node),
                m.factors.iter().map(show_int).collect::<Vec<_>>().join(" "),
                g12(l),
                g12(l + dj * (1.0 + 1.0 / pf)),
                g12(-dj * (1.0 - 2.0 / pf) - l),
                g12(-l / s.theta_level(p) as f64)
            );
        }
    }
    if output.is_some() {
        emit_csv(output, &table, out)?;
    }
    Ok(ok)
}

fn parse_box(s: &str, dim: usize) -> Result<ProbeBox> {
    let (lo, hi) = s
        .split_once(':')
        .ok_or_else(|| Error::Usage(format!("box {s:?} must be lo1,..:hi1,..")))?;
    let list = |t: &str| {
        t.split(',')
            .map(parse_rational)
            .collect::<mfkit_core::Result<Vec<_>>>()
    };
    let b = ProbeBox::new(list(lo)?, list(hi)?)?;
    if b.dim() != dim {
        return Err(Error::Usage(format!("box {s:?} is not {dim}-dimensional")));
    }
    Ok(b)
}

/// Random box with dyadic corners at resolution `2^{-(J_P + 2)}`.
fn random_box(s: &CantorSchedule, rng: &mut ChaCha8Rng) -> ProbeBox {
    let bits = s.level(s.generations()) + 2;
    let scale = BigUint::one() << bits as usize;
    let t = rng.gen_range(1..=bits);
    let lo_d = BigUint::one() << (t - 1) as usize;
    let hi_d = BigUint::one() << t as usize;
    let diam = rng.gen_biguint_range(&lo_d, &hi_d);
    let long_axis = rng.gen_range(0..s.dim());
    let den = BigInt::from(scale.clone());
    let mut lo = Vec::with_capacity(s.dim());
    let mut hi = Vec::with_capacity(s.dim());
    for axis in 0..s.dim() {
        let side = if axis == long_axis {
            diam.clone()
        } else {
            rng.gen_biguint_below(&(&diam + BigUint::one()))
        };
        let start = rng.gen_biguint_below(&(&scale - &side + BigUint::one()));
        let end = &start + &side;
        lo.push(Rational::new(BigInt::from(start), den.clone()));
        hi.push(Rational::new(BigInt::from(end), den.clone()));
    }
    ProbeBox::new(lo, hi).expect("corners lie in the unit cube")
}

fn case_name(c: BorelCase) -> String {
    match c {
        BorelCase::Coarse => "coarse".into(),
        BorelCase::NearParent { p } => format!("near-parent(p={p})"),
        BorelCase::InsideParent { p } => format!("inside-parent(p={p})"),
        BorelCase::Fine => "fine".into(),
    }
}

fn cantor_borel(
    a: &ScheduleArgs,
    boxes: &[String],
    random: usize,
    seed: u64,
    output: &Option<PathBuf>,
    out: &mut String,
) -> Result<bool> {
    let s = a.schedule()?;
    let mut probes = boxes
        .iter()
        .map(|b| parse_box(b, s.dim()))
        .collect::<Result<Vec<_>>>()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    probes.extend((0..random).map(|_| random_box(&s, &mut rng)));
    if probes.is_empty() {
        return Err(Error::Usage("give --box or --random".into()));
    }
    let mut fields = vec![("kind", "cantor-borel".to_string())];
    fields.extend(a.fields());
    fields.push(("boxes", join(boxes)));
    fields.push(("random", random.to_string()));
    fields.push(("seed", seed.to_string()));
    out.push_str(&config_line(&fields));
    let mut table = config_line(&fields);
    table.push_str(
        "# lo,hi,diameter,case,generation,count,mass,parents_met,counting_bound,final_bound\n",
    );
    let mut ok = true;
    for b in &probes {
        let r = verify_borel_bound(&s, b)?;
        ok &= !r.failed();
        let corner = |v: &[Rational]| v.iter().map(show).collect::<Vec<_>>().join(" ");
        let counting = r.counting_bound.map_or("-", yes);
        let fin = r.final_bound.map_or("-".to_string(), |f| {
            format!("{} (asymptotic)", f.status.name())
        });
        let parents = r.parents_met.as_ref().map_or("-".to_string(), show_int);
        let _ = writeln!(
            out,
            "{} box [{}]..[{}] |B|={} case={} gen={} count={} mass={} parents={} counting bound {} final bound {}",
            verdict(!r.failed()),
            corner(b.lo()),
            corner(b.hi()),
            show(&r.diameter),
            case_name(r.case),
            r.generation,
            show_int(&r.count),
            show(&r.mass),
            parents,
            counting,
            fin
        );
        let _ = writeln!(
            table,
            "{},{},{},{},{},{},{},{},{},{}",
            corner(b.lo()),
            corner(b.hi()),
            show(&r.diameter),
            case_name(r.case),
            r.generation,
            show_int(&r.count),
            show(&r.mass),
            parents,
            counting,
            fin
        );
    }
    if output.is_some() {
        emit_csv(output, &table, out)?;
    }
    Ok(ok)
}
