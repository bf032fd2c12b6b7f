//! The `rbl` command line.

use crate::bounds::{self, SatelliteMarking};
use crate::cache::{self, Cache};
use crate::dynamics::{self, RotationNumber};
use crate::error::{Error, Result};
use crate::fmt::sig12;
use crate::geom::Pt;
use crate::modulus::{self, AnnularDomain, Disk, ModulusRow};
use crate::{extremal, hyperbolic, lavaurs, specfun, svg};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

#[derive(Parser, Debug, Serialize)]
#[command(name = "rbl", version, about = "Modulus bounds for satellite renormalization", args_override_self = true)]
pub struct Cli {
    /// key=value file supplying defaults for the subcommand's flags.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Seed for randomized inputs.
    #[arg(long, global = true, default_value_t = 0x5eed_1234)]
    pub seed: u64,
    /// Worker threads for sweeps.
    #[arg(long, global = true, default_value_t = 1)]
    pub jobs: usize,
    /// Write a JSON run record here.
    #[arg(long, global = true)]
    pub record: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug, Serialize)]
pub enum Command {
    /// Evaluate a special function.
    Specfun(SpecfunArgs),
    /// Modulus of an annular domain.
    Modulus(ModulusArgs),
    /// Check the static bound for a marked point set.
    VerifyStatic(VerifyStaticArgs),
    /// Root-annulus modulus at one satellite center.
    Satellite(SatelliteArgs),
    /// Sweep satellite centers `num/q`.
    Sweep(SweepArgs),
    /// Geodesic-length lower bounds.
    Hyperbolic(HyperbolicArgs),
    /// Lavaurs model, distinguished phases and the approximating sequence.
    Lavaurs(LavaursArgs),
    /// Contrast table of the satellite sweep and the Lavaurs sequence.
    Report(ReportArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug, Serialize)]
pub enum Func {
    Tau,
    TauInv,
    TauLower,
    Psi,
    PsiInv,
    Mu,
    EllipK,
}

#[derive(Args, Debug, Serialize)]
pub struct SpecfunArgs {
    #[arg(long = "fn", value_enum)]
    pub func: Func,
    #[arg(long, allow_negative_numbers = true)]
    pub arg: f64,
}

#[derive(Args, Debug, Serialize)]
pub struct ModulusArgs {
    /// Annular domain as JSON.
    #[arg(long, conflicts_with = "round")]
    pub domain: Option<PathBuf>,
    /// Round annulus `1 < |z| < R`.
    #[arg(long)]
    pub round: Option<f64>,
    #[arg(long, default_value_t = 512)]
    pub grid: usize,
    /// Append a row to this CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[arg(long, default_value = "domain")]
    pub id: String,
}

#[derive(Args, Debug, Serialize)]
pub struct VerifyStaticArgs {
    /// Marking `{"alpha": [x, y], "reps": [[x, y], ...], "w": [x, y]}`.
    #[arg(long, required_unless_present = "random_t")]
    pub points: Option<PathBuf>,
    /// Use a random marking with this many non-α points instead.
    #[arg(long)]
    pub random_t: Option<usize>,
    /// Separating annulus to measure; without it the best round annulus is used.
    #[arg(long)]
    pub annulus: Option<PathBuf>,
    #[arg(long, default_value_t = 512)]
    pub grid: usize,
}

#[derive(Args, Debug, Serialize)]
pub struct SatelliteArgs {
    #[arg(long, default_value_t = 1)]
    pub num: u32,
    #[arg(long)]
    pub den: u32,
    #[arg(long, default_value_t = 1024)]
    pub grid: usize,
    /// Save the restriction JSON in this directory.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
pub struct SweepArgs {
    #[arg(long, default_value_t = 1)]
    pub num: u32,
    #[arg(long, default_value_t = 2)]
    pub den_from: u32,
    #[arg(long, default_value_t = 8)]
    pub den_to: u32,
    #[arg(long, default_value_t = 1024)]
    pub grid: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
pub struct HyperbolicArgs {
    #[arg(long, default_value_t = 2)]
    pub s: u64,
    #[arg(long, default_value_t = 2)]
    pub dstar: u64,
    /// Also tabulate `ℓ / ln ln s` at `s = 10³, 10⁶, 10⁹, 10¹²` into this CSV.
    #[arg(long)]
    pub table: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
pub struct LavaursArgs {
    /// Comma-separated values of N for the approximating sequence.
    #[arg(long, value_delimiter = ',', default_values_t = vec![600u32, 800, 1000])]
    pub n: Vec<u32>,
    #[arg(long)]
    pub model_out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
pub struct ReportArgs {
    #[arg(long, default_value_t = 1)]
    pub num: u32,
    #[arg(long, default_value_t = 2)]
    pub den_from: u32,
    #[arg(long, default_value_t = 8)]
    pub den_to: u32,
    #[arg(long, default_value_t = 1024)]
    pub grid: usize,
    #[arg(long, value_delimiter = ',', default_values_t = vec![600u32, 800, 1000])]
    pub n: Vec<u32>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Serialize)]
pub struct RunRecord {
    pub command_line: Vec<String>,
    pub input_hash: String,
    pub outputs: Vec<PathBuf>,
    pub wall_time_s: f64,
    pub tool_version: String,
}

/// Reads `key=value` lines; blank lines and `#` comments are skipped.
pub fn parse_config(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| Error::Usage(format!("config line {}: expected key=value", i + 1)))?;
        let k = k.trim();
        if k.is_empty() {
            return Err(Error::Usage(format!("config line {}: empty key", i + 1)));
        }
        out.push((k.replace('_', "-"), v.trim().to_string()));
    }
    Ok(out)
}

fn config_path(argv: &[String]) -> Option<String> {
    let mut it = argv.iter();
    while let Some(a) = it.next() {
        if a == "--config" {
            return it.next().cloned();
        }
        if let Some(p) = a.strip_prefix("--config=") {
            return Some(p.to_string());
        }
    }
    None
}

/// Inserts config-file flags right after the subcommand so explicit flags, which come later, win.
fn merge_config(argv: &[String]) -> Result<Vec<String>> {
    let Some(path) = config_path(argv) else {
        return Ok(argv.to_vec());
    };
    let text = std::fs::read_to_string(&path).map_err(|e| Error::Usage(format!("cannot read config {path}: {e}")))?;
    let pairs = parse_config(&text)?;
    let names = ["specfun", "modulus", "verify-static", "satellite", "sweep", "hyperbolic", "lavaurs", "report"];
    let pos = argv.iter().position(|a| names.contains(&a.as_str())).ok_or_else(|| Error::Usage("missing subcommand".into()))?;
    let mut out = argv[..=pos].to_vec();
    for (k, v) in pairs {
        out.push(format!("--{k}"));
        out.push(v);
    }
    out.extend_from_slice(&argv[pos + 1..]);
    Ok(out)
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Usage(_) => 2,
        _ => 1,
    }
}

/// Runs the command line, writing results to `out`, and returns the exit status.
pub fn run(argv: &[String], out: &mut dyn Write) -> i32 {
    let argv = match merge_config(argv) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("rbl: {e}");
            return 2;
        }
    };
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 2,
            };
        }
    };
    let start = Instant::now();
    let mut outputs = Vec::new();
    let status = match dispatch(&cli, out, &mut outputs) {
        Ok(ok) => {
            if ok {
                0
            } else {
                1
            }
        }
        Err(e) => {
            eprintln!("rbl: {e}");
            exit_code(&e)
        }
    };
    if let Some(path) = &cli.record {
        let rec = RunRecord {
            command_line: argv.clone(),
            input_hash: input_hash(&cli),
            outputs,
            wall_time_s: start.elapsed().as_secs_f64(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
        };
        let write = serde_json::to_vec_pretty(&rec).map_err(Error::from).and_then(|b| cache::write_atomic(path, &b));
        if let Err(e) = write {
            eprintln!("rbl: cannot write run record: {e}");
            return 1;
        }
    }
    status
}

/// Hash of the seed and the parsed subcommand with all its flags.
pub fn input_hash(cli: &Cli) -> String {
    #[derive(Serialize)]
    struct Inputs<'a> {
        seed: u64,
        command: &'a Command,
    }
    cache::content_key(&Inputs { seed: cli.seed, command: &cli.command })
}

fn line(out: &mut dyn Write, key: &str, v: f64) -> Result<()> {
    writeln!(out, "{key}: {}", sig12(v))?;
    Ok(())
}

fn cache_from_env() -> Option<Cache> {
    Cache::from_env()
}

fn dispatch(cli: &Cli, out: &mut dyn Write, outputs: &mut Vec<PathBuf>) -> Result<bool> {
    match &cli.command {
        Command::Specfun(a) => {
            let v = match a.func {
                Func::Tau => specfun::tau(a.arg)?,
                Func::TauInv => specfun::tau_inv(a.arg)?,
                Func::TauLower => specfun::tau_lower(a.arg)?,
                Func::Psi => specfun::psi(a.arg)?,
                Func::PsiInv => specfun::psi_inv(a.arg)?,
                Func::Mu => specfun::grotzsch_mu(a.arg)?,
                Func::EllipK => specfun::ellip_k(a.arg)?,
            };
            writeln!(out, "{}", sig12(v))?;
            Ok(true)
        }
        Command::Modulus(a) => {
            let d = match (&a.domain, a.round) {
                (Some(p), None) => AnnularDomain::from_json(&std::fs::read_to_string(p)?)?,
                (None, Some(r)) => modulus::disk_annulus(Disk::new(Pt::new(0.0, 0.0), 1.0), Disk::new(Pt::new(0.0, 0.0), r))?,
                _ => return Err(Error::Usage("give exactly one of --domain or --round".into())),
            };
            let est = modulus::compute_modulus(&d, a.grid)?;
            line(out, "modulus", est.value)?;
            line(out, "grid_h", est.grid_h)?;
            line(out, "residual", est.residual)?;
            if let Some(r) = a.round {
                line(out, "exact", r.ln() / (2.0 * std::f64::consts::PI))?;
            }
            writeln!(out, "lower_biased: {}", est.lower_biased)?;
            if let Some(p) = &a.csv {
                let row = ModulusRow { domain_id: a.id.clone(), grid: a.grid, modulus: est.value, residual: est.residual, lower_biased: est.lower_biased };
                modulus::append_csv(p, &[row])?;
                outputs.push(p.clone());
            }
            Ok(true)
        }
        Command::VerifyStatic(a) => verify_static_cmd(cli, a, out),
        Command::Satellite(a) => {
            let rot = RotationNumber::new(a.num, a.den).map_err(|e| Error::Usage(e.to_string()))?;
            let cache = cache_from_env();
            if let Some(dir) = &a.out_dir {
                let c = dynamics::satellite_center(rot)?;
                let r = dynamics::auto_restriction(c, rot)?;
                outputs.push(r.save(dir)?);
            }
            let rep = bounds::satellite_case(rot, a.grid, cache.as_ref())?;
            print_report(out, &rep)?;
            Ok(rep.passed)
        }
        Command::Sweep(a) => {
            if a.den_from > a.den_to || a.den_from < 2 {
                return Err(Error::Usage("need 2 <= den-from <= den-to".into()));
            }
            let cache = cache_from_env();
            let sw = bounds::sweep_satellites(a.num, a.den_from..=a.den_to, a.grid, cli.jobs, cache.as_ref())?;
            writeln!(out, "p,q,s,d_star,measured,bound,margin,passed")?;
            for r in &sw.reports {
                writeln!(out, "{},{},{},{},{},{},{},{}", r.p, r.q, r.s, r.d_star, sig12(r.measured.value), sig12(r.bound), sig12(r.margin), r.passed)?;
            }
            for (p, q, e) in &sw.failures {
                writeln!(out, "# {p}/{q} failed: {e}")?;
            }
            writeln!(out, "bounds_decreasing: {}", sw.bounds_decreasing)?;
            if let Some(p) = &a.out {
                bounds::write_sweep_csv(&sw.reports, p)?;
                outputs.push(p.clone());
            }
            if let Some(p) = &a.svg {
                if !sw.reports.is_empty() {
                    svg::emit_svg(&bounds::sweep_chart(&sw.reports), p)?;
                    outputs.push(p.clone());
                }
            }
            Ok(sw.all_passed())
        }
        Command::Hyperbolic(a) => {
            let b = hyperbolic::length_lower_bound(a.s, a.dstar)?;
            line(out, "modulus_bound", b.modulus_bound)?;
            line(out, "length_lower", b.length_lower)?;
            if let Some(p) = &a.table {
                let t = hyperbolic::asymptotic_check(&[1e3, 1e6, 1e9, 1e12], a.dstar)?;
                for r in &t.rows {
                    writeln!(out, "s={} ratio_to_lnln={}", sig12(r.s), sig12(r.ratio_to_lnln))?;
                }
                writeln!(out, "in_window: {}", t.in_window)?;
                hyperbolic::write_asymptotic_csv(p, &t)?;
                outputs.push(p.clone());
            }
            Ok(true)
        }
        Command::Lavaurs(a) => {
            let m = lavaurs::LavaursModel::build()?;
            line(out, "a", m.a)?;
            line(out, "x0", m.x0)?;
            line(out, "A", m.cap_a)?;
            line(out, "B", m.cap_b)?;
            line(out, "X", m.x_cal)?;
            let p = lavaurs::find_sigma_params(&m)?;
            line(out, "sigma0", p.sigma0)?;
            line(out, "sigma_ch", p.sigma_ch)?;
            line(out, "beta_ch", p.beta_ch)?;
            let s = lavaurs::default_sigma_star(&p);
            line(out, "sigma_star", s)?;
            if let Some(path) = &a.model_out {
                m.save(path)?;
                outputs.push(path.clone());
            }
            let mut ok = true;
            for &n in &a.n {
                match lavaurs::approximate_parameter(&m, s, n) {
                    Ok(r) => writeln!(
                        out,
                        "N={n} q_N={} a_N={} deviation={} diam_ratio={}",
                        r.q_n,
                        sig12(r.a_n),
                        sig12(r.deviation),
                        sig12(r.diam_ratio())
                    )?,
                    Err(e) => {
                        ok = false;
                        writeln!(out, "N={n} error: {e}")?;
                    }
                }
            }
            Ok(ok)
        }
        Command::Report(a) => {
            let cache = cache_from_env();
            let sw = bounds::sweep_satellites(a.num, a.den_from..=a.den_to, a.grid, cli.jobs, cache.as_ref())?;
            let params = sw
                .reports
                .iter()
                .map(|r| Ok((r.q, dynamics::satellite_center(RotationNumber::new(r.p, r.q)?)?)))
                .collect::<Result<Vec<_>>>()?;
            let m = lavaurs::LavaursModel::build()?;
            let s = lavaurs::default_sigma_star(&lavaurs::find_sigma_params(&m)?);
            let seq = a.n.iter().map(|&n| lavaurs::approximate_parameter(&m, s, n)).collect::<Result<Vec<_>>>()?;
            let rep = lavaurs::contrast_report(&sw.reports, &seq, &params)?;
            lavaurs::write_contrast_csv(&a.out, &rep)?;
            outputs.push(a.out.clone());
            writeln!(out, "satellite_decay: {}", rep.satellite_decay)?;
            writeln!(out, "lavaurs_bounded_below: {}", rep.lavaurs_bounded_below)?;
            Ok(rep.satellite_decay && rep.lavaurs_bounded_below)
        }
    }
}

fn print_report(out: &mut dyn Write, r: &bounds::BoundReport) -> Result<()> {
    writeln!(out, "case: {}", r.case_id)?;
    writeln!(out, "s: {}", r.s)?;
    writeln!(out, "d_star: {}", r.d_star)?;
    line(out, "measured", r.measured.value)?;
    line(out, "bound", r.bound)?;
    line(out, "margin", r.margin)?;
    line(out, "eps_fat", r.eps_fat)?;
    writeln!(out, "passed: {}", r.passed)?;
    writeln!(out, "note: {}", r.note)?;
    Ok(())
}

#[derive(serde::Deserialize)]
struct MarkingJson {
    alpha: [f64; 2],
    reps: Vec<[f64; 2]>,
    w: [f64; 2],
}

fn read_marking(path: &Path) -> Result<SatelliteMarking> {
    let j: MarkingJson = serde_json::from_str(&std::fs::read_to_string(path)?)?;
    let p = |v: [f64; 2]| Pt::new(v[0], v[1]);
    SatelliteMarking::new(p(j.alpha), j.reps.into_iter().map(p).collect(), p(j.w))
}

fn random_marking(t: usize, seed: u64) -> Result<SatelliteMarking> {
    if t < 3 {
        return Err(Error::Usage("--random-t needs at least 3 points".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pt = || Pt::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
    let alpha = pt();
    let reps: Vec<Pt> = (0..t - 1).map(|_| pt()).collect();
    let w = pt();
    SatelliteMarking::new(alpha, reps, w)
}

fn verify_static_cmd(cli: &Cli, a: &VerifyStaticArgs, out: &mut dyn Write) -> Result<bool> {
    let m = match (&a.points, a.random_t) {
        (Some(p), None) => read_marking(p)?,
        (None, Some(t)) => random_marking(t, cli.seed)?,
        _ => return Err(Error::Usage("give exactly one of --points or --random-t".into())),
    };
    let (gap_ok, diam) = {
        let n = m.marked_set()?.normalized()?;
        let (_, ok) = extremal::pack_bound(&n.satellites)?;
        (ok, extremal::diameter(&n.satellites)?)
    };
    writeln!(out, "t: {}", m.t())?;
    writeln!(out, "packing_ok: {gap_ok}")?;
    line(out, "normalized_diameter", diam)?;
    if let Some(p) = &a.annulus {
        let d = AnnularDomain::from_json(&std::fs::read_to_string(p)?)?;
        let rep = bounds::verify_static(&m, &d, a.grid)?;
        line(out, "measured", rep.measured.value)?;
        line(out, "bound", rep.bound)?;
        writeln!(out, "passed: {}", rep.passed)?;
        Ok(rep.passed && gap_ok)
    } else {
        let (probe, bound) = bounds::verify_static_round(&m)?;
        line(out, "round_modulus", probe.modulus)?;
        line(out, "bound", bound)?;
        let passed = probe.modulus < bound;
        writeln!(out, "passed: {passed}")?;
        Ok(passed && gap_ok)
    }
}
