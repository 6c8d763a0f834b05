//! Command-line front end: `scg solve` and `scg sweep`.

use std::fmt::Write as _;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use crate::equilibria::mixed::enumerate_mixed_equilibria;
use crate::equilibria::pure::find_pure_equilibria;
use crate::error::{Error, Result};
use crate::nonatomic::nonatomic_poa;
use crate::path_eval::{Criterion, Evaluator};
use crate::scenario::{load_scenario, Scenario};
use crate::social::{optimal_assignment, price_of_anarchy, SocialReport};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_NO_EQUILIBRIUM: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "scg",
    version,
    about = "Equilibria of stochastic congestion games"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve one scenario for one criterion.
    Solve(SolveArgs),
    /// Pure equilibria over a range of player counts, as CSV.
    Sweep(SweepArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CriterionKind {
    Nash,
    Rae,
    Mv,
    Cvar,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Pure,
    Mixed,
    Nonatomic,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Built-in name (pigou, braess, ex3, ex4, ex5) or path to a TOML scenario.
    #[arg(long)]
    pub scenario: String,
    /// Risk-aversion weight of the mean-variance criterion.
    #[arg(long, default_value_t = 1.0)]
    pub rho: f64,
    /// Tail level of the CVaR criterion.
    #[arg(long, default_value_t = 0.1)]
    pub alpha: f64,
    /// Root Monte Carlo seed, decimal or 0x-prefixed hex.
    #[arg(long, env = "SCG_SEED", value_parser = parse_seed)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub replications: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub common: Common,
    /// Defaults to the scenario's own criterion.
    #[arg(long, value_enum)]
    pub criterion: Option<CriterionKind>,
    #[arg(long, value_enum, default_value = "pure")]
    pub mode: Mode,
    /// Players of the first pair.
    #[arg(long)]
    pub n: Option<usize>,
    /// Write the equilibria as CSV here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(
        long,
        value_enum,
        value_delimiter = ',',
        default_value = "nash,rae,mv,cvar"
    )]
    pub criteria: Vec<CriterionKind>,
    #[arg(long, default_value_t = 2)]
    pub n_min: usize,
    #[arg(long, default_value_t = 50)]
    pub n_max: usize,
    /// CSV destination; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also draw fractions and PoA against n as SVG.
    #[arg(long)]
    pub plot: Option<PathBuf>,
}

fn parse_seed(s: &str) -> std::result::Result<u64, String> {
    let s = s.trim();
    let parsed = match s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
        Some(hex) => u64::from_str_radix(hex, 16),
        None => s.parse(),
    };
    parsed.map_err(|e| format!("invalid seed {s:?}: {e}"))
}

impl CriterionKind {
    pub fn with(self, rho: f64, alpha: f64) -> Criterion {
        match self {
            CriterionKind::Nash => Criterion::Nash,
            CriterionKind::Rae => Criterion::Rae,
            CriterionKind::Mv => Criterion::MeanVariance { rho },
            CriterionKind::Cvar => Criterion::Cvar { alpha },
        }
    }
}

/// `%g` with six significant digits.
pub fn fmt_g(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let sci = format!("{x:.5e}");
    let (mant, exp) = sci.split_once('e').unwrap_or((&sci, "0"));
    let exp: i32 = exp.parse().unwrap_or(0);
    if !(-4..6).contains(&exp) {
        let mant = trim_zeros(mant);
        let sign = if exp < 0 { '-' } else { '+' };
        return format!("{mant}e{sign}{:02}", exp.abs());
    }
    let decimals = (5 - exp).max(0) as usize;
    trim_zeros(&format!("{x:.decimals$}")).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn prepare(common: &Common, n: Option<usize>) -> Result<Scenario> {
    let mut sc = load_scenario(&common.scenario)?;
    if let Some(seed) = common.seed {
        sc.solver.monte_carlo.seed = seed;
    }
    if let Some(r) = common.replications {
        sc.solver.monte_carlo.replications = r;
    }
    if let Some(n) = n {
        sc = sc.with_players(n)?;
    }
    Ok(sc)
}

fn label(sc: &Scenario, pair: usize, path: usize) -> String {
    let l = sc.game.path_label(pair, path);
    if sc.game.pairs().len() > 1 {
        format!("{pair}:{l}")
    } else {
        l
    }
}

/// Result of `solve`: the human report, CSV body and exit code.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveOutput {
    pub report: String,
    pub csv: String,
    pub exit_code: i32,
}

pub const SOLVE_CSV_HEADER: &str = "equilibrium,owner,path,frac,social_delay,opt_delay,poa";

pub fn solve(args: &SolveArgs) -> Result<SolveOutput> {
    let sc = prepare(&args.common, args.n)?;
    let criterion = match (args.criterion, sc.criterion) {
        (Some(k), _) => k.with(args.common.rho, args.common.alpha),
        (None, Some(c)) => c,
        (None, None) => {
            return Err(Error::Validation(vec![
                "no --criterion given and the scenario declares none".into(),
            ]))
        }
    };
    criterion.validate()?;
    let ev = Evaluator::new(&sc.game, sc.solver.eval());
    let mut report = String::new();
    let mut csv = format!("{SOLVE_CSV_HEADER}\n");
    let mut exit_code = EXIT_OK;
    let _ = writeln!(
        report,
        "scenario {} | criterion {criterion} | n = {}",
        sc.name,
        sc.game.n()
    );
    match args.mode {
        Mode::Pure => {
            let eqs = find_pure_equilibria(&ev, criterion, sc.solver.enumeration_cap)?;
            let opt = optimal_assignment(&ev, sc.solver.enumeration_cap)?;
            let delays: Vec<f64> = eqs.iter().map(|e| e.social_delay).collect();
            let _ = writeln!(report, "optimum delay {}", fmt_g(opt.delay));
            for a in &opt.assignments {
                let _ = writeln!(report, "  optimal counts {:?}", a.counts);
            }
            if eqs.is_empty() {
                let _ = writeln!(report, "no pure equilibrium");
                exit_code = EXIT_NO_EQUILIBRIUM;
            } else {
                let poa = price_of_anarchy(&delays, opt.delay)?;
                let _ = writeln!(report, "{} pure equilibria, PoA {}", eqs.len(), fmt_g(poa));
                for (i, e) in eqs.iter().enumerate() {
                    let _ = writeln!(
                        report,
                        "  #{i} counts {:?} social delay {}",
                        e.assignment.counts,
                        fmt_g(e.social_delay)
                    );
                    for (k, cs) in e.assignment.counts.iter().enumerate() {
                        let nk = sc.game.pairs()[k].players.max(1) as f64;
                        for (p, &m) in cs.iter().enumerate() {
                            let _ = writeln!(
                                csv,
                                "{i},pair{k},{},{},{},{},{}",
                                label(&sc, k, p),
                                fmt_g(m as f64 / nk),
                                fmt_g(e.social_delay),
                                fmt_g(opt.delay),
                                fmt_g(poa)
                            );
                        }
                    }
                }
            }
        }
        Mode::Mixed => {
            let eqs = enumerate_mixed_equilibria(&ev, criterion, &sc.solver.mixed)?;
            let opt = optimal_assignment(&ev, sc.solver.enumeration_cap)?;
            let (pure, mixed): (Vec<_>, Vec<_>) = eqs.iter().partition(|e| e.is_pure());
            let social = SocialReport::new(
                opt,
                pure.iter().map(|e| e.social_delay).collect(),
                mixed.iter().map(|e| e.social_delay).collect(),
            );
            let show = |x: Option<f64>| x.map(fmt_g).unwrap_or_else(|| "n/a".into());
            let _ = writeln!(report, "optimum delay {}", fmt_g(social.optimum.delay));
            let _ = writeln!(
                report,
                "{} equilibria ({} pure), PoA pure {} | pure+mixed {}",
                eqs.len(),
                pure.len(),
                show(social.poa_pure),
                show(social.poa_all)
            );
            let poa = social.poa_all.unwrap_or(f64::NAN);
            let owners = sc.game.player_pairs();
            for (i, e) in eqs.iter().enumerate() {
                let tag = if e.continuum {
                    " (one of a continuum)"
                } else {
                    ""
                };
                let _ = writeln!(report, "  #{i} social delay {}{tag}", fmt_g(e.social_delay));
                for (j, probs) in e.profile.probs.iter().enumerate() {
                    let shown: Vec<String> = probs.iter().map(|&x| fmt_g(x)).collect();
                    let _ = writeln!(report, "    player {j}: [{}]", shown.join(", "));
                    for (p, &x) in probs.iter().enumerate() {
                        let _ = writeln!(
                            csv,
                            "{i},player{j},{},{},{},{},{}",
                            label(&sc, owners[j], p),
                            fmt_g(x),
                            fmt_g(e.social_delay),
                            fmt_g(social.optimum.delay),
                            fmt_g(poa)
                        );
                    }
                }
            }
        }
        Mode::Nonatomic => {
            let r = nonatomic_poa(&ev, criterion, sc.symmetry.as_deref(), &sc.solver.nonatomic)?;
            let shown: Vec<String> = r.optimum.iter().map(|&x| fmt_g(x)).collect();
            let _ = writeln!(
                report,
                "optimum [{}] delay {}",
                shown.join(", "),
                fmt_g(r.optimum_delay)
            );
            let _ = writeln!(
                report,
                "{} equilibria, PoA {}",
                r.equilibria.len(),
                fmt_g(r.poa)
            );
            for (i, e) in r.equilibria.iter().enumerate() {
                let shown: Vec<String> = e.fractions.iter().map(|&x| fmt_g(x)).collect();
                let _ = writeln!(
                    report,
                    "  #{i} fractions [{}] social delay {}",
                    shown.join(", "),
                    fmt_g(e.social_delay)
                );
                for (p, &x) in e.fractions.iter().enumerate() {
                    let _ = writeln!(
                        csv,
                        "{i},pair0,{},{},{},{},{}",
                        label(&sc, 0, p),
                        fmt_g(x),
                        fmt_g(e.social_delay),
                        fmt_g(r.optimum_delay),
                        fmt_g(r.poa)
                    );
                }
            }
        }
    }
    Ok(SolveOutput {
        report,
        csv,
        exit_code,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub n: usize,
    pub criterion: String,
    pub path: String,
    pub frac: Option<f64>,
    pub social_delay: Option<f64>,
    pub opt_delay: Option<f64>,
    pub poa: Option<f64>,
    /// `ok`, `no_equilibrium`, or an error code.
    pub status: String,
}

pub const SWEEP_CSV_HEADER: &str = "n,criterion,path,frac,social_delay,opt_delay,poa,status";

/// Rows for one `n`; the equilibrium with the largest social delay is reported.
fn sweep_n(sc: &Scenario, n: usize, criteria: &[Criterion]) -> Vec<SweepRow> {
    let paths: Vec<(usize, usize)> = (0..sc.game.pairs().len())
        .flat_map(|k| (0..sc.game.paths(k).len()).map(move |p| (k, p)))
        .collect();
    let blank = |c: &Criterion, status: String| -> Vec<SweepRow> {
        paths
            .iter()
            .map(|&(k, p)| SweepRow {
                n,
                criterion: c.to_string(),
                path: label(sc, k, p),
                frac: None,
                social_delay: None,
                opt_delay: None,
                poa: None,
                status: status.clone(),
            })
            .collect()
    };
    let sized = match sc.with_players(n) {
        Ok(s) => s,
        Err(e) => {
            return criteria
                .iter()
                .flat_map(|c| blank(c, e.code().into()))
                .collect()
        }
    };
    let ev = Evaluator::new(&sized.game, sized.solver.eval());
    let opt = optimal_assignment(&ev, sized.solver.enumeration_cap);
    let mut rows = Vec::new();
    for c in criteria {
        let opt = match &opt {
            Ok(o) => o,
            Err(e) => {
                rows.extend(blank(c, e.code().into()));
                continue;
            }
        };
        let eqs = match find_pure_equilibria(&ev, *c, sized.solver.enumeration_cap) {
            Ok(e) => e,
            Err(e) => {
                rows.extend(blank(c, e.code().into()));
                continue;
            }
        };
        let Some(worst) = eqs
            .iter()
            .max_by(|a, b| a.social_delay.total_cmp(&b.social_delay))
        else {
            rows.extend(blank(c, "no_equilibrium".into()));
            continue;
        };
        let poa = price_of_anarchy(&[worst.social_delay], opt.delay).ok();
        for &(k, p) in &paths {
            let nk = sized.game.pairs()[k].players.max(1) as f64;
            rows.push(SweepRow {
                n,
                criterion: c.to_string(),
                path: label(sc, k, p),
                frac: Some(worst.assignment.counts[k][p] as f64 / nk),
                social_delay: Some(worst.social_delay),
                opt_delay: Some(opt.delay),
                poa,
                status: "ok".into(),
            });
        }
    }
    rows
}

pub fn sweep_rows(args: &SweepArgs) -> Result<Vec<SweepRow>> {
    if args.n_min > args.n_max {
        return Err(Error::Validation(vec![format!(
            "--n-min {} exceeds --n-max {}",
            args.n_min, args.n_max
        )]));
    }
    let sc = prepare(&args.common, None)?;
    let criteria: Vec<Criterion> = args
        .criteria
        .iter()
        .map(|k| k.with(args.common.rho, args.common.alpha))
        .collect();
    for c in &criteria {
        c.validate()?;
    }
    let per_n: Vec<Vec<SweepRow>> = (args.n_min..=args.n_max)
        .into_par_iter()
        .map(|n| sweep_n(&sc, n, &criteria))
        .collect();
    Ok(per_n.into_iter().flatten().collect())
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let opt = |x: Option<f64>| x.map(fmt_g).unwrap_or_default();
    let mut s = format!("{SWEEP_CSV_HEADER}\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{}",
            r.n,
            r.criterion,
            r.path,
            opt(r.frac),
            opt(r.social_delay),
            opt(r.opt_delay),
            opt(r.poa),
            r.status
        );
    }
    s
}

type Pick<'a> = &'a dyn Fn(&SweepRow) -> Option<f64>;

const COLORS: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
];

/// Two panels: fraction on the first path, and PoA, both against n.
pub fn sweep_svg(rows: &[SweepRow]) -> String {
    let first_path = rows.first().map(|r| r.path.clone()).unwrap_or_default();
    let mut criteria: Vec<String> = Vec::new();
    for r in rows {
        if !criteria.contains(&r.criterion) {
            criteria.push(r.criterion.clone());
        }
    }
    let series = |c: &str, pick: &dyn Fn(&SweepRow) -> Option<f64>| -> Vec<(f64, f64)> {
        rows.iter()
            .filter(|r| r.criterion == c && r.path == first_path)
            .filter_map(|r| pick(r).map(|y| (r.n as f64, y)))
            .collect()
    };
    let ns: Vec<f64> = rows.iter().map(|r| r.n as f64).collect();
    let (x0, x1) = (
        ns.iter().copied().fold(f64::INFINITY, f64::min),
        ns.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    );
    let (w, h, pad) = (480.0, 320.0, 50.0);
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{}" height="{}" font-family="sans-serif" font-size="11">"#,
        2.0 * w,
        h + 30.0
    );
    let panels: [(&str, Pick); 2] = [
        ("fraction on path", &|r: &SweepRow| r.frac),
        ("price of anarchy", &|r: &SweepRow| r.poa),
    ];
    for (i, (title, pick)) in panels.iter().enumerate() {
        let ox = i as f64 * w;
        let all: Vec<Vec<(f64, f64)>> = criteria.iter().map(|c| series(c, *pick)).collect();
        let ys: Vec<f64> = all.iter().flatten().map(|p| p.1).collect();
        let mut y0 = ys.iter().copied().fold(f64::INFINITY, f64::min);
        let mut y1 = ys.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !y0.is_finite() {
            (y0, y1) = (0.0, 1.0);
        }
        if y1 - y0 < 1e-9 {
            y0 -= 0.5;
            y1 += 0.5;
        }
        let xs = |x: f64| ox + pad + (x - x0) / (x1 - x0).max(1.0) * (w - 2.0 * pad);
        let yp = |y: f64| h - pad + 20.0 - (y - y0) / (y1 - y0) * (h - 2.0 * pad);
        let heading = if i == 0 {
            format!("{title} {first_path}")
        } else {
            title.to_string()
        };
        let _ = writeln!(svg, r#"<text x="{}" y="16">{heading}</text>"#, ox + pad);
        let _ = writeln!(
            svg,
            r#"<rect x="{}" y="{}" width="{}" height="{}" fill="none" stroke="black"/>"#,
            ox + pad,
            pad - 30.0 + 20.0,
            w - 2.0 * pad,
            h - 2.0 * pad + 30.0
        );
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}">{}</text>"#,
            ox + pad,
            h + 12.0,
            fmt_g(x0)
        );
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#,
            ox + w - pad,
            h + 12.0,
            fmt_g(x1)
        );
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#,
            ox + pad - 4.0,
            yp(y0),
            fmt_g(y0)
        );
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#,
            ox + pad - 4.0,
            yp(y1),
            fmt_g(y1)
        );
        for (j, (c, pts)) in criteria.iter().zip(&all).enumerate() {
            let color = COLORS[j % COLORS.len()];
            let coords: Vec<String> = pts
                .iter()
                .map(|&(x, y)| format!("{:.2},{:.2}", xs(x), yp(y)))
                .collect();
            let _ = writeln!(
                svg,
                r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
                coords.join(" ")
            );
            if i == 0 {
                let _ = writeln!(
                    svg,
                    r#"<text x="{}" y="{}" fill="{color}">{c}</text>"#,
                    ox + w - pad - 90.0,
                    pad + 14.0 * j as f64
                );
            }
        }
    }
    svg.push_str("</svg>\n");
    svg
}

fn write_file(path: &PathBuf, body: &str) -> Result<()> {
    std::fs::write(path, body)?;
    Ok(())
}

/// Runs a parsed command; diagnostics go to stderr, the report to `stdout`.
pub fn run(cli: &Cli, stdout: &mut dyn Write) -> i32 {
    let outcome = match &cli.command {
        Command::Solve(args) => solve(args).and_then(|o| {
            stdout.write_all(o.report.as_bytes())?;
            if let Some(path) = &args.out {
                write_file(path, &o.csv)?;
            }
            Ok(o.exit_code)
        }),
        Command::Sweep(args) => sweep_rows(args).and_then(|rows| {
            let csv = sweep_csv(&rows);
            match &args.out {
                Some(path) => write_file(path, &csv)?,
                None => stdout.write_all(csv.as_bytes())?,
            }
            if let Some(path) = &args.plot {
                write_file(path, &sweep_svg(&rows))?;
            }
            Ok(EXIT_OK)
        }),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.code());
            EXIT_ERROR
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn g_format() {
        assert_eq!(fmt_g(0.75), "0.75");
        assert_eq!(fmt_g(4.0 / 3.0), "1.33333");
        assert_eq!(fmt_g(10.0), "10");
        assert_eq!(fmt_g(123456789.0), "1.23457e+08");
        assert_eq!(fmt_g(0.0001234567), "0.000123457");
        assert_eq!(fmt_g(0.00001234567), "1.23457e-05");
        assert_eq!(fmt_g(-2.5), "-2.5");
        assert_eq!(fmt_g(999999.7), "1e+06");
    }

    #[test]
    fn seeds() {
        assert_eq!(parse_seed("0x5EED").unwrap(), 0x5EED);
        assert_eq!(parse_seed("42").unwrap(), 42);
        assert!(parse_seed("x").is_err());
    }
}
