//! `horocycle` — build eigenvalue tables and report on the horocycle
//! restriction experiments.
//!
//! Subcommands: `build` caches eigenvalue tables, `sweep` profiles the
//! restricted norm over a height grid, `lvalue` evaluates L(1, sym²f)
//! three ways, `shiu` compares short-interval sums against their
//! envelope, `cross` takes inner products of distinct forms on one
//! horocycle, and `report` runs every suite check, exiting nonzero if any
//! fails. Data goes to stdout (or `--out`), human notices to stderr;
//! identical configuration and cache produce byte-identical output.

mod config;

use std::fmt::Write as _;
use std::path::PathBuf;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand};

use config::{OutputFormat, Overrides, RunConfig};
use horocycle::cache::{ensure_tables, load_covering, table_path};
use horocycle::restriction::{
    cross_inner_product, peak_sandwich_ratio, quadrature_norm, restricted_norm, sweep,
};
use horocycle::short_interval::interval_report;
use horocycle::sym2::l_value;
use horocycle::tolerances::{
    LVALUE_SPREAD_MAX, PROXY_GAP_BAND, QUAD_REL_TOL, SHIU_RATIO_MAX, SWEEP_SUP_MAX, THREE_OVER_PI,
    UNIT_MEAN_BAND, WEIGHT_BOUND_RATIO_BAND,
};
use horocycle::{cusp_dim, Eigenform};

#[derive(Parser)]
#[command(name = "horocycle", version, about = "Hecke eigenforms and their horocycle restriction norms")]
struct Cli {
    /// key=value config file (must declare format_version=1)
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// directory for eigenvalue table caches
    #[arg(long, global = true)]
    cache_dir: Option<PathBuf>,
    /// even weights: comma list of integers or a..b ranges, e.g. 12..60,120
    #[arg(long, global = true)]
    weights: Option<String>,
    /// eigenvalue table size (0 = per-weight default)
    #[arg(long, global = true)]
    table_len: Option<usize>,
    /// stored mantissa bits: 128 or 256 (0 = per-weight default)
    #[arg(long, global = true)]
    precision_bits: Option<u32>,
    /// sweep grid upper exponent margin, 0 < delta < 1/2
    #[arg(long, global = true)]
    delta: Option<f64>,
    /// sweep grid size
    #[arg(long, global = true)]
    grid_size: Option<usize>,
    /// certified tail target for truncation windows
    #[arg(long, global = true)]
    epsilon: Option<f64>,
    /// report format
    #[arg(long, global = true, value_enum)]
    output: Option<OutputFormat>,
    /// write the report here instead of stdout
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build and cache eigenvalue tables for the configured weights
    Build,
    /// Profile restricted norms over the geometric height grid
    Sweep,
    /// Evaluate L(1, sym²f) by smoothed series, Euler product, and proxy
    Lvalue,
    /// Short-interval sums of λ(n)² against the Shiu-type envelope
    Shiu {
        /// interval left endpoints (default 1e3 and 1e4)
        #[arg(long = "x")]
        xs: Vec<f64>,
        /// interval exponents z = x^theta in (0, 1] (default 0.5, 0.7, 1.0)
        #[arg(long = "theta")]
        thetas: Vec<f64>,
    },
    /// Inner products of distinct same-weight forms on one horocycle
    Cross {
        /// horocycle height
        #[arg(long, default_value_t = 1.0)]
        y: f64,
    },
    /// Run every suite check; exit 0 only if all pass
    Report,
}

fn main() {
    let code = match run() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            1
        }
    };
    std::process::exit(code);
}

fn run() -> Result<i32> {
    let cli = Cli::parse();
    let flags = Overrides {
        weights: cli.weights.as_deref().map(config::parse_weights).transpose()?,
        table_len: cli.table_len,
        precision_bits: cli.precision_bits,
        delta: cli.delta,
        grid_size: cli.grid_size,
        epsilon: cli.epsilon,
        cache_dir: cli.cache_dir.clone(),
        output: cli.output,
    };
    let cfg = config::resolve(&flags, cli.config.as_deref())?;
    let (report, ok) = match &cli.command {
        Command::Build => (cmd_build(&cfg)?, true),
        Command::Sweep => (cmd_sweep(&cfg)?, true),
        Command::Lvalue => (cmd_lvalue(&cfg)?, true),
        Command::Shiu { xs, thetas } => (cmd_shiu(&cfg, xs, thetas)?, true),
        Command::Cross { y } => (cmd_cross(&cfg, *y)?, true),
        Command::Report => cmd_report(&cfg)?,
    };
    match &cli.out {
        Some(path) => std::fs::write(path, report.as_bytes())
            .with_context(|| format!("cannot write {}", path.display()))?,
        None => print!("{report}"),
    }
    Ok(if ok { 0 } else { 1 })
}

/// 17 significant digits: enough to reproduce the double exactly, fixed
/// width by construction, so reports are byte-stable.
fn csv_f(x: f64) -> String {
    format!("{x:.16e}")
}

/// Load a weight's cached tables or explain which build command is missing.
fn load_built(cfg: &RunConfig, weight: u32) -> Result<Vec<Eigenform>> {
    let req = config::request_for(cfg, weight);
    let (len, _, _) = req.resolved()?;
    load_covering(&cfg.cache_dir, &req)?.ok_or_else(|| {
        anyhow!(
            "no cached tables covering weight {weight} (need table_len {len}) in {}; run `horocycle build --weights {weight} --table-len {}` first",
            cfg.cache_dir.display(),
            cfg.table_len,
        )
    })
}

/// Weights from the config that actually carry forms; dimension-0 entries
/// get a stderr notice and are dropped.
fn active_weights(cfg: &RunConfig) -> Vec<u32> {
    let mut out = Vec::new();
    for &w in &cfg.weights {
        if cusp_dim(w) == 0 {
            eprintln!("weight {w}: dimension 0, skipping");
        } else {
            out.push(w);
        }
    }
    out
}

fn cmd_build(cfg: &RunConfig) -> Result<String> {
    #[derive(serde::Serialize)]
    struct Row {
        weight: u32,
        dim: usize,
        built: bool,
        table_len: usize,
        prime_cutoff: u64,
        eigen_err_max: f64,
    }
    let mut rows = Vec::new();
    for &w in &cfg.weights {
        if cusp_dim(w) == 0 {
            eprintln!("weight {w}: dimension 0, nothing to build");
            continue;
        }
        let req = config::request_for(cfg, w);
        let (forms, fresh) = ensure_tables(&cfg.cache_dir, &req)?;
        let path = table_path(&cfg.cache_dir, w);
        match &fresh {
            Some(rep) => eprintln!(
                "weight {w}: built {} form(s) in {:.2}s -> {}",
                forms.len(),
                rep.build_seconds,
                path.display()
            ),
            None => eprintln!("weight {w}: cache hit, {} form(s) verified at {}", forms.len(), path.display()),
        }
        rows.push(Row {
            weight: w,
            dim: forms.len(),
            built: fresh.is_some(),
            table_len: forms[0].table_len(),
            prime_cutoff: forms[0].prime_cutoff(),
            eigen_err_max: forms.iter().map(|f| f.eigen_err).fold(0.0, f64::max),
        });
    }
    match cfg.output {
        OutputFormat::Json => json_report("build", serde_json::json!({ "rows": rows })),
        OutputFormat::Csv => {
            let mut s = String::from("weight,dim,built,table_len,prime_cutoff,eigen_err_max\n");
            for r in rows {
                let _ = writeln!(
                    s,
                    "{},{},{},{},{},{}",
                    r.weight,
                    r.dim,
                    r.built as u8,
                    r.table_len,
                    r.prime_cutoff,
                    csv_f(r.eigen_err_max)
                );
            }
            Ok(s)
        }
    }
}

fn forms_with_l(cfg: &RunConfig, weight: u32) -> Result<Vec<(Eigenform, f64)>> {
    load_built(cfg, weight)?
        .into_iter()
        .map(|f| {
            let l = l_value(&f)
                .with_context(|| format!("L-value failed at weight {weight} index {}", f.index))?
                .value_dirichlet;
            Ok((f, l))
        })
        .collect()
}

fn cmd_sweep(cfg: &RunConfig) -> Result<String> {
    let mut profiles = Vec::new();
    for w in active_weights(cfg) {
        for (f, l) in forms_with_l(cfg, w)? {
            profiles.push(sweep(&f, cfg.delta, cfg.grid_size, cfg.epsilon, l)?);
        }
    }
    let sup = profiles.iter().map(|p| p.sup_value).fold(f64::NEG_INFINITY, f64::max);
    let unit_rows: Vec<_> = profiles
        .iter()
        .map(|p| {
            let at1 = p
                .points
                .iter()
                .find(|q| q.y == 1.0)
                .expect("sweep grids always include y = 1");
            (p.weight, p.index, at1.value, at1.value / THREE_OVER_PI)
        })
        .collect();
    match cfg.output {
        OutputFormat::Json => json_report(
            "sweep",
            serde_json::json!({
                "profiles": profiles,
                "summary": {
                    "sup_value": if profiles.is_empty() { serde_json::Value::Null } else { sup.into() },
                    "unit_height": unit_rows.iter().map(|&(w, i, v, r)| serde_json::json!({
                        "weight": w, "index": i, "value": v, "ratio_to_limit": r,
                    })).collect::<Vec<_>>(),
                },
            }),
        ),
        OutputFormat::Csv => {
            let mut s = String::from("row,weight,index,y,value,tail_bound,ratio_to_limit\n");
            for p in &profiles {
                for q in &p.points {
                    let _ = writeln!(
                        s,
                        "point,{},{},{},{},{},",
                        p.weight,
                        p.index,
                        csv_f(q.y),
                        csv_f(q.value),
                        csv_f(q.tail_bound)
                    );
                }
            }
            for (w, i, v, r) in &unit_rows {
                let _ = writeln!(s, "unit,{w},{i},{},{},,{}", csv_f(1.0), csv_f(*v), csv_f(*r));
            }
            if !profiles.is_empty() {
                let _ = writeln!(s, "sup,,,,{},,", csv_f(sup));
            }
            Ok(s)
        }
    }
}

fn cmd_lvalue(cfg: &RunConfig) -> Result<String> {
    #[derive(serde::Serialize)]
    struct Row {
        index: usize,
        #[serde(flatten)]
        report: horocycle::sym2::LValueReport,
    }
    let mut rows = Vec::new();
    for w in active_weights(cfg) {
        for f in load_built(cfg, w)? {
            rows.push(Row { index: f.index, report: l_value(&f)? });
        }
    }
    match cfg.output {
        OutputFormat::Json => json_report("lvalue", serde_json::json!({ "rows": rows })),
        OutputFormat::Csv => {
            let mut s = String::from(
                "weight,index,value_dirichlet,value_euler,value_proxy,x_smoothing,prime_cutoff,spread,proxy_gap\n",
            );
            for r in rows {
                let v = &r.report;
                let _ = writeln!(
                    s,
                    "{},{},{},{},{},{},{},{},{}",
                    v.weight,
                    r.index,
                    csv_f(v.value_dirichlet),
                    csv_f(v.value_euler),
                    csv_f(v.value_proxy),
                    csv_f(v.x_smoothing),
                    v.prime_cutoff,
                    csv_f(v.spread),
                    csv_f(v.proxy_gap)
                );
            }
            Ok(s)
        }
    }
}

fn shiu_grid(xs: &[f64], thetas: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let xs = if xs.is_empty() { vec![1e3, 1e4] } else { xs.to_vec() };
    let thetas = if thetas.is_empty() { vec![0.5, 0.7, 1.0] } else { thetas.to_vec() };
    (xs, thetas)
}

fn cmd_shiu(cfg: &RunConfig, xs: &[f64], thetas: &[f64]) -> Result<String> {
    let (xs, thetas) = shiu_grid(xs, thetas);
    for &t in &thetas {
        if !(t > 0.0 && t <= 1.0) {
            bail!("interval exponent {t} outside (0, 1]");
        }
    }
    let mut rows = Vec::new();
    for w in active_weights(cfg) {
        for f in load_built(cfg, w)? {
            for &x in &xs {
                for &t in &thetas {
                    let z = x.powf(t);
                    if (x + z).floor() as u64 >= f.table_len() as u64 {
                        eprintln!(
                            "weight {w} index {}: cell x={x} theta={t} exceeds the table, skipping",
                            f.index
                        );
                        continue;
                    }
                    rows.push(interval_report(&f, x, z)?);
                }
            }
        }
    }
    match cfg.output {
        OutputFormat::Json => json_report("shiu", serde_json::json!({ "rows": rows })),
        OutputFormat::Csv => {
            let mut s = String::from("weight,index,x,z,sum_value,shiu_rhs,ratio\n");
            for r in rows {
                let _ = writeln!(
                    s,
                    "{},{},{},{},{},{},{}",
                    r.weight,
                    r.index,
                    csv_f(r.x),
                    csv_f(r.z),
                    csv_f(r.sum_value),
                    csv_f(r.shiu_rhs),
                    csv_f(r.ratio)
                );
            }
            Ok(s)
        }
    }
}

fn cmd_cross(cfg: &RunConfig, y: f64) -> Result<String> {
    #[derive(serde::Serialize)]
    struct Row {
        weight: u32,
        index_a: usize,
        index_b: usize,
        y: f64,
        inner_product: f64,
        norm_a: f64,
        norm_b: f64,
        normalized: f64,
    }
    let mut rows = Vec::new();
    for w in active_weights(cfg) {
        let forms = forms_with_l(cfg, w)?;
        if forms.len() < 2 {
            eprintln!("weight {w}: single form, nothing to cross");
            continue;
        }
        let norms: Vec<f64> = forms
            .iter()
            .map(|(f, l)| Ok(restricted_norm(f, y, cfg.epsilon, *l)?.value))
            .collect::<Result<_>>()?;
        for i in 0..forms.len() {
            for j in i + 1..forms.len() {
                let (fi, li) = &forms[i];
                let (fj, lj) = &forms[j];
                let ip = cross_inner_product(fi, fj, y, cfg.epsilon, *li, *lj)?.value;
                rows.push(Row {
                    weight: w,
                    index_a: fi.index,
                    index_b: fj.index,
                    y,
                    inner_product: ip,
                    norm_a: norms[i],
                    norm_b: norms[j],
                    normalized: ip / (norms[i] * norms[j]).sqrt(),
                });
            }
        }
    }
    match cfg.output {
        OutputFormat::Json => json_report("cross", serde_json::json!({ "rows": rows })),
        OutputFormat::Csv => {
            let mut s = String::from("weight,index_a,index_b,y,inner_product,norm_a,norm_b,normalized\n");
            for r in rows {
                let _ = writeln!(
                    s,
                    "{},{},{},{},{},{},{},{}",
                    r.weight,
                    r.index_a,
                    r.index_b,
                    csv_f(r.y),
                    csv_f(r.inner_product),
                    csv_f(r.norm_a),
                    csv_f(r.norm_b),
                    csv_f(r.normalized)
                );
            }
            Ok(s)
        }
    }
}

struct Check {
    name: &'static str,
    weight: Option<u32>,
    index: Option<usize>,
    pass: bool,
    measured: f64,
}

fn cmd_report(cfg: &RunConfig) -> Result<(String, bool)> {
    let mut checks: Vec<Check> = Vec::new();
    let push = |checks: &mut Vec<Check>, name, weight, index, pass, measured| {
        checks.push(Check { name, weight, index, pass, measured });
    };

    let weights = active_weights(cfg);
    // term-weight concentration: the normalized peak ratio stays in its band
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for &w in weights.iter().chain([200].iter().filter(|_| weights.is_empty())) {
        let k = w as f64;
        for i in 0..200 {
            let xi = 5.0 * k * (1e-4f64).powf(1.0 - i as f64 / 199.0);
            let r = peak_sandwich_ratio(w, xi);
            lo = lo.min(r);
            hi = hi.max(r);
        }
    }
    push(&mut checks, "sandwich_min", None, None, lo >= WEIGHT_BOUND_RATIO_BAND.0, lo);
    push(&mut checks, "sandwich_max", None, None, hi <= WEIGHT_BOUND_RATIO_BAND.1, hi);

    let mut unit_values = Vec::new();
    for &w in &weights {
        let forms = forms_with_l(cfg, w)?;
        for (f, l) in &forms {
            let rep = l_value(f)?;
            push(&mut checks, "lvalue_spread", Some(w), Some(f.index), rep.spread <= LVALUE_SPREAD_MAX, rep.spread);
            push(&mut checks, "proxy_gap", Some(w), Some(f.index), rep.proxy_gap.abs() <= PROXY_GAP_BAND, rep.proxy_gap);

            let rn = restricted_norm(f, 1.0, cfg.epsilon, *l)?;
            let q = quadrature_norm(f, 1.0, rn.window.n_max.max(8), 0, *l)?;
            let dev = (rn.value - q).abs();
            push(
                &mut checks,
                "parseval_quadrature",
                Some(w),
                Some(f.index),
                dev <= rn.tail_bound + QUAD_REL_TOL * q.abs(),
                dev,
            );
            unit_values.push(rn.value);

            let profile = sweep(f, cfg.delta, cfg.grid_size, cfg.epsilon, *l)?;
            push(&mut checks, "sweep_sup", Some(w), Some(f.index), profile.sup_value <= SWEEP_SUP_MAX, profile.sup_value);

            let (xs, thetas) = shiu_grid(&[], &[]);
            let mut worst = 0.0f64;
            for &x in &xs {
                for &t in &thetas {
                    let z = x.powf(t);
                    if (x + z).floor() as u64 >= f.table_len() as u64 {
                        continue;
                    }
                    worst = worst.max(interval_report(f, x, z)?.ratio);
                }
            }
            push(&mut checks, "shiu_max_ratio", Some(w), Some(f.index), worst <= SHIU_RATIO_MAX, worst);
        }
        if forms.len() >= 2 {
            for i in 0..forms.len() {
                for j in i + 1..forms.len() {
                    let (fi, li) = &forms[i];
                    let (fj, lj) = &forms[j];
                    let ip = cross_inner_product(fi, fj, 1.0, cfg.epsilon, *li, *lj)?.value;
                    let ni = restricted_norm(fi, 1.0, cfg.epsilon, *li)?.value;
                    let nj = restricted_norm(fj, 1.0, cfg.epsilon, *lj)?.value;
                    let rho = (ip / (ni * nj).sqrt()).abs();
                    push(&mut checks, "cross_bound", Some(w), Some(fi.index * 100 + fj.index), rho < 1.0, rho);
                }
            }
        }
    }
    // mean of the unit-height norms over every available form stays in its
    // band; individual small weights legitimately overshoot the limit value
    if !unit_values.is_empty() {
        let mean = unit_values.iter().sum::<f64>() / unit_values.len() as f64;
        let (m_lo, m_hi) = UNIT_MEAN_BAND;
        push(&mut checks, "unit_mean", None, None, (m_lo..=m_hi).contains(&mean), mean);
    }

    let all_pass = checks.iter().all(|c| c.pass);
    let report = match cfg.output {
        OutputFormat::Json => {
            let rows: Vec<_> = checks
                .iter()
                .map(|c| {
                    serde_json::json!({
                        "check": c.name,
                        "weight": c.weight,
                        "index": c.index,
                        "pass": c.pass,
                        "measured": c.measured,
                    })
                })
                .collect();
            json_report("report", serde_json::json!({ "checks": rows, "pass": all_pass }))?
        }
        OutputFormat::Csv => {
            let mut s = String::from("check,weight,index,pass,measured\n");
            for c in &checks {
                let _ = writeln!(
                    s,
                    "{},{},{},{},{}",
                    c.name,
                    c.weight.map_or(String::new(), |w| w.to_string()),
                    c.index.map_or(String::new(), |i| i.to_string()),
                    if c.pass { "pass" } else { "FAIL" },
                    csv_f(c.measured)
                );
            }
            let _ = writeln!(s, "overall,,,{},", if all_pass { "pass" } else { "FAIL" });
            s
        }
    };
    Ok((report, all_pass))
}

fn json_report(command: &str, payload: serde_json::Value) -> Result<String> {
    let mut doc = serde_json::Map::new();
    doc.insert("format_version".into(), 1.into());
    doc.insert("command".into(), command.into());
    if let serde_json::Value::Object(body) = payload {
        doc.extend(body);
    }
    Ok(serde_json::to_string_pretty(&serde_json::Value::Object(doc))? + "\n")
}
