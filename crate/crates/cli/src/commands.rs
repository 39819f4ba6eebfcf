use std::path::{Path, PathBuf};

use lorentz_core::lorentz::{quasi_norm, quasi_triangle_constant};
use lorentz_core::numeric::stream_rng;
use lorentz_core::rademacher::khintchine_estimate;
use lorentz_core::seqspace::{rearrange, rearrange_on_support};
use lorentz_core::singular::{
    build_construction, default_n_list, dyadic_chain_growth, growth_curve, BlockSubspaceSpec, GrowthTable,
    ReferenceSeq,
};
use lorentz_core::stepfun::{transfer_check, weak_transfer_pair};
use lorentz_core::widths::{bernstein_lower_curve, WidthConfig};
use lorentz_core::{Exponent, Exponents, Seq};
use rand::Rng;

use crate::format::{num, Document, Format, RunConfig, Table};
use crate::svg::{LineChart, Series};
use crate::{
    BernsteinArgs, CliError, Command, ExitKind, GrowthArgs, GrowthSource, KhintchineArgs, NormArgs, OutputArgs,
    RearrangeArgs, TransferArgs,
};

/// Everything a command produced.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub primary: Document,
    pub format: Format,
    pub out: Option<PathBuf>,
    /// Printed instead of the rendered document when writing CSV to stdout.
    pub plain: Option<String>,
    /// Further files, already rendered.
    pub files: Vec<(PathBuf, String)>,
    /// Diagnostics for standard error.
    pub notes: Vec<String>,
}

impl Outcome {
    fn new(primary: Document, output: &OutputArgs) -> Self {
        Self {
            primary,
            format: output.format,
            out: output.out.clone(),
            plain: None,
            files: Vec::new(),
            notes: Vec::new(),
        }
    }

    /// Writes all files and returns what belongs on standard output.
    pub fn write(&self) -> Result<String, CliError> {
        for (path, body) in &self.files {
            write_file(path, body)?;
        }
        let rendered = self.primary.render(self.format);
        match &self.out {
            Some(path) => {
                write_file(path, &rendered)?;
                Ok(String::new())
            }
            None => Ok(match (&self.plain, self.format) {
                (Some(p), Format::Csv) => format!("{p}\n"),
                _ => rendered,
            }),
        }
    }
}

fn write_file(path: &Path, body: &str) -> Result<(), CliError> {
    std::fs::write(path, body).map_err(|e| CliError::io(path, e))
}

fn read_seq(path: &Path) -> Result<Seq, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let values: Vec<f64> =
        serde_json::from_str(&text).map_err(|e| CliError::io(path, format!("expected a JSON array of reals: {e}")))?;
    Seq::new(values).map_err(|e| CliError::io(path, e))
}

fn exponents(p: f64, q: Exponent) -> Result<Exponents, CliError> {
    Ok(Exponents::with(p, q)?)
}

/// `path` with `suffix` appended to its stem and extension `ext`.
fn sibling(path: &Path, suffix: &str, ext: &str) -> PathBuf {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("out");
    path.with_file_name(format!("{stem}{suffix}.{ext}"))
}

pub fn execute(command: &Command) -> Result<Outcome, CliError> {
    match command {
        Command::Norm(a) => norm(a),
        Command::Bernstein(a) => bernstein(a),
        Command::DemoGrowth(a) => demo_growth(a),
        Command::Khintchine(a) => khintchine(a),
        Command::TransferCheck(a) => transfer(a),
        Command::Rearrange(a) => rearrange_cmd(a),
    }
}

fn norm(args: &NormArgs) -> Result<Outcome, CliError> {
    let e = exponents(args.p, args.q)?;
    let u = read_seq(&args.input)?;
    let value = quasi_norm(&u, e).value();
    let config = RunConfig::new("norm")
        .set("input", args.input.display())
        .set("p", num(args.p))
        .set("q", args.q);
    let mut table = Table::new(&["p", "q", "norm"]);
    table.push(vec![args.p.into(), args.q.to_string().into(), value.into()]);
    let mut out = Outcome::new(Document { config, table }, &args.output);
    out.plain = Some(num(value));
    Ok(out)
}

fn bernstein(args: &BernsteinArgs) -> Result<Outcome, CliError> {
    let config = WidthConfig {
        seed: args.seed,
        restarts: args.restarts,
        ..WidthConfig::default()
    };
    if args.restarts == 0 {
        return Err(CliError::new(ExitKind::Usage, "--restarts must be at least 1"));
    }
    let curve = bernstein_lower_curve(args.n_max, args.p, args.q, args.r, &config)?;
    let run = RunConfig::new("bernstein")
        .set("p", num(args.p))
        .set("q", args.q)
        .set("r", args.r)
        .set("n_max", args.n_max)
        .set("seed", args.seed)
        .set("restarts", args.restarts)
        .set("subspace", "rademacher")
        .set("alpha_bound", "empirical-khintchine-witnesses")
        .set("c_up_q", num(curve.khintchine_q.c_up_witness))
        .set("c_low_r", num(curve.khintchine_r.c_low_witness));
    let mut table = Table::new(&["n", "value", "alpha_bound", "seed", "restarts"]);
    for row in &curve.rows {
        table.push(vec![
            row.n.into(),
            row.value.into(),
            row.alpha_bound.unwrap_or(f64::NAN).into(),
            row.seed.into(),
            row.restarts.into(),
        ]);
    }
    let header = run.header_line();
    let mut out = Outcome::new(Document { config: run, table }, &args.output);
    out.notes.push(format!(
        "alpha_bound = {} uses empirical Khintchine witnesses (C_up(p,q) = {}, C_low(p,r) = {}), not the true constants",
        num(curve.alpha_bound),
        num(curve.khintchine_q.c_up_witness),
        num(curve.khintchine_r.c_low_witness)
    ));
    if let Some(path) = &args.svg {
        let chart = LineChart {
            title: format!("Rademacher subspace ratio, p={} q={} r={}", num(args.p), args.q, args.r),
            x_label: "n".into(),
            y_label: "min ‖u‖_{p,r} / ‖u‖_{p,q}".into(),
            log_x: false,
            series: vec![
                Series {
                    name: "value".into(),
                    points: curve.rows.iter().map(|r| (r.n as f64, r.value)).collect(),
                    dashed: false,
                },
                Series {
                    name: "alpha_bound".into(),
                    points: curve.rows.iter().map(|r| (r.n as f64, curve.alpha_bound)).collect(),
                    dashed: true,
                },
            ],
        };
        out.files.push((path.clone(), chart.render(&header)));
    }
    Ok(out)
}

fn growth_table(args: &GrowthArgs) -> Result<(GrowthTable, RunConfig, Option<String>), CliError> {
    let e = Exponents::new(args.p, args.q)?;
    let base = RunConfig::new("demo-growth")
        .set("p", num(args.p))
        .set("q", num(args.q))
        .set("r", args.r)
        .set("N_max", args.n_max)
        .set("fit_from", args.fit_from);
    match args.source {
        GrowthSource::Chain => {
            let table = dyadic_chain_growth(e, args.r, &default_n_list(args.n_max), args.fit_from)?;
            Ok((table, base.set("source", "dyadic-chain"), None))
        }
        GrowthSource::Construction => {
            let t = quasi_triangle_constant(e).t;
            let delta = args.delta.unwrap_or(0.25 / t);
            let gamma = args.gamma.unwrap_or(2.0 / args.q);
            let a_tilde = ReferenceSeq::log_decay(e, gamma, 0.5)?;
            let state = build_construction(&BlockSubspaceSpec::DyadicFlat, e, args.n_max, delta, &a_tilde)?;
            let n_list: Vec<usize> = (1..=args.n_max).collect();
            let table = growth_curve(&state, args.r, &n_list, args.fit_from)?;
            let config = base
                .set("source", "construction")
                .set("delta", num(delta))
                .set("gamma", num(gamma))
                .set("T", num(t))
                .set("n_N", state.n(state.n_stages()));
            Ok((table, config, Some(state.to_json())))
        }
    }
}

fn demo_growth(args: &GrowthArgs) -> Result<Outcome, CliError> {
    let (growth, run, state) = growth_table(args)?;
    let header = run.header_line();
    let mut table = Table::new(&["N", "norm_pq", "norm_pr"]);
    for row in &growth.rows {
        table.push(vec![row.n.into(), row.norm_q.into(), row.norm_r.into()]);
    }
    let mut fit = Table::new(&["A", "B", "R2", "points", "fit_from", "last_decade_spread"]);
    let spread = growth.r_spread((args.n_max / 10).max(1)).unwrap_or(f64::NAN);
    match growth.fit {
        Some(f) => fit.push(vec![f.a.into(), f.b.into(), f.r2.into(), f.points.into(), args.fit_from.into(), spread.into()]),
        None => fit.push(vec![f64::NAN.into(), f64::NAN.into(), f64::NAN.into(), 0usize.into(), args.fit_from.into(), spread.into()]),
    }
    let fit_doc = Document {
        config: run.clone(),
        table: fit,
    };
    let mut out = Outcome::new(Document { config: run, table }, &args.output);
    out.notes.push(match growth.fit {
        Some(f) => format!(
            "fit ‖z_N‖_{{p,q}}^q ≈ A ln N − B over N ≥ {}: A = {}, B = {}, R² = {}; last-decade max/min of ‖z_N‖_{{p,r}} = {}",
            args.fit_from,
            num(f.a),
            num(f.b),
            num(f.r2),
            num(spread)
        ),
        None => format!("fewer than two N ≥ {} — no fit", args.fit_from),
    });
    if let Some(path) = &args.output.out {
        let ext = match args.output.format {
            Format::Csv => "csv",
            Format::Json => "json",
        };
        out.files.push((sibling(path, "_fit", ext), fit_doc.render(args.output.format)));
        let chart = LineChart {
            title: format!("‖z_N‖, p={} q={} r={}", num(args.p), num(args.q), args.r),
            x_label: "N".into(),
            y_label: "norm".into(),
            log_x: true,
            series: vec![
                Series {
                    name: format!("ℓ_{{p,q}} (q={})", num(args.q)),
                    points: growth.rows.iter().map(|r| (r.n as f64, r.norm_q)).collect(),
                    dashed: false,
                },
                Series {
                    name: format!("ℓ_{{p,r}} (r={})", args.r),
                    points: growth.rows.iter().map(|r| (r.n as f64, r.norm_r)).collect(),
                    dashed: false,
                },
            ],
        };
        out.files.push((sibling(path, "", "svg"), chart.render(&header)));
    } else {
        out.notes.push(fit_doc.render(Format::Csv).trim_end().to_string());
    }
    if let (Some(path), Some(json)) = (&args.state, state) {
        out.files.push((path.clone(), json));
    }
    Ok(out)
}

fn khintchine(args: &KhintchineArgs) -> Result<Outcome, CliError> {
    let e = exponents(args.p, args.q)?;
    let est = khintchine_estimate(e, args.n_max, args.method, args.seed, args.restarts)?;
    let config = RunConfig::new("khintchine")
        .set("p", num(args.p))
        .set("q", args.q)
        .set("n_max", args.n_max)
        .set("method", args.method)
        .set("seed", args.seed)
        .set("restarts", args.restarts);
    let mut table = Table::new(&[
        "p",
        "q",
        "N",
        "c_low_witness",
        "c_up_witness",
        "method",
        "seed",
        "evaluations",
    ]);
    table.push(vec![
        args.p.into(),
        args.q.to_string().into(),
        args.n_max.into(),
        est.c_low_witness.into(),
        est.c_up_witness.into(),
        args.method.to_string().into(),
        args.seed.into(),
        est.evaluations.into(),
    ]);
    Ok(Outcome::new(Document { config, table }, &args.output))
}

fn random_seq(rng: &mut impl Rng, max_level: u32) -> (Seq, u32) {
    let level = rng.gen_range(1..=max_level);
    let len = rng.gen_range(1..=1usize << level);
    let values = (0..len)
        .map(|_| {
            if rng.gen::<f64>() < 0.2 {
                0.0
            } else {
                let m = rng.gen_range(-4.0..2.0f64).exp();
                if rng.gen() {
                    m
                } else {
                    -m
                }
            }
        })
        .collect();
    (Seq::new(values).expect("finite"), level)
}

fn smallest_level(len: usize) -> u32 {
    len.max(1).next_power_of_two().trailing_zeros()
}

fn transfer(args: &TransferArgs) -> Result<Outcome, CliError> {
    let e = exponents(args.p, args.q)?;
    let mut cases = Vec::new();
    let mut config = RunConfig::new("transfer-check").set("p", num(args.p)).set("q", args.q);
    if let Some(path) = &args.input {
        let a = read_seq(path)?;
        let level = args.level.unwrap_or_else(|| smallest_level(a.len()));
        config = config.set("input", path.display()).set("level", level);
        cases.push((a, level));
    } else {
        if args.n_max == 0 {
            return Err(CliError::new(ExitKind::Usage, "--n-max must be at least 1"));
        }
        config = config
            .set("n_max", args.n_max)
            .set("budget", args.budget)
            .set("seed", args.seed);
        let mut rng = stream_rng(args.seed, 0);
        cases.extend((0..args.budget).map(|_| random_seq(&mut rng, args.n_max)));
    }

    let mut notes = Vec::new();
    let table = match args.q {
        Exponent::Infinite => {
            let mut t = Table::new(&["level", "length", "seq_norm", "scaled_fn_norm", "rel_diff"]);
            let mut worst = 0.0f64;
            for (a, level) in &cases {
                let (s, f) = weak_transfer_pair(a, *level, args.p)?;
                let rel = if s == 0.0 { 0.0 } else { (s - f).abs() / s };
                worst = worst.max(rel);
                t.push(vec![(*level as usize).into(), a.len().into(), s.into(), f.into(), rel.into()]);
            }
            notes.push(format!("largest relative difference: {}", num(worst)));
            t
        }
        Exponent::Finite(_) => {
            let mut t = Table::new(&[
                "level",
                "length",
                "seq_norm",
                "scaled_fn_norm",
                "published_c",
                "published_ok",
                "k",
                "K",
                "bounds_ok",
            ]);
            let (mut published_bad, mut bounds_bad) = (0usize, 0usize);
            for (a, level) in &cases {
                let c = transfer_check(a, *level, e)?;
                published_bad += usize::from(!(c.lower_ok && c.upper_ok));
                bounds_bad += usize::from(!c.bounds_ok);
                t.push(vec![
                    (*level as usize).into(),
                    a.len().into(),
                    c.seq_norm.into(),
                    c.scaled_fn_norm.into(),
                    c.lower_constant.into(),
                    (c.lower_ok && c.upper_ok).into(),
                    c.bounds.0.into(),
                    c.bounds.1.into(),
                    c.bounds_ok.into(),
                ]);
            }
            notes.push(format!(
                "{} of {} cases violate c‖a‖ ≤ 2^(n/p)‖A‖ ≤ ‖a‖; {} violate k‖a‖ ≤ 2^(n/p)‖A‖ ≤ K‖a‖",
                published_bad,
                cases.len(),
                bounds_bad
            ));
            t
        }
    };
    let mut out = Outcome::new(Document { config, table }, &args.output);
    out.notes = notes;
    Ok(out)
}

fn rearrange_cmd(args: &RearrangeArgs) -> Result<Outcome, CliError> {
    let u = read_seq(&args.input)?;
    let dec = rearrange(&u);
    let sup = rearrange_on_support(&u);
    let config = RunConfig::new("rearrange").set("input", args.input.display());
    let mut table = Table::new(&["j", "value", "decreasing", "on_support"]);
    for j in 1..=u.len() {
        table.push(vec![j.into(), u.at(j).into(), dec.at(j).into(), sup.at(j).into()]);
    }
    Ok(Outcome::new(Document { config, table }, &args.output))
}
