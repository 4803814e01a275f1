//! The subcommands.

use std::path::PathBuf;

use clap::{Args, Subcommand};
use horseshoe::bowen::{complexity_slope, cover_series, CoverConfig, CoverEstimate, TorusSystem};
use horseshoe::certify::{theorem_a_pipeline, theorem_b_pipeline, DecomposeConfig, PipelineConfig, ScheduleSource};
use horseshoe::closing::{certify_periodic_point, harvest, HarvestConfig, HyperbolicPoint, LocateConfig, ReturnThresholds};
use horseshoe::counterexample::{
    convergents, counterexample_complexity, denjoy_koksma_gap, det4, skew_jacobian, SkewPoint, SuspensionPoint,
};
use horseshoe::hetero::{grow, verdict, EntropyVerdict, HeteroCertificate, HeteroConfig};
use horseshoe::pliss::{check_hypotheses, pliss_bound, pliss_indices, PlissInput};
use horseshoe::schedule::{build_schedule, threshold_check, LogTower, Schedule, ScheduleInput};
use horseshoe::{Map, Point};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{Mode, RunConfig};
use crate::{Command, Failure, Outcome, Table};

pub fn dispatch(cmd: &Command, cfg: &RunConfig) -> Result<Outcome, Failure> {
    match cmd {
        Command::Schedule(a) => schedule(a, cfg),
        Command::Bowen(a) => bowen(a, cfg),
        Command::Pliss(a) => pliss(a, cfg),
        Command::Close(a) => close(a, cfg),
        Command::Hetero(a) => hetero(a, cfg),
        Command::Certify(CertifyCommand::TheoremA(a)) => theorem_a(a, cfg),
        Command::Certify(CertifyCommand::TheoremB(a)) => theorem_b(a, cfg),
        Command::Counterexample(a) => counterexample(a, cfg),
    }
}

fn num(v: f64) -> String {
    format!("{v}")
}

fn parse_point(s: &str) -> Result<Point, Failure> {
    let bad = || Failure::config(format!("expected a point `x,y`, got {s:?}"));
    let (x, y) = s.split_once(',').ok_or_else(bad)?;
    let x: f64 = x.trim().parse().map_err(|_| bad())?;
    let y: f64 = y.trim().parse().map_err(|_| bad())?;
    if !(x.is_finite() && y.is_finite()) {
        return Err(bad());
    }
    Ok(Point::new(x, y))
}

// schedule

#[derive(Debug, Clone, Args, Serialize)]
pub struct ScheduleArgs {
    #[arg(long = "A")]
    #[serde(rename = "A")]
    pub a: f64,
    /// Second-derivative bound; defaults to `A`.
    #[arg(long = "D")]
    #[serde(rename = "D")]
    pub d: Option<f64>,
    #[arg(long)]
    pub h: f64,
    #[arg(long)]
    pub eps: f64,
    #[arg(long)]
    pub delta: Option<f64>,
    /// Time horizon to test against the threshold.
    #[arg(long, conflicts_with = "ln_n")]
    pub n: Option<f64>,
    /// Natural log of the time horizon, for horizons beyond f64.
    #[arg(long)]
    pub ln_n: Option<f64>,
}

/// Relative excess of `h` over `log A` absorbed as rounding of `A`.
const H_ROUNDING: f64 = 1e-3;

fn cascade(cfg: &RunConfig, a: f64, d: f64, h: f64, eps: f64, delta: Option<f64>, n: Option<LogTower>) -> Result<Schedule, Failure> {
    Ok(build_schedule(&ScheduleInput { a, d, h, eps, delta, n_hint: n, constants: cfg.constants.schedule() })?)
}

fn schedule(args: &ScheduleArgs, cfg: &RunConfig) -> Result<Outcome, Failure> {
    let n = args.n.map(LogTower::from_f64).or(args.ln_n.map(LogTower::from_ln));
    // `--A 2.718 --h 1` means A = e: an `A` rounded to four digits may put
    // `h` just above `log A`
    let ln_a = args.a.ln();
    let clamped = args.h > ln_a && args.h <= ln_a * (1.0 + H_ROUNDING);
    let h = if clamped { ln_a } else { args.h };
    let s = cascade(cfg, args.a, args.d.unwrap_or(args.a), h, args.eps, args.delta, n)?;
    let mut t = Table::new(&["k", "q", "l", "neg_ln_lambda", "neg_ln_xi"]);
    let cell = |v: Option<&LogTower>| v.map_or(String::new(), |v| v.to_string());
    for k in 0..s.q.len() {
        t.push(vec![k.to_string(), cell(s.q.get(k)), cell(s.l.get(k)), cell(s.lambda_neg_log.get(k)), cell(s.xi_neg_log.get(k))]);
    }
    let result = json!({
        "schedule": s,
        "h_clamped_to_log_a": clamped,
        "top_level_log_rate": s.top_level_log_rate(),
        "threshold": n.map(|n| threshold_check(&s, n)),
    });
    Ok(Outcome::new(args, result).with_table(t))
}

// bowen

#[derive(Debug, Clone, Args, Serialize)]
pub struct BowenArgs {
    #[arg(long, default_value_t = 0.05)]
    pub delta: f64,
    #[arg(long, default_value_t = 0.1)]
    pub eps: f64,
    #[arg(long, default_value_t = 1)]
    pub n_min: usize,
    #[arg(long, default_value_t = 14)]
    pub n_max: usize,
    /// Also compute the separated-set lower bound.
    #[arg(long)]
    pub separated: bool,
}

fn cover_rows<P>(rows: &[CoverEstimate<P>]) -> (Value, Table) {
    let mut t = Table::new(&["n", "upper", "greedy_upper", "lower", "covered_mass", "mass_lo", "mass_hi", "saturated"]);
    let mut js = Vec::new();
    for r in rows {
        t.push(vec![
            r.n.to_string(),
            r.upper.to_string(),
            r.greedy_upper.to_string(),
            r.lower.map_or(String::new(), |v| v.to_string()),
            num(r.covered_mass),
            num(r.mass_band[0]),
            num(r.mass_band[1]),
            r.saturated.to_string(),
        ]);
        js.push(json!({
            "n": r.n, "upper": r.upper, "greedy_upper": r.greedy_upper, "lower": r.lower,
            "covered_mass": r.covered_mass, "mass_band": r.mass_band, "saturated": r.saturated,
        }));
    }
    (Value::Array(js), t)
}

/// Slope over all rows and over the unsaturated ones; `None` below four points.
fn slopes<P>(rows: &[CoverEstimate<P>]) -> (Option<f64>, Option<f64>) {
    let all: Vec<(usize, f64)> = rows.iter().map(|r| (r.n, r.upper as f64)).collect();
    let fresh: Vec<(usize, f64)> = rows.iter().filter(|r| !r.saturated).map(|r| (r.n, r.upper as f64)).collect();
    (complexity_slope(&all).ok(), complexity_slope(&fresh).ok())
}

fn bowen(args: &BowenArgs, cfg: &RunConfig) -> Result<Outcome, Failure> {
    if args.n_min == 0 || args.n_min > args.n_max {
        return Err(Failure::config("need 1 <= n-min <= n-max"));
    }
    let map = cfg.surface_map();
    let cover = CoverConfig { delta: args.delta, eps: args.eps, samples: cfg.grid.samples, seed: cfg.seed, separated: args.separated };
    let ns: Vec<usize> = (args.n_min..=args.n_max).collect();
    let rows = cover_series(&TorusSystem { map: &map }, &ns, &cover)?;
    let (js, t) = cover_rows(&rows);
    let (slope, unsaturated) = slopes(&rows);
    let result = json!({ "rows": js, "complexity_slope": slope, "unsaturated_slope": unsaturated });
    Ok(Outcome::new(args, result).with_table(t))
}

// pliss

#[derive(Debug, Clone, Args, Serialize)]
pub struct PlissArgs {
    /// Sequence `a_0 .. a_{n-1}`: numbers separated by commas or newlines,
    /// with an optional header line.
    #[arg(long)]
    pub csv: PathBuf,
    #[arg(long = "N")]
    #[serde(rename = "N")]
    pub n_cap: f64,
    #[arg(long)]
    pub theta1: f64,
    #[arg(long)]
    pub theta2: f64,
    #[arg(long)]
    pub eta: f64,
    #[arg(long)]
    pub l: f64,
}

fn read_sequence(path: &PathBuf) -> Result<Vec<f64>, Failure> {
    let io = |e: csv::Error| Failure::config(format!("reading {}: {e}", path.display()));
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).flexible(true).trim(csv::Trim::All).from_path(path).map_err(io)?;
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(io)?;
        let fields: Vec<&str> = rec.iter().filter(|f| !f.is_empty()).collect();
        let parsed: Result<Vec<f64>, _> = fields.iter().map(|f| f.parse::<f64>()).collect();
        match parsed {
            Ok(v) => out.extend(v),
            Err(_) if i == 0 => continue,
            Err(_) => return Err(Failure::config(format!("{}: non-numeric entry on line {}", path.display(), i + 1))),
        }
    }
    if out.iter().any(|v| !v.is_finite()) {
        return Err(Failure::config("sequence entries must be finite"));
    }
    Ok(out)
}

fn pliss(args: &PlissArgs, cfg: &RunConfig) -> Result<Outcome, Failure> {
    let a = read_sequence(&args.csv)?;
    if a.is_empty() {
        return Err(Failure::config("empty sequence"));
    }
    let inp = PlissInput {
        a,
        n_cap: args.n_cap,
        theta0: cfg.constants.theta0,
        theta1: args.theta1,
        theta2: args.theta2,
        eta: args.eta,
        l: args.l,
    };
    let hyp = check_hypotheses(&inp);
    let idx = pliss_indices(&inp);
    let n = inp.a.len();
    let bound = pliss_bound(n, args.theta1, args.theta2);
    let mut t = Table::new(&["i", "a", "good"]);
    let mut good = vec![false; n];
    for &i in &idx {
        good[i] = true;
    }
    for (i, v) in inp.a.iter().enumerate() {
        t.push(vec![i.to_string(), num(*v), u8::from(good[i]).to_string()]);
    }
    let result = json!({
        "n": n,
        "hypotheses": hyp,
        "hypotheses_hold": hyp.all(),
        "indices": idx,
        "count": idx.len(),
        "bound": bound,
        "meets_bound": idx.len() as f64 >= bound,
    });
    Ok(Outcome::new(args, result).with_table(t))
}

// close

#[derive(Debug, Clone, Args, Serialize)]
pub struct CloseArgs {
    #[arg(long, default_value_t = 100)]
    pub seeds: usize,
    #[arg(long, default_value_t = 400)]
    pub q: usize,
    /// Entropy level for the strict-mode thresholds; defaults to `log A / 2`.
    #[arg(long)]
    pub h: Option<f64>,
    #[arg(long, default_value_t = 0.1)]
    pub eps: f64,
}

/// Toy thresholds in exploration mode, cascade-derived ones in strict mode.
fn harvest_config(map: &Map, seeds: usize, q: usize, h: Option<f64>, eps: f64, cfg: &RunConfig) -> Result<HarvestConfig, Failure> {
    let mut hc = HarvestConfig::toy(seeds, q, cfg.seed);
    if cfg.mode == Mode::Strict {
        let b = map.norm_bounds();
        let h = h.unwrap_or(b.a.ln() / 2.0);
        let s = cascade(cfg, b.a, b.d, h, eps, None, None)?;
        hc.thresholds = ReturnThresholds::paper(s.d, s.big_delta, cfg.constants.c1, b.a, cfg.constants.theta0, q);
    }
    Ok(hc)
}

fn point_json(p: &HyperbolicPoint) -> Value {
    json!({
        "z": p.z, "period": p.period, "trace": p.trace(), "eig_s": p.eig_s, "eig_u": p.eig_u,
        "Es": p.es, "Eu": p.eu, "alpha": p.alpha, "r": p.r, "lip_s": p.lip_s, "lip_u": p.lip_u,
        "residual": p.residual, "ws_vertices": p.ws.len(), "wu_vertices": p.wu.len(), "violations": p.violations(),
    })
}

fn point_table(points: &[HyperbolicPoint]) -> Table {
    let mut t = Table::new(&["x", "y", "period", "trace", "eig_s", "eig_u", "alpha", "residual", "lip_s", "lip_u"]);
    for p in points {
        t.push(vec![
            num(p.z.x),
            num(p.z.y),
            p.period.to_string(),
            num(p.trace()),
            num(p.eig_s),
            num(p.eig_u),
            num(p.alpha),
            num(p.residual),
            num(p.lip_s),
            num(p.lip_u),
        ]);
    }
    t
}

fn close(args: &CloseArgs, cfg: &RunConfig) -> Result<Outcome, Failure> {
    let map = cfg.surface_map();
    let hc = harvest_config(&map, args.seeds, args.q, args.h, args.eps, cfg)?;
    let h = harvest(&map, &hc);
    let result = json!({
        "thresholds": hc.thresholds,
        "attempts": h.attempts.len(),
        "pairs_found": h.pairs_found(),
        "points": h.points.iter().map(point_json).collect::<Vec<_>>(),
        "distinct_orbits": h.orbits(&map),
        "invariance": h.invariance,
        "outcomes": h.attempts.iter().map(|a| &a.outcome).collect::<Vec<_>>(),
        "full_points": h.points,
    });
    Ok(Outcome::new(args, result).with_table(point_table(&h.points)))
}

// hetero

#[derive(Debug, Clone, Args, Serialize)]
pub struct HeteroArgs {
    /// Periodic point `x,y,period`; repeatable. Without it, points are harvested.
    #[arg(long)]
    pub periodic: Vec<String>,
    #[arg(long, default_value_t = 20)]
    pub seeds: usize,
    #[arg(long, default_value_t = 400)]
    pub q: usize,
    /// Manifold arclength per side.
    #[arg(long, default_value_t = 1.5)]
    pub grow_length: f64,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub r: Option<f64>,
    /// Smallest accepted crossing angle, in radians.
    #[arg(long)]
    pub transversality_floor: Option<f64>,
}

fn hetero_config(cfg: &RunConfig, alpha: Option<f64>, r: Option<f64>, floor: Option<f64>) -> Result<HeteroConfig, Failure> {
    let d = HeteroConfig::default();
    Ok(HeteroConfig {
        alpha: alpha.unwrap_or(d.alpha),
        r: r.unwrap_or(d.r),
        c1: cfg.constants.c1,
        c2: cfg.constants.c2,
        transversality_floor: floor.unwrap_or(d.transversality_floor),
    }
    .validated()?)
}

fn certificate_json(c: &HeteroCertificate) -> Value {
    let end = |p: &HyperbolicPoint| json!({ "z": p.z, "period": p.period, "eig_s": p.eig_s, "eig_u": p.eig_u, "alpha": p.alpha });
    json!({ "p": end(&c.p), "q": end(&c.q), "su_crossing": c.su_crossing, "us_crossing": c.us_crossing })
}

/// The verdict with grown polylines left out of the certificate.
fn verdict_json(v: &EntropyVerdict) -> Value {
    json!({
        "verdict": v.verdict,
        "mechanism": v.mechanism,
        "certificate": v.certificate.as_ref().map(certificate_json),
        "threshold_report": v.threshold_report,
        "diagnostics": v.diagnostics,
    })
}

fn hetero(args: &HeteroArgs, cfg: &RunConfig) -> Result<Outcome, Failure> {
    let map = cfg.surface_map();
    let hcfg = hetero_config(cfg, args.alpha, args.r, args.transversality_floor)?;
    if !(args.grow_length > 0.0) {
        return Err(Failure::config("grow-length must be positive"));
    }
    let points: Vec<HyperbolicPoint> = if args.periodic.is_empty() {
        harvest(&map, &harvest_config(&map, args.seeds, args.q, None, 0.1, cfg)?).points
    } else {
        let mut v = Vec::new();
        for s in &args.periodic {
            let (xy, p) = s.rsplit_once(',').ok_or_else(|| Failure::config(format!("expected `x,y,period`, got {s:?}")))?;
            let p: usize = p.trim().parse().map_err(|_| Failure::config(format!("bad period in {s:?}")))?;
            v.push(certify_periodic_point(&map, parse_point(xy)?, p, &LocateConfig::default())?);
        }
        v
    };
    let grown = points.iter().map(|p| grow(&map, p, args.grow_length)).collect::<Result<Vec<_>, _>>()?;
    let v = verdict(&grown, &hcfg);
    let result = json!({
        "hetero": hcfg,
        "points": points.iter().map(point_json).collect::<Vec<_>>(),
        "verdict": verdict_json(&v),
    });
    Ok(Outcome::new(args, result).with_table(point_table(&points)))
}

// certify

#[derive(Debug, Subcommand)]
pub enum CertifyCommand {
    /// Complexity growth implies a horseshoe.
    TheoremA(TheoremAArgs),
    /// Derivative growth along a sparse orbit implies a horseshoe.
    TheoremB(TheoremBArgs),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct PipelineArgs {
    /// Orbit length for the return-pair search.
    #[arg(long, default_value_t = 400)]
    pub q: usize,
    #[arg(long, default_value_t = 1.5)]
    pub grow_length: f64,
    #[arg(long, default_value_t = 0.5)]
    pub sparse_c: f64,
    #[arg(long, default_value_t = 0.05)]
    pub sparse_delta: f64,
    #[arg(long, default_value_t = 64)]
    pub sparse_trials: usize,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub r: Option<f64>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct TheoremAArgs {
    #[arg(long)]
    pub h: f64,
    #[arg(long, default_value_t = 0.05)]
    pub delta: f64,
    #[arg(long, default_value_t = 0.1)]
    pub eps: f64,
    #[arg(long)]
    pub n: usize,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct TheoremBArgs {
    /// Orbit start `x,y`.
    #[arg(long)]
    pub x: String,
    #[arg(long)]
    pub h: f64,
    #[arg(long, default_value_t = 0.1)]
    pub eps: f64,
    #[arg(long)]
    pub n: usize,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
}

fn pipeline_config(p: &PipelineArgs, cfg: &RunConfig) -> Result<PipelineConfig, Failure> {
    Ok(PipelineConfig {
        decompose: DecomposeConfig {
            grid: cfg.grid.cells,
            seeds_per_level: cfg.grid.seeds_per_level,
            theta0: cfg.constants.theta0,
            harvest: HarvestConfig::toy(0, p.q, cfg.seed),
        },
        samples: cfg.grid.samples,
        seed: cfg.seed,
        hetero: hetero_config(cfg, p.alpha, p.r, None)?,
        grow_length: p.grow_length,
        sparse_c: p.sparse_c,
        sparse_delta: p.sparse_delta,
        sparse_trials: p.sparse_trials,
    })
}

/// The toy schedule when one is configured, else the cascade for the map.
fn source(map: &Map, cfg: &RunConfig, h: f64, eps: f64, delta: Option<f64>, n: usize) -> Result<ScheduleSource, Failure> {
    if let Some(t) = &cfg.toy {
        return Ok(ScheduleSource::Toy(t.clone()));
    }
    let b = map.norm_bounds();
    Ok(ScheduleSource::Cascade(cascade(cfg, b.a, b.d, h, eps, delta, Some(LogTower::from_f64(n as f64)))?))
}

fn source_json(src: &ScheduleSource) -> Value {
    match src {
        ScheduleSource::Toy(t) => json!({ "toy": t }),
        ScheduleSource::Cascade(s) => json!({ "cascade": s }),
    }
}

fn theorem_a(args: &TheoremAArgs, cfg: &RunConfig) -> Result<Outcome, Failure> {
    let map = cfg.surface_map();
    let src = source(&map, cfg, args.h, args.eps, Some(args.delta), args.n)?;
    let pc = pipeline_config(&args.pipeline, cfg)?;
    let v = theorem_a_pipeline(&map, args.h, args.delta, args.eps, args.n, &src, &pc)?;
    let result = json!({ "schedule": source_json(&src), "pipeline": pc, "verdict": verdict_json(&v) });
    Ok(Outcome::new(args, result))
}

fn theorem_b(args: &TheoremBArgs, cfg: &RunConfig) -> Result<Outcome, Failure> {
    let map = cfg.surface_map();
    let x = parse_point(&args.x)?;
    let src = source(&map, cfg, args.h, args.eps, None, args.n)?;
    let pc = pipeline_config(&args.pipeline, cfg)?;
    let v = theorem_b_pipeline(&map, x, args.h, args.eps, args.n, &src, &pc)?;
    let result = json!({ "schedule": source_json(&src), "pipeline": pc, "verdict": verdict_json(&v) });
    Ok(Outcome::new(args, result))
}

// counterexample

#[derive(Debug, Clone, Args, Serialize)]
pub struct CounterexampleArgs {
    /// Rotation number; defaults to the golden mean times 1e-2.
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long, default_value_t = 10)]
    pub n: usize,
    #[arg(long, default_value_t = 0.05)]
    pub delta: f64,
    #[arg(long, default_value_t = 0.2)]
    pub eps: f64,
    /// Return times for the Birkhoff-sum gap series.
    #[arg(long, value_delimiter = ',', default_value = "13,21,34")]
    pub q: Vec<usize>,
    /// Also evaluate the gap at this many continued-fraction denominators of alpha.
    #[arg(long, default_value_t = 4)]
    pub convergents: usize,
    #[arg(long, default_value_t = 4096)]
    pub gap_grid: usize,
    #[arg(long, default_value_t = 200)]
    pub gap_samples: usize,
    /// Points at which the Jacobian determinant is checked.
    #[arg(long, default_value_t = 1000)]
    pub volume_samples: usize,
    /// CSV path for the gap series.
    #[arg(long)]
    pub gap_table: Option<PathBuf>,
}

fn golden_alpha() -> f64 {
    (5f64.sqrt() - 1.0) / 2.0 * 1e-2
}

fn counterexample(args: &CounterexampleArgs, cfg: &RunConfig) -> Result<Outcome, Failure> {
    let alpha = args.alpha.unwrap_or_else(golden_alpha);
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(Failure::config("alpha must be positive"));
    }
    let cover = CoverConfig { delta: args.delta, eps: args.eps, samples: cfg.grid.samples, seed: cfg.seed, separated: false };
    let rep = counterexample_complexity(alpha, args.n, &cover)?;
    let (rows, table) = cover_rows(&rep.rows);

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut gaps = Vec::new();
    let mut gap_table = Table::new(&["source", "q", "gap", "variation_bound", "within_bound", "displacement_sup"]);
    let own = convergents(alpha, args.convergents)?;
    for (label, qs) in [("requested", &args.q), ("convergent", &own.iter().map(|&v| v as usize).collect())] {
        for &q in qs {
            let g = denjoy_koksma_gap(alpha, q, args.gap_grid, args.gap_samples, &mut rng);
            gap_table.push(vec![
                label.into(),
                q.to_string(),
                num(g.gap),
                num(g.variation_bound),
                g.within_bound.to_string(),
                num(g.displacement_sup),
            ]);
            gaps.push(json!({ "source": label, "report": g }));
        }
    }

    let mut vol_err: f64 = 0.0;
    for _ in 0..args.volume_samples {
        let p = SkewPoint {
            theta: rng.gen(),
            fiber: SuspensionPoint { base: Point::new(rng.gen(), rng.gen()), height: rng.gen() },
        };
        vol_err = vol_err.max((det4(&skew_jacobian(alpha, p)) - 1.0).abs());
    }

    let result = json!({
        "alpha": alpha,
        "h0": rep.h0,
        "target_slope": rep.target,
        "complexity_slope": rep.slope,
        "rows": rows,
        "gap_series": gaps,
        "volume_max_error": vol_err,
    });
    let mut out = Outcome::new(args, result).with_table(table);
    if let Some(p) = &args.gap_table {
        out.extra_tables.push((p.clone(), gap_table));
    }
    Ok(out)
}
