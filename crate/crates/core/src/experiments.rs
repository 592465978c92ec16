//! Regret sweeps over the mean gap `c2` and over the horizon `N`, and the two
//! statistics read off them: the location of the regret maximum and the
//! smallest horizon beyond which regret stays within a tolerance of a limit.
//!
//! All sweeps use the two-armed bandit with `m1 = 0`, `c1 = 0`,
//! `D1 = D2 = 1` and `a = 1`.

use std::fmt;
use std::str::FromStr;

use crate::bandit::{close_means, BanditSpec, UcbConfig};
use crate::error::{Error, Result};
use crate::montecarlo::{run_replications, seed_for, Engine, ReplicationTask};
use crate::sde::{ScaledSystem, SdeConfig};

pub const EXPLORATION: f64 = 1.0;
pub const VARIANCE: f64 = 1.0;

/// A way of estimating the regret at one sweep point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Method {
    /// Discrete UCB simulation with horizon `N`.
    Discrete { horizon: u64 },
    /// Euler–Maruyama integration of the limiting system with step `h`.
    Limit { step: f64 },
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::Discrete { horizon } => write!(f, "discrete@N={horizon}"),
            Method::Limit { step } => write!(f, "limit@h={step}"),
        }
    }
}

/// Parses `discrete:200`, `limit:1e-3`, or the labels produced by `Display`.
impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::domain(format!("unrecognized method `{s}`"));
        let (kind, value) = s
            .split_once(':')
            .or_else(|| s.split_once('@'))
            .ok_or_else(bad)?;
        match kind {
            "discrete" => {
                let v = value.strip_prefix("N=").unwrap_or(value);
                let horizon: u64 = v.parse().map_err(|_| bad())?;
                if horizon < 2 {
                    return Err(Error::domain(format!("horizon {horizon} is below 2 arms")));
                }
                Ok(Method::Discrete { horizon })
            }
            "limit" => {
                let v = value.strip_prefix("h=").unwrap_or(value);
                let step: f64 = v.parse().map_err(|_| bad())?;
                if !(step > 0.0 && step < 0.5) {
                    return Err(Error::domain(format!("step {step} must lie in (0, 0.5)")));
                }
                Ok(Method::Limit { step })
            }
            _ => Err(bad()),
        }
    }
}

impl Method {
    /// Replication engine for the two-armed problem with gap `c2`.
    pub fn engine(&self, c2: f64) -> Result<Engine> {
        let config = UcbConfig::new(EXPLORATION)?;
        match *self {
            Method::Discrete { horizon } => {
                let means = close_means(0.0, &[0.0, c2], VARIANCE, horizon)?;
                let spec = BanditSpec::from_slices(&means, &[VARIANCE, VARIANCE], horizon)?;
                Ok(Engine::discrete(spec, config))
            }
            Method::Limit { step } => {
                let system = ScaledSystem::new(vec![0.0, c2], vec![1.0, 1.0], EXPLORATION)?;
                Ok(Engine::Limit(SdeConfig::new(system, step)?))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub x: f64,
    pub method: String,
    pub mean: f64,
    pub stderr: Option<f64>,
    pub reps: u64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
    /// Ordered `key = value` pairs echoing the configuration.
    pub metadata: Vec<(String, String)>,
}

impl SweepTable {
    pub fn sort(&mut self) {
        self.rows
            .sort_by(|a, b| a.method.cmp(&b.method).then(a.x.total_cmp(&b.x)));
    }

    pub fn meta(&self, key: &str) -> Option<&str> {
        self.metadata
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    /// Distinct method labels in row order.
    pub fn methods(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for row in &self.rows {
            if !out.contains(&row.method.as_str()) {
                out.push(&row.method);
            }
        }
        out
    }

    /// Rows of one method, sorted by `x`.
    pub fn series(&self, method: &str) -> Vec<&SweepRow> {
        let mut rows: Vec<&SweepRow> = self.rows.iter().filter(|r| r.method == method).collect();
        rows.sort_by(|a, b| a.x.total_cmp(&b.x));
        rows
    }
}

fn fnv1a(s: &str) -> u64 {
    s.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

/// Master seed shared by every point of one method's curve. Points on the
/// same curve reuse the same replication streams (common random numbers), so
/// neighbouring points differ by the effect of `x` rather than by fresh noise;
/// different methods get independent streams.
pub fn method_seed(master_seed: u64, method: &str) -> u64 {
    seed_for(master_seed, fnv1a(method))
}

fn join<T: fmt::Display>(items: impl IntoIterator<Item = T>) -> String {
    items
        .into_iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

fn common_metadata(reps: u64, master_seed: u64) -> Vec<(String, String)> {
    [
        ("a", EXPLORATION.to_string()),
        ("D", VARIANCE.to_string()),
        ("m", "0".to_string()),
        ("c1", "0".to_string()),
        ("reps", reps.to_string()),
        ("seed", master_seed.to_string()),
        ("rng", "chacha8/splitmix64/ziggurat".to_string()),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v))
    .collect()
}

fn measure(
    method_label: &str,
    engine: Engine,
    x: f64,
    reps: u64,
    master_seed: u64,
    parallelism: usize,
) -> Result<SweepRow> {
    let task = ReplicationTask::new(engine, reps, method_seed(master_seed, method_label))?;
    let stats = run_replications(&task, parallelism)?;
    Ok(SweepRow {
        x,
        method: method_label.to_string(),
        mean: stats.mean,
        stderr: stats.stderr,
        reps: stats.count,
    })
}

/// Mean normalized regret for every `(c2, method)` pair.
pub fn sweep_c2(
    grid: &[f64],
    methods: &[Method],
    reps: u64,
    master_seed: u64,
    parallelism: usize,
) -> Result<SweepTable> {
    if grid.is_empty() {
        return Err(Error::domain("c2 grid is empty"));
    }
    if let Some(c) = grid.iter().find(|c| !(**c >= 0.0) || !c.is_finite()) {
        return Err(Error::domain(format!(
            "c2 must be finite and >= 0, got {c}"
        )));
    }
    if methods.is_empty() {
        return Err(Error::domain("no methods given"));
    }
    let mut table = SweepTable::default();
    for method in methods {
        let label = method.to_string();
        for &c2 in grid {
            table.rows.push(measure(
                &label,
                method.engine(c2)?,
                c2,
                reps,
                master_seed,
                parallelism,
            )?);
        }
    }
    table.sort();
    table.metadata.push(("kind".into(), "sweep-c2".into()));
    table.metadata.push(("x_label".into(), "c2".into()));
    table.metadata.push(("grid".into(), join(grid)));
    table.metadata.push(("methods".into(), join(methods)));
    table.metadata.extend(common_metadata(reps, master_seed));
    Ok(table)
}

/// Discrete-engine regret for every horizon in `n_from..=n_to` at gap `c2`.
pub fn sweep_horizon(
    n_from: u64,
    n_to: u64,
    c2: f64,
    reps: u64,
    master_seed: u64,
    parallelism: usize,
) -> Result<SweepTable> {
    if n_from < 2 {
        return Err(Error::domain(format!(
            "horizon {n_from} is below the 2 forced pulls"
        )));
    }
    if n_to < n_from {
        return Err(Error::domain(format!(
            "empty horizon range {n_from}..={n_to}"
        )));
    }
    let label = format!("discrete@c2={c2}");
    let mut table = SweepTable::default();
    for n in n_from..=n_to {
        let engine = Method::Discrete { horizon: n }.engine(c2)?;
        table.rows.push(measure(
            &label,
            engine,
            n as f64,
            reps,
            master_seed,
            parallelism,
        )?);
    }
    table.sort();
    table.metadata.push(("kind".into(), "sweep-horizon".into()));
    table.metadata.push(("x_label".into(), "N".into()));
    table.metadata.push(("n_from".into(), n_from.to_string()));
    table.metadata.push(("n_to".into(), n_to.to_string()));
    table.metadata.push(("c2".into(), c2.to_string()));
    table.metadata.extend(common_metadata(reps, master_seed));
    Ok(table)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaxRegret {
    pub x_star: f64,
    pub regret_star: f64,
    /// The maximum sits on the first or last grid point.
    pub boundary: bool,
    /// Vertex of the parabola through the maximum and its two neighbours,
    /// when the maximum is interior and the parabola opens downward.
    pub refined: Option<(f64, f64)>,
}

fn parabola_vertex(p: [(f64, f64); 3]) -> Option<(f64, f64)> {
    let [(x0, y0), (x1, y1), (x2, y2)] = p;
    let d01 = (y1 - y0) / (x1 - x0);
    let d12 = (y2 - y1) / (x2 - x1);
    let curvature = (d12 - d01) / (x2 - x0);
    if !(curvature < 0.0) {
        return None;
    }
    // y = y0 + d01 (x - x0) + curvature (x - x0)(x - x1)
    let x = (x0 + x1) / 2.0 - d01 / (2.0 * curvature);
    let y = y0 + d01 * (x - x0) + curvature * (x - x0) * (x - x1);
    Some((x, y))
}

/// Grid point with the largest mean for `method`; ties go to the smaller `x`.
pub fn find_max_regret(table: &SweepTable, method: &str) -> Result<MaxRegret> {
    let rows = table.series(method);
    if rows.len() < 3 {
        return Err(Error::domain(format!(
            "method `{method}` has {} rows, at least 3 are needed",
            rows.len()
        )));
    }
    let mut best = 0;
    for (i, row) in rows.iter().enumerate() {
        if row.mean > rows[best].mean {
            best = i;
        }
    }
    let boundary = best == 0 || best == rows.len() - 1;
    let refined = if boundary {
        None
    } else {
        let p = |i: usize| (rows[i].x, rows[i].mean);
        parabola_vertex([p(best - 1), p(best), p(best + 1)])
    };
    Ok(MaxRegret {
        x_star: rows[best].x,
        regret_star: rows[best].mean,
        boundary,
        refined,
    })
}

/// Smallest `N` such that every row at `N' >= N` has mean at most
/// `(1 + tol) * limit_regret`. `None` when even the last row exceeds it.
pub fn find_threshold_horizon(
    table: &SweepTable,
    limit_regret: f64,
    tol: f64,
) -> Result<Option<u64>> {
    if table.rows.is_empty() {
        return Err(Error::domain("threshold search on an empty table"));
    }
    if !(tol > 0.0) {
        return Err(Error::domain(format!("tolerance must be > 0, got {tol}")));
    }
    let methods = table.methods();
    if methods.len() != 1 {
        return Err(Error::domain(format!(
            "threshold search needs a single method, table has {}",
            methods.len()
        )));
    }
    let rows = table.series(methods[0]);
    for pair in rows.windows(2) {
        if pair[1].x != pair[0].x + 1.0 {
            return Err(Error::domain(format!(
                "horizon range is not contiguous between {} and {}",
                pair[0].x, pair[1].x
            )));
        }
    }
    if let Some(r) = rows.iter().find(|r| r.x.fract() != 0.0 || r.x < 1.0) {
        return Err(Error::domain(format!("{} is not a horizon", r.x)));
    }
    let bound = (1.0 + tol) * limit_regret;
    let mut answer = None;
    for row in rows.iter().rev() {
        if row.mean > bound {
            break;
        }
        answer = Some(row.x as u64);
    }
    Ok(answer)
}
