//! Spatial point processes and nearest-neighbour association.

use std::f64::consts::PI;
use std::io::{self, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const ORIGIN: Point = Point { x: 0.0, y: 0.0 };

    pub fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn norm(&self) -> f64 {
        self.x.hypot(self.y)
    }
}

/// Observation window centred on the origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum Window {
    Disk { radius: f64 },
    Rectangle { half_width: f64, half_height: f64 },
}

impl Default for Window {
    fn default() -> Self {
        Window::Disk { radius: 1000.0 }
    }
}

impl Window {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Window::Disk { radius } => radius > 0.0 && radius.is_finite(),
            Window::Rectangle { half_width, half_height } => {
                half_width > 0.0 && half_height > 0.0 && half_width.is_finite() && half_height.is_finite()
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::parameter("window", format!("{self:?} must have positive finite dimensions")))
        }
    }

    pub fn area(&self) -> f64 {
        match *self {
            Window::Disk { radius } => PI * radius * radius,
            Window::Rectangle { half_width, half_height } => 4.0 * half_width * half_height,
        }
    }

    pub fn contains(&self, p: &Point) -> bool {
        match *self {
            Window::Disk { radius } => p.norm() <= radius,
            Window::Rectangle { half_width, half_height } => p.x.abs() <= half_width && p.y.abs() <= half_height,
        }
    }

    /// The same shape grown by `margin` on every side.
    pub fn dilated(&self, margin: f64) -> Window {
        match *self {
            Window::Disk { radius } => Window::Disk { radius: radius + margin },
            Window::Rectangle { half_width, half_height } => Window::Rectangle {
                half_width: half_width + margin,
                half_height: half_height + margin,
            },
        }
    }

    pub fn sample_uniform<R: Rng + ?Sized>(&self, rng: &mut R) -> Point {
        match *self {
            Window::Disk { radius } => uniform_in_disk(Point::ORIGIN, radius, rng),
            Window::Rectangle { half_width, half_height } => Point::new(
                half_width * (2.0 * rng.random::<f64>() - 1.0),
                half_height * (2.0 * rng.random::<f64>() - 1.0),
            ),
        }
    }

    /// Mirrors a point that left the window back inside it.
    pub fn reflect(&self, p: Point) -> Point {
        match *self {
            Window::Disk { radius } => {
                let r = p.norm();
                if r <= radius {
                    return p;
                }
                // radial mirror; a step never exceeds the radius so one fold suffices
                let folded = (2.0 * radius - r).max(0.0);
                Point::new(p.x * folded / r, p.y * folded / r)
            }
            Window::Rectangle { half_width, half_height } => {
                Point::new(fold(p.x, half_width), fold(p.y, half_height))
            }
        }
    }
}

// Reflects a coordinate into [−h, h].
fn fold(v: f64, h: f64) -> f64 {
    let period = 4.0 * h;
    let mut t = (v + h).rem_euclid(period);
    if t > 2.0 * h {
        t = period - t;
    }
    t - h
}

pub fn uniform_in_disk<R: Rng + ?Sized>(center: Point, radius: f64, rng: &mut R) -> Point {
    let r = radius * rng.random::<f64>().sqrt();
    let theta = 2.0 * PI * rng.random::<f64>();
    Point::new(center.x + r * theta.cos(), center.y + r * theta.sin())
}

/// Poisson variate; zero mean yields zero.
pub fn sample_poisson<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> Result<u64> {
    if !(mean >= 0.0) || !mean.is_finite() {
        return Err(Error::parameter("poisson mean", format!("{mean} must be finite and nonnegative")));
    }
    if mean == 0.0 {
        return Ok(0);
    }
    let dist = Poisson::new(mean).map_err(|e| Error::parameter("poisson mean", e.to_string()))?;
    Ok(dist.sample(rng) as u64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TopologyConfig {
    /// Retained base-station density after hard-core thinning, per m².
    pub lambda_b: f64,
    /// Global RIS density, per m².
    pub lambda_r: f64,
    /// UE density, per m².
    pub lambda_u: f64,
    /// Minimum base-station spacing, m.
    pub r_b: f64,
    /// RIS cluster radius around the parent base station, m.
    pub r_r: f64,
    /// RIS height, m. Kept for completeness; distances are planar.
    pub h_r: f64,
    pub seed: u64,
    pub window: Window,
}

impl Default for TopologyConfig {
    fn default() -> Self {
        TopologyConfig {
            lambda_b: 1e-5,
            lambda_r: 1e-5,
            lambda_u: 1e-2,
            r_b: 50.0,
            r_r: 50.0,
            h_r: 0.0,
            seed: 1,
            window: Window::default(),
        }
    }
}

impl TopologyConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("lambda_b", self.lambda_b), ("lambda_r", self.lambda_r), ("lambda_u", self.lambda_u)] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::parameter(name, format!("density {v} must be finite and nonnegative")));
            }
        }
        if !(self.r_b > 0.0) {
            return Err(Error::parameter("r_b", format!("{} must be positive", self.r_b)));
        }
        if !(self.r_r > 0.0) {
            return Err(Error::parameter("r_r", format!("{} must be positive", self.r_r)));
        }
        if self.lambda_r > 0.0 && self.lambda_b == 0.0 {
            return Err(Error::parameter("lambda_b", "RIS clusters need a positive base-station density"));
        }
        self.window.validate()?;
        matern_parent_intensity(self.lambda_b, self.r_b).map(|_| ())
    }
}

/// Retained intensity of a Matérn type-II process.
pub fn matern_retained_intensity(parent_intensity: f64, r_b: f64) -> f64 {
    let area = PI * r_b * r_b;
    if parent_intensity == 0.0 {
        return 0.0;
    }
    -(-parent_intensity * area).exp_m1() / area
}

/// Parent intensity whose Matérn type-II thinning retains `retained` points per m².
pub fn matern_parent_intensity(retained: f64, r_b: f64) -> Result<f64> {
    let area = PI * r_b * r_b;
    let packing = retained * area;
    if !(packing < 1.0) {
        return Err(Error::parameter(
            "lambda_b",
            format!("retained density {retained} is unreachable with hard-core radius {r_b} (limit {:e})", 1.0 / area),
        ));
    }
    Ok(-(-packing).ln_1p() / area)
}

pub fn sample_hppp<R: Rng + ?Sized>(intensity: f64, window: &Window, rng: &mut R) -> Result<Vec<Point>> {
    if !(intensity >= 0.0) {
        return Err(Error::parameter("intensity", format!("{intensity} must be nonnegative")));
    }
    window.validate()?;
    let n = sample_poisson(intensity * window.area(), rng)?;
    Ok((0..n).map(|_| window.sample_uniform(rng)).collect())
}

/// Matérn type-II hard-core thinning of an HPPP with `parent_intensity`.
///
/// Parents are drawn on the window dilated by `r_b` so points near the edge
/// see their full set of competitors; only survivors inside `window` are kept.
pub fn sample_mhcpp<R: Rng + ?Sized>(parent_intensity: f64, r_b: f64, window: &Window, rng: &mut R) -> Result<Vec<Point>> {
    if !(r_b > 0.0) {
        return Err(Error::parameter("r_b", format!("{r_b} must be positive")));
    }
    let parents = sample_hppp(parent_intensity, &window.dilated(r_b), rng)?;
    let marks: Vec<f64> = parents.iter().map(|_| rng.random()).collect();

    let mut order: Vec<usize> = (0..parents.len()).collect();
    order.sort_by(|&a, &b| parents[a].x.total_cmp(&parents[b].x));
    let mut keep = vec![true; parents.len()];
    for (pos, &i) in order.iter().enumerate() {
        for &j in &order[pos + 1..] {
            if parents[j].x - parents[i].x >= r_b {
                break;
            }
            if parents[i].distance(&parents[j]) < r_b {
                // the older (larger) mark loses
                if marks[i] < marks[j] {
                    keep[j] = false;
                } else {
                    keep[i] = false;
                }
            }
        }
    }
    Ok(parents
        .into_iter()
        .zip(keep)
        .filter(|(p, k)| *k && window.contains(p))
        .map(|(p, _)| p)
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ris {
    pub position: Point,
    pub parent: usize,
}

/// Poisson(λ_R/λ_B) children per base station, uniform in a disk of radius `r_r`.
pub fn sample_ris_clusters<R: Rng + ?Sized>(
    bs: &[Point],
    lambda_r: f64,
    lambda_b: f64,
    r_r: f64,
    rng: &mut R,
) -> Result<Vec<Ris>> {
    if !(r_r > 0.0) {
        return Err(Error::parameter("r_r", format!("{r_r} must be positive")));
    }
    if !(lambda_r >= 0.0) {
        return Err(Error::parameter("lambda_r", format!("{lambda_r} must be nonnegative")));
    }
    if lambda_r == 0.0 {
        return Ok(Vec::new());
    }
    if !(lambda_b > 0.0) {
        return Err(Error::parameter("lambda_b", "RIS clusters need a positive base-station density"));
    }
    let mean = lambda_r / lambda_b;
    let mut out = Vec::new();
    for (parent, &center) in bs.iter().enumerate() {
        let count = sample_poisson(mean, rng)?;
        for _ in 0..count {
            out.push(Ris {
                position: uniform_in_disk(center, r_r, rng),
                parent,
            });
        }
    }
    Ok(out)
}

/// Index of the closest base station; ties go to the lowest index.
pub fn associate_nearest(ue: &Point, bs: &[Point]) -> Result<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, b) in bs.iter().enumerate() {
        let d = ue.distance(b);
        if best.map_or(true, |(_, bd)| d < bd) {
            best = Some((i, d));
        }
    }
    best.map(|(i, _)| i)
        .ok_or_else(|| Error::Topology("no base stations".into()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkTopology {
    pub bs: Vec<Point>,
    pub ris: Vec<Ris>,
    /// UE positions; index 0 is the typical user at the origin.
    pub ue: Vec<Point>,
    /// Serving base station of each UE.
    pub serving_bs: Vec<usize>,
    /// Serving RIS of each base station, if its cluster is nonempty.
    pub serving_ris: Vec<Option<usize>>,
}

impl NetworkTopology {
    /// Samples a full topology from `config.seed`.
    pub fn sample(config: &TopologyConfig) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        Self::sample_with(config, &mut rng)
    }

    pub fn sample_with<R: Rng + ?Sized>(config: &TopologyConfig, rng: &mut R) -> Result<Self> {
        config.validate()?;
        let parent = matern_parent_intensity(config.lambda_b, config.r_b)?;
        let bs = sample_mhcpp(parent, config.r_b, &config.window, rng)?;
        if bs.is_empty() {
            return Err(Error::Topology("no base stations".into()));
        }
        let ris = sample_ris_clusters(&bs, config.lambda_r, config.lambda_b, config.r_r, rng)?;
        let mut ue = vec![Point::ORIGIN];
        ue.extend(sample_hppp(config.lambda_u, &config.window, rng)?);
        Self::from_parts(bs, ris, ue)
    }

    /// Builds a topology from explicit points and resolves both association maps.
    pub fn from_parts(bs: Vec<Point>, ris: Vec<Ris>, ue: Vec<Point>) -> Result<Self> {
        if let Some(r) = ris.iter().find(|r| r.parent >= bs.len()) {
            return Err(Error::Topology(format!("RIS parent {} out of range", r.parent)));
        }
        let serving_bs = ue
            .iter()
            .map(|u| associate_nearest(u, &bs))
            .collect::<Result<Vec<_>>>()?;
        let mut topology = NetworkTopology {
            bs,
            ris,
            ue,
            serving_bs,
            serving_ris: Vec::new(),
        };
        topology.serving_ris = (0..topology.bs.len())
            .map(|i| associate_serving_ris(i, &topology))
            .collect();
        Ok(topology)
    }

    pub fn min_bs_spacing(&self) -> Option<f64> {
        let mut best: Option<f64> = None;
        for (i, a) in self.bs.iter().enumerate() {
            for b in &self.bs[i + 1..] {
                let d = a.distance(b);
                best = Some(best.map_or(d, |m: f64| m.min(d)));
            }
        }
        best
    }

    /// Writes `kind,index,x,y,parent_index,serving_index` rows.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "kind,index,x,y,parent_index,serving_index")?;
        let opt = |v: Option<usize>| v.map(|i| i.to_string()).unwrap_or_default();
        for (i, p) in self.bs.iter().enumerate() {
            writeln!(out, "bs,{i},{},{},,{}", p.x, p.y, opt(self.serving_ris[i]))?;
        }
        for (i, r) in self.ris.iter().enumerate() {
            writeln!(out, "ris,{i},{},{},{},", r.position.x, r.position.y, r.parent)?;
        }
        for (i, p) in self.ue.iter().enumerate() {
            writeln!(out, "ue,{i},{},{},,{}", p.x, p.y, self.serving_bs[i])?;
        }
        Ok(())
    }
}

/// Nearest RIS among the children of `bs_index`.
pub fn associate_serving_ris(bs_index: usize, topology: &NetworkTopology) -> Option<usize> {
    let center = topology.bs.get(bs_index)?;
    topology
        .ris
        .iter()
        .enumerate()
        .filter(|(_, r)| r.parent == bs_index)
        .min_by(|(ia, a), (ib, b)| {
            a.position
                .distance(center)
                .total_cmp(&b.position.distance(center))
                .then(ia.cmp(ib))
        })
        .map(|(i, _)| i)
}
