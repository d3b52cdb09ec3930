//! Urban environment: building realization, line-of-sight tests and UAV
//! trajectories.
//!
//! Buildings follow the usual three-parameter statistical city description:
//! `alpha` is the fraction of land covered by buildings, `beta` the number of
//! buildings per square kilometre and `sigma` the scale of the Rayleigh
//! distribution of building heights. A realization places
//! `round(beta * area)` square buildings of side `1000 * sqrt(alpha / beta)`
//! metres on a regular grid, so both the density and the built-area fraction
//! are matched.
//!
//! Positions are expressed in kilometres as `[x, y, g]`, with `g` the
//! altitude above ground. Building footprints and heights are in metres.

use std::f64::consts::PI;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Open01};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// A point in the simulation frame, kilometres.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Position {
    pub x: f64,
    pub y: f64,
    pub g: f64,
}

impl Position {
    pub const fn new(x: f64, y: f64, g: f64) -> Self {
        Position { x, y, g }
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.g]
    }

    /// Euclidean distance in metres.
    pub fn distance_m(&self, other: &Position) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        let dg = self.g - other.g;
        1000.0 * (dx * dx + dy * dy + dg * dg).sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.g.is_finite()
    }
}

/// Statistical description of the city.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BuildingParams {
    /// Built-area fraction.
    pub alpha: f64,
    /// Buildings per km².
    pub beta: f64,
    /// Rayleigh scale of building heights, m.
    pub sigma: f64,
    /// Heights above this are clipped, m.
    pub height_clip: f64,
    /// Side of the square region, km.
    pub area_side: f64,
}

impl Default for BuildingParams {
    fn default() -> Self {
        BuildingParams {
            alpha: 0.3,
            beta: 300.0,
            sigma: 30.0,
            height_clip: 40.0,
            area_side: 1.0,
        }
    }
}

impl BuildingParams {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::param("alpha", format!("{} not in [0, 1]", self.alpha)));
        }
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return Err(Error::param("beta", format!("{} must be >= 0", self.beta)));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::param("sigma", format!("{} must be > 0", self.sigma)));
        }
        if !(self.height_clip > 0.0) || self.height_clip.is_nan() {
            return Err(Error::param(
                "height_clip",
                format!("{} must be > 0", self.height_clip),
            ));
        }
        if !(self.area_side > 0.0 && self.area_side.is_finite()) {
            return Err(Error::param(
                "area_side",
                format!("{} must be > 0", self.area_side),
            ));
        }
        Ok(())
    }

    /// Number of buildings in the region.
    pub fn building_count(&self) -> usize {
        (self.beta * self.area_side * self.area_side).round() as usize
    }

    /// Footprint side, metres.
    pub fn footprint_side_m(&self) -> f64 {
        1000.0 * (self.alpha / self.beta).sqrt()
    }
}

/// One square building.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Building {
    pub cx_m: f64,
    pub cy_m: f64,
    pub side_m: f64,
    pub height_m: f64,
}

impl Building {
    fn bounds(&self) -> (f64, f64, f64, f64) {
        let half = 0.5 * self.side_m;
        (
            self.cx_m - half,
            self.cx_m + half,
            self.cy_m - half,
            self.cy_m + half,
        )
    }

    /// Whether the horizontal point (metres) lies on the closed footprint.
    pub fn covers(&self, x_m: f64, y_m: f64) -> bool {
        let (x0, x1, y0, y1) = self.bounds();
        (x0..=x1).contains(&x_m) && (y0..=y1).contains(&y_m)
    }
}

/// A realized city. Immutable once generated; queries only borrow it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvMap {
    pub buildings: Vec<Building>,
    pub region_km: f64,
    pub seed: u64,
}

impl EnvMap {
    pub fn empty(region_km: f64) -> Self {
        EnvMap {
            buildings: Vec::new(),
            region_km,
            seed: 0,
        }
    }

    pub fn built_area_fraction(&self) -> f64 {
        let region_m = 1000.0 * self.region_km;
        let built: f64 = self.buildings.iter().map(|b| b.side_m * b.side_m).sum();
        built / (region_m * region_m)
    }

    pub fn max_height_m(&self) -> f64 {
        self.buildings
            .iter()
            .map(|b| b.height_m)
            .fold(0.0, f64::max)
    }

    /// Removes every building whose footprint covers the horizontal position
    /// of `site`, returning how many were removed. Used to mount the BS mast
    /// on a free site.
    pub fn clear_site(&mut self, site: &Position) -> usize {
        let (x, y) = (1000.0 * site.x, 1000.0 * site.y);
        let before = self.buildings.len();
        self.buildings.retain(|b| !b.covers(x, y));
        before - self.buildings.len()
    }

    pub fn is_los(&self, a: &Position, b: &Position) -> bool {
        is_los(a, b, self)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Parses and validates a map file.
    pub fn from_json(text: &str) -> Result<Self> {
        let map: EnvMap = serde_json::from_str(text)?;
        map.validate()?;
        Ok(map)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.region_km > 0.0 && self.region_km.is_finite()) {
            return Err(Error::param("region_km", format!("{} must be > 0", self.region_km)));
        }
        let region_m = 1000.0 * self.region_km;
        for (i, b) in self.buildings.iter().enumerate() {
            let finite = b.cx_m.is_finite() && b.cy_m.is_finite() && b.side_m.is_finite();
            if !finite || b.side_m < 0.0 {
                return Err(Error::param("buildings", format!("building {i} has a bad footprint")));
            }
            if !(b.height_m > 0.0 && b.height_m.is_finite()) {
                return Err(Error::param(
                    "buildings",
                    format!("building {i} height {} must be > 0", b.height_m),
                ));
            }
            let (x0, x1, y0, y1) = b.bounds();
            if x0 < 0.0 || y0 < 0.0 || x1 > region_m || y1 > region_m {
                return Err(Error::param(
                    "buildings",
                    format!("building {i} lies outside the region"),
                ));
            }
        }
        Ok(())
    }
}

/// Draws one building height: Rayleigh(`sigma`) clipped to `clip`. The result
/// is strictly positive.
pub fn sample_building_height<R: Rng + ?Sized>(sigma: f64, clip: f64, rng: &mut R) -> f64 {
    let u: f64 = Open01.sample(rng);
    (sigma * (-2.0 * u.ln()).sqrt()).min(clip)
}

/// Builds a city realization. Deterministic for a fixed seed.
pub fn generate_env(params: &BuildingParams, seed: u64) -> Result<EnvMap> {
    params.validate()?;
    let count = params.building_count();
    let region_m = 1000.0 * params.area_side;
    if count == 0 || params.alpha == 0.0 {
        return Ok(EnvMap {
            buildings: Vec::new(),
            region_km: params.area_side,
            seed,
        });
    }

    let side = params.footprint_side_m();
    let cols = (count as f64).sqrt().ceil() as usize;
    let rows = count.div_ceil(cols);
    let pitch_x = region_m / cols as f64;
    let pitch_y = region_m / rows as f64;
    if side > pitch_x.min(pitch_y) {
        return Err(Error::param(
            "alpha",
            format!(
                "footprint side {side:.2} m exceeds grid pitch {:.2} m; buildings would overlap",
                pitch_x.min(pitch_y)
            ),
        ));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let buildings = (0..count)
        .map(|i| {
            let (r, c) = (i / cols, i % cols);
            Building {
                cx_m: (c as f64 + 0.5) * pitch_x,
                cy_m: (r as f64 + 0.5) * pitch_y,
                side_m: side,
                height_m: sample_building_height(params.sigma, params.height_clip, &mut rng),
            }
        })
        .collect();

    Ok(EnvMap {
        buildings,
        region_km: params.area_side,
        seed,
    })
}

/// Parameter interval `[t0, t1]` of the 2-D segment `p + t * d`, `t ∈ [0, 1]`,
/// that lies inside the closed rectangle (Liang–Barsky).
fn clip_segment(p: (f64, f64), d: (f64, f64), rect: (f64, f64, f64, f64)) -> Option<(f64, f64)> {
    let (x0, x1, y0, y1) = rect;
    let mut t0 = 0.0_f64;
    let mut t1 = 1.0_f64;
    for (denom, num) in [
        (-d.0, p.0 - x0),
        (d.0, x1 - p.0),
        (-d.1, p.1 - y0),
        (d.1, y1 - p.1),
    ] {
        if denom == 0.0 {
            if num < 0.0 {
                return None;
            }
        } else {
            let r = num / denom;
            if denom < 0.0 {
                t0 = t0.max(r);
            } else {
                t1 = t1.min(r);
            }
            if t0 > t1 {
                return None;
            }
        }
    }
    Some((t0, t1))
}

/// True when the straight segment between `a` and `b` passes strictly above
/// every building whose footprint it crosses.
pub fn is_los(a: &Position, b: &Position, env: &EnvMap) -> bool {
    let pa = (1000.0 * a.x, 1000.0 * a.y);
    let d = (1000.0 * (b.x - a.x), 1000.0 * (b.y - a.y));
    let (za, zb) = (1000.0 * a.g, 1000.0 * b.g);
    env.buildings.iter().all(|bld| match clip_segment(pa, d, bld.bounds()) {
        // altitude is linear along the segment, so its minimum over the
        // crossed interval sits at one of the interval ends
        Some((t0, t1)) => {
            let z0 = za + t0 * (zb - za);
            let z1 = za + t1 * (zb - za);
            z0.min(z1) > bld.height_m
        }
        None => true,
    })
}

/// Flight path shape.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum TrajectoryKind {
    /// Constant-altitude circle around `center` (whose `g` is the altitude).
    Circular {
        center: Position,
        radius_km: f64,
        /// Full revolutions over the horizon.
        revolutions: f64,
    },
    /// Straight line from `start` to `end`.
    VerticalAscent { start: Position, end: Position },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub kind: TrajectoryKind,
    /// Number of slots `T`.
    pub horizon: usize,
}

impl Trajectory {
    pub fn circular(center: Position, radius_km: f64, horizon: usize) -> Self {
        Trajectory {
            kind: TrajectoryKind::Circular {
                center,
                radius_km,
                revolutions: 1.0,
            },
            horizon,
        }
    }

    pub fn vertical_ascent(start: Position, end: Position, horizon: usize) -> Self {
        Trajectory {
            kind: TrajectoryKind::VerticalAscent { start, end },
            horizon,
        }
    }

    /// Circle of the reference scenario: center `[0.5, 0.5, 0.05]` km, radius 0.375 km.
    pub fn paper_c2t(horizon: usize) -> Self {
        Self::circular(Position::new(0.5, 0.5, 0.05), 0.375, horizon)
    }

    /// Ascent of the reference scenario: `[0.5, 0.5, 0]` to `[0.5, 0.5, 0.35]` km.
    pub fn paper_vat(horizon: usize) -> Self {
        Self::vertical_ascent(
            Position::new(0.5, 0.5, 0.0),
            Position::new(0.5, 0.5, 0.35),
            horizon,
        )
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 {
            return Err(Error::param("horizon", "must be >= 1"));
        }
        match self.kind {
            TrajectoryKind::Circular {
                center,
                radius_km,
                revolutions,
            } => {
                if !(radius_km > 0.0 && radius_km.is_finite()) {
                    return Err(Error::param("radius_km", "must be > 0"));
                }
                if !revolutions.is_finite() {
                    return Err(Error::param("revolutions", "must be finite"));
                }
                if !center.is_finite() || center.g < 0.0 {
                    return Err(Error::param("center", "altitude must be >= 0"));
                }
            }
            TrajectoryKind::VerticalAscent { start, end } => {
                if start == end {
                    return Err(Error::param("end", "must differ from start"));
                }
                if !start.is_finite() || !end.is_finite() || start.g < 0.0 || end.g < 0.0 {
                    return Err(Error::param("start", "altitudes must be >= 0"));
                }
            }
        }
        Ok(())
    }

    /// Position at slot `t`, `1 <= t <= horizon`.
    pub fn position_at(&self, t: usize) -> Result<Position> {
        position_at(self, t)
    }
}

pub fn position_at(traj: &Trajectory, t: usize) -> Result<Position> {
    if t == 0 || t > traj.horizon {
        return Err(Error::OutOfRange {
            index: t,
            max: traj.horizon,
        });
    }
    let step = (t - 1) as f64;
    Ok(match traj.kind {
        TrajectoryKind::Circular {
            center,
            radius_km,
            revolutions,
        } => {
            let angle = 2.0 * PI * revolutions * step / traj.horizon as f64;
            Position::new(
                center.x + radius_km * angle.cos(),
                center.y + radius_km * angle.sin(),
                center.g,
            )
        }
        TrajectoryKind::VerticalAscent { start, end } => {
            let frac = if traj.horizon == 1 {
                0.0
            } else {
                step / (traj.horizon - 1) as f64
            };
            Position::new(
                start.x + frac * (end.x - start.x),
                start.y + frac * (end.y - start.y),
                start.g + frac * (end.g - start.g),
            )
        }
    })
}
