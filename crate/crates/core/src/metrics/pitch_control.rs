use std::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::data::{PitchSpec, Point};
use crate::error::{invalid, Error, Result};

/// Number of strips for the depth and width threats.
pub const ZONES: usize = 32;
/// Arrival times closer than this are a tie.
pub const TIE_SECONDS: f64 = 1e-9;

/// Values over pitch cells; row `r` is the `r`-th y band from the bottom
/// touchline, column `c` the `c`-th x band from the left goal line.
#[derive(Clone, Debug, PartialEq)]
pub struct EpvGrid {
    pub rows: usize,
    pub cols: usize,
    pub values: Vec<f64>,
}

impl EpvGrid {
    pub fn new(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 || values.len() != rows * cols {
            return Err(invalid(format!("{rows}x{cols} grid with {} values", values.len())));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(invalid(format!("EPV value {v} is negative or not finite")));
        }
        Ok(Self { rows, cols, values })
    }

    /// `rows cols` on the first line, then one whitespace-separated row per line.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| Error::Parse("empty EPV file".into()))?;
        let dims: Vec<usize> = header
            .split_whitespace()
            .map(|s| s.parse().map_err(|_| Error::Parse(format!("bad EPV header {header:?}"))))
            .collect::<Result<_>>()?;
        let [rows, cols] = dims[..] else {
            return Err(Error::Parse(format!("EPV header needs two numbers, got {header:?}")));
        };
        let mut values = Vec::with_capacity(rows * cols);
        let mut seen = 0;
        for line in lines {
            let row: Vec<f64> = line
                .split(|c: char| c.is_whitespace() || c == ',')
                .filter(|s| !s.is_empty())
                .map(|s| s.parse().map_err(|_| Error::Parse(format!("bad EPV value {s:?}"))))
                .collect::<Result<_>>()?;
            if row.len() != cols {
                return Err(Error::Parse(format!("EPV row {seen} has {} values, expected {cols}", row.len())));
            }
            values.extend(row);
            seen += 1;
        }
        if seen != rows {
            return Err(Error::Parse(format!("EPV file has {seen} rows, header says {rows}")));
        }
        Self::new(rows, cols, values)
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("{} {}\n", self.rows, self.cols);
        for r in 0..self.rows {
            let row: Vec<String> = self.values[r * self.cols..(r + 1) * self.cols]
                .iter()
                .map(|v| format!("{v}"))
                .collect();
            writeln!(s, "{}", row.join(" ")).unwrap();
        }
        s
    }

    /// Synthetic stand-in: `exp(−d/20)` with `d` the distance in meters to
    /// the centre of the goal at `+x`, scaled so the maximum is 1. Not
    /// derived from match data.
    pub fn synthetic(pitch: &PitchSpec, rows: usize, cols: usize) -> Self {
        let goal = [pitch.half_length(), 0.0];
        let mut values: Vec<f64> = (0..rows * cols)
            .map(|i| {
                let (r, c) = (i / cols, i % cols);
                let x = -pitch.half_length() + (c as f64 + 0.5) * pitch.length / cols as f64;
                let y = -pitch.half_width() + (r as f64 + 0.5) * pitch.width / rows as f64;
                (-(x - goal[0]).hypot(y - goal[1]) / 20.0).exp()
            })
            .collect();
        let max = values.iter().copied().fold(0.0, f64::max);
        values.iter_mut().for_each(|v| *v /= max);
        Self { rows, cols, values }
    }

    /// Bilinear value at a pitch position, cell values sitting at cell
    /// centres and clamped beyond the outermost centres.
    pub fn sample(&self, pitch: &PitchSpec, p: Point) -> f64 {
        let fx = ((p[0] + pitch.half_length()) / pitch.length * self.cols as f64 - 0.5).clamp(0.0, (self.cols - 1) as f64);
        let fy = ((p[1] + pitch.half_width()) / pitch.width * self.rows as f64 - 0.5).clamp(0.0, (self.rows - 1) as f64);
        let (c0, r0) = (fx.floor() as usize, fy.floor() as usize);
        let (c1, r1) = ((c0 + 1).min(self.cols - 1), (r0 + 1).min(self.rows - 1));
        let (tx, ty) = (fx - c0 as f64, fy - r0 as f64);
        let at = |r: usize, c: usize| self.values[r * self.cols + c];
        let top = at(r0, c0) * (1.0 - tx) + at(r0, c1) * tx;
        let bottom = at(r1, c0) * (1.0 - tx) + at(r1, c1) * tx;
        top * (1.0 - ty) + bottom * ty
    }
}

/// Evaluation lattice of square cells over the pitch.
#[derive(Clone, Debug, PartialEq)]
pub struct ControlGrid {
    pub pitch: PitchSpec,
    pub nx: usize,
    pub ny: usize,
    pub cell_area: f64,
    /// EPV at each cell centre, row-major over `(y, x)`.
    pub epv: Vec<f64>,
}

impl ControlGrid {
    pub fn new(pitch: PitchSpec, resolution: f64, epv: &EpvGrid) -> Result<Self> {
        if !(resolution > 0.0) {
            return Err(invalid("grid resolution must be positive"));
        }
        let nx = ((pitch.length / resolution).round() as usize).max(1);
        let ny = ((pitch.width / resolution).round() as usize).max(1);
        let mut grid = Self {
            pitch,
            nx,
            ny,
            cell_area: pitch.area() / (nx * ny) as f64,
            epv: Vec::new(),
        };
        grid.epv = (0..nx * ny).map(|i| epv.sample(&pitch, grid.center(i))).collect();
        Ok(grid)
    }

    pub fn cells(&self) -> usize {
        self.nx * self.ny
    }

    pub fn center(&self, i: usize) -> Point {
        let (r, c) = (i / self.nx, i % self.nx);
        [
            -self.pitch.half_length() + (c as f64 + 0.5) * self.pitch.length / self.nx as f64,
            -self.pitch.half_width() + (r as f64 + 0.5) * self.pitch.width / self.ny as f64,
        ]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Owner {
    Attack,
    Defense,
    Tie,
}

/// A player for control purposes: position (m) and velocity (m/s).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mover {
    pub position: Point,
    pub velocity: Point,
}

impl Mover {
    pub fn still(position: Point) -> Self {
        Self {
            position,
            velocity: [0.0, 0.0],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Kinematics {
    /// m/s².
    pub acceleration: f64,
    /// m/s.
    pub max_speed: f64,
}

impl Default for Kinematics {
    fn default() -> Self {
        Self {
            acceleration: 3.0,
            max_speed: 8.0,
        }
    }
}

/// Time to reach `target` moving straight at it: the velocity component
/// along the line is the initial speed, acceleration is constant up to the
/// speed cap, and the perpendicular component is discarded.
pub fn arrival_time(m: &Mover, target: Point, k: &Kinematics) -> f64 {
    let (dx, dy) = (target[0] - m.position[0], target[1] - m.position[1]);
    let d = dx.hypot(dy);
    if d == 0.0 {
        return 0.0;
    }
    let v0 = ((m.velocity[0] * dx + m.velocity[1] * dy) / d).min(k.max_speed);
    let a = k.acceleration;
    let ramp = (k.max_speed * k.max_speed - v0 * v0) / (2.0 * a);
    if ramp >= d {
        (-v0 + (v0 * v0 + 2.0 * a * d).sqrt()) / a
    } else {
        (k.max_speed - v0) / a + (d - ramp) / k.max_speed
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControlRule {
    /// Nearest player by Euclidean distance.
    #[default]
    Nearest,
    /// Earliest arrival under [`Kinematics`].
    Arrival,
}

fn best(team: &[Mover], target: Point, rule: ControlRule, k: &Kinematics) -> f64 {
    team.iter()
        .map(|m| match rule {
            ControlRule::Nearest => (target[0] - m.position[0]).hypot(target[1] - m.position[1]),
            ControlRule::Arrival => arrival_time(m, target, k),
        })
        .fold(f64::INFINITY, f64::min)
}

/// Owner of every cell.
pub fn control_map(grid: &ControlGrid, attack: &[Mover], defense: &[Mover], rule: ControlRule, k: &Kinematics) -> Vec<Owner> {
    (0..grid.cells())
        .map(|i| {
            let c = grid.center(i);
            let (a, d) = (best(attack, c, rule, k), best(defense, c, rule, k));
            if (a - d).abs() <= TIE_SECONDS {
                Owner::Tie
            } else if a < d {
                Owner::Attack
            } else {
                Owner::Defense
            }
        })
        .collect()
}

/// Share of the EPV in attacker-controlled cells among all controlled cells.
pub fn obet(grid: &ControlGrid, owners: &[Owner]) -> Result<f64> {
    let (mut a, mut total) = (0.0, 0.0);
    for (o, v) in owners.iter().zip(&grid.epv) {
        match o {
            Owner::Attack => {
                a += v;
                total += v;
            }
            Owner::Defense => total += v,
            Owner::Tie => {}
        }
    }
    if total <= 0.0 {
        return Err(invalid("controlled cells carry no EPV"));
    }
    Ok(a / total)
}

fn zone_threat(grid: &ControlGrid, owners: &[Owner], zone_of: impl Fn(usize) -> usize) -> f64 {
    let mut n = [0usize; ZONES];
    let mut n_atk = [0usize; ZONES];
    let mut epv = [0.0; ZONES];
    for (i, o) in owners.iter().enumerate() {
        let z = zone_of(i);
        n[z] += 1;
        n_atk[z] += usize::from(*o == Owner::Attack);
        epv[z] += grid.epv[i];
    }
    let total: f64 = epv.iter().sum();
    if total <= 0.0 {
        return 0.0;
    }
    (0..ZONES)
        .filter(|&z| n[z] > 0)
        .map(|z| n_atk[z] as f64 / n[z] as f64 * epv[z] / total)
        .sum()
}

fn zone(coord: f64, half: f64) -> usize {
    (((coord + half) / (2.0 * half) * ZONES as f64) as usize).min(ZONES - 1)
}

/// Attacker control per strip along the length, weighted by strip EPV.
pub fn depth_threat(grid: &ControlGrid, owners: &[Owner]) -> f64 {
    zone_threat(grid, owners, |i| zone(grid.center(i)[0], grid.pitch.half_length()))
}

/// As [`depth_threat`] with strips along the width.
pub fn width_threat(grid: &ControlGrid, owners: &[Owner]) -> f64 {
    zone_threat(grid, owners, |i| zone(grid.center(i)[1], grid.pitch.half_width()))
}

/// `clip(100·(after − before)/pitch_area, −1, 1)`.
pub fn defensive_disruption(area_before: f64, area_after: f64, pitch: &PitchSpec) -> f64 {
    (100.0 * (area_after - area_before) / pitch.area()).clamp(-1.0, 1.0)
}

/// Cell counts of an arrival-time partition.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DominantRegion {
    pub defense_cells: usize,
    pub attack_cells: usize,
    pub tie_cells: usize,
    pub cell_area: f64,
}

impl DominantRegion {
    /// Area reached first by the defense (m²); ties excluded.
    pub fn defense_area(&self) -> f64 {
        self.defense_cells as f64 * self.cell_area
    }

    pub fn attack_area(&self) -> f64 {
        self.attack_cells as f64 * self.cell_area
    }

    pub fn tie_area(&self) -> f64 {
        self.tie_cells as f64 * self.cell_area
    }
}

pub fn dominant_region(grid: &ControlGrid, defense: &[Mover], attack: &[Mover], k: &Kinematics) -> Result<DominantRegion> {
    if defense.is_empty() || attack.is_empty() {
        return Err(invalid("dominant region needs players on both sides"));
    }
    let owners = control_map(grid, attack, defense, ControlRule::Arrival, k);
    let count = |o: Owner| owners.iter().filter(|x| **x == o).count();
    Ok(DominantRegion {
        defense_cells: count(Owner::Defense),
        attack_cells: count(Owner::Attack),
        tie_cells: count(Owner::Tie),
        cell_area: grid.cell_area,
    })
}
