//! Browser bindings for the demo page: team shape, pitch control and the
//! forward noising schedule.
//!
//! Each export is a thin wrapper over a plain Rust function so the logic can
//! be tested natively. Positions travel as flat `[x0, y0, x1, y1, ...]`
//! arrays in meters with the origin at the centre spot.

use gentac_core::data::{denormalize_point, normalize_point, PitchSpec, Point};
use gentac_core::diffusion::{noise_with, DiffusionSchedule, ScheduleConfig};
use gentac_core::metrics::{
    control_map, convex_hull, dominant_region, obet, structure, ControlGrid, ControlRule, EpvGrid, Kinematics, Mover,
    Owner, STRUCTURE_COLUMNS,
};
use gentac_core::numeric::rng::normal_vec;
use gentac_core::numeric::RngStream;
use wasm_bindgen::prelude::*;

fn points(flat: &[f64]) -> Result<Vec<Point>, String> {
    if flat.len() % 2 != 0 {
        return Err(format!("expected x, y pairs, got {} numbers", flat.len()));
    }
    if flat.iter().any(|v| !v.is_finite()) {
        return Err("positions must be finite".into());
    }
    Ok(flat.chunks(2).map(|c| [c[0], c[1]]).collect())
}

fn flatten(ps: &[Point]) -> Vec<f64> {
    ps.iter().flat_map(|p| [p[0], p[1]]).collect()
}

#[wasm_bindgen]
#[derive(Clone, Debug, PartialEq)]
pub struct Shape {
    values: Vec<f64>,
    hull: Vec<f64>,
}

#[wasm_bindgen]
impl Shape {
    /// Stretch index, surface area, width, length, Frobenius norm, centroid
    /// displacement (NaN without a previous frame) and Kuramoto order.
    #[wasm_bindgen(getter)]
    pub fn values(&self) -> Vec<f64> {
        self.values.clone()
    }

    /// Convex hull vertices, counter-clockwise.
    #[wasm_bindgen(getter)]
    pub fn hull(&self) -> Vec<f64> {
        self.hull.clone()
    }
}

/// Column names matching [`Shape::values`].
#[wasm_bindgen(js_name = shapeColumns)]
pub fn shape_columns() -> Vec<String> {
    STRUCTURE_COLUMNS.iter().map(|s| s.to_string()).collect()
}

/// Shape of one team; `prev` is the same team one frame earlier, or empty.
pub fn team_shape(xy: &[f64], prev: &[f64], fps: f64) -> Result<Shape, String> {
    let now = points(xy)?;
    let before = points(prev)?;
    let prev = match before.len() {
        0 => None,
        n if n == now.len() => Some(before.as_slice()),
        n => return Err(format!("previous frame has {n} players, current has {}", now.len())),
    };
    let velocities: Vec<Point> = match prev {
        Some(b) => now.iter().zip(b).map(|(p, q)| [(p[0] - q[0]) * fps, (p[1] - q[1]) * fps]).collect(),
        None => vec![[0.0; 2]; now.len()],
    };
    let s = structure(&now, prev, &velocities).map_err(|e| e.to_string())?;
    let mut values = s.values().to_vec();
    if s.centroid_displacement.is_none() {
        values[5] = f64::NAN;
    }
    Ok(Shape {
        values,
        hull: flatten(&convex_hull(&now)),
    })
}

#[wasm_bindgen(js_name = teamShape)]
pub fn team_shape_js(xy: &[f64], prev: &[f64], fps: f64) -> Result<Shape, JsError> {
    team_shape(xy, prev, fps).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
#[derive(Clone, Debug, PartialEq)]
pub struct Control {
    nx: usize,
    ny: usize,
    owners: Vec<u8>,
    obet: f64,
    attack_area: f64,
    defense_area: f64,
    epv: Vec<f64>,
}

#[wasm_bindgen]
impl Control {
    #[wasm_bindgen(getter)]
    pub fn nx(&self) -> usize {
        self.nx
    }

    #[wasm_bindgen(getter)]
    pub fn ny(&self) -> usize {
        self.ny
    }

    /// Row-major from the bottom-left cell: 0 attack, 1 defense, 2 tie.
    #[wasm_bindgen(getter)]
    pub fn owners(&self) -> Vec<u8> {
        self.owners.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn obet(&self) -> f64 {
        self.obet
    }

    /// Square meters reached first by the attack.
    #[wasm_bindgen(getter, js_name = attackArea)]
    pub fn attack_area(&self) -> f64 {
        self.attack_area
    }

    #[wasm_bindgen(getter, js_name = defenseArea)]
    pub fn defense_area(&self) -> f64 {
        self.defense_area
    }

    /// EPV at each cell centre, same layout as `owners`.
    #[wasm_bindgen(getter)]
    pub fn epv(&self) -> Vec<f64> {
        self.epv.clone()
    }
}

fn movers(pos: &[Point], vel: &[Point]) -> Vec<Mover> {
    pos.iter()
        .enumerate()
        .map(|(i, &position)| Mover {
            position,
            velocity: vel.get(i).copied().unwrap_or([0.0; 2]),
        })
        .collect()
}

/// Cell ownership on a soccer pitch with a synthetic EPV surface. Attack
/// plays toward `+x`. Velocities may be empty (everyone standing).
pub fn pitch_control(
    attack: &[f64],
    defense: &[f64],
    attack_vel: &[f64],
    defense_vel: &[f64],
    arrival: bool,
    resolution: f64,
) -> Result<Control, String> {
    let (a, d) = (points(attack)?, points(defense)?);
    if a.is_empty() || d.is_empty() {
        return Err("both teams need at least one player".into());
    }
    let (av, dv) = (points(attack_vel)?, points(defense_vel)?);
    let pitch = PitchSpec::soccer();
    let epv = EpvGrid::synthetic(&pitch, 16, 12);
    let grid = ControlGrid::new(pitch, resolution, &epv).map_err(|e| e.to_string())?;
    let rule = if arrival { ControlRule::Arrival } else { ControlRule::Nearest };
    let k = Kinematics::default();
    let (am, dm) = (movers(&a, &av), movers(&d, &dv));
    let owners = control_map(&grid, &am, &dm, rule, &k);
    let region = dominant_region(&grid, &dm, &am, &k).map_err(|e| e.to_string())?;
    let (attack_area, defense_area) = if arrival {
        (region.attack_area(), region.defense_area())
    } else {
        let count = |o: Owner| owners.iter().filter(|&&x| x == o).count() as f64 * grid.cell_area;
        (count(Owner::Attack), count(Owner::Defense))
    };
    Ok(Control {
        nx: grid.nx,
        ny: grid.ny,
        obet: obet(&grid, &owners).map_err(|e| e.to_string())?,
        owners: owners
            .iter()
            .map(|o| match o {
                Owner::Attack => 0,
                Owner::Defense => 1,
                Owner::Tie => 2,
            })
            .collect(),
        attack_area,
        defense_area,
        epv: grid.epv.clone(),
    })
}

#[wasm_bindgen(js_name = pitchControl)]
pub fn pitch_control_js(
    attack: &[f64],
    defense: &[f64],
    attack_vel: &[f64],
    defense_vel: &[f64],
    arrival: bool,
    resolution: f64,
) -> Result<Control, JsError> {
    pitch_control(attack, defense, attack_vel, defense_vel, arrival, resolution).map_err(|e| JsError::new(&e))
}

fn schedule() -> DiffusionSchedule {
    DiffusionSchedule::new(&ScheduleConfig::default()).expect("default schedule is valid")
}

/// Cumulative signal fraction for steps `1..=S`.
#[wasm_bindgen(js_name = alphaBars)]
pub fn alpha_bars() -> Vec<f64> {
    let s = schedule();
    (1..=s.steps()).map(|i| s.alpha_bar(i)).collect()
}

/// Positions after `step` forward noising steps, applied in the normalized
/// frame and mapped back to meters. `step` 0 returns the input.
pub fn noised(xy: &[f64], step: usize, seed: u64) -> Result<Vec<f64>, String> {
    let ps = points(xy)?;
    let sched = schedule();
    if step > sched.steps() {
        return Err(format!("step {step} beyond the {}-step schedule", sched.steps()));
    }
    if step == 0 {
        return Ok(xy.to_vec());
    }
    let pitch = PitchSpec::soccer();
    let x: Vec<f64> = ps.iter().flat_map(|&p| normalize_point(p, &pitch)).collect();
    let eps = normal_vec(&mut RngStream::new(seed).fork("noise").rng(), x.len());
    let out = noise_with(&x, &eps, step, &sched).map_err(|e| e.to_string())?;
    Ok(out.chunks(2).flat_map(|c| denormalize_point([c[0], c[1]], &pitch)).collect())
}

#[wasm_bindgen(js_name = noised)]
pub fn noised_js(xy: &[f64], step: usize, seed: u64) -> Result<Vec<f64>, JsError> {
    noised(xy, step, seed).map_err(|e| JsError::new(&e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_square_shape() {
        let s = team_shape(&[0.0, 0.0, 1.0, 0.0, 1.0, 1.0, 0.0, 1.0], &[], 25.0).unwrap();
        assert!((s.values[1] - 1.0).abs() < 1e-12);
        assert_eq!((s.values[2], s.values[3]), (1.0, 1.0));
        assert!(s.values[5].is_nan());
        assert_eq!(s.hull.len(), 8);
        let moved = team_shape(&[0.1, 0.0, 1.1, 0.0, 1.1, 1.0, 0.1, 1.0], &[0.0, 0.0, 1.0, 0.0, 1.0, 1.0, 0.0, 1.0], 25.0).unwrap();
        assert!((moved.values[5] - 0.1).abs() < 1e-12);
        assert!((moved.values[6] - 1.0).abs() < 1e-12);
        assert!(team_shape(&[1.0], &[], 25.0).is_err());
        assert!(team_shape(&[0.0, 0.0], &[0.0, 0.0, 1.0, 1.0], 25.0).is_err());
        assert_eq!(shape_columns().len(), 7);
    }

    #[test]
    fn symmetric_control() {
        let c = pitch_control(&[10.0, 0.0], &[-10.0, 0.0], &[], &[], false, 1.0).unwrap();
        assert_eq!((c.nx, c.ny), (105, 68));
        assert_eq!(c.owners.len(), 105 * 68);
        assert_eq!(c.attack_area, c.defense_area);
        assert!(c.obet > 0.5);
        let arrival = pitch_control(&[10.0, 0.0], &[-10.0, 0.0], &[], &[], true, 1.0).unwrap();
        assert_eq!(arrival.owners, c.owners);
        assert!(pitch_control(&[], &[0.0, 0.0], &[], &[], false, 1.0).is_err());
    }

    #[test]
    fn noising_endpoints() {
        let xy = [10.0, -5.0, 30.0, 20.0];
        assert_eq!(noised(&xy, 0, 1).unwrap(), xy);
        let a = noised(&xy, 1, 1).unwrap();
        assert!(a.iter().zip(&xy).all(|(x, y)| (x - y).abs() < 1.0));
        assert_eq!(a, noised(&xy, 1, 1).unwrap());
        assert_ne!(a, noised(&xy, 1, 2).unwrap());
        assert!(noised(&xy, 101, 1).is_err());
        let ab = alpha_bars();
        assert_eq!(ab.len(), 100);
        assert!(ab.windows(2).all(|w| w[1] < w[0]));
    }
}
