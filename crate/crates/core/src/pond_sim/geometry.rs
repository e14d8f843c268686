use serde::{Deserialize, Serialize};

use super::SimError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Obstacle {
    Circle {
        x: f64,
        y: f64,
        radius: f64,
    },
    Rect {
        x_min: f64,
        y_min: f64,
        x_max: f64,
        y_max: f64,
    },
}

impl Obstacle {
    /// Signed distance from a point to the obstacle surface (negative inside).
    pub fn signed_distance(&self, px: f64, py: f64) -> f64 {
        match *self {
            Obstacle::Circle { x, y, radius } => (px - x).hypot(py - y) - radius,
            Obstacle::Rect {
                x_min,
                y_min,
                x_max,
                y_max,
            } => {
                let dx = (x_min - px).max(px - x_max);
                let dy = (y_min - py).max(py - y_max);
                if dx <= 0.0 && dy <= 0.0 {
                    dx.max(dy)
                } else {
                    dx.max(0.0).hypot(dy.max(0.0))
                }
            }
        }
    }

    pub fn contains(&self, px: f64, py: f64) -> bool {
        match *self {
            Obstacle::Circle { x, y, radius } => (px - x).powi(2) + (py - y).powi(2) <= radius * radius,
            Obstacle::Rect {
                x_min,
                y_min,
                x_max,
                y_max,
            } => px >= x_min && px <= x_max && py >= y_min && py <= y_max,
        }
    }

    /// Smallest non-negative ray parameter at which the ray meets the
    /// obstacle; 0 when the origin is inside.
    fn ray_hit(&self, ox: f64, oy: f64, dx: f64, dy: f64) -> Option<f64> {
        match *self {
            Obstacle::Circle { x, y, radius } => {
                let fx = ox - x;
                let fy = oy - y;
                let b = fx * dx + fy * dy;
                let c = fx * fx + fy * fy - radius * radius;
                if c <= 0.0 {
                    return Some(0.0);
                }
                let disc = b * b - c;
                if disc < 0.0 {
                    return None;
                }
                let t = -b - disc.sqrt();
                (t >= 0.0).then_some(t)
            }
            Obstacle::Rect {
                x_min,
                y_min,
                x_max,
                y_max,
            } => {
                let mut t_near = 0.0_f64;
                let mut t_far = f64::INFINITY;
                for (o, d, lo, hi) in [(ox, dx, x_min, x_max), (oy, dy, y_min, y_max)] {
                    if d == 0.0 {
                        if o < lo || o > hi {
                            return None;
                        }
                    } else {
                        let t1 = (lo - o) / d;
                        let t2 = (hi - o) / d;
                        t_near = t_near.max(t1.min(t2));
                        t_far = t_far.min(t1.max(t2));
                    }
                }
                (t_near <= t_far).then_some(t_near)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PondMap {
    pub width: f64,
    pub height: f64,
    #[serde(default)]
    pub obstacles: Vec<Obstacle>,
}

impl PondMap {
    pub fn empty(width: f64, height: f64) -> Self {
        PondMap {
            width,
            height,
            obstacles: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if !(self.width.is_finite() && self.height.is_finite() && self.width > 0.0 && self.height > 0.0) {
            return Err(SimError::ConfigInvalid("pond width and height must be positive".into()));
        }
        for (i, o) in self.obstacles.iter().enumerate() {
            let inside = match *o {
                Obstacle::Circle { x, y, radius } => {
                    radius > 0.0
                        && x - radius >= 0.0
                        && x + radius <= self.width
                        && y - radius >= 0.0
                        && y + radius <= self.height
                }
                Obstacle::Rect {
                    x_min,
                    y_min,
                    x_max,
                    y_max,
                } => {
                    x_min < x_max
                        && y_min < y_max
                        && x_min >= 0.0
                        && y_min >= 0.0
                        && x_max <= self.width
                        && y_max <= self.height
                }
            };
            if !inside {
                return Err(SimError::ConfigInvalid(format!(
                    "obstacle {i} is degenerate or outside the pond"
                )));
            }
        }
        Ok(())
    }

    pub fn inside(&self, x: f64, y: f64) -> bool {
        x >= 0.0 && x <= self.width && y >= 0.0 && y <= self.height
    }

    /// Solid space: outside the walls or inside an obstacle.
    pub fn occupied(&self, x: f64, y: f64) -> bool {
        !self.inside(x, y) || self.obstacles.iter().any(|o| o.contains(x, y))
    }

    /// Signed distance from a point to the nearest solid surface.
    pub fn clearance(&self, x: f64, y: f64) -> f64 {
        let walls = x.min(self.width - x).min(y).min(self.height - y);
        self.obstacles
            .iter()
            .map(|o| o.signed_distance(x, y))
            .fold(walls, f64::min)
    }

    /// Nearest point on any wall or obstacle surface, for a point in free
    /// water.
    pub fn closest_surface_point(&self, x: f64, y: f64) -> (f64, f64) {
        let mut best = (x.min(self.width - x).min(y).min(self.height - y), (x, y));
        let walls = [(x, 0.0), (x, self.height), (0.0, y), (self.width, y)];
        best.1 = walls
            .into_iter()
            .min_by(|a, b| (a.0 - x).hypot(a.1 - y).total_cmp(&(b.0 - x).hypot(b.1 - y)))
            .expect("four walls");
        for o in &self.obstacles {
            let p = match *o {
                Obstacle::Circle { x: cx, y: cy, radius } => {
                    let d = (x - cx).hypot(y - cy);
                    if d == 0.0 {
                        (cx + radius, cy)
                    } else {
                        (cx + radius * (x - cx) / d, cy + radius * (y - cy) / d)
                    }
                }
                Obstacle::Rect {
                    x_min,
                    y_min,
                    x_max,
                    y_max,
                } => (x.clamp(x_min, x_max), y.clamp(y_min, y_max)),
            };
            let d = (p.0 - x).hypot(p.1 - y);
            if d < best.0 {
                best = (d, p);
            }
        }
        best.1
    }

    /// Distance along a ray to the first wall or obstacle.
    pub fn ray_length(&self, x: f64, y: f64, heading: f64) -> Result<f64, SimError> {
        if !self.inside(x, y) {
            return Err(SimError::PoseOutsidePond { x, y });
        }
        let (dy, dx) = heading.sin_cos();
        let mut best = f64::INFINITY;
        if dx > 0.0 {
            best = best.min((self.width - x) / dx);
        } else if dx < 0.0 {
            best = best.min(-x / dx);
        }
        if dy > 0.0 {
            best = best.min((self.height - y) / dy);
        } else if dy < 0.0 {
            best = best.min(-y / dy);
        }
        for o in &self.obstacles {
            if let Some(t) = o.ray_hit(x, y, dx, dy) {
                best = best.min(t);
            }
        }
        Ok(best)
    }
}

/// Free distance ahead of the hull along the heading ray.
pub fn raycast_distance(map: &PondMap, x: f64, y: f64, heading: f64, hull_radius: f64) -> Result<f64, SimError> {
    Ok((map.ray_length(x, y, heading)? - hull_radius).max(0.0))
}
