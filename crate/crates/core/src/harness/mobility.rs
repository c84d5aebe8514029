//! Random-waypoint pedestrian motion.

use rand::Rng;

use crate::channel::Position2D;

/// Uniform point in `[0, width] × [0, height]`.
pub fn uniform_point<R: Rng + ?Sized>(width: f64, height: f64, rng: &mut R) -> Position2D {
    Position2D::new(rng.random::<f64>() * width, rng.random::<f64>() * height)
}

fn reflect(v: f64, hi: f64) -> f64 {
    if hi <= 0.0 {
        return 0.0;
    }
    let period = 2.0 * hi;
    let r = v.rem_euclid(period);
    if r > hi {
        period - r
    } else {
        r
    }
}

/// Users walk toward private waypoints; one that reaches its waypoint stops
/// there for the rest of the slot and draws a new one.
#[derive(Debug, Clone, PartialEq)]
pub struct UserMobility {
    pub waypoints: Vec<Position2D>,
    pub speed: f64,
    pub slot_s: f64,
    pub width: f64,
    pub height: f64,
}

impl UserMobility {
    pub fn new<R: Rng + ?Sized>(
        users: usize,
        speed: f64,
        slot_s: f64,
        width: f64,
        height: f64,
        rng: &mut R,
    ) -> Self {
        let waypoints = (0..users)
            .map(|_| uniform_point(width, height, rng))
            .collect();
        Self {
            waypoints,
            speed,
            slot_s,
            width,
            height,
        }
    }

    /// Moves every user by at most `speed · slot_s`, reflecting at the area
    /// boundary.
    pub fn step<R: Rng + ?Sized>(&mut self, users: &mut [Position2D], rng: &mut R) {
        let reach = self.speed * self.slot_s;
        if reach == 0.0 {
            return;
        }
        for (u, w) in users.iter_mut().zip(self.waypoints.iter_mut()) {
            let d = u.distance(w);
            if d <= reach {
                *u = *w;
                *w = uniform_point(self.width, self.height, rng);
            } else {
                let s = reach / d;
                *u = Position2D::new(
                    reflect(u.x + (w.x - u.x) * s, self.width),
                    reflect(u.y + (w.y - u.y) * s, self.height),
                );
            }
        }
    }
}

pub fn user_mobility_step<R: Rng + ?Sized>(
    users: &mut [Position2D],
    mobility: &mut UserMobility,
    rng: &mut R,
) {
    mobility.step(users, rng);
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn reflection_folds_into_range() {
        assert_eq!(reflect(-3.0, 10.0), 3.0);
        assert_eq!(reflect(12.0, 10.0), 8.0);
        assert_eq!(reflect(5.0, 10.0), 5.0);
    }

    #[test]
    fn zero_speed_keeps_positions() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut users: Vec<_> = (0..5)
            .map(|_| uniform_point(500.0, 500.0, &mut rng))
            .collect();
        let before = users.clone();
        let mut m = UserMobility::new(5, 0.0, 9.7, 500.0, 500.0, &mut rng);
        m.step(&mut users, &mut rng);
        assert_eq!(users, before);
    }

    #[test]
    fn long_run_stays_inside_with_capped_steps() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut users: Vec<_> = (0..20)
            .map(|_| uniform_point(500.0, 500.0, &mut rng))
            .collect();
        let mut m = UserMobility::new(20, 1.0, 9.7, 500.0, 500.0, &mut rng);
        for _ in 0..10_000 {
            let before = users.clone();
            m.step(&mut users, &mut rng);
            for (a, b) in before.iter().zip(&users) {
                assert!(a.distance(b) <= 9.7 + 1e-9);
                assert!((0.0..=500.0).contains(&b.x) && (0.0..=500.0).contains(&b.y));
            }
        }
    }
}
