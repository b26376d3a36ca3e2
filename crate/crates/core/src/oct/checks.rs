use crate::model::ProtocolSolution;

/// Which signal is compared with the singular arc `Z eᵗ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArcField {
    /// The auxiliary control `v = u^{(n)}`.
    V,
    /// The physical control `u = z₀`.
    U,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArcFit {
    /// Least-squares amplitude of `Z eᵗ` on the window.
    pub z: f64,
    /// `max |f − Z eᵗ| / |Z eᵗ|` on the window.
    pub deviation: f64,
}

/// Fits the chosen field to `Z eᵗ` on `[t_a, t_b]` using the trajectory grid.
pub fn singular_consistency_check(sol: &ProtocolSolution, window: (f64, f64), field: ArcField) -> ArcFit {
    let (ta, tb) = window;
    let traj = &sol.trajectory;
    let eps = 1e-12 * traj.horizon();
    let samples: Vec<(f64, f64)> = traj
        .grid(traj.grid_points)
        .into_iter()
        .filter(|&t| t >= ta - eps && t <= tb + eps)
        .map(|t| {
            let s = traj.sample(t);
            let f = match field {
                ArcField::V => s.v,
                ArcField::U => s.u,
            };
            (t.exp(), f)
        })
        .collect();
    let num: f64 = samples.iter().map(|(e, f)| e * f).sum();
    let den: f64 = samples.iter().map(|(e, _)| e * e).sum();
    let z = num / den;
    let deviation = samples
        .iter()
        .map(|(e, f)| (f - z * e).abs() / (z * e).abs())
        .fold(0.0, f64::max);
    ArcFit { z, deviation }
}

/// Default window `[0.1 T, 0.9 T]`.
pub fn default_window(horizon: f64) -> (f64, f64) {
    (0.1 * horizon, 0.9 * horizon)
}

/// `max |p_y + p_z|` on the window for first-order optimal solutions; the
/// singular set is `p_y + p_z = 0`.
pub fn adjoint_sum_max(sol: &ProtocolSolution, window: (f64, f64)) -> f64 {
    let traj = &sol.trajectory;
    traj.grid(traj.grid_points)
        .into_iter()
        .filter(|&t| t >= window.0 && t <= window.1)
        .map(|t| {
            let p = traj.sample(t).p;
            (p[0] + p[1]).abs()
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oct::singular_solution;

    #[test]
    fn singular_arc_is_exactly_exponential() {
        let sol = singular_solution(1.0).unwrap();
        let fit = singular_consistency_check(&sol, (0.1, 0.9), ArcField::V);
        assert!(fit.deviation < 1e-14);
        assert!((fit.z - 1.0 / 1f64.sinh()).abs() < 1e-14);
        assert_eq!(adjoint_sum_max(&sol, (0.1, 0.9)), 0.0);
    }
}
