use std::f64::consts::TAU;

/// Periodic cubic interpolating spline on `[x0, x0 + period)`, C2 across the seam.
#[derive(Debug, Clone)]
pub struct PeriodicSpline {
    knots: Vec<f64>,
    values: Vec<f64>,
    // Second derivatives at the knots.
    moments: Vec<f64>,
    period: f64,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SplineError {
    #[error("need at least 3 knots, got {0}")]
    TooFewKnots(usize),
    #[error("knots must be strictly increasing within one period")]
    BadKnots,
    #[error("singular spline system")]
    Singular,
}

impl PeriodicSpline {
    pub fn fit(knots: &[f64], values: &[f64], period: f64) -> Result<Self, SplineError> {
        let n = knots.len();
        assert_eq!(n, values.len());
        if n < 3 {
            return Err(SplineError::TooFewKnots(n));
        }
        if knots.windows(2).any(|w| w[1] <= w[0]) || knots[n - 1] - knots[0] >= period {
            return Err(SplineError::BadKnots);
        }
        let h: Vec<f64> = (0..n)
            .map(|i| if i + 1 < n { knots[i + 1] - knots[i] } else { knots[0] + period - knots[n - 1] })
            .collect();
        // Cyclic tridiagonal system in the moments, solved densely (n is small).
        let mut a = vec![vec![0.0; n]; n];
        let mut rhs = vec![0.0; n];
        for i in 0..n {
            let prev = (i + n - 1) % n;
            let next = (i + 1) % n;
            a[i][prev] += h[prev];
            a[i][i] += 2.0 * (h[prev] + h[i]);
            a[i][next] += h[i];
            rhs[i] = 6.0 * ((values[next] - values[i]) / h[i] - (values[i] - values[prev]) / h[prev]);
        }
        let moments = solve_dense(a, rhs).ok_or(SplineError::Singular)?;
        Ok(Self { knots: knots.to_vec(), values: values.to_vec(), moments, period })
    }

    pub fn eval(&self, x: f64) -> f64 {
        let n = self.knots.len();
        let x0 = self.knots[0];
        let mut t = (x - x0).rem_euclid(self.period) + x0;
        if t >= x0 + self.period {
            t = x0;
        }
        // Last interval wraps from the final knot back to the first.
        let i = match self.knots.partition_point(|&k| k <= t) {
            0 => n - 1,
            k => k - 1,
        };
        let next = (i + 1) % n;
        let xi = self.knots[i];
        let xn = if next == 0 { x0 + self.period } else { self.knots[next] };
        let h = xn - xi;
        let (a, b) = ((xn - t) / h, (t - xi) / h);
        let (mi, mn) = (self.moments[i], self.moments[next]);
        a * self.values[i] + b * self.values[next] + ((a * a * a - a) * mi + (b * b * b - b) * mn) * h * h / 6.0
    }
}

impl PeriodicSpline {
    /// Convenience for angle-parameterized data.
    pub fn fit_angular(angles: &[f64], values: &[f64]) -> Result<Self, SplineError> {
        Self::fit(angles, values, TAU)
    }
}

fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in (col + 1)..n {
            let f = a[row][col] / a[col][col];
            if f == 0.0 {
                continue;
            }
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = ((row + 1)..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interpolates_knots_exactly() {
        let knots = [0.1, 1.0, 2.2, 3.0, 4.5, 5.9];
        let vals = [0.3, -0.2, 0.5, 0.0, -0.4, 0.1];
        let s = PeriodicSpline::fit_angular(&knots, &vals).unwrap();
        for (k, v) in knots.iter().zip(vals) {
            assert!((s.eval(*k) - v).abs() < 1e-12);
            assert!((s.eval(*k + TAU) - v).abs() < 1e-12);
        }
    }

    #[test]
    fn smooth_across_seam() {
        let knots = [0.5, 2.0, 3.5, 5.0];
        let vals = [1.0, -1.0, 0.5, 0.2];
        let s = PeriodicSpline::fit_angular(&knots, &vals).unwrap();
        let seam = 0.5 + TAU;
        let d = 1e-5;
        let left = (s.eval(seam - d) - s.eval(seam - 2.0 * d)) / d;
        let right = (s.eval(seam + 2.0 * d) - s.eval(seam + d)) / d;
        assert!((left - right).abs() < 1e-3);
        assert!((s.eval(seam - 1e-12) - s.eval(seam + 1e-12)).abs() < 1e-9);
    }

    #[test]
    fn reproduces_sinusoid_closely() {
        let n = 24;
        let knots: Vec<f64> = (0..n).map(|i| i as f64 * TAU / n as f64).collect();
        let vals: Vec<f64> = knots.iter().map(|x| x.sin()).collect();
        let s = PeriodicSpline::fit_angular(&knots, &vals).unwrap();
        for i in 0..200 {
            let x = i as f64 * 0.0314;
            assert!((s.eval(x) - x.sin()).abs() < 1e-4);
        }
    }

    #[test]
    fn rejects_bad_knots() {
        assert!(PeriodicSpline::fit_angular(&[0.0, 1.0], &[0.0, 1.0]).is_err());
        assert!(PeriodicSpline::fit_angular(&[0.0, 1.0, 1.0], &[0.0, 1.0, 2.0]).is_err());
    }
}
