//! Derivative-free simplex (Nelder-Mead) minimizer.
//!
//! Works on unconstrained parameter vectors; callers constrain parameters
//! via transforms (log for variances, logit for bounded quantities).

/// Options controlling the simplex search.
#[derive(Debug, Clone)]
pub struct SimplexOptions {
    pub max_iterations: usize,
    /// Converged when the simplex function spread is below this, relative to
    /// the best value.
    pub rel_tol: f64,
    /// Initial displacement per coordinate when building the simplex.
    pub initial_step: f64,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        Self { max_iterations: 500, rel_tol: 1e-9, initial_step: 0.25 }
    }
}

#[derive(Debug, Clone)]
pub struct SimplexOutcome {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn guard(v: f64) -> f64 {
    if v.is_finite() {
        v
    } else {
        f64::MAX / 4.0
    }
}

/// Minimize `f` starting from `x0`.
pub fn nelder_mead<F>(mut f: F, x0: &[f64], opts: &SimplexOptions) -> SimplexOutcome
where
    F: FnMut(&[f64]) -> f64,
{
    let n = x0.len();
    if n == 0 {
        let value = guard(f(x0));
        return SimplexOutcome { x: Vec::new(), value, iterations: 0, converged: true };
    }

    // Initial simplex: x0 plus a displacement along each axis.
    let mut points: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    points.push(x0.to_vec());
    for i in 0..n {
        let mut p = x0.to_vec();
        let step = if p[i].abs() > 1.0 { opts.initial_step * p[i].abs() } else { opts.initial_step };
        p[i] += step;
        points.push(p);
    }
    let mut values: Vec<f64> = points.iter().map(|p| guard(f(p))).collect();

    let (alpha, gamma, rho, sigma) = (1.0, 2.0, 0.5, 0.5);
    let mut iterations = 0;
    let mut converged = false;

    while iterations < opts.max_iterations {
        iterations += 1;

        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap());
        let best = order[0];
        let worst = order[n];
        let second_worst = order[n - 1];

        let spread = (values[worst] - values[best]).abs();
        if spread <= opts.rel_tol * (values[best].abs() + 1e-12) {
            converged = true;
            break;
        }

        // Centroid of all points except the worst.
        let mut centroid = vec![0.0; n];
        for (idx, p) in points.iter().enumerate() {
            if idx == worst {
                continue;
            }
            for (c, &v) in centroid.iter_mut().zip(p) {
                *c += v / n as f64;
            }
        }

        let blend = |a: &[f64], b: &[f64], t: f64| -> Vec<f64> {
            a.iter().zip(b).map(|(&x, &y)| x + t * (y - x)).collect()
        };

        // Reflect the worst point through the centroid.
        let reflected = blend(&centroid, &points[worst], -alpha);
        let f_reflected = guard(f(&reflected));

        if f_reflected < values[best] {
            let expanded = blend(&centroid, &points[worst], -gamma);
            let f_expanded = guard(f(&expanded));
            if f_expanded < f_reflected {
                points[worst] = expanded;
                values[worst] = f_expanded;
            } else {
                points[worst] = reflected;
                values[worst] = f_reflected;
            }
            continue;
        }
        if f_reflected < values[second_worst] {
            points[worst] = reflected;
            values[worst] = f_reflected;
            continue;
        }

        // Contract toward the centroid.
        let contracted = if f_reflected < values[worst] {
            blend(&centroid, &reflected, rho)
        } else {
            blend(&centroid, &points[worst], rho)
        };
        let f_contracted = guard(f(&contracted));
        if f_contracted < values[worst].min(f_reflected) {
            points[worst] = contracted;
            values[worst] = f_contracted;
            continue;
        }

        // Shrink everything toward the best point.
        let best_point = points[best].clone();
        for idx in 0..=n {
            if idx == best {
                continue;
            }
            points[idx] = blend(&best_point, &points[idx], sigma);
            values[idx] = guard(f(&points[idx]));
        }
    }

    let (arg_best, &value) = values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .unwrap();
    SimplexOutcome { x: points[arg_best].clone(), value, iterations, converged }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimizes_quadratic() {
        let f = |x: &[f64]| (x[0] - 3.0).powi(2) + 2.0 * (x[1] + 1.0).powi(2) + 5.0;
        let out = nelder_mead(f, &[0.0, 0.0], &SimplexOptions::default());
        assert!(out.converged);
        assert!((out.x[0] - 3.0).abs() < 1e-4, "x0={}", out.x[0]);
        assert!((out.x[1] + 1.0).abs() < 1e-4, "x1={}", out.x[1]);
        assert!((out.value - 5.0).abs() < 1e-7);
    }

    #[test]
    fn minimizes_rosenbrock() {
        let f = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let out = nelder_mead(f, &[-1.2, 1.0], &SimplexOptions { max_iterations: 2000, ..Default::default() });
        assert!((out.x[0] - 1.0).abs() < 1e-3);
        assert!((out.x[1] - 1.0).abs() < 1e-3);
    }

    #[test]
    fn survives_non_finite_regions() {
        let f = |x: &[f64]| if x[0] < 0.0 { f64::NAN } else { (x[0] - 2.0).powi(2) };
        let out = nelder_mead(f, &[1.0], &SimplexOptions::default());
        assert!((out.x[0] - 2.0).abs() < 1e-4);
    }

    #[test]
    fn empty_parameter_vector_is_a_no_op() {
        let out = nelder_mead(|_| 7.0, &[], &SimplexOptions::default());
        assert_eq!(out.value, 7.0);
        assert!(out.converged);
    }
}
