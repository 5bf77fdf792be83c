//! Quasi-Newton (BFGS) minimisation with central-difference gradients.

#[derive(Debug, Clone, Copy)]
pub struct BfgsOptions {
    pub max_iterations: usize,
    /// Stop once an iteration improves the objective by less than this
    /// fraction of its current value.
    pub rel_tolerance: f64,
    pub grad_tolerance: f64,
}

impl Default for BfgsOptions {
    fn default() -> Self {
        Self {
            max_iterations: 500,
            rel_tolerance: 1e-10,
            grad_tolerance: 1e-12,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn eval<F: Fn(&[f64]) -> f64>(f: &F, x: &[f64]) -> f64 {
    let v = f(x);
    if v.is_finite() {
        v
    } else {
        f64::INFINITY
    }
}

pub fn numeric_gradient<F: Fn(&[f64]) -> f64>(f: &F, x: &[f64]) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            let h = 1e-6 * x[i].abs().max(1.0);
            probe[i] = x[i] + h;
            let up = f(&probe);
            probe[i] = x[i] - h;
            let down = f(&probe);
            probe[i] = x[i];
            (up - down) / (2.0 * h)
        })
        .collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn minimize<F: Fn(&[f64]) -> f64>(f: F, x0: &[f64], opts: BfgsOptions) -> Minimum {
    let n = x0.len();
    let mut x = x0.to_vec();
    let mut fx = eval(&f, &x);
    if n == 0 {
        return Minimum {
            x,
            value: fx,
            iterations: 0,
            converged: true,
        };
    }
    let identity = |h: &mut Vec<f64>| {
        h.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..n {
            h[i * n + i] = 1.0;
        }
    };
    let mut hinv = vec![0.0; n * n];
    identity(&mut hinv);
    let mut g = numeric_gradient(&f, &x);

    for iter in 1..=opts.max_iterations {
        if g.iter().all(|v| v.abs() <= opts.grad_tolerance) || fx == 0.0 {
            return Minimum {
                x,
                value: fx,
                iterations: iter - 1,
                converged: true,
            };
        }
        let mut dir: Vec<f64> = (0..n)
            .map(|i| -(0..n).map(|j| hinv[i * n + j] * g[j]).sum::<f64>())
            .collect();
        let mut slope = dot(&g, &dir);
        if !(slope < 0.0) {
            identity(&mut hinv);
            dir = g.iter().map(|v| -v).collect();
            slope = dot(&g, &dir);
        }

        // Armijo backtracking
        let mut step = 1.0;
        let mut trial: Vec<f64>;
        let mut f_trial;
        loop {
            trial = x.iter().zip(&dir).map(|(xi, di)| xi + step * di).collect();
            f_trial = eval(&f, &trial);
            if f_trial <= fx + 1e-4 * step * slope {
                break;
            }
            step *= 0.5;
            if step < 1e-14 {
                // no descent possible at gradient resolution
                return Minimum {
                    x,
                    value: fx,
                    iterations: iter,
                    converged: true,
                };
            }
        }

        let g_new = numeric_gradient(&f, &trial);
        let s: Vec<f64> = trial.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() {
            let rho = 1.0 / sy;
            // H <- (I - rho s y^T) H (I - rho y s^T) + rho s s^T
            let hy: Vec<f64> = (0..n)
                .map(|i| (0..n).map(|j| hinv[i * n + j] * y[j]).sum())
                .collect();
            let yhy = dot(&y, &hy);
            for i in 0..n {
                for j in 0..n {
                    hinv[i * n + j] += -rho * (hy[i] * s[j] + s[i] * hy[j])
                        + (rho * rho * yhy + rho) * s[i] * s[j];
                }
            }
        }

        let improvement = (fx - f_trial) / fx.abs().max(f64::MIN_POSITIVE);
        x = trial;
        fx = f_trial;
        g = g_new;
        if improvement < opts.rel_tolerance {
            return Minimum {
                x,
                value: fx,
                iterations: iter,
                converged: true,
            };
        }
    }
    Minimum {
        x,
        value: fx,
        iterations: opts.max_iterations,
        converged: false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_bowl() {
        let f = |x: &[f64]| (x[0] - 3.0).powi(2) + 10.0 * (x[1] + 1.0).powi(2) + 2.0;
        let m = minimize(f, &[0.0, 0.0], BfgsOptions::default());
        assert!(m.converged);
        assert!((m.x[0] - 3.0).abs() < 1e-5, "{:?}", m.x);
        assert!((m.x[1] + 1.0).abs() < 1e-5, "{:?}", m.x);
    }

    #[test]
    fn rosenbrock() {
        let f = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let m = minimize(f, &[-1.2, 1.0], BfgsOptions::default());
        assert!((m.x[0] - 1.0).abs() < 1e-3, "{:?}", m);
        assert!((m.x[1] - 1.0).abs() < 2e-3, "{:?}", m);
    }

    #[test]
    fn iteration_cap_reports_non_convergence() {
        let f = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let m = minimize(
            f,
            &[-1.2, 1.0],
            BfgsOptions {
                max_iterations: 2,
                ..Default::default()
            },
        );
        assert!(!m.converged);
        assert_eq!(m.iterations, 2);
    }
}
