//! Derivative-free local minimization (Nelder–Mead).

#[derive(Debug, Clone, Copy)]
pub struct NelderMead {
    pub max_evals: usize,
    /// Stop once the spread of simplex values falls below this.
    pub ftol: f64,
    pub initial_step: f64,
}

impl Default for NelderMead {
    fn default() -> Self {
        NelderMead {
            max_evals: 2000,
            ftol: 1e-12,
            initial_step: 0.25,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub evals: usize,
    pub converged: bool,
}

impl NelderMead {
    pub fn minimize<F: FnMut(&[f64]) -> f64>(&self, mut f: F, start: &[f64]) -> Minimum {
        let dim = start.len();
        let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(dim + 1);
        simplex.push(start.to_vec());
        for i in 0..dim {
            let mut v = start.to_vec();
            v[i] += self.initial_step;
            simplex.push(v);
        }
        let mut values: Vec<f64> = simplex.iter().map(|v| f(v)).collect();
        let mut evals = dim + 1;
        let mut converged = false;

        while evals < self.max_evals {
            let mut order: Vec<usize> = (0..=dim).collect();
            order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
            simplex = order.iter().map(|&i| simplex[i].clone()).collect();
            values = order.iter().map(|&i| values[i]).collect();

            if (values[dim] - values[0]).abs() <= self.ftol {
                converged = true;
                break;
            }

            let centroid: Vec<f64> = (0..dim)
                .map(|k| simplex[..dim].iter().map(|v| v[k]).sum::<f64>() / dim as f64)
                .collect();
            let along = |t: f64| -> Vec<f64> {
                centroid
                    .iter()
                    .zip(&simplex[dim])
                    .map(|(c, w)| c + t * (c - w))
                    .collect()
            };

            let xr = along(1.0);
            let fr = f(&xr);
            evals += 1;
            if fr < values[0] {
                let xe = along(2.0);
                let fe = f(&xe);
                evals += 1;
                if fe < fr {
                    simplex[dim] = xe;
                    values[dim] = fe;
                } else {
                    simplex[dim] = xr;
                    values[dim] = fr;
                }
                continue;
            }
            if fr < values[dim - 1] {
                simplex[dim] = xr;
                values[dim] = fr;
                continue;
            }
            let (xc, fc) = if fr < values[dim] {
                let xc = along(0.5);
                let fc = f(&xc);
                (xc, fc)
            } else {
                let xc = along(-0.5);
                let fc = f(&xc);
                (xc, fc)
            };
            evals += 1;
            if fc < values[dim].min(fr) {
                simplex[dim] = xc;
                values[dim] = fc;
                continue;
            }
            // Shrink toward the best vertex.
            let best = simplex[0].clone();
            for i in 1..=dim {
                for k in 0..dim {
                    simplex[i][k] = best[k] + 0.5 * (simplex[i][k] - best[k]);
                }
                values[i] = f(&simplex[i]);
                evals += 1;
            }
        }

        let best = (0..=dim)
            .min_by(|&i, &j| values[i].total_cmp(&values[j]))
            .expect("simplex is non-empty");
        Minimum {
            x: simplex[best].clone(),
            value: values[best],
            evals,
            converged,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rosenbrock() {
        let nm = NelderMead {
            max_evals: 20_000,
            ftol: 1e-20,
            initial_step: 0.5,
        };
        let m = nm.minimize(
            |v| (1.0 - v[0]).powi(2) + 100.0 * (v[1] - v[0] * v[0]).powi(2),
            &[-1.2, 1.0],
        );
        assert!(m.converged);
        assert!((m.x[0] - 1.0).abs() < 1e-5 && (m.x[1] - 1.0).abs() < 1e-5, "{:?}", m.x);
    }

    #[test]
    fn budget_exhaustion_reports_best() {
        let nm = NelderMead {
            max_evals: 10,
            ..Default::default()
        };
        let m = nm.minimize(|v| v[0] * v[0] + v[1] * v[1], &[3.0, 4.0]);
        assert!(!m.converged);
        assert!(m.value <= 25.0);
    }
}
