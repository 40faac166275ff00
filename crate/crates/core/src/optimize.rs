//! Derivative-free minimization in two dimensions.

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Minimum {
    pub x: [f64; 2],
    pub value: f64,
    pub iterations: usize,
}

/// Nelder-Mead with the standard coefficients (reflection 1, expansion 2,
/// contraction 1/2, shrink 1/2). Stops when every vertex lies within `xtol`
/// of the best vertex in each coordinate, or after `max_iter` iterations.
pub fn nelder_mead<F>(f: F, start: [f64; 2], step: [f64; 2], xtol: f64, max_iter: usize) -> Minimum
where
    F: Fn([f64; 2]) -> f64,
{
    let eval = |x: [f64; 2]| {
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    let mut simplex = [start, [start[0] + step[0], start[1]], [start[0], start[1] + step[1]]];
    let mut values = simplex.map(eval);

    let mut iterations = 0;
    while iterations < max_iter {
        // order best .. worst
        let mut order = [0usize, 1, 2];
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        simplex = order.map(|i| simplex[i]);
        values = order.map(|i| values[i]);

        let spread = simplex[1..]
            .iter()
            .flat_map(|v| (0..2).map(move |d| (v[d] - simplex[0][d]).abs()))
            .fold(0.0, f64::max);
        if spread <= xtol {
            break;
        }
        iterations += 1;

        let centroid = [
            (simplex[0][0] + simplex[1][0]) / 2.0,
            (simplex[0][1] + simplex[1][1]) / 2.0,
        ];
        let along = |t: f64| {
            [
                centroid[0] + t * (simplex[2][0] - centroid[0]),
                centroid[1] + t * (simplex[2][1] - centroid[1]),
            ]
        };

        let reflected = along(-1.0);
        let fr = eval(reflected);
        if fr < values[0] {
            let expanded = along(-2.0);
            let fe = eval(expanded);
            if fe < fr {
                simplex[2] = expanded;
                values[2] = fe;
            } else {
                simplex[2] = reflected;
                values[2] = fr;
            }
            continue;
        }
        if fr < values[1] {
            simplex[2] = reflected;
            values[2] = fr;
            continue;
        }
        let (contracted, fc) = if fr < values[2] {
            let c = along(-0.5);
            (c, eval(c))
        } else {
            let c = along(0.5);
            (c, eval(c))
        };
        if fc < values[2].min(fr) {
            simplex[2] = contracted;
            values[2] = fc;
            continue;
        }
        for i in 1..3 {
            simplex[i] = [
                simplex[0][0] + 0.5 * (simplex[i][0] - simplex[0][0]),
                simplex[0][1] + 0.5 * (simplex[i][1] - simplex[0][1]),
            ];
            values[i] = eval(simplex[i]);
        }
    }

    let best = (0..3).min_by(|&a, &b| values[a].total_cmp(&values[b])).unwrap_or(0);
    Minimum {
        x: simplex[best],
        value: values[best],
        iterations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_rosenbrock_minimum() {
        let rosen = |x: [f64; 2]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let m = nelder_mead(rosen, [-1.2, 1.0], [0.1, 0.1], 1e-9, 10_000);
        assert!((m.x[0] - 1.0).abs() < 1e-6 && (m.x[1] - 1.0).abs() < 1e-6, "{m:?}");
    }

    #[test]
    fn quadratic_bowl() {
        let f = |x: [f64; 2]| (x[0] - 3.0).powi(2) + 2.0 * (x[1] + 1.0).powi(2);
        let m = nelder_mead(f, [0.0, 0.0], [1.0, 1.0], 1e-10, 5_000);
        assert!((m.x[0] - 3.0).abs() < 1e-8 && (m.x[1] + 1.0).abs() < 1e-8);
        assert!(m.value < 1e-15);
    }

    #[test]
    fn nan_is_treated_as_infinite() {
        let f = |x: [f64; 2]| {
            if x[0] < 0.0 {
                f64::NAN
            } else {
                (x[0] - 1.0).powi(2) + x[1] * x[1]
            }
        };
        let m = nelder_mead(f, [0.5, 0.5], [0.2, 0.2], 1e-9, 5_000);
        assert!((m.x[0] - 1.0).abs() < 1e-6);
    }
}
