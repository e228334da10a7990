//! Reference implementations used only by tests.

/// Neumaier-compensated sum.
pub fn ksum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut c = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            c += (sum - t) + v;
        } else {
            c += (v - t) + sum;
        }
        sum = t;
    }
    sum + c
}

#[derive(Debug, Clone, Copy)]
pub struct OracleFit {
    pub beta: [f64; 2],
    pub se: [f64; 2],
}

fn loglik(y: &[u64], x: &[f64], b: [f64; 2]) -> f64 {
    ksum(y.iter().zip(x).map(|(&yi, &xi)| {
        let eta = b[0] + b[1] * xi;
        yi as f64 * eta - eta.exp()
    }))
}

/// Damped Newton–Raphson on the Poisson log-likelihood with compensated
/// sums, iterated until the step is below 1e-12.
pub fn newton_poisson(y: &[u64], x: &[f64]) -> OracleFit {
    let mean = y.iter().sum::<u64>() as f64 / y.len() as f64;
    let mut b = [mean.ln(), 0.0];
    for _ in 0..500 {
        let mu: Vec<f64> = x.iter().map(|&xi| (b[0] + b[1] * xi).exp()).collect();
        let g0 = ksum(y.iter().zip(&mu).map(|(&yi, &m)| yi as f64 - m));
        let g1 = ksum(y.iter().zip(&mu).zip(x).map(|((&yi, &m), &xi)| (yi as f64 - m) * xi));
        let h00 = ksum(mu.iter().copied());
        let h01 = ksum(mu.iter().zip(x).map(|(&m, &xi)| m * xi));
        let h11 = ksum(mu.iter().zip(x).map(|(&m, &xi)| m * xi * xi));
        let det = h00 * h11 - h01 * h01;
        let step = [(h11 * g0 - h01 * g1) / det, (h00 * g1 - h01 * g0) / det];
        let base = loglik(y, x, b);
        let mut t = 1.0;
        let mut next = [b[0] + step[0], b[1] + step[1]];
        while loglik(y, x, next) < base - 1e-14 * base.abs() && t > 1e-6 {
            t *= 0.5;
            next = [b[0] + t * step[0], b[1] + t * step[1]];
        }
        b = next;
        if (t * step[0]).abs().max((t * step[1]).abs()) < 1e-12 {
            break;
        }
    }
    let mu: Vec<f64> = x.iter().map(|&xi| (b[0] + b[1] * xi).exp()).collect();
    let h00 = ksum(mu.iter().copied());
    let h01 = ksum(mu.iter().zip(x).map(|(&m, &xi)| m * xi));
    let h11 = ksum(mu.iter().zip(x).map(|(&m, &xi)| m * xi * xi));
    let det = h00 * h11 - h01 * h01;
    OracleFit { beta: b, se: [(h11 / det).sqrt(), (h00 / det).sqrt()] }
}
