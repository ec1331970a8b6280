//! Composite Gauss-Legendre quadrature.

use std::f64::consts::PI;

/// Nodes and weights on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// `order`-point rule; nodes found by Newton iteration on `P_order`.
    pub fn new(order: usize) -> Self {
        assert!(order >= 1);
        let mut nodes = vec![0.0; order];
        let mut weights = vec![0.0; order];
        for k in 0..order.div_ceil(2) {
            let mut x = (PI * (k as f64 + 0.75) / (order as f64 + 0.5)).cos();
            for _ in 0..100 {
                let (p, d) = legendre(order, x);
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(order, x);
            let w = 2.0 / ((1.0 - x * x) * d * d);
            nodes[k] = -x;
            nodes[order - 1 - k] = x;
            weights[k] = w;
            weights[order - 1 - k] = w;
        }
        GaussLegendre { nodes, weights }
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w * f(mid + half * x))
            .sum::<f64>()
            * half
    }

    /// Sums the rule over `panels` sub-intervals whose widths grow
    /// geometrically from `a` to `b` (`0 < a < b`), which suits integrands
    /// that decay like a power of the abscissa.
    pub fn integrate_geometric(&self, f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
        assert!(a > 0.0 && b >= a && panels >= 1);
        if a == b {
            return 0.0;
        }
        let ratio = (b / a).powf(1.0 / panels as f64);
        let mut lo = a;
        let mut total = 0.0;
        for p in 0..panels {
            let hi = if p + 1 == panels { b } else { lo * ratio };
            total += self.integrate(&f, lo, hi);
            lo = hi;
        }
        total
    }
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let d = n as f64 * (x * p - p0) / (x * x - 1.0);
    (p, d)
}
