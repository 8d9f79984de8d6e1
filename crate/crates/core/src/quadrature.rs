//! Quadrature rules used throughout the crate.
//!
//! Everything is built from three primitives:
//! * Gauss–Legendre rules on an interval (exact for polynomials of degree
//!   `2n-1`),
//! * tensor-product rules on rectangles,
//! * a polar rule on a disc (radial Gauss–Legendre with the Jacobian folded
//!   into the weights, uniform angles; exact for polynomials whose radial
//!   degree stays below the radial rule's reach and whose angular content
//!   stays below the angle count).

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
///
/// Nodes are the roots of the Legendre polynomial `P_n`, found by Newton
/// iteration from the Chebyshev initial guess; weights are
/// `2 / ((1 - x^2) P_n'(x)^2)`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "quadrature order must be at least 1");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Chebyshev-like initial guess for the i-th root (descending order).
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-15 {
                let (_, d2) = legendre_with_derivative(n, x);
                dp = d2;
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
        let (_, d) = legendre_with_derivative(n, 0.0);
        weights[n / 2] = 2.0 / (d * d);
    }
    (nodes, weights)
}

/// Evaluate `P_n(x)` and `P_n'(x)` by the three-term recurrence.
fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// A one-dimensional rule: pairs of (node, weight).
#[derive(Debug, Clone)]
pub struct Rule1d {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule1d {
    /// Gauss–Legendre rule mapped onto `[a, b]`.
    pub fn gauss(n: usize, a: f64, b: f64) -> Self {
        let (xs, ws) = gauss_legendre(n);
        let mid = 0.5 * (a + b);
        let half = 0.5 * (b - a);
        Rule1d {
            nodes: xs.iter().map(|x| mid + half * x).collect(),
            weights: ws.iter().map(|w| w * half).collect(),
        }
    }

    /// Composite Gauss rule: `cells` equal subintervals of `[a, b]`,
    /// `n` points each.
    pub fn composite_gauss(n: usize, a: f64, b: f64, cells: usize) -> Self {
        assert!(cells >= 1);
        let h = (b - a) / cells as f64;
        let mut nodes = Vec::with_capacity(n * cells);
        let mut weights = Vec::with_capacity(n * cells);
        for c in 0..cells {
            let r = Rule1d::gauss(n, a + c as f64 * h, a + (c + 1) as f64 * h);
            nodes.extend(r.nodes);
            weights.extend(r.weights);
        }
        Rule1d { nodes, weights }
    }

    pub fn integrate(&self, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

/// A planar rule: triples of (x, y, weight).
#[derive(Debug, Clone)]
pub struct Rule2d {
    pub points: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
}

impl Rule2d {
    /// Tensor-product Gauss rule on the rectangle `[x0,x1] x [y0,y1]`.
    pub fn tensor(nx: usize, ny: usize, x0: f64, x1: f64, y0: f64, y1: f64) -> Self {
        let rx = Rule1d::gauss(nx, x0, x1);
        let ry = Rule1d::gauss(ny, y0, y1);
        let mut points = Vec::with_capacity(nx * ny);
        let mut weights = Vec::with_capacity(nx * ny);
        for (x, wx) in rx.nodes.iter().zip(&rx.weights) {
            for (y, wy) in ry.nodes.iter().zip(&ry.weights) {
                points.push([*x, *y]);
                weights.push(wx * wy);
            }
        }
        Rule2d { points, weights }
    }

    /// Composite tensor rule subdividing the rectangle into `cx * cy` cells.
    pub fn composite_tensor(
        n: usize,
        x0: f64,
        x1: f64,
        y0: f64,
        y1: f64,
        cx: usize,
        cy: usize,
    ) -> Self {
        let hx = (x1 - x0) / cx as f64;
        let hy = (y1 - y0) / cy as f64;
        let mut points = Vec::new();
        let mut weights = Vec::new();
        for i in 0..cx {
            for j in 0..cy {
                let r = Rule2d::tensor(
                    n,
                    n,
                    x0 + i as f64 * hx,
                    x0 + (i + 1) as f64 * hx,
                    y0 + j as f64 * hy,
                    y0 + (j + 1) as f64 * hy,
                );
                points.extend(r.points);
                weights.extend(r.weights);
            }
        }
        Rule2d { points, weights }
    }

    /// Polar rule on the disc of given `radius` centred at the origin:
    /// `nr` radial Gauss points (Jacobian `r` folded into the weight) times
    /// `na` equally spaced angles with uniform weight `2*pi/na`.
    pub fn disc(nr: usize, na: usize, radius: f64) -> Self {
        let rr = Rule1d::gauss(nr, 0.0, radius);
        let dtheta = 2.0 * std::f64::consts::PI / na as f64;
        let mut points = Vec::with_capacity(nr * na);
        let mut weights = Vec::with_capacity(nr * na);
        for (r, wr) in rr.nodes.iter().zip(&rr.weights) {
            for k in 0..na {
                let th = dtheta * (k as f64 + 0.5);
                points.push([r * th.cos(), r * th.sin()]);
                weights.push(wr * r * dtheta);
            }
        }
        Rule2d { points, weights }
    }

    pub fn integrate(&self, mut f: impl FnMut(f64, f64) -> f64) -> f64 {
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(p, &w)| w * f(p[0], p[1]))
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn gauss_integrates_monomials_exactly() {
        for n in 1..=12 {
            let r = Rule1d::gauss(n, -1.0, 1.0);
            for k in 0..2 * n {
                let exact = if k % 2 == 0 {
                    2.0 / (k as f64 + 1.0)
                } else {
                    0.0
                };
                let got = r.integrate(|x| x.powi(k as i32));
                assert_relative_eq!(got, exact, epsilon = 1e-13, max_relative = 1e-13);
            }
        }
    }

    #[test]
    fn gauss_high_order_is_stable() {
        let r = Rule1d::gauss(64, 0.0, 1.0);
        assert_relative_eq!(r.weights.iter().sum::<f64>(), 1.0, epsilon = 1e-14);
        let got = r.integrate(|x| x.exp());
        assert_relative_eq!(got, std::f64::consts::E - 1.0, epsilon = 1e-13);
    }

    #[test]
    fn disc_rule_matches_polynomial_moments() {
        // Reference moments on the disc of radius R:
        //   |D| = pi R^2,  int x^2 = pi R^4 / 4,  int (x^2+y^2) = pi R^4 / 2,
        //   int x^4 = pi R^6 / 8,  int x^2 y^2 = pi R^6 / 24.
        let rad = 0.7;
        let d = Rule2d::disc(16, 32, rad);
        let pi = std::f64::consts::PI;
        assert_relative_eq!(d.integrate(|_, _| 1.0), pi * rad.powi(2), max_relative = 1e-13);
        assert_relative_eq!(
            d.integrate(|x, _| x * x),
            pi * rad.powi(4) / 4.0,
            max_relative = 1e-13
        );
        assert_relative_eq!(
            d.integrate(|x, y| x * x + y * y),
            pi * rad.powi(4) / 2.0,
            max_relative = 1e-13
        );
        assert_relative_eq!(
            d.integrate(|x, _| x.powi(4)),
            pi * rad.powi(6) / 8.0,
            max_relative = 1e-13
        );
        assert_relative_eq!(
            d.integrate(|x, y| x * x * y * y),
            pi * rad.powi(6) / 24.0,
            max_relative = 1e-13
        );
        // Odd moments vanish.
        assert!(d.integrate(|x, y| x * y * y).abs() < 1e-15);
    }

    #[test]
    fn composite_rules_partition_the_domain() {
        let r = Rule1d::composite_gauss(4, 0.0, 2.0, 7);
        assert_relative_eq!(r.integrate(|x| x * x * x), 4.0, max_relative = 1e-13);
        let t = Rule2d::composite_tensor(3, -1.0, 1.0, 0.0, 1.0, 3, 2);
        assert_relative_eq!(t.integrate(|x, y| x * x * y), 1.0 / 3.0, max_relative = 1e-13);
    }
}
