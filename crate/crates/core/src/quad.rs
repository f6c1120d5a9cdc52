//! Gauss–Legendre quadrature on finite intervals.

use num_complex::Complex64;
use once_cell::sync::Lazy;

/// Nodes and weights of an n-point Gauss–Legendre rule on [-1, 1].
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// Compute nodes as roots of the Legendre polynomial P_n via Newton
    /// iteration started from the Chebyshev-like asymptotic guess.
    pub fn new(n: usize) -> Self {
        assert!(n >= 2);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_and_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            weights[i] = w;
            nodes[n - 1 - i] = x;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    /// ∫_a^b f(x) dx for a complex-valued integrand.
    pub fn integrate(&self, a: f64, b: f64, f: impl Fn(f64) -> Complex64) -> Complex64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut acc = Complex64::new(0.0, 0.0);
        for (&x, &w) in self.nodes.iter().zip(&self.weights) {
            acc += w * f(half * x + mid);
        }
        acc * half
    }

    /// Composite rule: [a, b] split into `panels` equal panels.
    pub fn integrate_composite(
        &self,
        a: f64,
        b: f64,
        panels: usize,
        f: &impl Fn(f64) -> Complex64,
    ) -> Complex64 {
        let panels = panels.max(1);
        let step = (b - a) / panels as f64;
        let mut acc = Complex64::new(0.0, 0.0);
        for p in 0..panels {
            let lo = a + p as f64 * step;
            acc += self.integrate(lo, lo + step, f);
        }
        acc
    }
}

/// (P_n(x), P_n'(x)) by the three-term recurrence.
fn legendre_and_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Shared 64-point rule (workhorse of the overlap kernel).
pub static GL64: Lazy<GaussLegendre> = Lazy::new(|| GaussLegendre::new(64));

/// Shared 128-point rule (refinement checks).
pub static GL128: Lazy<GaussLegendre> = Lazy::new(|| GaussLegendre::new(128));

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integrates_polynomials_exactly() {
        // GL-64 is exact for degree <= 127.
        let gl = GaussLegendre::new(64);
        let got = gl.integrate(0.0, 1.0, |x| Complex64::new(x.powi(9), 0.0));
        assert!((got.re - 0.1).abs() < 1e-15, "{got}");
    }

    #[test]
    fn oscillatory_integral_matches_closed_form() {
        // ∫_{-1}^{1} e^{i w x} dx = 2 sin(w)/w
        let gl = GaussLegendre::new(64);
        let w = 30.0;
        let got = gl.integrate(-1.0, 1.0, |x| Complex64::new(0.0, w * x).exp());
        let want = 2.0 * w.sin() / w;
        assert!((got.re - want).abs() < 1e-12 && got.im.abs() < 1e-12);
    }

    #[test]
    fn composite_matches_single_panel_on_smooth_integrand() {
        let gl = GaussLegendre::new(64);
        let f = |x: f64| Complex64::new((-x * x).exp(), 0.0);
        let a = gl.integrate(-1.0, 1.0, f);
        let b = gl.integrate_composite(-1.0, 1.0, 7, &f);
        assert!((a - b).norm() < 1e-14);
    }

    #[test]
    fn weights_sum_to_interval_length() {
        for n in [2, 5, 64, 128] {
            let gl = GaussLegendre::new(n);
            let s: f64 = gl.weights.iter().sum();
            assert!((s - 2.0).abs() < 1e-13, "n={n} sum={s}");
        }
    }
}
