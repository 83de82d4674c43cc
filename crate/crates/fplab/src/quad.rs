//! Gauss-Legendre panel quadrature with geometric grading toward endpoint
//! singularities, plus a Lanczos gamma used by the kernel normalization.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

/// Nodes and weights of the n-point Gauss-Legendre rule on [-1, 1].
///
/// Rules are computed once by Newton iteration on the Legendre recurrence and
/// cached for the life of the process.
pub fn gl_rule(n: usize) -> &'static (Vec<f64>, Vec<f64>) {
    type Rule = &'static (Vec<f64>, Vec<f64>);
    static CACHE: OnceLock<Mutex<HashMap<usize, Rule>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().unwrap();
    guard
        .entry(n)
        .or_insert_with(|| Box::leak(Box::new(compute_gl(n))))
}

fn compute_gl(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut xs = vec![0.0; n];
    let mut ws = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Chebyshev-like initial guess
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // Legendre P_n(x) and P_n'(x) by recurrence
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = (n as f64) * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        xs[i] = -x;
        xs[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        ws[i] = w;
        ws[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        xs[n / 2] = 0.0;
    }
    (xs, ws)
}

/// Integrate `f` over [lo, hi] with a single n-point Gauss-Legendre panel.
pub fn integrate_gl<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, n: usize) -> f64 {
    let (xs, ws) = gl_rule(n);
    let mid = 0.5 * (lo + hi);
    let hl = 0.5 * (hi - lo);
    let mut acc = 0.0;
    for (x, w) in xs.iter().zip(ws) {
        acc += w * f(mid + hl * x);
    }
    acc * hl
}

/// Panel edges on [lo, hi] geometrically refined toward `lo` (levels halvings).
pub fn graded_toward_lo(lo: f64, hi: f64, levels: usize) -> Vec<(f64, f64)> {
    let len = hi - lo;
    let mut edges = Vec::with_capacity(levels + 2);
    edges.push(lo);
    for k in (1..=levels).rev() {
        edges.push(lo + len * 0.5f64.powi(k as i32));
    }
    edges.push(hi);
    edges.windows(2).map(|w| (w[0], w[1])).collect()
}

/// Panel edges on [lo, hi] geometrically refined toward `hi`.
pub fn graded_toward_hi(lo: f64, hi: f64, levels: usize) -> Vec<(f64, f64)> {
    graded_toward_lo(lo, hi, levels)
        .into_iter()
        .rev()
        .map(|(a, b)| (lo + hi - b, lo + hi - a))
        .collect()
}

/// Integrate with geometric grading toward one or both endpoints.
pub fn integrate_graded<F: FnMut(f64) -> f64>(
    mut f: F,
    lo: f64,
    hi: f64,
    toward_lo: bool,
    toward_hi: bool,
    levels: usize,
    n: usize,
) -> f64 {
    if hi - lo <= 0.0 {
        return 0.0;
    }
    let panels: Vec<(f64, f64)> = match (toward_lo, toward_hi) {
        (true, true) => {
            let mid = 0.5 * (lo + hi);
            let mut p = graded_toward_lo(lo, mid, levels);
            p.extend(graded_toward_hi(mid, hi, levels));
            p
        }
        (true, false) => graded_toward_lo(lo, hi, levels),
        (false, true) => graded_toward_hi(lo, hi, levels),
        (false, false) => vec![(lo, hi)],
    };
    panels
        .into_iter()
        .map(|(a, b)| integrate_gl(&mut f, a, b, n))
        .sum()
}

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// Gamma function (Lanczos approximation, ~15 digits on the real line).
pub fn gamma(x: f64) -> f64 {
    if x < 0.5 {
        // reflection
        std::f64::consts::PI / ((std::f64::consts::PI * x).sin() * gamma(1.0 - x))
    } else {
        let x = x - 1.0;
        let mut a = LANCZOS[0];
        let t = x + LANCZOS_G + 0.5;
        for (i, &c) in LANCZOS.iter().enumerate().skip(1) {
            a += c / (x + i as f64);
        }
        (2.0 * std::f64::consts::PI).sqrt() * t.powf(x + 0.5) * (-t).exp() * a
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gl_integrates_polynomials_exactly() {
        // 8-point rule is exact through degree 15
        let v = integrate_gl(|x| x.powi(14), -1.0, 1.0, 8);
        assert!((v - 2.0 / 15.0).abs() < 1e-14);
        let v = integrate_gl(|x| 3.0 * x * x + 1.0, 0.0, 2.0, 4);
        assert!((v - 10.0).abs() < 1e-13);
    }

    #[test]
    fn graded_handles_endpoint_singularity() {
        // int_0^1 x^{-1/2} dx = 2
        let v = integrate_graded(|x| x.powf(-0.5), 0.0, 1.0, true, false, 60, 8);
        assert!((v - 2.0).abs() < 1e-9, "got {v}");
        // both-endpoint singularity: int_0^1 (x(1-x))^{-1/3} dx = B(2/3,2/3)
        let b = gamma(2.0 / 3.0) * gamma(2.0 / 3.0) / gamma(4.0 / 3.0);
        let v = integrate_graded(|x| (x * (1.0 - x)).powf(-1.0 / 3.0), 0.0, 1.0, true, true, 40, 8);
        assert!((v - b).abs() < 5e-8, "got {v} want {b}");
    }

    #[test]
    fn gamma_reference_values() {
        assert!((gamma(0.5) - std::f64::consts::PI.sqrt()).abs() < 1e-13);
        assert!((gamma(1.0) - 1.0).abs() < 1e-14);
        assert!((gamma(4.0) - 6.0).abs() < 1e-12);
        assert!((gamma(1.5) - 0.886_226_925_452_758).abs() < 1e-13);
    }
}
