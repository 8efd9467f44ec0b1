//! Quadrature rules: Gauss-Legendre and Gauss-Hermite node generation and an
//! adaptive Gauss-Kronrod integrator for complex-valued integrands.

use num_complex::Complex64;

/// Gauss-Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 2);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Chebyshev-based initial guess, then Newton on P_n.
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut pp = 0.0;
        for _ in 0..100 {
            let mut p0 = 1.0;
            let mut p1 = 0.0;
            for k in 0..n {
                let p2 = p1;
                p1 = p0;
                p0 = ((2 * k + 1) as f64 * z * p1 - k as f64 * p2) / (k as f64 + 1.0);
            }
            pp = n as f64 * (z * p0 - p1) / (z * z - 1.0);
            let dz = p0 / pp;
            z -= dz;
            if dz.abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = -z;
        nodes[n - 1 - i] = z;
        let w = 2.0 / ((1.0 - z * z) * pp * pp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Gauss-Hermite nodes and weights for the weight function exp(-x^2).
pub fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 2);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    // Orthonormal recurrence: p_{k+1} = x sqrt(2/(k+1)) p_k - sqrt(k/(k+1)) p_{k-1}.
    let eval = |x: f64| -> (f64, f64, Vec<f64>) {
        let mut values = Vec::with_capacity(n);
        let mut p0 = std::f64::consts::PI.powf(-0.25);
        let mut p1 = 0.0;
        values.push(p0);
        for k in 0..n {
            let p2 = p1;
            p1 = p0;
            p0 = x * (2.0 / (k as f64 + 1.0)).sqrt() * p1 - (k as f64 / (k as f64 + 1.0)).sqrt() * p2;
            if k + 1 < n {
                values.push(p0);
            }
        }
        let deriv = (2.0 * n as f64).sqrt() * p1;
        (p0, deriv, values)
    };
    // Positive roots, largest first.
    let mut roots: Vec<f64> = Vec::with_capacity(m);
    for i in 0..m {
        let mut z = match i {
            0 => {
                let a = (2 * n + 1) as f64;
                a.sqrt() - 1.85575 * a.powf(-1.0 / 6.0)
            }
            1 => roots[0] - 1.14 * (n as f64).powf(0.426) / roots[0],
            2 => 1.86 * roots[1] - 0.86 * roots[0],
            3 => 1.91 * roots[2] - 0.91 * roots[1],
            _ => 2.0 * roots[i - 1] - roots[i - 2],
        };
        for _ in 0..200 {
            let (p, dp, _) = eval(z);
            let dz = p / dp;
            z -= dz;
            if dz.abs() < 1e-14 * (1.0 + z.abs()) {
                break;
            }
        }
        roots.push(z);
    }
    for (i, &z) in roots.iter().enumerate() {
        let (_, _, values) = eval(z);
        let w = 1.0 / values.iter().map(|v| v * v).sum::<f64>();
        nodes[n - 1 - i] = z;
        nodes[i] = -z;
        weights[n - 1 - i] = w;
        weights[i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
        let (_, _, values) = eval(0.0);
        weights[n / 2] = 1.0 / values.iter().map(|v| v * v).sum::<f64>();
    }
    (nodes, weights)
}

// 15-point Kronrod extension of 7-point Gauss (abscissae for the positive
// half, QUADPACK values).
const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

fn gk15<F: Fn(f64) -> Complex64>(f: &F, a: f64, b: f64) -> (Complex64, f64) {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let fc = f(mid);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let dx = half * XGK[j];
        let fsum = f(mid - dx) + f(mid + dx);
        kronrod += WGK[j] * fsum;
        if j % 2 == 1 {
            gauss += WG[j / 2] * fsum;
        }
    }
    kronrod *= half;
    gauss *= half;
    ((kronrod), (kronrod - gauss).norm())
}

/// Adaptive Gauss-Kronrod integration of a complex-valued function on [a, b].
///
/// Returns `None` if the requested absolute tolerance is not reached within
/// the subdivision budget or the integrand produces non-finite values.
pub fn adaptive_kronrod<F: Fn(f64) -> Complex64>(
    f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
) -> Option<Complex64> {
    // (interval, estimate, error), processed worst-first via simple scan.
    let mut segments: Vec<(f64, f64, Complex64, f64)> = Vec::new();
    let (v, e) = gk15(&f, a, b);
    segments.push((a, b, v, e));
    for _ in 0..2000 {
        let total_err: f64 = segments.iter().map(|s| s.3).sum();
        let total: Complex64 = segments.iter().map(|s| s.2).sum();
        if !total.re.is_finite() || !total.im.is_finite() {
            return None;
        }
        if total_err < abs_tol {
            return Some(total);
        }
        // Split the segment with the largest error.
        let (idx, _) = segments
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .unwrap();
        let (sa, sb, _, _) = segments.swap_remove(idx);
        let sm = 0.5 * (sa + sb);
        if sm <= sa || sm >= sb {
            return None; // interval exhausted at float resolution
        }
        let (v1, e1) = gk15(&f, sa, sm);
        let (v2, e2) = gk15(&f, sm, sb);
        segments.push((sa, sm, v1, e1));
        segments.push((sm, sb, v2, e2));
    }
    None
}
