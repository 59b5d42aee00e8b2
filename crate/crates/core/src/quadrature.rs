//! Quadrature rules used for velocity averaging.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Largest Gauss–Hermite order accepted.
pub const MAX_HERMITE_ORDER: usize = 512;

/// Gauss–Hermite nodes and weights for `∫ f(x) e^{−x²} dx`, nodes ascending.
///
/// Nodes are the eigenvalues of the Jacobi matrix (zero diagonal,
/// off-diagonal `√(k/2)`); weights are `√π` times the squared first
/// component of each normalized eigenvector.
pub fn gauss_hermite(order: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if order == 0 || order > MAX_HERMITE_ORDER {
        return Err(Error::invalid(format!(
            "Gauss-Hermite order must be in 1..={MAX_HERMITE_ORDER}, got {order}"
        )));
    }
    let mut d = vec![0.0; order];
    let mut e: Vec<f64> = (1..order).map(|k| (k as f64 / 2.0).sqrt()).collect();
    e.push(0.0);
    let mut z0 = vec![0.0; order];
    z0[0] = 1.0;
    symmetric_tridiagonal_ql(&mut d, &mut e, &mut z0)?;
    let mut pairs: Vec<(f64, f64)> = d.into_iter().zip(z0).map(|(x, v)| (x, PI.sqrt() * v * v)).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    // the rule is symmetric; enforce it exactly
    let n = pairs.len();
    for i in 0..n / 2 {
        let x = 0.5 * (pairs[n - 1 - i].0 - pairs[i].0);
        let w = 0.5 * (pairs[n - 1 - i].1 + pairs[i].1);
        pairs[i] = (-x, w);
        pairs[n - 1 - i] = (x, w);
    }
    if n % 2 == 1 {
        pairs[n / 2].0 = 0.0;
    }
    Ok(pairs.into_iter().unzip())
}

/// Implicit QL on a symmetric tridiagonal matrix. `d` holds the diagonal and
/// receives the eigenvalues; `e[i]` couples rows `i` and `i + 1`. Only the
/// first row of the eigenvector matrix is tracked, in `z0`.
fn symmetric_tridiagonal_ql(d: &mut [f64], e: &mut [f64], z0: &mut [f64]) -> Result<()> {
    let n = d.len();
    for l in 0..n {
        let mut iterations = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iterations += 1;
            if iterations > 60 {
                return Err(Error::Convergence("tridiagonal eigenvalue iteration did not converge".into()));
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut deflated = false;
            for i in (l..m).rev() {
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                let zf = z0[i + 1];
                z0[i + 1] = s * z0[i] + c * zf;
                z0[i] = c * z0[i] - s * zf;
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}

/// Kronrod abscissae on [−1, 1], non-negative half in descending order.
pub const KRONROD_NODES: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.000_000_000_000_000_000_000_000_000_000_000,
];

pub const KRONROD_WEIGHTS: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

/// Weights of the embedded 7-point Gauss rule, aligned with the odd entries
/// of [`KRONROD_NODES`] (indices 1, 3, 5, 7).
pub const GAUSS7_WEIGHTS: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// The 15 abscissae of the Kronrod rule mapped to `[a, b]`, ascending.
pub fn kronrod_abscissae(a: f64, b: f64) -> [f64; 15] {
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut out = [0.0; 15];
    for (j, &x) in KRONROD_NODES.iter().enumerate() {
        out[j] = mid - half * x;
        out[14 - j] = mid + half * x;
    }
    out
}

/// Kronrod and Gauss weights for the abscissae of [`kronrod_abscissae`],
/// already scaled by the half-width of `[a, b]`. Gauss weights are zero on
/// the Kronrod-only points.
pub fn kronrod_weights(a: f64, b: f64) -> ([f64; 15], [f64; 15]) {
    let half = 0.5 * (b - a);
    let mut wk = [0.0; 15];
    let mut wg = [0.0; 15];
    for j in 0..8 {
        wk[j] = half * KRONROD_WEIGHTS[j];
        wk[14 - j] = wk[j];
        if j % 2 == 1 {
            wg[j] = half * GAUSS7_WEIGHTS[j / 2];
            wg[14 - j] = wg[j];
        }
    }
    (wk, wg)
}
