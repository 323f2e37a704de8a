//! Adaptive Gauss–Kronrod (7/15) quadrature on finite intervals.

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];

// Gauss weights for the odd-indexed Kronrod nodes (1, 3, 5) and the centre.
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
}

fn kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let centre = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(centre);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for (j, (&x, &w)) in XGK.iter().zip(WGK.iter()).take(7).enumerate() {
        let dx = half * x;
        let pair = f(centre - dx) + f(centre + dx);
        kron += w * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    (kron * half, ((kron - gauss) * half).abs())
}

/// Integrates `f` over `[a, b]` to `max(abs_tol, rel_tol * |I|)` by recursive
/// bisection of the worst subinterval.
pub fn integrate<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
) -> Result<Integral> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::NonFinite("integration bounds"));
    }
    if a == b {
        return Ok(Integral { value: 0.0, error: 0.0 });
    }
    const MAX_SEGMENTS: usize = 20_000;
    let (v, e) = kronrod(&f, a, b);
    let mut segments = vec![(a, b, v, e)];
    loop {
        let value: f64 = segments.iter().map(|s| s.2).sum();
        let error: f64 = segments.iter().map(|s| s.3).sum();
        if error <= abs_tol.max(rel_tol * value.abs()) {
            return Ok(Integral { value, error });
        }
        if segments.len() >= MAX_SEGMENTS {
            return Err(Error::NoConvergence {
                iterations: segments.len(),
                residual: error,
            });
        }
        let (worst, _) = segments
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .expect("non-empty");
        let (lo, hi, _, _) = segments.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        let (v1, e1) = kronrod(&f, lo, mid);
        let (v2, e2) = kronrod(&f, mid, hi);
        segments.push((lo, mid, v1, e1));
        segments.push((mid, hi, v2, e2));
    }
}
