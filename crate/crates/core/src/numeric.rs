//! Small numerical kernels: adaptive Gauss–Kronrod quadrature, bisection,
//! sign-change scanning and golden-section refinement.

use crate::error::{Error, Result};

// ----------------------------------------------------------------------------
// Quadrature
// ----------------------------------------------------------------------------

/// Absolute tolerance used for every outer integral over the residual time.
pub const QUAD_ABS_TOL: f64 = 1e-8;

/// Relative floor so that very large integrals are not asked for more digits
/// than double precision holds.
const QUAD_REL_FLOOR: f64 = 1e-13;

const MAX_SUBINTERVALS: usize = 400;

#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

// Gauss weights for the odd-indexed Kronrod nodes (7-point rule).
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// One 15-point Kronrod panel for each of `N` integrands, with the error
/// taken from the embedded 7-point Gauss rule.
fn gk15<const N: usize, F: Fn(f64) -> [f64; N]>(f: &F, a: f64, b: f64) -> ([f64; N], [f64; N]) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = fc.map(|v| v * WGK[7]);
    let mut gauss = fc.map(|v| v * WG[3]);
    for j in 0..7 {
        let dx = h * XGK[j];
        let (lo, hi) = (f(c - dx), f(c + dx));
        for k in 0..N {
            let pair = lo[k] + hi[k];
            kronrod[k] += WGK[j] * pair;
            if j % 2 == 1 {
                gauss[k] += WG[j / 2] * pair;
            }
        }
    }
    let mut err = [0.0; N];
    for k in 0..N {
        err[k] = ((kronrod[k] - gauss[k]) * h).abs();
        kronrod[k] *= h;
    }
    (kronrod, err)
}

/// Integrates `N` functions sharing one set of abscissae over `[a, b]`.
///
/// Panels are bisected worst-first until every component's summed error
/// estimate is within `abs_tol` (or a tiny relative floor for very large
/// integrals). Returns [`Error::Quadrature`] when the panel budget runs out.
pub fn integrate_many<const N: usize, F: Fn(f64) -> [f64; N]>(
    f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
) -> Result<[f64; N]> {
    if a == b {
        return Ok([0.0; N]);
    }
    let (v, e) = gk15(&f, a, b);
    let mut panels = vec![(a, b, v, e)];
    loop {
        let mut total = [0.0; N];
        let mut err = [0.0; N];
        for (_, _, v, e) in &panels {
            for k in 0..N {
                total[k] += v[k];
                err[k] += e[k];
            }
        }
        // Worst component relative to its own tolerance.
        let mut ratio = 0.0f64;
        let mut worst_k = 0;
        for k in 0..N {
            let tol = abs_tol.max(QUAD_REL_FLOOR * total[k].abs());
            if err[k] / tol > ratio {
                ratio = err[k] / tol;
                worst_k = k;
            }
        }
        if ratio <= 1.0 {
            return Ok(total);
        }
        if panels.len() >= MAX_SUBINTERVALS || !ratio.is_finite() {
            return Err(Error::Quadrature {
                a,
                b,
                estimate: err[worst_k],
                tolerance: abs_tol.max(QUAD_REL_FLOOR * total[worst_k].abs()),
            });
        }
        let worst = panels
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3[worst_k].total_cmp(&y.1 .3[worst_k]))
            .map(|(i, _)| i)
            .unwrap_or(0);
        let (lo, hi, _, _) = panels.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        let (v1, e1) = gk15(&f, lo, mid);
        let (v2, e2) = gk15(&f, mid, hi);
        panels.push((lo, mid, v1, e1));
        panels.push((mid, hi, v2, e2));
    }
}

/// Scalar form of [`integrate_many`].
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, abs_tol: f64) -> Result<f64> {
    integrate_many(|x| [f(x)], a, b, abs_tol).map(|v| v[0])
}

// ----------------------------------------------------------------------------
// Root finding
// ----------------------------------------------------------------------------

/// Bisection on a bracket with `f(lo)` and `f(hi)` of opposite sign (or one
/// of them zero). Stops once the bracket is narrower than `tol`.
pub fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> Option<f64> {
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Some(lo);
    }
    if fhi == 0.0 {
        return Some(hi);
    }
    if flo.signum() == fhi.signum() || !flo.is_finite() || !fhi.is_finite() {
        return None;
    }
    for _ in 0..200 {
        if hi - lo <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm == 0.0 {
            return Some(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

/// Every sign change of `f` on a uniform `n`-cell partition of `[lo, hi]`,
/// each refined by bisection.
pub fn scan_roots<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, n: usize, tol: f64) -> Vec<f64> {
    let step = (hi - lo) / n as f64;
    let mut roots = Vec::new();
    let mut x0 = lo;
    let mut f0 = f(x0);
    for i in 1..=n {
        let x1 = if i == n { hi } else { lo + step * i as f64 };
        let f1 = f(x1);
        if f0 == 0.0 {
            roots.push(x0);
        } else if f1 != 0.0 && f0.signum() != f1.signum() {
            if let Some(r) = bisect(&f, x0, x1, tol) {
                roots.push(r);
            }
        }
        x0 = x1;
        f0 = f1;
    }
    if f0 == 0.0 {
        roots.push(x0);
    }
    roots
}

// ----------------------------------------------------------------------------
// Minimisation
// ----------------------------------------------------------------------------

/// Golden-section search for a minimum of a unimodal `f` on `[a, b]`.
pub fn golden_min<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}
