//! Globally adaptive Gauss–Kronrod (7/15) quadrature.

/// Kronrod abscissae on `[0, 1]`, descending; odd indices are Gauss nodes.
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

const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[derive(Debug, Clone, Copy)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
    pub intervals: usize,
}

#[derive(Debug, Clone, Copy)]
struct Piece {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

fn gk15(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> Piece {
    let c = 0.5 * (a + b);
    let hl = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for (j, (&x, &w)) in XGK[..7].iter().zip(&WGK[..7]).enumerate() {
        let dx = hl * x;
        let s = f(c - dx) + f(c + dx);
        kron += w * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    let value = kron * hl;
    // The Kronrod–Gauss gap bounds the (much smaller) Kronrod error.
    let error = ((kron - gauss) * hl).abs();
    Piece { a, b, value, error }
}

/// Integrates `f` over `[a, b]` until the summed error estimate drops below
/// `max(abs_tol, rel_tol·|I|)`, splitting the worst interval each round.
/// `breaks` are interior points (kinks, peaks) that seed the subdivision.
pub fn integrate_with_breaks(
    f: impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    breaks: &[f64],
    abs_tol: f64,
    rel_tol: f64,
) -> Estimate {
    let mut pts = vec![a];
    pts.extend(breaks.iter().copied().filter(|&x| x > a && x < b));
    pts.push(b);
    pts.sort_by(|x, y| x.total_cmp(y));
    pts.dedup();
    let mut pieces: Vec<Piece> = pts.windows(2).map(|w| gk15(&f, w[0], w[1])).collect();
    const MAX_PIECES: usize = 4000;
    loop {
        let value: f64 = pieces.iter().map(|p| p.value).sum();
        let error: f64 = pieces.iter().map(|p| p.error).sum();
        if error <= abs_tol.max(rel_tol * value.abs()) || pieces.len() >= MAX_PIECES {
            return Estimate {
                value,
                error,
                intervals: pieces.len(),
            };
        }
        let (worst, _) = pieces
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.total_cmp(&y.1.error))
            .expect("at least one piece");
        let p = pieces.swap_remove(worst);
        let m = 0.5 * (p.a + p.b);
        if m <= p.a || m >= p.b {
            // Interval collapsed to machine resolution; keep its estimate.
            pieces.push(Piece { error: 0.0, ..p });
            continue;
        }
        pieces.push(gk15(&f, p.a, m));
        pieces.push(gk15(&f, m, p.b));
    }
}

pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> Estimate {
    integrate_with_breaks(f, a, b, &[], abs_tol, rel_tol)
}

/// `∫_a^∞ f` through the map `x = a + t/(1-t)`, `t ∈ [0, 1)`.
pub fn integrate_to_infinity(f: impl Fn(f64) -> f64, a: f64, abs_tol: f64, rel_tol: f64) -> Estimate {
    integrate(
        |t| {
            if t >= 1.0 {
                return 0.0;
            }
            let s = 1.0 - t;
            let v = f(a + t / s) / (s * s);
            if v.is_finite() {
                v
            } else {
                0.0
            }
        },
        0.0,
        1.0,
        abs_tol,
        rel_tol,
    )
}

/// `∫_z^1 (1 - t²)^e dt` for `e > -1`, `-1 < z < 1`.
///
/// For `e < 0` the endpoint singularity at `t = 1` is removed by the
/// substitution `1 - t = w^(1/(e+1))`, which turns the integrand into the
/// smooth `r (2 - w^r)^e` with `r = 1/(e+1)`.
pub fn one_minus_t2_power(e: f64, z: f64) -> f64 {
    assert!(e > -1.0 && z > -1.0 && z < 1.0);
    if e >= 0.0 {
        return integrate(|t| (1.0 - t * t).max(0.0).powf(e), z, 1.0, 1e-15, 1e-14).value;
    }
    let r = 1.0 / (e + 1.0);
    let upper = (1.0 - z).powf(e + 1.0);
    integrate(|w| r * (2.0 - w.powf(r)).powf(e), 0.0, upper, 1e-15, 1e-14).value
}

/// `∫_1^u (s² - 1)^e ds` for `e > -1`, `u > 1`, with the same treatment of
/// the singular endpoint `s = 1`.
pub fn s2_minus_one_power(e: f64, u: f64) -> f64 {
    assert!(e > -1.0 && u > 1.0);
    if e >= 0.0 {
        return integrate(|s| (s * s - 1.0).max(0.0).powf(e), 1.0, u, 1e-15, 1e-14).value;
    }
    let r = 1.0 / (e + 1.0);
    let upper = (u - 1.0).powf(e + 1.0);
    integrate(|w| r * (2.0 + w.powf(r)).powf(e), 0.0, upper, 1e-15, 1e-14).value
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn kronrod_rule_is_exact_for_degree_22() {
        // A single GK15 panel integrates x^k exactly up to k = 22 (on
        // [-1, 1] odd powers vanish, even powers give 2/(k+1)).
        for k in 0..=22 {
            let p = gk15(&|x: f64| x.powi(k), -1.0, 1.0);
            let exact = if k % 2 == 0 { 2.0 / (k as f64 + 1.0) } else { 0.0 };
            assert!((p.value - exact).abs() < 1e-14, "k = {k}: {}", p.value);
        }
    }

    #[test]
    fn smooth_and_peaked_integrands() {
        let e = integrate(|x| x.exp(), 0.0, 1.0, 1e-14, 1e-14);
        assert_relative_eq!(e.value, std::f64::consts::E - 1.0, max_relative = 1e-13);
        let g = integrate(|x| 1.0 / (1e-4 + x * x), -1.0, 1.0, 1e-12, 1e-12);
        assert_relative_eq!(g.value, 2.0 * 100.0 * (100.0f64).atan(), max_relative = 1e-10);
    }

    #[test]
    fn semi_infinite_sech_squared() {
        let v = integrate_to_infinity(|x| 1.0 / x.cosh().powi(2), 0.0, 1e-14, 1e-13).value;
        assert_relative_eq!(v, 1.0, max_relative = 1e-12);
    }

    #[test]
    fn singular_power_integrals() {
        // e = -1/2: ∫_z^1 (1-t²)^(-1/2) = π/2 - asin z.
        let z: f64 = 0.3;
        assert_relative_eq!(
            one_minus_t2_power(-0.5, z),
            std::f64::consts::FRAC_PI_2 - z.asin(),
            max_relative = 1e-12
        );
        // e = -2/3 against brute-force on the original variable near 1.
        let brute = integrate(|t| (1.0 - t * t).powf(-2.0 / 3.0), 0.2, 1.0 - 1e-12, 1e-13, 1e-13).value
            + 3.0 * (1e-12f64).powf(1.0 / 3.0) * 2f64.powf(-2.0 / 3.0);
        assert_relative_eq!(one_minus_t2_power(-2.0 / 3.0, 0.2), brute, max_relative = 1e-6);
        // ∫_1^u (s²-1)^(-1/2) = acosh u.
        let u: f64 = 2.5;
        assert_relative_eq!(s2_minus_one_power(-0.5, u), u.acosh(), max_relative = 1e-12);
        assert_relative_eq!(s2_minus_one_power(0.0, u), u - 1.0, max_relative = 1e-14);
    }
}
