//! Complex special functions: Γ, 1/Γ and the exponential integral E₁.

use crate::C64;
use std::f64::consts::PI;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

// B_{2n} / (2n (2n-1)) for the Stirling series.
const STIRLING: [f64; 10] = [
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360360.0,
    1.0 / 156.0,
    -3617.0 / 122400.0,
    43867.0 / 244188.0,
    -174611.0 / 125400.0,
];

/// `log Γ(z)` up to a multiple of `2πi` (only `exp` of it is meaningful), for `Re z ≥ 1/2`.
fn ln_gamma_right(z: C64) -> C64 {
    let mut z = z;
    let mut prod = C64::new(1.0, 0.0);
    let mut shift = C64::new(0.0, 0.0);
    while z.norm() < 16.0 {
        prod *= z;
        // renormalize to avoid overflow on long shifts
        if prod.norm() > 1e200 {
            shift += prod.ln();
            prod = C64::new(1.0, 0.0);
        }
        z += 1.0;
    }
    let zinv = z.inv();
    let zinv2 = zinv * zinv;
    let mut series = C64::new(0.0, 0.0);
    let mut p = zinv;
    for c in STIRLING {
        series += p * c;
        p *= zinv2;
    }
    (z - 0.5) * z.ln() - z + 0.5 * (2.0 * PI).ln() + series - prod.ln() - shift
}

/// Complex Gamma function.
pub fn gamma(z: C64) -> C64 {
    if z.re < 0.5 {
        // reflection; poles at non-positive integers give inf/nan
        let s = (PI * z).sin();
        C64::new(PI, 0.0) / (s * ln_gamma_right(1.0 - z).exp())
    } else {
        ln_gamma_right(z).exp()
    }
}

/// Reciprocal Gamma, entire: exactly zero at the poles of Γ.
pub fn rgamma(z: C64) -> C64 {
    if z.im == 0.0 && z.re <= 0.0 && z.re == z.re.round() {
        return C64::new(0.0, 0.0);
    }
    if z.re < 0.5 {
        (PI * z).sin() * ln_gamma_right(1.0 - z).exp() / PI
    } else {
        (-ln_gamma_right(z)).exp()
    }
}

/// Exponential integral `E₁(z) = ∫_z^∞ e^{−u}/u du`, principal branch (cut on `ℝ_{≤0}`).
pub fn expint_e1(z: C64) -> C64 {
    let r = z.norm();
    assert!(r > 0.0, "E1 has a logarithmic singularity at 0");
    if r <= 2.0 || (r <= 12.0 && z.re < 0.0) {
        e1_series(z)
    } else {
        e1_cfrac(z)
    }
}

fn e1_series(z: C64) -> C64 {
    let mut sum = C64::new(0.0, 0.0);
    let mut term = C64::new(1.0, 0.0);
    for n in 1..400 {
        term *= -z / n as f64;
        let add = term / n as f64;
        sum += add;
        if add.norm() < 1e-17 * sum.norm().max(1e-300) {
            break;
        }
    }
    -EULER_GAMMA - z.ln() - sum
}

// Modified Lentz evaluation of E1(z) = e^{-z} / (z + 1 - 1^2/(z + 3 - 2^2/(z + 5 - …))).
fn e1_cfrac(z: C64) -> C64 {
    let tiny = 1e-300;
    let b0 = z + 1.0;
    let mut f = b0;
    let mut c = b0;
    let mut d = C64::new(0.0, 0.0);
    for n in 1..2000 {
        let an = -((n * n) as f64);
        let bn = z + (2 * n + 1) as f64;
        d = bn + an * d;
        if d.norm() < tiny {
            d = C64::new(tiny, 0.0);
        }
        c = bn + an / c;
        if c.norm() < tiny {
            c = C64::new(tiny, 0.0);
        }
        d = d.inv();
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).norm() < 1e-16 {
            break;
        }
    }
    (-z).exp() / f
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: C64, b: C64, tol: f64) -> bool {
        (a - b).norm() <= tol * b.norm().max(1.0)
    }

    #[test]
    fn gamma_integers_and_half() {
        assert!(close(gamma(C64::new(5.0, 0.0)), C64::new(24.0, 0.0), 1e-14));
        assert!(close(
            gamma(C64::new(0.5, 0.0)),
            C64::new(PI.sqrt(), 0.0),
            1e-14
        ));
        assert!(close(
            gamma(C64::new(-0.5, 0.0)),
            C64::new(-2.0 * PI.sqrt(), 0.0),
            1e-14
        ));
        assert!(close(
            gamma(C64::new(1.0 / 3.0, 0.0)),
            C64::new(2.678_938_534_707_747_6, 0.0),
            1e-14
        ));
    }

    #[test]
    fn gamma_complex_value() {
        // Γ(1+i) = 0.4980156681183560 − 0.1549498283018107 i
        let g = gamma(C64::new(1.0, 1.0));
        assert!(close(
            g,
            C64::new(0.498_015_668_118_356, -0.154_949_828_301_810_7),
            1e-13
        ));
        // |Γ(iy)|^2 = π / (y sinh πy)
        let y = 5.03;
        let g = gamma(C64::new(0.0, y));
        let want = PI / (y * (PI * y).sinh());
        assert!((g.norm_sqr() - want).abs() < 1e-13 * want);
    }

    #[test]
    fn rgamma_zeros() {
        assert_eq!(rgamma(C64::new(0.0, 0.0)), C64::new(0.0, 0.0));
        assert_eq!(rgamma(C64::new(-3.0, 0.0)), C64::new(0.0, 0.0));
        assert!(close(rgamma(C64::new(3.0, 0.0)), C64::new(0.5, 0.0), 1e-15));
    }

    #[test]
    fn e1_reference_values() {
        // E1(1) = 0.21938393439552029
        assert!(close(
            expint_e1(C64::new(1.0, 0.0)),
            C64::new(0.219_383_934_395_520_3, 0.0),
            1e-14
        ));
        // E1(5) = 0.0011482955912753257
        assert!((expint_e1(C64::new(5.0, 0.0)).re - 0.001_148_295_591_275_325_7).abs() < 1e-16);
        // E1(i) = -Ci(1) + i(Si(1) - π/2)
        let ci1 = 0.337_403_922_900_968_1;
        let si1 = 0.946_083_070_367_183;
        assert!(close(
            expint_e1(C64::new(0.0, 1.0)),
            C64::new(-ci1, si1 - PI / 2.0),
            1e-14
        ));
    }

    #[test]
    fn e1_branches_agree_on_overlap() {
        for &z in &[C64::new(2.5, 1.0), C64::new(3.0, -2.0), C64::new(1.5, 4.0)] {
            assert!(close(e1_series(z), e1_cfrac(z), 1e-13));
        }
    }
}
