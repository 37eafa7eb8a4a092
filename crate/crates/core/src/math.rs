//! Scalar math used throughout the crate.
//!
//! With the `std` feature the intrinsics of the standard library are used;
//! without it everything is routed through `libm`. The error function and
//! the standard normal distribution helpers always come from `libm`, since
//! the standard library does not provide them.

macro_rules! shim {
    ($($name:ident => $libm:ident),* $(,)?) => {
        $(
            #[cfg(feature = "std")]
            #[inline]
            pub fn $name(x: f64) -> f64 {
                f64::$name(x)
            }
            #[cfg(not(feature = "std"))]
            #[inline]
            pub fn $name(x: f64) -> f64 {
                libm::$libm(x)
            }
        )*
    };
}

shim! {
    sin => sin,
    cos => cos,
    tan => tan,
    acos => acos,
    atan => atan,
    exp => exp,
    ln => log,
    sqrt => sqrt,
    floor => floor,
    round => round,
    abs => fabs,
}

#[inline]
pub fn erfc(x: f64) -> f64 {
    libm::erfc(x)
}

pub const SQRT_2: f64 = core::f64::consts::SQRT_2;
pub const PI: f64 = core::f64::consts::PI;
pub const TAU: f64 = core::f64::consts::TAU;

/// Standard normal cumulative distribution function.
#[inline]
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / SQRT_2)
}

/// Standard normal density.
#[inline]
pub fn normal_pdf(x: f64) -> f64 {
    const INV_SQRT_TAU: f64 = 0.398_942_280_401_432_7;
    INV_SQRT_TAU * exp(-0.5 * x * x)
}

/// Inverse of [`normal_cdf`].
///
/// An initial rational approximation (Acklam) is polished with Newton steps
/// on the CDF. The function is antisymmetric by construction and the
/// refinement runs in the lower half where the CDF keeps full relative
/// precision, so `normal_quantile(normal_cdf(x))` recovers `x` to 1e-10
/// across `[-8, 8]` up to the resolution of `p` itself.
pub fn normal_quantile(p: f64) -> f64 {
    assert!(p > 0.0 && p < 1.0, "normal_quantile requires p in (0,1)");
    if p > 0.5 {
        return -normal_quantile_lower(1.0 - p);
    }
    normal_quantile_lower(p)
}

fn normal_quantile_lower(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    const P_LOW: f64 = 0.02425;

    let mut x = if p < P_LOW {
        let q = sqrt(-2.0 * ln(p));
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    };

    // Newton refinement against the full-precision CDF.
    for _ in 0..3 {
        let err = normal_cdf(x) - p;
        let pdf = normal_pdf(x);
        if pdf == 0.0 {
            break;
        }
        x -= err / pdf;
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cdf_reference_values() {
        assert!(abs(normal_cdf(0.0) - 0.5) < 1e-15);
        assert!(abs(normal_cdf(1.0) - 0.841_344_746_068_542_9) < 1e-13);
        assert!(abs(normal_cdf(-2.0) - 0.022_750_131_948_179_2) < 1e-13);
    }

    #[test]
    fn quantile_round_trip() {
        // The lower tail keeps full relative precision in p; the upper tail
        // round-trips through the complement, which is how tail-sensitive
        // callers use the pair.
        let mut x = -8.0;
        while x <= 0.0 {
            let p = normal_cdf(x);
            assert!(abs(normal_quantile(p) - x) < 1e-10, "x={x}");
            // The mirrored check needs 1 - p to be exactly representable,
            // which caps the usable range at moderate |x|.
            if x >= -3.0 {
                assert!(abs(normal_quantile(1.0 - p) + x) < 1e-10, "mirror of x={x}");
            }
            x += 0.125;
        }
    }

    #[test]
    fn quantile_median() {
        assert!(abs(normal_quantile(0.5)) < 1e-12);
    }
}
