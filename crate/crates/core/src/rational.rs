//! Exact rational scalars and the small amount of numeric plumbing the rest
//! of the crate leans on: parsing/printing in `p/q` form, exact powers,
//! ceil(log2) of a ratio, and decimal rendering for reports.

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::{Error, Result};

/// Arbitrary-precision rational; always stored reduced with positive
/// denominator, so equality is representation equality.
pub type Rational = num_rational::BigRational;

/// Shorthand for a rational from an integer pair.
pub fn ratio(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

/// Shorthand for an integer-valued rational.
pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// Parses `p/q` or a bare integer `p`. Signs are accepted on the numerator.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let t = s.trim();
    let (num, den) = match t.split_once('/') {
        Some((n, d)) => (n.trim(), Some(d.trim())),
        None => (t, None),
    };
    let n: BigInt = num
        .parse()
        .map_err(|_| Error::Format(format!("bad rational numerator in {t:?}")))?;
    let d: BigInt = match den {
        Some(d) => d
            .parse()
            .map_err(|_| Error::Format(format!("bad rational denominator in {t:?}")))?,
        None => BigInt::one(),
    };
    if d.is_zero() {
        return Err(Error::Format(format!("zero denominator in {t:?}")));
    }
    Ok(Rational::new(n, d))
}

/// Formats as `p/q`, or just `p` when the value is an integer.
pub fn format_rational(x: &Rational) -> String {
    if x.denom().is_one() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

/// Exact integer power with negative exponents allowed (base must be
/// nonzero for negative exponents).
pub fn pow_int(base: &Rational, exp: i64) -> Rational {
    let mag = base.pow(i32::try_from(exp.unsigned_abs()).expect("exponent fits in i32"));
    if exp < 0 {
        mag.recip()
    } else {
        mag
    }
}

/// Smallest j >= 0 with 2^j >= x, for x >= 1. This is ceil(log2 x) computed
/// exactly by doubling.
pub fn ceil_log2(x: &Rational) -> Result<u32> {
    if x < &Rational::one() {
        return Err(Error::InvalidArgument(format!(
            "ceil_log2 needs x >= 1, got {}",
            format_rational(x)
        )));
    }
    let mut j = 0u32;
    let mut pow = Rational::one();
    let two = int(2);
    while &pow < x {
        pow *= &two;
        j += 1;
    }
    Ok(j)
}

/// Largest j (possibly negative) with base^j <= x, for base > 1 and x > 0.
pub fn floor_log(base: &Rational, x: &Rational) -> Result<i64> {
    if base <= &Rational::one() || x <= &Rational::zero() {
        return Err(Error::InvalidArgument(
            "floor_log needs base > 1 and x > 0".into(),
        ));
    }
    let mut j: i64 = 0;
    let mut pow = Rational::one();
    if &pow <= x {
        loop {
            let next = &pow * base;
            if &next > x {
                break;
            }
            pow = next;
            j += 1;
        }
    } else {
        while &pow > x {
            pow /= base;
            j -= 1;
        }
    }
    Ok(j)
}

/// Lossy conversion for Monte Carlo statistics and report decimals.
pub fn to_f64(x: &Rational) -> f64 {
    x.to_f64().unwrap_or_else(|| {
        // Fall back to a quotient of clamped parts; good enough for display.
        let n = x.numer().to_f64().unwrap_or(f64::MAX);
        let d = x.denom().to_f64().unwrap_or(f64::MAX);
        n / d
    })
}

/// Renders x in decimal with `sig` significant digits (round half away from
/// zero), without going through floating point.
pub fn to_decimal_sig(x: &Rational, sig: u32) -> String {
    assert!(sig > 0);
    if x.is_zero() {
        return "0".to_string();
    }
    let neg = x.is_negative();
    let ax = x.abs();
    // Find e = floor(log10 ax) by scaling.
    let ten = BigInt::from(10);
    let mut e: i64 = 0;
    let mut lo = ax.clone();
    let one = Rational::one();
    while lo >= Rational::from_integer(ten.clone()) {
        lo /= Rational::from_integer(ten.clone());
        e += 1;
    }
    while lo < one {
        lo *= Rational::from_integer(ten.clone());
        e -= 1;
    }
    // Want round(ax / 10^(e - sig + 1)) as an integer with `sig` digits.
    let shift = e - sig as i64 + 1;
    let scaled = ax * pow_int(&Rational::from_integer(ten.clone()), -shift);
    let (q, r) = (
        scaled.numer() / scaled.denom(),
        scaled.numer() % scaled.denom(),
    );
    let mut digits = if &r * BigInt::from(2) >= *scaled.denom() {
        q + BigInt::one()
    } else {
        q
    };
    // Rounding may carry into an extra digit (e.g. 999.5 -> 1000).
    let mut e = e;
    if digits.to_string().len() as u32 > sig {
        let (d2, r2) = (&digits / &ten, &digits % &ten);
        digits = if r2 * BigInt::from(2) >= ten.clone() {
            d2 + BigInt::one()
        } else {
            d2
        };
        e += 1;
    }
    let ds = digits.to_string();
    let mut out = String::new();
    if neg {
        out.push('-');
    }
    if e >= 0 && (e as usize) < 12 + sig as usize && e < sig as i64 {
        // Plain notation with the point inside or right after the digits.
        let int_len = (e + 1) as usize;
        out.push_str(&ds[..int_len.min(ds.len())]);
        if int_len < ds.len() {
            let frac = ds[int_len..].trim_end_matches('0');
            if !frac.is_empty() {
                out.push('.');
                out.push_str(frac);
            }
        }
    } else if e < 0 && e > -5 {
        out.push_str("0.");
        for _ in 0..(-e - 1) {
            out.push('0');
        }
        out.push_str(ds.trim_end_matches('0'));
    } else {
        // Scientific notation.
        out.push_str(&ds[..1]);
        let frac = ds[1..].trim_end_matches('0');
        if !frac.is_empty() {
            out.push('.');
            out.push_str(frac);
        }
        out.push('e');
        out.push_str(&e.to_string());
    }
    out
}
