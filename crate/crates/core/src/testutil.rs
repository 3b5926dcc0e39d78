//! Independent oracles shared by unit tests.

/// `a² + b² + c² + d²` for every `±`-pair of integer matrices of determinant 1
/// with `a² + b² + c² + d² ≤ 2 cosh r`, one representative per pair.
///
/// For each coprime first column `(a, c)` the second columns form the line
/// `(b₀ + k a, d₀ + k c)`, which is scanned around its closest point.
pub(crate) fn modular_norms(r: f64) -> Vec<i64> {
    let bound = (2.0 * r.cosh() + 1e-9).floor() as i64;
    let m = (bound as f64).sqrt() as i64 + 1;
    let mut out = Vec::new();
    for a in -m..=m {
        for c in -m..=m {
            let ac = a * a + c * c;
            if ac == 0 || ac > bound || gcd(a, c) != 1 {
                continue;
            }
            // a d0 − b0 c = 1
            let (g, x, y) = ext_gcd(a, -c);
            debug_assert_eq!(g.abs(), 1);
            let (d0, b0) = (x * g, y * g);
            // minimise |(b0, d0) + k (a, c)|
            let k0 = -((b0 * a + d0 * c) as f64 / ac as f64).round() as i64;
            let span = (bound as f64 / ac as f64).sqrt() as i64 + 2;
            for k in k0 - span..=k0 + span {
                let (b, d) = (b0 + k * a, d0 + k * c);
                let norm = ac + b * b + d * d;
                if norm <= bound {
                    out.push(norm);
                }
            }
        }
    }
    // each ± pair was produced twice
    out.sort_unstable();
    out.into_iter().step_by(2).collect()
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

/// `(g, x, y)` with `a x + b y = g`.
fn ext_gcd(a: i64, b: i64) -> (i64, i64, i64) {
    if b == 0 {
        (a, 1, 0)
    } else {
        let (g, x, y) = ext_gcd(b, a % b);
        (g, y, x - (a / b) * y)
    }
}

#[test]
fn fast_oracle_agrees_with_quartic_loop() {
    for r in [1.0, 2.5, 4.0] {
        let bound = 2.0 * f64::cosh(r) + 1e-9;
        let m = bound.sqrt() as i64 + 1;
        let mut slow = Vec::new();
        for a in -m..=m {
            for b in -m..=m {
                for c in -m..=m {
                    for d in -m..=m {
                        let n = a * a + b * b + c * c + d * d;
                        if a * d - b * c == 1 && n as f64 <= bound {
                            slow.push(n);
                        }
                    }
                }
            }
        }
        slow.sort_unstable();
        let slow: Vec<i64> = slow.into_iter().step_by(2).collect();
        assert_eq!(modular_norms(r), slow, "r = {r}");
    }
}
