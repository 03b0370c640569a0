//! Canonical representatives and distances modulo `{z f, z f̄ : |z| = 1}`.

use num_complex::Complex;
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{CprError, Result};
use crate::scalar::Real;
use crate::signal::GaussianSignal;

/// Imaginary parts at or below this fraction of `||c||∞` count as zero when
/// choosing the conjugation.
pub const CANONICAL_IMAG_TOLERANCE: f64 = 1e-12;
/// Distances closer than this are a tie, resolved towards no conjugation.
pub const TIE_TOLERANCE: f64 = 1e-14;

fn inf_norm<T: Real>(c: &[Complex<T>]) -> T {
    c.iter().fold(T::zero(), |m, z| m.max(z.norm()))
}

fn l2_norm<T: Real>(c: &[Complex<T>]) -> T {
    c.iter().fold(T::zero(), |s, z| s.hypot(z.norm()))
}

/// Rotates the leading coefficient onto the positive real axis, then
/// conjugates if the first clearly non-real coefficient has negative
/// imaginary part. The zero signal is returned unchanged.
pub fn canonicalize<T: Real>(signal: &GaussianSignal<T>) -> GaussianSignal<T> {
    let Some(lead) = signal.coeffs().first() else {
        return signal.clone();
    };
    let z = lead.conj() / lead.norm();
    let mut coeffs: Vec<Complex<T>> = signal.coeffs().iter().map(|c| *c * z).collect();
    coeffs[0] = Complex::new(lead.norm(), T::zero());
    let threshold = T::tol(CANONICAL_IMAG_TOLERANCE) * inf_norm(&coeffs);
    if let Some(first) = coeffs.iter().find(|c| c.im.abs() > threshold) {
        if first.im < T::zero() {
            coeffs.iter_mut().for_each(|c| *c = c.conj());
        }
    }
    GaussianSignal::new(signal.lambda(), signal.beta(), signal.k_min(), coeffs)
        .expect("rotation preserves a valid signal")
}

/// Closest element of the ambiguity class of `g` to `f`.
#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(bound(deserialize = "T: Real + Deserialize<'de>"))]
pub struct EquivalenceReport<T: Real> {
    /// `||c_f - z T(c_g)||₂ / ||c_f||₂`.
    pub distance: T,
    /// Optimal unimodular `z`.
    pub phase: Complex<T>,
    /// Whether `T` is conjugation.
    pub conjugated: bool,
    /// `z T(g)`.
    #[serde(skip)]
    pub aligned: Option<GaussianSignal<T>>,
}

impl<T: Real + Serialize> Serialize for EquivalenceReport<T> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Repr<T> {
            distance: T,
            phase: Complex<T>,
            conjugated: bool,
        }
        Repr {
            distance: self.distance,
            phase: self.phase,
            conjugated: self.conjugated,
        }
        .serialize(s)
    }
}

/// Both coefficient sequences on the union of their windows.
fn padded<T: Real>(
    f: &GaussianSignal<T>,
    g: &GaussianSignal<T>,
) -> (i64, Vec<Complex<T>>, Vec<Complex<T>>) {
    let lo = f.k_min().min(g.k_min());
    let hi = f.k_max().max(g.k_max());
    let cf = (lo..=hi).map(|k| f.coeff(k)).collect();
    let cg = (lo..=hi).map(|k| g.coeff(k)).collect();
    (lo, cf, cg)
}

fn align<T: Real>(cf: &[Complex<T>], v: &[Complex<T>]) -> (T, Complex<T>) {
    let inner: Complex<T> = cf
        .iter()
        .zip(v)
        .fold(Complex::new(T::zero(), T::zero()), |s, (a, b)| {
            s + *a * b.conj()
        });
    let r = inner.norm();
    let z = if r > T::zero() {
        inner / r
    } else {
        Complex::new(T::one(), T::zero())
    };
    let diff: Vec<Complex<T>> = cf.iter().zip(v).map(|(a, b)| *a - z * *b).collect();
    (l2_norm(&diff), z)
}

fn check_compatible<T: Real>(f: &GaussianSignal<T>, g: &GaussianSignal<T>) -> Result<()> {
    if f.is_zero() || g.is_zero() {
        return Err(CprError::ZeroSignal);
    }
    if f.lambda() != g.lambda() || f.beta() != g.beta() {
        return Err(CprError::DimensionMismatch(format!(
            "signals live on different lattices: (λ, β) = ({}, {}) vs ({}, {})",
            f.lambda(),
            f.beta(),
            g.lambda(),
            g.beta()
        )));
    }
    Ok(())
}

/// Relative coefficient distance from `f` to the ambiguity class of `g`.
pub fn equivalence_distance<T: Real>(
    f: &GaussianSignal<T>,
    g: &GaussianSignal<T>,
) -> Result<EquivalenceReport<T>> {
    check_compatible(f, g)?;
    let (lo, cf, cg) = padded(f, g);
    let norm_f = l2_norm(&cf);
    let conj_g: Vec<Complex<T>> = cg.iter().map(|c| c.conj()).collect();
    let (d_id, z_id) = align(&cf, &cg);
    let (d_cj, z_cj) = align(&cf, &conj_g);
    let conjugated = d_cj < d_id && d_id - d_cj >= T::lit(TIE_TOLERANCE) * norm_f;
    let (dist, phase, v) = if conjugated {
        (d_cj, z_cj, conj_g)
    } else {
        (d_id, z_id, cg)
    };
    let aligned_coeffs = v.iter().map(|c| *c * phase).collect();
    let aligned = GaussianSignal::trimmed(f.lambda(), f.beta(), lo, aligned_coeffs)?;
    Ok(EquivalenceReport {
        distance: dist / norm_f,
        phase,
        conjugated,
        aligned: Some(aligned),
    })
}

/// Symmetric metric on ambiguity classes: the distance between the
/// unit-norm canonical representatives of `f` and `g`, minimized over the
/// group as in [`equivalence_distance`].
pub fn normalized_distance<T: Real>(f: &GaussianSignal<T>, g: &GaussianSignal<T>) -> Result<T> {
    check_compatible(f, g)?;
    let unit = |s: &GaussianSignal<T>| {
        let n = l2_norm(s.coeffs());
        canonicalize(&s.scaled(Complex::new(T::one() / n, T::zero())))
    };
    let (fu, gu) = (unit(f), unit(g));
    let (_, cf, cg) = padded(&fu, &gu);
    let conj_g: Vec<Complex<T>> = cg.iter().map(|c| c.conj()).collect();
    let (d_id, _) = align(&cf, &cg);
    let (d_cj, _) = align(&cf, &conj_g);
    Ok(d_id.min(d_cj))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    fn sig(coeffs: Vec<Complex<f64>>) -> GaussianSignal<f64> {
        GaussianSignal::new(1.0, 1.0, 0, coeffs).unwrap()
    }

    fn assert_coeffs(s: &GaussianSignal<f64>, want: &[Complex<f64>], tol: f64) {
        assert_eq!(s.coeffs().len(), want.len());
        for (a, b) in s.coeffs().iter().zip(want) {
            assert!((a - b).norm() <= tol, "{a} vs {b}");
        }
    }

    #[test]
    fn rotates_negative_real() {
        assert_coeffs(&canonicalize(&sig(vec![c(-2.0, 0.0)])), &[c(2.0, 0.0)], 0.0);
    }

    #[test]
    fn conjugates_negative_first_imag() {
        let e = (-1.0f64).exp();
        assert_coeffs(
            &canonicalize(&sig(vec![c(1.0, 0.0), c(0.0, -e)])),
            &[c(1.0, 0.0), c(0.0, e)],
            1e-15,
        );
    }

    #[test]
    fn rotate_then_conjugate() {
        let out = canonicalize(&sig(vec![c(0.0, 1.0), c(1.0, 1.0)]));
        assert_coeffs(&out, &[c(1.0, 0.0), c(1.0, 1.0)], 1e-15);
    }

    #[test]
    fn zero_signal_is_fixed() {
        let z = GaussianSignal::<f64>::zero(1.0, 1.0);
        assert!(canonicalize(&z).is_zero());
    }

    #[test]
    fn distance_to_self() {
        let f = sig(vec![c(1.0, 0.5), c(-0.3, 0.2), c(0.7, -0.1)]);
        let r = equivalence_distance(&f, &f).unwrap();
        assert_abs_diff_eq!(r.distance, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(r.phase.re, 1.0, epsilon = 1e-15);
        assert!(!r.conjugated);
    }

    #[test]
    fn recovers_group_element() {
        let f = sig(vec![c(1.0, 0.5), c(-0.3, 0.2), c(0.7, -0.1)]);
        let g = f.conjugated().scaled(c(0.0, 1.0));
        let r = equivalence_distance(&f, &g).unwrap();
        assert!(r.distance < 1e-15);
        assert!(r.conjugated);
        assert!((r.phase.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn scaled_copy_has_unit_distance() {
        let f = sig(vec![c(1.0, 0.5), c(-0.3, 0.2)]);
        let r = equivalence_distance(&f, &f.scaled(c(2.0, 0.0))).unwrap();
        assert_abs_diff_eq!(r.distance, 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(r.phase.re, 1.0, epsilon = 1e-14);
    }

    #[test]
    fn real_signal_ties_to_identity() {
        let f = sig(vec![c(1.0, 0.0), c(2.0, 0.0)]);
        let r = equivalence_distance(&f, &f.scaled(c(-1.0, 0.0))).unwrap();
        assert!(r.distance < 1e-15);
        assert!(!r.conjugated);
    }

    #[test]
    fn pads_to_common_window() {
        let f = sig(vec![c(1.0, 0.0), c(0.5, 0.5)]);
        let g = GaussianSignal::new(1.0, 1.0, 1, vec![c(0.5, 0.5)]).unwrap();
        let r = equivalence_distance(&f, &g).unwrap();
        let want = 1.0 / (1.0f64 + 0.5).sqrt();
        assert_abs_diff_eq!(r.distance, want, epsilon = 1e-14);
    }

    #[test]
    fn zero_signal_rejected() {
        let f = sig(vec![c(1.0, 0.0)]);
        let z = GaussianSignal::zero(1.0, 1.0);
        assert!(matches!(
            equivalence_distance(&f, &z),
            Err(CprError::ZeroSignal)
        ));
        assert!(matches!(
            equivalence_distance(&z, &f),
            Err(CprError::ZeroSignal)
        ));
    }

    #[test]
    fn json_has_three_keys() {
        let f = sig(vec![c(1.0, 0.0)]);
        let r = equivalence_distance(&f, &f).unwrap();
        let v: serde_json::Value = serde_json::to_value(&r).unwrap();
        assert_eq!(v["phase"], serde_json::json!([1.0, 0.0]));
        assert_eq!(v.as_object().unwrap().len(), 3);
        let back: EquivalenceReport<f64> = serde_json::from_value(v).unwrap();
        assert_eq!(back.distance, r.distance);
    }

    fn coeffs_strategy() -> impl Strategy<Value = Vec<Complex<f64>>> {
        prop::collection::vec((0.2f64..1.0, 0.0f64..std::f64::consts::TAU), 1..6).prop_map(|v| {
            v.into_iter()
                .map(|(r, t)| Complex::from_polar(r, t))
                .collect()
        })
    }

    proptest! {
        #[test]
        fn canonical_is_invariant(cs in coeffs_strategy(), theta in 0.0f64..std::f64::consts::TAU) {
            let f = sig(cs);
            let base = canonicalize(&f);
            let z = Complex::from_polar(1.0, theta);
            for other in [canonicalize(&f.scaled(z)), canonicalize(&f.conjugated()), canonicalize(&base)] {
                for (a, b) in other.coeffs().iter().zip(base.coeffs()) {
                    prop_assert!((a - b).norm() <= 1e-12);
                }
            }
        }

        #[test]
        fn zero_distance_iff_same_canonical(cs in coeffs_strategy(), theta in 0.0f64..std::f64::consts::TAU, conj in any::<bool>()) {
            let f = sig(cs);
            let mut g = f.scaled(Complex::from_polar(1.0, theta));
            if conj {
                g = g.conjugated();
            }
            prop_assert!(equivalence_distance(&f, &g).unwrap().distance <= 1e-10);
            let (cf, cg) = (canonicalize(&f), canonicalize(&g));
            for (a, b) in cf.coeffs().iter().zip(cg.coeffs()) {
                prop_assert!((a - b).norm() <= 1e-10);
            }
        }

        #[test]
        fn phase_is_unimodular_and_distance_consistent(a in coeffs_strategy(), b in coeffs_strategy()) {
            let (f, g) = (sig(a), sig(b));
            let r = equivalence_distance(&f, &g).unwrap();
            prop_assert!((r.phase.norm() - 1.0).abs() <= 1e-12);
            let aligned = r.aligned.unwrap();
            let lo = f.k_min().min(aligned.k_min());
            let hi = f.k_max().max(aligned.k_max()).max(g.k_max());
            let num: f64 = (lo..=hi).map(|k| (f.coeff(k) - aligned.coeff(k)).norm_sqr()).sum::<f64>().sqrt();
            let den: f64 = f.coeffs().iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            prop_assert!((num / den - r.distance).abs() <= 1e-12);
            // Minimum over both group components.
            let other = if r.conjugated { g.clone() } else { g.conjugated() };
            let (_, cf, co) = padded(&f, &other);
            let (d_other, _) = align(&cf, &co);
            prop_assert!(r.distance <= d_other / den + 1e-14);
        }

        #[test]
        fn normalized_is_symmetric(a in coeffs_strategy(), b in coeffs_strategy()) {
            let (f, g) = (sig(a), sig(b));
            let d1 = normalized_distance(&f, &g).unwrap();
            let d2 = normalized_distance(&g, &f).unwrap();
            prop_assert!((d1 - d2).abs() <= 1e-12);
        }

        #[test]
        fn normalized_triangle(a in coeffs_strategy(), b in coeffs_strategy(), e in coeffs_strategy()) {
            let (f, g, h) = (sig(a), sig(b), sig(e));
            let fg = normalized_distance(&f, &g).unwrap();
            let gh = normalized_distance(&g, &h).unwrap();
            let fh = normalized_distance(&f, &h).unwrap();
            prop_assert!(fh <= fg + gh + 1e-12);
        }
    }
}
