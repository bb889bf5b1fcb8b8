use crate::geom::Vec3;
use crate::Real;

/// Signals that no transmitted ray exists.
#[derive(Clone, Copy, Debug, PartialEq, Eq, thiserror::Error)]
#[error("total internal reflection")]
pub struct TotalInternalReflection;

/// Refracts the unit direction `d` at a surface with unit normal `n`.
///
/// `n` must oppose the incident ray (`d·n < 0`) and `eta` is the ratio of
/// the incident to the transmitted refractive index, so that
/// `sin θt = eta · sin θi`.
#[inline]
pub fn refract<T: Real>(d: Vec3<T>, n: Vec3<T>, eta: T) -> Result<Vec3<T>, TotalInternalReflection> {
    let c1 = -d.dot(n);
    let k = T::one() - eta * eta * (T::one() - c1 * c1);
    if k < T::zero() {
        return Err(TotalInternalReflection);
    }
    Ok(d * eta + n * (eta * c1 - k.sqrt()))
}

/// Largest incidence angle (radians) that still transmits when leaving a
/// medium whose index relative to the outside is `eta > 1`.
pub fn critical_angle<T: Real>(eta: T) -> T {
    (T::one() / eta).asin()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn incidence(theta: f64) -> Vec3<f64> {
        Vec3::new(theta.sin(), 0.0, -theta.cos())
    }

    #[test]
    fn normal_incidence_is_unchanged() {
        let t = refract(Vec3::new(0.0, 0.0, -1.0), Vec3::new(0.0, 0.0, 1.0), 1.0 / 1.5).unwrap();
        assert!((t - Vec3::new(0.0, 0.0, -1.0)).norm() < 1e-15);
    }

    #[test]
    fn matched_media_pass_through() {
        let d = Vec3::new(0.3, -0.2, -0.8).normalized();
        let n = Vec3::new(0.1, 0.2, 1.0).normalized();
        let t = refract(d, n, 1.0).unwrap();
        assert!((t - d).norm() < 1e-15);
    }

    #[test]
    fn forty_five_degrees_into_glass() {
        let n = Vec3::new(0.0, 0.0, 1.0);
        let t = refract(incidence(45f64.to_radians()), n, 1.0 / 1.5).unwrap();
        let angle = t.x.atan2(-t.z).to_degrees();
        // scalar Snell: asin(sin 45° / 1.5)
        let expected = ((45f64.to_radians()).sin() / 1.5).asin().to_degrees();
        assert!((expected - 28.125_5).abs() < 1e-4);
        assert!((angle - expected).abs() < 1e-10);
    }

    #[test]
    fn forty_five_degrees_out_of_glass_reflects() {
        let n = Vec3::new(0.0, 0.0, 1.0);
        assert!((critical_angle(1.5f64).to_degrees() - 41.81).abs() < 0.01);
        assert_eq!(refract(incidence(45f64.to_radians()), n, 1.5), Err(TotalInternalReflection));
    }

    proptest! {
        #[test]
        fn reversible_and_coplanar(
            theta in 0.0f64..1.5,
            phi in 0.0f64..6.28,
            nx in -1.0f64..1.0, ny in -1.0f64..1.0,
            eta in 0.5f64..2.0,
        ) {
            let n = Vec3::new(nx, ny, 1.0).normalized();
            // build d at incidence theta around -n
            let tangent = n.cross(Vec3::new(phi.cos(), phi.sin(), 0.3)).normalized();
            let d = (-n * theta.cos() + tangent * theta.sin()).normalized();
            if let Ok(t) = refract(d, n, eta) {
                prop_assert!((t.norm() - 1.0).abs() < 1e-12);
                let det = d.dot(n.cross(t));
                prop_assert!(det.abs() < 1e-12);
                let sin_t = t.cross(-n).norm();
                let sin_i = d.cross(-n).norm();
                prop_assert!((sin_t - eta * sin_i).abs() < 1e-12);
                let back = refract(-t, -n, 1.0 / eta).unwrap();
                prop_assert!((back + d).norm() < 1e-10);
            }
        }
    }
}
