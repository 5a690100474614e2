//! Low-temperature Luttinger-liquid description of the cycle.
//!
//! With `xi = v_A / v_B` and `kappa = T_A / T_C` the cycle has
//! `eta = 1 - xi` and `W = pi L T_C^2 / (6 v_B) (1 - xi)(1 - kappa^2 / xi^2)`.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::tba::{mu_from_density, GridConfig};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TllParams {
    pub v_s_a: f64,
    pub v_s_b: f64,
    pub kappa: f64,
    pub xi: f64,
}

impl TllParams {
    pub fn new(v_s_a: f64, v_s_b: f64, kappa: f64) -> Result<Self> {
        if !(v_s_a > 0.0 && v_s_b > 0.0 && v_s_a.is_finite() && v_s_b.is_finite()) {
            return Err(Error::invalid("sound velocities must be positive"));
        }
        check_kappa(kappa)?;
        Ok(Self {
            v_s_a,
            v_s_b,
            kappa,
            xi: v_s_a / v_s_b,
        })
    }

    /// `0 < kappa < xi < 1`.
    pub fn is_engine(&self) -> bool {
        0.0 < self.kappa && self.kappa < self.xi && self.xi < 1.0
    }
}

fn check_kappa(kappa: f64) -> Result<()> {
    if !(kappa > 0.0 && kappa < 1.0) {
        return Err(Error::invalid(format!("kappa must lie in (0, 1), got {kappa}")));
    }
    Ok(())
}

/// `2 pi n (1 - 4n/c + 12 n^2/c^2)`, valid for `c >> n`.
pub fn sound_velocity_strong(n: f64, c: f64) -> f64 {
    let r = n / c;
    2.0 * PI * n * (1.0 - 4.0 * r + 12.0 * r * r)
}

/// `2n sqrt(c/n - (c/n)^{3/2} / 2 pi)`, valid for `c << n`.
pub fn sound_velocity_weak(n: f64, c: f64) -> Result<f64> {
    let g = c / n;
    let radicand = g - g.powf(1.5) / (2.0 * PI);
    if !(radicand > 0.0) {
        return Err(Error::Domain(format!(
            "weak-coupling expansion invalid at c/n = {g} (radicand {radicand})"
        )));
    }
    Ok(2.0 * n * radicand.sqrt())
}

/// `sqrt(2 n dmu/dn)` from density inversions at `T = 1e-4 n^2`, central difference
/// with relative step `1e-4`.
pub fn sound_velocity_tba(n: f64, c: f64, cfg: &GridConfig) -> Result<f64> {
    if !(n > 0.0 && c > 0.0 && n.is_finite() && c.is_finite()) {
        return Err(Error::invalid("density and coupling must be positive"));
    }
    let t = 1e-4 * n * n;
    let h = 1e-4 * n;
    let up = mu_from_density(c, n + h, t, cfg)?;
    let down = mu_from_density(c, n - h, t, cfg)?;
    let dmu_dn = (up - down) / (2.0 * h);
    if !(dmu_dn > 0.0) {
        return Err(Error::Domain(format!("non-positive dmu/dn = {dmu_dn} at n = {n}, c = {c}")));
    }
    Ok((2.0 * n * dmu_dn).sqrt())
}

pub fn tll_efficiency(params: &TllParams) -> f64 {
    1.0 - params.xi
}

pub fn tll_work(v_s_b: f64, t_c: f64, kappa: f64, xi: f64, length: f64) -> Result<f64> {
    if xi == 0.0 || !xi.is_finite() {
        return Err(Error::Domain(format!("work undefined at xi = {xi}")));
    }
    Ok(PI * length * t_c * t_c / (6.0 * v_s_b) * (1.0 - xi) * (1.0 - kappa * kappa / (xi * xi)))
}

/// Ratio `xi` maximising the work at fixed `kappa`: the real root of
/// `xi^3 + kappa^2 xi - 2 kappa^2 = 0`.
pub fn optimal_xi(kappa: f64) -> Result<f64> {
    check_kappa(kappa)?;
    let k2 = kappa * kappa;
    // 27 k^2 (sqrt(1 + k^2/27) - 1), rationalised.
    let a = k2 * k2 / ((1.0 + k2 / 27.0).sqrt() + 1.0);
    let a3 = a.cbrt();
    Ok(k2 / a3 - a3 / 3.0)
}

/// `(2 kappa^2)^{1/3} [1 - (kappa/2)^{2/3} / 3]`.
pub fn optimal_xi_small_kappa(kappa: f64) -> Result<f64> {
    check_kappa(kappa)?;
    Ok((2.0 * kappa * kappa).cbrt() * (1.0 - (0.5 * kappa).powf(2.0 / 3.0) / 3.0))
}

/// `1 - sqrt(c_A / c_B)`.
pub fn weak_coupling_efficiency(c_a: f64, c_b: f64) -> Result<f64> {
    if !(c_a > 0.0 && c_b >= c_a) {
        return Err(Error::invalid(format!("need 0 < c_A <= c_B, got {c_a}, {c_b}")));
    }
    Ok(1.0 - (c_a / c_b).sqrt())
}

/// Bosonic coupling equivalent to anyons with statistical angle `theta`: `c~ / cos(theta/2)`.
pub fn anyon_effective_coupling(c_tilde: f64, theta: f64) -> Result<f64> {
    if !(c_tilde > 0.0) {
        return Err(Error::invalid("anyon coupling must be positive"));
    }
    if !(0.0..PI).contains(&theta) {
        return Err(Error::Domain(format!(
            "statistical angle must lie in [0, pi), got {theta}"
        )));
    }
    let cos = (0.5 * theta).cos();
    let c = c_tilde / cos;
    if !c.is_finite() || cos < 1e-12 {
        return Err(Error::Domain(format!("coupling diverges at theta = {theta}")));
    }
    Ok(c)
}

/// `(3 c_o + c_e)/4 + (c_o - c_e) <S_i . S_j>` for spin-1/2 bosons.
pub fn spinor_effective_coupling(c_o: f64, c_e: f64, spin_corr: f64) -> Result<f64> {
    if !(-0.75..=0.25).contains(&spin_corr) {
        return Err(Error::Domain(format!(
            "spin correlator must lie in [-3/4, 1/4], got {spin_corr}"
        )));
    }
    Ok((3.0 * c_o + c_e) / 4.0 + (c_o - c_e) * spin_corr)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn velocity_examples() {
        assert_relative_eq!(sound_velocity_strong(1.0, f64::INFINITY), 2.0 * PI);
        assert_relative_eq!(sound_velocity_strong(1.0, 200.0), 2.0 * PI * 0.9803, max_relative = 1e-12);
        assert_relative_eq!(sound_velocity_weak(1.0, 0.1).unwrap(), 0.616330, max_relative = 1e-5);
        assert!(matches!(sound_velocity_weak(1.0, 50.0), Err(Error::Domain(_))));
        let tiny = sound_velocity_weak(1.0, 1e-8).unwrap();
        assert_relative_eq!(tiny, 2.0 * 1e-4, max_relative = 1e-4);
    }

    #[test]
    fn efficiency_and_work_examples() {
        let p = TllParams::new(2.0, 2.0, 0.5).unwrap();
        assert_eq!(tll_efficiency(&p), 0.0);
        let p = TllParams::new(0.69, 1.0, 0.5).unwrap();
        assert_relative_eq!(tll_efficiency(&p), 0.31, max_relative = 1e-12);
        assert_eq!(tll_work(2.5, 1.0, 0.5, 1.0, 1.0).unwrap(), 0.0);
        assert_eq!(tll_work(2.5, 1.0, 0.5, 0.5, 1.0).unwrap(), 0.0);
        let w = tll_work(2.5, 1.0, 0.5, 0.69, 1.0).unwrap();
        assert_relative_eq!(w, PI / 15.0 * 0.31 * (1.0 - 0.25 / 0.4761), max_relative = 1e-12);
        assert_relative_eq!(w, 0.030834, max_relative = 1e-4);
        assert!(tll_work(2.5, 1.0, 0.5, 0.0, 1.0).is_err());
        assert!(TllParams::new(1.0, 2.0, 1.0).is_err());
    }

    #[test]
    fn strong_velocity_ratio_matches_finite_n_efficiency() {
        let gas = crate::bethe::GasSpec::new(5, 5.0, 100.0).unwrap();
        let eta6 = crate::gibbs::strong_coupling_efficiency(100.0, 200.0, &gas);
        let ratio = sound_velocity_strong(1.0, 100.0) / sound_velocity_strong(1.0, 200.0);
        // Identical up to the (N-1)/N vs 1 prefactor of the 1/c corrections.
        let big = crate::bethe::GasSpec::new(100_000, 100_000.0, 100.0).unwrap();
        let eta_big = crate::gibbs::strong_coupling_efficiency(100.0, 200.0, &big);
        assert_relative_eq!(1.0 - ratio, eta_big, max_relative = 1e-4);
        assert!((eta6 - eta_big).abs() > 1e-3);
    }

    #[test]
    fn optimal_xi_examples() {
        let x = optimal_xi(0.5).unwrap();
        assert!((x - 0.69).abs() < 0.005, "{x}");
        assert_relative_eq!(x * x * x + 0.25 * x - 0.5, 0.0, epsilon = 1e-14);
        assert_relative_eq!(optimal_xi_small_kappa(0.5).unwrap(), 0.6887, max_relative = 1e-3);
        for k in [1e-3, 0.01, 0.05, 0.1] {
            let exact = optimal_xi(k).unwrap();
            let approx = optimal_xi_small_kappa(k).unwrap();
            assert!((approx - exact).abs() <= 0.01 * exact);
            assert_relative_eq!(exact, (2.0 * k * k).cbrt(), max_relative = 0.7 * k.powf(2.0 / 3.0));
        }
        assert!(optimal_xi(0.0).is_err());
        assert!(optimal_xi(1.0).is_err());
    }

    #[test]
    fn optimum_beats_dense_grid() {
        for kappa in [0.1, 0.3, 0.5, 0.7] {
            let xc = optimal_xi(kappa).unwrap();
            let wc = tll_work(1.0, 1.0, kappa, xc, 1.0).unwrap();
            let steps = 100_000;
            let (mut best_x, mut best_w) = (kappa, f64::NEG_INFINITY);
            for i in 1..steps {
                let x = kappa + (1.0 - kappa) * i as f64 / steps as f64;
                let w = tll_work(1.0, 1.0, kappa, x, 1.0).unwrap();
                if w > best_w {
                    best_w = w;
                    best_x = x;
                }
            }
            assert!(wc >= best_w);
            assert!((best_x - xc).abs() <= 2.0 * (1.0 - kappa) / steps as f64);
            let h = 1e-5;
            let slope = (tll_work(1.0, 1.0, kappa, xc + h, 1.0).unwrap()
                - tll_work(1.0, 1.0, kappa, xc - h, 1.0).unwrap())
                / (2.0 * h);
            assert!(slope.abs() <= 1e-6 * wc / xc);
        }
    }

    #[test]
    fn coupling_maps() {
        assert_eq!(weak_coupling_efficiency(2.0, 2.0).unwrap(), 0.0);
        assert_relative_eq!(weak_coupling_efficiency(1.0, 3.0).unwrap(), 0.42265, max_relative = 1e-4);
        assert_relative_eq!(weak_coupling_efficiency(1.0, 4.0).unwrap(), 0.5);
        assert_eq!(anyon_effective_coupling(1.5, 0.0).unwrap(), 1.5);
        assert_relative_eq!(anyon_effective_coupling(1.0, 2.0 * PI / 3.0).unwrap(), 2.0, max_relative = 1e-14);
        assert!(anyon_effective_coupling(1.0, PI).is_err());
        assert!(anyon_effective_coupling(1.0, PI - 1e-15).is_err());
        assert_eq!(spinor_effective_coupling(3.0, 3.0, 0.1).unwrap(), 3.0);
        assert_eq!(spinor_effective_coupling(5.0, 2.0, -0.75).unwrap(), 2.0);
        assert_eq!(spinor_effective_coupling(5.0, 2.0, 0.25).unwrap(), 5.0);
        assert!(spinor_effective_coupling(5.0, 2.0, 0.3).is_err());
    }

    proptest! {
        #[test]
        fn strong_velocity_is_homogeneous(n in 0.1f64..5.0, c in 10.0f64..1e4, alpha in 0.1f64..10.0) {
            let lhs = sound_velocity_strong(alpha * n, alpha * c);
            let rhs = alpha * sound_velocity_strong(n, c);
            prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.abs());
        }

        #[test]
        fn engine_ordering(kappa in 0.01f64..0.98, u in 0.001f64..0.999) {
            let xi = kappa + (1.0 - kappa) * u;
            prop_assume!(xi < 1.0 && xi > kappa);
            let p = TllParams::new(xi, 1.0, kappa).unwrap();
            prop_assert!(p.is_engine());
            let eta = tll_efficiency(&p);
            prop_assert!(eta > 0.0 && eta < 1.0 - kappa);
            prop_assert!(tll_work(1.0, 1.0, kappa, xi, 1.0).unwrap() > 0.0);
        }

        #[test]
        fn anyon_coupling_grows_with_theta(a in 0.0f64..3.0, b in 0.0f64..3.0) {
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            prop_assume!(hi - lo > 1e-9);
            prop_assert!(anyon_effective_coupling(1.0, hi).unwrap() > anyon_effective_coupling(1.0, lo).unwrap());
        }

        #[test]
        fn optimal_xi_solves_cubic(kappa in 0.001f64..0.999) {
            let x = optimal_xi(kappa).unwrap();
            let k2 = kappa * kappa;
            prop_assert!(x > kappa && x < 1.0);
            prop_assert!((x * x * x + k2 * x - 2.0 * k2).abs() <= 1e-13);
        }
    }
}
