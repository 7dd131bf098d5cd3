use rand::Rng;

use super::{Compromise, DiffusionSpec, InteractionCoefficients, ModelSpec};
use crate::error::{Error, Result};

/// Relative shrink applied to the admissible bound before sampling so that
/// roundoff never carries a post-interaction state across `∂V`.
const BOUND_SAFETY: f64 = 1e-12;

/// Integrand `P(v, w, z)` of the nonlocal mean-field drift.
pub fn drift_kernel(v: f64, w: f64, z: f64, model: &ModelSpec) -> Result<f64> {
    model.check_state(v)?;
    model.check_state(w)?;
    Ok(drift_kernel_unchecked(v, w, z, &model.coefficients))
}

#[inline]
pub(crate) fn drift_kernel_unchecked(
    v: f64,
    w: f64,
    z: f64,
    coefficients: &InteractionCoefficients,
) -> f64 {
    match coefficients {
        InteractionCoefficients::Opinion(c) => c.at(z, (v - w).abs()) * (v - w),
        InteractionCoefficients::Wealth { propensity } => propensity.at(z) * (v - w),
        InteractionCoefficients::General { .. } => {
            let [p1, p2, q1, q2] = coefficients.at(z, (v - w).abs());
            0.5 * ((p1 + q2 - 2.0) * w + (p2 + q1) * v)
        }
    }
}

#[inline]
fn deterministic_update(v: f64, w: f64, z: f64, eps: f64, c: &InteractionCoefficients) -> (f64, f64) {
    match c {
        InteractionCoefficients::Opinion(comp) => {
            let p = comp.at(z, (v - w).abs());
            (v + eps * p * (w - v), w + eps * p * (v - w))
        }
        InteractionCoefficients::Wealth { propensity } => {
            let l = propensity.at(z);
            (
                (1.0 - eps * l) * v + eps * l * w,
                (1.0 - eps * l) * w + eps * l * v,
            )
        }
        InteractionCoefficients::General { .. } => {
            let [p1, p2, q1, q2] = c.at(z, (v - w).abs());
            (
                v + eps * ((p1 - 1.0) * v + q1 * w),
                w + eps * (p2 * v + (q2 - 1.0) * w),
            )
        }
    }
}

/// Post-interaction pair `(v', w')` for given noise realizations.
///
/// A post state outside `V` is reported as an invariant violation: it can only
/// come from noise exceeding [`admissible_noise_bound`].
pub fn apply_interaction(
    v: f64,
    w: f64,
    z: f64,
    eta_v: f64,
    eta_w: f64,
    eps: f64,
    model: &ModelSpec,
) -> Result<(f64, f64)> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::Argument(format!("epsilon must lie in (0, 1], got {eps}")));
    }
    model.check_state(v)?;
    model.check_state(w)?;
    let (dv, dw) = deterministic_update(v, w, z, eps, &model.coefficients);
    let vp = dv + model.diffusion.value(v, z) * eta_v;
    let wp = dw + model.diffusion.value(w, z) * eta_w;
    for (pre, post) in [(v, vp), (w, wp)] {
        if !model.domain.contains(post) {
            return Err(Error::InvariantViolation(format!(
                "interaction moved state {pre} to {post}, outside V"
            )));
        }
    }
    Ok((vp, wp))
}

/// Largest `b >= 0` such that both post states stay in `V` for every `|η| <= b`.
///
/// Closed-form bounds are used for the wealth rule (`1 - ε`) and for the
/// opinion rule with parabolic diffusion (`(1 - ε p_max) / (1 + |w|)`); the
/// square-root diffusion uses the worst case over the partner state,
/// `(1 - ε p_max) sqrt((1 - |w|) / (1 + |w|))`. Anything else falls back to
/// the exact per-pair computation.
pub fn admissible_noise_bound(v: f64, w: f64, z: f64, eps: f64, model: &ModelSpec) -> f64 {
    let law = &model.uncertainty;
    let unit_interval = !model.domain.half_line
        && model.domain.lower == -1.0
        && model.domain.upper == 1.0;
    match (&model.coefficients, &model.diffusion) {
        (InteractionCoefficients::Wealth { .. }, DiffusionSpec::Linear)
            if model.domain.half_line && model.domain.lower == 0.0 =>
        {
            (1.0 - eps).max(0.0)
        }
        (InteractionCoefficients::Opinion(comp), DiffusionSpec::Parabola) if unit_interval => {
            let slack = (1.0 - eps * max_compromise(comp, law.lower(), law.upper())).max(0.0);
            slack / (1.0 + v.abs().max(w.abs()))
        }
        (InteractionCoefficients::Opinion(comp), DiffusionSpec::SqrtParabola) if unit_interval => {
            let slack = (1.0 - eps * max_compromise(comp, law.lower(), law.upper())).max(0.0);
            let ratio = |x: f64| ((1.0 - x.abs()).max(0.0) / (1.0 + x.abs())).sqrt();
            slack * ratio(v).min(ratio(w))
        }
        _ => exact_pair_bound(v, w, z, eps, model),
    }
}

fn max_compromise(c: &Compromise, lo: f64, hi: f64) -> f64 {
    match c {
        Compromise::Uniform(p) => p.max_over(lo, hi),
        Compromise::BoundedConfidence => 1.0,
    }
}

fn exact_pair_bound(v: f64, w: f64, z: f64, eps: f64, model: &ModelSpec) -> f64 {
    let (dv, dw) = deterministic_update(v, w, z, eps, &model.coefficients);
    let lo = model.domain.lower;
    let hi = model.domain.sup();
    let single = |pre: f64, det: f64| {
        let d = model.diffusion.value(pre, z).abs();
        let room = (hi - det).min(det - lo);
        if d == 0.0 {
            if room >= 0.0 {
                f64::INFINITY
            } else {
                0.0
            }
        } else {
            (room / d).max(0.0)
        }
    };
    single(v, dv).min(single(w, dw))
}

/// Draws `η` uniform on `[-b, b]` with `b = min(sqrt(3 ε σ²), bound)`.
pub fn sample_noise<R: Rng + ?Sized>(bound: f64, eps: f64, model: &ModelSpec, rng: &mut R) -> f64 {
    let b = model.noise.half_width(eps).min(bound * (1.0 - BOUND_SAFETY));
    if !(b > 0.0) {
        return 0.0;
    }
    let u: f64 = rng.random();
    (2.0 * u - 1.0) * b
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{Affine, Domain, InitialCondition, NoiseSpec, UncertaintyLaw};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn opinion(p: f64) -> ModelSpec {
        let mut m = ModelSpec::catalog("opinion-A").unwrap();
        m.coefficients = InteractionCoefficients::Opinion(Compromise::Uniform(Affine::constant(p)));
        m
    }

    fn wealth(lambda: f64) -> ModelSpec {
        let mut m = ModelSpec::catalog("wealth-A").unwrap();
        m.coefficients = InteractionCoefficients::Wealth {
            propensity: Affine::constant(lambda),
        };
        m
    }

    #[test]
    fn drift_kernel_examples() {
        let m = opinion(1.0);
        assert!((drift_kernel(0.5, 0.1, 0.3, &m).unwrap() - 0.4).abs() < 1e-15);
        let m = wealth(1.0);
        assert_eq!(drift_kernel(2.0, 1.0, 0.5, &m).unwrap(), 1.0);
        let m = ModelSpec::catalog("bounded-confidence").unwrap();
        assert_eq!(drift_kernel(0.9, -0.9, 1.5, &m).unwrap(), 0.0);
        assert!((drift_kernel(0.5, -0.5, 1.5, &m).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn bounded_confidence_tie_does_not_interact() {
        let m = ModelSpec::catalog("bounded-confidence").unwrap();
        assert_eq!(drift_kernel(0.75, -0.75, 1.5, &m).unwrap(), 0.0);
    }

    #[test]
    fn drift_kernel_rejects_out_of_domain() {
        let m = opinion(1.0);
        assert!(matches!(drift_kernel(1.5, 0.0, 0.5, &m), Err(Error::Domain(_))));
    }

    #[test]
    fn general_form_matches_specialized_kernels() {
        let mut m = opinion(0.7);
        let special = drift_kernel(0.3, -0.2, 0.5, &m).unwrap();
        m.coefficients = InteractionCoefficients::General {
            p1: Affine::constant(0.3),
            p2: Affine::constant(0.7),
            q1: Affine::constant(0.7),
            q2: Affine::constant(0.3),
        };
        let general = drift_kernel(0.3, -0.2, 0.5, &m).unwrap();
        assert!((special - general).abs() < 1e-15);
    }

    #[test]
    fn interaction_examples() {
        let m = opinion(1.0);
        let (a, b) = apply_interaction(1.0, -1.0, 0.5, 0.0, 0.0, 0.1, &m).unwrap();
        assert!((a - 0.8).abs() < 1e-15 && (b + 0.8).abs() < 1e-15);
        let m = wealth(0.5);
        let (a, b) = apply_interaction(2.0, 0.0, 0.5, 0.0, 0.0, 0.1, &m).unwrap();
        assert!((a - 1.9).abs() < 1e-15 && (b - 0.1).abs() < 1e-15);
    }

    #[test]
    fn excessive_noise_is_an_invariant_violation() {
        let m = opinion(1.0);
        let err = apply_interaction(0.9, 0.9, 0.5, 2.0, 0.0, 0.1, &m).unwrap_err();
        assert!(matches!(err, Error::InvariantViolation(_)));
        assert!(apply_interaction(0.0, 0.0, 0.5, 0.0, 0.0, 1.5, &m).is_err());
    }

    #[test]
    fn wealth_bound_is_one_minus_eps() {
        let m = wealth(0.5);
        for (v, w) in [(0.0, 0.0), (3.0, 0.1), (9.0, 100.0)] {
            assert_eq!(admissible_noise_bound(v, w, 0.2, 0.1, &m), 0.9);
        }
    }

    #[test]
    fn parabolic_opinion_bound_matches_closed_form() {
        let mut m = ModelSpec::catalog("opinion-B").unwrap();
        m.diffusion = DiffusionSpec::Parabola;
        let eps = 0.1;
        // p(z) = 3/4 + z/4 on [-1, 1] has maximum 1
        let b = admissible_noise_bound(0.3, -0.6, 0.0, eps, &m);
        assert!((b - (1.0 - eps) / 1.6).abs() < 1e-15);
    }

    #[test]
    fn closed_form_bounds_keep_states_inside() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for key in ["opinion-A", "opinion-B", "bounded-confidence", "wealth-A", "wealth-B"] {
            let m = ModelSpec::catalog(key).unwrap();
            for _ in 0..20_000 {
                let (lo, hi) = (m.domain.lower, m.domain.upper);
                let v = lo + (hi - lo) * rng.random::<f64>();
                let w = lo + (hi - lo) * rng.random::<f64>();
                let z = m.uncertainty.sample(&mut rng);
                let eps = 0.05 + 0.95 * rng.random::<f64>();
                let b = admissible_noise_bound(v, w, z, eps, &m);
                let ev = if rng.random_bool(0.5) { b } else { -b } * (1.0 - 2.0 * BOUND_SAFETY);
                let ew = if rng.random_bool(0.5) { b } else { -b } * (1.0 - 2.0 * BOUND_SAFETY);
                apply_interaction(v, w, z, ev, ew, eps, &m)
                    .unwrap_or_else(|e| panic!("{key}: {e} at v={v} w={w} z={z} eps={eps}"));
            }
        }
    }

    #[test]
    fn interior_bound_has_positive_limit() {
        let m = ModelSpec::catalog("opinion-A").unwrap();
        let b1 = admissible_noise_bound(0.1, -0.2, 0.5, 1e-3, &m);
        let b2 = admissible_noise_bound(0.1, -0.2, 0.5, 1e-6, &m);
        assert!(b2 > 0.5 && (b1 - b2).abs() < 1e-2);
    }

    #[test]
    fn generic_bound_on_custom_model() {
        let m = ModelSpec {
            key: "custom".into(),
            domain: Domain::interval(0.0, 1.0),
            coefficients: InteractionCoefficients::Opinion(Compromise::Uniform(Affine::constant(0.5))),
            diffusion: DiffusionSpec::Custom(std::sync::Arc::new(|w, _| w * (1.0 - w))),
            noise: NoiseSpec { variance: 1.0 },
            uncertainty: UncertaintyLaw::uniform(0.0, 1.0).unwrap(),
            initial: InitialCondition::Uniform {
                lower: Affine::constant(0.0),
                upper: Affine::constant(1.0),
            },
        };
        // D = 0 at the boundary point, so only the partner constrains the pair
        let b = admissible_noise_bound(0.0, 0.5, 0.5, 0.1, &m);
        let det_w = 0.5 + 0.1 * 0.5 * (0.0 - 0.5);
        assert!((b - (det_w / 0.25)).abs() < 1e-14);
    }

    #[test]
    fn zero_bound_gives_zero_noise() {
        let m = opinion(1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            assert_eq!(sample_noise(0.0, 0.1, &m, &mut rng), 0.0);
        }
    }

    /// Uniform law on `[-b, b]`: mean 0 and variance `b²/3 = ε σ²`.
    #[test]
    fn noise_moments_match_the_uniform_law() {
        let m = opinion(1.0).with_noise_variance(0.5);
        let eps = 0.1;
        let target = eps * 0.5;
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 1_000_000;
        let draws: Vec<f64> = (0..n).map(|_| sample_noise(10.0, eps, &m, &mut rng)).collect();
        let mean = draws.iter().sum::<f64>() / n as f64;
        let var = draws.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        // Var of the squared uniform draw: E[η^4] - (E[η^2])^2 = b^4/5 - b^4/9
        let b2 = 3.0 * target;
        let se_var = ((b2 * b2 / 5.0 - b2 * b2 / 9.0) / n as f64).sqrt();
        let se_mean = (target / n as f64).sqrt();
        assert!(mean.abs() < 3.0 * se_mean, "mean {mean}");
        assert!((var - target).abs() < 3.0 * se_var, "var {var} vs {target}");
        let half = m.noise.half_width(eps);
        assert!(draws.iter().all(|x| x.abs() <= half));
    }
}
