use super::{
    Affine, Compromise, DiffusionSpec, Domain, InitialCondition, InteractionCoefficients, ModelSpec,
    NoiseSpec, UncertaintyLaw,
};
use crate::error::{Error, Result};

/// Upper truncation of the wealth half-line used for grids.
pub const WEALTH_TRUNCATION: f64 = 10.0;

/// A catalog key with a one-line description.
#[derive(Debug, Clone, Copy)]
pub struct CatalogEntry {
    pub key: &'static str,
    pub summary: &'static str,
}

const ENTRIES: [CatalogEntry; 5] = [
    CatalogEntry {
        key: "opinion-A",
        summary: "opinion, p = 1, D = sqrt(1-w^2), f0 uniform on [(z-2)/4, (z+2)/4], z ~ U(0,1); Beta steady state",
    },
    CatalogEntry {
        key: "opinion-B",
        summary: "opinion, p = 3/4 + z/4, D = 1-w^2, f0 uniform on [-1/2, 1/2], z ~ U(-1,1); Maxwellian-like steady state",
    },
    CatalogEntry {
        key: "wealth-A",
        summary: "wealth, lambda = 1, D = w, f0 uniform on [z/5, 2+z/5], z ~ U(0,1); inverse-Gamma steady state",
    },
    CatalogEntry {
        key: "wealth-B",
        summary: "wealth, lambda = 1/2 + z/4, D = w, f0 uniform on [0, 2], z ~ U(-1,1); inverse-Gamma steady state",
    },
    CatalogEntry {
        key: "bounded-confidence",
        summary: "opinion, p = chi(|v-w| < z), D = 1-w^2, f0 double Gaussian at +-1/2, z ~ U(1,2); no closed-form steady state",
    },
];

pub fn catalog_keys() -> impl Iterator<Item = &'static str> {
    ENTRIES.iter().map(|e| e.key)
}

pub fn describe() -> &'static [CatalogEntry] {
    &ENTRIES
}

pub(super) fn build(key: &str) -> Result<ModelSpec> {
    let opinion_domain = Domain::interval(-1.0, 1.0);
    let wealth_domain = Domain::half_line(0.0, WEALTH_TRUNCATION);
    let model = match key {
        "opinion-A" => ModelSpec {
            key: key.into(),
            domain: opinion_domain,
            coefficients: InteractionCoefficients::Opinion(Compromise::Uniform(Affine::constant(1.0))),
            diffusion: DiffusionSpec::SqrtParabola,
            noise: NoiseSpec { variance: 0.01 },
            uncertainty: UncertaintyLaw::uniform(0.0, 1.0)?,
            initial: InitialCondition::Uniform {
                lower: Affine::new(-0.5, 0.25),
                upper: Affine::new(0.5, 0.25),
            },
        },
        "opinion-B" => ModelSpec {
            key: key.into(),
            domain: opinion_domain,
            coefficients: InteractionCoefficients::Opinion(Compromise::Uniform(Affine::new(0.75, 0.25))),
            diffusion: DiffusionSpec::Parabola,
            noise: NoiseSpec { variance: 0.01 },
            uncertainty: UncertaintyLaw::uniform(-1.0, 1.0)?,
            initial: InitialCondition::Uniform {
                lower: Affine::constant(-0.5),
                upper: Affine::constant(0.5),
            },
        },
        "wealth-A" => ModelSpec {
            key: key.into(),
            domain: wealth_domain,
            coefficients: InteractionCoefficients::Wealth {
                propensity: Affine::constant(1.0),
            },
            diffusion: DiffusionSpec::Linear,
            noise: NoiseSpec { variance: 0.1 },
            uncertainty: UncertaintyLaw::uniform(0.0, 1.0)?,
            initial: InitialCondition::Uniform {
                lower: Affine::new(0.0, 0.2),
                upper: Affine::new(2.0, 0.2),
            },
        },
        "wealth-B" => ModelSpec {
            key: key.into(),
            domain: wealth_domain,
            coefficients: InteractionCoefficients::Wealth {
                propensity: Affine::new(0.5, 0.25),
            },
            diffusion: DiffusionSpec::Linear,
            noise: NoiseSpec { variance: 0.05 },
            uncertainty: UncertaintyLaw::uniform(-1.0, 1.0)?,
            initial: InitialCondition::Uniform {
                lower: Affine::constant(0.0),
                upper: Affine::constant(2.0),
            },
        },
        "bounded-confidence" => ModelSpec {
            key: key.into(),
            domain: opinion_domain,
            coefficients: InteractionCoefficients::Opinion(Compromise::BoundedConfidence),
            diffusion: DiffusionSpec::Parabola,
            noise: NoiseSpec { variance: 0.01 },
            uncertainty: UncertaintyLaw::uniform(1.0, 2.0)?,
            initial: InitialCondition::DoubleGaussian {
                centers: [-0.5, 0.5],
                sharpness: 30.0,
            },
        },
        other => {
            return Err(Error::Configuration(format!(
                "unknown model key `{other}`; available: {}",
                catalog_keys().collect::<Vec<_>>().join(", ")
            )))
        }
    };
    Ok(model)
}
