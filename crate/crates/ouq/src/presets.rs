//! Named input sets: the river flood problem and the nine-input thermal
//! hydraulics configuration.

use ouq_core::{MomentSpec, Result};

use crate::sampling::{InputDistribution, SamplingDistribution};

/// One input: its bounds, the moment values of record and, when known, the
/// distribution the moments were computed from.
#[derive(Debug, Clone, PartialEq)]
pub struct PresetInput {
    pub name: &'static str,
    pub bounds: (f64, f64),
    pub moments: &'static [f64],
    pub distribution: Option<SamplingDistribution>,
}

impl PresetInput {
    /// Equality constraints on the first `order` moments.
    pub fn spec(&self, order: usize) -> Result<MomentSpec> {
        let order = order.min(self.moments.len());
        MomentSpec::equality(self.bounds.0, self.bounds.1, self.moments[..order].to_vec())
    }

    /// The nominal distribution truncated to the bounds.
    pub fn sampling(&self) -> Option<InputDistribution> {
        self.distribution
            .map(|d| InputDistribution::truncated(d, self.bounds.0, self.bounds.1))
    }
}

// The depth moments are those of the uniform laws U(49, 51) and U(54, 55);
// the rounded second moments 2500 and 2970 lie on and outside the boundary
// of the moment space respectively.
const HYDRAULIC: [PresetInput; 4] = [
    PresetInput {
        name: "Q",
        bounds: (160.0, 3580.0),
        moments: &[1320.42, 2.1632e6, 4.18e9],
        distribution: Some(SamplingDistribution::Gumbel { mode: 1013.0, scale: 558.0 }),
    },
    PresetInput {
        name: "Ks",
        bounds: (12.55, 47.45),
        moments: &[30.0, 949.0, 31422.0],
        distribution: Some(SamplingDistribution::Normal { mean: 30.0, sd: 7.5 }),
    },
    PresetInput {
        name: "Zv",
        bounds: (49.0, 51.0),
        moments: &[50.0, 7501.0 / 3.0, 125050.0],
        distribution: Some(SamplingDistribution::Uniform { a: 49.0, b: 51.0 }),
    },
    PresetInput {
        name: "Zm",
        bounds: (54.0, 55.0),
        moments: &[54.5, 8911.0 / 3.0, 161892.25],
        distribution: Some(SamplingDistribution::Uniform { a: 54.0, b: 55.0 }),
    },
];

const LN_WIDE: SamplingDistribution = SamplingDistribution::LogNormal { mu: 0.0, sigma: 0.76 };

const THERMAL_HYDRAULIC: [PresetInput; 9] = [
    PresetInput { name: "n10", bounds: (0.1, 10.0), moments: &[1.33, 3.02], distribution: Some(LN_WIDE) },
    PresetInput {
        name: "n22",
        bounds: (0.0, 12.8),
        moments: &[6.4, 45.39],
        distribution: Some(SamplingDistribution::Normal { mean: 6.4, sd: 4.27 }),
    },
    // Only the moments of this input are known.
    PresetInput { name: "n25", bounds: (11.1, 16.57), moments: &[13.83, 192.22], distribution: None },
    PresetInput {
        name: "n2",
        bounds: (-44.9, 63.5),
        moments: &[9.3, 1065.0],
        distribution: Some(SamplingDistribution::Uniform { a: -44.9, b: 63.5 }),
    },
    PresetInput { name: "n12", bounds: (0.1, 10.0), moments: &[1.33, 3.02], distribution: Some(LN_WIDE) },
    PresetInput { name: "n9", bounds: (0.1, 10.0), moments: &[1.33, 3.02], distribution: Some(LN_WIDE) },
    PresetInput {
        name: "n14",
        bounds: (0.235, 3.45),
        moments: &[0.99, 1.19],
        distribution: Some(SamplingDistribution::LogNormal { mu: -0.1, sigma: 0.45 }),
    },
    PresetInput {
        name: "n15",
        bounds: (0.1, 3.0),
        moments: &[0.64, 0.55],
        distribution: Some(SamplingDistribution::LogNormal { mu: -0.6, sigma: 0.57 }),
    },
    PresetInput { name: "n13", bounds: (0.1, 10.0), moments: &[1.33, 3.02], distribution: Some(LN_WIDE) },
];

/// Inputs `(Q, Ks, Zv, Zm)` of the flood model.
pub fn hydraulic_inputs() -> &'static [PresetInput] {
    &HYDRAULIC
}

/// Flood-model constraints on the first `order` moments of each input.
pub fn hydraulic_specs(order: usize) -> Result<Vec<MomentSpec>> {
    HYDRAULIC.iter().map(|p| p.spec(order)).collect()
}

/// Nominal truncated distributions of the flood-model inputs.
pub fn hydraulic_sampling() -> Vec<InputDistribution> {
    HYDRAULIC.iter().filter_map(PresetInput::sampling).collect()
}

/// The nine most influential inputs of the thermal-hydraulics study, each
/// constrained on its first two moments.
pub fn thermal_hydraulic_inputs() -> &'static [PresetInput] {
    &THERMAL_HYDRAULIC
}

pub fn thermal_hydraulic_specs() -> Result<Vec<MomentSpec>> {
    THERMAL_HYDRAULIC.iter().map(|p| p.spec(2)).collect()
}
