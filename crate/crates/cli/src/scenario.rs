//! Scenario files: a single JSON document pinning every input of an
//! experiment, so reruns with the same file and seed reproduce the same
//! numeric artifacts.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use graphonflux_core::graphon::lift_matrix;
use graphonflux_core::{
    lengths_from_point_cloud, sample_graph_from_graphon, Error, GraphInstance, Kernel, KernelKind,
    ModelParams, Result, SourceDensity,
};

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum LengthSpec {
    /// Closed-form length kernel, floored at `floor` when sampling.
    Kernel {
        kernel: Kernel<f64>,
        #[serde(default)]
        floor: f64,
    },
    /// Euclidean distances of a seeded uniform point cloud.
    PointCloud { dim: usize, floor: f64 },
}

impl LengthSpec {
    pub fn floor(&self) -> f64 {
        match self {
            LengthSpec::Kernel { floor, .. } => *floor,
            LengthSpec::PointCloud { floor, .. } => *floor,
        }
    }

    /// The length kernel backing graphs of size `n`: closed-form kernels
    /// directly, point clouds through their lifted distance matrix.
    pub fn kernel_at(&self, n: usize, seed: u64) -> Result<Kernel<f64>> {
        match self {
            LengthSpec::Kernel { kernel, .. } => Ok(kernel.clone()),
            LengthSpec::PointCloud { dim, floor } => {
                let lengths = lengths_from_point_cloud::<f64>(*dim, n, seed, *floor);
                Kernel::grid(lift_matrix(&lengths))
            }
        }
    }

    /// Closed-form kernel spanning all sizes, when one exists. Sweeps need
    /// this; point clouds re-draw per size and have no common kernel.
    pub fn uniform_kernel(&self) -> Option<Kernel<f64>> {
        match self {
            LengthSpec::Kernel { kernel, .. } => Some(kernel.clone()),
            LengthSpec::PointCloud { .. } => None,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Scenario {
    pub graphon: Kernel<f64>,
    pub lengths: LengthSpec,
    pub sigma: SourceDensity<f64>,
    /// Target permeability kernel; defaults to the constant `max(1, r)`.
    #[serde(default)]
    pub b: Option<Kernel<f64>>,
    pub params: ModelParams<f64>,
    pub n_list: Vec<usize>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

impl Scenario {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let scenario: Scenario = serde_json::from_str(&text)?;
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn validate(&self) -> Result<()> {
        self.graphon.validate()?;
        if let LengthSpec::Kernel { kernel, .. } = &self.lengths {
            kernel.validate()?;
        }
        if let Some(b) = &self.b {
            b.validate()?;
        }
        self.sigma.validate()?;
        self.params.validate()?;
        if self.n_list.is_empty() {
            return Err(Error::InvalidDescriptor("n_list must not be empty".into()));
        }
        if !self.n_list.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::InvalidDescriptor(
                "n_list must be strictly increasing".into(),
            ));
        }
        if self.n_list[0] < 2 {
            return Err(Error::InvalidDescriptor("sizes must be at least 2".into()));
        }
        Ok(())
    }

    /// The permeability kernel, defaulted and floor-tagged.
    pub fn b_kernel(&self) -> Kernel<f64> {
        match &self.b {
            Some(k) => {
                let mut k = k.clone();
                // constants carry their own floor
                if let KernelKind::Constant { value } = k.kind {
                    k.lower_bound = k.lower_bound.max(value.max(0.0));
                }
                k
            }
            None => {
                let v = 1f64.max(self.params.r);
                Kernel::constant(v).with_lower_bound(v)
            }
        }
    }

    pub fn graph_at(&self, n: usize) -> Result<GraphInstance<f64>> {
        let lengths = self.lengths.kernel_at(n, self.seed)?;
        sample_graph_from_graphon(&self.graphon, &lengths, n, self.lengths.floor())
    }

    pub fn require_size(&self, n: usize) -> Result<()> {
        if self.n_list.contains(&n) {
            Ok(())
        } else {
            Err(Error::InvalidDescriptor(format!(
                "size {n} is not in the scenario's n_list {:?}",
                self.n_list
            )))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const FLAT: &str = r#"{
        "graphon": {"kind": "constant", "value": 1.0},
        "lengths": {"kind": "kernel", "kernel": {"kind": "constant", "value": 1.0}},
        "sigma": {"kind": "cosine", "mode": 1},
        "params": {"gamma": 2.0, "nu": 1.0, "r": 0.1, "lambda": 1.0},
        "n_list": [2, 4, 8],
        "seed": 7,
        "output_dir": "out"
    }"#;

    #[test]
    fn parses_and_validates() {
        let s: Scenario = serde_json::from_str(FLAT).unwrap();
        s.validate().unwrap();
        let g = s.graph_at(4).unwrap();
        assert_eq!(g.edge_count(), 6);
        assert!(s.require_size(8).is_ok());
        assert!(s.require_size(5).is_err());
        // default permeability is the flat kernel at max(1, r)
        assert_eq!(s.b_kernel().eval(0.3, 0.6), 1.0);
    }

    #[test]
    fn rejects_non_increasing_sizes() {
        let mut s: Scenario = serde_json::from_str(FLAT).unwrap();
        s.n_list = vec![4, 4];
        assert!(s.validate().is_err());
    }
}
