//! JSON model configs: a strict, versioned schema that builds into a
//! [`ManifoldDensity64`].
//!
//! Unknown fields are rejected at every level — a typo in an experiment
//! config must fail loudly, not silently fall back to a default.  The
//! `kind`-dependent fields are plain options validated in [`ModelConfig::build`],
//! because serde's internally tagged enums do not reject unknown fields.

use manifold_density::charts::{Chart, ProductChart, StereographicChart};
use manifold_density::flows::{FlowChain, Layer, LayerKind};
use manifold_density::{BaseDensity64, ManifoldDensity64};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u64 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub schema_version: u64,
    pub chart: ChartConfig,
    pub base: BaseConfig,
    pub flow: FlowConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChartConfig {
    /// "sphere" (takes `n`) or "product" (takes `components`, a list of
    /// sphere dimensions).
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub components: Option<Vec<usize>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaseConfig {
    /// "standard_normal" or "uniform_ball" (takes `R`).
    pub kind: String,
    pub n: usize,
    #[serde(default, rename = "R", skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowConfig {
    pub layers: Vec<LayerConfig>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerConfig {
    /// "planar" or "radial".
    pub kind: String,
    /// Raw parameters in [`Layer::parameters`] order.  Exactly one of
    /// `params` and `seed` must be present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<Vec<f64>>,
    /// Draws the layer from [`Layer::random`] with this seed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

pub fn layer_kind(name: &str) -> Result<LayerKind, String> {
    match name {
        "planar" => Ok(LayerKind::Planar),
        "radial" => Ok(LayerKind::Radial),
        other => Err(format!("unknown layer kind {other:?}")),
    }
}

pub fn kind_name(kind: LayerKind) -> &'static str {
    match kind {
        LayerKind::Planar => "planar",
        LayerKind::Radial => "radial",
    }
}

impl ModelConfig {
    pub fn from_json(text: &str) -> Result<Self, String> {
        let config: ModelConfig =
            serde_json::from_str(text).map_err(|e| format!("invalid config: {e}"))?;
        if config.schema_version != SCHEMA_VERSION {
            return Err(format!(
                "unsupported schema_version {} (this tool reads {SCHEMA_VERSION})",
                config.schema_version
            ));
        }
        Ok(config)
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("config serializes");
        text.push('\n');
        text
    }

    pub fn build(&self) -> Result<ManifoldDensity64, String> {
        let n = self.chart_dim()?;
        let base = self.build_base()?;
        let chain = self.build_chain(n)?;
        let core = |e: manifold_density::Error| format!("invalid config: {e}");
        match self.chart.kind.as_str() {
            "sphere" => {
                ManifoldDensity64::new(base, chain, StereographicChart::new(n)).map_err(core)
            }
            "product" => {
                let components = self.chart.components.as_ref().expect("checked by chart_dim");
                let charts: Vec<Box<dyn Chart<f64>>> = components
                    .iter()
                    .map(|&k| Box::new(StereographicChart::new(k)) as Box<dyn Chart<f64>>)
                    .collect();
                let product = ProductChart::new(charts).map_err(&core)?;
                ManifoldDensity64::new(base, chain, product).map_err(&core)
            }
            _ => unreachable!("checked by chart_dim"),
        }
    }

    /// The same model with the flow replaced by explicit per-layer
    /// parameters, so fitted chains reload exactly.
    pub fn with_explicit_flow(&self, chain: &FlowChain<f64>) -> ModelConfig {
        ModelConfig {
            schema_version: SCHEMA_VERSION,
            chart: self.chart.clone(),
            base: self.base.clone(),
            flow: FlowConfig {
                layers: chain
                    .layers()
                    .iter()
                    .map(|layer| LayerConfig {
                        kind: kind_name(layer.kind()).to_string(),
                        params: Some(layer.parameters()),
                        seed: None,
                    })
                    .collect(),
            },
        }
    }

    fn chart_dim(&self) -> Result<usize, String> {
        match self.chart.kind.as_str() {
            "sphere" => {
                if self.chart.components.is_some() {
                    return Err("chart kind \"sphere\" takes `n`, not `components`".into());
                }
                let n = self.chart.n.ok_or_else(|| "chart kind \"sphere\" needs `n`".to_string())?;
                if n == 0 {
                    return Err("chart dimension must be at least 1".into());
                }
                Ok(n)
            }
            "product" => {
                if self.chart.n.is_some() {
                    return Err("chart kind \"product\" takes `components`, not `n`".into());
                }
                let components = self
                    .chart
                    .components
                    .as_ref()
                    .ok_or_else(|| "chart kind \"product\" needs `components`".to_string())?;
                if components.is_empty() || components.iter().any(|&k| k == 0) {
                    return Err("`components` must be a non-empty list of dimensions >= 1".into());
                }
                Ok(components.iter().sum())
            }
            other => Err(format!("unknown chart kind {other:?}")),
        }
    }

    fn build_base(&self) -> Result<BaseDensity64, String> {
        let core = |e: manifold_density::Error| format!("invalid config: {e}");
        match self.base.kind.as_str() {
            "standard_normal" => {
                if self.base.radius.is_some() {
                    return Err("base kind \"standard_normal\" takes no `R`".into());
                }
                BaseDensity64::standard_normal(self.base.n).map_err(core)
            }
            "uniform_ball" => {
                let radius = self
                    .base
                    .radius
                    .ok_or_else(|| "base kind \"uniform_ball\" needs `R`".to_string())?;
                BaseDensity64::uniform_ball(self.base.n, radius).map_err(core)
            }
            other => Err(format!("unknown base kind {other:?}")),
        }
    }

    fn build_chain(&self, dim: usize) -> Result<FlowChain<f64>, String> {
        let mut layers = Vec::with_capacity(self.flow.layers.len());
        for (i, layer) in self.flow.layers.iter().enumerate() {
            layers.push(layer.build(dim).map_err(|e| format!("flow layer {i}: {e}"))?);
        }
        FlowChain::new(layers).map_err(|e| format!("invalid config: {e}"))
    }
}

impl LayerConfig {
    fn build(&self, dim: usize) -> Result<Layer<f64>, String> {
        let kind = layer_kind(&self.kind)?;
        match (&self.params, self.seed) {
            (Some(params), None) => {
                Layer::from_parameters(kind, dim, params).map_err(|e| e.to_string())
            }
            (None, Some(seed)) => {
                Layer::random(kind, dim, &mut ChaCha12Rng::seed_from_u64(seed))
                    .map_err(|e| e.to_string())
            }
            _ => Err("exactly one of `params` and `seed` must be set".into()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sphere_config(flow_layers: &str) -> String {
        format!(
            r#"{{
              "schema_version": 1,
              "chart": {{"kind": "sphere", "n": 2}},
              "base": {{"kind": "standard_normal", "n": 2}},
              "flow": {{"layers": [{flow_layers}]}}
            }}"#
        )
    }

    #[test]
    fn identity_sphere_config_builds() {
        let config = ModelConfig::from_json(&sphere_config("")).unwrap();
        let model = config.build().unwrap();
        assert_eq!(model.intrinsic_dim(), 2);
        assert_eq!(model.ambient_dim(), 3);
        assert!(model.chain().is_empty());
    }

    #[test]
    fn layers_build_from_params_or_seed() {
        let config = ModelConfig::from_json(&sphere_config(
            r#"{"kind": "planar", "params": [0.1, -0.2, 0.3, 0.0, 0.5]},
               {"kind": "radial", "seed": 7}"#,
        ))
        .unwrap();
        let model = config.build().unwrap();
        assert_eq!(model.chain().len(), 2);
        assert_eq!(model.chain().layers()[0].parameters(), vec![0.1, -0.2, 0.3, 0.0, 0.5]);
    }

    #[test]
    fn unknown_fields_are_rejected_at_every_level() {
        for broken in [
            r#"{"schema_version": 1, "chart": {"kind": "sphere", "n": 2}, "base": {"kind": "standard_normal", "n": 2}, "flow": {"layers": []}, "extra": 1}"#,
            r#"{"schema_version": 1, "chart": {"kind": "sphere", "n": 2, "typo": 3}, "base": {"kind": "standard_normal", "n": 2}, "flow": {"layers": []}}"#,
            r#"{"schema_version": 1, "chart": {"kind": "sphere", "n": 2}, "base": {"kind": "standard_normal", "n": 2, "sigma": 2.0}, "flow": {"layers": []}}"#,
            r#"{"schema_version": 1, "chart": {"kind": "sphere", "n": 2}, "base": {"kind": "standard_normal", "n": 2}, "flow": {"layers": [{"kind": "planar", "seed": 1, "scale": 2}]}}"#,
        ] {
            assert!(ModelConfig::from_json(broken).is_err(), "accepted: {broken}");
        }
    }

    #[test]
    fn schema_version_gates_parsing() {
        let text = sphere_config("").replace("\"schema_version\": 1", "\"schema_version\": 2");
        let err = ModelConfig::from_json(&text).unwrap_err();
        assert!(err.contains("schema_version"), "{err}");
    }

    #[test]
    fn kind_dependent_fields_are_validated() {
        let cases = [
            (r#"{"kind": "sphere"}"#, "needs `n`"),
            (r#"{"kind": "sphere", "n": 0}"#, "at least 1"),
            (r#"{"kind": "sphere", "n": 2, "components": [1]}"#, "not `components`"),
            (r#"{"kind": "product", "components": []}"#, "non-empty"),
            (r#"{"kind": "mobius", "n": 2}"#, "unknown chart kind"),
        ];
        for (chart, needle) in cases {
            let text = sphere_config("").replace(r#"{"kind": "sphere", "n": 2}"#, chart);
            let err = ModelConfig::from_json(&text).unwrap().build().err().unwrap();
            assert!(err.contains(needle), "{chart}: {err}");
        }
    }

    #[test]
    fn layer_params_and_seed_are_exclusive() {
        for layer in [
            r#"{"kind": "planar"}"#,
            r#"{"kind": "planar", "params": [0.0, 0.0, 0.0, 0.0, 0.0], "seed": 1}"#,
        ] {
            let err = ModelConfig::from_json(&sphere_config(layer)).unwrap().build().err().unwrap();
            assert!(err.contains("exactly one"), "{layer}: {err}");
        }
    }

    #[test]
    fn base_dimension_must_match_the_chart() {
        let text = sphere_config("").replace(r#""kind": "standard_normal", "n": 2"#, r#""kind": "standard_normal", "n": 3"#);
        let err = ModelConfig::from_json(&text).unwrap().build().err().unwrap();
        assert!(err.contains("dimension mismatch"), "{err}");
    }

    #[test]
    fn product_chart_dimensions_add_up() {
        let text = r#"{
          "schema_version": 1,
          "chart": {"kind": "product", "components": [1, 1, 1]},
          "base": {"kind": "standard_normal", "n": 3},
          "flow": {"layers": []}
        }"#;
        let model = ModelConfig::from_json(text).unwrap().build().unwrap();
        assert_eq!(model.intrinsic_dim(), 3);
        assert_eq!(model.ambient_dim(), 6);
    }

    #[test]
    fn uniform_ball_base_round_trips_through_json() {
        let text = r#"{
          "schema_version": 1,
          "chart": {"kind": "sphere", "n": 1},
          "base": {"kind": "uniform_ball", "n": 1, "R": 2.5},
          "flow": {"layers": []}
        }"#;
        let config = ModelConfig::from_json(text).unwrap();
        config.build().unwrap();
        let reparsed = ModelConfig::from_json(&config.to_json()).unwrap();
        assert_eq!(reparsed.base.radius, Some(2.5));
    }

    #[test]
    fn explicit_flow_reloads_to_the_same_chain() {
        let config = ModelConfig::from_json(&sphere_config(r#"{"kind": "radial", "seed": 3}"#))
            .unwrap();
        let model = config.build().unwrap();
        let explicit = config.with_explicit_flow(model.chain());
        let rebuilt = ModelConfig::from_json(&explicit.to_json()).unwrap().build().unwrap();
        assert_eq!(rebuilt.chain(), model.chain());
    }
}
