use crate::analysis::{DescriptorId, Goal, PropertyTarget, PropertyVector};

use super::{GuidanceError, Result};

/// Everything the sampler needs besides the models: blend weights, the phase
/// boundary, the structural constraint, and the property targets.
#[derive(Clone, Debug, PartialEq)]
pub struct GuidanceConfig {
    /// Weight of the unconditional branch in the structure blend.
    pub w_s: f64,
    /// Weight of the unconditional branch in the property blend.
    pub w_p: f64,
    /// Last timestep of Phase I; Phase II covers `t2_boundary..=1`.
    pub t2_boundary: usize,
    pub scaffold: Option<String>,
    pub targets: PropertyVector,
    /// Guidance temperature of the squared-error log-likelihood.
    pub sigma_g: f64,
    /// Margin, in corpus standard deviations, of the moving target used for
    /// directional goals.
    pub kappa: f64,
    /// Record an intermediate decode every this many steps.
    pub trace_decode_every: Option<usize>,
}

impl GuidanceConfig {
    pub fn unconditional(t2_boundary: usize) -> Self {
        Self {
            w_s: 1.0,
            w_p: 1.0,
            t2_boundary,
            scaffold: None,
            targets: Vec::new(),
            sigma_g: 1.0,
            kappa: 2.0,
            trace_decode_every: None,
        }
    }

    /// Defaults mirroring the reference setting: equal blend weights and the
    /// phase boundary at three quarters of the chain.
    pub fn balanced(timesteps: usize) -> Self {
        Self {
            w_s: 0.5,
            w_p: 0.5,
            t2_boundary: timesteps * 3 / 4,
            scaffold: None,
            targets: Vec::new(),
            sigma_g: 1.0,
            kappa: 2.0,
            trace_decode_every: None,
        }
    }

    pub fn validate(&self, timesteps: usize) -> Result<()> {
        for (name, w) in [("ws", self.w_s), ("wp", self.w_p)] {
            if !(0.0..=1.0).contains(&w) {
                return Err(GuidanceError::BadConfig(format!(
                    "{name} = {w} outside [0, 1]"
                )));
            }
        }
        if self.t2_boundary > timesteps {
            return Err(GuidanceError::BadConfig(format!(
                "t2_boundary {} beyond {timesteps} steps",
                self.t2_boundary
            )));
        }
        if self.scaffold.is_some()
            && !self.targets.is_empty()
            && (self.w_s - (1.0 - self.w_p)).abs() > 1e-9
        {
            return Err(GuidanceError::BadConfig(format!(
                "with both modules active, ws must equal 1 - wp (got ws={}, wp={})",
                self.w_s, self.w_p
            )));
        }
        if self.sigma_g <= 0.0 {
            return Err(GuidanceError::BadConfig("sigma_g must be positive".into()));
        }
        Ok(())
    }

    /// Flat `key = value` form; `targets` is a comma-separated list of
    /// `DESCRIPTOR:max|min|value=<v>[:<weight>]` entries.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("ws = {}\n", self.w_s));
        out.push_str(&format!("wp = {}\n", self.w_p));
        out.push_str(&format!("t2_boundary = {}\n", self.t2_boundary));
        if let Some(s) = &self.scaffold {
            out.push_str(&format!("scaffold = {s}\n"));
        }
        if !self.targets.is_empty() {
            let entries: Vec<String> = self.targets.iter().map(target_to_text).collect();
            out.push_str(&format!("targets = {}\n", entries.join(", ")));
        }
        out.push_str(&format!("sigma_g = {}\n", self.sigma_g));
        out.push_str(&format!("kappa = {}\n", self.kappa));
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut cfg = GuidanceConfig::unconditional(0);
        let mut saw_boundary = false;
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(GuidanceError::BadConfig(format!(
                    "expected 'key = value', got '{line}'"
                )));
            };
            let (key, value) = (key.trim(), value.trim());
            match key {
                "ws" => cfg.w_s = parse_num(key, value)?,
                "wp" => cfg.w_p = parse_num(key, value)?,
                "t2_boundary" => {
                    cfg.t2_boundary = value.parse().map_err(|_| {
                        GuidanceError::BadConfig(format!("bad t2_boundary '{value}'"))
                    })?;
                    saw_boundary = true;
                }
                "scaffold" => cfg.scaffold = Some(value.to_string()),
                "targets" => {
                    cfg.targets = value
                        .split(',')
                        .map(|e| parse_target(e.trim()))
                        .collect::<Result<_>>()?;
                }
                "sigma_g" => cfg.sigma_g = parse_num(key, value)?,
                "kappa" => cfg.kappa = parse_num(key, value)?,
                "trace_decode_every" => {
                    cfg.trace_decode_every = Some(value.parse().map_err(|_| {
                        GuidanceError::BadConfig(format!("bad trace_decode_every '{value}'"))
                    })?)
                }
                other => {
                    return Err(GuidanceError::BadConfig(format!("unknown key '{other}'")))
                }
            }
        }
        if !saw_boundary {
            return Err(GuidanceError::BadConfig("missing t2_boundary".into()));
        }
        Ok(cfg)
    }
}

fn parse_num(key: &str, value: &str) -> Result<f64> {
    value
        .parse()
        .map_err(|_| GuidanceError::BadConfig(format!("bad number for {key}: '{value}'")))
}

fn target_to_text(t: &PropertyTarget) -> String {
    let goal = match t.goal {
        Goal::Maximize => "max".to_string(),
        Goal::Minimize => "min".to_string(),
        Goal::Approach(v) => format!("value={v}"),
    };
    format!("{}:{}:{}", t.descriptor, goal, t.weight)
}

/// Parse a comma-separated target list
/// (`DESCRIPTOR:max|min|value=<v>[:<weight>]`).
pub fn parse_target_list(text: &str) -> Result<PropertyVector> {
    text.split(',')
        .map(|e| parse_target(e.trim()))
        .collect()
}

pub(crate) fn parse_target(entry: &str) -> Result<PropertyTarget> {
    let fields: Vec<&str> = entry.split(':').collect();
    if fields.len() < 2 || fields.len() > 3 {
        return Err(GuidanceError::BadConfig(format!(
            "target '{entry}' is not DESCRIPTOR:max|min|value=<v>[:<weight>]"
        )));
    }
    let descriptor: DescriptorId = fields[0]
        .parse()
        .map_err(|e| GuidanceError::BadConfig(format!("{e}")))?;
    let goal = match fields[1] {
        "max" => Goal::Maximize,
        "min" => Goal::Minimize,
        v if v.starts_with("value=") => {
            let raw = &v["value=".len()..];
            Goal::Approach(raw.parse().map_err(|_| {
                GuidanceError::BadConfig(format!("bad target value '{raw}'"))
            })?)
        }
        other => {
            return Err(GuidanceError::BadConfig(format!(
                "bad goal '{other}' in target '{entry}'"
            )))
        }
    };
    let weight = match fields.get(2) {
        Some(w) => w
            .parse()
            .map_err(|_| GuidanceError::BadConfig(format!("bad weight '{w}'")))?,
        None => 1.0,
    };
    Ok(PropertyTarget {
        descriptor,
        goal,
        weight,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_roundtrip() {
        let mut cfg = GuidanceConfig::balanced(200);
        cfg.scaffold = Some("c1ccncc1".to_string());
        cfg.targets = vec![
            PropertyTarget::maximize(DescriptorId::Hbd),
            PropertyTarget {
                descriptor: DescriptorId::CrippenLogP,
                goal: Goal::Approach(2.5),
                weight: 0.8,
            },
        ];
        let text = cfg.to_text();
        let parsed = GuidanceConfig::from_text(&text).unwrap();
        assert_eq!(parsed, cfg);
    }

    #[test]
    fn weight_consistency_enforced_when_both_modules_active() {
        let mut cfg = GuidanceConfig::balanced(200);
        cfg.scaffold = Some("c1ccccc1".to_string());
        cfg.targets = vec![PropertyTarget::maximize(DescriptorId::Hbd)];
        cfg.w_s = 0.7;
        cfg.w_p = 0.5;
        assert!(cfg.validate(200).is_err());
        cfg.w_p = 0.3;
        assert!(cfg.validate(200).is_ok());
    }

    #[test]
    fn boundary_must_fit_schedule() {
        let mut cfg = GuidanceConfig::unconditional(250);
        assert!(cfg.validate(200).is_err());
        cfg.t2_boundary = 150;
        assert!(cfg.validate(200).is_ok());
    }
}
