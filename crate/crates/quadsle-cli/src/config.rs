//! Experiment configuration: a TOML file of top-level keys and per-experiment
//! sections. See docs/config.md for the grammar.

use std::path::{Path, PathBuf};

use quadsle::lattice::{build_mask_quad, build_rect_quad, Mask, QuadLattice};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Must match the subcommand when present.
    #[serde(default)]
    pub experiment: Option<String>,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub lattice: Option<LatticeConfig>,
    #[serde(default)]
    pub endpoints: EndpointsSection,
    #[serde(default)]
    pub crossing: CrossingSection,
    #[serde(default)]
    pub hsle: HsleSection,
    #[serde(default)]
    pub pde: PdeSection,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct LatticeConfig {
    #[serde(default)]
    pub rect: Option<[usize; 2]>,
    #[serde(default)]
    pub mask: Option<PathBuf>,
    #[serde(default = "default_delta")]
    pub delta: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct EndpointsSection {
    /// Bins per axis of the 2D χ² grid before merging.
    #[serde(default = "default_bins")]
    pub bins: usize,
    #[serde(default)]
    pub full_tree: bool,
    /// Heatmap resolution per axis.
    #[serde(default = "default_heatmap")]
    pub heatmap: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Default)]
#[serde(deny_unknown_fields)]
pub struct CrossingSection {
    /// Explicit probe cells (i, j).
    #[serde(default)]
    pub probes: Vec<[i32; 2]>,
    /// g×g grid of probes at i = k·N/(g+1), j = l·M/(g+1); rectangles only.
    #[serde(default)]
    pub grid: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct HsleSection {
    #[serde(default = "one")]
    pub x: f64,
    #[serde(default = "two")]
    pub y: f64,
    #[serde(default = "default_t_max")]
    pub t_max: f64,
    #[serde(default = "default_probe")]
    pub probe: [f64; 2],
    #[serde(default = "default_u_min")]
    pub u_min: f64,
    #[serde(default = "default_checkpoints")]
    pub checkpoints: Vec<f64>,
    /// Paths for the martingale check; the top-level `samples` drives the QV estimate.
    #[serde(default = "default_martingale_paths")]
    pub martingale_paths: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct PdeSection {
    /// (a, w, b, c) with a < w < b < c.
    #[serde(default = "default_pde_params")]
    pub params: [f64; 4],
    #[serde(default = "default_pde_points")]
    pub points: Vec<[f64; 2]>,
    #[serde(default = "default_pde_steps")]
    pub steps: Vec<f64>,
    #[serde(default = "default_min_order")]
    pub min_order: f64,
}

fn default_seed() -> u64 {
    1
}
fn default_samples() -> usize {
    1000
}
fn default_dt() -> f64 {
    1e-3
}
fn default_delta() -> f64 {
    1.0
}
fn default_bins() -> usize {
    10
}
fn default_heatmap() -> usize {
    20
}
fn one() -> f64 {
    1.0
}
fn two() -> f64 {
    2.0
}
fn default_t_max() -> f64 {
    50.0
}
fn default_probe() -> [f64; 2] {
    [1.5, 1.0]
}
fn default_u_min() -> f64 {
    1e-3
}
fn default_checkpoints() -> Vec<f64> {
    vec![0.25, 0.5]
}
fn default_martingale_paths() -> usize {
    1000
}
fn default_pde_params() -> [f64; 4] {
    [0.0, 0.5, 1.0, 2.0]
}
fn default_pde_points() -> Vec<[f64; 2]> {
    vec![[0.7, 0.9], [-0.5, 1.5]]
}
fn default_pde_steps() -> Vec<f64> {
    vec![1e-2, 5e-3, 2.5e-3]
}
fn default_min_order() -> f64 {
    1.8
}

impl Default for EndpointsSection {
    fn default() -> Self {
        EndpointsSection { bins: default_bins(), full_tree: false, heatmap: default_heatmap() }
    }
}

impl Default for HsleSection {
    fn default() -> Self {
        HsleSection {
            x: 1.0,
            y: 2.0,
            t_max: default_t_max(),
            probe: default_probe(),
            u_min: default_u_min(),
            checkpoints: default_checkpoints(),
            martingale_paths: default_martingale_paths(),
        }
    }
}

impl Default for PdeSection {
    fn default() -> Self {
        PdeSection {
            params: default_pde_params(),
            points: default_pde_points(),
            steps: default_pde_steps(),
            min_order: default_min_order(),
        }
    }
}

fn bad(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| bad(format!("{}: {e}", path.display())))?;
        let mut cfg: ExperimentConfig = toml::from_str(&text).map_err(|e| bad(format!("{}: {e}", path.display())))?;
        // mask paths are relative to the config file
        if let Some(LatticeConfig { mask: Some(m), .. }) = cfg.lattice.as_mut() {
            if m.is_relative() {
                if let Some(dir) = path.parent() {
                    *m = dir.join(&*m);
                }
            }
        }
        Ok(cfg)
    }

    /// Checks everything `cmd` reads; other sections keep their defaults.
    pub fn validate(&self, cmd: &str) -> Result<(), CliError> {
        if let Some(e) = &self.experiment {
            if e != cmd {
                return Err(bad(format!("config is for experiment {e:?}, not {cmd:?}")));
            }
        }
        let needs_lattice = matches!(cmd, "endpoints" | "crossing" | "driver" | "observable");
        if needs_lattice {
            let l = self.lattice.as_ref().ok_or_else(|| bad("missing [lattice] section"))?;
            match (&l.rect, &l.mask) {
                (Some(_), Some(_)) => return Err(bad("[lattice] takes rect or mask, not both")),
                (None, None) => return Err(bad("[lattice] needs rect = [N, M] or mask = \"path\"")),
                _ => {}
            }
            if !(l.delta > 0.0 && l.delta.is_finite()) {
                return Err(bad(format!("lattice.delta = {} must be positive", l.delta)));
            }
        }
        if matches!(cmd, "endpoints" | "crossing" | "driver" | "hsle") && self.samples < 2 {
            return Err(bad(format!("samples = {} must be at least 2", self.samples)));
        }
        if matches!(cmd, "hsle") && !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(bad(format!("dt = {} must be positive", self.dt)));
        }
        match cmd {
            "endpoints" => {
                // the KS test needs 50 samples
                if self.samples < 50 {
                    return Err(bad(format!("endpoints needs samples >= 50, got {}", self.samples)));
                }
                if self.endpoints.bins < 2 || self.endpoints.heatmap < 2 {
                    return Err(bad("endpoints.bins and endpoints.heatmap must be at least 2"));
                }
            }
            "crossing" => {
                let c = &self.crossing;
                if c.probes.is_empty() && c.grid.is_none() {
                    return Err(bad("[crossing] needs probes or grid"));
                }
                if c.grid == Some(0) {
                    return Err(bad("crossing.grid must be positive"));
                }
            }
            "hsle" => {
                let h = &self.hsle;
                if !(0.0 < h.x && h.x < h.y && h.y.is_finite()) {
                    return Err(bad(format!("hsle needs 0 < x < y, got x = {}, y = {}", h.x, h.y)));
                }
                if !(h.t_max > 0.0) || !(h.probe[1] > 0.0) || !(0.0 < h.u_min && h.u_min < 1.0) {
                    return Err(bad("hsle needs t_max > 0, probe in the upper half-plane and 0 < u_min < 1"));
                }
                if h.checkpoints.is_empty() || h.checkpoints.iter().any(|&t| !(t > 0.0) || t > h.t_max) {
                    return Err(bad("hsle.checkpoints must be non-empty and lie in (0, t_max]"));
                }
                if h.martingale_paths < 2 {
                    return Err(bad("hsle.martingale_paths must be at least 2"));
                }
            }
            "pde" => {
                let p = &self.pde;
                if !p.params.windows(2).all(|w| w[0] < w[1]) || !p.params.iter().all(|v| v.is_finite()) {
                    return Err(bad(format!("pde.params must satisfy a < w < b < c, got {:?}", p.params)));
                }
                if p.points.is_empty() || p.points.iter().any(|z| !(z[1] > 0.0)) {
                    return Err(bad("pde.points must be non-empty and in the upper half-plane"));
                }
                if p.steps.len() < 2 || p.steps.iter().any(|&h| !(h > 0.0)) {
                    return Err(bad("pde.steps needs at least two positive step sizes"));
                }
            }
            _ => {}
        }
        Ok(())
    }

    pub fn build_lattice(&self) -> Result<QuadLattice, CliError> {
        let l = self.lattice.as_ref().ok_or_else(|| bad("missing [lattice] section"))?;
        let q = match (&l.rect, &l.mask) {
            (Some([n, m]), None) => build_rect_quad(*n, *m, l.delta)?,
            (None, Some(path)) => {
                let text = std::fs::read_to_string(path).map_err(|e| bad(format!("{}: {e}", path.display())))?;
                let (mask, marked) = Mask::parse(&text)?;
                build_mask_quad(&mask, marked, l.delta)?
            }
            _ => return Err(bad("[lattice] needs exactly one of rect and mask")),
        };
        Ok(q)
    }

    /// Probe cells for the crossing experiment.
    pub fn probe_cells(&self, q: &QuadLattice) -> Result<Vec<(i32, i32)>, CliError> {
        let mut out: Vec<(i32, i32)> = self.crossing.probes.iter().map(|p| (p[0], p[1])).collect();
        if let Some(g) = self.crossing.grid {
            let (n, m) = q.rect.ok_or_else(|| bad("crossing.grid needs a rectangle lattice"))?;
            for l in 1..=g {
                for k in 1..=g {
                    out.push(((k * n / (g + 1)) as i32, (l * m / (g + 1)) as i32));
                }
            }
        }
        for &(i, j) in &out {
            if q.cell_at(i, j).is_none() {
                return Err(bad(format!("probe ({i}, {j}) is not a cell of the lattice")));
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> Result<ExperimentConfig, toml::de::Error> {
        toml::from_str(s)
    }

    #[test]
    fn defaults_fill_missing_sections() {
        let c = parse("seed = 3\n[lattice]\nrect = [8, 8]\n").unwrap();
        assert_eq!(c.seed, 3);
        assert_eq!(c.samples, 1000);
        assert_eq!(c.endpoints.bins, 10);
        assert_eq!(c.pde.steps, vec![1e-2, 5e-3, 2.5e-3]);
        c.validate("endpoints").unwrap();
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(parse("sede = 3\n").is_err());
        assert!(parse("[lattice]\nrect = [8, 8]\nwidth = 3\n").is_err());
    }

    #[test]
    fn lattice_must_be_unambiguous() {
        let both = parse("[lattice]\nrect = [8, 8]\nmask = \"m.txt\"\n").unwrap();
        assert!(matches!(both.validate("endpoints"), Err(CliError::Config(_))));
        let none = parse("samples = 10\n").unwrap();
        assert!(none.validate("crossing").is_err());
        assert!(none.validate("pde").is_ok());
    }

    #[test]
    fn experiment_name_must_match() {
        let c = parse("experiment = \"pde\"\n").unwrap();
        assert!(c.validate("pde").is_ok());
        assert!(c.validate("hsle").is_err());
    }

    #[test]
    fn hsle_order_is_checked() {
        let c = parse("[hsle]\nx = 2.0\ny = 1.0\n").unwrap();
        assert!(c.validate("hsle").is_err());
    }

    #[test]
    fn probe_grid_is_interior() {
        let c = parse("[lattice]\nrect = [64, 64]\n[crossing]\ngrid = 3\n").unwrap();
        let q = c.build_lattice().unwrap();
        let cells = c.probe_cells(&q).unwrap();
        assert_eq!(cells.len(), 9);
        assert_eq!(cells[0], (16, 16));
        assert_eq!(cells[8], (48, 48));
    }

    #[test]
    fn round_trips_through_toml() {
        let c = parse("seed = 9\n[lattice]\nrect = [4, 6]\n[crossing]\nprobes = [[1, 2]]\n").unwrap();
        let back: ExperimentConfig = toml::from_str(&toml::to_string(&c).unwrap()).unwrap();
        assert_eq!(c, back);
    }
}
