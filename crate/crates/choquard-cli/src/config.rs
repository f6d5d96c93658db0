//! Flat sectioned key-value experiment configuration: `[section]` headers,
//! `key = value` lines, `#` comments. Unknown keys are rejected with the
//! offending line number, and `emit` followed by `parse` round-trips.

use anyhow::{anyhow, bail, Result};
use choquard::grid::{DomainMask, Grid};
use choquard::potential::Potential;
use choquard::symmetry::{GroupElement, SymmetryGroup};
use std::fmt::Write as _;
use std::path::Path;

#[derive(Clone, Debug, PartialEq)]
pub enum PotentialSpec {
    Zero,
    ExpWell { c0: f64, lambda: f64, r0: f64 },
    ExpBump { c0: f64, kappa: f64 },
    File(String),
}

#[derive(Clone, Debug, PartialEq)]
pub enum SymmetrySpec {
    Trivial,
    Antipodal,
    Reflection { k: usize },
    Cyclic { m: usize, n_pairs: usize },
    Example3 { m: usize, n_pairs: usize },
    Generators(Vec<(i8, Vec<f64>)>),
}

#[derive(Clone, Debug, PartialEq)]
pub enum ObstacleSpec {
    None,
    Ball { r0: f64 },
    Box { a: f64 },
}

/// Fully resolved experiment configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    // [problem]
    pub n_dim: usize,
    pub alpha: f64,
    pub p: f64,
    pub half_width: f64,
    pub points: usize,
    // [potential]
    pub potential: PotentialSpec,
    // [symmetry]
    pub symmetry: SymmetrySpec,
    pub phi_trivial: bool,
    // [domain]
    pub obstacle: ObstacleSpec,
    // [run]
    pub seed: u64,
    pub tol: f64,
    pub max_iter: usize,
    pub z: Vec<f64>,
    pub r_scale: f64,
    pub r_values: Vec<f64>,
    pub s_values: Vec<f64>,
    pub window: (f64, f64),
    pub lambda: f64,
    pub seed_width: f64,
    pub cascade: bool,
    pub suite: String,
    pub trials: usize,
    pub omega_file: Option<String>,
    pub sweep_target: String,
    /// initial iterate for `solve`: auto | theta | sigma | gaussian
    pub init: String,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            n_dim: 3,
            alpha: 1.0,
            p: 2.0,
            half_width: 16.0,
            points: 64,
            potential: PotentialSpec::Zero,
            symmetry: SymmetrySpec::Trivial,
            phi_trivial: false,
            obstacle: ObstacleSpec::None,
            seed: 42,
            tol: 1e-7,
            max_iter: 20_000,
            z: vec![1.0, 0.0, 0.0],
            r_scale: 6.0,
            r_values: vec![4.0, 6.0, 8.0],
            s_values: vec![4.0, 6.0, 8.0],
            window: (6.0, 12.0),
            lambda: 1.0,
            seed_width: 2.0,
            cascade: true,
            suite: "lemmas".into(),
            trials: 10_000,
            omega_file: None,
            sweep_target: "theta".into(),
            init: "auto".into(),
        }
    }
}

fn parse_list(v: &str) -> Result<Vec<f64>> {
    v.split(',')
        .map(|s| s.trim().parse::<f64>().map_err(|e| anyhow!("{e}")))
        .collect()
}

fn fmt_list(xs: &[f64]) -> String {
    xs.iter()
        .map(|x| format!("{x}"))
        .collect::<Vec<_>>()
        .join(",")
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<ExperimentConfig> {
        let mut cfg = ExperimentConfig::default();
        let mut section = String::new();
        let mut gens: Vec<(i8, Vec<f64>)> = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let lineno = lineno + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if line.starts_with('[') {
                if !line.ends_with(']') {
                    bail!("line {lineno}: malformed section header '{line}'");
                }
                section = line[1..line.len() - 1].trim().to_string();
                match section.as_str() {
                    "problem" | "potential" | "symmetry" | "domain" | "run" => continue,
                    other => bail!("line {lineno}: unknown section [{other}]"),
                }
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("line {lineno}: expected 'key = value', got '{line}'"))?;
            let key = key.trim();
            let value = value.trim();
            let err = |what: &str| anyhow!("line {lineno}: bad value for '{key}': {what}");
            match (section.as_str(), key) {
                ("problem", "n") => cfg.n_dim = value.parse().map_err(|e| err(&format!("{e}")))?,
                ("problem", "alpha") => cfg.alpha = value.parse().map_err(|e| err(&format!("{e}")))?,
                ("problem", "p") => cfg.p = value.parse().map_err(|e| err(&format!("{e}")))?,
                ("problem", "l") => cfg.half_width = value.parse().map_err(|e| err(&format!("{e}")))?,
                ("problem", "m") => cfg.points = value.parse().map_err(|e| err(&format!("{e}")))?,
                ("potential", "potential") => {
                    let parts: Vec<&str> = value.split_whitespace().collect();
                    cfg.potential = match parts.as_slice() {
                        ["zero"] => PotentialSpec::Zero,
                        ["exp_well", c0, lam, r0] => PotentialSpec::ExpWell {
                            c0: c0.parse().map_err(|e| err(&format!("{e}")))?,
                            lambda: lam.parse().map_err(|e| err(&format!("{e}")))?,
                            r0: r0.parse().map_err(|e| err(&format!("{e}")))?,
                        },
                        ["exp_bump", c0, kappa] => PotentialSpec::ExpBump {
                            c0: c0.parse().map_err(|e| err(&format!("{e}")))?,
                            kappa: kappa.parse().map_err(|e| err(&format!("{e}")))?,
                        },
                        ["file", path] => PotentialSpec::File(path.to_string()),
                        _ => bail!(
                            "line {lineno}: potential must be 'zero', 'exp_well c0 lambda r0', \
                             'exp_bump c0 kappa' or 'file <path>'"
                        ),
                    };
                }
                ("symmetry", "preset") => {
                    let parts: Vec<&str> = value.split_whitespace().collect();
                    cfg.symmetry = match parts.as_slice() {
                        ["trivial"] => SymmetrySpec::Trivial,
                        ["antipodal"] => SymmetrySpec::Antipodal,
                        ["reflection", k] => SymmetrySpec::Reflection {
                            k: k.parse().map_err(|e| err(&format!("{e}")))?,
                        },
                        ["cyclic", m, n] => SymmetrySpec::Cyclic {
                            m: m.parse().map_err(|e| err(&format!("{e}")))?,
                            n_pairs: n.parse().map_err(|e| err(&format!("{e}")))?,
                        },
                        ["example3", m, n] => SymmetrySpec::Example3 {
                            m: m.parse().map_err(|e| err(&format!("{e}")))?,
                            n_pairs: n.parse().map_err(|e| err(&format!("{e}")))?,
                        },
                        _ => bail!(
                            "line {lineno}: preset must be 'trivial', 'antipodal', \
                             'reflection k', 'cyclic m n' or 'example3 m n'"
                        ),
                    };
                }
                ("symmetry", "phi") => {
                    cfg.phi_trivial = match value {
                        "trivial" => true,
                        "epi" => false,
                        _ => bail!("line {lineno}: phi must be 'epi' or 'trivial'"),
                    };
                }
                ("symmetry", k) if k.starts_with("gen") => {
                    let (sign, entries) = value
                        .split_once(':')
                        .ok_or_else(|| err("expected 'sign : entries'"))?;
                    let sign: i8 = sign.trim().parse().map_err(|e| err(&format!("{e}")))?;
                    let entries: Vec<f64> = entries
                        .split_whitespace()
                        .map(|s| s.parse::<f64>().map_err(|e| anyhow!("{e}")))
                        .collect::<Result<_>>()
                        .map_err(|e| err(&format!("{e}")))?;
                    gens.push((sign, entries));
                }
                ("domain", "obstacle") => {
                    let parts: Vec<&str> = value.split_whitespace().collect();
                    cfg.obstacle = match parts.as_slice() {
                        ["none"] => ObstacleSpec::None,
                        ["ball", r] => ObstacleSpec::Ball {
                            r0: r.parse().map_err(|e| err(&format!("{e}")))?,
                        },
                        ["box", a] => ObstacleSpec::Box {
                            a: a.parse().map_err(|e| err(&format!("{e}")))?,
                        },
                        _ => bail!("line {lineno}: obstacle must be 'none', 'ball r0' or 'box a'"),
                    };
                }
                ("run", "seed") => cfg.seed = value.parse().map_err(|e| err(&format!("{e}")))?,
                ("run", "tol") => cfg.tol = value.parse().map_err(|e| err(&format!("{e}")))?,
                ("run", "max_iter") => cfg.max_iter = value.parse().map_err(|e| err(&format!("{e}")))?,
                ("run", "z") => cfg.z = parse_list(value).map_err(|e| err(&format!("{e}")))?,
                ("run", "r") => cfg.r_scale = value.parse().map_err(|e| err(&format!("{e}")))?,
                ("run", "r_values") => {
                    cfg.r_values = parse_list(value).map_err(|e| err(&format!("{e}")))?
                }
                ("run", "s_values") => {
                    cfg.s_values = parse_list(value).map_err(|e| err(&format!("{e}")))?
                }
                ("run", "window") => {
                    let w = parse_list(value).map_err(|e| err(&format!("{e}")))?;
                    if w.len() != 2 {
                        bail!("line {lineno}: window needs exactly two values");
                    }
                    cfg.window = (w[0], w[1]);
                }
                ("run", "lambda") => cfg.lambda = value.parse().map_err(|e| err(&format!("{e}")))?,
                ("run", "seed_width") => {
                    cfg.seed_width = value.parse().map_err(|e| err(&format!("{e}")))?
                }
                ("run", "cascade") => {
                    cfg.cascade = value.parse().map_err(|e| err(&format!("{e}")))?
                }
                ("run", "suite") => cfg.suite = value.to_string(),
                ("run", "trials") => cfg.trials = value.parse().map_err(|e| err(&format!("{e}")))?,
                ("run", "omega") => cfg.omega_file = Some(value.to_string()),
                ("run", "sweep_target") => cfg.sweep_target = value.to_string(),
                ("run", "init") => cfg.init = value.to_string(),
                ("", k) => bail!("line {lineno}: key '{k}' appears before any section header"),
                (s, k) => bail!("line {lineno}: unknown key '{k}' in section [{s}]"),
            }
        }
        if !gens.is_empty() {
            cfg.symmetry = SymmetrySpec::Generators(gens);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n_dim as f64;
        if !(self.alpha > 0.0 && self.alpha < n) {
            bail!("alpha = {} outside (0, N = {})", self.alpha, self.n_dim);
        }
        let upper = if self.n_dim > 2 {
            (2.0 * n - self.alpha) / (n - 2.0)
        } else {
            f64::INFINITY
        };
        if !(self.p >= 2.0 && self.p < upper) {
            bail!("p = {} outside [2, {upper})", self.p);
        }
        if self.z.len() != self.n_dim {
            bail!("z has {} components, problem dimension is {}", self.z.len(), self.n_dim);
        }
        Grid::new(self.n_dim, self.points, self.half_width).map_err(|e| anyhow!("{e}"))?;
        Ok(())
    }

    /// Canonical text form; `parse(emit(c)) == c`.
    pub fn emit(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "[problem]");
        let _ = writeln!(s, "n = {}", self.n_dim);
        let _ = writeln!(s, "alpha = {}", self.alpha);
        let _ = writeln!(s, "p = {}", self.p);
        let _ = writeln!(s, "l = {}", self.half_width);
        let _ = writeln!(s, "m = {}", self.points);
        let _ = writeln!(s, "\n[potential]");
        match &self.potential {
            PotentialSpec::Zero => {
                let _ = writeln!(s, "potential = zero");
            }
            PotentialSpec::ExpWell { c0, lambda, r0 } => {
                let _ = writeln!(s, "potential = exp_well {c0} {lambda} {r0}");
            }
            PotentialSpec::ExpBump { c0, kappa } => {
                let _ = writeln!(s, "potential = exp_bump {c0} {kappa}");
            }
            PotentialSpec::File(path) => {
                let _ = writeln!(s, "potential = file {path}");
            }
        }
        let _ = writeln!(s, "\n[symmetry]");
        match &self.symmetry {
            SymmetrySpec::Trivial => {
                let _ = writeln!(s, "preset = trivial");
            }
            SymmetrySpec::Antipodal => {
                let _ = writeln!(s, "preset = antipodal");
            }
            SymmetrySpec::Reflection { k } => {
                let _ = writeln!(s, "preset = reflection {k}");
            }
            SymmetrySpec::Cyclic { m, n_pairs } => {
                let _ = writeln!(s, "preset = cyclic {m} {n_pairs}");
            }
            SymmetrySpec::Example3 { m, n_pairs } => {
                let _ = writeln!(s, "preset = example3 {m} {n_pairs}");
            }
            SymmetrySpec::Generators(gens) => {
                for (i, (sign, entries)) in gens.iter().enumerate() {
                    let ent = entries
                        .iter()
                        .map(|e| format!("{e}"))
                        .collect::<Vec<_>>()
                        .join(" ");
                    let _ = writeln!(s, "gen{} = {} : {}", i + 1, sign, ent);
                }
            }
        }
        let _ = writeln!(s, "phi = {}", if self.phi_trivial { "trivial" } else { "epi" });
        let _ = writeln!(s, "\n[domain]");
        match &self.obstacle {
            ObstacleSpec::None => {
                let _ = writeln!(s, "obstacle = none");
            }
            ObstacleSpec::Ball { r0 } => {
                let _ = writeln!(s, "obstacle = ball {r0}");
            }
            ObstacleSpec::Box { a } => {
                let _ = writeln!(s, "obstacle = box {a}");
            }
        }
        let _ = writeln!(s, "\n[run]");
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "tol = {}", self.tol);
        let _ = writeln!(s, "max_iter = {}", self.max_iter);
        let _ = writeln!(s, "z = {}", fmt_list(&self.z));
        let _ = writeln!(s, "r = {}", self.r_scale);
        let _ = writeln!(s, "r_values = {}", fmt_list(&self.r_values));
        let _ = writeln!(s, "s_values = {}", fmt_list(&self.s_values));
        let _ = writeln!(s, "window = {},{}", self.window.0, self.window.1);
        let _ = writeln!(s, "lambda = {}", self.lambda);
        let _ = writeln!(s, "seed_width = {}", self.seed_width);
        let _ = writeln!(s, "cascade = {}", self.cascade);
        let _ = writeln!(s, "suite = {}", self.suite);
        let _ = writeln!(s, "trials = {}", self.trials);
        if let Some(f) = &self.omega_file {
            let _ = writeln!(s, "omega = {f}");
        }
        let _ = writeln!(s, "sweep_target = {}", self.sweep_target);
        let _ = writeln!(s, "init = {}", self.init);
        s
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.n_dim, self.points, self.half_width).map_err(|e| anyhow!("{e}"))
    }

    pub fn build_potential(&self, base_dir: &Path) -> Result<Potential> {
        Ok(match &self.potential {
            PotentialSpec::Zero => Potential::Zero,
            PotentialSpec::ExpWell { c0, lambda, r0 } => Potential::ExpWell {
                c0: *c0,
                lambda: *lambda,
                r0: *r0,
            },
            PotentialSpec::ExpBump { c0, kappa } => Potential::ExpBump {
                c0: *c0,
                kappa: *kappa,
            },
            PotentialSpec::File(path) => {
                let full = base_dir.join(path);
                let field = choquard::io::read_chqf(&full)?;
                Potential::Sampled(field)
            }
        })
    }

    pub fn build_group(&self) -> Result<SymmetryGroup> {
        let n = self.n_dim;
        let sign: i8 = if self.phi_trivial { 1 } else { -1 };
        Ok(match &self.symmetry {
            SymmetrySpec::Trivial => SymmetryGroup::trivial(n),
            SymmetrySpec::Antipodal => SymmetryGroup::antipodal(n, sign)?,
            SymmetrySpec::Reflection { k } => SymmetryGroup::reflection(n, *k, sign)?,
            SymmetrySpec::Cyclic { m, n_pairs } => {
                let g = SymmetryGroup::cyclic(*m, *n_pairs)?;
                if self.phi_trivial {
                    bail!("the cyclic preset carries phi(rho) = -1; use its kernel instead");
                }
                g
            }
            SymmetrySpec::Example3 { m, n_pairs } => {
                let g = SymmetryGroup::example3(*m, *n_pairs)?;
                if self.phi_trivial {
                    bail!("the example3 preset fixes its phi signs");
                }
                g
            }
            SymmetrySpec::Generators(gens) => {
                let elems = gens
                    .iter()
                    .map(|(s, entries)| GroupElement::new(n, entries, *s).map_err(|e| anyhow!("{e}")))
                    .collect::<Result<Vec<_>>>()?;
                SymmetryGroup::from_generators(n, elems)?
            }
        })
    }

    pub fn build_mask(&self, grid: Grid) -> Result<DomainMask> {
        Ok(match &self.obstacle {
            ObstacleSpec::None => DomainMask::whole(grid),
            ObstacleSpec::Ball { r0 } => DomainMask::ball_complement(grid, *r0)?,
            ObstacleSpec::Box { a } => DomainMask::box_complement(grid, *a)?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_round_trips() {
        let c = ExperimentConfig::default();
        let text = c.emit();
        let back = ExperimentConfig::parse(&text).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.emit(), text);
    }

    #[test]
    fn full_round_trip_with_every_section() {
        let text = "\
[problem]
n = 4
alpha = 1
p = 2
l = 16
m = 32

[potential]
potential = exp_bump 0.1 1.6

[symmetry]
preset = example3 3 1
phi = epi

[domain]
obstacle = ball 1

[run]
seed = 7
z = 1,0,0,0
r = 6
";
        let c = ExperimentConfig::parse(text).unwrap();
        assert_eq!(c.n_dim, 4);
        assert!(matches!(c.symmetry, SymmetrySpec::Example3 { m: 3, n_pairs: 1 }));
        let back = ExperimentConfig::parse(&c.emit()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn unknown_key_names_the_line() {
        let text = "[problem]\nn = 3\nbogus = 1\n";
        let err = ExperimentConfig::parse(text).unwrap_err().to_string();
        assert!(err.contains("line 3"), "{err}");
        assert!(err.contains("unknown key 'bogus'"), "{err}");
    }

    #[test]
    fn unknown_section_rejected() {
        let text = "[nonsense]\nx = 1\n";
        let err = ExperimentConfig::parse(text).unwrap_err().to_string();
        assert!(err.contains("unknown section"), "{err}");
    }

    #[test]
    fn cross_field_constraints_checked() {
        let mut c = ExperimentConfig::default();
        c.alpha = 5.0;
        assert!(c.validate().is_err());
        let mut c = ExperimentConfig::default();
        c.z = vec![1.0, 0.0];
        assert!(c.validate().is_err());
    }

    #[test]
    fn generator_syntax() {
        let text = "\
[problem]
n = 2
alpha = 1
p = 2
l = 8
m = 16

[symmetry]
gen1 = -1 : -1 0 0 -1

[run]
z = 1,0
";
        let c = ExperimentConfig::parse(text).unwrap();
        let g = c.build_group().unwrap();
        assert_eq!(g.order(), 2);
        assert!(g.phi_is_epimorphism());
    }
}
