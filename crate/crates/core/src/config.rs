// Copyright 2026 EDP Contributors
// SPDX-License-Identifier: Apache-2.0

//! Run configuration: a line-oriented `key = value` format with `[section]` headers.
//!
//! ```text
//! [grid]        dim, n, half_length, s
//! [time]        period, nodes, horizon_periods
//! [cutoff]      r1, r_inf
//! [pressure]    law = quadratic | gamma:<γ>
//! [forcing.N]   amplitude, direction, envelope = gaussian:<σ> | rational:<p>,
//!               profile = cos | constant, q, phase
//! [tolerances]  tol_outer, tol_neumann, eps_deg, delta, delta0, perturbation_amplitude,
//!               max_outer, max_monodromy_iters, neumann = preconditioned | plain
//! [output]      seed, dir
//! ```
//!
//! Reals accept a trailing `pi` factor (`16pi`, `16*pi`, `pi`). `#` starts a comment.
//! Without any `[forcing.N]` section a single Gaussian term is used; an empty `[forcing]`
//! section means no forcing at all.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::Write;

use serde::Serialize;

use crate::domain::Domain;
use crate::error::{Error, Result};
use crate::forcing::{Envelope, ForcingSpec, ForcingTerm, Profile};
use crate::grid::Grid;
use crate::norms::MAX_SOBOLEV_ORDER;
use crate::periodic::{NeumannMode, PeriodicSettings};
use crate::pressure::PressureLaw;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolverConfig {
    pub dim: usize,
    pub n: usize,
    pub half_length: f64,
    pub s: usize,
    pub period: f64,
    pub nodes: usize,
    pub horizon_periods: usize,
    pub r1: f64,
    pub r_inf: f64,
    pub pressure: PressureLaw,
    pub forcing: Vec<ForcingTerm>,
    pub tol_outer: f64,
    pub tol_neumann: f64,
    pub eps_deg: f64,
    pub delta: f64,
    pub delta0: f64,
    pub perturbation_amplitude: f64,
    pub max_outer: usize,
    pub max_monodromy_iters: usize,
    pub neumann: NeumannMode,
    pub seed: u64,
    pub output_dir: String,
}

fn default_term(dim: usize) -> ForcingTerm {
    let mut direction = vec![0.0; dim];
    direction[0] = 1.0;
    ForcingTerm {
        amplitude: 1e-3,
        direction,
        envelope: Envelope::Gaussian { sigma: 8.0 },
        profile: Profile::Cosine { q: 1, phase: 0.0 },
    }
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            dim: 3,
            n: 64,
            half_length: 16.0 * PI,
            s: 3,
            period: 1.0,
            nodes: 128,
            horizon_periods: 10,
            r1: 0.1,
            r_inf: 0.4,
            pressure: PressureLaw::Quadratic,
            forcing: vec![default_term(3)],
            tol_outer: 1e-8,
            tol_neumann: 1e-9,
            eps_deg: 1e-4,
            delta: 50.0,
            delta0: 1.0,
            perturbation_amplitude: 1e-3,
            max_outer: 50,
            max_monodromy_iters: 200,
            neumann: NeumannMode::Preconditioned,
            seed: 0,
            output_dir: "out".to_string(),
        }
    }
}

impl SolverConfig {
    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.dim, self.n, self.half_length)
    }

    pub fn domain(&self) -> Result<Domain> {
        Ok(Domain::new(self.grid()?, self.r1, self.r_inf)?.with_eps_deg(self.eps_deg))
    }

    pub fn forcing_spec(&self) -> ForcingSpec {
        ForcingSpec { period: self.period, terms: self.forcing.clone() }
    }

    pub fn settings(&self) -> PeriodicSettings {
        PeriodicSettings {
            steps: self.nodes,
            s: self.s,
            tol_outer: self.tol_outer,
            tol_neumann: self.tol_neumann,
            max_outer: self.max_outer,
            max_monodromy_iters: self.max_monodromy_iters,
            neumann: self.neumann,
            delta: self.delta,
        }
    }

    /// Checks every invariant; the first violation is reported.
    pub fn validate(&self) -> Result<()> {
        self.grid()?;
        if !(self.r1 > 0.0 && self.r1 < self.r_inf && self.r_inf < 0.5) {
            return Err(Error::Validation(format!(
                "r1 < r_inf < 0.5 required (got r1 = {}, r_inf = {})",
                self.r1, self.r_inf
            )));
        }
        let dxi = PI / self.half_length;
        if dxi > self.r_inf / 4.0 {
            return Err(Error::Validation(format!(
                "frequency spacing pi/L = {dxi:.4} must not exceed r_inf/4 = {:.4}",
                self.r_inf / 4.0
            )));
        }
        if !(self.period > 0.0 && self.period.is_finite()) {
            return Err(Error::Validation("period must be positive".into()));
        }
        if self.nodes < 16 {
            return Err(Error::Validation(format!("nodes >= 16 required (got {})", self.nodes)));
        }
        if self.horizon_periods == 0 {
            return Err(Error::Validation("horizon_periods must be at least 1".into()));
        }
        if self.s == 0 || self.s > MAX_SOBOLEV_ORDER {
            return Err(Error::Validation(format!("s must lie in 1..={MAX_SOBOLEV_ORDER} (got {})", self.s)));
        }
        if let PressureLaw::Gamma(g) = self.pressure {
            PressureLaw::new_gamma(g)?;
        }
        self.forcing_spec().validate(self.dim)?;
        for (name, value) in [
            ("tol_outer", self.tol_outer),
            ("tol_neumann", self.tol_neumann),
            ("eps_deg", self.eps_deg),
            ("delta", self.delta),
            ("delta0", self.delta0),
        ] {
            if !(value > 0.0 && value.is_finite()) {
                return Err(Error::Validation(format!("{name} must be positive (got {value})")));
            }
        }
        if !(self.perturbation_amplitude >= 0.0 && self.perturbation_amplitude.is_finite()) {
            return Err(Error::Validation("perturbation_amplitude must be non-negative".into()));
        }
        if self.max_outer == 0 || self.max_monodromy_iters == 0 {
            return Err(Error::Validation("iteration caps must be positive".into()));
        }
        Ok(())
    }

    /// Notices for settings outside the theory's hypotheses.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.dim < 3 {
            out.push(format!("outside theory: dim = {} (the existence theory needs d >= 3)", self.dim));
        }
        let s_min = self.dim / 2 + 2;
        if self.s < s_min {
            out.push(format!("outside theory: s = {} < [d/2] + 2 = {s_min}", self.s));
        }
        out
    }

    /// Canonical text form; `parse_config(&cfg.to_text())` reproduces `cfg`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let f = |x: f64| format!("{x:?}");
        let _ = writeln!(out, "[grid]\ndim = {}\nn = {}\nhalf_length = {}\ns = {}\n", self.dim, self.n, f(self.half_length), self.s);
        let _ = writeln!(
            out,
            "[time]\nperiod = {}\nnodes = {}\nhorizon_periods = {}\n",
            f(self.period),
            self.nodes,
            self.horizon_periods
        );
        let _ = writeln!(out, "[cutoff]\nr1 = {}\nr_inf = {}\n", f(self.r1), f(self.r_inf));
        let law = match self.pressure {
            PressureLaw::Quadratic => "quadratic".to_string(),
            PressureLaw::Gamma(g) => format!("gamma:{}", f(g)),
        };
        let _ = writeln!(out, "[pressure]\nlaw = {law}\n");
        if self.forcing.is_empty() {
            let _ = writeln!(out, "[forcing]\n");
        }
        for (k, term) in self.forcing.iter().enumerate() {
            let dir: Vec<String> = term.direction.iter().map(|&x| f(x)).collect();
            let envelope = match term.envelope {
                Envelope::Gaussian { sigma } => format!("gaussian:{}", f(sigma)),
                Envelope::Rational { power } => format!("rational:{}", f(power)),
            };
            let _ = writeln!(
                out,
                "[forcing.{}]\namplitude = {}\ndirection = {}\nenvelope = {envelope}",
                k + 1,
                f(term.amplitude),
                dir.join(", ")
            );
            match term.profile {
                Profile::Cosine { q, phase } => {
                    let _ = writeln!(out, "profile = cos\nq = {q}\nphase = {}\n", f(phase));
                }
                Profile::Constant => {
                    let _ = writeln!(out, "profile = constant\n");
                }
            }
        }
        let _ = writeln!(
            out,
            "[tolerances]\ntol_outer = {}\ntol_neumann = {}\neps_deg = {}\ndelta = {}\ndelta0 = {}\n\
             perturbation_amplitude = {}\nmax_outer = {}\nmax_monodromy_iters = {}\nneumann = {}\n",
            f(self.tol_outer),
            f(self.tol_neumann),
            f(self.eps_deg),
            f(self.delta),
            f(self.delta0),
            f(self.perturbation_amplitude),
            self.max_outer,
            self.max_monodromy_iters,
            self.neumann.name()
        );
        let _ = write!(out, "[output]\nseed = {}\ndir = {}\n", self.seed, self.output_dir);
        out
    }
}

fn parse_real(text: &str, line: usize) -> Result<f64> {
    let err = || Error::Parse { line, message: format!("expected a real number, got '{text}'") };
    let t = text.trim();
    if let Some(head) = t.strip_suffix("pi") {
        let head = head.trim().trim_end_matches('*').trim();
        let factor = if head.is_empty() { 1.0 } else { head.parse::<f64>().map_err(|_| err())? };
        return Ok(factor * PI);
    }
    t.parse::<f64>().map_err(|_| err())
}

fn parse_int<T: std::str::FromStr>(text: &str, line: usize) -> Result<T> {
    text.trim().parse::<T>().map_err(|_| Error::Parse { line, message: format!("expected an integer, got '{text}'") })
}

#[derive(Default)]
struct RawTerm {
    amplitude: Option<f64>,
    direction: Option<Vec<f64>>,
    envelope: Option<Envelope>,
    profile: Option<String>,
    profile_line: usize,
    q: Option<u32>,
    phase: Option<f64>,
}

/// Parses and validates a configuration; omitted keys take their defaults.
pub fn parse_config(text: &str) -> Result<SolverConfig> {
    let mut cfg = SolverConfig::default();
    let mut terms: BTreeMap<u32, RawTerm> = BTreeMap::new();
    let mut section: Option<String> = None;
    let mut unforced = false;
    let mut seen: std::collections::HashSet<(String, String)> = Default::default();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(name) = content.strip_prefix('[') {
            let name = name
                .strip_suffix(']')
                .ok_or_else(|| Error::Parse { line, message: "unterminated section header".into() })?
                .trim();
            let known = matches!(name, "grid" | "time" | "cutoff" | "pressure" | "tolerances" | "output");
            let is_forcing = name == "forcing" || name.starts_with("forcing.");
            if is_forcing && (unforced || (name == "forcing" && !terms.is_empty())) {
                return Err(Error::Parse { line, message: "[forcing] cannot be combined with [forcing.N]".into() });
            }
            if name == "forcing" {
                unforced = true;
            } else if let Some(idx) = name.strip_prefix("forcing.") {
                let k: u32 = idx
                    .parse()
                    .ok()
                    .filter(|&k| k >= 1)
                    .ok_or_else(|| Error::Parse { line, message: format!("bad forcing index '{idx}'") })?;
                if terms.insert(k, RawTerm::default()).is_some() {
                    return Err(Error::Parse { line, message: format!("duplicate section [forcing.{k}]") });
                }
            } else if !known {
                return Err(Error::Parse { line, message: format!("unknown section [{name}]") });
            }
            section = Some(name.to_string());
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .map(|(k, v)| (k.trim(), v.trim()))
            .ok_or_else(|| Error::Parse { line, message: "expected 'key = value'".into() })?;
        let sec = section.clone().ok_or_else(|| Error::Parse { line, message: "key outside of any section".into() })?;
        if !seen.insert((sec.clone(), key.to_string())) {
            return Err(Error::Parse { line, message: format!("duplicate key '{key}' in [{sec}]") });
        }
        let unknown = || Error::Parse { line, message: format!("unknown key '{key}' in [{sec}]") };
        match sec.as_str() {
            "grid" => match key {
                "dim" => cfg.dim = parse_int(value, line)?,
                "n" => cfg.n = parse_int(value, line)?,
                "half_length" => cfg.half_length = parse_real(value, line)?,
                "s" => cfg.s = parse_int(value, line)?,
                _ => return Err(unknown()),
            },
            "time" => match key {
                "period" => cfg.period = parse_real(value, line)?,
                "nodes" => cfg.nodes = parse_int(value, line)?,
                "horizon_periods" => cfg.horizon_periods = parse_int(value, line)?,
                _ => return Err(unknown()),
            },
            "cutoff" => match key {
                "r1" => cfg.r1 = parse_real(value, line)?,
                "r_inf" => cfg.r_inf = parse_real(value, line)?,
                _ => return Err(unknown()),
            },
            "pressure" => match key {
                "law" => {
                    cfg.pressure = match value.split_once(':') {
                        None if value == "quadratic" => PressureLaw::Quadratic,
                        Some(("gamma", g)) => PressureLaw::Gamma(parse_real(g, line)?),
                        _ => return Err(Error::Parse { line, message: format!("unknown pressure law '{value}'") }),
                    }
                }
                _ => return Err(unknown()),
            },
            "tolerances" => match key {
                "tol_outer" => cfg.tol_outer = parse_real(value, line)?,
                "tol_neumann" => cfg.tol_neumann = parse_real(value, line)?,
                "eps_deg" => cfg.eps_deg = parse_real(value, line)?,
                "delta" => cfg.delta = parse_real(value, line)?,
                "delta0" => cfg.delta0 = parse_real(value, line)?,
                "perturbation_amplitude" => cfg.perturbation_amplitude = parse_real(value, line)?,
                "max_outer" => cfg.max_outer = parse_int(value, line)?,
                "max_monodromy_iters" => cfg.max_monodromy_iters = parse_int(value, line)?,
                "neumann" => {
                    cfg.neumann = match value {
                        "preconditioned" => NeumannMode::Preconditioned,
                        "plain" => NeumannMode::Plain,
                        _ => return Err(Error::Parse { line, message: format!("unknown neumann mode '{value}'") }),
                    }
                }
                _ => return Err(unknown()),
            },
            "output" => match key {
                "seed" => cfg.seed = parse_int(value, line)?,
                "dir" => cfg.output_dir = value.to_string(),
                _ => return Err(unknown()),
            },
            "forcing" => return Err(unknown()),
            forcing => {
                let k: u32 = forcing["forcing.".len()..].parse().expect("validated at the header");
                let term = terms.get_mut(&k).expect("inserted at the header");
                match key {
                    "amplitude" => term.amplitude = Some(parse_real(value, line)?),
                    "direction" => {
                        term.direction =
                            Some(value.split(',').map(|x| parse_real(x, line)).collect::<Result<Vec<f64>>>()?)
                    }
                    "envelope" => {
                        term.envelope = Some(match value.split_once(':') {
                            Some(("gaussian", s)) => Envelope::Gaussian { sigma: parse_real(s, line)? },
                            Some(("rational", p)) => Envelope::Rational { power: parse_real(p, line)? },
                            _ => return Err(Error::Parse { line, message: format!("unknown envelope '{value}'") }),
                        })
                    }
                    "profile" => {
                        if !matches!(value, "cos" | "constant") {
                            return Err(Error::Parse { line, message: format!("unknown profile '{value}'") });
                        }
                        term.profile = Some(value.to_string());
                        term.profile_line = line;
                    }
                    "q" => term.q = Some(parse_int(value, line)?),
                    "phase" => term.phase = Some(parse_real(value, line)?),
                    _ => return Err(unknown()),
                }
            }
        }
    }
    if unforced {
        cfg.forcing = Vec::new();
    } else if !terms.is_empty() {
        let base = default_term(cfg.dim.clamp(1, 3));
        cfg.forcing = Vec::new();
        for raw in terms.into_values() {
            let profile = match raw.profile.as_deref() {
                Some("constant") => {
                    if raw.q.is_some() || raw.phase.is_some() {
                        return Err(Error::Parse { line: raw.profile_line, message: "q and phase need profile = cos".into() });
                    }
                    Profile::Constant
                }
                _ => Profile::Cosine { q: raw.q.unwrap_or(1), phase: raw.phase.unwrap_or(0.0) },
            };
            cfg.forcing.push(ForcingTerm {
                amplitude: raw.amplitude.unwrap_or(base.amplitude),
                direction: raw.direction.unwrap_or_else(|| base.direction.clone()),
                envelope: raw.envelope.unwrap_or(base.envelope),
                profile,
            });
        }
    } else {
        cfg.forcing = vec![default_term(cfg.dim.clamp(1, 3))];
    }
    cfg.validate()?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_text_gives_defaults() {
        let cfg = parse_config("").unwrap();
        assert_eq!(cfg, SolverConfig::default());
        assert_eq!((cfg.dim, cfg.n, cfg.s, cfg.nodes), (3, 64, 3, 128));
        assert_eq!(cfg.half_length, 16.0 * PI);
        assert_eq!((cfg.r1, cfg.r_inf, cfg.period), (0.1, 0.4, 1.0));
    }

    #[test]
    fn cutoff_invariant_is_enforced() {
        let err = parse_config("[cutoff]\nr1 = 0.5\n").unwrap_err();
        assert!(err.to_string().contains("r1 < r_inf < 0.5 required"), "{err}");
    }

    #[test]
    fn round_trip_is_byte_identical() {
        let text = "[grid]\ndim = 2\nn = 32\nhalf_length = 12pi\n[pressure]\nlaw = gamma:1.4\n\
                    [forcing.2]\namplitude = 2e-3\ndirection = 0.6, 0.8\nenvelope = rational:3\nprofile = constant\n\
                    [forcing.1]\nq = 2\nphase = 0.25\n[tolerances]\nneumann = plain\n[output]\nseed = 7\ndir = runs/a\n";
        let cfg = parse_config(text).unwrap();
        assert_eq!(cfg.forcing.len(), 2);
        assert_eq!(cfg.forcing[0].profile, Profile::Cosine { q: 2, phase: 0.25 });
        assert_eq!(cfg.forcing[1].profile, Profile::Constant);
        let once = cfg.to_text();
        let twice = parse_config(&once).unwrap().to_text();
        assert_eq!(once, twice);
        assert_eq!(parse_config(&once).unwrap(), cfg);
        let default_text = SolverConfig::default().to_text();
        assert_eq!(parse_config(&default_text).unwrap().to_text(), default_text);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let cases = [
            ("[grid]\nwidth = 3\n", 2),
            ("\n\n[nowhere]\n", 3),
            ("[time]\nperiod = fast\n", 2),
            ("dim = 3\n", 1),
            ("[grid]\nn = 16\nn = 32\n", 3),
            ("[forcing.1]\nenvelope = box:1\n", 2),
        ];
        for (text, expected) in cases {
            match parse_config(text) {
                Err(Error::Parse { line, .. }) => assert_eq!(line, expected, "{text}"),
                other => panic!("{text}: {other:?}"),
            }
        }
    }

    #[test]
    fn validation_failures() {
        for text in [
            "[grid]\nn = 48\n",
            "[grid]\nhalf_length = 2pi\n",
            "[time]\nnodes = 8\n",
            "[pressure]\nlaw = gamma:4\n",
            "[forcing.1]\ndirection = 1, 0\n",
            "[tolerances]\ntol_outer = 0\n",
        ] {
            assert!(matches!(parse_config(text), Err(Error::Validation(_))), "{text}");
        }
    }

    #[test]
    fn zero_amplitude_means_no_forcing() {
        let cfg = parse_config("[forcing.1]\namplitude = 0\n").unwrap();
        assert!(cfg.forcing_spec().is_zero());
        let unforced = parse_config("[forcing]\n").unwrap();
        assert!(unforced.forcing.is_empty());
        assert_eq!(parse_config(&unforced.to_text()).unwrap(), unforced);
        assert!(parse_config("[forcing]\n[forcing.1]\n").is_err());
        assert!(parse_config("[forcing]\namplitude = 1\n").is_err());
        let low_dim = parse_config("[grid]\ndim = 2\n").unwrap();
        assert_eq!(low_dim.forcing[0].direction, vec![1.0, 0.0]);
        assert!(low_dim.warnings()[0].starts_with("outside theory"));
    }
}
