//! Reweighted entropy approximations and their derivatives.
//!
//! Pairwise binary models use the regrouped form
//! `H_ρ(μ) = Σ_n (1 - Σ_{e∋n} ρ_e) H(μ_n) + Σ_e ρ_e H(μ_e)`, which agrees with the
//! node-entropy-minus-mutual-information form on the local polytope.
//!
//! Matchings use, per edge probability `τ_e` and vertex slack `s_i = 1 - Σ_{e∋i} τ_e`,
//! `H'_ρ(τ) = Σ_e [(ρ_i + ρ_j - 1)(1-τ_e)log(1-τ_e) - τ_e log τ_e] - Σ_i ρ_i s_i log s_i`.
//! For perfect matchings every slack is structurally zero and the slack terms are dropped,
//! and `1 - τ_e` is evaluated as the mass of the other edges at the first endpoint of `e`.
//! Clamped edges contribute nothing.
//!
//! `0 log 0 = 0` throughout.

use crate::error::{Error, Result};
use crate::model::{ModelKind, Reweighting, Topology};

/// Slack values down to this much below zero are treated as rounding noise.
const SLACK_TOL: f64 = 1e-12;

fn xlogx(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * x.ln()
    }
}

fn check_prob(x: f64, what: &str) -> Result<()> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::domain(format!("{what} {x} outside [0, 1]")));
    }
    Ok(())
}

/// Value, first and second derivative of the entropy along a segment.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Directional {
    pub value: f64,
    pub slope: f64,
    pub curvature: f64,
}

/// Matching graph view used by the matching entropy.
#[derive(Clone, Debug)]
pub struct MatchingGraph<'a> {
    pub num_nodes: usize,
    pub edges: &'a [(usize, usize)],
    /// Edges excluded from the entropy (clamped); empty means all free.
    pub clamped: Vec<bool>,
    /// Perfect matchings drop the vertex slack terms.
    pub perfect: bool,
}

impl<'a> MatchingGraph<'a> {
    pub fn from_topology(topology: &'a Topology) -> Self {
        MatchingGraph {
            num_nodes: topology.num_nodes(),
            edges: topology.edges(),
            clamped: topology
                .edge_states()
                .iter()
                .map(|s| s.clamped_value().is_some())
                .collect(),
            perfect: true,
        }
    }

    /// Graph whose pseudomarginals range over `T'` (degree at most one).
    pub fn imperfect(num_nodes: usize, edges: &'a [(usize, usize)]) -> Self {
        MatchingGraph {
            num_nodes,
            edges,
            clamped: vec![false; edges.len()],
            perfect: false,
        }
    }

    fn is_clamped(&self, e: usize) -> bool {
        self.clamped.get(e).copied().unwrap_or(false)
    }

    fn check(&self, tau: &[f64], rho: &[f64]) -> Result<()> {
        if tau.len() != self.edges.len() {
            return Err(Error::structure(format!(
                "{} edge marginals for {} edges",
                tau.len(),
                self.edges.len()
            )));
        }
        if rho.len() != self.num_nodes {
            return Err(Error::structure(format!(
                "{} reweighting entries for {} vertices",
                rho.len(),
                self.num_nodes
            )));
        }
        Ok(())
    }

    fn slacks(&self, tau: &[f64]) -> Result<Vec<f64>> {
        let mut s = vec![1.0; self.num_nodes];
        for (&(i, j), &t) in self.edges.iter().zip(tau) {
            s[i] -= t;
            s[j] -= t;
        }
        for (i, x) in s.iter_mut().enumerate() {
            if *x < -SLACK_TOL {
                return Err(Error::domain(format!(
                    "vertex {i} has total edge mass {}",
                    1.0 - *x
                )));
            }
            *x = x.max(0.0);
        }
        Ok(s)
    }

    fn coefficient(&self, rho: &[f64], e: usize) -> f64 {
        let (i, j) = self.edges[e];
        rho[i] + rho[j] - 1.0
    }

    /// `1 - x_e` for every edge. On perfect matchings this is evaluated as the mass of
    /// the other edges at the first endpoint, which is exact on the polytope and keeps
    /// full relative precision when `x_e` is close to 1.
    fn complements(&self, x: &[f64]) -> Vec<f64> {
        if !self.perfect {
            return x.iter().map(|v| 1.0 - v).collect();
        }
        self.other_mass(x)
    }

    /// Derivative of [`Self::complements`] along `d`.
    fn complement_dir(&self, d: &[f64]) -> Vec<f64> {
        if !self.perfect {
            return d.iter().map(|v| -v).collect();
        }
        self.other_mass(d)
    }

    fn anchored(&self) -> Vec<Vec<usize>> {
        let mut incident = vec![Vec::new(); self.num_nodes];
        for (e, &(i, j)) in self.edges.iter().enumerate() {
            incident[i].push(e);
            incident[j].push(e);
        }
        incident
    }

    fn other_mass(&self, x: &[f64]) -> Vec<f64> {
        let incident = self.anchored();
        let mut out = vec![0.0; x.len()];
        for (e, &(a, _)) in self.edges.iter().enumerate() {
            out[e] = incident[a].iter().filter(|&&f| f != e).map(|&f| x[f]).sum();
        }
        out
    }

    pub fn entropy(&self, tau: &[f64], rho: &[f64]) -> Result<f64> {
        self.check(tau, rho)?;
        let comp = self.complements(tau);
        let mut h = 0.0;
        for (e, &t) in tau.iter().enumerate() {
            check_prob(t, "edge marginal")?;
            if self.is_clamped(e) {
                continue;
            }
            h += self.coefficient(rho, e) * xlogx(comp[e].max(0.0)) - xlogx(t);
        }
        if !self.perfect {
            for (i, s) in self.slacks(tau)?.into_iter().enumerate() {
                h -= rho[i] * xlogx(s);
            }
        }
        Ok(h)
    }

    pub fn gradient(&self, tau: &[f64], rho: &[f64]) -> Result<Vec<f64>> {
        self.check(tau, rho)?;
        let slack_term = if self.perfect {
            None
        } else {
            let s = self.slacks(tau)?;
            Some(
                s.iter()
                    .zip(rho)
                    .enumerate()
                    .map(|(i, (&s, &r))| {
                        if r == 0.0 {
                            Ok(0.0)
                        } else if s <= 0.0 {
                            Err(Error::GradientUndefined(format!(
                                "vertex {i} has zero slack"
                            )))
                        } else {
                            Ok(r * (1.0 + s.ln()))
                        }
                    })
                    .collect::<Result<Vec<f64>>>()?,
            )
        };
        let comp = self.complements(tau);
        // c_e (1 + log C_e) for every free edge with a nonzero coefficient
        let mut comp_slope = vec![0.0; tau.len()];
        for (e, &t) in tau.iter().enumerate() {
            if self.is_clamped(e) {
                continue;
            }
            if !(t > 0.0) {
                return Err(Error::GradientUndefined(format!(
                    "edge {e} marginal {t} is on the boundary"
                )));
            }
            let c = self.coefficient(rho, e);
            if c != 0.0 {
                if !(comp[e] > 0.0) {
                    return Err(Error::GradientUndefined(format!(
                        "edge {e} marginal {t} is on the boundary"
                    )));
                }
                comp_slope[e] = c * (1.0 + comp[e].ln());
            }
        }
        let mut g = vec![0.0; tau.len()];
        if self.perfect {
            // C_e depends on every other edge at the first endpoint of e
            let mut at_vertex = vec![0.0; self.num_nodes];
            for (e, &(a, _)) in self.edges.iter().enumerate() {
                at_vertex[a] += comp_slope[e];
            }
            for (f, &(u, v)) in self.edges.iter().enumerate() {
                if self.is_clamped(f) {
                    continue;
                }
                let mut d = at_vertex[u] + at_vertex[v] - comp_slope[f];
                d -= 1.0 + tau[f].ln();
                g[f] = d;
            }
        } else {
            for (e, &t) in tau.iter().enumerate() {
                if self.is_clamped(e) {
                    continue;
                }
                let mut d = -comp_slope[e] - (1.0 + t.ln());
                if let Some(st) = &slack_term {
                    let (i, j) = self.edges[e];
                    d += st[i] + st[j];
                }
                g[e] = d;
            }
        }
        Ok(g)
    }

    /// Entropy at `tau + eta * dir` with its first two derivatives in `eta`.
    pub fn along(&self, tau: &[f64], dir: &[f64], eta: f64, rho: &[f64]) -> Result<Directional> {
        self.check(tau, rho)?;
        let mut out = Directional::default();
        let mut vertex_dir = vec![0.0; self.num_nodes];
        let mut slack = vec![1.0; self.num_nodes];
        let comp = self.complements(tau);
        let comp_dir = self.complement_dir(dir);
        for (e, (&t, &d)) in tau.iter().zip(dir).enumerate() {
            let x = t + eta * d;
            let (i, j) = self.edges[e];
            slack[i] -= x;
            slack[j] -= x;
            vertex_dir[i] += d;
            vertex_dir[j] += d;
            if self.is_clamped(e) {
                continue;
            }
            if !(0.0..=1.0).contains(&x) {
                return Err(Error::domain(format!(
                    "edge {e} leaves [0, 1] at step {eta}"
                )));
            }
            let c = self.coefficient(rho, e);
            let y = (comp[e] + eta * comp_dir[e]).max(0.0);
            let cd = comp_dir[e];
            out.value += c * xlogx(y) - xlogx(x);
            if d != 0.0 {
                if x <= 0.0 {
                    return Err(Error::GradientUndefined(format!("edge {e} at boundary")));
                }
                out.slope -= (1.0 + x.ln()) * d;
                out.curvature -= d * d / x;
            }
            if cd != 0.0 && c != 0.0 {
                if y <= 0.0 {
                    return Err(Error::GradientUndefined(format!("edge {e} at boundary")));
                }
                out.slope += c * (1.0 + y.ln()) * cd;
                out.curvature += c * cd * cd / y;
            }
        }
        if !self.perfect {
            for i in 0..self.num_nodes {
                let s = slack[i];
                if s < -SLACK_TOL {
                    return Err(Error::domain(format!("vertex {i} slack {s} negative")));
                }
                let s = s.max(0.0);
                out.value -= rho[i] * xlogx(s);
                let d = vertex_dir[i];
                if d != 0.0 && rho[i] != 0.0 {
                    if s <= 0.0 {
                        return Err(Error::GradientUndefined(format!(
                            "vertex {i} slack is zero"
                        )));
                    }
                    out.slope += rho[i] * (1.0 + s.ln()) * d;
                    out.curvature -= rho[i] * d * d / s;
                }
            }
        }
        Ok(out)
    }
}

/// Per-coordinate weights of `-x log x` in the regrouped pairwise entropy.
pub fn grid_coefficients(topology: &Topology, rho: &[f64]) -> Result<Vec<f64>> {
    if rho.len() != topology.num_edges() {
        return Err(Error::structure(format!(
            "{} reweighting entries for {} edges",
            rho.len(),
            topology.num_edges()
        )));
    }
    let mut node_weight = vec![1.0; topology.num_nodes()];
    for (&(i, j), &r) in topology.edges().iter().zip(rho) {
        node_weight[i] -= r;
        node_weight[j] -= r;
    }
    let mut coef = Vec::with_capacity(topology.num_coords());
    for w in node_weight {
        coef.push(w);
        coef.push(w);
    }
    for &r in rho {
        coef.extend([r; 4]);
    }
    Ok(coef)
}

fn check_grid(topology: &Topology, tau: &[f64]) -> Result<()> {
    if tau.len() != topology.num_coords() {
        return Err(Error::structure(format!(
            "{} pseudomarginal coordinates, model has {}",
            tau.len(),
            topology.num_coords()
        )));
    }
    Ok(())
}

/// Regrouped reweighted entropy of a pairwise binary model.
pub fn grid_entropy(topology: &Topology, tau: &[f64], rho: &[f64]) -> Result<f64> {
    check_grid(topology, tau)?;
    let coef = grid_coefficients(topology, rho)?;
    let mut h = 0.0;
    for (&x, &c) in tau.iter().zip(&coef) {
        if x < 0.0 {
            return Err(Error::domain(format!("negative pseudomarginal {x}")));
        }
        h -= c * xlogx(x);
    }
    Ok(h)
}

/// Node entropies minus ρ-weighted edge mutual informations.
pub fn grid_entropy_definition(topology: &Topology, tau: &[f64], rho: &[f64]) -> Result<f64> {
    check_grid(topology, tau)?;
    if rho.len() != topology.num_edges() {
        return Err(Error::structure("reweighting length mismatch"));
    }
    if let Some(x) = tau.iter().find(|&&x| x < 0.0) {
        return Err(Error::domain(format!("negative pseudomarginal {x}")));
    }
    let mut h = 0.0;
    for n in 0..topology.num_nodes() {
        h -= xlogx(tau[2 * n]) + xlogx(tau[2 * n + 1]);
    }
    for (e, &(i, j)) in topology.edges().iter().enumerate() {
        let mut info = 0.0;
        for a in 0..2 {
            for b in 0..2 {
                let joint = tau[topology.edge_coord(e, a, b)];
                if joint > 0.0 {
                    info += joint * (joint / (tau[2 * i + a] * tau[2 * j + b])).ln();
                }
            }
        }
        h -= rho[e] * info;
    }
    Ok(h)
}

pub fn grid_entropy_gradient(topology: &Topology, tau: &[f64], rho: &[f64]) -> Result<Vec<f64>> {
    check_grid(topology, tau)?;
    let coef = grid_coefficients(topology, rho)?;
    tau.iter()
        .zip(&coef)
        .enumerate()
        .map(|(k, (&x, &c))| {
            if c == 0.0 {
                Ok(0.0)
            } else if x <= 0.0 {
                Err(Error::GradientUndefined(format!("coordinate {k} is {x}")))
            } else {
                Ok(-c * (1.0 + x.ln()))
            }
        })
        .collect()
}

pub fn grid_entropy_along(
    topology: &Topology,
    tau: &[f64],
    dir: &[f64],
    eta: f64,
    rho: &[f64],
) -> Result<Directional> {
    check_grid(topology, tau)?;
    let coef = grid_coefficients(topology, rho)?;
    let mut out = Directional::default();
    for (k, ((&t, &d), &c)) in tau.iter().zip(dir).zip(&coef).enumerate() {
        let x = t + eta * d;
        if x < 0.0 {
            return Err(Error::domain(format!(
                "coordinate {k} negative at step {eta}"
            )));
        }
        out.value -= c * xlogx(x);
        if d != 0.0 && c != 0.0 {
            if x <= 0.0 {
                return Err(Error::GradientUndefined(format!(
                    "coordinate {k} at boundary"
                )));
            }
            out.slope -= c * (1.0 + x.ln()) * d;
            out.curvature -= c * d * d / x;
        }
    }
    Ok(out)
}

/// Reweighted entropy of a pseudomarginal vector in the layout of `topology`.
pub fn entropy(topology: &Topology, tau: &[f64], rho: &Reweighting) -> Result<f64> {
    rho.check(topology)?;
    match topology.kind() {
        ModelKind::PairwiseBinaryGrid => grid_entropy(topology, tau, rho.values()),
        _ => MatchingGraph::from_topology(topology).entropy(tau, rho.values()),
    }
}

/// Gradient of [`entropy`]; requires a strictly interior point on free coordinates.
pub fn entropy_gradient(topology: &Topology, tau: &[f64], rho: &Reweighting) -> Result<Vec<f64>> {
    rho.check(topology)?;
    match topology.kind() {
        ModelKind::PairwiseBinaryGrid => grid_entropy_gradient(topology, tau, rho.values()),
        _ => MatchingGraph::from_topology(topology).gradient(tau, rho.values()),
    }
}

/// Entropy and its first two derivatives along `tau + eta * dir`.
pub fn entropy_along(
    topology: &Topology,
    tau: &[f64],
    dir: &[f64],
    eta: f64,
    rho: &Reweighting,
) -> Result<Directional> {
    match topology.kind() {
        ModelKind::PairwiseBinaryGrid => grid_entropy_along(topology, tau, dir, eta, rho.values()),
        _ => MatchingGraph::from_topology(topology).along(tau, dir, eta, rho.values()),
    }
}
