//! Small-signal modified nodal analysis.
//!
//! Builds the complex admittance matrix of a linear R/C/VCCS network at one
//! frequency and solves it with dense LU. Used as an independent check of the
//! closed-form front-end and servo expressions, and for output-referred noise
//! by superposition of uncorrelated element noise.

mod netlist;

pub use netlist::parse_netlist;

use std::collections::{HashMap, VecDeque};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::noise::{DensityUnit, Frequency, NoiseSource, PhysicalConstants};

pub type NodeId = usize;

/// Ground is always node 0.
pub const GROUND: NodeId = 0;

/// Upper bound on non-ground nodes.
pub const MAX_NODES: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub enum ElementKind {
    Resistor {
        resistance: f64,
    },
    Capacitor {
        capacitance: f64,
    },
    /// Current gm·(V(ctrl_pos) − V(ctrl_neg)) flowing from `pos` through the source to `neg`.
    Vccs {
        ctrl_pos: NodeId,
        ctrl_neg: NodeId,
        gm: f64,
    },
    /// A port with no admittance. Carries noise stamps or serves as an injection point.
    CurrentPort,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Element {
    pub name: String,
    pub pos: NodeId,
    pub neg: NodeId,
    pub kind: ElementKind,
}

/// Unit-amplitude stimulus for [`Network::ac_solve`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Excitation {
    /// 1 V ideal source, `pos` relative to `neg`.
    Voltage { pos: NodeId, neg: NodeId },
    /// 1 A pushed into `into` and drawn out of `out_of`.
    Current { into: NodeId, out_of: NodeId },
}

#[derive(Debug, Clone, PartialEq)]
pub struct AcSolution {
    pub frequency: f64,
    /// Node voltages indexed by node id; entry 0 is ground.
    pub voltages: Vec<Complex64>,
    /// ‖A·x − b‖ / ‖b‖
    pub relative_residual: f64,
}

#[derive(Debug, Clone, Default)]
pub struct Network {
    node_names: Vec<String>,
    node_index: HashMap<String, NodeId>,
    elements: Vec<Element>,
    noise: Vec<(usize, NoiseSource)>,
    output: Option<(NodeId, NodeId)>,
}

impl Network {
    pub fn new() -> Self {
        let mut net = Network::default();
        net.node_names.push("0".into());
        net.node_index.insert("0".into(), GROUND);
        net.node_index.insert("gnd".into(), GROUND);
        net
    }

    /// Returns the id for `name`, creating the node on first use.
    pub fn node(&mut self, name: &str) -> NodeId {
        if let Some(&id) = self.node_index.get(name) {
            return id;
        }
        let id = self.node_names.len();
        self.node_names.push(name.to_string());
        self.node_index.insert(name.to_string(), id);
        id
    }

    pub fn node_id(&self, name: &str) -> Option<NodeId> {
        self.node_index.get(name).copied()
    }

    pub fn node_name(&self, id: NodeId) -> &str {
        &self.node_names[id]
    }

    /// Number of non-ground nodes.
    pub fn node_count(&self) -> usize {
        self.node_names.len() - 1
    }

    pub fn elements(&self) -> &[Element] {
        &self.elements
    }

    pub fn noise_stamps(&self) -> impl Iterator<Item = (&Element, &NoiseSource)> {
        self.noise.iter().map(|(i, s)| (&self.elements[*i], s))
    }

    pub fn output(&self) -> Option<(NodeId, NodeId)> {
        self.output
    }

    fn add(&mut self, element: Element) -> Result<usize> {
        if self.elements.iter().any(|e| e.name == element.name) {
            return Err(Error::Topology(format!("duplicate element name `{}`", element.name)));
        }
        for n in [element.pos, element.neg] {
            if n >= self.node_names.len() {
                return Err(Error::Topology(format!("element `{}` uses unknown node {n}", element.name)));
            }
        }
        if element.pos == element.neg {
            return Err(Error::Topology(format!("element `{}` is shorted onto one node", element.name)));
        }
        self.elements.push(element);
        Ok(self.elements.len() - 1)
    }

    pub fn add_resistor(&mut self, name: &str, pos: NodeId, neg: NodeId, resistance: f64) -> Result<usize> {
        positive(name, resistance)?;
        self.add(Element { name: name.into(), pos, neg, kind: ElementKind::Resistor { resistance } })
    }

    pub fn add_capacitor(&mut self, name: &str, pos: NodeId, neg: NodeId, capacitance: f64) -> Result<usize> {
        positive(name, capacitance)?;
        self.add(Element { name: name.into(), pos, neg, kind: ElementKind::Capacitor { capacitance } })
    }

    pub fn add_vccs(
        &mut self,
        name: &str,
        (pos, neg): (NodeId, NodeId),
        (ctrl_pos, ctrl_neg): (NodeId, NodeId),
        gm: f64,
    ) -> Result<usize> {
        positive(name, gm)?;
        if ctrl_pos.max(ctrl_neg) >= self.node_names.len() {
            return Err(Error::Topology(format!("element `{name}` controlled by unknown node")));
        }
        self.add(Element { name: name.into(), pos, neg, kind: ElementKind::Vccs { ctrl_pos, ctrl_neg, gm } })
    }

    pub fn add_current_port(&mut self, name: &str, pos: NodeId, neg: NodeId) -> Result<usize> {
        self.add(Element { name: name.into(), pos, neg, kind: ElementKind::CurrentPort })
    }

    /// Attaches an uncorrelated noise source to an existing element.
    ///
    /// Current densities are injected across the element terminals. Voltage
    /// densities are only meaningful on resistors, where they become e/R.
    pub fn attach_noise(&mut self, element: &str, source: NoiseSource) -> Result<()> {
        let idx = self
            .elements
            .iter()
            .position(|e| e.name == element)
            .ok_or_else(|| Error::Topology(format!("no element named `{element}`")))?;
        if source.unit() == DensityUnit::VoltsPerRootHz
            && !matches!(self.elements[idx].kind, ElementKind::Resistor { .. })
        {
            return Err(Error::Topology(format!(
                "voltage noise can only be stamped on a resistor, `{element}` is not one"
            )));
        }
        self.noise.push((idx, source));
        Ok(())
    }

    pub fn set_output(&mut self, pos: NodeId, neg: NodeId) -> Result<()> {
        if pos.max(neg) >= self.node_names.len() {
            return Err(Error::Topology("output uses unknown node".into()));
        }
        self.output = Some((pos, neg));
        Ok(())
    }

    /// Checks the node bound and that every node reaches ground through R or C branches.
    pub fn validate(&self) -> Result<()> {
        if self.node_count() > MAX_NODES {
            return Err(Error::Topology(format!("{} nodes exceeds the limit of {MAX_NODES}", self.node_count())));
        }
        if self.output.is_none() {
            return Err(Error::Topology("no output node pair".into()));
        }
        let n = self.node_names.len();
        let mut adj = vec![Vec::new(); n];
        for e in &self.elements {
            if matches!(e.kind, ElementKind::Resistor { .. } | ElementKind::Capacitor { .. }) {
                adj[e.pos].push(e.neg);
                adj[e.neg].push(e.pos);
            }
        }
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([GROUND]);
        seen[GROUND] = true;
        while let Some(v) = queue.pop_front() {
            for &w in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    queue.push_back(w);
                }
            }
        }
        if let Some(id) = seen.iter().position(|s| !s) {
            return Err(Error::Topology(format!("node `{}` has no passive path to ground", self.node_names[id])));
        }
        Ok(())
    }

    fn assemble(&self, f: Frequency, exc: Option<Excitation>) -> (DMatrix<Complex64>, DVector<Complex64>) {
        let nodes = self.node_count();
        let extra = usize::from(matches!(exc, Some(Excitation::Voltage { .. })));
        let dim = nodes + extra;
        let mut a = DMatrix::<Complex64>::zeros(dim, dim);
        let mut b = DVector::<Complex64>::zeros(dim);
        let omega = f.omega();
        // row/col for a node, None for ground
        let ix = |n: NodeId| n.checked_sub(1);

        let stamp = |a: &mut DMatrix<Complex64>, r: NodeId, c: NodeId, v: Complex64| {
            if let (Some(r), Some(c)) = (ix(r), ix(c)) {
                a[(r, c)] += v;
            }
        };
        for e in &self.elements {
            let y = match e.kind {
                ElementKind::Resistor { resistance } => Complex64::new(1.0 / resistance, 0.0),
                ElementKind::Capacitor { capacitance } => Complex64::new(0.0, omega * capacitance),
                ElementKind::Vccs { ctrl_pos, ctrl_neg, gm } => {
                    let g = Complex64::new(gm, 0.0);
                    stamp(&mut a, e.pos, ctrl_pos, g);
                    stamp(&mut a, e.pos, ctrl_neg, -g);
                    stamp(&mut a, e.neg, ctrl_pos, -g);
                    stamp(&mut a, e.neg, ctrl_neg, g);
                    continue;
                }
                ElementKind::CurrentPort => continue,
            };
            stamp(&mut a, e.pos, e.pos, y);
            stamp(&mut a, e.neg, e.neg, y);
            stamp(&mut a, e.pos, e.neg, -y);
            stamp(&mut a, e.neg, e.pos, -y);
        }
        match exc {
            Some(Excitation::Voltage { pos, neg }) => {
                let k = nodes;
                let one = Complex64::new(1.0, 0.0);
                if let Some(p) = ix(pos) {
                    a[(p, k)] += one;
                    a[(k, p)] += one;
                }
                if let Some(n) = ix(neg) {
                    a[(n, k)] -= one;
                    a[(k, n)] -= one;
                }
                b[k] = one;
            }
            Some(Excitation::Current { into, out_of }) => {
                if let Some(p) = ix(into) {
                    b[p] += 1.0;
                }
                if let Some(n) = ix(out_of) {
                    b[n] -= 1.0;
                }
            }
            None => {}
        }
        (a, b)
    }

    /// Full node-voltage solution for a unit excitation at `f`.
    pub fn ac_solution(&self, f: Frequency, exc: Excitation) -> Result<AcSolution> {
        self.validate()?;
        let (a, b) = self.assemble(f, Some(exc));
        let x =
            a.clone().lu().solve(&b).ok_or_else(|| Error::Topology(format!("singular admittance matrix at {f}")))?;
        if x.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::Topology(format!("non-finite solution at {f}")));
        }
        let b_norm = b.norm();
        let relative_residual = if b_norm > 0.0 { (&a * &x - &b).norm() / b_norm } else { 0.0 };
        if relative_residual > 1e-6 {
            return Err(Error::Topology(format!(
                "ill-conditioned admittance matrix at {f} (residual {relative_residual:e})"
            )));
        }
        let mut voltages = vec![Complex64::new(0.0, 0.0)];
        voltages.extend(x.iter().take(self.node_count()).copied());
        Ok(AcSolution { frequency: f.hz(), voltages, relative_residual })
    }

    /// Complex output voltage for a unit excitation at `f`.
    pub fn ac_solve(&self, f: Frequency, exc: Excitation) -> Result<Complex64> {
        let sol = self.ac_solution(f, exc)?;
        let (p, n) = self.output.expect("validated");
        Ok(sol.voltages[p] - sol.voltages[n])
    }

    /// Output noise density (V/√Hz) from every noise stamp, summed in power.
    pub fn noise_solve(&self, f: Frequency) -> Result<f64> {
        self.noise_solve_with(&PhysicalConstants::CODATA, f)
    }

    pub fn noise_solve_with(&self, k: &PhysicalConstants, f: Frequency) -> Result<f64> {
        if self.noise.is_empty() {
            return Err(Error::Topology("network has no noise-stamped elements".into()));
        }
        let mut power = 0.0;
        for (idx, source) in &self.noise {
            let e = &self.elements[*idx];
            let density = source.density_with(k, f);
            let current = match (source.unit(), &e.kind) {
                (DensityUnit::AmpsPerRootHz, _) => density,
                (DensityUnit::VoltsPerRootHz, ElementKind::Resistor { resistance }) => density / resistance,
                _ => unreachable!("checked in attach_noise"),
            };
            if current == 0.0 {
                continue;
            }
            let z = self.ac_solve(f, Excitation::Current { into: e.pos, out_of: e.neg })?;
            power += z.norm_sqr() * current * current;
        }
        Ok(power.sqrt())
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("element `{name}` needs a finite value > 0, got {v}")))
    }
}
