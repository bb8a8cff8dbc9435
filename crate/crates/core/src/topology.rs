//! Mesh of teleporter routers joined by virtual wires, with one logical
//! qubit site (plus its corrector and purifier) attached to each router.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fidelity::{link_fidelity, DistanceCells, Fidelity};
use crate::params::ParameterSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NodeKind {
    LogicalQubitSite,
    Teleporter,
    Generator,
    Corrector,
    Purifier,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Coordinate {
    pub x: usize,
    pub y: usize,
}

impl Coordinate {
    pub const fn new(x: usize, y: usize) -> Self {
        Self { x, y }
    }

    pub fn manhattan(self, other: Coordinate) -> usize {
        self.x.abs_diff(other.x) + self.y.abs_diff(other.y)
    }
}

impl fmt::Display for Coordinate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.x, self.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Dimension {
    X,
    Y,
}

/// How many logical qubits a site keeps at rest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LqCapacity {
    HomeBase,
    Mobile,
}

impl LqCapacity {
    pub fn slots(self) -> usize {
        match self {
            LqCapacity::HomeBase => 1,
            LqCapacity::Mobile => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            LqCapacity::HomeBase => "home-base",
            LqCapacity::Mobile => "mobile",
        }
    }
}

impl fmt::Display for LqCapacity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LqCapacity {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "home-base" | "homebase" | "1" => Ok(LqCapacity::HomeBase),
            "mobile" | "2" => Ok(LqCapacity::Mobile),
            other => Err(format!("unknown layout `{other}` (home-base or mobile)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VirtualWire {
    pub a: Coordinate,
    pub b: Coordinate,
    /// Pairs per microsecond from the link's generator bank.
    pub rate: f64,
    pub fidelity: Fidelity,
}

impl VirtualWire {
    pub fn dimension(&self) -> Dimension {
        if self.a.y == self.b.y {
            Dimension::X
        } else {
            Dimension::Y
        }
    }
}

/// Everything needed to build a mesh.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeshSpec {
    pub rows: usize,
    pub cols: usize,
    /// Teleporters per router, split evenly into an X set and a Y set.
    pub t: usize,
    /// Generators per link.
    pub g: usize,
    /// Queue purifiers per logical qubit site.
    pub p: usize,
    pub depth: usize,
    pub lq_capacity: LqCapacity,
    pub hop_spacing: DistanceCells,
    /// Ballistic cells for router-to-site and intra-router moves.
    pub local_cells: u64,
}

impl Default for MeshSpec {
    fn default() -> Self {
        Self {
            rows: 16,
            cols: 16,
            t: 4,
            g: 4,
            p: 1,
            depth: 3,
            lq_capacity: LqCapacity::HomeBase,
            hop_spacing: DistanceCells(600),
            local_cells: 50,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum TopologyError {
    #[error("invalid layout: {0}")]
    Validation(String),
    #[error("coordinate {0} outside a {1}x{2} grid")]
    OutOfBounds(Coordinate, usize, usize),
    #[error("path has no links, so no generator is needed")]
    NoGeneratorNeeded,
    #[error("layout line {line}: {message}")]
    Parse { line: usize, message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridLayout {
    pub spec: MeshSpec,
    pub links: Vec<VirtualWire>,
}

pub fn build_mesh(spec: MeshSpec, params: &ParameterSet) -> Result<GridLayout, TopologyError> {
    let invalid = |m: &str| Err(TopologyError::Validation(m.to_string()));
    if spec.rows == 0 || spec.cols == 0 {
        return invalid("grid needs at least one row and column");
    }
    if spec.t < 2 || !spec.t.is_multiple_of(2) {
        return Err(TopologyError::Validation(format!(
            "teleporters per router must be even and at least 2, got {}",
            spec.t
        )));
    }
    if spec.g == 0 || spec.p == 0 {
        return invalid("generator and purifier counts must be at least 1");
    }
    if spec.depth == 0 {
        return invalid("purifier depth must be at least 1");
    }
    if spec.hop_spacing.cells() == 0 {
        return invalid("hop spacing must be at least one cell");
    }
    let fidelity = link_fidelity(params, spec.hop_spacing);
    let rate = spec.g as f64 / params.times.t_gen;
    let mut links = Vec::with_capacity(link_count(spec.rows, spec.cols));
    for y in 0..spec.rows {
        for x in 0..spec.cols - 1 {
            links.push(VirtualWire { a: Coordinate::new(x, y), b: Coordinate::new(x + 1, y), rate, fidelity });
        }
    }
    for y in 0..spec.rows - 1 {
        for x in 0..spec.cols {
            links.push(VirtualWire { a: Coordinate::new(x, y), b: Coordinate::new(x, y + 1), rate, fidelity });
        }
    }
    Ok(GridLayout { spec, links })
}

fn link_count(rows: usize, cols: usize) -> usize {
    rows * (cols - 1) + (rows - 1) * cols
}

impl GridLayout {
    pub fn rows(&self) -> usize {
        self.spec.rows
    }

    pub fn cols(&self) -> usize {
        self.spec.cols
    }

    pub fn router_count(&self) -> usize {
        self.spec.rows * self.spec.cols
    }

    pub fn contains(&self, c: Coordinate) -> bool {
        c.x < self.spec.cols && c.y < self.spec.rows
    }

    pub fn check(&self, c: Coordinate) -> Result<(), TopologyError> {
        if self.contains(c) {
            Ok(())
        } else {
            Err(TopologyError::OutOfBounds(c, self.spec.rows, self.spec.cols))
        }
    }

    /// Row-major router index.
    pub fn router_index(&self, c: Coordinate) -> usize {
        c.y * self.spec.cols + c.x
    }

    pub fn coordinate(&self, index: usize) -> Coordinate {
        Coordinate::new(index % self.spec.cols, index / self.spec.cols)
    }

    /// Index into `links` of the wire joining two adjacent routers.
    pub fn link_index(&self, a: Coordinate, b: Coordinate) -> Option<usize> {
        if !self.contains(a) || !self.contains(b) || a.manhattan(b) != 1 {
            return None;
        }
        let (lo, hi) = if (a.y, a.x) <= (b.y, b.x) { (a, b) } else { (b, a) };
        let cols = self.spec.cols;
        if lo.y == hi.y {
            Some(lo.y * (cols - 1) + lo.x)
        } else {
            Some(self.spec.rows * (cols - 1) + lo.y * cols + lo.x)
        }
    }

    /// Storage cells reserved per incoming link of a router.
    pub fn storage_per_link(&self) -> usize {
        self.spec.t
    }

    pub fn storage_per_router(&self) -> usize {
        4 * self.spec.t
    }

    pub fn teleporters_per_set(&self) -> usize {
        self.spec.t / 2
    }

    pub fn distance(&self, a: Coordinate, b: Coordinate) -> DistanceCells {
        DistanceCells(a.manhattan(b) as u64 * self.spec.hop_spacing.cells())
    }

    /// Node kinds present at a router position: the router itself, its
    /// site with corrector and purifier, and generators on its outgoing
    /// links toward +x and +y.
    pub fn nodes_at(&self, c: Coordinate) -> Vec<NodeKind> {
        let mut kinds = vec![
            NodeKind::Teleporter,
            NodeKind::LogicalQubitSite,
            NodeKind::Corrector,
            NodeKind::Purifier,
        ];
        let right = Coordinate::new(c.x + 1, c.y);
        let down = Coordinate::new(c.x, c.y + 1);
        for next in [right, down] {
            if self.contains(next) {
                kinds.push(NodeKind::Generator);
            }
        }
        kinds
    }

    /// X-first dimension-order path, inclusive of both ends.
    pub fn dimension_order_path(&self, src: Coordinate, dst: Coordinate) -> Result<Vec<Coordinate>, TopologyError> {
        self.check(src)?;
        self.check(dst)?;
        Ok(dimension_order_path(src, dst))
    }
}

/// X-first dimension-order path on an unbounded grid.
pub fn dimension_order_path(src: Coordinate, dst: Coordinate) -> Vec<Coordinate> {
    let mut path = Vec::with_capacity(src.manhattan(dst) + 1);
    let mut at = src;
    path.push(at);
    while at.x != dst.x {
        at.x = if dst.x > at.x { at.x + 1 } else { at.x - 1 };
        path.push(at);
    }
    while at.y != dst.y {
        at.y = if dst.y > at.y { at.y + 1 } else { at.y - 1 };
        path.push(at);
    }
    path
}

/// Index of the link that hosts the path's generator: link `k` joins
/// `path[k]` and `path[k + 1]`, with `k = floor(hops / 2)`.
pub fn midpoint_link(path: &[Coordinate]) -> Result<usize, TopologyError> {
    let hops = path.len().saturating_sub(1);
    if hops == 0 {
        return Err(TopologyError::NoGeneratorNeeded);
    }
    Ok(hops / 2)
}

/// Endpoints of the link whose generator serves the path.
pub fn midpoint_generator(path: &[Coordinate]) -> Result<(Coordinate, Coordinate), TopologyError> {
    let k = midpoint_link(path)?;
    Ok((path[k], path[k + 1]))
}

impl fmt::Display for GridLayout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = &self.spec;
        writeln!(f, "rows = {}", s.rows)?;
        writeln!(f, "cols = {}", s.cols)?;
        writeln!(f, "t = {}", s.t)?;
        writeln!(f, "g = {}", s.g)?;
        writeln!(f, "p = {}", s.p)?;
        writeln!(f, "depth = {}", s.depth)?;
        writeln!(f, "capacity = {}", s.lq_capacity)?;
        writeln!(f, "hop_spacing = {}", s.hop_spacing.cells())?;
        writeln!(f, "local_cells = {}", s.local_cells)?;
        for link in &self.links {
            writeln!(f, "link {} {} {} {}", link.a.x, link.a.y, link.b.x, link.b.y)?;
        }
        Ok(())
    }
}

/// Parses a layout document: `key = value` lines, then optional
/// `link x1 y1 x2 y2` adjacency lines. Unset keys keep their defaults.
/// If links are listed they must match the mesh exactly.
pub fn parse_layout(text: &str, params: &ParameterSet) -> Result<GridLayout, TopologyError> {
    let mut spec = MeshSpec::default();
    let mut listed = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let err = |message: String| TopologyError::Parse { line: line_no, message };
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix("link ") {
            let nums: Result<Vec<usize>, _> = rest.split_whitespace().map(str::parse).collect();
            match nums.map_err(|e| err(e.to_string()))?.as_slice() {
                [x1, y1, x2, y2] => listed.push((Coordinate::new(*x1, *y1), Coordinate::new(*x2, *y2))),
                _ => return Err(err("link needs four coordinates".into())),
            }
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| err(format!("expected `key = value`, got `{line}`")))?;
        let (key, value) = (key.trim(), value.trim());
        let int = || value.parse::<usize>().map_err(|e| err(format!("{key}: {e}")));
        match key {
            "rows" => spec.rows = int()?,
            "cols" => spec.cols = int()?,
            "t" => spec.t = int()?,
            "g" => spec.g = int()?,
            "p" => spec.p = int()?,
            "depth" => spec.depth = int()?,
            "capacity" => spec.lq_capacity = value.parse().map_err(err)?,
            "hop_spacing" => spec.hop_spacing = DistanceCells(int()? as u64),
            "local_cells" => spec.local_cells = int()? as u64,
            other => return Err(err(format!("unknown key `{other}`"))),
        }
    }
    let layout = build_mesh(spec, params)?;
    if !listed.is_empty() {
        let mut expected: Vec<_> = layout.links.iter().map(|l| (l.a, l.b)).collect();
        let mut got: Vec<_> = listed
            .into_iter()
            .map(|(a, b)| if (a.y, a.x) <= (b.y, b.x) { (a, b) } else { (b, a) })
            .collect();
        expected.sort();
        got.sort();
        if expected != got {
            return Err(TopologyError::Validation(
                "listed links do not form the full mesh".to_string(),
            ));
        }
    }
    Ok(layout)
}

/// Parses `RxC` grid sizes such as `16x16`.
pub fn parse_grid(text: &str) -> Result<(usize, usize), String> {
    let (r, c) = text
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("grid `{text}` is not of the form RxC"))?;
    let r = r.trim().parse().map_err(|e| format!("grid rows: {e}"))?;
    let c = c.trim().parse().map_err(|e| format!("grid cols: {e}"))?;
    Ok((r, c))
}
