//! Routing instances: a depot, customers with integer seat demands, and a
//! dense Euclidean travel-cost matrix.
//!
//! Node indices follow one convention across the whole crate: index 0 is the
//! route-start depot, indices `1..=n` are customers, and index `n+1` is the
//! route-end depot at the same coordinates as the start. The doubled depot is
//! a modelling artifact; files store only the depot once (node id 0).

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Version tag written into instance files.
pub const FORMAT_VERSION: u32 = 1;

/// Slack allowed when checking the triangle inequality on cost matrices.
pub const TRIANGLE_TOL: f64 = 1e-12;

#[derive(Debug, thiserror::Error)]
pub enum InstanceError {
    #[error("invalid generator config: {0}")]
    InvalidConfig(String),
    #[error("invalid instance: {0}")]
    Invalid(String),
    #[error("unsupported instance format version {found} (this build reads version {FORMAT_VERSION})")]
    UnsupportedVersion { found: u32 },
    #[error("malformed instance JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("failed to parse {path}: {source}")]
    ParseFile {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Geographic point in decimal degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub lat: f64,
    pub lon: f64,
}

impl Point {
    /// Plane Euclidean distance in degree units.
    pub fn distance(&self, other: &Point) -> f64 {
        let da = self.lat - other.lat;
        let db = self.lon - other.lon;
        (da * da + db * db).sqrt()
    }
}

/// Dense symmetric travel costs between all node pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostMatrix {
    dim: usize,
    values: Vec<f64>,
}

impl CostMatrix {
    /// Pairwise Euclidean distances between the given points.
    pub fn euclidean(points: &[Point]) -> CostMatrix {
        let dim = points.len();
        let mut values = vec![0.0; dim * dim];
        for i in 0..dim {
            for j in 0..dim {
                values[i * dim + j] = points[i].distance(&points[j]);
            }
        }
        CostMatrix { dim, values }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.dim + j]
    }
}

/// How pickup requests are turned into customer nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DemandMode {
    /// One node per person, demand 1.
    Unit,
    /// Persons are batched into parties; one node per party.
    Grouped,
}

impl fmt::Display for DemandMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DemandMode::Unit => write!(f, "unit"),
            DemandMode::Grouped => write!(f, "grouped"),
        }
    }
}

impl std::str::FromStr for DemandMode {
    type Err = InstanceError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "unit" => Ok(DemandMode::Unit),
            "grouped" => Ok(DemandMode::Grouped),
            other => Err(InstanceError::InvalidConfig(format!(
                "unknown demand mode {other:?} (expected \"unit\" or \"grouped\")"
            ))),
        }
    }
}

/// Settings for random instance generation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    /// Total persons requesting pickup.
    pub request_count: u32,
    /// Vehicle capacity in seats.
    pub capacity: u32,
    pub center_lat: f64,
    pub center_lon: f64,
    /// Half-width in degrees of the uniform square around the center.
    pub jitter: f64,
    pub demand_mode: DemandMode,
    /// Largest single party size in grouped mode.
    pub max_group: u32,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            request_count: 10,
            capacity: 10,
            center_lat: 36.0726,
            center_lon: -79.7920,
            jitter: 0.004,
            demand_mode: DemandMode::Grouped,
            max_group: 4,
        }
    }
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<(), InstanceError> {
        let mut problems = Vec::new();
        if self.request_count < 1 {
            problems.push("request_count must be at least 1".to_string());
        }
        if self.capacity < 1 {
            problems.push("capacity must be at least 1".to_string());
        }
        if !self.jitter.is_finite() || self.jitter <= 0.0 {
            problems.push(format!("jitter must be positive and finite, got {}", self.jitter));
        }
        if !self.center_lat.is_finite() || !self.center_lon.is_finite() {
            problems.push("center coordinates must be finite".to_string());
        }
        if self.max_group < 1 {
            problems.push("max_group must be at least 1".to_string());
        }
        if self.max_group > self.capacity {
            problems.push(format!(
                "max_group {} exceeds capacity {}",
                self.max_group, self.capacity
            ));
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(InstanceError::InvalidConfig(problems.join("; ")))
        }
    }
}

/// A routing problem: depot, customers, vehicle capacity, travel costs.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    /// Coordinates in node order 0, 1..=n, n+1.
    points: Vec<Point>,
    /// Seat demands in the same order; zero at both depot copies.
    demands: Vec<u32>,
    capacity: u32,
    /// Generation seed; 0 for hand-built instances.
    seed: u64,
    costs: CostMatrix,
}

impl Instance {
    /// Builds an instance from explicit customer data. Costs are Euclidean;
    /// the seed is recorded as 0 (hand-built).
    pub fn new(depot: Point, customers: &[(Point, u32)], capacity: u32) -> Instance {
        let mut points = Vec::with_capacity(customers.len() + 2);
        let mut demands = Vec::with_capacity(customers.len() + 2);
        points.push(depot);
        demands.push(0);
        for &(p, q) in customers {
            points.push(p);
            demands.push(q);
        }
        points.push(depot);
        demands.push(0);
        let costs = CostMatrix::euclidean(&points);
        Instance {
            points,
            demands,
            capacity,
            seed: 0,
            costs,
        }
    }

    /// Draws a random instance. Deterministic in `(config, seed)`: party
    /// sizes are drawn first (uniform in `1..=max_group`, last one truncated
    /// so the total matches `request_count`), then one coordinate pair per
    /// customer, uniform in the jitter square. The depot sits at the center.
    pub fn generate(config: &GeneratorConfig, seed: u64) -> Result<Instance, InstanceError> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let group_sizes: Vec<u32> = match config.demand_mode {
            DemandMode::Unit => vec![1; config.request_count as usize],
            DemandMode::Grouped => {
                let mut sizes = Vec::new();
                let mut remaining = config.request_count;
                while remaining > 0 {
                    let size = rng.random_range(1..=config.max_group).min(remaining);
                    sizes.push(size);
                    remaining -= size;
                }
                sizes
            }
        };
        let customers: Vec<(Point, u32)> = group_sizes
            .iter()
            .map(|&q| {
                let lat = rng
                    .random_range(config.center_lat - config.jitter..=config.center_lat + config.jitter);
                let lon = rng
                    .random_range(config.center_lon - config.jitter..=config.center_lon + config.jitter);
                (Point { lat, lon }, q)
            })
            .collect();
        let depot = Point {
            lat: config.center_lat,
            lon: config.center_lon,
        };
        let mut instance = Instance::new(depot, &customers, config.capacity);
        instance.seed = seed;
        Ok(instance)
    }

    pub fn n_customers(&self) -> usize {
        self.points.len() - 2
    }

    /// Total node count including both depot copies.
    pub fn node_count(&self) -> usize {
        self.points.len()
    }

    /// Index of the route-end depot copy.
    pub fn depot_end(&self) -> usize {
        self.points.len() - 1
    }

    /// Customer node indices, `1..=n`.
    pub fn customers(&self) -> std::ops::Range<usize> {
        1..self.points.len() - 1
    }

    pub fn point(&self, node: usize) -> Point {
        self.points[node]
    }

    pub fn demand(&self, node: usize) -> u32 {
        self.demands[node]
    }

    /// Demands aligned with node indices (zero at both depot copies).
    pub fn demands(&self) -> &[u32] {
        &self.demands
    }

    pub fn capacity(&self) -> u32 {
        self.capacity
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn costs(&self) -> &CostMatrix {
        &self.costs
    }

    pub fn total_demand(&self) -> u64 {
        self.demands.iter().map(|&q| q as u64).sum()
    }

    /// Customer data in node order, convenient for rebuilding an instance
    /// with a different capacity.
    pub fn customer_data(&self) -> Vec<(Point, u32)> {
        self.customers().map(|i| (self.points[i], self.demands[i])).collect()
    }

    /// Checks structural invariants and returns one description per
    /// violation. Empty means the instance is well formed.
    pub fn validate(&self) -> Vec<String> {
        let mut violations = Vec::new();
        if self.points.len() < 3 {
            violations.push("instance must contain at least one customer".to_string());
            return violations;
        }
        let end = self.depot_end();
        if self.demands[0] != 0 {
            violations.push(format!(
                "depot demand must be 0, start depot (node 0) has {}",
                self.demands[0]
            ));
        }
        if self.demands[end] != 0 {
            violations.push(format!(
                "depot demand must be 0, end depot (node {end}) has {}",
                self.demands[end]
            ));
        }
        if self.points[0] != self.points[end] {
            violations.push("start and end depot coordinates differ".to_string());
        }
        for i in self.customers() {
            let q = self.demands[i];
            if q == 0 {
                violations.push(format!("customer {i} has zero demand"));
            } else if q > self.capacity {
                violations.push(format!(
                    "customer {i} demand {q} exceeds capacity {}",
                    self.capacity
                ));
            }
        }
        if self.costs.dim() != self.points.len() {
            violations.push(format!(
                "cost matrix dimension {} does not match node count {}",
                self.costs.dim(),
                self.points.len()
            ));
            return violations;
        }
        let dim = self.costs.dim();
        for i in 0..dim {
            if self.costs.at(i, i) != 0.0 {
                violations.push(format!("cost matrix diagonal entry ({i},{i}) is nonzero"));
            }
            for j in 0..dim {
                if self.costs.at(i, j) != self.costs.at(j, i) {
                    violations.push(format!("cost matrix asymmetric at ({i},{j})"));
                }
                if self.costs.at(i, j) < 0.0 {
                    violations.push(format!("cost matrix negative at ({i},{j})"));
                }
            }
            if self.costs.at(0, i) != self.costs.at(end, i) {
                violations.push(format!(
                    "depot rows differ at column {i} (start vs end depot)"
                ));
            }
        }
        for i in 0..dim {
            for j in 0..dim {
                for k in 0..dim {
                    if self.costs.at(i, k) > self.costs.at(i, j) + self.costs.at(j, k) + TRIANGLE_TOL {
                        violations.push(format!(
                            "triangle inequality violated for ({i},{j},{k})"
                        ));
                    }
                }
            }
        }
        violations
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("instance serialization")
    }

    pub fn from_json_str(text: &str) -> Result<Instance, InstanceError> {
        let file: InstanceFile = serde_json::from_str(text)?;
        Instance::from_file(file)
    }

    pub fn write_json(&self, path: &Path) -> Result<(), InstanceError> {
        fs::write(path, self.to_json_string()).map_err(|source| InstanceError::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn read_json(path: &Path) -> Result<Instance, InstanceError> {
        let text = fs::read_to_string(path).map_err(|source| InstanceError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        match Instance::from_json_str(&text) {
            Err(InstanceError::Json(source)) => Err(InstanceError::ParseFile {
                path: path.to_path_buf(),
                source,
            }),
            other => other,
        }
    }

    fn to_file(&self) -> InstanceFile {
        let mut nodes = Vec::with_capacity(self.points.len() - 1);
        nodes.push(NodeRecord {
            id: 0,
            lat: self.points[0].lat,
            lon: self.points[0].lon,
            demand: 0,
        });
        for i in self.customers() {
            nodes.push(NodeRecord {
                id: i,
                lat: self.points[i].lat,
                lon: self.points[i].lon,
                demand: self.demands[i],
            });
        }
        InstanceFile {
            version: FORMAT_VERSION,
            seed: self.seed,
            capacity: self.capacity,
            center: CenterRecord {
                lat: self.points[0].lat,
                lon: self.points[0].lon,
            },
            nodes,
        }
    }

    fn from_file(file: InstanceFile) -> Result<Instance, InstanceError> {
        if file.version != FORMAT_VERSION {
            return Err(InstanceError::UnsupportedVersion {
                found: file.version,
            });
        }
        if file.nodes.is_empty() {
            return Err(InstanceError::Invalid("node list is empty".to_string()));
        }
        let mut nodes = file.nodes;
        nodes.sort_by_key(|n| n.id);
        for (expect, node) in nodes.iter().enumerate() {
            if node.id != expect {
                return Err(InstanceError::Invalid(format!(
                    "node ids must cover 0..={} exactly once, found id {}",
                    nodes.len() - 1,
                    node.id
                )));
            }
        }
        if nodes[0].demand != 0 {
            return Err(InstanceError::Invalid(format!(
                "depot (node 0) must have demand 0, found {}",
                nodes[0].demand
            )));
        }
        let depot = Point {
            lat: nodes[0].lat,
            lon: nodes[0].lon,
        };
        let customers: Vec<(Point, u32)> = nodes[1..]
            .iter()
            .map(|n| {
                (
                    Point {
                        lat: n.lat,
                        lon: n.lon,
                    },
                    n.demand,
                )
            })
            .collect();
        let mut instance = Instance::new(depot, &customers, file.capacity);
        instance.seed = file.seed;
        let violations = instance.validate();
        if !violations.is_empty() {
            return Err(InstanceError::Invalid(violations.join("; ")));
        }
        Ok(instance)
    }
}

/// On-disk schema. `center` records where generation was centered; the depot
/// itself is node id 0 (the end-depot copy is implicit and never stored).
#[derive(Serialize, Deserialize)]
struct InstanceFile {
    version: u32,
    seed: u64,
    capacity: u32,
    center: CenterRecord,
    nodes: Vec<NodeRecord>,
}

#[derive(Serialize, Deserialize)]
struct CenterRecord {
    lat: f64,
    lon: f64,
}

#[derive(Serialize, Deserialize)]
struct NodeRecord {
    id: usize,
    lat: f64,
    lon: f64,
    demand: u32,
}
