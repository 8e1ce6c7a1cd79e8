//! Instance files, the random instance generator and report documents.

use std::collections::HashMap;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::audit::{oracle_check, OracleCheckConfig};
use crate::error::{Error, Result};
use crate::graph::{EdgeWeights, Graph};
use crate::rounding::{solve, solve_relaxation, PinPolicy, SolveConfig, ZetaPolicy};
use crate::requirements::{ProperFunction, RequirementMatrix};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeEntry {
    pub u: String,
    pub v: String,
    pub cost: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RequirementEntry {
    pub u: String,
    pub v: String,
    pub r: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Meta {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

/// On-disk instance: named vertices, a multigraph and pairwise requirements.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub vertices: Vec<String>,
    pub edges: Vec<EdgeEntry>,
    #[serde(default)]
    pub requirements: Vec<RequirementEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub meta: Option<Meta>,
}

/// A validated instance.
#[derive(Clone, Debug)]
pub struct Instance {
    pub graph: Graph,
    pub requirements: RequirementMatrix,
    pub file: InstanceFile,
}

fn field_error(location: String, message: impl Into<String>) -> Error {
    Error::Parse {
        location,
        message: message.into(),
    }
}

impl InstanceFile {
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| {
            field_error(format!("line {}, column {}", e.line(), e.column()), e.to_string())
        })
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("instance serializes");
        s.push('\n');
        s
    }

    pub fn validate(&self) -> Result<Instance> {
        let mut index = HashMap::new();
        for (i, name) in self.vertices.iter().enumerate() {
            if index.insert(name.as_str(), i).is_some() {
                return Err(field_error(format!("vertices[{i}]"), format!("duplicate vertex {name:?}")));
            }
        }
        let lookup = |name: &str, at: String| {
            index
                .get(name)
                .copied()
                .ok_or_else(|| field_error(at, format!("unknown vertex {name:?}")))
        };
        let mut edges = Vec::with_capacity(self.edges.len());
        for (i, e) in self.edges.iter().enumerate() {
            let u = lookup(&e.u, format!("edges[{i}].u"))?;
            let v = lookup(&e.v, format!("edges[{i}].v"))?;
            if !(e.cost >= 0.0 && e.cost.is_finite()) {
                return Err(field_error(format!("edges[{i}].cost"), format!("cost {} is not a nonnegative number", e.cost)));
            }
            if u == v {
                return Err(field_error(format!("edges[{i}]"), format!("self-loop at {:?}", e.u)));
            }
            edges.push((u, v, e.cost));
        }
        let n = self.vertices.len();
        let graph = Graph::new(n, &edges).map_err(|e| field_error("edges".into(), e.to_string()))?;
        let mut requirements = RequirementMatrix::new(n);
        let mut seen = HashMap::new();
        for (i, r) in self.requirements.iter().enumerate() {
            let u = lookup(&r.u, format!("requirements[{i}].u"))?;
            let v = lookup(&r.v, format!("requirements[{i}].v"))?;
            let at = format!("requirements[{i}]");
            if u == v {
                return Err(field_error(at, format!("requirement on a single vertex {:?}", r.u)));
            }
            if let Some(prev) = seen.insert((u.min(v), u.max(v)), r.r) {
                if prev != r.r {
                    return Err(field_error(at, format!("conflicting requirements {prev} and {}", r.r)));
                }
            }
            requirements.set(u, v, r.r).map_err(|e| field_error(at, e.to_string()))?;
        }
        Ok(Instance {
            graph,
            requirements,
            file: self.clone(),
        })
    }
}

pub fn parse_instance(text: &str) -> Result<Instance> {
    InstanceFile::parse(text)?.validate()
}

pub fn read_instance(path: &std::path::Path) -> Result<Instance> {
    let text = std::fs::read_to_string(path)?;
    parse_instance(&text)
}

/// Random connected multigraph on `n` vertices: each pair is an edge with
/// probability `density` (integer cost 1..=10), components are then chained
/// together, and each pair gets a requirement in `1..=r_max` with
/// probability 1/2.
pub fn generate_instance(seed: u64, n: usize, density: f64, r_max: u64) -> Result<InstanceFile> {
    if n < 2 {
        return Err(Error::invalid(format!("generator needs at least 2 vertices, got {n}")));
    }
    if !(density > 0.0 && density <= 1.0) {
        return Err(Error::invalid(format!("density {density} outside (0, 1]")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let name = |v: usize| format!("v{v}");
    let mut dsu: Vec<usize> = (0..n).collect();
    fn find(dsu: &mut [usize], v: usize) -> usize {
        let mut r = v;
        while dsu[r] != r {
            r = dsu[r];
        }
        dsu[v] = r;
        r
    }
    let mut edges = Vec::new();
    let add = |edges: &mut Vec<EdgeEntry>, rng: &mut ChaCha8Rng, dsu: &mut Vec<usize>, u: usize, v: usize| {
        edges.push(EdgeEntry {
            u: name(u),
            v: name(v),
            cost: rng.gen_range(1..=10) as f64,
        });
        let (a, b) = (find(dsu, u), find(dsu, v));
        dsu[a.max(b)] = a.min(b);
    };
    for u in 0..n {
        for v in u + 1..n {
            if density >= 1.0 || rng.gen_bool(density) {
                add(&mut edges, &mut rng, &mut dsu, u, v);
            }
        }
    }
    for v in 1..n {
        if find(&mut dsu, v) != find(&mut dsu, 0) {
            let u = loop {
                let u = rng.gen_range(0..n);
                if find(&mut dsu, u) == find(&mut dsu, 0) {
                    break u;
                }
            };
            add(&mut edges, &mut rng, &mut dsu, u, v);
        }
    }
    let mut requirements = Vec::new();
    if r_max > 0 {
        for u in 0..n {
            for v in u + 1..n {
                if rng.gen_bool(0.5) {
                    requirements.push(RequirementEntry {
                        u: name(u),
                        v: name(v),
                        r: rng.gen_range(1..=r_max),
                    });
                }
            }
        }
    }
    Ok(InstanceFile {
        vertices: (0..n).map(name).collect(),
        edges,
        requirements,
        meta: Some(Meta {
            name: Some(format!("gen-n{n}-d{density}-r{r_max}-s{seed}")),
            seed: Some(seed),
        }),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Solve,
    LpOnly,
    OracleCheck,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunConfig {
    pub mode: Mode,
    pub epsilon: f64,
    /// Recheck LP feasibility in exact rational arithmetic.
    pub rational: bool,
    pub seed: u64,
    pub jobs: usize,
    pub zeta: ZetaPolicy,
    pub pinning: PinPolicy,
    pub oracle: OracleCheckConfig,
}

impl RunConfig {
    pub fn new(mode: Mode, epsilon: f64) -> Self {
        RunConfig {
            mode,
            epsilon,
            rational: false,
            seed: 0,
            jobs: 1,
            zeta: ZetaPolicy::Uniform,
            pinning: PinPolicy::All,
            oracle: OracleCheckConfig::default(),
        }
    }

    fn solve_config(&self) -> SolveConfig {
        SolveConfig {
            epsilon: self.epsilon,
            jobs: self.jobs,
            exact_certification: self.rational,
            zeta: self.zeta,
            pinning: self.pinning,
        }
    }
}

/// A run's output: a deterministic body plus a separate volatile timing
/// section.
#[derive(Clone, Debug, PartialEq)]
pub struct Report {
    pub body: Value,
    pub timing: Value,
    /// Whether every check passed (always true outside oracle-check mode).
    pub passed: bool,
}

impl Report {
    /// Pretty JSON with the body's keys first and `timing` last.
    pub fn render(&self) -> String {
        let mut doc = self.body.clone();
        doc["timing"] = self.timing.clone();
        let mut s = serde_json::to_string_pretty(&doc).expect("report serializes");
        s.push('\n');
        s
    }

    /// The report without its timing section.
    pub fn render_body(&self) -> String {
        serde_json::to_string_pretty(&self.body).expect("report serializes")
    }
}

pub fn run(config: &RunConfig, instance: Option<&Instance>) -> Result<Report> {
    if !(config.epsilon > 0.0 && config.epsilon.is_finite()) {
        return Err(Error::invalid(format!("epsilon {} must be positive", config.epsilon)));
    }
    let start = Instant::now();
    let need = || instance.ok_or_else(|| Error::invalid("this mode needs an instance"));
    let describe = |inst: &Instance| {
        json!({
            "name": inst.file.meta.as_ref().and_then(|m| m.name.clone()),
            "vertices": inst.graph.num_vertices(),
            "edges": inst.graph.num_edges(),
        })
    };
    let (body, passed) = match config.mode {
        Mode::Solve => {
            let inst = need()?;
            let rep = solve(&inst.graph, &inst.requirements, &config.solve_config())?;
            let rounded: Vec<_> = rep.z.iter().enumerate().filter(|(_, &z)| z > 0).collect();
            let body = json!({
                "mode": config.mode,
                "config": config.solve_config(),
                "seed": config.seed,
                "instance": describe(inst),
                "result": rep,
                "support": rounded.iter().map(|&(e, &z)| {
                    let edge = inst.graph.edge(e).expect("live edge");
                    json!({"edge": e, "u": inst.file.vertices[edge.u], "v": inst.file.vertices[edge.v], "z": z})
                }).collect::<Vec<_>>(),
            });
            (body, true)
        }
        Mode::LpOnly => {
            let inst = need()?;
            if inst.requirements.max_value() == 0 {
                let body = json!({
                    "mode": config.mode,
                    "instance": describe(inst),
                    "result": {"primal": 0.0, "dual": 0.0, "x": vec![0.0; inst.graph.id_bound()]},
                });
                (body, true)
            } else {
                let lp = solve_relaxation(&inst.graph, &inst.requirements, config.epsilon, config.rational)?;
                let body = json!({
                    "mode": config.mode,
                    "epsilon": config.epsilon,
                    "rational": config.rational,
                    "instance": describe(inst),
                    "result": {
                        "primal": lp.cost,
                        "dual": lp.dual_bound,
                        "certified_ratio": lp.certified_ratio(),
                        "zeta": lp.zeta,
                        "x": lp.x.values(),
                        "mw": lp.stats,
                        "gh_builds": lp.gh_builds,
                    },
                });
                (body, true)
            }
        }
        Mode::OracleCheck => {
            let results = oracle_check(&config.oracle, config.seed)?;
            let passed = results.iter().all(|r| r.passed());
            let body = json!({
                "mode": config.mode,
                "seed": config.seed,
                "oracle": config.oracle,
                "passed": passed,
                "properties": results,
            });
            (body, passed)
        }
    };
    Ok(Report {
        body,
        timing: json!({ "elapsed_secs": start.elapsed().as_secs_f64() }),
        passed,
    })
}

/// Multiplicities keyed by edge id, as produced by `solve`.
pub fn multiplicities(report: &Report) -> Option<EdgeWeights<u64>> {
    let z = report.body.get("result")?.get("z")?.as_array()?;
    z.iter().map(Value::as_u64).collect::<Option<Vec<_>>>().map(EdgeWeights::new)
}

#[cfg(test)]
mod tests {
    use super::*;

    const TRIANGLE: &str = r#"{
  "vertices": ["a", "b", "c"],
  "edges": [
    {"u": "a", "v": "b", "cost": 1},
    {"u": "b", "v": "c", "cost": 1},
    {"u": "a", "v": "c", "cost": 1}
  ],
  "requirements": [
    {"u": "a", "v": "b", "r": 1},
    {"u": "b", "v": "c", "r": 1},
    {"u": "a", "v": "c", "r": 1}
  ]
}"#;

    #[test]
    fn triangle_fixture() {
        let inst = parse_instance(TRIANGLE).unwrap();
        assert_eq!(inst.graph.num_vertices(), 3);
        assert_eq!(inst.graph.num_edges(), 3);
        assert_eq!(inst.requirements, RequirementMatrix::uniform(3, 1));
    }

    #[test]
    fn parse_errors_carry_context() {
        let self_req = TRIANGLE.replace(r#"{"u": "a", "v": "b", "r": 1}"#, r#"{"u": "a", "v": "a", "r": 1}"#);
        let err = parse_instance(&self_req).unwrap_err();
        assert!(matches!(&err, Error::Parse { location, .. } if location == "requirements[0]"), "{err}");

        let unknown = TRIANGLE.replace(r#""v": "c", "cost""#, r#""v": "d", "cost""#);
        let err = parse_instance(&unknown).unwrap_err();
        assert!(matches!(&err, Error::Parse { location, .. } if location == "edges[1].v"), "{err}");

        let negative = TRIANGLE.replace(r#""r": 1}
  ]"#, r#""r": -1}
  ]"#);
        let err = parse_instance(&negative).unwrap_err();
        assert!(matches!(&err, Error::Parse { location, .. } if location.starts_with("line 11")), "{err}");

        let cost = TRIANGLE.replace(r#""cost": 1}
  ]"#, r#""cost": -2}
  ]"#);
        assert!(parse_instance(&cost).is_err());
        assert_eq!(parse_instance("{").unwrap_err().exit_code(), 1);
    }

    #[test]
    fn parallel_edges_are_kept() {
        let text = TRIANGLE.replace(r#"{"u": "a", "v": "c", "cost": 1}"#, r#"{"u": "a", "v": "b", "cost": 2}"#);
        let inst = parse_instance(&text).unwrap();
        assert_eq!(inst.graph.num_edges(), 3);
        assert_eq!(inst.graph.edges()[0].u, inst.graph.edges()[2].u);
        assert_eq!(inst.graph.edges()[0].v, inst.graph.edges()[2].v);
    }

    #[test]
    fn round_trip() {
        let file = generate_instance(3, 6, 0.5, 2).unwrap();
        assert_eq!(InstanceFile::parse(&file.to_json()).unwrap(), file);
        let tri = InstanceFile::parse(TRIANGLE).unwrap();
        assert_eq!(InstanceFile::parse(&tri.to_json()).unwrap(), tri);
    }

    #[test]
    fn generator_examples() {
        assert_eq!(
            generate_instance(1, 5, 0.4, 2).unwrap().to_json(),
            generate_instance(1, 5, 0.4, 2).unwrap().to_json()
        );
        let k4 = generate_instance(9, 4, 1.0, 1).unwrap().validate().unwrap();
        assert_eq!(k4.graph.num_edges(), 6);
        for seed in 0..20 {
            let g = generate_instance(seed, 8, 0.1, 3).unwrap().validate().unwrap();
            let ones = EdgeWeights::uniform(g.graph.num_edges(), 1u64);
            assert!(crate::rounding::verify_integral(&g.graph, &RequirementMatrix::uniform(8, 1), &ones).unwrap());
            assert!(g.requirements.max_value() <= 3);
        }
        assert!(generate_instance(0, 1, 0.5, 1).is_err());
        assert!(generate_instance(0, 3, 0.0, 1).is_err());
    }

    #[test]
    fn zero_requirements_cost_nothing() {
        let inst = generate_instance(2, 5, 0.5, 0).unwrap().validate().unwrap();
        let rep = run(&RunConfig::new(Mode::Solve, 0.5), Some(&inst)).unwrap();
        assert_eq!(rep.body["result"]["cost"], 0.0);
        assert!(multiplicities(&rep).unwrap().values().iter().all(|&z| z == 0));
    }

    #[test]
    fn triangle_runs() {
        let inst = parse_instance(TRIANGLE).unwrap();
        let rep = run(&RunConfig::new(Mode::Solve, 0.1), Some(&inst)).unwrap();
        let result = &rep.body["result"];
        assert_eq!(result["cost"], 2.0);
        let ratio = result["certified_ratio"].as_f64().unwrap();
        assert!(ratio <= 2.0 * 1.1);
        assert!(result["lp_lower_bound"].as_f64().unwrap() <= 1.5 + 1e-9);

        let lp = run(&RunConfig::new(Mode::LpOnly, 0.1), Some(&inst)).unwrap();
        let primal = lp.body["result"]["primal"].as_f64().unwrap();
        let dual = lp.body["result"]["dual"].as_f64().unwrap();
        assert!((1.5 - 1e-9..=1.5 * 1.1).contains(&primal));
        assert!(dual <= 1.5 + 1e-9);
    }

    #[test]
    fn reports_are_deterministic() {
        let inst = generate_instance(5, 6, 0.6, 2).unwrap().validate().unwrap();
        let mut cfg = RunConfig::new(Mode::Solve, 0.5);
        let a = run(&cfg, Some(&inst)).unwrap();
        cfg.jobs = 3;
        let b = run(&cfg, Some(&inst)).unwrap();
        assert_eq!(a.render_body(), b.render_body());
        assert!(a.render().contains("\"timing\""));
    }
}
