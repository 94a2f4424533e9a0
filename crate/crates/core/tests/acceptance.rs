//! Acceptance suite. Runs every criterion, prints one line each, and exits
//! non-zero if any failed.

mod common;

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::*;
use meshloc::bus::{throttle_check, TokenBucket, Transport};
use meshloc::loc::{
    model_range, propagate_localization, range_jacobian_row, Altitude, CoordinateFrame, PositionEstimate, RangeGraph,
    SolveMode, SolverConfig,
};
use meshloc::mesh::MeshConfig;
use meshloc::model::ClockModel;
use meshloc::scenario::{BoxSpec, InterferenceSpec};
use meshloc::sim::graph::GraphMesh;
use meshloc::sim::{SimTime, Simulation};
use meshloc::uwb::{simulate_exchange, SPEED_OF_LIGHT};
use meshloc::{NodeId, Position, ScenarioFile};

type Outcome = Result<String, String>;

struct Criterion {
    id: u32,
    name: &'static str,
    budget: Duration,
    run: fn() -> Outcome,
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn p2(x: f64, y: f64) -> Position {
    Position::new(x, y, 0.0)
}

// 1 ------------------------------------------------------------------------

fn ds_twr_exactness() -> Outcome {
    let clock = ClockModel::default();
    let mut worst = 0.0f64;
    for d in [1.0, 10.0, 50.0] {
        let (_, est) =
            simulate_exchange(&clock, &clock, d / SPEED_OF_LIGHT, 300_000.0, 300_000.0).map_err(|e| e.to_string())?;
        worst = worst.max((est - d).abs());

        // same check through the event kernel's session state machine
        let mut f = scenario(
            1.0,
            11,
            vec![node(1, [0.0, 0.0, 0.0], false), node(2, [d, 0.0, 0.0], false)],
        );
        f.channel.uwb.sigma_los_m = 0.0;
        f.channel.link.reference_range_m = 100.0;
        f.protocol.turnaround_jitter_us = 0.0;
        let mut sim = Simulation::new(f.build().map_err(|e| e.to_string())?);
        sim.run_until(SimTime::from_secs(1.0));
        let g = sim.range_graph();
        let samples: Vec<f64> = g
            .samples(NodeId(1), NodeId(2))
            .into_iter()
            .chain(g.samples(NodeId(2), NodeId(1)))
            .collect();
        if samples.is_empty() {
            return Err(format!("no kernel session completed at d={d}"));
        }
        for s in samples {
            worst = worst.max((s - d).abs());
        }
    }
    check(worst <= 1e-9, format!("max |error| = {worst:.3e} m (limit 1e-9)"))
}

// 2 ------------------------------------------------------------------------

fn big(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

/// Exact estimator output for constant-rate clocks, in meters.
fn exact_distance(ppm_a: i64, ppm_b: i64, reply_a_ns: i64, reply_b_ns: i64, d_m: i64) -> BigRational {
    let million = big(1_000_000);
    let ka = (big(1_000_000) + big(ppm_a)) / &million;
    let kb = (big(1_000_000) + big(ppm_b)) / &million;
    // c = 299792458 m/s = 0.299792458 m/ns
    let c = big(299_792_458) / big(1_000_000_000);
    let tof = big(d_m) / &c;
    let (da, db) = (big(reply_a_ns), big(reply_b_ns));
    let two = big(2);
    let round_a = &ka * (&two * &tof + &db);
    let reply_a = &ka * &da;
    let round_b = &kb * (&two * &tof + &da);
    let reply_b = &kb * &db;
    let num = &round_a * &round_b - &reply_a * &reply_b;
    let den = &round_a + &round_b + &reply_a + &reply_b;
    num / den * c
}

fn to_f64(r: &BigRational) -> f64 {
    // 1e-15 m resolution is far below anything compared here
    let scaled = (r * big(1_000_000_000_000_000)).round().to_integer();
    scaled.to_string().parse::<f64>().expect("integer") / 1e15
}

struct SweepResult {
    worst_vs_truth: f64,
    worst_at: (i64, i64, i64, i64, i64),
    worst_vs_oracle: f64,
    points: usize,
}

fn drift_sweep() -> SweepResult {
    let drifts: Vec<i64> = (-5..=5).map(|k| 10 * k).collect();
    let replies = [100_000i64, 500_000, 1_000_000];
    let ranges = [1i64, 10, 30, 60];
    let mut r = SweepResult {
        worst_vs_truth: 0.0,
        worst_at: (0, 0, 0, 0, 0),
        worst_vs_oracle: 0.0,
        points: 0,
    };
    for &pa in &drifts {
        for &pb in &drifts {
            for &da in &replies {
                for &db in &replies {
                    for &d in &ranges {
                        let ca = ClockModel {
                            offset_ns: 12_345.0,
                            drift_ppm: pa as f64,
                        };
                        let cb = ClockModel {
                            offset_ns: -987.0,
                            drift_ppm: pb as f64,
                        };
                        let (_, est) =
                            simulate_exchange(&ca, &cb, d as f64 / SPEED_OF_LIGHT, da as f64, db as f64).unwrap();
                        let oracle = to_f64(&exact_distance(pa, pb, da, db, d));
                        let err = (est - d as f64).abs();
                        if err > r.worst_vs_truth {
                            r.worst_vs_truth = err;
                            r.worst_at = (pa, pb, da, db, d);
                        }
                        r.worst_vs_oracle = r.worst_vs_oracle.max((est - oracle).abs());
                        r.points += 1;
                    }
                }
            }
        }
    }
    r
}

fn ds_twr_drift_sweep() -> Outcome {
    let r = drift_sweep();
    let (pa, pb, da, db, d) = r.worst_at;
    let detail = format!(
        "{} points; implementation vs exact oracle {:.1e} m; worst clock-induced error {:.3} mm at \
         drift ({pa},{pb}) ppm, replies ({},{}) us, {d} m (limit 1 mm)",
        r.points,
        r.worst_vs_oracle,
        r.worst_vs_truth * 1e3,
        da / 1000,
        db / 1000
    );
    if r.worst_vs_oracle > 1e-9 {
        return Err(format!("implementation disagrees with the exact oracle: {detail}"));
    }
    check(r.worst_vs_truth <= 1e-3, detail)
}

// 3 ------------------------------------------------------------------------

fn five_node_graph() -> (RangeGraph, BTreeMap<NodeId, PositionEstimate>, BTreeSet<NodeId>) {
    let pos: BTreeMap<NodeId, Position> = [
        (1, p2(0.0, 0.0)),
        (2, p2(10.0, 0.0)),
        (3, p2(0.0, 10.0)),
        (4, p2(3.0, 4.0)),
        (5, p2(6.0, 6.0)),
    ]
    .into_iter()
    .map(|(i, p)| (NodeId(i), p))
    .collect();
    let mut g = RangeGraph::new(5);
    for (a, b) in [(1, 4), (2, 4), (3, 4), (2, 5), (3, 5), (4, 5)] {
        let (a, b) = (NodeId(a), NodeId(b));
        g.push(a, b, pos[&a].distance(&pos[&b]), 0.0);
    }
    let seeds: BTreeSet<NodeId> = [1, 2, 3].map(NodeId).into_iter().collect();
    let est = pos
        .iter()
        .map(|(id, p)| {
            let e = if seeds.contains(id) {
                PositionEstimate::seed(*p, CoordinateFrame::Global)
            } else {
                PositionEstimate::unlocalized()
            };
            (*id, e)
        })
        .collect();
    (g, est, seeds)
}

fn localization_consistency() -> Outcome {
    let (g, est, seeds) = five_node_graph();
    let alts: BTreeMap<NodeId, Altitude> = (1..=5).map(|i| (NodeId(i), Altitude { z: 0.0, sigma: 0.0 })).collect();
    let out = propagate_localization(&g, &est, &seeds, &alts, &SolverConfig::default());
    let d = out[&NodeId(4)];
    let e = out[&NodeId(5)];
    if !(d.localized && e.localized) {
        return Err("D or E not localized".into());
    }
    let ed = d.position.distance(&p2(3.0, 4.0));
    let ee = e.position.distance(&p2(6.0, 6.0));
    check(
        ed <= 1e-5 && ee <= 1e-5 && d.hop_depth == 1 && e.hop_depth == 2,
        format!(
            "D err {ed:.1e} m hop {}, E err {ee:.1e} m hop {}",
            d.hop_depth, e.hop_depth
        ),
    )
}

// 4 ------------------------------------------------------------------------

fn noise_convergence() -> Outcome {
    let sigmas = [0.10, 0.05, 0.01, 0.0];
    let mut pooled = Vec::new();
    let mut lines = Vec::new();
    let mut ok = true;
    for &sigma in &sigmas {
        let mut sq = 0.0;
        let mut worst = 0.0f64;
        for seed in 0..20u64 {
            let f = five_node(30.0, 1000 + seed, sigma);
            let report = Simulation::new(f.build().map_err(|e| e.to_string())?).run();
            let Some(rmse) = report.summary.rmse_m else {
                return Err(format!("sigma {sigma}, seed {seed}: nothing localized"));
            };
            if rmse >= 3.0 * sigma + 1e-5 {
                ok = false;
            }
            worst = worst.max(rmse);
            sq += rmse * rmse;
        }
        let level = (sq / 20.0).sqrt();
        pooled.push(level);
        lines.push(format!("sigma {sigma}: rmse {level:.2e} (worst seed {worst:.2e})"));
    }
    let monotone = pooled.windows(2).all(|w| w[1] <= w[0]);
    check(ok && monotone, lines.join("; "))
}

// 5 ------------------------------------------------------------------------

fn bfs(adj: &BTreeMap<NodeId, BTreeSet<NodeId>>, src: NodeId) -> BTreeMap<NodeId, usize> {
    let mut dist = BTreeMap::from([(src, 0)]);
    let mut q = VecDeque::from([src]);
    while let Some(u) = q.pop_front() {
        for v in &adj[&u] {
            if !dist.contains_key(v) {
                dist.insert(*v, dist[&u] + 1);
                q.push_back(*v);
            }
        }
    }
    dist
}

fn adjacency(nodes: &[NodeId], edges: &[(NodeId, NodeId)]) -> BTreeMap<NodeId, BTreeSet<NodeId>> {
    let mut adj: BTreeMap<NodeId, BTreeSet<NodeId>> = nodes.iter().map(|n| (*n, BTreeSet::new())).collect();
    for (a, b) in edges {
        adj.get_mut(a).unwrap().insert(*b);
        adj.get_mut(b).unwrap().insert(*a);
    }
    adj
}

fn routing_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut graphs = 0;
    let mut pairs = 0;
    while graphs < 50 {
        let n: u16 = rng.random_range(2..=8);
        let nodes: Vec<NodeId> = (1..=n).map(NodeId).collect();
        let density: f64 = rng.random_range(0.2..0.7);
        let mut edges = Vec::new();
        for i in 0..nodes.len() {
            for j in i + 1..nodes.len() {
                if rng.random::<f64>() < density {
                    edges.push((nodes[i], nodes[j]));
                }
            }
        }
        let adj = adjacency(&nodes, &edges);
        if bfs(&adj, nodes[0]).len() != nodes.len() {
            continue;
        }
        graphs += 1;
        let mut mesh = GraphMesh::new(&nodes, &edges, MeshConfig::default());
        mesh.run_intervals(5);
        for &u in &nodes {
            for &v in &nodes {
                if u == v {
                    continue;
                }
                pairs += 1;
                let dist_v = bfs(&adj, v);
                let Some(h) = mesh.next_hop(u, v) else {
                    return Err(format!("graph {graphs}: no route {u}->{v}"));
                };
                if !adj[&u].contains(&h) || dist_v[&h] + 1 != dist_v[&u] {
                    return Err(format!(
                        "graph {graphs}: next hop {h} for {u}->{v} is not on a shortest path (edges {edges:?})"
                    ));
                }
            }
        }
    }
    Ok(format!("{graphs} graphs, {pairs} ordered pairs on minimum-hop paths"))
}

// 6 ------------------------------------------------------------------------

fn discovery_convergence() -> Outcome {
    let reach = 20.0;
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut graphs = 0;
    while graphs < 20 {
        let pts: Vec<[f64; 3]> = (0..10)
            .map(|_| [rng.random_range(0.0..50.0), rng.random_range(0.0..50.0), 0.0])
            .collect();
        let dist = |a: &[f64; 3], b: &[f64; 3]| ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt();
        // keep every pair clearly inside or outside the link edge
        if pts
            .iter()
            .enumerate()
            .any(|(i, a)| pts[i + 1..].iter().any(|b| (dist(a, b) - reach).abs() < 0.5))
        {
            continue;
        }
        graphs += 1;
        let nodes: Vec<NodeId> = (1..=10).map(NodeId).collect();
        let mut edges = Vec::new();
        for i in 0..10 {
            for j in i + 1..10 {
                if dist(&pts[i], &pts[j]) < reach {
                    edges.push((nodes[i], nodes[j]));
                }
            }
        }
        let adj = adjacency(&nodes, &edges);

        let mut f = scenario(
            10.0,
            graphs as u64,
            pts.iter()
                .enumerate()
                .map(|(i, p)| node(i as u16 + 1, *p, false))
                .collect(),
        );
        f.channel.link.reference_range_m = reach;
        f.channel.link.falloff_m = 0.01;
        f.protocol.ranging_rate_hz = 0.0;
        let interval = f.protocol.ogm_interval_s;
        let mut sim = Simulation::new(f.build().map_err(|e| e.to_string())?);
        sim.run_until(SimTime::from_secs(3.0 * interval));
        for &u in &nodes {
            let mut expect: BTreeSet<NodeId> = bfs(&adj, u).into_keys().collect();
            expect.remove(&u);
            let got = sim.discovered_peers(u);
            if got != expect {
                return Err(format!(
                    "graph {graphs}, node {u}: discovered {got:?}, component {expect:?}"
                ));
            }
        }
    }
    Ok(format!(
        "{graphs} random geometric graphs converged within 3 OGM intervals"
    ))
}

// 7 ------------------------------------------------------------------------

fn delivery_ratio() -> Outcome {
    let mut f = scenario(
        105.0,
        77,
        vec![
            node(1, [0.0, 0.0, 0.0], false),
            node(2, [10.0, 0.0, 0.0], false),
            node(3, [20.0, 0.0, 0.0], false),
        ],
    );
    // links shorter than 15 m are perfect, longer ones absent; the
    // interference window then halves every link once routes are up
    f.channel.link.reference_range_m = 15.0;
    f.channel.link.falloff_m = 0.01;
    f.protocol.route_expiry_s = 1e4;
    f.protocol.peer_expiry_s = 1e4;
    f.protocol.ranging_rate_hz = 0.0;
    f.world.interference_windows.push(InterferenceSpec {
        start_s: 4.5,
        end_s: 1e4,
        region: BoxSpec {
            min: [-1.0, -1.0, -1.0],
            max: [21.0, 1.0, 1.0],
        },
        attenuation: 0.5,
    });
    let mut t = topic("bulk", Transport::Mesh, &[1], &[3]);
    t.publish_hz = 100.0;
    t.start_s = 5.0;
    f.topics.push(t);
    let sim = Simulation::new(f.build().map_err(|e| e.to_string())?);
    let report = sim.run();
    let c = report.topic("bulk").unwrap().counters;
    if c.published != 10_000 || c.dispatched != 10_000 {
        return Err(format!("expected 10000 dispatched publishes, got {c:?}"));
    }
    let pdr = c.delivered as f64 / c.published as f64;
    let sd = (0.25f64 * 0.75 / 10_000.0).sqrt();
    check(
        (pdr - 0.25).abs() <= 3.0 * sd && c.is_conserved(),
        format!("PDR {pdr:.4} vs 0.25 +/- {:.4} (3 sd)", 3.0 * sd),
    )
}

// 8 ------------------------------------------------------------------------

fn throttle_bound() -> Outcome {
    let mut b = TokenBucket::new(5.0, 1, 0.0);
    let accepted: Vec<f64> = [0.0, 0.1, 0.2, 0.3]
        .into_iter()
        .filter(|t| throttle_check(&mut b, *t))
        .collect();
    if accepted != [0.0, 0.2] {
        return Err(format!("hand example accepted {accepted:?}, expected [0, 0.2]"));
    }
    let (rate, burst) = (5.0, 2.0);
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut windows = 0u64;
    for _ in 0..200 {
        let mut t = 0.0;
        let mut b = TokenBucket::new(rate, 2, 0.0);
        let mut acc = Vec::new();
        for _ in 0..300 {
            t += match rng.random_range(0..3) {
                0 => 0.0,
                1 => rng.random_range(0.0..0.05),
                _ => rng.random_range(0.0..1.0),
            };
            if throttle_check(&mut b, t) {
                acc.push(t);
            }
        }
        // the tightest windows start and end on accepted messages
        for i in 0..acc.len() {
            for j in i..acc.len() {
                windows += 1;
                let count = (j - i + 1) as f64;
                if count > burst + rate * (acc[j] - acc[i]) + 1e-9 {
                    return Err(format!("{count} accepted in [{}, {}]", acc[i], acc[j]));
                }
            }
        }
    }
    Ok(format!("hand example exact; {windows} windows within burst + rate*T"))
}

// 9 ------------------------------------------------------------------------

fn situated_locality() -> Outcome {
    let mut f = scenario(
        20.0,
        9,
        vec![
            node(1, [0.0, 0.0, 0.0], false),
            node(2, [40.0, 0.0, 0.0], false),
            node(3, [80.0, 0.0, 0.0], false),
        ],
    );
    f.channel.link.falloff_m = 1.0;
    f.topics.push(topic("signal", Transport::UwbEmbedded, &[1], &[3]));
    f.topics.push(topic("bulk", Transport::Mesh, &[1], &[3]));
    let mut sim = Simulation::new(f.build().map_err(|e| e.to_string())?);
    sim.run_until(SimTime::from_secs(20.0));
    let knows_f = sim
        .bus(NodeId(1))
        .unwrap()
        .known_subscribers(1, 20.0, 10.0)
        .contains(&NodeId(3));
    let uwb = sim.delivered_to(1, NodeId(3));
    let mesh = sim.delivered_to(2, NodeId(3));
    let report = sim.finish();
    let sig = report.topic("signal").unwrap().counters;
    check(
        knows_f && sig.dispatched > 0 && uwb == 0 && sig.delivered == 0 && mesh > 0,
        format!(
            "F discovered by P: {knows_f}; UWB copies dispatched {} delivered {uwb}; mesh delivered {mesh}",
            sig.dispatched
        ),
    )
}

// 10 -----------------------------------------------------------------------

fn bundled_scenarios() -> Vec<PathBuf> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios");
    let mut v: Vec<PathBuf> = std::fs::read_dir(&dir)
        .map(|rd| rd.filter_map(|e| e.ok().map(|e| e.path())).collect())
        .unwrap_or_default();
    v.retain(|p| p.extension().is_some_and(|e| e == "json"));
    v.sort();
    v
}

fn determinism() -> Outcome {
    let files = bundled_scenarios();
    if files.is_empty() {
        return Err("no bundled scenarios found".into());
    }
    for path in &files {
        let bytes = std::fs::read(path).map_err(|e| e.to_string())?;
        let f = ScenarioFile::from_json(&bytes).map_err(|e| format!("{}: {e}", path.display()))?;
        let a = Simulation::new(f.build().unwrap()).run();
        let b = Simulation::new(f.build().unwrap()).run();
        if a.csv_string() != b.csv_string() || a.summary_json() != b.summary_json() {
            return Err(format!("{} differs between runs", path.display()));
        }
    }
    Ok(format!("{} bundled scenarios byte-identical across runs", files.len()))
}

// 11 -----------------------------------------------------------------------

fn gradient_check() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let h = 1e-6;
    let mut worst = 0.0f64;
    let mut n = 0;
    while n < 1000 {
        let mode = if n % 2 == 0 {
            SolveMode::Planar2D
        } else {
            SolveMode::Full3D
        };
        let mut pt = || {
            Position::new(
                rng.random_range(-20.0..20.0),
                rng.random_range(-20.0..20.0),
                rng.random_range(-5.0..5.0),
            )
        };
        let (x, a) = (pt(), pt());
        if model_range(&x, &a, mode) < 0.5 {
            continue;
        }
        n += 1;
        let j = range_jacobian_row(&x, &a, mode).ok_or("undefined Jacobian at a non-degenerate point")?;
        let mut fd = [0.0; 3];
        for (k, slot) in fd.iter_mut().enumerate().take(mode.dims()) {
            let mut e = [0.0; 3];
            e[k] = h;
            let plus = x + Position::from(e);
            let minus = x - Position::from(e);
            *slot = (model_range(&plus, &a, mode) - model_range(&minus, &a, mode)) / (2.0 * h);
        }
        let diff = (0..3).map(|k| (j[k] - fd[k]).powi(2)).sum::<f64>().sqrt();
        let norm = (0..3).map(|k| j[k].powi(2)).sum::<f64>().sqrt();
        worst = worst.max(diff / norm);
    }
    check(
        worst <= 1e-6,
        format!("{n} configurations, worst relative error {worst:.2e}"),
    )
}

fn main() {
    let criteria = [
        Criterion {
            id: 1,
            name: "DS-TWR algebraic exactness",
            budget: Duration::from_secs(1),
            run: ds_twr_exactness,
        },
        Criterion {
            id: 2,
            name: "DS-TWR drift sweep",
            budget: Duration::from_secs(5),
            run: ds_twr_drift_sweep,
        },
        Criterion {
            id: 3,
            name: "localization consistency",
            budget: Duration::from_secs(1),
            run: localization_consistency,
        },
        Criterion {
            id: 4,
            name: "noise convergence",
            budget: Duration::from_secs(30),
            run: noise_convergence,
        },
        Criterion {
            id: 5,
            name: "routing oracle",
            budget: Duration::from_secs(10),
            run: routing_oracle,
        },
        Criterion {
            id: 6,
            name: "discovery convergence",
            budget: Duration::from_secs(10),
            run: discovery_convergence,
        },
        Criterion {
            id: 7,
            name: "delivery ratio",
            budget: Duration::from_secs(10),
            run: delivery_ratio,
        },
        Criterion {
            id: 8,
            name: "throttle bound",
            budget: Duration::from_secs(1),
            run: throttle_bound,
        },
        Criterion {
            id: 9,
            name: "situated-communication locality",
            budget: Duration::from_secs(5),
            run: situated_locality,
        },
        Criterion {
            id: 10,
            name: "determinism",
            budget: Duration::from_secs(60),
            run: determinism,
        },
        Criterion {
            id: 11,
            name: "solver gradient check",
            budget: Duration::from_secs(5),
            run: gradient_check,
        },
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for c in &criteria {
        if !filter.is_empty()
            && !filter
                .iter()
                .any(|f| c.name.contains(f.as_str()) || c.id.to_string() == *f)
        {
            continue;
        }
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(c.run)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let elapsed = start.elapsed();
        let (pass, detail) = match outcome {
            Ok(d) if elapsed <= c.budget => (true, d),
            Ok(d) => (false, format!("{d}; took {elapsed:.2?}, budget {:?}", c.budget)),
            Err(d) => (false, d),
        };
        if !pass {
            failed += 1;
        }
        println!(
            "criterion {:>2} {:<32} {}  [{:.2?}] {}",
            c.id,
            c.name,
            if pass { "PASS" } else { "FAIL" },
            elapsed,
            detail
        );
    }
    if failed > 0 {
        println!("{failed} criterion(s) failed");
        std::process::exit(1);
    }
}
