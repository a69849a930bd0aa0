use std::io::{Read, Write};
use std::path::Path;

use anyhow::{Context, Result};
use carpool_core::auction::AuctionConfig;
use carpool_core::equilibrium::{
    solve_market, verify_equilibrium, EquilibriumReport, Solution, SolveOptions,
};
use carpool_core::generate::{instance_from_seed, GeneratorConfig};
use carpool_core::network::{decompose_series_parallel, greedy_route_capacities, network_capacity};
use carpool_core::oracle::{brute_force_ip, solve_lp_relaxation};
use carpool_core::preferences::GsViolation;
use carpool_core::rational::{to_decimal_string, to_exact_string};
use carpool_core::vcg::vcg_equilibrium;
use carpool_core::{MarketInstance, Rational};
use serde::Serialize;

use crate::document::*;

pub const EXIT_OK: u8 = 0;
pub const EXIT_ERROR: u8 = 1;
pub const EXIT_NO_EQUILIBRIUM: u8 = 2;

pub fn read_input(path: &Path) -> Result<String> {
    if path == Path::new("-") {
        let mut text = String::new();
        std::io::stdin()
            .read_to_string(&mut text)
            .context("reading stdin")?;
        return Ok(text);
    }
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

pub fn load_instance(path: &Path, max_routes: usize) -> Result<MarketInstance> {
    let doc =
        InstanceDocument::parse(&read_input(path)?).with_context(|| path.display().to_string())?;
    doc.into_instance(max_routes)
        .with_context(|| path.display().to_string())
}

fn emit<T: Serialize>(value: &T, output: Option<&Path>) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    match output {
        Some(path) => {
            std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
        }
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn show(v: &Rational, float: bool) -> String {
    if float {
        to_decimal_string(v, 4)
    } else {
        to_exact_string(v)
    }
}

pub struct SolveFlags<'a> {
    pub vcg: bool,
    pub epsilon: Option<Rational>,
    pub seed: Option<u64>,
    pub float: bool,
    pub force_auction: bool,
    pub output: Option<&'a Path>,
}

pub fn solve(instance: &MarketInstance, flags: &SolveFlags) -> Result<u8> {
    let options = SolveOptions {
        auction: AuctionConfig {
            epsilon: flags.epsilon.clone(),
        },
        force_auction: flags.force_auction,
        ..SolveOptions::default()
    };
    let solved = solve_market(instance, &options)?;
    let mechanism = if flags.vcg {
        Mechanism::Vcg
    } else {
        Mechanism::Dual
    };
    let mut doc = ResultDocument {
        status: Status::NoEquilibrium,
        mechanism,
        seed: flags.seed,
        trips: None,
        payments: None,
        tolls: None,
        utilities: None,
        counterfactual_welfare: None,
        welfare: None,
        report: None,
        diagnostics: solved.diagnostics,
    };
    let Solution::Equilibrium {
        mut outcome,
        mut utilities,
        mut report,
    } = solved.solution
    else {
        emit(&doc, flags.output)?;
        eprintln!(
            "no equilibrium: LP optimum {} exceeds integer optimum {}",
            doc.diagnostics
                .lp_optimum
                .as_ref()
                .map_or("?".into(), |v| show(v, flags.float)),
            doc.diagnostics
                .ip_optimum
                .as_ref()
                .map_or("?".into(), |v| show(v, flags.float)),
        );
        return Ok(EXIT_NO_EQUILIBRIUM);
    };
    if flags.vcg {
        let v = vcg_equilibrium(instance)?;
        outcome = v.outcome();
        utilities = v.utilities.clone();
        report = verify_equilibrium(&outcome, instance)?;
        doc.counterfactual_welfare = Some(by_rider(&v.counterfactual_welfare, instance));
    }
    let welfare = outcome.trips.welfare(instance)?;
    doc.status = if report.all_hold() {
        Status::Equilibrium
    } else {
        Status::VerificationFailed
    };
    doc.trips = Some(trip_docs(&outcome.trips, instance)?);
    doc.payments = Some(by_rider(&outcome.payments, instance));
    doc.tolls = Some(by_edge(&outcome.tolls, instance));
    doc.utilities = Some(by_rider(&utilities, instance));
    doc.welfare = Some(Num(welfare.clone()));
    let ok = report.all_hold();
    doc.report = Some(report.clone());
    emit(&doc, flags.output)?;

    eprintln!(
        "{}: {} trips, welfare {}",
        if ok {
            "equilibrium"
        } else {
            "verification failed"
        },
        outcome.trips.trips().len(),
        show(&welfare, flags.float)
    );
    let network = instance.network();
    for t in outcome.trips.trips() {
        let ids: Vec<&str> = t
            .group
            .members()
            .iter()
            .map(|&m| instance.rider(m).id.as_str())
            .collect();
        eprintln!("  {} on {}", ids.join(","), network.route_label(t.route));
    }
    for (m, r) in instance.riders().iter().enumerate() {
        eprintln!(
            "  rider {}: pays {}, utility {}",
            r.id,
            show(&outcome.payments[m], flags.float),
            show(&utilities[m], flags.float)
        );
    }
    for (e, edge) in network.edges().iter().enumerate() {
        if outcome.tolls[e] != Rational::from_integer(Default::default()) {
            eprintln!(
                "  toll {}: {}",
                edge.id,
                show(&outcome.tolls[e], flags.float)
            );
        }
    }
    print_failures(&report);
    Ok(if ok { EXIT_OK } else { EXIT_ERROR })
}

fn print_failures(report: &EquilibriumReport) {
    for (name, ok) in report.flags() {
        if !ok {
            eprintln!("  FAILED {name}");
        }
    }
}

pub fn verify(instance: &MarketInstance, outcome_path: &Path) -> Result<u8> {
    let doc = OutcomeDocument::parse(&read_input(outcome_path)?)
        .with_context(|| outcome_path.display().to_string())?;
    let outcome = doc.into_outcome(instance)?;
    let report = verify_equilibrium(&outcome, instance)?;
    emit(&report, None)?;
    print_failures(&report);
    Ok(if report.all_hold() {
        EXIT_OK
    } else {
        EXIT_ERROR
    })
}

pub struct InspectFlags {
    pub routes: bool,
    pub sp: bool,
    pub greedy: bool,
    pub gs_check: bool,
}

#[derive(Serialize)]
struct RouteDoc {
    route: String,
    travel_time: Num,
}

#[derive(Serialize)]
struct SeriesParallelDoc {
    series_parallel: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    decomposition: Option<String>,
    /// Edges left after every series and parallel reduction.
    #[serde(skip_serializing_if = "Option::is_none")]
    irreducible_edges: Option<Vec<String>>,
}

#[derive(Serialize)]
struct CapacityDoc {
    route: String,
    capacity: u64,
}

#[derive(Serialize)]
struct GreedyDoc {
    routes: Vec<CapacityDoc>,
    total: u64,
    network_capacity: u64,
}

#[derive(Serialize)]
struct GsDoc {
    route: String,
    holds: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    submodularity: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    exchange: Option<String>,
}

#[derive(Serialize, Default)]
struct InspectDocument {
    #[serde(skip_serializing_if = "Option::is_none")]
    routes: Option<Vec<RouteDoc>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    series_parallel: Option<SeriesParallelDoc>,
    #[serde(skip_serializing_if = "Option::is_none")]
    greedy: Option<GreedyDoc>,
    #[serde(skip_serializing_if = "Option::is_none")]
    gross_substitutes: Option<Vec<GsDoc>>,
}

fn describe(instance: &MarketInstance, v: &GsViolation) -> String {
    let name = |m: usize| instance.rider(m).id.clone();
    let names = |g: &carpool_core::Group| {
        g.members()
            .iter()
            .map(|&m| name(m))
            .collect::<Vec<_>>()
            .join(",")
    };
    match v {
        GsViolation::Submodularity {
            smaller,
            larger,
            rider,
        } => format!(
            "adding {} to {{{}}} gains more than adding it to {{{}}}",
            name(*rider),
            names(larger),
            names(smaller)
        ),
        GsViolation::Exchange { base, i, j, k } => format!(
            "base {{{}}} with i={} j={} k={}",
            names(base),
            name(*i),
            name(*j),
            name(*k)
        ),
    }
}

pub fn inspect(instance: &MarketInstance, flags: &InspectFlags) -> Result<u8> {
    let all = !(flags.routes || flags.sp || flags.greedy || flags.gs_check);
    let network = instance.network();
    let mut doc = InspectDocument::default();
    let mut text = String::new();
    if all || flags.routes {
        let routes: Vec<RouteDoc> = network
            .routes()
            .iter()
            .enumerate()
            .map(|(r, route)| RouteDoc {
                route: network.route_label(r),
                travel_time: Num(route.travel_time.clone()),
            })
            .collect();
        text.push_str(&format!("routes ({}):\n", routes.len()));
        for r in &routes {
            text.push_str(&format!(
                "  {} t={}\n",
                r.route,
                to_exact_string(&r.travel_time.0)
            ));
        }
        doc.routes = Some(routes);
    }
    if all || flags.sp {
        let sp = match decompose_series_parallel(network) {
            Ok(tree) => {
                let rendered = tree.render(network);
                text.push_str(&format!("series-parallel: {rendered}\n"));
                SeriesParallelDoc {
                    series_parallel: true,
                    decomposition: Some(rendered),
                    irreducible_edges: None,
                }
            }
            Err(e) => {
                let ids: Vec<String> = e
                    .witness
                    .iter()
                    .map(|&i| network.edge(i).id.clone())
                    .collect();
                text.push_str(&format!(
                    "not series-parallel; irreducible edges: {}\n",
                    ids.join(", ")
                ));
                SeriesParallelDoc {
                    series_parallel: false,
                    decomposition: None,
                    irreducible_edges: Some(ids),
                }
            }
        };
        doc.series_parallel = Some(sp);
    }
    if all || flags.greedy {
        let k = greedy_route_capacities(network);
        let greedy = GreedyDoc {
            routes: k
                .support()
                .into_iter()
                .map(|r| CapacityDoc {
                    route: network.route_label(r),
                    capacity: k.get(r),
                })
                .collect(),
            total: k.total(),
            network_capacity: network_capacity(network),
        };
        text.push_str("greedy route capacities:\n");
        for c in &greedy.routes {
            text.push_str(&format!("  {} k={}\n", c.route, c.capacity));
        }
        text.push_str(&format!(
            "  total {} of network capacity {}\n",
            greedy.total, greedy.network_capacity
        ));
        doc.greedy = Some(greedy);
    }
    if all || flags.gs_check {
        let riders = instance.all_riders();
        let mut checks = Vec::new();
        text.push_str("gross substitutes:\n");
        for r in 0..network.routes().len() {
            let submodularity = instance
                .check_submodularity(r, &riders)?
                .map(|v| describe(instance, &v));
            let exchange = instance
                .check_exchange(r, &riders)?
                .map(|v| describe(instance, &v));
            let check = GsDoc {
                route: network.route_label(r),
                holds: submodularity.is_none() && exchange.is_none(),
                submodularity,
                exchange,
            };
            text.push_str(&format!("  {}: ", check.route));
            if check.holds {
                text.push_str("holds");
            }
            if let Some(v) = &check.submodularity {
                text.push_str(&format!("submodularity fails: {v}; "));
            }
            if let Some(v) = &check.exchange {
                text.push_str(&format!("exchange fails: {v}"));
            }
            text.push('\n');
            checks.push(check);
        }
        doc.gross_substitutes = Some(checks);
    }
    emit(&doc, None)?;
    eprint!("{text}");
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct FractionalDoc {
    riders: Vec<String>,
    route: String,
    weight: Num,
}

#[derive(Serialize)]
struct OracleDocument {
    lp_optimum: Num,
    ip_optimum: Num,
    gap: Num,
    equilibrium_exists: bool,
    lp_integral: bool,
    lp_solution: Vec<FractionalDoc>,
    ip_trips: Vec<TripDoc>,
}

pub fn oracle(instance: &MarketInstance) -> Result<u8> {
    let (x, lp) = solve_lp_relaxation(instance)?;
    let (trips, ip) = brute_force_ip(instance)?;
    let network = instance.network();
    let doc = OracleDocument {
        gap: Num(&lp - &ip),
        equilibrium_exists: lp == ip,
        lp_integral: x.is_integral(),
        lp_solution: x
            .entries
            .iter()
            .map(|(g, r, w)| FractionalDoc {
                riders: g
                    .members()
                    .iter()
                    .map(|&m| instance.rider(m).id.clone())
                    .collect(),
                route: network.route_label(*r),
                weight: Num(w.clone()),
            })
            .collect(),
        ip_trips: trip_docs(&trips, instance)?,
        lp_optimum: Num(lp),
        ip_optimum: Num(ip),
    };
    emit(&doc, None)?;
    Ok(EXIT_OK)
}

pub fn generate(seed: u64) -> Result<u8> {
    let instance = instance_from_seed(seed, &GeneratorConfig::default());
    emit(&InstanceDocument::from_instance(&instance), None)?;
    Ok(EXIT_OK)
}
