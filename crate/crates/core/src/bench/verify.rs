//! Ad-hoc checks of explicit graph files against the exhaustive oracle.

use crate::graph::VertexId;
use crate::oracle::{
    evaluate_plan, optimal_inspection_plan, verify_near_optimal, ExplicitGraph, OracleError,
};
use crate::search::{Search, SearchConfig};
use std::fmt::Write as _;

pub const VERIFY_HEADER: &str = "source,coverage,length,vertices,near_optimal";

fn vertices(v: &[VertexId]) -> String {
    v.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(" ")
}

/// CSV report with the optimal plan, the search's plan for `(eps, p)`, and
/// optionally a caller-supplied plan, each checked against the optimum.
pub fn verify_report(
    g: &ExplicitGraph,
    eps: f64,
    p: f64,
    given: Option<&[VertexId]>,
) -> Result<String, OracleError> {
    let opt = optimal_inspection_plan(g)?;
    let mut s = String::from(VERIFY_HEADER);
    s.push('\n');
    let _ = writeln!(
        s,
        "optimal,{},{},{},true",
        opt.coverage.count(),
        opt.length,
        vertices(&opt.vertices)
    );
    let mut gg = g.fresh();
    match Search::new(SearchConfig::default()).run(&mut gg, g.start(), eps, p) {
        Some(plan) => {
            let ok = verify_near_optimal(g, &plan.vertices, eps, p)?;
            let _ = writeln!(
                s,
                "search,{},{},{},{ok}",
                plan.coverage.count(),
                plan.length,
                vertices(&plan.vertices)
            );
        }
        None => s.push_str("search,,,,false\n"),
    }
    if let Some(plan) = given {
        let (cov, len) = evaluate_plan(g, plan)?;
        let ok = verify_near_optimal(g, plan, eps, p)?;
        let _ = writeln!(s, "given,{},{},{},{ok}", cov.count(), len, vertices(plan));
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    const TRIANGLE: &str =
        "pois 2\nstart 0\nvertex\nvertex 0\nvertex 1\nedge 0 1 1\nedge 0 2 2\nedge 1 2 1\n";

    #[test]
    fn report_lists_optimum_search_and_given_plan() {
        let g = ExplicitGraph::parse(TRIANGLE).unwrap();
        let r = verify_report(&g, 0.0, 1.0, Some(&[0, 1])).unwrap();
        let lines: Vec<&str> = r.lines().collect();
        assert_eq!(lines[0], VERIFY_HEADER);
        assert_eq!(lines[1], "optimal,2,2,0 1 2,true");
        assert_eq!(lines[2], "search,2,2,0 1 2,true");
        assert_eq!(lines[3], "given,1,1,0 1,false");
    }
}
