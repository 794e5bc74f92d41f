//! Text formats for problem instances and JSON output for solutions.
//!
//! Ising files hold whitespace-separated `i j v` rows with 1-based spin
//! indices: `i != j` gives the coupling `J_ij`, `i == j` the field `h_i`.
//! Lines starting with `#` or `c` are comments.
//!
//! Potts files start with `P m n` and then hold node records `n r c s e`
//! and edge records `e r1 c1 r2 c2 s1 s2 e`, all indices 1-based.

use std::collections::{BTreeMap, HashSet};
use std::io::{BufRead, Write};

use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::ising::IsingGraph;
use crate::potts::PottsHamiltonian;
use crate::search::{Droplet, Solution};

fn is_comment(line: &str) -> bool {
    line.starts_with('#') || line.starts_with('c')
}

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

fn parse_index(tok: &str, line: usize) -> Result<usize> {
    let v: i64 = tok.parse().map_err(|_| parse_err(line, format!("'{tok}' is not an integer")))?;
    if v <= 0 {
        return Err(Error::Index(format!("line {line}: index {v} must be at least 1")));
    }
    usize::try_from(v).map_err(|_| Error::Index(format!("line {line}: index {v} too large")))
}

fn parse_real(tok: &str, line: usize) -> Result<f64> {
    let v: f64 = tok.parse().map_err(|_| parse_err(line, format!("'{tok}' is not a number")))?;
    if !v.is_finite() {
        return Err(parse_err(line, format!("'{tok}' is not finite")));
    }
    Ok(v)
}

/// Reads an Ising instance. The spin count is the largest index mentioned.
pub fn parse_ising(reader: impl BufRead) -> Result<IsingGraph> {
    let mut couplings = Vec::new();
    let mut fields = Vec::new();
    let mut seen = HashSet::new();
    let mut num_spins = 0;
    for (no, line) in reader.lines().enumerate() {
        let no = no + 1;
        let line = line?;
        let line = line.trim();
        if line.is_empty() || is_comment(line) {
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() != 3 {
            return Err(parse_err(no, format!("expected 'i j v', found {} tokens", toks.len())));
        }
        let i = parse_index(toks[0], no)?;
        let j = parse_index(toks[1], no)?;
        let v = parse_real(toks[2], no)?;
        let key = (i.min(j), i.max(j));
        if !seen.insert(key) {
            let what = if i == j { format!("field on spin {i}") } else { format!("coupling {}-{}", key.0, key.1) };
            return Err(Error::DuplicateEntry { line: no, what });
        }
        num_spins = num_spins.max(i).max(j);
        if i == j {
            fields.push((i - 1, v));
        } else {
            couplings.push((i - 1, j - 1, v));
        }
    }
    let mut g = IsingGraph::new(num_spins);
    for (i, j, v) in couplings {
        g.add_coupling(i, j, v)?;
    }
    for (i, v) in fields {
        g.set_field(i, v)?;
    }
    Ok(g)
}

pub fn parse_ising_str(text: &str) -> Result<IsingGraph> {
    parse_ising(text.as_bytes())
}

/// Writes `g` so that [`parse_ising`] reads it back bit for bit.
pub fn write_ising(g: &IsingGraph, mut out: impl Write) -> Result<()> {
    let n = g.num_spins();
    writeln!(out, "# {n} spins, {} couplings", g.num_couplings())?;
    let mut last_mentioned = 0;
    for ((i, j), v) in g.couplings() {
        writeln!(out, "{} {} {v}", i + 1, j + 1)?;
        last_mentioned = last_mentioned.max(j + 1);
    }
    for (i, &h) in g.fields().iter().enumerate() {
        if h.to_bits() != 0 || (i + 1 == n && last_mentioned < n) {
            writeln!(out, "{0} {0} {h}", i + 1)?;
        }
    }
    Ok(())
}

struct EdgeRecord {
    a: usize,
    b: usize,
    sa: usize,
    sb: usize,
    energy: f64,
    line: usize,
}

/// Reads a grid Potts instance. The number of states of a site is the
/// largest state index referenced there, or 1 for unreferenced sites.
pub fn parse_potts(reader: impl BufRead) -> Result<PottsHamiltonian> {
    let mut dims_decl: Option<(usize, usize)> = None;
    let mut nodes = Vec::new();
    let mut edges: Vec<EdgeRecord> = Vec::new();
    let mut site_dims: Vec<usize> = Vec::new();
    let mut seen_nodes = HashSet::new();
    let mut seen_edges = HashSet::new();
    for (no, line) in reader.lines().enumerate() {
        let no = no + 1;
        let line = line?;
        let line = line.trim();
        if line.is_empty() || is_comment(line) {
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        let Some((m, n)) = dims_decl else {
            if toks.len() != 3 || toks[0] != "P" {
                return Err(parse_err(no, "expected header 'P rows cols'"));
            }
            let (m, n) = (parse_index(toks[1], no)?, parse_index(toks[2], no)?);
            dims_decl = Some((m, n));
            site_dims = vec![1; m * n];
            continue;
        };
        let site = |r: &str, c: &str| -> Result<usize> {
            let (r, c) = (parse_index(r, no)?, parse_index(c, no)?);
            if r > m || c > n {
                return Err(Error::Index(format!("line {no}: site ({r}, {c}) outside the {m}x{n} grid")));
            }
            Ok((r - 1) * n + (c - 1))
        };
        match toks[0] {
            "n" => {
                if toks.len() != 5 {
                    return Err(parse_err(no, "node record needs 'n r c s e'"));
                }
                let a = site(toks[1], toks[2])?;
                let s = parse_index(toks[3], no)?;
                let e = parse_real(toks[4], no)?;
                if !seen_nodes.insert((a, s)) {
                    return Err(Error::DuplicateEntry {
                        line: no,
                        what: format!("node energy ({}, {}) state {s}", toks[1], toks[2]),
                    });
                }
                site_dims[a] = site_dims[a].max(s);
                nodes.push((a, s - 1, e));
            }
            "e" => {
                if toks.len() != 8 {
                    return Err(parse_err(no, "edge record needs 'e r1 c1 r2 c2 s1 s2 e'"));
                }
                let a = site(toks[1], toks[2])?;
                let b = site(toks[3], toks[4])?;
                let sa = parse_index(toks[5], no)?;
                let sb = parse_index(toks[6], no)?;
                let energy = parse_real(toks[7], no)?;
                let (ra, ca) = (a / n, a % n);
                let (rb, cb) = (b / n, b % n);
                if ra.abs_diff(rb).max(ca.abs_diff(cb)) != 1 {
                    return Err(Error::Geometry(format!(
                        "line {no}: sites ({}, {}) and ({}, {}) are not king neighbours",
                        toks[1], toks[2], toks[3], toks[4]
                    )));
                }
                let key = if a < b { (a, b, sa, sb) } else { (b, a, sb, sa) };
                if !seen_edges.insert(key) {
                    return Err(Error::DuplicateEntry { line: no, what: format!("edge energy on line {no}") });
                }
                site_dims[a] = site_dims[a].max(sa);
                site_dims[b] = site_dims[b].max(sb);
                edges.push(EdgeRecord { a, b, sa: sa - 1, sb: sb - 1, energy, line: no });
            }
            other => return Err(parse_err(no, format!("unknown record type '{other}'"))),
        }
    }
    let (m, n) = dims_decl.ok_or_else(|| parse_err(0, "missing header 'P rows cols'"))?;
    let mut h = PottsHamiltonian::new(m, n, site_dims)?;
    for (a, s, e) in nodes {
        h.set_node_energy(a, s, e)?;
    }
    for r in edges {
        h.set_edge_energy(r.a, r.b, r.sa, r.sb, r.energy).map_err(|e| match e {
            Error::Geometry(msg) => Error::Geometry(format!("line {}: {msg}", r.line)),
            other => other,
        })?;
    }
    Ok(h)
}

pub fn parse_potts_str(text: &str) -> Result<PottsHamiltonian> {
    parse_potts(text.as_bytes())
}

/// Writes `h` in the Potts text format, skipping zero entries.
pub fn write_potts(h: &PottsHamiltonian, mut out: impl Write) -> Result<()> {
    let n = h.cols();
    let rc = |s: usize| (s / n + 1, s % n + 1);
    writeln!(out, "P {} {}", h.rows(), n)?;
    for site in 0..h.num_sites() {
        let (r, c) = rc(site);
        for (s, &e) in h.node(site).iter().enumerate() {
            // The largest state is always written so the dimension survives.
            if e.to_bits() != 0 || s + 1 == h.dim(site) {
                writeln!(out, "n {r} {c} {} {e}", s + 1)?;
            }
        }
    }
    for (&(a, b), table) in h.edges() {
        let ((r1, c1), (r2, c2)) = (rc(a), rc(b));
        for sa in 0..h.dim(a) {
            for sb in 0..h.dim(b) {
                let e = table.get(sa, sb);
                if e.to_bits() != 0 {
                    writeln!(out, "e {r1} {c1} {r2} {c2} {} {} {e}", sa + 1, sb + 1)?;
                }
            }
        }
    }
    Ok(())
}

fn droplet_json(d: &Droplet) -> Value {
    let flips: BTreeMap<String, usize> = d.flips.iter().map(|(&s, &v)| ((s + 1).to_string(), v + 1)).collect();
    json!({
        "delta_energy": d.delta_energy,
        "flips": flips,
        "sub_droplets": d.sub_droplets.iter().map(droplet_json).collect::<Vec<_>>(),
    })
}

/// JSON document describing `sol`. Potts values and site indices are 1-based.
pub fn solution_json(sol: &Solution, parameters: &impl Serialize) -> Result<Value> {
    let states: Vec<Vec<usize>> = sol.states.iter().map(|s| s.iter().map(|v| v + 1).collect()).collect();
    let droplets: Vec<Vec<Value>> = sol.droplets.iter().map(|ds| ds.iter().map(droplet_json).collect()).collect();
    let transforms: Vec<Value> = sol
        .transform_energies
        .iter()
        .map(|(t, e)| json!({ "transform": t.name(), "best_energy": e }))
        .collect();
    Ok(json!({
        "best_energy": sol.best_energy(),
        "states": states,
        "energies": sol.energies,
        "log_probabilities": sol.log_probabilities,
        "droplets": droplets,
        "largest_discarded_probability": sol.largest_discarded_probability,
        "transforms": transforms,
        "parameters": serde_json::to_value(parameters)?,
    }))
}

pub fn write_solution(sol: &Solution, parameters: &impl Serialize, mut out: impl Write) -> Result<()> {
    let doc = solution_json(sol, parameters)?;
    serde_json::to_writer_pretty(&mut out, &doc)?;
    writeln!(out)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn ising_basic() {
        let g = parse_ising_str("1 2 -1.0\n2 2 0.5").unwrap();
        assert_eq!(g.num_spins(), 2);
        assert_eq!(g.coupling(0, 1), Some(-1.0));
        assert_eq!(g.fields(), &[0.0, 0.5]);
    }

    #[test]
    fn ising_comments_only() {
        let g = parse_ising_str("# comment\n\n").unwrap();
        assert_eq!(g.num_spins(), 0);
        let g = parse_ising_str("c header\n  \n1 3 2").unwrap();
        assert_eq!(g.num_spins(), 3);
    }

    #[test]
    fn ising_errors() {
        assert!(matches!(parse_ising_str("1 2 1.0\n2 1 2.0"), Err(Error::DuplicateEntry { line: 2, .. })));
        assert!(matches!(parse_ising_str("1 1 1.0\n1 1 2.0"), Err(Error::DuplicateEntry { .. })));
        assert!(matches!(parse_ising_str("1 2\n"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse_ising_str("\n1 2 x\n"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(parse_ising_str("0 2 1.0"), Err(Error::Index(_))));
        assert!(matches!(parse_ising_str("-1 2 1.0"), Err(Error::Index(_))));
        assert!(matches!(parse_ising_str("1.5 2 1.0"), Err(Error::Parse { .. })));
    }

    #[test]
    fn potts_single_variable() {
        let h = parse_potts_str("P 1 1\nn 1 1 1 0.0\nn 1 1 2 3.0").unwrap();
        assert_eq!(h.dims(), &[2]);
        assert_eq!(h.node(0), &[0.0, 3.0]);
    }

    #[test]
    fn potts_diagonal_edge() {
        let h = parse_potts_str("P 2 2\ne 1 1 2 2 1 1 -1.0\ne 2 1 1 2 2 1 0.5\n").unwrap();
        assert_eq!(h.edge_energy(0, 3, 0, 0), -1.0);
        assert_eq!(h.edge_energy(1, 2, 0, 1), 0.5);
        assert_eq!(h.dims(), &[1, 1, 2, 1]);
    }

    #[test]
    fn potts_errors() {
        assert!(matches!(parse_potts_str("P 1 3\ne 1 1 1 3 1 1 -1.0"), Err(Error::Geometry(_))));
        assert!(matches!(parse_potts_str("P 2 2\nn 3 1 1 0.0"), Err(Error::Index(_))));
        assert!(matches!(parse_potts_str("P 2 2\nn 1 1 0 0.0"), Err(Error::Index(_))));
        assert!(matches!(parse_potts_str("n 1 1 1 0.0"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse_potts_str("P 2 2\nn 1 1 1 0.0\nn 1 1 1 1.0"), Err(Error::DuplicateEntry { .. })));
        assert!(matches!(parse_potts_str("P 2 2\nx 1"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(parse_potts_str("# nothing"), Err(Error::Parse { .. })));
    }

    #[test]
    fn potts_round_trip() {
        let h = crate::gen::random_potts(3, 2, 3, 1.0, 4);
        let mut buf = Vec::new();
        write_potts(&h, &mut buf).unwrap();
        let back = parse_potts(buf.as_slice()).unwrap();
        assert_eq!(back.dims(), h.dims());
        crate::oracle::for_each_assignment(h.dims(), |x| {
            assert_eq!(h.energy(x).unwrap(), back.energy(x).unwrap());
        });
    }

    fn one_state(droplets: Vec<Droplet>) -> Solution {
        Solution {
            states: vec![vec![0, 1]],
            energies: vec![-1.0],
            log_probabilities: vec![-0.5],
            droplets: vec![droplets],
            largest_discarded_probability: 0.0,
            beta: 1.0,
            transform_energies: vec![],
        }
    }

    #[test]
    fn solution_json_shape() {
        let doc = solution_json(&one_state(vec![]), &json!({"beta": 1.0})).unwrap();
        assert_eq!(doc["best_energy"], json!(-1.0));
        assert_eq!(doc["droplets"], json!([[]]));
        assert_eq!(doc["states"], json!([[1, 2]]));
        assert_eq!(doc["parameters"]["beta"], json!(1.0));
    }

    #[test]
    fn solution_json_droplets_are_one_based() {
        let d = Droplet { flips: BTreeMap::from([(1, 0)]), delta_energy: 0.5, sub_droplets: vec![] };
        let mut out = Vec::new();
        write_solution(&one_state(vec![d]), &json!({}), &mut out).unwrap();
        let doc: Value = serde_json::from_slice(&out).unwrap();
        assert_eq!(doc["droplets"][0][0]["flips"], json!({"2": 1}));
        assert_eq!(doc["droplets"][0][0]["delta_energy"], json!(0.5));
    }

    fn arb_graph() -> impl Strategy<Value = IsingGraph> {
        (1usize..12).prop_flat_map(|n| {
            let pairs = proptest::collection::btree_map((0..n, 0..n), any::<f64>(), 0..30);
            let fields = proptest::collection::vec(prop_oneof![Just(0.0), any::<f64>()], n);
            (Just(n), pairs, fields).prop_map(|(n, pairs, fields)| {
                let mut g = IsingGraph::new(n);
                for ((i, j), v) in pairs {
                    if i != j && g.coupling(i, j).is_none() && v.is_finite() {
                        g.add_coupling(i, j, v).unwrap();
                    }
                }
                for (i, v) in fields.into_iter().enumerate() {
                    g.set_field(i, if v.is_finite() { v } else { 0.0 }).unwrap();
                }
                g
            })
        })
    }

    proptest! {
        #[test]
        fn ising_round_trip(g in arb_graph()) {
            let mut buf = Vec::new();
            write_ising(&g, &mut buf).unwrap();
            let back = parse_ising(buf.as_slice()).unwrap();
            prop_assert_eq!(back.num_spins(), g.num_spins());
            let a: Vec<_> = g.couplings().map(|(k, v)| (k, v.to_bits())).collect();
            let b: Vec<_> = back.couplings().map(|(k, v)| (k, v.to_bits())).collect();
            prop_assert_eq!(a, b);
            let fa: Vec<u64> = g.fields().iter().map(|v| v.to_bits()).collect();
            let fb: Vec<u64> = back.fields().iter().map(|v| v.to_bits()).collect();
            prop_assert_eq!(fa, fb);
        }

        #[test]
        fn ising_order_insensitive(g in arb_graph(), seed in any::<u64>()) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let mut buf = Vec::new();
            write_ising(&g, &mut buf).unwrap();
            let text = String::from_utf8(buf).unwrap();
            let mut lines: Vec<&str> = text.lines().collect();
            lines.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            let back = parse_ising_str(&lines.join("\n")).unwrap();
            prop_assert_eq!(back.num_spins(), g.num_spins());
            prop_assert_eq!(back.couplings().collect::<Vec<_>>(), g.couplings().collect::<Vec<_>>());
            prop_assert_eq!(back.fields(), g.fields());
        }
    }
}
