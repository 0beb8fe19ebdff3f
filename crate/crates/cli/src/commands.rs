use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde_json::json;
use twospin::analysis::{
    coupling_sim, edges_between, expander_audit, expected_zab_exact, expected_zab_mc, psi_rate, psi_sweep, AuditMode,
};
use twospin::e2lin2::{assignment_from_index, random_instance, E2Lin2Instance};
use twospin::exact::{ln_rational, partition_rational, RationalParams};
use twospin::field::{check_field_identity, translate_external_field};
use twospin::reduction::{
    bounds_constants, build_reduction_graph, decode_theta_blocks, sample_h, sandwich_check, z_star_brute,
    z_star_closed, GadgetParams,
};
use twospin::seed::derive_seed;
use twospin::uniqueness::{phase_classify, phase_map_csv, threshold_degree, uniqueness_check, CaseId, PhaseGrid};
use twospin::{partition_exact, EnumOptions, Error, MultiGraph, Result, SpinParams};

use crate::args::{Command, GadgetArgs, InstanceArgs, SpinArgs, Verify};
use crate::report::{linear, log, num, RunReport};

const CLOSED_FORM_TOL: f64 = 1e-9;
const EXACT_TOL: f64 = 1e-9;
const FIELD_TOL: f64 = 1e-9;
const Z_SCORE_MAX: f64 = 4.0;
const PROBE_TOL: f64 = 0.05;
const CHI_SQUARE_ALPHA: f64 = 1e-3;

impl SpinArgs {
    fn params(&self) -> Result<SpinParams> {
        SpinParams::new(self.beta.value, self.gamma.value, self.mu.value)
    }

    fn echo(&self, r: &mut RunReport) {
        r.input("beta", self.beta.value).input("gamma", self.gamma.value).input("mu", self.mu.value);
    }
}

impl GadgetArgs {
    fn params(&self) -> GadgetParams {
        GadgetParams {
            delta: self.delta,
            delta_prime: self.delta_prime,
            block_size: self.block_size,
            seed: self.seed,
        }
    }

    fn echo(&self, r: &mut RunReport) {
        r.input("delta", self.delta)
            .input("delta_prime", self.delta_prime)
            .input("block_size", self.block_size)
            .input("seed", self.seed);
    }
}

impl InstanceArgs {
    fn load(&self, seed: u64, r: &mut RunReport) -> Result<E2Lin2Instance> {
        let inst = match (&self.instance, self.vars, self.equations) {
            (Some(path), _, _) => {
                r.input("instance", path.display().to_string());
                E2Lin2Instance::read_file(path)?
            }
            (None, Some(n), Some(m)) => {
                r.input("vars", n).input("equations", m);
                random_instance(n, m, seed)?
            }
            _ => return Err(Error::Usage("give --instance or both --vars and --equations".into())),
        };
        let (norm, kept) = inst.normalize();
        if kept.len() != inst.num_vars() {
            r.output("dropped_unused_variables", inst.num_vars() - kept.len());
        }
        Ok(norm)
    }
}

fn assignment_text(s: &[u8]) -> String {
    s.iter().map(|b| char::from(b'0' + b)).collect()
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(Error::Io)
}

pub fn run(command: &Command, opts: &EnumOptions) -> Result<RunReport> {
    match command {
        Command::Z { graph, spin, exact } => z(graph, spin, *exact, opts),
        Command::Uniqueness { spin, degree } => {
            let mut r = RunReport::new("uniqueness");
            spin.echo(&mut r);
            r.input("degree", degree);
            let u = uniqueness_check(&spin.params()?, *degree)?;
            r.output("x_hat", linear(u.x_hat))
                .output("derivative_magnitude", linear(u.derivative_magnitude))
                .output("unique", u.unique)
                .output("residual", linear(u.residual));
            Ok(r)
        }
        Command::Threshold { spin, d_max } => {
            let mut r = RunReport::new("threshold");
            spin.echo(&mut r);
            r.input("d_max", d_max);
            let s = threshold_degree(&spin.params()?, *d_max)?;
            r.output("degree", s.degree).output("exhausted", s.exhausted);
            if let Some(ok) = s.monotone_spot_check {
                let d = s.degree.map_or(json!(null), |d| json!(d + 1));
                r.check("non_unique_at_next_degree", ok, d, json!(true), json!(null));
            }
            Ok(r)
        }
        Command::PhaseMap { beta, gamma, mu, degree, h, out } => {
            let mut r = RunReport::new("phase-map");
            let grid = PhaseGrid {
                beta: (beta.lo, beta.hi, beta.n),
                gamma: (gamma.lo, gamma.hi, gamma.n),
                mu: *mu,
                d: *degree,
                h: *h,
            };
            r.input("grid", &grid).input("out", out.display().to_string());
            let csv = phase_map_csv(&grid)?;
            let mut counts: BTreeMap<String, usize> = BTreeMap::new();
            for line in csv.lines().skip(1) {
                let region = line.split(',').nth(4).unwrap_or_default();
                *counts.entry(region.to_string()).or_default() += 1;
            }
            write(out, &csv)?;
            r.output("rows", counts.values().sum::<usize>()).output("regions", counts);
            Ok(r)
        }
        Command::Reduce { instance, gadget, out_graph, out_blocks } => {
            let mut r = RunReport::new("reduce");
            r.input("instance", instance.display().to_string());
            gadget.echo(&mut r);
            let inst = E2Lin2Instance::read_file(instance)?;
            let rg = build_reduction_graph(&inst, gadget.params())?;
            rg.graph.write_file(out_graph)?;
            write(out_blocks, &rg.sidecar_text())?;
            let audit = rg.audit();
            r.output("vertices", audit.vertices)
                .output("regular_degree", audit.regular_degree)
                .output("full_scale_block", gadget.block_size == inst.num_equations())
                .check("vertex_count", audit.vertices == audit.expected_vertices, json!(audit.vertices), json!(audit.expected_vertices), json!(0))
                .check("regular", audit.regular_degree == Some(audit.expected_degree), json!(audit.regular_degree), json!(audit.expected_degree), json!(0))
                .check("intra_multiplicity", audit.intra_ok, json!(audit.intra_ok), json!(true), json!(null))
                .check("inter_multiplicity", audit.inter_ok, json!(audit.inter_ok), json!(true), json!(null));
            Ok(r)
        }
        Command::Gadget { n, delta, seed, out } => {
            let mut r = RunReport::new("gadget");
            r.input("n", n).input("delta", delta).input("seed", seed);
            let h = sample_h(*n, *delta, *seed)?;
            h.write_file(out)?;
            r.output("vertices", h.num_vertices())
                .check("regular", h.regular_degree() == Some(*delta), json!(h.regular_degree()), json!(delta), json!(0))
                .check("bipartite", h.is_bipartite_split(*n), json!(h.is_bipartite_split(*n)), json!(true), json!(null));
            Ok(r)
        }
        Command::ThetaStar { instance } => {
            let mut r = RunReport::new("theta-star");
            r.input("instance", instance.display().to_string());
            let inst = E2Lin2Instance::read_file(instance)?;
            let (theta, s) = inst.theta_star()?;
            r.output("vars", inst.num_vars())
                .output("equations", inst.num_equations())
                .output("theta_star", theta)
                .output("assignment", assignment_text(&s));
            Ok(r)
        }
        Command::Decode { log_y, vars, equations, block_size, beta, gamma, delta, delta_prime, case, eps, slack } => {
            let mut r = RunReport::new("decode");
            let t = block_size.unwrap_or(*equations);
            r.input("log_y", num(*log_y))
                .input("vars", vars)
                .input("equations", equations)
                .input("block_size", t)
                .input("beta", beta)
                .input("gamma", gamma)
                .input("delta", delta)
                .input("delta_prime", delta_prime)
                .input("case", case)
                .input("eps", eps)
                .input("slack", slack);
            let case_id = [CaseId::Case1, CaseId::Case2, CaseId::Case3][*case as usize - 1];
            let bc = bounds_constants(&SpinParams::no_field(*beta, *gamma)?, *delta, *delta_prime, case_id)?;
            let theta = decode_theta_blocks(*log_y, *vars, *equations, t, &bc, *eps, *slack)?;
            r.output("log_c", log(bc.log_c)).output("log_d", log(bc.log_d)).output("theta_estimate", linear(theta));
            Ok(r)
        }
        Command::TranslateField { spin, degree } => {
            let mut r = RunReport::new("translate-field");
            spin.echo(&mut r);
            r.input("degree", degree);
            let p = spin.params()?;
            let (q, per_edge) = translate_external_field(&p, *degree)?;
            r.output("beta", linear(q.beta()))
                .output("gamma", linear(q.gamma()))
                .output("per_edge_factor", log(per_edge))
                .output("region", phase_classify(&p, *degree, twospin::uniqueness::DEFAULT_H).ok().map(|pt| pt.region));
            Ok(r)
        }
        Command::Verify { check } => verify(check, opts),
    }
}

fn z(graph: &Path, spin: &SpinArgs, exact: bool, opts: &EnumOptions) -> Result<RunReport> {
    let mut r = RunReport::new("z");
    r.input("graph", graph.display().to_string());
    spin.echo(&mut r);
    let g = MultiGraph::read_file(graph)?;
    let lz = partition_exact(&g, &spin.params()?, &[], opts)?;
    r.output("vertices", g.num_vertices()).output("log_z", log(lz.ln()));
    if exact {
        let (Some(b), Some(c), Some(m)) = (spin.beta.ratio, spin.gamma.ratio, spin.mu.ratio) else {
            return Err(Error::Usage("exact mode needs decimal or p/q parameters".into()));
        };
        let z = partition_rational(&g, &RationalParams::from_ratios(b, c, m)?, &[])?;
        let ln_exact = ln_rational(&z);
        let gap = (lz.ln() - ln_exact).abs() / ln_exact.abs().max(1.0);
        r.output("exact", z.to_string()).output("log_z_exact", log(ln_exact)).check(
            "log_domain_matches_exact",
            gap <= EXACT_TOL || (lz.is_zero() && ln_exact == f64::NEG_INFINITY),
            num(lz.ln()),
            num(ln_exact),
            json!(EXACT_TOL),
        );
    }
    Ok(r)
}

fn verify(check: &Verify, opts: &EnumOptions) -> Result<RunReport> {
    match check {
        Verify::Eq15 { instance, gadget, beta, gamma } => {
            let mut r = RunReport::new("verify eq15");
            gadget.echo(&mut r);
            r.input("beta", beta).input("gamma", gamma);
            let inst = instance.load(gadget.seed, &mut r)?;
            let p = SpinParams::no_field(*beta, *gamma)?;
            let rg = build_reduction_graph(&inst, gadget.params())?;
            let n = inst.num_vars();
            if n > twospin::reduction::MAX_SANDWICH_VARS {
                return Err(Error::Resource {
                    what: "variables (closed form)",
                    value: n as u128,
                    cap: twospin::reduction::MAX_SANDWICH_VARS as u128,
                });
            }
            let mut worst = (0.0f64, 0u64, 0.0, 0.0);
            for idx in 0..1u64 << n {
                let s = assignment_from_index(n, idx);
                let closed = z_star_closed(&rg, &s, &p)?;
                let brute = z_star_brute(&rg, &s, &p, opts)?;
                let gap = closed.rel_gap(brute);
                if gap > worst.0 || idx == 0 {
                    worst = (gap, idx, closed.ln(), brute.ln());
                }
            }
            let s = assignment_from_index(n, worst.1);
            r.output("assignments", 1u64 << n)
                .output("vertices", rg.graph.num_vertices())
                .output("worst_assignment", assignment_text(&s))
                .output("max_rel_gap", linear(worst.0))
                .check("closed_equals_enumeration", worst.0 <= CLOSED_FORM_TOL, log(worst.2), log(worst.3), json!(CLOSED_FORM_TOL));
            Ok(r)
        }
        Verify::Lemma7 { n, delta, delta_prime, beta, gamma, a, b, trials, seed } => {
            let mut r = RunReport::new("verify lemma7");
            r.input("n", n)
                .input("delta", delta)
                .input("delta_prime", delta_prime)
                .input("beta", beta)
                .input("gamma", gamma)
                .input("a", a)
                .input("b", b)
                .input("trials", trials)
                .input("seed", seed);
            let p = SpinParams::no_field(*beta, *gamma)?;
            let exact = expected_zab_exact(*n, *delta, *delta_prime, &p, *a, *b)?;
            let mc = expected_zab_mc(*n, *delta, *delta_prime, &p, *a, *b, *trials, *seed)?;
            let z = mc.z_score(exact);
            r.output("log_expectation", log(exact.ln()))
                .output("log_mc_mean", log(mc.ln_mean()))
                .output("z_score", linear(z));
            if let Ok(rate) = psi_rate(*a, *b, *delta, *delta_prime, *beta, *gamma) {
                r.output("rate_per_vertex", log(rate.value));
            }
            r.check("monte_carlo_within_4_sigma", z <= Z_SCORE_MAX, log(mc.ln_mean()), log(exact.ln()), json!(Z_SCORE_MAX));
            Ok(r)
        }
        Verify::Psi { c, lambda, step, bound, grid_out } => {
            let mut r = RunReport::new("verify psi");
            r.input("c", c).input("lambda", lambda).input("step", step).input("bound", bound);
            let mut rows = Vec::new();
            let sweep = psi_sweep(*c, *lambda, *step, grid_out.as_ref().map(|_| &mut rows))?;
            if let Some(path) = grid_out {
                r.input("grid_out", path.display().to_string());
                let mut csv = String::from("a,b,psi\n");
                for (a, b, v) in &rows {
                    csv.push_str(&format!("{a},{b},{v}\n"));
                }
                write(path, &csv)?;
            }
            let (a, b, v) = sweep.refined_max;
            r.output("grid_points", sweep.grid_points)
                .output("grid_max", json!({ "a": sweep.grid_max.0, "b": sweep.grid_max.1, "psi": num(sweep.grid_max.2) }))
                .output("max", json!({ "a": a, "b": b, "psi": num(v) }))
                .output("margin", linear(bound - v))
                .check("max_below_bound", v < *bound, num(v), num(*bound), json!(0.0));
            Ok(r)
        }
        Verify::Expander { n, delta, samples, seed, eps, factor, sampled } => {
            let mut r = RunReport::new("verify expander");
            r.input("n", n)
                .input("delta", delta)
                .input("samples", samples)
                .input("seed", seed)
                .input("eps", eps)
                .input("factor", factor)
                .input("sampled_pairs", sampled);
            if *samples == 0 {
                return Err(Error::Usage("need at least one sample".into()));
            }
            // a fixed probe pair: the first half of each side
            let probe: Vec<usize> = (0..n.div_ceil(2)).collect();
            let expected = *delta as f64 * (probe.len() * probe.len()) as f64 / *n as f64;
            let (mut full_lo, mut full_hi, mut probe_sum, mut passes) = (f64::INFINITY, f64::NEG_INFINITY, 0u64, 0u64);
            let mut worst = f64::INFINITY;
            for s in 0..*samples {
                let gseed = derive_seed(*seed, s);
                let h = sample_h(*n, *delta, gseed)?;
                let mode = match sampled {
                    Some(trials) => AuditMode::Sampled { trials: *trials, seed: derive_seed(gseed, 1) },
                    None => AuditMode::Exhaustive,
                };
                let a = expander_audit(&h, *n, *eps, *factor, mode)?;
                full_lo = full_lo.min(a.full_ratio);
                full_hi = full_hi.max(a.full_ratio);
                worst = worst.min(a.worst_ratio);
                passes += a.pass as u64;
                probe_sum += edges_between(&h, *n, &probe, &probe);
            }
            let mean = probe_sum as f64 / *samples as f64;
            let rel = (mean - expected).abs() / expected;
            r.output("expander_pass_count", passes)
                .output("worst_ratio", linear(worst))
                .output("probe_size", probe.len())
                .output("probe_mean_edges", linear(mean))
                .output("probe_expected_edges", linear(expected))
                .check("full_sides_ratio_one", full_lo == 1.0 && full_hi == 1.0, num(full_lo), json!(1.0), json!(0.0))
                .check("probe_mean_matches_expectation", rel <= PROBE_TOL, num(mean), num(expected), json!(PROBE_TOL));
            Ok(r)
        }
        Verify::Field { graph, spin } => {
            let mut r = RunReport::new("verify field");
            r.input("graph", graph.display().to_string());
            spin.echo(&mut r);
            let g = MultiGraph::read_file(graph)?;
            let f = check_field_identity(&g, &spin.params()?, opts)?;
            r.output("degree", f.degree)
                .output("translated_beta", linear(f.translated.beta()))
                .output("translated_gamma", linear(f.translated.gamma()))
                .check("field_identity", f.rel_gap <= FIELD_TOL, log(f.lhs.ln()), log(f.rhs.ln()), json!(FIELD_TOL));
            Ok(r)
        }
        Verify::Sandwich { instance, gadget, beta, gamma } => {
            let mut r = RunReport::new("verify sandwich");
            gadget.echo(&mut r);
            r.input("beta", beta).input("gamma", gamma);
            let inst = instance.load(gadget.seed, &mut r)?;
            let rg = build_reduction_graph(&inst, gadget.params())?;
            let s = sandwich_check(&rg, &SpinParams::no_field(*beta, *gamma)?, opts)?;
            r.output("log_z", log(s.log_z.ln()))
                .output("argmax", assignment_text(&s.argmax))
                .check("max_restricted_below_z", s.lower_ok, log(s.max_restricted.ln()), log(s.log_z.ln()), json!(1e-9))
                .check("z_below_restricted_sum", s.upper_ok, log(s.log_z.ln()), log(s.sum_restricted.ln()), json!(1e-9));
            Ok(r)
        }
        Verify::Coupling { n, a, b, d, trials, seed } => {
            let mut r = RunReport::new("verify coupling");
            r.input("n", n).input("a", a).input("b", b).input("d", d).input("trials", trials).input("seed", seed);
            let c = coupling_sim(*n, *a, *b, *d, *seed, *trials)?;
            let dev = (c.p_first - b).abs();
            r.output("clamped_rho", c.clamped_rho)
                .output("chi_square", linear(c.chi_square))
                .output("dof", c.dof)
                .output("tail_frequency", linear(c.tail_frequency))
                .output("tail_bound", linear(c.tail_bound))
                .check("no_domination_violations", c.domination_violations == 0, json!(c.domination_violations), json!(0), json!(0))
                .check("first_marginal", dev <= Z_SCORE_MAX * c.p_first_sigma, num(c.p_first), num(*b), num(Z_SCORE_MAX * c.p_first_sigma))
                .check("joint_law_chi_square", c.p_value >= CHI_SQUARE_ALPHA, num(c.p_value), json!(CHI_SQUARE_ALPHA), json!(null));
            Ok(r)
        }
    }
}
