use super::*;
use crate::diagram::{build_cap_bdd, build_cost_bdd, BuildOptions};
use crate::model::{brute_force_recourse, Mode};
use crate::smwds::{build_scenario, five_vertex_example};
use crate::testutil::{bits, random_program};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn r(n: i64, d: i64) -> Rational {
    Rational::new(n, d)
}

fn ints(v: &[i64]) -> Vec<Rational> {
    v.iter().map(|&k| Rational::from(k)).collect()
}

struct Example {
    cap: Bdd,
    cost: Bdd,
    cap_s: Scenario,
}

fn example() -> Example {
    let inst = five_vertex_example();
    let sc = &inst.scenarios[0];
    let cap_s = build_scenario(&inst.graph, sc, 0, Rational::from(1), Mode::CapacityLinked);
    let cost_s = build_scenario(&inst.graph, sc, 0, Rational::from(1), Mode::CostLinked);
    let opts = BuildOptions::default();
    Example {
        cap: build_cap_bdd(&cap_s, &opts).unwrap(),
        cost: build_cost_bdd(&cost_s, &opts).unwrap(),
        cap_s,
    }
}

const MID: [bool; 5] = [false, false, true, false, false];
const ZERO: [bool; 5] = [false; 5];

fn fx(x: &[bool]) -> Vec<f64> {
    x.iter().map(|&b| b as i64 as f64).collect()
}

fn assert_affine(cut: &Cut, constant: Rational, coefs: Vec<Rational>) {
    let (c, a) = cut.affine(5);
    assert_eq!(c, constant, "{cut}");
    let neg: Vec<Rational> = coefs.into_iter().map(|v| -v).collect();
    assert_eq!(a, neg, "{cut}");
}

#[test]
fn example_cuts_at_the_middle_vertex() {
    let ex = example();
    let d = cap_duals(&ex.cap, &MID).unwrap();
    assert_eq!(d.value, Rational::from(1));
    assert_eq!(d.beta.len(), 2);
    assert!(d.beta.iter().all(|&(_, _, b)| b == 1));
    let base = cap_cut(&d, &ex.cap, 0);
    assert_eq!(base.to_string(), "eta[0] >= 1 - 2*(x0 + x1 + x3)");
    assert_affine(&base, r(1, 1), ints(&[2, 2, 0, 2, 0]));
    let strong = cap_cut_strong(&d, &ex.cap, 0);
    assert_eq!(strong.to_string(), "eta[0] >= 1 - (x0 + x1 + x3)");

    let d = cost_duals(&ex.cost, &MID).unwrap();
    assert_eq!(d.value, Rational::from(1));
    assert_eq!(d.z.len(), 5);
    assert!(d.z.iter().all(|&(_, z)| z == 1));
    assert_affine(&cost_cut(&d, &ex.cost, 0), r(1, 1), ints(&[1, 1, 0, 2, 1]));
    assert_affine(&cost_cut_strong(&d, &ex.cost, 0), r(1, 1), ints(&[1, 1, 0, 1, 1]));

    let pb = pure_benders_cut(&ex.cap_s.relaxation, &fx(&MID), 0).unwrap();
    assert_affine(&pb, r(1, 1), ints(&[1, 1, 0, 1, 0]));
}

#[test]
fn example_cuts_at_the_origin() {
    let ex = example();
    let d = cap_duals(&ex.cap, &ZERO).unwrap();
    assert_affine(&cap_cut_strong(&d, &ex.cap, 0), r(2, 1), ints(&[3, 3, 4, 4, 3]));
    assert_affine(&cap_cut_strong(&rebind_beta(&ex.cap, d), &ex.cap, 0), r(2, 1), ints(&[2, 3, 3, 3, 2]));
    let d = cost_duals(&ex.cost, &ZERO).unwrap();
    assert_affine(&cost_cut_strong(&d, &ex.cost, 0), r(2, 1), ints(&[1, 1, 1, 1, 1]));
    let pb = pure_benders_cut(&ex.cap_s.relaxation, &fx(&ZERO), 0).unwrap();
    assert_eq!(pb.to_string(), "eta[0] >= 3/2 - x0 - x1 - x2 - x3 - 1/2*x4");
    let (_, delta) = relaxation_duals(&ex.cap_s.relaxation, &fx(&ZERO)).unwrap();
    assert_eq!(delta, vec![r(1, 2), r(1, 2), r(0, 1), r(0, 1), r(1, 2)]);

    let l = lshaped_cut(Rational::from(2), Rational::from(0), &ZERO, &link_exprs(&ex.cap_s), 0);
    assert_eq!(l.rhs_links(&[false; 5]), Some(Rational::from(2)));
    assert_eq!(l.rhs_links(&[true, false, false, false, false]), Some(Rational::from(0)));
    let m = lshaped_cut_monotone(Rational::from(2), &ZERO, 0);
    assert_affine(&m, r(2, 1), ints(&[2, 2, 2, 2, 2]));
    assert!(lshaped_cut(Rational::from(0), Rational::from(0), &ZERO, &link_exprs(&ex.cap_s), 0).terms.is_empty());
}

/// The lowest-index rule blocks the `{3, 4}` terminal arc on link 3; moving that
/// multiplier to link 4 gives the other optimal dual, whose strong cut has no link-3 term.
fn rebind_beta(bdd: &Bdd, mut d: DualSolution) -> DualSolution {
    for (a, i, _) in &mut d.beta {
        if bdd.arcs[*a].links == [3, 4] {
            *i = 4;
        }
    }
    d
}

#[test]
fn lowest_index_rule_weakens_the_origin_witness() {
    let ex = example();
    let cap0 = cap_cut_strong(&cap_duals(&ex.cap, &ZERO).unwrap(), &ex.cap, 0);
    assert_eq!(cap0.rhs_f64(&[0.25, 0.0, 0.0, 0.0, 0.0]), 1.25);
    assert_eq!(cap0.rhs_f64(&[0.0, 0.0, 0.0, 0.0, 1.0]), -1.0);
}

#[test]
fn incomparability_witnesses() {
    let ex = example();
    let cap0 = cap_cut_strong(&rebind_beta(&ex.cap, cap_duals(&ex.cap, &ZERO).unwrap()), &ex.cap, 0);
    let cost0 = cost_cut_strong(&cost_duals(&ex.cost, &ZERO).unwrap(), &ex.cost, 0);
    let pb0 = pure_benders_cut(&ex.cap_s.relaxation, &fx(&ZERO), 0).unwrap();
    let cap1 = cap_cut_strong(&cap_duals(&ex.cap, &MID).unwrap(), &ex.cap, 0);
    let cost1 = cost_cut_strong(&cost_duals(&ex.cost, &MID).unwrap(), &ex.cost, 0);
    let pb1 = pure_benders_cut(&ex.cap_s.relaxation, &fx(&MID), 0).unwrap();

    let p = [0.25, 0.0, 0.0, 0.0, 0.0];
    assert_eq!(cap0.rhs_f64(&p), 1.5);
    assert_eq!(pb0.rhs_f64(&p), 1.25);
    let p = [0.0, 0.0, 0.0, 0.0, 1.0];
    assert_eq!(cap0.rhs_f64(&p), 0.0);
    assert_eq!(pb0.rhs_f64(&p), 1.0);
    assert_eq!(cost0.rhs_f64(&p), 1.0);
    assert_eq!(cap1.rhs_f64(&p), 1.0);
    assert_eq!(cost1.rhs_f64(&p), 0.0);
    assert_eq!(pb1.rhs_f64(&p), 1.0);
    let p = [1.0, 0.0, 0.0, 0.0, 0.0];
    assert_eq!(cost0.rhs_f64(&p), 1.0);
    assert_eq!(pb0.rhs_f64(&p), 0.5);
}

/// Every cut family on small random programs: valid everywhere, tight at the
/// generating point, strengthened at least as strong as base.
#[test]
fn cuts_are_valid_tight_and_ordered() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let opts = BuildOptions::default();
    for mode in [Mode::CapacityLinked, Mode::CostLinked] {
        for _ in 0..40 {
            let sp = random_program(&mut rng, mode, 4, 6);
            let nb = sp.num_first_stage();
            let points: Vec<Vec<bool>> = (0..1u64 << nb).map(|m| bits(m, nb)).collect();
            for s in &sp.scenarios {
                let q: Vec<Rational> = points
                    .iter()
                    .map(|x| brute_force_recourse(s, mode, x).unwrap())
                    .collect();
                let bdd = match mode {
                    Mode::CapacityLinked => build_cap_bdd(s, &opts).unwrap(),
                    Mode::CostLinked => build_cost_bdd(s, &opts).unwrap(),
                };
                for (h, xhat) in points.iter().enumerate() {
                    let (base, strong) = match mode {
                        Mode::CapacityLinked => {
                            let d = cap_duals(&bdd, xhat).unwrap();
                            (cap_cut(&d, &bdd, 0), cap_cut_strong(&d, &bdd, 0))
                        }
                        Mode::CostLinked => {
                            let d = cost_duals(&bdd, xhat).unwrap();
                            (cost_cut(&d, &bdd, 0), cost_cut_strong(&d, &bdd, 0))
                        }
                    };
                    let ls = lshaped_cut(q[h], recourse_lower_bound(s), xhat, &link_exprs(s), 0);
                    let pb = pure_benders_cut(&s.relaxation, &fx(xhat), 0).unwrap();
                    for c in [&base, &strong, &ls] {
                        assert_eq!(c.rhs(xhat), q[h], "{c} not tight");
                    }
                    for (k, x) in points.iter().enumerate() {
                        for c in [&base, &strong, &ls] {
                            assert!(c.rhs(x) <= q[k], "{c} cuts off {x:?}");
                        }
                        assert!(crate::model::rational_to_f64(pb.rhs(x) - q[k]) <= 1e-9, "{pb}");
                    }
                    for _ in 0..10 {
                        let p: Vec<f64> = (0..nb).map(|_| rng.gen::<f64>()).collect();
                        assert!(strong.rhs_f64(&p) >= base.rhs_f64(&p) - 1e-12);
                    }
                }
            }
        }
    }
}

/// With nonnegative costs, strong diagram cuts dominate the no-good cut on every
/// link indicator vector.
#[test]
fn strong_cuts_dominate_no_good_cuts() {
    let mut rng = ChaCha8Rng::seed_from_u64(32);
    let opts = BuildOptions::default();
    let mut checked = 0;
    for mode in [Mode::CapacityLinked, Mode::CostLinked] {
        while checked < 60 {
            let sp = random_program(&mut rng, mode, 4, 6);
            let nb = sp.num_first_stage();
            for s in &sp.scenarios {
                if s.cost1.iter().chain(&s.cost2).any(|c| *c < Rational::from(0)) || s.links.is_empty() {
                    continue;
                }
                checked += 1;
                let bdd = match mode {
                    Mode::CapacityLinked => build_cap_bdd(s, &opts).unwrap(),
                    Mode::CostLinked => build_cost_bdd(s, &opts).unwrap(),
                };
                let nl = s.links.len();
                for m in 0..1u64 << nb {
                    let xhat = bits(m, nb);
                    let strong = match mode {
                        Mode::CapacityLinked => cap_cut_strong(&cap_duals(&bdd, &xhat).unwrap(), &bdd, 0),
                        Mode::CostLinked => cost_cut_strong(&cost_duals(&bdd, &xhat).unwrap(), &bdd, 0),
                    };
                    let tau = brute_force_recourse(s, mode, &xhat).unwrap();
                    let ls = lshaped_cut(tau, recourse_lower_bound(s), &xhat, &link_exprs(s), 0);
                    for rm in 0..1u64 << nl {
                        let rho = bits(rm, nl);
                        assert!(strong.rhs_links(&rho).unwrap() >= ls.rhs_links(&rho).unwrap(), "{strong} vs {ls} at {xhat:?} rho {rho:?}");
                    }
                }
            }
        }
        checked = 0;
    }
}

#[test]
fn cost_dual_objective_equals_recourse() {
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    for _ in 0..50 {
        let sp = random_program(&mut rng, Mode::CostLinked, 4, 7);
        let nb = sp.num_first_stage();
        let xhat = bits(rng.gen_range(0..1u64 << nb), nb);
        for s in &sp.scenarios {
            let bdd = build_cost_bdd(s, &BuildOptions::default()).unwrap();
            let d = cost_duals(&bdd, &xhat).unwrap();
            let waived: Rational = d
                .z
                .iter()
                .filter(|&&(a, _)| bdd.waivers[bdd.arcs[a].var].as_ref().is_some_and(|e| e.truth(&xhat)))
                .map(|&(_, z)| bdd.unscale(z))
                .sum();
            let q = brute_force_recourse(s, Mode::CostLinked, &xhat).unwrap();
            assert_eq!(d.potential(bdd.root) - waived, q);
        }
    }
}

#[test]
fn rationalize_recovers_simple_fractions() {
    assert_eq!(rationalize(0.5, 1000), r(1, 2));
    assert_eq!(rationalize(1.0 / 3.0 + 1e-13, 1000), r(1, 3));
    assert_eq!(rationalize(-2.75, 1000), r(-11, 4));
    assert_eq!(rationalize(0.0, 1000), r(0, 1));
    assert_eq!(rationalize(7.0, 1000), r(7, 1));
}

#[test]
fn wrong_diagram_kind_is_rejected() {
    let ex = example();
    assert_eq!(cap_duals(&ex.cost, &ZERO), Err(CutError::WrongDiagram));
    assert_eq!(cost_duals(&ex.cap, &ZERO), Err(CutError::WrongDiagram));
}

#[test]
fn cut_log_has_one_line_per_cut() {
    let ex = example();
    let d = cap_duals(&ex.cap, &MID).unwrap();
    let cuts = [cap_cut(&d, &ex.cap, 0), cap_cut_strong(&d, &ex.cap, 0)];
    let log = write_cut_log(&cuts);
    assert_eq!(log.lines().count(), 3);
    assert!(log.contains("bdd-cap,eta[0],1,2*[x0 + x1 + x3]"));
}

