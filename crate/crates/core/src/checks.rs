//! The self-test battery: eleven certificate suites covering normalization
//! exactness, integrability equivalences, order doubling, majorant
//! dominations, flow laws, secondary normal forms, and schedule conformance.
//! Shared by the `selftest` command and the acceptance test target.
//!
//! Every check is exact (rational zero or order inequality); the only
//! floating point is in the observational decay report of suite 11.

use crate::fixtures::{corpus, random_r_with_sigma, random_transformation, Fixture};
use crate::flows::{
    flow_map, group_law_residual, nonlinearity_certificate, picard_flow,
    NonlinearityCertificate,
};
use crate::kam::{kam_iterate, majorant_domination_check, schedule, transformation_diff_order, KamTrace};
use crate::rat::{rat, rat_int, Rat};
use crate::series::TimePolynomial;
use crate::stage2::{brute_force_normal_form, stage2_invariants, stage2_normalize, random_equivalent};
use crate::takens::{
    conjugacy_residual, field_derivative, integrability_order, obstruction_order_oracle,
    singular_locus_is_curve, takens_normalize, IntegrabilityOrder,
};
use crate::vf::{NormalizedTransformation, PlanarVectorField};
use num::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Worker-thread cap: `NILNORM_THREADS` if set, else the machine's
/// parallelism.
pub fn thread_count() -> usize {
    std::env::var("NILNORM_THREADS")
        .ok()
        .and_then(|s| s.parse::<usize>().ok())
        .filter(|&n| n >= 1)
        .unwrap_or_else(|| {
            std::thread::available_parallelism()
                .map(|n| n.get())
                .unwrap_or(1)
        })
}

/// Order-preserving parallel map over immutable inputs.
fn par_map<T: Sync, U: Send, F: Fn(&T) -> U + Sync>(items: &[T], f: F) -> Vec<U> {
    let workers = thread_count().min(items.len().max(1));
    if workers <= 1 {
        return items.iter().map(|it| f(it)).collect();
    }
    let mut out: Vec<Option<U>> = Vec::with_capacity(items.len());
    out.resize_with(items.len(), || None);
    let next = std::sync::atomic::AtomicUsize::new(0);
    let slots = std::sync::Mutex::new(&mut out);
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, std::sync::atomic::Ordering::SeqCst);
                if i >= items.len() {
                    break;
                }
                let val = f(&items[i]);
                slots.lock().unwrap()[i] = Some(val);
            });
        }
    });
    out.into_iter().map(|v| v.unwrap()).collect()
}

#[derive(Clone, Debug)]
pub struct CriterionOutcome {
    pub id: usize,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

type Check = std::result::Result<String, String>;

fn tau_of(vf: &PlanarVectorField, n: usize) -> std::result::Result<IntegrabilityOrder, String> {
    integrability_order(vf, n).map_err(|e| format!("normalization failed: {e}"))
}

/// Suite 1: the computed transformation conjugates every corpus field to its
/// normal form with exactly zero residual through the truncation.
pub fn check_conjugacy_exactness(fixtures: &[Fixture], n: usize) -> Check {
    let results = par_map(fixtures, |fix| {
        let (phi, nf) = match takens_normalize(&fix.vf, n) {
            Ok(x) => x,
            Err(e) => return Err(format!("{}: {e}", fix.name)),
        };
        let (r1, r2) = conjugacy_residual(&fix.vf, &phi, &nf, n);
        if r1.is_zero() && r2.is_zero() {
            Ok(())
        } else {
            Err(format!("{}: nonzero conjugacy residual", fix.name))
        }
    });
    for r in results {
        r?;
    }
    Ok(format!("residual (0,0) on {} fixtures through degree {n}", fixtures.len()))
}

/// Suite 2: the three integrability characterizations agree, and the
/// brute-force integral search matches `tau` at every order.
pub fn check_integrability_equivalence(fixtures: &[Fixture], n: usize) -> Check {
    let results = par_map(fixtures, |fix| {
        let tau = tau_of(&fix.vf, n).map_err(|e| format!("{}: {e}", fix.name))?;
        let at_least_n = matches!(tau, IntegrabilityOrder::AtLeast(_));
        let locus = singular_locus_is_curve(&fix.vf, n);
        let oracle_n = obstruction_order_oracle(&fix.vf, n);
        if locus != at_least_n || oracle_n != at_least_n {
            return Err(format!(
                "{}: tau = {tau}, locus = {locus}, oracle = {oracle_n} disagree",
                fix.name
            ));
        }
        for k in 0..=n {
            let expected = match tau {
                IntegrabilityOrder::AtLeast(_) => true,
                IntegrabilityOrder::Finite(t) => k <= t,
            };
            if obstruction_order_oracle(&fix.vf, k) != expected {
                return Err(format!("{}: oracle at k = {k} contradicts tau = {tau}", fix.name));
            }
        }
        Ok(())
    });
    for r in results {
        r?;
    }
    Ok(format!(
        "all three characterizations agree on {} fixtures, oracle checked at every k <= {n}",
        fixtures.len()
    ))
}

/// Suite 3: the quadratic example `(y, x^2)`: obstruction order 2, singular
/// locus not a curve, and `2x^3 - 3y^2` is an exact first integral.
pub fn check_quadratic_example() -> Check {
    let n = 12;
    let vf = PlanarVectorField::new(
        crate::series::BiSeries::zero(n),
        crate::series::BiSeries::monomial(n, 2, 0, Rat::one()),
    )
    .map_err(|e| e.to_string())?;
    let tau = tau_of(&vf, n)?;
    if tau != IntegrabilityOrder::Finite(2) {
        return Err(format!("expected tau = 2, got {tau}"));
    }
    if singular_locus_is_curve(&vf, n) {
        return Err("singular locus wrongly reported as a curve".into());
    }
    let h = crate::series::BiSeries::from_terms(
        n,
        &[(3, 0, rat_int(2)), (0, 2, rat_int(-3))],
    )
    .map_err(|e| e.to_string())?;
    let deriv = field_derivative(&vf, &h, n);
    if !deriv.is_zero() {
        return Err("2x^3 - 3y^2 is not annihilated by the field".into());
    }
    Ok("tau = 2, locus is not a curve, 2x^3 - 3y^2 is an exact integral".into())
}

/// Suite 4: the obstruction order is invariant under random normalized
/// changes of coordinates.
pub fn check_tau_invariance(fixtures: &[Fixture], n: usize, seed: u64) -> Check {
    // pre-draw the transformations so workers stay deterministic
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x7461755f696e76);
    let jobs: Vec<(usize, NormalizedTransformation)> = (0..fixtures.len())
        .flat_map(|i| {
            (0..5)
                .map(|_| (i, random_transformation(&mut rng, n)))
                .collect::<Vec<_>>()
        })
        .collect();
    let taus = par_map(fixtures, |fix| tau_of(&fix.vf, n));
    let results = par_map(&jobs, |(i, psi)| {
        let fix = &fixtures[*i];
        let base_tau = taus[*i].clone()?;
        let conj = psi
            .pushforward(&fix.vf)
            .map_err(|e| format!("{}: pushforward failed: {e}", fix.name))?;
        let tau = tau_of(&conj, n).map_err(|e| format!("{}: {e}", fix.name))?;
        if tau != base_tau {
            return Err(format!("{}: tau changed {base_tau} -> {tau}", fix.name));
        }
        Ok(())
    });
    for r in results {
        r?;
    }
    Ok(format!("tau unchanged in all {} conjugated cases", jobs.len()))
}

/// Shared artifact for suites 5, 6 and 11: iteration runs on the
/// high-truncation integrable fixtures.
pub struct IterationRun {
    pub fixture: Fixture,
    pub trace: KamTrace,
    pub inv_total: NormalizedTransformation,
}

pub fn run_iterations(fixtures: &[Fixture], n: usize, steps: usize) -> std::result::Result<Vec<IterationRun>, String> {
    let results = par_map(fixtures, |fix| {
        kam_iterate(&fix.vf, n, steps, &rat(1, 2), fix.ground_truth.is_some())
            .map(|(trace, inv_total, _)| IterationRun {
                fixture: fix.clone(),
                trace,
                inv_total,
            })
            .map_err(|e| format!("{}: {e}", fix.name))
    });
    results.into_iter().collect()
}

/// Suite 5: the defect order at step n is at least `2^n + 1`, and each
/// incremental transformation only moves coefficients at or above the
/// current defect order.
pub fn check_order_doubling(runs: &[IterationRun], n: usize) -> Check {
    for run in runs {
        for row in &run.trace.rows {
            let lower = ((1usize << row.n) + 1).min(n);
            if !row.d.at_least(lower) {
                return Err(format!(
                    "{}: d_{} = {} < {lower}",
                    run.fixture.name, row.n, row.d
                ));
            }
            if let Some(diff) = row.ord_diff {
                let need = row.d.finite().unwrap_or(n + 1).min(n + 1);
                if !diff.at_least(need) {
                    return Err(format!(
                        "{}: transformation increment order {diff} < d_{} = {}",
                        run.fixture.name, row.n, row.d
                    ));
                }
            }
        }
    }
    Ok(format!(
        "d_n >= 2^n + 1 and increment orders respected on {} runs at N = {n}",
        runs.len()
    ))
}

/// Suite 6: the iteration's composed inverse agrees with the one-shot
/// normalization's inverse through the final defect order.
pub fn check_iteration_agreement(runs: &[IterationRun], n: usize) -> Check {
    let results = par_map(runs, |run| {
        let (phi, _) = takens_normalize(&run.fixture.vf, n)
            .map_err(|e| format!("{}: {e}", run.fixture.name))?;
        let phi_inv = phi.inverse().map_err(|e| format!("{}: {e}", run.fixture.name))?;
        let d_last = run.trace.rows.last().unwrap().d;
        let agree_to = d_last.finite().unwrap_or(n).min(n);
        let diff = transformation_diff_order(&run.inv_total, &phi_inv);
        if !diff.at_least(agree_to) {
            return Err(format!(
                "{}: transformations differ at order {diff} < {agree_to}",
                run.fixture.name
            ));
        }
        Ok(())
    });
    for r in results {
        r?;
    }
    Ok(format!("composed inverse matches full normalization on {} runs", runs.len()))
}

/// Suite 7: the exact coefficientwise majorant dominations for the
/// approximate solution hold on the whole corpus.
pub fn check_majorant_dominations(fixtures: &[Fixture], n: usize) -> Check {
    let results = par_map(fixtures, |fix| {
        match majorant_domination_check(&fix.vf, n) {
            Ok(true) => Ok(()),
            Ok(false) => Err(format!("{}: domination violated", fix.name)),
            Err(e) => Err(format!("{}: {e}", fix.name)),
        }
    });
    for r in results {
        r?;
    }
    Ok(format!("nu and mu dominations exact on {} fixtures", fixtures.len()))
}

fn nonzero_rat<R: Rng>(rng: &mut R) -> Rat {
    loop {
        let n = rng.gen_range(-5i64..=5);
        if n != 0 {
            return rat(n, rng.gen_range(1..=4i64));
        }
    }
}

/// Suite 8: the flow satisfies its defining equation and the group law, the
/// quadratic coefficient matches the closed form, and the whole map matches
/// an independent Picard-iteration construction at low degree.
pub fn check_flow_laws(fixtures: &[Fixture], n: usize, seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x666c6f77);
    let pairs: Vec<Vec<(Rat, Rat)>> = (0..fixtures.len())
        .map(|_| (0..3).map(|_| (nonzero_rat(&mut rng), nonzero_rat(&mut rng))).collect())
        .collect();
    let jobs: Vec<(usize, &Fixture)> = fixtures.iter().enumerate().collect();
    let results = par_map(&jobs, |&(i, fix)| {
        let flow = flow_map(&fix.vf, n);
        if !crate::flows::flow_derivative_residual(&flow, &fix.vf) {
            return Err(format!("{}: flow equation residual nonzero", fix.name));
        }
        for (s0, t0) in &pairs[i] {
            let (g1, g2) = group_law_residual(&flow, s0, t0, n)
                .map_err(|e| format!("{}: {e}", fix.name))?;
            if !g1.is_zero() || !g2.is_zero() {
                return Err(format!("{}: group law fails at ({s0}, {t0})", fix.name));
            }
        }
        if picard_flow(&fix.vf, 4) != flow_map(&fix.vf, 4) {
            return Err(format!("{}: Picard oracle disagrees through degree 4", fix.name));
        }
        Ok(())
    });
    for r in results {
        r?;
    }
    // closed form for the quadratic example
    let vf = PlanarVectorField::new(
        crate::series::BiSeries::zero(6),
        crate::series::BiSeries::monomial(6, 2, 0, Rat::one()),
    )
    .map_err(|e| e.to_string())?;
    let (b1, b2) = flow_map(&vf, 6).coefficient(2, 0);
    let expect1 = TimePolynomial::from_coeffs(vec![Rat::zero(), Rat::zero(), rat(1, 2)]);
    let expect2 = TimePolynomial::from_coeffs(vec![Rat::zero(), Rat::one()]);
    if b1 != expect1 || b2 != expect2 {
        return Err("B_(2,0) of (y, x^2) is not (t^2/2, t)".into());
    }
    Ok(format!(
        "flow equation, group law, closed form and Picard oracle agree on {} fixtures at N = {n}",
        fixtures.len()
    ))
}

/// Suite 9: every nonlinear corpus field yields a nonzero time-t0
/// nonlinearity witness at random nonzero times; the linear field does not.
pub fn check_nonlinearity_witnesses(fixtures: &[Fixture], n: usize, seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x6c656d6d61);
    let times: Vec<Vec<Rat>> = (0..fixtures.len())
        .map(|_| (0..5).map(|_| nonzero_rat(&mut rng)).collect())
        .collect();
    let jobs: Vec<(usize, &Fixture)> = fixtures.iter().enumerate().collect();
    let results = par_map(&jobs, |&(i, fix)| {
        for t0 in &times[i] {
            match nonlinearity_certificate(&fix.vf, t0, n) {
                Ok(NonlinearityCertificate::Witness { value, .. }) => {
                    if value.0.is_zero() && value.1.is_zero() {
                        return Err(format!("{}: zero witness at t = {t0}", fix.name));
                    }
                }
                Ok(NonlinearityCertificate::Linear) => {
                    return Err(format!("{}: nonlinear field reported linear", fix.name));
                }
                Err(e) => return Err(format!("{}: {e}", fix.name)),
            }
        }
        Ok(())
    });
    for r in results {
        r?;
    }
    match nonlinearity_certificate(&PlanarVectorField::linear(n), &Rat::one(), n) {
        Ok(NonlinearityCertificate::Linear) => {}
        other => return Err(format!("linear field misclassified: {other:?}")),
    }
    Ok(format!(
        "nonzero witnesses at 5 random times on {} fixtures; linear field clean",
        fixtures.len()
    ))
}

/// Suite 10: the weighted secondary normalization annihilates every
/// `x^{j sigma}` slot, its invariant window survives random admissible
/// re-normalizations, and a dense linear-algebra solver reproduces it.
pub fn check_secondary_normal_form(seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x737461676532);
    let mut invariance_cases = 0usize;
    for i in 0..10usize {
        let sigma = 2 + (i % 3);
        let w = 4 * sigma;
        let mut r = random_r_with_sigma(&mut rng, sigma, w);
        // admissible input: leading coefficient is a unit
        let eps = if sigma % 2 == 1 && rng.gen_bool(0.5) { -1 } else { 1 };
        r.set(sigma, rat_int(eps));
        let (_, nf) = stage2_normalize(&r, w).map_err(|e| e.to_string())?;
        for j in 2..=w / sigma {
            if !nf.rstar.get(j * sigma).is_zero() {
                return Err(format!(
                    "sigma = {sigma}: r*_{} not annihilated for input #{i}",
                    j * sigma
                ));
            }
        }
        // dense solver over all unknowns of the functional equation
        let brute = brute_force_normal_form(&r, w).map_err(|e| e.to_string())?;
        if brute != nf {
            return Err(format!("sigma = {sigma}: dense solver disagrees on input #{i}"));
        }
        // invariance of the window under random re-normalizations
        let base = stage2_invariants(&r, w).map_err(|e| e.to_string())?;
        for _ in 0..2 {
            let other = random_equivalent(&r, w, &mut rng).map_err(|e| e.to_string())?;
            let tuple = stage2_invariants(&other, w).map_err(|e| e.to_string())?;
            if tuple != base {
                return Err(format!(
                    "sigma = {sigma}: invariant window changed under a random equivalence (input #{i})"
                ));
            }
            invariance_cases += 1;
        }
    }
    Ok(format!(
        "annihilation + dense-solver agreement on 10 systems, window invariant in {invariance_cases} cases"
    ))
}

/// Suite 11: the radius/control schedule identity holds exactly, and the
/// non-normalized majorant norm decays monotonically along the traces.
pub fn check_schedule_and_decay(runs: &[IterationRun]) -> Check {
    let r0 = rat(1, 2);
    for n in 0..=20usize {
        let (rn, theta) = schedule(n, &r0);
        let (rn1, _) = schedule(n + 1, &r0);
        if rn1 != (Rat::one() - rat_int(5) * &theta) * &rn {
            return Err(format!("schedule identity fails at n = {n}"));
        }
        let np2 = (n + 2) as i64;
        if theta != rat(1, 5 * np2 * np2) {
            return Err(format!("theta_{n} is not 1/(5(n+2)^2)"));
        }
    }
    let mut decaying = 0usize;
    for run in runs {
        let hats: Vec<f64> = run.trace.rows.iter().map(|r| r.b_hat).collect();
        for w in hats.windows(2).skip(1) {
            if !(w[1] < w[0] || (w[0] == 0.0 && w[1] == 0.0)) {
                return Err(format!(
                    "{}: B-hat not decreasing: {:?}",
                    run.fixture.name, hats
                ));
            }
        }
        decaying += 1;
    }
    Ok(format!(
        "schedule identity exact for n <= 20; B-hat decreasing on {decaying} traces"
    ))
}

/// Runs the full battery. `seed` controls every random draw; the corpus and
/// all checks are deterministic given the seed.
pub fn run_all(seed: u64) -> Vec<CriterionOutcome> {
    let mut out = Vec::new();
    let mut push = |id: usize, name: &'static str, res: Check, secs: f64| {
        let (passed, detail) = match res {
            Ok(d) => (true, d),
            Err(d) => (false, d),
        };
        eprintln!(
            "[{}] criterion {id} ({name}) in {secs:.2}s: {detail}",
            if passed { "pass" } else { "FAIL" }
        );
        out.push(CriterionOutcome {
            id,
            name,
            passed,
            detail,
            seconds: secs,
        });
    };
    let timed = |f: &mut dyn FnMut() -> Check| {
        let start = std::time::Instant::now();
        let res = f();
        (res, start.elapsed().as_secs_f64())
    };

    let main_corpus = corpus(seed, 25, 16);
    let deep_fixtures = crate::fixtures::deep_corpus(seed.wrapping_add(1), 10, 33);
    let flow_corpus: Vec<Fixture> = corpus(seed.wrapping_add(2), 5, 10);

    let (r, s) = timed(&mut || check_conjugacy_exactness(&main_corpus, 16));
    push(1, "conjugacy exactness", r, s);
    let (r, s) = timed(&mut || check_integrability_equivalence(&main_corpus, 16));
    push(2, "integrability equivalences", r, s);
    let (r, s) = timed(&mut || check_quadratic_example());
    push(3, "quadratic example", r, s);
    let (r, s) = timed(&mut || check_tau_invariance(&main_corpus, 16, seed));
    push(4, "obstruction-order invariance", r, s);

    let start = std::time::Instant::now();
    let runs = run_iterations(&deep_fixtures, 33, 4);
    let setup = start.elapsed().as_secs_f64();
    match runs {
        Ok(runs) => {
            let (r, s) = timed(&mut || check_order_doubling(&runs, 33));
            push(5, "order doubling", r, s + setup);
            let (r, s) = timed(&mut || check_iteration_agreement(&runs, 33));
            push(6, "iteration/normalization agreement", r, s);
            let (r, s) = timed(&mut || check_schedule_and_decay(&runs));
            push(11, "schedule and decay", r, s);
        }
        Err(e) => {
            push(5, "order doubling", Err(e.clone()), setup);
            push(6, "iteration/normalization agreement", Err("skipped: iteration runs failed".into()), 0.0);
            push(11, "schedule and decay", Err("skipped: iteration runs failed".into()), 0.0);
        }
    }

    let (r, s) = timed(&mut || check_majorant_dominations(&main_corpus, 16));
    push(7, "majorant dominations", r, s);
    let (r, s) = timed(&mut || check_flow_laws(&flow_corpus, 10, seed));
    push(8, "flow laws", r, s);
    let (r, s) = timed(&mut || check_nonlinearity_witnesses(&main_corpus, 16, seed));
    push(9, "nonlinearity witnesses", r, s);
    let (r, s) = timed(&mut || check_secondary_normal_form(seed));
    push(10, "secondary normal form", r, s);

    out.sort_by_key(|o| o.id);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_example_suite_passes() {
        check_quadratic_example().unwrap();
    }

    #[test]
    fn small_corpus_suites_pass() {
        let fixtures = corpus(3, 2, 8);
        check_conjugacy_exactness(&fixtures, 8).unwrap();
        check_integrability_equivalence(&fixtures, 8).unwrap();
        check_tau_invariance(&fixtures, 8, 3).unwrap();
        check_majorant_dominations(&fixtures, 8).unwrap();
    }

    #[test]
    fn par_map_preserves_order() {
        let items: Vec<usize> = (0..100).collect();
        assert_eq!(par_map(&items, |&x| 2 * x), (0..200).step_by(2).collect::<Vec<_>>());
    }
}
