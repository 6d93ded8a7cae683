//! Grammar entropy: generating functions of a classified grammar evaluated by fixed-point
//! iteration, a binary search for their radius of convergence `R`, and the complexity
//! `K0 = -ln R`.
//!
//! For a non-terminal class `i` with productions `C_i → C_l C_r` of multiplicity `n_ip`,
//!
//! ```text
//! V_i(z) = z * Σ_p n_ip V_l(z) V_r(z) / Σ_q n_iq
//! ```
//!
//! and terminal classes are pinned to `V_i(z) = 1`. Iteration starts from `V_i = 1`.

use serde::Serialize;
use thiserror::Error;

use crate::classify::{ClassifiedGrammar, GrammarError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EvalParams {
    /// Iteration cap; reaching it without blow-up counts as convergent.
    pub m_max: usize,
    /// Relative change below which iteration has converged.
    pub epsilon: f64,
    /// Any value above this is divergence.
    pub blowup_bound: f64,
    /// Width at which the radius search stops.
    pub search_tol: f64,
}

impl Default for EvalParams {
    fn default() -> Self {
        Self {
            m_max: 1000,
            epsilon: 1e-12,
            blowup_bound: 1e100,
            search_tol: 1e-6,
        }
    }
}

impl EvalParams {
    pub fn validate(&self) -> Result<(), EntropyError> {
        let ok = self.m_max > 0
            && self.epsilon > 0.0
            && self.epsilon < 1.0
            && self.blowup_bound > 1.0
            && self.blowup_bound.is_finite()
            && self.search_tol > 0.0
            && self.search_tol < 1.0;
        if ok {
            Ok(())
        } else {
            Err(EntropyError::Params(*self))
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EntropyError {
    #[error("invalid evaluation parameters {0:?}")]
    Params(EvalParams),
    #[error("z must be positive and finite, got {0}")]
    InvalidZ(f64),
    #[error("non-finite value in class {class} at iteration {iteration}")]
    NonFinite { class: usize, iteration: usize },
    #[error(transparent)]
    Grammar(#[from] GrammarError),
}

/// Outcome of iterating the generating functions at one `z`.
#[derive(Debug, Clone, PartialEq)]
pub enum Evaluation {
    /// Per-class values (class `i` at index `i - 1`) once the relative change fell below epsilon.
    Converged { values: Vec<f64>, iterations: usize },
    /// Some value exceeded the blow-up bound at this iteration.
    Diverged { iteration: usize },
    /// Neither converged nor blew up within `m_max` iterations.
    Inconclusive { values: Vec<f64> },
}

impl Evaluation {
    /// Converged and inconclusive probes both count as convergent.
    pub fn is_convergent(&self) -> bool {
        !matches!(self, Evaluation::Diverged { .. })
    }

    pub fn values(&self) -> Option<&[f64]> {
        match self {
            Evaluation::Converged { values, .. } | Evaluation::Inconclusive { values } => Some(values),
            Evaluation::Diverged { .. } => None,
        }
    }
}

/// Normalized production weights `n_ip / Σ_q n_iq` with 0-based targets.
struct Weights {
    per_class: Vec<Option<Vec<(f64, usize, usize)>>>,
}

impl Weights {
    fn new(g: &ClassifiedGrammar) -> Self {
        let per_class = g
            .classes
            .iter()
            .map(|c| {
                if c.terminal {
                    return None;
                }
                let total: usize = c.productions.iter().map(|p| p.mult).sum();
                Some(
                    c.productions
                        .iter()
                        // both sides are exact integers, so the quotient is rounded once
                        .map(|p| (p.mult as f64 / total as f64, p.left - 1, p.right - 1))
                        .collect(),
                )
            })
            .collect();
        Self { per_class }
    }

    fn step(&self, z: f64, values: &[f64], out: &mut [f64]) {
        for (i, w) in self.per_class.iter().enumerate() {
            out[i] = match w {
                None => 1.0,
                Some(prods) => {
                    z * prods
                        .iter()
                        .map(|&(w, l, r)| w * values[l] * values[r])
                        .sum::<f64>()
                }
            };
        }
    }
}

/// One simultaneous update of all classes.
pub fn step(g: &ClassifiedGrammar, z: f64, values: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; values.len()];
    Weights::new(g).step(z, values, &mut out);
    out
}

/// Iterates every class from `V = 1` at the given `z` until it converges, blows up, or the
/// iteration cap is reached.
pub fn eval_fixed_point(
    g: &ClassifiedGrammar,
    z: f64,
    params: &EvalParams,
) -> Result<Evaluation, EntropyError> {
    params.validate()?;
    g.validate()?;
    if !(z > 0.0 && z.is_finite()) {
        return Err(EntropyError::InvalidZ(z));
    }
    iterate(&Weights::new(g), z, params)
}

fn iterate(weights: &Weights, z: f64, params: &EvalParams) -> Result<Evaluation, EntropyError> {
    let n = weights.per_class.len();
    let mut cur = vec![1.0; n];
    let mut next = vec![0.0; n];
    for iteration in 1..=params.m_max {
        weights.step(z, &cur, &mut next);
        let mut converged = true;
        for (class, (&new, &old)) in next.iter().zip(&cur).enumerate() {
            if new.is_nan() {
                return Err(EntropyError::NonFinite {
                    class: class + 1,
                    iteration,
                });
            }
            if new > params.blowup_bound {
                return Ok(Evaluation::Diverged { iteration });
            }
            if (new - old).abs() > params.epsilon * new.abs().max(old.abs()) {
                converged = false;
            }
        }
        std::mem::swap(&mut cur, &mut next);
        if converged {
            return Ok(Evaluation::Converged {
                values: cur,
                iterations: iteration,
            });
        }
    }
    Ok(Evaluation::Inconclusive { values: cur })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RadiusSearch {
    pub radius: f64,
    pub converged_everywhere: bool,
    pub probes: usize,
    pub inconclusive_probes: usize,
}

/// Binary search over `(0, 1)` for the boundary between convergent and divergent `z`.
///
/// Returns radius 1 when the probe at `1 - search_tol` already converges. Otherwise the result
/// is the last convergent probe, within `search_tol` below the boundary. A grammar whose root
/// class is terminal has the constant function 1 and is reported as convergent everywhere.
pub fn radius_of_convergence(
    g: &ClassifiedGrammar,
    params: &EvalParams,
) -> Result<RadiusSearch, EntropyError> {
    params.validate()?;
    g.validate()?;
    let weights = Weights::new(g);
    let mut search = RadiusSearch {
        radius: 1.0,
        converged_everywhere: true,
        probes: 0,
        inconclusive_probes: 0,
    };
    if g.root_class().terminal {
        return Ok(search);
    }

    let (radius, converged_everywhere) = search_boundary(params.search_tol, |z| {
        let e = iterate(&weights, z, params)?;
        search.probes += 1;
        if matches!(e, Evaluation::Inconclusive { .. }) {
            search.inconclusive_probes += 1;
        }
        Ok::<_, EntropyError>(e.is_convergent())
    })?;
    search.radius = radius;
    search.converged_everywhere = converged_everywhere;
    Ok(search)
}

/// Bisection on `(0, 1)` for a predicate that holds on an interval anchored at 0.
///
/// Returns `(1, true)` if `convergent(1 - tol)` holds; otherwise the largest probed point where
/// it held (0 if none), with the bracket narrowed below `tol`.
pub fn search_boundary<E>(
    tol: f64,
    mut convergent: impl FnMut(f64) -> Result<bool, E>,
) -> Result<(f64, bool), E> {
    if convergent(1.0 - tol)? {
        return Ok((1.0, true));
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    while hi - lo >= tol {
        let mid = 0.5 * (lo + hi);
        if convergent(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((lo, false))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ComplexityReport {
    pub radius: f64,
    /// `-ln R` in nats; zero when the grammar converges on all of `(0, 1)`.
    pub k0: f64,
    pub converged_everywhere: bool,
    pub probes: usize,
    pub inconclusive_probes: usize,
}

pub fn complexity(g: &ClassifiedGrammar, params: &EvalParams) -> Result<ComplexityReport, EntropyError> {
    let s = radius_of_convergence(g, params)?;
    Ok(ComplexityReport {
        radius: s.radius,
        k0: k0_from_radius(s.radius, s.converged_everywhere),
        converged_everywhere: s.converged_everywhere,
        probes: s.probes,
        inconclusive_probes: s.inconclusive_probes,
    })
}

pub fn k0_from_radius(radius: f64, converged_everywhere: bool) -> f64 {
    if converged_everywhere || radius >= 1.0 {
        0.0
    } else {
        -radius.ln()
    }
}

/// The five-class grammar of the worked complexity example and its closed-form solution.
pub mod worked_example {
    use super::EntropyError;
    use crate::classify::{ClassifiedGrammar, GrammarClass, Production};

    pub fn grammar() -> ClassifiedGrammar {
        let p = |mult, left, right| Production { mult, left, right };
        let class = |id, size, productions: Vec<Production>| GrammarClass {
            id,
            size,
            terminal: productions.is_empty(),
            productions,
        };
        ClassifiedGrammar {
            n: 5,
            root: 1,
            classes: vec![
                class(1, 7, vec![p(3, 1, 1), p(2, 2, 3), p(1, 2, 4), p(1, 4, 2)]),
                class(2, 4, vec![p(4, 4, 5)]),
                class(3, 2, vec![p(2, 5, 4)]),
                class(4, 8, vec![p(8, 5, 5)]),
                class(5, 22, vec![]),
            ],
        }
    }

    /// `1 - (24/49)(z^6 + z^5)`, the discriminant `1 - 4ac` of the root class's quadratic.
    pub fn discriminant(z: f64) -> f64 {
        1.0 - 24.0 / 49.0 * (z.powi(6) + z.powi(5))
    }

    /// `1 - (24/49)(z^5 + z^4)`, the discriminant as printed alongside the worked example.
    /// It disagrees with the quadratic by a factor of `z` in the second term; kept only so its
    /// zero can be reported next to the correct one.
    pub fn printed_discriminant(z: f64) -> f64 {
        1.0 - 24.0 / 49.0 * (z.powi(5) + z.powi(4))
    }

    /// Lower root of `(3z/7) V^2 - V + (2/7)(z^5 + z^4) = 0`, the power-series branch through
    /// the origin. Evaluated as `2c / (1 + sqrt(disc))` to avoid cancellation near `z = 0`.
    pub fn closed_form_root_value(z: f64) -> Result<f64, EntropyError> {
        if !(z > 0.0 && z.is_finite()) {
            return Err(EntropyError::InvalidZ(z));
        }
        let disc = discriminant(z);
        if disc < 0.0 {
            return Err(EntropyError::InvalidZ(z));
        }
        let c = 2.0 / 7.0 * (z.powi(5) + z.powi(4));
        Ok(2.0 * c / (1.0 + disc.sqrt()))
    }

    /// Positive zero of [`discriminant`], found by bisection on `[0, 2]`.
    pub fn discriminant_root() -> f64 {
        positive_root(discriminant)
    }

    pub fn printed_discriminant_root() -> f64 {
        positive_root(printed_discriminant)
    }

    fn positive_root(f: fn(f64) -> f64) -> f64 {
        let (mut lo, mut hi) = (0.0f64, 2.0f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    }
}

#[cfg(test)]
mod tests {
    use super::worked_example::*;
    use super::*;
    use crate::classify::{GrammarClass, Production};

    fn self_squaring() -> ClassifiedGrammar {
        ClassifiedGrammar {
            n: 1,
            root: 1,
            classes: vec![GrammarClass {
                id: 1,
                size: 1,
                terminal: false,
                productions: vec![Production {
                    mult: 1,
                    left: 1,
                    right: 1,
                }],
            }],
        }
    }

    fn values_at(g: &ClassifiedGrammar, z: f64) -> Vec<f64> {
        eval_fixed_point(g, z, &EvalParams::default())
            .unwrap()
            .values()
            .unwrap()
            .to_vec()
    }

    #[test]
    fn first_step_pins_terminal_and_leaf_pair_class() {
        let g = grammar();
        for z in [0.1, 0.5, 0.9] {
            let v = step(&g, z, &[1.0; 5]);
            assert_eq!(v[4], 1.0);
            assert!((v[3] - z).abs() < 1e-15);
        }
    }

    #[test]
    fn leaf_chain_classes_are_z_squared() {
        let g = grammar();
        for z in [0.1, 0.5, 0.9] {
            let v = values_at(&g, z);
            assert!((v[1] - z * z).abs() < 1e-9);
            assert!((v[2] - z * z).abs() < 1e-9);
            assert_eq!(v[4], 1.0);
        }
    }

    #[test]
    fn root_matches_closed_form_at_half() {
        // frozen from the quadratic (3z/7)V^2 - V + (2/7)(z^5 + z^4) = 0 at z = 0.5
        let expected = 0.026_941_249_483_658_728;
        assert!((closed_form_root_value(0.5).unwrap() - expected).abs() < 1e-14);
        assert!((values_at(&grammar(), 0.5)[0] - expected).abs() < 1e-6);
    }

    #[test]
    fn closed_form_limits() {
        assert!(closed_form_root_value(1e-9).unwrap() < 1e-30);
        let r = discriminant_root();
        assert!((r - 1.003_755_676_884_892_5).abs() < 1e-12);
        assert!((printed_discriminant_root() - 1.004_591_991_797_64).abs() < 1e-12);
        assert!((closed_form_root_value(r).unwrap() - 7.0 / (6.0 * r)).abs() < 1e-6);
        assert!(closed_form_root_value(1.1).is_err());
    }

    #[test]
    fn non_recursive_root_converges_everywhere() {
        let g = ClassifiedGrammar {
            n: 2,
            root: 1,
            classes: vec![
                GrammarClass {
                    id: 1,
                    size: 1,
                    terminal: false,
                    productions: vec![Production {
                        mult: 1,
                        left: 2,
                        right: 2,
                    }],
                },
                GrammarClass {
                    id: 2,
                    size: 2,
                    terminal: true,
                    productions: vec![],
                },
            ],
        };
        let s = radius_of_convergence(&g, &EvalParams::default()).unwrap();
        assert!(s.converged_everywhere);
        assert_eq!(s.radius, 1.0);
        assert_eq!(complexity(&g, &EvalParams::default()).unwrap().k0, 0.0);
    }

    #[test]
    fn worked_example_converges_on_unit_interval() {
        let r = complexity(&grammar(), &EvalParams::default()).unwrap();
        assert!(r.converged_everywhere);
        assert_eq!(r.k0, 0.0);
    }

    #[test]
    fn k0_definition() {
        assert!((k0_from_radius((-1.0f64).exp(), false) - 1.0).abs() < 1e-15);
        assert!((k0_from_radius(0.5, false) - std::f64::consts::LN_2).abs() < 1e-15);
        assert_eq!(k0_from_radius(0.3, true), 0.0);
    }

    #[test]
    fn self_squaring_iterates_toward_zero() {
        // v_m = z^(2^m - 1) from v_0 = 1: shrinks for every z < 1
        for z in [0.5, 0.9, 0.999] {
            let e = eval_fixed_point(&self_squaring(), z, &EvalParams::default()).unwrap();
            assert!(e.is_convergent(), "{z}: {e:?}");
        }
        assert!(matches!(
            eval_fixed_point(&self_squaring(), 1.5, &EvalParams::default()).unwrap(),
            Evaluation::Diverged { .. }
        ));
    }

    #[test]
    fn boundary_search_brackets_threshold() {
        for threshold in [0.3, 0.5, 0.987_654] {
            let (r, everywhere) = search_boundary::<()>(1e-6, |z| Ok(z <= threshold)).unwrap();
            assert!(!everywhere);
            assert!(r <= threshold && threshold - r < 1e-6, "{threshold} -> {r}");
        }
        assert_eq!(search_boundary::<()>(1e-6, |_| Ok(true)).unwrap(), (1.0, true));
        assert_eq!(search_boundary::<()>(0.25, |_| Ok(false)).unwrap(), (0.0, false));
    }

    #[test]
    fn self_squaring_search_stops_after_first_probe() {
        let s = radius_of_convergence(&self_squaring(), &EvalParams::default()).unwrap();
        assert_eq!((s.probes, s.radius, s.converged_everywhere), (1, 1.0, true));
    }

    #[test]
    fn rejects_bad_inputs() {
        let g = grammar();
        assert!(matches!(
            eval_fixed_point(&g, 0.0, &EvalParams::default()),
            Err(EntropyError::InvalidZ(_))
        ));
        let bad = EvalParams {
            m_max: 0,
            ..EvalParams::default()
        };
        assert!(matches!(
            eval_fixed_point(&g, 0.5, &bad),
            Err(EntropyError::Params(_))
        ));
        let mut broken = grammar();
        broken.classes[0].productions[0].left = 9;
        assert!(matches!(
            eval_fixed_point(&broken, 0.5, &EvalParams::default()),
            Err(EntropyError::Grammar(_))
        ));
    }

    #[test]
    fn inconclusive_when_iteration_cap_is_tiny() {
        let params = EvalParams {
            m_max: 2,
            ..EvalParams::default()
        };
        let e = eval_fixed_point(&grammar(), 0.9, &params).unwrap();
        assert!(matches!(e, Evaluation::Inconclusive { .. }));
        assert!(e.is_convergent());
        let s = radius_of_convergence(&grammar(), &params).unwrap();
        assert_eq!(s.inconclusive_probes, 1);
    }
}
