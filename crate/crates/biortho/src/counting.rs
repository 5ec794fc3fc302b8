//! The counting function `N_n(rho)` and its piecewise upper bounds.

use std::fmt;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::spectra::{GapProfile, Spectrum};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Branch {
    Global,
    EqCase,
    AboveCase,
    BelowCaseA,
    BelowCaseB,
    NewEq,
    NewAbove,
    NewBelow,
    NewBelow2,
}

impl Branch {
    pub fn name(self) -> &'static str {
        match self {
            Branch::Global => "global",
            Branch::EqCase => "eq_case",
            Branch::AboveCase => "above_case",
            Branch::BelowCaseA => "below_case_a",
            Branch::BelowCaseB => "below_case_b",
            Branch::NewEq => "new_eq",
            Branch::NewAbove => "new_above",
            Branch::NewBelow => "new_below",
            Branch::NewBelow2 => "new_below2",
        }
    }
}

impl fmt::Display for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CountingBound {
    pub branch: Branch,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Violation {
    pub n: usize,
    pub rho: f64,
    pub exact: usize,
    pub branch: Branch,
    pub bound: f64,
}

fn check_window(s: &Spectrum, n: usize, rho: f64) -> Result<()> {
    let len = s.truncation_length();
    if n == 0 || n > len {
        return Err(Error::InvalidParameter(format!("index {n} outside 1..={len}")));
    }
    if !(rho > 0.0) {
        return Err(Error::InvalidParameter(format!("rho must be positive, got {rho}")));
    }
    let hi = s.lambda(n) + rho;
    let top = s.lambda(len);
    if hi > top {
        return Err(Error::WindowExceedsTruncation { n, lo: s.lambda(n) - rho, hi, lambda_n_max: top });
    }
    Ok(())
}

/// `#{k != n : |lambda_n - lambda_k| <= rho}`.
pub fn count_exact(s: &Spectrum, n: usize, rho: f64) -> Result<usize> {
    check_window(s, n, rho)?;
    let ln = s.lambda(n);
    Ok(s.values().iter().enumerate().filter(|&(k, &lk)| k + 1 != n && (ln - lk).abs() <= rho).count())
}

/// Every branch whose hypotheses cover `(n, rho)`, with its value.
///
/// Sub-ranges are closed, so at a breakpoint both neighbouring formulas appear.
pub fn applicable_branches(s: &Spectrum, p: &GapProfile, n: usize, rho: f64) -> Result<Vec<CountingBound>> {
    check_window(s, n, rho)?;
    let mut out = Vec::with_capacity(4);
    let sq = rho.sqrt();
    let g = p.gamma_min;
    let gs = p.gamma_min_star;
    let ms = p.m_star;
    let ns = p.n_star_upper;
    let mut push = |branch, value: f64| out.push(CountingBound { branch, value });

    push(Branch::Global, 2.0 * sq / g);

    if ns > s.truncation_length() {
        return Ok(out);
    }
    let ln = s.lambda(n);
    let lns = s.lambda(ns);
    let nsf = ns as f64;
    let nf = n as f64;

    if n == ns {
        if rho <= lns {
            push(Branch::EqCase, sq / g + sq / gs);
            push(Branch::NewEq, sq / g + sq / gs);
        }
        if rho >= lns {
            push(Branch::EqCase, nsf - 1.0 + sq / gs);
            push(Branch::NewEq, ms + 2.0 * sq / gs);
        }
    } else if n > ns {
        let d = ln - lns;
        if rho <= d {
            push(Branch::AboveCase, 2.0 * sq / gs);
            push(Branch::NewAbove, 2.0 * sq / gs);
        }
        if rho >= d && rho <= ln {
            push(Branch::AboveCase, sq / g + sq / gs);
            push(Branch::NewAbove, sq / g + sq / gs);
        }
        if rho >= ln {
            push(Branch::AboveCase, nf - 1.0 + sq / gs);
            push(Branch::NewAbove, ms + 2.0 * sq / gs);
        }
    } else {
        let d = lns - ln;
        if ln <= d {
            if rho <= ln {
                push(Branch::BelowCaseA, 2.0 * sq / g);
            }
            if rho >= ln && rho <= d {
                push(Branch::BelowCaseA, nf - 1.0 + sq / g);
            }
            if rho >= d {
                push(Branch::BelowCaseA, nsf - 1.0 + sq / gs);
            }
        }
        if ln >= d {
            if rho <= d {
                push(Branch::BelowCaseB, 2.0 * sq / g);
            }
            if rho >= d && rho <= ln {
                push(Branch::BelowCaseB, nsf - nf + sq / g + sq / gs);
            }
            if rho >= ln {
                push(Branch::BelowCaseB, nsf - 1.0 + sq / gs);
            }
        }
        if rho <= ln.max(d) {
            push(Branch::NewBelow, 2.0 * sq / g);
        } else {
            push(Branch::NewBelow, ms + (1.0 + 2f64.sqrt()) * sq / gs);
        }
        if rho <= lns {
            push(Branch::NewBelow2, 2.0 * sq / g);
        }
        if rho >= lns {
            push(Branch::NewBelow2, ms + 2.0 * sq / gs);
        }
    }
    Ok(out)
}

/// Smallest applicable bound; ties keep the first branch in evaluation order.
pub fn count_bound(s: &Spectrum, p: &GapProfile, n: usize, rho: f64) -> Result<CountingBound> {
    let all = applicable_branches(s, p, n, rho)?;
    Ok(all.into_iter().fold(None::<CountingBound>, |best, b| match best {
        Some(cur) if cur.value <= b.value => Some(cur),
        _ => Some(b),
    })
    .expect("global branch always applies"))
}

const SLACK: f64 = 1e-12;

/// All `(n, rho, branch)` where the exact count exceeds an applicable bound.
///
/// Pairs whose window leaves the truncation are skipped.
pub fn check_counting_lemmas(s: &Spectrum, p: &GapProfile, rho_grid: &[f64]) -> Vec<Violation> {
    let len = s.truncation_length();
    let per_n: Vec<Vec<Violation>> = (1..=len)
        .into_par_iter()
        .map(|n| {
            let mut out = Vec::new();
            for &rho in rho_grid {
                let Ok(exact) = count_exact(s, n, rho) else { continue };
                let Ok(branches) = applicable_branches(s, p, n, rho) else { continue };
                for b in branches {
                    if exact as f64 > b.value * (1.0 + SLACK) + SLACK {
                        out.push(Violation { n, rho, exact, branch: b.branch, bound: b.value });
                    }
                }
            }
            out
        })
        .collect();
    per_n.into_iter().flatten().collect()
}

/// Largest ratio `exact / bound` for the `NewBelow` branch over the grid,
/// evaluated with the constant `2` in place of `1 + sqrt 2`. Values above one
/// are counterexamples to the sharper constant.
pub fn sharper_below_constant_ratio(s: &Spectrum, p: &GapProfile, rho_grid: &[f64]) -> f64 {
    let ns = p.n_star_upper;
    let mut worst: f64 = 0.0;
    for n in 1..ns.min(s.truncation_length() + 1) {
        let ln = s.lambda(n);
        let d = s.lambda(ns) - ln;
        for &rho in rho_grid {
            if rho <= ln.max(d) {
                continue;
            }
            let Ok(exact) = count_exact(s, n, rho) else { continue };
            let bound = p.m_star + 2.0 * rho.sqrt() / p.gamma_min_star;
            worst = worst.max(exact as f64 / bound);
        }
    }
    worst
}
